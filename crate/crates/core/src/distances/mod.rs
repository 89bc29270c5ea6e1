//! Pairwise distances: exact diagram Wasserstein, entropic histogram
//! transport, Hamming on binary codes and Euclidean on dense vectors, plus
//! all-pairs matrices.

pub mod assignment;
mod sinkhorn;
mod wasserstein;

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

pub use sinkhorn::{sinkhorn_hw, GroundMetric, SinkhornConfig, SinkhornResult};
pub use wasserstein::wasserstein;

pub use crate::code::hamming;
use crate::code::{BinaryCode, CodeBook};
use crate::diagrams::PersistenceDiagram;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::vectorize::{DenseVector, HistogramVector};

/// Euclidean distance between equal-length vectors.
pub fn l2(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::Dimension(format!(
            "vector lengths differ: {} vs {}",
            a.values.len(),
            b.values.len()
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// A symmetric `n × n` matrix with zero diagonal, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    pub metric_tag: String,
}

impl DistanceMatrix {
    pub fn zeros(n: usize, metric_tag: impl Into<String>) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
            metric_tag: metric_tag.into(),
        }
    }

    /// Builds from a full row-major matrix, checking the invariants.
    pub fn from_full(n: usize, values: Vec<f64>, metric_tag: impl Into<String>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Parameter(format!("diagonal entry ({i},{i}) is not zero")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0) || !v.is_finite() || v != values[j * n + i] {
                    return Err(Error::Parameter(format!(
                        "entry ({i},{j}) = {v} breaks symmetry or non-negativity"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            values,
            metric_tag: metric_tag.into(),
        })
    }

    /// Builds from the strict upper triangle in row-major order.
    pub fn from_condensed(n: usize, upper: &[f64], metric_tag: impl Into<String>) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Dimension(format!(
                "condensed length {} does not match n = {n}",
                upper.len()
            )));
        }
        let mut m = Self::zeros(n, metric_tag);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let v = upper[k];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Parameter(format!("entry ({i},{j}) = {v} is not a distance")));
                }
                m.values[i * n + j] = v;
                m.values[j * n + i] = v;
                k += 1;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn condensed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
            metric_tag: self.metric_tag.clone(),
        }
    }

    /// Principal submatrix on `indices`.
    pub fn select(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                values.push(self.get(i, j));
            }
        }
        Self {
            n: k,
            values,
            metric_tag: self.metric_tag.clone(),
        }
    }

    /// First line `n`, then one comma-separated row per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, metric_tag: &str) -> Result<Self> {
        let src = std::path::PathBuf::from("<matrix>");
        let mut lines = r.lines().enumerate();
        let fmt_err = |line: usize, message: String| Error::Format {
            path: src.clone(),
            line,
            message,
        };
        let n = match lines.next() {
            Some((_, Ok(l))) => l
                .trim()
                .parse::<usize>()
                .map_err(|e| fmt_err(1, format!("bad size header: {e}")))?,
            Some((_, Err(e))) => return Err(Error::io(&src, e)),
            None => return Err(fmt_err(1, "empty matrix file".into())),
        };
        let mut values = Vec::with_capacity(n * n);
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(&src, e))?;
            if line.trim().is_empty() {
                continue;
            }
            for field in line.split(',') {
                values.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| fmt_err(idx + 1, format!("`{field}`: {e}")))?,
                );
            }
        }
        Self::from_full(n, values, metric_tag)
    }

    /// `n` as little-endian u64, then the strict upper triangle as
    /// little-endian f64 in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in self.condensed() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8], metric_tag: &str) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Dimension("binary matrix shorter than its header".into()));
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let body = &bytes[8..];
        if !body.len().is_multiple_of(8) {
            return Err(Error::Dimension("binary matrix body is not a whole number of f64".into()));
        }
        let upper: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_condensed(n, &upper, metric_tag)
    }
}

/// A distance between two items of one kind.
pub trait PairMetric: Sync {
    type Item: Sync;
    fn tag(&self) -> &str;
    fn distance(&self, a: &Self::Item, b: &Self::Item) -> Result<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct Wasserstein {
    pub q: f64,
}

impl Default for Wasserstein {
    fn default() -> Self {
        Self { q: 1.0 }
    }
}

impl PairMetric for Wasserstein {
    type Item = PersistenceDiagram;
    fn tag(&self) -> &str {
        "w1"
    }
    fn distance(&self, a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<f64> {
        wasserstein(a, b, self.q)
    }
}

/// Sinkhorn transport between histograms. Pairs that hit the iteration
/// cap still report their cost; they are counted in [`Self::unconverged`].
#[derive(Debug, Default)]
pub struct HistogramTransport {
    pub config: SinkhornConfig,
    unconverged: AtomicUsize,
}

impl HistogramTransport {
    pub fn new(config: SinkhornConfig) -> Self {
        Self {
            config,
            unconverged: AtomicUsize::new(0),
        }
    }

    pub fn unconverged(&self) -> usize {
        self.unconverged.load(Ordering::Relaxed)
    }
}

impl PairMetric for HistogramTransport {
    type Item = HistogramVector;
    fn tag(&self) -> &str {
        "hw"
    }
    fn distance(&self, a: &HistogramVector, b: &HistogramVector) -> Result<f64> {
        let r = sinkhorn_hw(a, b, &self.config)?;
        if !r.converged {
            self.unconverged.fetch_add(1, Ordering::Relaxed);
            log::debug!(
                "sinkhorn stopped after {} iterations (marginal error {:e})",
                r.iterations,
                r.marginal_error
            );
        }
        Ok(r.cost)
    }
}

/// HW matrix, warning once if any pair hit the iteration cap.
pub fn hw_matrix(histograms: &[HistogramVector], config: SinkhornConfig, exec: Execution) -> Result<DistanceMatrix> {
    let metric = HistogramTransport::new(config);
    let m = distance_matrix(histograms, &metric, exec)?;
    let missed = metric.unconverged();
    if missed > 0 {
        log::warn!(
            "sinkhorn hit the iteration cap ({}) on {missed} of {} pairs",
            config.max_iterations,
            histograms.len() * histograms.len().saturating_sub(1) / 2
        );
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hamming;

impl PairMetric for Hamming {
    type Item = BinaryCode;
    fn tag(&self) -> &str {
        "hamming"
    }
    fn distance(&self, a: &BinaryCode, b: &BinaryCode) -> Result<f64> {
        hamming(a, b).map(f64::from)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl PairMetric for Euclidean {
    type Item = DenseVector;
    fn tag(&self) -> &str {
        "l2"
    }
    fn distance(&self, a: &DenseVector, b: &DenseVector) -> Result<f64> {
        l2(a, b)
    }
}

/// All-pairs matrix. Rows of the strict upper triangle are evaluated in
/// parallel (per `exec`) and assembled in index order, so the result does
/// not depend on the execution mode or thread count.
pub fn distance_matrix<M: PairMetric>(items: &[M::Item], metric: &M, exec: Execution) -> Result<DistanceMatrix> {
    let n = items.len();
    let rows: Vec<Result<Vec<f64>>> = par::map_indexed(n, exec, |i| {
        (i + 1..n)
            .map(|j| metric.distance(&items[i], &items[j]).map_err(|e| e.at_pair(i, j)))
            .collect()
    });
    let mut m = DistanceMatrix::zeros(n, metric.tag());
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row?.into_iter().enumerate() {
            let j = i + 1 + offset;
            m.values[i * n + j] = v;
            m.values[j * n + i] = v;
        }
    }
    Ok(m)
}

/// Hamming matrix via packed popcounts; same result as
/// `distance_matrix(codes, &Hamming, exec)`.
pub fn hamming_matrix(codes: &[BinaryCode], exec: Execution) -> Result<DistanceMatrix> {
    let book = CodeBook::new(codes)?;
    let upper: Vec<f64> = book.condensed(exec).into_iter().map(f64::from).collect();
    DistanceMatrix::from_condensed(codes.len(), &upper, "hamming")
}
