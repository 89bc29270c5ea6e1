//! Target similarity matrices for hash training, built from histogram
//! distances.

use std::fmt;
use std::str::FromStr;

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Real,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    pub kind: SimilarityKind,
}

impl SimilarityMatrix {
    pub fn from_full(n: usize, values: Vec<f64>, kind: SimilarityKind) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, values.len())));
        }
        Ok(Self { n, values, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Submatrix for a minibatch, row-major `k × k`.
    pub fn slice(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * indices.len());
        for &i in indices {
            for &j in indices {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `1 - d / max(d)`; all ones when every distance is zero.
pub fn real_similarity(dist: &DistanceMatrix) -> Result<SimilarityMatrix> {
    let n = dist.n();
    if let Some(bad) = dist.values().iter().find(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("non-finite distance {bad}")));
    }
    let max = dist.max();
    let values = if max == 0.0 {
        vec![1.0; n * n]
    } else {
        dist.values().iter().map(|d| 1.0 - d / max).collect()
    };
    SimilarityMatrix::from_full(n, values, SimilarityKind::Real)
}

// Relative slack so that equal distances are never "strictly greater" than
// their own mean because of rounding in the sum.
const MEAN_SLACK: f64 = 1e-12;

/// Two passes of per-row mean rejection: entries above the row mean are
/// rejected, then survivors above the survivors' mean are rejected.
fn two_pass_row(row: &[f64], i: usize) -> Vec<bool> {
    let mut accepted: Vec<bool> = (0..row.len()).map(|j| j != i).collect();
    for _ in 0..2 {
        let (sum, count) = row
            .iter()
            .zip(&accepted)
            .filter(|(_, &a)| a)
            .fold((0.0, 0usize), |(s, c), (d, _)| (s + d, c + 1));
        if count == 0 {
            break;
        }
        let mean = sum / count as f64;
        let cutoff = mean + MEAN_SLACK * mean.abs();
        for (a, d) in accepted.iter_mut().zip(row) {
            if *a && *d > cutoff {
                *a = false;
            }
        }
    }
    accepted[i] = true;
    accepted
}

/// `k` nearest others by distance, ties by index.
fn nearest_row(row: &[f64], i: usize, k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut accepted = vec![false; row.len()];
    for &j in order.iter().take(k) {
        accepted[j] = true;
    }
    accepted[i] = true;
    accepted
}

/// `+1` where rows `i` and `j` accepted each other, `-1` otherwise.
fn mutual(accept: &[Vec<bool>]) -> SimilarityMatrix {
    let n = accept.len();
    let mut values = vec![-1.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || (accept[i][j] && accept[j][i]) {
                values[i * n + j] = 1.0;
            }
        }
    }
    SimilarityMatrix {
        n,
        values,
        kind: SimilarityKind::Binary,
    }
}

/// Binary `±1` similarity from two-pass per-row mean rejection, symmetrized
/// by mutual acceptance.
pub fn binary_similarity(dist: &DistanceMatrix) -> Result<SimilarityMatrix> {
    binary_similarity_with(dist, Execution::Parallel)
}

pub fn binary_similarity_with(dist: &DistanceMatrix, exec: Execution) -> Result<SimilarityMatrix> {
    if dist.n() < 2 {
        return Err(Error::Parameter("binary similarity needs at least two items".into()));
    }
    let accept = par::map_indexed(dist.n(), exec, |i| two_pass_row(dist.row(i), i));
    Ok(mutual(&accept))
}

/// The similarity constructions compared by the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityStrategy {
    /// `1 - d / max d`.
    Real,
    /// Each row accepts its `round(fraction · (n-1))` nearest neighbours.
    Nearest { fraction: f64 },
    /// Accept pairs at or below the given quantile of all pair distances.
    GlobalQuantile { quantile: f64 },
    /// Two-pass per-row mean rejection (the default).
    TwoPassMean,
}

impl SimilarityStrategy {
    /// S-1 … S-5 in the order used by the harness.
    pub const S1: Self = Self::Nearest { fraction: 0.25 };
    pub const S2: Self = Self::Nearest { fraction: 0.15 };
    pub const S3: Self = Self::Nearest { fraction: 0.35 };
    pub const S4: Self = Self::GlobalQuantile { quantile: 0.25 };
    pub const S5: Self = Self::TwoPassMean;

    pub fn all() -> [(&'static str, Self); 6] {
        [
            ("real", Self::Real),
            ("s1", Self::S1),
            ("s2", Self::S2),
            ("s3", Self::S3),
            ("s4", Self::S4),
            ("s5", Self::S5),
        ]
    }

    pub fn build(&self, dist: &DistanceMatrix) -> Result<SimilarityMatrix> {
        let n = dist.n();
        match *self {
            Self::Real => real_similarity(dist),
            Self::TwoPassMean => binary_similarity(dist),
            Self::Nearest { fraction } => {
                if n < 2 {
                    return Err(Error::Parameter("nearest-neighbour similarity needs two items".into()));
                }
                let k = ((fraction * (n - 1) as f64).round() as usize).clamp(1, n - 1);
                let accept = par::map_indexed(n, Execution::Parallel, |i| nearest_row(dist.row(i), i, k));
                Ok(mutual(&accept))
            }
            Self::GlobalQuantile { quantile } => {
                if n < 2 {
                    return Err(Error::Parameter("quantile similarity needs two items".into()));
                }
                let mut upper = dist.condensed();
                upper.sort_by(f64::total_cmp);
                let rank = ((quantile * upper.len() as f64).ceil() as usize).clamp(1, upper.len());
                let threshold = upper[rank - 1];
                let values = dist
                    .values()
                    .iter()
                    .map(|&d| if d <= threshold { 1.0 } else { -1.0 })
                    .collect();
                SimilarityMatrix::from_full(n, values, SimilarityKind::Binary)
            }
        }
    }
}

impl fmt::Display for SimilarityStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = Self::all()
            .iter()
            .find(|(_, s)| s == self)
            .map(|(n, _)| *n);
        match name {
            Some(n) => f.write_str(n),
            None => write!(f, "{self:?}"),
        }
    }
}

impl FromStr for SimilarityStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Self::TwoPassMean),
            other => Self::all()
                .iter()
                .find(|(n, _)| *n == other)
                .map(|(_, s)| *s)
                .ok_or_else(|| Error::Parameter(format!("unknown similarity strategy `{s}`"))),
        }
    }
}
