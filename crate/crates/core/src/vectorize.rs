//! Fixed-size vectorizations of normalized diagrams: reflected 2D
//! histograms, persistence images and Betti curves.

use std::f64::consts::PI;

use crate::diagrams::PersistenceDiagram;
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 50;
pub const DEFAULT_BANDWIDTH: f64 = 0.02;

/// Counts on a `resolution × resolution` grid over `[0,1]²`, with every
/// point also counted at its reflection below the diagonal.
///
/// Cell `(i, j)` is stored at `grid[i * resolution + j]`, where `i` is the
/// birth bin and `j` the death bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramVector {
    pub resolution: usize,
    pub grid: Vec<u32>,
    pub total_count: u32,
    pub source_size: usize,
}

impl HistogramVector {
    pub fn zeros(resolution: usize) -> Self {
        Self {
            resolution,
            grid: vec![0; resolution * resolution],
            total_count: 0,
            source_size: 0,
        }
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> u32 {
        self.grid[i * self.resolution + j]
    }

    pub fn grid_sum(&self) -> u64 {
        self.grid.iter().map(|&c| c as u64).sum()
    }

    pub fn max_count(&self) -> u32 {
        self.grid.iter().copied().max().unwrap_or(0)
    }

    /// Row-major CSV of the grid, followed by one line with the total count.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.grid.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out.push_str(&format!("{}\n", self.total_count));
        out
    }
}

/// A dense real vector: a persistence image (`resolution²` values) or a
/// Betti curve (`resolution` values).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    pub values: Vec<f64>,
    pub resolution: usize,
}

impl DenseVector {
    pub fn to_csv(&self) -> String {
        let row_len = if self.values.len() == self.resolution * self.resolution {
            self.resolution
        } else {
            self.values.len().max(1)
        };
        let mut out = String::new();
        for row in self.values.chunks(row_len) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[inline]
fn bin(x: f64, resolution: usize) -> usize {
    ((x * resolution as f64).floor() as usize).min(resolution - 1)
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfRange { value: x })
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution == 0 {
        Err(Error::Parameter("resolution must be positive".into()))
    } else {
        Ok(())
    }
}

/// Bins a normalized diagram. A point whose bins coincide (`i == j`) adds 2
/// to that single cell.
pub fn histogram(diagram: &PersistenceDiagram, resolution: usize) -> Result<HistogramVector> {
    check_resolution(resolution)?;
    let mut hist = HistogramVector::zeros(resolution);
    for p in &diagram.points {
        check_unit(p.birth)?;
        check_unit(p.death)?;
        let i = bin(p.birth, resolution);
        let j = bin(p.death, resolution);
        hist.grid[i * resolution + j] += 1;
        hist.grid[j * resolution + i] += 1;
    }
    hist.total_count = diagram.len() as u32;
    hist.source_size = diagram.len();
    Ok(hist)
}

/// Weighting applied to each point of a persistence image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PersistenceWeight {
    /// `persistence / max persistence in the diagram`.
    #[default]
    Linear,
    /// `1 / persistence`.
    Reciprocal,
}

/// Sum of isotropic Gaussians (std-dev `bandwidth`) centred on the
/// rotated points `(birth, death - birth)`, sampled at pixel centres.
///
/// Pixel `(i, j)` (birth column `i`, persistence row `j`) is stored at
/// `values[i * resolution + j]`.
pub fn persistence_image(
    diagram: &PersistenceDiagram,
    resolution: usize,
    bandwidth: f64,
    weight: PersistenceWeight,
) -> Result<DenseVector> {
    check_resolution(resolution)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let mut values = vec![0.0; resolution * resolution];
    if diagram.is_empty() {
        return Ok(DenseVector { values, resolution });
    }
    let max_pers = diagram
        .points
        .iter()
        .map(|p| p.persistence())
        .fold(0.0_f64, f64::max);
    let norm = 1.0 / (2.0 * PI * bandwidth * bandwidth);
    let inv_two_var = 1.0 / (2.0 * bandwidth * bandwidth);
    let centers: Vec<f64> = (0..resolution)
        .map(|k| (k as f64 + 0.5) / resolution as f64)
        .collect();
    let mut gx = vec![0.0; resolution];
    let mut gy = vec![0.0; resolution];
    for p in &diagram.points {
        let pers = p.persistence();
        let w = match weight {
            PersistenceWeight::Linear => pers / max_pers,
            PersistenceWeight::Reciprocal => 1.0 / pers,
        };
        // The Gaussian is separable, so precompute one factor per axis.
        for (k, &c) in centers.iter().enumerate() {
            gx[k] = (-(c - p.birth).powi(2) * inv_two_var).exp();
            gy[k] = (-(c - pers).powi(2) * inv_two_var).exp();
        }
        for (i, &fx) in gx.iter().enumerate() {
            let scale = w * norm * fx;
            let row = &mut values[i * resolution..(i + 1) * resolution];
            for (v, &fy) in row.iter_mut().zip(&gy) {
                *v += scale * fy;
            }
        }
    }
    Ok(DenseVector { values, resolution })
}

/// Number of points alive at `t_k = (k + 0.5) / resolution`, i.e. with
/// `birth <= t_k < death`.
pub fn betti_curve(diagram: &PersistenceDiagram, resolution: usize) -> Result<DenseVector> {
    check_resolution(resolution)?;
    let values = (0..resolution)
        .map(|k| {
            let t = (k as f64 + 0.5) / resolution as f64;
            diagram
                .points
                .iter()
                .filter(|p| p.birth <= t && t < p.death)
                .count() as f64
        })
        .collect();
    Ok(DenseVector { values, resolution })
}
