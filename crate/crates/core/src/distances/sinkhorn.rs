//! Entropic optimal transport between reflected histograms.
//!
//! Scaling iterations run on a stabilized kernel: whenever the scaling
//! vectors leave a safe range they are absorbed into log-domain dual
//! potentials and the kernel is rebuilt, so small `epsilon` never
//! underflows.

use crate::error::{Error, Result};
use crate::vectorize::HistogramVector;

/// Ground cost between cell centres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMetric {
    #[default]
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the L1 violation of both marginals is below this.
    pub tolerance: f64,
    pub ground: GroundMetric,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.005,
            max_iterations: 2000,
            tolerance: 1e-6,
            ground: GroundMetric::L1,
        }
    }
}

impl SinkhornConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    /// `0.1 / mean point count`, the usual regularization for a dataset.
    pub fn dataset_epsilon(mean_points: f64) -> f64 {
        0.1 / mean_points.max(1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornResult {
    /// `<T, C>` for the final plan; the entropy term is not included.
    pub cost: f64,
    pub iterations: usize,
    /// Final L1 marginal violation (rows + columns).
    pub marginal_error: f64,
    pub converged: bool,
}

struct Support {
    xy: Vec<(f64, f64)>,
    mass: Vec<f64>,
}

fn support(h: &HistogramVector) -> Result<Support> {
    let r = h.resolution;
    let total = h.grid_sum();
    if total == 0 {
        return Err(Error::ZeroMass);
    }
    let mut xy = Vec::new();
    let mut mass = Vec::new();
    for (idx, &c) in h.grid.iter().enumerate() {
        if c > 0 {
            let (i, j) = (idx / r, idx % r);
            xy.push(((i as f64 + 0.5) / r as f64, (j as f64 + 0.5) / r as f64));
            mass.push(c as f64 / total as f64);
        }
    }
    Ok(Support { xy, mass })
}

const SCALE_LIMIT: f64 = 1e100;
const CHECK_EVERY: usize = 10;

/// Entropic transport cost between two histograms of equal resolution,
/// each normalized to unit mass. The total-count cell is not transported.
pub fn sinkhorn_hw(
    v1: &HistogramVector,
    v2: &HistogramVector,
    cfg: &SinkhornConfig,
) -> Result<SinkhornResult> {
    cfg.validate()?;
    if v1.resolution != v2.resolution {
        return Err(Error::Dimension(format!(
            "histogram resolutions differ: {} vs {}",
            v1.resolution, v2.resolution
        )));
    }
    let (s1, s2) = (support(v1)?, support(v2)?);
    let cost: Vec<f64> = s1
        .xy
        .iter()
        .flat_map(|&(x1, y1)| {
            s2.xy.iter().map(move |&(x2, y2)| match cfg.ground {
                GroundMetric::L1 => (x1 - x2).abs() + (y1 - y2).abs(),
                GroundMetric::L2 => ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt(),
            })
        })
        .collect();
    Ok(solve(&s1.mass, &s2.mass, &cost, cfg))
}

/// Sinkhorn on explicit marginals `a` (length n), `b` (length m) and a
/// row-major `n × m` cost matrix.
pub fn solve(a: &[f64], b: &[f64], cost: &[f64], cfg: &SinkhornConfig) -> SinkhornResult {
    let (n, m) = (a.len(), b.len());
    let eps = cfg.epsilon;
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    log_update(a, b, cost, eps, &mut f, &mut g);

    let mut kernel = vec![0.0; n * m];
    rebuild_kernel(&f, &g, cost, eps, &mut kernel, m);
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let mut kv = vec![0.0; n];
    let mut ktu = vec![0.0; m];

    let mut err = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        mat_vec(&kernel, &v, &mut kv, m);
        for i in 0..n {
            u[i] = a[i] / kv[i];
        }
        mat_t_vec(&kernel, &u, &mut ktu, m);
        for j in 0..m {
            v[j] = b[j] / ktu[j];
        }

        let unstable = u.iter().chain(&v).any(|&s| !(s > 1.0 / SCALE_LIMIT && s < SCALE_LIMIT));
        if unstable {
            if u.iter().chain(&v).all(|s| s.is_finite() && *s > 0.0) {
                f.iter_mut().zip(&u).for_each(|(fi, ui)| *fi += eps * ui.ln());
                g.iter_mut().zip(&v).for_each(|(gj, vj)| *gj += eps * vj.ln());
            } else {
                log_update(a, b, cost, eps, &mut f, &mut g);
            }
            u.iter_mut().for_each(|s| *s = 1.0);
            v.iter_mut().for_each(|s| *s = 1.0);
            rebuild_kernel(&f, &g, cost, eps, &mut kernel, m);
        }

        if iterations % CHECK_EVERY == 0 || iterations == cfg.max_iterations {
            err = marginal_error(&kernel, &u, &v, a, b, m);
            if err < cfg.tolerance {
                break;
            }
        }
    }
    if !err.is_finite() || err >= cfg.tolerance {
        err = marginal_error(&kernel, &u, &v, a, b, m);
    }

    let mut total = 0.0;
    for i in 0..n {
        let row = &kernel[i * m..(i + 1) * m];
        let crow = &cost[i * m..(i + 1) * m];
        let mut acc = 0.0;
        for j in 0..m {
            acc += row[j] * v[j] * crow[j];
        }
        total += u[i] * acc;
    }
    let converged = err < cfg.tolerance;
    if !converged {
        log::debug!("sinkhorn stopped after {iterations} iterations with marginal error {err:e}");
    }
    SinkhornResult {
        cost: total,
        iterations,
        marginal_error: err,
        converged,
    }
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + it.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// One exact log-domain half step for each potential.
fn log_update(a: &[f64], b: &[f64], cost: &[f64], eps: f64, f: &mut [f64], g: &mut [f64]) {
    let m = b.len();
    for i in 0..a.len() {
        let row = &cost[i * m..(i + 1) * m];
        let lse = log_sum_exp(row.iter().zip(g.iter()).map(|(c, gj)| (gj - c) / eps));
        f[i] = eps * a[i].ln() - eps * lse;
    }
    for j in 0..m {
        let lse = log_sum_exp((0..a.len()).map(|i| (f[i] - cost[i * m + j]) / eps));
        g[j] = eps * b[j].ln() - eps * lse;
    }
}

fn rebuild_kernel(f: &[f64], g: &[f64], cost: &[f64], eps: f64, kernel: &mut [f64], m: usize) {
    for (i, fi) in f.iter().enumerate() {
        let row = &mut kernel[i * m..(i + 1) * m];
        let crow = &cost[i * m..(i + 1) * m];
        for j in 0..m {
            row[j] = ((fi + g[j] - crow[j]) / eps).exp();
        }
    }
}

#[inline]
fn mat_vec(k: &[f64], v: &[f64], out: &mut [f64], m: usize) {
    for (i, o) in out.iter_mut().enumerate() {
        let row = &k[i * m..(i + 1) * m];
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

#[inline]
fn mat_t_vec(k: &[f64], u: &[f64], out: &mut [f64], m: usize) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, ui) in u.iter().enumerate() {
        let row = &k[i * m..(i + 1) * m];
        for (o, kij) in out.iter_mut().zip(row) {
            *o += kij * ui;
        }
    }
}

fn marginal_error(k: &[f64], u: &[f64], v: &[f64], a: &[f64], b: &[f64], m: usize) -> f64 {
    let mut col = vec![0.0; m];
    let mut err = 0.0;
    for (i, ui) in u.iter().enumerate() {
        let row = &k[i * m..(i + 1) * m];
        let mut rs = 0.0;
        for j in 0..m {
            let t = ui * row[j] * v[j];
            rs += t;
            col[j] += t;
        }
        err += (rs - a[i]).abs();
    }
    err + col.iter().zip(b).map(|(c, bj)| (c - bj).abs()).sum::<f64>()
}
