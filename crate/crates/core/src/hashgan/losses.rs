//! The three training losses and their gradients.

use super::networks::Discriminator;
use crate::code::BinaryCode;
use crate::error::{Error, Result};

/// Distance from 0 and 1 at which discriminator probabilities are clamped.
pub const PROBABILITY_CLAMP: f64 = 1e-7;

/// Real-valued surrogate `h′` of a binary code, each component in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedCode {
    values: Vec<f64>,
}

impl RelaxedCode {
    /// Clips pre-activations componentwise to `[−1, 1]`.
    pub fn from_preactivation(x: &[f64]) -> Self {
        Self {
            values: x.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Bit `k` is set iff component `k` is `≥ 0`.
pub fn binarize(relaxed: &RelaxedCode) -> BinaryCode {
    let bits: Vec<bool> = relaxed.values.iter().map(|&v| v >= 0.0).collect();
    BinaryCode::from_bits(&bits)
}

/// Derivative of the clip, used to pass gradients back to pre-activations.
pub fn clip_mask(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0
    } else {
        0.0
    }
}

fn check_batch(relaxed: &[RelaxedCode], binary: &[BinaryCode], sp: &[f64]) -> Result<usize> {
    let m = relaxed.len();
    if binary.len() != m || sp.len() != m * m {
        return Err(Error::Dimension(format!(
            "batch of {m} relaxed codes, {} binary codes, similarity slice of {}",
            binary.len(),
            sp.len()
        )));
    }
    let l = relaxed.first().map_or(0, RelaxedCode::len);
    if relaxed.iter().any(|h| h.len() != l) || binary.iter().any(|b| b.len() != l) {
        return Err(Error::Dimension("code lengths differ within the batch".into()));
    }
    Ok(l)
}

/// `½ Σ_ij (h′_i·h′_j / L − S^P_ij)² + Σ_i ‖h′_i − b_i‖²` with `b_i` the
/// ±1 form of the binary codes and `sp` the row-major `m × m` slice.
pub fn similarity_loss(relaxed: &[RelaxedCode], binary: &[BinaryCode], sp: &[f64]) -> Result<f64> {
    similarity_loss_grad(relaxed, binary, sp).map(|(l, _)| l)
}

/// Loss value and its gradient with respect to each relaxed code.
pub fn similarity_loss_grad(
    relaxed: &[RelaxedCode],
    binary: &[BinaryCode],
    sp: &[f64],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let l = check_batch(relaxed, binary, sp)?;
    let m = relaxed.len();
    let lf = l as f64;
    let mut residual = vec![0.0; m * m];
    let mut loss = 0.0;
    for i in 0..m {
        for j in 0..m {
            let s: f64 = relaxed[i]
                .values
                .iter()
                .zip(&relaxed[j].values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / lf;
            let r = s - sp[i * m + j];
            residual[i * m + j] = r;
            loss += 0.5 * r * r;
        }
    }
    let mut grads = vec![vec![0.0; l]; m];
    for a in 0..m {
        let g = &mut grads[a];
        for b in 0..m {
            let w = (residual[a * m + b] + residual[b * m + a]) / lf;
            for (gk, hk) in g.iter_mut().zip(&relaxed[b].values) {
                *gk += w * hk;
            }
        }
        let signs = binary[a].to_signs();
        for ((gk, hk), bk) in g.iter_mut().zip(&relaxed[a].values).zip(&signs) {
            let d = hk - bk;
            loss += d * d;
            *gk += 2.0 * d;
        }
    }
    Ok((loss, grads))
}

/// Mean squared difference; the gradient with respect to `generated` is
/// `2 (generated − real) / len`.
pub fn mean_squared_error(real: &[f64], generated: &[f64]) -> f64 {
    debug_assert_eq!(real.len(), generated.len());
    real.iter()
        .zip(generated)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        / real.len().max(1) as f64
}

pub(crate) fn mse_grad(real: &[f64], generated: &[f64], scale: f64) -> Vec<f64> {
    let k = 2.0 * scale / real.len().max(1) as f64;
    real.iter().zip(generated).map(|(a, b)| k * (b - a)).collect()
}

/// Mean over the batch of pixel MSE plus the MSE between discriminator
/// feature layers on the real and generated grids.
pub fn diagram_loss(real: &[Vec<f64>], generated: &[Vec<f64>], disc: &Discriminator) -> Result<f64> {
    if real.len() != generated.len() || real.is_empty() {
        return Err(Error::Dimension(format!(
            "{} real grids vs {} generated grids",
            real.len(),
            generated.len()
        )));
    }
    let mut total = 0.0;
    for (r, g) in real.iter().zip(generated) {
        if r.len() != g.len() {
            return Err(Error::Dimension("grid sizes differ".into()));
        }
        let fr = disc.forward(r);
        let fg = disc.forward(g);
        total += mean_squared_error(r, g) + mean_squared_error(fr.features(), fg.features());
    }
    Ok(total / real.len() as f64)
}

pub(crate) fn clamp_probability(p: f64) -> (f64, bool) {
    let c = p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    (c, c != p)
}

/// Mean over the batch of `log D(V) + log(1 − D(V*))`.
pub fn adversarial_loss(disc_real: &[f64], disc_fake: &[f64]) -> Result<f64> {
    if disc_real.len() != disc_fake.len() || disc_real.is_empty() {
        return Err(Error::Dimension(format!(
            "{} real vs {} fake probabilities",
            disc_real.len(),
            disc_fake.len()
        )));
    }
    let total: f64 = disc_real
        .iter()
        .zip(disc_fake)
        .map(|(&r, &f)| clamp_probability(r).0.ln() + (1.0 - clamp_probability(f).0).ln())
        .sum();
    Ok(total / disc_real.len() as f64)
}
