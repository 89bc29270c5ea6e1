//! Minibatch training of the encoder / generator / discriminator trio.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::losses::{
    clamp_probability, clip_mask, mean_squared_error, mse_grad, similarity_loss,
    similarity_loss_grad, RelaxedCode,
};
use super::model::HashModel;
use super::networks::{Architecture, Discriminator, Encoder, Generator};
use crate::code::BinaryCode;
use crate::diagrams::BoundingBox;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::seed;
use crate::similarity::SimilarityMatrix;
use crate::vectorize::HistogramVector;

/// Samples per work unit when a batch is split across threads. Fixed so the
/// reduction order, and hence the result, does not depend on thread count.
const CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashConfig {
    pub code_length: usize,
    pub learning_rate: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub architecture: Architecture,
}

impl Default for HashConfig {
    fn default() -> Self {
        Self {
            code_length: 64,
            learning_rate: 0.001,
            omega1: 0.1,
            omega2: 0.1,
            epochs: 100,
            batch_size: 64,
            seed: 0,
            architecture: Architecture::default(),
        }
    }
}

impl HashConfig {
    pub fn validate(&self) -> Result<()> {
        if self.code_length == 0 {
            return Err(Error::Parameter("code length must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.omega1.is_finite() && self.omega2.is_finite()) {
            return Err(Error::Parameter("loss weights must be finite".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Grid scaled to `[0, 1]` by its own maximum count.
pub fn scaled_grid(h: &HistogramVector) -> Vec<f64> {
    let max = h.max_count();
    if max == 0 {
        return vec![0.0; h.grid.len()];
    }
    let inv = 1.0 / max as f64;
    h.grid.iter().map(|&c| c as f64 * inv).collect()
}

/// Factor mapping total counts to the side-feature: `1 / max total count`.
pub fn count_scale(histograms: &[HistogramVector]) -> f64 {
    match histograms.iter().map(|h| h.total_count).max() {
        Some(m) if m > 0 => 1.0 / m as f64,
        _ => 1.0,
    }
}

/// Encoder input for one histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub grid: Vec<f64>,
    pub side: f64,
}

impl Sample {
    pub fn from_histogram(h: &HistogramVector, count_scale: f64) -> Self {
        Self {
            grid: scaled_grid(h),
            side: h.total_count as f64 * count_scale,
        }
    }
}

/// Loss values on one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLosses {
    pub similarity: f64,
    pub diagram: f64,
    pub adversarial: f64,
}

impl BatchLosses {
    pub fn is_finite(&self) -> bool {
        self.similarity.is_finite() && self.diagram.is_finite() && self.adversarial.is_finite()
    }
}

/// Weights of the three losses in the gradients returned by
/// [`Networks::gradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub similarity: f64,
    pub diagram: f64,
    pub adversarial: f64,
}

/// Parameter gradients, one flat vector per network:
/// encoder of `ws·l_sim + wd·l_dia`, generator of `wd·l_dia + wa·l_adv`,
/// discriminator of `wa·l_adv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<f64>,
    pub generator: Vec<f64>,
    pub discriminator: Vec<f64>,
}

impl Gradients {
    fn zeros(nets: &Networks) -> Self {
        Self {
            encoder: vec![0.0; nets.encoder.n_params()],
            generator: vec![0.0; nets.generator.n_params()],
            discriminator: vec![0.0; nets.discriminator.n_params()],
        }
    }

    fn add(&mut self, other: &Gradients) {
        for (a, b) in [
            (&mut self.encoder, &other.encoder),
            (&mut self.generator, &other.generator),
            (&mut self.discriminator, &other.discriminator),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Per-epoch means of the batch losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub similarity: f64,
    pub diagram: f64,
    pub adversarial: f64,
    /// `l_sim + ω₁ l_dia + ω₂ l_adv`.
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Networks {
    pub encoder: Encoder,
    pub generator: Generator,
    pub discriminator: Discriminator,
}

struct Codes {
    x: Vec<Vec<f64>>,
    relaxed: Vec<RelaxedCode>,
    binary: Vec<BinaryCode>,
}

impl Codes {
    fn new(x: Vec<Vec<f64>>) -> Self {
        let relaxed: Vec<RelaxedCode> = x.iter().map(|v| RelaxedCode::from_preactivation(v)).collect();
        let binary = relaxed.iter().map(super::losses::binarize).collect();
        Self { x, relaxed, binary }
    }
}

impl Networks {
    /// Networks for `resolution × resolution` grids, initialized from `rng`
    /// in the order encoder, generator, discriminator.
    pub fn init<R: Rng + ?Sized>(resolution: usize, cfg: &HashConfig, rng: &mut R) -> Result<Self> {
        let arch = &cfg.architecture;
        let mut encoder = Encoder::new(resolution, cfg.code_length, &arch.encoder_channels)?;
        let mut generator = Generator::new(resolution, cfg.code_length, arch.generator_channels)?;
        let mut discriminator = Discriminator::new(resolution, &arch.discriminator_channels)?;
        encoder.init(rng);
        generator.init(rng);
        discriminator.init(rng);
        Ok(Self {
            encoder,
            generator,
            discriminator,
        })
    }

    /// Shifts the code-layer bias so pre-activations average to zero over
    /// `samples`.
    pub fn center_codes(&mut self, samples: &[Sample], exec: Execution) {
        if samples.is_empty() {
            return;
        }
        let xs = map_indexed(samples.len(), exec, |i| {
            self.encoder
                .forward(&samples[i].grid, samples[i].side)
                .preactivation()
                .to_vec()
        });
        let l = self.encoder.code_length();
        let mut mean = vec![0.0; l];
        for x in &xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        let bias_start = self.encoder.n_params() - l;
        for (b, m) in self.encoder.params[bias_start..].iter_mut().zip(&mean) {
            *b -= m / samples.len() as f64;
        }
    }

    fn check(&self, batch: &[&Sample], sp: &[f64]) -> Result<()> {
        let cells = self.encoder.resolution().pow(2);
        if batch.is_empty() || sp.len() != batch.len() * batch.len() {
            return Err(Error::Dimension(format!(
                "batch of {} with a similarity slice of {}",
                batch.len(),
                sp.len()
            )));
        }
        if batch.iter().any(|s| s.grid.len() != cells) {
            return Err(Error::Dimension(format!("expected grids of {cells} cells")));
        }
        Ok(())
    }

    /// Loss values only.
    pub fn losses(&self, batch: &[&Sample], sp: &[f64], exec: Execution) -> Result<BatchLosses> {
        self.check(batch, sp)?;
        let m = batch.len();
        let x = map_indexed(m, exec, |i| {
            self.encoder
                .forward(&batch[i].grid, batch[i].side)
                .preactivation()
                .to_vec()
        });
        let codes = Codes::new(x);
        let similarity = similarity_loss(&codes.relaxed, &codes.binary, sp)?;
        let parts = map_indexed(m, exec, |i| {
            let fake = self.generator.forward(codes.relaxed[i].values());
            let fake = fake.output();
            let real = &batch[i].grid;
            let dr = self.discriminator.forward(real);
            let df = self.discriminator.forward(fake);
            let dia = mean_squared_error(real, fake) + mean_squared_error(dr.features(), df.features());
            let adv = clamp_probability(dr.probability()).0.ln()
                + (1.0 - clamp_probability(df.probability()).0).ln();
            (dia, adv)
        });
        let (dia, adv) = parts.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
        Ok(BatchLosses {
            similarity,
            diagram: dia / m as f64,
            adversarial: adv / m as f64,
        })
    }

    /// Loss values and weighted parameter gradients on one batch.
    pub fn gradients(
        &self,
        batch: &[&Sample],
        sp: &[f64],
        weights: LossWeights,
        exec: Execution,
    ) -> Result<(BatchLosses, Gradients)> {
        self.check(batch, sp)?;
        let m = batch.len();
        let mf = m as f64;
        let passes = map_indexed(m, exec, |i| self.encoder.forward(&batch[i].grid, batch[i].side));
        let codes = Codes::new(passes.iter().map(|p| p.preactivation().to_vec()).collect());
        let (similarity, gsim) = similarity_loss_grad(&codes.relaxed, &codes.binary, sp)?;

        let wd = weights.diagram / mf;
        let wa = weights.adversarial / mf;
        let n_chunks = m.div_ceil(CHUNK);
        let parts = map_indexed(n_chunks, exec, |c| {
            let mut grads = Gradients::zeros(self);
            let (mut dia, mut adv) = (0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(m) {
                let gt = self.generator.forward(codes.relaxed[i].values());
                let fake = gt.output();
                let real = &batch[i].grid;
                let dr = self.discriminator.forward(real);
                let df = self.discriminator.forward(fake);
                dia += mean_squared_error(real, fake) + mean_squared_error(dr.features(), df.features());
                let (pr, cr) = clamp_probability(dr.probability());
                let (pf, cf) = clamp_probability(df.probability());
                adv += pr.ln() + (1.0 - pf).ln();

                let mut g_fake = mse_grad(real, fake, wd);
                if wd != 0.0 {
                    let g_feat = mse_grad(dr.features(), df.features(), wd);
                    let through = self
                        .discriminator
                        .backward(&df, Some(&g_feat), 0.0, None, true)
                        .expect("input gradient requested");
                    for (a, b) in g_fake.iter_mut().zip(&through) {
                        *a += b;
                    }
                }
                let code_grad = self
                    .generator
                    .backward(&gt, &g_fake, Some(&mut grads.generator), true)
                    .expect("code gradient requested");
                if wa != 0.0 {
                    let dz_fake = if cf { 0.0 } else { -df.probability() };
                    let dz_real = if cr { 0.0 } else { 1.0 - dr.probability() };
                    let g_adv = self
                        .discriminator
                        .backward(&df, None, wa * dz_fake, Some(&mut grads.discriminator), true)
                        .expect("input gradient requested");
                    self.discriminator
                        .backward(&dr, None, wa * dz_real, Some(&mut grads.discriminator), false);
                    self.generator
                        .backward(&gt, &g_adv, Some(&mut grads.generator), false);
                }

                let gx: Vec<f64> = codes.x[i]
                    .iter()
                    .zip(&gsim[i])
                    .zip(&code_grad)
                    .map(|((&x, &gs), &gc)| clip_mask(x) * (weights.similarity * gs + gc))
                    .collect();
                if gx.iter().any(|&v| v != 0.0) {
                    self.encoder.backward(&passes[i], &gx, &mut grads.encoder);
                }
            }
            (dia, adv, grads)
        });
        let mut total = Gradients::zeros(self);
        let (mut dia, mut adv) = (0.0, 0.0);
        for (d, a, g) in &parts {
            dia += d;
            adv += a;
            total.add(g);
        }
        Ok((
            BatchLosses {
                similarity,
                diagram: dia / mf,
                adversarial: adv / mf,
            },
            total,
        ))
    }
}

/// Trains with default parallel execution and no per-epoch callback.
pub fn train(
    histograms: &[HistogramVector],
    sp: &SimilarityMatrix,
    bounding_box: BoundingBox,
    cfg: &HashConfig,
) -> Result<HashModel> {
    train_with(histograms, sp, bounding_box, cfg, Execution::Parallel, |_| {})
}

/// Minibatch SGD. Per batch, with `τ` the learning rate:
/// encoder `−τ ∇(l_sim + ω₁ l_dia)`, generator `−τ ∇(ω₁ l_dia + ω₂ l_adv)`,
/// discriminator `+τ ∇(ω₂ l_adv)`.
pub fn train_with(
    histograms: &[HistogramVector],
    sp: &SimilarityMatrix,
    bounding_box: BoundingBox,
    cfg: &HashConfig,
    exec: Execution,
    mut observer: impl FnMut(&EpochStats),
) -> Result<HashModel> {
    cfg.validate()?;
    let n = histograms.len();
    if n < 2 || sp.n() != n {
        return Err(Error::Dimension(format!(
            "{n} histograms with a {0}×{0} similarity matrix (need n ≥ 2 and equal sizes)",
            sp.n()
        )));
    }
    let resolution = histograms[0].resolution;
    if histograms.iter().any(|h| h.resolution != resolution) {
        return Err(Error::Dimension("histograms have mixed resolutions".into()));
    }
    let scale = count_scale(histograms);
    let samples: Vec<Sample> = histograms.iter().map(|h| Sample::from_histogram(h, scale)).collect();
    let mut rng = seed::rng(cfg.seed);
    let mut nets = Networks::init(resolution, cfg, &mut rng)?;
    nets.center_codes(&samples, exec);
    let weights = LossWeights {
        similarity: 1.0,
        diagram: cfg.omega1,
        adversarial: cfg.omega2,
    };
    let tau = cfg.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sums = BatchLosses::default();
        let mut batches = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = idx.iter().map(|&i| &samples[i]).collect();
            let slice = sp.slice(idx);
            let (losses, grads) = nets.gradients(&batch, &slice, weights, exec)?;
            if !losses.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    sim: losses.similarity,
                    dia: losses.diagram,
                    adv: losses.adversarial,
                });
            }
            for (p, g) in nets.encoder.params.iter_mut().zip(&grads.encoder) {
                *p -= tau * g;
            }
            for (p, g) in nets.generator.params.iter_mut().zip(&grads.generator) {
                *p -= tau * g;
            }
            for (p, g) in nets.discriminator.params.iter_mut().zip(&grads.discriminator) {
                *p += tau * g;
            }
            sums.similarity += losses.similarity;
            sums.diagram += losses.diagram;
            sums.adversarial += losses.adversarial;
            batches += 1;
        }
        let k = batches as f64;
        let stats = EpochStats {
            epoch,
            similarity: sums.similarity / k,
            diagram: sums.diagram / k,
            adversarial: sums.adversarial / k,
            combined: (sums.similarity + cfg.omega1 * sums.diagram + cfg.omega2 * sums.adversarial) / k,
        };
        log::info!(
            "epoch {}: l_sim {:.6} l_dia {:.6} l_adv {:.6} combined {:.6}",
            epoch,
            stats.similarity,
            stats.diagram,
            stats.adversarial,
            stats.combined
        );
        observer(&stats);
    }
    Ok(HashModel::new(cfg.clone(), nets.encoder, bounding_box, scale))
}
