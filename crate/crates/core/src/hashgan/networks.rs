//! Encoder, generator and discriminator built from [`Sequential`] stacks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{sigmoid, Op, Sequential, Shape, Trace};
use crate::error::{Error, Result};

/// Layer widths of the three networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// Output channels of each conv + ELU + 2×2 pool block of the encoder.
    pub encoder_channels: Vec<usize>,
    /// Channels after each of the first three transposed convolutions.
    pub generator_channels: [usize; 3],
    /// Output channels of each conv block of the discriminator.
    pub discriminator_channels: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            encoder_channels: vec![16, 32, 64, 128],
            generator_channels: [64, 32, 16],
            discriminator_channels: vec![16, 32, 32],
        }
    }
}

fn conv_stack(resolution: usize, channels: &[usize]) -> Result<Sequential> {
    if channels.is_empty() || channels.contains(&0) {
        return Err(Error::Parameter(format!("invalid conv widths {channels:?}")));
    }
    let mut ops = Vec::new();
    let mut cin = 1;
    for &cout in channels {
        ops.extend([Op::Conv { cin, cout }, Op::Elu, Op::MaxPool]);
        cin = cout;
    }
    Sequential::new(Shape::new(1, resolution, resolution), ops)
}

/// `φ`: conv blocks over the scaled grid, then `W`: a dense layer from the
/// flattened features plus the count side-feature to the `L` pre-activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    conv: Sequential,
    head: Sequential,
    pub params: Vec<f64>,
}

/// Activations of one encoder forward pass.
#[derive(Debug, Clone)]
pub struct EncoderPass {
    conv: Trace,
    head: Trace,
}

impl EncoderPass {
    pub fn preactivation(&self) -> &[f64] {
        self.head.output()
    }
}

impl Encoder {
    pub fn new(resolution: usize, code_length: usize, channels: &[usize]) -> Result<Self> {
        if code_length == 0 {
            return Err(Error::Parameter("code length must be at least 1".into()));
        }
        let conv = conv_stack(resolution, channels)?;
        let fin = conv.output_shape().len() + 1;
        let head = Sequential::new(
            Shape::new(fin, 1, 1),
            vec![Op::Linear {
                fin,
                fout: code_length,
            }],
        )?;
        let params = vec![0.0; conv.n_params() + head.n_params()];
        Ok(Self { conv, head, params })
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut p = self.conv.init_params(rng);
        p.extend(self.head.init_params(rng));
        self.params = p;
    }

    pub fn resolution(&self) -> usize {
        self.conv.input_shape().h
    }

    pub fn code_length(&self) -> usize {
        self.head.output_shape().c
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = self.conv.tensor_shapes();
        shapes.extend(self.head.tensor_shapes());
        shapes
    }

    pub fn forward(&self, grid: &[f64], side: f64) -> EncoderPass {
        let (pc, ph) = self.params.split_at(self.conv.n_params());
        let conv = self.conv.forward(pc, grid);
        let mut features = conv.output().to_vec();
        features.push(side);
        let head = self.head.forward(ph, &features);
        EncoderPass { conv, head }
    }

    /// Accumulates `∂/∂(φ, W)` given the gradient on the pre-activations.
    pub fn backward(&self, pass: &EncoderPass, grad_x: &[f64], grad_params: &mut [f64]) {
        let split = self.conv.n_params();
        let (pc, ph) = self.params.split_at(split);
        let (gc, gh) = grad_params.split_at_mut(split);
        let gf = self
            .head
            .backward(ph, &pass.head, grad_x, Some(gh), true)
            .expect("input gradient requested");
        self.conv
            .backward(pc, &pass.conv, &gf[..gf.len() - 1], Some(gc), false);
    }
}

/// Kernel, stride and padding of each transposed convolution taking a
/// `1 × 1` input to a `resolution × resolution` output in four layers.
///
/// Working back from the output: an even side `2m` comes from `m` with
/// kernel 4, stride 2, padding 1; an odd side `2m + 1` from `m` with kernel
/// 3, stride 2, no padding. The first layer maps `1 × 1` to the remaining
/// side with a full-size kernel.
pub fn generator_plan(resolution: usize) -> Result<[(usize, usize, usize); 4]> {
    let mut sizes = [0usize; 4];
    let mut n = resolution;
    for s in sizes.iter_mut().rev() {
        *s = n;
        n /= 2;
    }
    if sizes[0] < 1 {
        return Err(Error::Parameter(format!(
            "resolution {resolution} too small for a four-layer generator (need at least 8)"
        )));
    }
    let mut plan = [(sizes[0], 1, 0); 4];
    for l in 1..4 {
        plan[l] = if sizes[l] % 2 == 0 { (4, 2, 1) } else { (3, 2, 0) };
    }
    Ok(plan)
}

/// `θ`: four transposed convolutions from an `L`-vector to a sigmoid grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    net: Sequential,
    pub params: Vec<f64>,
}

impl Generator {
    pub fn new(resolution: usize, code_length: usize, channels: [usize; 3]) -> Result<Self> {
        if channels.contains(&0) {
            return Err(Error::Parameter(format!("invalid generator widths {channels:?}")));
        }
        let plan = generator_plan(resolution)?;
        let widths = [code_length, channels[0], channels[1], channels[2], 1];
        let mut ops = Vec::new();
        for (l, &(k, stride, pad)) in plan.iter().enumerate() {
            ops.push(Op::Deconv {
                cin: widths[l],
                cout: widths[l + 1],
                k,
                stride,
                pad,
            });
            ops.push(if l < 3 { Op::Elu } else { Op::Sigmoid });
        }
        let net = Sequential::new(Shape::new(code_length, 1, 1), ops)?;
        debug_assert_eq!(net.output_shape(), Shape::new(1, resolution, resolution));
        let params = vec![0.0; net.n_params()];
        Ok(Self { net, params })
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.params = self.net.init_params(rng);
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        self.net.tensor_shapes()
    }

    pub fn forward(&self, code: &[f64]) -> Trace {
        self.net.forward(&self.params, code)
    }

    pub fn backward(
        &self,
        trace: &Trace,
        grad_out: &[f64],
        grad_params: Option<&mut [f64]>,
        need_code_grad: bool,
    ) -> Option<Vec<f64>> {
        self.net
            .backward(&self.params, trace, grad_out, grad_params, need_code_grad)
    }
}

/// `σ`: conv blocks whose flattened output is the exposed feature layer,
/// then a dense layer to a single logit.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    conv: Sequential,
    head: Sequential,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorPass {
    conv: Trace,
    head: Trace,
}

impl DiscriminatorPass {
    pub fn features(&self) -> &[f64] {
        self.conv.output()
    }

    pub fn logit(&self) -> f64 {
        self.head.output()[0]
    }

    pub fn probability(&self) -> f64 {
        sigmoid(self.logit())
    }
}

impl Discriminator {
    pub fn new(resolution: usize, channels: &[usize]) -> Result<Self> {
        let conv = conv_stack(resolution, channels)?;
        let fin = conv.output_shape().len();
        let head = Sequential::new(Shape::new(fin, 1, 1), vec![Op::Linear { fin, fout: 1 }])?;
        let params = vec![0.0; conv.n_params() + head.n_params()];
        Ok(Self { conv, head, params })
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut p = self.conv.init_params(rng);
        p.extend(self.head.init_params(rng));
        self.params = p;
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn feature_len(&self) -> usize {
        self.conv.output_shape().len()
    }

    pub fn forward(&self, grid: &[f64]) -> DiscriminatorPass {
        let (pc, ph) = self.params.split_at(self.conv.n_params());
        let conv = self.conv.forward(pc, grid);
        let head = self.head.forward(ph, conv.output());
        DiscriminatorPass { conv, head }
    }

    /// Backpropagates a gradient on the feature layer and one on the logit.
    pub fn backward(
        &self,
        pass: &DiscriminatorPass,
        grad_features: Option<&[f64]>,
        grad_logit: f64,
        grad_params: Option<&mut [f64]>,
        need_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let split = self.conv.n_params();
        let (pc, ph) = self.params.split_at(split);
        let (gc, gh) = match grad_params {
            Some(g) => {
                let (a, b) = g.split_at_mut(split);
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let mut gf = self
            .head
            .backward(ph, &pass.head, &[grad_logit], gh, true)
            .expect("input gradient requested");
        if let Some(extra) = grad_features {
            for (a, b) in gf.iter_mut().zip(extra) {
                *a += b;
            }
        }
        self.conv.backward(pc, &pass.conv, &gf, gc, need_input_grad)
    }
}
