//! A minimal feed-forward engine: convolutions, transposed convolutions,
//! pooling, dense layers and pointwise activations with hand-written
//! backward passes. Tensors are flat `c × h × w` slices in `f64`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(c: usize, h: usize, w: usize) -> Self {
        Self { c, h, w }
    }

    pub fn len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    /// 3×3 convolution, stride 1, zero padding 1.
    Conv { cin: usize, cout: usize },
    /// Transposed convolution with square kernel.
    Deconv {
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
    },
    /// 2×2 max pooling, stride 2 (floor).
    MaxPool,
    Elu,
    Sigmoid,
    /// Dense layer over the flattened input; output shape `(fout, 1, 1)`.
    Linear { fin: usize, fout: usize },
}

impl Op {
    fn n_params(&self) -> usize {
        match *self {
            Op::Conv { cin, cout } => cout * cin * 9 + cout,
            Op::Deconv { cin, cout, k, .. } => cin * cout * k * k + cout,
            Op::Linear { fin, fout } => fout * fin + fout,
            _ => 0,
        }
    }

    fn output_shape(&self, s: Shape) -> Result<Shape> {
        let bad = |msg: String| Err(Error::Parameter(format!("layer {self:?} on {s:?}: {msg}")));
        match *self {
            Op::Conv { cin, cout } => {
                if cin != s.c {
                    return bad("channel mismatch".into());
                }
                Ok(Shape::new(cout, s.h, s.w))
            }
            Op::Deconv {
                cin,
                cout,
                k,
                stride,
                pad,
            } => {
                if cin != s.c {
                    return bad("channel mismatch".into());
                }
                let grow = |n: usize| ((n - 1) * stride + k).checked_sub(2 * pad);
                match (grow(s.h), grow(s.w)) {
                    (Some(h), Some(w)) if h > 0 && w > 0 => Ok(Shape::new(cout, h, w)),
                    _ => bad("padding exceeds output".into()),
                }
            }
            Op::MaxPool => {
                if s.h < 2 || s.w < 2 {
                    return bad("input too small to pool".into());
                }
                Ok(Shape::new(s.c, s.h / 2, s.w / 2))
            }
            Op::Elu | Op::Sigmoid => Ok(s),
            Op::Linear { fin, fout } => {
                if fin != s.len() {
                    return bad(format!("expected {fin} inputs"));
                }
                Ok(Shape::new(fout, 1, 1))
            }
        }
    }

    /// Fan-in used for weight initialization.
    fn fan_in(&self) -> usize {
        match *self {
            Op::Conv { cin, .. } => cin * 9,
            Op::Deconv { cin, k, stride, .. } => (cin * k * k / (stride * stride)).max(1),
            Op::Linear { fin, .. } => fin,
            _ => 1,
        }
    }

    /// Weight tensor shape; the bias is always `[cout]`.
    fn weight_shape(&self) -> Option<Vec<usize>> {
        match *self {
            Op::Conv { cin, cout } => Some(vec![cout, cin, 3, 3]),
            Op::Deconv { cin, cout, k, .. } => Some(vec![cin, cout, k, k]),
            Op::Linear { fin, fout } => Some(vec![fout, fin]),
            _ => None,
        }
    }
}

/// A chain of layers with its parameter layout. Parameters live outside,
/// in one flat slice, so callers can perturb and update them uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    ops: Vec<Op>,
    offsets: Vec<usize>,
    shapes: Vec<Shape>,
    n_params: usize,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[k + 1]` the output of layer `k`.
    pub acts: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace holds at least the input")
    }
}

impl Sequential {
    pub fn new(input: Shape, ops: Vec<Op>) -> Result<Self> {
        let mut shapes = vec![input];
        let mut offsets = Vec::with_capacity(ops.len());
        let mut n_params = 0;
        for op in &ops {
            let next = op.output_shape(*shapes.last().unwrap())?;
            shapes.push(next);
            offsets.push(n_params);
            n_params += op.n_params();
        }
        Ok(Self {
            ops,
            offsets,
            shapes,
            n_params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    pub fn output_shape(&self) -> Shape {
        *self.shapes.last().unwrap()
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// Shapes of the parameter tensors in storage order (weight, bias per
    /// parameterized layer).
    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for op in &self.ops {
            if let Some(ws) = op.weight_shape() {
                let bias = ws[match op {
                    Op::Deconv { .. } => 1,
                    _ => 0,
                }];
                out.push(ws);
                out.push(vec![bias]);
            }
        }
        out
    }

    /// Uniform fan-in scaled weights (variance `1 / fan_in`), zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = vec![0.0; self.n_params];
        for (op, &off) in self.ops.iter().zip(&self.offsets) {
            let n = op.n_params();
            if n == 0 {
                continue;
            }
            let bias = match *op {
                Op::Conv { cout, .. } | Op::Deconv { cout, .. } => cout,
                Op::Linear { fout, .. } => fout,
                _ => 0,
            };
            let limit = (3.0 / op.fan_in() as f64).sqrt();
            for p in &mut params[off..off + n - bias] {
                *p = rng.gen_range(-limit..limit);
            }
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Trace {
        debug_assert_eq!(params.len(), self.n_params);
        debug_assert_eq!(input.len(), self.shapes[0].len());
        let mut acts = Vec::with_capacity(self.ops.len() + 1);
        let mut argmax = Vec::with_capacity(self.ops.len());
        acts.push(input.to_vec());
        for (k, op) in self.ops.iter().enumerate() {
            let (sin, sout) = (self.shapes[k], self.shapes[k + 1]);
            let p = &params[self.offsets[k]..self.offsets[k] + op.n_params()];
            let x = &acts[k];
            let mut idx = Vec::new();
            let y = match *op {
                Op::Conv { cin, cout } => conv_forward(p, x, cin, cout, sin.h, sin.w),
                Op::Deconv {
                    cin,
                    cout,
                    k,
                    stride,
                    pad,
                } => deconv_forward(p, x, cin, cout, k, stride, pad, sin, sout),
                Op::MaxPool => {
                    let (y, i) = pool_forward(x, sin, sout);
                    idx = i;
                    y
                }
                Op::Elu => x.iter().map(|&v| if v > 0.0 { v } else { v.exp_m1() }).collect(),
                Op::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
                Op::Linear { fin, fout } => linear_forward(p, x, fin, fout),
            };
            argmax.push(idx);
            acts.push(y);
        }
        Trace { acts, argmax }
    }

    /// Accumulates parameter gradients into `grad_params` (when given) and
    /// returns the gradient with respect to the input (when asked for).
    pub fn backward(
        &self,
        params: &[f64],
        trace: &Trace,
        grad_out: &[f64],
        mut grad_params: Option<&mut [f64]>,
        need_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let mut g = grad_out.to_vec();
        for k in (0..self.ops.len()).rev() {
            let op = &self.ops[k];
            let (sin, sout) = (self.shapes[k], self.shapes[k + 1]);
            let range = self.offsets[k]..self.offsets[k] + op.n_params();
            let p = &params[range.clone()];
            let x = &trace.acts[k];
            let y = &trace.acts[k + 1];
            let want_input = need_input_grad || k > 0;
            let gp = grad_params.as_deref_mut().map(|gp| &mut gp[range]);
            g = match *op {
                Op::Conv { cin, cout } => conv_backward(p, x, &g, cin, cout, sin.h, sin.w, gp, want_input),
                Op::Deconv {
                    cin,
                    cout,
                    k,
                    stride,
                    pad,
                } => deconv_backward(p, x, &g, cin, cout, k, stride, pad, sin, sout, gp, want_input),
                Op::MaxPool => {
                    let mut gi = vec![0.0; sin.len()];
                    for (o, &src) in trace.argmax[k].iter().enumerate() {
                        gi[src as usize] += g[o];
                    }
                    gi
                }
                Op::Elu => g
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(gv, (&xv, &yv))| if xv > 0.0 { *gv } else { gv * (yv + 1.0) })
                    .collect(),
                Op::Sigmoid => g.iter().zip(y).map(|(gv, &yv)| gv * yv * (1.0 - yv)).collect(),
                Op::Linear { fin, fout } => linear_backward(p, x, &g, fin, fout, gp, want_input),
            };
        }
        need_input_grad.then_some(g)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Valid output positions `y` for which `y + d` stays inside `0..n`.
#[inline]
fn shifted_range(n: usize, d: isize) -> std::ops::Range<usize> {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).clamp(0, n as isize) as usize;
    lo..hi.max(lo)
}

fn conv_forward(p: &[f64], x: &[f64], cin: usize, cout: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let (weights, bias) = p.split_at(cout * cin * 9);
    let mut y = vec![0.0; cout * hw];
    for oc in 0..cout {
        let out = &mut y[oc * hw..(oc + 1) * hw];
        out.iter_mut().for_each(|v| *v = bias[oc]);
        for ic in 0..cin {
            let inp = &x[ic * hw..(ic + 1) * hw];
            let wk = &weights[(oc * cin + ic) * 9..(oc * cin + ic + 1) * 9];
            for ky in 0..3 {
                let dy = ky as isize - 1;
                for kx in 0..3 {
                    let dx = kx as isize - 1;
                    let wv = wk[ky * 3 + kx];
                    let xs = shifted_range(w, dx);
                    for yy in shifted_range(h, dy) {
                        let sy = (yy as isize + dy) as usize;
                        let orow = &mut out[yy * w + xs.start..yy * w + xs.end];
                        let s0 = (xs.start as isize + dx) as usize;
                        let irow = &inp[sy * w + s0..sy * w + s0 + orow.len()];
                        for (o, i) in orow.iter_mut().zip(irow) {
                            *o += wv * i;
                        }
                    }
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    p: &[f64],
    x: &[f64],
    g: &[f64],
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    mut gp: Option<&mut [f64]>,
    want_input: bool,
) -> Vec<f64> {
    let hw = h * w;
    let nw = cout * cin * 9;
    let weights = &p[..nw];
    let mut gi = if want_input { vec![0.0; cin * hw] } else { Vec::new() };
    for oc in 0..cout {
        let go = &g[oc * hw..(oc + 1) * hw];
        if let Some(gp) = gp.as_deref_mut() {
            gp[nw + oc] += go.iter().sum::<f64>();
        }
        for ic in 0..cin {
            let inp = &x[ic * hw..(ic + 1) * hw];
            let base = (oc * cin + ic) * 9;
            for ky in 0..3 {
                let dy = ky as isize - 1;
                for kx in 0..3 {
                    let dx = kx as isize - 1;
                    let wv = weights[base + ky * 3 + kx];
                    let xs = shifted_range(w, dx);
                    let s0 = (xs.start as isize + dx) as usize;
                    let len = xs.len();
                    let mut acc = 0.0;
                    for yy in shifted_range(h, dy) {
                        let sy = (yy as isize + dy) as usize;
                        let grow = &go[yy * w + xs.start..yy * w + xs.start + len];
                        let irow = &inp[sy * w + s0..sy * w + s0 + len];
                        acc += grow.iter().zip(irow).map(|(a, b)| a * b).sum::<f64>();
                        if want_input {
                            let girow = &mut gi[ic * hw + sy * w + s0..ic * hw + sy * w + s0 + len];
                            for (gv, &o) in girow.iter_mut().zip(grow) {
                                *gv += wv * o;
                            }
                        }
                    }
                    if let Some(gp) = gp.as_deref_mut() {
                        gp[base + ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
    gi
}

#[allow(clippy::too_many_arguments)]
fn deconv_forward(
    p: &[f64],
    x: &[f64],
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    sin: Shape,
    sout: Shape,
) -> Vec<f64> {
    let (hi, wi, ho, wo) = (sin.h, sin.w, sout.h, sout.w);
    let (weights, bias) = p.split_at(cin * cout * k * k);
    let mut y = vec![0.0; cout * ho * wo];
    for oc in 0..cout {
        y[oc * ho * wo..(oc + 1) * ho * wo]
            .iter_mut()
            .for_each(|v| *v = bias[oc]);
    }
    for ic in 0..cin {
        let inp = &x[ic * hi * wi..(ic + 1) * hi * wi];
        for oc in 0..cout {
            let out = &mut y[oc * ho * wo..(oc + 1) * ho * wo];
            let wk = &weights[(ic * cout + oc) * k * k..(ic * cout + oc + 1) * k * k];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = wk[ky * k + kx];
                    for yy in 0..hi {
                        let oy = (yy * stride + ky) as isize - pad as isize;
                        if oy < 0 || oy >= ho as isize {
                            continue;
                        }
                        let orow = &mut out[oy as usize * wo..(oy as usize + 1) * wo];
                        let irow = &inp[yy * wi..(yy + 1) * wi];
                        for (xx, &iv) in irow.iter().enumerate() {
                            let ox = (xx * stride + kx) as isize - pad as isize;
                            if ox >= 0 && ox < wo as isize {
                                orow[ox as usize] += wv * iv;
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn deconv_backward(
    p: &[f64],
    x: &[f64],
    g: &[f64],
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    sin: Shape,
    sout: Shape,
    mut gp: Option<&mut [f64]>,
    want_input: bool,
) -> Vec<f64> {
    let (hi, wi, ho, wo) = (sin.h, sin.w, sout.h, sout.w);
    let nw = cin * cout * k * k;
    let weights = &p[..nw];
    if let Some(gp) = gp.as_deref_mut() {
        for oc in 0..cout {
            gp[nw + oc] += g[oc * ho * wo..(oc + 1) * ho * wo].iter().sum::<f64>();
        }
    }
    let mut gi = if want_input { vec![0.0; cin * hi * wi] } else { Vec::new() };
    for ic in 0..cin {
        let inp = &x[ic * hi * wi..(ic + 1) * hi * wi];
        for oc in 0..cout {
            let go = &g[oc * ho * wo..(oc + 1) * ho * wo];
            let base = (ic * cout + oc) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let wv = weights[base + ky * k + kx];
                    let mut acc = 0.0;
                    for yy in 0..hi {
                        let oy = (yy * stride + ky) as isize - pad as isize;
                        if oy < 0 || oy >= ho as isize {
                            continue;
                        }
                        let grow = &go[oy as usize * wo..(oy as usize + 1) * wo];
                        for xx in 0..wi {
                            let ox = (xx * stride + kx) as isize - pad as isize;
                            if ox >= 0 && ox < wo as isize {
                                let gv = grow[ox as usize];
                                acc += inp[yy * wi + xx] * gv;
                                if want_input {
                                    gi[ic * hi * wi + yy * wi + xx] += wv * gv;
                                }
                            }
                        }
                    }
                    if let Some(gp) = gp.as_deref_mut() {
                        gp[base + ky * k + kx] += acc;
                    }
                }
            }
        }
    }
    gi
}

fn pool_forward(x: &[f64], sin: Shape, sout: Shape) -> (Vec<f64>, Vec<u32>) {
    let mut y = Vec::with_capacity(sout.len());
    let mut idx = Vec::with_capacity(sout.len());
    for c in 0..sin.c {
        let base = c * sin.h * sin.w;
        for oy in 0..sout.h {
            for ox in 0..sout.w {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for dy in 0..2 {
                    for dx in 0..2 {
                        let i = base + (2 * oy + dy) * sin.w + 2 * ox + dx;
                        if x[i] > best.0 {
                            best = (x[i], i);
                        }
                    }
                }
                y.push(best.0);
                idx.push(best.1 as u32);
            }
        }
    }
    (y, idx)
}

fn linear_forward(p: &[f64], x: &[f64], fin: usize, fout: usize) -> Vec<f64> {
    let (weights, bias) = p.split_at(fin * fout);
    (0..fout)
        .map(|o| {
            bias[o]
                + weights[o * fin..(o + 1) * fin]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect()
}

fn linear_backward(
    p: &[f64],
    x: &[f64],
    g: &[f64],
    fin: usize,
    fout: usize,
    mut gp: Option<&mut [f64]>,
    want_input: bool,
) -> Vec<f64> {
    let weights = &p[..fin * fout];
    let mut gi = if want_input { vec![0.0; fin] } else { Vec::new() };
    for o in 0..fout {
        let go = g[o];
        if let Some(gp) = gp.as_deref_mut() {
            gp[fin * fout + o] += go;
            for (gw, xv) in gp[o * fin..(o + 1) * fin].iter_mut().zip(x) {
                *gw += go * xv;
            }
        }
        if want_input {
            for (gv, wv) in gi.iter_mut().zip(&weights[o * fin..(o + 1) * fin]) {
                *gv += go * wv;
            }
        }
    }
    gi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central finite differences of `sum(output * probe)` against the
    /// analytic backward pass, for parameters and inputs.
    fn check(net: &Sequential, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..net.n_params()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let input: Vec<f64> = (0..net.input_shape().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..net.output_shape().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |p: &[f64], x: &[f64]| -> f64 {
            net.forward(p, x).output().iter().zip(&probe).map(|(a, b)| a * b).sum()
        };
        let trace = net.forward(&params, &input);
        let mut gp = vec![0.0; net.n_params()];
        let gi = net.backward(&params, &trace, &probe, Some(&mut gp), true).unwrap();
        let h = 1e-6;
        for k in 0..net.n_params() {
            let (mut a, mut b) = (params.clone(), params.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (f(&a, &input) - f(&b, &input)) / (2.0 * h);
            assert!((fd - gp[k]).abs() < 1e-6 * (1.0 + fd.abs()), "param {k}: fd {fd} vs {}", gp[k]);
        }
        for k in 0..input.len() {
            let (mut a, mut b) = (input.clone(), input.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (f(&params, &a) - f(&params, &b)) / (2.0 * h);
            assert!((fd - gi[k]).abs() < 1e-6 * (1.0 + fd.abs()), "input {k}: fd {fd} vs {}", gi[k]);
        }
    }

    #[test]
    fn conv_pool_linear_gradients() {
        let net = Sequential::new(
            Shape::new(2, 6, 5),
            vec![
                Op::Conv { cin: 2, cout: 3 },
                Op::Elu,
                Op::MaxPool,
                Op::Linear { fin: 3 * 3 * 2, fout: 4 },
                Op::Sigmoid,
            ],
        )
        .unwrap();
        for seed in 0..3 {
            check(&net, seed);
        }
    }

    #[test]
    fn deconv_gradients() {
        let net = Sequential::new(
            Shape::new(3, 1, 1),
            vec![
                Op::Deconv { cin: 3, cout: 2, k: 3, stride: 1, pad: 0 },
                Op::Elu,
                Op::Deconv { cin: 2, cout: 2, k: 4, stride: 2, pad: 1 },
                Op::Elu,
                Op::Deconv { cin: 2, cout: 1, k: 3, stride: 2, pad: 0 },
                Op::Sigmoid,
            ],
        )
        .unwrap();
        assert_eq!(net.output_shape(), Shape::new(1, 13, 13));
        for seed in 0..3 {
            check(&net, seed);
        }
    }

    #[test]
    fn shapes_are_validated() {
        assert!(Sequential::new(Shape::new(1, 1, 1), vec![Op::MaxPool]).is_err());
        assert!(Sequential::new(Shape::new(2, 4, 4), vec![Op::Conv { cin: 1, cout: 1 }]).is_err());
        let net = Sequential::new(Shape::new(1, 4, 4), vec![Op::Conv { cin: 1, cout: 2 }, Op::MaxPool]).unwrap();
        assert_eq!(net.tensor_shapes(), vec![vec![2, 1, 3, 3], vec![2]]);
        assert_eq!(net.n_params(), 20);
    }

    #[test]
    fn conv_matches_direct_definition() {
        let net = Sequential::new(Shape::new(1, 3, 3), vec![Op::Conv { cin: 1, cout: 1 }]).unwrap();
        let mut params = vec![0.0; 10];
        params[4] = 1.0; // centre tap
        params[5] = 2.0; // (ky=1, kx=2): right neighbour
        params[9] = 0.5; // bias
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let y = net.forward(&params, &x).output().to_vec();
        // y[r][c] = x[r][c] + 2 x[r][c+1] + 0.5
        assert_eq!(y, vec![5.5, 8.5, 3.5, 14.5, 17.5, 6.5, 23.5, 26.5, 9.5]);
    }
}
