use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::arch::{Architecture, LayerShape, LayerSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{
    col2im_select, gemm_nn, gemm_nt, gemm_tn, im2col_select, ConvGeometry, LoweredMatrix, Matrix,
    Shape3, Tensor4,
};

/// Convolution whose lowered kernel may cover only a subset of the
/// `(channel, kh, kw)` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub geometry: ConvGeometry,
    pub filters: usize,
    /// Lowered-input rows used, as indices into the full lowering.
    pub columns: Vec<usize>,
    /// `filters x columns.len()`.
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub weight_velocity: Matrix<T>,
    pub bias_velocity: Vec<T>,
    pub prune_exempt: bool,
}

impl<T: Scalar> ConvLayer<T> {
    /// True when every lowered column is present.
    pub fn is_dense(&self) -> bool {
        self.columns.len() == self.geometry.patch_len()
    }

    /// Full `(N, C, H_k, W_k)` kernel, zero at removed columns.
    pub fn kernel(&self) -> Tensor4<T> {
        let g = &self.geometry;
        let mut t = Tensor4::zeros([self.filters, g.in_channels, g.kernel_h, g.kernel_w]);
        for f in 0..self.filters {
            for (j, &col) in self.columns.iter().enumerate() {
                let (c, h, w) = g.decode(col);
                t.set(f, c, h, w, self.weight.get(f, j));
            }
        }
        t
    }

    /// Lowered view of the full kernel.
    pub fn lowered(&self) -> LoweredMatrix<T> {
        LoweredMatrix::from_tensor(&self.kernel())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcLayer<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`.
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub weight_velocity: Matrix<T>,
    pub bias_velocity: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Conv(ConvLayer<T>),
    Relu,
    MaxPool { size: usize, stride: usize },
    FullyConnected(FcLayer<T>),
    SoftmaxXent,
}

/// A sequential CNN with its parameters and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    arch: Architecture,
    shapes: Vec<LayerShape>,
    layers: Vec<Layer<T>>,
    seed: u64,
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    /// Input to each layer, `batch * input.len()` entries.
    inputs: Vec<Vec<T>>,
    /// Flat argmax offsets for max-pool layers.
    argmax: Vec<Option<Vec<u32>>>,
    logits: Matrix<T>,
}

impl<T> ForwardCache<T> {
    pub fn logits(&self) -> &Matrix<T> {
        &self.logits
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Loss gradient of one parametric layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Loss gradients for every layer; `None` for layers without parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Option<ParamGrad<T>>>,
}

impl<T: Scalar> Network<T> {
    /// He-initialised network (`N(0, 2/fan_in)` weights, zero biases).
    /// Draws are made in `f64` so networks of either precision built from
    /// the same seed agree up to rounding.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let shapes = arch.resolve()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (spec, shape) in arch.layers.iter().zip(&shapes) {
            layers.push(match spec {
                LayerSpec::Conv {
                    filters,
                    prune_exempt,
                    columns,
                    ..
                } => {
                    let g = shape.geometry.expect("conv shape carries geometry");
                    let columns = columns.clone().unwrap_or_else(|| (0..g.patch_len()).collect());
                    let weight = he_matrix(&mut rng, *filters, columns.len());
                    Layer::Conv(ConvLayer {
                        geometry: g,
                        filters: *filters,
                        weight_velocity: Matrix::zeros(*filters, columns.len()),
                        columns,
                        weight,
                        bias: vec![T::zero(); *filters],
                        bias_velocity: vec![T::zero(); *filters],
                        prune_exempt: *prune_exempt,
                    })
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::MaxPool { size, stride } => Layer::MaxPool {
                    size: *size,
                    stride: *stride,
                },
                LayerSpec::FullyConnected { out } => {
                    let inputs = shape.input.len();
                    Layer::FullyConnected(FcLayer {
                        inputs,
                        outputs: *out,
                        weight: he_matrix(&mut rng, *out, inputs),
                        bias: vec![T::zero(); *out],
                        weight_velocity: Matrix::zeros(*out, inputs),
                        bias_velocity: vec![T::zero(); *out],
                    })
                }
                LayerSpec::SoftmaxXent => Layer::SoftmaxXent,
            });
        }
        Ok(Self {
            arch,
            shapes,
            layers,
            seed,
        })
    }

    /// Assembles a network from explicit layers, checking them against
    /// `arch`.
    pub fn from_layers(arch: Architecture, layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        let shapes = arch.resolve()?;
        if layers.len() != shapes.len() {
            return Err(Error::DimMismatch(format!(
                "{} layers for an architecture of {}",
                layers.len(),
                shapes.len()
            )));
        }
        let net = Self {
            arch,
            shapes,
            layers,
            seed,
        };
        net.check_layers()?;
        Ok(net)
    }

    fn check_layers(&self) -> Result<()> {
        for (idx, ((spec, shape), layer)) in self
            .arch
            .layers
            .iter()
            .zip(&self.shapes)
            .zip(&self.layers)
            .enumerate()
        {
            let ok = match (spec, layer) {
                (LayerSpec::Conv { filters, columns, .. }, Layer::Conv(c)) => {
                    let g = shape.geometry.expect("conv geometry");
                    let expect_cols = columns.clone().unwrap_or_else(|| (0..g.patch_len()).collect());
                    c.geometry == g
                        && c.filters == *filters
                        && c.columns == expect_cols
                        && (c.weight.rows(), c.weight.cols()) == (*filters, expect_cols.len())
                        && c.weight_velocity.rows() == c.weight.rows()
                        && c.weight_velocity.cols() == c.weight.cols()
                        && c.bias.len() == *filters
                        && c.bias_velocity.len() == *filters
                }
                (LayerSpec::Relu, Layer::Relu) | (LayerSpec::SoftmaxXent, Layer::SoftmaxXent) => true,
                (LayerSpec::MaxPool { size, stride }, Layer::MaxPool { size: s, stride: t }) => {
                    size == s && stride == t
                }
                (LayerSpec::FullyConnected { out }, Layer::FullyConnected(f)) => {
                    f.outputs == *out
                        && f.inputs == shape.input.len()
                        && (f.weight.rows(), f.weight.cols()) == (*out, f.inputs)
                        && f.weight_velocity.rows() == *out
                        && f.weight_velocity.cols() == f.inputs
                        && f.bias.len() == *out
                        && f.bias_velocity.len() == *out
                }
                _ => false,
            };
            if !ok {
                return Err(Error::DimMismatch(format!(
                    "layer {idx} does not match its {} spec",
                    spec.name()
                )));
            }
        }
        Ok(())
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_shape(&self) -> Shape3 {
        self.arch.input
    }

    pub fn classes(&self) -> usize {
        self.shapes
            .last()
            .map_or(self.arch.input.len(), |s| s.output.len())
    }

    pub fn conv(&self, idx: usize) -> Option<&ConvLayer<T>> {
        match self.layers.get(idx) {
            Some(Layer::Conv(c)) => Some(c),
            _ => None,
        }
    }

    pub fn conv_mut(&mut self, idx: usize) -> Option<&mut ConvLayer<T>> {
        match self.layers.get_mut(idx) {
            Some(Layer::Conv(c)) => Some(c),
            _ => None,
        }
    }

    /// Parameter tensors in declaration order: for each parametric layer
    /// its weight, bias, weight momentum and bias momentum.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => out.extend([
                    c.weight.as_slice(),
                    &c.bias[..],
                    c.weight_velocity.as_slice(),
                    &c.bias_velocity[..],
                ]),
                Layer::FullyConnected(f) => out.extend([
                    f.weight.as_slice(),
                    &f.bias[..],
                    f.weight_velocity.as_slice(),
                    &f.bias_velocity[..],
                ]),
                _ => {}
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.push(c.weight.as_mut_slice());
                    out.push(&mut c.bias[..]);
                    out.push(c.weight_velocity.as_mut_slice());
                    out.push(&mut c.bias_velocity[..]);
                }
                Layer::FullyConnected(f) => {
                    out.push(f.weight.as_mut_slice());
                    out.push(&mut f.bias[..]);
                    out.push(f.weight_velocity.as_mut_slice());
                    out.push(&mut f.bias_velocity[..]);
                }
                _ => {}
            }
        }
        out
    }

    /// Learnable parameter count (weights and biases, no momentum).
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Conv(c) => c.weight.as_slice().len() + c.bias.len(),
                Layer::FullyConnected(f) => f.weight.as_slice().len() + f.bias.len(),
                _ => 0,
            })
            .sum()
    }

    /// Same network in another precision.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let cv = |v: &[T]| v.iter().map(|x| U::from_f64(x.as_f64())).collect::<Vec<U>>();
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv(c) => Layer::Conv(ConvLayer {
                    geometry: c.geometry,
                    filters: c.filters,
                    columns: c.columns.clone(),
                    weight: c.weight.cast(),
                    bias: cv(&c.bias),
                    weight_velocity: c.weight_velocity.cast(),
                    bias_velocity: cv(&c.bias_velocity),
                    prune_exempt: c.prune_exempt,
                }),
                Layer::Relu => Layer::Relu,
                Layer::MaxPool { size, stride } => Layer::MaxPool {
                    size: *size,
                    stride: *stride,
                },
                Layer::FullyConnected(f) => Layer::FullyConnected(FcLayer {
                    inputs: f.inputs,
                    outputs: f.outputs,
                    weight: f.weight.cast(),
                    bias: cv(&f.bias),
                    weight_velocity: f.weight_velocity.cast(),
                    bias_velocity: cv(&f.bias_velocity),
                }),
                Layer::SoftmaxXent => Layer::SoftmaxXent,
            })
            .collect();
        Network {
            arch: self.arch.clone(),
            shapes: self.shapes.clone(),
            layers,
            seed: self.seed,
        }
    }

    fn check_batch(&self, batch: &Tensor4<T>) -> Result<usize> {
        let [b, c, h, w] = batch.dims();
        let s = self.arch.input;
        if (c, h, w) != (s.channels, s.height, s.width) {
            return Err(Error::DimMismatch(format!(
                "batch sample shape {c}x{h}x{w}, network expects {}x{}x{}",
                s.channels, s.height, s.width
            )));
        }
        Ok(b)
    }

    /// Runs layer `idx` over a whole batch.
    fn layer_forward(&self, idx: usize, input: &[T], batch: usize) -> (Vec<T>, Option<Vec<u32>>) {
        let shape = &self.shapes[idx];
        let (in_len, out_len) = (shape.input.len(), shape.output.len());
        let mut out = vec![T::zero(); batch * out_len];
        let mut argmax = None;
        match &self.layers[idx] {
            Layer::Conv(c) => {
                let g = &c.geometry;
                let p = g.spatial();
                let k = c.columns.len();
                out.par_chunks_mut(out_len.max(1))
                    .zip(input.par_chunks(in_len))
                    .for_each(|(y, x)| {
                        let mut cols = vec![T::zero(); k * p];
                        im2col_select(x, g, &c.columns, &mut cols);
                        for (f, row) in y.chunks_mut(p).enumerate() {
                            row.fill(c.bias[f]);
                        }
                        gemm_nn(c.filters, k, p, c.weight.as_slice(), &cols, y);
                    });
            }
            Layer::Relu => {
                for (y, &x) in out.iter_mut().zip(input) {
                    *y = if x > T::zero() { x } else { T::zero() };
                }
            }
            Layer::MaxPool { size, stride } => {
                let mut idxs = vec![0u32; batch * out_len];
                let (ish, osh) = (shape.input, shape.output);
                out.par_chunks_mut(out_len)
                    .zip(idxs.par_chunks_mut(out_len))
                    .zip(input.par_chunks(in_len))
                    .for_each(|((y, am), x)| {
                        for c in 0..osh.channels {
                            for oy in 0..osh.height {
                                for ox in 0..osh.width {
                                    let mut best = usize::MAX;
                                    let mut best_v = T::neg_infinity();
                                    for dy in 0..*size {
                                        for dx in 0..*size {
                                            let off = (c * ish.height + oy * stride + dy) * ish.width
                                                + ox * stride
                                                + dx;
                                            if best == usize::MAX || x[off] > best_v {
                                                best = off;
                                                best_v = x[off];
                                            }
                                        }
                                    }
                                    let o = (c * osh.height + oy) * osh.width + ox;
                                    y[o] = best_v;
                                    am[o] = best as u32;
                                }
                            }
                        }
                    });
                argmax = Some(idxs);
            }
            Layer::FullyConnected(f) => {
                for y in out.chunks_mut(f.outputs) {
                    y.copy_from_slice(&f.bias);
                }
                gemm_nt(batch, f.inputs, f.outputs, input, f.weight.as_slice(), &mut out);
            }
            Layer::SoftmaxXent => out.copy_from_slice(input),
        }
        (out, argmax)
    }

    /// Forward pass keeping everything backward needs.
    pub fn forward(&self, batch: &Tensor4<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
        let b = self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut argmaxes = Vec::with_capacity(self.layers.len());
        let mut act = batch.as_slice().to_vec();
        for idx in 0..self.layers.len() {
            let (out, am) = self.layer_forward(idx, &act, b);
            inputs.push(std::mem::replace(&mut act, out));
            argmaxes.push(am);
        }
        let logits = Matrix::from_vec(b, self.classes(), act)?;
        let cache = ForwardCache {
            batch: b,
            inputs,
            argmax: argmaxes,
            logits: logits.clone(),
        };
        Ok((logits, cache))
    }

    /// Forward pass without a cache.
    pub fn predict(&self, batch: &Tensor4<T>) -> Result<Matrix<T>> {
        let b = self.check_batch(batch)?;
        let mut act = batch.as_slice().to_vec();
        for idx in 0..self.layers.len() {
            act = self.layer_forward(idx, &act, b).0;
        }
        Matrix::from_vec(b, self.classes(), act)
    }

    /// Forward pass returning the wall time spent in each layer.
    pub fn forward_timed(&self, batch: &Tensor4<T>) -> Result<(Matrix<T>, Vec<Duration>)> {
        let b = self.check_batch(batch)?;
        let mut act = batch.as_slice().to_vec();
        let mut times = Vec::with_capacity(self.layers.len());
        for idx in 0..self.layers.len() {
            let t0 = Instant::now();
            act = self.layer_forward(idx, &act, b).0;
            times.push(t0.elapsed());
        }
        Ok((Matrix::from_vec(b, self.classes(), act)?, times))
    }

    /// Gradient of the mean softmax cross-entropy with respect to every
    /// weight and bias.
    pub fn backward(&self, cache: &ForwardCache<T>, labels: &[usize]) -> Result<Gradients<T>> {
        let b = cache.batch;
        let stale = cache.inputs.len() != self.layers.len()
            || cache
                .inputs
                .iter()
                .zip(&self.shapes)
                .any(|(x, s)| x.len() != b * s.input.len())
            || cache.logits.cols() != self.classes();
        if stale {
            return Err(Error::Contract(
                "forward cache does not match this network".into(),
            ));
        }
        if labels.len() != b {
            return Err(Error::DimMismatch(format!(
                "{} labels for a batch of {b}",
                labels.len()
            )));
        }
        let mut grad = softmax_xent_grad(&cache.logits, labels)?.into_vec();
        let mut out = vec![None; self.layers.len()];
        for idx in (0..self.layers.len()).rev() {
            let need_input = idx > 0;
            let (dx, pg) = self.layer_backward(idx, cache, &grad, need_input);
            out[idx] = pg;
            grad = dx;
        }
        Ok(Gradients { layers: out })
    }

    fn layer_backward(
        &self,
        idx: usize,
        cache: &ForwardCache<T>,
        dy: &[T],
        need_input: bool,
    ) -> (Vec<T>, Option<ParamGrad<T>>) {
        let b = cache.batch;
        let shape = &self.shapes[idx];
        let (in_len, out_len) = (shape.input.len(), shape.output.len());
        let x = &cache.inputs[idx];
        match &self.layers[idx] {
            Layer::Conv(c) => {
                let g = &c.geometry;
                let p = g.spatial();
                let k = c.columns.len();
                let f = c.filters;
                let per_sample: Vec<(Vec<T>, Vec<T>, Vec<T>)> = (0..b)
                    .into_par_iter()
                    .map(|s| {
                        let xs = &x[s * in_len..(s + 1) * in_len];
                        let dys = &dy[s * out_len..(s + 1) * out_len];
                        let mut cols = vec![T::zero(); k * p];
                        im2col_select(xs, g, &c.columns, &mut cols);
                        let mut dw = vec![T::zero(); f * k];
                        gemm_nt(f, p, k, dys, &cols, &mut dw);
                        let db: Vec<T> = dys.chunks(p.max(1)).map(|r| r.iter().copied().sum()).collect();
                        let mut dx = Vec::new();
                        if need_input {
                            let mut dcols = vec![T::zero(); k * p];
                            gemm_tn(k, f, p, c.weight.as_slice(), dys, &mut dcols);
                            dx = vec![T::zero(); in_len];
                            col2im_select(&dcols, g, &c.columns, &mut dx);
                        }
                        (dw, db, dx)
                    })
                    .collect();
                let mut weight = vec![T::zero(); f * k];
                let mut bias = vec![T::zero(); f];
                let mut dx = Vec::with_capacity(if need_input { b * in_len } else { 0 });
                for (dw, db, dxs) in per_sample {
                    add_assign(&mut weight, &dw);
                    add_assign(&mut bias, &db);
                    dx.extend(dxs);
                }
                (dx, Some(ParamGrad { weight, bias }))
            }
            Layer::Relu => {
                let dx = if need_input {
                    dy.iter()
                        .zip(x)
                        .map(|(&d, &v)| if v > T::zero() { d } else { T::zero() })
                        .collect()
                } else {
                    Vec::new()
                };
                (dx, None)
            }
            Layer::MaxPool { .. } => {
                let mut dx = vec![T::zero(); if need_input { b * in_len } else { 0 }];
                if need_input {
                    let am = cache.argmax[idx].as_ref().expect("pool cache has argmax");
                    for s in 0..b {
                        for o in 0..out_len {
                            dx[s * in_len + am[s * out_len + o] as usize] += dy[s * out_len + o];
                        }
                    }
                }
                (dx, None)
            }
            Layer::FullyConnected(fc) => {
                let mut weight = vec![T::zero(); fc.outputs * fc.inputs];
                gemm_tn(fc.outputs, b, fc.inputs, dy, x, &mut weight);
                let mut bias = vec![T::zero(); fc.outputs];
                for row in dy.chunks(fc.outputs) {
                    add_assign(&mut bias, row);
                }
                let mut dx = Vec::new();
                if need_input {
                    dx = vec![T::zero(); b * fc.inputs];
                    gemm_nn(b, fc.outputs, fc.inputs, dy, fc.weight.as_slice(), &mut dx);
                }
                (dx, Some(ParamGrad { weight, bias }))
            }
            Layer::SoftmaxXent => (dy.to_vec(), None),
        }
    }

    /// Mean loss and its gradients for one labelled batch.
    pub fn loss_and_grad(&self, batch: &Tensor4<T>, labels: &[usize]) -> Result<(T, Gradients<T>)> {
        let (logits, cache) = self.forward(batch)?;
        let loss = softmax_xent(&logits, labels)?;
        let grads = self.backward(&cache, labels)?;
        Ok((loss, grads))
    }
}

fn add_assign<T: Scalar>(acc: &mut [T], v: &[T]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn he_matrix<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<T> {
    let std = (2.0 / cols.max(1) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite std");
    Matrix::from_fn(rows, cols, |_, _| T::from_f64(normal.sample(rng)))
}

fn check_labels(logits: &Matrix<impl Scalar>, labels: &[usize]) -> Result<()> {
    if labels.len() != logits.rows() {
        return Err(Error::DimMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= logits.cols()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {} classes",
            logits.cols()
        )));
    }
    Ok(())
}

/// Mean softmax cross-entropy over the batch.
pub fn softmax_xent<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<T> {
    check_labels(logits, labels)?;
    if labels.is_empty() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
        total += lse - row[y];
    }
    Ok(total / T::from_f64(labels.len() as f64))
}

/// Gradient of [`softmax_xent`] with respect to the logits.
pub fn softmax_xent_grad<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<Matrix<T>> {
    check_labels(logits, labels)?;
    let n = T::from_f64(labels.len().max(1) as f64);
    let mut g = Matrix::zeros(logits.rows(), logits.cols());
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        for (j, e) in exps.into_iter().enumerate() {
            let onehot = if j == y { T::one() } else { T::zero() };
            g.set(i, j, (e / sum - onehot) / n);
        }
    }
    Ok(g)
}
