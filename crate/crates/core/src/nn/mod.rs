//! A small from-scratch neural-network stack.
//!
//! A [`Network`] is an ordered pipeline of typed layers (dense, affine
//! normalization, 1-D convolution, max-pooling, LSTM, activations) with
//! hand-written forward and backward passes. There is no general autodiff:
//! the graph set is exactly the three decoder architectures produced by
//! [`build_decoder_network`]. Everything is generic over the scalar type so
//! training runs in `f32` while gradient verification runs in `f64`.
//!
//! Batches are row-major matrices, one sample per row. Convolutional layers
//! interpret a row as `[channels x length]`, channel-major; the flatten
//! between the convolutional stack and the dense head is therefore a no-op.
//!
//! Parallelism is over batch rows (or output rows for weight gradients), so
//! each output element is produced by exactly one thread with a fixed inner
//! summation order: results are bit-identical for any worker count.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod lstm;

use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use layers::{AffineNorm, Conv1d, Dense, MaxPool1d, Relu, Sigmoid};
pub use loss::bce_loss;
pub use lstm::Lstm;

/// Scalar type for network arithmetic.
pub trait Scalar:
    Float + Send + Sync + Default + std::fmt::Debug + std::iter::Sum + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NnError {
    #[error("affine normalization needs batch size >= 2 in train mode, got {0}")]
    BatchTooSmall(usize),
    #[error("input has {got} columns, network expects {expected}")]
    InputWidthMismatch { got: usize, expected: usize },
    #[error("unsupported architecture for N = {n}: {why}")]
    UnsupportedShape { n: usize, why: String },
}

/// Row-major batch of samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape does not match data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }
}

/// Row-parallel map: each output row is computed by exactly one worker, so
/// the result does not depend on scheduling. Small batches run inline.
pub(crate) fn for_each_row_pair<T, F>(out: &mut Matrix<T>, f: F)
where
    T: Scalar,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let cols = out.cols;
    if out.rows < 8 {
        for (r, row) in out.data.chunks_mut(cols).enumerate() {
            f(r, row);
        }
    } else {
        out.data
            .par_chunks_mut(cols)
            .with_min_len(16)
            .enumerate()
            .for_each(|(r, row)| f(r, row));
    }
}

/// Parallel update of weight-gradient rows; same determinism argument.
pub(crate) fn for_each_chunk<T, F>(buf: &mut [T], chunk: usize, f: F)
where
    T: Scalar,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if buf.len() / chunk.max(1) < 8 {
        for (i, c) in buf.chunks_mut(chunk).enumerate() {
            f(i, c);
        }
    } else {
        buf.par_chunks_mut(chunk)
            .with_min_len(8)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Cache intermediates for backward, use batch statistics.
    Train,
    /// No caching, use running statistics.
    Eval,
}

/// Decoder architecture tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchTag {
    Mlp,
    Cnn,
    Rnn,
}

impl std::fmt::Display for ArchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ArchTag::Mlp => "mlp",
            ArchTag::Cnn => "cnn",
            ArchTag::Rnn => "rnn",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ArchTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(ArchTag::Mlp),
            "cnn" => Ok(ArchTag::Cnn),
            "rnn" | "lstm" => Ok(ArchTag::Rnn),
            other => Err(format!("unknown architecture '{other}'")),
        }
    }
}

/// One typed layer of the pipeline.
#[derive(Debug, Clone)]
pub enum Layer<T: Scalar> {
    Dense(Dense<T>),
    AffineNorm(AffineNorm<T>),
    Conv1d(Conv1d<T>),
    MaxPool1d(MaxPool1d<T>),
    Relu(Relu<T>),
    Sigmoid(Sigmoid<T>),
    Lstm(Lstm<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        match self {
            Layer::Dense(l) => l.forward(x, mode),
            Layer::AffineNorm(l) => l.forward(x, mode),
            Layer::Conv1d(l) => l.forward(x, mode),
            Layer::MaxPool1d(l) => l.forward(x, mode),
            Layer::Relu(l) => l.forward(x, mode),
            Layer::Sigmoid(l) => l.forward(x, mode),
            Layer::Lstm(l) => l.forward(x, mode),
        }
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        match self {
            Layer::Dense(l) => l.infer(x),
            Layer::AffineNorm(l) => l.infer(x),
            Layer::Conv1d(l) => l.infer(x),
            Layer::MaxPool1d(l) => l.infer(x),
            Layer::Relu(l) => l.infer(x),
            Layer::Sigmoid(l) => l.infer(x),
            Layer::Lstm(l) => l.infer(x),
        }
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        match self {
            Layer::Dense(l) => l.backward(dy),
            Layer::AffineNorm(l) => l.backward(dy),
            Layer::Conv1d(l) => l.backward(dy),
            Layer::MaxPool1d(l) => l.backward(dy),
            Layer::Relu(l) => l.backward(dy),
            Layer::Sigmoid(l) => l.backward(dy),
            Layer::Lstm(l) => l.backward(dy),
        }
    }

    /// Visit `(params, grads)` arrays in a fixed, documented order.
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        match self {
            Layer::Dense(l) => l.visit_params_mut(f),
            Layer::AffineNorm(l) => l.visit_params_mut(f),
            Layer::Conv1d(l) => l.visit_params_mut(f),
            Layer::Lstm(l) => l.visit_params_mut(f),
            Layer::MaxPool1d(_) | Layer::Relu(_) | Layer::Sigmoid(_) => {}
        }
    }

    /// Visit non-trainable state arrays (running statistics).
    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        if let Layer::AffineNorm(l) = self {
            l.visit_state_mut(f)
        }
    }

    pub fn zero_grads(&mut self) {
        self.visit_params_mut(&mut |_, g| g.iter_mut().for_each(|v| *v = T::zero()));
    }
}

/// An ordered feed-forward pipeline with a fixed input/output width.
#[derive(Debug, Clone)]
pub struct Network<T: Scalar> {
    pub arch: ArchTag,
    pub input_len: usize,
    pub output_len: usize,
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Training forward pass; caches intermediates for [`Network::backward`].
    pub fn forward_train(&mut self, x: &Matrix<T>) -> Result<Matrix<T>, NnError> {
        if x.cols() != self.input_len {
            return Err(NnError::InputWidthMismatch {
                got: x.cols(),
                expected: self.input_len,
            });
        }
        if x.rows() < 2
            && self
                .layers
                .iter()
                .any(|l| matches!(l, Layer::AffineNorm(_)))
        {
            return Err(NnError::BatchTooSmall(x.rows()));
        }
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, Mode::Train);
        }
        Ok(cur)
    }

    /// Deterministic inference pass: read-only, shareable across workers.
    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        assert_eq!(x.cols(), self.input_len, "input width mismatch");
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.infer(&cur);
        }
        cur
    }

    /// Backpropagate from the loss gradient with respect to the output.
    /// Parameter gradients accumulate until [`Network::zero_grads`].
    pub fn backward(&mut self, dloss_dout: &Matrix<T>) {
        let mut grad = dloss_dout.clone();
        for layer in self.layers.iter_mut().rev() {
            grad = layer.backward(&grad);
        }
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        for layer in &mut self.layers {
            layer.visit_params_mut(f);
        }
    }

    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        for layer in &mut self.layers {
            layer.visit_state_mut(f);
        }
    }

    /// Flattened copies of all parameter arrays, in visit order.
    pub fn param_arrays(&mut self) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        self.visit_params_mut(&mut |p, _| out.push(p.to_vec()));
        out
    }
}

/// Total trainable parameter count (weights, biases, scale/shift).
pub fn param_count<T: Scalar>(net: &Network<T>) -> usize {
    // Visiting needs &mut; count from a clone to keep the signature shared.
    let mut n = 0usize;
    let mut net = net.clone();
    net.visit_params_mut(&mut |p, _| n += p.len());
    n
}

/// Build one of the three decoder architectures.
///
/// * MLP: three `Dense(128)` blocks, each followed by affine normalization
///   and ReLU, then `Dense(K)` + sigmoid.
/// * CNN: three blocks of same-length 1-D convolution (kernel 4; 128, 64,
///   16 feature maps) + max-pool(2,2) + ReLU, then `Dense(K)` + sigmoid on
///   the flattened maps.
/// * RNN: one LSTM cell (hidden 90, dual bias vectors) fed the whole input
///   vector at each of N steps, then `Dense(K)` + sigmoid on the final
///   hidden state.
///
/// Weights are drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
/// seeded by `seed`; biases start at zero except the LSTM forget gate (1).
pub fn build_decoder_network<T: Scalar>(
    arch: ArchTag,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<Network<T>, NnError> {
    let mut rng = crate::rng::stream(seed, crate::rng::StreamDomain::Init, 0);
    let layers = match arch {
        ArchTag::Mlp => vec![
            Layer::Dense(Dense::new(n, 128, &mut rng)),
            Layer::AffineNorm(AffineNorm::new(128)),
            Layer::Relu(Relu::default()),
            Layer::Dense(Dense::new(128, 128, &mut rng)),
            Layer::AffineNorm(AffineNorm::new(128)),
            Layer::Relu(Relu::default()),
            Layer::Dense(Dense::new(128, 128, &mut rng)),
            Layer::AffineNorm(AffineNorm::new(128)),
            Layer::Relu(Relu::default()),
            Layer::Dense(Dense::new(128, k, &mut rng)),
            Layer::Sigmoid(Sigmoid::default()),
        ],
        ArchTag::Cnn => {
            if n % 8 != 0 {
                return Err(NnError::UnsupportedShape {
                    n,
                    why: "three pooling halvings need N divisible by 8".into(),
                });
            }
            vec![
                Layer::Conv1d(Conv1d::new(1, 128, 4, 1, &mut rng)),
                Layer::MaxPool1d(MaxPool1d::new(128)),
                Layer::Relu(Relu::default()),
                Layer::Conv1d(Conv1d::new(128, 64, 4, 1, &mut rng)),
                Layer::MaxPool1d(MaxPool1d::new(64)),
                Layer::Relu(Relu::default()),
                Layer::Conv1d(Conv1d::new(64, 16, 4, 1, &mut rng)),
                Layer::MaxPool1d(MaxPool1d::new(16)),
                Layer::Relu(Relu::default()),
                // Row layout is already [channels x length] flattened.
                Layer::Dense(Dense::new(16 * n / 8, k, &mut rng)),
                Layer::Sigmoid(Sigmoid::default()),
            ]
        }
        ArchTag::Rnn => vec![
            Layer::Lstm(Lstm::new(n, 90, n, &mut rng)),
            Layer::Dense(Dense::new(90, k, &mut rng)),
            Layer::Sigmoid(Sigmoid::default()),
        ],
    };
    Ok(Network {
        arch,
        input_len: n,
        output_len: k,
        layers,
    })
}
