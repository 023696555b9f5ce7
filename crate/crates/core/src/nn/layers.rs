//! Feed-forward layers: dense, affine (batch) normalization, 1-D
//! convolution, max-pooling, and the two activations.
//!
//! Each layer caches what its backward pass needs during a train-mode
//! forward; `infer` is the cache-free read-only path. Backward passes
//! accumulate into the layer's gradient buffers.

use super::{for_each_chunk, for_each_row_pair, Matrix, Mode, Scalar};
use rand::Rng;

pub(crate) fn uniform_init<T: Scalar, R: Rng>(n: usize, fan_in: usize, rng: &mut R) -> Vec<T> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n)
        .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
        .collect()
}

/// Dot product with eight independent accumulators so the loop vectorizes;
/// the summation order is fixed, so results stay bit-reproducible.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (av, bv) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for j in 0..8 {
            acc[j] = acc[j] + av[j] * bv[j];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail = tail + a[i] * b[i];
    }
    let head = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    head + tail
}

pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

/// Fully connected layer: `y = W x + b`, weights `[out][in]` row-major.
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    w: Vec<T>,
    b: Vec<T>,
    dw: Vec<T>,
    db: Vec<T>,
    x_cache: Matrix<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            w: uniform_init(out_dim * in_dim, in_dim, rng),
            b: vec![T::zero(); out_dim],
            dw: vec![T::zero(); out_dim * in_dim],
            db: vec![T::zero(); out_dim],
            x_cache: Matrix::default(),
        }
    }

    fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        assert_eq!(x.cols(), self.in_dim, "dense input width");
        let mut y = Matrix::zeros(x.rows(), self.out_dim);
        let (w, b, in_dim) = (&self.w, &self.b, self.in_dim);
        for_each_row_pair(&mut y, |r, yr| {
            let xr = x.row(r);
            for (o, yo) in yr.iter_mut().enumerate() {
                *yo = b[o] + dot(&w[o * in_dim..(o + 1) * in_dim], xr);
            }
        });
        y
    }

    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        if mode == Mode::Train {
            self.x_cache = x.clone();
        }
        self.apply(x)
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        self.apply(x)
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let x = &self.x_cache;
        assert_eq!(dy.rows(), x.rows(), "dense backward before forward");
        assert_eq!(dy.cols(), self.out_dim);
        let (in_dim, out_dim) = (self.in_dim, self.out_dim);

        let mut dx = Matrix::zeros(x.rows(), in_dim);
        let w = &self.w;
        for_each_row_pair(&mut dx, |r, dxr| {
            let dyr = dy.row(r);
            for (o, &g) in dyr.iter().enumerate() {
                axpy(g, &w[o * in_dim..(o + 1) * in_dim], dxr);
            }
        });

        for_each_chunk(&mut self.dw, in_dim, |o, dwo| {
            for r in 0..x.rows() {
                axpy(dy.get(r, o), x.row(r), dwo);
            }
        });
        for o in 0..out_dim {
            let mut acc = T::zero();
            for r in 0..dy.rows() {
                acc = acc + dy.get(r, o);
            }
            self.db[o] = self.db[o] + acc;
        }
        dx
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(&mut self.w, &mut self.dw);
        f(&mut self.b, &mut self.db);
    }
}

/// Per-feature normalization by batch statistics followed by a learned
/// scale and shift. Running statistics (momentum 0.9, biased variance) are
/// used by the inference path.
#[derive(Debug, Clone)]
pub struct AffineNorm<T> {
    pub width: usize,
    gamma: Vec<T>,
    beta: Vec<T>,
    dgamma: Vec<T>,
    dbeta: Vec<T>,
    running_mean: Vec<T>,
    running_var: Vec<T>,
    xhat_cache: Matrix<T>,
    inv_std_cache: Vec<T>,
}

const NORM_EPS: f64 = 1e-5;
const NORM_MOMENTUM: f64 = 0.9;

impl<T: Scalar> AffineNorm<T> {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            gamma: vec![T::one(); width],
            beta: vec![T::zero(); width],
            dgamma: vec![T::zero(); width],
            dbeta: vec![T::zero(); width],
            running_mean: vec![T::zero(); width],
            running_var: vec![T::one(); width],
            xhat_cache: Matrix::default(),
            inv_std_cache: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        if mode == Mode::Eval {
            return self.infer(x);
        }
        assert_eq!(x.cols(), self.width, "normalization width");
        let rows = x.rows();
        assert!(rows >= 2, "batch variance undefined for batch size {rows}");
        let rn = T::from_f64(1.0 / rows as f64);
        let eps = T::from_f64(NORM_EPS);
        let momentum = T::from_f64(NORM_MOMENTUM);

        let mut mean = vec![T::zero(); self.width];
        let mut var = vec![T::zero(); self.width];
        for r in 0..rows {
            for (j, &v) in x.row(r).iter().enumerate() {
                mean[j] = mean[j] + v;
            }
        }
        for m in &mut mean {
            *m = *m * rn;
        }
        for r in 0..rows {
            for (j, &v) in x.row(r).iter().enumerate() {
                let d = v - mean[j];
                var[j] = var[j] + d * d;
            }
        }
        for v in &mut var {
            *v = *v * rn;
        }

        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut xhat = Matrix::zeros(rows, self.width);
        for r in 0..rows {
            let xr = x.row(r);
            let hr = xhat.row_mut(r);
            for j in 0..self.width {
                hr[j] = (xr[j] - mean[j]) * inv_std[j];
            }
        }
        let mut y = Matrix::zeros(rows, self.width);
        for r in 0..rows {
            let hr = xhat.row(r);
            let yr = y.row_mut(r);
            for j in 0..self.width {
                yr[j] = self.gamma[j] * hr[j] + self.beta[j];
            }
        }

        for j in 0..self.width {
            self.running_mean[j] =
                momentum * self.running_mean[j] + (T::one() - momentum) * mean[j];
            self.running_var[j] = momentum * self.running_var[j] + (T::one() - momentum) * var[j];
        }
        self.xhat_cache = xhat;
        self.inv_std_cache = inv_std;
        y
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        assert_eq!(x.cols(), self.width, "normalization width");
        let eps = T::from_f64(NORM_EPS);
        let mut y = Matrix::zeros(x.rows(), self.width);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let yr = y.row_mut(r);
            for j in 0..self.width {
                let inv = T::one() / (self.running_var[j] + eps).sqrt();
                yr[j] = self.gamma[j] * (xr[j] - self.running_mean[j]) * inv + self.beta[j];
            }
        }
        y
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let xhat = &self.xhat_cache;
        let rows = dy.rows();
        assert_eq!(rows, xhat.rows(), "norm backward before forward");
        let rn = T::from_f64(1.0 / rows as f64);

        let mut sum_dy = vec![T::zero(); self.width];
        let mut sum_dy_xhat = vec![T::zero(); self.width];
        for r in 0..rows {
            let dyr = dy.row(r);
            let hr = xhat.row(r);
            for j in 0..self.width {
                sum_dy[j] = sum_dy[j] + dyr[j];
                sum_dy_xhat[j] = sum_dy_xhat[j] + dyr[j] * hr[j];
            }
        }
        for j in 0..self.width {
            self.dbeta[j] = self.dbeta[j] + sum_dy[j];
            self.dgamma[j] = self.dgamma[j] + sum_dy_xhat[j];
        }

        let mut dx = Matrix::zeros(rows, self.width);
        for r in 0..rows {
            let dyr = dy.row(r);
            let hr = xhat.row(r);
            let dxr = dx.row_mut(r);
            for j in 0..self.width {
                let centered =
                    dyr[j] - rn * sum_dy[j] - hr[j] * rn * sum_dy_xhat[j];
                dxr[j] = self.gamma[j] * self.inv_std_cache[j] * centered;
            }
        }
        dx
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(&mut self.gamma, &mut self.dgamma);
        f(&mut self.beta, &mut self.dbeta);
    }

    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        f(&mut self.running_mean);
        f(&mut self.running_var);
    }
}

/// Same-length 1-D cross-correlation: kernel 4, pad (left 1, right 2), so a
/// kernel with a single 1 at tap index `pad_left` is the identity map.
/// Row layout is `[channels x length]`, channel-major.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub pad_left: usize,
    w: Vec<T>,
    b: Vec<T>,
    dw: Vec<T>,
    db: Vec<T>,
    x_cache: Matrix<T>,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new<R: Rng>(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        pad_left: usize,
        rng: &mut R,
    ) -> Self {
        assert!(pad_left < kernel);
        Self {
            in_ch,
            out_ch,
            kernel,
            pad_left,
            w: uniform_init(out_ch * in_ch * kernel, in_ch * kernel, rng),
            b: vec![T::zero(); out_ch],
            dw: vec![T::zero(); out_ch * in_ch * kernel],
            db: vec![T::zero(); out_ch],
            x_cache: Matrix::default(),
        }
    }

    fn len_of(&self, x: &Matrix<T>) -> usize {
        assert_eq!(x.cols() % self.in_ch, 0, "conv input not channel-aligned");
        x.cols() / self.in_ch
    }

    /// Overlap of output positions `l` with input positions `l + shift`
    /// inside `[0, len)`: returns `lo..hi` for the output side.
    fn window(len: usize, shift: isize) -> (usize, usize) {
        let lo = (-shift).max(0) as usize;
        let hi = (len as isize).min(len as isize - shift).max(0) as usize;
        (lo.min(hi), hi)
    }

    fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let len = self.len_of(x);
        let (in_ch, out_ch, kernel, pad) = (self.in_ch, self.out_ch, self.kernel, self.pad_left);
        let (w, b) = (&self.w, &self.b);
        let mut y = Matrix::zeros(x.rows(), out_ch * len);
        for_each_row_pair(&mut y, |r, yr| {
            let xr = x.row(r);
            for oc in 0..out_ch {
                let wk = &w[oc * in_ch * kernel..(oc + 1) * in_ch * kernel];
                let yc = &mut yr[oc * len..(oc + 1) * len];
                yc.iter_mut().for_each(|v| *v = b[oc]);
                for ic in 0..in_ch {
                    let xs = &xr[ic * len..(ic + 1) * len];
                    for (k, &wv) in wk[ic * kernel..(ic + 1) * kernel].iter().enumerate() {
                        let shift = k as isize - pad as isize;
                        let (lo, hi) = Self::window(len, shift);
                        if lo < hi {
                            let src = (lo as isize + shift) as usize;
                            axpy(wv, &xs[src..src + hi - lo], &mut yc[lo..hi]);
                        }
                    }
                }
            }
        });
        y
    }

    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        if mode == Mode::Train {
            self.x_cache = x.clone();
        }
        self.apply(x)
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        self.apply(x)
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let x = self.x_cache.clone();
        let len = self.len_of(&x);
        let (in_ch, out_ch, kernel, pad) = (self.in_ch, self.out_ch, self.kernel, self.pad_left);
        assert_eq!(dy.cols(), out_ch * len, "conv backward width");

        let w = &self.w;
        let mut dx = Matrix::zeros(x.rows(), in_ch * len);
        for_each_row_pair(&mut dx, |r, dxr| {
            let dyr = dy.row(r);
            for oc in 0..out_ch {
                let wk = &w[oc * in_ch * kernel..(oc + 1) * in_ch * kernel];
                let dyc = &dyr[oc * len..(oc + 1) * len];
                for ic in 0..in_ch {
                    let dxs = &mut dxr[ic * len..(ic + 1) * len];
                    for (k, &wv) in wk[ic * kernel..(ic + 1) * kernel].iter().enumerate() {
                        let shift = k as isize - pad as isize;
                        let (lo, hi) = Self::window(len, shift);
                        if lo < hi {
                            let src = (lo as isize + shift) as usize;
                            axpy(wv, &dyc[lo..hi], &mut dxs[src..src + hi - lo]);
                        }
                    }
                }
            }
        });

        for_each_chunk(&mut self.dw, in_ch * kernel, |oc, dwo| {
            for r in 0..x.rows() {
                let xr = x.row(r);
                let dyc = &dy.row(r)[oc * len..(oc + 1) * len];
                for ic in 0..in_ch {
                    let xs = &xr[ic * len..(ic + 1) * len];
                    let dws = &mut dwo[ic * kernel..(ic + 1) * kernel];
                    for (k, dwk) in dws.iter_mut().enumerate() {
                        let shift = k as isize - pad as isize;
                        let (lo, hi) = Self::window(len, shift);
                        if lo < hi {
                            let src = (lo as isize + shift) as usize;
                            *dwk = *dwk + dot(&dyc[lo..hi], &xs[src..src + hi - lo]);
                        }
                    }
                }
            }
        });
        for oc in 0..out_ch {
            let mut acc = T::zero();
            for r in 0..dy.rows() {
                for &g in &dy.row(r)[oc * len..(oc + 1) * len] {
                    acc = acc + g;
                }
            }
            self.db[oc] = self.db[oc] + acc;
        }
        dx
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(&mut self.w, &mut self.dw);
        f(&mut self.b, &mut self.db);
    }
}

/// Pairwise max over the spatial axis (kernel 2, stride 2) per channel.
/// Backward routes each upstream gradient to the argmax position, first
/// element on ties.
#[derive(Debug, Clone)]
pub struct MaxPool1d<T> {
    pub channels: usize,
    argmax: Vec<u32>,
    in_cols: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> MaxPool1d<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            argmax: Vec::new(),
            in_cols: 0,
            _marker: std::marker::PhantomData,
        }
    }

    fn pool(&self, x: &Matrix<T>, mut record: Option<&mut Vec<u32>>) -> Matrix<T> {
        assert_eq!(x.cols() % self.channels, 0);
        let len = x.cols() / self.channels;
        assert!(len % 2 == 0, "max-pool needs an even spatial length, got {len}");
        let half = len / 2;
        let mut y = Matrix::zeros(x.rows(), self.channels * half);
        if let Some(rec) = record.as_deref_mut() {
            rec.clear();
            rec.resize(x.rows() * self.channels * half, 0);
        }
        for r in 0..x.rows() {
            let xr = x.row(r);
            for c in 0..self.channels {
                for t in 0..half {
                    let i0 = c * len + 2 * t;
                    let (v, arg) = if xr[i0 + 1] > xr[i0] {
                        (xr[i0 + 1], i0 + 1)
                    } else {
                        (xr[i0], i0)
                    };
                    y.set(r, c * half + t, v);
                    if let Some(rec) = record.as_deref_mut() {
                        rec[r * self.channels * half + c * half + t] = arg as u32;
                    }
                }
            }
        }
        y
    }

    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        self.in_cols = x.cols();
        if mode == Mode::Train {
            let mut rec = std::mem::take(&mut self.argmax);
            let y = self.pool(x, Some(&mut rec));
            self.argmax = rec;
            y
        } else {
            self.pool(x, None)
        }
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        self.pool(x, None)
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let mut dx = Matrix::zeros(dy.rows(), self.in_cols);
        let out_cols = dy.cols();
        for r in 0..dy.rows() {
            for c in 0..out_cols {
                let src = self.argmax[r * out_cols + c] as usize;
                let v = dx.get(r, src) + dy.get(r, c);
                dx.set(r, src, v);
            }
        }
        dx
    }
}

/// Elementwise `max(0, x)`.
#[derive(Debug, Clone, Default)]
pub struct Relu<T> {
    mask: Vec<bool>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Relu<T> {
    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        if mode == Mode::Train {
            self.mask = x.data().iter().map(|&v| v > T::zero()).collect();
        }
        self.infer(x)
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut y = x.clone();
        for v in y.data_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        y
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let mut dx = dy.clone();
        for (v, &keep) in dx.data_mut().iter_mut().zip(&self.mask) {
            if !keep {
                *v = T::zero();
            }
        }
        dx
    }
}

/// Elementwise logistic function.
#[derive(Debug, Clone, Default)]
pub struct Sigmoid<T> {
    y_cache: Vec<T>,
}

impl<T: Scalar> Sigmoid<T> {
    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        let y = self.infer(x);
        if mode == Mode::Train {
            self.y_cache = y.data().to_vec();
        }
        y
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut y = x.clone();
        for v in y.data_mut() {
            *v = T::one() / (T::one() + (-*v).exp());
        }
        y
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Matrix<T> {
        let mut dx = dy.clone();
        for (g, &y) in dx.data_mut().iter_mut().zip(&self.y_cache) {
            *g = *g * y * (T::one() - y);
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamDomain};

    fn rng() -> rand_chacha::ChaCha8Rng {
        stream(77, StreamDomain::Init, 1)
    }

    #[test]
    fn dense_identity_passthrough() {
        let mut d = Dense::<f64>::new(3, 3, &mut rng());
        d.w = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        d.b = vec![0.0; 3];
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.25]);
        assert_eq!(d.forward(&x, Mode::Train), x);
    }

    #[test]
    fn dense_scalar_case_by_hand() {
        // w = 2, b = 1, x = 3 -> y = 7; dy = 1 -> dw = 3, db = 1, dx = 2.
        let mut d = Dense::<f64>::new(1, 1, &mut rng());
        d.w = vec![2.0];
        d.b = vec![1.0];
        let x = Matrix::from_vec(1, 1, vec![3.0]);
        let y = d.forward(&x, Mode::Train);
        assert_eq!(y.get(0, 0), 7.0);
        let dx = d.backward(&Matrix::from_vec(1, 1, vec![1.0]));
        assert_eq!(dx.get(0, 0), 2.0);
        let mut grads = Vec::new();
        d.visit_params_mut(&mut |_, g| grads.push(g.to_vec()));
        assert_eq!(grads[0], vec![3.0]);
        assert_eq!(grads[1], vec![1.0]);
    }

    #[test]
    fn conv_zero_kernels_broadcast_bias() {
        let mut c = Conv1d::<f64>::new(1, 2, 4, 1, &mut rng());
        c.w.iter_mut().for_each(|v| *v = 0.0);
        c.b = vec![0.5, -1.5];
        let x = Matrix::from_vec(1, 8, vec![1.0; 8]);
        let y = c.forward(&x, Mode::Train);
        assert_eq!(&y.data()[..8], &[0.5; 8]);
        assert_eq!(&y.data()[8..], &[-1.5; 8]);
    }

    #[test]
    fn conv_delta_kernel_at_pad_tap_is_identity() {
        let mut c = Conv1d::<f64>::new(1, 1, 4, 1, &mut rng());
        c.w = vec![0.0, 1.0, 0.0, 0.0];
        c.b = vec![0.0];
        let x = Matrix::from_vec(1, 8, (0..8).map(|i| i as f64 * 0.3 - 1.0).collect());
        assert_eq!(c.forward(&x, Mode::Train), x);
    }

    #[test]
    fn maxpool_definition_and_tie_rule() {
        let mut p = MaxPool1d::<f64>::new(1);
        let x = Matrix::from_vec(1, 4, vec![1.0, 3.0, 2.0, 2.0]);
        let y = p.forward(&x, Mode::Train);
        assert_eq!(y.data(), &[3.0, 2.0]);
        let dx = p.backward(&Matrix::from_vec(1, 2, vec![1.0, 1.0]));
        assert_eq!(dx.data(), &[0.0, 1.0, 1.0, 0.0]);

        // Constant input: the first element of each pair wins.
        let x = Matrix::from_vec(1, 4, vec![5.0; 4]);
        let _ = p.forward(&x, Mode::Train);
        let dx = p.backward(&Matrix::from_vec(1, 2, vec![1.0, 2.0]));
        assert_eq!(dx.data(), &[1.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn maxpool_routes_all_gradient() {
        let mut p = MaxPool1d::<f64>::new(2);
        let mut r = rng();
        use rand::Rng;
        let x = Matrix::from_vec(3, 16, (0..48).map(|_| r.gen_range(-1.0..1.0)).collect());
        let _ = p.forward(&x, Mode::Train);
        let dy = Matrix::from_vec(3, 8, (0..24).map(|_| r.gen_range(-1.0..1.0)).collect());
        let dx = p.backward(&dy);
        let sum_dy: f64 = dy.data().iter().sum();
        let sum_dx: f64 = dx.data().iter().sum();
        assert!((sum_dy - sum_dx).abs() < 1e-12);
    }

    #[test]
    fn norm_standardizes_batch() {
        let mut n = AffineNorm::<f64>::new(2);
        let x = Matrix::from_vec(4, 2, vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
        let y = n.forward(&x, Mode::Train);
        for j in 0..2 {
            let mean: f64 = (0..4).map(|r| y.get(r, j)).sum::<f64>() / 4.0;
            let var: f64 = (0..4).map(|r| (y.get(r, j) - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
        }
    }

    #[test]
    fn norm_identity_on_standardized_input() {
        let mut n = AffineNorm::<f64>::new(1);
        // Zero-mean, unit-variance batch.
        let x = Matrix::from_vec(4, 1, vec![-1.0, 1.0, -1.0, 1.0]);
        let y = n.forward(&x, Mode::Train);
        for r in 0..4 {
            assert!((y.get(r, 0) - x.get(r, 0)).abs() < 1e-4);
        }
    }

    #[test]
    fn sigmoid_and_relu_shapes() {
        let mut s = Sigmoid::<f64>::default();
        let y = s.forward(&Matrix::from_vec(1, 3, vec![-100.0, 0.0, 100.0]), Mode::Train);
        assert!(y.get(0, 0) < 1e-6);
        assert_eq!(y.get(0, 1), 0.5);
        assert!(y.get(0, 2) > 1.0 - 1e-6);

        let mut r = Relu::<f64>::default();
        let y = r.forward(&Matrix::from_vec(1, 3, vec![-1.0, 0.0, 2.0]), Mode::Train);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }
}
