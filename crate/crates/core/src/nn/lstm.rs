//! A single LSTM cell unrolled over a fixed number of steps.
//!
//! The cell receives the full input vector at every step (input width equals
//! the code length), starts from zero hidden and cell state, and exposes the
//! final hidden state. Gate order in the stacked weight rows is
//! `input, forget, candidate, output`; there are two bias vectors per gate
//! stack. Backward is full backpropagation through time.

use super::layers::{dot, uniform_init};
use super::{for_each_chunk, for_each_row_pair, Matrix, Mode, Scalar};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Lstm<T> {
    pub in_dim: usize,
    pub hidden: usize,
    pub steps: usize,
    w_ih: Vec<T>, // [4H][in]
    w_hh: Vec<T>, // [4H][H]
    b_ih: Vec<T>, // [4H]
    b_hh: Vec<T>, // [4H]
    dw_ih: Vec<T>,
    dw_hh: Vec<T>,
    db_ih: Vec<T>,
    db_hh: Vec<T>,
    cache: Option<Cache<T>>,
}

#[derive(Debug, Clone)]
struct Cache<T> {
    x: Matrix<T>,
    /// Post-activation gates per step: [B x 4H].
    gates: Vec<Matrix<T>>,
    /// Cell state per step: [B x H].
    cells: Vec<Matrix<T>>,
    /// Hidden state per step, index 0 is the initial zero state: [B x H].
    hiddens: Vec<Matrix<T>>,
}

impl<T: Scalar> Lstm<T> {
    pub fn new<R: Rng>(in_dim: usize, hidden: usize, steps: usize, rng: &mut R) -> Self {
        let mut cell = Self {
            in_dim,
            hidden,
            steps,
            w_ih: uniform_init(4 * hidden * in_dim, in_dim, rng),
            w_hh: uniform_init(4 * hidden * hidden, hidden, rng),
            b_ih: vec![T::zero(); 4 * hidden],
            b_hh: vec![T::zero(); 4 * hidden],
            dw_ih: vec![T::zero(); 4 * hidden * in_dim],
            dw_hh: vec![T::zero(); 4 * hidden * hidden],
            db_ih: vec![T::zero(); 4 * hidden],
            db_hh: vec![T::zero(); 4 * hidden],
            cache: None,
        };
        // Forget-gate bias starts at one so early training does not flush
        // the cell state.
        for j in hidden..2 * hidden {
            cell.b_ih[j] = T::one();
        }
        cell
    }

    /// One step: `x W_ih^T + h W_hh^T + b_ih + b_hh`, gate nonlinearities
    /// applied in place.
    fn step_gates(&self, x: &Matrix<T>, h: &Matrix<T>) -> Matrix<T> {
        let (hdim, in_dim) = (self.hidden, self.in_dim);
        let mut gates = Matrix::zeros(x.rows(), 4 * hdim);
        let (w_ih, w_hh, b_ih, b_hh) = (&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh);
        for_each_row_pair(&mut gates, |r, gr| {
            let xr = x.row(r);
            let hr = h.row(r);
            for (j, gv) in gr.iter_mut().enumerate() {
                let acc = b_ih[j]
                    + b_hh[j]
                    + dot(&w_ih[j * in_dim..(j + 1) * in_dim], xr)
                    + dot(&w_hh[j * hdim..(j + 1) * hdim], hr);
                // input, forget, output: sigmoid; candidate: tanh.
                *gv = if j / hdim == 2 {
                    acc.tanh()
                } else {
                    T::one() / (T::one() + (-acc).exp())
                };
            }
        });
        gates
    }

    fn run(&self, x: &Matrix<T>, mut record: Option<&mut Cache<T>>) -> Matrix<T> {
        assert_eq!(x.cols(), self.in_dim, "lstm input width");
        let rows = x.rows();
        let hdim = self.hidden;
        let mut h = Matrix::zeros(rows, hdim);
        let mut c = Matrix::zeros(rows, hdim);
        if let Some(cache) = record.as_deref_mut() {
            cache.hiddens.push(h.clone());
        }
        for _ in 0..self.steps {
            let gates = self.step_gates(x, &h);
            let mut new_c = Matrix::zeros(rows, hdim);
            let mut new_h = Matrix::zeros(rows, hdim);
            for r in 0..rows {
                let gr = gates.row(r);
                let cr = c.row(r);
                for j in 0..hdim {
                    let (ig, fg, gg, og) =
                        (gr[j], gr[hdim + j], gr[2 * hdim + j], gr[3 * hdim + j]);
                    let cv = fg * cr[j] + ig * gg;
                    new_c.set(r, j, cv);
                    new_h.set(r, j, og * cv.tanh());
                }
            }
            if let Some(cache) = record.as_deref_mut() {
                cache.gates.push(gates);
                cache.cells.push(new_c.clone());
                cache.hiddens.push(new_h.clone());
            }
            h = new_h;
            c = new_c;
        }
        h
    }

    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Matrix<T> {
        if mode == Mode::Train {
            let mut cache = Cache {
                x: x.clone(),
                gates: Vec::with_capacity(self.steps),
                cells: Vec::with_capacity(self.steps),
                hiddens: Vec::with_capacity(self.steps + 1),
            };
            let h = self.run(x, Some(&mut cache));
            self.cache = Some(cache);
            h
        } else {
            self.run(x, None)
        }
    }

    pub fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        self.run(x, None)
    }

    pub fn backward(&mut self, dh_final: &Matrix<T>) -> Matrix<T> {
        let cache = self.cache.take().expect("lstm backward before forward");
        let (hdim, in_dim) = (self.hidden, self.in_dim);
        let rows = dh_final.rows();
        assert_eq!(dh_final.cols(), hdim, "lstm upstream gradient width");

        let zero_c: Matrix<T> = Matrix::zeros(rows, hdim);
        let mut dh = dh_final.clone();
        // dc accumulates the carry into each earlier step.
        let mut dc: Matrix<T> = Matrix::zeros(rows, hdim);
        let mut dx: Matrix<T> = Matrix::zeros(rows, in_dim);

        for t in (0..self.steps).rev() {
            let gates = &cache.gates[t];
            let c_t = &cache.cells[t];
            let c_prev = if t == 0 { &zero_c } else { &cache.cells[t - 1] };
            let h_prev = &cache.hiddens[t];

            // Gate pre-activation gradients; dc is rewritten in place with
            // the carry for step t-1.
            let mut dpre: Matrix<T> = Matrix::zeros(rows, 4 * hdim);
            for r in 0..rows {
                let gr = gates.row(r);
                let dhr = dh.row(r);
                let ctr = c_t.row(r);
                let cpr = c_prev.row(r);
                let dpr = dpre.row_mut(r);
                let dcr = dc.row_mut(r);
                for j in 0..hdim {
                    let (ig, fg, gg, og) =
                        (gr[j], gr[hdim + j], gr[2 * hdim + j], gr[3 * hdim + j]);
                    let tc = ctr[j].tanh();
                    let dcv = dcr[j] + dhr[j] * og * (T::one() - tc * tc);
                    dpr[j] = dcv * gg * ig * (T::one() - ig);
                    dpr[hdim + j] = dcv * cpr[j] * fg * (T::one() - fg);
                    dpr[2 * hdim + j] = dcv * ig * (T::one() - gg * gg);
                    dpr[3 * hdim + j] = dhr[j] * tc * og * (T::one() - og);
                    dcr[j] = dcv * fg;
                }
            }

            // Parameter gradients: each weight row is owned by one worker,
            // batch and time summed in fixed order.
            let x = &cache.x;
            for_each_chunk(&mut self.dw_ih, in_dim, |j, dwj| {
                for r in 0..rows {
                    let g = dpre.get(r, j);
                    for (d, &xv) in dwj.iter_mut().zip(x.row(r)) {
                        *d = *d + g * xv;
                    }
                }
            });
            for_each_chunk(&mut self.dw_hh, hdim, |j, dwj| {
                for r in 0..rows {
                    let g = dpre.get(r, j);
                    for (d, &hv) in dwj.iter_mut().zip(h_prev.row(r)) {
                        *d = *d + g * hv;
                    }
                }
            });
            for j in 0..4 * hdim {
                let mut acc = T::zero();
                for r in 0..rows {
                    acc = acc + dpre.get(r, j);
                }
                // The two bias vectors enter as a sum, so they receive
                // identical gradients.
                self.db_ih[j] = self.db_ih[j] + acc;
                self.db_hh[j] = self.db_hh[j] + acc;
            }

            // dh_{t-1} = dpre W_hh ; dx += dpre W_ih.
            let w_hh = &self.w_hh;
            let mut dh_prev: Matrix<T> = Matrix::zeros(rows, hdim);
            for_each_row_pair(&mut dh_prev, |r, out| {
                for (j, &g) in dpre.row(r).iter().enumerate() {
                    for (o, &wv) in out.iter_mut().zip(&w_hh[j * hdim..(j + 1) * hdim]) {
                        *o = *o + g * wv;
                    }
                }
            });
            let w_ih = &self.w_ih;
            for_each_row_pair(&mut dx, |r, out| {
                for (j, &g) in dpre.row(r).iter().enumerate() {
                    for (o, &wv) in out.iter_mut().zip(&w_ih[j * in_dim..(j + 1) * in_dim]) {
                        *o = *o + g * wv;
                    }
                }
            });
            dh = dh_prev;
        }
        dx
    }

    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        f(&mut self.w_ih, &mut self.dw_ih);
        f(&mut self.w_hh, &mut self.dw_hh);
        f(&mut self.b_ih, &mut self.db_ih);
        f(&mut self.b_hh, &mut self.db_hh);
    }
}
