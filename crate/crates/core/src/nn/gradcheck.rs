//! Central-difference verification of analytic gradients.
//!
//! Both probes clone the network per evaluation, so train-mode side effects
//! (running statistics) cannot leak between the two loss evaluations of a
//! central difference. Run these in `f64`; the finite-difference noise floor
//! at `h = 1e-5` is far below the tolerances the tests assert.

use super::loss::bce_loss;
use super::{Matrix, Network};
use rand::seq::SliceRandom;
use rand::Rng;

/// Relative error with a floor that keeps near-zero gradient pairs from
/// dominating: `|a - n| / max(|a| + |n|, 1e-3)`.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-3)
}

fn total_params(net: &Network<f64>) -> usize {
    super::param_count(net)
}

/// Probe indices: `probes` distinct flat parameter positions, or every
/// position when `probes` covers them all.
fn pick_probes<R: Rng>(total: usize, probes: usize, rng: &mut R) -> Vec<usize> {
    if probes >= total {
        return (0..total).collect();
    }
    let mut all: Vec<usize> = (0..total).collect();
    all.shuffle(rng);
    all.truncate(probes);
    all.sort_unstable();
    all
}

fn get_param(net: &mut Network<f64>, flat: usize) -> f64 {
    let mut idx = 0usize;
    let mut out = f64::NAN;
    net.visit_params_mut(&mut |p, _| {
        if flat >= idx && flat < idx + p.len() {
            out = p[flat - idx];
        }
        idx += p.len();
    });
    out
}

fn set_param(net: &mut Network<f64>, flat: usize, value: f64) {
    let mut idx = 0usize;
    net.visit_params_mut(&mut |p, _| {
        if flat >= idx && flat < idx + p.len() {
            p[flat - idx] = value;
        }
        idx += p.len();
    });
}

fn flat_grads(net: &mut Network<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    net.visit_params_mut(&mut |_, g| out.extend_from_slice(g));
    out
}

/// Worst relative error between analytic and central-difference gradients
/// for a loss `L(theta) = loss_fn(forward(x))`.
fn check<L>(
    net: &Network<f64>,
    x: &Matrix<f64>,
    loss_fn: &L,
    probes: usize,
    h: f64,
    seed: u64,
) -> f64
where
    L: Fn(&Matrix<f64>) -> (f64, Matrix<f64>),
{
    // Analytic gradients from one clean pass.
    let mut base = net.clone();
    base.zero_grads();
    let y = base.forward_train(x).expect("forward for gradient check");
    let (_, dy) = loss_fn(&y);
    base.backward(&dy);
    let analytic = flat_grads(&mut base);

    let mut rng = crate::rng::stream(seed, crate::rng::StreamDomain::Init, 7);
    let total = total_params(net);
    let mut worst = 0.0f64;
    for flat in pick_probes(total, probes, &mut rng) {
        let probe = |delta: f64| -> f64 {
            let mut n = net.clone();
            let v = get_param(&mut n, flat);
            set_param(&mut n, flat, v + delta);
            let y = n.forward_train(x).expect("forward for gradient check");
            loss_fn(&y).0
        };
        let numeric = (probe(h) - probe(-h)) / (2.0 * h);
        worst = worst.max(relative_error(analytic[flat], numeric));
    }
    worst
}

/// Gradient check through the mean-BCE head: returns the max relative error
/// over `probes` randomly chosen parameters.
pub fn grad_check_bce(
    net: &Network<f64>,
    x: &Matrix<f64>,
    labels: &Matrix<f64>,
    probes: usize,
    h: f64,
    seed: u64,
) -> f64 {
    check(net, x, &|y| bce_loss(y, labels), probes, h, seed)
}

/// Gradient check of a layer pipeline through the linear functional
/// `L = sum(c . y)`, which isolates the layer Jacobian from any loss-side
/// nonlinearity.
pub fn grad_check_linear(
    net: &Network<f64>,
    x: &Matrix<f64>,
    weights: &Matrix<f64>,
    probes: usize,
    h: f64,
    seed: u64,
) -> f64 {
    let loss = |y: &Matrix<f64>| -> (f64, Matrix<f64>) {
        assert_eq!(y.rows(), weights.rows());
        assert_eq!(y.cols(), weights.cols());
        let l = y
            .data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a * b)
            .sum();
        (l, weights.clone())
    };
    check(net, x, &loss, probes, h, seed)
}
