//! Adam optimizer with bias correction.

use super::{Network, Scalar};

/// Per-network optimizer state: first and second moments in parameter-array
/// visit order, plus the step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &mut Network<T>, lr: f64) -> Self {
        let mut m = Vec::new();
        net.visit_params_mut(&mut |p, _| m.push(vec![T::zero(); p.len()]));
        let v = m.clone();
        Self {
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m,
            v,
        }
    }
}

/// One Adam update from the accumulated gradients. Gradients are left
/// untouched; callers zero them per batch.
pub fn adam_step<T: Scalar>(net: &mut Network<T>, state: &mut AdamState<T>) {
    state.t += 1;
    let b1 = T::from_f64(state.beta1);
    let b2 = T::from_f64(state.beta2);
    let one_m_b1 = T::from_f64(1.0 - state.beta1);
    let one_m_b2 = T::from_f64(1.0 - state.beta2);
    let eps = T::from_f64(state.eps);
    // Fold both bias corrections into the step size.
    let lr_t = state.lr * (1.0 - state.beta2.powi(state.t as i32)).sqrt()
        / (1.0 - state.beta1.powi(state.t as i32));
    let lr_t = T::from_f64(lr_t);

    let mut slot = 0usize;
    let (ms, vs) = (&mut state.m, &mut state.v);
    net.visit_params_mut(&mut |p, g| {
        let m = &mut ms[slot];
        let v = &mut vs[slot];
        assert_eq!(p.len(), m.len(), "optimizer state shape mismatch");
        for i in 0..p.len() {
            m[i] = b1 * m[i] + one_m_b1 * g[i];
            v[i] = b2 * v[i] + one_m_b2 * g[i] * g[i];
            p[i] = p[i] - lr_t * m[i] / (v[i].sqrt() + eps);
        }
        slot += 1;
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_decoder_network, ArchTag, Dense, Layer, Network};
    use crate::rng::{stream, StreamDomain};

    fn scalar_net(w: f64) -> Network<f64> {
        let mut rng = stream(0, StreamDomain::Init, 0);
        let mut dense = Dense::new(1, 1, &mut rng);
        dense.visit_params_mut(&mut |p, _| {
            if p.len() == 1 {
                p[0] = w;
            }
        });
        Network {
            arch: ArchTag::Mlp,
            input_len: 1,
            output_len: 1,
            layers: vec![Layer::Dense(dense)],
        }
    }

    fn set_grad(net: &mut Network<f64>, g: f64) {
        net.visit_params_mut(&mut |_, grad| grad.iter_mut().for_each(|v| *v = g));
    }

    fn weight(net: &mut Network<f64>) -> f64 {
        let mut w = 0.0;
        let mut first = true;
        net.visit_params_mut(&mut |p, _| {
            if first {
                w = p[0];
                first = false;
            }
        });
        w
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut net = build_decoder_network::<f64>(ArchTag::Mlp, 8, 4, 0).unwrap();
        let before = net.param_arrays();
        let mut state = AdamState::new(&mut net, 0.001);
        net.zero_grads();
        adam_step(&mut net, &mut state);
        assert_eq!(net.param_arrays(), before);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn first_step_is_minus_lr() {
        let mut net = scalar_net(0.5);
        let mut state = AdamState::new(&mut net, 0.001);
        set_grad(&mut net, 1.0);
        adam_step(&mut net, &mut state);
        // m_hat = v_hat = 1, so the step is -lr/(1 + eps') ~ -0.001.
        let w = weight(&mut net);
        assert!((w - (0.5 - 0.001)).abs() < 1e-9, "w = {w}");
    }

    #[test]
    fn constant_gradient_step_approaches_lr() {
        let mut net = scalar_net(10.0);
        let mut state = AdamState::new(&mut net, 0.001);
        let mut prev = weight(&mut net);
        let mut last_step = 0.0;
        for _ in 0..5000 {
            set_grad(&mut net, 0.37);
            adam_step(&mut net, &mut state);
            let w = weight(&mut net);
            last_step = prev - w;
            prev = w;
        }
        // Sign-following behavior: |step| converges to lr for a constant
        // gradient, independent of its magnitude.
        assert!((last_step - 0.001).abs() < 1e-5, "step {last_step}");
    }
}
