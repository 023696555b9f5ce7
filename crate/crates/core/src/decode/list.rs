//! Fixed-complexity list decoding adapted to PAC codes.
//!
//! Breadth-limited tree search: every surviving path carries its pre-transform
//! bit history (the convolution shift register input) and a log-domain path
//! metric. Information positions spawn both bit values, frozen positions force
//! a single child through the register, and the population is pruned back to
//! the best `L` paths after each information position.

use super::sc::{branch_penalty, sc_bit_llr_with, ScWorkspace};
use super::DecodeResult;
use crate::code::{BitVec, PacCode};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ListError {
    #[error("list size must be a power of two >= 1, got {0}")]
    BadListSize(usize),
}

/// List-decoder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListConfig {
    pub list_size: usize,
}

impl ListConfig {
    pub fn new(list_size: usize) -> Result<Self, ListError> {
        if list_size == 0 || !list_size.is_power_of_two() {
            return Err(ListError::BadListSize(list_size));
        }
        Ok(Self { list_size })
    }
}

#[derive(Clone)]
struct Path {
    /// Pre-transform bits v[0..i] (message embedding, zeros at frozen).
    v: BitVec,
    /// Convolved bits u[0..i]; the prefix the SC recursion conditions on.
    u: BitVec,
    pm: f64,
}

/// Convolution output bit at position `i` given the `v` history and the
/// candidate bit `vi`.
fn register_bit(v: &[u8], vi: u8, i: usize, g: &[u8]) -> u8 {
    let mut acc = g[0] & vi;
    for (j, &gj) in g.iter().enumerate().skip(1) {
        if gj == 1 && i >= j {
            acc ^= v[i - j];
        }
    }
    acc
}

/// Decode one frame with list size `cfg.list_size`.
pub fn list_decode(channel_llrs: &[f64], code: &PacCode, cfg: &ListConfig) -> DecodeResult {
    let start = Instant::now();
    let n = code.block_len();
    assert_eq!(channel_llrs.len(), n, "LLR length must equal N");
    let g = code.impulse_response();
    let mut ws = ScWorkspace::for_len(n);

    let mut paths = vec![Path {
        v: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        pm: 0.0,
    }];
    let mut node_visits = 0u64;

    for i in 0..n {
        if code.is_info(i) {
            let mut children: Vec<Path> = Vec::with_capacity(paths.len() * 2);
            for path in &paths {
                node_visits += 1;
                let l = sc_bit_llr_with(channel_llrs, &path.u, i, &mut ws);
                for vi in [0u8, 1] {
                    let ui = register_bit(&path.v, vi, i, g);
                    let mut child = path.clone();
                    child.v.push(vi);
                    child.u.push(ui);
                    child.pm += branch_penalty(ui, l);
                    children.push(child);
                }
            }
            // Stable sort: ties keep insertion (path-index) order.
            children.sort_by(|a, b| a.pm.partial_cmp(&b.pm).expect("finite metrics"));
            children.truncate(cfg.list_size);
            paths = children;
        } else {
            for path in &mut paths {
                node_visits += 1;
                let l = sc_bit_llr_with(channel_llrs, &path.u, i, &mut ws);
                let ui = register_bit(&path.v, 0, i, g);
                path.v.push(0);
                path.u.push(ui);
                path.pm += branch_penalty(ui, l);
            }
        }
    }

    let best = paths
        .iter()
        .min_by(|a, b| a.pm.partial_cmp(&b.pm).expect("finite metrics"))
        .expect("at least one path");
    DecodeResult {
        d_hat: code.info_set().iter().map(|&i| best.v[i]).collect(),
        metric: best.pm,
        node_visits,
        elapsed: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn, bpsk_modulate, llr, ChannelParams};
    use crate::code::convolve;
    use crate::decode::ml::{index_to_message, ml_decode_exhaustive};
    use crate::decode::sc::sc_bit_llr;
    use crate::rng::{stream, StreamDomain};

    const G: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];

    #[test]
    fn register_matches_convolve() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let mut rng = stream(3, StreamDomain::Tool, 0);
        use rand::Rng;
        let v: Vec<u8> = (0..16).map(|_| rng.gen_range(0..=1) as u8).collect();
        let u = convolve(&v, code.impulse_response());
        for i in 0..16 {
            assert_eq!(register_bit(&v[..i], v[i], i, &G), u[i]);
        }
    }

    #[test]
    fn noiseless_recovers_all_messages_any_list_size() {
        let code = PacCode::new(16, 8, &G).unwrap();
        for &l in &[1usize, 4, 256] {
            let cfg = ListConfig::new(l).unwrap();
            for idx in 0..256usize {
                let d = index_to_message(idx, 8);
                let x = code.encode(&d).unwrap();
                let llrs = llr(&bpsk_modulate(&x), 0.02).unwrap();
                assert_eq!(list_decode(&llrs, &code, &cfg).d_hat, d, "L={l} idx={idx}");
            }
        }
    }

    #[test]
    fn list_one_equals_greedy_sc_with_convolution() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let params = ChannelParams::new(1.0, 0.5).unwrap();
        let cfg = ListConfig::new(1).unwrap();
        for frame in 0..50u64 {
            let mut rng = stream(41, StreamDomain::Eval, frame);
            let x = code.encode(&index_to_message(frame as usize % 256, 8)).unwrap();
            let y = awgn(&bpsk_modulate(&x), &params, &mut rng);
            let llrs = llr(&y, params.sigma2).unwrap();

            // Greedy reference: follow the single best branch at every step.
            let g = code.impulse_response();
            let mut v = Vec::new();
            let mut u = Vec::new();
            for i in 0..16 {
                let l = sc_bit_llr(&llrs, &u, i);
                let vi = if code.is_info(i) {
                    let u0 = register_bit(&v, 0, i, g);
                    let p0 = branch_penalty(u0, l);
                    let p1 = branch_penalty(1 ^ u0, l);
                    if p1 < p0 {
                        1
                    } else {
                        0
                    }
                } else {
                    0
                };
                let ui = register_bit(&v, vi, i, g);
                v.push(vi);
                u.push(ui);
            }
            let greedy: Vec<u8> = code.info_set().iter().map(|&i| v[i]).collect();
            assert_eq!(list_decode(&llrs, &code, &cfg).d_hat, greedy);
        }
    }

    #[test]
    fn full_list_equals_ml_on_noisy_frames() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let params = ChannelParams::new(2.0, 0.5).unwrap();
        let cfg = ListConfig::new(256).unwrap();
        for frame in 0..200u64 {
            let mut rng = stream(42, StreamDomain::Eval, frame);
            let d = index_to_message((frame as usize * 37) % 256, 8);
            let x = code.encode(&d).unwrap();
            let y = awgn(&bpsk_modulate(&x), &params, &mut rng);
            let llrs = llr(&y, params.sigma2).unwrap();
            let ml = ml_decode_exhaustive(&llrs, &code).unwrap();
            assert_eq!(list_decode(&llrs, &code, &cfg).d_hat, ml.d_hat, "frame {frame}");
        }
    }

    #[test]
    fn larger_list_never_worse_metric() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let params = ChannelParams::new(1.0, 0.5).unwrap();
        for frame in 0..50u64 {
            let mut rng = stream(43, StreamDomain::Eval, frame);
            let x = code.encode(&index_to_message(frame as usize % 256, 8)).unwrap();
            let y = awgn(&bpsk_modulate(&x), &params, &mut rng);
            let llrs = llr(&y, params.sigma2).unwrap();
            let mut prev = f64::INFINITY;
            for &l in &[1usize, 2, 8, 32, 256] {
                let m = list_decode(&llrs, &code, &ListConfig::new(l).unwrap()).metric;
                assert!(m <= prev + 1e-9, "L={l}: {m} > {prev}");
                prev = m;
            }
        }
    }

    #[test]
    fn reencoded_output_is_a_codeword() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let params = ChannelParams::new(0.0, 0.5).unwrap();
        let cfg = ListConfig::new(4).unwrap();
        for frame in 0..100u64 {
            let mut rng = stream(44, StreamDomain::Eval, frame);
            let d = index_to_message(frame as usize % 16, 4);
            let x = code.encode(&d).unwrap();
            let y = awgn(&bpsk_modulate(&x), &params, &mut rng);
            let llrs = llr(&y, params.sigma2).unwrap();
            let d_hat = list_decode(&llrs, &code, &cfg).d_hat;
            // Round-trip: encoding the estimate and inverting returns it.
            let x_hat = code.encode(&d_hat).unwrap();
            assert_eq!(code.invert(&x_hat).unwrap(), d_hat);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ListConfig::new(0).is_err());
        assert!(ListConfig::new(3).is_err());
        assert!(ListConfig::new(4).is_ok());
    }
}
