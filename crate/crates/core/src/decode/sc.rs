//! Successive-cancellation bit-LLR recursion.
//!
//! The depth-n butterfly splits the channel LLR vector into an f-combined
//! left half and, once the left bits are fixed, a g-combined right half.
//! The f-function is the exact log-domain box-plus, not the min-sum
//! approximation.

use crate::code::polar_transform;

/// Exact box-plus: `2 atanh(tanh(a/2) tanh(b/2))`, evaluated in the
/// numerically stable sign-min-plus-correction form
/// `sgn(a) sgn(b) min(|a|,|b|) + ln(1+e^-|a+b|) - ln(1+e^-|a-b|)`.
pub fn f_combine(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs()) + ln1p_exp_neg((a + b).abs()) - ln1p_exp_neg((a - b).abs())
}

/// `ln(1 + e^{-x})` for `x >= 0` without overflow.
fn ln1p_exp_neg(x: f64) -> f64 {
    (-x).exp().ln_1p()
}

/// `ln(1 + e^{-x})` for any sign of `x`.
pub fn softplus_neg(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Path-metric penalty of deciding bit value `u` against LLR `l`:
/// `ln(1 + e^{-(1-2u) l})`. Zero when the decision agrees with a confident
/// LLR, `|l|` when it contradicts it.
pub fn branch_penalty(u: u8, l: f64) -> f64 {
    softplus_neg((1.0 - 2.0 * u as f64) * l)
}

/// g-combine: `b + (1 - 2 u) a` for partial-sum bit `u`.
pub fn g_combine(a: f64, b: f64, u: u8) -> f64 {
    b + (1.0 - 2.0 * u as f64) * a
}

/// Scratch space for [`sc_bit_llr_with`]; reuse across calls to avoid
/// per-bit allocation in path-search loops.
#[derive(Debug, Default, Clone)]
pub struct ScWorkspace {
    llr_buf: Vec<f64>,
    bit_buf: Vec<u8>,
}

impl ScWorkspace {
    pub fn for_len(n: usize) -> Self {
        Self {
            llr_buf: vec![0.0; n],
            bit_buf: vec![0u8; n],
        }
    }

    fn ensure(&mut self, n: usize) {
        if self.llr_buf.len() < n {
            self.llr_buf.resize(n, 0.0);
            self.bit_buf.resize(n, 0);
        }
    }
}

/// Decision LLR for `u[i]` given the channel LLRs and the fixed prefix
/// `u[0..i]`, via the f/g recursions. Panics if `u_prefix.len() != i` or
/// `i` is out of range.
pub fn sc_bit_llr(channel_llrs: &[f64], u_prefix: &[u8], i: usize) -> f64 {
    let mut ws = ScWorkspace::for_len(channel_llrs.len());
    sc_bit_llr_with(channel_llrs, u_prefix, i, &mut ws)
}

/// [`sc_bit_llr`] with caller-provided scratch space.
pub fn sc_bit_llr_with(
    channel_llrs: &[f64],
    u_prefix: &[u8],
    i: usize,
    ws: &mut ScWorkspace,
) -> f64 {
    let n = channel_llrs.len();
    assert!(n.is_power_of_two(), "LLR length must be a power of two");
    assert!(i < n, "bit index {i} out of range for N = {n}");
    assert_eq!(u_prefix.len(), i, "prefix length must equal bit index");
    ws.ensure(n);
    let (llr_buf, bit_buf) = (&mut ws.llr_buf[..], &mut ws.bit_buf[..]);
    recurse(channel_llrs, u_prefix, i, llr_buf, bit_buf)
}

fn recurse(llrs: &[f64], prefix: &[u8], i: usize, scratch: &mut [f64], bits: &mut [u8]) -> f64 {
    let n = llrs.len();
    if n == 1 {
        return llrs[0];
    }
    let half = n / 2;
    let (buf, rest) = scratch.split_at_mut(half);
    if i < half {
        for j in 0..half {
            buf[j] = f_combine(llrs[j], llrs[j + half]);
        }
        recurse(buf, prefix, i, rest, bits)
    } else {
        let (partial, bit_rest) = bits.split_at_mut(half);
        partial.copy_from_slice(&prefix[..half]);
        polar_transform(partial);
        for j in 0..half {
            buf[j] = g_combine(llrs[j], llrs[j + half], partial[j]);
        }
        recurse(buf, &prefix[half..], i - half, rest, bit_rest)
    }
}
