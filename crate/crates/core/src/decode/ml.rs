//! Exhaustive maximum-likelihood decoding for small codes.
//!
//! Scores every codeword against the channel LLRs and returns the argmin of
//! the log-domain mismatch metric. Intended as a correctness oracle for the
//! search decoders, so K is capped to keep the codebook enumerable.

use super::sc::branch_penalty;
use super::DecodeResult;
use crate::code::{BitVec, PacCode};
use std::time::Instant;
use thiserror::Error;

/// Codebook size guard: 2^16 codewords at most.
pub const MAX_ML_INFO_LEN: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MlError {
    #[error("exhaustive decoding needs K <= {MAX_ML_INFO_LEN}, got {0}")]
    TooManyMessages(usize),
}

/// Message index -> bit vector, LSB-first.
pub fn index_to_message(idx: usize, k: usize) -> BitVec {
    (0..k).map(|b| ((idx >> b) & 1) as u8).collect()
}

/// All 2^K codewords, indexed by LSB-first message value.
pub fn enumerate_codebook(code: &PacCode) -> Result<Vec<BitVec>, MlError> {
    let k = code.info_len();
    if k > MAX_ML_INFO_LEN {
        return Err(MlError::TooManyMessages(k));
    }
    Ok((0..1usize << k)
        .map(|idx| code.encode(&index_to_message(idx, k)).expect("valid code"))
        .collect())
}

/// Score of a codeword against the LLRs: `sum_i ln(1 + e^{-(1-2x_i) L_i})`.
/// Equivalent to maximum correlation with y for equal-energy BPSK.
pub fn codeword_metric(llrs: &[f64], codeword: &[u8]) -> f64 {
    codeword
        .iter()
        .zip(llrs)
        .map(|(&x, &l)| branch_penalty(x, l))
        .sum()
}

/// Index and metric of the best codeword; first index wins on exact ties.
pub fn best_codeword(llrs: &[f64], codebook: &[BitVec]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (idx, cw) in codebook.iter().enumerate() {
        let m = codeword_metric(llrs, cw);
        if m < best.1 {
            best = (idx, m);
        }
    }
    best
}

/// Exhaustive ML decode of one frame.
pub fn ml_decode_exhaustive(
    channel_llrs: &[f64],
    code: &PacCode,
) -> Result<DecodeResult, MlError> {
    let start = Instant::now();
    let codebook = enumerate_codebook(code)?;
    let (idx, metric) = best_codeword(channel_llrs, &codebook);
    Ok(DecodeResult {
        d_hat: index_to_message(idx, code.info_len()),
        metric,
        node_visits: codebook.len() as u64,
        elapsed: start.elapsed(),
    })
}
