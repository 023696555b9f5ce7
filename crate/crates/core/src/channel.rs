//! BPSK modulation, the BI-AWGN channel, and decoder input construction.
//!
//! Bit mapping is `0 -> +1`, `1 -> -1`. The noise variance per dimension
//! follows the coded-BPSK convention `sigma^2 = 1 / (2 R 10^(EbN0/10))`,
//! i.e. Eb is energy per information bit.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// LLR magnitudes are clamped here to keep downstream exponentials finite.
pub const LLR_CLAMP: f64 = 50.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("Eb/N0 and rate must give a positive noise variance (rate = {0})")]
    BadRate(f64),
    #[error("noise variance must be positive, got {0}")]
    BadSigma2(f64),
}

/// Channel operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    pub rate: f64,
    pub sigma2: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self, ChannelError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(ChannelError::BadRate(rate));
        }
        let sigma2 = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(ChannelError::BadSigma2(sigma2));
        }
        Ok(Self { ebn0_db, rate, sigma2 })
    }
}

/// Decoder input representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// Hard demodulation: bits in {0, 1} from the sign of y.
    Hard,
    /// Raw channel values y.
    Direct,
    /// Channel LLRs 2y / sigma^2, clamped.
    Llr,
}

impl std::fmt::Display for InputMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InputMode::Hard => "hard",
            InputMode::Direct => "direct",
            InputMode::Llr => "llr",
        };
        f.write_str(s)
    }
}

/// BPSK map: bit 0 -> +1, bit 1 -> -1.
pub fn bpsk_modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * b as f64).collect()
}

/// Hard decision inverse of [`bpsk_modulate`]; y = 0 maps to bit 0.
pub fn hard_demod(y: &[f64]) -> Vec<u8> {
    y.iter().map(|&v| if v < 0.0 { 1 } else { 0 }).collect()
}

/// Add white Gaussian noise with variance `params.sigma2` per sample.
pub fn awgn<R: Rng>(symbols: &[f64], params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    let sigma = params.sigma2.sqrt();
    symbols
        .iter()
        .map(|&s| s + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Channel LLRs `2 y / sigma^2`, clamped to +-[`LLR_CLAMP`]. Positive LLR
/// favors bit 0.
pub fn llr(y: &[f64], sigma2: f64) -> Result<Vec<f64>, ChannelError> {
    if !(sigma2 > 0.0) {
        return Err(ChannelError::BadSigma2(sigma2));
    }
    Ok(y.iter()
        .map(|&v| (2.0 * v / sigma2).clamp(-LLR_CLAMP, LLR_CLAMP))
        .collect())
}

/// Build the decoder input for the requested representation.
pub fn make_decoder_input(y: &[f64], params: &ChannelParams, mode: InputMode) -> Vec<f64> {
    match mode {
        InputMode::Hard => hard_demod(y).iter().map(|&b| b as f64).collect(),
        InputMode::Direct => y.to_vec(),
        InputMode::Llr => llr(y, params.sigma2).expect("validated params"),
    }
}
