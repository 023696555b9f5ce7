//! Classical PAC decoders: Fano sequential decoding, list decoding, and an
//! exhaustive maximum-likelihood oracle for small codes.
//!
//! All decoders consume channel LLRs (positive favors bit 0) and share the
//! successive-cancellation bit-LLR recursion in [`sc`].

pub mod fano;
pub mod list;
pub mod ml;
pub mod sc;

use crate::channel::{llr, ChannelParams};
use crate::code::{BitVec, PacCode};
use std::time::Duration;

/// Outcome of decoding one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Estimated message, length K.
    pub d_hat: BitVec,
    /// Final path metric of the returned codeword path.
    pub metric: f64,
    /// Tree nodes visited (codewords scored, for the exhaustive oracle).
    pub node_visits: u64,
    /// Wall-clock decode time.
    pub elapsed: Duration,
}

/// A frame decoder usable by the Monte-Carlo driver. Implementations are
/// read-only per call so frames can be decoded from many workers at once.
pub trait Decoder: Sync {
    fn label(&self) -> String;

    /// Decode one received vector into a message estimate.
    fn decode_frame(&self, y: &[f64], params: &ChannelParams) -> BitVec;

    /// Decode a batch of received vectors. The default maps
    /// [`Decoder::decode_frame`]; batched implementations may override.
    fn decode_batch(&self, ys: &[Vec<f64>], params: &ChannelParams) -> Vec<BitVec> {
        ys.iter().map(|y| self.decode_frame(y, params)).collect()
    }
}

/// Fano sequential decoder over the PAC tree.
pub struct FanoDecoder {
    pub code: PacCode,
    pub cfg: fano::FanoConfig,
}

impl Decoder for FanoDecoder {
    fn label(&self) -> String {
        "fano".into()
    }

    fn decode_frame(&self, y: &[f64], params: &ChannelParams) -> BitVec {
        let llrs = llr(y, params.sigma2).expect("valid sigma2");
        fano::fano_decode(&llrs, &self.code, &self.cfg).d_hat
    }
}

/// Fixed-size list decoder.
pub struct ListDecoder {
    pub code: PacCode,
    pub cfg: list::ListConfig,
}

impl Decoder for ListDecoder {
    fn label(&self) -> String {
        format!("list{}", self.cfg.list_size)
    }

    fn decode_frame(&self, y: &[f64], params: &ChannelParams) -> BitVec {
        let llrs = llr(y, params.sigma2).expect("valid sigma2");
        list::list_decode(&llrs, &self.code, &self.cfg).d_hat
    }
}

/// Exhaustive maximum-likelihood oracle with a precomputed codebook.
pub struct MlDecoder {
    code: PacCode,
    codebook: Vec<BitVec>,
}

impl MlDecoder {
    /// Builds the full codebook; K is limited as in
    /// [`ml::ml_decode_exhaustive`].
    pub fn new(code: PacCode) -> Result<Self, ml::MlError> {
        let codebook = ml::enumerate_codebook(&code)?;
        Ok(Self { code, codebook })
    }

    pub fn code(&self) -> &PacCode {
        &self.code
    }
}

impl Decoder for MlDecoder {
    fn label(&self) -> String {
        "ml".into()
    }

    fn decode_frame(&self, y: &[f64], params: &ChannelParams) -> BitVec {
        let llrs = llr(y, params.sigma2).expect("valid sigma2");
        let (idx, _metric) = ml::best_codeword(&llrs, &self.codebook);
        ml::index_to_message(idx, self.code.info_len())
    }
}
