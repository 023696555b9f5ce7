//! Polarization-adjusted convolutional (PAC) codes: encoding, classical
//! decoding, and trainable neural decoders.
//!
//! The crate is organized around the simulation chain
//!
//! ```text
//! message d --encode--> codeword x --BPSK--> s --AWGN--> y --decode--> d_hat
//! ```
//!
//! * [`code`] — code construction (RM rate profile, convolutional
//!   pre-transform, polar transform) and encoding.
//! * [`channel`] — BPSK modulation, the BI-AWGN channel, and the decoder
//!   input representations (hard bits, raw channel values, LLRs).
//! * [`decode`] — classical baselines: Fano sequential decoding, list
//!   decoding, and an exhaustive maximum-likelihood oracle for small codes.
//! * [`nn`] — a small from-scratch neural-network stack (dense, 1-D conv,
//!   max-pool, LSTM, affine normalization, Adam) and the three decoder
//!   architectures built from it.
//! * [`train`] — dataset generation, the training loop, and NVE-based
//!   training-SNR selection.
//! * [`eval`] — Monte-Carlo BER/FER measurement with an error-count stopping
//!   rule, latency benchmarking.
//! * [`results`] — CSV/manifest persistence for curves and timings.
//!
//! All randomness flows from explicit 64-bit seeds through counter-addressed
//! ChaCha streams (see [`rng`]), so every simulation is reproducible
//! regardless of worker count.

pub mod channel;
pub mod code;
pub mod decode;
pub mod eval;
pub mod nn;
pub mod results;
pub mod rng;
pub mod train;

pub use channel::{ChannelParams, InputMode};
pub use code::{BitVec, PacCode};
pub use decode::{
    fano::{fano_decode, FanoConfig},
    list::{list_decode, ListConfig},
    ml::ml_decode_exhaustive,
    DecodeResult, Decoder, FanoDecoder, ListDecoder, MlDecoder,
};
pub use eval::{
    bench_latency, monte_carlo_ber, uncoded_bpsk_ber, BerCurve, BerPoint, MonteCarloOpts,
    NeuralDecoder, TimingRecord,
};
pub use nn::{build_decoder_network, param_count, ArchTag, Matrix, Network};
pub use train::{
    compute_nve, generate_dataset, nve_sweep, train, train_with, Dataset, NveReport, SweepBudget,
    TrainConfig,
};
