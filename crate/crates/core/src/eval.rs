//! Monte-Carlo BER/FER measurement and decoder latency benchmarking.
//!
//! The Monte-Carlo driver stops a point once `min_errors` bit errors are
//! collected (or flags it censored at the frame cap). Frames are generated
//! in fixed-size chunks, chunk `c` of point `p` drawing from stream
//! `(seed, Eval, p << 24 | c)`; chunks are simulated in parallel and merged
//! in chunk order, and the stopping rule is checked on merged tallies at
//! fixed round boundaries. Results are therefore bit-identical for any
//! worker count.

use crate::channel::{awgn, bpsk_modulate, hard_demod, make_decoder_input, ChannelParams, InputMode};
use crate::code::{BitVec, PacCode};
use crate::decode::Decoder;
use crate::nn::{Matrix, Network};
use crate::rng::{stream, StreamDomain};
use rand::Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};

/// Error statistics at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub bits_tested: u64,
    pub frames_tested: u64,
    pub ber: f64,
    pub fer: f64,
    /// True when the frame cap fired before `min_errors` was reached.
    pub censored: bool,
}

/// A decoder's BER curve over a grid of operating points.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub decoder: String,
    pub points: Vec<BerPoint>,
}

/// Single-frame latency statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub decoder_tag: String,
    pub frames: usize,
    pub mean_latency: Duration,
    pub p50: Duration,
    pub p99: Duration,
}

/// Monte-Carlo driver knobs. `chunk_frames * chunks_per_round` frames are
/// simulated between stopping checks.
#[derive(Debug, Clone)]
pub struct MonteCarloOpts {
    pub min_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub chunk_frames: usize,
    pub chunks_per_round: usize,
}

impl Default for MonteCarloOpts {
    fn default() -> Self {
        Self {
            min_errors: 500,
            max_frames: 100_000_000,
            seed: 0,
            chunk_frames: 256,
            chunks_per_round: 16,
        }
    }
}

/// One chunk of frames: messages and received vectors.
pub struct FrameChunk {
    pub messages: Vec<BitVec>,
    pub received: Vec<Vec<f64>>,
}

/// Generate the `chunk_index`-th chunk of frames for `point_index`;
/// the same `(seed, point, chunk)` triple always yields the same frames.
pub fn generate_chunk(
    code: &PacCode,
    params: &ChannelParams,
    frames: usize,
    seed: u64,
    point_index: usize,
    chunk_index: u64,
) -> FrameChunk {
    let idx = ((point_index as u64) << 24) | chunk_index;
    let mut rng = stream(seed, StreamDomain::Eval, idx);
    let k = code.info_len();
    let mut messages = Vec::with_capacity(frames);
    let mut received = Vec::with_capacity(frames);
    for _ in 0..frames {
        let d: BitVec = (0..k).map(|_| rng.gen_range(0..=1) as u8).collect();
        let x = code.encode(&d).expect("valid code");
        let y = awgn(&bpsk_modulate(&x), params, &mut rng);
        messages.push(d);
        received.push(y);
    }
    FrameChunk { messages, received }
}

fn tally_chunk(decoder: &dyn Decoder, params: &ChannelParams, chunk: &FrameChunk) -> (u64, u64) {
    let decoded = decoder.decode_batch(&chunk.received, params);
    let mut bit_errors = 0u64;
    let mut frame_errors = 0u64;
    for (d_hat, d) in decoded.iter().zip(&chunk.messages) {
        let errs = d_hat
            .iter()
            .zip(d)
            .filter(|(a, b)| a != b)
            .count() as u64;
        bit_errors += errs;
        frame_errors += (errs > 0) as u64;
    }
    (bit_errors, frame_errors)
}

/// Measure BER/FER for `decoder` at every point of `ebn0_list`.
pub fn monte_carlo_ber(
    decoder: &dyn Decoder,
    code: &PacCode,
    ebn0_list: &[f64],
    opts: &MonteCarloOpts,
) -> BerCurve {
    assert!(opts.max_frames > 0, "frame cap must be positive");
    let k = code.info_len() as u64;
    let points = ebn0_list
        .iter()
        .enumerate()
        .map(|(p_idx, &ebn0_db)| {
            let params = ChannelParams::new(ebn0_db, code.rate()).expect("valid point");
            let mut bit_errors = 0u64;
            let mut frame_errors = 0u64;
            let mut frames = 0u64;
            let mut next_chunk = 0u64;
            while bit_errors < opts.min_errors && frames < opts.max_frames {
                let round: Vec<(u64, u64, u64)> = (0..opts.chunks_per_round as u64)
                    .into_par_iter()
                    .map(|i| {
                        let chunk = generate_chunk(
                            code,
                            &params,
                            opts.chunk_frames,
                            opts.seed,
                            p_idx,
                            next_chunk + i,
                        );
                        let (be, fe) = tally_chunk(decoder, &params, &chunk);
                        (be, fe, chunk.messages.len() as u64)
                    })
                    .collect();
                for (be, fe, fr) in round {
                    bit_errors += be;
                    frame_errors += fe;
                    frames += fr;
                }
                next_chunk += opts.chunks_per_round as u64;
            }
            let bits = frames * k;
            BerPoint {
                ebn0_db,
                bit_errors,
                frame_errors,
                bits_tested: bits,
                frames_tested: frames,
                ber: if bits > 0 { bit_errors as f64 / bits as f64 } else { 0.0 },
                fer: if frames > 0 {
                    frame_errors as f64 / frames as f64
                } else {
                    0.0
                },
                censored: bit_errors < opts.min_errors,
            }
        })
        .collect();
    BerCurve {
        decoder: decoder.label(),
        points,
    }
}

/// Hard-decision BPSK without any code (rate 1): the analytic reference is
/// the Gaussian tail `Q(sqrt(2 Eb/N0))`.
pub fn uncoded_bpsk_ber(
    ebn0_db: f64,
    frame_bits: usize,
    min_errors: u64,
    max_frames: u64,
    seed: u64,
) -> BerPoint {
    let params = ChannelParams::new(ebn0_db, 1.0).expect("rate-1 point");
    let mut bit_errors = 0u64;
    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut chunk = 0u64;
    while bit_errors < min_errors && frames < max_frames {
        let mut rng = stream(seed, StreamDomain::Eval, chunk);
        chunk += 1;
        for _ in 0..64 {
            if frames >= max_frames {
                break;
            }
            let bits: BitVec = (0..frame_bits).map(|_| rng.gen_range(0..=1) as u8).collect();
            let y = awgn(&bpsk_modulate(&bits), &params, &mut rng);
            let errs = hard_demod(&y)
                .iter()
                .zip(&bits)
                .filter(|(a, b)| a != b)
                .count() as u64;
            bit_errors += errs;
            frame_errors += (errs > 0) as u64;
            frames += 1;
        }
    }
    let bits = frames * frame_bits as u64;
    BerPoint {
        ebn0_db,
        bit_errors,
        frame_errors,
        bits_tested: bits,
        frames_tested: frames,
        ber: bit_errors as f64 / bits as f64,
        fer: frame_errors as f64 / frames as f64,
        censored: bit_errors < min_errors,
    }
}

/// Wall-clock per-frame decode statistics on a single worker. The first
/// `warmup` frames are decoded but not timed.
pub fn bench_latency(
    decoder: &dyn Decoder,
    code: &PacCode,
    frames: usize,
    ebn0_db: f64,
    warmup: usize,
    seed: u64,
) -> TimingRecord {
    assert!(frames >= 1, "need at least one timed frame");
    let params = ChannelParams::new(ebn0_db, code.rate()).expect("valid point");
    let chunk = generate_chunk(code, &params, warmup + frames, seed, 0xBEC, 0);
    let mut times: Vec<Duration> = Vec::with_capacity(frames);
    for (i, y) in chunk.received.iter().enumerate() {
        if i < warmup {
            let _ = decoder.decode_frame(y, &params);
            continue;
        }
        let t0 = Instant::now();
        let _ = decoder.decode_frame(y, &params);
        times.push(t0.elapsed());
    }
    times.sort_unstable();
    let total: Duration = times.iter().sum();
    let nearest_rank = |q: f64| -> Duration {
        let rank = ((q * times.len() as f64).ceil() as usize).clamp(1, times.len());
        times[rank - 1]
    };
    TimingRecord {
        decoder_tag: decoder.label(),
        frames,
        mean_latency: total / frames as u32,
        p50: nearest_rank(0.50),
        p99: nearest_rank(0.99),
    }
}

/// A trained network acting as a frame decoder: builds the input
/// representation it was trained on, runs one forward pass, and thresholds
/// the per-bit probabilities at 1/2.
pub struct NeuralDecoder {
    net: Network<f32>,
    mode: InputMode,
    label: String,
}

impl NeuralDecoder {
    pub fn new(net: Network<f32>, mode: InputMode, label: String) -> Self {
        Self { net, mode, label }
    }

    pub fn network(&self) -> &Network<f32> {
        &self.net
    }

    pub fn input_mode(&self) -> InputMode {
        self.mode
    }

    fn input_matrix(&self, ys: &[Vec<f64>], params: &ChannelParams) -> Matrix<f32> {
        let n = self.net.input_len;
        let mut m = Matrix::zeros(ys.len(), n);
        for (r, y) in ys.iter().enumerate() {
            let input = make_decoder_input(y, params, self.mode);
            for (dst, src) in m.row_mut(r).iter_mut().zip(&input) {
                *dst = *src as f32;
            }
        }
        m
    }

    fn threshold(&self, p: &Matrix<f32>) -> Vec<BitVec> {
        (0..p.rows())
            .map(|r| p.row(r).iter().map(|&v| (v > 0.5) as u8).collect())
            .collect()
    }
}

impl Decoder for NeuralDecoder {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn decode_frame(&self, y: &[f64], params: &ChannelParams) -> BitVec {
        let x = self.input_matrix(std::slice::from_ref(&y.to_vec()), params);
        let p = self.net.infer(&x);
        self.threshold(&p).pop().expect("one row")
    }

    fn decode_batch(&self, ys: &[Vec<f64>], params: &ChannelParams) -> Vec<BitVec> {
        let x = self.input_matrix(ys, params);
        let p = self.net.infer(&x);
        self.threshold(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{ml::MAX_ML_INFO_LEN, MlDecoder};

    const G: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];

    /// Decodes by exact inversion of the encode chain after hard decisions.
    /// Perfect at high SNR, garbage otherwise; only for driver tests.
    struct HardInvert {
        code: PacCode,
        flip: bool,
    }

    impl Decoder for HardInvert {
        fn label(&self) -> String {
            "hard-invert".into()
        }
        fn decode_frame(&self, y: &[f64], _params: &ChannelParams) -> BitVec {
            let mut d = self.code.invert(&hard_demod(y)).expect("length ok");
            if self.flip {
                for b in &mut d {
                    *b ^= 1;
                }
            }
            d
        }
    }

    #[test]
    fn perfect_decoder_censors_at_frame_cap() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let dec = HardInvert { code: code.clone(), flip: false };
        let opts = MonteCarloOpts {
            min_errors: 500,
            max_frames: 1000,
            seed: 5,
            chunk_frames: 125,
            chunks_per_round: 4,
        };
        // 40 dB: effectively noiseless, so zero errors and a censored point.
        let curve = monte_carlo_ber(&dec, &code, &[40.0], &opts);
        let p = &curve.points[0];
        assert_eq!(p.bit_errors, 0);
        assert!(p.censored);
        assert_eq!(p.frames_tested, 1000);
        assert_eq!(p.ber, 0.0);
    }

    #[test]
    fn all_flipped_decoder_gives_unit_ber() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let dec = HardInvert { code: code.clone(), flip: true };
        let opts = MonteCarloOpts {
            min_errors: 500,
            max_frames: 100_000,
            seed: 6,
            chunk_frames: 32,
            chunks_per_round: 4,
        };
        let curve = monte_carlo_ber(&dec, &code, &[40.0], &opts);
        let p = &curve.points[0];
        assert_eq!(p.ber, 1.0);
        assert_eq!(p.fer, 1.0);
        assert!(!p.censored);
        // Stopping happens at the first round boundary past 500 errors.
        assert_eq!(p.frames_tested, 128);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let dec = MlDecoder::new(code.clone()).unwrap();
        let opts = MonteCarloOpts {
            min_errors: 50,
            max_frames: 20_000,
            seed: 7,
            chunk_frames: 64,
            chunks_per_round: 8,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| monte_carlo_ber(&dec, &code, &[2.0, 4.0], &opts))
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn fer_at_least_ber() {
        let code = PacCode::new(16, 8, &G).unwrap();
        let dec = MlDecoder::new(code.clone()).unwrap();
        let opts = MonteCarloOpts {
            min_errors: 100,
            max_frames: 50_000,
            seed: 8,
            ..MonteCarloOpts::default()
        };
        let curve = monte_carlo_ber(&dec, &code, &[0.0, 2.0], &opts);
        for p in &curve.points {
            assert!(p.fer >= p.ber, "{}: fer {} < ber {}", p.ebn0_db, p.fer, p.ber);
            assert!(p.bit_errors <= p.bits_tested);
        }
    }

    #[test]
    fn uncoded_reference_matches_q_function() {
        // Q(sqrt(2 * 10^0.4)) ~ 6.0e-3 at 4 dB.
        let point = uncoded_bpsk_ber(4.0, 1000, 2000, 10_000, 9);
        assert!(!point.censored);
        let q = 0.5 * libm::erfc((2.0 * 10f64.powf(0.4)).sqrt() / 2f64.sqrt());
        let sigma = (q * (1.0 - q) / point.bits_tested as f64).sqrt();
        assert!(
            (point.ber - q).abs() < 3.0 * sigma,
            "ber {} vs q {} (3s = {})",
            point.ber,
            q,
            3.0 * sigma
        );
    }

    #[test]
    fn latency_bench_single_frame() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let dec = MlDecoder::new(code.clone()).unwrap();
        let rec = bench_latency(&dec, &code, 1, 2.0, 3, 10);
        assert_eq!(rec.frames, 1);
        assert_eq!(rec.p50, rec.p99);
        assert_eq!(rec.mean_latency, rec.p50);
    }

    #[test]
    fn ml_guard_is_respected() {
        assert!(MAX_ML_INFO_LEN <= 16);
        let code = PacCode::with_profile(32, (8..32).collect(), &[1, 1]).unwrap();
        assert!(MlDecoder::new(code).is_err());
    }
}
