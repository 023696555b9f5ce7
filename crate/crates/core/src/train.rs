//! Dataset generation, the training loop, and NVE-based training-SNR
//! selection.

use crate::channel::{awgn, bpsk_modulate, make_decoder_input, ChannelParams, InputMode};
use crate::code::PacCode;
use crate::eval::{monte_carlo_ber, MonteCarloOpts, NeuralDecoder};
use crate::nn::{
    adam_step, bce_loss, build_decoder_network, AdamState, ArchTag, Matrix, Network, NnError,
};
use crate::rng::{stream, StreamDomain};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset size {size} is not a multiple of the batch size {batch}")]
    RaggedBatches { size: usize, batch: usize },
    #[error("network input width {net} does not match dataset width {data}")]
    WidthMismatch { net: usize, data: usize },
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Network(#[from] NnError),
    #[error("BER grids do not match at index {0}")]
    GridMismatch(usize),
    #[error("baseline BER is zero at {0} dB; deepen the baseline simulation")]
    ZeroBaseline(f64),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// Training hyperparameters; the defaults mirror the experiment setup
/// (fixed corpus, batch 512, Adam at 1e-3).
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub arch: ArchTag,
    pub rho_t_db: f64,
    pub input_mode: InputMode,
    pub dataset_size: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(arch: ArchTag, rho_t_db: f64) -> Self {
        Self {
            arch,
            rho_t_db,
            input_mode: InputMode::Direct,
            dataset_size: 1 << 20,
            batch_size: 512,
            epochs: 1,
            lr: 0.001,
            seed: 0,
        }
    }
}

/// A materialized training corpus: one decoder input row and one label row
/// per frame. Generated once per run, never resampled between epochs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Matrix<f32>,
    pub labels: Matrix<f32>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Generate `size` frames at the training SNR. Frame `i` draws its message
/// and noise from stream `(seed, Dataset, i)`, so the corpus is fully
/// determined by the seed and identical for any worker count.
pub fn generate_dataset(
    code: &PacCode,
    rho_t_db: f64,
    input_mode: InputMode,
    size: usize,
    seed: u64,
) -> Result<Dataset, TrainError> {
    let params = ChannelParams::new(rho_t_db, code.rate())?;
    let n = code.block_len();
    let k = code.info_len();
    let mut inputs = Matrix::zeros(size, n);
    let mut labels = Matrix::zeros(size, k);

    let label_data: Vec<Vec<f32>> = {
        let input_rows: Vec<(usize, &mut [f32])> =
            inputs.data_mut().chunks_mut(n).enumerate().collect();
        input_rows
            .into_par_iter()
            .map(|(i, row)| {
                let mut rng = stream(seed, StreamDomain::Dataset, i as u64);
                let d: Vec<u8> = (0..k).map(|_| rng.gen_range(0..=1) as u8).collect();
                let x = code.encode(&d).expect("valid code");
                let y = awgn(&bpsk_modulate(&x), &params, &mut rng);
                for (dst, src) in row
                    .iter_mut()
                    .zip(make_decoder_input(&y, &params, input_mode))
                {
                    *dst = src as f32;
                }
                d.iter().map(|&b| b as f32).collect()
            })
            .collect()
    };
    for (i, lr) in label_data.iter().enumerate() {
        labels.row_mut(i).copy_from_slice(lr);
    }
    Ok(Dataset { inputs, labels })
}

/// Train in place; returns the mean BCE per epoch. `on_epoch` runs after
/// every epoch with `(epoch number starting at 1, network, mean BCE)` and
/// is the hook for checkpoint emission and snapshotting.
pub fn train_with<F>(
    net: &mut Network<f32>,
    cfg: &TrainConfig,
    data: &Dataset,
    mut on_epoch: F,
) -> Result<Vec<f64>, TrainError>
where
    F: FnMut(usize, &Network<f32>, f64),
{
    if data.len() % cfg.batch_size != 0 {
        return Err(TrainError::RaggedBatches {
            size: data.len(),
            batch: cfg.batch_size,
        });
    }
    if net.input_len != data.inputs.cols() {
        return Err(TrainError::WidthMismatch {
            net: net.input_len,
            data: data.inputs.cols(),
        });
    }
    let batches = data.len() / cfg.batch_size;
    let n = data.inputs.cols();
    let k = data.labels.cols();
    let mut state = AdamState::new(net, cfg.lr);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch_x = Matrix::zeros(cfg.batch_size, n);
    let mut batch_d = Matrix::zeros(cfg.batch_size, k);

    for epoch in 1..=cfg.epochs {
        let mut rng = stream(cfg.seed, StreamDomain::Shuffle, epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for b in 0..batches {
            for (slot, &frame) in order[b * cfg.batch_size..(b + 1) * cfg.batch_size]
                .iter()
                .enumerate()
            {
                batch_x.row_mut(slot).copy_from_slice(data.inputs.row(frame));
                batch_d.row_mut(slot).copy_from_slice(data.labels.row(frame));
            }
            net.zero_grads();
            let p = net.forward_train(&batch_x)?;
            let (loss, dp) = bce_loss(&p, &batch_d);
            if !loss.is_finite() {
                return Err(TrainError::NanLoss { epoch, batch: b });
            }
            net.backward(&dp);
            adam_step(net, &mut state);
            epoch_loss += loss;
        }
        let mean = epoch_loss / batches as f64;
        history.push(mean);
        on_epoch(epoch, net, mean);
    }
    Ok(history)
}

/// [`train_with`] without an epoch hook.
pub fn train(
    net: &mut Network<f32>,
    cfg: &TrainConfig,
    data: &Dataset,
) -> Result<Vec<f64>, TrainError> {
    train_with(net, cfg, data, |_, _, _| {})
}

/// One row of an NVE evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NvePoint {
    pub rho_o_db: f64,
    pub ber_dnn: f64,
    pub ber_fano: f64,
}

/// NVE outcome for a single training SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct NveReport {
    pub rho_t_db: f64,
    pub test_points: Vec<NvePoint>,
    pub nve: f64,
}

/// Normalized validation error: the mean over the test grid of the decoder
/// BER divided by the baseline BER.
pub fn compute_nve(
    ber_dnn: &[(f64, f64)],
    ber_fano: &[(f64, f64)],
) -> Result<f64, TrainError> {
    if ber_dnn.len() != ber_fano.len() {
        return Err(TrainError::GridMismatch(ber_dnn.len().min(ber_fano.len())));
    }
    let mut acc = 0.0;
    for (i, ((rho_d, dnn), (rho_f, fano))) in ber_dnn.iter().zip(ber_fano).enumerate() {
        if (rho_d - rho_f).abs() > 1e-9 {
            return Err(TrainError::GridMismatch(i));
        }
        if *fano <= 0.0 {
            return Err(TrainError::ZeroBaseline(*rho_f));
        }
        acc += dnn / fano;
    }
    Ok(acc / ber_dnn.len() as f64)
}

/// Budget shared by every candidate of an NVE sweep.
#[derive(Debug, Clone)]
pub struct SweepBudget {
    pub dataset_size: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub eval_min_errors: u64,
    pub eval_max_frames: u64,
    pub seed: u64,
}

/// Train one network per candidate training SNR under identical budgets and
/// seeds, evaluate each over the baseline grid, and return the candidate
/// with the smallest NVE (ties toward the lower SNR) plus the full table.
pub fn nve_sweep(
    arch: ArchTag,
    code: &PacCode,
    input_mode: InputMode,
    candidates: &[f64],
    fano_table: &[(f64, f64)],
    budget: &SweepBudget,
) -> Result<(f64, Vec<NveReport>), TrainError> {
    assert!(!candidates.is_empty(), "need at least one candidate");
    let mut reports = Vec::with_capacity(candidates.len());
    for &rho_t in candidates {
        let report = nve_for_candidate(arch, code, input_mode, rho_t, fano_table, budget)?;
        reports.push(report);
    }
    let mut best = &reports[0];
    for r in &reports[1..] {
        if r.nve < best.nve {
            best = r;
        }
    }
    Ok((best.rho_t_db, reports))
}

fn nve_for_candidate(
    arch: ArchTag,
    code: &PacCode,
    input_mode: InputMode,
    rho_t: f64,
    fano_table: &[(f64, f64)],
    budget: &SweepBudget,
) -> Result<NveReport, TrainError> {
    let cfg = TrainConfig {
        arch,
        rho_t_db: rho_t,
        input_mode,
        dataset_size: budget.dataset_size,
        batch_size: budget.batch_size,
        epochs: budget.epochs,
        lr: budget.lr,
        seed: budget.seed,
    };
    let data = generate_dataset(code, rho_t, input_mode, budget.dataset_size, budget.seed)?;
    let mut net =
        build_decoder_network::<f32>(arch, code.block_len(), code.info_len(), budget.seed)?;
    train(&mut net, &cfg, &data)?;

    let decoder = NeuralDecoder::new(net, input_mode, format!("{arch}@{input_mode}"));
    let grid: Vec<f64> = fano_table.iter().map(|&(rho, _)| rho).collect();
    let opts = MonteCarloOpts {
        min_errors: budget.eval_min_errors,
        max_frames: budget.eval_max_frames,
        seed: budget.seed,
        ..MonteCarloOpts::default()
    };
    let curve = monte_carlo_ber(&decoder, code, &grid, &opts);
    let dnn_table: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.ebn0_db, p.ber))
        .collect();
    let nve = compute_nve(&dnn_table, fano_table)?;
    Ok(NveReport {
        rho_t_db: rho_t,
        test_points: dnn_table
            .iter()
            .zip(fano_table)
            .map(|(&(rho, dnn), &(_, fano))| NvePoint {
                rho_o_db: rho,
                ber_dnn: dnn,
                ber_fano: fano,
            })
            .collect(),
        nve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];

    #[test]
    fn dataset_is_seed_deterministic() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let a = generate_dataset(&code, 0.0, InputMode::Llr, 256, 11).unwrap();
        let b = generate_dataset(&code, 0.0, InputMode::Llr, 256, 11).unwrap();
        let c = generate_dataset(&code, 0.0, InputMode::Llr, 256, 12).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.labels, b.labels);
        assert_ne!(a.inputs, c.inputs);
    }

    #[test]
    fn dataset_empty_and_label_marginals() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let empty = generate_dataset(&code, 0.0, InputMode::Direct, 0, 1).unwrap();
        assert!(empty.is_empty());

        let size = 1 << 15;
        let data = generate_dataset(&code, 0.0, InputMode::Direct, size, 2).unwrap();
        for j in 0..4 {
            let ones: f64 = (0..size).map(|r| data.labels.get(r, j) as f64).sum();
            let frac = ones / size as f64;
            // Binomial concentration: 4 sigma at n = 2^15 is ~1.1%.
            assert!((frac - 0.5).abs() < 0.012, "bit {j}: {frac}");
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let data = generate_dataset(&code, 0.0, InputMode::Llr, 512, 3).unwrap();
        let mut cfg = TrainConfig::new(ArchTag::Mlp, 0.0);
        cfg.epochs = 0;
        cfg.dataset_size = 512;
        cfg.seed = 3;
        let mut net = build_decoder_network::<f32>(ArchTag::Mlp, 8, 4, 3).unwrap();
        let before = net.clone().param_arrays();
        let history = train(&mut net, &cfg, &data).unwrap();
        assert!(history.is_empty());
        assert_eq!(net.param_arrays(), before);
    }

    #[test]
    fn loss_history_length_and_determinism() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let data = generate_dataset(&code, 0.0, InputMode::Llr, 1024, 4).unwrap();
        let mut cfg = TrainConfig::new(ArchTag::Mlp, 0.0);
        cfg.epochs = 3;
        cfg.dataset_size = 1024;
        cfg.seed = 4;

        let run = || {
            let mut net = build_decoder_network::<f32>(ArchTag::Mlp, 8, 4, 4).unwrap();
            let h = train(&mut net, &cfg, &data).unwrap();
            (h, net.param_arrays())
        };
        let (h1, p1) = run();
        let (h2, p2) = run();
        assert_eq!(h1.len(), 3);
        assert_eq!(h1, h2, "loss history must be bit-reproducible");
        assert_eq!(p1, p2, "parameters must be bit-reproducible");
    }

    #[test]
    fn ragged_batches_rejected() {
        let code = PacCode::new(8, 4, &G).unwrap();
        let data = generate_dataset(&code, 0.0, InputMode::Llr, 100, 5).unwrap();
        let mut cfg = TrainConfig::new(ArchTag::Mlp, 0.0);
        cfg.epochs = 1;
        let mut net = build_decoder_network::<f32>(ArchTag::Mlp, 8, 4, 5).unwrap();
        assert!(matches!(
            train(&mut net, &cfg, &data),
            Err(TrainError::RaggedBatches { .. })
        ));
    }

    #[test]
    fn nve_closed_forms() {
        let fano = vec![(0.0, 1e-2), (1.0, 5e-3)];
        assert!((compute_nve(&fano, &fano).unwrap() - 1.0).abs() < 1e-12);
        let doubled: Vec<(f64, f64)> = fano.iter().map(|&(r, b)| (r, 2.0 * b)).collect();
        assert!((compute_nve(&doubled, &fano).unwrap() - 2.0).abs() < 1e-12);
        let mixed = vec![(0.0, 1e-2), (1.0, 1.5e-2)];
        assert!((compute_nve(&mixed, &fano).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nve_rejects_bad_inputs() {
        let fano = vec![(0.0, 1e-2), (1.0, 5e-3)];
        assert!(matches!(
            compute_nve(&fano[..1], &fano),
            Err(TrainError::GridMismatch(_))
        ));
        let zero = vec![(0.0, 1e-2), (1.0, 0.0)];
        assert!(matches!(
            compute_nve(&fano, &zero),
            Err(TrainError::ZeroBaseline(_))
        ));
        let shifted = vec![(0.5, 1e-2), (1.0, 5e-3)];
        assert!(matches!(
            compute_nve(&shifted, &fano),
            Err(TrainError::GridMismatch(0))
        ));
    }

    #[test]
    fn nve_scale_invariance() {
        let fano = vec![(0.0, 1e-2), (1.0, 5e-3), (2.0, 1e-3)];
        let dnn = vec![(0.0, 3e-2), (1.0, 6e-3), (2.0, 4e-3)];
        let a = compute_nve(&dnn, &fano).unwrap();
        let scale = 0.37;
        let dnn2: Vec<_> = dnn.iter().map(|&(r, b)| (r, b * scale)).collect();
        let fano2: Vec<_> = fano.iter().map(|&(r, b)| (r, b * scale)).collect();
        let b = compute_nve(&dnn2, &fano2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
