//! Self-describing binary checkpoint files.
//!
//! Layout (all integers little-endian, floats IEEE-754 LE):
//!
//! ```text
//! offset  field
//! 0       version byte (currently 1)
//! 1       architecture tag: 0 = mlp, 1 = cnn, 2 = rnn
//! 2       input mode: 0 = hard, 1 = direct, 2 = llr
//! 3       u32 N, u32 K
//! ..      u32 m, then m bytes of g (one bit per byte)
//! ..      u32 |A|, then |A| u32 information indices
//! ..      u64 master seed
//! ..      u32 epochs trained
//! ..      f64 training Eb/N0 in dB
//! ..      u8 has_optimizer_state
//! ..      u32 P (parameter array count), then P arrays: u32 len, len f32
//! ..      u32 S (state array count: running stats), same encoding
//! ..      if has_optimizer_state: u64 t, f64 lr, then P pairs of
//! ..        (u32 len, len f32 first moment, len f32 second moment)
//! ```
//!
//! Parameter arrays appear in layer order; per layer the order is weights
//! then biases (LSTM: input weights, recurrent weights, the two bias
//! vectors; normalization: scale then shift). State arrays are the running
//! mean and variance of each normalization layer, in layer order.

use super::{build_decoder_network, AdamState, ArchTag, Network};
use crate::channel::InputMode;
use crate::code::PacCode;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (unsupported version {0})")]
    BadVersion(u8),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Everything a checkpoint stores besides the parameters themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub arch: ArchTag,
    pub input_mode: InputMode,
    pub code_n: usize,
    pub code_k: usize,
    pub g: Vec<u8>,
    pub info_set: Vec<usize>,
    pub seed: u64,
    pub epochs_trained: u32,
    pub rho_t_db: f64,
}

impl CheckpointMeta {
    pub fn code(&self) -> PacCode {
        PacCode::with_profile(self.code_n, self.info_set.clone(), &self.g)
            .expect("checkpoint carries a valid code")
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32_slice(&mut self, v: &[f32]) {
        self.u32(v.len() as u32);
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Corrupt("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32_vec(&mut self) -> Result<Vec<f32>, CheckpointError> {
        let n = self.u32()? as usize;
        let raw = self.take(4 * n)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn arch_byte(a: ArchTag) -> u8 {
    match a {
        ArchTag::Mlp => 0,
        ArchTag::Cnn => 1,
        ArchTag::Rnn => 2,
    }
}

fn mode_byte(m: InputMode) -> u8 {
    match m {
        InputMode::Hard => 0,
        InputMode::Direct => 1,
        InputMode::Llr => 2,
    }
}

/// Serialize a trained network, its metadata, and (optionally) the
/// optimizer state.
pub fn save(
    path: &Path,
    net: &Network<f32>,
    meta: &CheckpointMeta,
    adam: Option<&AdamState<f32>>,
) -> Result<(), CheckpointError> {
    let mut w = Writer { buf: Vec::new() };
    w.u8(CHECKPOINT_VERSION);
    w.u8(arch_byte(meta.arch));
    w.u8(mode_byte(meta.input_mode));
    w.u32(meta.code_n as u32);
    w.u32(meta.code_k as u32);
    w.u32(meta.g.len() as u32);
    w.buf.extend_from_slice(&meta.g);
    w.u32(meta.info_set.len() as u32);
    for &i in &meta.info_set {
        w.u32(i as u32);
    }
    w.u64(meta.seed);
    w.u32(meta.epochs_trained);
    w.f64(meta.rho_t_db);
    w.u8(adam.is_some() as u8);

    let mut net = net.clone();
    let mut params: Vec<Vec<f32>> = Vec::new();
    net.visit_params_mut(&mut |p, _| params.push(p.to_vec()));
    w.u32(params.len() as u32);
    for p in &params {
        w.f32_slice(p);
    }
    let mut stats: Vec<Vec<f32>> = Vec::new();
    net.visit_state_mut(&mut |s| stats.push(s.to_vec()));
    w.u32(stats.len() as u32);
    for s in &stats {
        w.f32_slice(s);
    }
    if let Some(st) = adam {
        w.u64(st.t);
        w.f64(st.lr);
        for (m, v) in st.m.iter().zip(&st.v) {
            w.f32_slice(m);
            w.f32_slice(v);
        }
    }

    let io_err = |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(&w.buf).map_err(io_err)?;
    Ok(())
}

/// Load a checkpoint; the network is rebuilt from the stored shape and the
/// stored arrays are validated against it.
#[allow(clippy::type_complexity)]
pub fn load(
    path: &Path,
) -> Result<(Network<f32>, CheckpointMeta, Option<AdamState<f32>>), CheckpointError> {
    let raw = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = Reader { buf: &raw, pos: 0 };
    let version = r.u8()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let arch = match r.u8()? {
        0 => ArchTag::Mlp,
        1 => ArchTag::Cnn,
        2 => ArchTag::Rnn,
        b => return Err(CheckpointError::Corrupt(format!("bad arch byte {b}"))),
    };
    let input_mode = match r.u8()? {
        0 => InputMode::Hard,
        1 => InputMode::Direct,
        2 => InputMode::Llr,
        b => return Err(CheckpointError::Corrupt(format!("bad mode byte {b}"))),
    };
    let code_n = r.u32()? as usize;
    let code_k = r.u32()? as usize;
    let g_len = r.u32()? as usize;
    let g = r.take(g_len)?.to_vec();
    let a_len = r.u32()? as usize;
    let mut info_set = Vec::with_capacity(a_len);
    for _ in 0..a_len {
        info_set.push(r.u32()? as usize);
    }
    let seed = r.u64()?;
    let epochs_trained = r.u32()?;
    let rho_t_db = r.f64()?;
    let has_adam = r.u8()? != 0;

    let meta = CheckpointMeta {
        arch,
        input_mode,
        code_n,
        code_k,
        g,
        info_set,
        seed,
        epochs_trained,
        rho_t_db,
    };

    let mut net = build_decoder_network::<f32>(arch, code_n, code_k, seed)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let n_params = r.u32()? as usize;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        params.push(r.f32_vec()?);
    }
    let mut slot = 0usize;
    let mut shape_err = None;
    net.visit_params_mut(&mut |p, _| {
        if slot >= params.len() || params[slot].len() != p.len() {
            shape_err = Some(slot);
        } else {
            p.copy_from_slice(&params[slot]);
        }
        slot += 1;
    });
    if slot != params.len() || shape_err.is_some() {
        return Err(CheckpointError::Corrupt(format!(
            "parameter arrays do not match the {arch} architecture"
        )));
    }

    let n_stats = r.u32()? as usize;
    let mut stats = Vec::with_capacity(n_stats);
    for _ in 0..n_stats {
        stats.push(r.f32_vec()?);
    }
    let mut slot = 0usize;
    let mut stat_err = false;
    net.visit_state_mut(&mut |s| {
        if slot >= stats.len() || stats[slot].len() != s.len() {
            stat_err = true;
        } else {
            s.copy_from_slice(&stats[slot]);
        }
        slot += 1;
    });
    if slot != stats.len() || stat_err {
        return Err(CheckpointError::Corrupt("state arrays mismatch".into()));
    }

    let adam = if has_adam {
        let t = r.u64()?;
        let lr = r.f64()?;
        let mut state = AdamState::new(&mut net, lr);
        state.t = t;
        for i in 0..n_params {
            let m = r.f32_vec()?;
            let v = r.f32_vec()?;
            if m.len() != state.m[i].len() || v.len() != state.v[i].len() {
                return Err(CheckpointError::Corrupt("optimizer arrays mismatch".into()));
            }
            state.m[i] = m;
            state.v[i] = v;
        }
        Some(state)
    } else {
        None
    };

    Ok((net, meta, adam))
}
