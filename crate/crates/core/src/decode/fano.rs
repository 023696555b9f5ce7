//! Fano sequential decoding over the PAC tree.
//!
//! Depth-first search with a running threshold `T` and step `delta`. Branch
//! `b` at position `i` is scored
//!
//! ```text
//! gamma_i(b) = log2(P_b) + 1 - bias(i)
//! ```
//!
//! where `P_b` is the successive-cancellation posterior of the branch's
//! pre-transform value and `bias` charges the per-branch rate (one bit at
//! information positions, zero at frozen positions, by default). Frozen
//! positions contribute a single branch whose transmitted bit is forced
//! through the convolution register. The search follows the classic
//! move-forward / move-back / lower-threshold rules and accepts the first
//! full-length path.

use super::sc::{branch_penalty, sc_bit_llr_with, ScWorkspace};
use super::DecodeResult;
use crate::code::{BitVec, PacCode};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FanoError {
    #[error("threshold step must be positive, got {0}")]
    BadDelta(f64),
    #[error("node visit cap {cap} must be at least the code length {n}")]
    CapTooSmall { cap: u64, n: usize },
}

/// Fano search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoConfig {
    /// Threshold step.
    pub delta: f64,
    /// Metric bias at information positions.
    pub bias_info: f64,
    /// Metric bias at frozen positions.
    pub bias_frozen: f64,
    /// Per-frame complexity cap; reaching it falls back to a greedy
    /// completion of the deepest path found.
    pub max_node_visits: u64,
}

impl FanoConfig {
    /// Defaults: `delta = 2.0`, rate-matched biases, cap `1e5 * N`.
    pub fn for_code(code: &PacCode) -> Self {
        Self {
            delta: 2.0,
            bias_info: 1.0,
            bias_frozen: 0.0,
            max_node_visits: 100_000 * code.block_len() as u64,
        }
    }

    pub fn validate(&self, code: &PacCode) -> Result<(), FanoError> {
        if !(self.delta > 0.0) {
            return Err(FanoError::BadDelta(self.delta));
        }
        if self.max_node_visits < code.block_len() as u64 {
            return Err(FanoError::CapTooSmall {
                cap: self.max_node_visits,
                n: code.block_len(),
            });
        }
        Ok(())
    }
}

/// One scored branch out of the current node.
#[derive(Debug, Clone, Copy, Default)]
struct Branch {
    v: u8,
    u: u8,
    gamma: f64,
}

/// Candidate branches at one depth, best first.
#[derive(Debug, Clone, Default)]
struct NodeBranches {
    branch: [Branch; 2],
    count: usize,
}

struct Search<'a> {
    code: &'a PacCode,
    llrs: &'a [f64],
    ws: ScWorkspace,
    /// Chosen pre-transform bits along the current path.
    v: BitVec,
    /// Convolved bits along the current path (SC conditioning prefix).
    u: BitVec,
    /// Cumulative metric after each branch on the path.
    metric: Vec<f64>,
    /// Rank (0 = best branch) taken at each depth.
    rank: Vec<usize>,
    /// Branch cache per depth, valid for the current prefix.
    cands: Vec<NodeBranches>,
    visits: u64,
    /// Deepest prefix seen, for the visit-cap fallback.
    best_depth: usize,
    best_v: BitVec,
}

/// Convolution output at position `i`: the contribution of past bits in
/// `history` plus the candidate bit `vi` through `g[0] = 1`.
fn conv_bit(history: &[u8], vi: u8, i: usize, g: &[u8]) -> u8 {
    let mut acc = g[0] & vi;
    for (j, &gj) in g.iter().enumerate().skip(1) {
        if gj == 1 && i >= j {
            acc ^= history[i - j];
        }
    }
    acc
}

impl<'a> Search<'a> {
    /// Score the branches out of the current node (depth `i`), best first.
    fn expand(&mut self, i: usize, cfg: &FanoConfig) {
        const LOG2_E: f64 = std::f64::consts::LOG2_E;
        let l = sc_bit_llr_with(self.llrs, &self.u, i, &mut self.ws);
        let g = self.code.impulse_response();
        let u0 = conv_bit(&self.v, 0, i, g);
        let node = &mut self.cands[i];
        if self.code.is_info(i) {
            let mut b0 = Branch {
                v: 0,
                u: u0,
                gamma: 1.0 - cfg.bias_info - branch_penalty(u0, l) * LOG2_E,
            };
            let mut b1 = Branch {
                v: 1,
                u: u0 ^ 1,
                gamma: 1.0 - cfg.bias_info - branch_penalty(u0 ^ 1, l) * LOG2_E,
            };
            if b1.gamma > b0.gamma {
                std::mem::swap(&mut b0, &mut b1);
            }
            node.branch = [b0, b1];
            node.count = 2;
        } else {
            node.branch[0] = Branch {
                v: 0,
                u: u0,
                gamma: 1.0 - cfg.bias_frozen - branch_penalty(u0, l) * LOG2_E,
            };
            node.count = 1;
        }
    }

    fn push(&mut self, i: usize, rank: usize, m_f: f64) {
        let b = self.cands[i].branch[rank];
        self.v.push(b.v);
        self.u.push(b.u);
        self.metric.push(m_f);
        self.rank.push(rank);
        if self.v.len() > self.best_depth {
            self.best_depth = self.v.len();
            self.best_v = self.v.clone();
        }
    }

    fn pop(&mut self) -> (usize, usize) {
        let depth = self.v.len() - 1;
        self.v.pop();
        self.u.pop();
        self.metric.pop();
        (depth, self.rank.pop().expect("non-empty path"))
    }

    /// Complete the deepest explored prefix with per-bit hard decisions.
    fn greedy_completion(&mut self) -> BitVec {
        let g = self.code.impulse_response().to_vec();
        let mut v = std::mem::take(&mut self.best_v);
        let mut u: BitVec = (0..v.len()).map(|i| conv_bit(&v, v[i], i, &g)).collect();
        for i in v.len()..self.code.block_len() {
            let l = sc_bit_llr_with(self.llrs, &u, i, &mut self.ws);
            let u0 = conv_bit(&v, 0, i, &g);
            let vi = if self.code.is_info(i) && branch_penalty(u0 ^ 1, l) < branch_penalty(u0, l)
            {
                1
            } else {
                0
            };
            v.push(vi);
            u.push(u0 ^ vi);
        }
        v
    }
}

/// Decode one frame with the Fano algorithm. Never aborts: exceeding the
/// visit cap returns a greedy completion of the deepest explored path, with
/// `node_visits` pinned to the cap as the censoring flag.
pub fn fano_decode(channel_llrs: &[f64], code: &PacCode, cfg: &FanoConfig) -> DecodeResult {
    let start = Instant::now();
    let n = code.block_len();
    assert_eq!(channel_llrs.len(), n, "LLR length must equal N");
    cfg.validate(code).expect("valid Fano config");

    let mut s = Search {
        code,
        llrs: channel_llrs,
        ws: ScWorkspace::for_len(n),
        v: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        metric: Vec::with_capacity(n),
        rank: Vec::with_capacity(n),
        cands: vec![NodeBranches::default(); n],
        visits: 0,
        best_depth: 0,
        best_v: Vec::new(),
    };

    let mut t = 0.0f64;
    let mut try_rank = 0usize;

    loop {
        let depth = s.v.len();
        if depth == n {
            let metric = s.metric[n - 1];
            let d_hat = code.info_set().iter().map(|&i| s.v[i]).collect();
            return DecodeResult {
                d_hat,
                metric,
                node_visits: s.visits,
                elapsed: start.elapsed(),
            };
        }
        if s.visits >= cfg.max_node_visits {
            let v = s.greedy_completion();
            return DecodeResult {
                d_hat: code.info_set().iter().map(|&i| v[i]).collect(),
                metric: f64::NEG_INFINITY,
                node_visits: cfg.max_node_visits,
                elapsed: start.elapsed(),
            };
        }

        // Look forward along the requested branch.
        if try_rank == 0 {
            s.expand(depth, cfg);
        }
        let m_cur = if depth == 0 { 0.0 } else { s.metric[depth - 1] };
        s.visits += 1;
        let m_f = m_cur + s.cands[depth].branch[try_rank].gamma;
        if m_f >= t {
            // First visit to the new node: tighten the threshold.
            if m_cur < t + cfg.delta {
                t += cfg.delta * ((m_f - t) / cfg.delta).floor();
            }
            s.push(depth, try_rank, m_f);
            try_rank = 0;
            continue;
        }

        // Fall back: move towards the root until a sibling branch can be
        // tried or the threshold must be lowered.
        loop {
            let depth = s.v.len();
            let m_par = if depth == 0 {
                f64::NEG_INFINITY
            } else if depth == 1 {
                0.0
            } else {
                s.metric[depth - 2]
            };
            if m_par >= t {
                let (pos, taken) = s.pop();
                if taken + 1 < s.cands[pos].count {
                    try_rank = taken + 1;
                    break;
                }
                // Branches exhausted here; keep moving back.
            } else {
                t -= cfg.delta;
                try_rank = 0;
                break;
            }
        }
    }
}
