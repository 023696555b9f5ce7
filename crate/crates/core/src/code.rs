//! PAC code construction and encoding.
//!
//! A PAC code is described by `(N, K, A, g)`: codeword length `N = 2^n`,
//! information length `K`, the set `A` of information positions, and the
//! impulse response `g` of a rate-1 convolution. Encoding is a three-step
//! chain: embed the message into the information positions
//! ([`rate_profile_map`]), run the length-preserving convolution
//! ([`convolve`]), then apply the polar transform ([`polar_transform`]).
//!
//! All indices are 0-based.

use thiserror::Error;

/// A vector over GF(2); every element must be 0 or 1.
pub type BitVec = Vec<u8>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("code length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),
    #[error("information length {k} out of range for N = {n}")]
    InfoLengthOutOfRange { k: usize, n: usize },
    #[error("information set has {got} indices, expected {expected}")]
    ProfileSizeMismatch { got: usize, expected: usize },
    #[error("information index {0} is out of range or duplicated")]
    BadProfileIndex(usize),
    #[error("impulse response must be non-empty with g[first] = g[last] = 1")]
    BadImpulseResponse,
    #[error("message has {got} bits, expected {expected}")]
    MessageLengthMismatch { got: usize, expected: usize },
}

/// Code configuration: `(N, K, A, g)` plus the derived `n = log2 N` and
/// constraint length `m = |g|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacCode {
    n: usize,
    big_n: usize,
    k: usize,
    info_set: Vec<usize>,
    g: Vec<u8>,
}

impl PacCode {
    /// Build a code with the RM rate profile from [`build_rate_profile`].
    pub fn new(big_n: usize, k: usize, g: &[u8]) -> Result<Self, CodeError> {
        let info_set = build_rate_profile(big_n, k)?;
        Self::with_profile(big_n, info_set, g)
    }

    /// Build a code with an explicit information set (ascending, 0-based).
    /// An empty set is permitted here (a frozen-only code), which is useful
    /// for exercising decoder edge cases.
    pub fn with_profile(big_n: usize, info_set: Vec<usize>, g: &[u8]) -> Result<Self, CodeError> {
        if !big_n.is_power_of_two() {
            return Err(CodeError::LengthNotPowerOfTwo(big_n));
        }
        let k = info_set.len();
        if k > big_n {
            return Err(CodeError::InfoLengthOutOfRange { k, n: big_n });
        }
        let mut seen = vec![false; big_n];
        for &i in &info_set {
            if i >= big_n || seen[i] {
                return Err(CodeError::BadProfileIndex(i));
            }
            seen[i] = true;
        }
        let mut info_set = info_set;
        info_set.sort_unstable();
        if g.is_empty() || g[0] != 1 || g[g.len() - 1] != 1 || g.iter().any(|&b| b > 1) {
            return Err(CodeError::BadImpulseResponse);
        }
        Ok(Self {
            n: big_n.trailing_zeros() as usize,
            big_n,
            k,
            info_set,
            g: g.to_vec(),
        })
    }

    /// Codeword length N.
    pub fn block_len(&self) -> usize {
        self.big_n
    }

    /// log2(N).
    pub fn stages(&self) -> usize {
        self.n
    }

    /// Information length K.
    pub fn info_len(&self) -> usize {
        self.k
    }

    /// Code rate K/N.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.big_n as f64
    }

    /// Information positions, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    /// Convolution impulse response, most significant tap first.
    pub fn impulse_response(&self) -> &[u8] {
        &self.g
    }

    /// Constraint length m = |g|.
    pub fn constraint_len(&self) -> usize {
        self.g.len()
    }

    /// True if position `i` carries an information bit.
    pub fn is_info(&self, i: usize) -> bool {
        self.info_set.binary_search(&i).is_ok()
    }

    /// Full encode chain: profile embedding, convolution, polar transform.
    pub fn encode(&self, message: &[u8]) -> Result<BitVec, CodeError> {
        let v = rate_profile_map(message, &self.info_set, self.big_n)?;
        let mut u = convolve(&v, &self.g);
        polar_transform(&mut u);
        Ok(u)
    }

    /// Invert a noiseless codeword back to its message. The polar transform
    /// is an involution and the convolution has g[0] = 1, so the chain is
    /// exactly invertible; used by round-trip checks and perfect-channel
    /// decoding.
    pub fn invert(&self, codeword: &[u8]) -> Result<BitVec, CodeError> {
        if codeword.len() != self.big_n {
            return Err(CodeError::MessageLengthMismatch {
                got: codeword.len(),
                expected: self.big_n,
            });
        }
        let mut u = codeword.to_vec();
        polar_transform(&mut u);
        // Deconvolve: v[i] = u[i] XOR sum_{j>=1} g[j] v[i-j].
        let mut v = vec![0u8; self.big_n];
        for i in 0..self.big_n {
            let mut acc = u[i];
            for (j, &gj) in self.g.iter().enumerate().skip(1) {
                if gj == 1 && i >= j {
                    acc ^= v[i - j];
                }
            }
            v[i] = acc;
        }
        Ok(self.info_set.iter().map(|&i| v[i]).collect())
    }
}

/// Bhattacharyya parameters of the N synthetic channels for a binary
/// erasure channel with erasure probability `z0`, via the recursion
/// `z -> { 2z - z^2, z^2 }`. Smaller is more reliable.
pub fn bhattacharyya(big_n: usize, z0: f64) -> Vec<f64> {
    let mut z = vec![z0];
    while z.len() < big_n {
        let mut next = Vec::with_capacity(z.len() * 2);
        for &zj in &z {
            next.push(2.0 * zj - zj * zj);
            next.push(zj * zj);
        }
        z = next;
    }
    z
}

/// Reed-Muller rate profile: the K indices with the largest Hamming weight
/// of their binary expansion. Ties at the cut-off weight are broken by the
/// Bhattacharyya parameters from [`bhattacharyya`] with `z0 = 0.5` (most
/// reliable first). Returned ascending.
pub fn build_rate_profile(big_n: usize, k: usize) -> Result<Vec<usize>, CodeError> {
    if !big_n.is_power_of_two() {
        return Err(CodeError::LengthNotPowerOfTwo(big_n));
    }
    if k == 0 || k > big_n {
        return Err(CodeError::InfoLengthOutOfRange { k, n: big_n });
    }
    let z = bhattacharyya(big_n, 0.5);
    let mut order: Vec<usize> = (0..big_n).collect();
    // Primary key: Hamming weight, descending. Tie-break: reliability.
    order.sort_by(|&a, &b| {
        let wa = (a as u32).count_ones();
        let wb = (b as u32).count_ones();
        wb.cmp(&wa).then_with(|| z[a].partial_cmp(&z[b]).unwrap())
    });
    let mut profile: Vec<usize> = order[..k].to_vec();
    profile.sort_unstable();
    Ok(profile)
}

/// Place message bits at the information positions, zeros elsewhere.
pub fn rate_profile_map(
    message: &[u8],
    info_set: &[usize],
    big_n: usize,
) -> Result<BitVec, CodeError> {
    if message.len() != info_set.len() {
        return Err(CodeError::MessageLengthMismatch {
            got: message.len(),
            expected: info_set.len(),
        });
    }
    let mut v = vec![0u8; big_n];
    for (&pos, &bit) in info_set.iter().zip(message) {
        v[pos] = bit & 1;
    }
    Ok(v)
}

/// Rate-1 convolution over GF(2): `u[i] = XOR_j g[j] * v[i-j]`, a streaming
/// shift register. Equals multiplication by the upper-triangular Toeplitz
/// matrix built from `g`.
pub fn convolve(v: &[u8], g: &[u8]) -> BitVec {
    let mut u = vec![0u8; v.len()];
    for i in 0..v.len() {
        let mut acc = 0u8;
        for (j, &gj) in g.iter().enumerate() {
            if i >= j {
                acc ^= gj & v[i - j];
            }
        }
        u[i] = acc;
    }
    u
}

/// In-place polar transform `u -> u * F^{(x) n}` with `F = [[1,0],[1,1]]`,
/// as the standard O(N log N) butterfly. Panics if the length is not a
/// power of two.
pub fn polar_transform(u: &mut [u8]) {
    let n = u.len();
    assert!(n.is_power_of_two(), "polar transform length must be 2^n");
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for j in block..block + h {
                u[j] ^= u[j + h];
            }
        }
        h *= 2;
    }
}

/// Parse a bit string like `"1011011"` into a bit vector.
pub fn parse_bits(s: &str) -> Result<BitVec, CodeError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(CodeError::BadImpulseResponse),
        })
        .collect()
}

/// Format a bit vector as a compact string of `0`/`1`.
pub fn format_bits(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Oracle: explicit upper-triangular Toeplitz matrix of Eq.-style rows,
    /// G[i][i+j] = g[j].
    fn toeplitz_matrix(g: &[u8], n: usize) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; n]; n];
        for i in 0..n {
            for (j, &gj) in g.iter().enumerate() {
                if i + j < n {
                    m[i][i + j] = gj;
                }
            }
        }
        m
    }

    /// Oracle: n-fold Kronecker power of F = [[1,0],[1,1]].
    fn kronecker_f(stages: usize) -> Vec<Vec<u8>> {
        let mut m = vec![vec![1u8]];
        for _ in 0..stages {
            let s = m.len();
            let mut next = vec![vec![0u8; 2 * s]; 2 * s];
            for r in 0..s {
                for c in 0..s {
                    if m[r][c] == 1 {
                        next[r][c] = 1;
                        next[r + s][c] = 1;
                        next[r + s][c + s] = 1;
                    }
                }
            }
            m = next;
        }
        m
    }

    fn mat_vec_gf2(v: &[u8], m: &[Vec<u8>]) -> Vec<u8> {
        let n = m[0].len();
        let mut out = vec![0u8; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 1 {
                for c in 0..n {
                    out[c] ^= m[i][c];
                }
            }
        }
        out
    }

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitVec {
        (0..n).map(|_| rng.gen_range(0..=1) as u8).collect()
    }

    const G_PAPER: [u8; 7] = [1, 0, 1, 1, 0, 1, 1];

    #[test]
    fn rm_profile_8_4() {
        assert_eq!(build_rate_profile(8, 4).unwrap(), vec![3, 5, 6, 7]);
    }

    #[test]
    fn rm_profile_full_rate() {
        assert_eq!(
            build_rate_profile(16, 16).unwrap(),
            (0..16).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rm_profile_16_8_matches_enumeration_oracle() {
        // Five indices of weight >= 3 are forced; the remaining three come
        // from the weight-2 class ranked by the erasure recursion.
        let z = bhattacharyya(16, 0.5);
        let forced: Vec<usize> = (0..16).filter(|i| (*i as u32).count_ones() >= 3).collect();
        assert_eq!(forced, vec![7, 11, 13, 14, 15]);
        let mut weight2: Vec<usize> = (0..16).filter(|i| (*i as u32).count_ones() == 2).collect();
        weight2.sort_by(|&a, &b| z[a].partial_cmp(&z[b]).unwrap());
        let mut expected = forced;
        expected.extend_from_slice(&weight2[..3]);
        expected.sort_unstable();
        assert_eq!(build_rate_profile(16, 8).unwrap(), expected);
        // The concrete set, frozen here so regressions are visible.
        assert_eq!(
            build_rate_profile(16, 8).unwrap(),
            vec![7, 9, 10, 11, 12, 13, 14, 15]
        );
    }

    #[test]
    fn rm_profile_rejects_bad_args() {
        assert_eq!(
            build_rate_profile(12, 4).unwrap_err(),
            CodeError::LengthNotPowerOfTwo(12)
        );
        assert!(build_rate_profile(8, 9).is_err());
        assert!(build_rate_profile(8, 0).is_err());
    }

    #[test]
    fn profile_map_places_bits() {
        let a = vec![3, 5, 6, 7];
        let v = rate_profile_map(&[1, 0, 1, 1], &a, 8).unwrap();
        assert_eq!(v, vec![0, 0, 0, 1, 0, 0, 1, 1]);
        assert_eq!(rate_profile_map(&[0; 4], &a, 8).unwrap(), vec![0; 8]);
        // K = N is the identity embedding.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_bits(&mut rng, 16);
        let all: Vec<usize> = (0..16).collect();
        assert_eq!(rate_profile_map(&d, &all, 16).unwrap(), d);
    }

    #[test]
    fn profile_map_rejects_length_mismatch() {
        assert!(rate_profile_map(&[1, 0], &[3, 5, 6], 8).is_err());
    }

    #[test]
    fn convolve_impulse_response() {
        let mut v = vec![0u8; 16];
        v[0] = 1;
        let u = convolve(&v, &G_PAPER);
        let mut expected = vec![0u8; 16];
        expected[..7].copy_from_slice(&G_PAPER);
        assert_eq!(u, expected);
    }

    #[test]
    fn convolve_zero_and_identity() {
        assert_eq!(convolve(&[0; 16], &G_PAPER), vec![0; 16]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_bits(&mut rng, 32);
        assert_eq!(convolve(&v, &[1]), v);
    }

    #[test]
    fn convolve_matches_toeplitz_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &n in &[8usize, 16, 32] {
            let m = toeplitz_matrix(&G_PAPER, n);
            for _ in 0..1000 {
                let v = random_bits(&mut rng, n);
                assert_eq!(convolve(&v, &G_PAPER), mat_vec_gf2(&v, &m));
            }
        }
    }

    #[test]
    fn polar_transform_n2_by_hand() {
        let mut u = vec![0, 1];
        polar_transform(&mut u);
        assert_eq!(u, vec![1, 1]);
        let mut u = vec![1, 0];
        polar_transform(&mut u);
        assert_eq!(u, vec![1, 0]);
    }

    #[test]
    fn polar_transform_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f4 = kronecker_f(4);
        for _ in 0..200 {
            let u = random_bits(&mut rng, 16);
            let mut butterfly = u.clone();
            polar_transform(&mut butterfly);
            assert_eq!(butterfly, mat_vec_gf2(&u, &f4));
        }
    }

    #[test]
    fn encode_matches_full_matrix_oracle_16_8() {
        let code = PacCode::new(16, 8, &G_PAPER).unwrap();
        let g_mat = toeplitz_matrix(&G_PAPER, 16);
        let f_mat = kronecker_f(4);
        let mut seen = std::collections::HashSet::new();
        for msg in 0u16..256 {
            let d: Vec<u8> = (0..8).map(|b| ((msg >> b) & 1) as u8).collect();
            let v = rate_profile_map(&d, code.info_set(), 16).unwrap();
            let expected = mat_vec_gf2(&mat_vec_gf2(&v, &g_mat), &f_mat);
            let x = code.encode(&d).unwrap();
            assert_eq!(x, expected);
            seen.insert(x);
        }
        // GF(2)-linear encoder with full-rank chain: all codewords distinct.
        assert_eq!(seen.len(), 256);
    }

    #[test]
    fn encode_is_linear() {
        let code = PacCode::new(16, 8, &G_PAPER).unwrap();
        assert_eq!(code.encode(&[0; 8]).unwrap(), vec![0; 16]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_bits(&mut rng, 8);
            let b = random_bits(&mut rng, 8);
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = code.encode(&a).unwrap();
            let eb = code.encode(&b).unwrap();
            let esum: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
            assert_eq!(esum, code.encode(&sum).unwrap());
        }
    }

    #[test]
    fn invert_round_trips() {
        let code = PacCode::new(16, 8, &G_PAPER).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let d = random_bits(&mut rng, 8);
            let x = code.encode(&d).unwrap();
            assert_eq!(code.invert(&x).unwrap(), d);
        }
    }

    #[test]
    fn code_validation() {
        assert!(PacCode::new(12, 4, &[1]).is_err());
        assert!(PacCode::new(8, 4, &[0, 1, 1]).is_err());
        assert!(PacCode::new(8, 4, &[1, 1, 0]).is_err());
        assert!(PacCode::new(8, 4, &[]).is_err());
        assert!(PacCode::with_profile(8, vec![1, 1, 2, 3], &[1]).is_err());
        assert!(PacCode::with_profile(8, vec![1, 8], &[1]).is_err());
        let code = PacCode::with_profile(8, vec![7, 3, 5, 6], &[1, 1]).unwrap();
        assert_eq!(code.info_set(), &[3, 5, 6, 7]);
        assert!(code.encode(&[1, 0, 1]).is_err());
    }

    #[test]
    fn bits_parse_and_format() {
        assert_eq!(parse_bits("1011011").unwrap(), G_PAPER.to_vec());
        assert_eq!(format_bits(&G_PAPER), "1011011");
        assert!(parse_bits("10x1").is_err());
    }

    proptest! {
        #[test]
        fn polar_transform_is_involution(bits in proptest::collection::vec(0u8..2, 1..=6).prop_map(|sel| {
            // Length 2^k for k in 0..=5, content seeded from the selector.
            let k = sel.len() - 1;
            let mut v = vec![0u8; 1 << k];
            for (i, b) in v.iter_mut().enumerate() {
                *b = sel[i % sel.len()];
            }
            v
        })) {
            let mut twice = bits.clone();
            polar_transform(&mut twice);
            polar_transform(&mut twice);
            prop_assert_eq!(twice, bits);
        }

        #[test]
        fn frozen_positions_stay_zero(msg in proptest::collection::vec(0u8..2, 8)) {
            let a = build_rate_profile(16, 8).unwrap();
            let v = rate_profile_map(&msg, &a, 16).unwrap();
            for i in 0..16 {
                if !a.contains(&i) {
                    prop_assert_eq!(v[i], 0);
                }
            }
        }
    }
}
