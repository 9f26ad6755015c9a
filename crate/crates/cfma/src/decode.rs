//! CFMA decode chains.
//!
//! Every chain follows the same shape: decode the (level) sum codeword on
//! the higher-rate parity matrix with a sum-stage LLR, then decode one
//! user's codeword conditioned on the sum, and reconstruct the other user
//! algebraically. Stages keep going after a failure (using the failed
//! stage's hard decision) so per-stage error rates stay measurable, but
//! downstream reports are marked as dependent on a failed stage.
//!
//! Reconstruction per level is `u2^(l) = s^(l) xor u1^(l) xor c^(l)`: the
//! carry term is required for the digits of a modular sum to be consistent,
//! and the final symbols then satisfy `u2 = (s - u1) mod 2^L` exactly.

use crate::channel::{transmit_interference, Noise};
use crate::gf2::{Encoder, NestedCodePair, ParityCheckMatrix};
use crate::levels::carry_bit;
pub use crate::levels::{carry_vector, sum_digits, sum_mod};
use crate::llr::{
    llr_kuser_stage, llr_sum_binary, llr_user_given_sum_binary, Axis, ComplexMacLlr, LevelContext,
    MultilevelMacLlr, QamSymbolState,
};
use crate::modulation::{map_pam_label, map_qam_labels, Family, ModulationSpec};
use crate::spa::{spa_decode, DecodeResult};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("codebook has {got} level(s) but the modulation uses {expected}")]
    LevelCountMismatch { expected: usize, got: usize },
    #[error("level {level} code length {got} differs from level 1 length {expected}")]
    LengthMismatch { level: usize, expected: usize, got: usize },
    #[error("modulation family {family:?} is not valid for this chain")]
    WrongFamily { family: Family },
    #[error("observation length {got}, expected {expected}")]
    ObservationLength { expected: usize, got: usize },
    #[error("complex chain needs an even code length, got {0}")]
    OddLength(usize),
    #[error("sampled subcode word fails the supercode at level {level}")]
    NotNested { level: usize },
    #[error("K = {0} users unsupported (need 2..=4)")]
    UnsupportedUserCount(usize),
    #[error("user {user} code length {got} differs from user 1 length {expected}")]
    UserLengthMismatch { user: usize, expected: usize, got: usize },
    #[error(transparent)]
    Code(#[from] crate::gf2::CodeError),
    #[error(transparent)]
    Llr(#[from] crate::llr::LlrError),
    #[error(transparent)]
    Spa(#[from] crate::spa::SpaError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// Which user transmits with the higher-rate (merged) code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HigherRateUser {
    User1,
    User2,
}

/// One level of the codebook: a nested pair plus the user assignment.
#[derive(Debug, Clone)]
pub struct LevelCode {
    pair: NestedCodePair,
    higher: HigherRateUser,
    enc_sub: Encoder,
    enc_sup: Encoder,
}

impl LevelCode {
    pub fn new(pair: NestedCodePair, higher: HigherRateUser) -> Result<Self, DecodeError> {
        let enc_sub = Encoder::derive(pair.sub())?;
        let enc_sup = Encoder::derive(pair.sup())?;
        Ok(Self { pair, higher, enc_sub, enc_sup })
    }

    pub fn pair(&self) -> &NestedCodePair {
        &self.pair
    }

    pub fn higher(&self) -> HigherRateUser {
        self.higher
    }

    /// The higher-rate matrix that stage 1 decodes on and the sum lives in.
    pub fn h_super(&self) -> &ParityCheckMatrix {
        self.pair.sup()
    }

    pub fn h_user(&self, user: HigherRateUser) -> &ParityCheckMatrix {
        if user == self.higher {
            self.pair.sup()
        } else {
            self.pair.sub()
        }
    }

    pub fn encoder_super(&self) -> &Encoder {
        &self.enc_sup
    }

    pub fn encoder_user(&self, user: HigherRateUser) -> &Encoder {
        if user == self.higher {
            &self.enc_sup
        } else {
            &self.enc_sub
        }
    }
}

/// First-stage coefficient pair: decode the plain sum of the two codewords.
pub const STAGE1_COEFFICIENTS: (u8, u8) = (1, 1);
/// Second-stage coefficient pair: decode one user directly.
pub const STAGE2_COEFFICIENTS: (u8, u8) = (1, 0);

/// Per-level nested codes plus the modulation they feed.
#[derive(Debug, Clone)]
pub struct CfmaCodebook {
    levels: Vec<LevelCode>,
    modulation: ModulationSpec,
}

impl CfmaCodebook {
    /// Validates level count against the modulation, equal code lengths,
    /// and spot-checks the nesting with a few encoded subcode words.
    pub fn new(levels: Vec<LevelCode>, modulation: ModulationSpec) -> Result<Self, DecodeError> {
        if levels.len() != modulation.levels {
            return Err(DecodeError::LevelCountMismatch {
                expected: modulation.levels,
                got: levels.len(),
            });
        }
        let n = levels[0].pair().sub().n();
        for (idx, lvl) in levels.iter().enumerate() {
            if lvl.pair().sub().n() != n || lvl.pair().sup().n() != n {
                return Err(DecodeError::LengthMismatch {
                    level: idx + 1,
                    expected: n,
                    got: lvl.pair().sup().n(),
                });
            }
            for probe in 0..4u64 {
                let msg: Vec<u8> =
                    (0..lvl.enc_sub.k()).map(|i| ((probe >> (i % 8)) & 1) as u8).collect();
                let word = lvl.enc_sub.encode(&msg)?;
                if !lvl.pair().sup().is_codeword(&word)? {
                    return Err(DecodeError::NotNested { level: idx + 1 });
                }
            }
        }
        if modulation.family == Family::QamMultilevel && !n.is_multiple_of(2) {
            return Err(DecodeError::OddLength(n));
        }
        Ok(Self { levels, modulation })
    }

    /// Binary (single-level) codebook.
    pub fn binary(
        pair: NestedCodePair,
        higher: HigherRateUser,
        modulation: ModulationSpec,
    ) -> Result<Self, DecodeError> {
        Self::new(vec![LevelCode::new(pair, higher)?], modulation)
    }

    pub fn levels(&self) -> &[LevelCode] {
        &self.levels
    }

    /// Level access, 1-based like the decoding chain.
    pub fn level(&self, l: usize) -> &LevelCode {
        &self.levels[l - 1]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn modulation(&self) -> &ModulationSpec {
        &self.modulation
    }

    pub fn n(&self) -> usize {
        self.levels[0].pair().sub().n()
    }

    /// Rate pair (R1, R2) in bits per channel use (per complex symbol for
    /// QAM).
    pub fn rate_pair(&self) -> (f64, f64) {
        let n = self.n() as f64;
        let mut k1 = 0.0;
        let mut k2 = 0.0;
        for lvl in &self.levels {
            k1 += lvl.encoder_user(HigherRateUser::User1).k() as f64;
            k2 += lvl.encoder_user(HigherRateUser::User2).k() as f64;
        }
        let per_symbol = match self.modulation.family {
            Family::QamMultilevel => 2.0,
            _ => 1.0,
        };
        (per_symbol * k1 / n, per_symbol * k2 / n)
    }
}

/// Convergence report for one decode stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageReport {
    pub converged: bool,
    pub iterations: usize,
    /// Set when some earlier stage in the chain failed, so this stage was
    /// conditioned on untrusted side information.
    pub dependent_on_failed_stage: bool,
}

impl StageReport {
    fn from_decode(res: &DecodeResult, tainted: bool) -> Self {
        Self {
            converged: res.converged,
            iterations: res.iterations_used,
            dependent_on_failed_stage: tainted,
        }
    }
}

/// Output of a two-user CFMA chain.
#[derive(Debug, Clone)]
pub struct CfmaResult {
    /// Sum codeword, one Z_{2^L} symbol per code position.
    pub s_hat: Vec<u32>,
    pub u1_hat: Vec<u32>,
    pub u2_hat: Vec<u32>,
    /// Per-level sum-stage reports, level 1 first.
    pub sum_stages: Vec<StageReport>,
    /// Per-level user-stage reports.
    pub user_stages: Vec<StageReport>,
    /// Per-level bit planes of the decoded sum.
    pub s_levels: Vec<Vec<u8>>,
    pub u1_levels: Vec<Vec<u8>>,
    pub u2_levels: Vec<Vec<u8>>,
}

impl CfmaResult {
    pub fn all_converged(&self) -> bool {
        self.sum_stages.iter().chain(&self.user_stages).all(|s| s.converged)
    }
}

fn stack_levels(levels: &[Vec<u8>]) -> Vec<u32> {
    let n = levels[0].len();
    (0..n)
        .map(|i| {
            levels
                .iter()
                .enumerate()
                .fold(0u32, |acc, (l, bits)| acc | (u32::from(bits[i] & 1) << l))
        })
        .collect()
}

/// Maps per-level codewords of one user onto PAM symbols.
pub fn modulate_pam_levels(levels: &[Vec<u8>], spec: &ModulationSpec) -> Vec<f64> {
    let labels = stack_levels(levels);
    labels.iter().map(|&u| map_pam_label(u, spec.power, spec.levels)).collect()
}

/// Maps per-level codewords onto QAM symbols; code position 2i (0-based)
/// rides the imaginary axis of complex symbol i, position 2i+1 the real
/// axis. `rotate` applies the user-2 rotation theta.
pub fn modulate_qam_levels(
    levels: &[Vec<u8>],
    spec: &ModulationSpec,
    rotate: bool,
) -> Vec<Complex64> {
    let labels = stack_levels(levels);
    let theta = if rotate { spec.theta } else { 0.0 };
    labels
        .chunks_exact(2)
        .map(|pair| map_qam_labels(pair[0], pair[1], spec.power, spec.levels, theta))
        .collect()
}

/// Two-user binary CFMA (BPSK): decode s = u1 xor u2 on the supercode, then
/// the target user's codeword given s, and take the other user as the XOR.
pub fn decode_cfma_binary(
    y: &[f64],
    cb: &CfmaCodebook,
    gains: (f64, f64),
    target: HigherRateUser,
    max_iter: usize,
) -> Result<CfmaResult, DecodeError> {
    if cb.num_levels() != 1 || cb.modulation().family != Family::Bpsk {
        return Err(DecodeError::WrongFamily { family: cb.modulation().family });
    }
    let n = cb.n();
    if y.len() != n {
        return Err(DecodeError::ObservationLength { expected: n, got: y.len() });
    }
    let p = cb.modulation().power;
    let (h1, h2) = gains;
    let lvl = cb.level(1);

    let llr1: Vec<f64> = y.iter().map(|&yi| llr_sum_binary(yi, h1, h2, p)).collect();
    let sum_res = spa_decode(lvl.h_super(), &llr1, max_iter)?;
    let s_bits = sum_res.hard_bits.clone();

    // Conditioning swaps the gain order when the target is user 2.
    let (ht, ho) = match target {
        HigherRateUser::User1 => (h1, h2),
        HigherRateUser::User2 => (h2, h1),
    };
    let llr2: Vec<f64> = y
        .iter()
        .zip(&s_bits)
        .map(|(&yi, &si)| llr_user_given_sum_binary(yi, si, ht, ho, p))
        .collect();
    let user_res = spa_decode(lvl.h_user(target), &llr2, max_iter)?;
    let t_bits = user_res.hard_bits.clone();
    let other_bits: Vec<u8> = s_bits.iter().zip(&t_bits).map(|(&s, &t)| s ^ t).collect();

    let (u1_bits, u2_bits) = match target {
        HigherRateUser::User1 => (t_bits, other_bits),
        HigherRateUser::User2 => (other_bits, t_bits),
    };
    Ok(CfmaResult {
        s_hat: s_bits.iter().map(|&b| u32::from(b)).collect(),
        u1_hat: u1_bits.iter().map(|&b| u32::from(b)).collect(),
        u2_hat: u2_bits.iter().map(|&b| u32::from(b)).collect(),
        sum_stages: vec![StageReport::from_decode(&sum_res, false)],
        user_stages: vec![StageReport::from_decode(&user_res, !sum_res.converged)],
        s_levels: vec![s_bits],
        u1_levels: vec![u1_bits],
        u2_levels: vec![u2_bits],
    })
}

/// Multilevel CFMA over the real MAC: level by level, decode the sum digit
/// plane (the SPA really decodes s^(l) xor c^(l)), then user 1's plane,
/// then reconstruct user 2's.
pub fn decode_cfma_multilevel(
    y: &[f64],
    cb: &CfmaCodebook,
    gains: (f64, f64),
    max_iter: usize,
) -> Result<CfmaResult, DecodeError> {
    match cb.modulation().family {
        Family::Bpsk | Family::PamMultilevel => {}
        family => return Err(DecodeError::WrongFamily { family }),
    }
    let n = cb.n();
    if y.len() != n {
        return Err(DecodeError::ObservationLength { expected: n, got: y.len() });
    }
    let levels = cb.num_levels();
    let kernels = MultilevelMacLlr::new(cb.modulation().power, levels, gains.0, gains.1);

    let mut low1 = vec![0u32; n];
    let mut low2 = vec![0u32; n];
    let mut s_levels = Vec::with_capacity(levels);
    let mut u1_levels = Vec::with_capacity(levels);
    let mut u2_levels = Vec::with_capacity(levels);
    let mut sum_stages = Vec::with_capacity(levels);
    let mut user_stages = Vec::with_capacity(levels);
    let mut tainted = false;

    for level in 1..=levels {
        let lvl = cb.level(level);
        let ctx = if level == 1 {
            LevelContext::first(n)
        } else {
            LevelContext::new(level, low1.clone(), low2.clone())?
        };
        let carries = ctx.carries().to_vec();

        let llr1 = kernels.sum_llrs(y, &ctx)?;
        let sum_res = spa_decode(lvl.h_super(), &llr1, max_iter)?;
        sum_stages.push(StageReport::from_decode(&sum_res, tainted));
        tainted |= !sum_res.converged;
        // the SPA decoded s^(l) xor c^(l)
        let s_plane: Vec<u8> =
            sum_res.hard_bits.iter().zip(&carries).map(|(&t, &c)| t ^ c).collect();

        let llr2 = kernels.user_llrs(y, &ctx, &s_plane)?;
        let user_res = spa_decode(lvl.h_user(HigherRateUser::User1), &llr2, max_iter)?;
        user_stages.push(StageReport::from_decode(&user_res, tainted));
        tainted |= !user_res.converged;
        let u1_plane = user_res.hard_bits.clone();
        let u2_plane: Vec<u8> =
            (0..n).map(|i| s_plane[i] ^ u1_plane[i] ^ carries[i]).collect();

        for i in 0..n {
            low1[i] |= u32::from(u1_plane[i]) << (level - 1);
            low2[i] |= u32::from(u2_plane[i]) << (level - 1);
        }
        s_levels.push(s_plane);
        u1_levels.push(u1_plane);
        u2_levels.push(u2_plane);
    }

    let s_hat = stack_levels(&s_levels);
    let u1_hat = stack_levels(&u1_levels);
    let q = 1u32 << levels;
    let u2_hat: Vec<u32> =
        s_hat.iter().zip(&u1_hat).map(|(&s, &u1)| (s + q - u1) & (q - 1)).collect();
    Ok(CfmaResult { s_hat, u1_hat, u2_hat, sum_stages, user_stages, s_levels, u1_levels, u2_levels })
}

/// Complex-channel CFMA with (rotated) QAM. Code positions interleave onto
/// the two axes of each complex symbol; each level runs the same two-stage
/// decode with complex-density LLRs.
pub fn decode_cfma_complex(
    y: &[Complex64],
    cb: &CfmaCodebook,
    gains: (Complex64, Complex64),
    max_iter: usize,
) -> Result<CfmaResult, DecodeError> {
    if cb.modulation().family != Family::QamMultilevel {
        return Err(DecodeError::WrongFamily { family: cb.modulation().family });
    }
    let n = cb.n();
    if !n.is_multiple_of(2) {
        return Err(DecodeError::OddLength(n));
    }
    if y.len() != n / 2 {
        return Err(DecodeError::ObservationLength { expected: n / 2, got: y.len() });
    }
    let levels = cb.num_levels();
    let spec = cb.modulation();
    let kernels = ComplexMacLlr::new(spec.power, levels, gains.0, gains.1, spec.theta);
    let axis_of = |pos: usize| if pos.is_multiple_of(2) { Axis::Imag } else { Axis::Real };

    let mut low1 = vec![0u32; n];
    let mut low2 = vec![0u32; n];
    let mut s_levels = Vec::with_capacity(levels);
    let mut u1_levels = Vec::with_capacity(levels);
    let mut u2_levels = Vec::with_capacity(levels);
    let mut sum_stages = Vec::with_capacity(levels);
    let mut user_stages = Vec::with_capacity(levels);
    let mut tainted = false;

    for level in 1..=levels {
        let lvl = cb.level(level);
        let mut states: Vec<QamSymbolState> = (0..n / 2)
            .map(|i| QamSymbolState {
                low_im1: low1[2 * i],
                low_im2: low2[2 * i],
                low_re1: low1[2 * i + 1],
                low_re2: low2[2 * i + 1],
                s_im: None,
                s_re: None,
            })
            .collect();
        let carries: Vec<u8> = if level == 1 {
            vec![0; n]
        } else {
            (0..n).map(|pos| carry_bit(low1[pos], low2[pos], level)).collect()
        };

        let llr1: Vec<f64> = (0..n)
            .map(|pos| kernels.sum_llr(y[pos / 2], level, &states[pos / 2], axis_of(pos)))
            .collect();
        let sum_res = spa_decode(lvl.h_super(), &llr1, max_iter)?;
        sum_stages.push(StageReport::from_decode(&sum_res, tainted));
        tainted |= !sum_res.converged;
        let s_plane: Vec<u8> =
            sum_res.hard_bits.iter().zip(&carries).map(|(&t, &c)| t ^ c).collect();

        for (i, st) in states.iter_mut().enumerate() {
            st.s_im = Some(s_plane[2 * i]);
            st.s_re = Some(s_plane[2 * i + 1]);
        }
        let llr2: Vec<f64> = (0..n)
            .map(|pos| kernels.user_llr(y[pos / 2], level, &states[pos / 2], axis_of(pos)))
            .collect();
        let user_res = spa_decode(lvl.h_user(HigherRateUser::User1), &llr2, max_iter)?;
        user_stages.push(StageReport::from_decode(&user_res, tainted));
        tainted |= !user_res.converged;
        let u1_plane = user_res.hard_bits.clone();
        let u2_plane: Vec<u8> =
            (0..n).map(|pos| s_plane[pos] ^ u1_plane[pos] ^ carries[pos]).collect();

        for pos in 0..n {
            low1[pos] |= u32::from(u1_plane[pos]) << (level - 1);
            low2[pos] |= u32::from(u2_plane[pos]) << (level - 1);
        }
        s_levels.push(s_plane);
        u1_levels.push(u1_plane);
        u2_levels.push(u2_plane);
    }

    let s_hat = stack_levels(&s_levels);
    let u1_hat = stack_levels(&u1_levels);
    let q = 1u32 << levels;
    let u2_hat: Vec<u32> =
        s_hat.iter().zip(&u1_hat).map(|(&s, &u1)| (s + q - u1) & (q - 1)).collect();
    Ok(CfmaResult { s_hat, u1_hat, u2_hat, sum_stages, user_stages, s_levels, u1_levels, u2_levels })
}

/// Output of the K-user chain: the users' codewords and the decoded partial
/// sums e^K .. e^2 with their stage reports (first report = e^K stage).
#[derive(Debug, Clone)]
pub struct KuserResult {
    pub users: Vec<Vec<u8>>,
    pub partial_sums: Vec<Vec<u8>>,
    pub stages: Vec<StageReport>,
}

/// K-user BPSK chain: decode e^K = u1 xor ... xor uK, then e^(K-1), ...,
/// then u1; user m >= 2 is e^m xor e^(m-1). Codes must be nested as
/// C_K ⊆ ... ⊆ C_1, so every partial sum lives in user 1's code, which is
/// the matrix every stage decodes on.
pub fn decode_kuser(
    y: &[f64],
    codes: &[ParityCheckMatrix],
    gains: &[f64],
    power: f64,
    max_iter: usize,
) -> Result<KuserResult, DecodeError> {
    let k = codes.len();
    if !(2..=4).contains(&k) {
        return Err(DecodeError::UnsupportedUserCount(k));
    }
    if gains.len() != k {
        return Err(DecodeError::UnsupportedUserCount(gains.len()));
    }
    let n = codes[0].n();
    for (u, code) in codes.iter().enumerate() {
        if code.n() != n {
            return Err(DecodeError::UserLengthMismatch { user: u + 1, expected: n, got: code.n() });
        }
    }
    if y.len() != n {
        return Err(DecodeError::ObservationLength { expected: n, got: y.len() });
    }

    // decoded collects e^K, e^(K-1), ..., e^2, and finally u1
    let mut decoded: Vec<Vec<u8>> = Vec::new();
    let mut stages = Vec::with_capacity(k);
    let mut tainted = false;
    for m in (1..=k).rev() {
        let llrs: Vec<f64> = (0..n)
            .map(|i| {
                // e^(m+1) first, then e^(m+2), ...
                let higher: Vec<u8> = decoded.iter().rev().map(|e| e[i]).collect();
                llr_kuser_stage(y[i], m, &higher, gains, power)
            })
            .collect::<Result<_, _>>()?;
        let res = spa_decode(&codes[0], &llrs, max_iter)?;
        stages.push(StageReport::from_decode(&res, tainted));
        tainted |= !res.converged;
        decoded.push(res.hard_bits);
    }
    let u1 = decoded.last().unwrap().clone();
    let mut users = vec![u1];
    for m in 2..=k {
        // decoded[k - m] is e^m; e^1 := u1
        let em = &decoded[k - m];
        let prev: &Vec<u8> = if m == 2 { &users[0] } else { &decoded[k - m + 1] };
        users.push(em.iter().zip(prev).map(|(&a, &b)| a ^ b).collect());
    }
    let partial_sums = decoded[..k - 1].to_vec();
    Ok(KuserResult { users, partial_sums, stages })
}

/// Symmetric interference channel driver: transmits the two modulated
/// codewords, then each receiver runs the binary chain against its own gain
/// pair ((1, h) at receiver 1, (h, 1) at receiver 2) and recovers both
/// messages.
#[allow(clippy::too_many_arguments)]
pub fn run_interference(
    x1: &[f64],
    x2: &[f64],
    cb: &CfmaCodebook,
    h: f64,
    noise1: &mut Noise,
    noise2: &mut Noise,
    target: HigherRateUser,
    max_iter: usize,
) -> Result<(CfmaResult, CfmaResult), DecodeError> {
    let (y1, y2) = transmit_interference(x1, x2, h, noise1, noise2)?;
    let r1 = decode_cfma_binary(&y1, cb, (1.0, h), target, max_iter)?;
    let r2 = decode_cfma_binary(&y2, cb, (h, 1.0), target, max_iter)?;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{transmit_mac_complex, transmit_mac_real};
    use crate::gf2::{build_nested_pair, regular_code_full_rank};
    use crate::modulation::label_to_bits;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_word(enc: &Encoder, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let msg: Vec<u8> = (0..enc.k()).map(|_| rng.gen_range(0..=1)).collect();
        enc.encode(&msg).unwrap()
    }

    /// Low-rate codebook: peeling resolves the positions where equal-gain
    /// users are indistinguishable.
    fn low_rate_codebook(n: usize, levels: usize, spec: ModulationSpec, seed: u64) -> CfmaCodebook {
        let lvls: Vec<LevelCode> = (0..levels)
            .map(|l| {
                let base = regular_code_full_rank(n, 3, 4, seed + l as u64).unwrap();
                let pair = build_nested_pair(&base, n / 40, seed + 100 + l as u64).unwrap();
                LevelCode::new(pair, HigherRateUser::User1).unwrap()
            })
            .collect();
        CfmaCodebook::new(lvls, spec).unwrap()
    }

    #[test]
    fn noiseless_binary_chain_recovers_exactly_with_uneven_gains() {
        let spec = ModulationSpec::bpsk(4.0).unwrap();
        let cb = low_rate_codebook(256, 1, spec, 3);
        let gains = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
            let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
            let x1 = modulate_pam_levels(std::slice::from_ref(&u1), &spec);
            let x2 = modulate_pam_levels(std::slice::from_ref(&u2), &spec);
            let y = transmit_mac_real(&x1, &x2, gains.0, gains.1, &mut Noise::Off).unwrap();
            let res = decode_cfma_binary(&y, &cb, gains, HigherRateUser::User1, 25).unwrap();
            assert!(res.all_converged());
            let s: Vec<u32> = u1.iter().zip(&u2).map(|(&a, &b)| u32::from(a ^ b)).collect();
            assert_eq!(res.s_hat, s);
            assert_eq!(res.u1_levels[0], u1);
            assert_eq!(res.u2_levels[0], u2);
        }
    }

    #[test]
    fn unit_gain_disagreement_positions_decode_sum_to_one() {
        // z = 0 and u1 != u2 puts y exactly at 0; the sum LLR there is -2P,
        // so those symbols decide s = 1 before any iteration. The user stage
        // is hopeless at equal gains (every disagreement position has LLR
        // exactly 0, and supp(s) is a stopping set of the supercode), so
        // only the sum stage is checked for exactness here.
        let spec = ModulationSpec::bpsk(2.0).unwrap();
        let cb = low_rate_codebook(256, 1, spec, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
        let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
        let x1 = modulate_pam_levels(std::slice::from_ref(&u1), &spec);
        let x2 = modulate_pam_levels(std::slice::from_ref(&u2), &spec);
        let y = transmit_mac_real(&x1, &x2, 1.0, 1.0, &mut Noise::Off).unwrap();
        let res = decode_cfma_binary(&y, &cb, (1.0, 1.0), HigherRateUser::User1, 50).unwrap();
        let s: Vec<u32> = u1.iter().zip(&u2).map(|(&a, &b)| u32::from(a ^ b)).collect();
        assert!(res.sum_stages[0].converged);
        assert_eq!(res.s_hat, s);
        // agreement positions still carry full user information
        for i in 0..cb.n() {
            if u1[i] == u2[i] {
                assert_eq!(res.u1_levels[0][i], u1[i], "agreement position {i}");
            }
        }
    }

    #[test]
    fn target_user_two_mirrors_target_user_one_under_swapped_gains() {
        // decoding (s, u2) at gains (g1, g2) must match decoding (s, u1)
        // at gains (g2, g1) with the users' codes and words exchanged,
        // trial for trial on the same noise stream
        let spec = ModulationSpec::bpsk(6.0).unwrap();
        let base = regular_code_full_rank(256, 3, 8, 12).unwrap();
        let pair = build_nested_pair(&base, 10, 5).unwrap();
        let fwd = CfmaCodebook::binary(pair.clone(), HigherRateUser::User1, spec).unwrap();
        let swapped = CfmaCodebook::binary(pair, HigherRateUser::User2, spec).unwrap();
        let g = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..6u64 {
            let w_sup = random_word(fwd.level(1).encoder_user(HigherRateUser::User1), &mut rng);
            let w_sub = random_word(fwd.level(1).encoder_user(HigherRateUser::User2), &mut rng);
            let x_sup = modulate_pam_levels(std::slice::from_ref(&w_sup), &spec);
            let x_sub = modulate_pam_levels(std::slice::from_ref(&w_sub), &spec);
            let mut n1 = Noise::seeded(40, &[trial]);
            let mut n2 = Noise::seeded(40, &[trial]);
            // forward: user 1 = supercode word at gain g.0, target user 1
            let y_fwd = transmit_mac_real(&x_sup, &x_sub, g.0, g.1, &mut n1).unwrap();
            let r_fwd = decode_cfma_binary(&y_fwd, &fwd, g, HigherRateUser::User1, 25).unwrap();
            // mirrored: user 2 = supercode word at gain g.0, target user 2
            let y_mir = transmit_mac_real(&x_sub, &x_sup, g.1, g.0, &mut n2).unwrap();
            let r_mir =
                decode_cfma_binary(&y_mir, &swapped, (g.1, g.0), HigherRateUser::User2, 25).unwrap();
            assert_eq!(y_fwd, y_mir);
            assert_eq!(r_fwd.s_hat, r_mir.s_hat);
            assert_eq!(r_fwd.u1_hat, r_mir.u2_hat);
            assert_eq!(r_fwd.u2_hat, r_mir.u1_hat);
        }
    }

    #[test]
    fn single_level_multilevel_matches_binary_chain() {
        let spec = ModulationSpec::bpsk(4.0).unwrap();
        let cb = low_rate_codebook(128, 1, spec, 8);
        let gains = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..4u64 {
            let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
            let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
            let x1 = modulate_pam_levels(&[u1], &spec);
            let x2 = modulate_pam_levels(&[u2], &spec);
            let mut noise = Noise::seeded(55, &[trial]);
            let y = transmit_mac_real(&x1, &x2, gains.0, gains.1, &mut noise).unwrap();
            let a = decode_cfma_binary(&y, &cb, gains, HigherRateUser::User1, 25).unwrap();
            let b = decode_cfma_multilevel(&y, &cb, gains, 25).unwrap();
            assert_eq!(a.s_hat, b.s_hat);
            assert_eq!(a.u1_hat, b.u1_hat);
            assert_eq!(a.u2_hat, b.u2_hat);
        }
    }

    #[test]
    fn noiseless_two_level_pam_recovers_exactly() {
        // distinct gains keep every (u1, u2) pair separable; at equal gains
        // the disagreement positions carry no user information noiselessly.
        // P is high enough that no marginalized level LLR changes sign from
        // the near-coincidence |3 - 2 sqrt(3)| of the superimposed grids.
        let spec = ModulationSpec::pam(50.0, 2).unwrap();
        let cb = low_rate_codebook(256, 2, spec, 11);
        let gains = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let u1l: Vec<Vec<u8>> = (1..=2)
                .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User1), &mut rng))
                .collect();
            let u2l: Vec<Vec<u8>> = (1..=2)
                .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User2), &mut rng))
                .collect();
            let x1 = modulate_pam_levels(&u1l, &spec);
            let x2 = modulate_pam_levels(&u2l, &spec);
            let y = transmit_mac_real(&x1, &x2, gains.0, gains.1, &mut Noise::Off).unwrap();
            let res = decode_cfma_multilevel(&y, &cb, gains, 50).unwrap();
            assert!(res.all_converged(), "{:?} {:?}", res.sum_stages, res.user_stages);
            assert_eq!(res.u1_levels, u1l);
            assert_eq!(res.u2_levels, u2l);
            // digit identity on the recovered symbols
            for i in 0..cb.n() {
                assert_eq!(
                    label_to_bits(res.s_hat[i], 2),
                    sum_digits(res.u1_hat[i], res.u2_hat[i], 2)
                );
            }
        }
    }

    #[test]
    fn noiseless_three_level_pam_exercises_deep_carries() {
        let spec = ModulationSpec::pam(200.0, 3).unwrap();
        let cb = low_rate_codebook(128, 3, spec, 47);
        let gains = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..3 {
            let u1l: Vec<Vec<u8>> = (1..=3)
                .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User1), &mut rng))
                .collect();
            let u2l: Vec<Vec<u8>> = (1..=3)
                .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User2), &mut rng))
                .collect();
            let x1 = modulate_pam_levels(&u1l, &spec);
            let x2 = modulate_pam_levels(&u2l, &spec);
            let y = transmit_mac_real(&x1, &x2, gains.0, gains.1, &mut Noise::Off).unwrap();
            let res = decode_cfma_multilevel(&y, &cb, gains, 50).unwrap();
            assert!(res.all_converged(), "{:?} {:?}", res.sum_stages, res.user_stages);
            assert_eq!(res.u1_levels, u1l);
            assert_eq!(res.u2_levels, u2l);
        }
    }

    #[test]
    fn noiseless_four_user_chain_recovers_everyone() {
        let base = regular_code_full_rank(256, 3, 4, 77).unwrap();
        let enc = Encoder::derive(&base).unwrap();
        let codes = vec![base.clone(); 4];
        let gains = vec![1.0, 1.25, 1.55, 1.9];
        let spec = ModulationSpec::bpsk(8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let words: Vec<Vec<u8>> = (0..4).map(|_| random_word(&enc, &mut rng)).collect();
        let xs: Vec<Vec<f64>> =
            words.iter().map(|w| modulate_pam_levels(&[w.clone()], &spec)).collect();
        let y = crate::channel::transmit_kuser(&xs, &gains, &mut Noise::Off).unwrap();
        let res = decode_kuser(&y, &codes, &gains, 8.0, 60).unwrap();
        assert!(res.stages.iter().all(|s| s.converged), "{:?}", res.stages);
        assert_eq!(res.users, words);
    }

    #[test]
    fn per_level_reconstruction_matches_modular_subtraction() {
        // any decode output, converged or not, must satisfy the identity
        let spec = ModulationSpec::pam(6.0, 2).unwrap();
        let cb = low_rate_codebook(128, 2, spec, 31);
        let mut noise = Noise::seeded(77, &[9]);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u1l: Vec<Vec<u8>> = (1..=2)
            .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User1), &mut rng))
            .collect();
        let u2l: Vec<Vec<u8>> = (1..=2)
            .map(|l| random_word(cb.level(l).encoder_user(HigherRateUser::User2), &mut rng))
            .collect();
        let x1 = modulate_pam_levels(&u1l, &spec);
        let x2 = modulate_pam_levels(&u2l, &spec);
        let y = transmit_mac_real(&x1, &x2, 1.0, 1.0, &mut noise).unwrap();
        let res = decode_cfma_multilevel(&y, &cb, (1.0, 1.0), 25).unwrap();
        let stacked_u2 =
            res.u2_levels.iter().enumerate().fold(vec![0u32; cb.n()], |mut acc, (l, plane)| {
                for (a, &b) in acc.iter_mut().zip(plane) {
                    *a |= u32::from(b) << l;
                }
                acc
            });
        assert_eq!(stacked_u2, res.u2_hat);
    }

    #[test]
    fn noiseless_4qam_recovers_exactly() {
        let spec = ModulationSpec::qam(4.0, 1, std::f64::consts::FRAC_PI_6).unwrap();
        let cb = low_rate_codebook(256, 1, spec, 13);
        let gains = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..3 {
            let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
            let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
            let x1 = modulate_qam_levels(std::slice::from_ref(&u1), &spec, false);
            let x2 = modulate_qam_levels(std::slice::from_ref(&u2), &spec, true);
            let y = transmit_mac_complex(&x1, &x2, gains.0, gains.1, &mut Noise::Off).unwrap();
            let res = decode_cfma_complex(&y, &cb, gains, 50).unwrap();
            assert!(res.all_converged());
            assert_eq!(res.u1_levels[0], u1);
            assert_eq!(res.u2_levels[0], u2);
        }
    }

    #[test]
    fn two_user_kuser_chain_matches_binary_chain() {
        let spec = ModulationSpec::bpsk(4.0).unwrap();
        let cb = low_rate_codebook(128, 1, spec, 19);
        let gains = (1.0, 3f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
        let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
        let x1 = modulate_pam_levels(std::slice::from_ref(&u1), &spec);
        let x2 = modulate_pam_levels(std::slice::from_ref(&u2), &spec);
        let mut noise = Noise::seeded(3, &[1]);
        let y = transmit_mac_real(&x1, &x2, gains.0, gains.1, &mut noise).unwrap();
        let bin = decode_cfma_binary(&y, &cb, gains, HigherRateUser::User1, 25).unwrap();
        let h1 = cb.level(1).h_super().clone();
        let h2 = cb.level(1).h_user(HigherRateUser::User2).clone();
        let ku = decode_kuser(&y, &[h1, h2], &[gains.0, gains.1], 4.0, 25).unwrap();
        let e2: Vec<u8> = bin.s_hat.iter().map(|&b| b as u8).collect();
        assert_eq!(ku.partial_sums[0], e2);
        let u1_bits: Vec<u8> = bin.u1_hat.iter().map(|&b| b as u8).collect();
        assert_eq!(ku.users[0], u1_bits);
    }

    #[test]
    fn noiseless_three_user_chain_recovers_everyone() {
        let base = regular_code_full_rank(512, 3, 4, 71).unwrap();
        let enc = Encoder::derive(&base).unwrap();
        let codes = vec![base.clone(), base.clone(), base.clone()];
        let gains = vec![1.0, 1.3, 1.7];
        let spec = ModulationSpec::bpsk(6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..3 {
            let words: Vec<Vec<u8>> = (0..3).map(|_| random_word(&enc, &mut rng)).collect();
            let xs: Vec<Vec<f64>> =
                words.iter().map(|w| modulate_pam_levels(std::slice::from_ref(w), &spec)).collect();
            let y = crate::channel::transmit_kuser(&xs, &gains, &mut Noise::Off).unwrap();
            let res = decode_kuser(&y, &codes, &gains, 6.0, 60).unwrap();
            assert!(res.stages.iter().all(|s| s.converged), "{:?}", res.stages);
            assert_eq!(res.users, words);
            // xor of all recovered users equals the decoded e^K
            let xor_all: Vec<u8> =
                (0..512).map(|i| res.users.iter().fold(0u8, |acc, u| acc ^ u[i])).collect();
            assert_eq!(xor_all, res.partial_sums[0]);
        }
    }

    #[test]
    fn noiseless_interference_channel_is_exact_at_both_receivers() {
        let spec = ModulationSpec::bpsk(4.0).unwrap();
        let cb = low_rate_codebook(256, 1, spec, 43);
        let h = 3f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
        let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
        let x1 = modulate_pam_levels(std::slice::from_ref(&u1), &spec);
        let x2 = modulate_pam_levels(std::slice::from_ref(&u2), &spec);
        let (r1, r2) = run_interference(
            &x1,
            &x2,
            &cb,
            h,
            &mut Noise::Off,
            &mut Noise::Off,
            HigherRateUser::User1,
            25,
        )
        .unwrap();
        for r in [&r1, &r2] {
            assert!(r.all_converged());
            assert_eq!(r.u1_levels[0], u1);
            assert_eq!(r.u2_levels[0], u2);
        }
    }

    #[test]
    fn unit_cross_gain_interference_still_runs() {
        // h = 1 makes both receivers statistically identical and leaves the
        // user stages facing the equal-gain ambiguity; the driver must
        // still return per-stage reports rather than erroring out
        let spec = ModulationSpec::bpsk(4.0).unwrap();
        let cb = low_rate_codebook(128, 1, spec, 67);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
        let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
        let x1 = modulate_pam_levels(&[u1.clone()], &spec);
        let x2 = modulate_pam_levels(&[u2], &spec);
        let (r1, r2) = run_interference(
            &x1,
            &x2,
            &cb,
            1.0,
            &mut Noise::Off,
            &mut Noise::Off,
            HigherRateUser::User1,
            25,
        )
        .unwrap();
        assert!(r1.sum_stages[0].converged);
        assert!(r2.sum_stages[0].converged);
        // both receivers see the same noiseless observation at h = 1
        assert_eq!(r1.s_hat, r2.s_hat);
    }

    #[test]
    fn stage_failure_taints_downstream_reports() {
        let spec = ModulationSpec::bpsk(0.5).unwrap();
        // a high-rate code at very low power will fail stage 1
        let base = regular_code_full_rank(128, 3, 8, 3).unwrap();
        let pair = build_nested_pair(&base, 8, 2).unwrap();
        let cb = CfmaCodebook::binary(pair, HigherRateUser::User1, spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u1 = random_word(cb.level(1).encoder_user(HigherRateUser::User1), &mut rng);
        let u2 = random_word(cb.level(1).encoder_user(HigherRateUser::User2), &mut rng);
        let x1 = modulate_pam_levels(&[u1], &spec);
        let x2 = modulate_pam_levels(&[u2], &spec);
        let mut noise = Noise::seeded(1, &[0]);
        let y = transmit_mac_real(&x1, &x2, 1.0, 1.0, &mut noise).unwrap();
        let res = decode_cfma_binary(&y, &cb, (1.0, 1.0), HigherRateUser::User1, 5).unwrap();
        assert!(!res.sum_stages[0].converged, "P = 0.5 should sink stage 1");
        assert!(res.user_stages[0].dependent_on_failed_stage);
    }

    #[test]
    fn codebook_validation_catches_level_mismatch() {
        let base = regular_code_full_rank(64, 3, 4, 1).unwrap();
        let pair = build_nested_pair(&base, 2, 1).unwrap();
        let lvl = LevelCode::new(pair, HigherRateUser::User1).unwrap();
        let spec = ModulationSpec::pam(4.0, 2).unwrap();
        assert!(matches!(
            CfmaCodebook::new(vec![lvl], spec),
            Err(DecodeError::LevelCountMismatch { expected: 2, got: 1 })
        ));
    }
}
