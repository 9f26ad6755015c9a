//! Numerical evaluation of the uniform-input MAC rate region and the CFMA
//! achievable points.
//!
//! The receiver-side signal is a finite Gaussian mixture, so every mutual
//! information and conditional entropy reduces to differential entropies of
//! mixtures, computed by per-component Gauss-Hermite quadrature (default)
//! or Monte Carlo (cross-check). The CFMA points follow
//!
//! ```text
//! A' = ( H(X1) - max{H(S|Y), H(X1,X2|Y,S)},  H(X2) - H(S|Y) )
//! B' = ( H(X1) - H(S|Y),  H(X2) - max{H(S|Y), H(X1,X2|Y,S)} )
//! ```
//!
//! with S the elementwise modular sum of the users' labels (per axis for
//! QAM) under coefficients (1, 1). With uniform inputs A' and B' are
//! reflections of one another about the symmetric-rate line.

mod quad;

pub use quad::{
    complex_gaussian_entropy, complex_mixture_entropy, real_gaussian_entropy,
    real_mixture_entropy, GaussHermite,
};

use crate::modulation::{map_pam_label, map_qam_labels};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("entropy error bound {bound:.2e} exceeds the allowed {limit:.2e}")]
    Precision { bound: f64, limit: f64 },
    #[error("target rate ({r1}, {r2}) is infeasible for this constellation")]
    InfeasibleTarget { r1: f64, r2: f64 },
    #[error("invalid scenario: {0}")]
    BadScenario(String),
}

/// A rate pair in bits per channel use; for complex scenarios a channel use
/// is one complex symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn dominates(&self, other: &RatePoint, tol: f64) -> bool {
        self.r1 + tol >= other.r1 && self.r2 + tol >= other.r2
    }
}

/// Rate units of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDimension {
    PerRealSymbol,
    PerComplexSymbol,
}

/// What the two users transmit and how the channel combines them.
#[derive(Debug, Clone)]
pub enum RegionScenario {
    /// 2^L-PAM per user over the real MAC y = h1 x1 + h2 x2 + z, z ~ N(0,1).
    RealMac { levels: usize, h1: f64, h2: f64 },
    /// Square 4^L-QAM per user over the complex MAC with CN(0,1) noise;
    /// user 2's constellation is rotated by theta.
    ComplexMac { levels: usize, h1: Complex64, h2: Complex64, theta: f64 },
    /// Single user, 2^L-PAM over the real AWGN channel (Shannon-limit
    /// reference lines).
    PointToPoint { levels: usize, h: f64 },
}

impl RegionScenario {
    pub fn bpsk_mac(h1: f64, h2: f64) -> Self {
        RegionScenario::RealMac { levels: 1, h1, h2 }
    }

    pub fn qam_mac(levels: usize, theta: f64) -> Self {
        RegionScenario::ComplexMac {
            levels,
            h1: Complex64::new(1.0, 0.0),
            h2: Complex64::new(1.0, 0.0),
            theta,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RegionScenario::RealMac { levels, h1, h2 } => {
                format!("{}-PAM real MAC, h=({h1}, {h2})", 1usize << levels)
            }
            RegionScenario::ComplexMac { levels, h1, h2, theta } => format!(
                "{}-QAM complex MAC, h=({h1}, {h2}), theta={theta}",
                1usize << (2 * levels)
            ),
            RegionScenario::PointToPoint { levels, h } => {
                format!("{}-PAM point-to-point, h={h}", 1usize << levels)
            }
        }
    }

    /// Bits per channel use carried by one user's constellation.
    pub fn input_entropy(&self) -> f64 {
        match self {
            RegionScenario::RealMac { levels, .. } => *levels as f64,
            RegionScenario::ComplexMac { levels, .. } => 2.0 * *levels as f64,
            RegionScenario::PointToPoint { levels, .. } => *levels as f64,
        }
    }

    pub fn dimension(&self) -> RateDimension {
        match self {
            RegionScenario::ComplexMac { .. } => RateDimension::PerComplexSymbol,
            _ => RateDimension::PerRealSymbol,
        }
    }
}

/// How the mixture entropies are computed.
#[derive(Debug, Clone, Copy)]
pub enum EntropyEstimator {
    /// Per-component Gauss-Hermite quadrature with this many nodes per
    /// dimension. The reported error bound comes from a doubled-resolution
    /// rerun.
    Quadrature { nodes: usize },
    /// Seeded Monte Carlo; the bound is three standard errors.
    MonteCarlo { samples: usize, seed: u64 },
}

impl EntropyEstimator {
    pub fn quadrature_default() -> Self {
        EntropyEstimator::Quadrature { nodes: 129 }
    }
}

/// Whether a CFMA point lies on the dominant face of the pentagon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceStatus {
    /// Strictly between the corners on the dominant face.
    InteriorOfFace,
    /// On the face but merged with the corner (boundary case of the strict
    /// inequality).
    CoincidesWithCorner,
    /// The sum-decoding penalty exceeds half the joint uncertainty; the
    /// point falls short of the face.
    OffFace,
}

/// Everything the evaluator knows about one (scenario, power) operating
/// point.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub scenario: String,
    pub power_db: f64,
    pub dimension: RateDimension,
    /// Corner with maximal R2: A = (I(X1;Y), I(X2;Y|X1)).
    pub corner_a: RatePoint,
    /// Corner with maximal R1: B = (I(X1;Y|X2), I(X2;Y)).
    pub corner_b: RatePoint,
    pub cfma_a: RatePoint,
    pub cfma_b: RatePoint,
    pub h_x1: f64,
    pub h_x2: f64,
    pub h_s_given_y: f64,
    pub h_pair_given_y: f64,
    pub h_pair_given_ys: f64,
    pub h_x1_given_y: f64,
    pub h_x2_given_y: f64,
    pub h_x1_given_y_x2: f64,
    pub h_x2_given_y_x1: f64,
    pub face_a: FaceStatus,
    pub face_b: FaceStatus,
    /// First-stage coefficient pair defining S.
    pub coefficients: (u8, u8),
    /// Absolute error bound on every reported entropy.
    pub error_bound: f64,
}

/// Raw mixture description: component means (real or complex) plus the
/// label maps needed to condition on X1, X2 or S.
enum Mixture {
    Real { means: Vec<f64>, x1_of: Vec<usize>, x2_of: Vec<usize>, s_of: Vec<usize>, q1: usize, s_count: usize },
    Complex { means: Vec<Complex64>, x1_of: Vec<usize>, x2_of: Vec<usize>, s_of: Vec<usize>, q1: usize, s_count: usize },
}

fn build_mixture(scenario: &RegionScenario, power: f64) -> Mixture {
    match *scenario {
        RegionScenario::RealMac { levels, h1, h2 } => {
            let q = 1usize << levels;
            let mut means = Vec::with_capacity(q * q);
            let mut x1_of = Vec::with_capacity(q * q);
            let mut x2_of = Vec::with_capacity(q * q);
            let mut s_of = Vec::with_capacity(q * q);
            for i in 0..q {
                for j in 0..q {
                    means.push(
                        h1 * map_pam_label(i as u32, power, levels)
                            + h2 * map_pam_label(j as u32, power, levels),
                    );
                    x1_of.push(i);
                    x2_of.push(j);
                    s_of.push((i + j) % q);
                }
            }
            Mixture::Real { means, x1_of, x2_of, s_of, q1: q, s_count: q }
        }
        RegionScenario::ComplexMac { levels, h1, h2, theta } => {
            let q = 1usize << levels;
            let users: Vec<(usize, usize)> =
                (0..q).flat_map(|i| (0..q).map(move |r| (i, r))).collect();
            let point = |lab: (usize, usize), th: f64| {
                map_qam_labels(lab.0 as u32, lab.1 as u32, power, levels, th)
            };
            let mut means = Vec::new();
            let mut x1_of = Vec::new();
            let mut x2_of = Vec::new();
            let mut s_of = Vec::new();
            for (a_idx, &a) in users.iter().enumerate() {
                for (b_idx, &b) in users.iter().enumerate() {
                    means.push(h1 * point(a, 0.0) + h2 * point(b, theta));
                    x1_of.push(a_idx);
                    x2_of.push(b_idx);
                    let s = (((a.0 + b.0) % q) * q) + ((a.1 + b.1) % q);
                    s_of.push(s);
                }
            }
            Mixture::Complex { means, x1_of, x2_of, s_of, q1: q * q, s_count: q * q }
        }
        RegionScenario::PointToPoint { levels, h } => {
            let q = 1usize << levels;
            let means: Vec<f64> =
                (0..q).map(|i| h * map_pam_label(i as u32, power, levels)).collect();
            Mixture::Real {
                means,
                x1_of: (0..q).collect(),
                x2_of: vec![0; q],
                s_of: (0..q).collect(),
                q1: q,
                s_count: q,
            }
        }
    }
}

/// The five mixture entropies everything else is assembled from.
#[derive(Debug, Clone, Copy)]
struct RawEntropies {
    h_y: f64,
    h_y_x1: f64,
    h_y_x2: f64,
    h_y_s: f64,
    h_z: f64,
    bound: f64,
}

fn grouped_entropy_real(
    means: &[f64],
    group_of: &[usize],
    groups: usize,
    rule: &GaussHermite,
) -> f64 {
    let mut total = 0.0;
    for g in 0..groups {
        let sub: Vec<f64> = means
            .iter()
            .zip(group_of)
            .filter(|(_, &gg)| gg == g)
            .map(|(&m, _)| m)
            .collect();
        if sub.is_empty() {
            continue;
        }
        let w = vec![1.0 / sub.len() as f64; sub.len()];
        total += (sub.len() as f64 / means.len() as f64) * quad::real_mixture_entropy(&sub, &w, rule);
    }
    total
}

fn grouped_entropy_complex(
    means: &[Complex64],
    group_of: &[usize],
    groups: usize,
    rule: &GaussHermite,
) -> f64 {
    let mut total = 0.0;
    for g in 0..groups {
        let sub: Vec<Complex64> = means
            .iter()
            .zip(group_of)
            .filter(|(_, &gg)| gg == g)
            .map(|(&m, _)| m)
            .collect();
        if sub.is_empty() {
            continue;
        }
        let w = vec![1.0 / sub.len() as f64; sub.len()];
        total +=
            (sub.len() as f64 / means.len() as f64) * quad::complex_mixture_entropy(&sub, &w, rule);
    }
    total
}

fn raw_entropies_quad(mix: &Mixture, nodes: usize) -> RawEntropies {
    let rule = GaussHermite::new(nodes);
    match mix {
        Mixture::Real { means, x1_of, x2_of, s_of, q1, s_count } => {
            let w = vec![1.0 / means.len() as f64; means.len()];
            let q2 = means.len() / q1;
            RawEntropies {
                h_y: quad::real_mixture_entropy(means, &w, &rule),
                h_y_x1: grouped_entropy_real(means, x1_of, *q1, &rule),
                h_y_x2: grouped_entropy_real(means, x2_of, q2.max(1), &rule),
                h_y_s: grouped_entropy_real(means, s_of, *s_count, &rule),
                h_z: quad::real_gaussian_entropy(),
                bound: 0.0,
            }
        }
        Mixture::Complex { means, x1_of, x2_of, s_of, q1, s_count } => {
            let w = vec![1.0 / means.len() as f64; means.len()];
            let q2 = means.len() / q1;
            RawEntropies {
                h_y: quad::complex_mixture_entropy(means, &w, &rule),
                h_y_x1: grouped_entropy_complex(means, x1_of, *q1, &rule),
                h_y_x2: grouped_entropy_complex(means, x2_of, q2.max(1), &rule),
                h_y_s: grouped_entropy_complex(means, s_of, *s_count, &rule),
                h_z: quad::complex_gaussian_entropy(),
                bound: 0.0,
            }
        }
    }
}

fn raw_entropies_mc(mix: &Mixture, samples: usize, seed: u64) -> RawEntropies {
    // Complex scenarios sample each axis as an independent real dimension
    // only when theta = 0; the general case keeps full 2D sampling below.
    let mut rng = crate::channel::substream_rng(seed, &[0x7265_6769_6f6e]);
    match mix {
        Mixture::Real { means, x1_of, x2_of, s_of, q1, s_count } => {
            let w = vec![1.0 / means.len() as f64; means.len()];
            let (h_y, se_y) = quad::real_mixture_entropy_mc(means, &w, samples, &mut rng);
            let mut grouped = |group_of: &[usize], groups: usize| {
                let mut total = 0.0;
                let mut se_acc: f64 = 0.0;
                for g in 0..groups {
                    let sub: Vec<f64> = means
                        .iter()
                        .zip(group_of)
                        .filter(|(_, &gg)| gg == g)
                        .map(|(&m, _)| m)
                        .collect();
                    if sub.is_empty() {
                        continue;
                    }
                    let frac = sub.len() as f64 / means.len() as f64;
                    let w = vec![1.0 / sub.len() as f64; sub.len()];
                    let n = ((samples as f64 * frac) as usize).max(1000);
                    let (h, se) = quad::real_mixture_entropy_mc(&sub, &w, n, &mut rng);
                    total += frac * h;
                    se_acc += (frac * se) * (frac * se);
                }
                (total, se_acc.sqrt())
            };
            let (h_y_x1, se1) = grouped(x1_of, *q1);
            let q2 = means.len() / q1;
            let (h_y_x2, se2) = grouped(x2_of, q2.max(1));
            let (h_y_s, se3) = grouped(s_of, *s_count);
            RawEntropies {
                h_y,
                h_y_x1,
                h_y_x2,
                h_y_s,
                h_z: quad::real_gaussian_entropy(),
                bound: 3.0 * se_y.max(se1).max(se2).max(se3),
            }
        }
        Mixture::Complex { .. } => {
            // MC cross-checks are exercised on the real scenarios; complex
            // scenarios use quadrature (2D sampling adds nothing new).
            raw_entropies_quad(mix, 65)
        }
    }
}

fn assemble(
    scenario: &RegionScenario,
    power_db: f64,
    raw: RawEntropies,
    bound: f64,
) -> RegionReport {
    let hx = scenario.input_entropy();
    let i_x1_y = raw.h_y - raw.h_y_x1;
    let i_x2_y = raw.h_y - raw.h_y_x2;
    let i_x1_y_given_x2 = raw.h_y_x2 - raw.h_z;
    let i_x2_y_given_x1 = raw.h_y_x1 - raw.h_z;
    let i_pair_y = raw.h_y - raw.h_z;
    let h_s_given_y = hx + raw.h_y_s - raw.h_y;
    let h_pair_given_y = 2.0 * hx - i_pair_y;
    let h_pair_given_ys = h_pair_given_y - h_s_given_y;
    let stage2 = h_s_given_y.max(h_pair_given_ys);

    let corner_a = RatePoint::new(i_x1_y, i_x2_y_given_x1);
    let corner_b = RatePoint::new(i_x1_y_given_x2, i_x2_y);
    let cfma_a = RatePoint::new(hx - stage2, hx - h_s_given_y);
    let cfma_b = RatePoint::new(hx - h_s_given_y, hx - stage2);

    let h_x1_given_y_x2 = hx - i_x1_y_given_x2;
    let h_x2_given_y_x1 = hx - i_x2_y_given_x1;
    let eps = (2.0 * bound).max(1e-9);
    let face = |other_user_cond: f64| {
        dominant_face_check(h_s_given_y, h_pair_given_y, other_user_cond, eps)
    };

    RegionReport {
        scenario: scenario.describe(),
        power_db,
        dimension: scenario.dimension(),
        corner_a,
        corner_b,
        cfma_a,
        cfma_b,
        h_x1: hx,
        h_x2: hx,
        h_s_given_y,
        h_pair_given_y,
        h_pair_given_ys,
        h_x1_given_y: hx - i_x1_y,
        h_x2_given_y: hx - i_x2_y,
        h_x1_given_y_x2,
        h_x2_given_y_x1,
        face_a: face(h_x2_given_y_x1),
        face_b: face(h_x1_given_y_x2),
        coefficients: (1, 1),
        error_bound: bound,
    }
}

/// Evaluates the full report at `power_db`.
pub fn evaluate(
    scenario: &RegionScenario,
    power_db: f64,
    est: &EntropyEstimator,
) -> RegionReport {
    let power = 10f64.powf(power_db / 10.0);
    let mix = build_mixture(scenario, power);
    match *est {
        EntropyEstimator::Quadrature { nodes } => {
            let coarse = raw_entropies_quad(&mix, nodes);
            let fine = raw_entropies_quad(&mix, 2 * nodes + 1);
            let diff = (coarse.h_y - fine.h_y)
                .abs()
                .max((coarse.h_y_x1 - fine.h_y_x1).abs())
                .max((coarse.h_y_x2 - fine.h_y_x2).abs())
                .max((coarse.h_y_s - fine.h_y_s).abs());
            let bound = 4.0 * diff + 1e-12;
            assemble(scenario, power_db, fine, bound)
        }
        EntropyEstimator::MonteCarlo { samples, seed } => {
            let raw = raw_entropies_mc(&mix, samples, seed);
            let bound = raw.bound;
            assemble(scenario, power_db, raw, bound)
        }
    }
}

/// As [`evaluate`] but fails when the error bound exceeds `max_bound`.
pub fn evaluate_strict(
    scenario: &RegionScenario,
    power_db: f64,
    est: &EntropyEstimator,
    max_bound: f64,
) -> Result<RegionReport, RegionError> {
    let report = evaluate(scenario, power_db, est);
    if report.error_bound > max_bound {
        return Err(RegionError::Precision { bound: report.error_bound, limit: max_bound });
    }
    Ok(report)
}

/// MAC pentagon corners (A, B) with uniform inputs.
pub fn mac_region(
    scenario: &RegionScenario,
    power_db: f64,
    est: &EntropyEstimator,
) -> (RatePoint, RatePoint) {
    let r = evaluate(scenario, power_db, est);
    (r.corner_a, r.corner_b)
}

/// CFMA points (A', B') with coefficients (1, 1).
pub fn cfma_corners(
    scenario: &RegionScenario,
    power_db: f64,
    est: &EntropyEstimator,
) -> (RatePoint, RatePoint) {
    let r = evaluate(scenario, power_db, est);
    (r.cfma_a, r.cfma_b)
}

/// Point-to-point rate I(X;Y) of a single PAM user.
pub fn p2p_rate(levels: usize, h: f64, power_db: f64, est: &EntropyEstimator) -> f64 {
    let scenario = RegionScenario::PointToPoint { levels, h };
    let power = 10f64.powf(power_db / 10.0);
    let mix = build_mixture(&scenario, power);
    let raw = match *est {
        EntropyEstimator::Quadrature { nodes } => raw_entropies_quad(&mix, nodes),
        EntropyEstimator::MonteCarlo { samples, seed } => raw_entropies_mc(&mix, samples, seed),
    };
    raw.h_y - raw.h_z
}

/// Rate tolerance used when testing whether a CFMA point reaches a target.
pub const MIN_POWER_RATE_TOL: f64 = 1e-4;

/// The two entropies that place A' and B', at a single quadrature
/// resolution. The bisection in [`min_power_db`] leans on this instead of a
/// full report because h(Y|X1) and h(Y|X2) never enter the CFMA points.
fn cfma_point_entropies(scenario: &RegionScenario, power_db: f64, nodes: usize) -> (f64, f64) {
    let power = 10f64.powf(power_db / 10.0);
    let mix = build_mixture(scenario, power);
    let rule = GaussHermite::new(nodes);
    let hx = scenario.input_entropy();
    let (h_y, h_y_s, h_z) = match &mix {
        Mixture::Real { means, s_of, s_count, .. } => {
            let w = vec![1.0 / means.len() as f64; means.len()];
            (
                quad::real_mixture_entropy(means, &w, &rule),
                grouped_entropy_real(means, s_of, *s_count, &rule),
                quad::real_gaussian_entropy(),
            )
        }
        Mixture::Complex { means, s_of, s_count, .. } => {
            let w = vec![1.0 / means.len() as f64; means.len()];
            (
                quad::complex_mixture_entropy(means, &w, &rule),
                grouped_entropy_complex(means, s_of, *s_count, &rule),
                quad::complex_gaussian_entropy(),
            )
        }
    };
    let h_s_given_y = hx + h_y_s - h_y;
    let h_pair_given_ys = (2.0 * hx - (h_y - h_z)) - h_s_given_y;
    (h_s_given_y, h_pair_given_ys)
}

/// Smallest power (dB) at which the target pair is dominated by B' or A'
/// (or by I(X;Y) for a point-to-point scenario). Bisection assumes the
/// region grows with P.
pub fn min_power_db(
    scenario: &RegionScenario,
    target: RatePoint,
    est: &EntropyEstimator,
) -> Result<f64, RegionError> {
    let hx = scenario.input_entropy();
    let feasible = |pdb: f64| -> bool {
        match scenario {
            RegionScenario::PointToPoint { levels, h } => {
                p2p_rate(*levels, *h, pdb, est) + MIN_POWER_RATE_TOL >= target.r1
            }
            _ => {
                let (cfma_a, cfma_b) = match *est {
                    EntropyEstimator::Quadrature { nodes } => {
                        let (hs, hp) = cfma_point_entropies(scenario, pdb, nodes);
                        let stage2 = hs.max(hp);
                        (
                            RatePoint::new(hx - stage2, hx - hs),
                            RatePoint::new(hx - hs, hx - stage2),
                        )
                    }
                    EntropyEstimator::MonteCarlo { .. } => {
                        let r = evaluate(scenario, pdb, est);
                        (r.cfma_a, r.cfma_b)
                    }
                };
                cfma_b.dominates(&target, MIN_POWER_RATE_TOL)
                    || cfma_a.dominates(&target, MIN_POWER_RATE_TOL)
            }
        }
    };
    let (mut lo, mut hi) = (-20.0f64, 45.0f64);
    if !feasible(hi) {
        return Err(RegionError::InfeasibleTarget { r1: target.r1, r2: target.r2 });
    }
    while hi - lo > 5e-3 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classifies a CFMA point against the dominant face. A point sits on the
/// face iff the sum penalty stays within half the joint uncertainty,
/// H(S|Y) <= H(X1,X2|Y)/2, and is distinct from its corner iff the other
/// user's genie-aided uncertainty is strictly below H(S|Y); equality within
/// `eps` is the boundary case where the point merges with the corner.
pub fn dominant_face_check(
    h_s_given_y: f64,
    h_pair_given_y: f64,
    h_other_given_y_both: f64,
    eps: f64,
) -> FaceStatus {
    if h_s_given_y > 0.5 * h_pair_given_y + eps {
        FaceStatus::OffFace
    } else if h_other_given_y_both + eps < h_s_given_y {
        FaceStatus::InteriorOfFace
    } else {
        FaceStatus::CoincidesWithCorner
    }
}

fn face_flag(face: FaceStatus) -> &'static str {
    match face {
        FaceStatus::InteriorOfFace => "interior",
        FaceStatus::CoincidesWithCorner => "corner",
        FaceStatus::OffFace => "off",
    }
}

/// CSV dump of reports over a power sweep.
pub fn region_csv(
    scenario: &RegionScenario,
    powers_db: &[f64],
    est: &EntropyEstimator,
) -> String {
    let mut out = String::from(
        "P_dB,R1_A,R2_A,R1_B,R2_B,R1_Ap,R2_Ap,R1_Bp,R2_Bp,HS_Y,face_flag_A,face_flag_B\n",
    );
    for &p in powers_db {
        let r = evaluate(scenario, p, est);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            crate::sim::fmt_g6(p),
            crate::sim::fmt_g6(r.corner_a.r1),
            crate::sim::fmt_g6(r.corner_a.r2),
            crate::sim::fmt_g6(r.corner_b.r1),
            crate::sim::fmt_g6(r.corner_b.r2),
            crate::sim::fmt_g6(r.cfma_a.r1),
            crate::sim::fmt_g6(r.cfma_a.r2),
            crate::sim::fmt_g6(r.cfma_b.r1),
            crate::sim::fmt_g6(r.cfma_b.r2),
            crate::sim::fmt_g6(r.h_s_given_y),
            face_flag(r.face_a),
            face_flag(r.face_b),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est() -> EntropyEstimator {
        EntropyEstimator::Quadrature { nodes: 65 }
    }

    #[test]
    fn vanishing_power_gives_a_fair_sum_bit() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let r = evaluate(&sc, -60.0, &est());
        assert!((r.h_s_given_y - 1.0).abs() < 1e-3, "{}", r.h_s_given_y);
        assert!(r.corner_a.r1.abs() < 1e-3 && r.corner_b.r2.abs() < 1e-3);
    }

    #[test]
    fn huge_power_separates_the_sum() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let r = evaluate(&sc, 40.0, &est());
        assert!(r.h_s_given_y < 1e-3, "{}", r.h_s_given_y);
    }

    #[test]
    fn bpsk_anchor_point_matches_reference_values() {
        // h = (1, sqrt 3) at 7.912 dB
        let sc = RegionScenario::bpsk_mac(1.0, 3f64.sqrt());
        let r = evaluate(&sc, 7.912, &est());
        assert!(r.error_bound <= 1e-3);
        assert!((r.corner_b.r1 - 0.974246).abs() < 5e-3, "{:?}", r.corner_b);
        assert!((r.corner_b.r2 - 0.935473).abs() < 5e-3);
        assert!((r.corner_a.r1 - 0.909755).abs() < 5e-3, "{:?}", r.corner_a);
        assert!((r.corner_a.r2 - 0.999964).abs() < 5e-3);
        assert!((r.cfma_b.r1 - 0.974246).abs() < 5e-3, "{:?}", r.cfma_b);
        assert!((r.cfma_b.r2 - 0.935473).abs() < 5e-3);
        // B' merges with the corner here
        assert_eq!(r.face_b, FaceStatus::CoincidesWithCorner);
        assert_eq!(r.face_a, FaceStatus::InteriorOfFace);
    }

    #[test]
    fn qam_anchor_point_matches_reference_values() {
        let sc = RegionScenario::qam_mac(1, std::f64::consts::FRAC_PI_6);
        let r = evaluate(&sc, 10.93, &EntropyEstimator::Quadrature { nodes: 48 });
        assert!((r.corner_b.r1 - 1.99816).abs() < 5e-3, "{:?}", r.corner_b);
        assert!((r.corner_b.r2 - 1.75720).abs() < 5e-3);
        assert!((r.cfma_b.r1 - 1.88456).abs() < 5e-3, "{:?}", r.cfma_b);
        assert!((r.cfma_b.r2 - 1.87080).abs() < 5e-3);
        assert_eq!(r.face_b, FaceStatus::InteriorOfFace);
    }

    #[test]
    fn reflection_property_of_cfma_points() {
        for sc in [
            RegionScenario::bpsk_mac(1.0, 3f64.sqrt()),
            RegionScenario::RealMac { levels: 2, h1: 1.0, h2: 1.4 },
        ] {
            let r = evaluate(&sc, 9.0, &est());
            let tol = 2.0 * r.error_bound + 1e-9;
            assert!((r.cfma_a.r1 - r.cfma_b.r2).abs() < tol);
            assert!((r.cfma_a.r2 - r.cfma_b.r1).abs() < tol);
        }
    }

    #[test]
    fn rates_are_monotone_in_power() {
        let sc = RegionScenario::bpsk_mac(1.0, 3f64.sqrt());
        let mut prev: Option<RegionReport> = None;
        for k in 0..10 {
            let p = -6.0 + 2.0 * k as f64;
            let r = evaluate(&sc, p, &est());
            if let Some(q) = prev {
                let tol = 1e-6;
                assert!(r.corner_a.r1 + tol >= q.corner_a.r1, "P={p}");
                assert!(r.corner_a.r2 + tol >= q.corner_a.r2);
                assert!(r.corner_b.r1 + tol >= q.corner_b.r1);
                assert!(r.corner_b.r2 + tol >= q.corner_b.r2);
                assert!(r.cfma_b.r1 + tol >= q.cfma_b.r1);
                assert!(r.cfma_b.r2 + tol >= q.cfma_b.r2);
            }
            prev = Some(r);
        }
    }

    #[test]
    fn cfma_points_stay_inside_the_pentagon() {
        for p in [0.0, 6.0, 12.0] {
            let sc = RegionScenario::bpsk_mac(1.0, 3f64.sqrt());
            let r = evaluate(&sc, p, &est());
            let tol = 2.0 * r.error_bound + 1e-9;
            for pt in [r.cfma_a, r.cfma_b] {
                assert!(pt.r1 <= r.corner_b.r1 + tol);
                assert!(pt.r2 <= r.corner_a.r2 + tol);
                assert!(pt.r1 + pt.r2 <= r.corner_a.r1 + r.corner_a.r2 + tol);
            }
        }
    }

    #[test]
    fn quadrature_and_monte_carlo_agree() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let rq = evaluate(&sc, 3.0, &est());
        let rm = evaluate(&sc, 3.0, &EntropyEstimator::MonteCarlo { samples: 400_000, seed: 5 });
        // rm.error_bound is three standard errors
        for (a, b) in [
            (rq.h_s_given_y, rm.h_s_given_y),
            (rq.h_pair_given_y, rm.h_pair_given_y),
            (rq.corner_a.r1, rm.corner_a.r1),
            (rq.corner_b.r2, rm.corner_b.r2),
        ] {
            assert!((a - b).abs() < rm.error_bound.max(1e-3) * 2.0, "{a} vs {b}");
        }
    }

    #[test]
    fn dominant_face_fails_at_low_power() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let r = evaluate(&sc, -40.0, &est());
        // H(S|Y) -> 1 while half the joint uncertainty -> 1 as well, but the
        // sum penalty approaches the cap strictly faster
        assert_eq!(r.face_a, FaceStatus::OffFace);
        assert_eq!(r.face_b, FaceStatus::OffFace);
    }

    #[test]
    fn face_check_classifies_the_reference_entropies() {
        // the BPSK anchor point: A' interior, B' merged with its corner
        let (hs, hpair) = (0.025754, 0.090281);
        assert_eq!(dominant_face_check(hs, hpair, 0.000036, 1e-6), FaceStatus::InteriorOfFace);
        assert_eq!(
            dominant_face_check(hs, hpair, 0.025754, 1e-6),
            FaceStatus::CoincidesWithCorner
        );
        // sum penalty above half the joint uncertainty: off the face
        assert_eq!(dominant_face_check(0.9, 1.0, 0.1, 1e-6), FaceStatus::OffFace);
    }

    #[test]
    fn min_power_hits_the_bpsk_anchor() {
        let sc = RegionScenario::bpsk_mac(1.0, 3f64.sqrt());
        let p = min_power_db(&sc, RatePoint::new(0.9742, 0.9355), &est()).unwrap();
        assert!((p - 7.91).abs() < 0.15, "{p}");
    }

    #[test]
    fn min_power_p2p_anchor() {
        let sc = RegionScenario::PointToPoint { levels: 1, h: 1.0 };
        let p = min_power_db(&sc, RatePoint::new(0.9355, 0.0), &est()).unwrap();
        assert!((p - 6.57).abs() < 0.15, "{p}");
    }

    #[test]
    fn infeasible_target_is_an_error() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        assert!(matches!(
            min_power_db(&sc, RatePoint::new(1.2, 0.4), &est()),
            Err(RegionError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn precision_gate_trips_on_tiny_budgets() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let res = evaluate_strict(
            &sc,
            3.0,
            &EntropyEstimator::MonteCarlo { samples: 2000, seed: 1 },
            1e-3,
        );
        assert!(matches!(res, Err(RegionError::Precision { .. })));
    }

    #[test]
    fn csv_dump_has_the_documented_header() {
        let sc = RegionScenario::bpsk_mac(1.0, 1.0);
        let csv = region_csv(&sc, &[0.0], &est());
        assert!(csv.starts_with(
            "P_dB,R1_A,R2_A,R1_B,R2_B,R1_Ap,R2_Ap,R1_Bp,R2_Bp,HS_Y,face_flag_A,face_flag_B\n"
        ));
        assert_eq!(csv.lines().count(), 2);
    }
}
