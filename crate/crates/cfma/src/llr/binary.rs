//! LLR kernels for the two-user BPSK chain.
//!
//! The closed forms for unit gains are kept as fast paths; general gains go
//! through the Gaussian density ratios directly. Note the sign of the
//! second-stage kernel: with the mapping 0 -> -sqrt(P), conditioning on
//! s = 0 puts the u1 = 0 hypothesis at -(h1+h2)sqrt(P), so the unit-gain
//! closed form is -4 y sqrt(P) for s = 0 (and 0 for s = 1).

use super::{log_cosh, log_sum_exp};
use crate::clamp_llr;

/// Means of y given the sum bit s, over the two (u1, u2) pairs with
/// u1 xor u2 = s.
fn sum_hypothesis_means(s: u8, h1: f64, h2: f64, amp: f64) -> [f64; 2] {
    if s & 1 == 0 {
        [-(h1 + h2) * amp, (h1 + h2) * amp]
    } else {
        [(h2 - h1) * amp, (h1 - h2) * amp]
    }
}

/// Closed-form sum LLR for h1 = h2 = 1: log cosh(2 y sqrt(P)) - 2P.
pub fn llr_sum_unit_gain(y: f64, power: f64) -> f64 {
    clamp_llr(log_cosh(2.0 * y * power.sqrt()) - 2.0 * power)
}

/// Generic density-ratio sum LLR: log p(y | s=0) - log p(y | s=1).
pub fn llr_sum_binary_generic(y: f64, h1: f64, h2: f64, power: f64) -> f64 {
    let amp = power.sqrt();
    let lp = |means: [f64; 2]| {
        log_sum_exp(&[-0.5 * (y - means[0]).powi(2), -0.5 * (y - means[1]).powi(2)])
    };
    clamp_llr(lp(sum_hypothesis_means(0, h1, h2, amp)) - lp(sum_hypothesis_means(1, h1, h2, amp)))
}

/// Initial LLR for decoding the sum codeword s = u1 xor u2.
pub fn llr_sum_binary(y: f64, h1: f64, h2: f64, power: f64) -> f64 {
    if h1 == 1.0 && h2 == 1.0 {
        llr_sum_unit_gain(y, power)
    } else {
        llr_sum_binary_generic(y, h1, h2, power)
    }
}

/// Closed-form second-stage LLR for h1 = h2 = 1 (see module note on sign).
pub fn llr_user_unit_gain(y: f64, s: u8, power: f64) -> f64 {
    if s & 1 == 0 {
        clamp_llr(-4.0 * y * power.sqrt())
    } else {
        0.0
    }
}

/// Generic second-stage LLR: log p(y | u1=0, s) - log p(y | u1=1, s), with
/// u2 = u1 xor s.
pub fn llr_user_given_sum_binary_generic(y: f64, s: u8, h1: f64, h2: f64, power: f64) -> f64 {
    let amp = power.sqrt();
    let mean = |u1: u8| {
        let u2 = u1 ^ (s & 1);
        h1 * amp * (2.0 * f64::from(u1) - 1.0) + h2 * amp * (2.0 * f64::from(u2) - 1.0)
    };
    let (m0, m1) = (mean(0), mean(1));
    clamp_llr(-0.5 * (y - m0).powi(2) + 0.5 * (y - m1).powi(2))
}

/// Initial LLR for decoding u1 once the sum bit s for this symbol is known.
pub fn llr_user_given_sum_binary(y: f64, s: u8, h1: f64, h2: f64, power: f64) -> f64 {
    if h1 == 1.0 && h2 == 1.0 {
        llr_user_unit_gain(y, s, power)
    } else {
        llr_user_given_sum_binary_generic(y, s, h1, h2, power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LLR_CLAMP;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sum_llr_at_zero_is_minus_two_p() {
        assert!((llr_sum_binary(0.0, 1.0, 1.0, 1.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn sum_llr_value_at_y_three() {
        // log cosh(6) - 2, evaluated independently
        let expect = 6f64.cosh().ln() - 2.0;
        assert!((expect - 3.3068590).abs() < 1e-6);
        assert!((llr_sum_binary(3.0, 1.0, 1.0, 1.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn sum_llr_with_uneven_gains_at_zero() {
        // mixture means +-(1+sqrt(3)) vs +-(sqrt(3)-1); exponents differ by 2 sqrt(3)
        let v = llr_sum_binary(0.0, 1.0, 3f64.sqrt(), 1.0);
        assert!((v + 2.0 * 3f64.sqrt()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn closed_form_matches_generic_at_unit_gains() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut max_diff = 0f64;
        for _ in 0..10_000 {
            let p = rng.gen_range(0.1..=10.0);
            let y = rng.gen_range(-12.0..12.0);
            let d1 = (llr_sum_unit_gain(y, p) - llr_sum_binary_generic(y, 1.0, 1.0, p)).abs();
            let s = rng.gen_range(0..=1u8);
            let d2 = (llr_user_unit_gain(y, s, p)
                - llr_user_given_sum_binary_generic(y, s, 1.0, 1.0, p))
            .abs();
            max_diff = max_diff.max(d1).max(d2);
        }
        assert!(max_diff < 1e-9, "max diff {max_diff}");
    }

    #[test]
    fn user_llr_is_zero_for_disagreeing_users_at_unit_gains() {
        for y in [-4.0, 0.0, 0.3, 9.0] {
            assert_eq!(llr_user_given_sum_binary(y, 1, 1.0, 1.0, 2.5), 0.0);
        }
    }

    #[test]
    fn user_llr_sign_follows_the_mapping() {
        // s = 0, y near -(h1+h2)sqrt(P) must favour u1 = 0
        let v = llr_user_given_sum_binary(-2.0, 0, 1.0, 1.0, 1.0);
        assert!((v - 8.0).abs() < 1e-12, "{v}");
        assert!((llr_user_given_sum_binary(1.0, 0, 1.0, 1.0, 1.0) + 4.0).abs() < 1e-12);
    }

    #[test]
    fn user_llr_uneven_gains_is_nonzero_for_s_one() {
        // two-point ratio at means +-(sqrt(3)-1)
        let v = llr_user_given_sum_binary(1.0, 1, 1.0, 3f64.sqrt(), 1.0);
        assert!((v - 2.0 * (3f64.sqrt() - 1.0)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn outputs_stay_clamped_for_huge_observations() {
        for y in [-1e3, 1e3] {
            for f in [
                llr_sum_binary(y, 1.0, 1.0, 9.0),
                llr_sum_binary(y, 1.0, 3f64.sqrt(), 9.0),
                llr_user_given_sum_binary(y, 0, 1.0, 1.0, 9.0),
            ] {
                assert!(f.is_finite() && f.abs() <= LLR_CLAMP);
            }
        }
    }
}
