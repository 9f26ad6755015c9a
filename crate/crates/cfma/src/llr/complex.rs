//! LLR kernels for rotated QAM over the two-user complex MAC.
//!
//! One complex channel symbol carries two code symbols: the odd code symbol
//! rides the imaginary axis, the even one the real axis, each with its own
//! L-digit stack. A level-l LLR therefore marginalizes not only the upper
//! digits of its own axis but every undecoded digit of the partner axis.
//! The density is the circularly symmetric exp(-|y - h1 phi1 - h2 phi2|^2).

use super::multilevel::level_candidates;
use super::log_sum_exp;
use crate::clamp_llr;
use crate::levels::carry_bit;
use crate::modulation::map_qam_labels;
use num_complex::Complex64;

/// Which axis of the complex symbol a code position occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Odd code symbol (imaginary part).
    Imag,
    /// Even code symbol (real part).
    Real,
}

/// Decoded per-symbol state entering a level-l stage of the complex chain.
///
/// `low_*` pack each user's digits below l on each axis. `s_im` / `s_re`
/// carry the decoded level-l sum digits once available (user stage).
#[derive(Debug, Clone, Copy, Default)]
pub struct QamSymbolState {
    pub low_im1: u32,
    pub low_im2: u32,
    pub low_re1: u32,
    pub low_re2: u32,
    pub s_im: Option<u8>,
    pub s_re: Option<u8>,
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexMacLlr {
    power: f64,
    levels: usize,
    h1: Complex64,
    h2: Complex64,
    theta: f64,
}

impl ComplexMacLlr {
    pub fn new(power: f64, levels: usize, h1: Complex64, h2: Complex64, theta: f64) -> Self {
        Self { power, levels, h1, h2, theta }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn log_mixture(
        &self,
        y: Complex64,
        im_cands: &[(u32, u32)],
        re_cands: &[(u32, u32)],
    ) -> f64 {
        let mut terms = Vec::with_capacity(im_cands.len() * re_cands.len());
        for &(u1_im, u2_im) in im_cands {
            for &(u1_re, u2_re) in re_cands {
                let x1 = map_qam_labels(u1_im, u1_re, self.power, self.levels, 0.0);
                let x2 = map_qam_labels(u2_im, u2_re, self.power, self.levels, self.theta);
                let mean = self.h1 * x1 + self.h2 * x2;
                terms.push(-(y - mean).norm_sqr());
            }
        }
        log_sum_exp(&terms)
    }

    fn axis_lows(state: &QamSymbolState, axis: Axis) -> (u32, u32) {
        match axis {
            Axis::Imag => (state.low_im1, state.low_im2),
            Axis::Real => (state.low_re1, state.low_re2),
        }
    }

    /// Sum-stage log density with the level-l sum digit of `axis` pinned to
    /// `s_bit`; the partner axis is fully marginalized at this level.
    fn sum_log_density(&self, y: Complex64, level: usize, state: &QamSymbolState, axis: Axis, s_bit: u8) -> f64 {
        let (t1, t2) = Self::axis_lows(state, axis);
        let (o1, o2) = Self::axis_lows(state, other(axis));
        let target = level_candidates(self.levels, level, t1, t2, Some(s_bit), None);
        let partner = level_candidates(self.levels, level, o1, o2, None, None);
        match axis {
            Axis::Imag => self.log_mixture(y, &target, &partner),
            Axis::Real => self.log_mixture(y, &partner, &target),
        }
    }

    /// Sum-stage LLR before carry correction.
    pub fn sum_llr_star(&self, y: Complex64, level: usize, state: &QamSymbolState, axis: Axis) -> f64 {
        clamp_llr(
            self.sum_log_density(y, level, state, axis, 0)
                - self.sum_log_density(y, level, state, axis, 1),
        )
    }

    /// Sum-stage LLR of the codeword bit s^(l) xor c^(l) on `axis`.
    pub fn sum_llr(&self, y: Complex64, level: usize, state: &QamSymbolState, axis: Axis) -> f64 {
        let star = self.sum_llr_star(y, level, state, axis);
        let (l1, l2) = Self::axis_lows(state, axis);
        if level >= 2 && carry_bit(l1, l2, level) == 1 {
            -star
        } else {
            star
        }
    }

    /// User-stage LLR for user 1's level-l digit on `axis`. Both axes' sum
    /// digits for this level must already be present in `state`.
    pub fn user_llr(&self, y: Complex64, level: usize, state: &QamSymbolState, axis: Axis) -> f64 {
        let s_target = match axis {
            Axis::Imag => state.s_im,
            Axis::Real => state.s_re,
        }
        .expect("user stage requires the decoded sum digit on the target axis");
        let s_partner = match axis {
            Axis::Imag => state.s_re,
            Axis::Real => state.s_im,
        }
        .expect("user stage requires the decoded sum digit on the partner axis");

        let (t1, t2) = Self::axis_lows(state, axis);
        let (o1, o2) = Self::axis_lows(state, other(axis));
        let partner = level_candidates(self.levels, level, o1, o2, Some(s_partner), None);
        let mut log_p = [0.0; 2];
        for (bit, slot) in log_p.iter_mut().enumerate() {
            let target =
                level_candidates(self.levels, level, t1, t2, Some(s_target), Some(bit as u8));
            *slot = match axis {
                Axis::Imag => self.log_mixture(y, &target, &partner),
                Axis::Real => self.log_mixture(y, &partner, &target),
            };
        }
        clamp_llr(log_p[0] - log_p[1])
    }
}

fn other(axis: Axis) -> Axis {
    match axis {
        Axis::Imag => Axis::Real,
        Axis::Real => Axis::Imag,
    }
}
