//! Initial log-likelihood ratios for every decoding stage.
//!
//! Sign convention: `LLR = log p(bit = 0 | evidence) - log p(bit = 1 |
//! evidence)`. All public kernels are total functions whose outputs are
//! clamped to [`crate::LLR_CLAMP`] so the sum-product decoder never sees a
//! non-finite message.

mod binary;
mod complex;
mod kuser;
mod multilevel;

pub use binary::{
    llr_sum_binary, llr_sum_binary_generic, llr_sum_unit_gain, llr_user_given_sum_binary,
    llr_user_given_sum_binary_generic, llr_user_unit_gain,
};
pub use complex::{Axis, ComplexMacLlr, QamSymbolState};
pub use kuser::llr_kuser_stage;
pub use multilevel::{LevelContext, MultilevelMacLlr};
#[doc(hidden)]
pub use multilevel::brute_force_level_llr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlrError {
    #[error("level {level} out of range 1..={levels}")]
    BadLevel { level: usize, levels: usize },
    #[error("lower-bit vectors disagree in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("stored carries disagree with the lower-level bits")]
    CarryMismatch,
    #[error("K = {0} users unsupported (need 2..=4)")]
    UnsupportedUserCount(usize),
    #[error("stage {m} needs {expected} decoded higher sums, got {got}")]
    WrongSumCount { m: usize, expected: usize, got: usize },
}

/// log(sum exp(x_i)) with max subtraction; empty input gives -inf.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// log cosh(x) computed as |x| + log1p(e^{-2|x|}) - log 2, stable for large x.
pub(crate) fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
