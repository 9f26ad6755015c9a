//! Compute-forward multiple access (CFMA) over nested LDPC codes.
//!
//! The receiver of a two-user Gaussian multiple-access channel first decodes
//! the modulo sum of the users' codewords with a standard sum-product
//! decoder fed modified initial LLRs, then uses that sum as side information
//! to decode one codeword and reconstructs the other. This crate provides:
//!
//! * [`gf2`] — parity-check matrices, alist I/O, systematic encoders, and
//!   nested-code construction by check merging;
//! * [`modulation`] — BPSK, multilevel PAM, and rotated QAM symbol mappers;
//! * [`channel`] — seeded Gaussian MAC, interference, and K-user models;
//! * [`llr`] — the initial LLR kernels for every decoding stage;
//! * [`spa`] — the flooding sum-product decoder;
//! * [`decode`] — the CFMA decode chains (binary, multilevel, complex,
//!   K-user, interference);
//! * [`region`] — numerical evaluation of the uniform-input MAC region and
//!   the CFMA achievable points;
//! * [`sim`] — a deterministic parallel Monte Carlo BER harness with a
//!   plain-text config format and CSV output.

pub mod channel;
pub mod decode;
pub mod gf2;
pub mod levels;
pub mod llr;
pub mod modulation;
pub mod region;
pub mod sim;
pub mod spa;

/// LLR magnitudes are clamped to this bound before and during sum-product
/// decoding; it is far beyond any informative value while keeping every
/// message finite.
pub const LLR_CLAMP: f64 = 50.0;

/// Clamp an LLR into [-LLR_CLAMP, LLR_CLAMP], mapping NaN to 0.
#[inline]
pub fn clamp_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}
