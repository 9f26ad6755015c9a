//! Symbol mappers from bits (or per-level bit stacks) to channel inputs with
//! exact average-power normalization.
//!
//! Level 1 is the least significant bit of a symbol label throughout:
//! `u = sum_l 2^(l-1) u^(l)`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModulationError {
    #[error("power must be positive, got {0}")]
    NonPositivePower(f64),
    #[error("expected {expected} level bits, got {got}")]
    WrongBitCount { expected: usize, got: usize },
    #[error("level count must be at least 1")]
    ZeroLevels,
}

/// Constellation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Bpsk,
    PamMultilevel,
    QamMultilevel,
}

/// A constellation family plus its parameters: average symbol power `P`
/// (per real symbol for BPSK/PAM, per complex symbol for QAM), levels per
/// real dimension `L`, and the user-2 rotation `theta` (QAM only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationSpec {
    pub family: Family,
    pub power: f64,
    pub levels: usize,
    pub theta: f64,
}

impl ModulationSpec {
    pub fn bpsk(power: f64) -> Result<Self, ModulationError> {
        if power <= 0.0 {
            return Err(ModulationError::NonPositivePower(power));
        }
        Ok(Self { family: Family::Bpsk, power, levels: 1, theta: 0.0 })
    }

    pub fn pam(power: f64, levels: usize) -> Result<Self, ModulationError> {
        if power <= 0.0 {
            return Err(ModulationError::NonPositivePower(power));
        }
        if levels == 0 {
            return Err(ModulationError::ZeroLevels);
        }
        Ok(Self { family: Family::PamMultilevel, power, levels, theta: 0.0 })
    }

    pub fn qam(power: f64, levels: usize, theta: f64) -> Result<Self, ModulationError> {
        if power <= 0.0 {
            return Err(ModulationError::NonPositivePower(power));
        }
        if levels == 0 {
            return Err(ModulationError::ZeroLevels);
        }
        Ok(Self { family: Family::QamMultilevel, power, levels, theta })
    }

    /// Same spec at a different power.
    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    /// Bits carried per channel use (real symbol for BPSK/PAM, complex
    /// symbol for QAM).
    pub fn bits_per_symbol(&self) -> usize {
        match self.family {
            Family::Bpsk | Family::PamMultilevel => self.levels,
            Family::QamMultilevel => 2 * self.levels,
        }
    }
}

/// BPSK map: 0 -> -sqrt(P), 1 -> +sqrt(P).
pub fn map_bpsk(bit: u8, power: f64) -> Result<f64, ModulationError> {
    if power <= 0.0 {
        return Err(ModulationError::NonPositivePower(power));
    }
    Ok(power.sqrt() * (2.0 * f64::from(bit & 1) - 1.0))
}

/// Amplitude step of the 2^L-point PAM grid with mean power `P`.
pub fn pam_scale(power: f64, levels: usize) -> f64 {
    (3.0 * power / (4f64.powi(levels as i32) - 1.0)).sqrt()
}

/// Maps an integer label in [0, 2^L) onto the PAM grid.
pub fn map_pam_label(label: u32, power: f64, levels: usize) -> f64 {
    let spread = (1u32 << levels) - 1;
    pam_scale(power, levels) * (2.0 * f64::from(label) - f64::from(spread))
}

/// Multilevel PAM map; `level_bits[l]` is level l+1 (LSB first).
pub fn map_pam(level_bits: &[u8], power: f64, levels: usize) -> Result<f64, ModulationError> {
    if power <= 0.0 {
        return Err(ModulationError::NonPositivePower(power));
    }
    if level_bits.len() != levels || levels == 0 {
        return Err(ModulationError::WrongBitCount { expected: levels, got: level_bits.len() });
    }
    Ok(map_pam_label(bits_to_label(level_bits), power, levels))
}

/// Per-dimension amplitude step of the square 4^L-QAM grid with mean power
/// `P` per complex symbol.
pub fn qam_scale(power: f64, levels: usize) -> f64 {
    (3.0 * power / (2.0 * (4f64.powi(levels as i32) - 1.0))).sqrt()
}

/// Maps the pair of integer labels (imag from the odd code symbol, real
/// from the even) onto the QAM grid, rotated by `theta`.
pub fn map_qam_labels(
    odd_label: u32,
    even_label: u32,
    power: f64,
    levels: usize,
    theta: f64,
) -> Complex64 {
    let spread = f64::from((1u32 << levels) - 1);
    let scale = qam_scale(power, levels);
    let point = Complex64::new(
        scale * (2.0 * f64::from(even_label) - spread),
        scale * (2.0 * f64::from(odd_label) - spread),
    );
    if theta == 0.0 {
        point
    } else {
        Complex64::from_polar(1.0, theta) * point
    }
}

/// Multilevel QAM map. The odd code symbol's bit stack feeds the imaginary
/// part, the even symbol's the real part; `theta` rotates the whole point
/// (user 2's constellation in the two-user scheme).
pub fn map_qam(
    odd_levels: &[u8],
    even_levels: &[u8],
    power: f64,
    levels: usize,
    theta: f64,
) -> Result<Complex64, ModulationError> {
    if power <= 0.0 {
        return Err(ModulationError::NonPositivePower(power));
    }
    if odd_levels.len() != levels {
        return Err(ModulationError::WrongBitCount { expected: levels, got: odd_levels.len() });
    }
    if even_levels.len() != levels {
        return Err(ModulationError::WrongBitCount { expected: levels, got: even_levels.len() });
    }
    Ok(map_qam_labels(bits_to_label(odd_levels), bits_to_label(even_levels), power, levels, theta))
}

/// Packs LSB-first level bits into an integer label.
pub fn bits_to_label(level_bits: &[u8]) -> u32 {
    level_bits.iter().enumerate().fold(0u32, |acc, (l, &b)| acc | (u32::from(b & 1) << l))
}

/// Unpacks an integer label into LSB-first level bits.
pub fn label_to_bits(label: u32, levels: usize) -> Vec<u8> {
    (0..levels).map(|l| (label >> l & 1) as u8).collect()
}

/// Constellation dump rows `(label, re, im)` for plotting.
pub fn constellation_csv(spec: &ModulationSpec) -> String {
    let mut out = String::from("label,re,im\n");
    match spec.family {
        Family::Bpsk | Family::PamMultilevel => {
            for label in 0..(1u32 << spec.levels) {
                let x = map_pam_label(label, spec.power, spec.levels);
                out.push_str(&format!("{label},{x},0\n"));
            }
        }
        Family::QamMultilevel => {
            for odd in 0..(1u32 << spec.levels) {
                for even in 0..(1u32 << spec.levels) {
                    let z = map_qam_labels(odd, even, spec.power, spec.levels, spec.theta);
                    let label = odd << spec.levels | even;
                    out.push_str(&format!("{label},{},{}\n", z.re, z.im));
                }
            }
        }
    }
    out
}
