//! Arithmetic on Z_{2^L} symbol labels and their per-level binary digits.
//!
//! The multilevel chain decodes the digits of s = (u1 + u2) mod 2^L one
//! level at a time. Digit l of s equals the XOR of the users' digits, offset
//! by a carry that depends only on the digits below l; `carry_bit` is that
//! indicator and `sum_digits` is the resulting digit-by-digit decomposition.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("symbol {value} out of range for {levels} levels")]
    SymbolOutOfRange { value: u32, levels: usize },
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("carry is defined for levels >= 2, got {0}")]
    CarryLevelTooLow(usize),
}

/// Elementwise (u1 + u2) mod 2^L.
pub fn sum_mod(u1: &[u32], u2: &[u32], levels: usize) -> Result<Vec<u32>, LevelError> {
    if u1.len() != u2.len() {
        return Err(LevelError::LengthMismatch { a: u1.len(), b: u2.len() });
    }
    let q = 1u32 << levels;
    for &v in u1.iter().chain(u2) {
        if v >= q {
            return Err(LevelError::SymbolOutOfRange { value: v, levels });
        }
    }
    Ok(u1.iter().zip(u2).map(|(&a, &b)| (a + b) & (q - 1)).collect())
}

/// Carry indicator into level `level` (>= 2) from the lower digits:
/// 1 iff sum_{j<level} 2^(j-1) (u1^(j) + u2^(j)) >= 2^(level-1).
/// `low1`, `low2` are the packed lower digits (labels mod 2^(level-1)).
pub fn carry_bit(low1: u32, low2: u32, level: usize) -> u8 {
    debug_assert!(level >= 2);
    u8::from(low1 + low2 >= 1 << (level - 1))
}

/// Per-symbol carry vector into `level` given both users' decoded lower
/// digits (packed labels of levels 1..level-1).
pub fn carry_vector(lower1: &[u32], lower2: &[u32], level: usize) -> Result<Vec<u8>, LevelError> {
    if level < 2 {
        return Err(LevelError::CarryLevelTooLow(level));
    }
    if lower1.len() != lower2.len() {
        return Err(LevelError::LengthMismatch { a: lower1.len(), b: lower2.len() });
    }
    let mask = (1u32 << (level - 1)) - 1;
    for &v in lower1.iter().chain(lower2) {
        if v & !mask != 0 {
            return Err(LevelError::SymbolOutOfRange { value: v, levels: level - 1 });
        }
    }
    Ok(lower1.iter().zip(lower2).map(|(&a, &b)| carry_bit(a, b, level)).collect())
}

/// Digits of (u1 + u2) mod 2^L computed level by level: digit 1 is the plain
/// XOR, and digit l >= 2 is the XOR offset by the carry from below. LSB
/// first.
pub fn sum_digits(u1: u32, u2: u32, levels: usize) -> Vec<u8> {
    let mut digits = Vec::with_capacity(levels);
    for level in 1..=levels {
        let b1 = (u1 >> (level - 1) & 1) as u8;
        let b2 = (u2 >> (level - 1) & 1) as u8;
        let carry = if level == 1 {
            0
        } else {
            let mask = (1u32 << (level - 1)) - 1;
            carry_bit(u1 & mask, u2 & mask, level)
        };
        digits.push(b1 ^ b2 ^ carry);
    }
    digits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::label_to_bits;

    #[test]
    fn sum_mod_examples() {
        assert_eq!(sum_mod(&[1], &[3], 2).unwrap(), vec![0]);
        assert_eq!(sum_mod(&[2], &[3], 2).unwrap(), vec![1]);
        assert_eq!(sum_mod(&[5], &[6], 3).unwrap(), vec![3]);
        assert_eq!(sum_mod(&[0, 1], &[1, 1], 1).unwrap(), vec![1, 0]);
        assert!(matches!(sum_mod(&[4], &[0], 2), Err(LevelError::SymbolOutOfRange { .. })));
    }

    #[test]
    fn carry_examples() {
        assert_eq!(carry_bit(1, 1, 2), 1);
        assert_eq!(carry_bit(0, 1, 2), 0);
        // lower digits u1 = (1,1) -> 3, u2 = (1,0) -> 1: 3 + 1 = 4 >= 4
        assert_eq!(carry_bit(3, 1, 3), 1);
        assert_eq!(carry_vector(&[1, 0], &[1, 1], 2).unwrap(), vec![1, 0]);
        assert!(carry_vector(&[0], &[0], 1).is_err());
    }

    #[test]
    fn digit_rule_worked_examples() {
        // u1 = 1 (bits 1,0), u2 = 3 (bits 1,1): sum 0; carry into level 2
        assert_eq!(sum_digits(1, 3, 2), vec![0, 0]);
        // u1 = 2 (bits 0,1), u2 = 3 (bits 1,1): sum 1; no carry into level 2
        assert_eq!(sum_digits(2, 3, 2), vec![1, 0]);
    }

    #[test]
    fn single_level_is_xor() {
        for u1 in 0..2 {
            for u2 in 0..2 {
                assert_eq!(sum_digits(u1, u2, 1), vec![(u1 ^ u2) as u8]);
            }
        }
    }

    #[test]
    fn digits_match_the_modular_sum_exhaustively() {
        // the digit recursion must agree with the binary expansion of
        // (u1 + u2) mod 2^L for every pair, with zero tolerance
        for levels in 1..=4usize {
            let q = 1u32 << levels;
            for u1 in 0..q {
                for u2 in 0..q {
                    let s = (u1 + u2) & (q - 1);
                    assert_eq!(
                        sum_digits(u1, u2, levels),
                        label_to_bits(s, levels),
                        "L={levels} u1={u1} u2={u2}"
                    );
                }
            }
        }
    }
}
