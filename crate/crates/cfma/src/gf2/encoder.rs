//! Systematic encoders derived from a parity-check matrix by GF(2)
//! elimination with column pivoting, so codewords stay in the original
//! variable order even for non-systematic source matrices.

use super::dense::BitMatrix;
use super::{CodeError, ParityCheckMatrix};

/// Encoder for the code defined by a parity-check matrix.
///
/// Message bit `j` is placed verbatim at codeword position
/// `systematic_positions()[j]`; the remaining (pivot) positions carry parity.
#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    k: usize,
    generator: Vec<Vec<u8>>,
    systematic: Vec<usize>,
    pivots: Vec<usize>,
}

impl Encoder {
    /// Derives an encoder from `h`. Fails with [`CodeError::NoMessageSpace`]
    /// when the matrix has full column rank.
    pub fn derive(h: &ParityCheckMatrix) -> Result<Self, CodeError> {
        let n = h.n();
        let mut dense = BitMatrix::from_parity_check(h);
        let pivots = dense.reduce();
        let rank = pivots.len();
        if rank == n {
            return Err(CodeError::NoMessageSpace { rank, n });
        }
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let systematic: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = systematic.len();

        // One generator row per free column: set that free variable to 1 and
        // read each pivot variable off its reduced row.
        let mut generator = Vec::with_capacity(k);
        for &f in &systematic {
            let mut word = vec![0u8; n];
            word[f] = 1;
            for (row, &col) in pivots.iter().enumerate() {
                if dense.get(row, f) {
                    word[col] = 1;
                }
            }
            debug_assert!(h.is_codeword(&word).unwrap());
            generator.push(word);
        }
        Ok(Self { n, k, generator, systematic, pivots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length `k = n - rank(H)`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Codeword positions that carry the message bits, in message order.
    pub fn systematic_positions(&self) -> &[usize] {
        &self.systematic
    }

    /// Codeword positions determined by parity.
    pub fn pivot_positions(&self) -> &[usize] {
        &self.pivots
    }

    pub fn generator_rows(&self) -> &[Vec<u8>] {
        &self.generator
    }

    /// Encodes a length-`k` message into a length-`n` codeword.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, CodeError> {
        if message.len() != self.k {
            return Err(CodeError::LengthMismatch { expected: self.k, got: message.len() });
        }
        let mut word = vec![0u8; self.n];
        for (row, &bit) in self.generator.iter().zip(message) {
            if bit & 1 == 1 {
                for (w, &g) in word.iter_mut().zip(row) {
                    *w ^= g;
                }
            }
        }
        Ok(word)
    }

    /// Reads the message back out of a codeword's systematic positions.
    pub fn extract_message(&self, word: &[u8]) -> Result<Vec<u8>, CodeError> {
        if word.len() != self.n {
            return Err(CodeError::LengthMismatch { expected: self.n, got: word.len() });
        }
        Ok(self.systematic.iter().map(|&p| word[p] & 1).collect())
    }
}
