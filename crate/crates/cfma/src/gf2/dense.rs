//! Dense GF(2) matrices packed into 64-bit words, for rank computation and
//! encoder derivation.

use super::ParityCheckMatrix;

#[derive(Debug, Clone)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self { rows, cols, words_per_row, data: vec![0; rows * words_per_row] }
    }

    pub fn from_parity_check(h: &ParityCheckMatrix) -> Self {
        let mut m = Self::zero(h.num_checks(), h.n());
        for (r, row) in h.check_rows().iter().enumerate() {
            for &v in row {
                m.set(r, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize) {
        self.data[r * self.words_per_row + c / 64] |= 1 << (c % 64);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words_per_row;
        for i in 0..w {
            self.data.swap(a * w + i, b * w + i);
        }
    }

    /// rows[dst] ^= rows[src]
    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words_per_row;
        let (s, d) = (src * w, dst * w);
        for i in 0..w {
            let v = self.data[s + i];
            self.data[d + i] ^= v;
        }
    }

    pub fn row_as_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c) as u8).collect()
    }

    /// In-place reduced row echelon form. Returns the pivot columns in the
    /// order they were claimed (strictly increasing).
    pub fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pivot_row) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(pivot_row, r);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_row_into(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity_like() {
        let mut m = BitMatrix::zero(3, 5);
        m.set(0, 0);
        m.set(1, 2);
        m.set(2, 4);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn dependent_rows_lose_rank() {
        let mut m = BitMatrix::zero(3, 4);
        // r2 = r0 ^ r1
        for c in [0, 1] {
            m.set(0, c);
        }
        for c in [1, 2] {
            m.set(1, c);
        }
        for c in [0, 2] {
            m.set(2, c);
        }
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn reduce_reports_increasing_pivots() {
        let mut m = BitMatrix::zero(2, 70);
        m.set(0, 65);
        m.set(1, 3);
        m.set(1, 65);
        let pivots = m.reduce();
        assert_eq!(pivots, vec![3, 65]);
    }
}
