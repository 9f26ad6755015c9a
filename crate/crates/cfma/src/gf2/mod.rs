//! Binary linear codes: sparse parity-check matrices, alist I/O, systematic
//! encoders derived by GF(2) elimination, and nested-code construction by
//! check merging.

mod alist;
mod dense;
mod encoder;
mod merge;
mod regular;

pub use alist::{parse_alist, write_alist};
pub use dense::BitMatrix;
pub use encoder::Encoder;
pub use merge::{build_nested_pair, merge_checks, merge_checks_xor, MergeKind, NestedCodePair};
pub use regular::{regular_code, regular_code_full_rank};

use thiserror::Error;

/// Errors from code construction and I/O.
#[derive(Debug, Error)]
pub enum CodeError {
    #[error("alist parse error at line {line}: {msg}")]
    AlistParse { line: usize, msg: String },
    #[error("vector length {got} does not match code length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("check index {index} out of range for {m} checks")]
    CheckOutOfRange { index: usize, m: usize },
    #[error("variable index {index} out of range for {n} variables")]
    VarOutOfRange { index: usize, n: usize },
    #[error("duplicate variable {var} in check {check}")]
    DuplicateEntry { check: usize, var: usize },
    #[error("matrix must have at least one check and one variable")]
    Empty,
    #[error("cannot merge a check with itself (index {0})")]
    SelfMerge(usize),
    #[error("checks {i} and {j} share variables; disjoint-neighbor merge refused")]
    MergeOverlap { i: usize, j: usize },
    #[error("merging checks {i} and {j} would produce an all-zero row")]
    MergeZeroRow { i: usize, j: usize },
    #[error("merging checks {i} and {j} would isolate variable {var}")]
    MergeIsolatesVariable { i: usize, j: usize, var: usize },
    #[error("code has no message space (rank {rank} = length {n})")]
    NoMessageSpace { rank: usize, n: usize },
    #[error("nested-code construction stalled after {attempts} attempts: {completed} of {requested} merges done")]
    ConstructionFailed {
        attempts: usize,
        completed: usize,
        requested: usize,
    },
    #[error("invalid regular code parameters: n={n}, var_degree={dv}, check_degree={dc}")]
    BadRegularParams { n: usize, dv: usize, dc: usize },
    #[error("could not draw a full-rank regular code after {attempts} attempts")]
    RankDeficient { attempts: usize },
}

/// A sparse binary parity-check matrix with its Tanner-graph adjacency.
///
/// Rows are checks, columns are variables (codeword symbols). Both the
/// per-check and per-variable adjacency lists are kept sorted and describe
/// the same bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    check_rows: Vec<Vec<usize>>,
    var_cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-check variable lists (0-based indices).
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        if n == 0 || checks.is_empty() {
            return Err(CodeError::Empty);
        }
        let mut check_rows = checks;
        for (c, row) in check_rows.iter_mut().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(CodeError::DuplicateEntry { check: c, var: w[0] });
                }
            }
            if let Some(&v) = row.last() {
                if v >= n {
                    return Err(CodeError::VarOutOfRange { index: v, n });
                }
            }
        }
        let var_cols = transpose(n, &check_rows);
        Ok(Self { n, check_rows, var_cols })
    }

    /// Builds a matrix from dense 0/1 rows.
    pub fn from_dense_rows(rows: &[Vec<u8>]) -> Result<Self, CodeError> {
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        let checks = rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect())
            .collect();
        Self::from_checks(n, checks)
    }

    /// Codeword length (number of variables).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of checks (rows).
    pub fn num_checks(&self) -> usize {
        self.check_rows.len()
    }

    /// Variables incident to check `c`, sorted.
    pub fn check_row(&self, c: usize) -> &[usize] {
        &self.check_rows[c]
    }

    /// Checks incident to variable `v`, sorted.
    pub fn var_col(&self, v: usize) -> &[usize] {
        &self.var_cols[v]
    }

    pub fn check_rows(&self) -> &[Vec<usize>] {
        &self.check_rows
    }

    pub fn var_cols(&self) -> &[Vec<usize>] {
        &self.var_cols
    }

    pub fn max_check_degree(&self) -> usize {
        self.check_rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_var_degree(&self) -> usize {
        self.var_cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Syndrome of `u` over GF(2) (one bit per check).
    pub fn syndrome(&self, u: &[u8]) -> Result<Vec<u8>, CodeError> {
        if u.len() != self.n {
            return Err(CodeError::LengthMismatch { expected: self.n, got: u.len() });
        }
        Ok(self
            .check_rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &v| acc ^ (u[v] & 1)))
            .collect())
    }

    /// True iff `H u = 0` over GF(2).
    pub fn is_codeword(&self, u: &[u8]) -> Result<bool, CodeError> {
        Ok(self.syndrome(u)?.iter().all(|&b| b == 0))
    }

    /// Row `c` as a dense 0/1 vector.
    pub fn dense_row(&self, c: usize) -> Vec<u8> {
        let mut row = vec![0u8; self.n];
        for &v in &self.check_rows[c] {
            row[v] = 1;
        }
        row
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        BitMatrix::from_parity_check(self).rank()
    }

    /// Verifies that `check_rows` and `var_cols` describe the same graph with
    /// sorted, duplicate-free, in-range entries.
    pub fn is_consistent(&self) -> bool {
        let ok_rows = self.check_rows.iter().all(|row| {
            row.windows(2).all(|w| w[0] < w[1]) && row.iter().all(|&v| v < self.n)
        });
        let m = self.check_rows.len();
        let ok_cols = self.var_cols.iter().all(|col| {
            col.windows(2).all(|w| w[0] < w[1]) && col.iter().all(|&c| c < m)
        });
        ok_rows && ok_cols && self.var_cols == transpose(self.n, &self.check_rows)
    }
}

fn transpose(n: usize, check_rows: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut var_cols = vec![Vec::new(); n];
    for (c, row) in check_rows.iter().enumerate() {
        for &v in row {
            var_cols[v].push(c);
        }
    }
    // Check indices are pushed in increasing order, so columns are sorted.
    var_cols
}


#[cfg(test)]
mod tests {
    use super::test_fixtures::*;
    use super::*;

    #[test]
    fn adjacency_is_transposed_consistently() {
        let h = demo_code_4x8();
        assert!(h.is_consistent());
        assert_eq!(h.check_row(2), &[2, 4, 5, 7]);
        assert_eq!(h.var_col(4), &[1, 2, 3]);
        assert_eq!(h.var_col(0), &[0]);
    }

    #[test]
    fn zero_vector_is_a_codeword() {
        let h = demo_code_4x8();
        assert!(h.is_codeword(&[0; 8]).unwrap());
    }

    #[test]
    fn unit_vector_syndrome_is_its_column() {
        let h = demo_code_4x8();
        let mut e1 = vec![0u8; 8];
        e1[0] = 1;
        assert!(!h.is_codeword(&e1).unwrap());
        assert_eq!(h.syndrome(&e1).unwrap(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let h = demo_code_4x8();
        assert!(matches!(
            h.is_codeword(&[0; 7]),
            Err(CodeError::LengthMismatch { expected: 8, got: 7 })
        ));
    }

    #[test]
    fn duplicate_entry_is_rejected() {
        let err = ParityCheckMatrix::from_checks(4, vec![vec![1, 1, 2]]).unwrap_err();
        assert!(matches!(err, CodeError::DuplicateEntry { check: 0, var: 1 }));
    }

    #[test]
    fn demo_ranks() {
        assert_eq!(demo_code_4x8().rank(), 4);
        assert_eq!(demo_code_3x8().rank(), 3);
    }
}
