//! Nested-code construction by merging parity checks.
//!
//! Replacing two rows of H by their XOR keeps every original codeword valid
//! while dropping one check, so the new code contains the old one. The safe
//! variant requires disjoint row supports; the XOR variant allows overlap
//! (shared variables cancel) but refuses merges that would zero the row or
//! strand a variable with no remaining checks.

use super::{CodeError, ParityCheckMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeKind {
    Disjoint,
    Xor,
}

/// A lower-rate code together with the higher-rate supercode obtained from
/// it by check merging. Every codeword of `sub` is a codeword of `sup`.
#[derive(Debug, Clone)]
pub struct NestedCodePair {
    sub: ParityCheckMatrix,
    sup: ParityCheckMatrix,
    merge_log: Vec<(usize, usize, MergeKind)>,
}

impl NestedCodePair {
    pub fn new(
        sub: ParityCheckMatrix,
        sup: ParityCheckMatrix,
        merge_log: Vec<(usize, usize, MergeKind)>,
    ) -> Self {
        Self { sub, sup, merge_log }
    }

    /// Trivial pair with no merges (sub = sup).
    pub fn trivial(h: ParityCheckMatrix) -> Self {
        Self { sup: h.clone(), sub: h, merge_log: Vec::new() }
    }

    pub fn sub(&self) -> &ParityCheckMatrix {
        &self.sub
    }

    pub fn sup(&self) -> &ParityCheckMatrix {
        &self.sup
    }

    /// Merges applied, as (check i, check j) pairs on the state at the time
    /// of each merge.
    pub fn merge_log(&self) -> &[(usize, usize, MergeKind)] {
        &self.merge_log
    }

    pub fn num_merges(&self) -> usize {
        self.merge_log.len()
    }
}

fn check_merge_indices(h: &ParityCheckMatrix, i: usize, j: usize) -> Result<(), CodeError> {
    let m = h.num_checks();
    if i >= m {
        return Err(CodeError::CheckOutOfRange { index: i, m });
    }
    if j >= m {
        return Err(CodeError::CheckOutOfRange { index: j, m });
    }
    if i == j {
        return Err(CodeError::SelfMerge(i));
    }
    Ok(())
}

fn replace_rows(
    h: &ParityCheckMatrix,
    i: usize,
    j: usize,
    merged: Vec<usize>,
) -> ParityCheckMatrix {
    let (keep, drop) = (i.min(j), i.max(j));
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(h.num_checks() - 1);
    for (c, row) in h.check_rows().iter().enumerate() {
        if c == keep {
            rows.push(merged.clone());
        } else if c != drop {
            rows.push(row.clone());
        }
    }
    ParityCheckMatrix::from_checks(h.n(), rows).expect("merged rows stay valid")
}

/// Sorted symmetric difference of two sorted index lists.
fn xor_rows(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            std::cmp::Ordering::Equal => {
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

fn rows_overlap(a: &[usize], b: &[usize]) -> bool {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Merges checks `i` and `j`, requiring their variable neighborhoods to be
/// disjoint (the conservative rule that can never isolate a variable).
pub fn merge_checks(
    h: &ParityCheckMatrix,
    i: usize,
    j: usize,
) -> Result<ParityCheckMatrix, CodeError> {
    check_merge_indices(h, i, j)?;
    let (a, b) = (h.check_row(i), h.check_row(j));
    if rows_overlap(a, b) {
        return Err(CodeError::MergeOverlap { i, j });
    }
    Ok(replace_rows(h, i, j, xor_rows(a, b)))
}

/// Merges checks `i` and `j` by XOR, cancelling shared variables. Refused if
/// the result would be a zero row or if a shared variable would lose its
/// last check.
pub fn merge_checks_xor(
    h: &ParityCheckMatrix,
    i: usize,
    j: usize,
) -> Result<ParityCheckMatrix, CodeError> {
    check_merge_indices(h, i, j)?;
    let (a, b) = (h.check_row(i), h.check_row(j));
    let merged = xor_rows(a, b);
    if merged.is_empty() {
        return Err(CodeError::MergeZeroRow { i, j });
    }
    // Variables in both rows drop out of the merged row; if such a variable
    // had no checks besides i and j it would be left isolated.
    for &v in a {
        if b.binary_search(&v).is_ok() {
            let others = h.var_col(v).iter().any(|&c| c != i && c != j);
            if !others {
                return Err(CodeError::MergeIsolatesVariable { i, j, var: v });
            }
        }
    }
    Ok(replace_rows(h, i, j, merged))
}

/// Builds a nested pair by applying `merges` seeded random check merges to
/// `base`. Each step samples a batch of random pairs and keeps the lightest
/// workable one (smallest combined degree), which stops a few rows from
/// absorbing merge after merge and wrecking the supercode's graph.
/// Disjoint-neighbor merges are preferred; overlapping pairs fall back to
/// the XOR merge. Merges that would duplicate an existing row are retried
/// with a different pair so the rank drops by exactly one per merge on a
/// full-rank base.
pub fn build_nested_pair(
    base: &ParityCheckMatrix,
    merges: usize,
    seed: u64,
) -> Result<NestedCodePair, CodeError> {
    if merges + 1 > base.num_checks() {
        return Err(CodeError::ConstructionFailed {
            attempts: 0,
            completed: 0,
            requested: merges,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = base.clone();
    let mut log = Vec::with_capacity(merges);
    let max_attempts = 200 * merges + 1000;
    let mut attempts = 0;
    const BATCH: usize = 16;
    while log.len() < merges {
        if attempts >= max_attempts {
            return Err(CodeError::ConstructionFailed {
                attempts,
                completed: log.len(),
                requested: merges,
            });
        }
        let m = h.num_checks();
        let mut best: Option<(usize, usize, bool, usize)> = None;
        for _ in 0..BATCH {
            attempts += 1;
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i == j {
                continue;
            }
            let weight = h.check_row(i).len() + h.check_row(j).len();
            if best.map(|(.., w)| weight >= w).unwrap_or(false) {
                continue;
            }
            let disjoint = !rows_overlap(h.check_row(i), h.check_row(j));
            best = Some((i, j, disjoint, weight));
        }
        let Some((i, j, disjoint, _)) = best else { continue };
        let candidate = if disjoint {
            merge_checks(&h, i, j)
        } else {
            merge_checks_xor(&h, i, j)
        };
        let Ok(next) = candidate else { continue };
        let merged_row = next.check_row(i.min(j)).to_vec();
        let duplicate = next
            .check_rows()
            .iter()
            .enumerate()
            .any(|(c, row)| c != i.min(j) && *row == merged_row);
        if duplicate {
            continue;
        }
        let kind = if disjoint { MergeKind::Disjoint } else { MergeKind::Xor };
        log.push((i, j, kind));
        h = next;
    }
    Ok(NestedCodePair::new(base.clone(), h, log))
}

#[cfg(test)]
mod tests {
    use super::super::test_fixtures::*;
    use super::super::Encoder;
    use super::*;
    use rand::Rng;

    #[test]
    fn disjoint_merge_xors_supports() {
        let h = ParityCheckMatrix::from_dense_rows(&[
            vec![1, 0, 0, 0],
            vec![0, 1, 0, 0],
            vec![0, 0, 1, 1],
        ])
        .unwrap();
        let merged = merge_checks(&h, 0, 1).unwrap();
        assert_eq!(merged.num_checks(), 2);
        assert_eq!(merged.dense_row(0), vec![1, 1, 0, 0]);
    }

    #[test]
    fn overlapping_merge_is_refused() {
        let h = ParityCheckMatrix::from_dense_rows(&[vec![1, 1, 0], vec![1, 0, 1]]).unwrap();
        assert!(matches!(merge_checks(&h, 0, 1), Err(CodeError::MergeOverlap { i: 0, j: 1 })));
    }

    #[test]
    fn demo_rows_3_4_overlap_but_xor_merge_reproduces_supercode() {
        let h = demo_code_4x8();
        // rows 2 and 3 (0-based) share variables 4 and 5
        assert!(matches!(merge_checks(&h, 2, 3), Err(CodeError::MergeOverlap { .. })));
        let merged = merge_checks_xor(&h, 2, 3).unwrap();
        assert_eq!(merged.dense_row(2), vec![0, 0, 1, 1, 0, 0, 1, 1]);
        assert_eq!(merged, demo_code_3x8());
    }

    #[test]
    fn xor_merge_of_equal_rows_is_refused() {
        let h = ParityCheckMatrix::from_dense_rows(&[vec![1, 1, 0, 0], vec![1, 1, 0, 0]]).unwrap();
        assert!(matches!(merge_checks_xor(&h, 0, 1), Err(CodeError::MergeZeroRow { .. })));
    }

    #[test]
    fn xor_merge_refuses_to_isolate_a_degree_two_variable() {
        // x1 appears only in the two merged checks: x1+x2+x3 and x1+x4+x5.
        let h = ParityCheckMatrix::from_dense_rows(&[
            vec![1, 1, 1, 0, 0],
            vec![1, 0, 0, 1, 1],
        ])
        .unwrap();
        assert!(matches!(
            merge_checks_xor(&h, 0, 1),
            Err(CodeError::MergeIsolatesVariable { var: 0, .. })
        ));
    }

    #[test]
    fn every_subcode_word_satisfies_the_merged_matrix() {
        let h = demo_code_4x8();
        let merged = merge_checks_xor(&h, 2, 3).unwrap();
        let enc = Encoder::derive(&h).unwrap();
        for m in 0u32..16 {
            let msg: Vec<u8> = (0..4).map(|b| (m >> b & 1) as u8).collect();
            let w = enc.encode(&msg).unwrap();
            assert!(merged.is_codeword(&w).unwrap());
        }
    }

    #[test]
    fn zero_merges_is_the_identity() {
        let h = demo_code_4x8();
        let pair = build_nested_pair(&h, 0, 9).unwrap();
        assert_eq!(pair.sup(), &h);
        assert!(pair.merge_log().is_empty());
    }

    #[test]
    fn demo_pair_reaches_rate_five_eighths() {
        let h = demo_code_4x8();
        let pair = build_nested_pair(&h, 1, 4).unwrap();
        assert_eq!(pair.sup().num_checks(), 3);
        assert_eq!(Encoder::derive(pair.sup()).unwrap().k(), 5);
    }

    #[test]
    fn construction_is_deterministic_in_the_seed() {
        let h = super::super::regular_code(64, 3, 8, 5).unwrap();
        let a = build_nested_pair(&h, 4, 42).unwrap();
        let b = build_nested_pair(&h, 4, 42).unwrap();
        assert_eq!(a.sup(), b.sup());
        assert_eq!(a.merge_log(), b.merge_log());
        let c = build_nested_pair(&h, 4, 43).unwrap();
        assert!(c.sup() != a.sup() || c.merge_log() != a.merge_log());
    }

    #[test]
    fn too_many_merges_fail_fast() {
        let h = demo_code_4x8();
        assert!(matches!(
            build_nested_pair(&h, 4, 0),
            Err(CodeError::ConstructionFailed { requested: 4, .. })
        ));
    }

    #[test]
    fn rank_drops_by_exactly_the_merge_count() {
        let h = super::super::regular_code_full_rank(256, 3, 8, 17).unwrap();
        let r0 = h.rank();
        for t in [1usize, 8, 16] {
            let pair = build_nested_pair(&h, t, 99).unwrap();
            assert_eq!(pair.sup().rank(), r0 - t, "t = {t}");
        }
    }

    #[test]
    fn nesting_holds_on_random_codewords() {
        let h = super::super::regular_code_full_rank(256, 3, 8, 23).unwrap();
        let pair = build_nested_pair(&h, 16, 7).unwrap();
        let enc = Encoder::derive(pair.sub()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let msg: Vec<u8> = (0..enc.k()).map(|_| rng.gen_range(0..=1)).collect();
            let w = enc.encode(&msg).unwrap();
            assert!(pair.sup().is_codeword(&w).unwrap());
        }
    }
}
