//! Seeded random (dv, dc)-regular LDPC code generation via the
//! configuration model: variable and check edge stubs are matched by a
//! random permutation, then parallel edges are repaired by stub swaps.

use super::{CodeError, ParityCheckMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draws a random (dv, dc)-regular code with `n` variables. Requires
/// `n * dv` to be divisible by `dc`; the result has `m = n * dv / dc`
/// checks. Deterministic in `seed`.
pub fn regular_code(n: usize, dv: usize, dc: usize, seed: u64) -> Result<ParityCheckMatrix, CodeError> {
    if n == 0 || dv == 0 || dc == 0 || !(n * dv).is_multiple_of(dc) || n * dv / dc == 0 {
        return Err(CodeError::BadRegularParams { n, dv, dc });
    }
    let m = n * dv / dc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // stubs[e] = variable owning edge slot e; check c owns slots c*dc..(c+1)*dc.
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, dv)).collect();
    stubs.shuffle(&mut rng);

    // Swap away parallel edges. Each pass scans every check; a duplicated
    // variable stub is exchanged with a random stub elsewhere unless that
    // would create a new duplicate.
    for _pass in 0..1000 {
        let mut clean = true;
        for c in 0..m {
            let lo = c * dc;
            'slot: for s in lo..(c + 1) * dc {
                let v = stubs[s];
                if !stubs[lo..s].contains(&v) {
                    continue;
                }
                clean = false;
                for _try in 0..200 {
                    let t = rng.gen_range(0..stubs.len());
                    let tc = t / dc;
                    if tc == c {
                        continue;
                    }
                    let w = stubs[t];
                    let c_slots = lo..(c + 1) * dc;
                    let t_slots = tc * dc..(tc + 1) * dc;
                    let w_fits = !stubs[c_slots].contains(&w);
                    let v_fits = stubs[t_slots].iter().filter(|&&x| x == v).count() == 0;
                    if w_fits && v_fits {
                        stubs.swap(s, t);
                        continue 'slot;
                    }
                }
            }
        }
        if clean {
            let checks: Vec<Vec<usize>> =
                (0..m).map(|c| stubs[c * dc..(c + 1) * dc].to_vec()).collect();
            return ParityCheckMatrix::from_checks(n, checks);
        }
    }
    Err(CodeError::ConstructionFailed { attempts: 1000, completed: 0, requested: m })
}

/// Like [`regular_code`] but retries derived seeds until the matrix has full
/// row rank, so merge-based rate accounting stays exact.
pub fn regular_code_full_rank(
    n: usize,
    dv: usize,
    dc: usize,
    seed: u64,
) -> Result<ParityCheckMatrix, CodeError> {
    const MAX_TRIES: u64 = 64;
    for attempt in 0..MAX_TRIES {
        let h = regular_code(n, dv, dc, seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)))?;
        if h.rank() == h.num_checks() {
            return Ok(h);
        }
    }
    Err(CodeError::RankDeficient { attempts: MAX_TRIES as usize })
}
