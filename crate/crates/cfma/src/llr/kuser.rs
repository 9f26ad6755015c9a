//! Stage LLRs for the K-user BPSK chain.
//!
//! The chain decodes the partial sums e^K, e^(K-1), ..., e^2 and finally u1,
//! where e^m is the XOR of the first m codewords. Given the decoded higher
//! sums, users m+1..K are pinned (u_j = e^(j-1) xor e^j) and the stage
//! density enumerates the remaining user bits consistent with the
//! hypothesis.

use super::{log_sum_exp, LlrError};
use crate::clamp_llr;

/// LLR of the stage-m bit given this symbol's observation and the decoded
/// higher sums `e^(m+1)..e^K` (index 0 holds e^(m+1)). Stage m = 1 is the
/// final u1 stage. BPSK with per-user gains; supports 2 <= K <= 4.
pub fn llr_kuser_stage(
    y: f64,
    m: usize,
    higher_sums: &[u8],
    gains: &[f64],
    power: f64,
) -> Result<f64, LlrError> {
    let k = gains.len();
    if !(2..=4).contains(&k) {
        return Err(LlrError::UnsupportedUserCount(k));
    }
    if m == 0 || m > k {
        return Err(LlrError::BadLevel { level: m, levels: k });
    }
    if higher_sums.len() != k - m {
        return Err(LlrError::WrongSumCount { m, expected: k - m, got: higher_sums.len() });
    }
    let amp = power.sqrt();
    let mut log_p = [0.0f64; 2];
    for (hyp, slot) in log_p.iter_mut().enumerate() {
        let hyp = hyp as u8;
        // users above m are fixed by consecutive sums; e^m is the hypothesis
        let mut fixed = Vec::with_capacity(k - m);
        let mut prev = hyp;
        for &e in higher_sums {
            fixed.push(prev ^ e);
            prev = e;
        }
        // free users 1..m-1; user m completes the parity
        let free = m - 1;
        let mut terms = Vec::with_capacity(1 << free);
        for assign in 0u32..(1 << free) {
            let mut parity = 0u8;
            let mut mean = 0.0;
            for j in 0..free {
                let b = (assign >> j & 1) as u8;
                parity ^= b;
                mean += gains[j] * amp * (2.0 * f64::from(b) - 1.0);
            }
            let last = hyp ^ parity;
            mean += gains[m - 1] * amp * (2.0 * f64::from(last) - 1.0);
            for (j, &b) in fixed.iter().enumerate() {
                mean += gains[m + j] * amp * (2.0 * f64::from(b) - 1.0);
            }
            terms.push(-0.5 * (y - mean) * (y - mean));
        }
        *slot = log_sum_exp(&terms);
    }
    Ok(clamp_llr(log_p[0] - log_p[1]))
}
