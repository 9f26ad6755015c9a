//! Flooding sum-product decoding over a Tanner graph.
//!
//! The decoder is agnostic to where its initial LLRs came from; every CFMA
//! stage reuses it unchanged. Check updates use the tanh product rule with
//! prefix/suffix products, variable updates sum LLRs, and all messages are
//! clamped to [`crate::LLR_CLAMP`]. Decoding stops as soon as the hard
//! decision has zero syndrome; `iterations_used` counts completed flooding
//! rounds (0 if the initial hard decision already satisfies every check).

use crate::gf2::ParityCheckMatrix;
use crate::clamp_llr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaError {
    #[error("initial LLR length {got} does not match code length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("max_iter must be at least 1")]
    ZeroIterations,
}

/// Outcome of one sum-product decode.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Hard decision per variable; bit 0 wherever the posterior LLR >= 0.
    pub hard_bits: Vec<u8>,
    /// True iff the hard decision has zero syndrome.
    pub converged: bool,
    /// Flooding rounds executed before exit.
    pub iterations_used: usize,
    /// Posterior LLRs at exit.
    pub final_llrs: Vec<f64>,
}

fn hard_decision(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}

fn atanh_clamped(x: f64) -> f64 {
    // atanh(+-1) overflows to +-inf; the clamp keeps messages finite.
    clamp_llr(0.5 * ((1.0 + x) / (1.0 - x)).ln())
}

/// Decodes `init` on the Tanner graph of `h` with at most `max_iter`
/// flooding iterations.
pub fn spa_decode(
    h: &ParityCheckMatrix,
    init: &[f64],
    max_iter: usize,
) -> Result<DecodeResult, SpaError> {
    let n = h.n();
    if init.len() != n {
        return Err(SpaError::LengthMismatch { expected: n, got: init.len() });
    }
    if max_iter == 0 {
        return Err(SpaError::ZeroIterations);
    }
    let init: Vec<f64> = init.iter().map(|&l| clamp_llr(l)).collect();

    // Edge arrays in check-major order.
    let m = h.num_checks();
    let mut check_start = Vec::with_capacity(m + 1);
    check_start.push(0usize);
    for c in 0..m {
        check_start.push(check_start[c] + h.check_row(c).len());
    }
    let num_edges = check_start[m];
    let mut edge_var = vec![0usize; num_edges];
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in 0..m {
        for (k, &v) in h.check_row(c).iter().enumerate() {
            let e = check_start[c] + k;
            edge_var[e] = v;
            var_edges[v].push(e);
        }
    }

    let mut c2v = vec![0.0f64; num_edges];
    let mut v2c = vec![0.0f64; num_edges];
    let mut posterior = init.clone();

    let mut bits = hard_decision(&posterior);
    if syndrome_is_zero(h, &bits) {
        return Ok(DecodeResult { hard_bits: bits, converged: true, iterations_used: 0, final_llrs: posterior });
    }

    let max_deg = h.max_check_degree();
    let mut tanhs = vec![0.0f64; max_deg];
    let mut suffix = vec![0.0f64; max_deg + 1];

    for iter in 1..=max_iter {
        // variable to check
        for v in 0..n {
            let total: f64 = var_edges[v].iter().map(|&e| c2v[e]).sum();
            for &e in &var_edges[v] {
                v2c[e] = clamp_llr(init[v] + total - c2v[e]);
            }
        }
        // check to variable via prefix/suffix tanh products
        for c in 0..m {
            let deg = check_start[c + 1] - check_start[c];
            if deg == 0 {
                continue;
            }
            let base = check_start[c];
            for k in 0..deg {
                tanhs[k] = (0.5 * v2c[base + k]).tanh();
            }
            suffix[deg] = 1.0;
            for k in (0..deg).rev() {
                suffix[k] = suffix[k + 1] * tanhs[k];
            }
            let mut prefix = 1.0;
            for k in 0..deg {
                let excl = prefix * suffix[k + 1];
                c2v[base + k] = 2.0 * atanh_clamped(excl);
                prefix *= tanhs[k];
            }
        }
        // posterior and early exit
        for v in 0..n {
            posterior[v] = clamp_llr(init[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>());
        }
        bits = hard_decision(&posterior);
        if syndrome_is_zero(h, &bits) {
            return Ok(DecodeResult {
                hard_bits: bits,
                converged: true,
                iterations_used: iter,
                final_llrs: posterior,
            });
        }
    }

    Ok(DecodeResult { hard_bits: bits, converged: false, iterations_used: max_iter, final_llrs: posterior })
}

fn syndrome_is_zero(h: &ParityCheckMatrix, bits: &[u8]) -> bool {
    h.check_rows().iter().all(|row| row.iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0)
}
