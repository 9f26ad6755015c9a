//! Seeded stochastic channel models with unit-variance noise.
//!
//! Power sweeps never touch the noise: the modulation power `P` is the only
//! SNR knob. Noise is drawn from ChaCha8 substreams through a fixed
//! Box-Muller transform, so a (seed, substream) pair reproduces the same
//! output bytes on a given build regardless of worker count. A noise-off
//! variant exists as a test hook.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("input length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("{users} inputs but {gains} gains")]
    GainCountMismatch { users: usize, gains: usize },
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha8 stream from a master seed and a list of
/// tags (e.g. power index, trial index, receiver index). Trials seeded this
/// way are independent of how work is split across threads.
pub fn substream_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = master;
    let mut acc = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(GOLDEN) ^ acc;
        acc = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// A unit-variance Gaussian noise source, or the noiseless test hook.
#[derive(Debug, Clone)]
pub enum Noise {
    Awgn(ChaCha8Rng),
    Off,
}

impl Noise {
    pub fn seeded(master: u64, tags: &[u64]) -> Self {
        Noise::Awgn(substream_rng(master, tags))
    }

    /// One standard normal draw (Box-Muller; two uniforms per draw).
    pub fn standard_normal(&mut self) -> f64 {
        match self {
            Noise::Off => 0.0,
            Noise::Awgn(rng) => {
                let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
                let v: f64 = rng.gen();
                (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
            }
        }
    }

    /// One circularly symmetric complex draw with E|z|^2 = 1.
    pub fn complex_unit(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Two-user real Gaussian MAC: y_i = h1 x1_i + h2 x2_i + z_i.
pub fn transmit_mac_real(
    x1: &[f64],
    x2: &[f64],
    h1: f64,
    h2: f64,
    noise: &mut Noise,
) -> Result<Vec<f64>, ChannelError> {
    if x1.len() != x2.len() {
        return Err(ChannelError::LengthMismatch { a: x1.len(), b: x2.len() });
    }
    Ok(x1
        .iter()
        .zip(x2)
        .map(|(&a, &b)| h1 * a + h2 * b + noise.standard_normal())
        .collect())
}

/// Two-user complex Gaussian MAC with circularly symmetric unit noise.
pub fn transmit_mac_complex(
    x1: &[Complex64],
    x2: &[Complex64],
    h1: Complex64,
    h2: Complex64,
    noise: &mut Noise,
) -> Result<Vec<Complex64>, ChannelError> {
    if x1.len() != x2.len() {
        return Err(ChannelError::LengthMismatch { a: x1.len(), b: x2.len() });
    }
    Ok(x1
        .iter()
        .zip(x2)
        .map(|(&a, &b)| h1 * a + h2 * b + noise.complex_unit())
        .collect())
}

/// Symmetric interference channel: y1 = x1 + h x2 + z1, y2 = h x1 + x2 + z2,
/// with independent noise streams for the two receivers.
pub fn transmit_interference(
    x1: &[f64],
    x2: &[f64],
    h: f64,
    noise1: &mut Noise,
    noise2: &mut Noise,
) -> Result<(Vec<f64>, Vec<f64>), ChannelError> {
    let y1 = transmit_mac_real(x1, x2, 1.0, h, noise1)?;
    let y2 = transmit_mac_real(x1, x2, h, 1.0, noise2)?;
    Ok((y1, y2))
}

/// K-user real MAC: y_i = sum_k h_k x_{k,i} + z_i.
pub fn transmit_kuser(
    xs: &[Vec<f64>],
    gains: &[f64],
    noise: &mut Noise,
) -> Result<Vec<f64>, ChannelError> {
    if xs.len() < 2 {
        return Err(ChannelError::TooFewUsers(xs.len()));
    }
    if xs.len() != gains.len() {
        return Err(ChannelError::GainCountMismatch { users: xs.len(), gains: gains.len() });
    }
    let n = xs[0].len();
    for x in xs {
        if x.len() != n {
            return Err(ChannelError::LengthMismatch { a: n, b: x.len() });
        }
    }
    Ok((0..n)
        .map(|i| {
            xs.iter().zip(gains).map(|(x, &h)| h * x[i]).sum::<f64>() + noise.standard_normal()
        })
        .collect())
}
