//! Monte Carlo BER harness: scenario configuration, seeded parallel
//! trials, per-stage bit-error accounting, and CSV emission.
//!
//! Determinism contract: (config, seed) -> CSV is a pure function. Every
//! trial derives its RNG substreams from (master seed, power index, trial
//! index), and the reduction is integer summation, so the output is
//! byte-identical for any worker count.

mod config;
mod run;

pub use config::{
    ChannelConfig, CodeSource, CodesConfig, ModFamily, ModulationConfig, SimConfig, SweepConfig,
    Topology,
};
pub use run::{build_codes, run_ber_point, run_sweep, BerRecord, BuiltCodes, SweepOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Code(#[from] crate::gf2::CodeError),
    #[error(transparent)]
    Decode(#[from] crate::decode::DecodeError),
    #[error(transparent)]
    Modulation(#[from] crate::modulation::ModulationError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error(transparent)]
    Spa(#[from] crate::spa::SpaError),
}

/// Formats a float with six significant digits, plain decimal inside
/// [1e-4, 1e6) and exponent notation outside, trailing zeros trimmed.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.5e}", x);
    let (_, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        let (mant, _) = sci.split_once('e').unwrap();
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{exp}")
    }
}
