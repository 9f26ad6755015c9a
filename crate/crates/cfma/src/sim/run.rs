//! The BER engine: builds codes from a config, runs seeded trials in
//! parallel, and aggregates per-stage bit-error counts.
//!
//! Per-stage errors are scored against ground truth (not against upstream
//! estimates) on the information positions of the level's higher-rate code,
//! the code the sum stage actually decodes. All stages of a chain share
//! those positions, which makes the reconstruction identity exact per
//! trial: a user-2 bit error at a position implies a sum-stage or user-1
//! error at that same position.

use super::config::{CodeSource, ModFamily, SimConfig, Topology};
use super::{fmt_g6, SimError};
use crate::channel::{substream_rng, transmit_kuser, transmit_mac_complex, transmit_mac_real, Noise};
use crate::decode::{
    decode_cfma_binary, decode_cfma_complex, decode_cfma_multilevel, decode_kuser,
    modulate_pam_levels, modulate_qam_levels, run_interference, CfmaCodebook, CfmaResult,
    HigherRateUser, LevelCode,
};
use crate::gf2::{build_nested_pair, parse_alist, regular_code_full_rank, Encoder, NestedCodePair, ParityCheckMatrix};
use crate::levels::sum_digits;
use crate::modulation::ModulationSpec;
use crate::region::{min_power_db, EntropyEstimator, RatePoint, RegionScenario};
use crate::spa::spa_decode;
use rand::Rng;
use rayon::prelude::*;

/// Bit-error tally for one (power, stage) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scenario: String,
    pub p_db: f64,
    pub stage: String,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub trials: u64,
    pub ber: f64,
}

/// Codes instantiated from a config.
#[derive(Debug, Clone)]
pub enum BuiltCodes {
    TwoUser(CfmaCodebook),
    KUser { code: ParityCheckMatrix, encoder: Encoder, users: usize },
    PointToPoint { code: ParityCheckMatrix, encoder: Encoder },
}

impl BuiltCodes {
    pub fn two_user(&self) -> Option<&CfmaCodebook> {
        match self {
            BuiltCodes::TwoUser(cb) => Some(cb),
            _ => None,
        }
    }
}

fn read_alist_file(path: &str) -> Result<ParityCheckMatrix, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SimError::Io { path: path.to_string(), source })?;
    Ok(parse_alist(&text)?)
}

fn modulation_spec(cfg: &SimConfig, power: f64) -> Result<ModulationSpec, SimError> {
    Ok(match cfg.modulation.family {
        ModFamily::Bpsk => ModulationSpec::bpsk(power)?,
        ModFamily::Pam => ModulationSpec::pam(power, cfg.modulation.levels)?,
        ModFamily::Qam => ModulationSpec::qam(power, cfg.modulation.levels, cfg.modulation.theta)?,
    })
}

/// Instantiates the scenario's codes. Deterministic in the config.
pub fn build_codes(cfg: &SimConfig) -> Result<BuiltCodes, SimError> {
    match cfg.channel.topology {
        Topology::KUserMac | Topology::PointToPoint => {
            let CodeSource::Regular { n, var_degree, check_degree } = cfg.codes.source else {
                return Err(SimError::Validation(
                    "this topology uses the regular code source".into(),
                ));
            };
            let code = regular_code_full_rank(n, var_degree, check_degree, cfg.codes.code_seed)?;
            let encoder = Encoder::derive(&code)?;
            Ok(match cfg.channel.topology {
                Topology::KUserMac => {
                    BuiltCodes::KUser { code, encoder, users: cfg.channel.gains.len() }
                }
                _ => BuiltCodes::PointToPoint { code, encoder },
            })
        }
        _ => {
            let higher = if cfg.codes.higher_rate_user == 1 {
                HigherRateUser::User1
            } else {
                HigherRateUser::User2
            };
            let levels = cfg.modulation.levels;
            let mut level_codes = Vec::with_capacity(levels);
            match &cfg.codes.source {
                CodeSource::Regular { n, var_degree, check_degree } => {
                    for level in 0..levels as u64 {
                        let base = regular_code_full_rank(
                            *n,
                            *var_degree,
                            *check_degree,
                            cfg.codes.code_seed.wrapping_add(1 + level),
                        )?;
                        let pair = build_nested_pair(
                            &base,
                            cfg.codes.merges,
                            cfg.codes.code_seed.wrapping_add(1001 + level),
                        )?;
                        level_codes.push(LevelCode::new(pair, higher)?);
                    }
                }
                CodeSource::Alist { sub_path, super_path } => {
                    let sub = read_alist_file(sub_path)?;
                    let sup = read_alist_file(super_path)?;
                    let pair = NestedCodePair::new(sub, sup, Vec::new());
                    level_codes.push(LevelCode::new(pair, higher)?);
                }
            }
            let spec = modulation_spec(cfg, 1.0)?;
            Ok(BuiltCodes::TwoUser(CfmaCodebook::new(level_codes, spec)?))
        }
    }
}

fn random_message(k: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..k).map(|_| rng.gen_range(0..=1u8)).collect()
}

fn count_errors(got: &[u8], want: &[u8], positions: &[usize]) -> u64 {
    positions.iter().filter(|&&p| got[p] != want[p]).count() as u64
}

struct ChainTruth {
    s_planes: Vec<Vec<u8>>,
    u1_planes: Vec<Vec<u8>>,
    u2_planes: Vec<Vec<u8>>,
}

fn chain_truth(u1_planes: Vec<Vec<u8>>, u2_planes: Vec<Vec<u8>>, levels: usize) -> ChainTruth {
    let n = u1_planes[0].len();
    let stack = |planes: &[Vec<u8>]| -> Vec<u32> {
        (0..n)
            .map(|i| {
                planes.iter().enumerate().fold(0u32, |acc, (l, p)| acc | (u32::from(p[i]) << l))
            })
            .collect()
    };
    let l1 = stack(&u1_planes);
    let l2 = stack(&u2_planes);
    let mut s_planes = vec![vec![0u8; n]; levels];
    for i in 0..n {
        for (l, bit) in sum_digits(l1[i], l2[i], levels).into_iter().enumerate() {
            s_planes[l][i] = bit;
        }
    }
    ChainTruth { s_planes, u1_planes, u2_planes }
}

/// Errors for the three chain stages, scored per level on the supercode's
/// systematic positions.
fn chain_stage_errors(cb: &CfmaCodebook, res: &CfmaResult, truth: &ChainTruth) -> [u64; 3] {
    let mut errs = [0u64; 3];
    for l in 0..cb.num_levels() {
        let positions = cb.level(l + 1).encoder_super().systematic_positions();
        errs[0] += count_errors(&res.s_levels[l], &truth.s_planes[l], positions);
        errs[1] += count_errors(&res.u1_levels[l], &truth.u1_planes[l], positions);
        errs[2] += count_errors(&res.u2_levels[l], &truth.u2_planes[l], positions);
    }
    errs
}

fn chain_bits_per_trial(cb: &CfmaCodebook) -> u64 {
    (1..=cb.num_levels()).map(|l| cb.level(l).encoder_super().k() as u64).sum()
}

/// Everything a power point's trials share: the codebook at the right
/// power (validated once) or the single-code state.
enum PointCodes<'a> {
    TwoUser(CfmaCodebook),
    KUser { code: &'a ParityCheckMatrix, encoder: &'a Encoder, users: usize },
    PointToPoint { code: &'a ParityCheckMatrix, encoder: &'a Encoder },
}

fn prepare_point<'a>(
    cfg: &SimConfig,
    built: &'a BuiltCodes,
    power: f64,
) -> Result<PointCodes<'a>, SimError> {
    Ok(match built {
        BuiltCodes::TwoUser(template) => {
            let spec = modulation_spec(cfg, power)?;
            PointCodes::TwoUser(CfmaCodebook::new(template.levels().to_vec(), spec)?)
        }
        BuiltCodes::KUser { code, encoder, users } => {
            PointCodes::KUser { code, encoder, users: *users }
        }
        BuiltCodes::PointToPoint { code, encoder } => PointCodes::PointToPoint { code, encoder },
    })
}

/// One seeded trial; returns per-stage error counts.
fn run_trial(
    cfg: &SimConfig,
    point: &PointCodes,
    power: f64,
    p_idx: u64,
    trial: u64,
) -> Result<Vec<u64>, SimError> {
    let seed = cfg.sweep.seed;
    let mut msg_rng = substream_rng(seed, &[p_idx, trial, 0]);
    let noise = |tag: u64| {
        if cfg.channel.noise {
            Noise::seeded(seed, &[p_idx, trial, tag])
        } else {
            Noise::Off
        }
    };
    let max_iter = cfg.sweep.max_iterations;

    match point {
        PointCodes::TwoUser(cb) => {
            let spec = *cb.modulation();
            let levels = cb.num_levels();
            let mut u1_planes = Vec::with_capacity(levels);
            let mut u2_planes = Vec::with_capacity(levels);
            for l in 1..=levels {
                let enc1 = cb.level(l).encoder_user(HigherRateUser::User1);
                u1_planes.push(enc1.encode(&random_message(enc1.k(), &mut msg_rng))?);
                let enc2 = cb.level(l).encoder_user(HigherRateUser::User2);
                u2_planes.push(enc2.encode(&random_message(enc2.k(), &mut msg_rng))?);
            }
            let truth = chain_truth(u1_planes, u2_planes, levels);

            let res = match cfg.channel.topology {
                Topology::MacReal => {
                    let x1 = modulate_pam_levels(&truth.u1_planes, &spec);
                    let x2 = modulate_pam_levels(&truth.u2_planes, &spec);
                    let (h1, h2) = (cfg.channel.gains[0].re, cfg.channel.gains[1].re);
                    let y = transmit_mac_real(&x1, &x2, h1, h2, &mut noise(1))?;
                    if levels == 1 {
                        decode_cfma_binary(&y, cb, (h1, h2), HigherRateUser::User1, max_iter)?
                    } else {
                        decode_cfma_multilevel(&y, cb, (h1, h2), max_iter)?
                    }
                }
                Topology::MacComplex => {
                    let x1 = modulate_qam_levels(&truth.u1_planes, &spec, false);
                    let x2 = modulate_qam_levels(&truth.u2_planes, &spec, true);
                    let (h1, h2) = (cfg.channel.gains[0], cfg.channel.gains[1]);
                    let y = transmit_mac_complex(&x1, &x2, h1, h2, &mut noise(1))?;
                    decode_cfma_complex(&y, cb, (h1, h2), max_iter)?
                }
                Topology::Interference => {
                    let x1 = modulate_pam_levels(&truth.u1_planes, &spec);
                    let x2 = modulate_pam_levels(&truth.u2_planes, &spec);
                    let (r1, r2) = run_interference(
                        &x1,
                        &x2,
                        cb,
                        cfg.channel.cross_gain,
                        &mut noise(1),
                        &mut noise(2),
                        HigherRateUser::User1,
                        max_iter,
                    )?;
                    let e1 = chain_stage_errors(cb, &r1, &truth);
                    let e2 = chain_stage_errors(cb, &r2, &truth);
                    return Ok(e1.into_iter().chain(e2).collect());
                }
                _ => unreachable!("two-user chain topology"),
            };
            Ok(chain_stage_errors(cb, &res, &truth).to_vec())
        }
        PointCodes::KUser { code, encoder, users } => {
            let spec = modulation_spec(cfg, power)?;
            let words: Vec<Vec<u8>> = (0..*users)
                .map(|_| encoder.encode(&random_message(encoder.k(), &mut msg_rng)))
                .collect::<Result<_, _>>()?;
            let xs: Vec<Vec<f64>> =
                words.iter().map(|w| modulate_pam_levels(std::slice::from_ref(w), &spec)).collect();
            let gains: Vec<f64> = cfg.channel.gains.iter().map(|g| g.re).collect();
            let y = transmit_kuser(&xs, &gains, &mut noise(1))?;
            let codes = vec![(*code).clone(); *users];
            let res = decode_kuser(&y, &codes, &gains, power, max_iter)?;
            let positions = encoder.systematic_positions();
            let n = code.n();
            let mut errs = Vec::new();
            // partial sums e^K .. e^2 against truth
            for (idx, got) in res.partial_sums.iter().enumerate() {
                let m = *users - idx;
                let truth: Vec<u8> =
                    (0..n).map(|i| words[..m].iter().fold(0u8, |acc, w| acc ^ w[i])).collect();
                errs.push(count_errors(got, &truth, positions));
            }
            for (got, want) in res.users.iter().zip(&words) {
                errs.push(count_errors(got, want, positions));
            }
            Ok(errs)
        }
        PointCodes::PointToPoint { code, encoder } => {
            let spec = modulation_spec(cfg, power)?;
            let word = encoder.encode(&random_message(encoder.k(), &mut msg_rng))?;
            let x = modulate_pam_levels(std::slice::from_ref(&word), &spec);
            let h = cfg.channel.gains[0].re;
            let zeros = vec![0.0; x.len()];
            let y = transmit_mac_real(&x, &zeros, h, 0.0, &mut noise(1))?;
            let amp = power.sqrt();
            let llrs: Vec<f64> =
                y.iter().map(|&yi| crate::clamp_llr(-2.0 * yi * h * amp)).collect();
            let res = spa_decode(code, &llrs, max_iter)?;
            Ok(vec![count_errors(&res.hard_bits, &word, encoder.systematic_positions())])
        }
    }
}

fn stage_names(cfg: &SimConfig, built: &BuiltCodes) -> Vec<String> {
    match built {
        BuiltCodes::TwoUser(_) => {
            if cfg.channel.topology == Topology::Interference {
                ["rx1_sum", "rx1_user1", "rx1_user2", "rx2_sum", "rx2_user1", "rx2_user2"]
                    .map(String::from)
                    .to_vec()
            } else {
                ["sum", "user1", "user2"].map(String::from).to_vec()
            }
        }
        BuiltCodes::KUser { users, .. } => {
            let mut names: Vec<String> = (2..=*users).rev().map(|m| format!("e{m}")).collect();
            names.extend((1..=*users).map(|k| format!("user{k}")));
            names
        }
        BuiltCodes::PointToPoint { .. } => vec!["user1".to_string()],
    }
}

fn bits_per_trial(built: &BuiltCodes) -> u64 {
    match built {
        BuiltCodes::TwoUser(cb) => chain_bits_per_trial(cb),
        BuiltCodes::KUser { encoder, .. } | BuiltCodes::PointToPoint { encoder, .. } => {
            encoder.k() as u64
        }
    }
}

/// Runs every trial of one power point and aggregates per-stage records.
pub fn run_ber_point(
    cfg: &SimConfig,
    built: &BuiltCodes,
    p_idx: usize,
    p_db: f64,
) -> Result<Vec<BerRecord>, SimError> {
    let power = 10f64.powf(p_db / 10.0);
    let names = stage_names(cfg, built);
    let point = prepare_point(cfg, built, power)?;
    let totals: Result<Vec<u64>, SimError> = (0..cfg.sweep.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, &point, power, p_idx as u64, trial))
        .try_reduce(
            || vec![0u64; names.len()],
            |mut acc, errs| {
                for (a, e) in acc.iter_mut().zip(&errs) {
                    *a += e;
                }
                Ok(acc)
            },
        );
    let totals = totals?;
    let bits = bits_per_trial(built) * cfg.sweep.trials;
    Ok(names
        .into_iter()
        .zip(totals)
        .map(|(stage, bit_errors)| BerRecord {
            scenario: cfg.sweep.scenario.clone(),
            p_db,
            stage,
            bit_errors,
            bits_total: bits,
            trials: cfg.sweep.trials,
            ber: bit_errors as f64 / bits as f64,
        })
        .collect())
}

/// A whole sweep: CSV plus side information for plotting.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub csv: String,
    pub records: Vec<BerRecord>,
    /// Theoretical minimal power achieving the codebook's rate pair, when
    /// the scenario has a region model.
    pub theoretical_bound_db: Option<f64>,
    /// Smallest swept power with every stage below the target BER.
    pub achieved_at_db: Option<f64>,
}

pub const CSV_HEADER: &str = "scenario,P_dB,stage,bit_errors,bits_total,trials,ber";

fn records_to_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario,
            fmt_g6(r.p_db),
            r.stage,
            r.bit_errors,
            r.bits_total,
            r.trials,
            fmt_g6(r.ber)
        ));
    }
    out
}

fn region_scenario_of(cfg: &SimConfig) -> Option<(RegionScenario, RatePoint)> {
    let built_rates = |cb: &CfmaCodebook| {
        let (r1, r2) = cb.rate_pair();
        RatePoint::new(r1, r2)
    };
    match cfg.channel.topology {
        Topology::MacReal => {
            let cb = build_codes(cfg).ok()?;
            let rates = built_rates(cb.two_user()?);
            Some((
                RegionScenario::RealMac {
                    levels: cfg.modulation.levels,
                    h1: cfg.channel.gains[0].re,
                    h2: cfg.channel.gains[1].re,
                },
                rates,
            ))
        }
        Topology::MacComplex => {
            let cb = build_codes(cfg).ok()?;
            let rates = built_rates(cb.two_user()?);
            Some((
                RegionScenario::ComplexMac {
                    levels: cfg.modulation.levels,
                    h1: cfg.channel.gains[0],
                    h2: cfg.channel.gains[1],
                    theta: cfg.modulation.theta,
                },
                rates,
            ))
        }
        Topology::Interference => {
            let cb = build_codes(cfg).ok()?;
            let rates = built_rates(cb.two_user()?);
            Some((
                RegionScenario::RealMac {
                    levels: 1,
                    h1: 1.0,
                    h2: cfg.channel.cross_gain,
                },
                rates,
            ))
        }
        Topology::PointToPoint => {
            let built = build_codes(cfg).ok()?;
            let BuiltCodes::PointToPoint { code, encoder } = &built else { return None };
            let rate = encoder.k() as f64 / code.n() as f64;
            Some((
                RegionScenario::PointToPoint { levels: 1, h: cfg.channel.gains[0].re },
                RatePoint::new(rate, 0.0),
            ))
        }
        Topology::KUserMac => None,
    }
}

/// Runs the configured sweep. Deterministic in (config, seed) and
/// independent of the worker count.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepOutput, SimError> {
    let built = build_codes(cfg)?;
    let run_all = || -> Result<Vec<BerRecord>, SimError> {
        let mut records = Vec::new();
        for (p_idx, &p_db) in cfg.sweep.powers_db.iter().enumerate() {
            records.extend(run_ber_point(cfg, &built, p_idx, p_db)?);
        }
        Ok(records)
    };
    let records = if cfg.sweep.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.sweep.workers)
            .build()
            .map_err(|e| SimError::Validation(format!("cannot build thread pool: {e}")))?;
        pool.install(run_all)?
    } else {
        run_all()?
    };

    let theoretical_bound_db = region_scenario_of(cfg).and_then(|(scenario, target)| {
        // heavier constellations pay per-component, so trade nodes for speed
        let nodes = match &scenario {
            RegionScenario::ComplexMac { levels, .. } if *levels >= 2 => 40,
            RegionScenario::ComplexMac { .. } => 48,
            _ => 65,
        };
        min_power_db(&scenario, target, &EntropyEstimator::Quadrature { nodes }).ok()
    });
    let achieved_at_db = cfg.sweep.powers_db.iter().copied().find(|&p| {
        let here: Vec<&BerRecord> = records.iter().filter(|r| r.p_db == p).collect();
        !here.is_empty() && here.iter().all(|r| r.ber < cfg.sweep.target_ber)
    });
    Ok(SweepOutput { csv: records_to_csv(&records), records, theoretical_bound_db, achieved_at_db })
}
