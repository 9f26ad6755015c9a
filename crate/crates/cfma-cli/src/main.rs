//! Command-line front end: rate-region reports, minimal-power search,
//! nested-code construction from alist files, BER sweeps, and single-shot
//! encode/decode debugging.
//!
//! Exit codes: 0 success, 2 validation/config error, 3 numerical-precision
//! failure.

use cfma::channel::{transmit_mac_complex, transmit_mac_real, Noise};
use cfma::decode::{
    decode_cfma_binary, decode_cfma_complex, decode_cfma_multilevel, modulate_pam_levels,
    modulate_qam_levels, CfmaResult, HigherRateUser,
};
use cfma::gf2::{build_nested_pair, parse_alist, write_alist, Encoder};
use cfma::region::{
    evaluate_strict, min_power_db, region_csv, EntropyEstimator, FaceStatus, RatePoint,
    RegionError, RegionReport, RegionScenario,
};
use cfma::sim::{
    build_codes, run_sweep, BuiltCodes, ModFamily, ModulationConfig, SimConfig, SimError, Topology,
};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cfma", about = "Compute-forward multiple access simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the rate region of a configured scenario at given power(s).
    Region {
        /// Scenario config file ([channel] and [modulation] are used).
        #[arg(long)]
        config: String,
        /// Operating power in dB (repeatable).
        #[arg(long = "power-db", required = true, num_args = 1..)]
        powers_db: Vec<f64>,
        /// Dump the sweep as CSV instead of a human-readable report.
        #[arg(long)]
        csv: bool,
        /// Quadrature nodes per dimension.
        #[arg(long, default_value_t = 129)]
        nodes: usize,
    },
    /// Search the minimal power achieving a target rate pair.
    Minpower {
        #[arg(long)]
        config: String,
        #[arg(long)]
        r1: f64,
        /// Unused for point-to-point scenarios.
        #[arg(long, default_value_t = 0.0)]
        r2: f64,
        #[arg(long, default_value_t = 65)]
        nodes: usize,
    },
    /// Merge checks of an alist code into a nested higher-rate code.
    Merge {
        /// Input alist file (the subcode).
        #[arg(long)]
        input: String,
        /// Output alist file (the merged supercode).
        #[arg(long)]
        output: String,
        #[arg(long)]
        merges: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Permit merges of overlapping checks (XOR path); without this
        /// flag only disjoint-neighbor merges are attempted.
        #[arg(long)]
        xor_ok: bool,
    },
    /// Run the configured BER sweep and emit CSV.
    Ber {
        #[arg(long)]
        config: String,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// One seeded trial with full per-stage diagnostics.
    EncodeDecode {
        #[arg(long)]
        config: String,
        #[arg(long = "power-db")]
        power_db: f64,
        /// Disable channel noise.
        #[arg(long)]
        noise_off: bool,
        /// Trial index within the seeded stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

fn region_scenario(cfg: &SimConfig) -> Result<RegionScenario, SimError> {
    let m: &ModulationConfig = &cfg.modulation;
    Ok(match cfg.channel.topology {
        Topology::MacReal => RegionScenario::RealMac {
            levels: m.levels,
            h1: cfg.channel.gains[0].re,
            h2: cfg.channel.gains[1].re,
        },
        Topology::MacComplex => RegionScenario::ComplexMac {
            levels: m.levels,
            h1: cfg.channel.gains[0],
            h2: cfg.channel.gains[1],
            theta: m.theta,
        },
        Topology::Interference => {
            RegionScenario::RealMac { levels: 1, h1: 1.0, h2: cfg.channel.cross_gain }
        }
        Topology::PointToPoint => {
            RegionScenario::PointToPoint { levels: m.levels, h: cfg.channel.gains[0].re }
        }
        Topology::KUserMac => {
            return Err(SimError::Validation(
                "no region model is implemented for kuser_mac".into(),
            ))
        }
    })
}

fn face_str(f: FaceStatus) -> &'static str {
    match f {
        FaceStatus::InteriorOfFace => "interior of the dominant face",
        FaceStatus::CoincidesWithCorner => "on the face, coinciding with the corner",
        FaceStatus::OffFace => "short of the dominant face",
    }
}

fn print_report(r: &RegionReport) {
    println!("scenario      : {}", r.scenario);
    println!("P             : {:.4} dB", r.power_db);
    println!("coefficients  : ({}, {})", r.coefficients.0, r.coefficients.1);
    println!(
        "A  = ({:.6}, {:.6})   B  = ({:.6}, {:.6})",
        r.corner_a.r1, r.corner_a.r2, r.corner_b.r1, r.corner_b.r2
    );
    println!(
        "A' = ({:.6}, {:.6})   B' = ({:.6}, {:.6})",
        r.cfma_a.r1, r.cfma_a.r2, r.cfma_b.r1, r.cfma_b.r2
    );
    println!("H(X1)={:.6}  H(X2)={:.6}", r.h_x1, r.h_x2);
    println!(
        "H(S|Y)={:.6}  H(X1,X2|Y)={:.6}  H(X1,X2|Y,S)={:.6}",
        r.h_s_given_y, r.h_pair_given_y, r.h_pair_given_ys
    );
    println!("H(X1|Y)={:.6}  H(X2|Y)={:.6}", r.h_x1_given_y, r.h_x2_given_y);
    println!("H(X1|Y,X2)={:.6}  H(X2|Y,X1)={:.6}", r.h_x1_given_y_x2, r.h_x2_given_y_x1);
    println!("A' is {}", face_str(r.face_a));
    println!("B' is {}", face_str(r.face_b));
    println!("entropy error bound: {:.2e}", r.error_bound);
}

fn describe_chain_result(res: &CfmaResult) {
    for (l, (s, u)) in res.sum_stages.iter().zip(&res.user_stages).enumerate() {
        println!(
            "level {}: sum stage {} in {} iterations{}; user stage {} in {} iterations{}",
            l + 1,
            if s.converged { "converged" } else { "FAILED" },
            s.iterations,
            if s.dependent_on_failed_stage { " (after failed stage)" } else { "" },
            if u.converged { "converged" } else { "FAILED" },
            u.iterations,
            if u.dependent_on_failed_stage { " (after failed stage)" } else { "" },
        );
    }
}

fn read_config(path: &str) -> Result<SimConfig, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SimError::Io { path: path.to_string(), source })?;
    SimConfig::parse(&text)
}

enum CliError {
    Validation(String),
    Precision(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::Precision { .. } => CliError::Precision(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Region { config, powers_db, csv, nodes } => {
            let cfg = read_config(&config)?;
            let scenario = region_scenario(&cfg)?;
            let est = EntropyEstimator::Quadrature { nodes };
            if csv {
                print!("{}", region_csv(&scenario, &powers_db, &est));
            } else {
                for &p in &powers_db {
                    let report = evaluate_strict(&scenario, p, &est, 1e-3)?;
                    print_report(&report);
                    if powers_db.len() > 1 {
                        println!();
                    }
                }
            }
            Ok(())
        }
        Command::Minpower { config, r1, r2, nodes } => {
            let cfg = read_config(&config)?;
            let scenario = region_scenario(&cfg)?;
            let est = EntropyEstimator::Quadrature { nodes };
            let p = min_power_db(&scenario, RatePoint::new(r1, r2), &est)?;
            println!("{p:.3}");
            Ok(())
        }
        Command::Merge { input, output, merges, seed, xor_ok } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Validation(format!("cannot read {input}: {e}")))?;
            let base = parse_alist(&text).map_err(|e| CliError::Validation(e.to_string()))?;
            let pair = if xor_ok {
                build_nested_pair(&base, merges, seed)
                    .map_err(|e| CliError::Validation(e.to_string()))?
            } else {
                // disjoint-only construction, never falling back to XOR
                let mut h = base.clone();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut done = 0;
                let mut attempts = 0;
                while done < merges {
                    attempts += 1;
                    if attempts > 200 * merges + 1000 {
                        return Err(CliError::Validation(format!(
                            "only {done} of {merges} disjoint merges found; rerun with --xor-ok"
                        )));
                    }
                    let i = rng.gen_range(0..h.num_checks());
                    let j = rng.gen_range(0..h.num_checks());
                    if i == j {
                        continue;
                    }
                    if let Ok(next) = cfma::gf2::merge_checks(&h, i, j) {
                        h = next;
                        done += 1;
                    }
                }
                cfma::gf2::NestedCodePair::new(base.clone(), h, Vec::new())
            };
            let sub_k = Encoder::derive(pair.sub())
                .map(|e| e.k())
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let sup_k = Encoder::derive(pair.sup())
                .map(|e| e.k())
                .map_err(|e| CliError::Validation(e.to_string()))?;
            std::fs::write(&output, write_alist(pair.sup()))
                .map_err(|e| CliError::Validation(format!("cannot write {output}: {e}")))?;
            let n = pair.sub().n();
            eprintln!(
                "merged {merges} checks: k {} -> {} of n = {} (rate {:.4} -> {:.4})",
                sub_k,
                sup_k,
                n,
                sub_k as f64 / n as f64,
                sup_k as f64 / n as f64
            );
            Ok(())
        }
        Command::Ber { config, out } => {
            let cfg = read_config(&config)?;
            let sweep = run_sweep(&cfg)?;
            if let Some(bound) = sweep.theoretical_bound_db {
                eprintln!("theoretical bound for the code rate pair: {bound:.3} dB");
            }
            if let Some(p) = sweep.achieved_at_db {
                eprintln!(
                    "target BER {} met from {p} dB over {} trials",
                    cfg.sweep.target_ber, cfg.sweep.trials
                );
            }
            match out {
                Some(path) => std::fs::write(&path, sweep.csv)
                    .map_err(|e| CliError::Validation(format!("cannot write {path}: {e}")))?,
                None => print!("{}", sweep.csv),
            }
            Ok(())
        }
        Command::EncodeDecode { config, power_db, noise_off, trial } => {
            let mut cfg = read_config(&config)?;
            if noise_off {
                cfg.channel.noise = false;
            }
            let built = build_codes(&cfg)?;
            let BuiltCodes::TwoUser(cb_template) = &built else {
                return Err(CliError::Validation(
                    "encode-decode drives the two-user chains; use `ber` for other topologies"
                        .into(),
                ));
            };
            let power = 10f64.powf(power_db / 10.0);
            let spec = match cfg.modulation.family {
                ModFamily::Bpsk => cfma::modulation::ModulationSpec::bpsk(power),
                ModFamily::Pam => cfma::modulation::ModulationSpec::pam(power, cfg.modulation.levels),
                ModFamily::Qam => cfma::modulation::ModulationSpec::qam(
                    power,
                    cfg.modulation.levels,
                    cfg.modulation.theta,
                ),
            }
            .map_err(|e| CliError::Validation(e.to_string()))?;
            let cb = cfma::decode::CfmaCodebook::new(cb_template.levels().to_vec(), spec)
                .map_err(|e| CliError::Validation(e.to_string()))?;

            let mut msg_rng = cfma::channel::substream_rng(cfg.sweep.seed, &[0, trial, 0]);
            let mut planes = |user: HigherRateUser| -> Vec<Vec<u8>> {
                (1..=cb.num_levels())
                    .map(|l| {
                        let enc = cb.level(l).encoder_user(user);
                        let msg: Vec<u8> =
                            (0..enc.k()).map(|_| msg_rng.gen_range(0..=1u8)).collect();
                        enc.encode(&msg).expect("message length")
                    })
                    .collect()
            };
            let u1 = planes(HigherRateUser::User1);
            let u2 = planes(HigherRateUser::User2);
            let noise = |tag: u64| {
                if cfg.channel.noise {
                    Noise::seeded(cfg.sweep.seed, &[0, trial, tag])
                } else {
                    Noise::Off
                }
            };
            let res = match cfg.channel.topology {
                Topology::MacComplex => {
                    let x1 = modulate_qam_levels(&u1, &spec, false);
                    let x2 = modulate_qam_levels(&u2, &spec, true);
                    let y = transmit_mac_complex(
                        &x1,
                        &x2,
                        cfg.channel.gains[0],
                        cfg.channel.gains[1],
                        &mut noise(1),
                    )
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                    decode_cfma_complex(
                        &y,
                        &cb,
                        (cfg.channel.gains[0], cfg.channel.gains[1]),
                        cfg.sweep.max_iterations,
                    )
                }
                _ => {
                    let x1 = modulate_pam_levels(&u1, &spec);
                    let x2 = modulate_pam_levels(&u2, &spec);
                    let (h1, h2) = (cfg.channel.gains[0].re, cfg.channel.gains[1].re);
                    let y = transmit_mac_real(&x1, &x2, h1, h2, &mut noise(1))
                        .map_err(|e| CliError::Validation(e.to_string()))?;
                    if cb.num_levels() == 1 {
                        decode_cfma_binary(
                            &y,
                            &cb,
                            (h1, h2),
                            HigherRateUser::User1,
                            cfg.sweep.max_iterations,
                        )
                    } else {
                        decode_cfma_multilevel(&y, &cb, (h1, h2), cfg.sweep.max_iterations)
                    }
                }
            }
            .map_err(|e| CliError::Validation(e.to_string()))?;

            describe_chain_result(&res);
            let mut errors = 0usize;
            for l in 0..cb.num_levels() {
                errors += res.u1_levels[l].iter().zip(&u1[l]).filter(|(a, b)| a != b).count();
                errors += res.u2_levels[l].iter().zip(&u2[l]).filter(|(a, b)| a != b).count();
            }
            println!("codeword bit errors across both users: {errors}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Precision(msg)) => {
            eprintln!("numerical precision failure: {msg}");
            ExitCode::from(3)
        }
    }
}
