//! End-to-end checks of the command-line surface: subcommands, file I/O,
//! and the documented exit codes (0 ok, 2 validation, 3 precision).

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfma"))
}

fn write_temp(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfma-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

const BPSK_CFG: &str = "\
[channel]
topology = mac_real
gains = 1.0, 1.7320508075688772

[codes]
source = regular
n = 138
var_degree = 3
check_degree = 46
merges = 4
code_seed = 7

[modulation]
family = bpsk

[sweep]
scenario = cli-demo
powers_db = 10.0
trials = 4
seed = 1
";

#[test]
fn region_prints_a_report() {
    let cfg = write_temp("region.cfg", BPSK_CFG);
    let out = bin()
        .args(["region", "--config", cfg.to_str().unwrap(), "--power-db", "7.912", "--nodes", "65"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("B' ="), "{text}");
    assert!(text.contains("H(S|Y)=0.0257"), "{text}");
}

#[test]
fn region_csv_has_the_contract_header() {
    let cfg = write_temp("regioncsv.cfg", BPSK_CFG);
    let out = bin()
        .args([
            "region",
            "--config",
            cfg.to_str().unwrap(),
            "--power-db",
            "6.0",
            "--power-db",
            "8.0",
            "--csv",
            "--nodes",
            "48",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("P_dB,R1_A,R2_A,R1_B,R2_B,R1_Ap,R2_Ap,R1_Bp,R2_Bp,HS_Y"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn minpower_reports_the_anchor() {
    let cfg = write_temp("minpower.cfg", BPSK_CFG);
    let out = bin()
        .args(["minpower", "--config", cfg.to_str().unwrap(), "--r1", "0.9742", "--r2", "0.9355"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let p: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((p - 7.91).abs() < 0.15, "{p}");
}

#[test]
fn ber_writes_deterministic_csv() {
    let cfg = write_temp("ber.cfg", BPSK_CFG);
    let run = || {
        let out = bin().args(["ber", "--config", cfg.to_str().unwrap()]).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8_lossy(&out.stdout).to_string()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert!(a.starts_with("scenario,P_dB,stage,bit_errors,bits_total,trials,ber\n"));
}

#[test]
fn merge_produces_a_nested_alist() {
    // 2-PAM demo matrix in alist form
    let alist = "\
8 4
3 4
1 1 1 1 3 3 3 3
4 4 4 4
1
2
3
4
2 3 4
1 3 4
1 2 4
1 2 3
1 6 7 8
2 5 7 8
3 5 6 8
4 5 6 7
";
    let input = write_temp("base.alist", alist);
    let output = input.with_file_name("merged.alist");
    let out = bin()
        .args([
            "merge",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--merges",
            "1",
            "--seed",
            "5",
            "--xor-ok",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let merged = std::fs::read_to_string(&output).unwrap();
    assert!(merged.starts_with("8 3\n"), "{merged}");
}

#[test]
fn encode_decode_noiseless_is_clean() {
    let cfg = write_temp("encdec.cfg", BPSK_CFG);
    let out = bin()
        .args([
            "encode-decode",
            "--config",
            cfg.to_str().unwrap(),
            "--power-db",
            "9.0",
            "--noise-off",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("codeword bit errors across both users: 0"), "{text}");
}

#[test]
fn validation_errors_exit_with_code_two() {
    let cfg = write_temp("bad.cfg", &BPSK_CFG.replace("trials = 4", "trials = -1"));
    let out = bin().args(["ber", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // unknown CLI flags are also validation failures (clap uses 2 as well)
    let out = bin().args(["ber", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_temp("infeasible.cfg", BPSK_CFG);
    let out = bin()
        .args(["minpower", "--config", cfg.to_str().unwrap(), "--r1", "1.5", "--r2", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precision_failures_exit_with_code_three() {
    // a 3-node quadrature cannot hold the 1e-3 bound
    let cfg = write_temp("precision.cfg", BPSK_CFG);
    let out = bin()
        .args(["region", "--config", cfg.to_str().unwrap(), "--power-db", "3.0", "--nodes", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
