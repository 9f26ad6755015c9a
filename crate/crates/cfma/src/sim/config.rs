//! Plain-text scenario configuration.
//!
//! Sections in square brackets ([channel], [codes], [modulation], [sweep]),
//! `key = value` lines, `#` comments. Unknown sections or keys are errors,
//! as are missing required keys. `emit` writes the canonical form (fixed
//! key order, defaults made explicit), and parse(emit(parse(t))) is the
//! identity.

use super::SimError;
use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    MacReal,
    MacComplex,
    Interference,
    KUserMac,
    PointToPoint,
}

impl Topology {
    fn name(self) -> &'static str {
        match self {
            Topology::MacReal => "mac_real",
            Topology::MacComplex => "mac_complex",
            Topology::Interference => "interference",
            Topology::KUserMac => "kuser_mac",
            Topology::PointToPoint => "p2p",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub topology: Topology,
    /// Per-user gains; real topologies use the real part only.
    pub gains: Vec<Complex64>,
    /// Interference cross gain h.
    pub cross_gain: f64,
    /// Noise on/off (off is the noiseless debug hook).
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeSource {
    Regular { n: usize, var_degree: usize, check_degree: usize },
    Alist { sub_path: String, super_path: String },
}

#[derive(Debug, Clone)]
pub struct CodesConfig {
    pub source: CodeSource,
    pub merges: usize,
    pub code_seed: u64,
    /// Which user transmits with the merged (higher-rate) code.
    pub higher_rate_user: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModFamily {
    Bpsk,
    Pam,
    Qam,
}

#[derive(Debug, Clone)]
pub struct ModulationConfig {
    pub family: ModFamily,
    pub levels: usize,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub scenario: String,
    pub powers_db: Vec<f64>,
    pub trials: u64,
    pub max_iterations: usize,
    pub seed: u64,
    pub target_ber: f64,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub channel: ChannelConfig,
    pub codes: CodesConfig,
    pub modulation: ModulationConfig,
    pub sweep: SweepConfig,
}

fn cerr(line: usize, msg: impl Into<String>) -> SimError {
    SimError::Config { line, msg: msg.into() }
}

fn parse_complex(tok: &str, line: usize) -> Result<Complex64, SimError> {
    let t = tok.trim();
    if let Ok(re) = t.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    // forms a+bi / a-bi
    if let Some(rest) = t.strip_suffix('i') {
        let split = rest[1..]
            .rfind(['+', '-'])
            .map(|p| p + 1)
            .ok_or_else(|| cerr(line, format!("cannot parse complex gain {tok:?}")))?;
        let (re_s, im_s) = rest.split_at(split);
        let re: f64 =
            re_s.parse().map_err(|_| cerr(line, format!("bad real part in {tok:?}")))?;
        let im: f64 = if im_s == "+" {
            1.0
        } else if im_s == "-" {
            -1.0
        } else {
            im_s.parse().map_err(|_| cerr(line, format!("bad imaginary part in {tok:?}")))?
        };
        return Ok(Complex64::new(re, im));
    }
    Err(cerr(line, format!("cannot parse gain {tok:?}")))
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

struct RawConfig {
    // (section, key) -> (line, value)
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, SimError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| cerr(line_no, "unterminated section header"))?
                    .trim()
                    .to_string();
                if !["channel", "codes", "modulation", "sweep"].contains(&name.as_str()) {
                    return Err(cerr(line_no, format!("unknown section [{name}]")));
                }
                section = name;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cerr(line_no, "expected `key = value`"))?;
            if section.is_empty() {
                return Err(cerr(line_no, "key outside any [section]"));
            }
            let key = key.trim().to_string();
            if entries
                .insert((section.clone(), key.clone()), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(cerr(line_no, format!("duplicate key {key:?} in [{section}]")));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String), SimError> {
        self.take(section, key).ok_or_else(|| {
            SimError::Validation(format!("missing required key {key:?} in [{section}]"))
        })
    }

    fn finish(self) -> Result<(), SimError> {
        if let Some(((section, key), (line, _))) = self.entries.into_iter().next() {
            return Err(cerr(line, format!("unknown key {key:?} in [{section}]")));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(v: &(usize, String), what: &str) -> Result<T, SimError> {
    v.1.parse::<T>().map_err(|_| cerr(v.0, format!("cannot parse {what} from {:?}", v.1)))
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut raw = RawConfig::parse(text)?;

        let topo_entry = raw.require("channel", "topology")?;
        let topology = match topo_entry.1.as_str() {
            "mac_real" => Topology::MacReal,
            "mac_complex" => Topology::MacComplex,
            "interference" => Topology::Interference,
            "kuser_mac" => Topology::KUserMac,
            "p2p" => Topology::PointToPoint,
            other => return Err(cerr(topo_entry.0, format!("unknown topology {other:?}"))),
        };
        let gains = match raw.take("channel", "gains") {
            Some(entry) => entry
                .1
                .split(',')
                .map(|tok| parse_complex(tok, entry.0))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![Complex64::new(1.0, 0.0); 2],
        };
        let cross_gain = match raw.take("channel", "cross_gain") {
            Some(entry) => parse_num::<f64>(&entry, "cross_gain")?,
            None => 1.0,
        };
        let noise = match raw.take("channel", "noise") {
            Some(entry) => match entry.1.as_str() {
                "on" => true,
                "off" => false,
                other => return Err(cerr(entry.0, format!("noise must be on/off, got {other:?}"))),
            },
            None => true,
        };

        let source_entry = raw.require("codes", "source")?;
        let source = match source_entry.1.as_str() {
            "regular" => {
                let n = parse_num::<usize>(&raw.require("codes", "n")?, "n")?;
                let dv = parse_num::<usize>(&raw.require("codes", "var_degree")?, "var_degree")?;
                let dc =
                    parse_num::<usize>(&raw.require("codes", "check_degree")?, "check_degree")?;
                CodeSource::Regular { n, var_degree: dv, check_degree: dc }
            }
            "alist" => {
                let sub = raw.require("codes", "alist_sub")?.1;
                let sup = raw.require("codes", "alist_super")?.1;
                CodeSource::Alist { sub_path: sub, super_path: sup }
            }
            other => return Err(cerr(source_entry.0, format!("unknown code source {other:?}"))),
        };
        let merges = match raw.take("codes", "merges") {
            Some(entry) => parse_num::<usize>(&entry, "merges")?,
            None => 0,
        };
        let code_seed = match raw.take("codes", "code_seed") {
            Some(entry) => parse_num::<u64>(&entry, "code_seed")?,
            None => 0,
        };
        let higher_rate_user = match raw.take("codes", "higher_rate_user") {
            Some(entry) => {
                let u = parse_num::<u8>(&entry, "higher_rate_user")?;
                if u != 1 && u != 2 {
                    return Err(cerr(entry.0, "higher_rate_user must be 1 or 2"));
                }
                u
            }
            None => 1,
        };

        let family_entry = raw.require("modulation", "family")?;
        let family = match family_entry.1.as_str() {
            "bpsk" => ModFamily::Bpsk,
            "pam" => ModFamily::Pam,
            "qam" => ModFamily::Qam,
            other => return Err(cerr(family_entry.0, format!("unknown family {other:?}"))),
        };
        let levels = match raw.take("modulation", "levels") {
            Some(entry) => parse_num::<usize>(&entry, "levels")?,
            None => 1,
        };
        let theta = match raw.take("modulation", "theta") {
            Some(entry) => parse_num::<f64>(&entry, "theta")?,
            None => 0.0,
        };

        let scenario = raw.require("sweep", "scenario")?.1;
        let powers_entry = raw.require("sweep", "powers_db")?;
        let powers_db: Vec<f64> = if powers_entry.1.trim().is_empty() {
            Vec::new()
        } else {
            powers_entry
                .1
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        cerr(powers_entry.0, format!("cannot parse power {:?}", tok.trim()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let trials_entry = raw.require("sweep", "trials")?;
        let trials: i64 = parse_num(&trials_entry, "trials")?;
        if trials < 1 {
            return Err(cerr(trials_entry.0, format!("trials must be >= 1, got {trials}")));
        }
        let max_iterations = match raw.take("sweep", "max_iterations") {
            Some(entry) => parse_num::<usize>(&entry, "max_iterations")?,
            None => 25,
        };
        let seed = match raw.take("sweep", "seed") {
            Some(entry) => parse_num::<u64>(&entry, "seed")?,
            None => 0,
        };
        let target_ber = match raw.take("sweep", "target_ber") {
            Some(entry) => parse_num::<f64>(&entry, "target_ber")?,
            None => 1e-5,
        };
        let workers = match raw.take("sweep", "workers") {
            Some(entry) => parse_num::<usize>(&entry, "workers")?,
            None => 0,
        };
        raw.finish()?;

        let cfg = SimConfig {
            channel: ChannelConfig { topology, gains, cross_gain, noise },
            codes: CodesConfig { source, merges, code_seed, higher_rate_user },
            modulation: ModulationConfig { family, levels, theta },
            sweep: SweepConfig {
                scenario,
                powers_db,
                trials: trials as u64,
                max_iterations,
                seed,
                target_ber,
                workers,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let verr = |msg: String| Err(SimError::Validation(msg));
        if !self.sweep.powers_db.windows(2).all(|w| w[0] < w[1]) {
            return verr("powers_db must be strictly increasing".into());
        }
        if self.modulation.levels == 0 {
            return verr("levels must be >= 1".into());
        }
        if self.modulation.family == ModFamily::Bpsk && self.modulation.levels != 1 {
            return verr("bpsk forces levels = 1".into());
        }
        if self.modulation.family != ModFamily::Qam && self.modulation.theta != 0.0 {
            return verr("theta is only meaningful for qam".into());
        }
        let users = match self.channel.topology {
            Topology::KUserMac => {
                let k = self.channel.gains.len();
                if !(2..=4).contains(&k) {
                    return verr(format!("kuser_mac supports 2..=4 users, got {k}"));
                }
                if self.modulation.family != ModFamily::Bpsk {
                    return verr("kuser_mac supports bpsk only".into());
                }
                if self.codes.merges != 0 {
                    return verr("kuser_mac uses one shared code; merges must be 0".into());
                }
                k
            }
            Topology::PointToPoint => {
                if self.modulation.family != ModFamily::Bpsk {
                    return verr("p2p supports bpsk only".into());
                }
                if self.channel.gains.len() != 1 {
                    return verr("p2p takes exactly one gain".into());
                }
                1
            }
            _ => {
                if self.channel.gains.len() != 2 {
                    return verr(format!(
                        "two-user topology needs 2 gains, got {}",
                        self.channel.gains.len()
                    ));
                }
                2
            }
        };
        let _ = users;
        match self.channel.topology {
            Topology::MacComplex => {
                if self.modulation.family != ModFamily::Qam {
                    return verr("mac_complex requires qam".into());
                }
            }
            Topology::MacReal | Topology::Interference => {
                if self.modulation.family == ModFamily::Qam {
                    return verr("qam requires the mac_complex topology".into());
                }
                if self.channel.gains.iter().any(|g| g.im != 0.0) {
                    return verr("real topologies need real gains".into());
                }
            }
            _ => {}
        }
        if self.channel.topology == Topology::Interference && self.modulation.levels != 1 {
            return verr("interference scenario is binary (levels = 1)".into());
        }
        if let CodeSource::Regular { n, var_degree, check_degree } = self.codes.source {
            if n == 0 || var_degree == 0 || check_degree == 0 || (n * var_degree) % check_degree != 0
            {
                return verr(format!(
                    "regular code needs n*var_degree divisible by check_degree (n={n}, dv={var_degree}, dc={check_degree})"
                ));
            }
            if self.modulation.family == ModFamily::Qam && n % 2 != 0 {
                return verr("qam needs an even code length".into());
            }
        }
        if let CodeSource::Alist { .. } = self.codes.source {
            if self.modulation.levels != 1 {
                return verr("alist code source supports a single level".into());
            }
        }
        if !(self.sweep.target_ber > 0.0 && self.sweep.target_ber < 1.0) {
            return verr(format!("target_ber out of (0,1): {}", self.sweep.target_ber));
        }
        if self.sweep.max_iterations == 0 {
            return verr("max_iterations must be >= 1".into());
        }
        Ok(())
    }

    /// Canonical text form; `parse(emit(parse(t)))` equals `parse(t)`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str("[channel]\n");
        out.push_str(&format!("topology = {}\n", self.channel.topology.name()));
        let gains: Vec<String> = self.channel.gains.iter().map(|&g| fmt_complex(g)).collect();
        out.push_str(&format!("gains = {}\n", gains.join(", ")));
        if self.channel.topology == Topology::Interference {
            out.push_str(&format!("cross_gain = {}\n", self.channel.cross_gain));
        }
        out.push_str(&format!("noise = {}\n", if self.channel.noise { "on" } else { "off" }));
        out.push_str("\n[codes]\n");
        match &self.codes.source {
            CodeSource::Regular { n, var_degree, check_degree } => {
                out.push_str("source = regular\n");
                out.push_str(&format!("n = {n}\n"));
                out.push_str(&format!("var_degree = {var_degree}\n"));
                out.push_str(&format!("check_degree = {check_degree}\n"));
            }
            CodeSource::Alist { sub_path, super_path } => {
                out.push_str("source = alist\n");
                out.push_str(&format!("alist_sub = {sub_path}\n"));
                out.push_str(&format!("alist_super = {super_path}\n"));
            }
        }
        out.push_str(&format!("merges = {}\n", self.codes.merges));
        out.push_str(&format!("code_seed = {}\n", self.codes.code_seed));
        out.push_str(&format!("higher_rate_user = {}\n", self.codes.higher_rate_user));
        out.push_str("\n[modulation]\n");
        let family = match self.modulation.family {
            ModFamily::Bpsk => "bpsk",
            ModFamily::Pam => "pam",
            ModFamily::Qam => "qam",
        };
        out.push_str(&format!("family = {family}\n"));
        out.push_str(&format!("levels = {}\n", self.modulation.levels));
        if self.modulation.family == ModFamily::Qam {
            out.push_str(&format!("theta = {}\n", self.modulation.theta));
        }
        out.push_str("\n[sweep]\n");
        out.push_str(&format!("scenario = {}\n", self.sweep.scenario));
        let powers: Vec<String> = self.sweep.powers_db.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("powers_db = {}\n", powers.join(", ")));
        out.push_str(&format!("trials = {}\n", self.sweep.trials));
        out.push_str(&format!("max_iterations = {}\n", self.sweep.max_iterations));
        out.push_str(&format!("seed = {}\n", self.sweep.seed));
        out.push_str(&format!("target_ber = {}\n", self.sweep.target_ber));
        out.push_str(&format!("workers = {}\n", self.sweep.workers));
        out
    }
}
