//! Experiment configuration: flat `key = value` text with section headers.
//!
//! ```text
//! seed = 7
//! output = ber.csv
//!
//! [sweep]
//! gamma_start = 10
//! gamma_stop = 30
//! gamma_step = 2
//!
//! [scenario bpsk]
//! modulation = bpsk
//! receiver = optimum
//! ```
//!
//! Top-level keys: `seed`, `output`. Every `[scenario NAME]` block starts
//! from the default scenario and overrides the keys it lists.

use std::collections::HashSet;
use std::fmt::Write as _;

use ambc_core::{
    AmbientKind, ArrayAxis, BdAlphabet, CsiMode, Point2, Probability, ReceiverKind, Scenario, ThetaGrid,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn syntax(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

/// Inclusive SNR axis `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GammaAxis {
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepAxes {
    pub gamma: Option<GammaAxis>,
    pub n_r: Option<Vec<usize>>,
    pub preamble_len: Option<Vec<usize>>,
    pub methods: Option<Vec<CsiMode>>,
    pub pf: Option<Vec<Probability>>,
    pub grid: Option<ThetaGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: String,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<String>,
    pub sweep: SweepAxes,
    pub scenarios: Vec<NamedScenario>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            output: None,
            sweep: SweepAxes::default(),
            scenarios: Vec::new(),
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    match v {
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| syntax(line, format!("{key}: expected a number, got '{v}'"))),
    }
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| syntax(line, format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_prob(line: usize, key: &str, v: &str) -> Result<Probability, ConfigError> {
    Probability::new(parse_f64(line, key, v)?).map_err(|e| syntax(line, format!("{key}: {e}")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(syntax(line, format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_list<T>(
    line: usize,
    key: &str,
    v: &str,
    item: impl Fn(usize, &str, &str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(syntax(line, format!("{key}: sweep axis is empty")));
    }
    items.into_iter().map(|s| item(line, key, s)).collect()
}

fn parse_ambient(line: usize, v: &str) -> Result<AmbientKind, ConfigError> {
    match v {
        "qpsk" => Ok(AmbientKind::qpsk()),
        "qam16" => Ok(AmbientKind::Qam16),
        "gaussian" => Ok(AmbientKind::Gaussian),
        _ => v
            .strip_prefix("psk")
            .and_then(|m| m.parse::<u32>().ok())
            .map(|order| AmbientKind::ConstantModulus { order })
            .ok_or_else(|| syntax(line, format!("ambient: expected qpsk, pskM, qam16 or gaussian, got '{v}'"))),
    }
}

fn parse_csi(line: usize, _key: &str, v: &str) -> Result<CsiMode, ConfigError> {
    CsiMode::parse(v)
        .ok_or_else(|| syntax(line, format!("expected perfect, invcov, svd or poweriter, got '{v}'")))
}

/// `min, max, count`.
fn parse_grid_axis(line: usize, key: &str, v: &str) -> Result<(f64, f64, usize), ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(syntax(line, format!("{key}: expected 'min, max, count'")));
    }
    let min = parse_f64(line, key, parts[0])?;
    let max = parse_f64(line, key, parts[1])?;
    let n: usize = parse_int(line, key, parts[2])?;
    if n == 0 {
        return Err(syntax(line, format!("{key}: sweep axis is empty")));
    }
    if max < min {
        return Err(syntax(line, format!("{key}: max < min")));
    }
    Ok((min, max, n))
}

enum Section {
    Top,
    Sweep,
    Scenario(usize),
}

/// Scenario under construction; `pf` is kept apart until `receiver` is known.
struct Draft {
    scenario: Scenario,
    simplified: bool,
    pf: Probability,
}

impl Draft {
    fn new() -> Self {
        Draft {
            scenario: Scenario::default(),
            simplified: false,
            pf: Probability::new(1e-2).expect("constant is a probability"),
        }
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        let s = &mut self.scenario;
        match key {
            "n_r" => s.n_r = parse_int(line, key, v)?,
            "spacing" => s.spacing = parse_f64(line, key, v)?,
            "d0" => s.d0 = parse_f64(line, key, v)?,
            "bd_x" => s.bd_pos = Point2::new(parse_f64(line, key, v)?, s.bd_pos.y),
            "bd_y" => s.bd_pos = Point2::new(s.bd_pos.x, parse_f64(line, key, v)?),
            "axis" => {
                s.axis = match v {
                    "broadside" => ArrayAxis::Broadside,
                    "endfire" => ArrayAxis::Endfire,
                    _ => return Err(syntax(line, format!("axis: expected broadside or endfire, got '{v}'"))),
                }
            }
            "modulation" => {
                s.alphabet = match v {
                    "ook" => BdAlphabet::ook(),
                    "bpsk" => BdAlphabet::bpsk(),
                    _ => return Err(syntax(line, format!("modulation: expected ook or bpsk, got '{v}'"))),
                }
            }
            "ambient" => s.ambient = parse_ambient(line, v)?,
            "gamma_db" => s.gamma_db = parse_f64(line, key, v)?,
            "preamble_len" => s.preamble_len = parse_int(line, key, v)?,
            "block_len" => s.block_len = parse_int(line, key, v)?,
            "csi" => s.csi = parse_csi(line, key, v)?,
            "receiver" => {
                self.simplified = match v {
                    "optimum" => false,
                    "simplified" => true,
                    _ => return Err(syntax(line, format!("receiver: expected optimum or simplified, got '{v}'"))),
                }
            }
            "pf" => self.pf = parse_prob(line, key, v)?,
            "trials" => s.trials = parse_int(line, key, v)?,
            "normalize" => s.normalize_channels = parse_bool(line, key, v)?,
            _ => return Err(syntax(line, format!("unknown scenario key '{key}'"))),
        }
        Ok(())
    }

    fn finish(mut self) -> Scenario {
        self.scenario.receiver = if self.simplified {
            ReceiverKind::Simplified { pf: self.pf }
        } else {
            ReceiverKind::Optimum
        };
        self.scenario
    }
}

#[derive(Default)]
struct GammaDraft {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    line: usize,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = Section::Top;
        let mut drafts: Vec<(String, Draft)> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut gamma = GammaDraft::default();
        let mut grid_x = None;
        let mut grid_y = None;
        let mut grid_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
                continue;
            }
            if let Some(head) = t.strip_prefix('[') {
                let head = head
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?
                    .trim();
                let mut words = head.split_whitespace();
                section = match (words.next(), words.next(), words.next()) {
                    (Some("sweep"), None, _) => {
                        if !seen.insert("[sweep]".into()) {
                            return Err(syntax(line, "duplicate [sweep] section"));
                        }
                        Section::Sweep
                    }
                    (Some("scenario"), Some(name), None) => {
                        if drafts.iter().any(|(n, _)| n == name) {
                            return Err(syntax(line, format!("duplicate scenario '{name}'")));
                        }
                        drafts.push((name.to_string(), Draft::new()));
                        Section::Scenario(drafts.len() - 1)
                    }
                    _ => return Err(syntax(line, format!("unknown section '[{head}]'"))),
                };
                continue;
            }
            let (key, value) = t
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected 'key = value', got '{t}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let scope = match section {
                Section::Top => "top".to_string(),
                Section::Sweep => "sweep".to_string(),
                Section::Scenario(i) => format!("scenario {}", drafts[i].0),
            };
            if !seen.insert(format!("{scope}/{key}")) {
                return Err(syntax(line, format!("duplicate key '{key}'")));
            }
            match section {
                Section::Top => match key {
                    "seed" => cfg.seed = parse_int(line, key, value)?,
                    "output" => {
                        if value.is_empty() {
                            return Err(syntax(line, "output: empty path"));
                        }
                        cfg.output = Some(value.to_string());
                    }
                    _ => return Err(syntax(line, format!("unknown top-level key '{key}'"))),
                },
                Section::Sweep => match key {
                    "gamma_start" | "gamma_stop" | "gamma_step" => {
                        let v = parse_f64(line, key, value)?;
                        gamma.line = line;
                        match key {
                            "gamma_start" => gamma.start = Some(v),
                            "gamma_stop" => gamma.stop = Some(v),
                            _ => gamma.step = Some(v),
                        }
                    }
                    "n_r" => cfg.sweep.n_r = Some(parse_list(line, key, value, parse_int)?),
                    "preamble_len" => cfg.sweep.preamble_len = Some(parse_list(line, key, value, parse_int)?),
                    "methods" => cfg.sweep.methods = Some(parse_list(line, key, value, parse_csi)?),
                    "pf" => {
                        let pfs = parse_list(line, key, value, parse_prob)?;
                        if pfs.iter().any(|p| p.value() == 0.0) {
                            return Err(syntax(line, "pf: false-alarm targets must be > 0"));
                        }
                        cfg.sweep.pf = Some(pfs);
                    }
                    "grid_x" => {
                        grid_x = Some(parse_grid_axis(line, key, value)?);
                        grid_line = line;
                    }
                    "grid_y" => {
                        grid_y = Some(parse_grid_axis(line, key, value)?);
                        grid_line = line;
                    }
                    _ => return Err(syntax(line, format!("unknown sweep key '{key}'"))),
                },
                Section::Scenario(i) => drafts[i].1.set(line, key, value)?,
            }
        }

        match (gamma.start, gamma.stop, gamma.step) {
            (None, None, None) => {}
            (Some(start), Some(stop), Some(step)) => {
                let axis = GammaAxis { start, stop, step };
                if !(step > 0.0) {
                    return Err(syntax(gamma.line, "gamma_step must be > 0"));
                }
                if axis.values().is_empty() {
                    return Err(syntax(gamma.line, "gamma sweep axis is empty (gamma_stop < gamma_start)"));
                }
                cfg.sweep.gamma = Some(axis);
            }
            _ => return Err(syntax(gamma.line, "gamma axis needs gamma_start, gamma_stop and gamma_step")),
        }
        match (grid_x, grid_y) {
            (None, None) => {}
            (Some((x_min, x_max, nx)), Some((y_min, y_max, ny))) => {
                cfg.sweep.grid = Some(ThetaGrid { x_min, x_max, nx, y_min, y_max, ny })
            }
            _ => return Err(syntax(grid_line, "theta grid needs both grid_x and grid_y")),
        }
        cfg.scenarios = drafts
            .into_iter()
            .map(|(name, d)| NamedScenario { name, scenario: d.finish() })
            .collect();
        Ok(cfg)
    }

    pub fn from_file(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let join = |v: Vec<String>| v.join(", ");
        writeln!(out, "seed = {}", self.seed).unwrap();
        if let Some(o) = &self.output {
            writeln!(out, "output = {o}").unwrap();
        }
        let sw = &self.sweep;
        if *sw != SweepAxes::default() {
            out.push_str("\n[sweep]\n");
            if let Some(g) = sw.gamma {
                writeln!(out, "gamma_start = {}\ngamma_stop = {}\ngamma_step = {}", g.start, g.stop, g.step).unwrap();
            }
            if let Some(v) = &sw.n_r {
                writeln!(out, "n_r = {}", join(v.iter().map(|x| x.to_string()).collect())).unwrap();
            }
            if let Some(v) = &sw.preamble_len {
                writeln!(out, "preamble_len = {}", join(v.iter().map(|x| x.to_string()).collect())).unwrap();
            }
            if let Some(v) = &sw.methods {
                writeln!(out, "methods = {}", join(v.iter().map(|m| m.name().to_string()).collect())).unwrap();
            }
            if let Some(v) = &sw.pf {
                writeln!(out, "pf = {}", join(v.iter().map(|p| p.value().to_string()).collect())).unwrap();
            }
            if let Some(g) = &sw.grid {
                writeln!(out, "grid_x = {}, {}, {}\ngrid_y = {}, {}, {}", g.x_min, g.x_max, g.nx, g.y_min, g.y_max, g.ny)
                    .unwrap();
            }
        }
        for ns in &self.scenarios {
            let s = &ns.scenario;
            writeln!(out, "\n[scenario {}]", ns.name).unwrap();
            writeln!(out, "n_r = {}", s.n_r).unwrap();
            writeln!(out, "spacing = {}", s.spacing).unwrap();
            writeln!(out, "d0 = {}", s.d0).unwrap();
            writeln!(out, "bd_x = {}", s.bd_pos.x).unwrap();
            writeln!(out, "bd_y = {}", s.bd_pos.y).unwrap();
            let axis = match s.axis {
                ArrayAxis::Broadside => "broadside",
                ArrayAxis::Endfire => "endfire",
            };
            writeln!(out, "axis = {axis}").unwrap();
            writeln!(out, "modulation = {}", s.alphabet.name()).unwrap();
            writeln!(out, "ambient = {}", s.ambient.name()).unwrap();
            writeln!(out, "gamma_db = {}", s.gamma_db).unwrap();
            writeln!(out, "preamble_len = {}", s.preamble_len).unwrap();
            writeln!(out, "block_len = {}", s.block_len).unwrap();
            writeln!(out, "csi = {}", s.csi.name()).unwrap();
            writeln!(out, "receiver = {}", s.receiver.name()).unwrap();
            if let ReceiverKind::Simplified { pf } = s.receiver {
                writeln!(out, "pf = {}", pf.value()).unwrap();
            }
            writeln!(out, "trials = {}", s.trials).unwrap();
            writeln!(out, "normalize = {}", s.normalize_channels).unwrap();
        }
        out
    }

    /// Scenarios with the run seed applied and every scenario validated.
    pub fn resolved_scenarios(&self) -> Result<Vec<NamedScenario>, ConfigError> {
        if self.scenarios.is_empty() {
            return Err(ConfigError::Invalid("config defines no [scenario NAME] block".into()));
        }
        self.scenarios
            .iter()
            .map(|ns| {
                let scenario = Scenario { seed: self.seed, ..ns.scenario.clone() };
                scenario
                    .validate()
                    .map_err(|e| ConfigError::Invalid(format!("scenario {}: {e}", ns.name)))?;
                Ok(NamedScenario { name: ns.name.clone(), scenario })
            })
            .collect()
    }
}
