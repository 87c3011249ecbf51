//! Run configuration and its text format.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment            ; comment
//! [section]
//! key = value
//! ```
//!
//! Keys before the first section header are top-level (`command`, `seed`,
//! `output_dir`). Values are bare text; lists are comma-separated. Repeated
//! keys within a section, repeated sections, and unknown keys or sections are
//! errors that carry line numbers. See `README.md` for the key table.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fracvi::evolution::AsymptoticConfig;
use fracvi::{DomainSpec, EigenBasis, GridFunction, SolverConfig, SolverMethod};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate key `{key}` at lines {first} and {second}")]
    Duplicate {
        key: String,
        first: usize,
        second: usize,
    },

    #[error("unknown key `{key}` in [{section}] at line {line}")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },

    #[error("invalid `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SolvePoisson,
    SolveObstacle,
    Evolve,
    VerifyLs,
    Compare,
    Asymptotic,
    ExtensionCheck,
    Suite,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::SolvePoisson,
        Command::SolveObstacle,
        Command::Evolve,
        Command::VerifyLs,
        Command::Compare,
        Command::Asymptotic,
        Command::ExtensionCheck,
        Command::Suite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SolvePoisson => "solve-poisson",
            Command::SolveObstacle => "solve-obstacle",
            Command::Evolve => "evolve",
            Command::VerifyLs => "verify-ls",
            Command::Compare => "compare",
            Command::Asymptotic => "asymptotic",
            Command::ExtensionCheck => "extension-check",
            Command::Suite => "suite",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Spatial profile of a grid function.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `max(0, a − |x − center|)`.
    Hat(f64),
    /// `amp · φ_k`, `k` counted from 1.
    Mode(usize, f64),
    /// `amp · Π sin(π x_i / L_i)`.
    Sine(f64),
    /// Whitespace- or comma-separated nodal values.
    File(PathBuf),
}

fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    match s.find('(') {
        None => Some((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..].strip_suffix(')')?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Some((s[..open].trim(), args))
        }
    }
}

fn num(field: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.parse().map_err(|_| invalid(field, format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, "value must be finite"))
    }
}

fn count(field: &str, s: &str) -> Result<usize, ConfigError> {
    s.parse()
        .map_err(|_| invalid(field, format!("`{s}` is not a nonnegative integer")))
}

impl Profile {
    pub fn parse(field: &str, s: &str) -> Result<Self, ConfigError> {
        let (name, args) = split_call(s).ok_or_else(|| invalid(field, format!("malformed profile `{s}`")))?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(field, format!("`{name}` takes {n} argument(s)")))
            }
        };
        match name {
            "zero" => want(0).map(|_| Profile::Zero),
            "constant" => {
                want(1)?;
                Ok(Profile::Constant(num(field, args[0])?))
            }
            "hat" => {
                want(1)?;
                Ok(Profile::Hat(num(field, args[0])?))
            }
            "mode" => {
                want(2)?;
                let k = count(field, args[0])?;
                if k == 0 {
                    return Err(invalid(field, "mode index counts from 1"));
                }
                Ok(Profile::Mode(k, num(field, args[1])?))
            }
            "sine" => {
                want(1)?;
                Ok(Profile::Sine(num(field, args[0])?))
            }
            "file" => {
                want(1)?;
                Ok(Profile::File(PathBuf::from(args[0])))
            }
            other => Err(invalid(field, format!("unknown profile `{other}`"))),
        }
    }

    pub fn sample(&self, basis: &EigenBasis) -> anyhow::Result<GridFunction> {
        let d = *basis.domain();
        let dim = d.dim();
        let lengths: Vec<f64> = d.lengths().to_vec();
        let g = match self {
            Profile::Zero => GridFunction::zeros(d),
            Profile::Constant(c) => GridFunction::constant(d, *c),
            Profile::Hat(a) => GridFunction::from_fn(d, |x| {
                let r2: f64 = (0..dim).map(|i| (x[i] - 0.5 * lengths[i]).powi(2)).sum();
                (a - r2.sqrt()).max(0.0)
            })?,
            Profile::Mode(k, amp) => {
                if *k > basis.len() {
                    anyhow::bail!("mode {k} exceeds the {} available modes", basis.len());
                }
                &basis.mode(k - 1) * *amp
            }
            Profile::Sine(amp) => GridFunction::from_fn(d, |x| {
                amp * (0..dim)
                    .map(|i| (std::f64::consts::PI * x[i] / lengths[i]).sin())
                    .product::<f64>()
            })?,
            Profile::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
                let values = text
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                GridFunction::new(d, values)?
            }
        };
        Ok(g)
    }
}

/// Temporal factor multiplying the spatial force profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Constant,
    /// `1 + a t`.
    Ramp(f64),
    /// `cos(ω t)`.
    Oscillate(f64),
}

impl TimeProfile {
    pub fn parse(field: &str, s: &str) -> Result<Self, ConfigError> {
        let (name, args) = split_call(s).ok_or_else(|| invalid(field, format!("malformed profile `{s}`")))?;
        match (name, args.as_slice()) {
            ("constant", []) => Ok(TimeProfile::Constant),
            ("ramp", [a]) => Ok(TimeProfile::Ramp(num(field, a)?)),
            ("oscillate", [w]) => Ok(TimeProfile::Oscillate(num(field, w)?)),
            _ => Err(invalid(field, format!("unknown time profile `{s}`"))),
        }
    }

    pub fn factor(self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Ramp(a) => 1.0 + a * t,
            TimeProfile::Oscillate(w) => (w * t).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

impl DomainConfig {
    pub fn spec(&self) -> Result<DomainSpec, ConfigError> {
        DomainSpec::new(&self.lengths, &self.cells).map_err(|e| invalid("domain", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    /// Unset means 1 for `evolve` and 100 for `asymptotic`.
    pub horizon: Option<f64>,
    /// Unset means 20 for `evolve` and 1000 for `asymptotic`.
    pub steps: Option<usize>,
    pub stop_tol: f64,
    pub asymp_tol: f64,
}

impl TimeConfig {
    pub fn evolve_grid(&self) -> (f64, usize) {
        (self.horizon.unwrap_or(1.0), self.steps.unwrap_or(20))
    }

    pub fn asymptotic(&self) -> AsymptoticConfig {
        let horizon = self.horizon.unwrap_or(100.0);
        let steps = self.steps.unwrap_or(1000);
        AsymptoticConfig {
            horizon,
            tau: horizon / steps as f64,
            stop_tol: self.stop_tol,
            asymp_tol: self.asymp_tol,
            ..AsymptoticConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub force: Profile,
    pub force_time: TimeProfile,
    pub obstacle: Profile,
    pub initial: Profile,
    /// Nonnegative increments defining the upper problem of `compare`.
    pub force_delta: Profile,
    pub obstacle_delta: Profile,
    pub initial_delta: Profile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionConfig {
    pub levels: Vec<usize>,
    pub height: Option<f64>,
    pub ratio: Option<f64>,
    pub data: Profile,
    pub batch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Random instances per (s, shift) combination.
    pub instances: usize,
    pub orders: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub domain: DomainConfig,
    pub s: f64,
    pub shift: f64,
    pub solver: SolverConfig,
    pub time: TimeConfig,
    pub problem: ProblemConfig,
    pub extension: ExtensionConfig,
    pub suite: SuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 0,
            output_dir: None,
            domain: DomainConfig {
                lengths: vec![1.0],
                cells: vec![32],
            },
            s: 0.5,
            shift: 0.0,
            solver: SolverConfig::default(),
            time: TimeConfig {
                horizon: None,
                steps: None,
                stop_tol: 1e-8,
                asymp_tol: 1e-3,
            },
            problem: ProblemConfig {
                force: Profile::Constant(1.0),
                force_time: TimeProfile::Constant,
                obstacle: Profile::Zero,
                initial: Profile::Zero,
                force_delta: Profile::Constant(1.0),
                obstacle_delta: Profile::Zero,
                initial_delta: Profile::Zero,
            },
            extension: ExtensionConfig {
                levels: vec![32, 64, 128],
                height: None,
                ratio: None,
                data: Profile::Mode(1, 1.0),
                batch: 10,
            },
            suite: SuiteConfig {
                instances: 20,
                orders: vec![0.25, 0.5, 0.75],
            },
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["command", "seed", "output_dir"]),
    ("domain", &["lengths", "cells"]),
    ("operator", &["s", "shift"]),
    (
        "solver",
        &["omega", "tol", "residual_tol", "act_tol", "max_iter", "oracle_cap", "trials", "method"],
    ),
    ("time", &["horizon", "steps", "stop_tol", "asymp_tol"]),
    (
        "problem",
        &["force", "force_time", "obstacle", "initial", "force_delta", "obstacle_delta", "initial_delta"],
    ),
    ("extension", &["levels", "height", "ratio", "data", "batch"]),
    ("suite", &["instances", "orders"]),
];

struct Entry {
    value: String,
    line: usize,
}

fn list<T>(field: &str, s: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    s.split(',').map(|p| item(field, p.trim())).collect()
}

/// Parses and validates a configuration; missing keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: HashMap<(String, String), Entry> = HashMap::new();
    let mut seen_sections: HashMap<String, usize> = HashMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse {
                    line,
                    msg: "unterminated section header".to_string(),
                })?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            if let Some(first) = seen_sections.insert(name.to_string(), line) {
                return Err(ConfigError::Duplicate {
                    key: format!("[{name}]"),
                    first,
                    second: line,
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = t.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            msg: format!("expected `key = value`, found `{t}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                msg: "empty key".to_string(),
            });
        }
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::UnknownKey {
                section: section.clone(),
                key: key.to_string(),
                line,
            });
        }
        let slot = (section.clone(), key.to_string());
        if let Some(prev) = entries.get(&slot) {
            return Err(ConfigError::Duplicate {
                key: key.to_string(),
                first: prev.line,
                second: line,
            });
        }
        entries.insert(
            slot,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let get = |sec: &str, key: &str| entries.get(&(sec.to_string(), key.to_string())).map(|e| e.value.as_str());
    let mut cfg = RunConfig::default();

    if let Some(v) = get("", "command") {
        cfg.command = Some(v.parse().map_err(|m: String| invalid("command", m))?);
    }
    if let Some(v) = get("", "seed") {
        cfg.seed = v.parse().map_err(|_| invalid("seed", format!("`{v}` is not an unsigned integer")))?;
    }
    if let Some(v) = get("", "output_dir") {
        cfg.output_dir = Some(PathBuf::from(v));
    }

    if let Some(v) = get("domain", "lengths") {
        cfg.domain.lengths = list("lengths", v, num)?;
    }
    if let Some(v) = get("domain", "cells") {
        cfg.domain.cells = list("cells", v, count)?;
    }
    if cfg.domain.lengths.len() == 1 && cfg.domain.cells.len() == 2 {
        cfg.domain.lengths.push(cfg.domain.lengths[0]);
    }

    if let Some(v) = get("operator", "s") {
        cfg.s = num("s", v)?;
    }
    if let Some(v) = get("operator", "shift") {
        cfg.shift = num("shift", v)?;
    }

    let sv = &mut cfg.solver;
    if let Some(v) = get("solver", "omega") {
        sv.omega = num("omega", v)?;
    }
    if let Some(v) = get("solver", "tol") {
        sv.tol = num("tol", v)?;
    }
    if let Some(v) = get("solver", "residual_tol") {
        sv.residual_tol = num("residual_tol", v)?;
    }
    if let Some(v) = get("solver", "act_tol") {
        sv.act_tol = num("act_tol", v)?;
    }
    if let Some(v) = get("solver", "max_iter") {
        sv.max_iter = count("max_iter", v)?;
    }
    if let Some(v) = get("solver", "oracle_cap") {
        sv.oracle_cap = count("oracle_cap", v)?;
    }
    if let Some(v) = get("solver", "trials") {
        sv.trials = count("trials", v)?;
    }
    if let Some(v) = get("solver", "method") {
        sv.method = match v {
            "auto" => SolverMethod::Auto,
            "psor" => SolverMethod::Psor,
            "active-set" => SolverMethod::ActiveSet,
            _ => return Err(invalid("method", format!("`{v}` is not one of auto, psor, active-set"))),
        };
    }

    if let Some(v) = get("time", "horizon") {
        cfg.time.horizon = Some(num("horizon", v)?);
    }
    if let Some(v) = get("time", "steps") {
        cfg.time.steps = Some(count("steps", v)?);
    }
    if let Some(v) = get("time", "stop_tol") {
        cfg.time.stop_tol = num("stop_tol", v)?;
    }
    if let Some(v) = get("time", "asymp_tol") {
        cfg.time.asymp_tol = num("asymp_tol", v)?;
    }

    let pr = &mut cfg.problem;
    for (key, slot) in [
        ("force", &mut pr.force),
        ("obstacle", &mut pr.obstacle),
        ("initial", &mut pr.initial),
        ("force_delta", &mut pr.force_delta),
        ("obstacle_delta", &mut pr.obstacle_delta),
        ("initial_delta", &mut pr.initial_delta),
    ] {
        if let Some(v) = get("problem", key) {
            *slot = Profile::parse(key, v)?;
        }
    }
    if let Some(v) = get("problem", "force_time") {
        pr.force_time = TimeProfile::parse("force_time", v)?;
    }

    let ex = &mut cfg.extension;
    if let Some(v) = get("extension", "levels") {
        ex.levels = list("levels", v, count)?;
    }
    if let Some(v) = get("extension", "height") {
        ex.height = Some(num("height", v)?);
    }
    if let Some(v) = get("extension", "ratio") {
        ex.ratio = Some(num("ratio", v)?);
    }
    if let Some(v) = get("extension", "data") {
        ex.data = Profile::parse("data", v)?;
    }
    if let Some(v) = get("extension", "batch") {
        ex.batch = count("batch", v)?;
    }

    if let Some(v) = get("suite", "instances") {
        cfg.suite.instances = count("instances", v)?;
    }
    if let Some(v) = get("suite", "orders") {
        cfg.suite.orders = list("orders", v, num)?;
    }

    cfg.validate()?;
    Ok(cfg)
}

fn check_order(field: &str, s: f64) -> Result<(), ConfigError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{s} is outside (0, 1)")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.domain.spec()?;
        check_order("s", self.s)?;
        if self.shift < 0.0 {
            return Err(invalid("shift", "must be nonnegative"));
        }
        self.solver.validate().map_err(|e| match e {
            fracvi::Error::InvalidParameter { name, reason, .. } => invalid(name, reason),
            other => invalid("solver", other.to_string()),
        })?;
        if self.time.horizon.is_some_and(|h| !(h > 0.0)) {
            return Err(invalid("horizon", "must be positive"));
        }
        if self.time.steps == Some(0) {
            return Err(invalid("steps", "need at least one step"));
        }
        if !(self.time.stop_tol > 0.0) {
            return Err(invalid("stop_tol", "must be positive"));
        }
        if !(self.time.asymp_tol > 0.0) {
            return Err(invalid("asymp_tol", "must be positive"));
        }
        if self.extension.levels.is_empty() || self.extension.levels.iter().any(|m| *m < 8) {
            return Err(invalid("levels", "every level needs at least 8 cells"));
        }
        if let Some(r) = self.extension.ratio {
            if !(r > 1.0 && r <= 2.0) {
                return Err(invalid("ratio", "must lie in (1, 2]"));
            }
        }
        if let Some(h) = self.extension.height {
            if !(h > 0.0) {
                return Err(invalid("height", "must be positive"));
            }
        }
        if self.extension.batch == 0 {
            return Err(invalid("batch", "must be positive"));
        }
        if self.suite.instances == 0 {
            return Err(invalid("instances", "must be positive"));
        }
        for s in &self.suite.orders {
            check_order("orders", *s)?;
        }
        Ok(())
    }

    /// Resolves relative `file(...)` profile paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let pr = &mut self.problem;
        for p in [
            &mut pr.force,
            &mut pr.obstacle,
            &mut pr.initial,
            &mut pr.force_delta,
            &mut pr.obstacle_delta,
            &mut pr.initial_delta,
            &mut self.extension.data,
        ] {
            if let Profile::File(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_poisson_config_fills_defaults() {
        let cfg = parse_config(
            "command = solve-poisson\n[domain]\nlengths = 1.0\ncells = 16\n[operator]\ns = 0.3\n[problem]\nforce = sine(2)\n",
        )
        .unwrap();
        assert_eq!(cfg.command, Some(Command::SolvePoisson));
        assert_eq!(cfg.s, 0.3);
        assert_eq!(cfg.shift, 0.0);
        assert_eq!(cfg.problem.force, Profile::Sine(2.0));
        assert_eq!(cfg.solver.omega, 1.5);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn order_out_of_range_names_s() {
        let err = parse_config("[operator]\ns = 1.5\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "s"), "{err}");
    }

    #[test]
    fn duplicate_key_reports_both_lines() {
        let err = parse_config("[operator]\ns = 0.2\n# again\ns = 0.4\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Duplicate {
                key: "s".to_string(),
                first: 2,
                second: 4
            }
        );
        assert!(err.to_string().contains("lines 2 and 4"));
    }

    #[test]
    fn unknown_keys_and_sections_are_located() {
        let err = parse_config("[solver]\nomega = 1.2\nrelax = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 3, .. }));
        let err = parse_config("\n[mesh]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
        let err = parse_config("just words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn profiles_and_lists() {
        let cfg = parse_config(
            "[domain]\nlengths = 1, 2\ncells = 8, 6\n[problem]\nobstacle = hat(0.3)\ninitial = mode(2, -1.5)\nforce_time = ramp(0.5)\n[extension]\nlevels = 16, 32\n",
        )
        .unwrap();
        assert_eq!(cfg.domain.cells, vec![8, 6]);
        assert_eq!(cfg.problem.obstacle, Profile::Hat(0.3));
        assert_eq!(cfg.problem.initial, Profile::Mode(2, -1.5));
        assert_eq!(cfg.problem.force_time, TimeProfile::Ramp(0.5));
        assert_eq!(cfg.extension.levels, vec![16, 32]);
        assert!(parse_config("[problem]\nforce = wave(1)\n").is_err());
        assert!(parse_config("[problem]\nforce = mode(0, 1)\n").is_err());
        assert!(parse_config("[extension]\nlevels = 4\n").is_err());
    }

    #[test]
    fn square_shorthand_repeats_length() {
        let cfg = parse_config("[domain]\nlengths = 2\ncells = 4, 4\n").unwrap();
        assert_eq!(cfg.domain.lengths, vec![2.0, 2.0]);
    }

    #[test]
    fn solver_fields_are_validated_by_name() {
        let err = parse_config("[solver]\nomega = 2.5\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "omega"));
        let err = parse_config("[solver]\nmethod = newton\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "method"));
    }
}
