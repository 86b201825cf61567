//! Run configuration: line-oriented `key = value` with dotted sections.
//!
//! ```text
//! # comment lines start with '#'
//! lattice.n1 = 16
//! init.kind = random_bandlimited
//! output.csv_path = "run.csv"
//! ```
//!
//! Keys and defaults:
//!
//! | key | default |
//! |-----|---------|
//! | lattice.n1, lattice.n2, lattice.n3 | 16, 16, 17 |
//! | lattice.l1, lattice.l2, lattice.l3 | 2π |
//! | lattice.d_inner, lattice.k_inner, lattice.l_inner | 2, 16, 2π |
//! | lattice.lambda, lattice.dt | 1, 0.001 |
//! | init.kind | random_bandlimited (vacuum, random_bandlimited, abelian_wave) |
//! | init.seed, init.amplitude, init.max_mode | 1, 0.2, 2 |
//! | run.steps, run.scheme | 100, rk4 (rk4, midpoint) |
//! | run.diagnostics_every, run.snapshot_every | 10, 0 (0 disables snapshots) |
//! | matter.enabled, matter.mass, matter.sign_convention | false, 1, as-printed |
//! | output.csv_path, output.snapshot_dir | isodyn.csv, snapshots |
//! | output.wall_clock | false (wall_ms column reads 0 so runs stay byte-identical) |
//! | check.transform | rot:1,2 |
//!
//! `check.transform` names a catalog map: `identity`, `shift:c1,..,cD`,
//! `shear:a,b:<poly>` or `rot:a,b`, axes 1-based, `<poly>` a `+`-separated
//! list of `[coef*]sin[m]` / `[coef*]cos[m]` terms in X^b. Strings may be
//! wrapped in double quotes. Every key may appear at most once.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::algebra::VolumePreservingMap;
use crate::hamiltonian::Scheme;
use crate::lattice::LatticeSpec;
use crate::matter::SignConvention;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    Vacuum,
    RandomBandlimited,
    AbelianWave,
}

impl std::str::FromStr for InitKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vacuum" => Ok(InitKind::Vacuum),
            "random_bandlimited" => Ok(InitKind::RandomBandlimited),
            "abelian_wave" => Ok(InitKind::AbelianWave),
            _ => Err(format!("unknown init kind '{s}' (vacuum|random_bandlimited|abelian_wave)")),
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitKind::Vacuum => "vacuum",
            InitKind::RandomBandlimited => "random_bandlimited",
            InitKind::AbelianWave => "abelian_wave",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub kind: InitKind,
    pub seed: u64,
    pub amplitude: f64,
    pub max_mode: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunBlock {
    pub steps: usize,
    pub scheme: Scheme,
    pub diagnostics_every: usize,
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatterConfig {
    pub enabled: bool,
    pub mass: f64,
    pub sign_convention: SignConvention,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub csv_path: PathBuf,
    pub snapshot_dir: PathBuf,
    pub wall_clock: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub transform: VolumePreservingMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub init: InitConfig,
    pub run: RunBlock,
    pub matter: MatterConfig,
    pub output: OutputConfig,
    pub check: CheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeSpec::desk(),
            init: InitConfig { kind: InitKind::RandomBandlimited, seed: 1, amplitude: 0.2, max_mode: 2 },
            run: RunBlock { steps: 100, scheme: Scheme::Rk4, diagnostics_every: 10, snapshot_every: 0 },
            matter: MatterConfig { enabled: false, mass: 1.0, sign_convention: SignConvention::AsPrinted },
            output: OutputConfig { csv_path: "isodyn.csv".into(), snapshot_dir: "snapshots".into(), wall_clock: false },
            check: CheckConfig { transform: VolumePreservingMap::QuarterTurn { a: 0, b: 1 } },
        }
    }
}

pub const KEYS: &[&str] = &[
    "lattice.n1",
    "lattice.n2",
    "lattice.n3",
    "lattice.l1",
    "lattice.l2",
    "lattice.l3",
    "lattice.d_inner",
    "lattice.k_inner",
    "lattice.l_inner",
    "lattice.lambda",
    "lattice.dt",
    "init.kind",
    "init.seed",
    "init.amplitude",
    "init.max_mode",
    "run.steps",
    "run.scheme",
    "run.diagnostics_every",
    "run.snapshot_every",
    "matter.enabled",
    "matter.mass",
    "matter.sign_convention",
    "output.csv_path",
    "output.snapshot_dir",
    "output.wall_clock",
    "check.transform",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    Duplicate,
    Type,
    Constraint,
}

/// One problem; `line` is 1-based, 0 when it concerns a defaulted key.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {key}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub kind: ConfigErrorKind,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

fn unquote(v: &str) -> &str {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn num<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected {what}, got '{v}'"))
}

fn set(cfg: &mut RunConfig, key: &str, v: &str) -> Result<(), String> {
    let l = &mut cfg.lattice;
    let uint = "a non-negative integer";
    let real = "a real number";
    match key {
        "lattice.n1" => l.n1 = num(v, uint)?,
        "lattice.n2" => l.n2 = num(v, uint)?,
        "lattice.n3" => l.n3 = num(v, uint)?,
        "lattice.l1" => l.l1 = num(v, real)?,
        "lattice.l2" => l.l2 = num(v, real)?,
        "lattice.l3" => l.l3 = num(v, real)?,
        "lattice.d_inner" => l.d_inner = num(v, uint)?,
        "lattice.k_inner" => l.k_inner = num(v, uint)?,
        "lattice.l_inner" => l.l_inner = num(v, real)?,
        "lattice.lambda" => l.lambda = num(v, real)?,
        "lattice.dt" => l.dt = num(v, real)?,
        "init.kind" => cfg.init.kind = v.parse()?,
        "init.seed" => cfg.init.seed = num(v, uint)?,
        "init.amplitude" => cfg.init.amplitude = num(v, real)?,
        "init.max_mode" => cfg.init.max_mode = num(v, uint)?,
        "run.steps" => cfg.run.steps = num(v, uint)?,
        "run.scheme" => cfg.run.scheme = v.parse()?,
        "run.diagnostics_every" => cfg.run.diagnostics_every = num(v, uint)?,
        "run.snapshot_every" => cfg.run.snapshot_every = num(v, uint)?,
        "matter.enabled" => cfg.matter.enabled = parse_bool(v)?,
        "matter.mass" => cfg.matter.mass = num(v, real)?,
        "matter.sign_convention" => cfg.matter.sign_convention = v.parse().map_err(|e: crate::IsoError| e.to_string())?,
        "output.csv_path" => cfg.output.csv_path = nonempty(v)?.into(),
        "output.snapshot_dir" => cfg.output.snapshot_dir = nonempty(v)?.into(),
        "output.wall_clock" => cfg.output.wall_clock = parse_bool(v)?,
        "check.transform" => cfg.check.transform = VolumePreservingMap::parse(v).map_err(|e| e.to_string())?,
        _ => unreachable!("key list and setter disagree on {key}"),
    }
    Ok(())
}

fn nonempty(v: &str) -> Result<&str, String> {
    if v.is_empty() {
        Err("expected a non-empty path".into())
    } else {
        Ok(v)
    }
}

/// Validated config or every problem found, each with its line.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut cfg = RunConfig::default();
    let mut errs = Vec::new();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |key: &str, kind, message: String| ConfigError { line, key: key.to_string(), kind, message };
        let Some((k, v)) = t.split_once('=') else {
            errs.push(err("", ConfigErrorKind::Syntax, format!("expected 'key = value', got '{t}'")));
            continue;
        };
        let (k, v) = (k.trim(), unquote(v.trim()));
        let Some(&key) = KEYS.iter().find(|&&name| name == k) else {
            errs.push(err(k, ConfigErrorKind::UnknownKey, "unknown key".into()));
            continue;
        };
        if let Some((_, first)) = seen.iter().find(|(s, _)| *s == key) {
            errs.push(err(k, ConfigErrorKind::Duplicate, format!("already set on line {first}")));
            continue;
        }
        seen.push((key, line));
        if let Err(m) = set(&mut cfg, key, v) {
            errs.push(err(k, ConfigErrorKind::Type, m));
        }
    }
    if errs.is_empty() {
        let line_of = |key: &str| seen.iter().find(|(s, _)| *s == key).map_or(0, |(_, l)| *l);
        for (key, message) in constraint_violations(&cfg) {
            errs.push(ConfigError { line: line_of(key), key: key.to_string(), kind: ConfigErrorKind::Constraint, message });
        }
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errs))
    }
}

fn constraint_violations(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    if let Err(e) = cfg.lattice.validate() {
        let msg = e.to_string();
        let key = KEYS
            .iter()
            .filter(|k| k.starts_with("lattice."))
            .find(|k| msg.contains(&format!(": {} ", &k[8..])))
            .copied()
            .unwrap_or("lattice");
        out.push((key, msg));
    }
    if !(cfg.init.amplitude.is_finite() && cfg.init.amplitude >= 0.0) {
        out.push(("init.amplitude", "amplitude must be finite and >= 0".into()));
    }
    if cfg.init.kind == InitKind::AbelianWave && cfg.init.max_mode == 0 {
        out.push(("init.max_mode", "abelian_wave needs a wave number max_mode >= 1".into()));
    }
    if cfg.run.diagnostics_every == 0 {
        out.push(("run.diagnostics_every", "diagnostics_every must be >= 1".into()));
    }
    if !(cfg.matter.mass.is_finite() && cfg.matter.mass >= 0.0) {
        out.push(("matter.mass", "mass must satisfy m >= 0".into()));
    }
    if cfg.lattice.validate().is_ok() {
        if let Err(e) = cfg.check.transform.check_fits(&cfg.lattice) {
            out.push(("check.transform", e.to_string()));
        }
    }
    out
}

fn quote(p: &std::path::Path) -> String {
    format!("\"{}\"", p.display())
}

impl RunConfig {
    /// Every key with its value, in `KEYS` order; reals print exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let l = &self.lattice;
        let vals = [
            l.n1.to_string(),
            l.n2.to_string(),
            l.n3.to_string(),
            format!("{:?}", l.l1),
            format!("{:?}", l.l2),
            format!("{:?}", l.l3),
            l.d_inner.to_string(),
            l.k_inner.to_string(),
            format!("{:?}", l.l_inner),
            format!("{:?}", l.lambda),
            format!("{:?}", l.dt),
            self.init.kind.to_string(),
            self.init.seed.to_string(),
            format!("{:?}", self.init.amplitude),
            self.init.max_mode.to_string(),
            self.run.steps.to_string(),
            self.run.scheme.to_string(),
            self.run.diagnostics_every.to_string(),
            self.run.snapshot_every.to_string(),
            self.matter.enabled.to_string(),
            format!("{:?}", self.matter.mass),
            self.matter.sign_convention.to_string(),
            quote(&self.output.csv_path),
            quote(&self.output.snapshot_dir),
            self.output.wall_clock.to_string(),
            format!("\"{}\"", self.check.transform.render()),
        ];
        KEYS.iter().copied().zip(vals).collect()
    }

    pub fn serialize(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
