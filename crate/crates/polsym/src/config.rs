//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment; keys are case-sensitive.
//! Every key is validated before any computation starts, and unknown or
//! repeated keys are errors.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use polsym_core::energy::catalogue;
use polsym_core::rearrange::ScheduleMode;
use polsym_core::GridSpec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Symmetrize,
    Verify,
    Minimize,
    PolyaSzego,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Symmetrize => "symmetrize",
            Self::Verify => "verify",
            Self::Minimize => "minimize",
            Self::PolyaSzego => "polya-szego",
        }
    }
}

impl FromStr for Command {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "symmetrize" => Ok(Self::Symmetrize),
            "verify" => Ok(Self::Verify),
            "minimize" => Ok(Self::Minimize),
            "polya-szego" => Ok(Self::PolyaSzego),
            _ => Err(()),
        }
    }
}

/// Integrand used by the `polya-szego` workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandKind {
    /// `b^p`.
    Power,
    /// `(1 + 1/(1 + s)) b^2`.
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Gaussian,
    Bumps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMethod {
    Fft,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub grid: GridSpec,
    pub seed: u64,
    pub model: String,
    /// Number of components.
    pub m: usize,
    /// Exponent of the model, the distance monitor and the `power` integrand.
    pub p: f64,

    pub input: Option<PathBuf>,
    pub schedule: ScheduleMode,
    pub max_iter: usize,
    pub tol: f64,

    pub trials: usize,
    pub c_tol: f64,
    pub integrand: IntegrandKind,
    pub assumption_trials: usize,

    pub constraints: Vec<f64>,
    pub eta: f64,
    pub eta_growth: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub k_pol: usize,
    pub interleave_until: Option<usize>,
    pub init: InitKind,
    pub init_width: Option<f64>,
    pub convolution: ConvolutionMethod,
    pub dilations: Vec<f64>,
}

pub const KEYS: [&str; 27] = [
    "command",
    "dim",
    "n",
    "half_width",
    "seed",
    "model",
    "m",
    "p",
    "input",
    "schedule",
    "max_iter",
    "tol",
    "trials",
    "c_tol",
    "integrand",
    "assumption_trials",
    "c",
    "eta",
    "eta_growth",
    "max_steps",
    "grad_tol",
    "k_pol",
    "interleave_until",
    "init",
    "init_width",
    "convolution",
    "dilations",
];

struct Entries {
    map: HashMap<String, (String, usize)>,
}

fn invalid(key: &str, line: usize, expected: &str, got: &str) -> Error {
    Error::Config(format!(
        "line {line}: invalid value for '{key}': expected {expected}, got '{got}'"
    ))
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.1)
    }

    fn parsed<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| invalid(key, line, expected, v)),
        }
    }

    fn required<T: FromStr>(&self, key: &str, expected: &str) -> Result<T> {
        self.parsed(key, expected)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed::<f64>(key, "a real number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(invalid(key, self.line(key), "a finite real number", &v.to_string()));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.real(key, default)?;
        if !(v > 0.0) {
            return Err(invalid(key, self.line(key), "a positive number", &v.to_string()));
        }
        Ok(v)
    }

    fn int(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key, "a non-negative integer")?.unwrap_or(default))
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x > 0.0)
                    .ok_or_else(|| invalid(key, line, "a comma-separated list of positive reals", v))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn choice<T>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T>
    where
        T: Copy,
    {
        let Some((v, line)) = self.raw(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                invalid(key, line, &format!("one of {}", names.join(", ")), v)
            })
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map: HashMap<String, (String, usize)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected 'key = value'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!("line {line}: expected 'key = value'")));
        }
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {line}: unknown key '{key}'")));
        }
        if map.contains_key(key) {
            return Err(Error::Config(format!("duplicate key at line {line}: '{key}'")));
        }
        map.insert(key.to_string(), (value.to_string(), line));
    }
    Ok(Entries { map })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = tokenize(text)?;

    let command = match e.raw("command") {
        None => None,
        Some((v, line)) => Some(v.parse::<Command>().map_err(|_| {
            invalid("command", line, "symmetrize, verify, minimize or polya-szego", v)
        })?),
    };

    let dim: usize = e.required("dim", "an integer")?;
    if !(1..=3).contains(&dim) {
        return Err(Error::Config(format!("line {}: dim must be 1, 2, or 3", e.line("dim"))));
    }
    let n: usize = e.required("n", "an integer")?;
    let half_width: f64 = e.required("half_width", "a real number")?;
    let grid = GridSpec::new(dim, n, half_width).map_err(|err| {
        let line = if err.to_string().contains("half-width") {
            e.line("half_width")
        } else {
            e.line("n")
        };
        Error::Config(format!("line {line}: {err}"))
    })?;

    let seed: u64 = e.parsed("seed", "a non-negative integer")?.unwrap_or(0);
    let p = e.real("p", 2.0)?;
    if !(p > 1.0) {
        return Err(invalid("p", e.line("p"), "a real number greater than 1", &p.to_string()));
    }
    let model = e.raw("model").map_or("example_paper", |v| v.0).to_string();
    let m_key: Option<usize> = e.parsed("m", "a positive integer")?;
    if m_key == Some(0) {
        return Err(invalid("m", e.line("m"), "a positive integer", "0"));
    }
    let built = catalogue::by_name(&model, dim, m_key.unwrap_or(1), p)
        .map_err(|err| Error::Config(format!("line {}: {err}", e.line("model"))))?;
    let m = built.m();
    if let Some(k) = m_key {
        if k != m {
            return Err(Error::Config(format!(
                "line {}: model '{model}' has {m} components, m = {k}",
                e.line("m")
            )));
        }
    }

    let schedule = e.choice(
        "schedule",
        ScheduleMode::Greedy,
        &[
            ("greedy", ScheduleMode::Greedy),
            ("random", ScheduleMode::Random),
            ("sweep", ScheduleMode::Sweep),
        ],
    )?;

    let constraints = match e.reals("c")? {
        None => vec![1.0; m],
        Some(c) if c.len() == m => c,
        Some(c) => {
            return Err(Error::Config(format!(
                "line {}: 'c' has {} values, model has {m} components",
                e.line("c"),
                c.len()
            )))
        }
    };

    let interleave_until = e.parsed("interleave_until", "a non-negative integer")?;
    let init_width = match e.raw("init_width") {
        None => None,
        Some(_) => Some(e.positive("init_width", 1.0)?),
    };

    let cfg = RunConfig {
        command,
        grid,
        seed,
        model,
        m,
        p,
        input: e.raw("input").map(|v| PathBuf::from(v.0)),
        schedule,
        max_iter: e.int("max_iter", 2000)?,
        tol: e.positive("tol", 1e-3)?,
        trials: e.int("trials", 200)?,
        c_tol: e.positive("c_tol", polsym_core::verify::DEFAULT_C_TOL)?,
        integrand: e.choice(
            "integrand",
            IntegrandKind::Power,
            &[("power", IntegrandKind::Power), ("saturating", IntegrandKind::Saturating)],
        )?,
        assumption_trials: e.int("assumption_trials", 1000)?,
        constraints,
        eta: e.positive("eta", 1.0)?,
        eta_growth: e.real("eta_growth", 1.5)?,
        max_steps: e.int("max_steps", 1000)?,
        grad_tol: e.real("grad_tol", 1e-6)?,
        k_pol: e.int("k_pol", 0)?,
        interleave_until,
        init: e.choice(
            "init",
            InitKind::Gaussian,
            &[("gaussian", InitKind::Gaussian), ("bumps", InitKind::Bumps)],
        )?,
        init_width,
        convolution: e.choice(
            "convolution",
            ConvolutionMethod::Fft,
            &[("fft", ConvolutionMethod::Fft), ("direct", ConvolutionMethod::Direct)],
        )?,
        dilations: e.reals("dilations")?.unwrap_or_else(|| vec![1.0, 0.5, 0.25, 0.125]),
    };

    for (key, v) in [("max_iter", cfg.max_iter), ("trials", cfg.trials), ("max_steps", cfg.max_steps)] {
        if v == 0 {
            return Err(invalid(key, e.line(key), "a positive integer", "0"));
        }
    }
    if !(cfg.eta_growth >= 1.0) {
        return Err(invalid("eta_growth", e.line("eta_growth"), "a real number >= 1", &cfg.eta_growth.to_string()));
    }
    if !(cfg.grad_tol >= 0.0) {
        return Err(invalid("grad_tol", e.line("grad_tol"), "a non-negative real", &cfg.grad_tol.to_string()));
    }
    Ok(cfg)
}

impl RunConfig {
    /// Checks that only make sense once the command is known.
    pub fn check_command(&self, command: Command) -> Result<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::Config(format!(
                    "config is for '{}' but '{}' was requested",
                    c.as_str(),
                    command.as_str()
                )));
            }
        }
        if command == Command::Minimize {
            let model = catalogue::by_name(&self.model, self.grid.dim(), self.m, self.p)?;
            if model.dim() != self.grid.dim() {
                return Err(Error::Config(format!(
                    "model '{}' is {}-dimensional, grid has dim = {}",
                    self.model,
                    model.dim(),
                    self.grid.dim()
                )));
            }
        }
        Ok(())
    }
}
