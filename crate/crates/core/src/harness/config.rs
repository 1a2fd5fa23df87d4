//! Scenario and grid configuration, including the flat `key = value` file format.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::landscape::{InfluenceMatrix, PatternId, BUILTIN_DECISIONS, DEFAULT_ENUMERATION_CAP};
use crate::organization::Strategy;

/// Periods between re-allocation rounds; `Never` is the fixed benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interval {
    Every(usize),
    Never,
}

impl Interval {
    pub fn is_reallocation(self, period: usize) -> bool {
        match self {
            Interval::Every(tau) => period.is_multiple_of(tau),
            Interval::Never => false,
        }
    }

    pub fn period_count(self) -> Option<usize> {
        match self {
            Interval::Every(tau) => Some(tau),
            Interval::Never => None,
        }
    }

    /// Number of re-allocation rounds within `periods`.
    pub fn rounds(self, periods: usize) -> usize {
        self.period_count().map_or(0, |tau| periods / tau)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Interval::Every(tau) => tau as f64,
            Interval::Never => f64::INFINITY,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Every(tau) => write!(f, "{tau}"),
            Interval::Never => f.write_str("inf"),
        }
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" | "never" => Ok(Interval::Never),
            _ => match s.parse::<usize>() {
                Ok(0) | Err(_) => Err(Error::Config(format!(
                    "tau must be a positive integer or `inf`, got `{s}`"
                ))),
                Ok(tau) => Ok(Interval::Every(tau)),
            },
        }
    }
}

/// Whether per-period traces are written to `trace.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    Full,
    None,
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub strategy: Strategy,
    pub a: f64,
    pub tau: Interval,
    pub pattern: PatternId,
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub periods: usize,
    pub runs: usize,
    pub sigma: f64,
    pub master_seed: u64,
    /// Normalize performance by the enumerated global maximum.
    pub normalize: bool,
    pub enumeration_cap: usize,
    /// Period at which modularity is read; `None` means the last period.
    pub modularity_period: Option<usize>,
    /// Matrix used when `pattern` is `custom`.
    pub matrix: Option<Arc<InfluenceMatrix>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            strategy: Strategy::PerformanceBased,
            a: 0.5,
            tau: Interval::Every(15),
            pattern: PatternId::SmallDiag,
            n: BUILTIN_DECISIONS,
            m: 5,
            q: 5,
            periods: 200,
            runs: 800,
            sigma: 0.05,
            master_seed: 0,
            normalize: true,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            modularity_period: None,
            matrix: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if !(self.a > 0.0 && self.a <= 1.0) {
            return err(format!("a = {} outside (0, 1]", self.a));
        }
        if self.m < 2 {
            return err(format!("m = {} agents; at least two are required", self.m));
        }
        if self.n == 0 || !self.n.is_multiple_of(self.m) {
            return err(format!("m = {} must divide n = {}", self.m, self.n));
        }
        if self.q == 0 || self.q >= self.n {
            return err(format!("q = {} must satisfy 1 <= q < n = {}", self.q, self.n));
        }
        if self.n / self.m > self.q {
            return err(format!(
                "initial portfolios of n/m = {} exceed q = {}",
                self.n / self.m,
                self.q
            ));
        }
        if self.periods == 0 {
            return err("periods must be at least 1".into());
        }
        if self.runs == 0 {
            return err("runs must be at least 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return err(format!("sigma = {} must be finite and >= 0", self.sigma));
        }
        if self.normalize && self.n > self.enumeration_cap {
            return Err(Error::EnumerationCap {
                n: self.n,
                cap: self.enumeration_cap,
            });
        }
        if let Some(p) = self.modularity_period {
            if p == 0 || p > self.periods {
                return err(format!("modularity_period = {p} outside 1..={}", self.periods));
            }
        }
        match (self.pattern, &self.matrix) {
            (PatternId::Custom, None) => err("pattern = custom requires matrix_file".into()),
            (PatternId::Custom, Some(matrix)) => {
                if matrix.n() != self.n {
                    return err(format!(
                        "matrix_file has {} decisions but n = {}",
                        matrix.n(),
                        self.n
                    ));
                }
                match matrix.uniform_k() {
                    Some(k) if k > 0 => Ok(()),
                    _ => err("custom matrix needs the same K >= 1 in every row for modularity".into()),
                }
            }
            (_, _) if self.n != BUILTIN_DECISIONS => err(format!(
                "built-in pattern {} is defined for n = {BUILTIN_DECISIONS}",
                self.pattern
            )),
            _ => Ok(()),
        }
    }

    pub fn modularity_period(&self) -> usize {
        self.modularity_period.unwrap_or(self.periods)
    }
}

/// A full factorial experiment: strategy × a × tau × pattern, `runs` runs each.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub base: ScenarioConfig,
    pub strategies: Vec<Strategy>,
    pub a_values: Vec<f64>,
    pub taus: Vec<Interval>,
    pub patterns: Vec<PatternId>,
    /// Give both strategies the same run seeds (common random numbers).
    pub common_random_numbers: bool,
    pub trace: TraceMode,
}

/// The incentive grid 0.05, 0.10, ..., 1.00.
pub fn default_a_grid() -> Vec<f64> {
    (1..=20).map(|k| f64::from(k) * 5.0 / 100.0).collect()
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            base: ScenarioConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            a_values: default_a_grid(),
            taus: vec![
                Interval::Every(5),
                Interval::Every(15),
                Interval::Every(25),
                Interval::Every(35),
                Interval::Never,
            ],
            patterns: PatternId::BUILTIN.to_vec(),
            common_random_numbers: false,
            trace: TraceMode::Full,
        }
    }
}

/// One cell of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub index: usize,
    pub config: ScenarioConfig,
}

const KEYS: &[&str] = &[
    "strategy",
    "a",
    "tau",
    "pattern",
    "n",
    "m",
    "q",
    "periods",
    "runs",
    "sigma",
    "master_seed",
    "normalize",
    "enumeration_cap",
    "modularity_period",
    "matrix_file",
    "common_random_numbers",
    "trace",
];

fn canonical_key(key: &str) -> &str {
    match key {
        "decisions" => "n",
        "agents" => "m",
        "capacity" => "q",
        "t" => "periods",
        "s" => "runs",
        "seed" => "master_seed",
        other => other,
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{value}`"))),
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `0.05, 0.5` or the range form `start:step:end` (inclusive).
pub fn parse_a_values(value: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in split_list(value) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        match parts.as_slice() {
            [single] => out.push(parse_scalar::<f64>("a", single)?),
            [start, step, end] => {
                let (start, step, end): (f64, f64, f64) =
                    (parse_scalar("a", start)?, parse_scalar("a", step)?, parse_scalar("a", end)?);
                if !(step > 0.0) || end < start {
                    return Err(Error::Config(format!("a: invalid range `{item}`")));
                }
                let count = ((end - start) / step + 1e-9).floor() as usize + 1;
                // rounding keeps 0.05:0.05:1 on the decimal grid
                out.extend((0..count).map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10));
            }
            _ => return Err(Error::Config(format!("a: invalid item `{item}`"))),
        }
    }
    Ok(out)
}

fn non_empty_unique<T: Clone + fmt::Debug>(key: &str, values: Vec<T>, id: impl Fn(&T) -> String) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    let mut seen = BTreeSet::new();
    for v in &values {
        if !seen.insert(id(v)) {
            return Err(Error::Config(format!("{key}: duplicate value {v:?}")));
        }
    }
    Ok(values)
}

impl GridConfig {
    /// Parses the `key = value` format; `#` starts a comment. `base_dir`
    /// resolves a relative `matrix_file`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut grid = GridConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = canonical_key(key.trim());
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            grid.apply(key, value, base_dir)?;
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridConfig::parse(&text, path.parent())
    }

    fn apply(&mut self, key: &str, value: &str, base_dir: Option<&Path>) -> Result<()> {
        let base = &mut self.base;
        match key {
            "strategy" => {
                self.strategies = split_list(value).map(str::parse).collect::<Result<_>>()?;
            }
            "a" => self.a_values = parse_a_values(value)?,
            "tau" => self.taus = split_list(value).map(str::parse).collect::<Result<_>>()?,
            "pattern" => self.patterns = split_list(value).map(str::parse).collect::<Result<_>>()?,
            "n" => base.n = parse_scalar(key, value)?,
            "m" => base.m = parse_scalar(key, value)?,
            "q" => base.q = parse_scalar(key, value)?,
            "periods" => base.periods = parse_scalar(key, value)?,
            "runs" => base.runs = parse_scalar(key, value)?,
            "sigma" => base.sigma = parse_scalar(key, value)?,
            "master_seed" => base.master_seed = parse_scalar(key, value)?,
            "normalize" => base.normalize = parse_bool(key, value)?,
            "enumeration_cap" => base.enumeration_cap = parse_scalar(key, value)?,
            "modularity_period" => base.modularity_period = Some(parse_scalar(key, value)?),
            "matrix_file" => {
                let path = Path::new(value);
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.to_path_buf(),
                };
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                base.matrix = Some(Arc::new(InfluenceMatrix::parse(&text)?));
            }
            "common_random_numbers" => self.common_random_numbers = parse_bool(key, value)?,
            "trace" => {
                self.trace = match value {
                    "full" => TraceMode::Full,
                    "none" => TraceMode::None,
                    _ => return Err(Error::Config(format!("trace: expected full or none, got `{value}`"))),
                }
            }
            _ => unreachable!("key checked against KEYS"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        non_empty_unique("strategy", self.strategies.clone(), |s| s.to_string())?;
        non_empty_unique("a", self.a_values.clone(), |a| a.to_bits().to_string())?;
        non_empty_unique("tau", self.taus.clone(), |t| t.to_string())?;
        non_empty_unique("pattern", self.patterns.clone(), |p| p.to_string())?;
        for scenario in self.scenarios() {
            scenario.config.validate()?;
        }
        Ok(())
    }

    /// Scenarios in canonical order: strategy, then a, then tau, then pattern.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &strategy in &self.strategies {
            for &a in &self.a_values {
                for &tau in &self.taus {
                    for &pattern in &self.patterns {
                        out.push(Scenario {
                            index: out.len(),
                            config: ScenarioConfig {
                                strategy,
                                a,
                                tau,
                                pattern,
                                ..self.base.clone()
                            },
                        });
                    }
                }
            }
        }
        out
    }

    pub fn scenario_count(&self) -> usize {
        self.strategies.len() * self.a_values.len() * self.taus.len() * self.patterns.len()
    }
}
