use crate::lvm::Opcode;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Explicit,
    Symbolic,
    Gp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Explicit, StrategyKind::Symbolic, StrategyKind::Gp];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Explicit => "explicit",
            StrategyKind::Symbolic => "symbolic",
            StrategyKind::Gp => "gp",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::BadValue("strategies".into(), s.into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    /// Strategies take turns on one thread, one work quantum each.
    Lockstep,
    /// One thread per strategy; the first answer cancels the rest.
    Threaded,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{0}`: `{1}`")]
    BadValue(String, String),
    #[error("line `{0}` is not of the form key=value")]
    Syntax(String),
}

/// Everything that steers a solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Race participants, in round-robin order.
    pub strategies: Vec<StrategyKind>,
    pub seed: u64,
    pub population: usize,
    pub crossover: f64,
    pub mutation: f64,
    /// Domains of at most `2^exhaustive_cap` points are verified by enumeration.
    pub exhaustive_cap: u32,
    pub samples: usize,
    /// Run the symbolic falsification query when the domain is too large to enumerate.
    pub symbolic_verify: bool,
    pub timeout: Option<Duration>,
    pub opcodes: Vec<Opcode>,
    /// Opcodes the symbolic strategy refuses to encode.
    pub symbolic_disable: Vec<Opcode>,
    pub max_length: Option<usize>,
    pub initial_width: u32,
    pub target_width: Option<u32>,
    pub generalize_cap: usize,
    pub explicit_quantum: usize,
    pub symbolic_conflicts: i32,
    pub scheduler: Scheduler,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            strategies: StrategyKind::ALL.to_vec(),
            seed: 1,
            population: 200,
            crossover: 0.8,
            mutation: 0.05,
            exhaustive_cap: 20,
            samples: 100_000,
            symbolic_verify: true,
            timeout: None,
            opcodes: Opcode::ALL.to_vec(),
            symbolic_disable: Vec::new(),
            max_length: None,
            initial_width: 4,
            target_width: None,
            generalize_cap: 216,
            explicit_quantum: 4096,
            symbolic_conflicts: 2000,
            scheduler: Scheduler::Lockstep,
        }
    }
}

fn list<T>(key: &str, v: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| ConfigError::BadValue(key.into(), s.into())))
        .collect()
}

impl SolverConfig {
    /// Whether every opcode is allowed, which the length bound for UNSAT needs.
    pub fn full_opcode_set(&self) -> bool {
        Opcode::ALL.iter().all(|o| self.opcodes.contains(o))
    }

    /// Sets one option by name, as in the key=value format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue(key.into(), value.into());
        let num = |v: &str| v.parse::<u64>().map_err(|_| bad());
        let float = |v: &str| v.parse::<f64>().ok().filter(|p| (0.0..=1.0).contains(p)).ok_or_else(bad);
        let opt = |v: &str| -> Result<Option<u64>, ConfigError> {
            if v == "none" {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        };
        match key {
            "strategies" => {
                let s = list(key, value, |s| s.parse().ok())?;
                if s.is_empty() {
                    return Err(bad());
                }
                self.strategies = s;
            }
            "seed" => self.seed = num(value)?,
            "population" => self.population = num(value)?.max(2) as usize,
            "crossover" => self.crossover = float(value)?,
            "mutation" => self.mutation = float(value)?,
            "exhaustive_cap" => self.exhaustive_cap = num(value)?.min(64) as u32,
            "samples" => self.samples = num(value)? as usize,
            "symbolic_verify" => self.symbolic_verify = value.parse().map_err(|_| bad())?,
            "timeout" => self.timeout = parse_duration(value).ok_or_else(bad)?,
            "opcodes" => {
                self.opcodes = if value == "all" { Opcode::ALL.to_vec() } else { list(key, value, Opcode::from_mnemonic)? };
                if self.opcodes.is_empty() {
                    return Err(bad());
                }
            }
            "symbolic_disable" => self.symbolic_disable = list(key, value, Opcode::from_mnemonic)?,
            "max_length" => self.max_length = opt(value)?.map(|v| v.max(1) as usize),
            "initial_width" => {
                self.initial_width = num(value).ok().filter(|w| (1..=64).contains(w)).ok_or_else(bad)? as u32
            }
            "target_width" => {
                self.target_width = match opt(value)? {
                    None => None,
                    Some(w) if (1..=64).contains(&w) => Some(w as u32),
                    Some(_) => return Err(bad()),
                }
            }
            "generalize_cap" => self.generalize_cap = num(value)? as usize,
            "explicit_quantum" => self.explicit_quantum = num(value)?.max(1) as usize,
            "symbolic_conflicts" => self.symbolic_conflicts = num(value)?.clamp(1, i32::MAX as u64) as i32,
            "scheduler" => {
                self.scheduler = match value {
                    "lockstep" => Scheduler::Lockstep,
                    "threaded" => Scheduler::Threaded,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax(line.into()))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = SolverConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }
}

/// `180`, `180s`, `500ms`, `3m` or `none`.
pub fn parse_duration(s: &str) -> Option<Option<Duration>> {
    if s == "none" {
        return Some(None);
    }
    let (num, scale) = if let Some(v) = s.strip_suffix("ms") {
        (v, 0.001)
    } else if let Some(v) = s.strip_suffix('s') {
        (v, 1.0)
    } else if let Some(v) = s.strip_suffix('m') {
        (v, 60.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = num.trim().parse().ok()?;
    (v >= 0.0 && v.is_finite()).then(|| Some(Duration::from_secs_f64(v * scale)))
}
