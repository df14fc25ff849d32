//! Flags, the key-value config file, and the merged run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

/// Bad user input. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(param: &str, reason: impl fmt::Display) -> ValidationError {
    ValidationError(format!("invalid `{param}`: {reason}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `a:b:steps`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            1 => vec![self.start],
            s => (0..s).map(|i| self.start + (self.end - self.start) * i as f64 / (s - 1) as f64).collect(),
        }
    }
}

/// A real number, optionally written as a fraction `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            p / q
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(value)
}

pub fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, steps] = parts[..] else {
        return Err(format!("`{s}` is not of the form a:b:steps"));
    };
    let steps: usize = steps.trim().parse().map_err(|_| format!("`{steps}` is not a step count"))?;
    if steps == 0 {
        return Err("step count must be at least 1".into());
    }
    Ok(Range { start: parse_real(a)?, end: parse_real(b)?, steps })
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|v| v.trim().parse().map_err(|_| format!("`{v}` is not a non-negative integer"))).collect()
}

pub fn parse_real_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

// Aliases keep clap from treating the lists as repeated flags.
type SizeList = Vec<usize>;
type RealList = Vec<f64>;

/// Every flag, all optional so the config file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Ensemble size N.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated ensemble sizes.
    #[arg(long, global = true, value_parser = parse_usize_list)]
    pub n_list: Option<SizeList>,
    /// Annealing parameter (terminal Γ for `anneal`). Fractions like 2/3 are accepted.
    #[arg(long, global = true, value_parser = parse_real)]
    pub gamma: Option<f64>,
    /// Γ sweep as a:b:steps.
    #[arg(long, global = true, value_parser = parse_range)]
    pub gamma_range: Option<Range>,
    /// Scale-free parameter sweep as a:b:steps (`landmarks`).
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub a_range: Option<Range>,
    /// Collective dephasing variance.
    #[arg(long, global = true, value_parser = parse_real)]
    pub kappa0: Option<f64>,
    #[arg(long, global = true, value_parser = parse_real)]
    pub zeta_z: Option<f64>,
    #[arg(long, global = true, value_parser = parse_real)]
    pub zeta_plus: Option<f64>,
    #[arg(long, global = true, value_parser = parse_real)]
    pub zeta_minus: Option<f64>,
    /// Comma-separated τ/N values.
    #[arg(long, global = true, value_parser = parse_real_list)]
    pub tau_ladder: Option<RealList>,
    /// Landscape nodes per axis (`quench`).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Number of eigenstates to tabulate or track.
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Optimizer seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output root; each run lands in a content-addressed subdirectory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Recompute even when a complete cached run exists.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Flat `key = value` file using the flag names; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Names of physical parameters that were supplied, for unused-flag warnings.
pub const PHYSICAL_KEYS: [&str; 13] = [
    "n",
    "n-list",
    "gamma",
    "gamma-range",
    "a-range",
    "kappa0",
    "zeta-z",
    "zeta-plus",
    "zeta-minus",
    "tau-ladder",
    "grid",
    "levels",
    "seed",
];

impl Flags {
    /// Fills unset fields from the config file named by `--config`.
    pub fn with_config_file(self) -> Result<Self, ValidationError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
        Ok(self.or(Self::from_text(&text, &path)?))
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self, ValidationError> {
        let mut f = Flags::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let where_ = || format!("{}:{}", origin.display(), lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ValidationError(format!("{}: expected `key = value`", where_())))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            let value = value.trim();
            if seen.insert(key.clone(), ()).is_some() {
                return Err(ValidationError(format!("{}: `{key}` given twice", where_())));
            }
            let bad = |e: String| ValidationError(format!("{}: invalid `{key}`: {e}", where_()));
            match key.as_str() {
                "n" => f.n = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?),
                "n-list" => f.n_list = Some(parse_usize_list(value).map_err(bad)?),
                "gamma" => f.gamma = Some(parse_real(value).map_err(bad)?),
                "gamma-range" => f.gamma_range = Some(parse_range(value).map_err(bad)?),
                "a-range" => f.a_range = Some(parse_range(value).map_err(bad)?),
                "kappa0" => f.kappa0 = Some(parse_real(value).map_err(bad)?),
                "zeta-z" => f.zeta_z = Some(parse_real(value).map_err(bad)?),
                "zeta-plus" => f.zeta_plus = Some(parse_real(value).map_err(bad)?),
                "zeta-minus" => f.zeta_minus = Some(parse_real(value).map_err(bad)?),
                "tau-ladder" => f.tau_ladder = Some(parse_real_list(value).map_err(bad)?),
                "grid" => f.grid = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?),
                "levels" => f.levels = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?),
                "seed" => f.seed = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?),
                "out" => f.out = Some(PathBuf::from(value)),
                "format" => {
                    f.format = Some(Format::from_str(value, true).map_err(|_| bad(format!("`{value}` is not csv or json")))?)
                }
                "jobs" => f.jobs = Some(value.parse().map_err(|_| bad(format!("`{value}` is not an integer")))?),
                "no-cache" => f.no_cache = parse_bool(value).map_err(bad)?,
                _ => return Err(ValidationError(format!("{}: unknown key `{key}`", where_()))),
            }
        }
        Ok(f)
    }

    /// Field-wise `self` first, then `other`.
    pub fn or(self, other: Flags) -> Flags {
        Flags {
            n: self.n.or(other.n),
            n_list: self.n_list.or(other.n_list),
            gamma: self.gamma.or(other.gamma),
            gamma_range: self.gamma_range.or(other.gamma_range),
            a_range: self.a_range.or(other.a_range),
            kappa0: self.kappa0.or(other.kappa0),
            zeta_z: self.zeta_z.or(other.zeta_z),
            zeta_plus: self.zeta_plus.or(other.zeta_plus),
            zeta_minus: self.zeta_minus.or(other.zeta_minus),
            tau_ladder: self.tau_ladder.or(other.tau_ladder),
            grid: self.grid.or(other.grid),
            levels: self.levels.or(other.levels),
            seed: self.seed.or(other.seed),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            jobs: self.jobs.or(other.jobs),
            no_cache: self.no_cache || other.no_cache,
            config: self.config,
        }
    }

    pub fn supplied(&self) -> Vec<&'static str> {
        let set = [
            self.n.is_some(),
            self.n_list.is_some(),
            self.gamma.is_some(),
            self.gamma_range.is_some(),
            self.a_range.is_some(),
            self.kappa0.is_some(),
            self.zeta_z.is_some(),
            self.zeta_plus.is_some(),
            self.zeta_minus.is_some(),
            self.tau_ladder.is_some(),
            self.grid.is_some(),
            self.levels.is_some(),
            self.seed.is_some(),
        ];
        PHYSICAL_KEYS.iter().zip(set).filter(|(_, s)| *s).map(|(k, _)| *k).collect()
    }
}

/// Output and scheduling settings; none of these change numeric content
/// except the format, which is part of the cache key.
#[derive(Debug, Clone)]
pub struct Settings {
    pub out: PathBuf,
    pub format: Format,
    pub jobs: usize,
    pub no_cache: bool,
}

impl Settings {
    pub fn from_flags(f: &Flags) -> Result<Self, ValidationError> {
        let jobs = match f.jobs {
            Some(0) => return Err(invalid("jobs", "must be at least 1")),
            Some(k) => k,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(Self {
            out: f.out.clone().unwrap_or_else(|| PathBuf::from("goldilocks-out")),
            format: f.format.unwrap_or(Format::Csv),
            jobs,
            no_cache: f.no_cache,
        })
    }
}
