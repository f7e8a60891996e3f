//! Run configuration: a flat `key = value` file with `#` comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::error::CliError;

/// Largest state grid accepted by `propagate` (the quadrature costs `n²`).
pub const MAX_STATE_POINTS: usize = 32_768;
/// Largest system grid accepted by `evolve-density` (dense `n × n` matrices).
pub const MAX_DENSITY_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Freqs,
    VerifyWn,
    Propagate,
    EvolveDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

/// Initial state for `propagate` and `evolve-density`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    /// Product Gaussian packet of width `sigma`.
    Packet,
    /// Displaced ground state of the coupled system.
    Ground,
    /// Equal-weight mixture of packets with seeded random centre offsets.
    Mixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub m: f64,
    pub omega: f64,
    /// Bath frequency; `None` pins it to the resonance `ω_q = Ω₂`.
    pub omega_q: Option<f64>,
    /// System coupling values (a sweep for `freqs`, one value otherwise).
    pub lambda: Vec<f64>,
    /// Bath coupling values (a sweep for `freqs`, one value otherwise).
    pub c: Vec<f64>,
    pub hbar: f64,
    pub times: Vec<f64>,
    pub n_list: Vec<usize>,
    pub omega_modes: Option<Vec<f64>>,
    pub dims: usize,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub sigma: f64,
    pub initial: Initial,
    pub mixture_count: usize,
    pub mixture_spread: f64,
    pub tdse_steps: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub verbatim_prefactor: bool,
    pub write_states: bool,
}

const KEYS: &[&str] = &[
    "m",
    "omega",
    "omega_q",
    "lambda",
    "c",
    "hbar",
    "times",
    "n_list",
    "omega_modes",
    "dims",
    "grid_n",
    "grid_extent",
    "center",
    "momentum",
    "sigma",
    "initial",
    "mixture_count",
    "mixture_spread",
    "tdse_steps",
    "format",
    "out",
    "seed",
    "verbatim_prefactor",
    "write_states",
];

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Splits the text into key/value pairs, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(err(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(err(format!("line {}: duplicate key '{k}'", lineno + 1)));
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key)
            .map(|v| split_list(key, v)?.into_iter().map(|s| parse_f64(key, s)).collect())
            .transpose()
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key).map(|v| parse_usize(key, v)).transpose()
    }

    fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.raw(key)
            .map(|v| split_list(key, v)?.into_iter().map(|s| parse_usize(key, s)).collect())
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.raw(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(err(format!("{key}: expected true or false, got '{v}'"))),
            })
            .transpose()
    }
}

fn split_list<'a>(key: &str, v: &'a str) -> Result<Vec<&'a str>, CliError> {
    let items: Vec<&str> = v.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(err(format!("{key}: empty list entry in '{v}'")));
    }
    Ok(items)
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| err(format!("{key}: not a number: '{v}'")))?;
    if !x.is_finite() {
        return Err(err(format!("{key}: must be finite, got '{v}'")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| err(format!("{key}: not a non-negative integer: '{v}'")))
}

fn positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(err(format!("{key}: must be > 0, got {x}")))
    }
}

impl RunConfig {
    pub fn load(command: Command, path: &Path, out_override: Option<PathBuf>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(command, &text, out_override)
    }

    /// Parses and fully validates a configuration for `command`.
    pub fn parse(command: Command, text: &str, out_override: Option<PathBuf>) -> Result<Self, CliError> {
        let f = Fields(parse_pairs(text)?);
        let m = positive("m", f.f64("m")?.unwrap_or(1.0))?;
        let omega = positive("omega", f.f64("omega")?.unwrap_or(1.0))?;
        let omega_q = f.f64("omega_q")?.map(|w| positive("omega_q", w)).transpose()?;
        let hbar = positive("hbar", f.f64("hbar")?.unwrap_or(1.0))?;
        let lambda = f.f64_list("lambda")?.unwrap_or_else(|| vec![0.0]);
        let c = f.f64_list("c")?.unwrap_or_else(|| vec![0.0]);
        if command != Command::Freqs && (lambda.len() != 1 || c.len() != 1) {
            return Err(err("lambda and c take a single value except for freqs"));
        }

        let times = f.f64_list("times")?.unwrap_or_default();
        if command != Command::Freqs && times.is_empty() {
            return Err(err("times: at least one time is required"));
        }
        for &t in &times {
            positive("times", t)?;
        }

        let n_list = f.usize_list("n_list")?.unwrap_or_default();
        if command == Command::VerifyWn {
            if n_list.is_empty() {
                return Err(err("n_list: required for verify-wn"));
            }
            if n_list[0] < 2 {
                return Err(err("n_list: entries must be >= 2"));
            }
            if n_list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(err("n_list: must be strictly ascending"));
            }
        }
        let omega_modes = f.f64_list("omega_modes")?;
        if let Some(w) = &omega_modes {
            if let Some(bad) = w.iter().find(|&&x| x < 0.0) {
                return Err(err(format!("omega_modes: must be >= 0, got {bad}")));
            }
        }

        let dims = f.usize("dims")?.unwrap_or(2);
        if !(dims == 2 || dims == 3) {
            return Err(err(format!("dims: must be 2 or 3, got {dims}")));
        }
        if command == Command::EvolveDensity && dims != 2 {
            return Err(err("dims: evolve-density acts on the two system coordinates (dims = 2)"));
        }
        let gridded = matches!(command, Command::Propagate | Command::EvolveDensity);
        let grid_n = f.usize("grid_n")?.unwrap_or(0);
        let grid_extent = f.f64("grid_extent")?.unwrap_or(0.0);
        if gridded {
            if grid_n < 4 {
                return Err(err("grid_n: at least 4 points per dimension are required"));
            }
            positive("grid_extent", grid_extent)?;
            if command == Command::Propagate && !grid_n.is_power_of_two() {
                return Err(err("grid_n: the split-operator reference needs a power of two"));
            }
            let total = grid_n.checked_pow(dims as u32).unwrap_or(usize::MAX);
            let cap = if command == Command::Propagate { MAX_STATE_POINTS } else { MAX_DENSITY_POINTS };
            if total > cap {
                return Err(err(format!("grid has {total} points, above the limit of {cap}")));
            }
        }
        let center = f.f64_list("center")?.unwrap_or_else(|| vec![0.0; dims]);
        let momentum = f.f64_list("momentum")?.unwrap_or_else(|| vec![0.0; dims]);
        if center.len() != dims || momentum.len() != dims {
            return Err(err(format!("center and momentum need {dims} entries")));
        }
        let sigma = positive("sigma", f.f64("sigma")?.unwrap_or(0.5))?;
        let initial = match f.raw("initial").unwrap_or("packet") {
            "packet" => Initial::Packet,
            "ground" => Initial::Ground,
            "mixture" => Initial::Mixture,
            other => return Err(err(format!("initial: expected packet, ground or mixture, got '{other}'"))),
        };
        if initial == Initial::Ground && dims != 2 {
            return Err(err("initial = ground requires dims = 2"));
        }
        if initial == Initial::Mixture && command != Command::EvolveDensity {
            return Err(err("initial = mixture is only available for evolve-density"));
        }
        let mixture_count = f.usize("mixture_count")?.unwrap_or(3);
        if mixture_count == 0 {
            return Err(err("mixture_count: must be >= 1"));
        }
        let mixture_spread = f.f64("mixture_spread")?.unwrap_or(0.3);
        if mixture_spread < 0.0 {
            return Err(err("mixture_spread: must be >= 0"));
        }
        let tdse_steps = f.usize("tdse_steps")?;
        if tdse_steps == Some(0) {
            return Err(err("tdse_steps: must be >= 1"));
        }

        let format = match f.raw("format").unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(err(format!("format: expected csv or json, got '{other}'"))),
        };
        let out = out_override.or_else(|| f.raw("out").map(PathBuf::from));
        if let Some(path) = &out {
            let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
            if let Some(dir) = parent {
                if !dir.is_dir() {
                    return Err(err(format!("output directory {} does not exist", dir.display())));
                }
            }
        }
        let seed = f.raw("seed").map(|v| v.parse::<u64>()).transpose().map_err(|_| err("seed: not a u64"))?;

        Ok(RunConfig {
            command,
            m,
            omega,
            omega_q,
            lambda,
            c,
            hbar,
            times,
            n_list,
            omega_modes,
            dims,
            grid_n,
            grid_extent,
            center,
            momentum,
            sigma,
            initial,
            mixture_count,
            mixture_spread,
            tdse_steps,
            format,
            out,
            seed: seed.unwrap_or(0),
            verbatim_prefactor: f.bool("verbatim_prefactor")?.unwrap_or(false),
            write_states: f.bool("write_states")?.unwrap_or(true),
        })
    }
}
