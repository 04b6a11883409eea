//! Flat key-value experiment configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored; list values are comma-separated. Keys are validated
//! with field-level messages before any trial runs. Command-line `--set
//! key=value` pairs override file entries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use gilbert_rare::{EstimatorKind, EventKind};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), message: message.into() }
}

/// Raw parsed key-value pairs.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Applies `key=value` overrides on top of the parsed file.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for item in overrides {
            let Some((key, value)) = item.split_once('=') else {
                return Err(err("--set", format!("expected key=value, got `{item}`")));
            };
            self.entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| err(key, "missing required key"))
    }

    fn parse_one<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T, ConfigError> {
        raw.trim()
            .parse::<T>()
            .map_err(|_| err(key, format!("cannot parse `{}` as {}", raw.trim(), std::any::type_name::<T>())))
    }

    fn required_num<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parse_one(key, self.required(key)?)
    }

    fn optional_num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key).map(|raw| self.parse_one(key, raw)).transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        let raw = self.required(key)?;
        let items: Result<Vec<T>, _> =
            raw.split(',').map(|part| self.parse_one(key, part)).collect();
        let items = items?;
        if items.is_empty() {
            return Err(err(key, "list must not be empty"));
        }
        Ok(items)
    }
}

fn parse_event(key: &str, raw: &str) -> Result<EventKind, ConfigError> {
    match raw {
        "edge_count" => Ok(EventKind::EdgeCount),
        "max_degree" => Ok(EventKind::MaxDegree),
        "max_component" => Ok(EventKind::MaxComponent),
        "max_clique" => Ok(EventKind::MaxClique),
        "triangle_count" => Ok(EventKind::TriangleCount),
        other => Err(err(
            key,
            format!(
                "unknown event `{other}` (expected edge_count, max_degree, max_component, \
                 max_clique, or triangle_count)"
            ),
        )),
    }
}

fn parse_estimator(key: &str, raw: &str) -> Result<EstimatorKind, ConfigError> {
    match raw {
        "nmc" => Ok(EstimatorKind::Naive),
        "cmc" => Ok(EstimatorKind::Conditional),
        "is" => Ok(EstimatorKind::ImportanceSampling),
        other => Err(err(key, format!("unknown estimator `{other}` (expected nmc, cmc, is)"))),
    }
}

/// One (kappa, ell) row of a table experiment.
#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub kappa: f64,
    pub ell: u64,
}

/// A table experiment: the cross product of rows, estimators, and grids.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub lambda: f64,
    pub rows: Vec<TableRow>,
    pub event: EventKind,
    pub estimators: Vec<EstimatorKind>,
    pub grids: Vec<usize>,
    pub target_rv_of_mean: f64,
    pub m_min: u64,
    pub m_max: u64,
    pub batch_size: u64,
    pub base_seed: u64,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let dim: usize = raw.required_num("d")?;
        if dim == 0 {
            return Err(err("d", "dimension must be at least 1"));
        }
        let lambda: f64 = raw.required_num("lambda")?;
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(err("lambda", "side length must be positive"));
        }
        let kappas: Vec<f64> = raw.list("kappa")?;
        if kappas.iter().any(|&k| !k.is_finite() || k <= 0.0) {
            return Err(err("kappa", "intensities must be positive"));
        }
        let ells: Vec<u64> = raw.list("ell")?;
        let rows = zip_rows(&kappas, &ells)?;
        let event = parse_event("event", raw.required("event")?)?;
        let estimators: Vec<EstimatorKind> = raw
            .required("estimators")?
            .split(',')
            .map(|part| parse_estimator("estimators", part.trim()))
            .collect::<Result<_, _>>()?;
        if estimators.is_empty() {
            return Err(err("estimators", "at least one estimator is required"));
        }
        let needs_grid = estimators.contains(&EstimatorKind::ImportanceSampling);
        let grids: Vec<usize> = if raw.get("grids").is_some() {
            raw.list("grids")?
        } else if needs_grid {
            return Err(err("grids", "importance sampling requires at least one grid size"));
        } else {
            Vec::new()
        };
        if grids.contains(&0) {
            return Err(err("grids", "grid sizes must be positive"));
        }
        let target_rv_of_mean: f64 = raw.optional_num("target_rv_of_mean")?.unwrap_or(1e-3);
        if !target_rv_of_mean.is_finite() || target_rv_of_mean <= 0.0 {
            return Err(err("target_rv_of_mean", "target must be positive"));
        }
        let m_min: u64 = raw.optional_num("m_min")?.unwrap_or(1000);
        if m_min < 100 {
            return Err(err("m_min", "must be at least 100"));
        }
        let m_max: u64 = raw.optional_num("m_max")?.unwrap_or(100_000_000);
        if m_max < m_min {
            return Err(err("m_max", "must be at least m_min"));
        }
        let batch_size: u64 = raw.optional_num("batch_size")?.unwrap_or(1000);
        if batch_size == 0 {
            return Err(err("batch_size", "must be positive"));
        }
        let base_seed: u64 = raw.optional_num("base_seed")?.unwrap_or(20240901);
        let output = PathBuf::from(raw.required("output")?);
        Ok(Self {
            dim,
            lambda,
            rows,
            event,
            estimators,
            grids,
            target_rv_of_mean,
            m_min,
            m_max,
            batch_size,
            base_seed,
            output,
        })
    }
}

/// Pairs the kappa and ell lists: equal-length lists zip row-wise, a scalar
/// broadcasts against the other list.
fn zip_rows(kappas: &[f64], ells: &[u64]) -> Result<Vec<TableRow>, ConfigError> {
    let rows = match (kappas.len(), ells.len()) {
        (a, b) if a == b => {
            kappas.iter().zip(ells).map(|(&kappa, &ell)| TableRow { kappa, ell }).collect()
        }
        (_, 1) => kappas.iter().map(|&kappa| TableRow { kappa, ell: ells[0] }).collect(),
        (1, _) => ells.iter().map(|&ell| TableRow { kappa: kappas[0], ell }).collect(),
        (a, b) => {
            return Err(err(
                "kappa/ell",
                format!("lists of lengths {a} and {b} cannot be paired (equal or scalar only)"),
            ))
        }
    };
    Ok(rows)
}

/// Which asymptotic study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    FixedWindowKappaSweep,
    GrowingWindow,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::FixedWindowKappaSweep => "fixed_window_kappa_sweep",
            RegimeKind::GrowingWindow => "growing_window",
        })
    }
}

/// A scaling-regime experiment.
#[derive(Debug, Clone)]
pub struct RegimeConfig {
    pub regime: RegimeKind,
    pub dim: usize,
    pub event: EventKind,
    pub ell: u64,
    /// Fixed-window sweep: the window side and intensity grid.
    pub lambda: Option<f64>,
    pub kappas: Vec<f64>,
    /// Growing window: volume exponent (1 < delta < 2) and rate grid, with
    /// `lambda = beta^(delta/d)` and `kappa = beta^(1-delta)`.
    pub delta: Option<f64>,
    pub betas: Vec<f64>,
    /// Grid cells per axis are chosen as `round(lambda / cell_edge)`.
    pub cell_edge: f64,
    pub target_rv_of_mean: f64,
    pub m_min: u64,
    pub m_max: u64,
    pub base_seed: u64,
    pub output: PathBuf,
}

impl RegimeConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let regime = match raw.required("regime")? {
            "fixed_window_kappa_sweep" => RegimeKind::FixedWindowKappaSweep,
            "growing_window" => RegimeKind::GrowingWindow,
            other => {
                return Err(err(
                    "regime",
                    format!(
                        "unknown regime `{other}` (expected fixed_window_kappa_sweep or \
                         growing_window)"
                    ),
                ))
            }
        };
        let dim: usize = raw.required_num("d")?;
        if dim == 0 {
            return Err(err("d", "dimension must be at least 1"));
        }
        let event = parse_event("event", raw.required("event")?)?;
        let ell: u64 = raw.required_num("ell")?;
        let cell_edge: f64 = raw.optional_num("cell_edge")?.unwrap_or(0.1);
        if !cell_edge.is_finite() || cell_edge <= 0.0 {
            return Err(err("cell_edge", "must be positive"));
        }
        let target_rv_of_mean: f64 = raw.optional_num("target_rv_of_mean")?.unwrap_or(0.05);
        if !target_rv_of_mean.is_finite() || target_rv_of_mean <= 0.0 {
            return Err(err("target_rv_of_mean", "target must be positive"));
        }
        let m_min: u64 = raw.optional_num("m_min")?.unwrap_or(1000);
        if m_min < 100 {
            return Err(err("m_min", "must be at least 100"));
        }
        let m_max: u64 = raw.optional_num("m_max")?.unwrap_or(20_000_000);
        if m_max < m_min {
            return Err(err("m_max", "must be at least m_min"));
        }
        let base_seed: u64 = raw.optional_num("base_seed")?.unwrap_or(20240901);
        let output = PathBuf::from(raw.required("output")?);

        let (lambda, kappas, delta, betas) = match regime {
            RegimeKind::FixedWindowKappaSweep => {
                let lambda: f64 = raw.required_num("lambda")?;
                if !lambda.is_finite() || lambda <= 0.0 {
                    return Err(err("lambda", "side length must be positive"));
                }
                let kappas: Vec<f64> = raw.list("kappa")?;
                if kappas.iter().any(|&k| !k.is_finite() || k <= 0.0) {
                    return Err(err("kappa", "intensities must be positive"));
                }
                (Some(lambda), kappas, None, Vec::new())
            }
            RegimeKind::GrowingWindow => {
                let delta: f64 = raw.required_num("delta")?;
                if !delta.is_finite() || delta <= 1.0 || delta >= 2.0 {
                    return Err(err(
                        "delta",
                        format!(
                            "{delta} is outside (1, 2): below 1 the window does not outgrow \
                             the point count, and at 2 or above the event stops being rare"
                        ),
                    ));
                }
                let betas: Vec<f64> = raw.list("beta")?;
                if betas.iter().any(|&b| !b.is_finite() || b <= 0.0) {
                    return Err(err("beta", "rates must be positive"));
                }
                (None, Vec::new(), Some(delta), betas)
            }
        };

        Ok(Self {
            regime,
            dim,
            event,
            ell,
            lambda,
            kappas,
            delta,
            betas,
            cell_edge,
            target_rv_of_mean,
            m_min,
            m_max,
            base_seed,
            output,
        })
    }
}
