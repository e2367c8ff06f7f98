//! Scenario runner and sweep engine: parses configuration files, executes
//! named parameter studies from the catalog, and emits CSV panels plus a
//! JSON metadata sidecar. Re-running with the same configuration and seed
//! reproduces the CSV bodies byte for byte.

pub mod catalog;
pub mod table;
pub mod units;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use catalog::{catalog, find, KeySpec, ScenarioDef};
pub use table::ResultTable;
pub use units::{Convention, Kind};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario \"{name}\"; see `list-scenarios`")]
    UnknownScenario { name: String },
    #[error("missing required key \"{key}\"")]
    MissingKey { key: String },
    #[error("key \"{key}\" has no unit suffix; dimensioned values must be written like \"2 MHz\"")]
    MissingUnit { key: String },
    #[error("key \"{key}\": {reason}")]
    BadValue { key: String, reason: String },
    #[error("key \"{key}\" is not part of this scenario's schema")]
    UnknownKey { key: String },
    #[error("sweep axis \"{key}\" does not reference a scenario key")]
    SweepUnknownKey { key: String },
    #[error("sweep axis \"{key}\" needs either `values` or a range with `points`")]
    BadSweep { key: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scenario execution failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parsed (but not yet unit-resolved) configuration file.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub convention: Convention,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
    pub parameters: toml::value::Table,
    pub sweeps: BTreeMap<String, toml::Value>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let value: toml::Value = text
            .parse()
            .map_err(|e| ScenarioError::Config(format!("TOML parse error: {e}")))?;
        let top = value
            .as_table()
            .ok_or_else(|| ScenarioError::Config("top level must be a table".into()))?;

        let scenario = top
            .get("scenario")
            .and_then(|v| v.as_str())
            .ok_or(ScenarioError::MissingKey {
                key: "scenario".into(),
            })?
            .to_string();
        let convention = Convention::parse(
            top.get("frequency_convention")
                .and_then(|v| v.as_str())
                .ok_or(ScenarioError::MissingKey {
                    key: "frequency_convention".into(),
                })?,
        )?;
        let output_dir = top
            .get("output_dir")
            .and_then(|v| v.as_str())
            .map(PathBuf::from);
        let seed = top.get("seed").and_then(|v| v.as_integer()).unwrap_or(0) as u64;
        let workers = top
            .get("workers")
            .and_then(|v| v.as_integer())
            .unwrap_or(0)
            .max(0) as usize;
        let parameters = top
            .get("parameters")
            .and_then(|v| v.as_table())
            .cloned()
            .unwrap_or_default();
        let sweeps = top
            .get("sweep")
            .and_then(|v| v.as_table())
            .map(|t| {
                t.iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect::<BTreeMap<_, _>>()
            })
            .unwrap_or_default();
        Ok(Self {
            scenario,
            convention,
            output_dir,
            seed,
            workers,
            parameters,
            sweeps,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// Fully resolved configuration: every value in internal units (rad/µs, µs),
/// sweep axes expanded, defaults applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: String,
    pub convention: Convention,
    pub seed: u64,
    pub workers: usize,
    values: BTreeMap<String, f64>,
    counts: BTreeMap<String, usize>,
    sweeps: Vec<(String, Vec<f64>)>,
}

impl Resolved {
    pub fn value(&self, key: &str) -> f64 {
        *self
            .values
            .get(key)
            .unwrap_or_else(|| panic!("resolved value {key} missing"))
    }

    pub fn count(&self, key: &str) -> usize {
        *self
            .counts
            .get(key)
            .unwrap_or_else(|| panic!("resolved count {key} missing"))
    }

    pub fn sweep_axis(&self, key: &str) -> Option<&[f64]> {
        self.sweeps
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_slice())
    }

    /// Values of a key: its sweep axis when swept, otherwise the scalar.
    pub fn axis_or_scalar(&self, key: &str) -> Vec<f64> {
        match self.sweep_axis(key) {
            Some(axis) => axis.to_vec(),
            None => vec![self.value(key)],
        }
    }

    /// Cartesian product of two (possibly singleton) axes, outer key first.
    pub fn cells_2d(&self, outer: &str, inner: &str) -> Vec<(f64, f64)> {
        let a = self.axis_or_scalar(outer);
        let b = self.axis_or_scalar(inner);
        let mut cells = Vec::with_capacity(a.len() * b.len());
        for &x in &a {
            for &y in &b {
                cells.push((x, y));
            }
        }
        cells
    }

    /// Echo lines embedded at the top of every CSV.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("scenario = {}", self.scenario),
            format!(
                "frequency_convention = {}",
                match self.convention {
                    Convention::DividedBy2Pi => "divided_by_2pi",
                    Convention::Angular => "angular",
                }
            ),
            format!("seed = {}", self.seed),
            "resolved units: rad/us for rates, us for times".to_string(),
        ];
        for (k, v) in &self.values {
            lines.push(format!("{k} = {}", table::format_value(*v)));
        }
        for (k, v) in &self.counts {
            lines.push(format!("{k} = {v}"));
        }
        for (k, axis) in &self.sweeps {
            let cells: Vec<String> = axis.iter().map(|v| table::format_value(*v)).collect();
            lines.push(format!("sweep.{k} = [{}]", cells.join(", ")));
        }
        lines
    }
}

fn parse_sweep_axis(
    key: &str,
    spec: &toml::Value,
    kind: Kind,
    convention: Convention,
) -> Result<Vec<f64>, ScenarioError> {
    let t = spec.as_table().ok_or_else(|| ScenarioError::BadSweep {
        key: key.to_string(),
    })?;
    if let Some(values) = t.get("values") {
        let arr = values.as_array().ok_or_else(|| ScenarioError::BadSweep {
            key: key.to_string(),
        })?;
        return arr
            .iter()
            .map(|v| units::parse_quantity(key, v, kind, convention))
            .collect();
    }
    let points = t
        .get("points")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| ScenarioError::BadSweep {
            key: key.to_string(),
        })? as usize;
    if points < 2 {
        return Err(ScenarioError::BadSweep {
            key: key.to_string(),
        });
    }
    let parse_pair = |v: &toml::Value| -> Result<(f64, f64), ScenarioError> {
        let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
            ScenarioError::BadSweep {
                key: key.to_string(),
            }
        })?;
        Ok((
            units::parse_quantity(key, &arr[0], kind, convention)?,
            units::parse_quantity(key, &arr[1], kind, convention)?,
        ))
    };
    if let Some(range) = t.get("log_range") {
        let (lo, hi) = parse_pair(range)?;
        if lo <= 0.0 || hi <= lo {
            return Err(ScenarioError::BadSweep {
                key: key.to_string(),
            });
        }
        return Ok(catalog::log_grid(lo, hi, points));
    }
    if let Some(range) = t.get("linear_range") {
        let (lo, hi) = parse_pair(range)?;
        if hi <= lo {
            return Err(ScenarioError::BadSweep {
                key: key.to_string(),
            });
        }
        return Ok(catalog::lin_grid(lo, hi, points));
    }
    Err(ScenarioError::BadSweep {
        key: key.to_string(),
    })
}

/// Resolve a parsed configuration against its scenario schema. Collects all
/// violations instead of stopping at the first when `collect_all` is set.
fn resolve_inner(
    cfg: &ScenarioConfig,
    collect_all: bool,
) -> Result<(Option<Resolved>, Vec<String>), ScenarioError> {
    let def = find(&cfg.scenario).ok_or_else(|| ScenarioError::UnknownScenario {
        name: cfg.scenario.clone(),
    })?;
    let mut violations = Vec::new();
    let mut values = BTreeMap::new();
    let mut counts = BTreeMap::new();

    for spec in def.keys {
        let raw = cfg.parameters.get(spec.name);
        let parsed = match raw {
            Some(v) => units::parse_quantity(spec.name, v, spec.kind, cfg.convention),
            None => match spec.default {
                Some(text) => {
                    let v = default_value(text, spec.kind);
                    units::parse_quantity(spec.name, &v, spec.kind, cfg.convention)
                }
                None => Err(ScenarioError::MissingKey {
                    key: spec.name.to_string(),
                }),
            },
        };
        match parsed {
            Ok(v) => {
                if spec.kind == Kind::Count {
                    counts.insert(spec.name.to_string(), v as usize);
                } else {
                    values.insert(spec.name.to_string(), v);
                }
            }
            Err(e) if collect_all => violations.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }

    // Reject keys that are not in the schema (catches typos early).
    for key in cfg.parameters.keys() {
        if !def.keys.iter().any(|s| s.name == key) {
            let e = ScenarioError::UnknownKey { key: key.clone() };
            if collect_all {
                violations.push(e.to_string());
            } else {
                return Err(e);
            }
        }
    }

    let mut sweeps = Vec::new();
    for (key, spec) in &cfg.sweeps {
        let Some(key_spec) = def.keys.iter().find(|s| s.name == key) else {
            let e = ScenarioError::SweepUnknownKey { key: key.clone() };
            if collect_all {
                violations.push(e.to_string());
                continue;
            }
            return Err(e);
        };
        match parse_sweep_axis(key, spec, key_spec.kind, cfg.convention) {
            Ok(axis) => sweeps.push((key.clone(), axis)),
            Err(e) if collect_all => violations.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }

    let resolved = if violations.is_empty() {
        Some(Resolved {
            scenario: cfg.scenario.clone(),
            convention: cfg.convention,
            seed: cfg.seed,
            workers: cfg.workers,
            values,
            counts,
            sweeps,
        })
    } else {
        None
    };
    Ok((resolved, violations))
}

fn default_value(text: &str, kind: Kind) -> toml::Value {
    match kind {
        Kind::Count => toml::Value::Integer(text.parse().expect("count default")),
        Kind::Dimensionless => toml::Value::Float(text.parse().expect("number default")),
        _ => toml::Value::String(text.to_string()),
    }
}

pub fn resolve(cfg: &ScenarioConfig) -> Result<Resolved, ScenarioError> {
    let (resolved, _) = resolve_inner(cfg, false)?;
    Ok(resolved.expect("strict resolution yields a value"))
}

/// Summary of one scenario run: the tables that were produced and where they
/// were written.
#[derive(Debug)]
pub struct RunSummary {
    pub tables: Vec<ResultTable>,
    pub files: Vec<PathBuf>,
    pub sidecar: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a str,
    frequency_convention: Convention,
    seed: u64,
    workers: usize,
    code_version: &'static str,
    parameters_rad_per_us: &'a BTreeMap<String, f64>,
    counts: &'a BTreeMap<String, usize>,
    sweeps: BTreeMap<String, Vec<f64>>,
    files: Vec<String>,
}

/// Execute a scenario and write one CSV per panel plus the JSON sidecar.
/// `workers` overrides the config (0 keeps the global thread pool).
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out_override: Option<&Path>,
    workers_override: Option<usize>,
    gnuplot_hints: bool,
) -> Result<RunSummary, ScenarioError> {
    let resolved = resolve(cfg)?;
    let def = find(&cfg.scenario).expect("resolution checked the name");
    let workers = workers_override.unwrap_or(resolved.workers);

    let tables = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
        pool.install(|| (def.runner)(&resolved))?
    } else {
        (def.runner)(&resolved)?
    };

    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    let echo = resolved.echo_lines();
    let mut files = Vec::new();
    for t in &tables {
        let path = out_dir.join(format!("{}_{}.csv", def.name, t.panel));
        let mut lines = echo.clone();
        if gnuplot_hints {
            lines.push(format!(
                "gnuplot: set datafile separator ','; plot '{}' skip {} using 1:2 with lines",
                path.display(),
                lines.len() + 2
            ));
        }
        t.write_csv(&path, &lines)?;
        files.push(path);
    }

    let sidecar_path = out_dir.join(format!("{}_meta.json", def.name));
    let sidecar = Sidecar {
        scenario: def.name,
        frequency_convention: resolved.convention,
        seed: resolved.seed,
        workers,
        code_version: env!("CARGO_PKG_VERSION"),
        parameters_rad_per_us: &resolved.values,
        counts: &resolved.counts,
        sweeps: resolved
            .sweeps
            .iter()
            .cloned()
            .collect::<BTreeMap<_, _>>(),
        files: files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;

    Ok(RunSummary {
        tables,
        files,
        sidecar: sidecar_path,
    })
}

/// Operating-regime classification from the drive/linewidth/shift scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Markovian,
    MarkovianShallowBoundary,
    ShallowNonMarkovian,
    DeepNonMarkovian,
    Decoupled,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Markovian => "Markovian",
            Regime::MarkovianShallowBoundary => "Markovian-to-shallow boundary",
            Regime::ShallowNonMarkovian => "shallow non-Markovian",
            Regime::DeepNonMarkovian => "deep non-Markovian",
            Regime::Decoupled => "decoupled",
        };
        f.write_str(s)
    }
}

/// Classify by the drive-vs-linewidth ratio, with the decoupled regime
/// entered once the drive outruns what the cavity can resolve
/// (Ω ≥ 10 Δχ²/κ).
pub fn classify_regime(omega: f64, kappa: f64, dchi: Option<f64>) -> Regime {
    if let Some(dchi) = dchi {
        if omega > 0.0 && omega >= 10.0 * dchi * dchi / kappa {
            return Regime::Decoupled;
        }
    }
    if omega <= 0.0 {
        return Regime::Markovian;
    }
    let r = kappa / omega;
    if r >= 10.0 {
        Regime::Markovian
    } else if r >= 2.0 {
        Regime::MarkovianShallowBoundary
    } else if r >= 1.0 {
        Regime::ShallowNonMarkovian
    } else {
        Regime::DeepNonMarkovian
    }
}

/// Dry-run check of a configuration: schema and unit violations, a memory
/// estimate for the largest joint state, and the regime classification.
#[derive(Debug)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub memory_bytes: Option<u64>,
    pub regime: Option<Regime>,
    pub echo: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(cfg: &ScenarioConfig) -> Result<ValidationReport, ScenarioError> {
    let (resolved, violations) = resolve_inner(cfg, true)?;
    let (memory, regime, echo) = match &resolved {
        Some(r) => {
            let memory = if r.counts.contains_key("n_fock") {
                let levels = if cfg.scenario == "fig10" { 2 } else { 6 };
                let dim = (levels * r.count("n_fock")) as u64;
                Some(dim * dim * 16)
            } else {
                None
            };
            let regime = if r.values.contains_key("omega") && r.values.contains_key("kappa")
            {
                let omega = r.axis_or_scalar("omega").into_iter().fold(0.0, f64::max);
                let kappa = r
                    .axis_or_scalar("kappa")
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                let dchi = if r.values.contains_key("chi_fe") {
                    // Gap between the blocked level and its nearest neighbor.
                    let fe = r.value("chi_fe");
                    let others = [
                        r.value("chi_gg"),
                        r.value("chi_ge"),
                        r.value("chi_eg"),
                        r.value("chi_ee"),
                        r.value("chi_fg"),
                    ];
                    Some(
                        others
                            .iter()
                            .map(|c| (fe - c).abs())
                            .fold(f64::INFINITY, f64::min),
                    )
                } else {
                    None
                };
                Some(classify_regime(omega, kappa, dchi))
            } else {
                None
            };
            (memory, regime, r.echo_lines())
        }
        None => (None, None, Vec::new()),
    };
    Ok(ValidationReport {
        violations,
        memory_bytes: memory,
        regime,
        echo,
    })
}
