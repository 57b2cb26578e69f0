//! Configuration files, result serialization and the `threephoton` command line.
//!
//! Configuration is a flat UTF-8 text file with one `key = value` per line and
//! `#` comments. Keys prefixed with `run.` are run metadata written into
//! manifests and are skipped on input, so a manifest is itself a valid config.

use crate::dynamics::{self, evolve_exact_closed, steady_state, SystemConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, three_photon_state, fock_state, FockCutoff, Subsystem, Tolerances};
use crate::measures::{extract_beta, fock_populations, linear_entropy, negativity, TimeSeries};
use crate::scenarios::{
    self, closed_excited_spec, closed_ground_spec, dissipative_spec, entanglement_spec, ground_period,
    relaxation_time, Duration, ScenarioResult, ScenarioSpec, Sweep, SweepParameter, DEFAULT_PUMP_SWEEP,
    DISSIPATIVE_DT, SAMPLES_PER_PERIOD,
};
use crate::wigner::{wigner_point, PhaseSpaceGrid, WignerGrid};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const VALID_KEYS: [&str; 16] = [
    "g",
    "omega_a",
    "omega_sigma",
    "pump",
    "kappa",
    "beta_re",
    "beta_im",
    "theta",
    "n_max",
    "t_end",
    "dt_sample",
    "scenario",
    "sweep_param",
    "sweep_values",
    "grid_extent",
    "grid_points",
];

/// Accepted shorthand: `beta = x` sets a real vacuum amplitude.
const ALIASES: [&str; 1] = ["beta"];

const METADATA_PREFIX: &str = "run.";

/// Default leakage sweep when `sweep_param = kappa` has no values.
pub const DEFAULT_KAPPA_SWEEP: [f64; 3] = [2.0, 4.0, 6.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    ClosedGround,
    ClosedExcited,
    Entanglement,
    Dissipative,
    /// A plain run of the configured system without snapshots.
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] =
        [Self::ClosedGround, Self::ClosedExcited, Self::Entanglement, Self::Dissipative, Self::Custom];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedGround => "closed-ground",
            Self::ClosedExcited => "closed-excited",
            Self::Entanglement => "entanglement",
            Self::Dissipative => "dissipative",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s.trim()).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
            Error::validation("scenario", format!("unknown scenario '{}'; expected one of {}", s.trim(), names.join(", ")))
        })
    }
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub scenario: ScenarioName,
    pub t_end: Option<f64>,
    pub dt_sample: Option<f64>,
    pub sweep: Option<Sweep>,
    pub grid_extent: f64,
    pub grid_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            scenario: ScenarioName::ClosedGround,
            t_end: None,
            dt_sample: None,
            sweep: None,
            grid_extent: 4.0,
            grid_points: 101,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| Error::validation(key, format!("'{}' is not a number", value.trim())))?;
    if !v.is_finite() {
        return Err(Error::validation(key, "must be finite"));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.trim().parse().map_err(|_| Error::validation(key, format!("'{}' is not a non-negative integer", value.trim())))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s)).collect()
}

/// `key = value` entries of a config text, in order, with their line numbers.
fn entries(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, found '{line}'", i + 1)))?;
        let key = key.trim();
        if key.starts_with(METADATA_PREFIX) {
            continue;
        }
        if !VALID_KEYS.contains(&key) && !ALIASES.contains(&key) {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'; valid keys are: {}",
                i + 1,
                VALID_KEYS.join(", ")
            )));
        }
        out.push((key.to_string(), value.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// Parses a config text; `overrides` (`key=value` strings) replace file values.
pub fn parse_config_str_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (key, value, line) in entries(text)? {
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("line {line}: key '{key}' given twice")));
        }
    }
    for (key, value, _) in entries(&overrides.join("\n"))? {
        map.insert(key, value);
    }
    resolve(&map)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    parse_config_str_with(text, &[])
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn resolve(map: &BTreeMap<String, String>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let s = &mut cfg.system;
    let num = |key: &str| map.get(key).map(|v| parse_f64(key, v)).transpose();
    if let Some(v) = num("g")? {
        s.g = v;
    }
    if let Some(v) = num("omega_a")? {
        s.omega_a = v;
    }
    if let Some(v) = num("omega_sigma")? {
        s.omega_sigma = v;
    }
    if let Some(v) = num("pump")? {
        s.pump = v;
    }
    if let Some(v) = num("kappa")? {
        s.kappa = v;
    }
    if let Some(v) = num("theta")? {
        s.theta = v;
    }
    if map.contains_key("beta") && (map.contains_key("beta_re") || map.contains_key("beta_im")) {
        return Err(Error::validation("beta", "give either beta or beta_re/beta_im"));
    }
    if let Some(v) = num("beta")? {
        s.beta = C64::new(v, 0.0);
    }
    if let Some(v) = num("beta_re")? {
        s.beta.re = v;
    }
    if let Some(v) = num("beta_im")? {
        s.beta.im = v;
    }
    if let Some(v) = map.get("n_max") {
        s.cutoff = FockCutoff::new(parse_usize("n_max", v)?).map_err(|e| Error::validation("n_max", e.to_string()))?;
    }
    s.validate()?;

    cfg.t_end = num("t_end")?;
    cfg.dt_sample = num("dt_sample")?;
    if let Some(v) = cfg.t_end {
        if !(v > 0.0) {
            return Err(Error::validation("t_end", "must be positive"));
        }
    }
    if let Some(v) = cfg.dt_sample {
        if !(v > 0.0) {
            return Err(Error::validation("dt_sample", "must be positive"));
        }
    }
    if let Some(v) = num("grid_extent")? {
        if !(v > 0.0) {
            return Err(Error::validation("grid_extent", "must be positive"));
        }
        cfg.grid_extent = v;
    }
    if let Some(v) = map.get("grid_points") {
        cfg.grid_points = parse_usize("grid_points", v)?;
        PhaseSpaceGrid::square(cfg.grid_extent, cfg.grid_points)?;
    }

    let param = map.get("sweep_param").map(|v| v.parse::<SweepParameter>()).transpose()?;
    let values = map.get("sweep_values").map(|v| parse_list("sweep_values", v)).transpose()?;
    cfg.sweep = match (param, values) {
        (Some(p), Some(v)) => Some(Sweep::new(p, v)?),
        (Some(p), None) => Some(default_sweep(p)),
        (None, Some(_)) => return Err(Error::validation("sweep_param", "sweep_values given without sweep_param")),
        (None, None) => None,
    };

    cfg.scenario = match map.get("scenario") {
        Some(v) => ScenarioName::parse(v)?,
        None if cfg.sweep.is_some() => ScenarioName::Dissipative,
        None if cfg.system.is_closed() => ScenarioName::ClosedGround,
        None => ScenarioName::Custom,
    };
    if cfg.scenario == ScenarioName::Dissipative && cfg.sweep.is_none() {
        cfg.sweep = Some(default_sweep(SweepParameter::Pump));
    }
    Ok(cfg)
}

fn default_sweep(parameter: SweepParameter) -> Sweep {
    let values = match parameter {
        SweepParameter::Pump => DEFAULT_PUMP_SWEEP.to_vec(),
        SweepParameter::Kappa => DEFAULT_KAPPA_SWEEP.to_vec(),
    };
    Sweep { parameter, values }
}

impl RunConfig {
    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let s = &self.system;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("scenario", self.scenario.as_str().into());
        put("g", s.g.to_string());
        put("omega_a", s.omega_a.to_string());
        put("omega_sigma", s.omega_sigma.to_string());
        put("pump", s.pump.to_string());
        put("kappa", s.kappa.to_string());
        put("beta_re", s.beta.re.to_string());
        put("beta_im", s.beta.im.to_string());
        put("theta", s.theta.to_string());
        put("n_max", s.cutoff.levels().to_string());
        if let Some(t) = self.t_end {
            put("t_end", t.to_string());
        }
        if let Some(dt) = self.dt_sample {
            put("dt_sample", dt.to_string());
        }
        if let Some(sw) = &self.sweep {
            put("sweep_param", sw.parameter.key().into());
            put("sweep_values", sw.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        }
        put("grid_extent", self.grid_extent.to_string());
        put("grid_points", self.grid_points.to_string());
        out
    }

    pub fn phase_space_grid(&self) -> Result<PhaseSpaceGrid> {
        PhaseSpaceGrid::square(self.grid_extent, self.grid_points)
    }

    /// Scenario specification for this configuration.
    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let sys = &self.system;
        let mut spec = match self.scenario {
            ScenarioName::ClosedGround => closed_ground_spec(sys)?,
            ScenarioName::ClosedExcited => closed_excited_spec(sys)?,
            ScenarioName::Entanglement => entanglement_spec(sys, sys.theta)?,
            ScenarioName::Dissipative => {
                let sweep = self.sweep.clone().unwrap_or_else(|| default_sweep(SweepParameter::Pump));
                dissipative_spec(sys, sweep)?
            }
            ScenarioName::Custom => {
                let (t_end, dt) = if sys.is_closed() {
                    let t = ground_period(sys.g);
                    (3.0 * t, t / SAMPLES_PER_PERIOD as f64)
                } else {
                    (relaxation_time(sys)?, DISSIPATIVE_DT)
                };
                ScenarioSpec {
                    name: "custom".into(),
                    config: *sys,
                    grid: TimeGrid::new(0.0, t_end, dt.min(t_end))?,
                    duration: Duration::Fixed,
                    snapshots: Vec::new(),
                    wigner: PhaseSpaceGrid::default(),
                    sweep: None,
                }
            }
        };
        if self.t_end.is_some() || self.dt_sample.is_some() {
            let t_end = self.t_end.unwrap_or(spec.grid.t_end);
            let dt = self.dt_sample.unwrap_or(spec.grid.dt_sample).min(t_end);
            spec.grid = TimeGrid::new(0.0, t_end, dt)?;
            if self.t_end.is_some() {
                spec.duration = Duration::Fixed;
            }
        }
        let t_end = spec.grid.t_end;
        spec.snapshots.retain(|&t| t <= t_end);
        spec.wigner = self.phase_space_grid()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Locale-independent decimal with at most 15 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })
}

fn describe(label: &str) -> String {
    match label {
        scenarios::SERIES_BETA => "vacuum amplitude |beta| = sqrt(p0/(p0+p3))".into(),
        scenarios::SERIES_NEGATIVITY => "negativity of the dot-field state".into(),
        scenarios::SERIES_LINEAR_ENTROPY => "linear entropy 1 - Tr(rho_field^2)".into(),
        scenarios::SERIES_TRACE_DRIFT => "|Tr(rho) - 1|".into(),
        scenarios::SERIES_PURITY => "purity Tr(rho^2) of the joint state".into(),
        other => match other.strip_prefix("pop_") {
            Some(n) => format!("photon-number population p{n}"),
            None => other.into(),
        },
    }
}

/// `time,value` CSV text of one series.
pub fn timeseries_csv(series: &TimeSeries, g: f64) -> String {
    let mut out = String::with_capacity(32 * series.len() + 200);
    let _ = writeln!(out, "# {}: {}", series.label, describe(&series.label));
    let _ = writeln!(out, "# time in inverse units of the rates (g = {}); multiply by g for units of 1/g", format_number(g));
    out.push_str("time,value\n");
    for (t, v) in series.times().iter().zip(series.values()) {
        let _ = writeln!(out, "{},{}", format_number(*t), format_number(*v));
    }
    out
}

/// Writes one `<label>.csv` per series of `result` into `dir`.
pub fn write_timeseries(result: &ScenarioResult, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    for (label, series) in &result.series {
        let path = dir.join(format!("{label}.csv"));
        write_file(&path, &timeseries_csv(series, result.config.g))?;
        written.push(path);
    }
    Ok(written)
}

/// `x,p,W` CSV text, `x` outer and `p` inner.
pub fn wigner_csv(grid: &WignerGrid) -> String {
    let g = &grid.grid;
    let mut out = String::with_capacity(40 * g.n_x * g.n_p + 300);
    out.push_str("# Wigner function W(x + ip) = 2 Tr[D^-1 rho D Parity]; integrates to pi over dx dp, |W| <= 2\n");
    let _ = writeln!(
        out,
        "# x in [{}, {}] with {} points; p in [{}, {}] with {} points",
        format_number(g.x_min),
        format_number(g.x_max),
        g.n_x,
        format_number(g.p_min),
        format_number(g.p_max),
        g.n_p
    );
    out.push_str("x,p,W\n");
    for i in 0..g.n_x {
        for j in 0..g.n_p {
            let _ = writeln!(out, "{},{},{}", format_number(g.x(i)), format_number(g.p(j)), format_number(grid.values[(i, j)]));
        }
    }
    out
}

pub fn write_wigner(grid: &WignerGrid, path: &Path) -> Result<()> {
    write_file(path, &wigner_csv(grid))
}

/// Metadata stored next to every output set.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config: RunConfig,
    pub version: String,
    pub wall_time: f64,
    /// Extra `run.` entries (diagnostics and summaries).
    pub metadata: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config: RunConfig, wall_time: f64) -> Self {
        Self { config, version: env!("CARGO_PKG_VERSION").into(), wall_time, metadata: BTreeMap::new() }
    }

    pub fn with_diagnostics(mut self, result: &ScenarioResult) -> Self {
        let w = result.worst;
        self.set("samples", result.grid.num_samples().to_string());
        self.set("max_trace_drift", format_number(w.trace_drift));
        self.set("max_hermiticity_residue", format_number(w.hermiticity));
        self.set("min_eigenvalue", format_number(w.min_eigenvalue));
        if let Some(n) = result.steady_state_negativity {
            self.set("steady_state_negativity", format_number(n));
        }
        if let Some(d) = result.steady_state_distance {
            self.set("steady_state_distance", format_number(d));
        }
        if let Some(sd) = &result.sudden_death {
            self.set("revival_count", sd.revival_count.to_string());
            self.set("dead_intervals", sd.dead_intervals.len().to_string());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.metadata.insert(key.into(), value);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# threephoton run manifest\n");
        out.push_str(&self.config.to_text());
        let _ = writeln!(out, "{METADATA_PREFIX}version = {}", self.version);
        let _ = writeln!(out, "{METADATA_PREFIX}wall_time_s = {}", format_number(self.wall_time));
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "{METADATA_PREFIX}{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config = parse_config_str(text)?;
        let mut metadata = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if let Some((k, v)) = line.split_once('=') {
                if let Some(key) = k.trim().strip_prefix(METADATA_PREFIX) {
                    metadata.insert(key.to_string(), v.trim().to_string());
                }
            }
        }
        let version = metadata.remove("version").unwrap_or_default();
        let wall_time = metadata.remove("wall_time_s").and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
        Ok(Self { config, version, wall_time, metadata })
    }
}

fn snapshot_csv(result: &ScenarioResult) -> String {
    let mut out = String::from("# photon-number populations at the snapshot times\nsnapshot,requested_time,time,n,p\n");
    for (k, snap) in result.snapshots.iter().enumerate() {
        for (n, p) in snap.populations.iter().enumerate() {
            let _ = writeln!(out, "{k},{},{},{n},{}", format_number(snap.requested), format_number(snap.time), format_number(*p));
        }
    }
    out
}

/// Writes series, snapshots, sudden-death intervals and the manifest of one run.
pub fn write_result(result: &ScenarioResult, config: &RunConfig, dir: &Path, wall_time: f64) -> Result<()> {
    write_timeseries(result, dir)?;
    for (k, snap) in result.snapshots.iter().enumerate() {
        write_wigner(&snap.wigner, &dir.join(format!("wigner_{k}.csv")))?;
    }
    if !result.snapshots.is_empty() {
        write_file(&dir.join("snapshots.csv"), &snapshot_csv(result))?;
    }
    if let Some(sd) = &result.sudden_death {
        let mut out = format!("# negativity <= {} on these sample intervals\nstart,end\n", format_number(sd.zero_tolerance));
        for (a, b) in &sd.dead_intervals {
            let _ = writeln!(out, "{},{}", format_number(*a), format_number(*b));
        }
        write_file(&dir.join("sudden_death.csv"), &out)?;
    }
    let manifest = RunManifest::new(config.clone(), wall_time).with_diagnostics(result);
    write_file(&dir.join("manifest.txt"), &manifest.to_text())
}

/// Reproducible single-run configuration of one sweep member.
fn member_config(config: &RunConfig, result: &ScenarioResult) -> RunConfig {
    RunConfig {
        system: result.config,
        scenario: ScenarioName::Custom,
        t_end: Some(result.grid.t_end),
        dt_sample: Some(result.grid.dt_sample),
        sweep: None,
        ..config.clone()
    }
}

fn write_sweep(results: &[ScenarioResult], config: &RunConfig, out: &Path, started: Instant) -> Result<()> {
    create_dir(out)?;
    let param = config.sweep.as_ref().map(|s| s.parameter).unwrap_or(SweepParameter::Pump);
    let mut summary = format!(
        "{},revival_count,dead_intervals,max_negativity,t_max_negativity,steady_state_negativity,steady_state_distance\n",
        param.key()
    );
    for r in results {
        let value = match param {
            SweepParameter::Pump => r.config.pump,
            SweepParameter::Kappa => r.config.kappa,
        };
        let dir = out.join(format!("{}_{}", param.key(), format_number(value)));
        write_result(r, &member_config(config, r), &dir, started.elapsed().as_secs_f64())?;
        let sd = r.sudden_death.as_ref();
        let peak = r.series(scenarios::SERIES_NEGATIVITY).global_max();
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            format_number(value),
            sd.map_or(0, |s| s.revival_count),
            sd.map_or(0, |s| s.dead_intervals.len()),
            peak.map_or("nan".into(), |p| format_number(p.value)),
            peak.map_or("nan".into(), |p| format_number(p.time)),
            r.steady_state_negativity.map_or("nan".into(), format_number),
            r.steady_state_distance.map_or("nan".into(), format_number),
        );
    }
    write_file(&out.join("summary.csv"), &summary)?;
    let mut manifest = RunManifest::new(config.clone(), started.elapsed().as_secs_f64());
    let worst = results.iter().map(|r| r.worst).reduce(|a, b| a.worst(b));
    if let Some(w) = worst {
        manifest.set("max_trace_drift", format_number(w.trace_drift));
        manifest.set("max_hermiticity_residue", format_number(w.hermiticity));
        manifest.set("min_eigenvalue", format_number(w.min_eigenvalue));
    }
    write_file(&out.join("manifest.txt"), &manifest.to_text())
}

/// Process exit code for an error: 2 for bad input, 3 for invariant
/// violations during a run, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invariant(_) | Error::StepUnderflow(_) => 3,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

#[derive(Parser, Debug)]
#[command(name = "threephoton", version, about = "Three-photon light coupled to a pumped, lossy quantum dot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines)
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set kappa=6`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self, extra: &[String]) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => read(p)?,
            None => String::new(),
        };
        let mut overrides = self.set.clone();
        overrides.extend_from_slice(extra);
        parse_config_str_with(&text, &overrides)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its time series
    Evolve {
        #[command(flatten)]
        config: ConfigArgs,
        /// closed-ground, closed-excited, entanglement, dissipative or custom
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Wigner function of the field at the given times
    Wigner {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated times; 0 renders the initial state
        #[arg(long, value_delimiter = ',', default_value = "0")]
        times: Vec<f64>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep the pump or leakage rate
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// pump or kappa
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated rate values
        #[arg(long)]
        values: Option<String>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Print the steady-state negativity and populations
    Steady {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the invariant self-test suite
    Check,
}

/// Runs the command line on `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Evolve { config, scenario, out } => {
            let extra: Vec<String> = scenario.into_iter().map(|s| format!("scenario={s}")).collect();
            config.load(&extra).and_then(|cfg| cmd_evolve(&cfg, &out))
        }
        Command::Wigner { config, times, out } => config.load(&[]).and_then(|cfg| cmd_wigner(&cfg, &times, &out)),
        Command::Sweep { config, param, values, out } => {
            let mut extra = vec!["scenario=dissipative".to_string()];
            extra.extend(param.map(|p| format!("sweep_param={p}")));
            extra.extend(values.map(|v| format!("sweep_values={v}")));
            config.load(&extra).and_then(|cfg| cmd_sweep(&cfg, &out))
        }
        Command::Steady { config } => config.load(&[]).and_then(|cfg| cmd_steady(&cfg)),
        Command::Check => cmd_check(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let started = Instant::now();
    let spec = cfg.to_spec()?;
    if cfg.scenario == ScenarioName::Dissipative {
        let results = scenarios::run_dissipative_sweep(&spec)?;
        write_sweep(&results, cfg, out, started)?;
        println!("{} runs written to {}", results.len(), out.display());
        return Ok(0);
    }
    let result = scenarios::run(&spec)?;
    create_dir(out)?;
    write_result(&result, cfg, out, started.elapsed().as_secs_f64())?;
    println!(
        "{}: {} samples, max trace drift {}, written to {}",
        result.name,
        result.grid.num_samples(),
        format_number(result.worst.trace_drift),
        out.display()
    );
    Ok(0)
}

fn cmd_wigner(cfg: &RunConfig, times: &[f64], out: &Path) -> Result<i32> {
    let started = Instant::now();
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::validation("times", "snapshot times must be finite and non-negative"));
    }
    let grid = cfg.phase_space_grid()?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    create_dir(out)?;
    let mut manifest = RunManifest::new(cfg.clone(), 0.0);
    if t_max == 0.0 {
        let field = partial_trace(&cfg.system.initial_state()?, Subsystem::Field)?;
        let w = crate::wigner::wigner_grid(&field, &grid)?;
        for k in 0..times.len() {
            write_wigner(&w, &out.join(format!("wigner_{k}.csv")))?;
        }
    } else {
        let mut spec = RunConfig { scenario: ScenarioName::Custom, t_end: Some(t_max), ..cfg.clone() }.to_spec()?;
        spec.snapshots = times.to_vec();
        let result = scenarios::run(&spec)?;
        for (k, snap) in result.snapshots.iter().enumerate() {
            write_wigner(&snap.wigner, &out.join(format!("wigner_{k}.csv")))?;
        }
        write_file(&out.join("snapshots.csv"), &snapshot_csv(&result))?;
        manifest = manifest.with_diagnostics(&result);
    }
    manifest.set("snapshot_times", times.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","));
    manifest.wall_time = started.elapsed().as_secs_f64();
    write_file(&out.join("manifest.txt"), &manifest.to_text())?;
    println!("{} Wigner grid(s) written to {}", times.len(), out.display());
    Ok(0)
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let started = Instant::now();
    let results = scenarios::run_dissipative_sweep(&cfg.to_spec()?)?;
    write_sweep(&results, cfg, out, started)?;
    for r in &results {
        let sd = r.sudden_death.as_ref().map_or(0, |s| s.revival_count);
        println!("pump = {}, kappa = {}: revivals {sd}", format_number(r.config.pump), format_number(r.config.kappa));
    }
    Ok(0)
}

fn cmd_steady(cfg: &RunConfig) -> Result<i32> {
    let ss = steady_state(&cfg.system)?;
    let field = partial_trace(&ss.rho, Subsystem::Field)?;
    println!("negativity = {}", format_number(negativity(&ss.rho)?));
    println!("linear_entropy = {}", format_number(linear_entropy(&ss.rho, Subsystem::Qubit)?));
    println!("null_dim = {}", ss.null_dim);
    println!("residual = {}", format_number(ss.residual));
    match extract_beta(&field) {
        Ok(b) => println!("beta = {}", format_number(b)),
        Err(_) => println!("beta = nan"),
    }
    let qubit = partial_trace(&ss.rho, Subsystem::Qubit)?;
    println!("p_excited = {}", format_number(qubit.entries()[(1, 1)].re));
    for (n, p) in fock_populations(&field)?.iter().enumerate() {
        println!("p{n} = {}", format_number(*p));
    }
    Ok(0)
}

/// One self-test outcome.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Invariant self-tests on small, fast configurations.
pub fn self_test() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        out.push(CheckOutcome { name, passed, detail });
    };

    push("rk4 matches exact propagation", (|| {
        let mut worst: f64 = 0.0;
        for theta in [0.0, std::f64::consts::FRAC_PI_2] {
            let cfg = SystemConfig { theta, ..SystemConfig::default() };
            let rho0 = cfg.initial_state()?;
            let t = ground_period(cfg.g);
            let grid = TimeGrid::uniform(0.0, t, 20)?;
            dynamics::evolve_with(&rho0, &cfg, &grid, |time, rho, _| {
                let exact = evolve_exact_closed(&rho0, &cfg, time)?;
                worst = worst.max(crate::linalg::max_abs(&(rho.entries() - exact.entries())));
                Ok(())
            })?;
        }
        Ok((worst <= 1e-8, format!("max entry error {}", format_number(worst))))
    })());

    push("dissipative invariants", (|| {
        let cfg = SystemConfig { pump: 0.5, kappa: 6.0, ..SystemConfig::default() };
        let grid = TimeGrid::new(0.0, 0.5, 0.01)?;
        let s = dynamics::evolve_with(&cfg.initial_state()?, &cfg, &grid, |_, _, _| Ok(()))?;
        let w = s.worst;
        let ok = w.trace_drift < 1e-7 && w.hermiticity < 1e-10 && w.min_eigenvalue > -1e-9;
        Ok((ok, format!("trace drift {}, hermiticity {}, min eigenvalue {}", format_number(w.trace_drift), format_number(w.hermiticity), format_number(w.min_eigenvalue))))
    })());

    push("steady state is a fixed point", (|| {
        let cfg = SystemConfig { pump: 0.5, kappa: 6.0, ..SystemConfig::default() };
        let ss = steady_state(&cfg)?;
        let diag = ss.rho.diagnostics();
        let ok = ss.null_dim == 1 && ss.residual < 1e-9 && diag.violation(&Tolerances::STRICT).is_none();
        Ok((ok, format!("null dimension {}, residual {}", ss.null_dim, format_number(ss.residual))))
    })());

    push("pure-state entanglement relation", (|| {
        let cfg = SystemConfig::default();
        let rho0 = cfg.initial_state()?;
        let mut worst: f64 = 0.0;
        for k in 0..=10 {
            let rho = evolve_exact_closed(&rho0, &cfg, k as f64 * 0.013)?;
            let n = negativity(&rho)?;
            let d = linear_entropy(&rho, Subsystem::Qubit)?;
            worst = worst.max((d - 2.0 * n * n).abs());
        }
        Ok((worst < 1e-8, format!("max |delta - 2N^2| {}", format_number(worst))))
    })());

    push("wigner values", (|| {
        let cut = FockCutoff::default();
        let origin = C64::new(0.0, 0.0);
        let w0 = wigner_point(&fock_state(0, cut)?.to_density(), origin)?.value;
        let w3 = wigner_point(&fock_state(3, cut)?.to_density(), origin)?.value;
        let star = three_photon_state(C64::new(0.9, 0.0), cut)?.to_density();
        let wb = wigner_point(&star, origin)?.value;
        let integral = crate::wigner::wigner_grid(&star, &PhaseSpaceGrid::square(4.0, 41)?)?.integral();
        let ok = (w0 - 2.0).abs() < 1e-6
            && (w3 + 2.0).abs() < 1e-6
            && (wb - 1.24).abs() < 1e-6
            && (integral - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI;
        Ok((ok, format!("W(0): {}, {}, {}; integral {}", format_number(w0), format_number(w3), format_number(wb), format_number(integral))))
    })());
    out
}

fn cmd_check() -> Result<i32> {
    let results = self_test();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    Ok(if results.iter().all(|r| r.passed) { 0 } else { 3 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = parse_config_str("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.scenario, ScenarioName::ClosedGround);
    }

    #[test]
    fn rates_and_errors() {
        let cfg = parse_config_str("kappa = 6\npump = 0.5 # fixed pump\n").unwrap();
        assert_eq!((cfg.system.kappa, cfg.system.pump), (6.0, 0.5));
        assert_eq!(cfg.scenario, ScenarioName::Custom);

        let err = parse_config_str("beta = 1.2").unwrap_err();
        assert!(matches!(&err, Error::Validation { key, .. } if key == "beta"), "{err}");
        assert_eq!(exit_code(&err), 2);
        let err = parse_config_str("gamma = 1").unwrap_err().to_string();
        assert!(err.contains("gamma") && err.contains("omega_sigma") && err.contains("grid_points"), "{err}");
        let err = parse_config_str("kappa = -1").unwrap_err();
        assert!(matches!(&err, Error::Validation { key, .. } if key == "kappa"));
        assert!(parse_config_str("g = 1\ng = 2").is_err());
        assert!(parse_config_str("just words").is_err());
        assert!(parse_config_str("n_max = 3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let text = "scenario = dissipative\nkappa = 6\nbeta_re = 0.6\nbeta_im = -0.3\ntheta = 0.7853981633974483\nsweep_values = 0.5, 1.5, 3\nsweep_param = pump\nt_end = 2.5\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(parse_config_str(&cfg.to_text()).unwrap(), cfg);
        let manifest = RunManifest::new(cfg.clone(), 1.5);
        let back = RunManifest::parse(&manifest.to_text()).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.version, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.9), "0.9");
        assert_eq!(format_number(2.0 - 1e-16), "2");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn default_sweeps() {
        let cfg = parse_config_str("scenario = dissipative\nkappa = 6").unwrap();
        assert_eq!(cfg.sweep.unwrap().values, DEFAULT_PUMP_SWEEP.to_vec());
        let cfg = parse_config_str("sweep_param = kappa\npump = 0.5").unwrap();
        assert_eq!(cfg.scenario, ScenarioName::Dissipative);
        assert_eq!(cfg.sweep.unwrap().values, DEFAULT_KAPPA_SWEEP.to_vec());
        assert!(parse_config_str("sweep_values = 1,2").is_err());
        assert!(parse_config_str("sweep_param = pump\nsweep_values = 2,1").is_err());
    }
}
