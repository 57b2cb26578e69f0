//! Named simulation runs: closed Rabi dynamics from either qubit state and
//! dissipative sweeps over the pump or leakage rate.

use crate::dynamics::{self, steady_state, SystemConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, DensityMatrix, Diagnostics, Subsystem};
use crate::measures::{
    extract_beta, fock_populations, linear_entropy, negativity, sudden_death_report, trace_distance,
    SuddenDeathReport, TimeSeries, DEFAULT_ZERO_TOL,
};
use crate::wigner::{wigner_grid, PhaseSpaceGrid, WignerGrid};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Number of Fock populations recorded as series.
pub const RECORDED_POPULATIONS: usize = 5;

/// Samples per analytic period in the closed scenarios.
pub const SAMPLES_PER_PERIOD: usize = 200;

/// Sampling interval of dissipative runs.
pub const DISSIPATIVE_DT: f64 = 0.002;

/// Default pump sweep `{0.5, 1.0, …, 3.0}`.
pub const DEFAULT_PUMP_SWEEP: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

pub const SERIES_BETA: &str = "beta";
pub const SERIES_NEGATIVITY: &str = "negativity";
pub const SERIES_LINEAR_ENTROPY: &str = "linear_entropy";
pub const SERIES_TRACE_DRIFT: &str = "trace_drift";
pub const SERIES_PURITY: &str = "purity";

/// Label of the `n`-photon population series.
pub fn population_label(n: usize) -> String {
    format!("pop_{n}")
}

/// Rate swept by a dissipative scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Pump,
    Kappa,
}

impl SweepParameter {
    pub fn key(self) -> &'static str {
        match self {
            Self::Pump => "pump",
            Self::Kappa => "kappa",
        }
    }

    pub fn apply(self, config: &mut SystemConfig, value: f64) {
        match self {
            Self::Pump => config.pump = value,
            Self::Kappa => config.kappa = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pump" | "P" | "pump_P" => Ok(Self::Pump),
            "kappa" => Ok(Self::Kappa),
            other => Err(Error::validation("sweep_param", format!("unknown parameter '{other}' (expected pump or kappa)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(parameter: SweepParameter, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("sweep_values", "at least one value required"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation("sweep_values", "values must be finite and non-negative"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("sweep_values", "values must be strictly increasing"));
        }
        Ok(Self { parameter, values })
    }
}

/// How long a run lasts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Duration {
    /// Use the grid as given.
    Fixed,
    /// `20·max(1/κ, 1/P)` per run, sampled at the grid's `dt_sample`.
    Relaxation,
}

/// Everything needed to reproduce one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub config: SystemConfig,
    pub grid: TimeGrid,
    pub duration: Duration,
    /// Times at which the field's Wigner function and populations are stored.
    pub snapshots: Vec<f64>,
    pub wigner: PhaseSpaceGrid,
    pub sweep: Option<Sweep>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        for &t in &self.snapshots {
            if !(t >= self.grid.t_start - 1e-12 && t <= self.grid.t_end + 1e-12) {
                return Err(Error::validation("snapshots", format!("time {t} outside the sampled range")));
            }
        }
        if let Some(sweep) = &self.sweep {
            Sweep::new(sweep.parameter, sweep.values.clone())?;
        }
        Ok(())
    }

    /// Sampling grid of a single run with `config`.
    pub fn grid_for(&self, config: &SystemConfig) -> Result<TimeGrid> {
        match self.duration {
            Duration::Fixed => Ok(self.grid),
            Duration::Relaxation => {
                let t_end = self.grid.t_start + relaxation_time(config)?;
                TimeGrid::new(self.grid.t_start, t_end, self.grid.dt_sample.min(t_end - self.grid.t_start))
            }
        }
    }
}

/// `π/(g√3)`: period of the vacuum-amplitude oscillation with the dot in `|g⟩`.
pub fn ground_period(g: f64) -> f64 {
    PI / (g * 3f64.sqrt())
}

/// `π/g`: period of the dynamics with the dot in `|e⟩`.
pub fn excited_period(g: f64) -> f64 {
    PI / g
}

/// `20·max(1/κ, 1/P)`, long enough for convergence to the steady state.
pub fn relaxation_time(config: &SystemConfig) -> Result<f64> {
    let slow = config.kappa.min(config.pump);
    if !(slow > 0.0) {
        return Err(Error::NoDissipation);
    }
    Ok(20.0 / slow)
}

/// State saved at a snapshot time.
#[derive(Clone, Debug)]
pub struct Snapshot {
    /// Requested time.
    pub requested: f64,
    /// Sample time actually used (nearest grid point).
    pub time: f64,
    pub populations: Vec<f64>,
    pub wigner: WignerGrid,
}

/// Output of one run.
#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub name: String,
    pub config: SystemConfig,
    pub grid: TimeGrid,
    pub series: BTreeMap<String, TimeSeries>,
    pub snapshots: Vec<Snapshot>,
    pub sudden_death: Option<SuddenDeathReport>,
    pub steady_state_negativity: Option<f64>,
    /// Trace distance between the last sample and the steady state.
    pub steady_state_distance: Option<f64>,
    pub final_state: DensityMatrix,
    pub worst: Diagnostics,
}

impl ScenarioResult {
    /// Series by label; panics if the label was never recorded.
    pub fn series(&self, label: &str) -> &TimeSeries {
        self.series.get(label).unwrap_or_else(|| panic!("no series '{label}'"))
    }
}

struct Recorder {
    times: Vec<f64>,
    beta: Vec<f64>,
    negativity: Vec<f64>,
    entropy: Vec<f64>,
    populations: Vec<Vec<f64>>,
    drift: Vec<f64>,
    purity: Vec<f64>,
}

impl Recorder {
    fn new(capacity: usize) -> Self {
        let v = || Vec::with_capacity(capacity);
        Self {
            times: v(),
            beta: v(),
            negativity: v(),
            entropy: v(),
            populations: (0..RECORDED_POPULATIONS).map(|_| v()).collect(),
            drift: v(),
            purity: v(),
        }
    }

    fn record(&mut self, t: f64, rho: &DensityMatrix, field: &DensityMatrix, diag: &Diagnostics) -> Result<()> {
        let pops = fock_populations(field)?;
        self.times.push(t);
        self.beta.push(extract_beta(field).unwrap_or(f64::NAN));
        self.negativity.push(negativity(rho)?);
        self.entropy.push(linear_entropy(rho, Subsystem::Qubit)?);
        for (n, series) in self.populations.iter_mut().enumerate() {
            series.push(pops.get(n).copied().unwrap_or(0.0));
        }
        self.drift.push(diag.trace_drift);
        self.purity.push(rho.purity());
        Ok(())
    }

    fn finish(self) -> Result<BTreeMap<String, TimeSeries>> {
        let mut out = BTreeMap::new();
        let t = self.times;
        let mut put = |label: String, values: Vec<f64>| -> Result<()> {
            out.insert(label.clone(), TimeSeries::new(label, t.clone(), values)?);
            Ok(())
        };
        put(SERIES_BETA.into(), self.beta)?;
        put(SERIES_NEGATIVITY.into(), self.negativity)?;
        put(SERIES_LINEAR_ENTROPY.into(), self.entropy)?;
        for (n, values) in self.populations.into_iter().enumerate() {
            put(population_label(n), values)?;
        }
        put(SERIES_TRACE_DRIFT.into(), self.drift)?;
        put(SERIES_PURITY.into(), self.purity)?;
        Ok(out)
    }
}

/// Runs `spec` once with its own configuration (any sweep is ignored).
pub fn run(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    run_single(spec, &spec.config)
}

fn run_single(spec: &ScenarioSpec, config: &SystemConfig) -> Result<ScenarioResult> {
    let grid = spec.grid_for(config)?;
    let n = grid.num_samples();
    // snapshot times mapped onto sample indices
    let mut wanted: Vec<(usize, f64)> = spec
        .snapshots
        .iter()
        .map(|&t| (((t - grid.t_start) / grid.dt_sample).round().clamp(0.0, (n - 1) as f64) as usize, t))
        .collect();
    wanted.sort_by_key(|w| w.0);

    let rho0 = config.initial_state()?;
    let mut rec = Recorder::new(n);
    let mut fields: Vec<(f64, f64, DensityMatrix)> = Vec::new();
    let mut last = rho0.clone();
    let mut index = 0;
    let summary = dynamics::evolve_with(&rho0, config, &grid, |t, rho, diag| {
        let field = partial_trace(rho, Subsystem::Field)?;
        rec.record(t, rho, &field, diag)?;
        for &(_, requested) in wanted.iter().filter(|w| w.0 == index) {
            fields.push((requested, t, field.clone()));
        }
        index += 1;
        if index == n {
            last = rho.clone();
        }
        Ok(())
    })?;

    let snapshots = fields
        .par_iter()
        .map(|(requested, t, field)| {
            Ok(Snapshot {
                requested: *requested,
                time: *t,
                populations: fock_populations(field)?,
                wigner: wigner_grid(field, &spec.wigner)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let series = rec.finish()?;
    let (sudden_death, steady_state_negativity, steady_state_distance) = if config.is_closed() {
        (None, None, None)
    } else {
        let report = sudden_death_report(&series[SERIES_NEGATIVITY], DEFAULT_ZERO_TOL);
        let ss = steady_state(config)?;
        (Some(report), Some(negativity(&ss.rho)?), Some(trace_distance(&last, &ss.rho)?))
    };
    Ok(ScenarioResult {
        name: spec.name.clone(),
        config: *config,
        grid,
        series,
        snapshots,
        sudden_death,
        steady_state_negativity,
        steady_state_distance,
        final_state: last,
        worst: summary.worst,
    })
}

fn closed_spec(name: &str, config: SystemConfig, period: f64) -> Result<ScenarioSpec> {
    let grid = TimeGrid::uniform(0.0, 3.0 * period, 3 * SAMPLES_PER_PERIOD)?;
    Ok(ScenarioSpec {
        name: name.into(),
        config,
        grid,
        duration: Duration::Fixed,
        snapshots: vec![0.0, period / 2.0, period],
        wigner: PhaseSpaceGrid::default(),
        sweep: None,
    })
}

fn require_closed(config: &SystemConfig) -> Result<()> {
    if !config.is_closed() {
        return Err(Error::validation("pump", "closed scenarios need pump = kappa = 0"));
    }
    Ok(())
}

/// Three periods `T = π/(g√3)` from `|g⟩`, snapshots at `0, T/2, T`.
pub fn closed_ground_spec(config: &SystemConfig) -> Result<ScenarioSpec> {
    require_closed(config)?;
    closed_spec("closed-ground", SystemConfig { theta: 0.0, ..*config }, ground_period(config.g))
}

/// Three periods `T = π/g` from `|e⟩`, snapshots at `0, T/2, T`.
pub fn closed_excited_spec(config: &SystemConfig) -> Result<ScenarioSpec> {
    require_closed(config)?;
    closed_spec("closed-excited", SystemConfig { theta: PI / 2.0, ..*config }, excited_period(config.g))
}

/// Closed run from an arbitrary qubit angle without Wigner snapshots; covers
/// three periods of the slower of the two reference periods.
pub fn entanglement_spec(config: &SystemConfig, theta: f64) -> Result<ScenarioSpec> {
    require_closed(config)?;
    let period = if theta == 0.0 { ground_period(config.g) } else { excited_period(config.g) };
    let mut spec = closed_spec("entanglement", SystemConfig { theta, ..*config }, period)?;
    spec.snapshots.clear();
    Ok(spec)
}

/// Dissipative sweep with relaxation-length runs; `config` supplies the
/// fixed rate.
pub fn dissipative_spec(config: &SystemConfig, sweep: Sweep) -> Result<ScenarioSpec> {
    Ok(ScenarioSpec {
        name: format!("sweep-{}", sweep.parameter),
        config: *config,
        grid: TimeGrid::new(0.0, 1.0, DISSIPATIVE_DT)?,
        duration: Duration::Relaxation,
        snapshots: Vec::new(),
        wigner: PhaseSpaceGrid::default(),
        sweep: Some(sweep),
    })
}

pub fn run_closed_ground(config: &SystemConfig) -> Result<ScenarioResult> {
    run(&closed_ground_spec(config)?)
}

pub fn run_closed_excited(config: &SystemConfig) -> Result<ScenarioResult> {
    run(&closed_excited_spec(config)?)
}

pub fn run_entanglement_closed(config: &SystemConfig, theta: f64) -> Result<ScenarioResult> {
    run(&entanglement_spec(config, theta)?)
}

/// One run per sweep value, each with a sudden-death report and the
/// steady-state negativity.
pub fn run_dissipative_sweep(spec: &ScenarioSpec) -> Result<Vec<ScenarioResult>> {
    spec.validate()?;
    let sweep = spec.sweep.as_ref().ok_or_else(|| Error::validation("sweep_param", "sweep scenario needs a swept parameter"))?;
    sweep
        .values
        .par_iter()
        .map(|&value| {
            let mut config = spec.config;
            sweep.parameter.apply(&mut config, value);
            let mut result = run_single(spec, &config)?;
            result.name = format!("{}-{}", sweep.parameter, value);
            Ok(result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::detect_period;

    #[test]
    fn closed_ground_basics() {
        let r = run_closed_ground(&SystemConfig::default()).unwrap();
        assert_eq!(r.series(SERIES_BETA).values()[0], 0.9);
        assert_eq!(r.series(SERIES_NEGATIVITY).values()[0], 0.0);
        assert_eq!(r.snapshots.len(), 3);
        assert!((r.snapshots[0].wigner.values[(50, 50)] - 1.24).abs() < 1e-9);
        let t = ground_period(10.0);
        assert!((r.snapshots[1].time - t / 2.0).abs() < 1e-12);
        assert!((r.snapshots[2].time - t).abs() < 1e-12);
        for w in r.series(SERIES_PURITY).values() {
            assert!((w - 1.0).abs() < 1e-8);
        }
        assert!(r.sudden_death.is_none());
        let p = detect_period(r.series(SERIES_BETA)).unwrap();
        assert!((p.period - t).abs() < 0.01 * t);
    }

    #[test]
    fn closed_excited_empties_vacuum() {
        let r = run_closed_excited(&SystemConfig::default()).unwrap();
        let p0 = r.series(&population_label(0));
        assert!(p0.values().iter().cloned().fold(f64::INFINITY, f64::min) < 1e-6);
        let p = detect_period(r.series(SERIES_BETA)).unwrap();
        assert!((p.period - PI / 10.0).abs() < 0.01 * PI / 10.0);
    }

    #[test]
    fn rejects_open_config_for_closed_scenarios() {
        let cfg = SystemConfig { kappa: 1.0, ..SystemConfig::default() };
        assert!(run_closed_ground(&cfg).is_err());
        assert!(Sweep::new(SweepParameter::Pump, vec![1.0, 0.5]).is_err());
        assert!(Sweep::new(SweepParameter::Pump, vec![-1.0]).is_err());
        assert!("kappa".parse::<SweepParameter>().is_ok());
        assert!("omega".parse::<SweepParameter>().is_err());
    }

    #[test]
    fn short_dissipative_run_relaxes() {
        let cfg = SystemConfig { kappa: 6.0, cutoff: crate::hilbert::FockCutoff::new(8).unwrap(), ..SystemConfig::default() };
        let spec = dissipative_spec(&cfg, Sweep::new(SweepParameter::Pump, vec![3.0, 6.0]).unwrap()).unwrap();
        let runs = run_dissipative_sweep(&spec).unwrap();
        assert_eq!(runs.len(), 2);
        for r in &runs {
            assert!(r.steady_state_distance.unwrap() < 1e-4, "{:?}", r.steady_state_distance);
            let neg = r.series(SERIES_NEGATIVITY).values();
            let tail = &neg[neg.len() * 9 / 10..];
            let spread = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread < 1e-4);
            assert!(r.sudden_death.is_some());
        }
    }
}
