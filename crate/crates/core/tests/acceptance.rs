//! End-to-end acceptance checks. Runs every criterion in sequence (so the
//! runtime limits are measured without contention), prints one PASS/FAIL line
//! per criterion and exits non-zero if any criterion failed. Built without the
//! libtest harness so the report is always printed.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::time::Instant;
use threephoton::dynamics::{evolve_with, steady_state, ClosedPropagator, SystemConfig, TimeGrid};
use threephoton::hilbert::{fock_state, three_photon_state, Diagnostics, FockCutoff};
use threephoton::linalg::max_abs;
use threephoton::measures::{detect_period, trace_distance};
use threephoton::scenarios::{
    self, dissipative_spec, excited_period, ground_period, population_label, ScenarioResult, Sweep, SweepParameter,
    SERIES_BETA, SERIES_LINEAR_ENTROPY, SERIES_NEGATIVITY,
};
use threephoton::wigner::{wigner_grid, wigner_point, PhaseSpaceGrid};

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Default)]
struct Invariants {
    worst: Option<Diagnostics>,
}

impl Invariants {
    fn add(&mut self, d: Diagnostics) {
        self.worst = Some(match self.worst {
            Some(w) => w.worst(d),
            None => d,
        });
    }

    fn add_result(&mut self, r: &ScenarioResult) {
        self.add(r.worst);
    }
}

fn default_config() -> SystemConfig {
    SystemConfig::default()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn closed_period(result: &ScenarioResult, expected: f64, elapsed: f64) -> (bool, String) {
    match detect_period(result.series(SERIES_BETA)) {
        Ok(p) => (
            rel(p.period, expected) <= 0.01 && elapsed < 5.0,
            format!("period {:.6} vs {:.6} (rel {:.2e}), {:.2} s", p.period, expected, rel(p.period, expected), elapsed),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn max_delta_residual(result: &ScenarioResult) -> f64 {
    let n = result.series(SERIES_NEGATIVITY).values();
    let d = result.series(SERIES_LINEAR_ENTROPY).values();
    n.iter().zip(d).map(|(n, d)| (d - 2.0 * n * n).abs()).fold(0.0, f64::max)
}

fn dissipative_run(kappa: f64, pump: f64, parameter: SweepParameter) -> (ScenarioResult, f64) {
    let config = SystemConfig { kappa, pump, ..default_config() };
    let value = match parameter {
        SweepParameter::Pump => pump,
        SweepParameter::Kappa => kappa,
    };
    let spec = dissipative_spec(&config, Sweep::new(parameter, vec![value]).unwrap()).unwrap();
    let start = Instant::now();
    let mut runs = scenarios::run_dissipative_sweep(&spec).unwrap();
    (runs.remove(0), start.elapsed().as_secs_f64())
}

fn aligned(times: &[f64], targets: &[f64], tol: f64) -> bool {
    times.iter().all(|t| targets.iter().any(|s| (t - s).abs() <= tol))
}

fn main() {
    let mut out: Vec<Outcome> = Vec::new();
    let mut inv = Invariants::default();
    let cfg = default_config();

    // 1. closed-system period from the ground state
    let start = Instant::now();
    let ground = scenarios::run_closed_ground(&cfg).unwrap();
    let (passed, detail) = closed_period(&ground, ground_period(cfg.g), start.elapsed().as_secs_f64());
    inv.add_result(&ground);
    out.push(Outcome { id: 1, name: "closed period, ground init", passed, detail });

    // 2. closed-system period from the excited state
    let start = Instant::now();
    let excited = scenarios::run_closed_excited(&cfg).unwrap();
    let (passed, detail) = closed_period(&excited, excited_period(cfg.g), start.elapsed().as_secs_f64());
    inv.add_result(&excited);
    out.push(Outcome { id: 2, name: "closed period, excited init", passed, detail });

    // 3. RK4 against exact diagonalization over three periods
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (theta, period) in [(0.0, ground_period(cfg.g)), (PI / 2.0, excited_period(cfg.g))] {
        let config = SystemConfig { theta, ..cfg };
        let rho0 = config.initial_state().unwrap();
        let exact = ClosedPropagator::new(&config);
        let grid = TimeGrid::uniform(0.0, 3.0 * period, 600).unwrap();
        let summary = evolve_with(&rho0, &config, &grid, |t, rho, _| {
            worst = worst.max(max_abs(&(rho.entries() - exact.propagate(&rho0, t).entries())));
            Ok(())
        })
        .unwrap();
        inv.add(summary.worst);
    }
    let elapsed = start.elapsed().as_secs_f64();
    out.push(Outcome {
        id: 3,
        name: "RK4 equals exact propagation",
        passed: worst <= 1e-8 && elapsed < 10.0,
        detail: format!("max entry error {worst:.2e}, {elapsed:.2} s"),
    });

    // 4. entanglement shares the beta period; negativity peaks where p3 vanishes
    let ent = scenarios::run_entanglement_closed(&cfg, 0.0).unwrap();
    inv.add_result(&ent);
    let dt = ent.grid.dt_sample;
    let period = |label: &str| detect_period(ent.series(label)).map(|p| p.period).unwrap_or(f64::NAN);
    let (pb, pn, pe) = (period(SERIES_BETA), period(SERIES_NEGATIVITY), period(SERIES_LINEAR_ENTROPY));
    let peaks: Vec<f64> = ent.series(SERIES_NEGATIVITY).local_maxima().iter().map(|p| p.time).collect();
    let p3_minima: Vec<f64> = ent.series(&population_label(3)).local_minima().iter().map(|p| p.time).collect();
    let periods_ok = (pn - pb).abs() <= 2.0 * dt && (pe - pb).abs() <= 2.0 * dt;
    let align_ok = !peaks.is_empty() && aligned(&peaks, &p3_minima, 2.0 * dt);
    out.push(Outcome {
        id: 4,
        name: "entanglement periodicity",
        passed: periods_ok && align_ok,
        detail: format!(
            "periods beta {pb:.6}, negativity {pn:.6}, entropy {pe:.6} (2 samples = {:.6}); {} negativity peaks aligned with p3 minima: {align_ok}",
            2.0 * dt,
            peaks.len()
        ),
    });

    // 5. delta = 2 N^2 on pure closed trajectories
    let residual = [&ground, &excited, &ent].iter().map(|r| max_delta_residual(r)).fold(0.0, f64::max);
    out.push(Outcome {
        id: 5,
        name: "pure-state cross-relation",
        passed: residual <= 1e-8,
        detail: format!("max |delta - 2N^2| = {residual:.2e}"),
    });

    // 6. Wigner values and normalization
    let cut = FockCutoff::default();
    let origin = C64::new(0.0, 0.0);
    let w_vac = wigner_point(&fock_state(0, cut).unwrap().to_density(), origin).unwrap().value;
    let w_three = wigner_point(&fock_state(3, cut).unwrap().to_density(), origin).unwrap().value;
    let star = three_photon_state(C64::new(0.9, 0.0), cut).unwrap().to_density();
    let w_star = wigner_point(&star, origin).unwrap().value;
    let start = Instant::now();
    let grid = wigner_grid(&star, &PhaseSpaceGrid::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let integral = grid.integral();
    out.push(Outcome {
        id: 6,
        name: "Wigner values",
        passed: (w_vac - 2.0).abs() <= 1e-6
            && (w_three + 2.0).abs() <= 1e-6
            && (w_star - 1.24).abs() <= 1e-6
            && rel(integral, PI) <= 0.02
            && elapsed < 10.0,
        detail: format!("W(0) = {w_vac:.9}, {w_three:.9}, {w_star:.9}; integral {integral:.6}; grid {elapsed:.2} s"),
    });

    // 7. sudden death and revivals over a leakage sweep
    let mut counts = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut first_revives = false;
    for kappa in [2.0, 4.0, 6.0] {
        let (r, secs) = dissipative_run(kappa, 0.5, SweepParameter::Kappa);
        inv.add_result(&r);
        slowest = slowest.max(secs);
        let sd = r.sudden_death.clone().unwrap();
        if kappa == 2.0 {
            // a death after the initial product state that is followed by a revival
            let t0 = r.grid.t_start;
            first_revives = sd.dead_intervals.iter().any(|&(a, b)| a > t0 && b < r.grid.t_end);
        }
        counts.push(sd.revival_count);
    }
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    out.push(Outcome {
        id: 7,
        name: "sudden death and revivals",
        passed: first_revives && monotone && slowest < 30.0,
        detail: format!("revival counts for kappa 2, 4, 6: {counts:?}; death + revival at kappa 2: {first_revives}; slowest run {slowest:.1} s"),
    });

    // 8. pump sweep at kappa = 6
    let start = Instant::now();
    let mut peaks = Vec::new();
    for pump in [0.5, 1.5, 3.0] {
        let (r, _) = dissipative_run(6.0, pump, SweepParameter::Pump);
        inv.add_result(&r);
        peaks.push(r.series(SERIES_NEGATIVITY).global_max().unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ordered = peaks.windows(2).all(|w| w[1].value < w[0].value && w[1].time < w[0].time);
    out.push(Outcome {
        id: 8,
        name: "pump-sweep ordering",
        passed: ordered && elapsed < 60.0,
        detail: format!(
            "peaks (t, N): {}; {elapsed:.1} s",
            peaks.iter().map(|p| format!("({:.5}, {:.5})", p.time, p.value)).collect::<Vec<_>>().join(", ")
        ),
    });

    // 9. steady state independent of the initial qubit state
    let start = Instant::now();
    let base = SystemConfig { kappa: 6.0, pump: 0.5, ..cfg };
    let ss = steady_state(&base).unwrap();
    let grid = TimeGrid::new(0.0, 12.0, 0.01).unwrap();
    let mut finals = Vec::new();
    for theta in [0.0, PI / 2.0] {
        let config = SystemConfig { theta, ..base };
        let mut last = None;
        let summary = evolve_with(&config.initial_state().unwrap(), &config, &grid, |_, rho, _| {
            last = Some(rho.clone());
            Ok(())
        })
        .unwrap();
        inv.add(summary.worst);
        finals.push(last.unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let d_pair = trace_distance(&finals[0], &finals[1]).unwrap();
    let d_ss = finals.iter().map(|f| trace_distance(f, &ss.rho).unwrap()).fold(0.0, f64::max);
    out.push(Outcome {
        id: 9,
        name: "steady-state uniqueness",
        passed: ss.null_dim == 1 && d_pair < 1e-6 && d_ss < 1e-6 && elapsed < 30.0,
        detail: format!("distance between runs {d_pair:.2e}, to steady state {d_ss:.2e}, {elapsed:.1} s"),
    });

    // 10. structural invariants of every run above and the self-test command
    let w = inv.worst.unwrap();
    let code = threephoton::cli::run(["threephoton", "check"]);
    out.push(Outcome {
        id: 10,
        name: "structural invariants",
        passed: w.trace_drift < 1e-7 && w.hermiticity < 1e-10 && w.min_eigenvalue > -1e-9 && code == 0,
        detail: format!(
            "trace drift {:.2e}, hermiticity {:.2e}, min eigenvalue {:.2e}, check exit {code}",
            w.trace_drift, w.hermiticity, w.min_eigenvalue
        ),
    });

    for o in &out {
        println!("{} criterion {:>2} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
    }
    let failed: Vec<usize> = out.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", out.len());
    } else {
        eprintln!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}

