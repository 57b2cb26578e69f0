use std::f64::consts::PI;
use threephoton::dynamics::{steady_state, SystemConfig};
use threephoton::hilbert::FockCutoff;
use threephoton::measures::{trace_distance, TimeSeries};
use threephoton::scenarios::{
    dissipative_spec, run, run_closed_excited, run_dissipative_sweep, run_entanglement_closed, Sweep, SweepParameter,
    SERIES_LINEAR_ENTROPY, SERIES_NEGATIVITY, SERIES_TRACE_DRIFT,
};

fn max_of(s: &TimeSeries) -> f64 {
    s.values().iter().cloned().fold(f64::MIN, f64::max)
}

#[test]
fn closed_negativity_maximum_matches_schmidt_form() {
    // N(t) = sqrt((b^2 + c^2 cos^2) c^2 sin^2), maximal at sin^2 = 1 when c^2 < 1/2
    let r = run_entanglement_closed(&SystemConfig::default(), 0.0).unwrap();
    let peak = r.series(SERIES_NEGATIVITY).global_max().unwrap();
    let expected = 0.9 * 0.19f64.sqrt();
    assert!((peak.value - expected).abs() < 1e-6, "{} vs {expected}", peak.value);
    assert!(peak.value <= 0.5);
}

#[test]
fn excited_entropy_dips_between_negativity_minima() {
    let r = run_entanglement_closed(&SystemConfig::default(), PI / 2.0).unwrap();
    let neg = r.series(SERIES_NEGATIVITY);
    let ent = r.series(SERIES_LINEAR_ENTROPY);
    let minima: Vec<f64> = neg.local_minima().iter().map(|p| p.time).collect();
    let dips: Vec<f64> = ent.local_minima().iter().map(|p| p.time).collect();
    assert!(minima.len() >= 2);
    let between = minima.windows(2).any(|w| dips.iter().any(|&t| t > w[0] && t < w[1]));
    assert!(between, "negativity minima {minima:?}, entropy minima {dips:?}");
}

#[test]
fn excited_run_is_pure_and_trace_preserving() {
    let r = run_closed_excited(&SystemConfig::default()).unwrap();
    assert!(max_of(r.series(SERIES_TRACE_DRIFT)) < 1e-7);
    for p in r.series("purity").values() {
        assert!((p - 1.0).abs() < 1e-8);
    }
}

#[test]
fn leakage_run_dies_and_relaxes() {
    let config = SystemConfig { pump: 0.5, ..SystemConfig::default() };
    let spec = dissipative_spec(&config, Sweep::new(SweepParameter::Kappa, vec![6.0]).unwrap()).unwrap();
    let r = run_dissipative_sweep(&spec).unwrap().remove(0);
    let neg = r.series(SERIES_NEGATIVITY);
    let sd = r.sudden_death.as_ref().unwrap();
    assert!(sd.revival_count >= 1);
    assert!(sd.dead_at_end(neg));
    assert!(r.steady_state_distance.unwrap() < 1e-4);
    assert!(r.steady_state_negativity.unwrap() < 1e-9);
    let tail = &neg.values()[neg.len() * 9 / 10..];
    let spread = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-4);
}

#[test]
fn sweep_runs_reach_their_steady_states() {
    let config = SystemConfig { kappa: 6.0, cutoff: FockCutoff::new(10).unwrap(), ..SystemConfig::default() };
    let spec = dissipative_spec(&config, Sweep::new(SweepParameter::Pump, vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
    for r in run_dissipative_sweep(&spec).unwrap() {
        let ss = steady_state(&r.config).unwrap();
        assert!(trace_distance(&r.final_state, &ss.rho).unwrap() < 1e-4, "pump {}", r.config.pump);
        assert!(r.worst.trace_drift < 1e-7);
    }
}

#[test]
fn identical_specs_give_identical_output() {
    let config = SystemConfig { kappa: 6.0, pump: 3.0, cutoff: FockCutoff::new(8).unwrap(), ..SystemConfig::default() };
    let mut spec = dissipative_spec(&config, Sweep::new(SweepParameter::Pump, vec![3.0]).unwrap()).unwrap();
    spec.duration = threephoton::scenarios::Duration::Fixed;
    spec.grid = threephoton::dynamics::TimeGrid::new(0.0, 0.5, 0.01).unwrap();
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    for (label, s) in &a.series {
        let other = &b.series[label];
        assert!(s.values().iter().zip(other.values()).all(|(x, y)| x.to_bits() == y.to_bits()), "{label}");
    }
}
