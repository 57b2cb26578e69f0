//! Scalar diagnostics of the joint and reduced states, and analyses of their
//! time series.
//!
//! The negativity is an entanglement monotone on 2⊗2 and 2⊗3 spaces. On the
//! truncated 2⊗n_max space used here it is reported as-is: a positive value
//! still certifies entanglement, but it is a witness rather than a full
//! quantifier.

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, partial_transpose, DensityMatrix, SpaceTag, Subsystem};
use crate::linalg;

/// Default threshold below which the negativity counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

fn expect_tag(rho: &DensityMatrix, tag: SpaceTag) -> Result<()> {
    if rho.tag() == tag {
        Ok(())
    } else {
        Err(Error::SpaceTag { expected: tag, found: rho.tag() })
    }
}

/// `(‖ρ^{T_q}‖₁ − 1)/2`, evaluated as the sum of the magnitudes of the negative
/// eigenvalues of the partial transpose.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho, Subsystem::Qubit)?;
    let ev = linalg::hermitian_eigenvalues(pt.entries());
    // eigenvalues within solver round-off of zero are zero
    let scale = ev.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let floor = 4.0 * pt.dim() as f64 * f64::EPSILON * scale;
    Ok(ev.iter().filter(|&&l| l < -floor).map(|l| -l).sum())
}

/// `1 − Tr ρ₂²` of the state left after tracing out `traced_out`.
pub fn linear_entropy(rho: &DensityMatrix, traced_out: Subsystem) -> Result<f64> {
    let keep = match traced_out {
        Subsystem::Qubit => Subsystem::Field,
        Subsystem::Field => Subsystem::Qubit,
    };
    Ok(1.0 - partial_trace(rho, keep)?.purity())
}

/// `pₙ = ⟨n|ρ|n⟩` of a field state.
pub fn fock_populations(rho_field: &DensityMatrix) -> Result<Vec<f64>> {
    expect_tag(rho_field, SpaceTag::Field)?;
    Ok((0..rho_field.dim()).map(|n| rho_field.entries()[(n, n)].re).collect())
}

/// Magnitude of the vacuum amplitude when the field is read as
/// `β|0⟩ + √(1−|β|²)|3⟩`: `|β| = √(p₀/(p₀ + p₃))`.
pub fn extract_beta(rho_field: &DensityMatrix) -> Result<f64> {
    let p = fock_populations(rho_field)?;
    if p.len() < 4 {
        return Err(Error::Dimension("field space must contain |3>".into()));
    }
    let (p0, p3) = (p[0].max(0.0), p[3].max(0.0));
    let sum = p0 + p3;
    if sum < 1e-12 {
        return Err(Error::UndefinedBeta(sum));
    }
    Ok((p0 / sum).sqrt().clamp(0.0, 1.0))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.tag() != b.tag() || a.dim() != b.dim() {
        return Err(Error::Dimension("trace distance between different spaces".into()));
    }
    Ok(linalg::trace_distance(a.entries(), b.entries()))
}

/// A labelled scalar signal on strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension(format!("{} times vs {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("times", "must be strictly increasing"));
        }
        Ok(Self { label: label.into(), times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean sampling interval.
    pub fn mean_step(&self) -> f64 {
        match self.times.len() {
            0 | 1 => 0.0,
            n => (self.times[n - 1] - self.times[0]) / (n - 1) as f64,
        }
    }

    /// `(min, max)` of the values.
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Interior local maxima, refined by a parabola through the three samples
    /// around each one.
    pub fn local_maxima(&self) -> Vec<Peak> {
        self.extrema(|a, b| a > b)
    }

    pub fn local_minima(&self) -> Vec<Peak> {
        self.extrema(|a, b| a < b)
    }

    fn extrema(&self, better: impl Fn(f64, f64) -> bool) -> Vec<Peak> {
        let v = &self.values;
        let mut out = Vec::new();
        let mut k = 1;
        while k + 1 < v.len() {
            if better(v[k], v[k - 1]) && !better(v[k + 1], v[k]) {
                // skip over a flat top, marking its first sample
                let mut end = k;
                while end + 1 < v.len() && v[end + 1] == v[k] {
                    end += 1;
                }
                if end + 1 < v.len() && better(v[k], v[end + 1]) {
                    out.push(self.refine(k));
                }
                k = end + 1;
            } else {
                k += 1;
            }
        }
        out
    }

    /// Largest sample, refined by a parabola when it is interior.
    pub fn global_max(&self) -> Option<Peak> {
        let (k, _) = self.values.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })?;
        Some(self.refine(k))
    }

    fn refine(&self, k: usize) -> Peak {
        let (t, v) = (&self.times, &self.values);
        if k == 0 || k + 1 >= v.len() {
            return Peak { index: k, time: t[k], value: v[k] };
        }
        let (a, b, c) = (v[k - 1], v[k], v[k + 1]);
        let curv = a - 2.0 * b + c;
        if curv == 0.0 {
            return Peak { index: k, time: t[k], value: b };
        }
        let delta = (0.5 * (a - c) / curv).clamp(-0.5, 0.5);
        let step = if delta >= 0.0 { t[k + 1] - t[k] } else { t[k] - t[k - 1] };
        Peak { index: k, time: t[k] + delta * step, value: b - 0.25 * (a - c) * delta }
    }
}

/// A refined extremum of a [`TimeSeries`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Nearest sample index.
    pub index: usize,
    pub time: f64,
    pub value: f64,
}

/// Dominant period of a signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Half the sampling interval over the period.
    pub relative_uncertainty: f64,
}

/// Autocorrelation level a candidate period must exceed.
pub const PERIOD_THRESHOLD: f64 = 0.5;

/// Dominant period from the first autocorrelation peak above
/// [`PERIOD_THRESHOLD`], refined by quadratic interpolation.
///
/// The autocorrelation at lag `k` is the Pearson correlation between the series
/// and its copy shifted by `k` samples, so it is bounded by 1 and reaches 1 at
/// every multiple of an exact period.
/// The series must be uniformly sampled and should span at least three periods.
pub fn detect_period(series: &TimeSeries) -> Result<PeriodEstimate> {
    let n = series.len();
    let aperiodic = Error::Aperiodic { threshold: PERIOD_THRESHOLD };
    if n < 8 {
        return Err(aperiodic);
    }
    let dt = series.mean_step();
    if series.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::validation("times", "period detection needs uniform sampling"));
    }
    let x = &series.values;
    let spread = x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - x.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(spread > 1e-300) {
        return Err(aperiodic);
    }
    let max_lag = n / 2;
    let acf: Vec<f64> = (0..=max_lag).map(|k| pearson(&x[..n - k], &x[k..])).collect();

    let Some(first_drop) = acf.iter().position(|&r| r < PERIOD_THRESHOLD) else {
        return Err(aperiodic);
    };
    let k = (first_drop.max(1)..max_lag)
        .find(|&k| acf[k] > PERIOD_THRESHOLD && acf[k] >= acf[k - 1] && acf[k] >= acf[k + 1])
        .ok_or(aperiodic)?;
    let (a, b, c) = (acf[k - 1], acf[k], acf[k + 1]);
    let curv = a - 2.0 * b + c;
    let delta = if curv < 0.0 { (0.5 * (a - c) / curv).clamp(-0.5, 0.5) } else { 0.0 };
    let period = (k as f64 + delta) * dt;
    Ok(PeriodEstimate { period, relative_uncertainty: 0.5 * dt / period })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa > 0.0 && sbb > 0.0 {
        sab / (saa * sbb).sqrt()
    } else {
        0.0
    }
}

/// Intervals where entanglement vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct SuddenDeathReport {
    /// Maximal runs of samples at or below `zero_tolerance`, as
    /// `(first dead sample time, last dead sample time)`.
    pub dead_intervals: Vec<(f64, f64)>,
    /// Dead intervals followed by a non-dead sample.
    pub revival_count: usize,
    pub zero_tolerance: f64,
}

impl SuddenDeathReport {
    /// Whether the last dead interval reaches the final sample of `series`.
    pub fn dead_at_end(&self, series: &TimeSeries) -> bool {
        match (self.dead_intervals.last(), series.times.last()) {
            (Some(&(_, end)), Some(&t)) => end == t,
            _ => false,
        }
    }
}

pub fn sudden_death_report(series: &TimeSeries, zero_tol: f64) -> SuddenDeathReport {
    let (t, v) = (&series.times, &series.values);
    let mut dead_intervals = Vec::new();
    let mut revival_count = 0;
    let mut k = 0;
    while k < v.len() {
        if v[k] <= zero_tol {
            let start = k;
            while k + 1 < v.len() && v[k + 1] <= zero_tol {
                k += 1;
            }
            dead_intervals.push((t[start], t[k]));
            if k + 1 < v.len() {
                revival_count += 1;
            }
        }
        k += 1;
    }
    SuddenDeathReport { dead_intervals, revival_count, zero_tolerance: zero_tol }
}
