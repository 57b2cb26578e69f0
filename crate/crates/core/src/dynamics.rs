//! Jaynes-Cummings Hamiltonian, Lindblad master equation, and its solvers.
//!
//! The master equation integrated here is
//!
//! ```text
//! dρ/dt = i[ρ, H] + (P/2)(2σ†ρσ − σσ†ρ − ρσσ†) + (κ/2)(2aρa† − a†aρ − ρa†a)
//! ```
//!
//! with `H = ω_a a†a + ω_σ σ†σ + g(a†σ + aσ†)`. Time is in the inverse units of
//! the rates; with `g` given in ps⁻¹ times come out in ps.

use crate::error::{Error, Result};
use crate::hilbert::{
    self, annihilation, embed_field, embed_qubit, qubit_lowering, DensityMatrix, Diagnostics, FockCutoff,
    OperatorMatrix, SpaceTag, Tolerances,
};
use crate::linalg::{self, CMatrix, CVector, I, ZERO};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Physical and numerical parameters of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    /// Dipole coupling `g`.
    pub g: f64,
    /// Cavity mode frequency `ω_a`.
    pub omega_a: f64,
    /// Two-level transition frequency `ω_σ`.
    pub omega_sigma: f64,
    /// Incoherent pumping rate `P` of the dot.
    pub pump: f64,
    /// Cavity leakage rate `κ`.
    pub kappa: f64,
    pub cutoff: FockCutoff,
    /// Qubit mixing angle of the initial condition.
    pub theta: f64,
    /// Vacuum amplitude of the three-photon state.
    pub beta: C64,
}

impl Default for SystemConfig {
    /// `g = 10`, resonance in the frame rotating at the mode frequency, no
    /// dissipation, `β = 0.9`, `θ = 0`, 15 Fock levels.
    fn default() -> Self {
        Self {
            g: 10.0,
            omega_a: 0.0,
            omega_sigma: 0.0,
            pump: 0.0,
            kappa: 0.0,
            cutoff: FockCutoff::default(),
            theta: 0.0,
            beta: C64::new(0.9, 0.0),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(key, "must be finite"))
            }
        };
        finite("g", self.g)?;
        finite("omega_a", self.omega_a)?;
        finite("omega_sigma", self.omega_sigma)?;
        finite("pump", self.pump)?;
        finite("kappa", self.kappa)?;
        finite("theta", self.theta)?;
        if !(self.g > 0.0) {
            return Err(Error::validation("g", "coupling must be positive"));
        }
        if self.pump < 0.0 {
            return Err(Error::validation("pump", "rate must be non-negative"));
        }
        if self.kappa < 0.0 {
            return Err(Error::validation("kappa", "rate must be non-negative"));
        }
        if !(self.beta.norm() <= 1.0) {
            return Err(Error::validation("beta", format!("|beta| = {} exceeds 1", self.beta.norm())));
        }
        Ok(())
    }

    /// `Δ = ω_a − ω_σ`.
    pub fn detuning(&self) -> f64 {
        self.omega_a - self.omega_sigma
    }

    pub fn is_closed(&self) -> bool {
        self.pump == 0.0 && self.kappa == 0.0
    }

    /// Initial state `(cos θ|g⟩ + sin θ|e⟩) ⊗ (β|0⟩ + √(1−|β|²)|3⟩)`.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        hilbert::initial_condition(self.theta, self.beta, self.cutoff)
    }

    /// Largest RK4 step allowed: `min(0.001/ω, 0.1/max(κ, P))` where `ω` is the
    /// largest of `g`, `|ω_a|` and `|ω_σ|`.
    pub fn max_step(&self) -> f64 {
        let omega = self.g.max(self.omega_a.abs()).max(self.omega_sigma.abs());
        (1e-3 / omega).min(0.1 / self.kappa.max(self.pump).max(1e-30))
    }
}

/// Output sampling grid `t_start, t_start + dt, …` up to `t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt_sample: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt_sample: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::validation("t_end", "must exceed the start time"));
        }
        if !(dt_sample > 0.0 && dt_sample <= t_end - t_start) {
            return Err(Error::validation("dt_sample", "must be positive and no longer than the span"));
        }
        Ok(Self { t_start, t_end, dt_sample })
    }

    /// Grid with `intervals` equal steps over `[t_start, t_end]`.
    pub fn uniform(t_start: f64, t_end: f64, intervals: usize) -> Result<Self> {
        Self::new(t_start, t_end, (t_end - t_start) / intervals.max(1) as f64)
    }

    pub fn num_samples(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt_sample + 1e-9).floor() as usize + 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.num_samples()).map(|k| self.t_start + k as f64 * self.dt_sample).collect()
    }
}

/// Density matrices sampled along a time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn worst_diagnostics(&self) -> Diagnostics {
        worst_of(&self.diagnostics)
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }
}

pub(crate) fn worst_of(diags: &[Diagnostics]) -> Diagnostics {
    diags.iter().copied().reduce(Diagnostics::worst).unwrap_or_default()
}

/// `ω_a a†a + ω_σ σ†σ + g(a†σ + aσ†)` on the joint space.
pub fn hamiltonian(config: &SystemConfig) -> OperatorMatrix {
    let cut = config.cutoff;
    let a = embed_field(&annihilation(cut)).expect("field operator");
    let s = embed_qubit(&qubit_lowering(), cut).expect("qubit operator");
    let ad = a.adjoint();
    let sd = s.adjoint();
    let m = (ad.entries() * a.entries()) * C64::from(config.omega_a)
        + (sd.entries() * s.entries()) * C64::from(config.omega_sigma)
        + (ad.entries() * s.entries() + a.entries() * sd.entries()) * C64::from(config.g);
    OperatorMatrix::from_raw(SpaceTag::Joint, m)
}

/// Non-zero entries `(row, col, value)` of an operator.
#[derive(Clone, Debug, Default)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != ZERO {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self { entries }
    }
}

/// The Lindblad generator in a form suited to repeated application.
///
/// Written as `L(ρ) = −i(Kρ − ρK†) + Σ_j J_j ρ J_j†` with the non-Hermitian
/// `K = H − (i/2) Σ_j J_j†J_j` and jump operators `J = √P σ†` and `J = √κ a`.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    dim: usize,
    // −i K
    left: SparseOp,
    // +i K̄, applied from the right
    right: SparseOp,
    // Σ_j J ρ J† as flat (destination, source, coefficient) triples
    jumps: Vec<(usize, usize, C64)>,
}

impl Lindbladian {
    pub fn new(config: &SystemConfig) -> Self {
        let cut = config.cutoff;
        let h = hamiltonian(config).into_entries();
        let a = embed_field(&annihilation(cut)).expect("field operator").into_entries();
        let sd = embed_qubit(&qubit_lowering().adjoint(), cut).expect("qubit operator").into_entries();

        let d = cut.joint_dim();
        let mut k = h;
        let mut jumps = Vec::new();
        for (op, rate) in [(sd, config.pump), (a, config.kappa)] {
            if rate > 0.0 {
                let j = op * C64::from(rate.sqrt());
                k -= (j.adjoint() * &j) * (I * 0.5);
                let sparse = SparseOp::from_dense(&j);
                for &(r1, c1, v1) in &sparse.entries {
                    for &(r2, c2, v2) in &sparse.entries {
                        jumps.push((r1 + r2 * d, c1 + c2 * d, v1 * v2.conj()));
                    }
                }
            }
        }
        jumps.sort_by_key(|e| (e.0, e.1));
        let left = SparseOp::from_dense(&(&k * -I));
        let right = SparseOp::from_dense(&(k.map(|z| z.conj()) * I));
        Self { dim: d, left, right, jumps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `L(ρ)` into `out`. Works for any square matrix, Hermitian or not.
    pub fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let src = rho.as_slice();
        let dst = out.as_mut_slice();
        dst.fill(ZERO);
        // (−iK) ρ
        for &(r, c, v) in &self.left.entries {
            for j in 0..d {
                dst[r + j * d] += v * src[c + j * d];
            }
        }
        // ρ (iK†): column r of the result gathers column c of ρ
        for &(r, c, v) in &self.right.entries {
            let (s, o) = (c * d, r * d);
            for i in 0..d {
                dst[i + o] += v * src[i + s];
            }
        }
        self.add_jumps(src, dst);
    }

    /// `L(ρ)` for Hermitian `ρ`, using `−iKρ = (ρ iK†)†`. `scratch` must be `dim × dim`.
    pub fn apply_hermitian_into(&self, rho: &CMatrix, scratch: &mut CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let src = rho.as_slice();
        let x = scratch.as_mut_slice();
        x.fill(ZERO);
        for &(r, c, v) in &self.right.entries {
            let (col_in, col_out) = (&src[c * d..(c + 1) * d], r * d);
            for (o, s) in x[col_out..col_out + d].iter_mut().zip(col_in) {
                *o += v * s;
            }
        }
        let dst = out.as_mut_slice();
        for j in 0..d {
            for i in j..d {
                let v = x[i + j * d] + x[j + i * d].conj();
                dst[i + j * d] = v;
                dst[j + i * d] = v.conj();
            }
        }
        self.add_jumps(src, dst);
    }

    fn add_jumps(&self, src: &[C64], dst: &mut [C64]) {
        for &(to, from, v) in &self.jumps {
            dst[to] += v * src[from];
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.apply_into(rho, &mut out);
        out
    }

    /// Dense superoperator acting on column-stacked `vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim;
        let mut sup = CMatrix::zeros(d * d, d * d);
        let mut basis = CMatrix::zeros(d, d);
        let mut image = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                basis[(i, j)] = C64::from(1.0);
                self.apply_into(&basis, &mut image);
                sup.column_mut(i + j * d).copy_from_slice(image.as_slice());
                basis[(i, j)] = ZERO;
            }
        }
        sup
    }
}

/// Right-hand side `dρ/dt` of the master equation.
pub fn lindblad_rhs(rho: &DensityMatrix, config: &SystemConfig) -> Result<CMatrix> {
    if rho.tag() != SpaceTag::Joint {
        return Err(Error::SpaceTag { expected: SpaceTag::Joint, found: rho.tag() });
    }
    if rho.dim() != config.cutoff.joint_dim() {
        return Err(Error::Dimension(format!(
            "state has dimension {}, config expects {}",
            rho.dim(),
            config.cutoff.joint_dim()
        )));
    }
    Ok(Lindbladian::new(config).apply(rho.entries()))
}

/// The generator restricted to the entries of `ρ` that can be non-zero.
///
/// Every term of the master equation preserves the excitation difference
/// `N_i − N_j` of an entry `ρ_ij`, so only the sectors present in the initial
/// state are ever populated. Rows are kept for the lower triangle only; the
/// upper triangle follows from Hermiticity.
struct SectorGenerator {
    // full (column-major) index of each active lower-triangle entry and of its mirror
    lower: Vec<usize>,
    mirror: Vec<usize>,
    row_ptr: Vec<usize>,
    sources: Vec<usize>,
    coeffs: Vec<C64>,
}

impl SectorGenerator {
    fn new(gen: &Lindbladian, rho0: &CMatrix, levels: usize) -> Self {
        let d = gen.dim;
        let n = |k: usize| excitations(k, levels) as isize;
        let mut sectors = std::collections::BTreeSet::new();
        for j in 0..d {
            for i in 0..d {
                if rho0[(i, j)] != ZERO {
                    sectors.insert(n(i) - n(j));
                }
            }
        }
        let mut slot = vec![usize::MAX; d * d];
        let (mut lower, mut mirror) = (Vec::new(), Vec::new());
        for j in 0..d {
            for i in j..d {
                if sectors.contains(&(n(i) - n(j))) {
                    slot[i + j * d] = lower.len();
                    lower.push(i + j * d);
                    mirror.push(j + i * d);
                }
            }
        }
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); lower.len()];
        let mut push = |out: usize, src: usize, v: C64| {
            if slot[out] != usize::MAX {
                rows[slot[out]].push((src, v));
            }
        };
        for &(r, c, v) in &gen.left.entries {
            for j in 0..d {
                push(r + j * d, c + j * d, v);
            }
        }
        for &(r, c, v) in &gen.right.entries {
            for i in 0..d {
                push(i + r * d, i + c * d, v);
            }
        }
        for &(to, from, v) in &gen.jumps {
            push(to, from, v);
        }
        let mut row_ptr = vec![0];
        let (mut sources, mut coeffs) = (Vec::new(), Vec::new());
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let (src, mut v) = row[k];
                while k + 1 < row.len() && row[k + 1].0 == src {
                    k += 1;
                    v += row[k].1;
                }
                if v != ZERO {
                    sources.push(src);
                    coeffs.push(v);
                }
                k += 1;
            }
            row_ptr.push(sources.len());
        }
        Self { lower, mirror, row_ptr, sources, coeffs }
    }

    /// `L(ρ)` on the active lower-triangle entries, written to `out`.
    fn apply(&self, rho: &[C64], out: &mut [C64]) {
        for (e, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[e], self.row_ptr[e + 1]);
            let mut acc = ZERO;
            for (s, v) in self.sources[a..b].iter().zip(&self.coeffs[a..b]) {
                acc += v * rho[*s];
            }
            *o = acc;
        }
    }

    /// `target = base + h·slope` on the active entries, keeping `target` Hermitian.
    fn shift(&self, target: &mut [C64], base: &[C64], slope: &[C64], h: f64) {
        for (e, k) in slope.iter().enumerate() {
            let (lo, hi) = (self.lower[e], self.mirror[e]);
            let mut v = base[lo] + k * h;
            if lo == hi {
                v.im = 0.0;
            }
            target[lo] = v;
            target[hi] = v.conj();
        }
    }
}

/// Classical fourth-order Runge-Kutta stepper with preallocated stages.
struct Rk4 {
    gen: SectorGenerator,
    k: [Vec<C64>; 4],
    tmp: CMatrix,
}

impl Rk4 {
    fn new(gen: &Lindbladian, rho0: &CMatrix, levels: usize) -> Self {
        let gen = SectorGenerator::new(gen, rho0, levels);
        let n = gen.lower.len();
        let z = || vec![ZERO; n];
        Self { k: [z(), z(), z(), z()], tmp: rho0.clone(), gen }
    }

    fn step(&mut self, rho: &mut CMatrix, h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let gen = &self.gen;
        let tmp = self.tmp.as_mut_slice();
        let r = rho.as_mut_slice();
        gen.apply(r, k1);
        gen.shift(tmp, r, k1, 0.5 * h);
        gen.apply(tmp, k2);
        gen.shift(tmp, r, k2, 0.5 * h);
        gen.apply(tmp, k3);
        gen.shift(tmp, r, k3, h);
        gen.apply(tmp, k4);

        let w = h / 6.0;
        for e in 0..k1.len() {
            k1[e] = k1[e] + (k2[e] + k3[e]) * 2.0 + k4[e];
        }
        // each entry is read before it is overwritten, so the update can be in place
        for (e, k) in k1.iter().enumerate() {
            let (lo, hi) = (gen.lower[e], gen.mirror[e]);
            let mut v = r[lo] + k * w;
            if lo == hi {
                v.im = 0.0;
            }
            r[lo] = v;
            r[hi] = v.conj();
        }
    }
}

/// Summary of a streamed integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSummary {
    pub samples: usize,
    pub substeps: usize,
    pub step: f64,
    pub worst: Diagnostics,
}

/// Integrates the master equation from `rho0` over `grid`, calling `observe`
/// at every sample time (including `t_start`).
///
/// Samples are checked against [`Tolerances::HARD`]; the trace is never
/// renormalized, its drift is reported in the diagnostics.
pub fn evolve_with<F>(rho0: &DensityMatrix, config: &SystemConfig, grid: &TimeGrid, mut observe: F) -> Result<EvolutionSummary>
where
    F: FnMut(f64, &DensityMatrix, &Diagnostics) -> Result<()>,
{
    config.validate()?;
    if rho0.tag() != SpaceTag::Joint || rho0.dim() != config.cutoff.joint_dim() {
        return Err(Error::Dimension(format!(
            "initial state must be a joint state of dimension {}",
            config.cutoff.joint_dim()
        )));
    }
    let substeps = (grid.dt_sample / config.max_step() - 1e-9).ceil().max(1.0);
    let h = grid.dt_sample / substeps;
    let span = (grid.t_end - grid.t_start).abs().max(1.0);
    if !(h > 1e-14 * span) || substeps > 1e9 {
        return Err(Error::StepUnderflow(h));
    }
    let substeps = substeps as usize;

    let mut rho = rho0.entries().clone();
    let mut rk = Rk4::new(&Lindbladian::new(config), &rho, config.cutoff.levels());
    let n = grid.num_samples();
    let mut worst = Diagnostics { hermiticity: 0.0, trace_drift: 0.0, min_eigenvalue: f64::INFINITY };
    for k in 0..n {
        if k > 0 {
            for _ in 0..substeps {
                rk.step(&mut rho, h);
            }
        }
        let t = grid.t_start + k as f64 * grid.dt_sample;
        let snapshot = DensityMatrix::from_raw(SpaceTag::Joint, rho.clone());
        let diag = snapshot.diagnostics();
        if let Some(msg) = diag.violation(&Tolerances::HARD) {
            return Err(Error::Invariant(format!("at t = {t}: {msg}")));
        }
        worst = worst.worst(diag);
        observe(t, &snapshot, &diag)?;
    }
    Ok(EvolutionSummary { samples: n, substeps, step: h, worst })
}

/// Integrates the master equation and keeps every sampled state.
pub fn evolve(rho0: &DensityMatrix, config: &SystemConfig, grid: &TimeGrid) -> Result<Trajectory> {
    let n = grid.num_samples();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        diagnostics: Vec::with_capacity(n),
    };
    evolve_with(rho0, config, grid, |t, rho, diag| {
        traj.times.push(t);
        traj.states.push(rho.clone());
        traj.diagnostics.push(*diag);
        Ok(())
    })?;
    Ok(traj)
}

/// Exact unitary propagation `e^{−iHt} ρ e^{iHt}` from a full diagonalization of `H`.
/// Dissipative rates in the configuration are ignored.
#[derive(Clone, Debug)]
pub struct ClosedPropagator {
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl ClosedPropagator {
    pub fn new(config: &SystemConfig) -> Self {
        let eig = linalg::hermitian_eigh(hamiltonian(config).entries());
        Self { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = CVector::from_iterator(self.energies.len(), self.energies.iter().map(|e| C64::from_polar(1.0, -e * t)));
        &self.vectors * DMatrix::from_diagonal(&phases) * self.vectors.adjoint()
    }

    pub fn propagate(&self, rho0: &DensityMatrix, t: f64) -> DensityMatrix {
        let u = self.unitary(t);
        DensityMatrix::from_raw(rho0.tag(), &u * rho0.entries() * u.adjoint())
    }
}

/// `ρ(t)` for the ideal (lossless) cavity by exact diagonalization.
pub fn evolve_exact_closed(rho0: &DensityMatrix, config: &SystemConfig, t: f64) -> Result<DensityMatrix> {
    if rho0.tag() != SpaceTag::Joint || rho0.dim() != config.cutoff.joint_dim() {
        return Err(Error::Dimension("initial state does not match the configured joint space".into()));
    }
    Ok(ClosedPropagator::new(config).propagate(rho0, t))
}

/// Fixed point of the dissipative dynamics.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// Number of (numerically) zero singular values of the Liouvillian.
    pub null_dim: usize,
    /// `max |L(ρ_ss)|`.
    pub residual: f64,
}

/// Singular values below this fraction of the largest count as zero.
const NULL_RTOL: f64 = 1e-10;

/// Total excitation number `q + n` of joint basis index `q·n_max + n`.
fn excitations(index: usize, levels: usize) -> usize {
    index / levels + index % levels
}

/// Right null-space candidates of a dense block: singular values with the
/// corresponding right singular vectors, ascending.
fn null_candidates(block: CMatrix) -> Vec<(f64, CVector)> {
    let n = block.ncols();
    let svd = block.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut out: Vec<(f64, CVector)> = (0..svd.singular_values.len())
        .map(|i| (svd.singular_values[i], CVector::from_iterator(n, v_t.row(i).iter().map(|z| z.conj()))))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Normalizes a column-stacked null vector (or a combination of several) into a
/// density matrix.
fn finish_steady_state(gen: &Lindbladian, null: &[CVector], fallback: &CVector, null_dim: usize) -> Result<SteadyState> {
    let d = gen.dim();
    let trace_of = |v: &CVector| -> C64 { (0..d).map(|k| v[k * d + k]).sum() };
    let v = if null.len() > 1 {
        log::warn!("Liouvillian null space has dimension {null_dim}; steady state is not unique");
        // project vec(1) onto the null space, the choice with the largest trace
        null.iter().fold(CVector::zeros(d * d), |acc, v| acc + v * trace_of(v).conj())
    } else {
        null.first().unwrap_or(fallback).clone()
    };
    let mut rho = CMatrix::from_column_slice(d, d, v.as_slice());
    let tr = rho.trace();
    rho /= tr;
    rho = linalg::hermitian_part(&rho);
    let residual = linalg::max_abs(&gen.apply(&rho));
    let rho = DensityMatrix::new(SpaceTag::Joint, rho)?;
    Ok(SteadyState { rho, null_dim, residual })
}

/// Steady state from the null space of the column-stacked Liouvillian.
///
/// The Hamiltonian conserves `a†a + σ†σ` and each jump operator changes it by
/// one, so the Liouvillian never mixes entries `ρ_ij` with different
/// excitation difference `N_i − N_j`. Each such sector is solved by dense SVD;
/// the trace-carrying steady state lives in the diagonal sector `N_i = N_j`.
///
/// A null space of dimension above one (in any sector) is reported through
/// `null_dim` and a log warning; the returned state is then the projection of
/// the identity onto the null space.
pub fn steady_state(config: &SystemConfig) -> Result<SteadyState> {
    config.validate()?;
    if config.is_closed() {
        return Err(Error::NoDissipation);
    }
    let gen = Lindbladian::new(config);
    let d = gen.dim();
    let levels = config.cutoff.levels();

    let mut sectors: std::collections::BTreeMap<isize, Vec<(usize, usize)>> = Default::default();
    for j in 0..d {
        for i in 0..d {
            let m = excitations(i, levels) as isize - excitations(j, levels) as isize;
            sectors.entry(m).or_default().push((i, j));
        }
    }

    let mut basis = CMatrix::zeros(d, d);
    let mut image = CMatrix::zeros(d, d);
    let mut spectra = Vec::with_capacity(sectors.len());
    for (m, pairs) in &sectors {
        let mut block = CMatrix::zeros(pairs.len(), pairs.len());
        for (col, &(i, j)) in pairs.iter().enumerate() {
            basis[(i, j)] = C64::from(1.0);
            gen.apply_into(&basis, &mut image);
            basis[(i, j)] = ZERO;
            for (row, &(k, l)) in pairs.iter().enumerate() {
                block[(row, col)] = image[(k, l)];
            }
        }
        spectra.push((*m, null_candidates(block)));
    }

    let smax = spectra.iter().flat_map(|(_, c)| c.iter().map(|x| x.0)).fold(0.0, f64::max);
    let null_dim: usize = spectra
        .iter()
        .map(|(_, c)| c.iter().filter(|x| x.0 <= NULL_RTOL * smax).count())
        .sum();
    let (_, diagonal) = spectra.iter().find(|(m, _)| *m == 0).expect("diagonal sector");
    let pairs = &sectors[&0];
    let embed = |v: &CVector| {
        let mut full = CVector::zeros(d * d);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            full[i + j * d] = v[k];
        }
        full
    };
    let null: Vec<CVector> = diagonal.iter().filter(|x| x.0 <= NULL_RTOL * smax).map(|x| embed(&x.1)).collect();
    finish_steady_state(&gen, &null, &embed(&diagonal[0].1), null_dim.max(1))
}

/// Steady state from a dense SVD of the full `d² × d²` superoperator. Slow at
/// the default cutoff; kept as an independent check of [`steady_state`].
pub fn steady_state_dense(config: &SystemConfig) -> Result<SteadyState> {
    config.validate()?;
    if config.is_closed() {
        return Err(Error::NoDissipation);
    }
    let gen = Lindbladian::new(config);
    let candidates = null_candidates(gen.superoperator());
    let smax = candidates.last().map(|x| x.0).unwrap_or(0.0);
    let null: Vec<CVector> = candidates.iter().filter(|x| x.0 <= NULL_RTOL * smax).map(|x| x.1.clone()).collect();
    let null_dim = null.len().max(1);
    finish_steady_state(&gen, &null, &candidates[0].1, null_dim)
}
