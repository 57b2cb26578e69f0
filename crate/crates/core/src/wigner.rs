//! Wigner function of the field in the displaced-parity form
//! `W(α) = 2 Tr[D(α)⁻¹ ρ D(α) 𝒫]`, `α = x + ip`.
//!
//! No `1/π` prefactor is applied, so `|W| ≤ 2` and `∫ W dx dp = π`.
//!
//! Displacements of a truncated state reach Fock levels well above the state's
//! own cutoff, so every evaluation pads the state into a larger working space
//! sized from `|α|`. Two evaluation paths exist: [`wigner_point`] uses the
//! dense matrix exponential literally, and [`WignerEvaluator`] (used for grids)
//! uses `D(α) 𝒫 D(α)† = D(2α) 𝒫` with a spectral form of the displacement.

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, DensityMatrix, FockCutoff, OperatorMatrix, SpaceTag};
use crate::linalg::{self, CMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Rectangular phase-space sampling grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_x: usize,
    pub n_p: usize,
}

impl Default for PhaseSpaceGrid {
    /// `[−4, 4]²` with 101 × 101 points.
    fn default() -> Self {
        Self::square(4.0, 101).expect("valid default grid")
    }
}

impl PhaseSpaceGrid {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64, n_x: usize, n_p: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::validation("grid_extent", "x range must be increasing and finite"));
        }
        if !(p_max > p_min) || !p_min.is_finite() || !p_max.is_finite() {
            return Err(Error::validation("grid_extent", "p range must be increasing and finite"));
        }
        if n_x < 2 || n_p < 2 {
            return Err(Error::validation("grid_points", "at least two points per axis"));
        }
        Ok(Self { x_min, x_max, p_min, p_max, n_x, n_p })
    }

    /// `[−extent, extent]²` with `points` points per axis.
    pub fn square(extent: f64, points: usize) -> Result<Self> {
        Self::new(-extent, extent, -extent, extent, points, points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        lerp(self.x_min, self.x_max, i, self.n_x)
    }

    pub fn p(&self, j: usize) -> f64 {
        lerp(self.p_min, self.p_max, j, self.n_p)
    }

    /// Largest `|α|` on the grid.
    pub fn max_radius(&self) -> f64 {
        let x = self.x_min.abs().max(self.x_max.abs());
        let p = self.p_min.abs().max(self.p_max.abs());
        x.hypot(p)
    }
}

// exact at both ends and at the midpoint of symmetric ranges
fn lerp(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    let last = (n - 1) as f64;
    (lo * (last - k as f64) + hi * k as f64) / last
}

/// Wigner values on a [`PhaseSpaceGrid`]; `values[(i, j)]` is `W(x_i + i p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    pub values: DMatrix<f64>,
    /// Largest `|Im W|` met while evaluating.
    pub imaginary_residue: f64,
}

impl WignerGrid {
    /// `Σ W Δx Δp` (trapezoidal weights); `≈ π` when the grid covers the state.
    pub fn integral(&self) -> f64 {
        let (nx, np) = (self.grid.n_x, self.grid.n_p);
        let w = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for j in 0..np {
            for i in 0..nx {
                acc += w(i, nx) * w(j, np) * self.values[(i, j)];
            }
        }
        acc * self.grid.dx() * self.grid.dp()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }
}

/// `|α|² ≤ n_max/4`: the region where the truncated displacement is trusted.
pub fn within_validity(alpha: C64, cutoff: FockCutoff) -> bool {
    4.0 * alpha.norm_sqr() <= cutoff.levels() as f64
}

/// Displacement operator together with its validity flag.
#[derive(Clone, Debug)]
pub struct Displacement {
    pub operator: OperatorMatrix,
    /// False when `|α|² > n_max/4`; the matrix is then a poor approximation of
    /// the untruncated operator.
    pub within_validity: bool,
}

/// `D(α) = exp(α a† − α* a)` on the truncated field space, by scaling and squaring.
pub fn displacement(alpha: C64, cutoff: FockCutoff) -> Displacement {
    let a = annihilation(cutoff).into_entries();
    let generator = a.adjoint() * alpha - a * alpha.conj();
    let ok = within_validity(alpha, cutoff);
    if !ok {
        log::warn!("displacement |alpha|^2 = {} outside validity domain of {} levels", alpha.norm_sqr(), cutoff.levels());
    }
    Displacement { operator: OperatorMatrix::new(SpaceTag::Field, linalg::expm(&generator)).expect("field operator"), within_validity: ok }
}

/// Parity `𝒫 = exp(iπ a†a)`, diagonal `(−1)ⁿ`.
pub fn parity(cutoff: FockCutoff) -> OperatorMatrix {
    let n = cutoff.levels();
    let diag = nalgebra::DVector::from_iterator(n, (0..n).map(|k| C64::from(if k % 2 == 0 { 1.0 } else { -1.0 })));
    OperatorMatrix::new(SpaceTag::Field, CMatrix::from_diagonal(&diag)).expect("field operator")
}

/// Working cutoff that holds `D(±β)|n⟩` for all `n < levels` to well below
/// round-off: the Poisson-like spread of a displaced Fock state around
/// `(|β| + √n)²` is covered with a wide margin.
pub fn working_levels(beta_abs: f64, levels: usize) -> usize {
    let edge = beta_abs + (levels as f64).sqrt() + 8.0;
    ((edge * edge).ceil() as usize).max(levels + 8).max(FockCutoff::MIN)
}

fn pad(rho: &CMatrix, levels: usize) -> CMatrix {
    let mut out = CMatrix::zeros(levels, levels);
    out.view_mut((0, 0), (rho.nrows(), rho.ncols())).copy_from(rho);
    out
}

fn expect_field(rho: &DensityMatrix) -> Result<()> {
    if rho.tag() == SpaceTag::Field {
        Ok(())
    } else {
        Err(Error::SpaceTag { expected: SpaceTag::Field, found: rho.tag() })
    }
}

/// One Wigner value with its numerical diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerPoint {
    pub value: f64,
    /// `|Im 2 Tr[D⁻¹ρD𝒫]|`; zero up to round-off for Hermitian `ρ`.
    pub imaginary_residue: f64,
    /// Fock levels of the padded space the trace was taken in.
    pub working_levels: usize,
}

/// `W(α) = 2 Tr[D(α)⁻¹ ρ D(α) 𝒫]` evaluated literally, with `D(α)` the dense
/// matrix exponential on a padded working space.
pub fn wigner_point(rho_field: &DensityMatrix, alpha: C64) -> Result<WignerPoint> {
    expect_field(rho_field)?;
    let levels = working_levels(alpha.norm(), rho_field.dim());
    let cutoff = FockCutoff::new(levels)?;
    let d = displacement(alpha, cutoff).operator.into_entries();
    let rho = pad(rho_field.entries(), levels);
    // D⁻¹ = D† for the (exactly unitary) truncated exponential
    let displaced = d.adjoint() * rho * &d;
    let w: C64 = (0..levels).map(|k| if k % 2 == 0 { displaced[(k, k)] } else { -displaced[(k, k)] }).sum::<C64>() * 2.0;
    Ok(WignerPoint { value: w.re, imaginary_residue: w.im.abs(), working_levels: levels })
}

/// Fast Wigner evaluation for many phase-space points.
///
/// With `Q = a + a†` diagonalized once as `Q = O diag(q) Oᵀ`, the displacement
/// is `D(β) = R(ψ) O diag(e^{−i|β| q}) Oᵀ R(ψ)†` where `R(ψ) = e^{iψ a†a}` and
/// `ψ = arg β + π/2`. Only the block of `D(2α)` on the state's own levels is
/// needed: `W(α) = 2 Σ_{mn} ρ_{mn} ⟨n|D(2α)|m⟩ (−1)^m`.
#[derive(Clone, Debug)]
pub struct WignerEvaluator {
    nodes: Vec<f64>,
    // one entry per level pair m ≤ n with a non-zero coherence
    pairs: Vec<PairTerm>,
    max_radius: f64,
}

#[derive(Clone, Debug)]
struct PairTerm {
    m: usize,
    n: usize,
    // 2 ρ_mn (−1)^m and 2 ρ_nm (−1)^n
    forward: C64,
    backward: C64,
    // O_mk O_nk over the working levels
    weights: Vec<f64>,
}

impl WignerEvaluator {
    /// Prepares evaluation for all `|α| ≤ max_radius`.
    pub fn new(rho_field: &DensityMatrix, max_radius: f64) -> Result<Self> {
        expect_field(rho_field)?;
        let levels = rho_field.dim();
        let work = working_levels(2.0 * max_radius, levels);
        let q = DMatrix::<f64>::from_fn(work, work, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = SymmetricEigen::new(q);
        let o = &eig.eigenvectors;
        let rho = rho_field.entries();
        let sign = |k: usize| if k % 2 == 0 { 2.0 } else { -2.0 };
        let mut pairs = Vec::new();
        for n in 0..levels {
            for m in 0..=n {
                let (mn, nm) = (rho[(m, n)], rho[(n, m)]);
                if mn == C64::new(0.0, 0.0) && nm == C64::new(0.0, 0.0) {
                    continue;
                }
                let (forward, backward) = if m == n { (mn * sign(m), C64::new(0.0, 0.0)) } else { (mn * sign(m), nm * sign(n)) };
                let weights = (0..work).map(|k| o[(m, k)] * o[(n, k)]).collect();
                pairs.push(PairTerm { m, n, forward, backward, weights });
            }
        }
        Ok(Self { nodes: eig.eigenvalues.iter().copied().collect(), pairs, max_radius })
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Returns `(W, |Im W|)`.
    pub fn evaluate(&self, alpha: C64) -> (f64, f64) {
        let beta = alpha * 2.0;
        let r = beta.norm();
        let psi = beta.arg() + std::f64::consts::FRAC_PI_2;
        let phases: Vec<C64> = self.nodes.iter().map(|q| C64::from_polar(1.0, -r * q)).collect();
        let mut w = C64::new(0.0, 0.0);
        for t in &self.pairs {
            let core: C64 = phases.iter().zip(&t.weights).map(|(p, x)| p * x).sum();
            // ⟨n|D|m⟩ = e^{iψ(n−m)} core and ⟨m|D|n⟩ = e^{−iψ(n−m)} core
            let rot = C64::from_polar(1.0, psi * (t.n - t.m) as f64);
            w += (t.forward * rot + t.backward * rot.conj()) * core;
        }
        (w.re, w.im.abs())
    }

    pub fn grid(&self, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
        if grid.max_radius() > self.max_radius * (1.0 + 1e-12) {
            return Err(Error::validation("grid_extent", "grid exceeds the evaluator's radius"));
        }
        let columns: Vec<Vec<(f64, f64)>> = (0..grid.n_p)
            .into_par_iter()
            .map(|j| (0..grid.n_x).map(|i| self.evaluate(C64::new(grid.x(i), grid.p(j)))).collect())
            .collect();
        let mut values = DMatrix::zeros(grid.n_x, grid.n_p);
        let mut residue: f64 = 0.0;
        for (j, col) in columns.iter().enumerate() {
            for (i, &(v, im)) in col.iter().enumerate() {
                values[(i, j)] = v;
                residue = residue.max(im);
            }
        }
        Ok(WignerGrid { grid: *grid, values, imaginary_residue: residue })
    }
}

/// Wigner function of a field state on `grid`.
pub fn wigner_grid(rho_field: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    WignerEvaluator::new(rho_field, grid.max_radius())?.grid(grid)
}
