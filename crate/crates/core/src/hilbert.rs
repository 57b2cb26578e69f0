//! Truncated qubit ⊗ Fock Hilbert space.
//!
//! Joint basis ordering is `(g,0), (g,1), …, (g,n_max−1), (e,0), …, (e,n_max−1)`:
//! the qubit index is the slow index, so joint index = `q·n_max + n` with
//! `q = 0` for the ground state `|g⟩` and `q = 1` for the excited state `|e⟩`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};
use num_complex::Complex64 as C64;
use std::ops::Mul;

/// Number of Fock levels kept, `|0⟩ … |n_max−1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const MIN: usize = 5;
    pub const DEFAULT: usize = 15;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < Self::MIN {
            return Err(Error::Cutoff(n_max));
        }
        Ok(Self(n_max))
    }

    pub fn levels(self) -> usize {
        self.0
    }

    pub fn joint_dim(self) -> usize {
        2 * self.0
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self(Self::DEFAULT)
    }
}

/// Which space a matrix acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceTag {
    Qubit,
    Field,
    Joint,
}

/// One factor of the bipartite qubit ⊗ field space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsystem {
    Qubit,
    Field,
}

fn check_tag_dim(tag: SpaceTag, dim: usize) -> Result<()> {
    let ok = match tag {
        SpaceTag::Qubit => dim == 2,
        SpaceTag::Field => dim >= FockCutoff::MIN,
        SpaceTag::Joint => dim % 2 == 0 && dim >= 2 * FockCutoff::MIN,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(format!("dimension {dim} is not valid for a {tag:?} space")))
    }
}

fn expect_tag(expected: SpaceTag, found: SpaceTag) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::SpaceTag { expected, found })
    }
}

/// A square complex matrix acting on the qubit, the field, or the joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    tag: SpaceTag,
    entries: CMatrix,
}

impl OperatorMatrix {
    pub fn new(tag: SpaceTag, entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_tag_dim(tag, entries.nrows())?;
        Ok(Self { tag, entries })
    }

    pub(crate) fn from_raw(tag: SpaceTag, entries: CMatrix) -> Self {
        debug_assert!(check_tag_dim(tag, entries.nrows()).is_ok());
        Self { tag, entries }
    }

    pub fn identity(tag: SpaceTag, dim: usize) -> Result<Self> {
        Self::new(tag, CMatrix::identity(dim, dim))
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self { tag: self.tag, entries: self.entries.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { tag: self.tag, entries: &self.entries * factor }
    }

    /// Matrix product; both factors must live on the same space.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        expect_tag(self.tag, rhs.tag)?;
        if self.dim() != rhs.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), rhs.dim())));
        }
        Ok(Self { tag: self.tag, entries: &self.entries * &rhs.entries })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        expect_tag(self.tag, rhs.tag)?;
        if self.dim() != rhs.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), rhs.dim())));
        }
        Ok(Self { tag: self.tag, entries: &self.entries + &rhs.entries })
    }

    pub fn apply(&self, state: &PureState) -> Result<CVector> {
        expect_tag(self.tag, state.tag)?;
        if self.dim() != state.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), state.dim())));
        }
        Ok(&self.entries * &state.amplitudes)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    /// Panics on mismatched spaces; use [`OperatorMatrix::compose`] for a checked product.
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.compose(rhs).expect("operator product on mismatched spaces")
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    tag: SpaceTag,
    amplitudes: CVector,
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(tag: SpaceTag, amplitudes: CVector) -> Result<Self> {
        check_tag_dim(tag, amplitudes.len())?;
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::Normalization(norm_sq));
        }
        Ok(Self { tag, amplitudes })
    }

    /// Builds a state from unnormalized amplitudes.
    pub fn normalized(tag: SpaceTag, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Normalization(norm * norm));
        }
        Self::new(tag, amplitudes.unscale(norm))
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_raw(self.tag, m)
    }
}

/// Numerical health of a density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Diagnostics {
    /// `max |ρ − ρ†|`.
    pub hermiticity: f64,
    /// `|Tr ρ − 1|`.
    pub trace_drift: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    /// Returns a description of the first bound that is exceeded, if any.
    pub fn violation(&self, tol: &Tolerances) -> Option<String> {
        if !(self.hermiticity <= tol.hermiticity) {
            Some(format!("hermiticity residue {:e} > {:e}", self.hermiticity, tol.hermiticity))
        } else if !(self.trace_drift <= tol.trace) {
            Some(format!("trace drift {:e} > {:e}", self.trace_drift, tol.trace))
        } else if !(self.min_eigenvalue >= -tol.negativity) {
            Some(format!("min eigenvalue {:e} < {:e}", self.min_eigenvalue, -tol.negativity))
        } else {
            None
        }
    }

    /// Entry-wise worst case of two diagnostics.
    pub fn worst(self, other: Self) -> Self {
        Self {
            hermiticity: self.hermiticity.max(other.hermiticity),
            trace_drift: self.trace_drift.max(other.trace_drift),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

/// Bounds for [`Diagnostics::violation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub negativity: f64,
}

impl Tolerances {
    /// The bounds every valid density matrix satisfies.
    pub const STRICT: Tolerances = Tolerances { hermiticity: 1e-10, trace: 1e-9, negativity: 1e-9 };
    /// Bounds beyond which a time integration is aborted.
    pub const HARD: Tolerances = Tolerances { hermiticity: 1e-6, trace: 1e-6, negativity: 1e-6 };
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    tag: SpaceTag,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates `entries` against [`Tolerances::STRICT`].
    pub fn new(tag: SpaceTag, entries: CMatrix) -> Result<Self> {
        Self::with_tolerances(tag, entries, &Tolerances::STRICT)
    }

    pub fn with_tolerances(tag: SpaceTag, entries: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        check_tag_dim(tag, entries.nrows())?;
        let rho = Self { tag, entries };
        if let Some(msg) = rho.diagnostics().violation(tol) {
            return Err(Error::Invariant(msg));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(tag: SpaceTag, entries: CMatrix) -> Self {
        Self { tag, entries }
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Dimension("empty mixture".into()))?.1;
        let mut acc = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            expect_tag(first.tag, rho.tag)?;
            if *w < 0.0 {
                return Err(Error::validation("weight", "mixture weights must be non-negative"));
            }
            acc += rho.entries.scale(*w);
        }
        Self::new(first.tag, acc)
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, op: &OperatorMatrix) -> Result<C64> {
        expect_tag(self.tag, op.tag)?;
        if self.dim() != op.dim() {
            return Err(Error::Dimension(format!("{} vs {}", self.dim(), op.dim())));
        }
        Ok((&self.entries * &op.entries).trace())
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, unitary: &OperatorMatrix) -> Result<Self> {
        expect_tag(self.tag, unitary.tag)?;
        Ok(Self::from_raw(self.tag, &unitary.entries * &self.entries * unitary.entries.adjoint()))
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let ev = linalg::hermitian_eigenvalues(&self.entries);
        Diagnostics {
            hermiticity: linalg::hermiticity_residue(&self.entries),
            trace_drift: (self.entries.trace() - ONE).norm(),
            min_eigenvalue: ev.first().copied().unwrap_or(0.0),
        }
    }

    /// Number of Fock levels of a field or joint state.
    pub fn field_levels(&self) -> usize {
        match self.tag {
            SpaceTag::Joint => self.dim() / 2,
            _ => self.dim(),
        }
    }
}

/// Bosonic annihilation operator, `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(cutoff: FockCutoff) -> OperatorMatrix {
    let n = cutoff.levels();
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = C64::from((k as f64).sqrt());
    }
    OperatorMatrix::from_raw(SpaceTag::Field, m)
}

pub fn creation(cutoff: FockCutoff) -> OperatorMatrix {
    annihilation(cutoff).adjoint()
}

/// `a†a`.
pub fn number(cutoff: FockCutoff) -> OperatorMatrix {
    let n = cutoff.levels();
    let diag = CVector::from_iterator(n, (0..n).map(|k| C64::from(k as f64)));
    OperatorMatrix::from_raw(SpaceTag::Field, CMatrix::from_diagonal(&diag))
}

/// Qubit lowering operator `σ = |g⟩⟨e|` in the `(g, e)` basis.
pub fn qubit_lowering() -> OperatorMatrix {
    OperatorMatrix::from_raw(SpaceTag::Qubit, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]))
}

pub fn qubit_identity() -> OperatorMatrix {
    OperatorMatrix::from_raw(SpaceTag::Qubit, CMatrix::identity(2, 2))
}

pub fn field_identity(cutoff: FockCutoff) -> OperatorMatrix {
    let n = cutoff.levels();
    OperatorMatrix::from_raw(SpaceTag::Field, CMatrix::identity(n, n))
}

/// Kronecker product `A_qubit ⊗ B_field`.
pub fn tensor(qubit_op: &OperatorMatrix, field_op: &OperatorMatrix) -> Result<OperatorMatrix> {
    expect_tag(SpaceTag::Qubit, qubit_op.tag)?;
    expect_tag(SpaceTag::Field, field_op.tag)?;
    Ok(OperatorMatrix::from_raw(SpaceTag::Joint, qubit_op.entries.kronecker(&field_op.entries)))
}

/// `A ⊗ 1` on the joint space.
pub fn embed_qubit(op: &OperatorMatrix, cutoff: FockCutoff) -> Result<OperatorMatrix> {
    tensor(op, &field_identity(cutoff))
}

/// `1 ⊗ B` on the joint space.
pub fn embed_field(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    tensor(&qubit_identity(), op)
}

/// Tensor product of a qubit state and a field state.
pub fn product_state(qubit: &PureState, field: &PureState) -> Result<PureState> {
    expect_tag(SpaceTag::Qubit, qubit.tag)?;
    expect_tag(SpaceTag::Field, field.tag)?;
    PureState::normalized(SpaceTag::Joint, qubit.amplitudes.kronecker(&field.amplitudes))
}

/// Product of two density matrices, `ρ_q ⊗ ρ_f`.
pub fn product_density(qubit: &DensityMatrix, field: &DensityMatrix) -> Result<DensityMatrix> {
    expect_tag(SpaceTag::Qubit, qubit.tag)?;
    expect_tag(SpaceTag::Field, field.tag)?;
    Ok(DensityMatrix::from_raw(SpaceTag::Joint, qubit.entries.kronecker(&field.entries)))
}

/// `cos θ |g⟩ + sin θ |e⟩`.
pub fn qubit_state(theta: f64) -> PureState {
    let v = CVector::from_vec(vec![C64::from(theta.cos()), C64::from(theta.sin())]);
    PureState { tag: SpaceTag::Qubit, amplitudes: v }
}

/// Fock state `|n⟩`.
pub fn fock_state(n: usize, cutoff: FockCutoff) -> Result<PureState> {
    if n >= cutoff.levels() {
        return Err(Error::Dimension(format!("Fock level {n} exceeds cutoff {}", cutoff.levels())));
    }
    let mut v = CVector::zeros(cutoff.levels());
    v[n] = ONE;
    Ok(PureState { tag: SpaceTag::Field, amplitudes: v })
}

/// Superposition `c₀|0⟩ + c₁|3⟩ + … + c_k|3k⟩` of Fock states holding multiples of
/// three photons. The coefficients must already be normalized.
pub fn three_photon_superposition(coeffs: &[C64], cutoff: FockCutoff) -> Result<PureState> {
    let n = cutoff.levels();
    if coeffs.is_empty() {
        return Err(Error::validation("coeffs", "at least one amplitude is required"));
    }
    let top = 3 * (coeffs.len() - 1);
    if top >= n {
        return Err(Error::Dimension(format!("level |{top}> does not fit below cutoff {n}")));
    }
    let mut v = CVector::zeros(n);
    for (k, c) in coeffs.iter().enumerate() {
        v[3 * k] = *c;
    }
    PureState::new(SpaceTag::Field, v)
}

/// `β|0⟩ + √(1−|β|²)|3⟩`.
pub fn three_photon_state(beta: C64, cutoff: FockCutoff) -> Result<PureState> {
    let b2 = beta.norm_sqr();
    if !(b2 <= 1.0) {
        return Err(Error::validation("beta", format!("|beta| = {} exceeds 1", beta.norm())));
    }
    three_photon_superposition(&[beta, C64::from((1.0 - b2).sqrt())], cutoff)
}

/// `|ψ⟩⟨ψ|` with `|ψ⟩ = (cos θ|g⟩ + sin θ|e⟩) ⊗ (β|0⟩ + √(1−|β|²)|3⟩)`.
pub fn initial_condition(theta: f64, beta: C64, cutoff: FockCutoff) -> Result<DensityMatrix> {
    let field = three_photon_state(beta, cutoff)?;
    Ok(product_state(&qubit_state(theta), &field)?.to_density())
}

fn split(dim: usize) -> (usize, usize) {
    (2, dim / 2)
}

/// Reduced state on `keep`, tracing out the other subsystem.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    expect_tag(SpaceTag::Joint, rho.tag)?;
    let (q, n) = split(rho.dim());
    let m = &rho.entries;
    let reduced = match keep {
        Subsystem::Qubit => CMatrix::from_fn(q, q, |a, b| (0..n).map(|k| m[(a * n + k, b * n + k)]).sum()),
        Subsystem::Field => CMatrix::from_fn(n, n, |k, l| (0..q).map(|a| m[(a * n + k, a * n + l)]).sum()),
    };
    let tag = match keep {
        Subsystem::Qubit => SpaceTag::Qubit,
        Subsystem::Field => SpaceTag::Field,
    };
    Ok(DensityMatrix::from_raw(tag, reduced))
}

pub(crate) fn partial_transpose_raw(m: &CMatrix, subsystem: Subsystem) -> CMatrix {
    let (q, n) = split(m.nrows());
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for a in 0..q {
        for b in 0..q {
            for k in 0..n {
                for l in 0..n {
                    let src = match subsystem {
                        Subsystem::Qubit => (b * n + k, a * n + l),
                        Subsystem::Field => (a * n + l, b * n + k),
                    };
                    out[(a * n + k, b * n + l)] = m[src];
                }
            }
        }
    }
    out
}

/// Transposes the indices of `subsystem` in a joint density matrix.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: Subsystem) -> Result<OperatorMatrix> {
    expect_tag(SpaceTag::Joint, rho.tag)?;
    Ok(OperatorMatrix::from_raw(SpaceTag::Joint, partial_transpose_raw(&rho.entries, subsystem)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use proptest::prelude::*;

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    fn joint_basis(q: usize, k: usize, c: FockCutoff) -> usize {
        q * c.levels() + k
    }

    fn bell_like() -> DensityMatrix {
        let c = cut(5);
        let mut v = CVector::zeros(10);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        v[joint_basis(0, 3, c)] = C64::from(s);
        v[joint_basis(1, 2, c)] = C64::from(s);
        PureState::new(SpaceTag::Joint, v).unwrap().to_density()
    }

    #[test]
    fn cutoff_bounds() {
        assert!(FockCutoff::new(4).is_err());
        assert_eq!(cut(5).joint_dim(), 10);
        assert_eq!(FockCutoff::default().levels(), 15);
    }

    #[test]
    fn annihilation_entries() {
        // the smallest admissible cutoff still carries the n_max=2 block
        let a = annihilation(cut(5));
        assert_eq!(a.entries()[(0, 1)], ONE);
        assert_eq!(a.entries()[(1, 0)], ZERO);
        assert!((a.entries()[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        let n = &creation(cut(5)) * &a;
        for k in 0..5 {
            assert!((n.entries()[(k, k)].re - k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn commutator_truncation_artifact() {
        let c = cut(8);
        let a = annihilation(c);
        let ad = creation(c);
        let comm = (&a * &ad).entries() - (&ad * &a).entries();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j && i < 7 { 1.0 } else if i == 7 && j == 7 { -7.0 } else { 0.0 };
                assert!((comm[(i, j)].re - expected).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn qubit_lowering_action() {
        let s = qubit_lowering();
        let e = qubit_state(std::f64::consts::FRAC_PI_2);
        let g = qubit_state(0.0);
        let se = s.apply(&e).unwrap();
        assert!((se[0] - ONE).norm() < 1e-15 && se[1].norm() < 1e-15);
        assert!(s.apply(&g).unwrap().norm() < 1e-15);
        let num = &s.adjoint() * &s;
        assert_eq!(num.entries()[(0, 0)], ZERO);
        assert_eq!(num.entries()[(1, 1)], ONE);
    }

    #[test]
    fn tensor_identities() {
        let c = cut(6);
        let id = tensor(&qubit_identity(), &field_identity(c)).unwrap();
        assert_eq!(id.entries(), &CMatrix::identity(12, 12));
        assert!(tensor(&field_identity(c), &qubit_identity()).is_err());

        let op = tensor(&qubit_lowering().adjoint(), &annihilation(c)).unwrap();
        let g3 = product_state(&qubit_state(0.0), &fock_state(3, c).unwrap()).unwrap();
        let out = op.apply(&g3).unwrap();
        for i in 0..12 {
            let expected = if i == joint_basis(1, 2, c) { 3f64.sqrt() } else { 0.0 };
            assert!((out[i].re - expected).abs() < 1e-14 && out[i].im == 0.0);
        }

        let qa = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 2.0), ONE, ZERO, C64::new(-3.0, 0.5)]);
        let qa = OperatorMatrix::new(SpaceTag::Qubit, qa).unwrap();
        let fb = number(c).add(&annihilation(c)).unwrap();
        let t = tensor(&qa, &fb).unwrap();
        assert!((t.trace() - qa.trace() * fb.trace()).norm() < 1e-12);
    }

    #[test]
    fn three_photon_states() {
        let c = cut(6);
        let s = three_photon_state(ONE, c).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        let s = three_photon_state(ZERO, c).unwrap();
        assert_eq!(s.amplitudes()[3], ONE);
        let s = three_photon_state(C64::from(0.9), c).unwrap();
        assert_eq!(s.amplitudes()[0], C64::from(0.9));
        assert!((s.amplitudes()[3].re - 0.19f64.sqrt()).abs() < 1e-15);
        for k in [1, 2, 4, 5] {
            assert_eq!(s.amplitudes()[k], ZERO);
        }
        assert!(matches!(
            three_photon_state(C64::new(1.0, 0.5), c),
            Err(Error::Validation { ref key, .. }) if key == "beta"
        ));
    }

    #[test]
    fn general_superposition() {
        let h = C64::from(0.5);
        let s = three_photon_superposition(&[h, h, h, h], cut(10)).unwrap();
        assert_eq!(s.amplitudes()[9], h);
        assert!(three_photon_superposition(&[h, h, h, h], cut(9)).is_err());
        assert!(matches!(three_photon_superposition(&[h, h], cut(9)), Err(Error::Normalization(_))));
    }

    #[test]
    fn initial_condition_reduced_qubit() {
        let c = cut(6);
        let beta = C64::from(0.9);
        let rho = initial_condition(0.0, beta, c).unwrap();
        let q = partial_trace(&rho, Subsystem::Qubit).unwrap();
        assert!((q.entries()[(0, 0)].re - 1.0).abs() < 1e-14);
        let rho = initial_condition(std::f64::consts::FRAC_PI_2, beta, c).unwrap();
        let q = partial_trace(&rho, Subsystem::Qubit).unwrap();
        assert!((q.entries()[(1, 1)].re - 1.0).abs() < 1e-14);
        assert!(q.entries()[(0, 0)].re.abs() < 1e-14);
    }

    #[test]
    fn partial_trace_examples() {
        let c = cut(5);
        let g3 = product_state(&qubit_state(0.0), &fock_state(3, c).unwrap()).unwrap().to_density();
        let q = partial_trace(&g3, Subsystem::Qubit).unwrap();
        assert_eq!(q.entries()[(0, 0)], ONE);
        assert_eq!(q.entries()[(1, 1)], ZERO);

        let bell = partial_trace(&bell_like(), Subsystem::Qubit).unwrap();
        assert!((bell.entries() - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-15);

        assert!(partial_trace(&q, Subsystem::Qubit).is_err());
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell_like(), Subsystem::Qubit).unwrap();
        let ev = hermitian_eigenvalues(pt.entries());
        assert!((ev[0] + 0.5).abs() < 1e-14);
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // both choices of subsystem give the same spectrum
        let pt_f = partial_transpose(&bell_like(), Subsystem::Field).unwrap();
        assert!((hermitian_eigenvalues(pt_f.entries())[0] + 0.5).abs() < 1e-14);
    }

    fn random_matrix(dim: usize, vals: &[(f64, f64)]) -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| {
            let (re, im) = vals[(i * dim + j) % vals.len()];
            C64::new(re + (i as f64) * 0.1, im - (j as f64) * 0.07)
        })
    }

    fn random_density(dim: usize, vals: &[(f64, f64)]) -> CMatrix {
        let m = random_matrix(dim, vals);
        let r = &m * m.adjoint();
        let t = r.trace();
        r / t
    }

    fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 37)
    }

    proptest! {
        #[test]
        fn three_photon_norm(r in 0.0..=1.0f64, phi in 0.0..std::f64::consts::TAU) {
            let beta = C64::from_polar(r, phi);
            let s = three_photon_state(beta, cut(7)).unwrap();
            prop_assert!((s.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tensor_mixed_product(a in entries(), b in entries(), c in entries(), d in entries()) {
            let f = cut(5);
            let qa = OperatorMatrix::new(SpaceTag::Qubit, random_matrix(2, &a)).unwrap();
            let qc = OperatorMatrix::new(SpaceTag::Qubit, random_matrix(2, &c)).unwrap();
            let fb = OperatorMatrix::new(SpaceTag::Field, random_matrix(f.levels(), &b)).unwrap();
            let fd = OperatorMatrix::new(SpaceTag::Field, random_matrix(f.levels(), &d)).unwrap();
            let lhs = &tensor(&qa, &fb).unwrap() * &tensor(&qc, &fd).unwrap();
            let rhs = tensor(&(&qa * &qc), &(&fb * &fd)).unwrap();
            prop_assert!((lhs.entries() - rhs.entries()).norm() < 1e-10);
        }

        #[test]
        fn partial_trace_recovers_factor(a in entries(), b in entries()) {
            let f = cut(5);
            let rq = DensityMatrix::new(SpaceTag::Qubit, random_density(2, &a)).unwrap();
            let rf = DensityMatrix::new(SpaceTag::Field, random_density(f.levels(), &b)).unwrap();
            let joint = product_density(&rq, &rf).unwrap();
            let back = partial_trace(&joint, Subsystem::Qubit).unwrap();
            prop_assert!((back.entries() - rq.entries()).norm() < 1e-12);
            let back = partial_trace(&joint, Subsystem::Field).unwrap();
            prop_assert!((back.entries() - rf.entries()).norm() < 1e-12);
        }

        #[test]
        fn partial_transpose_properties(a in entries()) {
            let rho = DensityMatrix::new(SpaceTag::Joint, random_density(10, &a)).unwrap();
            for sub in [Subsystem::Qubit, Subsystem::Field] {
                let pt = partial_transpose(&rho, sub).unwrap();
                prop_assert!((pt.trace().re - 1.0).abs() < 1e-12);
                prop_assert!(crate::linalg::hermiticity_residue(pt.entries()) < 1e-14);
                let back = partial_transpose_raw(pt.entries(), sub);
                prop_assert_eq!(&back, rho.entries());
            }
        }

        #[test]
        fn product_states_stay_positive_under_partial_transpose(a in entries(), b in entries()) {
            let rq = DensityMatrix::new(SpaceTag::Qubit, random_density(2, &a)).unwrap();
            let rf = DensityMatrix::new(SpaceTag::Field, random_density(5, &b)).unwrap();
            let joint = product_density(&rq, &rf).unwrap();
            let pt = partial_transpose(&joint, Subsystem::Qubit).unwrap();
            let expected = rq.entries().transpose().kronecker(rf.entries());
            prop_assert!((pt.entries() - expected).norm() < 1e-14);
            prop_assert!(hermitian_eigenvalues(pt.entries())[0] > -1e-12);
        }
    }
}
