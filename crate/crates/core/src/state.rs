//! Validated density matrices, effects and POVMs, plus the qubit Bloch maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::policy::numeric_policy;

/// A d×d Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        validate_state(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(linalg::identity(dim).unscale(dim as f64))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) non-zero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm < 1e-300 {
            return Err(Error::BadParameter("zero state vector".into()));
        }
        Ok(DensityMatrix(linalg::outer(&psi.unscale(norm))))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        validate_state(linalg::diag(values))
    }

    /// λ a + (1−λ) b for λ ∈ [0, 1]. Convex combinations stay valid states.
    pub fn mixture(lambda: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::BadParameter(format!("mixing weight {lambda} outside [0,1]")));
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
        }
        Ok(DensityMatrix(a.0.scale(lambda) + b.0.scale(1.0 - lambda)))
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.0, &self.0)
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        linalg::trace_product(op, &self.0)
    }
}

/// Checks the density-matrix invariants in order: square, Hermitian,
/// unit trace, positive semidefinite.
pub fn validate_state(m: CMatrix) -> Result<DensityMatrix> {
    let policy = numeric_policy();
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let deviation = linalg::hermitian_deviation(&m);
    if deviation > policy.hermitian {
        return Err(Error::NotHermitian { deviation });
    }
    let tr = linalg::trace(&m);
    if (tr.re - 1.0).abs() > policy.trace || tr.im.abs() > policy.trace {
        return Err(Error::NotUnitTrace { trace: tr.re });
    }
    let min_eigenvalue = linalg::min_eigenvalue(&m);
    if min_eigenvalue < -policy.psd {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix(linalg::hermitian_part(&m)))
}

/// A POVM element: Hermitian with spectrum in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(CMatrix);

impl Effect {
    pub fn new(m: CMatrix) -> Result<Self> {
        let policy = numeric_policy();
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let deviation = linalg::hermitian_deviation(&m);
        if deviation > policy.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        let vals = linalg::eigenvalues(&m);
        let min_eigenvalue = vals[0];
        if min_eigenvalue < -policy.psd {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        let max_eigenvalue = vals[vals.len() - 1];
        if max_eigenvalue > 1.0 + policy.psd {
            return Err(Error::EffectTooLarge { max_eigenvalue });
        }
        Ok(Effect(linalg::hermitian_part(&m)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// tr[E ρ].
    pub fn probability(&self, rho: &DensityMatrix) -> f64 {
        linalg::trace_product(&self.0, rho.matrix())
    }

    pub fn rank(&self, tol: f64) -> usize {
        linalg::eigenvalues(&self.0).iter().filter(|&&v| v > tol).count()
    }
}

/// An ordered list of effects of common dimension summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("no effects".into()));
        };
        let dim = first.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: e.dim() });
            }
            sum += e.matrix();
        }
        let deviation = linalg::max_abs_diff(&sum, &linalg::identity(dim));
        if deviation > numeric_policy().povm_completeness {
            return Err(Error::InvalidPovm(format!(
                "effects sum to identity only within {deviation:.3e}"
            )));
        }
        Ok(Povm { effects })
    }

    /// Validates each matrix as an effect, then completeness.
    pub fn from_matrices(ms: Vec<CMatrix>) -> Result<Self> {
        let effects = ms
            .into_iter()
            .map(Effect::new)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidPovm(e.to_string()))?;
        Povm::new(effects)
    }

    /// The single-outcome measurement {1}.
    pub fn trivial(dim: usize) -> Self {
        Povm { effects: vec![Effect(linalg::identity(dim))] }
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let ms = u.column_iter().map(|col| linalg::outer(&col.into_owned())).collect();
        Povm::from_matrices(ms)
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| e.probability(rho)).collect()
    }

    /// True when every effect is idempotent (E² = E) to `tol`.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects
            .iter()
            .all(|e| linalg::max_abs_diff(&(e.matrix() * e.matrix()), e.matrix()) < tol)
    }
}

/// Real 3-vector coordinatizing a qubit operator against the Pauli matrices.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        BlochVector::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, o: BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn scale(self, s: f64) -> Self {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(self, o: BlochVector) -> Self {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: BlochVector) -> Self {
        self.add(o.scale(-1.0))
    }

    /// r · σ.
    pub fn dot_sigma(self) -> CMatrix {
        let [sx, sy, sz] = linalg::pauli();
        sx.scale(self.x) + sy.scale(self.y) + sz.scale(self.z)
    }
}

/// (tr σx ρ, tr σy ρ, tr σz ρ) of a qubit state.
pub fn bloch_decompose(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: rho.dim() });
    }
    Ok(bloch_of_matrix(rho.matrix()))
}

/// Pauli coordinates of any 2×2 Hermitian matrix, without normalization.
pub(crate) fn bloch_of_matrix(m: &CMatrix) -> BlochVector {
    let [sx, sy, sz] = linalg::pauli();
    BlochVector::new(
        linalg::trace_product(&sx, m),
        linalg::trace_product(&sy, m),
        linalg::trace_product(&sz, m),
    )
}

/// The effect p(1 + r·σ). Rank one iff ‖r‖ = 1.
pub fn bloch_compose(r: BlochVector, weight: f64) -> Result<Effect> {
    let norm = r.norm();
    if norm > 1.0 + 1e-10 {
        return Err(Error::VectorTooLong { norm });
    }
    if weight < 0.0 {
        return Err(Error::NegativeWeight { weight });
    }
    Effect::new((linalg::identity(2) + r.dot_sigma()).scale(weight))
}

/// The state ½(1 + r·σ).
pub fn qubit_state(r: BlochVector) -> Result<DensityMatrix> {
    let norm = r.norm();
    if norm > 1.0 + 1e-10 {
        return Err(Error::VectorTooLong { norm });
    }
    validate_state((linalg::identity(2) + r.dot_sigma()).scale(0.5))
}

/// An orthonormal basis (columns of a unitary) diagonalizing both states.
///
/// Degenerate eigenspaces of ρ1 are resolved by diagonalizing ρ2 inside them.
pub fn common_eigenbasis(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<CMatrix> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { left: rho1.dim(), right: rho2.dim() });
    }
    let policy = numeric_policy();
    let commutator_norm = linalg::max_abs(&linalg::commutator(rho1.matrix(), rho2.matrix()));
    if commutator_norm >= policy.commutator {
        return Err(Error::NotCommuting { commutator_norm });
    }
    let (vals, vecs) = linalg::eigh(rho1.matrix());
    let n = vals.len();
    let mut columns: Vec<CVector> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[start]).abs() < policy.degeneracy {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        if end - start == 1 {
            columns.push(block.column(0).into_owned());
        } else {
            let reduced = block.adjoint() * rho2.matrix() * &block;
            let (_, w) = linalg::eigh(&reduced);
            let rotated = &block * w;
            columns.extend(rotated.column_iter().map(|col| linalg::fix_phase(col.into_owned())));
        }
        start = end;
    }
    Ok(CMatrix::from_columns(&columns))
}

/// Largest off-diagonal modulus of U† A U.
pub fn off_diagonal_norm(u: &CMatrix, a: &CMatrix) -> f64 {
    let t = u.adjoint() * a * u;
    let n = t.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(t[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn real_vector(xs: &[f64]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}
