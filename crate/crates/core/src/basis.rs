//! Orthonormal Hermitian operator bases and generalized Bloch coordinates.
//!
//! With G_0 = 1/√d implicit and traceless G_1..G_{d²−1} satisfying
//! tr(G_i G_j) = δ_ij, any trace-one Hermitian O is written as
//!
//! ```text
//! O = (1/d) (1 + √(d² − d) Σ r_i G_i)
//! ```
//!
//! and O is a pure state exactly when tr(O²) = 1, i.e. Σ r_i² = 1.

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I};
use crate::state::DensityMatrix;

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis {
    dim: usize,
    generators: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn new(dim: usize, generators: Vec<CMatrix>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::BadParameter(format!("basis dimension {dim} < 2")));
        }
        if generators.len() != dim * dim - 1 {
            return Err(Error::WrongShape(format!(
                "expected {} generators, got {}",
                dim * dim - 1,
                generators.len()
            )));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::WrongDimension { expected: dim, found: g.nrows() });
            }
            if linalg::hermitian_deviation(g) > ORTHONORMAL_TOL {
                return Err(Error::BasisAlignmentFailed(format!("generator {} not Hermitian", i + 1)));
            }
            if linalg::trace(g).norm() > ORTHONORMAL_TOL {
                return Err(Error::BasisAlignmentFailed(format!("generator {} not traceless", i + 1)));
            }
            for (j, h) in generators.iter().enumerate().skip(i) {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (linalg::trace_product(g, h) - expected).abs() > ORTHONORMAL_TOL {
                    return Err(Error::BasisAlignmentFailed(format!(
                        "tr(G{} G{}) != {expected}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(OperatorBasis { dim, generators })
    }

    /// Pauli matrices scaled by 1/√2.
    pub fn pauli() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let generators = linalg::pauli().into_iter().map(|p| p.scale(s)).collect();
        OperatorBasis { dim: 2, generators }
    }

    /// Generalized Gell-Mann matrices normalized to tr(G_i G_j) = δ_ij:
    /// symmetric, then antisymmetric off-diagonal families, then diagonal.
    /// For d = 2 this coincides with [`OperatorBasis::pauli`].
    pub fn gell_mann(dim: usize) -> Self {
        assert!(dim >= 2, "Gell-Mann basis needs dim >= 2");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut generators = Vec::with_capacity(dim * dim - 1);
        let pairs: Vec<(usize, usize)> =
            (0..dim).flat_map(|j| (j + 1..dim).map(move |k| (j, k))).collect();
        for &(j, k) in &pairs {
            let mut g = CMatrix::zeros(dim, dim);
            g[(j, k)] = c(s, 0.0);
            g[(k, j)] = c(s, 0.0);
            generators.push(g);
        }
        for &(j, k) in &pairs {
            let mut g = CMatrix::zeros(dim, dim);
            g[(j, k)] = -I * s;
            g[(k, j)] = I * s;
            generators.push(g);
        }
        for l in 1..dim {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut g = CMatrix::zeros(dim, dim);
            for m in 0..l {
                g[(m, m)] = c(norm, 0.0);
            }
            g[(l, l)] = c(-(l as f64) * norm, 0.0);
            generators.push(g);
        }
        OperatorBasis { dim, generators }
    }

    pub fn default_for(dim: usize) -> Self {
        if dim == 2 {
            Self::pauli()
        } else {
            Self::gell_mann(dim)
        }
    }

    /// A basis whose first two generators span the traceless parts of ρ1 and ρ2.
    ///
    /// G_1 is the normalized traceless part of ρ1 − ρ2, G_2 the Gram–Schmidt
    /// remainder of ρ2 (or ρ1) against it; the rest is completed from
    /// `completion` by Gram–Schmidt.
    pub fn aligned(rho1: &DensityMatrix, rho2: &DensityMatrix, completion: &OperatorBasis) -> Result<Self> {
        let dim = rho1.dim();
        if rho2.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: rho2.dim() });
        }
        if completion.dim != dim {
            return Err(Error::BasisAlignmentFailed(format!(
                "completion basis has dimension {}, states have {dim}",
                completion.dim
            )));
        }
        let traceless = |m: &CMatrix| m - linalg::identity(dim).scale(linalg::trace(m).re / dim as f64);
        let diff = traceless(&(rho1.matrix() - rho2.matrix()));
        let mut generators: Vec<CMatrix> = Vec::with_capacity(dim * dim - 1);
        if !push_orthonormalized(&mut generators, diff) {
            return Err(Error::BasisAlignmentFailed("rho1 and rho2 coincide".into()));
        }
        if !push_orthonormalized(&mut generators, traceless(rho2.matrix())) {
            push_orthonormalized(&mut generators, traceless(rho1.matrix()));
        }
        for g in &completion.generators {
            if generators.len() == dim * dim - 1 {
                break;
            }
            push_orthonormalized(&mut generators, g.clone());
        }
        if generators.len() != dim * dim - 1 {
            return Err(Error::BasisAlignmentFailed(format!(
                "completion spanned only {} of {} generators",
                generators.len(),
                dim * dim - 1
            )));
        }
        // With ρ1, ρ2 collinear in operator space the second slot comes from
        // the completion and carries zero coordinates for both states.
        OperatorBasis::new(dim, generators)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    fn scale(&self) -> f64 {
        let d = self.dim as f64;
        (d * d - d).sqrt()
    }

    /// Coordinates r_i = tr(G_i O) · d / √(d² − d) of a Hermitian matrix.
    pub fn coordinates(&self, m: &CMatrix) -> Vec<f64> {
        let k = self.dim as f64 / self.scale();
        self.generators.iter().map(|g| linalg::trace_product(g, m) * k).collect()
    }

    /// (1/d)(1 + √(d² − d) Σ r_i G_i).
    pub fn reconstruct(&self, r: &[f64]) -> Result<CMatrix> {
        if r.len() != self.generators.len() {
            return Err(Error::WrongShape(format!(
                "coordinate vector has length {}, expected {}",
                r.len(),
                self.generators.len()
            )));
        }
        let mut m = linalg::identity(self.dim);
        let s = self.scale();
        for (ri, g) in r.iter().zip(&self.generators) {
            m += g.scale(ri * s);
        }
        Ok(m.unscale(self.dim as f64))
    }
}

/// Generalized Bloch coordinates of a state in `basis`.
pub fn basis_decompose(rho: &DensityMatrix, basis: &OperatorBasis) -> Result<Vec<f64>> {
    if rho.dim() != basis.dim {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: basis.dim });
    }
    Ok(basis.coordinates(rho.matrix()))
}

fn push_orthonormalized(gens: &mut Vec<CMatrix>, mut m: CMatrix) -> bool {
    for _ in 0..2 {
        for g in gens.iter() {
            let overlap = linalg::trace_product(g, &m);
            m -= g.scale(overlap);
        }
    }
    let norm = linalg::trace_product(&m, &m).sqrt();
    if norm < 1e-9 {
        return false;
    }
    gens.push(linalg::hermitian_part(&m).unscale(norm));
    true
}
