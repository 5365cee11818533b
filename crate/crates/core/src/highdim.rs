//! Reductions of the d-dimensional problem to solvable cases.
//!
//! Commuting states are solved exactly by the projective measurement onto a
//! common eigenbasis. States supported on a common two-dimensional subspace
//! become a qubit problem. A pure state mixed with white noise is solved by
//! the Lüders measurement {|ψ⟩⟨ψ|, 1 − |ψ⟩⟨ψ|}. Anything else is attempted
//! through generalized Bloch coordinates, where the qubit formulas give a
//! candidate that is only a measurement if it passes a positivity check.

use crate::basis::{basis_decompose, OperatorBasis};
use crate::bayes::{posterior_from_overlaps, q_functional, MeasurementScore, Prior};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::policy::numeric_policy;
use crate::qubit::{optimal_alpha, optimal_pvm, PlanarGeometry};
use crate::report::{EstimationReport, SolutionKind};
use crate::state::{common_eigenbasis, BlochVector, DensityMatrix, Povm};

/// Result of one reduction. When `positivity_ok` is false there is no
/// measurement, only the rejected candidate effects.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub kind: SolutionKind,
    pub lifted_povm: Option<Povm>,
    pub candidate_effects: Vec<CMatrix>,
    pub certificate: String,
    pub positivity_ok: bool,
    /// Smallest eigenvalue over the candidate effects.
    pub min_eigenvalue: f64,
    /// Score of the lifted measurement in the full problem.
    pub score: Option<MeasurementScore>,
    /// Q of the reduced problem the candidate was derived from.
    pub reduced_q: f64,
    pub alpha0: Option<f64>,
    pub geometry: Option<PlanarGeometry>,
    /// ρ1 = ρ2: no measurement carries information.
    pub degenerate: bool,
}

impl ReductionOutcome {
    fn accepted(kind: SolutionKind, povm: Povm, score: MeasurementScore, reduced_q: f64, certificate: String) -> Self {
        let candidate_effects = povm.effects().iter().map(|e| e.matrix().clone()).collect();
        let min_eigenvalue = povm
            .effects()
            .iter()
            .map(|e| linalg::min_eigenvalue(e.matrix()))
            .fold(f64::INFINITY, f64::min);
        ReductionOutcome {
            kind,
            lifted_povm: Some(povm),
            candidate_effects,
            certificate,
            positivity_ok: true,
            min_eigenvalue,
            score: Some(score),
            reduced_q,
            alpha0: None,
            geometry: None,
            degenerate: false,
        }
    }

    /// The report for an accepted reduction; `None` when positivity failed.
    pub fn to_report(&self) -> Option<EstimationReport> {
        let povm = self.lifted_povm.clone()?;
        let score = self.score.clone()?;
        let mut report = EstimationReport::new(self.kind, povm, score);
        report.alpha0 = self.alpha0;
        report.geometry = self.geometry;
        report.degenerate = self.degenerate;
        report.notes.push(self.certificate.clone());
        Some(report)
    }
}

/// The projective measurement onto a common eigenbasis of commuting states.
pub fn solve_commuting(prior: &Prior, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<ReductionOutcome> {
    let u = common_eigenbasis(rho1, rho2)?;
    let povm = Povm::from_basis(&u)?;
    let score = q_functional(&povm, prior, rho1, rho2)?;
    // Q from the diagonal entries t_i = ⟨i|ρ1|i⟩, s_i = ⟨i|ρ2|i⟩ alone
    let reduced_q: f64 = u
        .column_iter()
        .map(|col| {
            let v = col.into_owned();
            let t = (v.adjoint() * rho1.matrix() * &v)[(0, 0)].re;
            let s = (v.adjoint() * rho2.matrix() * &v)[(0, 0)].re;
            posterior_from_overlaps(t, s, prior)
        })
        .filter(|pm| pm.occurs)
        .map(|pm| pm.prob * pm.estimate * pm.estimate)
        .sum();
    let mut out = ReductionOutcome::accepted(
        SolutionKind::Commuting,
        povm,
        score,
        reduced_q,
        "commuting states: rank-one projectors onto a common eigenbasis".into(),
    );
    out.degenerate = same_state(rho1, rho2);
    Ok(out)
}

/// Maps states with a common support of dimension at most two to a qubit
/// problem, solves it, and lifts the result back with the complement
/// projector as an extra outcome that never occurs.
pub fn solve_two_dim_support(prior: &Prior, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<ReductionOutcome> {
    let d = rho1.dim();
    if rho2.dim() != d {
        return Err(Error::DimensionMismatch { left: d, right: rho2.dim() });
    }
    let (vals, vecs) = linalg::eigh(&(rho1.matrix() + rho2.matrix()));
    let cutoff = numeric_policy().support_rank;
    let rank = vals.iter().filter(|&&v| v > cutoff).count();
    if rank > 2 {
        return Err(Error::SupportTooLarge { rank });
    }
    // the two largest eigenvectors; with rank one the second is any orthogonal direction
    let v = CMatrix::from_columns(&[vecs.column(d - 1).into_owned(), vecs.column(d - 2).into_owned()]);
    let restrict = |rho: &DensityMatrix| -> Result<DensityMatrix> {
        let m = linalg::hermitian_part(&(v.adjoint() * rho.matrix() * &v));
        let tr = linalg::trace(&m).re;
        DensityMatrix::new(m.unscale(tr))
    };
    let (q1, q2) = (restrict(rho1)?, restrict(rho2)?);
    let projector = &v * v.adjoint();
    let complement = linalg::identity(d) - &projector;
    let with_complement = |mut effects: Vec<CMatrix>| {
        if d > 2 {
            effects.push(complement.clone());
        }
        effects
    };

    if same_state(rho1, rho2) {
        let povm = Povm::from_matrices(with_complement(vec![projector.clone()]))?;
        let score = q_functional(&povm, prior, rho1, rho2)?;
        let reduced_q = q_functional(&Povm::trivial(2), prior, &q1, &q2)?.q_value;
        let mut out = ReductionOutcome::accepted(
            SolutionKind::TwoDimSubspace,
            povm,
            score,
            reduced_q,
            "identical states: no measurement is informative".into(),
        );
        out.degenerate = true;
        return Ok(out);
    }

    let qubit = optimal_pvm(prior, &q1, &q2)?;
    let lifted = qubit.povm.effects().iter().map(|e| &v * e.matrix() * v.adjoint()).collect();
    let povm = Povm::from_matrices(with_complement(lifted))?;
    let score = q_functional(&povm, prior, rho1, rho2)?;
    let mut out = ReductionOutcome::accepted(
        SolutionKind::TwoDimSubspace,
        povm,
        score,
        qubit.score.q_value,
        format!("joint support of rank {rank}: solved as a qubit problem and lifted"),
    );
    out.alpha0 = qubit.alpha0;
    out.geometry = qubit.geometry;
    Ok(out)
}

/// The Lüders measurement for ρ1 = |ψ⟩⟨ψ|, ρ2 = 1/d.
pub fn solve_pure_plus_noise(prior: &Prior, psi: &CVector, dim: usize) -> Result<ReductionOutcome> {
    if psi.len() != dim {
        return Err(Error::WrongDimension { expected: dim, found: psi.len() });
    }
    let rho1 = DensityMatrix::pure(psi)?;
    let rho2 = DensityMatrix::maximally_mixed(dim);
    let p = rho1.matrix().clone();
    let povm = Povm::from_matrices(vec![p.clone(), linalg::identity(dim) - p])?;
    let score = q_functional(&povm, prior, &rho1, &rho2)?;
    let inv_d = 1.0 / dim as f64;
    let reduced_q = [(1.0, inv_d), (0.0, 1.0 - inv_d)]
        .iter()
        .map(|&(t, s)| posterior_from_overlaps(t, s, prior))
        .filter(|pm| pm.occurs)
        .map(|pm| pm.prob * pm.estimate * pm.estimate)
        .sum();
    Ok(ReductionOutcome::accepted(
        SolutionKind::PureWithNoise,
        povm,
        score,
        reduced_q,
        "pure state with white noise: Lüders measurement onto the pure state".into(),
    ))
}

/// Applies the qubit solution to the first two generalized Bloch coordinates
/// in a basis aligned with ρ1 and ρ2, rebuilds the candidate effects
/// {O(n), 1 − O(n)} and accepts them only if they are positive.
pub fn embed_and_check(
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    basis: &OperatorBasis,
) -> Result<ReductionOutcome> {
    let d = rho1.dim();
    let aligned = OperatorBasis::aligned(rho1, rho2, basis)?;
    let x1 = basis_decompose(rho1, &aligned)?;
    let x2 = basis_decompose(rho2, &aligned)?;
    let leak = x1[2..].iter().chain(&x2[2..]).fold(0.0f64, |m, x| m.max(x.abs()));
    if leak > 1e-9 {
        return Err(Error::BasisAlignmentFailed(format!("states leave the aligned plane by {leak:.3e}")));
    }
    if prior.mean <= 0.0 {
        return Err(Error::ZeroMeanPrior);
    }
    let w = (prior.second_moment / prior.mean).clamp(0.0, 1.0);
    let mix = |a: f64| BlochVector::new(a * x1[0] + (1.0 - a) * x2[0], a * x1[1] + (1.0 - a) * x2[1], 0.0);
    let geom = PlanarGeometry::from_bloch(mix(w), mix(prior.mean), prior.mean);
    let angle = optimal_alpha(&geom)?;
    let n = geom.frame.direction(angle.alpha);

    let build = |sign: f64| -> Result<(Vec<CMatrix>, f64, f64)> {
        let mut r = vec![0.0; d * d - 1];
        r[0] = sign * n.x;
        r[1] = sign * n.y;
        let o = aligned.reconstruct(&r)?;
        let effects = vec![o.clone(), linalg::identity(d) - o];
        let min_eig = effects.iter().map(linalg::min_eigenvalue).fold(f64::INFINITY, f64::min);
        // tr[O(n) ρ] = (1 + (d−1) n·x)/d
        let overlap = |x: &[f64]| (1.0 + (d as f64 - 1.0) * sign * (n.x * x[0] + n.y * x[1])) / d as f64;
        let (t, s) = (overlap(&x1), overlap(&x2));
        let q = [(t, s), (1.0 - t, 1.0 - s)]
            .iter()
            .map(|&(a, b)| posterior_from_overlaps(a, b, prior))
            .filter(|pm| pm.occurs)
            .map(|pm| pm.prob * pm.estimate * pm.estimate)
            .sum();
        Ok((effects, min_eig, q))
    };
    let plus = build(1.0)?;
    let minus = build(-1.0)?;
    let psd = -numeric_policy().psd;
    let chosen = match (plus.1 >= psd, minus.1 >= psd) {
        (true, true) if minus.2 > plus.2 => minus,
        (true, _) => plus,
        (false, true) => minus,
        (false, false) => if plus.1 >= minus.1 { plus } else { minus },
    };
    let (effects, min_eigenvalue, reduced_q) = chosen;

    let mut out = if min_eigenvalue >= psd {
        let povm = Povm::from_matrices(effects)?;
        let score = q_functional(&povm, prior, rho1, rho2)?;
        let mut out = ReductionOutcome::accepted(
            SolutionKind::Embedded,
            povm,
            score,
            reduced_q,
            "generalized Bloch embedding: candidate effects are positive".into(),
        );
        out.min_eigenvalue = min_eigenvalue;
        out
    } else {
        ReductionOutcome {
            kind: SolutionKind::Unreduced,
            lifted_povm: None,
            candidate_effects: effects,
            certificate: format!(
                "generalized Bloch embedding: candidate effect has eigenvalue {min_eigenvalue:.6e} < 0"
            ),
            positivity_ok: false,
            min_eigenvalue,
            score: None,
            reduced_q,
            alpha0: None,
            geometry: None,
            degenerate: false,
        }
    };
    out.alpha0 = Some(angle.alpha);
    out.geometry = Some(geom);
    out.degenerate = angle.degenerate;
    Ok(out)
}

/// ρ1 pure and ρ2 = 1/d; returns the pure state vector.
pub fn pure_plus_noise_vector(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Option<CVector> {
    let d = rho1.dim();
    if rho2.dim() != d {
        return None;
    }
    let mixed = DensityMatrix::maximally_mixed(d);
    if linalg::max_abs_diff(rho2.matrix(), mixed.matrix()) > 1e-10 || (rho1.purity() - 1.0).abs() > 1e-10 {
        return None;
    }
    let (_, vecs) = linalg::eigh(rho1.matrix());
    Some(vecs.column(d - 1).into_owned())
}

/// Rank of supp(ρ1) + supp(ρ2).
pub fn joint_support_rank(rho1: &DensityMatrix, rho2: &DensityMatrix) -> usize {
    let cutoff = numeric_policy().support_rank;
    linalg::eigenvalues(&(rho1.matrix() + rho2.matrix())).iter().filter(|&&v| v > cutoff).count()
}

fn same_state(rho1: &DensityMatrix, rho2: &DensityMatrix) -> bool {
    linalg::max_abs_diff(rho1.matrix(), rho2.matrix()) < 1e-12
}
