//! Priors over the mixing parameter, posterior moments, and the measurement
//! score Q whose maximization minimizes the mean posterior variance.
//!
//! For ρ_λ = λρ1 + (1−λ)ρ2 and a prior with moments λ̄, λ²‾, λ³‾ the
//! outcome statistics of an effect E only depend on t1 = tr[Eρ1] and
//! t2 = tr[Eρ2]:
//!
//! ```text
//! p(m)        = λ̄ t1 + (1−λ̄) t2                     = tr[E ρ_b]
//! p(m) E_m(λ)  = λ²‾ t1 + (λ̄ − λ²‾) t2               = λ̄ tr[E ρ_a]
//! p(m) E_m(λ²) = λ³‾ t1 + (λ²‾ − λ³‾) t2
//! ```
//!
//! with ρ_b = λ̄ρ1 + (1−λ̄)ρ2 and ρ_a = wρ1 + (1−w)ρ2, w = λ²‾/λ̄. The mean
//! variance is λ²‾ − Q with Q = Σ_m λ̄² tr[E_m ρ_a]² / tr[E_m ρ_b].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::numeric_policy;
use crate::quad::adaptive_simpson;
use crate::state::{DensityMatrix, Effect, Povm};

const TABLE_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind {
    /// Flat density on [0, 1].
    Uniform,
    /// q(λ) = 1/(λ T) on [e^{−T}, 1], the law of λ = e^{−Bt} for B uniform on [0, B_max], T = t·B_max.
    TruncatedReciprocal { t_bmax: f64 },
    /// All mass at one value.
    PointMass { lambda0: f64 },
    /// Piecewise-linear density through tabulated points, normalized.
    Table { lambda: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub mean: f64,
    pub second_moment: f64,
    pub third_moment: f64,
    pub support: (f64, f64),
    pub kind: PriorKind,
}

/// JSON form of a prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Uniform,
    TruncReciprocal { t_bmax: f64 },
    Table { lambda: Vec<f64>, density: Vec<f64> },
}

impl Prior {
    pub fn uniform() -> Self {
        Prior {
            mean: 0.5,
            second_moment: 1.0 / 3.0,
            third_moment: 0.25,
            support: (0.0, 1.0),
            kind: PriorKind::Uniform,
        }
    }

    pub fn point_mass(lambda0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda0) {
            return Err(Error::InvalidPrior(format!("point mass at {lambda0} outside [0,1]")));
        }
        Ok(Prior {
            mean: lambda0,
            second_moment: lambda0 * lambda0,
            third_moment: lambda0 * lambda0 * lambda0,
            support: (lambda0, lambda0),
            kind: PriorKind::PointMass { lambda0 },
        })
    }

    pub fn truncated_reciprocal(t_bmax: f64) -> Result<Self> {
        prior_from_decoherence(t_bmax)
    }

    /// Piecewise-linear density through `(lambda[k], density[k])`, rescaled to
    /// unit mass. Moments come from adaptive Simpson quadrature.
    pub fn table(lambda: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if lambda.len() != density.len() || lambda.len() < 2 {
            return Err(Error::InvalidPrior(
                "table needs at least two points and equal-length lambda/density".into(),
            ));
        }
        if lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidPrior("table lambda values must lie in [0,1]".into()));
        }
        if lambda.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPrior("table lambda values must increase strictly".into()));
        }
        if density.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPrior("table density must be finite and non-negative".into()));
        }
        let mass: f64 = lambda
            .windows(2)
            .zip(density.windows(2))
            .map(|(l, p)| 0.5 * (l[1] - l[0]) * (p[0] + p[1]))
            .sum();
        if mass <= 0.0 {
            return Err(Error::InvalidPrior("table density has zero mass".into()));
        }
        let density: Vec<f64> = density.iter().map(|p| p / mass).collect();
        let support = (lambda[0], lambda[lambda.len() - 1]);
        let kind = PriorKind::Table { lambda, density };
        let mut prior = Prior { mean: 0.0, second_moment: 0.0, third_moment: 0.0, support, kind };
        let moment = |n: i32| -> f64 {
            let PriorKind::Table { lambda, .. } = &prior.kind else { unreachable!() };
            lambda
                .windows(2)
                .map(|w| adaptive_simpson(|x| x.powi(n) * prior.density(x).unwrap_or(0.0), w[0], w[1], TABLE_QUAD_TOL))
                .sum()
        };
        let (m1, m2, m3) = (moment(1), moment(2), moment(3));
        prior.mean = m1;
        prior.second_moment = m2;
        prior.third_moment = m3;
        prior.check_moments()?;
        Ok(prior)
    }

    pub fn from_spec(spec: &PriorSpec) -> Result<Self> {
        match spec {
            PriorSpec::Uniform => Ok(Prior::uniform()),
            PriorSpec::TruncReciprocal { t_bmax } => prior_from_decoherence(*t_bmax),
            PriorSpec::Table { lambda, density } => Prior::table(lambda.clone(), density.clone()),
        }
    }

    /// JSON form; `None` for point masses, which have no file representation.
    pub fn spec(&self) -> Option<PriorSpec> {
        match &self.kind {
            PriorKind::Uniform => Some(PriorSpec::Uniform),
            PriorKind::TruncatedReciprocal { t_bmax } => Some(PriorSpec::TruncReciprocal { t_bmax: *t_bmax }),
            PriorKind::Table { lambda, density } => {
                Some(PriorSpec::Table { lambda: lambda.clone(), density: density.clone() })
            }
            PriorKind::PointMass { .. } => None,
        }
    }

    fn check_moments(&self) -> Result<()> {
        let tol = 1e-12;
        let (m1, m2) = (self.mean, self.second_moment);
        if !(m1 * m1 <= m2 + tol && m2 <= m1 + tol) {
            return Err(Error::InvalidPrior(format!(
                "moments violate mean^2 <= second <= mean: mean {m1}, second {m2}"
            )));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, PriorKind::Uniform)
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self.kind, PriorKind::PointMass { .. })
    }

    /// Probability density at λ; `None` for a point mass.
    pub fn density(&self, lambda: f64) -> Option<f64> {
        let inside = lambda >= self.support.0 && lambda <= self.support.1;
        match &self.kind {
            PriorKind::Uniform => Some(if inside { 1.0 } else { 0.0 }),
            PriorKind::TruncatedReciprocal { t_bmax } => {
                Some(if inside && lambda > 0.0 { 1.0 / (lambda * t_bmax) } else { 0.0 })
            }
            PriorKind::PointMass { .. } => None,
            PriorKind::Table { lambda: xs, density } => {
                if !inside {
                    return Some(0.0);
                }
                let k = xs.partition_point(|&x| x <= lambda).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let s = (lambda - x0) / (x1 - x0);
                Some(density[k - 1] + s * (density[k] - density[k - 1]))
            }
        }
    }

    /// Inverse CDF at u ∈ [0, 1].
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            PriorKind::Uniform => u,
            PriorKind::TruncatedReciprocal { t_bmax } => (-u * t_bmax).exp(),
            PriorKind::PointMass { lambda0 } => *lambda0,
            PriorKind::Table { lambda, density } => table_quantile(lambda, density, u),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

fn table_quantile(xs: &[f64], ps: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..xs.len() - 1 {
        let h = xs[k + 1] - xs[k];
        let (p0, p1) = (ps[k], ps[k + 1]);
        let seg = 0.5 * h * (p0 + p1);
        if acc + seg >= u || k == xs.len() - 2 {
            let target = ((u - acc) / h).max(0.0);
            // p0 s + (p1 − p0) s²/2 = target on s ∈ [0, 1]
            let a = 0.5 * (p1 - p0);
            let s = if a.abs() < 1e-14 {
                if p0 > 0.0 { target / p0 } else { 0.0 }
            } else {
                let disc = (p0 * p0 + 4.0 * a * target).max(0.0);
                (-p0 + disc.sqrt()) / (2.0 * a)
            };
            return xs[k] + h * s.clamp(0.0, 1.0);
        }
        acc += seg;
    }
    xs[xs.len() - 1]
}

/// Prior on λ = e^{−Bt} induced by B uniform on [0, B_max], with T = t·B_max.
pub fn prior_from_decoherence(t_bmax: f64) -> Result<Prior> {
    if !(t_bmax > 0.0 && t_bmax.is_finite()) {
        return Err(Error::NonPositiveParameter { name: "t_bmax", value: t_bmax });
    }
    // ∫ λ^n / (λ T) dλ over [e^{−T}, 1] = (1 − e^{−nT}) / (nT)
    let moment = |n: f64| -(-n * t_bmax).exp_m1() / (n * t_bmax);
    Ok(Prior {
        mean: moment(1.0),
        second_moment: moment(2.0),
        third_moment: moment(3.0),
        support: ((-t_bmax).exp(), 1.0),
        kind: PriorKind::TruncatedReciprocal { t_bmax },
    })
}

/// ρ_a = wρ1 + (1−w)ρ2 with w = λ²‾/λ̄, and ρ_b = λ̄ρ1 + (1−λ̄)ρ2.
pub fn effective_states(
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<(DensityMatrix, DensityMatrix)> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { left: rho1.dim(), right: rho2.dim() });
    }
    if prior.mean <= 0.0 {
        return Err(Error::ZeroMeanPrior);
    }
    let w = (prior.second_moment / prior.mean).clamp(0.0, 1.0);
    let rho_a = DensityMatrix::mixture(w, rho1, rho2)?;
    let rho_b = DensityMatrix::mixture(prior.mean.clamp(0.0, 1.0), rho1, rho2)?;
    Ok((rho_a, rho_b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorMoments {
    /// p(m).
    pub prob: f64,
    /// Bayes estimate g_m = E_m(λ).
    pub estimate: f64,
    /// E_m(λ²).
    pub second: f64,
    /// Var_m(λ).
    pub variance: f64,
    /// False when p(m) is below the zero-probability threshold; the prior
    /// moments are reported in that case.
    pub occurs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementScore {
    pub q_value: f64,
    pub mean_variance: f64,
    pub per_outcome: Vec<PosteriorMoments>,
}

/// Posterior moments from the two overlaps t1 = tr[Eρ1], t2 = tr[Eρ2].
pub fn posterior_from_overlaps(t1: f64, t2: f64, prior: &Prior) -> PosteriorMoments {
    let (m1, m2, m3) = (prior.mean, prior.second_moment, prior.third_moment);
    let prob = m1 * t1 + (1.0 - m1) * t2;
    if prob < numeric_policy().zero_probability {
        return PosteriorMoments {
            prob: prob.max(0.0),
            estimate: m1,
            second: m2,
            variance: prior.variance(),
            occurs: false,
        };
    }
    let estimate = (m2 * t1 + (m1 - m2) * t2) / prob;
    let second = (m3 * t1 + (m2 - m3) * t2) / prob;
    PosteriorMoments { prob, estimate, second, variance: second - estimate * estimate, occurs: true }
}

pub fn posterior_moments(
    effect: &Effect,
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<PosteriorMoments> {
    check_dims(effect.dim(), rho1, rho2)?;
    Ok(posterior_from_overlaps(effect.probability(rho1), effect.probability(rho2), prior))
}

/// Q and the mean posterior variance λ²‾ − Q of a measurement.
pub fn q_functional(
    povm: &Povm,
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<MeasurementScore> {
    check_dims(povm.dim(), rho1, rho2)?;
    let per_outcome: Vec<PosteriorMoments> = povm
        .effects()
        .iter()
        .map(|e| posterior_from_overlaps(e.probability(rho1), e.probability(rho2), prior))
        .collect();
    let q_value: f64 = per_outcome
        .iter()
        .filter(|pm| pm.occurs)
        .map(|pm| pm.prob * pm.estimate * pm.estimate)
        .sum();
    Ok(MeasurementScore { q_value, mean_variance: prior.second_moment - q_value, per_outcome })
}

/// The uniform-prior score written symmetrically in ρ1 and ρ2:
/// ¼(1 + Σ_m tr[E_m(ρ1−ρ2)]² / (18 tr[E_m(ρ1+ρ2)])),
/// from expanding ρ_a = ρ_b + (ρ1−ρ2)/6 and Σ_m tr[E_m(ρ1−ρ2)] = 0.
pub fn q_permutation_form(
    povm: &Povm,
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<f64> {
    if !prior.is_uniform() {
        return Err(Error::NonUniformPrior);
    }
    check_dims(povm.dim(), rho1, rho2)?;
    let cutoff = 2.0 * numeric_policy().zero_probability;
    let sum: f64 = povm
        .effects()
        .iter()
        .map(|e| {
            let (t1, t2) = (e.probability(rho1), e.probability(rho2));
            let plus = t1 + t2;
            if plus < cutoff {
                0.0
            } else {
                (t1 - t2) * (t1 - t2) / (18.0 * plus)
            }
        })
        .sum();
    Ok(0.25 * (1.0 + sum))
}

fn check_dims(dim: usize, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<()> {
    if rho1.dim() != dim {
        return Err(Error::DimensionMismatch { left: dim, right: rho1.dim() });
    }
    if rho2.dim() != dim {
        return Err(Error::DimensionMismatch { left: dim, right: rho2.dim() });
    }
    Ok(())
}
