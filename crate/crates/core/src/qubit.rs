//! The qubit problem: planar reduction of POVMs, the closed-form optimal
//! projective measurement, and brute-force checks that no POVM beats it.
//!
//! With effective Bloch vectors r_a, r_b (from [`effective_states`]) and
//! Δr = r_a − r_b, a qubit POVM {p_m(1 + r_m·σ)} scores
//!
//! ```text
//! Q = λ̄² (1 + Σ_m p_m (r_m·Δr)² / (1 + r_m·r_b))
//! ```
//!
//! Angles are measured in the plane of Δr and r_b. A direction at angle α
//! makes angle α with Δr and angle β = α + γ with r_b, where γ is the angle
//! from Δr to r_b; a two-outcome projective measurement along ±r then scores
//!
//! ```text
//! Q(α) = λ̄² (1 + Δr² cos²α / (1 − r_b² cos²(α + γ)))
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bayes::{effective_states, q_functional, Prior};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::report::{EstimationReport, SolutionKind};
use crate::sampling::stream_rng;
use crate::state::{bloch_of_matrix, BlochVector, DensityMatrix, Effect, Povm};

const GRID_POINTS: usize = 2000;
const BRANCH_TOL: f64 = 1e-6;
const PLANAR_TOL: f64 = 1e-9;

/// Orthonormal in-plane axes: e_delta along Δr, e_perp completing the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneFrame {
    pub e_delta: [f64; 3],
    pub e_perp: [f64; 3],
}

impl PlaneFrame {
    /// The x–z plane with Δr along z.
    pub const XZ: PlaneFrame = PlaneFrame { e_delta: [0.0, 0.0, 1.0], e_perp: [1.0, 0.0, 0.0] };

    /// Unit direction at angle α: cos α e_delta − sin α e_perp.
    pub fn direction(&self, alpha: f64) -> BlochVector {
        let (s, c) = alpha.sin_cos();
        BlochVector::from_array([
            c * self.e_delta[0] - s * self.e_perp[0],
            c * self.e_delta[1] - s * self.e_perp[1],
            c * self.e_delta[2] - s * self.e_perp[2],
        ])
    }

    /// In-plane angle and in-plane norm of a vector.
    pub fn angle_of(&self, v: BlochVector) -> (f64, f64) {
        let a = v.dot(BlochVector::from_array(self.e_delta));
        let b = v.dot(BlochVector::from_array(self.e_perp));
        ((-b).atan2(a), a.hypot(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarGeometry {
    /// ‖r_a − r_b‖.
    pub delta_r: f64,
    /// ‖r_b‖.
    pub r_b_norm: f64,
    /// Signed angle from Δr to r_b, in (−π, π].
    pub gamma: f64,
    pub frame: PlaneFrame,
    /// λ̄², the overall scale of Q (¼ for the uniform prior).
    pub mean_sq: f64,
}

impl PlanarGeometry {
    /// Bare geometry in the x–z frame with the uniform-prior scale.
    pub fn new(delta_r: f64, r_b_norm: f64, gamma: f64) -> Self {
        PlanarGeometry { delta_r, r_b_norm, gamma: wrap_pi(gamma), frame: PlaneFrame::XZ, mean_sq: 0.25 }
    }

    pub fn from_bloch(r_a: BlochVector, r_b: BlochVector, mean: f64) -> Self {
        let delta = r_a.sub(r_b);
        let delta_r = delta.norm();
        let e_delta = if delta_r > 1e-12 {
            delta.scale(1.0 / delta_r)
        } else if r_b.norm() > 1e-12 {
            r_b.scale(1.0 / r_b.norm())
        } else {
            BlochVector::new(0.0, 0.0, 1.0)
        };
        let along = r_b.dot(e_delta);
        let perp = r_b.sub(e_delta.scale(along));
        let e_perp = if perp.norm() > 1e-12 {
            perp.scale(1.0 / perp.norm())
        } else {
            // r_b ∥ Δr: take the first coordinate axis not close to e_delta
            let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let axis = axes
                .iter()
                .map(|&a| BlochVector::from_array(a))
                .find(|a| a.dot(e_delta).abs() < 0.9)
                .expect("some axis is far from a unit vector");
            let v = axis.sub(e_delta.scale(axis.dot(e_delta)));
            v.scale(1.0 / v.norm())
        };
        let gamma = r_b.dot(e_perp).atan2(along);
        PlanarGeometry {
            delta_r,
            r_b_norm: r_b.norm(),
            gamma: wrap_pi(gamma),
            frame: PlaneFrame { e_delta: e_delta.to_array(), e_perp: e_perp.to_array() },
            mean_sq: mean * mean,
        }
    }

    pub fn from_effective_states(rho_a: &DensityMatrix, rho_b: &DensityMatrix, mean: f64) -> Result<Self> {
        for rho in [rho_a, rho_b] {
            if rho.dim() != 2 {
                return Err(Error::WrongDimension { expected: 2, found: rho.dim() });
            }
        }
        Ok(Self::from_bloch(bloch_of_matrix(rho_a.matrix()), bloch_of_matrix(rho_b.matrix()), mean))
    }

    pub fn from_problem(prior: &Prior, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<Self> {
        check_qubits(rho1, rho2)?;
        let (rho_a, rho_b) = effective_states(prior, rho1, rho2)?;
        Self::from_effective_states(&rho_a, &rho_b, prior.mean)
    }

    pub fn r_b_vector(&self) -> BlochVector {
        let (s, c) = self.gamma.sin_cos();
        let f = &self.frame;
        BlochVector::from_array(f.e_delta).scale(c * self.r_b_norm).add(BlochVector::from_array(f.e_perp).scale(s * self.r_b_norm))
    }

    /// Q of a single planar outcome's contribution p (cos²α Δr²)/(1 + r_b cos(α+γ)), unscaled.
    fn outcome_term(&self, weight: f64, alpha: f64) -> f64 {
        let c = alpha.cos();
        weight * self.delta_r * self.delta_r * c * c / (1.0 + self.r_b_norm * (alpha + self.gamma).cos())
    }
}

/// One pure planar effect p (1 + n(α)·σ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarOutcome {
    pub weight: f64,
    pub angle: f64,
}

/// A POVM of pure effects whose Bloch directions lie in one plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarPovm {
    pub outcomes: Vec<PlanarOutcome>,
    pub frame: PlaneFrame,
}

impl PlanarPovm {
    /// Checks Σ p_m = 1 and Σ p_m (cos α_m, sin α_m) = 0.
    pub fn new(outcomes: Vec<PlanarOutcome>, frame: PlaneFrame) -> Result<Self> {
        if outcomes.iter().any(|o| o.weight <= 0.0) {
            return Err(Error::InvalidPovm("planar weights must be positive".into()));
        }
        let total: f64 = outcomes.iter().map(|o| o.weight).sum();
        let cx: f64 = outcomes.iter().map(|o| o.weight * o.angle.cos()).sum();
        let cy: f64 = outcomes.iter().map(|o| o.weight * o.angle.sin()).sum();
        if (total - 1.0).abs() > PLANAR_TOL || cx.abs() > PLANAR_TOL || cy.abs() > PLANAR_TOL {
            return Err(Error::InvalidPovm(format!(
                "planar constraints violated: sum {total}, centroid ({cx:.3e}, {cy:.3e})"
            )));
        }
        Ok(PlanarPovm { outcomes, frame })
    }

    /// Two-outcome projective measurement along ±n(α).
    pub fn pvm(alpha: f64, frame: PlaneFrame) -> Self {
        PlanarPovm {
            outcomes: vec![
                PlanarOutcome { weight: 0.5, angle: alpha },
                PlanarOutcome { weight: 0.5, angle: alpha + PI },
            ],
            frame,
        }
    }

    pub fn q(&self, geom: &PlanarGeometry) -> f64 {
        geom.mean_sq * (1.0 + self.outcomes.iter().map(|o| geom.outcome_term(o.weight, o.angle)).sum::<f64>())
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let effects = self
            .outcomes
            .iter()
            .map(|o| (linalg::identity(2) + self.frame.direction(o.angle).dot_sigma()).scale(o.weight))
            .collect();
        Povm::from_matrices(effects)
    }
}

/// Output of [`reduce_to_plane`].
#[derive(Debug, Clone)]
pub struct PlaneReduction {
    /// Effects p_m(1 + q_m·σ) with q_m the in-plane projection of r_m. Same Q as the input.
    pub projected: Povm,
    /// The projected effects split spectrally into pure planar effects. Q is at least that of the input.
    pub planar: PlanarPovm,
    pub geometry: PlanarGeometry,
}

/// Projects every effect's Bloch vector onto the plane of r_a and r_b, then
/// splits the non-pure projected effects into pure ones along ±q̂_m with
/// eigenvalues p_m(1 ± ‖q_m‖).
pub fn reduce_to_plane(povm: &Povm, rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Result<PlaneReduction> {
    if povm.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: povm.dim() });
    }
    let geometry = PlanarGeometry::from_effective_states(rho_a, rho_b, 1.0)?;
    let frame = geometry.frame;
    let mut projected = Vec::with_capacity(povm.len());
    let mut outcomes = Vec::new();
    for e in povm.effects() {
        let p = 0.5 * linalg::trace(e.matrix()).re;
        if p <= 1e-15 {
            continue;
        }
        let r = bloch_of_matrix(e.matrix()).scale(0.5 / p);
        let (alpha, q) = frame.angle_of(r);
        let q_vec = frame.direction(alpha).scale(q);
        projected.push((linalg::identity(2) + q_vec.dot_sigma()).scale(p));
        if q >= 1.0 - 1e-12 {
            outcomes.push(PlanarOutcome { weight: p, angle: alpha });
        } else if q <= 1e-12 {
            outcomes.push(PlanarOutcome { weight: 0.5 * p, angle: 0.0 });
            outcomes.push(PlanarOutcome { weight: 0.5 * p, angle: PI });
        } else {
            outcomes.push(PlanarOutcome { weight: 0.5 * p * (1.0 + q), angle: alpha });
            outcomes.push(PlanarOutcome { weight: 0.5 * p * (1.0 - q), angle: alpha + PI });
        }
    }
    Ok(PlaneReduction {
        projected: Povm::from_matrices(projected)?,
        planar: PlanarPovm::new(outcomes, frame)?,
        geometry,
    })
}

/// Spectral split of a rank-two qubit effect into two rank-one effects.
/// A multiple of the identity is split along z.
pub fn split_effect(effect: &Effect) -> Result<(Effect, Effect)> {
    if effect.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, found: effect.dim() });
    }
    let p = 0.5 * linalg::trace(effect.matrix()).re;
    if p <= 1e-15 {
        return Err(Error::AlreadyPure);
    }
    let r = bloch_of_matrix(effect.matrix()).scale(0.5 / p);
    let norm = r.norm();
    if norm >= 1.0 - 1e-10 {
        return Err(Error::AlreadyPure);
    }
    let n = if norm < 1e-12 { BlochVector::new(0.0, 0.0, 1.0) } else { r.scale(1.0 / norm) };
    let half = |sign: f64| -> CMatrix { (linalg::identity(2) + n.scale(sign).dot_sigma()).scale(0.5) };
    let a = Effect::new(half(1.0).scale(p * (1.0 + norm)))?;
    let b = Effect::new(half(-1.0).scale(p * (1.0 - norm)))?;
    Ok((a, b))
}

/// f(α) = cos²α / (1 − r_b² cos²(α + γ)).
pub fn pvm_objective(alpha: f64, gamma: f64, r_b: f64) -> f64 {
    let c = alpha.cos();
    let cb = (alpha + gamma).cos();
    c * c / (1.0 - r_b * r_b * cb * cb)
}

/// Q of the projective measurement at angle α.
pub fn q_of_angle(alpha: f64, geom: &PlanarGeometry) -> Result<f64> {
    let cb = (alpha + geom.gamma).cos();
    let den = 1.0 - geom.r_b_norm * geom.r_b_norm * cb * cb;
    if den <= 1e-15 {
        return Err(Error::SingularDenominator);
    }
    let c = alpha.cos();
    Ok(geom.mean_sq * (1.0 + geom.delta_r * geom.delta_r * c * c / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalAngle {
    /// Maximizer of Q(α), in (−π/2, π/2].
    pub alpha: f64,
    /// The closed-form candidate.
    pub closed_form: f64,
    /// Grid scan plus golden-section refinement.
    pub oracle: f64,
    /// Closed form and oracle disagree by more than 1e-6 rad; `alpha` is then the better of the two.
    pub branch_mismatch: bool,
    /// Δr = 0: every angle scores the same and `alpha` is 0.
    pub degenerate: bool,
}

/// Closed-form maximizer of f(α):
/// α₀ = ± arccos[cos γ / √(1 − r_b²(2 − r_b²) sin²γ)] − γ, with the + branch
/// for 0 ≤ γ < π and the − branch for −π ≤ γ < 0, reduced mod π.
pub fn closed_form_alpha(gamma: f64, r_b: f64) -> f64 {
    let s = gamma.sin();
    let den = (1.0 - r_b * r_b * (2.0 - r_b * r_b) * s * s).max(0.0).sqrt();
    let ratio = if den > 0.0 { (gamma.cos() / den).clamp(-1.0, 1.0) } else { 0.0 };
    let sign = if (0.0..PI).contains(&gamma) { 1.0 } else { -1.0 };
    wrap_half_pi(sign * ratio.acos() - gamma)
}

/// Maximizer of f(α) by a uniform grid over (−π/2, π/2] followed by
/// golden-section refinement around the best grid point.
pub fn grid_alpha(gamma: f64, r_b: f64, points: usize) -> f64 {
    let f = |a: f64| pvm_objective(a, gamma, r_b);
    let h = PI / points as f64;
    let best = (1..=points)
        .map(|k| -FRAC_PI_2 + h * k as f64)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .expect("non-empty grid");
    wrap_half_pi(golden_max(f, best - h, best + h, 1e-13))
}

pub fn optimal_alpha(geom: &PlanarGeometry) -> Result<OptimalAngle> {
    if geom.r_b_norm >= 1.0 && geom.delta_r > 0.0 {
        return Err(Error::SingularDenominator);
    }
    if geom.delta_r < 1e-12 {
        return Ok(OptimalAngle {
            alpha: 0.0,
            closed_form: 0.0,
            oracle: 0.0,
            branch_mismatch: false,
            degenerate: true,
        });
    }
    let closed = closed_form_alpha(geom.gamma, geom.r_b_norm);
    let f = |a: f64| pvm_objective(a, geom.gamma, geom.r_b_norm);
    let oracle = grid_alpha(geom.gamma, geom.r_b_norm, GRID_POINTS);
    let mismatch = angle_distance(closed, oracle) > BRANCH_TOL;
    let alpha = if !mismatch || f(closed) >= f(oracle) { closed } else { oracle };
    Ok(OptimalAngle { alpha, closed_form: closed, oracle, branch_mismatch: mismatch, degenerate: false })
}

/// The optimal qubit measurement: a projective measurement along
/// ±(cos α₀ e_Δ − sin α₀ e_⊥).
pub fn optimal_pvm(prior: &Prior, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<EstimationReport> {
    check_qubits(rho1, rho2)?;
    if prior.is_point_mass() {
        return Err(Error::DegeneratePrior);
    }
    let geom = PlanarGeometry::from_problem(prior, rho1, rho2)?;
    let angle = optimal_alpha(&geom)?;
    if angle.degenerate || linalg::max_abs_diff(rho1.matrix(), rho2.matrix()) < 1e-12 {
        return Err(Error::DegenerateProblem("rho1 = rho2: every measurement scores the same".into()));
    }
    let povm = PlanarPovm::pvm(angle.alpha, geom.frame).to_povm()?;
    let score = q_functional(&povm, prior, rho1, rho2)?;
    let mut report = EstimationReport::new(SolutionKind::QubitPvm, povm, score);
    report.alpha0 = Some(angle.alpha);
    report.geometry = Some(geom);
    if angle.branch_mismatch {
        report.notes.push(format!(
            "closed-form angle {:.9} disagrees with grid oracle {:.9}",
            angle.closed_form, angle.oracle
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub best: PlanarPovm,
    pub q: f64,
    pub geometry: PlanarGeometry,
}

/// Multi-start local search over planar POVMs with `n_outcomes` ∈ {2, 3}
/// pure effects. Restart `k` uses stream `k` of `seed`.
///
/// Three-outcome candidates are parametrized by their angles alone; the
/// weights are the barycentric coordinates of the origin in the triangle of
/// unit directions, which satisfies Σ p_m = 1 and Σ p_m n_m = 0 exactly.
pub fn brute_force_planar(
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    n_outcomes: usize,
    n_starts: usize,
    seed: u64,
) -> Result<BruteForceResult> {
    if !(2..=3).contains(&n_outcomes) {
        return Err(Error::BadParameter(format!("n_outcomes must be 2 or 3, got {n_outcomes}")));
    }
    let geometry = PlanarGeometry::from_problem(prior, rho1, rho2)?;
    let geom = geometry;
    let score = move |angles: &[f64]| -> f64 {
        match planar_from_angles(angles, geom.frame) {
            Some(p) => p.q(&geom),
            None => f64::NEG_INFINITY,
        }
    };
    let (best_angles, best_q) = (0..n_starts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let start = random_feasible_angles(n_outcomes, &mut rng);
            local_ascent(&score, start)
        })
        .reduce_with(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one restart");
    let best = planar_from_angles(&best_angles, geom.frame).expect("best point is feasible");
    Ok(BruteForceResult { best, q: best_q, geometry })
}

/// Two angles are read as one projective measurement (second angle ignored);
/// three angles give the barycentric three-outcome POVM, `None` if the origin
/// is outside their triangle.
pub fn planar_from_angles(angles: &[f64], frame: PlaneFrame) -> Option<PlanarPovm> {
    match angles.len() {
        1 | 2 => Some(PlanarPovm::pvm(angles[0], frame)),
        3 => {
            let w = [
                (angles[1] - angles[2]).sin(),
                (angles[2] - angles[0]).sin(),
                (angles[0] - angles[1]).sin(),
            ];
            let total: f64 = w.iter().sum();
            if total.abs() < 1e-12 {
                return None;
            }
            let w = w.map(|x| x / total);
            if w.iter().any(|&x| x <= 1e-12) {
                return None;
            }
            let outcomes = angles
                .iter()
                .zip(w)
                .map(|(&angle, weight)| PlanarOutcome { weight, angle })
                .collect();
            Some(PlanarPovm { outcomes, frame })
        }
        _ => None,
    }
}

/// Three directions whose triangle contains the origin.
pub fn random_feasible_angles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    if n == 2 {
        return vec![rng.gen_range(-PI..PI), 0.0];
    }
    loop {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-PI..PI)).collect();
        if planar_from_angles(&a, PlaneFrame::XZ).is_some() {
            return a;
        }
    }
}

fn local_ascent(score: &impl Fn(&[f64]) -> f64, start: Vec<f64>) -> (Vec<f64>, f64) {
    const ITERATIONS: usize = 200;
    const FD_STEP: f64 = 1e-7;
    let n = if start.len() == 2 { 1 } else { start.len() };
    let mut x = start;
    let mut fx = score(&x);
    let mut step = 1e-2;
    for _ in 0..ITERATIONS {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += FD_STEP;
            lo[i] -= FD_STEP;
            grad[i] = (score(&hi) - score(&lo)) / (2.0 * FD_STEP);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() || gnorm < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, xi)| if i < n { xi + step * grad[i] / gnorm } else { *xi })
                .collect();
            let ft = score(&trial);
            if ft > fx {
                x = trial;
                fx = ft;
                step = (step * 1.5).min(0.2);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Representative of an angle mod π in (−π/2, π/2].
pub fn wrap_half_pi(a: f64) -> f64 {
    let mut r = a - PI * (a / PI).round();
    if r <= -FRAC_PI_2 {
        r += PI;
    }
    if r > FRAC_PI_2 {
        r -= PI;
    }
    r
}

/// Representative of an angle mod 2π in (−π, π].
pub fn wrap_pi(a: f64) -> f64 {
    let mut r = a - 2.0 * PI * (a / (2.0 * PI)).round();
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Distance between two angles taken mod π.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_half_pi(a - b).abs()
}

fn check_qubits(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<()> {
    for rho in [rho1, rho2] {
        if rho.dim() != 2 {
            return Err(Error::WrongDimension { expected: 2, found: rho.dim() });
        }
    }
    Ok(())
}
