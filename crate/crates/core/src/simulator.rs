//! Monte Carlo checks of the analytic mean variance, the decay-rate
//! estimation scenario, and single-copy entanglement verification.
//!
//! Trial `k` of a run with seed `s` draws everything from stream `k` of `s`,
//! so results do not depend on how trials are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bayes::{prior_from_decoherence, q_functional, Prior};
use crate::error::{Error, Result};
use crate::highdim::solve_pure_plus_noise;
use crate::linalg::{self, CMatrix, CVector};
use crate::qubit::optimal_pvm;
use crate::report::EstimationReport;
use crate::sampling::stream_rng;
use crate::state::{DensityMatrix, Povm};

const PPT_BISECTION_TOL: f64 = 1e-9;

/// Amplitude damping towards diag(s, 1 − s) at rate B in the rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceModel {
    pub s: f64,
    pub t: f64,
    pub b_max: f64,
    pub rho0: DensityMatrix,
    /// Hamiltonian frequency. Drops out in the rotating frame.
    pub omega: f64,
}

impl DecoherenceModel {
    pub fn new(s: f64, t: f64, b_max: f64, rho0: DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::BadParameter(format!("s = {s} is outside [0, 1]")));
        }
        if !(t > 0.0) {
            return Err(Error::NonPositiveParameter { name: "t", value: t });
        }
        if !(b_max > 0.0) {
            return Err(Error::NonPositiveParameter { name: "b_max", value: b_max });
        }
        if rho0.dim() != 2 {
            return Err(Error::WrongDimension { expected: 2, found: rho0.dim() });
        }
        Ok(DecoherenceModel { s, t, b_max, rho0, omega: 0.0 })
    }

    pub fn equilibrium(&self) -> DensityMatrix {
        DensityMatrix::diagonal(&[self.s, 1.0 - self.s]).expect("s is in [0, 1]")
    }

    pub fn t_bmax(&self) -> f64 {
        self.t * self.b_max
    }
}

/// e^{−bt} ρ(0) + (1 − e^{−bt}) diag(s, 1 − s).
pub fn decoherence_state(model: &DecoherenceModel, b: f64) -> Result<DensityMatrix> {
    if !(0.0..=model.b_max).contains(&b) {
        return Err(Error::RateOutOfRange { rate: b, max: model.b_max });
    }
    DensityMatrix::mixture((-b * model.t).exp(), &model.rho0, &model.equilibrium())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub true_lambda: f64,
    pub outcome_index: usize,
    pub estimate: f64,
    pub squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub n_trials: usize,
    pub empirical_mse: f64,
    pub analytic_mean_variance: f64,
    pub std_error: f64,
    /// |empirical − analytic| exceeds four standard errors.
    pub flagged: bool,
}

impl SimulationSummary {
    pub fn from_records(records: &[TrialRecord], analytic_mean_variance: f64, seed: u64) -> Self {
        let (empirical_mse, std_error) = mean_and_std_error(records, |r| r.squared_error);
        SimulationSummary {
            seed,
            n_trials: records.len(),
            empirical_mse,
            analytic_mean_variance,
            std_error,
            flagged: (empirical_mse - analytic_mean_variance).abs() > 4.0 * std_error,
        }
    }

    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.empirical_mse - self.analytic_mean_variance) / self.std_error
        } else if self.empirical_mse == self.analytic_mean_variance {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Mean of `f` over the records and its standard error.
pub fn mean_and_std_error(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> f64) -> (f64, f64) {
    let n = records.len() as f64;
    let xs: Vec<f64> = records.iter().map(&f).collect();
    let mean = linalg::pairwise_sum(&xs) / n;
    if records.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = linalg::pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Draws λ from the prior, an outcome from tr[E_m ρ_λ], and records the Bayes
/// estimate g_m for each trial.
pub fn simulate_trials(
    povm: &Povm,
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    if n_trials == 0 {
        return Err(Error::BadParameter("n_trials must be at least 1".into()));
    }
    let score = q_functional(povm, prior, rho1, rho2)?;
    let estimates: Vec<f64> = score.per_outcome.iter().map(|pm| pm.estimate).collect();
    let p1 = povm.probabilities(rho1);
    let p2 = povm.probabilities(rho2);
    let records = (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let lambda = prior.sample(&mut rng);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut outcome = p1.len() - 1;
            for m in 0..p1.len() {
                acc += (lambda * p1[m] + (1.0 - lambda) * p2[m]).max(0.0);
                if u < acc {
                    outcome = m;
                    break;
                }
            }
            let estimate = estimates[outcome];
            TrialRecord {
                true_lambda: lambda,
                outcome_index: outcome,
                estimate,
                squared_error: (lambda - estimate) * (lambda - estimate),
            }
        })
        .collect();
    Ok(records)
}

pub fn run_simulation(
    povm: &Povm,
    prior: &Prior,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    n_trials: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    let records = simulate_trials(povm, prior, rho1, rho2, n_trials, seed)?;
    let analytic = q_functional(povm, prior, rho1, rho2)?.mean_variance;
    Ok(SimulationSummary::from_records(&records, analytic, seed))
}

/// The optimal measurement for the decay scenario together with the
/// plug-in rate values −ln(g_m)/t. These rate values are a transform of the
/// λ estimates, not Bayes estimates of the rate.
#[derive(Debug, Clone)]
pub struct DecayEstimate {
    pub report: EstimationReport,
    pub prior: Prior,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub plug_in_rates: Vec<Option<f64>>,
}

pub fn solve_decay_estimation(model: &DecoherenceModel) -> Result<DecayEstimate> {
    let prior = prior_from_decoherence(model.t_bmax())?;
    solve_decay_estimation_with_prior(model, prior)
}

/// Same pipeline with an arbitrary prior over λ in place of the one induced
/// by a uniform rate.
pub fn solve_decay_estimation_with_prior(model: &DecoherenceModel, prior: Prior) -> Result<DecayEstimate> {
    let rho1 = model.rho0.clone();
    let rho2 = model.equilibrium();
    let report = optimal_pvm(&prior, &rho1, &rho2)?;
    let plug_in_rates = report
        .estimates
        .iter()
        .map(|&g| if g > 0.0 { Some(-g.ln() / model.t) } else { None })
        .collect();
    Ok(DecayEstimate { report, prior, rho1, rho2, plug_in_rates })
}

/// ρ_λ = λ|ψ⟩⟨ψ| + (1 − λ) 1/4.
pub fn noisy_two_qubit_state(psi: &CVector, lambda: f64) -> Result<DensityMatrix> {
    if psi.len() != 4 {
        return Err(Error::WrongShape(format!("two-qubit state needs 4 amplitudes, got {}", psi.len())));
    }
    DensityMatrix::mixture(lambda, &DensityMatrix::pure(psi)?, &DensityMatrix::maximally_mixed(4))
}

/// Smallest eigenvalue of the partial transpose; negative means entangled.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::WrongShape(format!("PPT test needs a 4x4 state, got {0}x{0}", rho.dim())));
    }
    Ok(linalg::min_eigenvalue(&linalg::partial_transpose_second(rho.matrix(), 2, 2)))
}

pub fn is_entangled(rho: &DensityMatrix) -> Result<bool> {
    Ok(ppt_min_eigenvalue(rho)? < -1e-12)
}

/// Smallest λ at which λ|ψ⟩⟨ψ| + (1 − λ)/4 violates PPT, by bisection.
/// `None` if even λ = 1 is PPT.
pub fn ppt_threshold(psi: &CVector) -> Result<Option<f64>> {
    let f = |l: f64| -> Result<f64> { ppt_min_eigenvalue(&noisy_two_qubit_state(psi, l)?) };
    if f(1.0)? >= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > PPT_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// W = |00⟩⟨00| + |01⟩⟨10| + |10⟩⟨01| + |11⟩⟨11|.
pub fn swap_witness() -> CMatrix {
    linalg::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementRow {
    pub true_lambda: f64,
    pub estimate: f64,
    pub entangled_at_estimate: bool,
    pub entangled_at_true: bool,
    pub witness_at_estimate: f64,
    pub witness_at_true: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntanglementDemo {
    pub rows: Vec<EntanglementRow>,
    pub ppt_threshold: Option<f64>,
    pub summary: SimulationSummary,
}

/// Estimates λ from one copy with the Lüders measurement, then applies the
/// PPT criterion and the witness to ρ(λ_est) and to ρ(λ_true).
pub fn entanglement_demo(psi: &CVector, prior: &Prior, n_trials: usize, seed: u64) -> Result<EntanglementDemo> {
    if psi.len() != 4 {
        return Err(Error::WrongShape(format!("two-qubit state needs 4 amplitudes, got {}", psi.len())));
    }
    let psi = psi.unscale(psi.norm());
    let solved = solve_pure_plus_noise(prior, &psi, 4)?;
    let povm = solved.lifted_povm.expect("the Lüders measurement is always valid");
    let rho1 = DensityMatrix::pure(&psi)?;
    let rho2 = DensityMatrix::maximally_mixed(4);
    let records = simulate_trials(&povm, prior, &rho1, &rho2, n_trials, seed)?;
    let analytic = q_functional(&povm, prior, &rho1, &rho2)?.mean_variance;
    let w = swap_witness();
    let rows = records
        .iter()
        .map(|r| -> Result<EntanglementRow> {
            let at_est = noisy_two_qubit_state(&psi, r.estimate)?;
            let at_true = noisy_two_qubit_state(&psi, r.true_lambda)?;
            Ok(EntanglementRow {
                true_lambda: r.true_lambda,
                estimate: r.estimate,
                entangled_at_estimate: is_entangled(&at_est)?,
                entangled_at_true: is_entangled(&at_true)?,
                witness_at_estimate: at_est.expectation(&w),
                witness_at_true: at_true.expectation(&w),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntanglementDemo {
        rows,
        ppt_threshold: ppt_threshold(&psi)?,
        summary: SimulationSummary::from_records(&records, analytic, seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, max_abs_diff};
    use crate::state::real_vector;

    fn ket0() -> DensityMatrix {
        DensityMatrix::diagonal(&[1.0, 0.0]).unwrap()
    }

    fn bell() -> CVector {
        real_vector(&[std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2])
    }

    #[test]
    fn decoherence_state_examples() {
        let m = DecoherenceModel::new(0.5, 1.0, 10.0, ket0()).unwrap();
        assert!(max_abs_diff(decoherence_state(&m, 0.0).unwrap().matrix(), &diag(&[1.0, 0.0])) < 1e-15);
        let half = decoherence_state(&m, std::f64::consts::LN_2).unwrap();
        assert!(max_abs_diff(half.matrix(), &diag(&[0.75, 0.25])) < 1e-15);
        let m = DecoherenceModel::new(0.3, 1.0, 1e3, ket0()).unwrap();
        assert!(max_abs_diff(decoherence_state(&m, 1e3).unwrap().matrix(), &diag(&[0.3, 0.7])) < 1e-15);
        assert!(matches!(decoherence_state(&m, 2e3), Err(Error::RateOutOfRange { .. })));
        assert!(DecoherenceModel::new(0.5, 0.0, 1.0, ket0()).is_err());
    }

    #[test]
    fn trivial_povm_mse_is_prior_variance() {
        let r1 = ket0();
        let r2 = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        let s = run_simulation(&Povm::trivial(2), &Prior::uniform(), &r1, &r2, 20_000, 3).unwrap();
        assert!((s.analytic_mean_variance - 1.0 / 12.0).abs() < 1e-15);
        assert!(!s.flagged, "{s:?}");
    }

    #[test]
    fn same_seed_same_records() {
        let r1 = ket0();
        let r2 = DensityMatrix::maximally_mixed(2);
        let p = Povm::from_basis(&linalg::identity(2)).unwrap();
        let a = simulate_trials(&p, &Prior::uniform(), &r1, &r2, 500, 9).unwrap();
        let b = simulate_trials(&p, &Prior::uniform(), &r1, &r2, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(simulate_trials(&p, &Prior::uniform(), &r1, &r2, 0, 9).is_err());
    }

    #[test]
    fn decay_with_uniform_override_matches_known_estimates() {
        let m = DecoherenceModel::new(0.0, 1.0, 1.0, ket0()).unwrap();
        let est = solve_decay_estimation_with_prior(&m, Prior::uniform()).unwrap();
        assert!((est.report.estimates[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((est.report.estimates[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((est.plug_in_rates[0].unwrap() - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn decay_prior_mean_at_ln2() {
        let m = DecoherenceModel::new(0.5, 1.0, std::f64::consts::LN_2, ket0()).unwrap();
        let est = solve_decay_estimation(&m).unwrap();
        assert!((est.prior.mean - 1.0 / (2.0 * std::f64::consts::LN_2)).abs() < 1e-14);
        let eq = DecoherenceModel::new(1.0, 1.0, 1.0, ket0()).unwrap();
        assert!(matches!(solve_decay_estimation(&eq), Err(Error::DegenerateProblem(_))));
    }

    #[test]
    fn ppt_threshold_of_bell_state() {
        let t = ppt_threshold(&bell()).unwrap().unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-9);
        let product = real_vector(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(ppt_threshold(&product).unwrap(), None);
        assert!(is_entangled(&noisy_two_qubit_state(&bell(), 1.0).unwrap()).unwrap());
        let mixed = noisy_two_qubit_state(&bell(), 0.0).unwrap();
        assert!(!is_entangled(&mixed).unwrap());
        assert!(mixed.expectation(&swap_witness()) >= 0.0);
    }

    #[test]
    fn singlet_witness_turns_negative_past_threshold() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = CVector::from_vec(vec![c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]);
        let w = swap_witness();
        assert!(noisy_two_qubit_state(&singlet, 0.4).unwrap().expectation(&w) < 0.0);
        assert!(noisy_two_qubit_state(&singlet, 0.3).unwrap().expectation(&w) > 0.0);
    }

    #[test]
    fn entanglement_demo_runs() {
        let demo = entanglement_demo(&bell(), &Prior::uniform(), 200, 1).unwrap();
        assert_eq!(demo.rows.len(), 200);
        assert!(entanglement_demo(&real_vector(&[1.0, 0.0]), &Prior::uniform(), 10, 1).is_err());
    }
}
