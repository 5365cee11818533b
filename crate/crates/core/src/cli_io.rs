//! File formats and the work behind each command-line subcommand.
//!
//! Matrices are `{"dim": d, "re": [[..]], "im": [[..]]}` in row-major order,
//! with `im` optional. A problem file is
//!
//! ```json
//! {"rho1": <matrix>, "rho2": <matrix>, "prior": {"kind": "uniform"}, "options": {}}
//! ```
//!
//! and a POVM file is `{"effects": [<matrix>, ...]}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::OperatorBasis;
use crate::bayes::{q_functional, Prior, PriorSpec};
use crate::error::{Error, Result};
use crate::highdim::{
    embed_and_check, joint_support_rank, pure_plus_noise_vector, solve_commuting, solve_pure_plus_noise,
    solve_two_dim_support, ReductionOutcome,
};
use crate::linalg::{self, c, CMatrix};
use crate::policy::numeric_policy;
use crate::qubit::{closed_form_alpha, grid_alpha, optimal_alpha, optimal_pvm, q_of_angle, PlanarGeometry};
use crate::report::{EstimationReport, SolutionKind};
use crate::simulator::{
    simulate_trials, solve_decay_estimation, solve_decay_estimation_with_prior, DecoherenceModel, SimulationSummary,
    TrialRecord,
};
use crate::state::{DensityMatrix, Povm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonMatrix {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl JsonMatrix {
    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<()> {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::WrongShape(format!("\"{part}\" is not a {d}x{d} array")));
            }
            Ok(())
        };
        check(&self.re, "re")?;
        if let Some(im) = &self.im {
            check(im, "im")?;
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            c(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }

    pub fn from_cmatrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let re = (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect();
        let has_im = im.iter().flatten().any(|x| *x != 0.0);
        JsonMatrix { dim: d, re, im: has_im.then_some(im) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Skip the exact reductions and go straight to the generalized Bloch embedding.
    #[serde(default)]
    pub force_embedding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub rho1: JsonMatrix,
    pub rho2: JsonMatrix,
    #[serde(default = "uniform_spec")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub options: SolveOptions,
}

fn uniform_spec() -> PriorSpec {
    PriorSpec::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub effects: Vec<JsonMatrix>,
}

impl PovmFile {
    pub fn to_povm(&self) -> Result<Povm> {
        let ms = self.effects.iter().map(JsonMatrix::to_cmatrix).collect::<Result<Vec<_>>>()?;
        Povm::from_matrices(ms)
    }
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub prior: Prior,
    pub options: SolveOptions,
}

impl Problem {
    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        let rho1 = DensityMatrix::new(file.rho1.to_cmatrix()?)?;
        let rho2 = DensityMatrix::new(file.rho2.to_cmatrix()?)?;
        if rho1.dim() != rho2.dim() {
            return Err(Error::DimensionMismatch { left: rho1.dim(), right: rho2.dim() });
        }
        Ok(Problem { rho1, rho2, prior: Prior::from_spec(&file.prior)?, options: file.options.clone() })
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            rho1: JsonMatrix::from_cmatrix(self.rho1.matrix()),
            rho2: JsonMatrix::from_cmatrix(self.rho2.matrix()),
            prior: self.prior.spec().unwrap_or(PriorSpec::Uniform),
            options: self.options.clone(),
        }
    }
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Problem::from_file(&file)
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    parse_problem(&read_text(path)?)
}

pub fn load_povm(path: &Path) -> Result<Povm> {
    let file: PovmFile = serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_povm()
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
pub fn parse_prior_arg(arg: &str) -> Result<Prior> {
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_text(Path::new(arg))? };
    let spec: PriorSpec = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    Prior::from_spec(&spec)
}

/// Inline JSON matrix or a file holding one.
pub fn parse_matrix_arg(arg: &str) -> Result<CMatrix> {
    let text = if arg.trim_start().starts_with('{') { arg.to_string() } else { read_text(Path::new(arg))? };
    let m: JsonMatrix = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    m.to_cmatrix()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// JSON body emitted by `solve`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub kind: SolutionKind,
    pub dim: usize,
    pub effects: Vec<JsonMatrix>,
    pub estimates: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub q_value: f64,
    pub mean_variance: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
    pub alpha0: Option<f64>,
    pub geometry: Option<PlanarGeometry>,
    pub positivity_ok: bool,
    pub notes: Vec<String>,
}

impl SolveOutput {
    pub fn from_report(report: &EstimationReport, prior: &Prior) -> Self {
        SolveOutput {
            kind: report.kind,
            dim: report.povm.dim(),
            effects: report.povm.effects().iter().map(|e| JsonMatrix::from_cmatrix(e.matrix())).collect(),
            estimates: report.estimates.clone(),
            probabilities: report.score.per_outcome.iter().map(|pm| pm.prob).collect(),
            q_value: report.score.q_value,
            mean_variance: report.score.mean_variance,
            prior_mean: prior.mean,
            prior_variance: prior.variance(),
            alpha0: report.alpha0,
            geometry: report.geometry,
            positivity_ok: true,
            notes: report.notes.clone(),
        }
    }
}

/// Chooses the reduction that applies and returns its measurement.
///
/// Identical states fail with `DegenerateProblem`; a failed positivity check
/// in the embedding fails with `UnsolvedCase`.
pub fn cmd_solve(problem: &Problem) -> Result<EstimationReport> {
    let Problem { rho1, rho2, prior, options } = problem;
    if linalg::max_abs_diff(rho1.matrix(), rho2.matrix()) < 1e-12 {
        return Err(Error::DegenerateProblem("rho1 = rho2: every measurement scores the same".into()));
    }
    if prior.is_point_mass() {
        return Err(Error::DegeneratePrior);
    }
    let d = rho1.dim();
    if options.force_embedding {
        return accept(embed_and_check(prior, rho1, rho2, &OperatorBasis::default_for(d))?);
    }
    if d == 2 {
        return optimal_pvm(prior, rho1, rho2);
    }
    let commutator = linalg::max_abs(&linalg::commutator(rho1.matrix(), rho2.matrix()));
    let outcome = if commutator < numeric_policy().commutator {
        solve_commuting(prior, rho1, rho2)?
    } else if joint_support_rank(rho1, rho2) <= 2 {
        solve_two_dim_support(prior, rho1, rho2)?
    } else if let Some(psi) = pure_plus_noise_vector(rho1, rho2) {
        solve_pure_plus_noise(prior, &psi, d)?
    } else {
        embed_and_check(prior, rho1, rho2, &OperatorBasis::gell_mann(d))?
    };
    accept(outcome)
}

fn accept(outcome: ReductionOutcome) -> Result<EstimationReport> {
    if !outcome.positivity_ok {
        return Err(Error::UnsolvedCase(outcome.certificate));
    }
    if outcome.degenerate {
        return Err(Error::DegenerateProblem("rho1 = rho2: every measurement scores the same".into()));
    }
    Ok(outcome.to_report().expect("accepted outcome has a measurement"))
}

pub fn solve_json(problem: &Problem) -> Result<String> {
    let report = cmd_solve(problem)?;
    to_json(&SolveOutput::from_report(&report, &problem.prior))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Shortest round-trippable form of a double, in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const SUMMARY_HEADER: &str = "seed,n_trials,empirical_mse,analytic_mean_variance,std_error";

pub fn summary_csv(summary: &SimulationSummary) -> String {
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{}\n",
        summary.seed,
        summary.n_trials,
        fmt_f64(summary.empirical_mse),
        fmt_f64(summary.analytic_mean_variance),
        fmt_f64(summary.std_error)
    )
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,true_lambda,outcome_index,estimate,squared_error\n");
    for (k, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{},{}",
            fmt_f64(r.true_lambda),
            r.outcome_index,
            fmt_f64(r.estimate),
            fmt_f64(r.squared_error)
        );
    }
    out
}

/// Rows of α₀(γ) for γ_k = −π + 2πk/n, k = 1..n, with Q_max at the given Δr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub alpha0: f64,
    pub q_max: f64,
    pub closed_form: f64,
    pub oracle: f64,
}

pub fn sweep_gamma(r_b: f64, n_points: usize, delta_r: f64) -> Result<Vec<SweepRow>> {
    if !(0.0..1.0).contains(&r_b) {
        return Err(Error::BadParameter(format!("r_b = {r_b} is outside [0, 1)")));
    }
    if n_points == 0 {
        return Err(Error::BadParameter("need at least one sweep point".into()));
    }
    if !(delta_r > 0.0) {
        return Err(Error::BadParameter(format!("delta_r = {delta_r} must be positive")));
    }
    (1..=n_points)
        .map(|k| {
            let gamma = -PI + 2.0 * PI * k as f64 / n_points as f64;
            let geom = PlanarGeometry::new(delta_r, r_b, gamma);
            let angle = optimal_alpha(&geom)?;
            Ok(SweepRow {
                gamma,
                alpha0: angle.alpha,
                q_max: q_of_angle(angle.alpha, &geom)?,
                closed_form: closed_form_alpha(geom.gamma, r_b),
                oracle: grid_alpha(geom.gamma, r_b, 2000),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("gamma,alpha0,q_max,closed_form,oracle\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.gamma),
            fmt_f64(r.alpha0),
            fmt_f64(r.q_max),
            fmt_f64(r.closed_form),
            fmt_f64(r.oracle)
        );
    }
    out
}

/// Which measurement `simulate` runs.
#[derive(Debug, Clone)]
pub enum PovmChoice {
    Optimal,
    Given(Povm),
}

pub struct SimulateOutput {
    pub summary: SimulationSummary,
    pub records: Vec<TrialRecord>,
}

pub fn cmd_simulate(problem: &Problem, choice: PovmChoice, n_trials: usize, seed: u64) -> Result<SimulateOutput> {
    let povm = match choice {
        PovmChoice::Optimal => cmd_solve(problem)?.povm,
        PovmChoice::Given(p) => p,
    };
    let Problem { rho1, rho2, prior, .. } = problem;
    let records = simulate_trials(&povm, prior, rho1, rho2, n_trials, seed)?;
    let analytic = q_functional(&povm, prior, rho1, rho2)?.mean_variance;
    Ok(SimulateOutput { summary: SimulationSummary::from_records(&records, analytic, seed), records })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecoherenceOutput {
    pub s: f64,
    pub t: f64,
    pub b_max: f64,
    pub prior_mean: f64,
    pub prior_second_moment: f64,
    pub solution: SolveOutput,
    /// −ln(g_m)/t for each outcome; a plug-in transform, not a Bayes estimate of the rate.
    pub plug_in_rates: Vec<Option<f64>>,
    pub simulation: SimulationSummary,
}

pub fn cmd_decoherence(
    model: &DecoherenceModel,
    prior_override: Option<Prior>,
    n_trials: usize,
    seed: u64,
) -> Result<DecoherenceOutput> {
    let est = match prior_override {
        Some(p) => solve_decay_estimation_with_prior(model, p)?,
        None => solve_decay_estimation(model)?,
    };
    let records = simulate_trials(&est.report.povm, &est.prior, &est.rho1, &est.rho2, n_trials, seed)?;
    let simulation = SimulationSummary::from_records(&records, est.report.score.mean_variance, seed);
    Ok(DecoherenceOutput {
        s: model.s,
        t: model.t,
        b_max: model.b_max,
        prior_mean: est.prior.mean,
        prior_second_moment: est.prior.second_moment,
        solution: SolveOutput::from_report(&est.report, &est.prior),
        plug_in_rates: est.plug_in_rates,
        simulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORTHOGONAL: &str = r#"{
        "rho1": {"dim": 2, "re": [[1, 0], [0, 0]]},
        "rho2": {"dim": 2, "re": [[0, 0], [0, 1]], "im": [[0, 0], [0, 0]]},
        "prior": {"kind": "uniform"}
    }"#;

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.5));
        let j = JsonMatrix::from_cmatrix(&m);
        assert_eq!(j.to_cmatrix().unwrap(), m);
        let text = serde_json::to_string(&j).unwrap();
        let back: JsonMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
        let bad = JsonMatrix { dim: 2, re: vec![vec![1.0]], im: None };
        assert!(matches!(bad.to_cmatrix(), Err(Error::WrongShape(_))));
    }

    #[test]
    fn solve_orthogonal_pure() {
        let p = parse_problem(ORTHOGONAL).unwrap();
        let rep = cmd_solve(&p).unwrap();
        assert!((rep.mean_variance() - 1.0 / 18.0).abs() < 1e-14);
        let json = solve_json(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!((v["mean_variance"].as_f64().unwrap() - 1.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn solve_identical_is_degenerate() {
        let text = r#"{"rho1": {"dim": 2, "re": [[0.6, 0], [0, 0.4]]}, "rho2": {"dim": 2, "re": [[0.6, 0], [0, 0.4]]}}"#;
        let err = cmd_solve(&parse_problem(text).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DegenerateProblem(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn solve_dispatches_commuting_qutrit() {
        let text = r#"{"rho1": {"dim": 3, "re": [[0.5,0,0],[0,0.3,0],[0,0,0.2]]},
                      "rho2": {"dim": 3, "re": [[0.2,0,0],[0,0.3,0],[0,0,0.5]]}}"#;
        let rep = cmd_solve(&parse_problem(text).unwrap()).unwrap();
        assert_eq!(rep.kind, SolutionKind::Commuting);
        assert!(rep.povm.is_projective(1e-12));
        assert_eq!(rep.povm.len(), 3);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_problem("{"), Err(Error::Parse(_))));
        let bad_trace = r#"{"rho1": {"dim": 2, "re": [[1, 0], [0, 1]]}, "rho2": {"dim": 2, "re": [[1, 0], [0, 0]]}}"#;
        assert!(matches!(parse_problem(bad_trace), Err(Error::NotUnitTrace { .. })));
        assert!(parse_prior_arg(r#"{"kind": "trunc_reciprocal", "t_bmax": 0.7}"#).is_ok());
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep_gamma(0.8, 400, 1.0 / 3.0).unwrap();
        let at = |g: f64| rows.iter().find(|r| (r.gamma - g).abs() < 1e-12).unwrap();
        assert!(at(PI / 2.0).alpha0.abs() < 1e-9);
        assert!(at(-PI / 2.0).alpha0.abs() < 1e-9);
        assert!(sweep_gamma(0.0, 16, 0.3).unwrap().iter().all(|r| r.alpha0.abs() < 1e-9));
        assert!(matches!(sweep_gamma(1.0, 10, 0.3), Err(Error::BadParameter(_))));
        let csv = sweep_csv(&rows[..2]);
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn summary_csv_format() {
        let s = SimulationSummary {
            seed: 4,
            n_trials: 10,
            empirical_mse: 0.1,
            analytic_mean_variance: 1.0 / 18.0,
            std_error: 0.01,
            flagged: false,
        };
        let csv = summary_csv(&s);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "4");
        assert_eq!(row[3].parse::<f64>().unwrap(), 1.0 / 18.0);
    }
}
