use serde::Serialize;

use crate::bayes::MeasurementScore;
use crate::qubit::PlanarGeometry;
use crate::state::Povm;

/// Which reduction produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    QubitPvm,
    Commuting,
    TwoDimSubspace,
    PureWithNoise,
    Embedded,
    Unreduced,
}

/// An optimal (or candidate) measurement with its score and per-outcome
/// Bayes estimates g_m.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub kind: SolutionKind,
    pub povm: Povm,
    pub score: MeasurementScore,
    pub estimates: Vec<f64>,
    pub alpha0: Option<f64>,
    pub geometry: Option<PlanarGeometry>,
    /// Set when ρ1 = ρ2: every measurement scores the same.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl EstimationReport {
    pub fn new(kind: SolutionKind, povm: Povm, score: MeasurementScore) -> Self {
        let estimates = score.per_outcome.iter().map(|pm| pm.estimate).collect();
        EstimationReport {
            kind,
            povm,
            score,
            estimates,
            alpha0: None,
            geometry: None,
            degenerate: false,
            notes: Vec::new(),
        }
    }

    pub fn mean_variance(&self) -> f64 {
        self.score.mean_variance
    }
}
