//! Numeric tolerances shared by every validation and reduction step.
//!
//! The defaults are read through [`numeric_policy`]; a process may override
//! them once at start-up with [`set_numeric_policy`].

use std::sync::RwLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Max entrywise |A - A†| accepted as Hermitian.
    pub hermitian: f64,
    /// |tr ρ - 1| accepted as unit trace.
    pub trace: f64,
    /// Smallest eigenvalue accepted as non-negative (negated).
    pub psd: f64,
    /// Entrywise |Σ E_m - 1| accepted as complete.
    pub povm_completeness: f64,
    /// Max entrywise |[ρ1, ρ2]| accepted as commuting.
    pub commutator: f64,
    /// Outcome probability below which an outcome is treated as never occurring.
    pub zero_probability: f64,
    /// Eigenvalue threshold for counting the rank of a joint support.
    pub support_rank: f64,
    /// Tolerance for grouping degenerate eigenvalues.
    pub degeneracy: f64,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        hermitian: 1e-10,
        trace: 1e-10,
        psd: 1e-10,
        povm_completeness: 1e-9,
        commutator: 1e-9,
        zero_probability: 1e-14,
        support_rank: 1e-9,
        degeneracy: 1e-9,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static POLICY: RwLock<NumericPolicy> = RwLock::new(NumericPolicy::DEFAULT);

pub fn numeric_policy() -> NumericPolicy {
    *POLICY.read().unwrap_or_else(|e| e.into_inner())
}

pub fn set_numeric_policy(policy: NumericPolicy) {
    *POLICY.write().unwrap_or_else(|e| e.into_inner()) = policy;
}
