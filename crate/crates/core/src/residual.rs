//! Generalized residual estimator and stopping rules.
//!
//! The residual h_{m+1,m} |e_m^H f_k(H_m) e_1| is the computable surrogate
//! for the true error. It tends to underestimate during the first
//! iterations, so the residual-based rule only fires after two consecutive
//! checked iterations pass the tolerance; bound-based rules fire on first
//! satisfaction because the bounds are guaranteed overestimates.

use crate::arnoldi::ArnoldiDecomposition;
use crate::bounds::BoundReport;

/// What the driver monitors to decide convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    Residual,
    BoundFe1,
    BoundFe2,
    /// Compare against a caller-supplied reference solution.
    Oracle,
}

impl std::str::FromStr for StopMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "residual" => Ok(Self::Residual),
            "bound_fe1" => Ok(Self::BoundFe1),
            "bound_fe2" => Ok(Self::BoundFe2),
            "oracle" => Ok(Self::Oracle),
            other => Err(format!("unknown stopping mode '{other}'")),
        }
    }
}

/// Tolerance, iteration cap and monitoring cadence for the driver.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    /// Absolute tolerance relative to the magnitude of the input vector.
    pub tolerance: f64,
    pub max_m: usize,
    pub mode: StopMode,
    /// Evaluate f_k(H_m) every this many iterations (it is the expensive
    /// part of monitoring).
    pub check_every: usize,
}

impl StoppingRule {
    pub fn new(tolerance: f64, max_m: usize, mode: StopMode) -> Self {
        Self {
            tolerance,
            max_m,
            mode,
            check_every: 1,
        }
    }

    pub fn with_check_every(mut self, every: usize) -> Self {
        self.check_every = every.max(1);
        self
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if !(self.tolerance >= 1e-15) {
            return Err(crate::error::Error::InvalidRequest(format!(
                "tolerance must be at least 1e-15, got {}",
                self.tolerance
            )));
        }
        if self.max_m == 0 {
            return Err(crate::error::Error::InvalidRequest(
                "max_m must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Generalized residual h_{m+1,m} |e_m^H f_k(H_m) e_1|; exactly zero at
/// breakdown. `fk_e1` is the projected solution the driver has already
/// computed for iteration m, so nothing is evaluated twice.
pub fn generalized_residual(dec: &ArnoldiDecomposition, fk_e1: &[f64]) -> f64 {
    let m = dec.m();
    assert!(
        m >= 1 && fk_e1.len() == m,
        "residual needs f_k(H_m)e_1 at the current m"
    );
    dec.subdiag(m) * fk_e1[m - 1].abs()
}

/// Applies the stopping rule to the diagnostics collected so far.
pub fn should_stop(rule: &StoppingRule, report: &BoundReport) -> bool {
    let n = report.records.len();
    if n == 0 {
        return false;
    }
    let last = &report.records[n - 1];
    match rule.mode {
        StopMode::Residual => {
            // Two consecutive checked iterations must pass: the residual
            // underestimates the error early on.
            if n < 2 {
                return false;
            }
            let prev = &report.records[n - 2];
            matches!((prev.residual, last.residual), (Some(a), Some(b))
                if a <= rule.tolerance && b <= rule.tolerance)
        }
        StopMode::BoundFe1 => matches!(last.bound_fe1, Some(b) if b <= rule.tolerance),
        StopMode::BoundFe2 => matches!(last.bound_fe2, Some(b) if b <= rule.tolerance),
        StopMode::Oracle => matches!(last.true_error, Some(e) if e <= rule.tolerance),
    }
}
