//! Selection and reuse policies for the pole parameter tau = h/delta.
//!
//! The method is robust over a wide window of tau around the optimum
//! (m+k)/cos(theta), which is what lets an integrator keep one factorization
//! of I - delta*L across many steps: changing the step size only moves tau,
//! and as long as tau stays inside the window the factorization is kept.

use crate::bounds::{capacity_coefficient, ckm_prime};
use crate::error::{Error, Result};
use crate::operators::SectorialOperator;
use crate::phifun::{phi_oracle_dense, rd_arnoldi_phi_with, DriverOptions, PhiRequest};
use crate::residual::{StopMode, StoppingRule};

const PI: f64 = std::f64::consts::PI;

/// Admissible tau interval around the optimum.
#[derive(Debug, Clone, Copy)]
pub struct TauWindow {
    pub lo: f64,
    pub hi: f64,
    /// Iteration count n whose level equation produced the lo endpoint.
    pub lo_n: usize,
    /// Iteration count n whose level equation produced the hi endpoint.
    pub hi_n: usize,
    /// Set when the defining equation could not be bracketed; lo = hi =
    /// tau_opt in that case and callers should fall back to the indicative
    /// [tau_opt/2, 2 tau_opt] default.
    pub bracket_failed: bool,
}

/// Everything the factorization-reuse decision needs.
#[derive(Debug, Clone)]
pub struct TauPolicy {
    pub theta: f64,
    pub k: usize,
    /// Iterations the calibration run needed on the coarse operator.
    pub target_m: usize,
    pub tau_opt: f64,
    pub window: TauWindow,
}

/// tau minimizing the coarse a-posteriori bound at fixed m: (m+k)/cos(theta).
pub fn tau_optimal(m: usize, k: usize, theta: f64) -> f64 {
    (m + k) as f64 / theta.cos()
}

/// Revised optimum accounting for the delta-dependence of the subdiagonal
/// decay: (m+2k)/(2 cos(theta)). The best tau lives between this and
/// `tau_optimal`, closer to this end for large h.
pub fn tau_optimal_revised(m: usize, k: usize, theta: f64) -> f64 {
    (m + 2 * k) as f64 / (2.0 * theta.cos())
}

/// Near-optimal tau when F(L) also sits in a disk of radius R:
/// sqrt(2 h R (m+k+1)).
pub fn tau_bounded_sector(m: usize, k: usize, h: f64, r: f64) -> f64 {
    (2.0 * h * r * (m + k + 1) as f64).sqrt()
}

// Log of the coarse bound as a function of the iteration count n and tau,
// with the subdiagonal product approximated per factor by the logarithmic
// capacity of G_theta.
fn ln_bound_fe2_capacity(n: usize, k: usize, tau: f64, theta: f64) -> f64 {
    let cos = theta.cos();
    let n1 = (n + k + 1) as f64;
    tau * cos - n1 - (n + k) as f64 * tau.ln()
        + n1 * ((2.0 * n1).ln() - (2.0 * cos - 1.0).ln())
        + ckm_prime(k, n, theta).ln()
        + n as f64 * capacity_coefficient(theta).ln()
}

/// Interval I_{m,m+extra} of tau values for which the (coarse) bound reaches
/// the tau-optimal level in at most `extra` additional iterations.
///
/// Each candidate count n = m+1 .. m+extra contributes the two roots of the
/// level equation B(n, tau) = B(m, tau_opt), found by bisection on either
/// side of tau_opt; the window is the union over n, because "at most n
/// iterations" admits finishing earlier. (For small tau an extra iteration
/// can actually raise the coarse bound, so the n = m+extra roots alone are
/// not monotone in extra.) The endpoints record which n produced them. A
/// missing bracket yields the degenerate window with `bracket_failed` set.
pub fn tau_window(m: usize, k: usize, theta: f64, extra: usize) -> Result<TauWindow> {
    if theta >= PI / 3.0 {
        return Err(Error::ThetaOutOfRange(theta, PI / 3.0));
    }
    if m < 1 || extra == 0 {
        return Err(Error::InvalidRequest(
            "tau window needs m >= 1 and extra >= 1".into(),
        ));
    }
    let tau_opt = tau_optimal(m, k, theta);
    let target = ln_bound_fe2_capacity(m, k, tau_opt, theta);

    let mut window: Option<TauWindow> = None;
    for n in m + 1..=m + extra {
        let f = |tau: f64| ln_bound_fe2_capacity(n, k, tau, theta) - target;
        if !(f(tau_opt) < 0.0) {
            continue;
        }
        let bisect = |mut a: f64, mut b: f64| -> Option<f64> {
            if f(a) * f(b) > 0.0 {
                return None;
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid) * f(a) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            Some(0.5 * (a + b))
        };
        let (lo, hi) = match (
            bisect(tau_opt / 10.0, tau_opt),
            bisect(tau_opt, 10.0 * tau_opt),
        ) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => continue,
        };
        window = Some(match window {
            None => TauWindow {
                lo,
                hi,
                lo_n: n,
                hi_n: n,
                bracket_failed: false,
            },
            Some(mut w) => {
                if lo < w.lo {
                    w.lo = lo;
                    w.lo_n = n;
                }
                if hi > w.hi {
                    w.hi = hi;
                    w.hi_n = n;
                }
                w
            }
        });
    }
    Ok(window.unwrap_or(TauWindow {
        lo: tau_opt,
        hi: tau_opt,
        lo_n: m,
        hi_n: m,
        bracket_failed: true,
    }))
}

/// Coarse-grid calibration: exploit mesh independence by running the full
/// iteration on a small operator, scanning m = 2, 3, ... with the matching
/// tau = (m+k)/cos(theta) until the tolerance is met within m iterations.
/// Stops against the dense oracle (cheap at coarse dimension), which avoids
/// the early-iteration underestimation of the generalized residual.
pub fn calibrate_on_coarse(
    op: &SectorialOperator,
    v: &[f64],
    k: usize,
    h: f64,
    theta: f64,
    tol: f64,
) -> Result<TauPolicy> {
    let reference = phi_oracle_dense(k, h, &op.to_dense(), v)?;
    for cand in 2..=op.dim() {
        let tau = tau_optimal(cand, k, theta);
        let req = PhiRequest::new(k, h, v.to_vec(), tau)?;
        let opts = DriverOptions {
            stop: Some(StoppingRule::new(tol, cand, StopMode::Oracle)),
            bound_context: None,
            reference: Some(&reference),
        };
        match rd_arnoldi_phi_with(&req, op, &opts) {
            Ok(out) => {
                let target_m = out.m;
                let tau_opt = tau_optimal(target_m, k, theta);
                let window = if theta < PI / 3.0 {
                    tau_window(target_m, k, theta, 2)?
                } else {
                    TauWindow {
                        lo: tau_opt,
                        hi: tau_opt,
                        lo_n: target_m,
                        hi_n: target_m,
                        bracket_failed: true,
                    }
                };
                return Ok(TauPolicy {
                    theta,
                    k,
                    target_m,
                    tau_opt,
                    window,
                });
            }
            Err(Error::MaxIterations { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::CalibrationFailed(op.dim()))
}

/// Keep the old factorization of I - delta_old*L for the new step size iff
/// tau_new = h_new/delta_old falls inside the admissible window. Falls back
/// to the indicative [tau_opt/2, 2 tau_opt] when no window was computed.
pub fn reuse_decision(policy: &TauPolicy, h_new: f64, delta_old: f64) -> bool {
    let tau_new = h_new / delta_old;
    let (lo, hi) = if policy.window.bracket_failed {
        (policy.tau_opt / 2.0, 2.0 * policy.tau_opt)
    } else {
        (policy.window.lo, policy.window.hi)
    };
    tau_new >= lo && tau_new <= hi
}
