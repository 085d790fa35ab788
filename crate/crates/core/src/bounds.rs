//! Error bounds for the RD rational Arnoldi iterates.
//!
//! Covers the a-posteriori family driven by Laguerre sums (sharp `fe1`,
//! coarser `fe2` plus its exponential-case and self-adjoint reductions), the
//! bounded-sector refinement, the a-priori geometric rate, the capacity bound
//! on the subdiagonal product and the trace-class superlinear bound. All
//! products of factorials and powers are assembled in log space; past the
//! range of f64 the bounds degrade to +inf instead of failing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laguerre::{binomial_real, laguerre, laguerre_sequence, ln_gamma};

/// Upper end of the Crouzeix constant range used by the bounds; the
/// symmetric case allows 1.
pub const CROUZEIX_DEFAULT: f64 = 11.08;

/// Largest semiangle with geometric rate rho(theta) < 1.
pub const THETA_STAR: f64 = 0.48124;

const PI: f64 = std::f64::consts::PI;

/// Everything the per-iteration bounds need to know.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub k: usize,
    pub m: usize,
    pub tau: f64,
    /// Sector semiangle containing F(L).
    pub theta: f64,
    /// Crouzeix constant K in [1, 11.08].
    pub crouzeix: f64,
    /// prod_{i=1}^m h_{i+1,i} from the Arnoldi decomposition.
    pub subdiag_product: f64,
    /// h*R when F(L) is also confined to a disk of radius R.
    pub h_radius: Option<f64>,
}

impl BoundInputs {
    pub fn new(k: usize, m: usize, tau: f64, theta: f64, subdiag_product: f64) -> Self {
        Self {
            k,
            m,
            tau,
            theta,
            crouzeix: CROUZEIX_DEFAULT,
            subdiag_product,
            h_radius: None,
        }
    }

    /// Self-adjoint problems admit K = 1.
    pub fn symmetric(mut self) -> Self {
        self.crouzeix = 1.0;
        self
    }

    pub fn with_h_radius(mut self, hr: f64) -> Self {
        self.h_radius = Some(hr);
        self
    }
}

/// One checked iteration of the driver.
#[derive(Debug, Clone)]
pub struct BoundRecord {
    pub m: usize,
    pub residual: Option<f64>,
    pub bound_fe1: Option<f64>,
    pub bound_fe2: Option<f64>,
    pub bound_bdn: Option<f64>,
    pub true_error: Option<f64>,
    pub subdiag_product: f64,
}

/// Per-iteration history of bounds, residuals and (on oracle runs) true
/// errors.
#[derive(Debug, Clone, Default)]
pub struct BoundReport {
    pub records: Vec<BoundRecord>,
}

impl BoundReport {
    pub fn last(&self) -> Option<&BoundRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// c_j(theta) = (1 + sqrt(2(1-cos theta)))^j.
pub fn c_coeff(j: usize, theta: f64) -> f64 {
    (1.0 + (2.0 * (1.0 - theta.cos())).sqrt()).powi(j as i32)
}

/// C_{k,m}(tau, theta) = ((m-1)!/(m+k)!) sum_j |L_{m-1-j}^(k)(tau)| c_j(theta).
pub fn ckm(k: usize, m: usize, tau: f64, theta: f64) -> f64 {
    assert!(m >= 1);
    let lag = laguerre_sequence(m - 1, k as f64, Complex64::new(tau, 0.0));
    let base = 1.0 + (2.0 * (1.0 - theta.cos())).sqrt();
    let mut cj = 1.0f64;
    let mut sum = 0.0f64;
    for j in 0..m {
        sum += lag[m - 1 - j].norm() * cj;
        cj *= base;
    }
    (ln_gamma(m as f64) - ln_gamma((m + k) as f64 + 1.0)).exp() * sum
}

/// C'_{k,m}(theta) = ((m-1)!/(m+k)!) sum_j binom(m+k-j-1, k) c_j(theta).
pub fn ckm_prime(k: usize, m: usize, theta: f64) -> f64 {
    assert!(m >= 1);
    let base = 1.0 + (2.0 * (1.0 - theta.cos())).sqrt();
    let mut cj = 1.0f64;
    let mut sum = 0.0f64;
    for j in 0..m {
        sum += binomial_real((m + k - j - 1) as f64, k) * cj;
        cj *= base;
    }
    (ln_gamma(m as f64) - ln_gamma((m + k) as f64 + 1.0)).exp() * sum
}

/// The two a-posteriori bounds: the sharp one built from Laguerre values at
/// tau and the coarser one that only sees the sector angle. Both require
/// theta < pi/3. Returns (fe1, fe2); +inf signals overflow, zero means the
/// subdiagonal product has vanished (exact approximation).
pub fn bound_aposteriori(inp: &BoundInputs) -> Result<(f64, f64)> {
    if inp.theta >= PI / 3.0 {
        return Err(Error::ThetaOutOfRange(inp.theta, PI / 3.0));
    }
    if !(inp.tau > 0.0) || inp.m == 0 {
        return Err(Error::InvalidRequest(
            "a-posteriori bound needs tau > 0 and m >= 1".into(),
        ));
    }
    if inp.subdiag_product == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (k, m, tau, theta) = (inp.k, inp.m, inp.tau, inp.theta);
    let n1 = (m + k + 1) as f64;
    let cos = theta.cos();
    let ln_common = inp.crouzeix.ln() + n1 * ((2.0 * n1).ln() - (2.0 * cos - 1.0).ln())
        - (m + k) as f64 * tau.ln()
        - n1
        + inp.subdiag_product.ln();
    let fe1 = (ln_common + tau * (cos - 0.5) + ckm(k, m, tau, theta).ln()).exp();
    let fe2 = (ln_common + tau * cos + ckm_prime(k, m, theta).ln()).exp();
    Ok((fe1, fe2))
}

/// Bounded-sector bound for F(L) inside S_theta intersected with a disk of
/// radius R. The maximand over s in [0, hR] is located on a 512-point grid
/// and refined by golden-section search in the winning cell.
pub fn bound_bounded_sector(inp: &BoundInputs) -> Result<f64> {
    let hr = inp
        .h_radius
        .ok_or_else(|| Error::InvalidRequest("bounded-sector bound needs h_radius = h*R".into()))?;
    if hr < 0.0 || !(inp.tau > 0.0) || inp.m == 0 {
        return Err(Error::InvalidRequest(
            "bounded-sector bound needs h*R >= 0, tau > 0, m >= 1".into(),
        ));
    }
    let (k, m, tau, theta) = (inp.k, inp.m, inp.tau, inp.theta);
    let phase = Complex64::from_polar(1.0, theta);
    let maximand = |s: f64| -> f64 {
        let lag = laguerre(m - 1, (k + 1) as f64, Complex64::new(tau, 0.0) + s * phase);
        (-s * theta.cos()).exp() * (1.0 + s / tau).powi((m + k + 1) as i32) * lag.norm()
    };
    let mut best = maximand(0.0);
    let mut best_i = 0usize;
    let grid = 512usize;
    if hr > 0.0 {
        for i in 1..grid {
            let v = maximand(hr * i as f64 / (grid - 1) as f64);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        // Golden-section refinement inside the bracketing cells.
        let mut a = hr * best_i.saturating_sub(1) as f64 / (grid - 1) as f64;
        let mut b = hr * (best_i + 1).min(grid - 1) as f64 / (grid - 1) as f64;
        let inv_phi = 0.5 * ((5.0f64).sqrt() - 1.0);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = maximand(x1);
        let mut f2 = maximand(x2);
        while (b - a) > 1e-6 * hr {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = maximand(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = maximand(x1);
            }
        }
        best = best.max(f1.max(f2));
    }
    let ratio = (ln_gamma(m as f64) - ln_gamma((m + k) as f64 + 1.0)).exp();
    Ok(inp.crouzeix * best * tau * ratio * inp.subdiag_product)
}

/// Geometric a-priori rate rho(theta); below 1 exactly on [0, theta*).
pub fn rho(theta: f64) -> f64 {
    let cos = theta.cos();
    (1.0 + (2.0 * (1.0 - cos)).sqrt()) * cos / (4.0 * cos - 2.0) * PI / (PI - theta)
}

/// Mesh-independent a-priori bound 11 K rho(theta)^m, valid for
/// theta < theta* = 0.48124 with tau = (m+k)/cos(theta).
pub fn bound_apriori(m: usize, theta: f64, crouzeix: f64) -> Result<f64> {
    if theta >= THETA_STAR {
        return Err(Error::ThetaOutOfRange(theta, THETA_STAR));
    }
    Ok(11.0 * crouzeix * rho(theta).powi(m as i32))
}

/// Logarithmic capacity of G_theta: the leading Laurent coefficient
/// 1/(2(2-nu)) with nu = 2 theta / pi.
pub fn capacity_coefficient(theta: f64) -> f64 {
    let nu = 2.0 * theta / PI;
    1.0 / (2.0 * (2.0 - nu))
}

/// Capacity bound prod h_{i+1,i} <= 2 gamma(G_theta)^m.
pub fn capacity_bound(m: usize, theta: f64) -> f64 {
    2.0 * capacity_coefficient(theta).powi(m as i32)
}

/// Superlinear bound (eta e p / m)^(m/p) on ||p_m(Z)|| from p-summable
/// singular values, eta = ((1+p)/p) sum sigma_j^p.
pub fn bound_superlinear(m: usize, singular_values: &[f64], p: f64) -> f64 {
    assert!(p > 0.0 && p <= 1.0, "p must lie in (0, 1]");
    assert!(m >= 1);
    let sum: f64 = singular_values.iter().map(|s| s.powf(p)).sum();
    let eta = (1.0 + p) / p * sum;
    ((m as f64 / p) * (eta * std::f64::consts::E * p / m as f64).ln()).exp()
}

/// Test-harness check of the derivative identity behind the bounds:
///
/// lhs = (1/(tau^k (m+k)!)) d^{m+k}/dz^{m+k} [ f_0(z) z^k ]   at z
/// rhs = ((-1)^{m+1} tau / z^{m+k+1}) f_0(z) ((m-1)!/(m+k)!) L_{m-1}^(k+1)(tau/z)
///
/// with f_0(z) = exp(tau - tau/z). The derivative is extracted exactly from
/// the local Taylor series of exp(-tau/z): the expansion coefficients of the
/// exponent are rational in z, and exp of a truncated series follows the
/// standard convolution recurrence, so no finite differencing is involved.
pub fn derivative_identity_check(
    k: usize,
    m: usize,
    tau: f64,
    z: Complex64,
) -> (Complex64, Complex64) {
    assert!(m >= 1 && z.norm() > 0.0);
    let order = m + k;
    // exponent series: -tau/(z+w) = a_0 + sum_{j>=1} a_j w^j
    let a0 = -tau / z;
    let mut a = vec![Complex64::new(0.0, 0.0); order + 1];
    for (j, aj) in a.iter_mut().enumerate().skip(1) {
        let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
        *aj = sign * tau / z.powu(j as u32 + 1);
    }
    // c = exp(sum_{j>=1} a_j w^j) by the convolution recurrence c' = b' c.
    let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
    c[0] = Complex64::new(1.0, 0.0);
    for i in 0..order {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..=i {
            acc += (l as f64 + 1.0) * a[l + 1] * c[i - l];
        }
        c[i + 1] = acc / (i as f64 + 1.0);
    }
    // multiply by (z+w)^k and read the coefficient of w^order
    let mut coeff = Complex64::new(0.0, 0.0);
    for j in 0..=k.min(order) {
        coeff += binomial_real(k as f64, j) * z.powu((k - j) as u32) * c[order - j];
    }
    let f0 = (Complex64::new(tau, 0.0) + a0).exp();
    let lhs = f0 * coeff / tau.powi(k as i32);

    let sign = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let ratio = (ln_gamma(m as f64) - ln_gamma((m + k) as f64 + 1.0)).exp();
    let rhs = f0 * laguerre(m - 1, (k + 1) as f64, Complex64::new(tau, 0.0) / z) * sign * tau
        / z.powu((m + k + 1) as u32)
        * ratio;
    (lhs, rhs)
}
