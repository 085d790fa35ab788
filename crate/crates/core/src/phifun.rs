//! Scalar and matrix phi-functions, and the RD rational Arnoldi driver.
//!
//! phi_0 = exp and phi_{k+1}(z) = (phi_k(z) - 1/k!)/z are the core functions
//! of exponential integrators. The driver approximates y = phi_k(hL)v by
//! projecting onto the Krylov space of Z = (I - delta*L)^{-1} and evaluating
//! f_k(z) = phi_k(tau(1 - 1/z)) on the small Hessenberg matrix, where
//! tau = h/delta.

use num_complex::Complex64;

use crate::arnoldi::ArnoldiDecomposition;
use crate::bounds::{
    bound_aposteriori, bound_bounded_sector, BoundInputs, BoundRecord, BoundReport,
    CROUZEIX_DEFAULT,
};
use crate::error::{Error, Result};
use crate::operators::SectorialOperator;
use crate::residual::{generalized_residual, should_stop, StopMode, StoppingRule};
use crate::smalldense::{expm, DenseMatrix, LuFactors};

/// Cap on the phi index: it bounds the augmented block in the matrix
/// evaluation, and integrators rarely need more than phi_4.
pub const MAX_PHI_INDEX: usize = 6;

const MAX_DENSE_DIM: usize = 200;
const MAX_ORACLE_DIM: usize = 400;

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn phi_taylor(k: usize, z: Complex64) -> Complex64 {
    // sum_{j>=0} z^j / (j+k)!  -- fast termination for |z| < 1
    let mut kfact = 1.0f64;
    for j in 2..=k {
        kfact *= j as f64;
    }
    let mut term = c64(1.0 / kfact);
    let mut sum = term;
    for j in 1..=64 {
        term = term * z / (j + k) as f64;
        sum += term;
        if term.norm() <= 1e-20 * sum.norm() {
            break;
        }
    }
    sum
}

/// phi_k at a complex scalar. Below |z| = 0.5 the truncated Taylor series is
/// used; the upward recurrence from exp cancels catastrophically near the
/// origin.
pub fn phi_scalar(k: usize, z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        return phi_taylor(k, z);
    }
    let mut phi = z.exp();
    let mut fact = 1.0f64; // j!
    for j in 0..k {
        phi = (phi - c64(1.0 / fact)) / z;
        fact *= (j + 1) as f64;
    }
    phi
}

/// Full matrix phi_k(A) through one exponential of the (k+1)n block matrix
/// with A in the leading block and identity coupling blocks. Intended for
/// small matrices; cost grows like ((k+1) n)^3.
pub fn phi_matrix_small(k: usize, a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "phi_k needs a square matrix".into(),
        ));
    }
    let n = a.rows();
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidRequest(format!(
            "phi_matrix_small capped at dimension {MAX_DENSE_DIM}, got {n}"
        )));
    }
    if k > MAX_PHI_INDEX {
        return Err(Error::InvalidRequest(format!(
            "phi index {k} exceeds the cap {MAX_PHI_INDEX}"
        )));
    }
    if k == 0 {
        return expm(a);
    }
    let big = n * (k + 1);
    let mut w = DenseMatrix::zeros(big, big);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = a[(i, j)];
        }
    }
    for block in 0..k {
        for i in 0..n {
            w[(block * n + i, (block + 1) * n + i)] = c64(1.0);
        }
    }
    let e = expm(&w)?;
    Ok(DenseMatrix::from_fn(n, n, |i, j| e[(i, k * n + j)]))
}

/// phi_k(A) b for a single vector through the exponential of the
/// (n+k) x (n+k) matrix [[A, B], [0, N]] with B = [b, 0, ..] and N the
/// nilpotent shift; the answer is the last augmented column of the top block.
pub fn phi_apply(k: usize, a: &DenseMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::DimensionMismatch(
            "phi_apply dimension mismatch".into(),
        ));
    }
    let n = a.rows();
    if n > MAX_ORACLE_DIM {
        return Err(Error::InvalidRequest(format!(
            "phi_apply capped at dimension {MAX_ORACLE_DIM}, got {n}"
        )));
    }
    if k > MAX_PHI_INDEX {
        return Err(Error::InvalidRequest(format!(
            "phi index {k} exceeds the cap {MAX_PHI_INDEX}"
        )));
    }
    if k == 0 {
        return Ok(expm(a)?.matvec(b));
    }
    let big = n + k;
    let mut w = DenseMatrix::zeros(big, big);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = a[(i, j)];
        }
        w[(i, n)] = b[i];
    }
    for j in 0..k - 1 {
        w[(n + j, n + j + 1)] = c64(1.0);
    }
    let e = expm(&w)?;
    Ok((0..n).map(|i| e[(i, big - 1)]).collect())
}

/// Problem statement: compute y = phi_k(h L) v with pole parameter
/// tau = h/delta.
#[derive(Debug, Clone)]
pub struct PhiRequest {
    pub k: usize,
    pub h: f64,
    pub v: Vec<f64>,
    pub delta: f64,
    pub tau: f64,
}

impl PhiRequest {
    pub fn new(k: usize, h: f64, v: Vec<f64>, tau: f64) -> Result<Self> {
        if k > MAX_PHI_INDEX {
            return Err(Error::InvalidRequest(format!(
                "phi index {k} exceeds the cap {MAX_PHI_INDEX}"
            )));
        }
        if !(h > 0.0) || !h.is_finite() || !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidRequest(format!(
                "h and tau must be positive and finite (h={h}, tau={tau})"
            )));
        }
        let delta = h / tau;
        Ok(Self {
            k,
            h,
            v,
            delta,
            tau,
        })
    }

    pub fn with_delta(k: usize, h: f64, v: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidRequest(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let mut req = Self::new(k, h, v, h / delta)?;
        req.delta = delta;
        Ok(req)
    }
}

/// Sector data the driver needs to evaluate the a-posteriori bounds along
/// the way.
#[derive(Debug, Clone, Copy)]
pub struct BoundContext {
    pub theta: f64,
    pub crouzeix: f64,
    /// h*R when F(L) is also known to sit inside a disk of radius R;
    /// enables the sharper bounded-sector bound in the report.
    pub h_radius: Option<f64>,
}

impl BoundContext {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            crouzeix: CROUZEIX_DEFAULT,
            h_radius: None,
        }
    }

    pub fn symmetric() -> Self {
        Self {
            theta: 0.0,
            crouzeix: 1.0,
            h_radius: None,
        }
    }

    pub fn with_h_radius(mut self, hr: f64) -> Self {
        self.h_radius = Some(hr);
        self
    }
}

/// Stopping rule plus optional monitoring extras for the driver.
#[derive(Debug, Clone, Default)]
pub struct DriverOptions<'a> {
    pub stop: Option<StoppingRule>,
    /// When present, fe1/fe2 are evaluated at every checked iteration.
    pub bound_context: Option<BoundContext>,
    /// Reference solution; enables the oracle stopping mode and the
    /// true_error column of the report.
    pub reference: Option<&'a [f64]>,
}

/// The iterate y_m = V_m f_k(H_m) e_1 with its diagnostic history.
#[derive(Debug, Clone)]
pub struct PhiApproximation {
    pub y: Vec<f64>,
    pub m: usize,
    pub breakdown: bool,
    pub converged: bool,
    pub report: BoundReport,
}

/// f_k(H_m) e_1 = phi_k(S_m) e_1 with S_m = tau (I - H_m^{-1}). H_m is
/// nonsingular whenever F(Z) stays inside G_theta, so an LU failure signals
/// a non-sectorial problem.
pub fn fk_on_hessenberg(req: &PhiRequest, h: &DenseMatrix) -> Result<Vec<Complex64>> {
    let m = h.rows();
    let lu = LuFactors::new(h).map_err(|_| Error::SingularHessenberg)?;
    let hinv = lu.solve_mat(&DenseMatrix::identity(m));
    let s = DenseMatrix::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (c64(id) - hinv[(i, j)]) * req.tau
    });
    let mut e1 = vec![c64(0.0); m];
    e1[0] = c64(1.0);
    phi_apply(req.k, &s, &e1)
}

/// Dense brute-force reference: phi_k(hL) v by the augmented exponential on
/// the full operator. This is the oracle every error measurement compares
/// against; it shares no code path with the Krylov iteration beyond expm.
pub fn phi_oracle_dense(k: usize, h: f64, l_dense: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let hl = l_dense.scale(c64(h));
    let vb: Vec<Complex64> = v.iter().map(|&x| c64(x)).collect();
    let y = phi_apply(k, &hl, &vb)?;
    Ok(y.iter().map(|z| z.re).collect())
}

/// Runs the RD rational Arnoldi iteration with the given stopping rule.
pub fn rd_arnoldi_phi(
    req: &PhiRequest,
    op: &SectorialOperator,
    stop: &StoppingRule,
) -> Result<PhiApproximation> {
    rd_arnoldi_phi_with(
        req,
        op,
        &DriverOptions {
            stop: Some(stop.clone()),
            bound_context: None,
            reference: None,
        },
    )
}

/// Full-control driver: iterates arnoldi extension, evaluates the projected
/// phi-function at every checked step, records residual/bounds/true error,
/// and stops per the rule, on happy breakdown, or at the full dimension
/// (where the approximation is exact).
///
/// All reported quantities are scaled back to the magnitude of the input
/// vector, so tolerances are absolute for unit inputs and relative to ||v||
/// otherwise (the internal-stage situation with ||v|| = O(h)).
pub fn rd_arnoldi_phi_with(
    req: &PhiRequest,
    op: &SectorialOperator,
    opts: &DriverOptions,
) -> Result<PhiApproximation> {
    let stop = opts
        .stop
        .clone()
        .unwrap_or_else(|| StoppingRule::new(1e-12, op.dim(), StopMode::Residual));
    stop.validate()?;
    if req.v.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs operator dimension {}",
            req.v.len(),
            op.dim()
        )));
    }
    if stop.max_m > op.dim() {
        return Err(Error::InvalidRequest(format!(
            "max_m = {} exceeds the operator dimension {}",
            stop.max_m,
            op.dim()
        )));
    }
    if stop.mode == StopMode::Oracle && opts.reference.is_none() {
        return Err(Error::InvalidRequest(
            "oracle stopping mode needs a reference solution".into(),
        ));
    }
    if matches!(stop.mode, StopMode::BoundFe1 | StopMode::BoundFe2) && opts.bound_context.is_none()
    {
        return Err(Error::InvalidRequest(
            "bound stopping modes need a BoundContext".into(),
        ));
    }
    if let Some(ctx) = &opts.bound_context {
        if ctx.theta >= std::f64::consts::PI / 3.0 {
            return Err(Error::ThetaOutOfRange(
                ctx.theta,
                std::f64::consts::PI / 3.0,
            ));
        }
    }

    let beta = vec_norm(&req.v);
    if beta < 1e-300 {
        return Err(Error::ZeroVector);
    }
    let vhat: Vec<f64> = req.v.iter().map(|x| x / beta).collect();
    let fact = op.factor_shift(req.delta)?;
    let mut dec = ArnoldiDecomposition::init(&fact, &vhat)?;
    let mut report = BoundReport::default();

    loop {
        match dec.extend(&fact) {
            Ok(()) => {}
            Err(Error::AtFullDimension(_)) => {
                // The space is exhausted; the last checked iterate is exact.
            }
            Err(e) => return Err(e),
        }
        let m = dec.m();
        let exact_now = dec.breakdown() || m == op.dim();
        let checked = exact_now || m == stop.max_m || m % stop.check_every == 0;
        if !checked {
            continue;
        }

        let hm = dec.hessenberg(m);
        let fk = fk_on_hessenberg(req, &hm)?;
        let fk_re: Vec<f64> = fk.iter().map(|z| z.re).collect();
        let resid = beta * generalized_residual(&dec, &fk_re);
        let mut y = dec.expand(&fk_re);
        for x in y.iter_mut() {
            *x *= beta;
        }
        let true_error = opts.reference.map(|r| {
            y.iter()
                .zip(r.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        let prod = dec.subdiagonal_product(m);
        let (fe1, fe2, bdn) = match &opts.bound_context {
            Some(ctx) => {
                let mut inputs = BoundInputs::new(req.k, m, req.tau, ctx.theta, prod);
                inputs.crouzeix = ctx.crouzeix;
                inputs.h_radius = ctx.h_radius;
                let (a, b) = bound_aposteriori(&inputs)?;
                let bdn = match ctx.h_radius {
                    Some(_) => Some(bound_bounded_sector(&inputs)? * beta),
                    None => None,
                };
                (Some(a * beta), Some(b * beta), bdn)
            }
            None => (None, None, None),
        };
        report.records.push(BoundRecord {
            m,
            residual: Some(resid),
            bound_fe1: fe1,
            bound_fe2: fe2,
            bound_bdn: bdn,
            true_error,
            subdiag_product: prod,
        });

        let converged = should_stop(&stop, &report);
        if converged || exact_now {
            return Ok(PhiApproximation {
                y,
                m,
                breakdown: dec.breakdown(),
                // At breakdown or full dimension the Krylov space contains
                // the exact solution, so the iterate is exact up to roundoff.
                converged: converged || exact_now,
                report,
            });
        }
        if m >= stop.max_m {
            return Err(Error::MaxIterations {
                max_m: stop.max_m,
                best: Box::new(PhiApproximation {
                    y,
                    m,
                    breakdown: false,
                    converged: false,
                    report,
                }),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smalldense::{hessenberg_eigenvalues, lu_solve};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn approx_c(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn phi_scalar_reference_values() {
        approx_c(phi_scalar(0, c64(0.0)), c64(1.0), 1e-16);
        approx_c(phi_scalar(1, c64(0.0)), c64(1.0), 1e-16);
        approx_c(phi_scalar(2, c64(0.0)), c64(0.5), 1e-16);
        approx_c(phi_scalar(3, c64(0.0)), c64(1.0 / 6.0), 1e-16);
        approx_c(phi_scalar(1, c64(1.0)), c64(1.0f64.exp() - 1.0), 1e-14);
    }

    #[test]
    fn phi_scalar_branches_agree_on_the_switch_circle() {
        for k in 0..=4usize {
            for i in 0..16 {
                let ang = 2.0 * std::f64::consts::PI * i as f64 / 16.0;
                let z = Complex64::from_polar(0.5, ang);
                let taylor = phi_taylor(k, z);
                let mut rec = z.exp();
                let mut fact = 1.0f64;
                for j in 0..k {
                    rec = (rec - c64(1.0 / fact)) / z;
                    fact *= (j + 1) as f64;
                }
                assert!(
                    (taylor - rec).norm() <= 1e-13 * taylor.norm().max(1.0),
                    "k={k} z={z}: {taylor} vs {rec}"
                );
            }
        }
    }

    #[test]
    fn phi_matrix_zero_matrix() {
        for k in 0..=4usize {
            let p = phi_matrix_small(k, &DenseMatrix::zeros(3, 3)).unwrap();
            let mut kfact = 1.0;
            for j in 2..=k {
                kfact *= j as f64;
            }
            let want = DenseMatrix::identity(3).scale(c64(1.0 / kfact));
            assert!(p.sub(&want).norm_max() <= 1e-14);
        }
    }

    #[test]
    fn phi_matrix_diagonal() {
        let a = DenseMatrix::diag(&[c64(1.0), c64(-1.0)]);
        let p = phi_matrix_small(1, &a).unwrap();
        let e = 1.0f64.exp();
        approx_c(p[(0, 0)], c64(e - 1.0), 1e-13);
        approx_c(p[(1, 1)], c64(1.0 - 1.0 / e), 1e-13);
        approx_c(p[(0, 1)], c64(0.0), 1e-14);
    }

    #[test]
    fn phi_matrix_1x1_matches_scalar() {
        for k in 0..=4usize {
            for z in [c64(0.3), c64(-2.0), Complex64::new(1.0, 2.0)] {
                let p = phi_matrix_small(k, &DenseMatrix::diag(&[z])).unwrap();
                approx_c(
                    p[(0, 0)],
                    phi_scalar(k, z),
                    1e-14 * phi_scalar(k, z).norm().max(1.0),
                );
            }
        }
    }

    #[test]
    fn phi2_algebraic_identity() {
        // phi_2(A) = A^{-2}(e^A - I - A) for well-conditioned A.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let n = 5;
        let mut a = DenseMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        for i in 0..n {
            a[(i, i)] += c64(2.0);
        }
        let p2 = phi_matrix_small(2, &a).unwrap();
        let ea = expm(&a).unwrap();
        let rhs_top = ea.sub(&DenseMatrix::identity(n)).sub(&a);
        let a2 = a.mul(&a);
        let direct = lu_solve(&a2, &rhs_top).unwrap();
        assert!(
            p2.sub(&direct).norm_max() <= 1e-11 * direct.norm_max().max(1.0),
            "difference {:.3e}",
            p2.sub(&direct).norm_max()
        );
    }

    #[test]
    fn phi_apply_matches_full_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 6;
        let a = DenseMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, 0.3 * (rng.gen::<f64>() - 0.5))
        });
        let b: Vec<Complex64> = (0..n).map(|_| c64(rng.gen::<f64>() - 0.5)).collect();
        for k in 0..=3usize {
            let full = phi_matrix_small(k, &a).unwrap().matvec(&b);
            let fast = phi_apply(k, &a, &b).unwrap();
            for (x, y) in full.iter().zip(fast.iter()) {
                approx_c(*x, *y, 1e-12);
            }
        }
    }

    #[test]
    fn fk_identity_hessenberg() {
        // H = [1] (Z = I case): f_k(1) = phi_k(0) = 1/k!.
        for k in 0..=3usize {
            let req = PhiRequest::new(k, 0.1, vec![1.0], 5.0).unwrap();
            let h = DenseMatrix::diag(&[c64(1.0)]);
            let fk = fk_on_hessenberg(&req, &h).unwrap();
            let mut kfact = 1.0;
            for j in 2..=k {
                kfact *= j as f64;
            }
            approx_c(fk[0], c64(1.0 / kfact), 1e-13);
        }
    }

    #[test]
    fn fk_diagonal_hessenberg() {
        let (z1, z2) = (0.8, 0.4);
        let tau = 6.0;
        let req = PhiRequest::new(1, 0.1, vec![1.0, 0.0], tau).unwrap();
        let h = DenseMatrix::diag(&[c64(z1), c64(z2)]);
        let fk = fk_on_hessenberg(&req, &h).unwrap();
        approx_c(fk[0], phi_scalar(1, c64(tau * (1.0 - 1.0 / z1))), 1e-12);
        approx_c(fk[1], c64(0.0), 1e-13);
    }

    #[test]
    fn fk_rejects_singular_hessenberg() {
        let req = PhiRequest::new(1, 0.1, vec![1.0, 0.0], 5.0).unwrap();
        let h = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            fk_on_hessenberg(&req, &h),
            Err(Error::SingularHessenberg)
        ));
    }

    #[test]
    fn oracle_trivial_operators() {
        // L = 0: phi_k(0)v = v/k!.
        let v = vec![0.5, -1.0, 2.0];
        let zero = DenseMatrix::zeros(3, 3);
        for k in 0..=3usize {
            let y = phi_oracle_dense(k, 0.7, &zero, &v).unwrap();
            let mut kfact = 1.0;
            for j in 2..=k {
                kfact *= j as f64;
            }
            for (a, b) in y.iter().zip(v.iter()) {
                assert!((a - b / kfact).abs() <= 1e-14);
            }
        }
        // diagonal L: componentwise phi via the scalar code.
        let l = DenseMatrix::diag(&[c64(-1.0), c64(-5.0), c64(-0.1)]);
        let h = 0.3;
        let y = phi_oracle_dense(2, h, &l, &v).unwrap();
        for i in 0..3 {
            let want = phi_scalar(2, c64(h) * l[(i, i)]).re * v[i];
            assert!((y[i] - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn oracle_recurrence_identity() {
        // hL phi_1(hL) v = (e^{hL} - I) v at the matrix level.
        let m = 60;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 2.0);
        let dense = op.to_dense();
        let h = 0.01;
        let v: Vec<f64> = (0..m).map(|i| ((i + 1) as f64 * 0.05).sin()).collect();
        let y1 = phi_oracle_dense(1, h, &dense, &v).unwrap();
        let y0 = phi_oracle_dense(0, h, &dense, &v).unwrap();
        let hl = dense.scale(c64(h));
        let y1c: Vec<Complex64> = y1.iter().map(|&x| c64(x)).collect();
        let lhs = hl.matvec(&y1c);
        let scale = vec_norm(&y0).max(1.0);
        for i in 0..m {
            let rhs = y0[i] - v[i];
            assert!((lhs[i].re - rhs).abs() <= 1e-11 * scale, "row {i}");
        }
    }

    #[test]
    fn matrix_level_phi_recurrence() {
        // phi_{k+1}(hL)v = (hL)^{-1} (phi_k(hL)v - v/k!), k = 0, 1, 2.
        let m = 50;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 1.0);
        let dense = op.to_dense();
        let h = 0.05;
        let v: Vec<f64> = (0..m).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let hl = dense.scale(c64(h));
        let mut kfact = 1.0f64;
        for k in 0..=2usize {
            let yk = phi_oracle_dense(k, h, &dense, &v).unwrap();
            let ykp = phi_oracle_dense(k + 1, h, &dense, &v).unwrap();
            let rhs_vec: Vec<Complex64> = yk
                .iter()
                .zip(v.iter())
                .map(|(a, b)| c64(a - b / kfact))
                .collect();
            let rhs_mat = DenseMatrix::from_fn(m, 1, |i, _| rhs_vec[i]);
            let sol = lu_solve(&hl, &rhs_mat).unwrap();
            let scale = vec_norm(&ykp).max(1e-30);
            for i in 0..m {
                assert!(
                    (sol[(i, 0)].re - ykp[i]).abs() <= 1e-9 * scale,
                    "k={k} row {i}"
                );
            }
            kfact *= (k + 1) as f64;
        }
    }

    #[test]
    fn driver_zero_operator() {
        let m = 8;
        let op = crate::operators::SectorialOperator::from_triplets(m, &[]).unwrap();
        let v: Vec<f64> = (0..m).map(|i| (i as f64) - 3.0).collect();
        for k in 0..=2usize {
            let req = PhiRequest::new(k, 0.5, v.clone(), 4.0).unwrap();
            let stop = StoppingRule::new(1e-12, m, StopMode::Residual);
            let out = rd_arnoldi_phi(&req, &op, &stop).unwrap();
            assert_eq!(out.m, 1);
            assert!(out.breakdown);
            let mut kfact = 1.0;
            for j in 2..=k {
                kfact *= j as f64;
            }
            for (a, b) in out.y.iter().zip(v.iter()) {
                assert!((a - b / kfact).abs() <= 1e-13 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn driver_exact_at_full_dimension() {
        let m = 30;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 2.0);
        let dense = op.to_dense();
        let h = 0.1;
        let mut v = vec![1.0; m];
        let s = vec_norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        for k in 0..=2usize {
            let req = PhiRequest::new(k, h, v.clone(), 10.0).unwrap();
            // Impossibly tight tolerance forces the run to the exact regime.
            let stop = StoppingRule::new(1e-15, m, StopMode::Residual);
            let out = match rd_arnoldi_phi(&req, &op, &stop) {
                Ok(o) => o,
                Err(Error::MaxIterations { best, .. }) => *best,
                Err(e) => panic!("unexpected driver error {e}"),
            };
            let want = phi_oracle_dense(k, h, &dense, &v).unwrap();
            let err: f64 = out
                .y
                .iter()
                .zip(want.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = vec_norm(&want) + 1.0;
            assert!(err <= 1e-9 * scale, "k={k}: error {err:.3e}");
        }
    }

    #[test]
    fn driver_model_problem_converges_quickly() {
        // Coarse-grid configuration: c=2, h=0.1, k=1, tau = 15/cos(theta).
        let m = 50;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 2.0);
        let theta: f64 = 0.201;
        let v = vec![1.0 / (m as f64).sqrt(); m];
        let req = PhiRequest::new(1, 0.1, v.clone(), 15.0 / theta.cos()).unwrap();
        let stop = StoppingRule::new(1e-12, m, StopMode::Residual);
        let out = rd_arnoldi_phi(&req, &op, &stop).unwrap();
        assert!(out.converged);
        // Residual crosses 1e-12 by m = 14; the two-consecutive-hits
        // safeguard stops one iteration later.
        let first_hit = out
            .report
            .records
            .iter()
            .find(|r| r.residual.unwrap() <= 1e-12)
            .map(|r| r.m)
            .unwrap();
        assert!(
            first_hit <= 14,
            "residual first below tol at m = {first_hit}"
        );
        assert!(out.m <= 15, "converged only at m = {}", out.m);
        // And the iterate really is that accurate.
        let want = phi_oracle_dense(1, 0.1, &op.to_dense(), &v).unwrap();
        let err: f64 = out
            .y
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10, "true error {err:.3e}");
    }

    #[test]
    fn driver_scales_non_unit_inputs() {
        // ||v|| = O(h) internal-stage shape: stopping is relative to ||v||.
        let m = 40;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 0.0);
        let h = 0.1;
        let v: Vec<f64> = (0..m).map(|i| 1e-3 * ((i as f64) * 0.2).cos()).collect();
        let req = PhiRequest::new(1, h, v.clone(), 10.0).unwrap();
        let stop = StoppingRule::new(1e-10, m, StopMode::Residual);
        let out = rd_arnoldi_phi(&req, &op, &stop).unwrap();
        let want = phi_oracle_dense(1, h, &op.to_dense(), &v).unwrap();
        let err: f64 = out
            .y
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10 * vec_norm(&v) * 1e3, "error {err:.3e}");
        assert!(vec_norm(&out.y) <= 1e-2, "scale preserved");
    }

    #[test]
    fn driver_max_iterations_payload() {
        let m = 30;
        let op = crate::operators::SectorialOperator::advection_diffusion(m, 0.0);
        let v = vec![1.0 / (m as f64).sqrt(); m];
        let req = PhiRequest::new(0, 0.5, v, 20.0).unwrap();
        let stop = StoppingRule::new(1e-15, 3, StopMode::Residual);
        match rd_arnoldi_phi(&req, &op, &stop) {
            Err(Error::MaxIterations { max_m, best }) => {
                assert_eq!(max_m, 3);
                assert_eq!(best.m, 3);
                assert_eq!(best.report.len(), 3);
            }
            other => panic!("expected MaxIterations, got {other:?}"),
        }
    }

    #[test]
    fn iterate_matches_hermite_interpolant() {
        // y_m = pbar(Z) v where pbar interpolates f_k at the Ritz values.
        let m_dim = 20;
        let op = crate::operators::SectorialOperator::advection_diffusion(m_dim, 2.0);
        let delta = 0.05;
        let h = 0.1;
        let tau = h / delta;
        let req = PhiRequest::with_delta(1, h, vec![0.0; m_dim], delta).unwrap();
        let fact = op.factor_shift(delta).unwrap();
        let mut v = vec![0.0f64; m_dim];
        for (i, x) in v.iter_mut().enumerate() {
            *x = 1.0 + ((i * i) as f64 * 0.1).sin() * 0.3;
        }
        let s = vec_norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        let mut dec = ArnoldiDecomposition::init(&fact, &v).unwrap();
        for _ in 0..5 {
            dec.extend(&fact).unwrap();
        }
        let m = dec.m();
        let hm = dec.hessenberg(m);
        let fk = fk_on_hessenberg(&req, &hm).unwrap();
        let fk_re: Vec<f64> = fk.iter().map(|z| z.re).collect();
        let iterate = dec.expand(&fk_re);

        // Newton-form interpolant of f_1 at the Ritz values.
        let ritz = hessenberg_eigenvalues(&hm).unwrap();
        let fvals: Vec<Complex64> = ritz
            .iter()
            .map(|&z| phi_scalar(1, c64(tau) * (c64(1.0) - z.inv())))
            .collect();
        let mut table = fvals.clone();
        let mut coeffs = vec![table[0]];
        for level in 1..m {
            for i in 0..m - level {
                table[i] = (table[i + 1] - table[i]) / (ritz[i + level] - ritz[i]);
            }
            coeffs.push(table[0]);
        }
        // Horner evaluation of pbar(Z) v with the dense Z.
        let n = m_dim;
        let shifted = DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            c64(id - delta * op.get(i, j))
        });
        let z = lu_solve(&shifted, &DenseMatrix::identity(n)).unwrap();
        let vc: Vec<Complex64> = v.iter().map(|&x| c64(x)).collect();
        let mut w: Vec<Complex64> = vc.iter().map(|&x| x * coeffs[m - 1]).collect();
        for level in (0..m - 1).rev() {
            let zw = z.matvec(&w);
            w = zw
                .iter()
                .zip(w.iter())
                .zip(vc.iter())
                .map(|((zwi, wi), vi)| zwi - ritz[level] * wi + coeffs[level] * vi)
                .collect();
        }
        let scale = vec_norm(&iterate) + 1.0;
        for i in 0..n {
            assert!(
                (w[i].re - iterate[i]).abs() <= 1e-7 * scale,
                "row {i}: {} vs {}",
                w[i].re,
                iterate[i]
            );
        }
    }
}
