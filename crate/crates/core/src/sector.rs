//! Field-of-values geometry: boundary sampling by Johnson's rotation method,
//! sector semiangle estimation, and the containment check F(Z) inside
//! G_theta.
//!
//! For every rotation angle alpha the maximal eigenvector x of the Hermitian
//! part of e^{i alpha} A yields the boundary point x^H A x of F(A). The
//! semiangle theta of the enclosing sector is what the error bounds consume;
//! it is essentially mesh independent, so production use computes it on a
//! coarse operator. Tridiagonal operators get a dedicated O(M) path per
//! angle, which is what makes large-dimension angle checks cheap.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::SectorialOperator;
use crate::smalldense::{
    hermitian_tridiagonal, lu_solve, tridiagonal_eigen_extremes, DenseMatrix, LuFactors,
};

const MAX_DENSE_FOV_DIM: usize = 500;

/// Sector data extracted from sampled field-of-values boundary points.
#[derive(Debug, Clone)]
pub struct SectorInfo {
    /// Semiangle of the sector S_theta containing every sampled point.
    pub theta: f64,
    /// Radius of the smallest origin-centered disk containing the samples.
    pub radius: f64,
    pub fov_points: Vec<Complex64>,
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Inverse iteration for the eigenvector of a Hermitian matrix once its
/// extreme eigenvalue is known. The shift is nudged off the eigenvalue so
/// the LU stays (barely) regular; pivoted growth does the rest.
fn hermitian_eigvec_dense(h: &DenseMatrix, lambda: f64) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let scale = h.norm_fro().max(f64::MIN_POSITIVE);
    let mut eps = 1e-9 * scale;
    for _attempt in 0..4 {
        let shifted = DenseMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            h[(i, j)] - c64((lambda + eps) * id)
        });
        match LuFactors::new(&shifted) {
            Ok(lu) => {
                let mut x: Vec<Complex64> = (0..n)
                    .map(|i| c64(1.0 + 0.3 * ((i * i + 1) as f64).sin()))
                    .collect();
                for _ in 0..3 {
                    x = lu.solve_vec(&x);
                    let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if !nrm.is_finite() || nrm == 0.0 {
                        break;
                    }
                    for z in x.iter_mut() {
                        *z /= nrm;
                    }
                }
                if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Ok(x);
                }
            }
            Err(_) => {}
        }
        eps *= 100.0;
    }
    Err(Error::NoConvergence(4))
}

/// Boundary samples of the numerical range F(A) by Johnson's rotation
/// method on a uniform angle grid over [0, 2 pi).
pub fn field_of_values_boundary(a: &DenseMatrix, n_angles: usize) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "field of values needs a square matrix".into(),
        ));
    }
    if a.rows() > MAX_DENSE_FOV_DIM {
        return Err(Error::NotSupported(format!(
            "dense field-of-values path capped at dimension {MAX_DENSE_FOV_DIM}"
        )));
    }
    if n_angles < 8 {
        return Err(Error::InvalidRequest(
            "need at least 8 rotation angles".into(),
        ));
    }
    let mut points = Vec::with_capacity(n_angles);
    for i in 0..n_angles {
        let alpha = 2.0 * std::f64::consts::PI * i as f64 / n_angles as f64;
        let rot = Complex64::from_polar(1.0, alpha);
        let b = a.scale(rot);
        let herm = b.add(&b.conj_transpose()).scale(c64(0.5));
        let (d, e) = hermitian_tridiagonal(&herm)?;
        let (_, lambda_max) = tridiagonal_eigen_extremes(&d, &e);
        let x = hermitian_eigvec_dense(&herm, lambda_max)?;
        let ax = a.matvec(&x);
        let num: Complex64 = x.iter().zip(ax.iter()).map(|(xi, yi)| xi.conj() * yi).sum();
        let den: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        points.push(num / den);
    }
    Ok(points)
}

/// Semiangle of the smallest sector S_theta (vertex 0, symmetric about the
/// negative real axis) containing the points. Errors with `NotSectorial`
/// when a point reaches the closed right half-plane (1e-12 slack).
pub fn sector_semiangle(points: &[Complex64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidRequest("no field-of-values points".into()));
    }
    let mut theta = 0.0f64;
    for &p in points {
        if p.re >= 1e-12 {
            return Err(Error::NotSectorial(p));
        }
        let t = p.im.abs().atan2((-p.re).max(0.0));
        theta = theta.max(t);
    }
    if theta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::NotSectorial(
            *points
                .iter()
                .max_by(|a, b| a.im.abs().atan2(-a.re).total_cmp(&b.im.abs().atan2(-b.re)))
                .unwrap(),
        ));
    }
    Ok(theta)
}

/// Boundary samples plus semiangle and radius for a dense matrix.
pub fn sector_of_matrix(a: &DenseMatrix, n_angles: usize) -> Result<SectorInfo> {
    let fov_points = field_of_values_boundary(a, n_angles)?;
    let theta = sector_semiangle(&fov_points)?;
    let radius = fov_points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    Ok(SectorInfo {
        theta,
        radius,
        fov_points,
    })
}

// Pivoted LU solve for (T - sigma I) x = b on a symmetric tridiagonal T,
// LAPACK gttrf-style with the extra second superdiagonal for fill-in.
// Near-zero pivots are replaced by a tiny signed value (inverse iteration
// relies on the growth, not the accuracy, of such solves).
struct TridiagShifted {
    n: usize,
    dl: Vec<f64>,
    dd: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagShifted {
    fn factor(d: &[f64], e: &[f64], sigma: f64) -> Self {
        let n = d.len();
        let mut dd: Vec<f64> = d.iter().map(|&x| x - sigma).collect();
        let mut dl: Vec<f64> = e.to_vec();
        let mut du: Vec<f64> = e.to_vec();
        let mut du2 = vec![0.0f64; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let scale = dd
            .iter()
            .chain(dl.iter())
            .map(|x| x.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let tiny = f64::EPSILON * scale;
        for i in 0..n.saturating_sub(1) {
            if dl[i].abs() > dd[i].abs() {
                swap[i] = true;
                std::mem::swap(&mut dd[i], &mut dl[i]);
                std::mem::swap(&mut du[i], &mut dd[i + 1]);
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = 0.0;
                }
            }
            if dd[i].abs() < tiny {
                dd[i] = tiny.copysign(if dd[i] == 0.0 { 1.0 } else { dd[i] });
            }
            let m = dl[i] / dd[i];
            dl[i] = m;
            dd[i + 1] -= m * du[i];
            if i + 2 < n && swap[i] {
                // after a swap the eliminated row carries du2 into du of i+1
                du[i + 1] -= m * du2[i];
            }
        }
        if dd[n - 1].abs() < tiny {
            dd[n - 1] = tiny.copysign(if dd[n - 1] == 0.0 { 1.0 } else { dd[n - 1] });
        }
        Self {
            n,
            dl,
            dd,
            du,
            du2,
            swap,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                x.swap(i, i + 1);
            }
            let t = self.dl[i] * x[i];
            x[i + 1] -= t;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= self.du[i] * x[i + 1];
            }
            if i + 2 < n && self.du2.get(i).copied().unwrap_or(0.0) != 0.0 {
                acc -= self.du2[i] * x[i + 2];
            }
            x[i] = acc / self.dd[i];
        }
        x
    }
}

fn tridiag_eigvec(d: &[f64], e: &[f64], lambda: f64) -> Vec<f64> {
    let n = d.len();
    let scale = d
        .iter()
        .map(|x| x.abs())
        .chain(e.iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let fac = TridiagShifted::factor(d, e, lambda + 1e-12 * scale);
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i * i + 1) as f64).sin())
        .collect();
    for _ in 0..3 {
        x = fac.solve(&x);
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            // restart from a shifted seed; growth overflowed
            x = (0..n).map(|i| ((i + 1) as f64).cos()).collect();
            continue;
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    x
}

/// Sector information for an operator. Tridiagonal operators use an O(M)
/// per-angle path (Sturm bisection plus tridiagonal inverse iteration);
/// anything wider falls back to the dense boundary routine.
pub fn sector_of_operator(op: &SectorialOperator, n_angles: usize) -> Result<SectorInfo> {
    if op.lower_bandwidth() > 1 || op.upper_bandwidth() > 1 {
        return sector_of_matrix(&op.to_dense(), n_angles);
    }
    if n_angles < 8 {
        return Err(Error::InvalidRequest(
            "need at least 8 rotation angles".into(),
        ));
    }
    let n = op.dim();
    let diag: Vec<f64> = (0..n).map(|i| op.get(i, i)).collect();
    let sub: Vec<f64> = (0..n.saturating_sub(1)).map(|i| op.get(i + 1, i)).collect();
    let sup: Vec<f64> = (0..n.saturating_sub(1)).map(|i| op.get(i, i + 1)).collect();

    let mut points = Vec::with_capacity(n_angles);
    for a_idx in 0..n_angles {
        let alpha = 2.0 * std::f64::consts::PI * a_idx as f64 / n_angles as f64;
        let rot = Complex64::from_polar(1.0, alpha);
        // Hermitian part of e^{i alpha} A stays tridiagonal:
        // diagonal cos(alpha) a_i, subdiagonal (e^{ia} sub + conj(e^{ia}) sup)/2.
        let d: Vec<f64> = diag.iter().map(|&x| alpha.cos() * x).collect();
        let w: Vec<Complex64> = sub
            .iter()
            .zip(sup.iter())
            .map(|(&s, &t)| (rot * s + rot.conj() * t) * 0.5)
            .collect();
        let e: Vec<f64> = w.iter().map(|z| z.norm()).collect();
        let (_, lambda_max) = tridiagonal_eigen_extremes(&d, &e);
        let xr = tridiag_eigvec(&d, &e, lambda_max);
        // Undo the phase similarity that made the tridiagonal real.
        let mut phases = Vec::with_capacity(n);
        let mut cur = c64(1.0);
        phases.push(cur);
        for i in 0..n - 1 {
            if e[i] > 0.0 {
                cur *= w[i] / e[i];
            }
            phases.push(cur);
        }
        let x: Vec<Complex64> = xr.iter().zip(phases.iter()).map(|(&r, &p)| p * r).collect();
        let xre: Vec<f64> = x.iter().map(|z| z.re).collect();
        let xim: Vec<f64> = x.iter().map(|z| z.im).collect();
        let are = op.apply(&xre);
        let aim = op.apply(&xim);
        let mut p = c64(0.0);
        for i in 0..n {
            p += x[i].conj() * Complex64::new(are[i], aim[i]);
        }
        let nrm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        points.push(p / nrm2);
    }
    let theta = sector_semiangle(&points)?;
    let radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    Ok(SectorInfo {
        theta,
        radius,
        fov_points: points,
    })
}

/// Empirical containment check: samples the boundary of F(Z) for
/// Z = (I - delta A)^{-1} and verifies every point maps back into S_theta
/// under the inverse transform lambda = (1 - 1/w)/delta, with 1e-8 slack on
/// the angle.
pub fn verify_fz_in_gtheta(
    a: &DenseMatrix,
    delta: f64,
    theta: f64,
    n_samples: usize,
) -> Result<bool> {
    if a.rows() > 200 {
        return Err(Error::NotSupported(
            "containment check capped at dimension 200".into(),
        ));
    }
    let n = a.rows();
    let shifted = DenseMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c64(id) - c64(delta) * a[(i, j)]
    });
    let z = lu_solve(&shifted, &DenseMatrix::identity(n))?;
    let pts = field_of_values_boundary(&z, n_samples)?;
    for w in pts {
        if w.norm() == 0.0 {
            return Ok(false);
        }
        let lambda = (c64(1.0) - w.inv()) / delta;
        if lambda.re >= 0.0 {
            return Ok(false);
        }
        if lambda.im.abs().atan2(-lambda.re) > theta + 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}
