//! Self-contained dense kernels for small complex matrices.
//!
//! Everything the projected (Hessenberg) problems need: LU solves with
//! partial pivoting, the scaling-and-squaring matrix exponential, shifted-QR
//! eigenvalues of Hessenberg matrices and extreme eigenvalues of Hermitian
//! matrices. Real matrices are stored with zero imaginary parts; the field of
//! values machinery and the Ritz values are intrinsically complex, so a single
//! complex path serves both.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix. Immutable in spirit: the solvers never
/// modify their inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting NaN/Inf entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidRequest(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        // ikj ordering keeps the inner loop on contiguous rows.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &r) in orow.iter_mut().zip(rrow.iter()) {
                    *o += aik * r;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x.iter()).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| a + b)
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| a - b)
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: Complex64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum column sum of moduli (the induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self[(i, j)].norm()).sum();
            best = best.max(s);
        }
        best
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry, max |a_ij - conj(a_ji)|.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl LuFactors {
    /// Factors a square matrix. Fails with `SingularMatrix` when a pivot
    /// falls below 1e-14 * max|A|; shifted matrices H - lambda*I can be
    /// near-singular by construction, so the guard is relative.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(
                "LU requires a square matrix".into(),
            ));
        }
        let n = a.rows;
        let scale = a.norm_max();
        let tol = 1e-14 * scale;
        let mut lu = a.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // Partial pivoting on column k.
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tol {
                return Err(Error::SingularMatrix(format!(
                    "pivot {:.3e} at column {} below threshold {:.3e}",
                    best, k, tol
                )));
            }
            if p != k {
                piv.swap(k, p);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m.re != 0.0 || m.im != 0.0 {
                    for j in k + 1..n {
                        let t = lu[k * n + j];
                        lu[i * n + j] -= m * t;
                    }
                }
            }
        }
        Ok(Self { n, lu, piv })
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let t = x[j];
                x[i] -= l * t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let t = x[j];
                x[i] -= u * t;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn solve_mat(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows, self.n);
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col: Vec<Complex64> = (0..b.rows).map(|i| b[(i, j)]).collect();
            let x = self.solve_vec(&col);
            for i in 0..b.rows {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Solves A X = B by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but B has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    Ok(LuFactors::new(a)?.solve_mat(b))
}

// Denominator/numerator coefficients of the diagonal [13/13] Pade
// approximant to exp.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const PADE13_THETA: f64 = 5.371920351148152;
const MAX_SQUARINGS: usize = 60;

/// Matrix exponential by scaling and squaring with the order-13 diagonal
/// Pade approximant.
pub fn expm(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "expm requires a square matrix".into(),
        ));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let norm = a.norm_one();
    let mut s = 0usize;
    if norm > PADE13_THETA {
        s = ((norm / PADE13_THETA).log2().ceil()) as usize;
    }
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow {
            norm: norm / (2f64).powi(MAX_SQUARINGS as i32),
            squarings: MAX_SQUARINGS,
        });
    }
    let a = a.scale(Complex64::new((0.5f64).powi(s as i32), 0.0));

    let id = DenseMatrix::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);
    let b = |i: usize| Complex64::new(PADE13[i], 0.0);

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let inner_u = a6.scale(b(13)).add(&a4.scale(b(11))).add(&a2.scale(b(9)));
    let u = a.mul(
        &a6.mul(&inner_u)
            .add(&a6.scale(b(7)))
            .add(&a4.scale(b(5)))
            .add(&a2.scale(b(3)))
            .add(&id.scale(b(1))),
    );
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let inner_v = a6.scale(b(12)).add(&a4.scale(b(10))).add(&a2.scale(b(8)));
    let v = a6
        .mul(&inner_v)
        .add(&a6.scale(b(6)))
        .add(&a4.scale(b(4)))
        .add(&a2.scale(b(2)))
        .add(&id.scale(b(0)));

    // exp ~ (V - U)^{-1} (V + U)
    let mut x = lu_solve(&v.sub(&u), &v.add(&u))?;
    for _ in 0..s {
        x = x.mul(&x);
    }
    Ok(x)
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = (an * an + bn * bn).sqrt();
    let alpha = a / an;
    (an / r, alpha * b.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix by the shifted QR iteration
/// with Wilkinson shifts and deflation.
pub fn hessenberg_eigenvalues(h: &DenseMatrix) -> Result<Vec<Complex64>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues require a square matrix".into(),
        ));
    }
    let n = h.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m = h.clone();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut sweeps = 0usize;
    let max_sweeps = 100 * n;
    let scale = h.norm_max().max(f64::MIN_POSITIVE);
    let mut stagnant = 0usize;

    while hi > 0 {
        // Locate the start of the trailing unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let sub = m[(lo, lo - 1)].norm();
            let local = m[(lo - 1, lo - 1)].norm() + m[(lo, lo)].norm();
            let thresh = f64::EPSILON * if local > 0.0 { local } else { scale };
            if sub <= thresh {
                m[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eigs.push(m[(lo, lo)]);
            hi -= 1;
            stagnant = 0;
            continue;
        }
        if lo == hi - 2 {
            let (a, b) = (m[(lo, lo)], m[(lo, lo + 1)]);
            let (c, d) = (m[(lo + 1, lo)], m[(lo + 1, lo + 1)]);
            let tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5).powi(2) + b * c;
            let sq = disc.sqrt();
            eigs.push(tr + sq);
            eigs.push(tr - sq);
            hi -= 2;
            stagnant = 0;
            continue;
        }

        sweeps += 1;
        stagnant += 1;
        if sweeps > max_sweeps {
            return Err(Error::NoConvergence(max_sweeps));
        }

        // Wilkinson shift from the trailing 2x2; exceptional shift when the
        // block refuses to deflate.
        let p = hi - 1;
        let shift = if stagnant % 12 == 0 {
            m[(p, p)] + Complex64::new(1.5 * m[(p, p - 1)].norm(), 0.0)
        } else {
            let (a, b) = (m[(p - 1, p - 1)], m[(p - 1, p)]);
            let (c, d) = (m[(p, p - 1)], m[(p, p)]);
            let tr = (a + d) * 0.5;
            let sq = (((a - d) * 0.5).powi(2) + b * c).sqrt();
            let l1 = tr + sq;
            let l2 = tr - sq;
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        // Explicit shifted QR step on the active block via Givens rotations.
        for i in lo..hi {
            m[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo - 1);
        for i in lo..hi - 1 {
            let (c, s) = givens(m[(i, i)], m[(i + 1, i)]);
            for j in i..hi {
                let t0 = m[(i, j)];
                let t1 = m[(i + 1, j)];
                m[(i, j)] = c * t0 + s * t1;
                m[(i + 1, j)] = -s.conj() * t0 + c * t1;
            }
            rots.push((c, s));
        }
        for (idx, (c, s)) in rots.into_iter().enumerate() {
            let i = lo + idx;
            let top = if i + 2 <= hi { (i + 2).min(hi) } else { hi };
            for r in lo..top {
                let t0 = m[(r, i)];
                let t1 = m[(r, i + 1)];
                m[(r, i)] = c * t0 + s.conj() * t1;
                m[(r, i + 1)] = -s * t0 + c * t1;
            }
        }
        for i in lo..hi {
            m[(i, i)] += shift;
        }
    }
    Ok(eigs)
}

/// Householder reduction to upper Hessenberg form (similarity transform,
/// transform not accumulated).
pub fn hessenberg_form(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut m = a.clone();
    for k in 0..n.saturating_sub(2) {
        // Build the reflector annihilating column k below the subdiagonal.
        let mut x: Vec<Complex64> = (k + 1..n).map(|i| m[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // m <- P m with P = I - tau v v^H acting on rows k+1..n
        for j in 0..n {
            let dot: Complex64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v.conj() * m[(k + 1 + i, j)])
                .sum();
            let f = dot * tau;
            for (i, &v) in x.iter().enumerate() {
                m[(k + 1 + i, j)] -= v * f;
            }
        }
        // m <- m P acting on columns k+1..n
        for r in 0..n {
            let dot: Complex64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| m[(r, k + 1 + i)] * v)
                .sum();
            let f = dot * tau;
            for (i, &v) in x.iter().enumerate() {
                m[(r, k + 1 + i)] -= f * v.conj();
            }
        }
    }
    // Clean the annihilated entries.
    for j in 0..n {
        for i in j + 2..n {
            m[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    m
}

/// Reduces a Hermitian matrix to a real symmetric tridiagonal (d, e) pair,
/// where `e` holds the subdiagonal magnitudes.
pub fn hermitian_tridiagonal(a: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let scale = a.norm_fro();
    let asym = a.hermitian_asymmetry();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if asym > tol {
        return Err(Error::NotHermitian { asym, tol });
    }
    let t = hessenberg_form(a);
    let n = a.rows();
    let d: Vec<f64> = (0..n).map(|i| t[(i, i)].re).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| t[(i + 1, i)].norm())
        .collect();
    Ok((d, e))
}

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly less
/// than x, by the classic Sturm sequence.
pub(crate) fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let ei = e[i - 1];
        if q == 0.0 {
            q = f64::EPSILON * (ei.abs() + f64::MIN_POSITIVE);
        }
        q = d[i] - x - ei * ei / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by bisection.
pub(crate) fn tridiagonal_eigen_extremes(d: &[f64], e: &[f64]) -> (f64, f64) {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < n - 1 { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    if n == 1 {
        return (d[0], d[0]);
    }
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let lo = lo - 1e-12 * width;
    let hi = hi + 1e-12 * width;
    let bisect = |target: usize| -> f64 {
        // Smallest x with count(x) >= target.
        let mut a = lo;
        let mut b = hi;
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if sturm_count(d, e, mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(1), bisect(n))
}

/// Extreme eigenvalues (min, max) of a Hermitian matrix via tridiagonal
/// reduction and Sturm bisection. Errors with `NotHermitian` when the
/// symmetry check fails at 1e-12 relative.
pub fn hermitian_eigen_extremes(a: &DenseMatrix) -> Result<(f64, f64)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues require a square matrix".into(),
        ));
    }
    if a.rows() == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let (d, e) = hermitian_tridiagonal(a)?;
    Ok(tridiagonal_eigen_extremes(&d, &e))
}
