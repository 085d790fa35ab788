//! Arnoldi process for Z = (I - delta*L)^{-1}.
//!
//! Builds Z V_m = V_m H_m + h_{m+1,m} v_{m+1} e_m^T one column at a time with
//! modified Gram-Schmidt plus one full reorthogonalization pass. The running
//! subdiagonal product prod h_{i+1,i} equals ||q_m(Z) v|| for the
//! characteristic polynomial q_m of H_m and feeds every error bound.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::ShiftedFactorization;
use crate::smalldense::DenseMatrix;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Krylov decomposition state. Extension is single-writer; snapshots taken
/// through [`basis`](Self::basis) and [`hessenberg`](Self::hessenberg) are
/// plain values and safe to share.
#[derive(Debug, Clone)]
pub struct ArnoldiDecomposition {
    dim: usize,
    /// Orthonormal basis v_1 .. v_{m+1} (the last vector is absent after a
    /// breakdown).
    basis: Vec<Vec<f64>>,
    /// Column j (0-based) stores h_{1,j+1} .. h_{j+2,j+1}.
    h_cols: Vec<Vec<f64>>,
    m: usize,
    breakdown: bool,
}

impl ArnoldiDecomposition {
    /// Starts a decomposition from a unit vector. Vectors within 1e-6 of unit
    /// norm are renormalized silently; anything else is rejected.
    pub fn init(fact: &ShiftedFactorization, v: &[f64]) -> Result<Self> {
        if v.len() != fact.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match operator dimension {}",
                v.len(),
                fact.dim()
            )));
        }
        let n = norm(v);
        if n < 1e-300 {
            return Err(Error::ZeroVector);
        }
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidRequest(format!(
                "starting vector must be unit norm (got {n})"
            )));
        }
        let v1: Vec<f64> = v.iter().map(|x| x / n).collect();
        Ok(Self {
            dim: fact.dim(),
            basis: vec![v1],
            h_cols: Vec::new(),
            m: 0,
            breakdown: false,
        })
    }

    /// Current Krylov dimension m.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    /// Basis vectors v_1 .. v_m (excluding the trailing residual direction).
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis[..self.m.min(self.basis.len())]
    }

    /// The residual direction v_{m+1}, absent after a breakdown.
    pub fn next_basis_vector(&self) -> Option<&Vec<f64>> {
        self.basis.get(self.m)
    }

    /// h_{i,j} with 1-based indices, i <= j+1.
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h_cols[j - 1].get(i - 1).copied().unwrap_or(0.0)
    }

    /// Subdiagonal entry h_{j+1,j}; zero at and after breakdown.
    pub fn subdiag(&self, j: usize) -> f64 {
        self.h_cols[j - 1][j]
    }

    /// The leading m-by-m Hessenberg block H_m.
    pub fn hessenberg(&self, m: usize) -> DenseMatrix {
        assert!(m >= 1 && m <= self.m);
        DenseMatrix::from_fn(m, m, |i, j| {
            if i > j + 1 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(self.h_cols[j].get(i).copied().unwrap_or(0.0), 0.0)
            }
        })
    }

    /// Extends the decomposition by one column of H via modified Gram-Schmidt
    /// with one full reorthogonalization pass. Sets the breakdown flag when
    /// h_{m+1,m} <= 1e-14 ||Z v_m|| (happy breakdown: exact thereafter).
    pub fn extend(&mut self, fact: &ShiftedFactorization) -> Result<()> {
        if self.breakdown {
            return Err(Error::InvalidRequest(
                "cannot extend after breakdown: the approximation is already exact".into(),
            ));
        }
        if self.m == self.dim {
            return Err(Error::AtFullDimension(self.dim));
        }
        let vm = &self.basis[self.m];
        let mut w = fact.apply_z(vm);
        let wnorm0 = norm(&w);

        let cols = self.m + 1;
        let mut hcol = vec![0.0f64; cols + 1];
        for (i, vi) in self.basis.iter().enumerate().take(cols) {
            let c = dot(vi, &w);
            hcol[i] = c;
            for (wj, vj) in w.iter_mut().zip(vi.iter()) {
                *wj -= c * vj;
            }
        }
        // Full second pass: twice is enough to restore orthogonality.
        for (i, vi) in self.basis.iter().enumerate().take(cols) {
            let c = dot(vi, &w);
            hcol[i] += c;
            for (wj, vj) in w.iter_mut().zip(vi.iter()) {
                *wj -= c * vj;
            }
        }
        let hnext = norm(&w);
        self.m += 1;
        if hnext <= 1e-14 * wnorm0 {
            hcol[cols] = 0.0;
            self.breakdown = true;
            self.h_cols.push(hcol);
            return Ok(());
        }
        hcol[cols] = hnext;
        self.h_cols.push(hcol);
        for x in w.iter_mut() {
            *x /= hnext;
        }
        self.basis.push(w);
        Ok(())
    }

    /// prod_{i=1}^{m} h_{i+1,i}, which equals ||q_m(Z) v|| for the monic
    /// characteristic polynomial q_m of H_m.
    pub fn subdiagonal_product(&self, m: usize) -> f64 {
        assert!(m <= self.m, "product requested beyond current dimension");
        (1..=m).map(|j| self.subdiag(j)).product()
    }

    /// y = V_m c for a coefficient vector on the projected problem.
    pub fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        assert!(coeffs.len() <= self.basis.len());
        let mut y = vec![0.0f64; self.dim];
        for (c, v) in coeffs.iter().zip(self.basis.iter()) {
            if *c != 0.0 {
                for (yi, vi) in y.iter_mut().zip(v.iter()) {
                    *yi += c * vi;
                }
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SectorialOperator;
    use crate::smalldense::{hessenberg_eigenvalues, lu_solve};

    fn dense_z(op: &SectorialOperator, delta: f64) -> DenseMatrix {
        let n = op.dim();
        let shifted = DenseMatrix::from_fn(n, n, |i, j| {
            let v = if i == j { 1.0 } else { 0.0 } - delta * op.get(i, j);
            Complex64::new(v, 0.0)
        });
        lu_solve(&shifted, &DenseMatrix::identity(n)).unwrap()
    }

    fn unit(n: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(f).collect();
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    #[test]
    fn init_keeps_e1() {
        let op = SectorialOperator::advection_diffusion(5, 0.0);
        let f = op.factor_shift(0.1).unwrap();
        let mut e1 = vec![0.0; 5];
        e1[0] = 1.0;
        let dec = ArnoldiDecomposition::init(&f, &e1).unwrap();
        assert_eq!(dec.m(), 0);
        assert_eq!(dec.basis.len(), 1);
        assert_eq!(dec.basis[0], e1);
    }

    #[test]
    fn init_renormalizes_near_unit() {
        let op = SectorialOperator::advection_diffusion(4, 0.0);
        let f = op.factor_shift(0.1).unwrap();
        let v = vec![1.0 + 1e-8, 0.0, 0.0, 0.0];
        let dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        assert!((norm(&dec.basis[0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn init_rejects_zero_and_far_from_unit() {
        let op = SectorialOperator::advection_diffusion(4, 0.0);
        let f = op.factor_shift(0.1).unwrap();
        assert!(matches!(
            ArnoldiDecomposition::init(&f, &[0.0; 4]),
            Err(Error::ZeroVector)
        ));
        assert!(ArnoldiDecomposition::init(&f, &[0.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_z_breaks_down_immediately() {
        // Zero operator: Z = I for any delta, so K_1 is invariant.
        let op = SectorialOperator::from_triplets(6, &[]).unwrap();
        let f = op.factor_shift(0.5).unwrap();
        let v = unit(6, |i| (i as f64 + 1.0).sqrt());
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        dec.extend(&f).unwrap();
        assert!(dec.breakdown());
        assert_eq!(dec.m(), 1);
        assert!((dec.h(1, 1) - 1.0).abs() < 1e-14);
        assert_eq!(dec.subdiagonal_product(1), 0.0);
        assert!(dec.extend(&f).is_err());
    }

    #[test]
    fn two_dimensional_invariant_subspace() {
        // Diagonal operator, v in the span of two eigenvectors.
        let entries: Vec<(usize, usize, f64)> = (0..5).map(|i| (i, i, -((i + 1) as f64))).collect();
        let op = SectorialOperator::from_triplets(5, &entries).unwrap();
        let f = op.factor_shift(0.3).unwrap();
        let s = 1.0 / (2.0f64).sqrt();
        let v = vec![s, s, 0.0, 0.0, 0.0];
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        dec.extend(&f).unwrap();
        assert!(!dec.breakdown());
        dec.extend(&f).unwrap();
        assert!(dec.breakdown());
        assert_eq!(dec.m(), 2);
    }

    #[test]
    fn decomposition_invariants_hold() {
        let m_dim = 30;
        let op = SectorialOperator::advection_diffusion(m_dim, 0.0);
        let delta = 0.01;
        let f = op.factor_shift(delta).unwrap();
        let z = dense_z(&op, delta);
        let znorm = z.norm_fro();
        let v = unit(m_dim, |_| 1.0);
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        for _ in 0..20 {
            dec.extend(&f).unwrap();
        }
        let m = dec.m();

        // Orthonormality of v_1..v_{m+1}.
        let all = &dec.basis;
        let mut worst = 0.0f64;
        for i in 0..all.len() {
            for j in 0..all.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&all[i], &all[j]) - want).abs());
            }
        }
        assert!(worst <= 1e-12, "orthogonality defect {worst:.3e}");

        // Arnoldi relation Z V_m = V_m H_m + h_{m+1,m} v_{m+1} e_m^T, columnwise:
        // Z v_j = sum_{i=1}^{j+1} h_{i,j} v_i.
        for j in 1..=m {
            let zv = f.apply_z(&dec.basis[j - 1]);
            let mut recon = vec![0.0f64; m_dim];
            for i in 1..=j + 1 {
                let hij = dec.h(i, j);
                for (r, b) in recon.iter_mut().zip(dec.basis[i - 1].iter()) {
                    *r += hij * b;
                }
            }
            let err: f64 = zv
                .iter()
                .zip(recon.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * znorm, "column {j}: {err:.3e}");
        }
    }

    #[test]
    fn krylov_space_matches_power_basis() {
        // Subspace identity against explicitly orthonormalized powers of Z.
        // delta is chosen so the spectrum of Z is neither clustered at 1 nor
        // spread over decades; both extremes wreck the power-basis
        // conditioning that this oracle needs.
        let m_dim = 30;
        let op = SectorialOperator::advection_diffusion(m_dim, 2.0);
        let delta = 1e-3;
        let f = op.factor_shift(delta).unwrap();
        let v = unit(m_dim, |i| 1.0 + (i as f64 * 0.4).sin());
        let m = 8;
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        for _ in 0..m {
            dec.extend(&f).unwrap();
        }

        let mut powers: Vec<Vec<f64>> = Vec::new();
        let mut cur = v.clone();
        for _ in 0..m {
            powers.push(cur.clone());
            cur = f.apply_z(&cur);
        }
        // Orthonormalize the power basis (two MGS passes).
        let mut q: Vec<Vec<f64>> = Vec::new();
        for mut p in powers {
            for _ in 0..2 {
                for e in &q {
                    let c = dot(e, &p);
                    for (pi, ei) in p.iter_mut().zip(e.iter()) {
                        *pi -= c * ei;
                    }
                }
            }
            let s = norm(&p);
            assert!(s > 1e-10, "power basis degenerated");
            p.iter_mut().for_each(|x| *x /= s);
            q.push(p);
        }

        // Compare orthogonal projectors entrywise.
        let mut worst = 0.0f64;
        for a in 0..m_dim {
            for b in 0..m_dim {
                let pv: f64 = dec.basis()[..m].iter().map(|col| col[a] * col[b]).sum();
                let pq: f64 = q.iter().map(|col| col[a] * col[b]).sum();
                worst = worst.max((pv - pq).abs());
            }
        }
        assert!(worst <= 1e-8, "projector mismatch {worst:.3e}");
    }

    #[test]
    fn exactness_at_breakdown() {
        // Breakdown at m = 3; afterwards polynomials in Z are reproduced
        // exactly by the projected problem.
        let entries: Vec<(usize, usize, f64)> =
            (0..6).map(|i| (i, i, -(1.0 + 0.7 * i as f64))).collect();
        let op = SectorialOperator::from_triplets(6, &entries).unwrap();
        let delta = 0.4;
        let f = op.factor_shift(delta).unwrap();
        let v = unit(6, |i| if i < 3 { 1.0 } else { 0.0 });
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        while !dec.breakdown() {
            dec.extend(&f).unwrap();
        }
        let m = dec.m();
        assert_eq!(m, 3);

        let coeffs = [0.3, -1.1, 0.25, 0.6];
        // p(Z) v directly.
        let mut pzv = [0.0f64; 6];
        let mut zk = v.clone();
        for (d, &c) in coeffs.iter().enumerate() {
            for (p, z) in pzv.iter_mut().zip(zk.iter()) {
                *p += c * z;
            }
            if d + 1 < coeffs.len() {
                zk = f.apply_z(&zk);
            }
        }
        // V_m p(H_m) e_1 through dense powers of H_m.
        let h = dec.hessenberg(m);
        let mut acc = DenseMatrix::zeros(m, m);
        let mut hp = DenseMatrix::identity(m);
        for &c in coeffs.iter() {
            acc = acc.add(&hp.scale(Complex64::new(c, 0.0)));
            hp = hp.mul(&h);
        }
        let pe1: Vec<f64> = (0..m).map(|i| acc[(i, 0)].re).collect();
        let via_basis = dec.expand(&pe1);
        let err: f64 = pzv
            .iter()
            .zip(via_basis.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10, "breakdown exactness violated: {err:.3e}");
    }

    #[test]
    fn subdiagonal_product_equals_char_poly_norm() {
        // prod h_{i+1,i} = ||q_m(Z) v|| with q_m evaluated in product form at
        // the Ritz values.
        let m_dim = 20;
        let op = SectorialOperator::advection_diffusion(m_dim, 3.0);
        let delta = 0.02;
        let f = op.factor_shift(delta).unwrap();
        let z = dense_z(&op, delta);
        let v = unit(m_dim, |i| (0.2 * i as f64).cos() + 1.2);
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        for _ in 0..8 {
            dec.extend(&f).unwrap();
        }
        for m in 1..=8usize {
            let ritz = hessenberg_eigenvalues(&dec.hessenberg(m)).unwrap();
            let mut w: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            for lam in &ritz {
                let zw = z.matvec(&w);
                w = zw.iter().zip(w.iter()).map(|(a, b)| a - lam * b).collect();
            }
            let qnorm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let prod = dec.subdiagonal_product(m);
            assert!(
                (qnorm - prod).abs() <= 1e-8 * prod.max(qnorm),
                "m={m}: {qnorm:.6e} vs {prod:.6e}"
            );
        }
    }

    #[test]
    fn product_monotone_for_contraction() {
        // ||Z|| <= 1 for the symmetric operator, so every h_{i+1,i} <= 1 and
        // the running product cannot increase.
        let op = SectorialOperator::advection_diffusion(25, 0.0);
        let f = op.factor_shift(0.05).unwrap();
        let v = unit(25, |i| 1.0 + i as f64 * 0.01);
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        for _ in 0..12 {
            dec.extend(&f).unwrap();
        }
        let mut prev = f64::INFINITY;
        for m in 1..=12usize {
            let p = dec.subdiagonal_product(m);
            assert!(p <= prev * (1.0 + 1e-15));
            prev = p;
        }
    }

    #[test]
    fn full_dimension_errors_without_breakdown() {
        let entries: Vec<(usize, usize, f64)> = (0..3)
            .map(|i| (i, i, -(1.0 + i as f64)))
            .chain([(1usize, 0usize, 0.2), (2, 1, 0.1)])
            .collect();
        let op = SectorialOperator::from_triplets(3, &entries).unwrap();
        let f = op.factor_shift(0.5).unwrap();
        let v = unit(3, |i| 1.0 + i as f64);
        let mut dec = ArnoldiDecomposition::init(&f, &v).unwrap();
        let mut extended = 0;
        loop {
            match dec.extend(&f) {
                Ok(()) => {
                    extended += 1;
                    if dec.breakdown() {
                        break;
                    }
                }
                Err(Error::AtFullDimension(3)) => break,
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
        assert!(extended <= 3);
    }
}
