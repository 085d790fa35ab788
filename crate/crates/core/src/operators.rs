//! Sectorial operator abstraction: banded storage, matrix-vector products,
//! and the shifted factorization (I - delta*L) that drives the rational
//! Krylov iteration.
//!
//! The built-in model operator is the 1D advection-diffusion discretization
//! u'' - c u' on a uniform Dirichlet mesh, whose field of values sits in the
//! left half-plane. General operators are accepted as coordinate triplets and
//! routed through the same banded path as long as the bandwidth stays small;
//! an inner iterative solver is deliberately out of scope.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::smalldense::DenseMatrix;

const MAX_BANDWIDTH: usize = 32;

/// Banded real operator L with apply and shifted-solve capability.
#[derive(Debug, Clone)]
pub struct SectorialOperator {
    dim: usize,
    kl: usize,
    ku: usize,
    /// Entry (i, j) lives at bands[(ku + i - j) * dim + j] for -ku <= i-j <= kl.
    bands: Vec<f64>,
}

impl SectorialOperator {
    /// Central-difference discretization of u'' - c u' on (0,1) with
    /// homogeneous Dirichlet conditions and mesh width 1/(m+1).
    ///
    /// Stencil: sub = 1/dx^2 + c/(2 dx), diag = -2/dx^2,
    /// super = 1/dx^2 - c/(2 dx). The sign puts the field of values in the
    /// left half-plane, so Z = (I - delta*L)^{-1} has spectrum in (0, 1).
    pub fn advection_diffusion(m: usize, c: f64) -> Self {
        assert!(m >= 1, "dimension must be at least 1");
        let dx = 1.0 / (m as f64 + 1.0);
        let diff = 1.0 / (dx * dx);
        let adv = c / (2.0 * dx);
        let kl = 1.min(m - 1);
        let ku = kl;
        let mut op = Self {
            dim: m,
            kl,
            ku,
            bands: vec![0.0; (kl + ku + 1) * m],
        };
        for i in 0..m {
            op.set(i, i, -2.0 * diff);
            if i + 1 < m {
                op.set(i + 1, i, diff + adv);
                op.set(i, i + 1, diff - adv);
            }
        }
        op
    }

    /// Builds an operator from 0-based coordinate triplets; duplicate entries
    /// accumulate. Bandwidth above 32 is rejected (`NotSupported`).
    pub fn from_triplets(dim: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidRequest(
                "operator dimension must be positive".into(),
            ));
        }
        let mut kl = 0usize;
        let mut ku = 0usize;
        for &(i, j, _) in entries {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {dim}x{dim} operator"
                )));
            }
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        if kl.max(ku) > MAX_BANDWIDTH {
            return Err(Error::NotSupported(format!(
                "bandwidth {} exceeds the banded-solver limit {}",
                kl.max(ku),
                MAX_BANDWIDTH
            )));
        }
        let mut op = Self {
            dim,
            kl,
            ku,
            bands: vec![0.0; (kl + ku + 1) * dim],
        };
        for &(i, j, v) in entries {
            let idx = (op.ku + i - j) * dim + j;
            op.bands[idx] += v;
        }
        if op.bands.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRequest(
                "operator entries must be finite".into(),
            ));
        }
        Ok(op)
    }

    /// Parses the coordinate text format: a header line `M nnz` followed by
    /// nnz lines `row col value` with 1-based indices.
    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let mut dim = 0usize;
        let mut expected = 0usize;
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut seen_header = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !seen_header {
                if fields.len() != 2 {
                    return Err(Error::Config {
                        line: lineno + 1,
                        message: "header must be 'M nnz'".into(),
                    });
                }
                dim = fields[0].parse().map_err(|_| Error::Config {
                    line: lineno + 1,
                    message: format!("bad dimension '{}'", fields[0]),
                })?;
                expected = fields[1].parse().map_err(|_| Error::Config {
                    line: lineno + 1,
                    message: format!("bad entry count '{}'", fields[1]),
                })?;
                seen_header = true;
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::Config {
                    line: lineno + 1,
                    message: "entry must be 'row col value'".into(),
                });
            }
            let i: usize = fields[0].parse().map_err(|_| Error::Config {
                line: lineno + 1,
                message: format!("bad row index '{}'", fields[0]),
            })?;
            let j: usize = fields[1].parse().map_err(|_| Error::Config {
                line: lineno + 1,
                message: format!("bad column index '{}'", fields[1]),
            })?;
            let v: f64 = fields[2].parse().map_err(|_| Error::Config {
                line: lineno + 1,
                message: format!("bad value '{}'", fields[2]),
            })?;
            if i == 0 || j == 0 || i > dim || j > dim {
                return Err(Error::Config {
                    line: lineno + 1,
                    message: format!("index ({i}, {j}) outside 1..={dim}"),
                });
            }
            triplets.push((i - 1, j - 1, v));
        }
        if !seen_header {
            return Err(Error::Config {
                line: 0,
                message: "missing 'M nnz' header".into(),
            });
        }
        if triplets.len() != expected {
            return Err(Error::Config {
                line: 0,
                message: format!(
                    "header declared {expected} entries, found {}",
                    triplets.len()
                ),
            });
        }
        Self::from_triplets(dim, &triplets)
    }

    pub fn from_coordinate_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_coordinate_text(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.bands[(self.ku + i - j) * self.dim + j] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku < j || j + self.kl < i {
            0.0
        } else {
            self.bands[(self.ku + i - j) * self.dim + j]
        }
    }

    /// y = L x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "operator/vector dimension mismatch");
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let jlo = i.saturating_sub(self.kl);
            let jhi = (i + self.ku).min(self.dim - 1);
            let mut acc = 0.0;
            for j in jlo..=jhi {
                acc += self.bands[(self.ku + i - j) * self.dim + j] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Largest absolute row sum (induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let jlo = i.saturating_sub(self.kl);
                let jhi = (i + self.ku).min(self.dim - 1);
                (jlo..=jhi)
                    .map(|j| self.bands[(self.ku + i - j) * self.dim + j].abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, self.dim, |i, j| {
            Complex64::new(self.get(i, j), 0.0)
        })
    }

    /// Factors I - delta*L once; the factorization is reusable across any
    /// number of right-hand sides, which is the whole point of the
    /// quasi-constant step-size strategy.
    pub fn factor_shift(&self, delta: f64) -> Result<ShiftedFactorization> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidRequest(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let n = self.dim;
        let kl = self.kl;
        let ku = self.ku;
        let kv = kl + ku; // upper bandwidth grows by kl under row pivoting
        let ldab = 2 * kl + ku + 1;
        let mut data = vec![0.0f64; ldab * n];
        let at = |i: usize, j: usize| (kl + ku + i) - j; // row in data, offset by column below
                                                         // Fill rows kl..ldab with I - delta*L.
        let mut maxabs = 0.0f64;
        for j in 0..n {
            let ilo = j.saturating_sub(ku);
            let ihi = (j + kl).min(n - 1);
            for i in ilo..=ihi {
                let mut v = -delta * self.get(i, j);
                if i == j {
                    v += 1.0;
                }
                data[at(i, j) * n + j] = v;
                maxabs = maxabs.max(v.abs());
            }
        }
        let tol = 1e-14 * maxabs;
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let ihi = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = data[at(j, j) * n + j].abs();
            for i in j + 1..=ihi {
                let v = data[at(i, j) * n + j].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tol {
                return Err(Error::SingularShift(delta));
            }
            piv[j] = p;
            let chi = (j + kv).min(n - 1);
            if p != j {
                for cc in j..=chi {
                    data.swap(at(j, cc) * n + cc, at(p, cc) * n + cc);
                }
            }
            let pivval = data[at(j, j) * n + j];
            for i in j + 1..=ihi {
                let m = data[at(i, j) * n + j] / pivval;
                data[at(i, j) * n + j] = m;
                if m != 0.0 {
                    for cc in j + 1..=chi {
                        data[at(i, cc) * n + cc] -= m * data[at(j, cc) * n + cc];
                    }
                }
            }
        }
        Ok(ShiftedFactorization {
            delta,
            dim: n,
            kl,
            kv,
            data,
            piv,
        })
    }
}

/// Banded LU factors of I - delta*L with partial pivoting. Read-only after
/// construction, so concurrent solves are safe.
#[derive(Debug, Clone)]
pub struct ShiftedFactorization {
    delta: f64,
    dim: usize,
    kl: usize,
    kv: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl ShiftedFactorization {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Applies Z = (I - delta*L)^{-1} to a vector.
    pub fn apply_z(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "factorization/vector dimension mismatch");
        let n = self.dim;
        // Row kv + i - j of the factor storage holds entry (i, j).
        let at = |i: usize, j: usize| (self.kv + i - j) * n + j;
        let mut y = x.to_vec();
        for j in 0..n {
            if self.piv[j] != j {
                y.swap(j, self.piv[j]);
            }
            let yj = y[j];
            if yj != 0.0 {
                let ihi = (j + self.kl).min(n - 1);
                for i in j + 1..=ihi {
                    y[i] -= self.data[at(i, j)] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            y[j] /= self.data[at(j, j)];
            let yj = y[j];
            if yj != 0.0 {
                let ilo = j.saturating_sub(self.kv);
                for i in ilo..j {
                    y[i] -= self.data[at(i, j)] * yj;
                }
            }
        }
        y
    }
}
