//! Householder QR for tall column-major matrices.
//!
//! Reflections are stored in place: after decomposition, entries above the
//! diagonal of column `k` hold `R[.., k]`, entries from the diagonal down
//! hold the Householder vector `v_k`, and the diagonal of `R` is kept apart.

/// Column whose remaining norm after projecting out the previous columns is
/// below this fraction of its original norm is treated as dependent.
pub(crate) const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
pub(crate) struct Dependent {
    pub column: usize,
    /// Coefficients of the dependent column on the preceding columns.
    pub combination: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct HouseholderQr {
    work: Vec<Vec<f64>>,
    r_diag: Vec<f64>,
    /// `v_k' v_k` for each reflection.
    v_norm_sq: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl HouseholderQr {
    pub fn decompose(columns: &[&[f64]]) -> Result<Self, Dependent> {
        let p = columns.len();
        let mut work: Vec<Vec<f64>> = columns.iter().map(|c| c.to_vec()).collect();
        let mut r_diag = vec![0.0; p];
        let mut v_norm_sq = vec![0.0; p];
        let original_norms: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();

        for k in 0..p {
            let norm = dot(&work[k][k..], &work[k][k..]).sqrt();
            if norm <= RANK_TOLERANCE * original_norms[k] || norm == 0.0 {
                let rhs = work[k][..k].to_vec();
                let partial = HouseholderQr {
                    work,
                    r_diag,
                    v_norm_sq,
                };
                return Err(Dependent {
                    column: k,
                    combination: partial.back_substitute(&rhs),
                });
            }
            let (done, rest) = work.split_at_mut(k + 1);
            let col = &mut done[k];
            let x = &mut col[k..];
            let alpha = if x[0] > 0.0 { -norm } else { norm };
            let vtv = 2.0 * (norm * norm - alpha * x[0]);
            x[0] -= alpha;
            r_diag[k] = alpha;
            v_norm_sq[k] = vtv;
            let v = &col[k..];
            for other in rest.iter_mut() {
                let target = &mut other[k..];
                let scale = 2.0 * dot(v, target) / vtv;
                for (t, vi) in target.iter_mut().zip(v) {
                    *t -= scale * vi;
                }
            }
        }
        Ok(HouseholderQr {
            work,
            r_diag,
            v_norm_sq,
        })
    }

    pub fn ncols(&self) -> usize {
        self.r_diag.len()
    }

    /// Computes `Q' y`.
    pub fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for k in 0..self.ncols() {
            let v = &self.work[k][k..];
            let target = &mut out[k..];
            let scale = 2.0 * dot(v, target) / self.v_norm_sq[k];
            for (t, vi) in target.iter_mut().zip(v) {
                *t -= scale * vi;
            }
        }
        out
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.r_diag[i]
        } else {
            self.work[j][i]
        }
    }

    /// Solves `R[..m, ..m] z = rhs` where `m = rhs.len()`.
    pub fn back_substitute(&self, rhs: &[f64]) -> Vec<f64> {
        let m = rhs.len();
        let mut z = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = rhs[i];
            for (j, zj) in z.iter().enumerate().take(m).skip(i + 1) {
                acc -= self.r(i, j) * zj;
            }
            z[i] = acc / self.r(i, i);
        }
        z
    }

    /// Least-squares coefficients for `y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let qty = self.apply_qt(y);
        self.back_substitute(&qty[..self.ncols()])
    }

    /// Diagonal of `(R'R)^{-1}`, i.e. of `(X'X)^{-1}`.
    pub fn unscaled_variances(&self) -> Vec<f64> {
        let p = self.ncols();
        // Row j of R^{-1}, built column by column via back substitution.
        let mut rinv = vec![vec![0.0; p]; p];
        for col in 0..p {
            let mut e = vec![0.0; col + 1];
            e[col] = 1.0;
            let z = self.back_substitute(&e);
            for (row, zr) in z.into_iter().enumerate() {
                rinv[row][col] = zr;
            }
        }
        rinv.iter().map(|row| dot(row, row)).collect()
    }
}
