//! Dense linear algebra, generic over the scalar type.
//!
//! Only what the library needs, hand-rolled so the whole stack stays
//! generic: a row-major matrix, Cholesky factorization with a jitter
//! ladder for nearly-singular Gaussian covariance matrices, triangular
//! solves, a cyclic Jacobi eigensolver for symmetric matrices, and
//! Householder-QR least squares with a minimum-norm fallback for
//! rank-deficient designs.

use crate::real::{c, Real};
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<F = f64> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut F {
        &mut self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn trace(&self) -> F {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .sum()
    }

    /// Largest absolute asymmetry `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> F {
        let mut worst = F::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `A · x` for a square or rectangular matrix.
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, plus the diagonal jitter that was needed to obtain it.
#[derive(Clone, Debug)]
pub struct Cholesky<F = f64> {
    l: Mat<F>,
    jitter: F,
}

/// Relative jitter ladder tried when plain factorization fails; each
/// rung is multiplied by `trace/n` (the mean diagonal) before being
/// added to the diagonal.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

impl<F: Real> Cholesky<F> {
    /// Plain factorization; `Err(k)` reports the first failing pivot.
    pub fn new(a: &Mat<F>) -> std::result::Result<Self, usize> {
        Self::with_shift(a, F::zero()).map(|l| Cholesky {
            l,
            jitter: F::zero(),
        })
    }

    fn with_shift(a: &Mat<F>, shift: F) -> std::result::Result<Mat<F>, usize> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "Cholesky requires a square matrix");
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let sum = {
                    let (ri, rj) = (l.row(i), l.row(j));
                    dot(&ri[..j], &rj[..j])
                };
                if i == j {
                    let pivot = a.get(i, i) + shift - sum;
                    if pivot <= F::zero() || !pivot.is_finite() {
                        return Err(i);
                    }
                    l.set(i, j, pivot.sqrt());
                } else {
                    let v = (a.get(i, j) - sum) / l.get(j, j);
                    l.set(i, j, v);
                }
            }
        }
        Ok(l)
    }

    /// Factorization with the jitter ladder: plain first, then
    /// successively larger diagonal shifts scaled by the mean diagonal.
    pub fn new_jittered(a: &Mat<F>) -> Result<Self> {
        let scale = a.trace() / c::<F>(a.rows() as f64);
        let mut first_fail = None;
        match Self::with_shift(a, F::zero()) {
            Ok(l) => {
                return Ok(Cholesky {
                    l,
                    jitter: F::zero(),
                })
            }
            Err(k) => first_fail = first_fail.or(Some(k)),
        }
        for eps in JITTER_LADDER {
            let shift = c::<F>(eps) * scale;
            if let Ok(l) = Self::with_shift(a, shift) {
                return Ok(Cholesky { l, jitter: shift });
            }
        }
        Err(Error::Numerical(format!(
            "matrix not positive definite: pivot {} failed and the jitter ladder (up to {:e}×trace/n) did not recover it",
            first_fail.unwrap_or(0),
            JITTER_LADDER[JITTER_LADDER.len() - 1],
        )))
    }

    pub fn jitter(&self) -> F {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Lower-triangular matrix–vector product `L z` (used to color
    /// standard normal draws).
    pub fn lower_matvec(&self, z: &[F]) -> Vec<F> {
        let n = self.dim();
        assert_eq!(z.len(), n);
        (0..n)
            .map(|i| dot(&self.l.row(i)[..=i], &z[..=i]))
            .collect()
    }

    /// Solves `A x = b` via the two triangular solves.
    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        // Forward: L y = b.
        let mut y = vec![F::zero(); n];
        for i in 0..n {
            let s = dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = (b[i] - s) / self.l.get(i, i);
        }
        // Backward: Lᵀ x = y, saxpy form to keep row-major access.
        for i in (0..n).rev() {
            y[i] = y[i] / self.l.get(i, i);
            let xi = y[i];
            let row = self.l.row(i);
            for k in 0..i {
                y[k] = y[k] - row[k] * xi;
            }
        }
        y
    }
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi, values only),
/// returned in ascending order.
pub fn sym_eigenvalues<F: Real>(a: &Mat<F>) -> Vec<F> {
    let (vals, _) = jacobi(a, false);
    vals
}

/// Full symmetric eigendecomposition `A = V diag(λ) Vᵀ`; eigenvalues
/// ascending, eigenvectors in the columns of `V`.
pub fn sym_eigen<F: Real>(a: &Mat<F>) -> (Vec<F>, Mat<F>) {
    let (vals, vecs) = jacobi(a, true);
    (vals, vecs.expect("vectors requested"))
}

fn jacobi<F: Real>(a: &Mat<F>, want_vectors: bool) -> (Vec<F>, Option<Mat<F>>) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigendecomposition requires a square matrix");
    let mut m = a.clone();
    let mut v = if want_vectors {
        let mut id = Mat::zeros(n, n);
        for i in 0..n {
            id.set(i, i, F::one());
        }
        Some(id)
    } else {
        None
    };
    let norm: F = m.data.iter().map(|&x| x * x).sum::<F>().sqrt();
    let tol = c::<F>(1e-30).max(norm * c::<F>(1e-15));
    for _sweep in 0..64 {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m.get(i, j) * m.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * c::<F>(1e-2) / c::<F>((n * n) as f64) {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (c::<F>(2.0) * apq);
                let t = {
                    let s = if theta >= F::zero() {
                        F::one()
                    } else {
                        -F::one()
                    };
                    s / (theta.abs() + (F::one() + theta * theta).sqrt())
                };
                let cos = F::one() / (F::one() + t * t).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, cos * mkp - sin * mkq);
                    m.set(k, q, sin * mkp + cos * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, cos * mpk - sin * mqk);
                    m.set(q, k, sin * mpk + cos * mqk);
                }
                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm.get(k, p);
                        let vkq = vm.get(k, q);
                        vm.set(k, p, cos * vkp - sin * vkq);
                        vm.set(k, q, sin * vkp + cos * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<F> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("non-NaN eigenvalues"));
    let vals: Vec<F> = order.iter().map(|&i| diag[i]).collect();
    let vecs = v.map(|vm| {
        let mut sorted = Mat::zeros(n, n);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                sorted.set(i, newj, vm.get(i, oldj));
            }
        }
        sorted
    });
    (vals, vecs)
}

/// Ordinary least squares fit.
#[derive(Clone, Debug)]
pub struct LsFit<F = f64> {
    pub beta: Vec<F>,
    /// True when the design was numerically rank deficient and the
    /// minimum-norm solution was returned instead of the QR solution.
    pub rank_deficient: bool,
}

/// Least squares via Householder QR; on rank deficiency falls back to
/// the minimum-norm solution through the eigendecomposition of `XᵀX`.
pub fn lstsq<F: Real>(x: &Mat<F>, y: &[F]) -> Result<LsFit<F>> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::InvalidParams(format!(
            "design has {n} rows but response has {} entries",
            y.len()
        )));
    }
    if n < p {
        return Err(Error::InsufficientData(format!(
            "least squares needs at least as many rows ({n}) as columns ({p})"
        )));
    }
    let mut a = x.clone();
    let mut b = y.to_vec();
    let mut rank_ok = true;
    let mut rdiag_max = F::zero();
    for j in 0..p {
        // Householder reflector for column j (rows j..n).
        let mut norm2 = F::zero();
        for i in j..n {
            let v = a.get(i, j);
            norm2 = norm2 + v * v;
        }
        let norm = norm2.sqrt();
        rdiag_max = rdiag_max.max(norm);
        if norm <= rdiag_max * c::<F>(1e-12) || norm == F::zero() {
            rank_ok = false;
            break;
        }
        let alpha = if a.get(j, j) >= F::zero() { -norm } else { norm };
        let mut v = vec![F::zero(); n - j];
        v[0] = a.get(j, j) - alpha;
        for i in (j + 1)..n {
            v[i - j] = a.get(i, j);
        }
        let vtv: F = v.iter().map(|&t| t * t).sum();
        if vtv == F::zero() {
            rank_ok = false;
            break;
        }
        a.set(j, j, alpha);
        for i in (j + 1)..n {
            a.set(i, j, F::zero());
        }
        for col in (j + 1)..p {
            let mut s = F::zero();
            for i in j..n {
                s = s + v[i - j] * a.get(i, col);
            }
            let f = c::<F>(2.0) * s / vtv;
            for i in j..n {
                let cur = a.get(i, col);
                a.set(i, col, cur - f * v[i - j]);
            }
        }
        let mut s = F::zero();
        for i in j..n {
            s = s + v[i - j] * b[i];
        }
        let f = c::<F>(2.0) * s / vtv;
        for i in j..n {
            b[i] = b[i] - f * v[i - j];
        }
    }
    if rank_ok {
        // Back-substitute R β = Qᵀy.
        let mut beta = vec![F::zero(); p];
        for j in (0..p).rev() {
            let mut s = b[j];
            for k in (j + 1)..p {
                s = s - a.get(j, k) * beta[k];
            }
            beta[j] = s / a.get(j, j);
        }
        Ok(LsFit {
            beta,
            rank_deficient: false,
        })
    } else {
        Ok(LsFit {
            beta: min_norm_via_normal_eqs(x, y)?,
            rank_deficient: true,
        })
    }
}

/// Minimum-norm least-squares solution via the pseudo-inverse of the
/// normal equations: β = (XᵀX)⁺ Xᵀy.
fn min_norm_via_normal_eqs<F: Real>(x: &Mat<F>, y: &[F]) -> Result<Vec<F>> {
    let n = x.rows();
    let p = x.cols();
    let mut xtx = Mat::zeros(p, p);
    let mut xty = vec![F::zero(); p];
    for i in 0..n {
        let row = x.row(i);
        for a in 0..p {
            xty[a] = xty[a] + row[a] * y[i];
            for b in a..p {
                let cur = xtx.get(a, b) + row[a] * row[b];
                xtx.set(a, b, cur);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            let v = xtx.get(b, a);
            xtx.set(a, b, v);
        }
    }
    let (vals, vecs) = sym_eigen(&xtx);
    let lam_max = vals
        .iter()
        .cloned()
        .fold(F::zero(), F::max)
        .max(c::<F>(1e-300));
    let cutoff = lam_max * c::<F>(1e-12);
    let mut beta = vec![F::zero(); p];
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= cutoff {
            continue;
        }
        let uk = vecs.column(k);
        let coef = dot(&uk, &xty) / lam;
        for a in 0..p {
            beta[a] = beta[a] + coef * uk[a];
        }
    }
    Ok(beta)
}
