//! Covariance kernels and parameter validity for multivariate
//! fractional Brownian motion (mfBm).
//!
//! A d-component mfBm is parameterized by component Hurst exponents
//! `H_i ∈ (0,1)`, scales `σ_i² > 0`, a symmetric unit-diagonal
//! correlation matrix `ρ`, and an antisymmetric asymmetry matrix `η`
//! (η = 0 is the time-reversible case). This module provides the
//! covariance functions of levels and increments, the bivariate
//! correlation bound, and the positive-semidefiniteness check that
//! decides whether a parameter set corresponds to an existing process.

use crate::linalg::{sym_eigenvalues, Mat};
use crate::real::{c, gamma, sign0, Real};
use crate::{Error, Result};

/// Cross-pairs whose Hurst sum is within this distance of 1 use the
/// logarithmic covariance form; estimation treats them as unidentified.
pub const HURST_SUM_LOG_FORM_TOL: f64 = 1e-9;

/// Slack allowed on the bivariate correlation bound `rho_max`. The
/// bound is attained by textbook designs (e.g. H = (0.1, 0.4) admits
/// |ρ| up to exactly 0.8), so an exact comparison would reject
/// boundary parameter sets that are fine at any finite horizon.
pub const RHO_MAX_TOL: f64 = 1e-4;

/// Default number of increments used by the PSD existence check.
pub const DEFAULT_N_CHECK: usize = 64;

/// Parameters of a d-component mfBm.
///
/// For cross-pairs with `H_i + H_j = 1` the covariance takes a
/// logarithmic form with its own coefficient pair; those coefficients
/// are stored in the same `rho`/`eta` slots (no conversion between the
/// two parameterizations is applied).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F = f64> {
    hurst: Vec<F>,
    sigma2: Vec<F>,
    rho: Mat<F>,
    eta: Mat<F>,
}

impl<F: Real> ModelParams<F> {
    /// Builds and structurally validates a parameter set: dimensions
    /// agree, `H_i ∈ (0,1)`, `σ_i² > 0`, `ρ` symmetric with unit
    /// diagonal and entries in [−1,1], `η` antisymmetric with zero
    /// diagonal. Process existence (joint PSD) is a separate, more
    /// expensive check: [`validate_existence`].
    pub fn new(hurst: Vec<F>, sigma2: Vec<F>, rho: Mat<F>, eta: Mat<F>) -> Result<Self> {
        let d = hurst.len();
        if d == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if sigma2.len() != d || rho.rows() != d || rho.cols() != d || eta.rows() != d || eta.cols() != d {
            return Err(Error::InvalidParams(format!(
                "dimension mismatch: {} Hurst exponents, {} scales, {}x{} rho, {}x{} eta",
                d,
                sigma2.len(),
                rho.rows(),
                rho.cols(),
                eta.rows(),
                eta.cols()
            )));
        }
        for (i, &h) in hurst.iter().enumerate() {
            if !(h > F::zero() && h < F::one()) || !h.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "Hurst exponent {i} = {h} outside (0,1)"
                )));
            }
        }
        for (i, &s) in sigma2.iter().enumerate() {
            if !(s > F::zero()) || !s.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "scale sigma2[{i}] = {s} must be positive and finite"
                )));
            }
        }
        let tol = c::<F>(1e-12);
        for i in 0..d {
            if (rho.get(i, i) - F::one()).abs() > tol {
                return Err(Error::InvalidParams(format!(
                    "rho[{i}][{i}] must be 1, got {}",
                    rho.get(i, i)
                )));
            }
            if eta.get(i, i).abs() > tol {
                return Err(Error::InvalidParams(format!(
                    "eta[{i}][{i}] must be 0, got {}",
                    eta.get(i, i)
                )));
            }
            for j in 0..d {
                let r = rho.get(i, j);
                if !r.is_finite() || r.abs() > F::one() + tol {
                    return Err(Error::InvalidParams(format!(
                        "rho[{i}][{j}] = {r} outside [-1,1]"
                    )));
                }
                if (r - rho.get(j, i)).abs() > tol {
                    return Err(Error::InvalidParams(format!(
                        "rho must be symmetric; rho[{i}][{j}] = {r} vs rho[{j}][{i}] = {}",
                        rho.get(j, i)
                    )));
                }
                let e = eta.get(i, j);
                if !e.is_finite() {
                    return Err(Error::InvalidParams(format!("eta[{i}][{j}] is not finite")));
                }
                if (e + eta.get(j, i)).abs() > tol {
                    return Err(Error::InvalidParams(format!(
                        "eta must be antisymmetric; eta[{i}][{j}] = {e} vs eta[{j}][{i}] = {}",
                        eta.get(j, i)
                    )));
                }
            }
        }
        Ok(ModelParams {
            hurst,
            sigma2,
            rho,
            eta,
        })
    }

    /// Single fractional Brownian motion.
    pub fn univariate(hurst: F, sigma2: F) -> Result<Self> {
        let mut rho = Mat::zeros(1, 1);
        rho.set(0, 0, F::one());
        Self::new(vec![hurst], vec![sigma2], rho, Mat::zeros(1, 1))
    }

    /// Bivariate mfBm with general asymmetry.
    pub fn bivariate(h1: F, h2: F, s1: F, s2: F, rho: F, eta: F) -> Result<Self> {
        let rho_m = Mat::from_rows(vec![vec![F::one(), rho], vec![rho, F::one()]]);
        let eta_m = Mat::from_rows(vec![vec![F::zero(), eta], vec![-eta, F::zero()]]);
        Self::new(vec![h1, h2], vec![s1, s2], rho_m, eta_m)
    }

    /// Time-reversible (η = 0) mfBm from a correlation matrix.
    pub fn time_reversible(hurst: Vec<F>, sigma2: Vec<F>, rho: Mat<F>) -> Result<Self> {
        let d = hurst.len();
        Self::new(hurst, sigma2, rho, Mat::zeros(d, d))
    }

    /// Exchangeable design: component 0 has `h_target`, all others
    /// `h_other`; every off-diagonal correlation equals `rho`; unit
    /// scales; η = 0.
    pub fn exchangeable(d: usize, h_target: F, h_other: F, rho: F) -> Result<Self> {
        let mut hs = vec![h_other; d];
        hs[0] = h_target;
        let mut rm = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rm.set(i, j, if i == j { F::one() } else { rho });
            }
        }
        Self::new(hs, vec![F::one(); d], rm, Mat::zeros(d, d))
    }

    pub fn d(&self) -> usize {
        self.hurst.len()
    }

    pub fn hurst(&self, i: usize) -> F {
        self.hurst[i]
    }

    pub fn hursts(&self) -> &[F] {
        &self.hurst
    }

    pub fn sigma2(&self, i: usize) -> F {
        self.sigma2[i]
    }

    pub fn sigma2s(&self) -> &[F] {
        &self.sigma2
    }

    pub fn rho(&self, i: usize, j: usize) -> F {
        self.rho.get(i, j)
    }

    pub fn eta(&self, i: usize, j: usize) -> F {
        self.eta.get(i, j)
    }

    pub fn is_time_reversible(&self) -> bool {
        self.eta.data().iter().all(|&e| e == F::zero())
    }

    /// Restriction to the first `k` components.
    pub fn head(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.d() {
            return Err(Error::InvalidParams(format!(
                "cannot restrict a {}-component model to {k} components",
                self.d()
            )));
        }
        let mut rho = Mat::zeros(k, k);
        let mut eta = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                rho.set(i, j, self.rho.get(i, j));
                eta.set(i, j, self.eta.get(i, j));
            }
        }
        Self::new(
            self.hurst[..k].to_vec(),
            self.sigma2[..k].to_vec(),
            rho,
            eta,
        )
    }

    /// Restriction to a single component (univariate submodel).
    pub fn component(&self, i: usize) -> Result<Self> {
        Self::univariate(self.hurst[i], self.sigma2[i])
    }
}

/// The fundamental fBm kernel
/// `w(t, h, H) = ½(|t+h|^{2H} + |t|^{2H} − |h|^{2H})`,
/// so that `Cov(B_s, B_t) = σ² w(t, s−t, H)`.
#[inline]
pub fn w_kernel<F: Real>(t: F, h: F, hurst: F) -> F {
    let e = hurst + hurst;
    let half = c::<F>(0.5);
    half * ((t + h).abs().powf(e) + t.abs().powf(e) - h.abs().powf(e))
}

/// Normalized increment autocovariance
/// `γ(l) = ½(|l+1|^s + |l−1|^s − 2|l|^s)` with `s` the Hurst sum of the
/// pair; `γ(0) = 1` and `γ` is even in `l`.
#[inline]
pub fn gamma_lag<F: Real>(l: i64, hurst_sum: F) -> F {
    let lf = c::<F>(l as f64);
    let half = c::<F>(0.5);
    half * ((lf + F::one()).abs().powf(hurst_sum) + (lf - F::one()).abs().powf(hurst_sum)
        - c::<F>(2.0) * lf.abs().powf(hurst_sum))
}

/// `x · ln|x|` with the `0 · ln 0 = 0` convention of the logarithmic
/// covariance form.
#[inline]
fn xlnx<F: Real>(x: F) -> F {
    if x == F::zero() {
        F::zero()
    } else {
        x * x.abs().ln()
    }
}

/// Covariance of levels, `Cov(B_s^{(i)}, B_t^{(j)})`, valid for all
/// real `s`, `t` (including negative times, which is where the
/// asymmetry η is visible).
pub fn cross_cov<F: Real>(p: &ModelParams<F>, i: usize, j: usize, s: F, t: F) -> F {
    let scale = (p.sigma2(i) * p.sigma2(j)).sqrt();
    let half = c::<F>(0.5);
    if i == j {
        // Own covariance: σ² w(t, s−t, H) for every H, including H = ½.
        return p.sigma2(i) * w_kernel(t, s - t, p.hurst(i));
    }
    let hs = p.hurst(i) + p.hurst(j);
    let rho = p.rho(i, j);
    let eta = p.eta(i, j);
    if (hs - F::one()).abs() < c::<F>(HURST_SUM_LOG_FORM_TOL) {
        // Logarithmic form; rho/eta slots hold the log-form pair.
        let lin = rho * (s.abs() + t.abs() - (s - t).abs());
        let log = eta * (xlnx(t) - xlnx(s) - xlnx(t - s));
        half * scale * (lin + log)
    } else {
        let a = (rho + eta * sign0(s)) * s.abs().powf(hs);
        let b = (rho - eta * sign0(t)) * t.abs().powf(hs);
        let cterm = (rho - eta * sign0(t - s)) * (t - s).abs().powf(hs);
        half * scale * (a + b - cterm)
    }
}

/// Covariance of unit-step increments on the grid `Δ, 2Δ, …`:
/// `Cov(Δ_k B^{(i)}, Δ_l B^{(j)})` with `Δ_k B = B_{kΔ} − B_{(k−1)Δ}`,
/// `k, l ≥ 1`.
///
/// For generic pairs this is the closed form
/// `(ρ_ij + η_ij sign(k−l)) σ_i σ_j Δ^{H_i+H_j} γ(k−l)`; log-form
/// cross-pairs fall back to double-differencing the level covariance.
pub fn increment_cov<F: Real>(
    p: &ModelParams<F>,
    i: usize,
    j: usize,
    delta: F,
    k: i64,
    l: i64,
) -> F {
    let hs = p.hurst(i) + p.hurst(j);
    if i != j && (hs - F::one()).abs() < c::<F>(HURST_SUM_LOG_FORM_TOL) {
        let (sk, sk1) = (c::<F>(k as f64) * delta, c::<F>((k - 1) as f64) * delta);
        let (tl, tl1) = (c::<F>(l as f64) * delta, c::<F>((l - 1) as f64) * delta);
        return cross_cov(p, i, j, sk, tl) - cross_cov(p, i, j, sk, tl1)
            - cross_cov(p, i, j, sk1, tl)
            + cross_cov(p, i, j, sk1, tl1);
    }
    let m = k - l;
    let scale = (p.sigma2(i) * p.sigma2(j)).sqrt();
    let asym = p.rho(i, j) + p.eta(i, j) * c::<F>(m.signum() as f64);
    asym * scale * delta.powf(hs) * gamma_lag(m, hs)
}

/// Upper bound on the admissible correlation of a time-reversible
/// bivariate fBm with exponents `(H1, H2)`:
/// `√(sin(πH1) sin(πH2) Γ(2H1+1) Γ(2H2+1)) / (sin(πH̄) Γ(2H̄+1))`,
/// `H̄ = (H1+H2)/2`. Equals 1 when `H1 = H2`.
pub fn rho_max<F: Real>(h1: F, h2: F) -> F {
    let pi = c::<F>(std::f64::consts::PI);
    let two = c::<F>(2.0);
    let hbar = (h1 + h2) / two;
    let num = ((pi * h1).sin() * (pi * h2).sin() * gamma(two * h1 + F::one())
        * gamma(two * h2 + F::one()))
    .sqrt();
    let den = (pi * hbar).sin() * gamma(two * hbar + F::one());
    num / den
}

/// Builds the `(n·d) × (n·d)` covariance matrix of the stacked
/// increments `(Δ_1 B^{(1..d)}, …, Δ_n B^{(1..d)})` (block per time
/// step, component-fastest within a block).
pub fn increment_cov_matrix<F: Real>(p: &ModelParams<F>, n: usize, delta: F) -> Mat<F> {
    let d = p.d();
    let dim = n * d;
    let mut m = Mat::zeros(dim, dim);
    for bk in 0..n {
        for i in 0..d {
            let row = bk * d + i;
            for bl in 0..n {
                for j in 0..d {
                    let col = bl * d + j;
                    if col > row {
                        continue;
                    }
                    let v = increment_cov(p, i, j, delta, (bk + 1) as i64, (bl + 1) as i64);
                    m.set(row, col, v);
                    m.set(col, row, v);
                }
            }
        }
    }
    m
}

/// Outcome of [`validate_existence`].
#[derive(Clone, Debug)]
pub struct ExistenceCheck<F = f64> {
    /// Smallest eigenvalue of the normalized increment covariance.
    pub min_eigenvalue: F,
    /// PSD tolerance that was applied (`1e-8 × λ_max`).
    pub tolerance: F,
    /// `(|ρ|, bound)` when the bivariate correlation bound applied.
    pub rho_bound: Option<(F, F)>,
}

/// Checks that a parameter set corresponds to an existing Gaussian
/// process, by verifying positive semidefiniteness of the increment
/// covariance over `n_check` steps (σ and Δ drop out by scaling, so the
/// check is run normalized). For `d = 2`, η = 0, additionally
/// cross-checks `|ρ| ≤ rho_max(H1, H2) + tol` and reports whichever
/// check fails.
pub fn validate_existence<F: Real>(p: &ModelParams<F>, n_check: usize) -> Result<ExistenceCheck<F>> {
    let n_check = n_check.max(2);
    let mut rho_bound = None;
    if p.d() == 2 && p.is_time_reversible() {
        let bound = rho_max(p.hurst(0), p.hurst(1));
        let r = p.rho(0, 1).abs();
        rho_bound = Some((r, bound));
        if r > bound + c::<F>(RHO_MAX_TOL) {
            return Err(Error::Inadmissible(format!(
                "|rho| = {r} exceeds the bivariate correlation bound rho_max(H1={}, H2={}) = {bound}",
                p.hurst(0),
                p.hurst(1),
            )));
        }
    }
    // Normalized parameters: unit scales, Δ = 1 (PSD is invariant).
    let normalized = ModelParams {
        hurst: p.hurst.clone(),
        sigma2: vec![F::one(); p.d()],
        rho: p.rho.clone(),
        eta: p.eta.clone(),
    };
    let m = increment_cov_matrix(&normalized, n_check, F::one());
    let eigs = sym_eigenvalues(&m);
    let min = eigs[0];
    let max = eigs[eigs.len() - 1];
    let tol = c::<F>(1e-8) * max.max(F::zero());
    if min < -tol {
        return Err(Error::Inadmissible(format!(
            "increment covariance is not positive semidefinite at n_check={n_check}: min eigenvalue {min} < -{tol}"
        )));
    }
    Ok(ExistenceCheck {
        min_eigenvalue: min,
        tolerance: tol,
        rho_bound,
    })
}
