//! Filter-based moment-matching baseline estimator.
//!
//! This is the older generalized-variations approach: pass each
//! component through an `m`-dilated zero-sum filter, compare empirical
//! covariances of the filtered series against their model-implied
//! values in log space, and minimize the squared mismatch over the
//! dilation set. It serves as the comparison baseline for the
//! closed-form estimators in [`crate::estimate`]; its known weakness —
//! noisy, badly biased asymmetry estimates — is exactly what the
//! comparison experiment measures.
//!
//! The weighted objective with only variance terms active (the usual
//! choice) cannot identify the pairwise parameters, so the fit runs in
//! two stages: stage 1 fits `(H_i, σ_i²)` per component from filtered
//! variances, stage 2 fits `(ρ_ij, η_ij)` per pair from the filtered
//! cross-covariance and its antisymmetrized lag-`ml` difference, with
//! stage-1 values frozen. Both stages use a bounded derivative-free
//! simplex search started from the closed-form estimates.

use crate::estimate::{estimate_eta, estimate_hurst, estimate_rho, estimate_sigma2};
use crate::kernel::HURST_SUM_LOG_FORM_TOL;
use crate::linalg::Mat;
use crate::real::Real;
use crate::simulate::SamplePath;
use crate::{Error, Result};

/// Tap-sum tolerance for the zero-sum (one vanishing moment) filter
/// requirement.
const TAP_SUM_TOL: f64 = 1e-12;
/// Maximum objective evaluations per simplex search.
const MAX_EVALS_PER_START: usize = 2000;
/// Deterministic offsets (in transformed coordinates) for the restart
/// starting points.
const RESTART_JITTER: [f64; 3] = [0.0, 0.35, -0.35];
/// Floor applied inside logarithms of empirical magnitudes.
const LOG_FLOOR: f64 = 1e-300;

/// A finite zero-sum filter together with the dilation set it is
/// evaluated over.
///
/// Taps sit on `{0, …, l}` with `Σ a_t = 0` (at least one vanishing
/// moment), so that applying the filter to a path kills levels and
/// leaves a stationary series.
#[derive(Clone, Debug)]
pub struct Filter {
    taps: Vec<f64>,
    dilations: Vec<usize>,
}

impl Filter {
    pub fn new(taps: Vec<f64>, dilations: Vec<usize>) -> Result<Self> {
        if taps.len() < 2 {
            return Err(Error::InvalidParams(
                "a filter needs at least two taps".into(),
            ));
        }
        if !taps.iter().all(|a| a.is_finite()) {
            return Err(Error::InvalidParams("filter taps must be finite".into()));
        }
        let sum: f64 = taps.iter().sum();
        let scale: f64 = taps.iter().map(|a| a.abs()).sum();
        if sum.abs() > TAP_SUM_TOL * scale.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "filter taps must sum to zero (got {sum:e})"
            )));
        }
        if dilations.is_empty() {
            return Err(Error::InvalidParams("dilation set must be non-empty".into()));
        }
        let mut dilations = dilations;
        dilations.sort_unstable();
        dilations.dedup();
        if dilations[0] == 0 {
            return Err(Error::InvalidParams("dilations must be ≥ 1".into()));
        }
        Ok(Filter { taps, dilations })
    }

    /// First-order difference `(1, −1)` over dilations `1..=5`, the
    /// standard default.
    pub fn difference() -> Self {
        Filter {
            taps: vec![1.0, -1.0],
            dilations: vec![1, 2, 3, 4, 5],
        }
    }

    /// Second-order difference `(1, −2, 1)` over dilations `1..=5`
    /// (a composition of the difference filter, two vanishing
    /// moments). Over-differencing inflates the filtered variance
    /// while shrinking the asymmetry signal, which is what makes the
    /// published baseline's η estimates so noisy; the comparison
    /// experiment uses this filter to reproduce that behavior.
    pub fn second_difference() -> Self {
        Filter {
            taps: vec![1.0, -2.0, 1.0],
            dilations: vec![1, 2, 3, 4, 5],
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Filter order `l`: taps are supported on `{0, …, l}`.
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn dilations(&self) -> &[usize] {
        &self.dilations
    }

    /// Number of vanishing moments: the largest `q` with
    /// `Σ tʲ a_t = 0` for all `j < q`.
    pub fn vanishing_moments(&self) -> usize {
        let scale: f64 = self.taps.iter().map(|a| a.abs()).sum();
        let mut q = 0;
        while q <= self.order() {
            let s: f64 = self
                .taps
                .iter()
                .enumerate()
                .map(|(t, &a)| (t as f64).powi(q as i32) * a)
                .sum();
            if s.abs() > TAP_SUM_TOL * scale.max(1.0) {
                break;
            }
            q += 1;
        }
        q
    }
}

/// Applies the `m`-dilated filter to component `i` of a path.
///
/// Output entry `k` (zero-based) is
/// `Σ_t a_t · B^{(i)}_{(k + ml + 1 − mt)Δ}`, i.e. the filtered series
/// at times `(ml+1)Δ, …, nΔ`, length `n − ml`.
pub fn apply_dilated_filter<F: Real>(
    path: &SamplePath<F>,
    i: usize,
    filter: &Filter,
    m: usize,
) -> Result<Vec<F>> {
    let n = path.n();
    let span = m * filter.order();
    if i >= path.d() {
        return Err(Error::InvalidParams(format!(
            "component {i} out of range for d = {}",
            path.d()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParams("dilation must be ≥ 1".into()));
    }
    if n <= span {
        return Err(Error::InsufficientData(format!(
            "need more than m·l = {span} observations, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(n - span);
    for k in span..n {
        // Level index k corresponds to time (k+1)Δ; the earliest tap
        // reaches back to time (k+1−ml)Δ ≥ Δ, so the pinned origin is
        // never touched.
        let mut v = F::zero();
        for (t, &a) in filter.taps.iter().enumerate() {
            v += F::from_f64(a).unwrap() * path.level(k - m * t, i);
        }
        out.push(v);
    }
    Ok(out)
}

/// Empirical lag-`h` covariance of two filtered series:
/// `(1/(len−h)) Σ_k x_k y_{k+h}` (the series are mean zero by the
/// filter's vanishing moment, so no centering).
pub fn empirical_filtered_cov<F: Real>(x: &[F], y: &[F], h: usize) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "filtered series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() <= h {
        return Err(Error::InsufficientData(format!(
            "lag {h} needs more than {h} filtered observations, got {}",
            x.len()
        )));
    }
    let mut acc = F::zero();
    for k in 0..x.len() - h {
        acc += x[k] * y[k + h];
    }
    Ok(acc / F::from_usize(x.len() - h).unwrap())
}

/// Coefficients of the model-implied filtered covariance
/// `Cov(X^{(i),m}_k, X^{(j),m}_{k+h}) = σ_iσ_j (ρ_ij A + η_ij B)`:
///
/// `A = −½ ΣΣ a_t a_l |(h + m(t−l))Δ|^s`,
/// `B = +½ ΣΣ a_t a_l sign(h + m(t−l)) |(h + m(t−l))Δ|^s`,
///
/// with `s = H_i + H_j`. `B` vanishes at `h = 0`, so asymmetry enters
/// only at nonzero lags of cross pairs.
fn filtered_cov_coeffs(filter: &Filter, m: usize, h: i64, hurst_sum: f64, delta: f64) -> (f64, f64) {
    let mut a_coef = 0.0;
    let mut b_coef = 0.0;
    for (t, &at) in filter.taps.iter().enumerate() {
        for (l, &al) in filter.taps.iter().enumerate() {
            let lag = h + m as i64 * (t as i64 - l as i64);
            if lag == 0 {
                continue;
            }
            let w = at * al * (lag.unsigned_abs() as f64 * delta).powf(hurst_sum);
            a_coef -= 0.5 * w;
            b_coef += 0.5 * (lag.signum() as f64) * w;
        }
    }
    (a_coef, b_coef)
}

/// Model-implied lag-`h` covariance of the `m`-dilated filtered series
/// of components `i` and `j`.
pub fn theoretical_filtered_cov<F: Real>(
    params: &crate::kernel::ModelParams<F>,
    filter: &Filter,
    m: usize,
    h: i64,
    i: usize,
    j: usize,
    delta: F,
) -> F {
    let hs = to64(params.hurst(i)) + to64(params.hurst(j));
    let (a, b) = filtered_cov_coeffs(filter, m, h, hs, to64(delta));
    let ss = (to64(params.sigma2(i)) * to64(params.sigma2(j))).sqrt();
    F::from_f64(ss * (to64(params.rho(i, j)) * a + to64(params.eta(i, j)) * b)).unwrap()
}

/// Result of the two-stage filter-based fit.
#[derive(Clone, Debug)]
pub struct AcEstimate {
    pub hurst: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Pairwise correlation estimates (unit diagonal).
    pub rho: Mat,
    /// Pairwise asymmetry estimates (antisymmetric, zero diagonal).
    pub eta: Mat,
    /// Total objective value at the optimum (all stages summed).
    pub objective: f64,
    /// False when any simplex search hit its evaluation cap without
    /// meeting the convergence tolerance.
    pub converged: bool,
}

fn to64<F: Real>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ln_floor(x: f64) -> f64 {
    x.abs().max(LOG_FLOOR).ln()
}

/// Minimal Nelder–Mead simplex search (reflection/expansion/
/// contraction/shrink with the standard coefficients). Deterministic;
/// returns the best point, its value, and whether the spread tolerance
/// was met before the evaluation cap.
fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_eval: usize,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    pts.push(start.to_vec());
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = pts.len();
    let mut converged = false;

    while evals < max_eval {
        // Order ascending by objective.
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&k| pts[k].clone()).collect();
        let ovals: Vec<f64> = idx.iter().map(|&k| vals[k]).collect();
        pts = ordered;
        vals = ovals;

        if (vals[dim] - vals[0]).abs() <= 1e-12 * (1.0 + vals[0].abs()) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|c| pts[..dim].iter().map(|p| p[c]).sum::<f64>() / dim as f64)
            .collect();
        let at = |alpha: f64| -> Vec<f64> {
            (0..dim)
                .map(|c| centroid[c] + alpha * (pts[dim][c] - centroid[c]))
                .collect()
        };

        let refl = at(-1.0);
        let f_refl = f(&refl);
        evals += 1;
        if f_refl < vals[0] {
            let exp = at(-2.0);
            let f_exp = f(&exp);
            evals += 1;
            if f_exp < f_refl {
                pts[dim] = exp;
                vals[dim] = f_exp;
            } else {
                pts[dim] = refl;
                vals[dim] = f_refl;
            }
        } else if f_refl < vals[dim - 1] {
            pts[dim] = refl;
            vals[dim] = f_refl;
        } else {
            let contr = if f_refl < vals[dim] { at(-0.5) } else { at(0.5) };
            let f_contr = f(&contr);
            evals += 1;
            if f_contr < vals[dim].min(f_refl) {
                pts[dim] = contr;
                vals[dim] = f_contr;
            } else {
                // Shrink toward the best vertex.
                for k in 1..=dim {
                    for c in 0..dim {
                        pts[k][c] = pts[0][c] + 0.5 * (pts[k][c] - pts[0][c]);
                    }
                    vals[k] = f(&pts[k]);
                }
                evals += dim;
            }
        }
    }

    let mut best = 0;
    for k in 1..=dim {
        if vals[k] < vals[best] {
            best = k;
        }
    }
    (pts[best].clone(), vals[best], converged)
}

/// Runs `nelder_mead` from deterministic jittered restarts of `start`
/// and keeps the best optimum.
fn multistart(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64) -> (Vec<f64>, f64, bool) {
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for &jit in &RESTART_JITTER {
        let shifted: Vec<f64> = start
            .iter()
            .enumerate()
            .map(|(i, &s)| if i % 2 == 0 { s + jit } else { s - jit })
            .collect();
        let (p, v, conv) = nelder_mead(f, &shifted, step, MAX_EVALS_PER_START);
        match &best {
            Some((_, bv, _)) if *bv <= v => {}
            _ => best = Some((p, v, conv)),
        }
    }
    best.unwrap()
}

/// Per-component empirical filtered variances `C_ii^m(0)` over the
/// dilation set.
fn filtered_variances<F: Real>(
    path: &SamplePath<F>,
    i: usize,
    filter: &Filter,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(filter.dilations.len());
    for &m in &filter.dilations {
        let x = apply_dilated_filter(path, i, filter, m)?;
        out.push(to64(empirical_filtered_cov(&x, &x, 0)?));
    }
    Ok(out)
}

/// Stage-1 objective for component `i`: `w_v Σ_m (log C_ii^m(0) −
/// log COV_ii^m(0))²` as a function of `(H, σ²)`.
fn stage1_objective(
    emp_var: &[f64],
    filter: &Filter,
    delta: f64,
    w_v: f64,
    hurst: f64,
    sigma2: f64,
) -> f64 {
    let mut obj = 0.0;
    for (&cm, &m) in emp_var.iter().zip(&filter.dilations) {
        let (a, _) = filtered_cov_coeffs(filter, m, 0, 2.0 * hurst, delta);
        let eps = ln_floor(cm) - ln_floor(sigma2 * a);
        obj += w_v * eps * eps;
    }
    obj
}

struct PairMoments {
    /// `C_ij^m(0)` per dilation.
    cross0: Vec<f64>,
    /// `C_ij^m(mlΔ) − C_ji^m(mlΔ)` per dilation.
    diff: Vec<f64>,
    /// ρ coefficient `σ̂_iσ̂_j A_m(0)` per dilation.
    rho_coef: Vec<f64>,
    /// η coefficient `2σ̂_iσ̂_j B_m(ml)` per dilation.
    eta_coef: Vec<f64>,
}

fn stage2_objective(mom: &PairMoments, w_c: f64, w_dd: f64, rho: f64, eta: f64) -> f64 {
    let mut obj = 0.0;
    for k in 0..mom.cross0.len() {
        let ec = ln_floor(mom.cross0[k]) - ln_floor(rho * mom.rho_coef[k]);
        let ed = ln_floor(0.5 * mom.diff[k]) - ln_floor(0.5 * eta * mom.eta_coef[k]);
        obj += w_c * ec * ec + w_dd * ed * ed;
    }
    obj
}

/// Two-stage filter-based fit of all model parameters.
///
/// `weights = (w_v, w_c, w_dd)` are the variance / cross-covariance /
/// antisymmetrized-difference weights of the matching objective. The
/// customary `w_c = w_dd = 0` choice leaves the pairwise parameters
/// unidentified, so zeros are promoted to 1 in stage 2 (stage 1 uses
/// `w_v` as given); the stages are separable, so this changes the
/// reported objective but not the optimum.
///
/// Starting points are the closed-form estimates; magnitude matching
/// in log space cannot see the signs of ρ and η, so signs are assigned
/// from the corresponding empirical moments after the fit.
pub fn ac_fit<F: Real>(
    path: &SamplePath<F>,
    filter: &Filter,
    weights: (f64, f64, f64),
) -> Result<AcEstimate> {
    let (w_v, w_c, w_dd) = weights;
    if !(w_v > 0.0) || w_c < 0.0 || w_dd < 0.0 {
        return Err(Error::InvalidParams(
            "matching weights need w_v > 0, w_c ≥ 0, w_dd ≥ 0".into(),
        ));
    }
    let d = path.d();
    let delta = to64(path.delta());
    let span = filter.dilations.last().unwrap() * filter.order();
    // Stage 2 evaluates lag ml on the m-dilated series.
    if path.n() <= 2 * span {
        return Err(Error::InsufficientData(format!(
            "the fit needs more than {} observations, got {}",
            2 * span,
            path.n()
        )));
    }

    let mut hurst = Vec::with_capacity(d);
    let mut sigma2 = Vec::with_capacity(d);
    let mut objective = 0.0;
    let mut converged = true;

    for i in 0..d {
        let emp = filtered_variances(path, i, filter)?;
        // Closed-form start, clamped into the transform domains.
        let h0f = estimate_hurst(path, i)?;
        let h0 = to64(h0f).clamp(0.01, 0.99);
        let s0 = to64(estimate_sigma2(path, i, h0f)?).max(1e-12);
        let start = [logit(h0), s0.ln()];
        let obj = |p: &[f64]| -> f64 {
            stage1_objective(&emp, filter, delta, w_v, logistic(p[0]), p[1].exp())
        };
        let (p, v, conv) = multistart(&obj, &start, 0.25);
        hurst.push(logistic(p[0]));
        sigma2.push(p[1].exp());
        objective += v;
        converged &= conv;
    }

    let mut rho = Mat::identity(d);
    let mut eta = Mat::zeros(d, d);
    let (w_c2, w_dd2) = (
        if w_c > 0.0 { w_c } else { 1.0 },
        if w_dd > 0.0 { w_dd } else { 1.0 },
    );

    for i in 0..d {
        for j in (i + 1)..d {
            let hs = hurst[i] + hurst[j];
            if (hs - 1.0).abs() < HURST_SUM_LOG_FORM_TOL {
                return Err(Error::Unidentified(format!(
                    "components {i} and {j}: fitted Hurst exponents sum to 1, where the \
                     power-law cross-covariance degenerates"
                )));
            }
            let ss = (sigma2[i] * sigma2[j]).sqrt();
            let lag = filter.order() as i64; // lag ml on the m-dilated series
            let mut mom = PairMoments {
                cross0: Vec::new(),
                diff: Vec::new(),
                rho_coef: Vec::new(),
                eta_coef: Vec::new(),
            };
            for &m in &filter.dilations {
                let xi = apply_dilated_filter(path, i, filter, m)?;
                let xj = apply_dilated_filter(path, j, filter, m)?;
                let h = m * filter.order();
                mom.cross0.push(to64(empirical_filtered_cov(&xi, &xj, 0)?));
                let cij = to64(empirical_filtered_cov(&xi, &xj, h)?);
                let cji = to64(empirical_filtered_cov(&xj, &xi, h)?);
                mom.diff.push(cij - cji);
                let (a0, _) = filtered_cov_coeffs(filter, m, 0, hs, delta);
                let (_, bl) = filtered_cov_coeffs(filter, m, lag * m as i64, hs, delta);
                mom.rho_coef.push(ss * a0);
                mom.eta_coef.push(2.0 * ss * bl);
            }

            let r0 = match estimate_rho(path, i, j) {
                Ok(r) => to64(r).abs().clamp(0.05, 0.99),
                Err(_) => 0.2,
            };
            let e0 = match estimate_eta(path, i, j) {
                Ok(e) => to64(e).abs().clamp(0.05, 0.99),
                Err(_) => 0.1,
            };
            let start = [r0.atanh(), e0.atanh()];
            let obj = |p: &[f64]| -> f64 {
                stage2_objective(&mom, w_c2, w_dd2, p[0].tanh().abs(), p[1].tanh().abs())
            };
            let (p, v, conv) = multistart(&obj, &start, 0.25);
            objective += v;
            converged &= conv;

            // Sign votes weighted by the theoretical coefficient.
            let rho_sign = mom
                .cross0
                .iter()
                .zip(&mom.rho_coef)
                .map(|(c, k)| c * k)
                .sum::<f64>()
                .signum();
            let eta_sign = mom
                .diff
                .iter()
                .zip(&mom.eta_coef)
                .map(|(dm, k)| dm * k)
                .sum::<f64>()
                .signum();
            let r = rho_sign * p[0].tanh().abs();
            let e = eta_sign * p[1].tanh().abs();
            rho.set(i, j, r);
            rho.set(j, i, r);
            eta.set(i, j, e);
            eta.set(j, i, -e);
        }
    }

    Ok(AcEstimate {
        hurst,
        sigma2,
        rho,
        eta,
        objective,
        converged,
    })
}
