//! Closed-form moment estimators, their asymptotic variances, and the
//! time-reversibility test.
//!
//! All estimators are explicit functionals of realized (co)variations
//! of increments — no optimization is involved:
//!
//! - `Ĥ_i`: log-ratio of lag-2 to lag-1 realized variance over `2 ln 2`;
//! - `σ̂_i²`: lag-1 realized variance rescaled by `n Δ^{2Ĥ_i}`;
//! - `ρ̂_ij`: normalized realized covariation of increments;
//! - `η̂_ij`: antisymmetrized lag-1 cross-products over a denominator
//!   built from lag-2 and lag-1 variations (whose expectations cancel
//!   the `2^{H_i+H_j} − 2` factor in the numerator's mean).
//!
//! The asymptotic variances (`avar_*`) hold for Hurst exponents below
//! 3/4 and drive the reported standard errors and the test of `η = 0`.

use crate::real::{c, norm_cdf, norm_quantile, Real};
use crate::simulate::SamplePath;
use crate::{Error, Result};

/// Hurst estimates outside `(BOUNDARY_TOL, 1 − BOUNDARY_TOL)` get the
/// boundary flag: the estimator has hit the edge of the parameter
/// space and its asymptotics are unreliable (e.g. smooth-trend data).
pub const BOUNDARY_TOL: f64 = 1e-3;

/// Upper limit of the asymptotic-variance theory: series diverge at
/// `H = 3/4`.
pub const AVAR_HURST_LIMIT: f64 = 0.75;

/// Σ (Δ_k B^{(i)})², k = 1..n.
fn realized_var<F: Real>(path: &SamplePath<F>, i: usize) -> F {
    let mut acc = F::zero();
    let mut prev = F::zero();
    for k in 0..path.n() {
        let v = path.level(k, i);
        let d = v - prev;
        acc += d * d;
        prev = v;
    }
    acc
}

/// Σ (B_{(k+1)Δ}^{(i)} − B_{(k−1)Δ}^{(i)})², k = 1..n−1 (with B_0 = 0).
fn realized_var_lag2<F: Real>(path: &SamplePath<F>, i: usize) -> F {
    let mut acc = F::zero();
    for k in 1..path.n() {
        let hi = path.level(k, i);
        let lo = if k >= 2 { path.level(k - 2, i) } else { F::zero() };
        let d = hi - lo;
        acc += d * d;
    }
    acc
}

fn require_n<F: Real>(path: &SamplePath<F>, min: usize, what: &str) -> Result<()> {
    if path.n() < min {
        return Err(Error::InsufficientData(format!(
            "{what} needs at least {min} observations, got {}",
            path.n()
        )));
    }
    Ok(())
}

/// Hurst exponent of component `i` from the log-ratio of lag-2 to
/// lag-1 realized variance:
/// `Ĥ = ln(V₂/V₁) / (2 ln 2)`.
pub fn estimate_hurst<F: Real>(path: &SamplePath<F>, i: usize) -> Result<F> {
    require_n(path, 2, "the Hurst estimator")?;
    let v1 = realized_var(path, i);
    let v2 = realized_var_lag2(path, i);
    if !(v1 > F::zero()) || !(v2 > F::zero()) {
        return Err(Error::Data(format!(
            "component {i} has zero realized variance; the path is degenerate"
        )));
    }
    Ok((v2 / v1).ln() / (c::<F>(2.0) * c::<F>(std::f64::consts::LN_2)))
}

/// True when a Hurst estimate sits on the boundary of `(0, 1)` (within
/// [`BOUNDARY_TOL`]), where the estimator saturates.
pub fn hurst_on_boundary<F: Real>(hurst: F) -> bool {
    !(hurst > c::<F>(BOUNDARY_TOL) && hurst < F::one() - c::<F>(BOUNDARY_TOL))
}

/// Scale `σ̂² = V₁ / (n Δ^{2Ĥ})` of component `i`, given its (usually
/// estimated) Hurst exponent.
pub fn estimate_sigma2<F: Real>(path: &SamplePath<F>, i: usize, hurst: F) -> Result<F> {
    require_n(path, 1, "the scale estimator")?;
    let v1 = realized_var(path, i);
    let n = F::from_usize(path.n()).unwrap();
    Ok(v1 / (n * path.delta().powf(c::<F>(2.0) * hurst)))
}

/// Correlation `ρ̂_ij`: realized covariation of increments normalized
/// by the component realized variances. Lies in [−1, 1] by
/// Cauchy–Schwarz.
pub fn estimate_rho<F: Real>(path: &SamplePath<F>, i: usize, j: usize) -> Result<F> {
    require_n(path, 2, "the correlation estimator")?;
    let (mut cov, mut vi, mut vj) = (F::zero(), F::zero(), F::zero());
    let (mut pi, mut pj) = (F::zero(), F::zero());
    for k in 0..path.n() {
        let (a, b) = (path.level(k, i), path.level(k, j));
        let (di, dj) = (a - pi, b - pj);
        cov += di * dj;
        vi += di * di;
        vj += dj * dj;
        pi = a;
        pj = b;
    }
    if !(vi > F::zero()) || !(vj > F::zero()) {
        return Err(Error::Data(
            "zero realized variance; correlation is undefined".into(),
        ));
    }
    Ok(cov / (vi * vj).sqrt())
}

/// Asymmetry `η̂_ij`: the antisymmetrized lag-1 cross-products
/// `Σ_k (Δ_{k+1}B^{(i)} Δ_k B^{(j)} − Δ_k B^{(i)} Δ_{k+1}B^{(j)})`
/// over `√(V₂^{(i)} V₂^{(j)}) − 2 √(V₁^{(i)} V₁^{(j)})`. Antisymmetric
/// in `(i, j)` by construction; consistent for `η_ij` whenever
/// `H_i + H_j ≠ 1` (at Hurst sum exactly 1 the denominator's
/// population value vanishes and η is not identified).
pub fn estimate_eta<F: Real>(path: &SamplePath<F>, i: usize, j: usize) -> Result<F> {
    require_n(path, 2, "the asymmetry estimator")?;
    let n = path.n();
    let mut num = F::zero();
    for k in 1..n {
        let lead_i = path.increment(k, i);
        let lag_i = path.increment(k - 1, i);
        let lead_j = path.increment(k, j);
        let lag_j = path.increment(k - 1, j);
        num += lead_i * lag_j - lag_i * lead_j;
    }
    let den = (realized_var_lag2(path, i) * realized_var_lag2(path, j)).sqrt()
        - c::<F>(2.0) * (realized_var(path, i) * realized_var(path, j)).sqrt();
    if den == F::zero() {
        return Err(Error::Unidentified(
            "the asymmetry denominator vanished (Hurst sum near 1?)".into(),
        ));
    }
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// Asymptotic variances.
//
// The series below are functions of the normalized increment
// autocovariances γ_e(r) = ½(|r+1|^e + |r−1|^e − 2 r^e) for exponents
// e built from the Hurst parameters. Terms decay polynomially; each
// loop slides windows of powers (one new powf per exponent per step),
// stops once all its terms stay below 1e-14, and closes the remaining
// plain product series with their analytic power-law integral tails.
// The difference-structured series of `avar_eta` gain two extra orders
// of decay from cancellation and need no tail.
// ---------------------------------------------------------------------------

/// Convergence threshold for series terms.
const SERIES_EPS: f64 = 1e-14;
/// Terms must stay below the threshold this many consecutive steps.
const SERIES_CALM: u32 = 10;
/// Hard cap on series length (reached only as H → 3/4).
const SERIES_CAP: u64 = 10_000_000;

/// Sliding window of `|r + k|^e` for `k ∈ {−2, …, 2}`.
struct PowWindow {
    e: f64,
    w: [f64; 5],
}

impl PowWindow {
    /// Window centered at r = 1 (so x = −1, 0, 1, 2, 3).
    fn new(e: f64) -> Self {
        PowWindow {
            e,
            w: [1.0, 0.0, 1.0, 2f64.powf(e), 3f64.powf(e)],
        }
    }

    /// γ_e(r + k) for k ∈ {−1, 0, 1}, where r is the current center.
    #[inline]
    fn gamma(&self, k: i32) -> f64 {
        let m = (k + 2) as usize;
        0.5 * (self.w[m + 1] + self.w[m - 1] - 2.0 * self.w[m])
    }

    /// Advance the center from r to r + 1; `r_next` is the new center.
    #[inline]
    fn advance(&mut self, r_next: f64) {
        self.w.rotate_left(1);
        self.w[4] = (r_next + 2.0).powf(self.e);
    }
}

fn check_avar_domain(hs: &[f64]) -> Result<()> {
    for &h in hs {
        if !(h > 0.0 && h < AVAR_HURST_LIMIT) {
            return Err(Error::InvalidParams(format!(
                "asymptotic variances require Hurst exponents in (0, 3/4), got {h}"
            )));
        }
    }
    Ok(())
}

/// Analytic tail `Σ_{r>R} c_a c_b r^{a+b−4}` of a product of two
/// γ-asymptotes `γ_e(r) ≈ (e(e−1)/2) r^{e−2}`, via the integral
/// approximation.
fn product_tail(ea: f64, eb: f64, r_stop: f64) -> f64 {
    let ca = ea * (ea - 1.0) / 2.0;
    let cb = eb * (eb - 1.0) / 2.0;
    let p = ea + eb - 4.0;
    // Σ_{r>R} r^p ≈ R^{p+1}/(−p−1), valid for p < −1 (H < 3/4).
    ca * cb * r_stop.powf(p + 1.0) / (-p - 1.0)
}

/// Asymptotic variance of the Hurst estimator: `n · Var(Ĥ) → avar`.
/// Valid for `H ∈ (0, 3/4)`; at `H = 1/2` it equals `1/(4 ln² 2)`.
pub fn avar_hurst(h: f64) -> Result<f64> {
    check_avar_domain(&[h])?;
    let s = 2.0 * h;
    let mut win = PowWindow::new(s);
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    let mut calm = 0u32;
    let mut r = 1u64;
    loop {
        // Unnormalized differences over the window x = r−2 .. r+2.
        let t1 = win.w[3] + win.w[1] - 2.0 * win.w[2];
        let t2 = win.w[4] + win.w[0] - 2.0 * win.w[2];
        let t3 = win.w[3] + win.w[0] - win.w[2] - win.w[1];
        s1 += t1 * t1;
        s2 += t2 * t2;
        s3 += t3 * t3;
        let biggest = (t1 * t1).max(t2 * t2).max(t3 * t3);
        calm = if biggest < SERIES_EPS { calm + 1 } else { 0 };
        if calm >= SERIES_CALM || r >= SERIES_CAP {
            break;
        }
        r += 1;
        win.advance(r as f64);
    }
    let rr = r as f64;
    // Tails of the three squared series (the r±2 and mixed differences
    // have asymptotes 4·γ and 2·γ respectively, hence factors 16, 4).
    let base = 4.0 * product_tail(s, s, rr);
    s1 += base;
    s2 += 16.0 * base;
    s3 += 4.0 * base;
    let ln2 = std::f64::consts::LN_2;
    Ok((4.0 + s1 + 2f64.powf(-4.0 * h) * s2 - 2f64.powf(1.0 - 2.0 * h) * s3) / (4.0 * ln2 * ln2))
}

/// Asymptotic variance of the scale estimator:
/// `(n / log²(1/Δ)) · Var(σ̂²) → avar` in the in-fill regime; equals
/// `4 σ⁴ · avar_hurst(H)`.
pub fn avar_sigma2(h: f64, sigma2: f64) -> Result<f64> {
    Ok(4.0 * sigma2 * sigma2 * avar_hurst(h)?)
}

/// Asymptotic variance of the correlation estimator `ρ̂` for a
/// time-reversible pair with exponents `(h1, h2)` and correlation
/// `rho`; `n · Var(ρ̂) → avar`.
pub fn avar_rho(h1: f64, h2: f64, rho: f64) -> Result<f64> {
    check_avar_domain(&[h1, h2])?;
    let (a, b, s) = (2.0 * h1, 2.0 * h2, h1 + h2);
    let mut wa = PowWindow::new(a);
    let mut wb = PowWindow::new(b);
    let mut ws = PowWindow::new(s);
    // u1(H1,H2), u1(H1,H1), u1(H2,H2), u2, u3(H1,H2), u3(H2,H1):
    let mut sums = [0.0f64; 6];
    let mut calm = 0u32;
    let mut r = 1u64;
    loop {
        let (ga, gb, gs) = (wa.gamma(0), wb.gamma(0), ws.gamma(0));
        let terms = [
            2.0 * gs * gs,
            2.0 * ga * ga,
            2.0 * gb * gb,
            2.0 * ga * gb,
            4.0 * ga * gs,
            4.0 * gb * gs,
        ];
        let mut biggest = 0.0f64;
        for (acc, t) in sums.iter_mut().zip(terms) {
            *acc += t;
            biggest = biggest.max(t.abs());
        }
        calm = if biggest < SERIES_EPS { calm + 1 } else { 0 };
        if calm >= SERIES_CALM || r >= SERIES_CAP {
            break;
        }
        r += 1;
        wa.advance(r as f64);
        wb.advance(r as f64);
        ws.advance(r as f64);
    }
    let rr = r as f64;
    sums[0] += 2.0 * product_tail(s, s, rr);
    sums[1] += 2.0 * product_tail(a, a, rr);
    sums[2] += 2.0 * product_tail(b, b, rr);
    sums[3] += 2.0 * product_tail(a, b, rr);
    sums[4] += 4.0 * product_tail(a, s, rr);
    sums[5] += 4.0 * product_tail(b, s, rr);
    let [u1_12, u1_11, u1_22, u2, u3_12, u3_21] = sums;
    let r2 = rho * rho;
    Ok((1.0 - r2) * (1.0 - r2)
        + r2 * ((1.0 + r2) * u1_12 + 0.5 * u1_11 + 0.5 * u1_22 - u3_12 - u3_21)
        + u2)
}

/// Asymptotic variance of the asymmetry estimator `η̂` under the
/// time-reversible null (`η = 0`); `n · Var(η̂) → avar`. This is the
/// normalizer of the reversibility test statistic.
pub fn avar_eta(h1: f64, h2: f64, rho: f64) -> Result<f64> {
    check_avar_domain(&[h1, h2])?;
    let (a, b, s) = (2.0 * h1, 2.0 * h2, h1 + h2);
    let mut wa = PowWindow::new(a);
    let mut wb = PowWindow::new(b);
    let mut ws = PowWindow::new(s);
    let (mut t1, mut t2) = (0.0f64, 0.0f64);
    let mut calm = 0u32;
    let mut r = 1u64;
    loop {
        // γ(0) = 1 at every exponent; the windows provide r−1, r, r+1.
        let d1 = ws.gamma(0) * ws.gamma(0) - ws.gamma(1) * ws.gamma(-1);
        let d2 = 4.0 * wa.gamma(0) * wb.gamma(0)
            - 2.0 * wa.gamma(1) * wb.gamma(-1)
            - 2.0 * wb.gamma(1) * wa.gamma(-1);
        t1 += d1;
        t2 += d2;
        let biggest = d1.abs().max(d2.abs());
        calm = if biggest < SERIES_EPS { calm + 1 } else { 0 };
        if calm >= SERIES_CALM || r >= SERIES_CAP {
            break;
        }
        r += 1;
        wa.advance(r as f64);
        wb.advance(r as f64);
        ws.advance(r as f64);
    }
    // The shifted-product differences gain two orders of decay from
    // cancellation; their tails are below the convergence threshold.
    let g1 = 0.5 * (2f64.powf(a) - 2.0);
    let g2 = 0.5 * (2f64.powf(b) - 2.0);
    let g12 = 0.5 * (2f64.powf(s) - 2.0);
    let r2 = rho * rho;
    let head = 2.0 * (1.0 - g1 * g2) + 2.0 * r2 * (g12 * g12 - 1.0);
    let pref = 2f64.powf(s) - 2.0;
    Ok((head - 4.0 * r2 * t1 + t2) / (pref * pref))
}

// ---------------------------------------------------------------------------
// Aggregated reports and the reversibility test.
// ---------------------------------------------------------------------------

/// Point estimate and plug-in standard error for one component.
#[derive(Clone, Debug)]
pub struct ComponentEstimate<F = f64> {
    pub hurst: F,
    /// `√(avar_hurst(Ĥ)/n)`; absent on the boundary or for `Ĥ ≥ 3/4`.
    pub hurst_se: Option<F>,
    pub sigma2: F,
    /// `ln(1/Δ) √(avar_sigma2(Ĥ, σ̂²)/n)`; absent when `hurst_se` is,
    /// or when `Δ ≥ 1` (outside the in-fill regime).
    pub sigma2_se: Option<F>,
    /// Hurst estimate saturated at the edge of `(0, 1)`.
    pub boundary: bool,
}

/// Point estimates and standard errors for an ordered pair `(i, j)`.
#[derive(Clone, Debug)]
pub struct PairEstimate<F = f64> {
    pub i: usize,
    pub j: usize,
    pub rho: F,
    pub rho_se: Option<F>,
    /// `η̂_ij`; `None` when its denominator vanished (unidentified).
    pub eta: Option<F>,
    /// Standard error under the reversible null.
    pub eta_se: Option<F>,
}

/// Full estimation report for a path: all components and all pairs
/// `i < j`.
#[derive(Clone, Debug)]
pub struct EstimateReport<F = f64> {
    pub n: usize,
    pub delta: F,
    pub components: Vec<ComponentEstimate<F>>,
    pub pairs: Vec<PairEstimate<F>>,
}

/// Two-sided normal confidence interval `est ± Φ⁻¹(1−α/2)·se`.
pub fn normal_ci<F: Real>(est: F, se: F, alpha: F) -> (F, F) {
    let z = norm_quantile(F::one() - alpha / c::<F>(2.0));
    (est - z * se, est + z * se)
}

fn to64<F: Real>(x: F) -> f64 {
    x.to_f64().unwrap()
}

/// Estimates every component and pair of a path, with plug-in standard
/// errors where the asymptotic theory applies.
pub fn estimate_all<F: Real>(path: &SamplePath<F>) -> Result<EstimateReport<F>> {
    require_n(path, 2, "estimation")?;
    let d = path.d();
    let n = path.n();
    let nf = n as f64;
    let mut components = Vec::with_capacity(d);
    for i in 0..d {
        let h = estimate_hurst(path, i)?;
        let s2 = estimate_sigma2(path, i, h)?;
        let boundary = hurst_on_boundary(h);
        let (h64, s264, delta64) = (to64(h), to64(s2), to64(path.delta()));
        let hurst_se = if boundary {
            None
        } else {
            avar_hurst(h64).ok().map(|a| c::<F>((a / nf).sqrt()))
        };
        let sigma2_se = if hurst_se.is_some() && delta64 < 1.0 {
            avar_sigma2(h64, s264)
                .ok()
                .map(|a| c::<F>((1.0 / delta64).ln() * (a / nf).sqrt()))
        } else {
            None
        };
        components.push(ComponentEstimate {
            hurst: h,
            hurst_se,
            sigma2: s2,
            sigma2_se,
            boundary,
        });
    }
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let rho = estimate_rho(path, i, j)?;
            let eta = estimate_eta(path, i, j).ok();
            let (hi, hj) = (to64(components[i].hurst), to64(components[j].hurst));
            let usable = !components[i].boundary && !components[j].boundary;
            let rho_se = if usable {
                avar_rho(hi, hj, to64(rho))
                    .ok()
                    .map(|a| c::<F>((a / nf).sqrt()))
            } else {
                None
            };
            let eta_se = if usable && eta.is_some() {
                avar_eta(hi, hj, to64(rho))
                    .ok()
                    .map(|a| c::<F>((a / nf).sqrt()))
            } else {
                None
            };
            pairs.push(PairEstimate {
                i,
                j,
                rho,
                rho_se,
                eta,
                eta_se,
            });
        }
    }
    Ok(EstimateReport {
        n,
        delta: path.delta(),
        components,
        pairs,
    })
}

/// Outcome of the asymptotic test of time-reversibility (`η_ij = 0`)
/// for one component pair.
#[derive(Clone, Debug)]
pub struct ReversibilityTest<F = f64> {
    pub i: usize,
    pub j: usize,
    /// Estimated asymmetry `η̂_ij`.
    pub eta: F,
    /// `√n |η̂| / √(avar_eta(Ĥ_i, Ĥ_j, ρ̂))`.
    pub stat: F,
    /// Two-sided p-value `2(1 − Φ(stat))`.
    pub p_value: F,
    /// Critical value `Φ⁻¹(1 − α/2)`.
    pub critical: F,
    pub alpha: F,
    pub reject: bool,
    /// A Hurst estimate at or above 3/4 was clamped to just below the
    /// theory's limit; interpret the test with caution.
    pub hurst_clamped: bool,
}

/// Tests `H₀: η_ij = 0` (time-reversibility of the pair) at level
/// `alpha`, normalizing `η̂` by its asymptotic null variance with
/// plugged-in `Ĥ_i, Ĥ_j, ρ̂`.
pub fn test_time_reversibility<F: Real>(
    path: &SamplePath<F>,
    i: usize,
    j: usize,
    alpha: F,
) -> Result<ReversibilityTest<F>> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidParams(format!(
            "test level alpha = {alpha} must lie in (0, 1)"
        )));
    }
    require_n(path, 3, "the reversibility test")?;
    let eta = estimate_eta(path, i, j)?;
    let rho = estimate_rho(path, i, j)?;
    let mut clamped = false;
    let mut clamp = |h: f64| -> f64 {
        if h >= AVAR_HURST_LIMIT {
            clamped = true;
            AVAR_HURST_LIMIT - 1e-6
        } else {
            h
        }
    };
    let hi = clamp(to64(estimate_hurst(path, i)?));
    let hj = clamp(to64(estimate_hurst(path, j)?));
    let avar = avar_eta(hi, hj, to64(rho))?;
    if !(avar > 0.0) || !avar.is_finite() {
        return Err(Error::Numerical(format!(
            "asymptotic variance of the asymmetry estimator is not positive: {avar}"
        )));
    }
    let nf = c::<F>(path.n() as f64);
    let stat = nf.sqrt() * eta.abs() / c::<F>(avar.sqrt());
    let critical = norm_quantile(F::one() - alpha / c::<F>(2.0));
    let p_value = c::<F>(2.0) * (F::one() - norm_cdf(stat));
    Ok(ReversibilityTest {
        i,
        j,
        eta,
        stat,
        p_value,
        critical,
        alpha,
        reject: stat > critical,
        hurst_clamped: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ModelParams;
    use crate::linalg::Mat;
    use crate::simulate::PathSampler;

    /// Deterministic linear trend: B_{kΔ} = kΔ.
    fn linear_path(n: usize, delta: f64) -> SamplePath {
        let mut m = Mat::zeros(n, 1);
        for k in 0..n {
            m.set(k, 0, (k + 1) as f64 * delta);
        }
        SamplePath::from_levels(delta, m).unwrap()
    }

    #[test]
    fn avar_hurst_reference_values() {
        // Frozen against an independent implementation (2e6-term
        // truncation, error < 1e-9 relative).
        let cases = [
            (0.1, 0.9274582968720837),
            (0.4, 0.6163269535350585),
            (0.25, 0.7696926610925661),
        ];
        for (h, want) in cases {
            let got = avar_hurst(h).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "avar_hurst({h}) = {got}, want {want}"
            );
        }
        // At H = 1/2 every series vanishes: exactly 1/(4 ln² 2).
        let brownian = avar_hurst(0.5).unwrap();
        assert!((brownian - 0.5203422452514019).abs() < 1e-12);
    }

    #[test]
    fn avar_domain_is_enforced() {
        assert!(avar_hurst(0.75).is_err());
        assert!(avar_hurst(0.8).is_err());
        assert!(avar_hurst(0.0).is_err());
        assert!(avar_rho(0.1, 0.8, 0.3).is_err());
        assert!(avar_eta(0.76, 0.1, 0.0).is_err());
        // Just below the limit is legal (and large).
        assert!(avar_hurst(0.74).unwrap() > avar_hurst(0.5).unwrap());
    }

    #[test]
    fn avar_rho_reference_values() {
        let z = avar_rho(0.1, 0.4, 0.0).unwrap();
        assert!(
            ((z - 1.1131477377369896) / z).abs() < 1e-6,
            "avar_rho(0.1,0.4,0) = {z}"
        );
        let p = avar_rho(0.1, 0.4, 0.4).unwrap();
        assert!(
            ((p - 0.7770244795461152) / p).abs() < 1e-6,
            "avar_rho(0.1,0.4,0.4) = {p}"
        );
    }

    #[test]
    fn avar_eta_reference_values() {
        let z = avar_eta(0.1, 0.4, 0.0).unwrap();
        assert!(
            ((z - 6.462583354522857) / z).abs() < 1e-6,
            "avar_eta(0.1,0.4,0) = {z}"
        );
        let p = avar_eta(0.1, 0.4, 0.4).unwrap();
        assert!(
            ((p - 5.369808262542992) / p).abs() < 1e-6,
            "avar_eta(0.1,0.4,0.4) = {p}"
        );
    }

    #[test]
    fn linear_trend_saturates_hurst() {
        // V₂/V₁ → 4(n−1)/n, so Ĥ → 1 from below; the boundary flag
        // must fire.
        let p = linear_path(1000, 1.0 / 1000.0);
        let h: f64 = estimate_hurst(&p, 0).unwrap();
        assert!((h - 0.9992782915651656).abs() < 1e-12);
        assert!(hurst_on_boundary(h));
        let rep = estimate_all(&p).unwrap();
        assert!(rep.components[0].boundary);
        assert!(rep.components[0].hurst_se.is_none());
        assert!(rep.components[0].sigma2_se.is_none());
    }

    #[test]
    fn degenerate_paths_are_rejected_or_flagged() {
        // Identically zero: no realized variance at all.
        let z = SamplePath::from_levels(0.1, Mat::zeros(50, 1)).unwrap();
        assert!(matches!(estimate_hurst(&z, 0), Err(Error::Data(_))));
        // Constant nonzero level: only the jump from B_0 = 0
        // contributes, V₂ = V₁, so Ĥ = 0 exactly — a boundary case.
        let m = Mat::from_rows(vec![vec![1.0]; 50]);
        let p = SamplePath::from_levels(0.1, m).unwrap();
        let h: f64 = estimate_hurst(&p, 0).unwrap();
        assert_eq!(h, 0.0);
        assert!(hurst_on_boundary(h));
    }

    #[test]
    fn estimators_recover_truth_in_monte_carlo() {
        let truth: ModelParams = ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.5, 0.2).unwrap();
        let n = 500;
        let sampler = PathSampler::new(truth, n, 1.0 / 500.0).unwrap();
        let reps = 300;
        let paths = sampler.sample_many(11, reps);
        let (mut h1, mut h2, mut s1, mut s2, mut rho, mut eta) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &paths {
            let a = estimate_hurst(p, 0).unwrap();
            let b = estimate_hurst(p, 1).unwrap();
            h1 += a;
            h2 += b;
            s1 += estimate_sigma2(p, 0, a).unwrap();
            s2 += estimate_sigma2(p, 1, b).unwrap();
            rho += estimate_rho(p, 0, 1).unwrap();
            eta += estimate_eta(p, 0, 1).unwrap();
        }
        let m = reps as f64;
        // Tolerances ≈ 4–5 Monte Carlo standard errors of the means.
        assert!((h1 / m - 0.1).abs() < 0.012, "mean H1 = {}", h1 / m);
        assert!((h2 / m - 0.4).abs() < 0.012, "mean H2 = {}", h2 / m);
        assert!((s1 / m - 1.0).abs() < 0.12, "mean sigma2_1 = {}", s1 / m);
        assert!((s2 / m - 1.0).abs() < 0.12, "mean sigma2_2 = {}", s2 / m);
        assert!((rho / m - 0.5).abs() < 0.015, "mean rho = {}", rho / m);
        assert!((eta / m - 0.2).abs() < 0.04, "mean eta = {}", eta / m);
    }

    #[test]
    fn eta_estimate_is_antisymmetric() {
        let truth: ModelParams = ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.5, 0.2).unwrap();
        let sampler = PathSampler::new(truth, 200, 1.0 / 200.0).unwrap();
        let p = sampler.sample_replication(3, 0);
        let a: f64 = estimate_eta(&p, 0, 1).unwrap();
        let b: f64 = estimate_eta(&p, 1, 0).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn reversibility_test_behaves() {
        // Reversible truth: the test at the 5% level should fail to
        // reject on a typical path (checked on a fixed seed).
        let rev: ModelParams =
            ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.5, 0.0).unwrap();
        let sampler = PathSampler::new(rev, 500, 1.0 / 500.0).unwrap();
        let p = sampler.sample_replication(21, 0);
        let t = test_time_reversibility(&p, 0, 1, 0.05).unwrap();
        assert!(!t.reject, "stat = {} on a reversible path", t.stat);
        assert!((t.critical - 1.959963984540054).abs() < 1e-9);
        assert!(t.p_value > 0.05 && t.p_value <= 1.0);
        assert!(!t.hurst_clamped);
        assert_eq!(t.reject, t.stat > t.critical);

        // Strong asymmetry: rejection on a fixed seed.
        let asym: ModelParams =
            ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.5, 0.5).unwrap();
        let sampler = PathSampler::new(asym, 500, 1.0 / 500.0).unwrap();
        let p = sampler.sample_replication(21, 0);
        let t = test_time_reversibility(&p, 0, 1, 0.05).unwrap();
        assert!(t.reject, "stat = {} with eta = 0.5", t.stat);
        assert!(t.p_value < 0.05);

        assert!(test_time_reversibility(&p, 0, 1, 0.0).is_err());
        assert!(test_time_reversibility(&p, 0, 1, 1.0).is_err());
    }

    #[test]
    fn smooth_pair_triggers_hurst_clamp() {
        // Equal high Hurst exponents (admissible for any ρ); estimates
        // land above 3/4 and must be clamped with the flag set.
        let smooth: ModelParams =
            ModelParams::bivariate(0.85, 0.85, 1.0, 1.0, 0.0, 0.0).unwrap();
        let sampler = PathSampler::new(smooth, 400, 1.0 / 400.0).unwrap();
        let p = sampler.sample_replication(2, 0);
        let t = test_time_reversibility(&p, 0, 1, 0.05).unwrap();
        assert!(t.hurst_clamped);
    }

    #[test]
    fn report_covers_all_pairs() {
        let truth: ModelParams = ModelParams::time_reversible(
            vec![0.1, 0.3, 0.4],
            vec![1.0, 1.0, 1.0],
            Mat::from_rows(vec![
                vec![1.0, 0.3, 0.0],
                vec![0.3, 1.0, 0.3],
                vec![0.0, 0.3, 1.0],
            ]),
        )
        .unwrap();
        let sampler = PathSampler::new(truth, 300, 1.0 / 300.0).unwrap();
        let p = sampler.sample_replication(5, 0);
        let rep = estimate_all(&p).unwrap();
        assert_eq!(rep.components.len(), 3);
        assert_eq!(rep.pairs.len(), 3);
        let idx: Vec<(usize, usize)> = rep.pairs.iter().map(|q| (q.i, q.j)).collect();
        assert_eq!(idx, vec![(0, 1), (0, 2), (1, 2)]);
        for comp in &rep.components {
            assert!(!comp.boundary);
            assert!(comp.hurst_se.is_some());
            assert!(comp.sigma2_se.is_some());
            assert!(comp.sigma2 > 0.0);
        }
        for pair in &rep.pairs {
            assert!(pair.rho.abs() <= 1.0);
            assert!(pair.rho_se.is_some());
            assert!(pair.eta.is_some());
            assert!(pair.eta_se.is_some());
        }
    }

    #[test]
    fn normal_ci_is_symmetric_and_ordered() {
        let (lo, hi) = normal_ci(1.0f64, 0.5, 0.05);
        assert!((hi - 1.0 - (1.0 - lo)).abs() < 1e-12);
        assert!((hi - (1.0 + 1.959963984540054 * 0.5)).abs() < 1e-9);
    }

    #[test]
    fn se_magnitudes_match_theory_at_table_scale() {
        // √(avar/n) at the parameters and sample sizes used in the
        // simulation studies.
        let se = |a: f64, n: f64| (a / n).sqrt();
        assert!((se(avar_hurst(0.1).unwrap(), 500.0) - 0.0431).abs() < 5e-4);
        assert!((se(avar_hurst(0.4).unwrap(), 1000.0) - 0.0248).abs() < 5e-4);
        // Reported scale SE: ln(1/Δ)·√(avar_sigma2/n) with σ² = 1.
        let s_se = |h: f64, n: f64, delta: f64| {
            (1.0 / delta).ln() * se(avar_sigma2(h, 1.0).unwrap(), n)
        };
        assert!((s_se(0.1, 500.0, 1.0 / 250.0) - 0.4756).abs() < 5e-3);
        assert!((s_se(0.4, 1000.0, 1.0 / 52.0) - 0.1964).abs() < 5e-3);
    }

    #[test]
    fn f32_estimation_runs() {
        let truth: ModelParams<f32> =
            ModelParams::bivariate(0.2f32, 0.4, 1.0, 1.0, 0.3, 0.0).unwrap();
        let sampler = PathSampler::new(truth, 128, 1.0f32 / 128.0).unwrap();
        let p = sampler.sample_replication(9, 0);
        let rep = estimate_all(&p).unwrap();
        assert!(rep.components[0].hurst.is_finite());
        let t = test_time_reversibility(&p, 0, 1, 0.05f32).unwrap();
        assert!(t.p_value >= 0.0 && t.p_value <= 1.0);
    }
}
