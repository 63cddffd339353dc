//! Optimal (conditional-mean) forecasting and its mean squared
//! forecast error (MSFE).
//!
//! For a Gaussian process the conditional mean given observed levels
//! is the MSFE-optimal predictor and has the closed form
//! `γᵀ Σ⁻¹ X`, with `Σ` the covariance of the stacked observations and
//! `γ` their covariances with the forecast target; the achieved MSFE
//! is `Var − γᵀ Σ⁻¹ γ`. [`ForecastEngine`] implements this for the
//! full discrete history (any d, asymmetry allowed), factorizing `Σ`
//! once so that per-path forecasts are a dot product.
//!
//! Closed forms for conditioning on a *single* observation time —
//! where the structure is transparent — are provided alongside:
//! the bivariate weights/MSFE, the d-variate one-observation solve,
//! and the exchangeable-correlation MSFE with its dimension limit.

use crate::kernel::{cross_cov, w_kernel, ModelParams};
use crate::linalg::{dot, Cholesky, Mat};
use crate::real::{c, Real};
use crate::simulate::SamplePath;
use crate::{Error, Result};

/// Precomputed forecast weights for one `(target, horizon)` pair.
///
/// `weights` aligns with levels stacked time-major, component-fastest:
/// entry `k·d + q` multiplies `B^{(q)}_{(k+1)Δ}`.
#[derive(Clone, Debug)]
pub struct ForecastWeights<F = f64> {
    pub target: usize,
    pub horizon: usize,
    pub weights: Vec<F>,
    /// Theoretical mean squared forecast error.
    pub msfe: F,
    /// Unconditional variance of the target, `σ_j² ((t+h)Δ)^{2H_j}`.
    pub variance: F,
}

/// A realized forecast.
#[derive(Clone, Debug)]
pub struct ForecastResult<F = f64> {
    /// Conditional-mean point forecast.
    pub value: F,
    /// Theoretical MSFE of the predictor (not a realized error).
    pub msfe: F,
}

impl<F: Real> ForecastWeights<F> {
    /// Number of conditioning time points.
    pub fn t(&self, d: usize) -> usize {
        self.weights.len() / d
    }

    /// Applies the weights to the first `t` observations of a path.
    pub fn apply(&self, path: &SamplePath<F>) -> Result<ForecastResult<F>> {
        let d = path.d();
        if self.weights.len() % d != 0 {
            return Err(Error::InvalidParams(format!(
                "weight vector of length {} does not match a {d}-component path",
                self.weights.len()
            )));
        }
        let t = self.weights.len() / d;
        if path.n() < t {
            return Err(Error::InsufficientData(format!(
                "forecast needs {t} observations, path has {}",
                path.n()
            )));
        }
        let mut value = F::zero();
        for k in 0..t {
            let row = path.levels().row(k);
            for (q, &x) in row.iter().enumerate() {
                value += self.weights[k * d + q] * x;
            }
        }
        Ok(ForecastResult {
            value,
            msfe: self.msfe,
        })
    }
}

/// Conditional-mean forecaster for a fixed conditioning grid
/// `Δ, 2Δ, …, tΔ`.
///
/// Construction builds and factorizes the `(t·d) × (t·d)` level
/// covariance once; [`ForecastEngine::weights`] then costs one
/// triangular solve per `(target, horizon)` pair and
/// [`ForecastWeights::apply`] one dot product per path.
#[derive(Clone, Debug)]
pub struct ForecastEngine<F = f64> {
    params: ModelParams<F>,
    t: usize,
    delta: F,
    factor: Cholesky<F>,
}

impl<F: Real> ForecastEngine<F> {
    pub fn new(params: ModelParams<F>, t: usize, delta: F) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParams(
                "need at least one conditioning observation".into(),
            ));
        }
        if !(delta > F::zero()) || !delta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "step size delta = {delta} must be positive and finite"
            )));
        }
        let d = params.d();
        let dim = t * d;
        let mut cov = Mat::zeros(dim, dim);
        for k in 0..t {
            let s = F::from_usize(k + 1).unwrap() * delta;
            for p in 0..d {
                let row = k * d + p;
                for l in 0..=k {
                    let u = F::from_usize(l + 1).unwrap() * delta;
                    for q in 0..d {
                        let col = l * d + q;
                        if col > row {
                            continue;
                        }
                        let v = cross_cov(&params, p, q, s, u);
                        cov.set(row, col, v);
                        cov.set(col, row, v);
                    }
                }
            }
        }
        let factor = Cholesky::new_jittered(&cov).map_err(|e| match e {
            Error::Numerical(msg) => Error::Inadmissible(format!(
                "level covariance over t={t} observations is not positive definite: {msg}"
            )),
            other => other,
        })?;
        Ok(ForecastEngine {
            params,
            t,
            delta,
            factor,
        })
    }

    pub fn params(&self) -> &ModelParams<F> {
        &self.params
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    /// Covariances of `B^{(j)}_{(t+h)Δ}` with the stacked observations.
    fn gamma_vec(&self, j: usize, h: usize) -> Vec<F> {
        let d = self.params.d();
        let tau = F::from_usize(self.t + h).unwrap() * self.delta;
        let mut g = Vec::with_capacity(self.t * d);
        for k in 0..self.t {
            let u = F::from_usize(k + 1).unwrap() * self.delta;
            for q in 0..d {
                g.push(cross_cov(&self.params, j, q, tau, u));
            }
        }
        g
    }

    /// Optimal weights and theoretical MSFE for forecasting component
    /// `j` at horizon `h` steps past the conditioning window.
    pub fn weights(&self, j: usize, h: usize) -> Result<ForecastWeights<F>> {
        let d = self.params.d();
        if j >= d {
            return Err(Error::InvalidParams(format!(
                "target component {j} out of range for d = {d}"
            )));
        }
        if h == 0 {
            return Err(Error::InvalidParams("forecast horizon must be positive".into()));
        }
        let g = self.gamma_vec(j, h);
        let w = self.factor.solve(&g);
        let tau = F::from_usize(self.t + h).unwrap() * self.delta;
        let variance = self.params.sigma2(j) * tau.abs().powf(c::<F>(2.0) * self.params.hurst(j));
        let msfe = variance - dot(&g, &w);
        Ok(ForecastWeights {
            target: j,
            horizon: h,
            weights: w,
            msfe,
            variance,
        })
    }

    /// Theoretical MSFE of the optimal forecast of component `j` at
    /// horizon `h`.
    pub fn msfe(&self, j: usize, h: usize) -> Result<F> {
        Ok(self.weights(j, h)?.msfe)
    }

    /// Convenience: weights computed and applied to one path.
    pub fn forecast(&self, path: &SamplePath<F>, j: usize, h: usize) -> Result<ForecastResult<F>> {
        if (path.delta() - self.delta).abs()
            > c::<F>(1e-12) * self.delta.abs().max(path.delta().abs())
        {
            return Err(Error::InvalidParams(format!(
                "path step {} does not match engine step {}",
                path.delta(),
                self.delta
            )));
        }
        self.weights(j, h)?.apply(path)
    }
}

// ---------------------------------------------------------------------------
// Closed forms for conditioning on a single observation time.
// ---------------------------------------------------------------------------

/// Weights and MSFE of the one-observation bivariate forecast.
#[derive(Clone, Debug)]
pub struct OneObsBivariate<F = f64> {
    /// Weight on the target's own level `B_t^{(1)}`.
    pub w_own: F,
    /// Weight on the other component's level `B_t^{(2)}`.
    pub w_cross: F,
    pub msfe: F,
}

fn require_time_reversible<F: Real>(p: &ModelParams<F>) -> Result<()> {
    if !p.is_time_reversible() {
        return Err(Error::InvalidParams(
            "the single-observation closed forms hold for time-reversible models (eta = 0)".into(),
        ));
    }
    Ok(())
}

/// Closed-form optimal forecast of `B^{(1)}_{t+h}` from the single
/// observation `(B_t^{(1)}, B_t^{(2)})` of a time-reversible bivariate
/// fBm:
///
/// `w_own  = (w(t,h,H₁)/t^{2H₁} − ρ² w(t,h,H̄)/t^{2H̄}) / (1−ρ²)`,
/// `w_cross = ρ (σ₁/σ₂)(w(t,h,H̄)/t^{2H₂} − w(t,h,H₁)/t^{2H̄}) / (1−ρ²)`,
///
/// with `H̄ = (H₁+H₂)/2`, and MSFE
/// `σ₁²(t+h)^{2H₁} − σ₁² w₁²/((1−ρ²)t^{2H₁})
///  + σ₁²ρ²/(1−ρ²) · (2w₁w̄/t^{2H̄} − w̄²/t^{2H₂})`.
pub fn forecast_one_obs_bivariate<F: Real>(
    params: &ModelParams<F>,
    t: F,
    h: F,
) -> Result<OneObsBivariate<F>> {
    if params.d() != 2 {
        return Err(Error::InvalidParams(format!(
            "the bivariate closed form needs d = 2, got d = {}",
            params.d()
        )));
    }
    require_time_reversible(params)?;
    if !(t > F::zero()) || !(h > F::zero()) {
        return Err(Error::InvalidParams(
            "observation time t and horizon h must be positive".into(),
        ));
    }
    let (h1, h2) = (params.hurst(0), params.hurst(1));
    let rho = params.rho(0, 1);
    let one = F::one();
    if rho.abs() >= one {
        return Err(Error::InvalidParams("the closed form needs |rho| < 1".into()));
    }
    let two = c::<F>(2.0);
    let hbar = (h1 + h2) / two;
    let (s1, s2) = (params.sigma2(0).sqrt(), params.sigma2(1).sqrt());
    let w1 = w_kernel(t, h, h1);
    let wb = w_kernel(t, h, hbar);
    let r2 = rho * rho;
    let denom = one - r2;
    let w_own = (w1 / t.powf(two * h1) - r2 * wb / t.powf(two * hbar)) / denom;
    let w_cross =
        rho / denom * (s1 / s2) * (wb / t.powf(two * h2) - w1 / t.powf(two * hbar));
    let sig2 = params.sigma2(0);
    let msfe = sig2 * (t + h).powf(two * h1) - sig2 * w1 * w1 / (denom * t.powf(two * h1))
        + sig2 * r2 / denom
            * (two * w1 * wb / t.powf(two * hbar) - wb * wb / t.powf(two * h2));
    Ok(OneObsBivariate {
        w_own,
        w_cross,
        msfe,
    })
}

/// Optimal forecast of `B^{(j)}_{t+h}` from a single observation of
/// all `d` components of a time-reversible mfBm. Returns the weight on
/// each component's level, and the MSFE.
///
/// The linear system is solved in the scaled variables
/// `Σ y = (γ_k t^{−H_k})_k`, `w_k = y_k t^{−H_k}`, where `Σ` is the
/// unit-time level covariance `ρ_{jk} σ_j σ_k` — an exact reformulation
/// of the conditional mean that keeps the matrix independent of `t`.
pub fn forecast_one_obs<F: Real>(
    params: &ModelParams<F>,
    j: usize,
    t: F,
    h: F,
) -> Result<(Vec<F>, F)> {
    require_time_reversible(params)?;
    if j >= params.d() {
        return Err(Error::InvalidParams(format!(
            "target component {j} out of range for d = {}",
            params.d()
        )));
    }
    if !(t > F::zero()) || !(h > F::zero()) {
        return Err(Error::InvalidParams(
            "observation time t and horizon h must be positive".into(),
        ));
    }
    let d = params.d();
    let two = c::<F>(2.0);
    let mut sigma = Mat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let v = params.rho(a, b) * (params.sigma2(a) * params.sigma2(b)).sqrt();
            sigma.set(a, b, v);
        }
    }
    let factor = Cholesky::new_jittered(&sigma).map_err(|e| match e {
        Error::Numerical(msg) => Error::Inadmissible(format!(
            "the correlation matrix is not positive definite: {msg}"
        )),
        other => other,
    })?;
    // γ_k = Cov(B_{t+h}^{(j)}, B_t^{(k)}) = Σ_{jk} w(t, h, (H_j+H_k)/2).
    let mut gamma = Vec::with_capacity(d);
    let mut scaled = Vec::with_capacity(d);
    for k in 0..d {
        let hbar = (params.hurst(j) + params.hurst(k)) / two;
        let g = sigma.get(j, k) * w_kernel(t, h, hbar);
        gamma.push(g);
        scaled.push(g / t.powf(params.hurst(k)));
    }
    let y = factor.solve(&scaled);
    let weights: Vec<F> = y
        .iter()
        .zip(0..d)
        .map(|(&yk, k)| yk / t.powf(params.hurst(k)))
        .collect();
    let variance = params.sigma2(j) * (t + h).powf(two * params.hurst(j));
    let msfe = variance - dot(&gamma, &weights);
    Ok((weights, msfe))
}

/// MSFE of the one-observation forecast of component 1 in the
/// exchangeable design: unit scales, every off-diagonal correlation
/// equal to `rho`, target exponent `h_target`, all `d − 1` remaining
/// components sharing `h_other`. Valid for `ρ ∈ (−1/(d−1), 1)`;
/// `d = 1` recovers the univariate MSFE for any such ρ.
pub fn msfe_exchangeable<F: Real>(
    d: usize,
    rho: F,
    h_target: F,
    h_other: F,
    t: F,
    h: F,
) -> Result<F> {
    if d == 0 {
        return Err(Error::InvalidParams("dimension must be at least 1".into()));
    }
    if !(t > F::zero()) || !(h > F::zero()) {
        return Err(Error::InvalidParams(
            "observation time t and horizon h must be positive".into(),
        ));
    }
    let one = F::one();
    let df = c::<F>(d as f64);
    if d > 1 {
        let lower = -(one / (df - one));
        if !(rho > lower && rho < one) {
            return Err(Error::InvalidParams(format!(
                "exchangeable correlation must lie in (-1/(d-1), 1): rho = {rho}, d = {d}"
            )));
        }
    }
    let two = c::<F>(2.0);
    let hbar = (h_target + h_other) / two;
    let w1 = w_kernel(t, h, h_target);
    let wc = w_kernel(t, h, hbar);
    let dd = one + (df - two) * rho - (df - one) * rho * rho;
    let q = ((one + (df - two) * rho) * w1 * w1 / t.powf(two * h_target)
        - two * (df - one) * rho * rho * w1 * wc / t.powf(h_target + h_other)
        + (df - one) * rho * rho * wc * wc / t.powf(two * h_other))
        / dd;
    Ok((t + h).powf(two * h_target) - q)
}

/// `d → ∞` limit of [`msfe_exchangeable`] (requires `ρ ∈ (0, 1)`).
pub fn msfe_exchangeable_limit<F: Real>(
    rho: F,
    h_target: F,
    h_other: F,
    t: F,
    h: F,
) -> Result<F> {
    if !(rho > F::zero() && rho < F::one()) {
        return Err(Error::InvalidParams(
            "the dimension limit needs rho in (0, 1)".into(),
        ));
    }
    let two = c::<F>(2.0);
    let hbar = (h_target + h_other) / two;
    let w1 = w_kernel(t, h, h_target);
    let wc = w_kernel(t, h, hbar);
    let q = (w1 * w1 / t.powf(two * h_target) - two * rho * w1 * wc / t.powf(h_target + h_other)
        + rho * wc * wc / t.powf(two * h_other))
        / (F::one() - rho);
    Ok((t + h).powf(two * h_target) - q)
}

/// Univariate one-observation MSFE,
/// `σ²((t+h)^{2H} − w(t,h,H)²/t^{2H})`.
pub fn msfe_univariate_one_obs<F: Real>(hurst: F, sigma2: F, t: F, h: F) -> F {
    let two = c::<F>(2.0);
    let w1 = w_kernel(t, h, hurst);
    sigma2 * ((t + h).powf(two * hurst) - w1 * w1 / t.powf(two * hurst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::PathSampler;

    fn biv(rho: f64) -> ModelParams {
        ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, rho, 0.0).unwrap()
    }

    #[test]
    fn one_obs_closed_form_matches_direct_solve() {
        for &rho in &[0.0, 0.3, 0.8, -0.5] {
            let p = biv(rho);
            for &(t, h) in &[(1.0, 1.0), (5.0, 2.0), (0.5, 3.0)] {
                let cf = forecast_one_obs_bivariate(&p, t, h).unwrap();
                let (w, msfe) = forecast_one_obs(&p, 0, t, h).unwrap();
                assert!((cf.w_own - w[0]).abs() < 1e-12);
                assert!((cf.w_cross - w[1]).abs() < 1e-12);
                assert!((cf.msfe - msfe).abs() < 1e-12);
            }
        }
        // Unequal scales exercise the σ₁/σ₂ factor.
        let p: ModelParams = ModelParams::bivariate(0.2, 0.6, 2.0, 0.5, 0.4, 0.0).unwrap();
        let cf = forecast_one_obs_bivariate(&p, 2.0, 1.0).unwrap();
        let (w, msfe) = forecast_one_obs(&p, 0, 2.0, 1.0).unwrap();
        assert!((cf.w_own - w[0]).abs() < 1e-12);
        assert!((cf.w_cross - w[1]).abs() < 1e-12);
        assert!((cf.msfe - msfe).abs() < 1e-12);
    }

    #[test]
    fn one_obs_matches_full_engine_with_one_conditioning_point() {
        // An engine with t = 1 conditioning point at time Δ = 3 and
        // horizon h steps is the one-observation forecast at t = 3,
        // h' = 3h.
        let p = biv(0.8);
        let engine = ForecastEngine::new(p.clone(), 1, 3.0).unwrap();
        for h in 1..=3 {
            let full = engine.weights(0, h).unwrap();
            let (w, msfe) = forecast_one_obs(&p, 0, 3.0, 3.0 * h as f64).unwrap();
            assert!((full.weights[0] - w[0]).abs() < 1e-12);
            assert!((full.weights[1] - w[1]).abs() < 1e-12);
            assert!(((full.msfe - msfe) / msfe).abs() < 1e-12);
        }
    }

    #[test]
    fn exchangeable_closed_form_matches_direct_solve() {
        let (d, rho, h1, ho) = (5usize, 0.3f64, 0.3f64, 0.6f64);
        let p: ModelParams = ModelParams::exchangeable(d, h1, ho, rho).unwrap();
        let (_, msfe) = forecast_one_obs(&p, 0, 7.0, 2.0).unwrap();
        let closed = msfe_exchangeable(d, rho, h1, ho, 7.0, 2.0).unwrap();
        assert!(
            ((closed - msfe) / msfe).abs() < 1e-12,
            "closed {closed} vs direct {msfe}"
        );
        // d = 2 agrees with the bivariate closed form.
        let p2 = biv(0.8);
        let cf = forecast_one_obs_bivariate(&p2, 1.0, 1.0).unwrap();
        let ex = msfe_exchangeable(2, 0.8, 0.1, 0.4, 1.0, 1.0).unwrap();
        assert!((cf.msfe - ex).abs() < 1e-12);
        // d = 1 is the univariate MSFE regardless of rho.
        let u: f64 = msfe_exchangeable(1, 0.9, 0.4, 0.1, 1.0, 1.0).unwrap();
        assert!((u - msfe_univariate_one_obs(0.4, 1.0, 1.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dimension_curve_reference_ratios() {
        // Exchangeable design, ρ = 0.8, target H₁ = 0.4 among H = 0.1
        // components: the d = 1000 relative MSFE is within 1e-4 of its
        // dimension limit ≈ 0.8915 (t = 1) and ≈ 0.7747 (t = 10).
        for (t, want) in [(1.0f64, 0.891459f64), (10.0, 0.774661)] {
            let univ = msfe_univariate_one_obs(0.4, 1.0, t, 1.0);
            let big = msfe_exchangeable(1000, 0.8, 0.4, 0.1, t, 1.0).unwrap() / univ;
            assert!((big - want).abs() < 1e-4, "t={t}: ratio {big}, want {want}");
            // d = 1000 sits ~1e-4 above its dimension limit.
            let lim = msfe_exchangeable_limit(0.8, 0.4, 0.1, t, 1.0).unwrap() / univ;
            assert!((lim - want).abs() < 1e-3, "t={t}: limit {lim}");
            assert!(big > lim, "finite d stays above the limit");
        }
    }

    #[test]
    fn msfe_decreases_with_correlation_and_dimension() {
        // |ρ| ↑ reduces the one-observation MSFE.
        let mut prev = f64::INFINITY;
        for &rho in &[0.0, 0.2, 0.4, 0.6, 0.8, 0.9] {
            let m = forecast_one_obs_bivariate(&biv(rho), 1.0, 1.0)
                .unwrap()
                .msfe;
            assert!(m <= prev + 1e-14, "MSFE not decreasing at rho={rho}");
            prev = m;
        }
        // d ↑ reduces the exchangeable MSFE.
        let mut prev = f64::INFINITY;
        for d in 1..=30 {
            let m = msfe_exchangeable(d, 0.5, 0.4, 0.1, 1.0, 1.0).unwrap();
            assert!(m <= prev + 1e-14, "MSFE not decreasing at d={d}");
            prev = m;
        }
    }

    #[test]
    fn full_history_reference_values() {
        // Univariate H = 0.1, t = 500 daily observations, one step
        // ahead: RMSFE frozen from an independent implementation.
        let p: ModelParams = ModelParams::univariate(0.1, 1.0).unwrap();
        let engine = ForecastEngine::new(p, 500, 1.0 / 250.0).unwrap();
        let rmsfe = engine.msfe(0, 1).unwrap().sqrt();
        assert!(
            ((rmsfe - 0.4801902531596244) / rmsfe).abs() < 1e-7,
            "univariate RMSFE = {rmsfe}"
        );
        // Bivariate at the correlation bound.
        let p = biv(0.8);
        let engine = ForecastEngine::new(p, 500, 1.0 / 250.0).unwrap();
        let rmsfe = engine.msfe(0, 1).unwrap().sqrt();
        assert!(
            ((rmsfe - 0.4245883589171705) / rmsfe).abs() < 1e-7,
            "bivariate RMSFE = {rmsfe}"
        );
    }

    #[test]
    fn equal_hurst_exponents_give_no_multivariate_gain() {
        // With H₁ = H₂ the optimal full-history forecast ignores the
        // second component entirely.
        let p: ModelParams = ModelParams::bivariate(0.3, 0.3, 1.0, 2.0, 0.7, 0.0).unwrap();
        let joint = ForecastEngine::new(p, 20, 0.1).unwrap();
        let w = joint.weights(0, 1).unwrap();
        for k in 0..20 {
            assert!(
                w.weights[k * 2 + 1].abs() < 1e-8,
                "cross weight {} at k={k}",
                w.weights[k * 2 + 1]
            );
        }
        let solo_params: ModelParams = ModelParams::univariate(0.3, 1.0).unwrap();
        let solo = ForecastEngine::new(solo_params, 20, 0.1).unwrap();
        let mj = joint.msfe(0, 1).unwrap();
        let ms = solo.msfe(0, 1).unwrap();
        assert!(((mj - ms) / ms).abs() < 1e-9, "joint {mj} vs solo {ms}");
    }

    #[test]
    fn forecast_is_unbiased_and_msfe_calibrated() {
        // Empirical mean squared error of the optimal forecast over
        // simulated paths must match the theoretical MSFE.
        let p = biv(0.8);
        let t = 50;
        let h = 2;
        let sampler = PathSampler::new(p.clone(), t + h, 0.01).unwrap();
        let engine = ForecastEngine::new(p, t, 0.01).unwrap();
        let w = engine.weights(0, h).unwrap();
        let reps = 4000;
        let paths = sampler.sample_many(77, reps);
        let (mut se, mut bias) = (0.0f64, 0.0f64);
        for path in &paths {
            let f = w.apply(path).unwrap();
            let err = path.level(t + h - 1, 0) - f.value;
            se += err * err;
            bias += err;
        }
        let emp = se / reps as f64;
        let msfe = w.msfe;
        assert!(
            ((emp - msfe) / msfe).abs() < 0.08,
            "empirical {emp} vs theoretical {msfe}"
        );
        // Prediction errors average to zero.
        assert!(bias.abs() / reps as f64 <= 4.0 * (msfe / reps as f64).sqrt());
    }

    #[test]
    fn engine_rejects_mismatched_paths() {
        let p = biv(0.4);
        let engine = ForecastEngine::new(p.clone(), 10, 0.01).unwrap();
        let sampler = PathSampler::new(p, 12, 0.02).unwrap();
        let path = sampler.sample_replication(1, 0);
        assert!(engine.forecast(&path, 0, 1).is_err());
        assert!(engine.weights(2, 1).is_err());
        assert!(engine.weights(0, 0).is_err());
    }

    #[test]
    fn asymmetric_models_forecast_through_the_engine() {
        // η ≠ 0 is allowed in the full-history engine (the closed
        // forms reject it).
        let p: ModelParams = ModelParams::bivariate(0.1, 0.4, 1.0, 1.0, 0.5, 0.2).unwrap();
        let engine = ForecastEngine::new(p.clone(), 30, 0.01).unwrap();
        let w = engine.weights(0, 1).unwrap();
        assert!(w.msfe > 0.0 && w.msfe < w.variance);
        assert!(forecast_one_obs(&p, 0, 1.0, 1.0).is_err());
        assert!(forecast_one_obs_bivariate(&p, 1.0, 1.0).is_err());
    }
}
