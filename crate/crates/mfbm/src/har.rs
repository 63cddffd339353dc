//! Heterogeneous autoregressive (HAR) baselines.
//!
//! The HAR regression explains realized volatility `h` steps ahead by
//! today's value and its trailing weekly (5-day) and monthly (22-day)
//! averages; the vector variant (VHAR) adds the same three averages of
//! every other series in a panel, fit row by row under a diagonal
//! error covariance. Both are direct `h`-step projections — one OLS
//! fit per horizon with the `h`-step-ahead response on the left — and
//! serve as the regression benchmark the conditional-mean forecasts
//! are compared against.

use crate::linalg::{dot, lstsq, Mat};
use crate::real::Real;
use crate::{Error, Result};

/// Trailing window lengths of the HAR regressors.
const WEEK: usize = 5;
const MONTH: usize = 22;

/// A fitted HAR/VHAR row together with the forecast it produces.
#[derive(Clone, Debug)]
pub struct HarForecast<F = f64> {
    /// `(1, daily, weekly, monthly)` coefficients; for VHAR the own
    /// block comes first, then each other series' three averages in
    /// column order (`1 + 3J` entries in total).
    pub coefficients: Vec<F>,
    /// Forecast from the most recent regressor row.
    pub forecast: F,
    /// True when the design was numerically rank deficient and the
    /// minimum-norm coefficients were used.
    pub rank_deficient: bool,
}

fn trailing_mean<F: Real>(rv: &[F], t: usize, window: usize) -> F {
    let sum: F = rv[t + 1 - window..=t].iter().copied().sum();
    sum / F::from_usize(window).unwrap()
}

/// Regressor row `(1, RV_t, weekly mean, monthly mean)` at time `t`.
fn har_row<F: Real>(rv: &[F], t: usize) -> [F; 4] {
    [
        F::one(),
        rv[t],
        trailing_mean(rv, t, WEEK),
        trailing_mean(rv, t, MONTH),
    ]
}

/// Builds the HAR design matrix and `h`-step-ahead response.
///
/// Rows are `(1, RV_t, RV_{t|t−4}, RV_{t|t−21})` for
/// `t = 21, …, len−1−h` (zero-based), aligned to responses
/// `RV_{t+h}`; `len − 21 − h` rows in total.
pub fn har_design<F: Real>(rv: &[F], h: usize) -> Result<(Mat<F>, Vec<F>)> {
    if h == 0 {
        return Err(Error::InvalidParams("forecast horizon must be positive".into()));
    }
    let len = rv.len();
    if len < MONTH + h + 4 {
        return Err(Error::InsufficientData(format!(
            "HAR at horizon {h} needs at least {} observations, got {len}",
            MONTH + h + 4
        )));
    }
    let rows = len - MONTH + 1 - h;
    let mut x = Mat::zeros(rows, 4);
    let mut y = Vec::with_capacity(rows);
    for (r, t) in ((MONTH - 1)..(len - h)).enumerate() {
        x.row_mut(r).copy_from_slice(&har_row(rv, t));
        y.push(rv[t + h]);
    }
    Ok((x, y))
}

/// Fits the HAR regression and forecasts `h` steps past the end of
/// the series.
pub fn har_fit_forecast<F: Real>(rv: &[F], h: usize) -> Result<HarForecast<F>> {
    let (x, y) = har_design(rv, h)?;
    let fit = lstsq(&x, &y)?;
    let latest = har_row(rv, rv.len() - 1);
    Ok(HarForecast {
        forecast: dot(&fit.beta, &latest),
        coefficients: fit.beta,
        rank_deficient: fit.rank_deficient,
    })
}

/// Regressor row of the VHAR equation for `target` at time `t`: own
/// `(daily, weekly, monthly)` block first, then the blocks of the
/// remaining series in column order, behind an intercept.
fn vhar_row<F: Real>(panel: &Mat<F>, target: usize, t: usize) -> Vec<F> {
    let j = panel.cols();
    let mut row = Vec::with_capacity(1 + 3 * j);
    row.push(F::one());
    let mut push_block = |series: usize| {
        let col = panel.column(series);
        row.push(col[t]);
        row.push(trailing_mean(&col, t, WEEK));
        row.push(trailing_mean(&col, t, MONTH));
    };
    push_block(target);
    for s in 0..j {
        if s != target {
            push_block(s);
        }
    }
    row
}

/// Fits the row-wise VHAR equation for one target series of a panel
/// (rows = times, columns = series) and forecasts `h` steps ahead.
///
/// A single-column panel reduces exactly to [`har_fit_forecast`].
pub fn vhar_fit_forecast<F: Real>(
    panel: &Mat<F>,
    target: usize,
    h: usize,
) -> Result<HarForecast<F>> {
    if h == 0 {
        return Err(Error::InvalidParams("forecast horizon must be positive".into()));
    }
    let j = panel.cols();
    if target >= j {
        return Err(Error::InvalidParams(format!(
            "target series {target} out of range for a {j}-column panel"
        )));
    }
    let len = panel.rows();
    let p = 1 + 3 * j;
    if len < MONTH + h + p {
        return Err(Error::InsufficientData(format!(
            "VHAR with {j} series at horizon {h} needs at least {} observations, got {len}",
            MONTH + h + p
        )));
    }
    let rows = len - MONTH + 1 - h;
    let mut x = Mat::zeros(rows, p);
    let mut y = Vec::with_capacity(rows);
    for (r, t) in ((MONTH - 1)..(len - h)).enumerate() {
        let row = vhar_row(panel, target, t);
        x.row_mut(r).copy_from_slice(&row);
        y.push(panel.get(t + h, target));
    }
    let fit = lstsq(&x, &y)?;
    let latest = vhar_row(panel, target, len - 1);
    Ok(HarForecast {
        forecast: dot(&fit.beta, &latest),
        coefficients: fit.beta,
        rank_deficient: fit.rank_deficient,
    })
}
