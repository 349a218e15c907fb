//! Inequality and welfare observables of a class distribution, plus
//! convergence diagnostics of trajectories.

use crate::coeffs::CoefficientSet;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{eval_rhs, tax_flow, Distribution};

/// Default first class (0-based) of the top-third tail window on the standard
/// 25-class grid.
pub const DEFAULT_TAIL_START: usize = 16;

/// Convergence-norm values at or below this floor are treated as numerical
/// noise and excluded from the decay-rate fit.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Welfare observables warn when evaluated this far from stationarity
/// (100x the default equilibrium tolerance).
const SOFT_RESIDUAL_WARN: f64 = 1e-8;

/// Piecewise-linear Lorenz curve: cumulative population share against
/// cumulative income share, classes in ascending income order.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Gini index by exact trapezoidal integration of the curve:
    /// `G = 1 - sum_k (X_k - X_{k-1}) (Y_k + Y_{k-1})`.
    pub fn gini(&self) -> f64 {
        let mut twice_area = 0.0;
        for pair in self.points.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            twice_area += (x1 - x0) * (y1 + y0);
        }
        1.0 - twice_area
    }
}

/// Lorenz curve of a distribution; the first point is `(0, 0)` and the last
/// one `(1, 1)` up to the population drift of the input.
pub fn lorenz(x: &Distribution, incomes: &[f64]) -> LorenzCurve {
    let f = x.fractions();
    assert_eq!(f.len(), incomes.len(), "state/income length mismatch");
    let mut points = Vec::with_capacity(f.len() + 1);
    points.push((0.0, 0.0));
    let mut cum_pop = 0.0;
    let mut cum_income = 0.0;
    for (xi, ri) in f.iter().zip(incomes) {
        cum_pop += xi;
        cum_income += xi * ri;
        points.push((cum_pop, cum_income));
    }
    // Normalize the income axis by the total so the curve ends at 1 exactly.
    let total_income = cum_income;
    for p in points.iter_mut() {
        p.1 /= total_income;
    }
    LorenzCurve { points }
}

/// Gini index of a distribution over the given income grid.
pub fn gini(x: &Distribution, incomes: &[f64]) -> f64 {
    lorenz(x, incomes).gini()
}

fn warn_if_not_stationary(x: &Distribution, coeffs: &CoefficientSet, what: &str) {
    let residual = eval_rhs(x, coeffs)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if residual > SOFT_RESIDUAL_WARN {
        log::warn!(
            "{what} evaluated at a non-stationary state (residual {residual:.3e}); \
             the value is only meaningful at equilibrium"
        );
    }
}

/// Total welfare flow `W = S * (sum of the non-top class fractions) *
/// sum_{h,k} p[h][k] theta_k x_h x_k`.
///
/// Meaningful at equilibrium; warns (via `log`) when the state is visibly
/// non-stationary.
pub fn tax_revenue(x: &Distribution, coeffs: &CoefficientSet) -> f64 {
    assert_eq!(x.len(), coeffs.n(), "state/coefficient length mismatch");
    warn_if_not_stationary(x, coeffs, "tax revenue");
    let f = x.fractions();
    let sum_low: f64 = f[..f.len() - 1].iter().sum();
    coeffs.exchange_amount() * sum_low * tax_flow(f, coeffs)
}

/// Per-class promotion rates: the probability flux of climbing from class `i`
/// to `i + 1` through welfare transfers and through direct exchanges.
#[derive(Debug, Clone, PartialEq)]
pub struct PromotionProfile {
    /// Welfare-driven promotion rate out of class `i`, for `i = 0..n-1`.
    pub welfare: Vec<f64>,
    /// Exchange-driven promotion rate out of class `i`.
    pub exchanges: Vec<f64>,
    /// `welfare / exchanges`; `None` where the exchange rate vanishes.
    pub ratio: Vec<Option<f64>>,
}

/// Welfare and exchange promotion rates of every class below the top one.
///
/// The double sum over interacting pairs is computed once and reused for all
/// classes. Meaningful at equilibrium; warns when visibly non-stationary.
pub fn promotion_profile(x: &Distribution, coeffs: &CoefficientSet) -> PromotionProfile {
    let n = coeffs.n();
    assert_eq!(x.len(), n, "state/coefficient length mismatch");
    warn_if_not_stationary(x, coeffs, "promotion profile");

    let f = x.fractions();
    let r = coeffs.incomes();
    let s = coeffs.exchange_amount();
    let tau = coeffs.tau();
    let theta = coeffs.theta();
    let flow = tax_flow(f, coeffs);

    let mut welfare = Vec::with_capacity(n - 1);
    let mut exchanges = Vec::with_capacity(n - 1);
    let mut ratio = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let gap = r[i + 1] - r[i];
        let w = s / gap * flow;
        // Income received per direct exchange, net of the effective tax.
        let received: f64 = (0..n)
            .map(|k| coeffs.payment(k, i) * f[k])
            .sum::<f64>()
            * (1.0 - 0.5 * (theta[i] + tau[i]));
        let e = s / gap * received;
        welfare.push(w);
        exchanges.push(e);
        ratio.push(if e > 0.0 { Some(w / e) } else { None });
    }
    PromotionProfile {
        welfare,
        exchanges,
        ratio,
    }
}

/// Per-class difference between two distributions on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDelta {
    /// `alternative - baseline`, per class.
    pub absolute: Vec<f64>,
    /// Percent change relative to the baseline; `None` where the baseline
    /// class is empty.
    pub percent: Vec<Option<f64>>,
}

/// Absolute and percent class-population changes from `baseline` to `alt`.
pub fn class_delta(baseline: &Distribution, alt: &Distribution) -> ClassDelta {
    assert_eq!(baseline.len(), alt.len(), "distribution length mismatch");
    let absolute: Vec<f64> = alt
        .fractions()
        .iter()
        .zip(baseline.fractions())
        .map(|(a, b)| a - b)
        .collect();
    let percent = absolute
        .iter()
        .zip(baseline.fractions())
        .map(|(d, b)| if *b != 0.0 { Some(100.0 * d / b) } else { None })
        .collect();
    ClassDelta { absolute, percent }
}

/// Least-squares fit of the distribution tail in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Slope of `ln x_k` against `ln r_k` (negative for decaying tails).
    pub exponent: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
}

/// Fits `ln x_k` against `ln r_k` over the classes `k >= k_min`.
///
/// Requires at least five tail points, all strictly positive.
pub fn tail_exponent(x: &Distribution, incomes: &[f64], k_min: usize) -> Result<TailFit> {
    let f = x.fractions();
    assert_eq!(f.len(), incomes.len(), "state/income length mismatch");
    let n = f.len();
    let have = n.saturating_sub(k_min);
    if have < 5 {
        return Err(Error::InsufficientPoints {
            context: "tail fit".into(),
            need: 5,
            have,
        });
    }
    if let Some((k, v)) = f
        .iter()
        .enumerate()
        .skip(k_min)
        .find(|(_, v)| **v <= 0.0)
    {
        return Err(Error::InvalidDistribution(format!(
            "tail fraction x[{k}] = {v} is not positive; cannot take its logarithm"
        )));
    }
    let xs: Vec<f64> = incomes[k_min..].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = f[k_min..].iter().map(|v| v.ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys);
    Ok(TailFit {
        exponent: slope,
        r_squared: r2,
    })
}

/// Delayed self-distance of a trajectory and its fitted exponential decay.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    /// Comparison delay.
    pub xi: f64,
    /// Sample times `t` (those with `t + xi` inside the trajectory span).
    pub times: Vec<f64>,
    /// `F(t) = || x(t) - x(t + xi) ||_2`, with `x(t + xi)` linearly
    /// interpolated between retained samples.
    pub values: Vec<f64>,
    /// Exponential decay rate fitted on `ln F` over the values above
    /// [`NOISE_FLOOR`] (positive for decaying series); `None` with fewer than
    /// two usable points.
    pub fitted_rate: Option<f64>,
    /// Coefficient of determination of that fit.
    pub fit_r2: Option<f64>,
}

/// Measures how far the trajectory still moves over a horizon `xi`:
/// `F(t) = || x(t) - x(t + xi) ||_2` for every retained sample `t` with
/// `t + xi` inside the span.
pub fn convergence_norm(traj: &Trajectory, xi: f64) -> Result<ConvergenceSeries> {
    if !xi.is_finite() || xi <= 0.0 {
        return Err(Error::InvalidRange(format!(
            "comparison delay must be positive, got {xi}"
        )));
    }
    let times = traj.times();
    if times.len() < 2 {
        return Err(Error::SpanTooShort {
            span: 0.0,
            xi,
        });
    }
    let t_end = *times.last().unwrap();
    let span = t_end - times[0];
    if span < xi {
        return Err(Error::SpanTooShort { span, xi });
    }

    let mut out_times = Vec::new();
    let mut values = Vec::new();
    for (idx, &t) in times.iter().enumerate() {
        let target = t + xi;
        if target > t_end {
            break;
        }
        let shifted = interpolate_state(traj, target);
        let dist2: f64 = traj
            .state(idx)
            .iter()
            .zip(&shifted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        out_times.push(t);
        values.push(dist2.sqrt());
    }

    let fit_ts: Vec<f64> = out_times
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v > NOISE_FLOOR)
        .map(|(t, _)| *t)
        .collect();
    let fit_ys: Vec<f64> = values
        .iter()
        .filter(|v| **v > NOISE_FLOOR)
        .map(|v| v.ln())
        .collect();
    let (fitted_rate, fit_r2) = if fit_ts.len() >= 2 {
        let (slope, _, r2) = linear_fit(&fit_ts, &fit_ys);
        (Some(-slope), Some(r2))
    } else {
        (None, None)
    };

    Ok(ConvergenceSeries {
        xi,
        times: out_times,
        values,
        fitted_rate,
        fit_r2,
    })
}

/// State at an arbitrary time inside the trajectory span, linearly
/// interpolated between the two bracketing samples.
fn interpolate_state(traj: &Trajectory, target: f64) -> Vec<f64> {
    let times = traj.times();
    // Index of the first sample at or beyond the target.
    let hi = times.partition_point(|t| *t < target);
    if hi == 0 {
        return traj.state(0).to_vec();
    }
    if hi >= times.len() {
        return traj.state(times.len() - 1).to_vec();
    }
    let (t0, t1) = (times[hi - 1], times[hi]);
    if t1 == target {
        return traj.state(hi).to_vec();
    }
    let frac = (target - t0) / (t1 - t0);
    traj.state(hi - 1)
        .iter()
        .zip(traj.state(hi))
        .map(|(a, b)| a + frac * (b - a))
        .collect()
}

/// First time at which the convergence norm falls to `eps`, linearly
/// interpolated between the bracketing samples.
pub fn convergence_time(series: &ConvergenceSeries, eps: f64) -> Result<f64> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidRange(format!(
            "threshold must be positive, got {eps}"
        )));
    }
    if series.values.is_empty() {
        return Err(Error::ThresholdNotReached {
            eps,
            min: f64::INFINITY,
        });
    }
    if series.values[0] <= eps {
        return Ok(series.times[0]);
    }
    for i in 1..series.values.len() {
        let (f0, f1) = (series.values[i - 1], series.values[i]);
        if f1 <= eps {
            let (t0, t1) = (series.times[i - 1], series.times[i]);
            return Ok(t0 + (f0 - eps) * (t1 - t0) / (f0 - f1));
        }
    }
    let min = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
    Err(Error::ThresholdNotReached { eps, min })
}

/// Ordinary least squares of `ys` on `xs`: returns `(slope, intercept, r2)`.
/// A perfectly constant response yields `r2 = 1`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
