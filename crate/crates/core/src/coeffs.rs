//! Coefficient tables of the exchange model: the progressive tax schedule, the
//! evasion-reduced effective rates, the payment probabilities `p[h][k]` and the
//! banded transition tensor `C_i[h][k]`.
//!
//! All indices are 0-based: class 0 is the poorest, class `n - 1` the richest.

use crate::config::ModelConfig;
use crate::error::{Error, Result};

/// Linear progressive tax schedule between `tau_min` (poorest class) and
/// `tau_max` (richest class).
///
/// Assumes `n >= 2` and rates in `[0, 1)`; [`CoefficientSet::build`] validates
/// these before calling.
pub fn tax_schedule(n: usize, tau_min: f64, tau_max: f64) -> Vec<f64> {
    let span = tau_max - tau_min;
    let denom = (n - 1) as f64;
    (0..n)
        .map(|j| tau_min + span * (j as f64 / denom))
        .collect()
}

/// Effective tax rates under evasion: `theta_k = (1 - q) tau_k`.
pub fn effective_rates(tau: &[f64], evasion: f64) -> Vec<f64> {
    tau.iter().map(|t| (1.0 - evasion) * t).collect()
}

/// Probability `p[h][k]` that an individual of class `h` pays an individual of
/// class `k` during unit time, flattened row-major over an `n x n` grid.
///
/// Base rule: `p[h][k] = min(r_h, r_k) / (4 r_max)`, overridden by the special
/// cases (same class, payments to the poorest, payments by the richest) and
/// finally by the absolute zero rules: the poorest class never pays and the
/// richest class is never paid.
pub fn payment_probabilities(incomes: &[f64]) -> Result<Vec<f64>> {
    let n = incomes.len();
    let r_max = incomes[n - 1];
    let quarter = 4.0 * r_max;
    let half = 2.0 * r_max;

    let mut p = vec![0.0; n * n];
    for h in 0..n {
        for k in 0..n {
            p[h * n + k] = incomes[h].min(incomes[k]) / quarter;
        }
    }
    // Same-class exchanges (all but the extreme classes).
    for j in 1..n - 1 {
        p[j * n + j] = incomes[j] / half;
    }
    // Everyone pays the poorest class at the doubled base rate...
    for h in 1..n {
        p[h * n] = incomes[0] / half;
    }
    // ...and the richest class pays everyone below it likewise.
    for k in 0..n - 1 {
        p[(n - 1) * n + k] = incomes[k] / half;
    }
    // Absolute rules, applied last: the poorest never pay, the richest are
    // never paid (they could not advance any further).
    p[..n].fill(0.0);
    for row in p.chunks_exact_mut(n) {
        row[n - 1] = 0.0;
    }

    for h in 0..n {
        for k in 0..n {
            let v = p[h * n + k];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InconsistentPayments(format!(
                    "p[{h}][{k}] = {v} is outside [0, 1]"
                )));
            }
            let pair = v + p[k * n + h];
            if pair > 1.0 + 1e-12 {
                return Err(Error::InconsistentPayments(format!(
                    "p[{h}][{k}] + p[{k}][{h}] = {pair} exceeds 1"
                )));
            }
        }
    }
    Ok(p)
}

/// Precomputed coefficient tables for one parameter set.
///
/// The transition tensor `C_i[h][k]` is banded — after one interaction an
/// individual moves at most one class — so only the three diagonals
/// `i = h - 1, h, h + 1` are stored, each as an `n x n` plane indexed by
/// `(h, k)`.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    config: ModelConfig,
    tau: Vec<f64>,
    theta: Vec<f64>,
    payment: Vec<f64>,
    /// `p[h][k] * theta_k`, shared by the right-hand side and the welfare sums.
    pub(crate) payment_theta: Vec<f64>,
    /// `down[h][k] = C_{h-1}[h][k]` (the paying individual descends).
    pub(crate) down: Vec<f64>,
    /// `stay[h][k] = C_h[h][k]`.
    pub(crate) stay: Vec<f64>,
    /// `up[h][k] = C_{h+1}[h][k]` (the paid individual ascends).
    pub(crate) up: Vec<f64>,
}

impl CoefficientSet {
    /// Validates the configuration and builds every coefficient table.
    ///
    /// Fails with [`Error::NegativeDiagonal`] if any staying probability
    /// `C_h[h][k]` would be negative, i.e. if the exchanged amount `S` is too
    /// large for the income gaps.
    pub fn build(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let r = &config.incomes;
        let s = config.exchange_amount;

        let tau = tax_schedule(n, config.tau_min, config.tau_max);
        let theta = effective_rates(&tau, config.evasion);
        let payment = payment_probabilities(r)?;

        let payment_theta: Vec<f64> = (0..n * n)
            .map(|idx| payment[idx] * theta[idx % n])
            .collect();

        // Amount effectively received by a class-k individual out of one
        // exchange, after the (partially evaded) tax deduction.
        let received: Vec<f64> = (0..n)
            .map(|k| s * (1.0 - 0.5 * (tau[k] + theta[k])))
            .collect();

        let min_gap = r
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);

        let mut down = vec![0.0; n * n];
        let mut up = vec![0.0; n * n];
        let mut stay = vec![0.0; n * n];
        for h in 0..n {
            for k in 0..n {
                // h pays k and descends one class; the top class is never
                // paid, hence k < n - 1.
                let d = if h >= 1 && k < n - 1 {
                    payment[h * n + k] * received[k] / (r[h] - r[h - 1])
                } else {
                    0.0
                };
                // k pays h and h ascends one class; the poorest class never
                // pays, hence k >= 1.
                let u = if h < n - 1 && k >= 1 {
                    payment[k * n + h] * received[h] / (r[h + 1] - r[h])
                } else {
                    0.0
                };
                let stays = 1.0 - u - d;
                if stays < 0.0 {
                    return Err(Error::NegativeDiagonal {
                        class: h,
                        partner: k,
                        value: stays,
                        exchange_amount: s,
                        min_gap,
                    });
                }
                down[h * n + k] = d;
                up[h * n + k] = u;
                stay[h * n + k] = stays;
            }
        }

        Ok(Self {
            config: config.clone(),
            tau,
            theta,
            payment,
            payment_theta,
            down,
            stay,
            up,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn incomes(&self) -> &[f64] {
        &self.config.incomes
    }

    pub fn exchange_amount(&self) -> f64 {
        self.config.exchange_amount
    }

    /// Tax schedule `tau_k`.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Effective (evasion-reduced) tax rates `theta_k`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Payment probability `p[h][k]`.
    pub fn payment(&self, h: usize, k: usize) -> f64 {
        self.payment[h * self.config.n + k]
    }

    /// Full payment matrix, row-major.
    pub fn payment_matrix(&self) -> &[f64] {
        &self.payment
    }

    /// Transition tensor entry `C_i[h][k]`; zero outside the band
    /// `i in {h - 1, h, h + 1}`.
    pub fn transition(&self, i: usize, h: usize, k: usize) -> f64 {
        let n = self.config.n;
        assert!(i < n && h < n && k < n, "class index out of range");
        if i + 1 == h {
            self.down[h * n + k]
        } else if i == h {
            self.stay[h * n + k]
        } else if i == h + 1 {
            self.up[h * n + k]
        } else {
            0.0
        }
    }
}
