use crate::error::{Error, Result};

/// Structural parameters of the exchange model.
///
/// Tax rates and the evasion propensity are dimensionless fractions in `[0, 1]`
/// everywhere inside this crate; user interfaces that speak percent must
/// convert at their own boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Number of income classes.
    pub n: usize,
    /// Amount of money changing hands in a single exchange (`S`).
    pub exchange_amount: f64,
    /// Average incomes `r_1 < r_2 < ... < r_n` of the classes.
    pub incomes: Vec<f64>,
    /// Tax rate applied to the poorest class.
    pub tau_min: f64,
    /// Tax rate applied to the richest class.
    pub tau_max: f64,
    /// Evasion propensity `q`: the effective tax rate of class `k` becomes
    /// `theta_k = (1 - q) tau_k`.
    pub evasion: f64,
}

pub const DEFAULT_CLASS_COUNT: usize = 25;
pub const DEFAULT_EXCHANGE_AMOUNT: f64 = 1.0;

/// Evenly spaced default income grid `r_j = 10 j`.
pub fn default_incomes(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 10.0 * j as f64).collect()
}

impl ModelConfig {
    /// Configuration with the default class structure (`n = 25`, `r_j = 10 j`,
    /// `S = 1`) and the given tax/evasion parameters.
    pub fn new(tau_min: f64, tau_max: f64, evasion: f64) -> Self {
        Self {
            n: DEFAULT_CLASS_COUNT,
            exchange_amount: DEFAULT_EXCHANGE_AMOUNT,
            incomes: default_incomes(DEFAULT_CLASS_COUNT),
            tau_min,
            tau_max,
            evasion,
        }
    }

    /// Same tax/evasion parameters on a custom class count (incomes `10 j`).
    pub fn with_class_count(n: usize, tau_min: f64, tau_max: f64, evasion: f64) -> Self {
        Self {
            n,
            exchange_amount: DEFAULT_EXCHANGE_AMOUNT,
            incomes: default_incomes(n),
            tau_min,
            tau_max,
            evasion,
        }
    }

    /// Checks all structural invariants:
    /// `n >= 3`; incomes strictly increasing and positive, one per class;
    /// `0 <= tau_min <= tau_max < 1`; `0 <= q <= 1`; `S > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidRange(format!(
                "need at least 3 income classes, got {}",
                self.n
            )));
        }
        if self.incomes.len() != self.n {
            return Err(Error::InvalidRange(format!(
                "income grid has {} entries for {} classes",
                self.incomes.len(),
                self.n
            )));
        }
        if !self.incomes.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(Error::InvalidRange(
                "incomes must be finite and positive".into(),
            ));
        }
        if !self.incomes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidRange(
                "incomes must be strictly increasing".into(),
            ));
        }
        if !self.exchange_amount.is_finite() || self.exchange_amount <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "exchange amount must be positive, got {}",
                self.exchange_amount
            )));
        }
        if !(0.0..1.0).contains(&self.tau_min) || !(0.0..1.0).contains(&self.tau_max) {
            return Err(Error::InvalidRange(format!(
                "tax rates must lie in [0, 1), got tau_min = {}, tau_max = {}",
                self.tau_min, self.tau_max
            )));
        }
        if self.tau_min > self.tau_max {
            return Err(Error::InvalidRange(format!(
                "tau_min = {} exceeds tau_max = {}",
                self.tau_min, self.tau_max
            )));
        }
        if !(0.0..=1.0).contains(&self.evasion) {
            return Err(Error::InvalidRange(format!(
                "evasion propensity must lie in [0, 1], got {}",
                self.evasion
            )));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}
