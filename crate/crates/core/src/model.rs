//! Model state and the right-hand side of the evolution equations.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};

/// Tolerance on `|sum(x) - 1|` for a vector to count as a probability
/// distribution over the classes.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Components may undershoot zero by at most this much (integration noise).
pub const NEGATIVE_TOL: f64 = 1e-12;

/// Population shares of the income classes at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    fractions: Vec<f64>,
    time: f64,
}

impl Distribution {
    /// Validates and wraps a class-fraction vector: entries must be finite,
    /// nonnegative (up to [`NEGATIVE_TOL`]) and sum to one within
    /// [`SIMPLEX_TOL`].
    pub fn new(fractions: Vec<f64>, time: f64) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidDistribution("empty fraction vector".into()));
        }
        if let Some((i, v)) = fractions
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -NEGATIVE_TOL)
        {
            return Err(Error::InvalidDistribution(format!(
                "fraction x[{i}] = {v} is negative or not finite"
            )));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "fractions sum to {total}, expected 1"
            )));
        }
        Ok(Self { fractions, time })
    }

    /// Wraps integrator output without re-validating.
    pub(crate) fn new_unchecked(fractions: Vec<f64>, time: f64) -> Self {
        Self { fractions, time }
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn mean_income(&self, incomes: &[f64]) -> f64 {
        mean_income(&self.fractions, incomes)
    }

    pub fn into_fractions(self) -> Vec<f64> {
        self.fractions
    }
}

/// Mean income `mu = sum_i r_i x_i` of a class-fraction vector.
pub fn mean_income(fractions: &[f64], incomes: &[f64]) -> f64 {
    assert_eq!(
        fractions.len(),
        incomes.len(),
        "fraction and income vectors must have equal length"
    );
    fractions.iter().zip(incomes).map(|(x, r)| x * r).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Total tax flow `sum_{h,k} p[h][k] theta_k x_h x_k`, the double sum shared
/// by the welfare observables.
pub(crate) fn tax_flow(x: &[f64], coeffs: &CoefficientSet) -> f64 {
    let n = x.len();
    (0..n)
        .map(|h| dot(&coeffs.payment_theta[h * n..(h + 1) * n], x) * x[h])
        .sum()
}

/// Time derivative of the class fractions.
///
/// Both conserved quantities of the exact dynamics — the total population and
/// the mean income — are preserved by this evaluation up to rounding:
/// `|sum_i dx_i| <= 1e-12` and `|sum_i r_i dx_i| <= 1e-10 * mu` on the simplex.
///
/// Panics if the state length does not match the coefficient tables.
pub fn eval_rhs(x: &Distribution, coeffs: &CoefficientSet) -> Vec<f64> {
    let n = coeffs.n();
    assert_eq!(x.len(), n, "state length must match the class count");
    let mut w = vec![0.0; n];
    let mut out = vec![0.0; n];
    rhs_into(x.fractions(), coeffs, &mut w, &mut out);
    out
}

/// Allocation-free kernel behind [`eval_rhs`]; `w` is an `n`-vector scratch.
///
/// The double sums over interaction pairs collapse to `O(n^2)`:
/// the collision part reduces to three banded matrix-vector products, and the
/// redistribution part factorizes through the per-class tax flows
/// `w[h] = sum_k p[h][k] theta_k x_k`.
pub(crate) fn rhs_into(x: &[f64], coeffs: &CoefficientSet, w: &mut [f64], out: &mut [f64]) {
    let n = x.len();
    let r = coeffs.incomes();
    let s = coeffs.exchange_amount();

    // Population sums are carried explicitly; the dynamics conserves them but
    // nothing here assumes sum(x) = 1.
    let sum_x: f64 = x.iter().sum();
    let sum_low: f64 = x[..n - 1].iter().sum();

    for (h, wh) in w.iter_mut().enumerate() {
        *wh = dot(&coeffs.payment_theta[h * n..(h + 1) * n], x);
    }
    // Total tax flow sum_{h,k} p[h][k] theta_k x_h x_k.
    let tax_flow = dot(w, x);

    // Welfare received per unit population; every taxed coin is shared among
    // the classes below the top, each recipient advancing with probability
    // inversely proportional to its income gap.
    let welfare = s * tax_flow / sum_x;
    // Fraction of the payer's deduction that is actually redistributed.
    let redistributed_share = s * sum_low / sum_x;

    for i in 0..n {
        // Direct exchanges: the tensor is banded, so class i is fed from
        // classes i-1, i, i+1 only.
        let mut acc = x[i] * dot(&coeffs.stay[i * n..(i + 1) * n], x);
        if i + 1 < n {
            acc += x[i + 1] * dot(&coeffs.down[(i + 1) * n..(i + 2) * n], x);
        }
        if i >= 1 {
            acc += x[i - 1] * dot(&coeffs.up[(i - 1) * n..i * n], x);
        }

        // Welfare inflow from class i-1 ascending and outflow from class i
        // ascending; the top class receives no welfare.
        let mut t = 0.0;
        if i >= 1 {
            t += welfare * x[i - 1] / (r[i] - r[i - 1]);
        }
        if i + 1 < n {
            t -= welfare * x[i] / (r[i + 1] - r[i]);
        }
        // Tax deduction pushing the paying class down one step.
        if i + 1 < n {
            t += redistributed_share * w[i + 1] * x[i + 1] / (r[i + 1] - r[i]);
        }
        if i >= 1 {
            t -= redistributed_share * w[i] * x[i] / (r[i] - r[i - 1]);
        }

        out[i] = acc + t - x[i] * sum_x;
    }
}
