//! Fixed-step integration of the exchange dynamics and standard initial
//! conditions.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::model::{mean_income, rhs_into, Distribution};

/// Integration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    /// Fixed time step of the classical fourth-order Runge-Kutta scheme.
    pub dt: f64,
    /// Horizon: integration stops at the first grid time `>= t_max` if no
    /// equilibrium is detected earlier.
    pub t_max: f64,
    /// Equilibrium criterion: stop once the max-norm of the right-hand side
    /// falls to this value. Independent of `dt` by construction.
    pub equilibrium_tol: f64,
    /// Retain every this-many-th step in the trajectory (the initial and the
    /// final state are always retained).
    pub record_every: usize,
    /// If set, rescale the state to unit total population after every step;
    /// drift diagnostics still report the pre-correction values.
    pub renormalize: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt: 0.5,
            t_max: 50_000.0,
            equilibrium_tol: 1e-10,
            record_every: 10,
            renormalize: false,
        }
    }
}

impl IntegratorOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !self.t_max.is_finite() || self.t_max < 0.0 {
            return Err(Error::InvalidRange(format!(
                "time horizon must be nonnegative, got {}",
                self.t_max
            )));
        }
        if !self.equilibrium_tol.is_finite() || self.equilibrium_tol < 0.0 {
            return Err(Error::InvalidRange(format!(
                "equilibrium tolerance must be nonnegative, got {}",
                self.equilibrium_tol
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidRange(
                "record stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How to place the initial population on the income classes.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// The whole population in one class (0-based index).
    Delta { class: usize },
    /// Mass split between the two classes bracketing the target mean income.
    TwoPoint { mean_income: f64 },
    /// Geometric profile `x_i` proportional to `rho^i`, with the ratio solved
    /// so the mean income matches the target.
    Geometric { mean_income: f64 },
    /// A caller-supplied fraction vector (validated).
    Explicit { fractions: Vec<f64> },
}

/// Builds the initial distribution described by `kind` on the given income
/// grid, at time zero.
///
/// Mean-income targets must lie within `[incomes.first(), incomes.last()]`;
/// targeting kinds match the requested mean within a relative `1e-12`.
pub fn make_initial(kind: &InitialCondition, incomes: &[f64]) -> Result<Distribution> {
    let n = incomes.len();
    match kind {
        InitialCondition::Delta { class } => {
            if *class >= n {
                return Err(Error::InvalidRange(format!(
                    "class index {class} out of range for {n} classes"
                )));
            }
            let mut x = vec![0.0; n];
            x[*class] = 1.0;
            Distribution::new(x, 0.0)
        }
        InitialCondition::TwoPoint { mean_income: mu } => {
            let (lo, hi) = (incomes[0], incomes[n - 1]);
            if !mu.is_finite() || *mu < lo || *mu > hi {
                return Err(Error::InfeasibleMeanIncome {
                    mu: *mu,
                    min: lo,
                    max: hi,
                });
            }
            // Last class whose income does not exceed the target.
            let k = incomes.partition_point(|r| *r <= *mu) - 1;
            let mut x = vec![0.0; n];
            if incomes[k] == *mu {
                x[k] = 1.0;
            } else {
                let share = (incomes[k + 1] - mu) / (incomes[k + 1] - incomes[k]);
                x[k] = share;
                x[k + 1] = 1.0 - share;
            }
            Distribution::new(x, 0.0)
        }
        InitialCondition::Geometric { mean_income: mu } => {
            let (lo, hi) = (incomes[0], incomes[n - 1]);
            if !mu.is_finite() || *mu < lo || *mu > hi {
                return Err(Error::InfeasibleMeanIncome {
                    mu: *mu,
                    min: lo,
                    max: hi,
                });
            }
            if *mu == lo {
                return make_initial(&InitialCondition::Delta { class: 0 }, incomes);
            }
            if *mu == hi {
                return make_initial(&InitialCondition::Delta { class: n - 1 }, incomes);
            }
            // Bisect on the log-ratio; the profile mean increases monotonically
            // with it.
            let (mut g_lo, mut g_hi) = (-80.0_f64, 80.0_f64);
            let mut x = geometric_profile(n, 0.0);
            for _ in 0..200 {
                let g = 0.5 * (g_lo + g_hi);
                x = geometric_profile(n, g);
                let m = mean_income(&x, incomes);
                if (m - mu).abs() <= 1e-13 * mu {
                    break;
                }
                if m < *mu {
                    g_lo = g;
                } else {
                    g_hi = g;
                }
            }
            let m = mean_income(&x, incomes);
            if (m - mu).abs() > 1e-12 * mu {
                return Err(Error::InvalidRange(format!(
                    "geometric profile cannot match mean income {mu} (reached {m})"
                )));
            }
            Distribution::new(x, 0.0)
        }
        InitialCondition::Explicit { fractions } => {
            if fractions.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "explicit vector has {} entries for {} classes",
                    fractions.len(),
                    n
                )));
            }
            Distribution::new(fractions.clone(), 0.0)
        }
    }
}

/// Normalized weights `exp(g * i)`, anchored at the largest one so the
/// evaluation never overflows.
fn geometric_profile(n: usize, g: f64) -> Vec<f64> {
    let anchor = if g > 0.0 { (n - 1) as f64 } else { 0.0 };
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 - anchor) * g).exp()).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Retained integration samples with per-sample conservation diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    diagnostics: Vec<SampleDiagnostics>,
}

/// Conservation and stationarity diagnostics of one retained sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDiagnostics {
    /// Signed drift of the total population, `sum(x) - 1`.
    pub sum_drift: f64,
    /// Signed drift of the mean income since the initial state.
    pub mu_drift: f64,
    /// Max-norm of the right-hand side at the sample.
    pub rhs_norm: f64,
}

impl Trajectory {
    /// Wraps an externally produced series of states for analysis. Times must
    /// be strictly increasing and every state must have the same length;
    /// conservation diagnostics are zeroed.
    pub fn from_samples(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidRange(format!(
                "{} times against {} states",
                times.len(),
                states.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidRange(
                "sample times must be strictly increasing".into(),
            ));
        }
        if let Some(first) = states.first() {
            if states.iter().any(|s| s.len() != first.len()) {
                return Err(Error::InvalidRange(
                    "all states must have the same length".into(),
                ));
            }
        }
        let diagnostics = vec![
            SampleDiagnostics {
                sum_drift: 0.0,
                mu_drift: 0.0,
                rhs_norm: 0.0,
            };
            times.len()
        ];
        Ok(Self {
            times,
            states,
            diagnostics,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, idx: usize) -> &[f64] {
        &self.states[idx]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[SampleDiagnostics] {
        &self.diagnostics
    }

    pub fn distribution(&self, idx: usize) -> Distribution {
        Distribution::new_unchecked(self.states[idx].clone(), self.times[idx])
    }

    fn push(&mut self, t: f64, state: Vec<f64>, diag: SampleDiagnostics) {
        self.times.push(t);
        self.states.push(state);
        self.diagnostics.push(diag);
    }
}

/// Outcome of an equilibrium-seeking integration.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Final state (the equilibrium when `converged` is set).
    pub equilibrium: Distribution,
    /// Whether the stationarity criterion was met before the horizon.
    pub converged: bool,
    /// Time at which integration stopped.
    pub t_reached: f64,
    /// Max-norm of the right-hand side at the final state.
    pub final_residual: f64,
    /// Achieved `|sum(x) - 1|` at the final state.
    pub sum_drift: f64,
    /// Achieved `|mu(t) - mu(0)|` at the final state.
    pub mu_drift: f64,
}

/// Integration states must stay within this margin of `[0, 1]`; anything
/// farther out is reported as a blow-up.
const BLOWUP_TOL: f64 = 1e-6;

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    mid: Vec<f64>,
    w: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            mid: vec![0.0; n],
            w: vec![0.0; n],
        }
    }
}

/// Writes `x + c * slope` into `out`.
fn offset_into(out: &mut [f64], x: &[f64], c: f64, slope: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(slope) {
        *o = xi + c * ki;
    }
}

/// One classical Runge-Kutta step given the slope at the left endpoint in
/// `scratch.k1`; updates `x` in place.
fn rk4_advance(x: &mut [f64], coeffs: &CoefficientSet, dt: f64, scratch: &mut Rk4Scratch) {
    let half = 0.5 * dt;
    offset_into(&mut scratch.mid, x, half, &scratch.k1);
    rhs_into(&scratch.mid, coeffs, &mut scratch.w, &mut scratch.k2);
    offset_into(&mut scratch.mid, x, half, &scratch.k2);
    rhs_into(&scratch.mid, coeffs, &mut scratch.w, &mut scratch.k3);
    offset_into(&mut scratch.mid, x, dt, &scratch.k3);
    rhs_into(&scratch.mid, coeffs, &mut scratch.w, &mut scratch.k4);
    let sixth = dt / 6.0;
    for ((((xi, k1), k2), k3), k4) in x
        .iter_mut()
        .zip(&scratch.k1)
        .zip(&scratch.k2)
        .zip(&scratch.k3)
        .zip(&scratch.k4)
    {
        *xi += sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_bounds(x: &[f64], t: f64) -> Result<()> {
    for (i, v) in x.iter().enumerate() {
        if !v.is_finite() || *v < -BLOWUP_TOL || *v > 1.0 + BLOWUP_TOL {
            return Err(Error::BlowUp {
                t,
                class: i,
                value: *v,
            });
        }
    }
    Ok(())
}

/// Advances the state by a single Runge-Kutta step.
pub fn step(x: &Distribution, coeffs: &CoefficientSet, dt: f64) -> Result<Distribution> {
    if x.len() != coeffs.n() {
        return Err(Error::InvalidDistribution(format!(
            "state has {} entries for {} classes",
            x.len(),
            coeffs.n()
        )));
    }
    let mut state = x.fractions().to_vec();
    let mut scratch = Rk4Scratch::new(state.len());
    rhs_into(&state, coeffs, &mut scratch.w, &mut scratch.k1);
    rk4_advance(&mut state, coeffs, dt, &mut scratch);
    let t = x.time() + dt;
    check_bounds(&state, t)?;
    Ok(Distribution::new_unchecked(state, t))
}

/// Integrates from `x0` until the dynamics is stationary (max-norm of the
/// right-hand side at most `opts.equilibrium_tol`) or the horizon is reached.
///
/// The returned trajectory retains every `opts.record_every`-th step plus the
/// final state; the report carries the final residual and the conservation
/// drifts actually achieved.
pub fn integrate(
    x0: &Distribution,
    coeffs: &CoefficientSet,
    opts: &IntegratorOptions,
) -> Result<(Trajectory, EquilibriumReport)> {
    opts.validate()?;
    let n = coeffs.n();
    if x0.len() != n {
        return Err(Error::InvalidDistribution(format!(
            "initial state has {} entries for {} classes",
            x0.len(),
            n
        )));
    }

    let incomes = coeffs.incomes();
    let mut x = x0.fractions().to_vec();
    let mu0 = mean_income(&x, incomes);
    let mut scratch = Rk4Scratch::new(n);
    let mut traj = Trajectory::default();

    // Pre-correction conservation figures of the most recent step (the state
    // itself when renormalization is off).
    let mut raw_sum: f64 = x.iter().sum();
    let mut raw_mu: f64 = mean_income(&x, incomes);

    let mut step_idx: u64 = 0;
    let (t_reached, residual, converged) = loop {
        let t = step_idx as f64 * opts.dt;
        rhs_into(&x, coeffs, &mut scratch.w, &mut scratch.k1);
        let residual = inf_norm(&scratch.k1);

        let diag = SampleDiagnostics {
            sum_drift: raw_sum - 1.0,
            mu_drift: raw_mu - mu0,
            rhs_norm: residual,
        };
        let on_stride = step_idx.is_multiple_of(opts.record_every as u64);
        if on_stride {
            traj.push(t, x.clone(), diag);
        }
        let stationary = residual <= opts.equilibrium_tol;
        if stationary || t >= opts.t_max {
            if !on_stride {
                traj.push(t, x.clone(), diag);
            }
            break (t, residual, stationary);
        }

        rk4_advance(&mut x, coeffs, opts.dt, &mut scratch);
        step_idx += 1;
        check_bounds(&x, step_idx as f64 * opts.dt)?;
        raw_sum = x.iter().sum();
        raw_mu = mean_income(&x, incomes);
        if opts.renormalize {
            let scale = 1.0 / raw_sum;
            x.iter_mut().for_each(|v| *v *= scale);
        }
    };

    let report = EquilibriumReport {
        equilibrium: Distribution::new_unchecked(x, t_reached),
        converged,
        t_reached,
        final_residual: residual,
        sum_drift: (raw_sum - 1.0).abs(),
        mu_drift: (raw_mu - mu0).abs(),
    };
    Ok((traj, report))
}

/// Convenience wrapper: integrate and return only the equilibrium report.
pub fn find_equilibrium(
    x0: &Distribution,
    coeffs: &CoefficientSet,
    opts: &IntegratorOptions,
) -> Result<EquilibriumReport> {
    integrate(x0, coeffs, opts).map(|(_, report)| report)
}
