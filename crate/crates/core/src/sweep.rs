//! Parameter sweeps over the evasion/taxation plane: equilibrium observables
//! on one-dimensional grids, Gini-minimum classification and the bisection
//! locating the ratio at which an interior Gini minimum first appears.

use rayon::prelude::*;

use crate::coeffs::CoefficientSet;
use crate::config::ModelConfig;
use crate::dynamics::{find_equilibrium, make_initial, InitialCondition, IntegratorOptions};
use crate::error::{Error, Result};
use crate::model::{mean_income, Distribution};
use crate::observables::{class_delta, gini, promotion_profile, tax_revenue, ClassDelta};

/// Class-population deltas below this magnitude are treated as solver noise
/// when counting sign changes (equilibria are resolved to residuals around
/// 1e-10, i.e. state errors well below 1e-6).
const SIGN_NOISE_FLOOR: f64 = 1e-6;

/// One-dimensional grid over the sweep parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Vary the evasion propensity at a fixed top tax rate.
    Evasion { tau_max: f64, q_values: Vec<f64> },
    /// Vary the top tax rate at a fixed evasion propensity.
    TauMax { q: f64, tau_max_values: Vec<f64> },
    /// Move both together: step `alpha` has
    /// `tau_max = tau_max_start + alpha * tau_max_step` and
    /// `q = q_start + alpha * ratio * tau_max_step`.
    Coupled {
        q_start: f64,
        tau_max_start: f64,
        tau_max_step: f64,
        steps: usize,
        ratio: f64,
    },
}

impl SweepAxis {
    /// The `(tau_max, q)` pairs of the grid, in grid order.
    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        match self {
            SweepAxis::Evasion { tau_max, q_values } => {
                q_values.iter().map(|q| (*tau_max, *q)).collect()
            }
            SweepAxis::TauMax { q, tau_max_values } => {
                tau_max_values.iter().map(|t| (*t, *q)).collect()
            }
            SweepAxis::Coupled {
                q_start,
                tau_max_start,
                tau_max_step,
                steps,
                ratio,
            } => (0..*steps)
                .map(|alpha| {
                    let a = alpha as f64;
                    (
                        tau_max_start + a * tau_max_step,
                        q_start + a * ratio * tau_max_step,
                    )
                })
                .collect(),
        }
    }

    /// Same grid with a different coupling ratio; errors on other axis kinds.
    fn with_ratio(&self, new_ratio: f64) -> Result<SweepAxis> {
        match self {
            SweepAxis::Coupled {
                q_start,
                tau_max_start,
                tau_max_step,
                steps,
                ..
            } => Ok(SweepAxis::Coupled {
                q_start: *q_start,
                tau_max_start: *tau_max_start,
                tau_max_step: *tau_max_step,
                steps: *steps,
                ratio: new_ratio,
            }),
            _ => Err(Error::InvalidRange(
                "phase-threshold search requires a coupled sweep axis".into(),
            )),
        }
    }
}

/// A full sweep description: base model, shared initial condition (which
/// fixes the conserved mean income across the grid), the grid itself and the
/// integration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ModelConfig,
    pub initial: InitialCondition,
    pub axis: SweepAxis,
    pub integrator: IntegratorOptions,
}

impl SweepSpec {
    fn config_at(&self, tau_max: f64, q: f64) -> ModelConfig {
        ModelConfig {
            tau_max,
            evasion: q,
            ..self.base.clone()
        }
    }
}

/// Equilibrium observables of one grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Whether the stationarity criterion was met before the horizon.
    pub converged: bool,
    pub gini: f64,
    pub tax_revenue: f64,
    pub equilibrium: Distribution,
    /// Welfare-to-exchange promotion ratio per class below the top.
    pub promotion_ratio: Vec<Option<f64>>,
    /// Final max-norm of the right-hand side.
    pub residual: f64,
    pub t_reached: f64,
}

/// One grid row; failures are kept in place so no grid point is silently
/// dropped.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub tau_max: f64,
    pub q: f64,
    pub outcome: Result<SweepPoint>,
}

/// Ordered sweep output.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Conserved mean income shared by every row.
    pub mean_income: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows that completed and met the stationarity criterion, in grid order.
    pub fn converged_rows(&self) -> impl Iterator<Item = (&SweepRow, &SweepPoint)> {
        self.rows.iter().filter_map(|row| match &row.outcome {
            Ok(point) if point.converged => Some((row, point)),
            _ => None,
        })
    }
}

/// Integrates every grid point to equilibrium from the same initial condition
/// and collects the equilibrium observables, in grid order.
///
/// Rows are computed in parallel (the worker count follows the active rayon
/// pool, e.g. `RAYON_NUM_THREADS`); every row is an independent sequential
/// computation, so the output is bitwise identical for any worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let points = spec.axis.grid_points();
    if points.is_empty() {
        return Err(Error::InvalidRange("empty sweep grid".into()));
    }
    for (idx, (tau_max, q)) in points.iter().enumerate() {
        spec.config_at(*tau_max, *q).validate().map_err(|e| {
            Error::InvalidRange(format!(
                "grid point {idx} (tau_max = {tau_max}, q = {q}): {e}"
            ))
        })?;
    }
    spec.integrator.validate()?;

    let x0 = make_initial(&spec.initial, &spec.base.incomes)?;
    let mu = mean_income(x0.fractions(), &spec.base.incomes);

    let rows: Vec<SweepRow> = points
        .par_iter()
        .enumerate()
        .map(|(index, &(tau_max, q))| SweepRow {
            index,
            tau_max,
            q,
            outcome: run_point(&spec.config_at(tau_max, q), &x0, &spec.integrator),
        })
        .collect();

    Ok(SweepResult {
        mean_income: mu,
        rows,
    })
}

fn run_point(
    cfg: &ModelConfig,
    x0: &Distribution,
    opts: &IntegratorOptions,
) -> Result<SweepPoint> {
    let coeffs = CoefficientSet::build(cfg)?;
    let report = find_equilibrium(x0, &coeffs, opts)?;
    let g = gini(&report.equilibrium, &cfg.incomes);
    let revenue = tax_revenue(&report.equilibrium, &coeffs);
    let promotion = promotion_profile(&report.equilibrium, &coeffs);
    Ok(SweepPoint {
        converged: report.converged,
        gini: g,
        tax_revenue: revenue,
        equilibrium: report.equilibrium,
        promotion_ratio: promotion.ratio,
        residual: report.final_residual,
        t_reached: report.t_reached,
    })
}

/// Location and kind of the smallest Gini value along a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GiniMinimum {
    /// Grid index of the minimizing row.
    pub index: usize,
    pub tau_max: f64,
    pub q: f64,
    pub gini: f64,
    /// Set when the minimum is strictly below both grid neighbors; boundary
    /// minima (or ties) are reported with `interior = false`.
    pub interior: bool,
}

/// Finds the smallest Gini value among the converged rows and classifies it
/// as interior or boundary. Requires at least three converged rows.
pub fn find_gini_minimum(result: &SweepResult) -> Result<GiniMinimum> {
    let usable: Vec<(&SweepRow, &SweepPoint)> = result.converged_rows().collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints {
            context: "Gini-minimum classification".into(),
            need: 3,
            have: usable.len(),
        });
    }
    let (pos, (row, point)) = usable
        .iter()
        .enumerate()
        .min_by(|(_, (_, a)), (_, (_, b))| a.gini.total_cmp(&b.gini))
        .expect("nonempty");

    let interior = pos > 0 && pos + 1 < usable.len() && {
        let (left_row, left) = usable[pos - 1];
        let (right_row, right) = usable[pos + 1];
        // Neighbors must be grid-adjacent for the classification to mean
        // anything.
        left_row.index + 1 == row.index
            && row.index + 1 == right_row.index
            && left.gini > point.gini
            && right.gini > point.gini
    };

    Ok(GiniMinimum {
        index: row.index,
        tau_max: row.tau_max,
        q: row.q,
        gini: point.gini,
        interior,
    })
}

/// Result of the bisection on the coupling ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseThreshold {
    /// Midpoint of the final bracket.
    pub ratio: f64,
    /// Final bracket `(no-minimum side, minimum side)`.
    pub bracket: (f64, f64),
    /// Number of full sweeps run (endpoint classification included).
    pub sweeps: usize,
}

/// Bisects on the coupling ratio of a coupled sweep for the smallest ratio
/// producing an interior Gini minimum.
///
/// The bracket must straddle the transition: no interior minimum at
/// `ratio_lo`, an interior one at `ratio_hi`. Stops once the bracket is at
/// most `tol` wide and returns its midpoint.
pub fn find_phase_threshold(
    template: &SweepSpec,
    ratio_lo: f64,
    ratio_hi: f64,
    tol: f64,
) -> Result<PhaseThreshold> {
    if !ratio_lo.is_finite() || !ratio_hi.is_finite() || ratio_lo >= ratio_hi {
        return Err(Error::InvalidRange(format!(
            "bad ratio bracket [{ratio_lo}, {ratio_hi}]"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidRange(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }

    let mut sweeps = 0;
    let mut classify = |ratio: f64| -> Result<bool> {
        let spec = SweepSpec {
            axis: template.axis.with_ratio(ratio)?,
            ..template.clone()
        };
        sweeps += 1;
        let result = run_sweep(&spec)?;
        Ok(find_gini_minimum(&result)?.interior)
    };

    if classify(ratio_lo)? {
        return Err(Error::InvalidBracket(format!(
            "an interior Gini minimum is already present at ratio {ratio_lo}"
        )));
    }
    if !classify(ratio_hi)? {
        return Err(Error::InvalidBracket(format!(
            "no interior Gini minimum at ratio {ratio_hi}"
        )));
    }

    let (mut lo, mut hi) = (ratio_lo, ratio_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PhaseThreshold {
        ratio: 0.5 * (lo + hi),
        bracket: (lo, hi),
        sweeps,
    })
}

/// Per-row population changes against a reference equilibrium.
#[derive(Debug, Clone)]
pub struct SplitRow {
    pub index: usize,
    pub tau_max: f64,
    pub q: f64,
    pub converged: bool,
    pub delta: ClassDelta,
    /// Number of sign alternations along the class axis of the absolute
    /// deltas, noise-floored.
    pub sign_changes: usize,
}

/// How each sweep row redistributes population relative to `baseline`
/// (typically the no-evasion equilibrium at the same mean income): per-class
/// deltas plus the count of sign alternations along the class axis.
pub fn middle_class_split_report(
    result: &SweepResult,
    baseline: &Distribution,
) -> Vec<SplitRow> {
    result
        .rows
        .iter()
        .filter_map(|row| match &row.outcome {
            Ok(point) => {
                let delta = class_delta(baseline, &point.equilibrium);
                let sign_changes = count_sign_changes(&delta.absolute, SIGN_NOISE_FLOOR);
                Some(SplitRow {
                    index: row.index,
                    tau_max: row.tau_max,
                    q: row.q,
                    converged: point.converged,
                    delta,
                    sign_changes,
                })
            }
            Err(_) => None,
        })
        .collect()
}

fn count_sign_changes(deltas: &[f64], floor: f64) -> usize {
    let mut changes = 0;
    let mut prev: Option<bool> = None;
    for d in deltas {
        if d.abs() <= floor {
            continue;
        }
        let positive = *d > 0.0;
        if let Some(p) = prev {
            if p != positive {
                changes += 1;
            }
        }
        prev = Some(positive);
    }
    changes
}
