//! Kinetic exchange model of an economy with `n` income classes, progressive
//! taxation, welfare redistribution and tax evasion.
//!
//! The population is described by the fractions `x_i` of individuals whose
//! average income is `r_i`. Pairwise monetary exchanges move individuals one
//! class up or down; a progressive tax on each transaction is redistributed to
//! the classes below the top one, and evasion scales the effective tax rates
//! down. The resulting mean-field dynamics is a quadratic ODE system
//!
//! ```text
//! dx_i/dt = sum_{h,k} (C_i[h][k] + T_i[h][k](x)) x_h x_k - x_i sum_k x_k
//! ```
//!
//! which conserves the total population and the mean income. This crate builds
//! the coefficient tables, integrates the dynamics to equilibrium, computes
//! inequality observables (Lorenz curve, Gini index, welfare flows, tail
//! exponents, convergence diagnostics) and runs parameter sweeps over the
//! evasion/taxation plane.

mod config;
mod error;

pub mod coeffs;
pub mod dynamics;
pub mod model;
pub mod observables;
pub mod sweep;

pub use coeffs::CoefficientSet;
pub use config::{ModelConfig, DEFAULT_CLASS_COUNT, DEFAULT_EXCHANGE_AMOUNT};
pub use dynamics::{
    find_equilibrium, integrate, make_initial, step, EquilibriumReport, InitialCondition,
    IntegratorOptions, Trajectory,
};
pub use error::{Error, Result};
pub use model::{eval_rhs, mean_income, Distribution};
pub use sweep::{
    find_gini_minimum, find_phase_threshold, middle_class_split_report, run_sweep, GiniMinimum,
    PhaseThreshold, SplitRow, SweepAxis, SweepPoint, SweepResult, SweepRow, SweepSpec,
};
