//! On-disk run configuration.
//!
//! The file format speaks the user's units — tax rates in percent, classes
//! numbered from 1 — and converts to the library's fraction/0-based
//! conventions in one place, here.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use taxflow_core::{
    InitialCondition, IntegratorOptions, ModelConfig, SweepAxis, SweepSpec, DEFAULT_CLASS_COUNT,
    DEFAULT_EXCHANGE_AMOUNT,
};

use crate::error::{CliError, Result};

/// A complete run description as stored in a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// `[model]`: class structure and tax schedule, rates in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Number of income classes.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Amount exchanged per interaction.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Tax rate of the poorest class, in percent.
    pub tau_min_pct: f64,
    /// Tax rate of the richest class, in percent.
    pub tau_max_pct: f64,
    /// Evasion propensity, as a fraction in [0, 1].
    pub q: f64,
    /// Optional custom income grid (strictly increasing, one per class);
    /// defaults to 10, 20, ..., 10 n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomes: Option<Vec<f64>>,
}

fn default_n() -> usize {
    DEFAULT_CLASS_COUNT
}

fn default_s() -> f64 {
    DEFAULT_EXCHANGE_AMOUNT
}

/// `[initial]`: where the population starts. Classes are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSection {
    /// Everyone in one class: `kind = "delta"`, `class = 7`.
    Delta { class: usize },
    /// Mass split between the two classes bracketing a target mean income.
    TwoPoint { mu: f64 },
    /// Geometric profile with the mean income solved to match `mu`.
    Geometric { mu: f64 },
    /// An explicit fraction vector, one entry per class.
    Explicit { fractions: Vec<f64> },
}

/// `[integrator]`: fixed-step scheme controls. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Equilibrium tolerance on the max-norm of the right-hand side.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub renormalize: bool,
}

fn default_dt() -> f64 {
    IntegratorOptions::default().dt
}

fn default_t_max() -> f64 {
    IntegratorOptions::default().t_max
}

fn default_tol() -> f64 {
    IntegratorOptions::default().equilibrium_tol
}

fn default_record_every() -> usize {
    IntegratorOptions::default().record_every
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let core = IntegratorOptions::default();
        Self {
            dt: core.dt,
            t_max: core.t_max,
            tol: core.equilibrium_tol,
            record_every: core.record_every,
            renormalize: core.renormalize,
        }
    }
}

/// `[output]`: data-file format and destination.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: OutputFormat,
    /// Significant digits for floats in CSV files, written in scientific
    /// notation; omitted means shortest exact representation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<usize>,
    /// Output directory; defaults to the current directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// `[sweep]`: the grid a `sweep` run walks. Rates in percent, `q` values as
/// fractions, like `[model]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SweepSection {
    /// Fixed schedule, varying evasion propensity.
    Evasion { tau_max_pct: f64, q_values: Vec<f64> },
    /// Fixed evasion, varying top tax rate.
    TauMax {
        q: f64,
        tau_max_pct_values: Vec<f64>,
    },
    /// Top rate and evasion raised together: at step `a`,
    /// `tau_max = start + a * step` and `q = q_start + ratio * a * step`.
    Coupled {
        q_start: f64,
        tau_max_start_pct: f64,
        tau_max_step_pct: f64,
        steps: usize,
        ratio: f64,
    },
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("configuration error: {e}")))
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("run configuration serializes to TOML")
    }

    /// Core model parameters, with percent fields converted to fractions.
    pub fn model(&self) -> Result<ModelConfig> {
        let m = &self.model;
        for (name, pct) in [("tau_min_pct", m.tau_min_pct), ("tau_max_pct", m.tau_max_pct)] {
            if !(0.0..100.0).contains(&pct) {
                return Err(CliError::Config(format!(
                    "{name} must lie in [0, 100), got {pct}"
                )));
            }
        }
        let mut cfg = ModelConfig::with_class_count(
            m.n,
            m.tau_min_pct / 100.0,
            m.tau_max_pct / 100.0,
            m.q,
        );
        cfg.exchange_amount = m.s;
        if let Some(incomes) = &m.incomes {
            cfg.incomes = incomes.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Initial-condition descriptor, with class numbers shifted to 0-based.
    pub fn initial(&self) -> Result<InitialCondition> {
        match &self.initial {
            InitialSection::Delta { class } => {
                if *class == 0 {
                    return Err(CliError::Config(
                        "classes are numbered from 1; class = 0 is invalid".into(),
                    ));
                }
                Ok(InitialCondition::Delta { class: class - 1 })
            }
            InitialSection::TwoPoint { mu } => Ok(InitialCondition::TwoPoint { mean_income: *mu }),
            InitialSection::Geometric { mu } => {
                Ok(InitialCondition::Geometric { mean_income: *mu })
            }
            InitialSection::Explicit { fractions } => Ok(InitialCondition::Explicit {
                fractions: fractions.clone(),
            }),
        }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        let s = &self.integrator;
        IntegratorOptions {
            dt: s.dt,
            t_max: s.t_max,
            equilibrium_tol: s.tol,
            record_every: s.record_every,
            renormalize: s.renormalize,
        }
    }

    /// The sweep grid, converted to fractions. `ratio_override` replaces the
    /// coupled ratio when the `--ratio` flag is given.
    pub fn sweep_axis(&self, ratio_override: Option<f64>) -> Result<SweepAxis> {
        let section = self.sweep.as_ref().ok_or_else(|| {
            CliError::Config("this command needs a [sweep] section in the configuration".into())
        })?;
        let axis = match section {
            SweepSection::Evasion {
                tau_max_pct,
                q_values,
            } => SweepAxis::Evasion {
                tau_max: tau_max_pct / 100.0,
                q_values: q_values.clone(),
            },
            SweepSection::TauMax {
                q,
                tau_max_pct_values,
            } => SweepAxis::TauMax {
                q: *q,
                tau_max_values: tau_max_pct_values.iter().map(|p| p / 100.0).collect(),
            },
            SweepSection::Coupled {
                q_start,
                tau_max_start_pct,
                tau_max_step_pct,
                steps,
                ratio,
            } => SweepAxis::Coupled {
                q_start: *q_start,
                tau_max_start: tau_max_start_pct / 100.0,
                tau_max_step: tau_max_step_pct / 100.0,
                steps: *steps,
                ratio: ratio_override.unwrap_or(*ratio),
            },
        };
        if ratio_override.is_some() && !matches!(axis, SweepAxis::Coupled { .. }) {
            return Err(CliError::Config(
                "--ratio applies only to coupled sweeps".into(),
            ));
        }
        Ok(axis)
    }

    pub fn sweep_spec(&self, ratio_override: Option<f64>) -> Result<SweepSpec> {
        Ok(SweepSpec {
            base: self.model()?,
            initial: self.initial()?,
            axis: self.sweep_axis(ratio_override)?,
            integrator: self.integrator(),
        })
    }
}
