//! Minimal library walkthrough: build a model, relax it to equilibrium and
//! print the Gini index (the README carries this same snippet).

use taxflow_core::observables::gini;
use taxflow_core::{
    find_equilibrium, make_initial, CoefficientSet, InitialCondition, IntegratorOptions,
    ModelConfig,
};

fn main() -> taxflow_core::Result<()> {
    // 25 classes, tax 30% -> 45%, one third of the due tax evaded.
    let config = ModelConfig::new(0.30, 0.45, 1.0 / 3.0);
    let coeffs = CoefficientSet::build(&config)?;
    let x0 = make_initial(
        &InitialCondition::TwoPoint { mean_income: 70.0 },
        &config.incomes,
    )?;
    let report = find_equilibrium(&x0, &coeffs, &IntegratorOptions::default())?;
    println!(
        "converged: {} at t = {}, Gini = {:.4}",
        report.converged,
        report.t_reached,
        gini(&report.equilibrium, &config.incomes)
    );
    Ok(())
}
