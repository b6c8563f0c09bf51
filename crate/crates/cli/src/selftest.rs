//! Trend checks over the case-study sweeps on the built-in example.

use anyhow::Result;
use pvdispatch::dispatch::{
    compare_reports, run_dispatch, run_sweep, table_setups, Mode, RunConfig, SweepParam, REFERENCE_SOLVER, TREND_TOL,
};

/// Objective agreement required between the σ = 0 risk run and the deterministic run.
const IDENTITY_OBJ_TOL: f64 = 1e-6;
/// Setpoint agreement on exact hours, W (1e-6 pu on the 10 kVA base).
const IDENTITY_SETPOINT_TOL_W: f64 = 1e-2;

fn line(ok: bool, what: &str, detail: &str) -> bool {
    println!("{} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

/// Prints one PASS/FAIL line per check; true when all pass.
pub fn run(base: &RunConfig) -> Result<bool> {
    let mut all = true;
    let setups = table_setups();
    for setup in &setups {
        let table = run_sweep(&setup.config(base), setup.param, &setup.values)?;
        for p in &table.points {
            let t = p.report.totals;
            println!(
                "     {}={:<5} P_c^tot {:>9.3} kWh  Q_c^tot {:>9.3} kvarh  N^tot {:>3}  exact hours {}/{}",
                setup.param.name(),
                p.value,
                t.p_c_kwh,
                t.q_c_kvarh,
                t.n_selected,
                p.report.exact_totals.hours,
                t.hours
            );
        }
        let trend = table.trend();
        let detail = format!(
            "P_c {} Q_c {} N {} over {} hours exact at every point{}",
            trend.p_c,
            trend.q_c,
            trend.n,
            trend.hours.len(),
            if trend.informative() { String::new() } else { format!("; every compared total is below {TREND_TOL}") }
        );
        all &= line(trend.holds() && trend.informative(), &format!("{} trend", setup.name), &detail);
    }

    // zero forecast error must reproduce the deterministic dispatch
    let sigma = setups.iter().find(|s| s.param == SweepParam::SigmaFraction).expect("sigma table");
    let mut risk = sigma.config(base);
    risk.scenario.sigma_fraction = 0.0;
    risk.solver = REFERENCE_SOLVER;
    let mut det = risk.clone();
    det.mode = Mode::Deterministic;
    let diff = compare_reports(&run_dispatch(&risk)?, &run_dispatch(&det)?);
    all &= line(
        diff.objective_rel <= IDENTITY_OBJ_TOL && diff.setpoint <= IDENTITY_SETPOINT_TOL_W,
        "zero-error identity",
        &format!(
            "objective rel diff {:.2e}, setpoint diff {:.3e} W over {} exact hours",
            diff.objective_rel, diff.setpoint, diff.exact_hours
        ),
    );
    Ok(all)
}
