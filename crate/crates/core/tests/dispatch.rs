use std::fs;

use pvdispatch::dispatch::{
    read_hourly_totals, run_dispatch, write_outputs, DispatchError, DispatchReport, FormulationChoice, Mode, RunConfig,
    CURTAILMENT_CSV, HOURLY_CSV, REPORT_JSON, VOLTAGE_CSV,
};
use pvdispatch::feeder::{build_admittance, fishbone, FishboneParams, LineSpec};
use pvdispatch::formulation::Relaxation;
use pvdispatch::par::Execution;
use pvdispatch::scenario::{daily_profile, ProfileParams};

fn example() -> RunConfig {
    let feeder = build_admittance(&fishbone(&FishboneParams::default())).unwrap();
    let scenario = daily_profile(&feeder, &ProfileParams::default());
    RunConfig::new(feeder, scenario)
}

/// Deterministic day with a selection weight low enough that curtailment is dispatched.
fn curtailing_day() -> RunConfig {
    let mut c = example();
    c.mode = Mode::Deterministic;
    c.cost.c_z = 0.09;
    c
}

#[test]
fn csv_totals_equal_report_totals() {
    let config = curtailing_day();
    let report = run_dispatch(&config).unwrap();
    assert!(report.totals.p_c_kwh > 1.0, "expected curtailment, got {:?}", report.totals);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&report, dir.path()).unwrap();

    assert_eq!(read_hourly_totals(&dir.path().join(HOURLY_CSV)).unwrap(), report.totals);
    let back: DispatchReport = serde_json::from_slice(&fs::read(dir.path().join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(back, report);

    let lines = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!(lines(CURTAILMENT_CSV), 1 + 15 * 20);
    assert_eq!(lines(VOLTAGE_CSV), 1 + 15 * config.feeder.nodes.len());
    assert_eq!(lines(HOURLY_CSV), 1 + 15 * 20);
}

#[test]
fn reruns_are_byte_identical_across_execution_modes() {
    let mut config = example();
    config.scenario.scenarios = 30;
    config.hours = Some(vec![7, 12, 18]);
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    write_outputs(&run_dispatch(&config).unwrap(), &a).unwrap();
    write_outputs(&run_dispatch(&config).unwrap(), &b).unwrap();
    config.exec = Execution::Sequential;
    write_outputs(&run_dispatch(&config).unwrap(), &c).unwrap();
    for f in [REPORT_JSON, HOURLY_CSV, CURTAILMENT_CSV, VOLTAGE_CSV] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(x, fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn no_sun_means_no_services() {
    let mut config = example();
    config.mode = Mode::Deterministic;
    config.scenario.sigma_fraction = 0.0;
    config.scenario.means_w[0].iter_mut().for_each(|p| *p = 0.0);
    config.hours = Some(vec![config.scenario.hours[0]]);
    let report = run_dispatch(&config).unwrap();
    let row = &report.hours[0];
    assert!(row.exact);
    assert!(row.p_c.iter().chain(&row.q_c).all(|x| x.abs() < 1e-3), "{:?} {:?}", row.p_c, row.q_c);
    assert_eq!(row.num_selected(), 0);
}

#[test]
fn report_rows_are_consistent() {
    let config = curtailing_day();
    let report = run_dispatch(&config).unwrap();
    assert_eq!(report.relaxation, Relaxation::Socp);
    assert!(report.totals.n_selected <= 20 * report.hours.len());
    let tol_w = 1e-6 * config.feeder.base.s_va;
    for r in &report.hours {
        assert!(r.rank_ratio >= 0.0);
        assert_eq!(r.selected.len(), 20);
        for h in 0..20 {
            assert!(r.p_c[h] >= -tol_w && r.p_c[h] <= r.d[h] + tol_w, "hour {} house {h}", r.hour);
        }
        if r.exact {
            assert!(r.min_v() >= config.vlim.v_min - 1e-6 && r.max_v() <= config.vlim.v_max + 1e-6);
            assert!(r.newton_deviation.unwrap() <= 1e-6);
        }
    }
    let exact: Vec<_> = report.hours.iter().filter(|r| r.exact).collect();
    assert_eq!(exact.len(), report.exact_totals.hours);
}

#[test]
fn unknown_hour_is_rejected() {
    let mut config = example();
    config.hours = Some(vec![3]);
    assert!(matches!(run_dispatch(&config), Err(DispatchError::UnknownHour(3))));
}

#[test]
fn auto_formulation_follows_topology() {
    let mut spec = fishbone(&FishboneParams::default());
    let radial = build_admittance(&spec).unwrap();
    assert_eq!(FormulationChoice::Auto.resolve(&radial), Relaxation::Socp);
    let chord = LineSpec { from: 1, to: spec.nodes.len() - 1, ..spec.lines[0] };
    spec.lines.push(chord);
    let meshed = build_admittance(&spec).unwrap();
    assert_eq!(FormulationChoice::Auto.resolve(&meshed), Relaxation::Sdp);
}
