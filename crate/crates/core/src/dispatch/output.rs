//! Report files. Numbers are written in shortest round-trip form so re-reading them
//! reproduces the in-memory values exactly.
//!
//! - `report.json`: the full [`DispatchReport`].
//! - `hourly.csv`: `hour,house,node,p_c_w,q_c_var,d_w,selected,rank_ratio,exact`, one row
//!   per hour and house.
//! - `plotdata/curtailment.csv`: `hour,house,p_c_w,q_c_var`, one row per hour and house,
//!   for stacked per-house curtailment plots.
//! - `plotdata/voltage.csv`: `hour,node,v_pu,exact`, one row per hour and node.
//! - `sweep.csv`: `param,value,p_c_kwh,q_c_kvarh,n_tot,exact_hours`.

use std::fs;
use std::path::Path;

use super::{DispatchError, DispatchReport, SweepTable, Totals};

pub const REPORT_JSON: &str = "report.json";
pub const HOURLY_CSV: &str = "hourly.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const CURTAILMENT_CSV: &str = "plotdata/curtailment.csv";
pub const VOLTAGE_CSV: &str = "plotdata/voltage.csv";

pub fn write_outputs(report: &DispatchReport, dir: &Path) -> Result<(), DispatchError> {
    fs::create_dir_all(dir.join("plotdata"))?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join(REPORT_JSON), json)?;

    let labels = report.house_labels();
    let mut hourly = csv::Writer::from_path(dir.join(HOURLY_CSV))?;
    hourly.write_record(["hour", "house", "node", "p_c_w", "q_c_var", "d_w", "selected", "rank_ratio", "exact"])?;
    let mut curt = csv::Writer::from_path(dir.join(CURTAILMENT_CSV))?;
    curt.write_record(["hour", "house", "p_c_w", "q_c_var"])?;
    for r in &report.hours {
        for (h, label) in labels.iter().enumerate() {
            hourly.write_record([
                r.hour.to_string(),
                label.clone(),
                report.houses[h].to_string(),
                r.p_c[h].to_string(),
                r.q_c[h].to_string(),
                r.d[h].to_string(),
                u8::from(r.selected[h]).to_string(),
                r.rank_ratio.to_string(),
                u8::from(r.exact).to_string(),
            ])?;
            curt.write_record([r.hour.to_string(), label.clone(), r.p_c[h].to_string(), r.q_c[h].to_string()])?;
        }
    }
    hourly.flush()?;
    curt.flush()?;

    let mut volt = csv::Writer::from_path(dir.join(VOLTAGE_CSV))?;
    volt.write_record(["hour", "node", "v_pu", "exact"])?;
    for r in &report.hours {
        for (node, v) in r.v.iter().enumerate() {
            volt.write_record([r.hour.to_string(), node.to_string(), v.to_string(), u8::from(r.exact).to_string()])?;
        }
    }
    volt.flush()?;
    Ok(())
}

pub fn write_sweep_csv(table: &SweepTable, path: &Path) -> Result<(), DispatchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["param", "value", "p_c_kwh", "q_c_kvarh", "n_tot", "exact_hours"])?;
    for p in &table.points {
        let t = &p.report.totals;
        w.write_record([
            table.param.name().to_string(),
            p.value.to_string(),
            t.p_c_kwh.to_string(),
            t.q_c_kvarh.to_string(),
            t.n_selected.to_string(),
            p.report.exact_hours().len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Totals recomputed from `hourly.csv` alone.
pub fn read_hourly_totals(path: &Path) -> Result<Totals, DispatchError> {
    let mut r = csv::Reader::from_path(path)?;
    let (mut p, mut q, mut n) = (0.0, 0.0, 0);
    let mut hours = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<f64>().unwrap_or(f64::NAN);
        let hour = &rec[0];
        if hours.last().map(String::as_str) != Some(hour) {
            hours.push(hour.to_string());
        }
        p += num(3);
        q += num(4).abs();
        n += usize::from(&rec[6] == "1");
    }
    Ok(Totals { p_c_kwh: p / 1000.0, q_c_kvarh: q / 1000.0, n_selected: n, hours: hours.len() })
}
