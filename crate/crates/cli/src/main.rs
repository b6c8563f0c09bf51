mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use pvdispatch::conic::read_problem;
use pvdispatch::dispatch::{
    run_dispatch, run_sweep, write_outputs, write_sweep_csv, FormulationChoice, Mode, RunConfig, SweepParam, SWEEP_CSV,
};
use pvdispatch::feeder::{build_admittance, fishbone, load_feeder, save_feeder, validate_feeder, FishboneParams};
use pvdispatch::par::Execution;
use pvdispatch::scenario::{daily_profile, write_samples_csv, ProfileParams, ScenarioConfig};
use pvdispatch::solver::{solve, SolverSettings};
use pvdispatch::validate::{sensitivity_matrix, write_sensitivity_csv, OperatingPoint};

/// File names written by `example`.
const FEEDER_FILE: &str = "fishbone_20.json";
const SCENARIO_FILE: &str = "day.json";

#[derive(Parser)]
#[command(name = "pvdispatch", version, about = "Risk-aware dispatch of residential PV inverters")]
struct Cli {
    /// Run the sweep trend checks on the built-in example and exit.
    #[arg(long)]
    self_test: bool,
    /// Restrict `--self-test` to these hours.
    #[arg(long, value_delimiter = ',', requires = "self_test")]
    self_test_hours: Option<Vec<u32>>,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve each hour of a day and write report.json, hourly.csv and plotdata/.
    Dispatch {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the daily dispatch over a parameter grid and write sweep.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// One of c_R, beta, sigma_fraction, c_z.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw the forecast-error scenarios of one hour.
    Sample {
        #[arg(long)]
        feeder: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        hour: u32,
        /// CSV destination, one row per scenario.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Check a feeder file and print the findings as JSON.
    Validate {
        #[arg(long)]
        feeder: PathBuf,
    },
    /// Write the bundled example feeder and day configuration.
    Example {
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a conic program in the sparse text format.
    SolveConic {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-iteration convergence log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Two-node line sensitivities over a range of X/R ratios, as CSV.
    Sensitivity {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    feeder: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Risk)]
    mode: ModeArg,
    #[arg(long, value_delimiter = ',')]
    hours: Option<Vec<u32>>,
    #[arg(long, value_enum, default_value_t = FormulationArg::Auto)]
    formulation: FormulationArg,
    #[arg(long, default_value_t = 1.0)]
    c_l: f64,
    #[arg(long, default_value_t = 0.5)]
    c_p: f64,
    #[arg(long, default_value_t = 0.9)]
    c_z: f64,
    #[arg(long, default_value_t = 1.0)]
    c_r: f64,
    #[arg(long, default_value_t = 0.0)]
    fairness: f64,
    /// Overrides the scenario file.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma_fraction: Option<f64>,
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.917)]
    v_min: f64,
    #[arg(long, default_value_t = 1.042)]
    v_max: f64,
    #[arg(long, default_value_t = 1.02)]
    v_slack: f64,
    /// Solve hours one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Risk,
    Deterministic,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormulationArg {
    Auto,
    Sdp,
    Socp,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let spec = load_feeder(&self.feeder).with_context(|| format!("reading {}", self.feeder.display()))?;
        let feeder = build_admittance(&spec)?;
        let mut scenario =
            ScenarioConfig::load(&self.scenario).with_context(|| format!("reading {}", self.scenario.display()))?;
        if let Some(b) = self.beta {
            scenario.beta = b;
        }
        if let Some(s) = self.sigma_fraction {
            scenario.sigma_fraction = s;
        }
        if let Some(s) = self.scenarios {
            scenario.scenarios = s;
        }
        if let Some(s) = self.seed {
            scenario.seed = s;
        }
        let mut c = RunConfig::new(feeder, scenario);
        c.mode = match self.mode {
            ModeArg::Risk => Mode::Risk,
            ModeArg::Deterministic => Mode::Deterministic,
        };
        c.hours = self.hours.clone();
        c.formulation = match self.formulation {
            FormulationArg::Auto => FormulationChoice::Auto,
            FormulationArg::Sdp => FormulationChoice::Sdp,
            FormulationArg::Socp => FormulationChoice::Socp,
        };
        c.cost.c_l = self.c_l;
        c.cost.c_p = self.c_p;
        c.cost.c_z = self.c_z;
        c.cost.c_r = self.c_r;
        c.cost.fairness_weight = self.fairness;
        c.vlim.v_min = self.v_min;
        c.vlim.v_max = self.v_max;
        c.vlim.v_slack = self.v_slack;
        c.exec = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        Ok(c)
    }
}

/// The bundled example: fishbone feeder and synthetic day.
fn example_config() -> Result<RunConfig> {
    let feeder = build_admittance(&fishbone(&FishboneParams::default()))?;
    let scenario = daily_profile(&feeder, &ProfileParams::default());
    Ok(RunConfig::new(feeder, scenario))
}

fn write_example(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let spec = fishbone(&FishboneParams::default());
    save_feeder(&spec, &dir.join(FEEDER_FILE))?;
    let feeder = build_admittance(&spec)?;
    daily_profile(&feeder, &ProfileParams::default()).save(&dir.join(SCENARIO_FILE))?;
    Ok(())
}

fn print_summary(report: &pvdispatch::dispatch::DispatchReport) {
    println!("hour  status   rank_ratio  exact  max|v|    P_c [W]    |Q_c| [var]  selected");
    for r in &report.hours {
        println!(
            "{:>4}  {:<8} {:>10.2e}  {:<5}  {:.5}  {:>9.1}  {:>11.1}  {}",
            r.hour,
            r.status.as_str(),
            r.rank_ratio,
            r.exact,
            r.max_v(),
            r.p_c.iter().sum::<f64>(),
            r.q_c.iter().map(|q| q.abs()).sum::<f64>(),
            r.num_selected()
        );
    }
    let t = report.totals;
    println!(
        "P_c^tot {:.3} kWh, Q_c^tot {:.3} kvarh, N^tot {} ({} of {} hours exact)",
        t.p_c_kwh,
        t.q_c_kvarh,
        t.n_selected,
        report.exact_totals.hours,
        t.hours
    );
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.self_test {
        let mut config = example_config()?;
        config.hours = cli.self_test_hours;
        return Ok(if selftest::run(&config)? { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    match command {
        Command::Dispatch { run, out } => {
            let report = run_dispatch(&run.config()?)?;
            write_outputs(&report, &out)?;
            print_summary(&report);
            info!("wrote {}", out.display());
        }
        Command::Sweep { run, param, values, out } => {
            let param: SweepParam = param.parse()?;
            let table = run_sweep(&run.config()?, param, &values)?;
            fs::create_dir_all(&out)?;
            write_sweep_csv(&table, &out.join(SWEEP_CSV))?;
            for p in &table.points {
                write_outputs(&p.report, &out.join(format!("{}={}", param.name(), p.value)))?;
            }
            println!("{:>10}  {:>10}  {:>12}  {:>5}  exact hours", param.name(), "P_c^tot", "Q_c^tot", "N^tot");
            for p in &table.points {
                let t = p.report.totals;
                println!(
                    "{:>10}  {:>10.3}  {:>12.3}  {:>5}  {}",
                    p.value,
                    t.p_c_kwh,
                    t.q_c_kvarh,
                    t.n_selected,
                    p.report.exact_totals.hours
                );
            }
        }
        Command::Sample { feeder, scenario, hour, export } => {
            let feeder = build_admittance(&load_feeder(&feeder)?)?;
            let cfg = RunConfig::new(feeder, ScenarioConfig::load(&scenario)?);
            let k = cfg.scenario.hours.iter().position(|&h| h == hour).with_context(|| format!("hour {hour} not in {}", scenario.display()))?;
            let set = cfg.scenarios_at(k, hour)?;
            let labels: Vec<String> = (1..=set.houses()).map(|h| format!("H{h}")).collect();
            match export {
                Some(path) => write_samples_csv(&set, &labels, fs::File::create(&path)?)?,
                None => {
                    for (h, (lo, hi)) in set.support_box.iter().enumerate() {
                        let mean = set.samples.iter().map(|s| s[h]).sum::<f64>() / set.len() as f64;
                        println!("{}  mean {:>8.1} W  support [{:.1}, {:.1}]", labels[h], mean, lo, hi);
                    }
                }
            }
        }
        Command::Validate { feeder } => {
            let report = validate_feeder(&load_feeder(&feeder)?);
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Example { out } => write_example(&out)?,
        Command::SolveConic { problem, out, log } => {
            let p = read_problem(&fs::read_to_string(&problem)?)?;
            let sol = solve(&p, &SolverSettings::default())?;
            fs::write(&out, sol.to_text())?;
            if let Some(path) = log {
                sol.write_log_csv(&path)?;
            }
            println!("{} after {} iterations, objective {:.10e}", sol.status, sol.iterations, sol.objective);
        }
        Command::Sensitivity { out } => {
            let rows = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0]
                .into_iter()
                .map(|ratio| {
                    let op = OperatingPoint { v1: 1.0, v2: 1.0, th1: 0.0, th2: 0.0, g: 1.0, b: -ratio };
                    sensitivity_matrix(&op).map(|blk| (op, blk))
                })
                .collect::<Result<Vec<_>, _>>()?;
            write_sensitivity_csv(&rows, fs::File::create(&out)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
