//! Command line driver: single runs, convergence studies, and boundary
//! snapshots for the built-in moving-domain examples.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use cutfem::error::SolverError;
use cutfem::problems::{example, ProblemData};
use cutfem::stepper::{run, RunConfig, StepParams, Stepper};

#[derive(Parser)]
#[command(name = "cutfem", version, about = "Moving-domain cut finite element solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one example at a single resolution and report its errors.
    Run(RunArgs),
    /// Run a halving refinement sequence and tabulate observed orders.
    Study(StudyArgs),
    /// Export the tracked boundary at selected times.
    Snapshot(SnapshotArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Example number: 1, 2, or 3.
    #[arg(long)]
    example: u32,
    /// SBDF order, also the finite element degree (1 to 4).
    #[arg(long)]
    order: usize,
    /// Ghost penalty coefficient.
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
    /// Boundary marker spacing as a multiple of the mesh size.
    #[arg(long, default_value_t = 0.5)]
    eta_factor: f64,
    /// Marker insertion and removal hysteresis.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Directory for JSON/CSV artifacts; stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh size, decimal or a fraction like 1/32.
    #[arg(long, value_parser = parse_h)]
    h: f64,
    /// Time step; defaults to the example's tau-h coupling.
    #[arg(long)]
    tau: Option<f64>,
    /// Stop at this time instead of the example's period.
    #[arg(long)]
    t_final: Option<f64>,
    /// Debug: write the operators assembled on the initial geometry in
    /// Matrix Market format to this directory.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated inverse mesh sizes forming a halving sequence,
    /// e.g. 16,32,64.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<u32>,
}

#[derive(Args)]
struct SnapshotArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh size, decimal or a fraction like 1/32.
    #[arg(long, value_parser = parse_h)]
    h: f64,
    /// Time step; defaults to the example's tau-h coupling.
    #[arg(long)]
    tau: Option<f64>,
    /// Comma-separated times; each must land on a step.
    #[arg(long, value_delimiter = ',', required = true)]
    times: Vec<f64>,
    /// Number of points in the densified boundary trace.
    #[arg(long, default_value_t = 256)]
    samples: usize,
}

fn parse_h(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.trim().parse().map_err(|e| format!("{e}"))?;
            let d: f64 = den.trim().parse().map_err(|e| format!("{e}"))?;
            n / d
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("mesh size {s:?} is not positive"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Study(a) => cmd_study(a),
        Command::Snapshot(a) => cmd_snapshot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            println!("{}", diagnostic_json(&err));
            ExitCode::from(2)
        }
    }
}

/// The solver is single threaded; the knob exists so scripted callers can
/// set it without probing capabilities.
fn configure_threads() {
    if let Ok(v) = std::env::var("CUTFEM_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if n > 1 {
                    eprintln!("cutfem: assembly is single threaded, using 1 thread");
                }
            }
            _ => eprintln!("cutfem: ignoring invalid CUTFEM_THREADS={v:?}"),
        }
    }
}

fn diagnostic_json(err: &anyhow::Error) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("error".into(), err.to_string().into());
    if let Some(SolverError::StepFailed { step, phase, source }) =
        err.downcast_ref::<SolverError>()
    {
        obj.insert("step".into(), (*step).into());
        obj.insert("phase".into(), (*phase).into());
        obj.insert("detail".into(), source.to_string().into());
    }
    serde_json::Value::Object(obj).to_string()
}

fn lookup(idx: u32) -> anyhow::Result<Box<dyn ProblemData>> {
    example(idx).ok_or_else(|| anyhow!("unknown example {idx}; available: 1, 2, 3"))
}

fn build_config(common: &CommonArgs, h: f64, tau: Option<f64>, t_final: Option<f64>) -> RunConfig {
    RunConfig {
        order: common.order,
        h,
        tau,
        gamma: common.gamma,
        eta_factor: common.eta_factor,
        delta: common.delta,
        t_final,
    }
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let problem = lookup(a.common.example)?;
    let cfg = build_config(&a.common, a.h, a.tau, a.t_final);
    if let Some(dir) = &a.dump_matrices {
        output::dump_matrices(problem.as_ref(), &cfg, dir)?;
        println!("wrote operators to {}", dir.display());
    }
    let report = run(problem.as_ref(), &cfg)?;
    println!("{}", output::summary_line(a.common.example, &report));
    if let Some(dir) = &a.common.out {
        let path = output::write_run_json(dir, a.common.example, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_study(a: StudyArgs) -> anyhow::Result<()> {
    let problem = lookup(a.common.example)?;
    if a.levels.is_empty() {
        bail!("no levels given");
    }
    for w in a.levels.windows(2) {
        if w[1] != 2 * w[0] {
            bail!("levels must halve the mesh size: {} does not follow {}", w[1], w[0]);
        }
    }
    let mut outcomes = Vec::new();
    for &n in &a.levels {
        let h = 1.0 / n as f64;
        let cfg = build_config(&a.common, h, None, None);
        let result = run(problem.as_ref(), &cfg);
        match &result {
            Ok(rep) => println!("{}", output::summary_line(a.common.example, rep)),
            Err(e) => println!("level 1/{n} failed: {e}"),
        }
        outcomes.push(output::Level { n, h, result });
    }
    print!("{}", output::study_table(&outcomes));
    if let Some(dir) = &a.common.out {
        let (csv, json) = output::write_study(dir, a.common.example, a.common.order, &outcomes)?;
        println!("wrote {}", csv.display());
        println!("wrote {}", json.display());
    }
    let failures: Vec<String> = outcomes
        .iter()
        .filter_map(|l| l.result.as_ref().err().map(|e| format!("1/{}: {e}", l.n)))
        .collect();
    if !failures.is_empty() {
        bail!("{} of {} levels failed: {}", failures.len(), outcomes.len(), failures.join("; "));
    }
    Ok(())
}

fn cmd_snapshot(a: SnapshotArgs) -> anyhow::Result<()> {
    let problem = lookup(a.common.example)?;
    let tau = a.tau.unwrap_or(problem.tau_factor() * a.h);
    let t_total = problem.final_time();
    let mut want: Vec<usize> = Vec::new();
    for &t in &a.times {
        let m = (t / tau).round();
        if (m * tau - t).abs() > 1e-9 * tau {
            bail!("time {t} is not a multiple of the step {tau}");
        }
        if t < 0.0 || t > t_total + 1e-9 {
            bail!("time {t} is outside [0, {t_total}]");
        }
        want.push(m as usize);
    }
    let grid = cutfem::stepper::grid_for(problem.as_ref(), a.h)?;
    let params = StepParams {
        order: a.common.order,
        tau,
        nu: problem.nu(),
        gamma: a.common.gamma,
        eta_factor: a.common.eta_factor,
        delta: a.common.delta,
    };
    let out = a.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut stepper = Stepper::startup(problem.as_ref(), grid, params)
        .context("startup failed")?;
    let mut emitted = Vec::new();
    let last = *want.iter().max().unwrap();
    for rec in stepper.records().collect::<Vec<_>>().into_iter().rev() {
        if want.contains(&rec.n) {
            emitted.push(output::write_snapshot(&out, a.common.example, &params, rec, a.samples)?);
        }
    }
    while stepper.current().n < last {
        stepper.advance()?;
        let rec = stepper.current();
        if want.contains(&rec.n) {
            emitted.push(output::write_snapshot(&out, a.common.example, &params, rec, a.samples)?);
        }
    }
    for p in emitted {
        println!("wrote {}", p.display());
    }
    Ok(())
}
