//! Table, CSV, and JSON emission. CSV bytes depend only on the computed
//! numbers, never on wall time, so repeated invocations diff clean.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use cutfem::curve::{enclosed_area, ClosedCurve};
use cutfem::error::SolverError;
use cutfem::fem::assemble::assemble_operators;
use cutfem::fem::quad::VolumeQuad;
use cutfem::fem::Geometry;
use cutfem::problems::ProblemData;
use cutfem::sbdf::SbdfScheme;
use cutfem::stepper::{grid_for, RunConfig, RunReport, StepRecord};
use serde_json::json;

pub struct Level {
    pub n: u32,
    pub h: f64,
    pub result: Result<RunReport, SolverError>,
}

pub fn summary_line(example: u32, rep: &RunReport) -> String {
    format!(
        "example {example} k={} h={} tau={:.6e} steps={} e0={:.6e} e1={:.6e} eOmega={:.6e} ({:.1}s)",
        rep.order, rep.h, rep.tau, rep.steps, rep.e0, rep.e1, rep.e_omega, rep.seconds
    )
}

fn h_tag(h: f64) -> String {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("{}", inv.round() as u64)
    } else {
        format!("{h}")
    }
}

pub fn write_run_json(dir: &Path, example: u32, rep: &RunReport) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("run_ex{example}_k{}_h{}.json", rep.order, h_tag(rep.h)));
    let body = json!({ "example": example, "report": rep });
    fs::write(&path, serde_json::to_string_pretty(&body)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Observed order against the previous successful level, assuming halving.
fn orders(levels: &[Level]) -> Vec<[Option<f64>; 3]> {
    let mut out = Vec::with_capacity(levels.len());
    for (i, l) in levels.iter().enumerate() {
        let mut row = [None, None, None];
        if i > 0 {
            if let (Ok(prev), Ok(cur)) = (&levels[i - 1].result, &l.result) {
                row = [
                    Some((prev.e0 / cur.e0).log2()),
                    Some((prev.e1 / cur.e1).log2()),
                    Some((prev.e_omega / cur.e_omega).log2()),
                ];
            }
        }
        out.push(row);
    }
    out
}

pub fn study_table(levels: &[Level]) -> String {
    let ord = orders(levels);
    let fmt_ord = |o: Option<f64>| o.map_or("     -".to_string(), |v| format!("{v:6.2}"));
    let mut s = String::new();
    s.push_str("      h          tau          e0  order          e1  order      eOmega  order\n");
    for (l, o) in levels.iter().zip(&ord) {
        match &l.result {
            Ok(r) => {
                s.push_str(&format!(
                    "   1/{:<4} {:11.4e} {:11.4e} {} {:11.4e} {} {:11.4e} {}\n",
                    l.n,
                    r.tau,
                    r.e0,
                    fmt_ord(o[0]),
                    r.e1,
                    fmt_ord(o[1]),
                    r.e_omega,
                    fmt_ord(o[2]),
                ));
            }
            Err(e) => s.push_str(&format!("   1/{:<4} failed: {e}\n", l.n)),
        }
    }
    s
}

pub fn study_csv(levels: &[Level]) -> String {
    let ord = orders(levels);
    let cell = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.3}"));
    let mut s = String::from("h,tau,e0,order0,e1,order1,eOmega,orderOmega\n");
    for (l, o) in levels.iter().zip(&ord) {
        match &l.result {
            Ok(r) => s.push_str(&format!(
                "{},{},{:.6e},{},{:.6e},{},{:.6e},{}\n",
                l.h,
                r.tau,
                r.e0,
                cell(o[0]),
                r.e1,
                cell(o[1]),
                r.e_omega,
                cell(o[2]),
            )),
            Err(_) => s.push_str(&format!("{},,,,,,,\n", l.h)),
        }
    }
    s
}

pub fn write_study(
    dir: &Path,
    example: u32,
    order: usize,
    levels: &[Level],
) -> anyhow::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let stem = format!("study_ex{example}_k{order}");
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, study_csv(levels))?;
    let json_path = dir.join(format!("{stem}.json"));
    let body: Vec<serde_json::Value> = levels
        .iter()
        .map(|l| match &l.result {
            Ok(r) => json!({ "n": l.n, "h": l.h, "report": r }),
            Err(e) => json!({ "n": l.n, "h": l.h, "error": e.to_string() }),
        })
        .collect();
    fs::write(
        &json_path,
        serde_json::to_string_pretty(&json!({ "example": example, "order": order, "levels": body }))?,
    )?;
    Ok((csv_path, json_path))
}

pub fn write_snapshot(
    dir: &Path,
    example: u32,
    params: &cutfem::stepper::StepParams,
    rec: &StepRecord,
    samples: usize,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let curve = &rec.geom.curve;
    let len = curve.param_len();
    let trace: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let p = curve.point(len * i as f64 / samples as f64);
            [p.x, p.y]
        })
        .collect();
    let control: Vec<[f64; 2]> = curve.control_points().iter().map(|p| [p.x, p.y]).collect();
    let stem = format!(
        "snap_ex{example}_k{}_h{}_step{:05}",
        params.order,
        h_tag(rec.geom.grid.h),
        rec.n
    );
    let json_path = dir.join(format!("{stem}.json"));
    let body = json!({
        "example": example,
        "order": params.order,
        "h": rec.geom.grid.h,
        "tau": params.tau,
        "step": rec.n,
        "t": rec.t,
        "area": enclosed_area(curve),
        "knots": curve.knots(),
        "control_points": control,
        "samples": trace,
    });
    fs::write(&json_path, serde_json::to_string_pretty(&body)?)?;
    let mut csv = String::from("x,y\n");
    for [x, y] in &trace {
        csv.push_str(&format!("{x},{y}\n"));
    }
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    Ok(json_path)
}

/// Debug export of the assembled operators on the initial geometry.
pub fn dump_matrices(
    problem: &dyn ProblemData,
    cfg: &RunConfig,
    dir: &Path,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let grid = grid_for(problem, cfg.h)?;
    let geom = Geometry::build(problem.initial_shape(), grid, cfg.order)?;
    let vq = VolumeQuad::build(&geom);
    let ops = assemble_operators(&geom, &vq, problem.nu(), cfg.gamma);
    let tau = cfg.tau.unwrap_or(problem.tau_factor() * cfg.h);
    let scheme = SbdfScheme::new(cfg.order);
    let step = ops.mass_plain.add_scaled(tau / scheme.a(0), &ops.stiffness);
    for (name, m) in [
        ("stiffness", &ops.stiffness),
        ("mass", &ops.mass_plain),
        ("mass_penalized", &ops.mass_penalized),
        ("step", &step),
    ] {
        let path = dir.join(format!("{name}.mtx"));
        let mut w = BufWriter::new(File::create(&path)?);
        m.write_matrix_market(&mut w)?;
        w.flush()?;
    }
    Ok(())
}
