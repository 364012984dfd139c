use std::path::Path;

use serde_json::json;
use wlab_core::entropy::{finite_dim_functionals, rhs_integrals, EntropySeries, RhsId, RhsParams, StateCalculus};
use wlab_core::flows::{FiniteDimTrajectory, FlowKind, FlowTrajectory};
use wlab_core::scenario::{RunOutput, ScenarioConfig};
use wlab_core::verify::fd::HALF_WIDTH;

use crate::output::{csv_err, csv_file, ensure_dir, gnuplot_script, num, out_dir, read_config, write};
use crate::{Failure, SimulateArgs};

/// Quadrature columns worth plotting next to the differenced ones.
fn rhs_columns(kind: FlowKind) -> &'static [RhsId] {
    match kind {
        FlowKind::Heat => &[RhsId::HeatWm],
        FlowKind::Geodesic => &[RhsId::GeoWm, RhsId::GeoDissipation],
        FlowKind::Langevin { .. } | FlowKind::Euler { .. } => {
            &[RhsId::Hamiltonian1st, RhsId::Hamiltonian2nd, RhsId::WExpH]
        }
        FlowKind::FiniteDim { .. } => &[],
    }
}

pub fn run(args: &SimulateArgs) -> Result<u8, Failure> {
    let cfg = read_config(&args.config)?;
    let dir = out_dir(args.out.as_ref(), Some(&cfg), "wlab-out");
    ensure_dir(&dir)?;
    let truncated = match cfg.run(args.seed)? {
        RunOutput::Pde(traj) => write_pde(&cfg, &traj, &dir, args)?,
        RunOutput::FiniteDim(traj) => write_finite_dim(&traj, &dir, args)?,
    };
    if let Some(reason) = truncated {
        eprintln!("wlab: flow truncated: {reason}");
        if args.strict {
            return Err(Failure::numeric(format!("flow truncated ({reason}) under --strict")));
        }
    }
    Ok(0)
}

fn write_pde(cfg: &ScenarioConfig, traj: &FlowTrajectory, dir: &Path, args: &SimulateArgs) -> Result<Option<String>, Failure> {
    let geom = traj.snapshots[0].geometry().clone();
    let m = geom.m();

    let mut w = csv_file(&dir.join("diagnostics.csv"))?;
    w.write_record(["t", "min_rho", "mass", "hess_sup", "vorticity_l2", "vorticity_sup", "tail"]).map_err(csv_err)?;
    for d in &traj.diagnostics {
        let row = [d.t, d.min_rho, d.mass, d.hess_sup, d.vorticity_l2, d.vorticity_sup, d.tail];
        w.write_record(row.iter().map(|v| num(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Failure::numeric(e.to_string()))?;

    let has_series = traj.snapshots.len() > 2 * HALF_WIDTH + 2;
    if has_series {
        let calcs = traj.snapshots.iter().map(StateCalculus::from_state).collect::<Result<Vec<_>, _>>()?;
        let mut series = EntropySeries::from_calcs(&traj.times(), &calcs, traj.kind, m)?;
        if let Some(m) = m {
            for id in rhs_columns(traj.kind) {
                let col = calcs
                    .iter()
                    .zip(&series.times)
                    .map(|(c, &t)| {
                        let mut p = RhsParams::new(m, t);
                        p.c = traj.kind.c();
                        Ok(rhs_integrals(c, &p)?.get(id).copied().unwrap_or(f64::NAN))
                    })
                    .collect::<Result<Vec<f64>, wlab_core::Error>>()?;
                series.add_rhs(id.name(), col)?;
            }
        }
        let file = std::fs::File::create(dir.join("entropy.csv")).map_err(|e| Failure::numeric(e.to_string()))?;
        series.write_csv(file)?;
    } else {
        eprintln!("wlab: {} output times are too few for entropy derivatives; entropy.csv not written", traj.snapshots.len());
    }

    if args.dump_fields {
        let fields = dir.join("fields");
        ensure_dir(&fields)?;
        for (k, s) in traj.snapshots.iter().enumerate() {
            let mut header: Vec<String> = (0..geom.dim()).map(|a| format!("x{a}")).collect();
            header.push("rho".into());
            let mut cols: Vec<&[f64]> = vec![s.rho.values()];
            if let Some(p) = s.phi() {
                header.push("phi".into());
                cols.push(p.values());
            }
            if let Some(u) = s.u() {
                for (a, c) in u.components().iter().enumerate() {
                    header.push(format!("u{a}"));
                    cols.push(c);
                }
            }
            let mut w = csv_file(&fields.join(format!("snapshot_{k:05}.csv")))?;
            w.write_record(&header).map_err(csv_err)?;
            for i in 0..geom.len() {
                let mut row: Vec<String> = geom.node(i).into_iter().map(num).collect();
                row.extend(cols.iter().map(|c| num(c[i])));
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Failure::numeric(e.to_string()))?;
        }
    }

    let meta = json!({
        "kind": traj.kind.name(),
        "termination": traj.termination.name(),
        "steps_taken": traj.steps_taken,
        "snapshots": traj.snapshots.len(),
        "t_last": traj.last().t,
        "config": cfg,
    });
    write(&dir.join("run.json"), &(serde_json::to_string_pretty(&meta).unwrap() + "\n"))?;

    if args.gnuplot && has_series {
        let cols: &[&str] = match traj.kind {
            FlowKind::Heat | FlowKind::Geodesic => &["Ent", "Wm", "dWm"],
            _ => &["Ent", "H", "dH"],
        };
        write(&dir.join("plot.gp"), &gnuplot_script("entropy.csv", traj.kind.name(), cols))?;
    }
    println!(
        "{} flow: {} output times, t = {} .. {}, {}; wrote {}",
        traj.kind.name(),
        traj.snapshots.len(),
        traj.snapshots[0].t,
        traj.last().t,
        traj.termination.name(),
        dir.display()
    );
    Ok((!traj.completed()).then(|| format!("{} at t = {}", traj.termination.name(), traj.last().t)))
}

fn write_finite_dim(traj: &FiniteDimTrajectory, dir: &Path, args: &SimulateArgs) -> Result<Option<String>, Failure> {
    let d = traj.states[0].x.len();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend((0..d).map(|i| format!("v{i}")));
    header.extend(["H", "V", "dH", "dV", "rhs_w_h", "rhs_w_v"].map(String::from));
    let mut w = csv_file(&dir.join("trajectory.csv"))?;
    w.write_record(&header).map_err(csv_err)?;
    for s in &traj.states {
        let f = finite_dim_functionals(s, &traj.potential);
        let mut row = vec![s.t];
        row.extend(&s.x);
        row.extend(&s.v);
        row.extend([f.h, f.v, f.dh, f.dv, f.rhs_w_h, f.rhs_w_v]);
        w.write_record(row.iter().map(|v| num(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Failure::numeric(e.to_string()))?;
    if args.gnuplot {
        write(&dir.join("plot.gp"), &gnuplot_script("trajectory.csv", "finite_dim", &["H", "V"]))?;
    }
    println!("finite_dim flow: {} output times; wrote {}", traj.states.len(), dir.display());
    Ok(None)
}
