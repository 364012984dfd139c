use std::io::Write;

use wlab_core::reference::{model_entropy, preset_geodesic, preset_gradient, solve_u_beta, ReferenceModel};

use crate::output::num;
use crate::{Failure, ReferenceArgs};

enum CFlag {
    Zero,
    Finite(f64),
    Infinite,
}

fn parse_c(s: &str) -> Result<CFlag, Failure> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(CFlag::Infinite),
        t => match t.parse::<f64>() {
            Ok(c) if c == 0.0 => Ok(CFlag::Zero),
            Ok(c) if c > 0.0 && c.is_finite() => Ok(CFlag::Finite(c)),
            _ => Err(Failure::usage(format!("--c {s}: expected a positive number, `inf` or `0`"))),
        },
    }
}

pub const COLUMNS: [&str; 9] = ["t", "u", "up", "alpha", "beta", "Ent", "Fisher", "Kin", "dW_model"];

pub fn run(args: &ReferenceArgs) -> Result<u8, Failure> {
    if !(args.u0 > 0.0) {
        return Err(Failure::usage(format!("--u0 {} must be positive", args.u0)));
    }
    let model: ReferenceModel = match parse_c(&args.c)? {
        CFlag::Finite(c) => solve_u_beta(c, args.m, args.u0, args.up0, 0.0, args.t_end, args.dt)?,
        CFlag::Infinite => preset_geodesic(args.m, args.t_end, args.dt)?,
        CFlag::Zero => preset_gradient(args.m, args.t_end, args.dt)?,
    };
    let mut text = COLUMNS.join(",") + "\n";
    let m = model.m as f64;
    for (i, &t) in model.times.iter().enumerate() {
        let (u, up, beta) = (model.u[i], model.up[i], model.beta[i]);
        let alpha = up / u;
        let row = [t, u, up, alpha, beta, model_entropy(model.m, u), 0.5 * m / (u * u), 2.0 * m * up * up, -m * alpha * alpha];
        text.push_str(&row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    if model.hit_floor {
        eprintln!("wlab: u reached the floor; model horizon T_model = {}", model.t_model);
    }
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::numeric(format!("cannot write {}: {e}", p.display())))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::numeric(e.to_string()))?,
    }
    Ok(0)
}
