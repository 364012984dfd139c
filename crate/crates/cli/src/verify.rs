use wlab_core::verify::{default_suite, required_flow, run_suite, CheckId, CheckRequest, CheckSpec, OracleId, Status};

use crate::output::{ensure_dir, gnuplot_script, out_dir, read_config, write};
use crate::{Failure, VerifyArgs};

fn select(specs: Vec<CheckSpec>, only: &[String]) -> Result<Vec<CheckSpec>, Failure> {
    if only.is_empty() {
        return Ok(specs);
    }
    for o in only {
        if o.parse::<CheckId>().is_err() && !specs.iter().any(|s| &s.name == o) {
            return Err(Failure::usage(format!("--only {o}: not a check id or instance name in this run")));
        }
    }
    Ok(specs.into_iter().filter(|s| only.iter().any(|o| o == &s.name || o == s.id.name())).collect())
}

pub fn run(args: &VerifyArgs) -> Result<u8, Failure> {
    let (specs, cfg) = match (&args.suite, &args.config) {
        (Some(name), _) if name == "default" => (default_suite(), None),
        (Some(name), _) => return Err(Failure::usage(format!("unknown suite `{name}` (known: default)"))),
        (None, Some(path)) => {
            let cfg = read_config(path)?;
            // no explicit checks: everything that applies to this flow kind
            let requests: Vec<CheckRequest> = if cfg.checks.is_empty() {
                CheckId::all()
                    .into_iter()
                    .filter(|&id| required_flow(id) == Some(cfg.flow.kind))
                    .map(|id| CheckRequest { id, name: None, params: Default::default() })
                    .collect()
            } else {
                cfg.checks.clone()
            };
            let specs = requests.iter().map(|r| CheckSpec::from_request(r, &cfg)).collect::<Result<Vec<_>, _>>()?;
            (specs, Some(cfg))
        }
        (None, None) => return Err(Failure::usage("verify needs --config PATH or --suite default")),
    };
    let mut specs = select(specs, &args.only)?;
    for s in &mut specs {
        if args.wrong_sign && s.id == CheckId::Oracle(OracleId::ModelResidual) {
            s.params.wrong_sign = true;
        }
        if let (Some(seed), Some(scn)) = (args.seed, s.scenario.as_mut()) {
            scn.seed = Some(seed);
        }
    }
    let names: std::collections::BTreeSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    if names.len() != specs.len() {
        return Err(Failure::usage("check names must be unique (set `name` on repeated ids)"));
    }

    let dir = out_dir(args.out.as_ref(), cfg.as_ref(), "wlab-out/verify");
    ensure_dir(&dir)?;
    let outcome = run_suite(&specs);
    outcome.write(&dir)?;
    if args.gnuplot {
        let mut s = String::new();
        for r in &outcome.reports {
            s.push_str(&gnuplot_script(&format!("{}.csv", r.name), &r.name, &["lhs", "rhs"]));
            s.push_str("pause -1\n");
        }
        write(&dir.join("plot.gp"), &s)?;
    }
    print!("{}", outcome.table());

    if let Some((name, e)) = outcome.errors.first() {
        let code = if outcome.errors.iter().all(|(_, e)| !matches!(e, wlab_core::Error::Numeric(_))) { 2 } else { 3 };
        return Err(Failure { code, message: format!("{name}: {e}") });
    }
    let failed = outcome.count(Status::Fail) > 0;
    let inconclusive = outcome.count(Status::Inconclusive) > 0;
    Ok(if failed || (args.strict && inconclusive) { 1 } else { 0 })
}
