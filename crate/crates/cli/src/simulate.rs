use ldp_tails::export::{fmt_f64, write_estimates};
use ldp_tails::rare_event_mc::{
    annealed_run, quenched_run, rate_curve, synthetic_curve, SimulationEstimate, SimulationPlan,
};

use crate::config::{resolve_seed, ModelRef, RunConfig, SchemeRef, SimulateMode};
use crate::{CliError, Context, EXIT_OK};

const DEFAULT_THETA_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;

pub(crate) fn run(ctx: &Context) -> Result<i32, CliError> {
    let Some(cfg) = ctx.config.simulate.clone() else {
        return Err(CliError::Usage(
            "simulate needs a config file with a `simulate` block".into(),
        ));
    };
    let seed = resolve_seed(ctx.seed_flag, cfg.seed, ctx.config.seed)?;
    let spec = cfg.plan_spec(seed)?;
    // infeasible x and malformed grids fail here, before any sampling
    let plan = SimulationPlan::new(spec.clone())?.with_workers(ctx.workers);

    let mut resolved = cfg.clone();
    resolved.model = ModelRef::Full(Box::new(spec.model.clone()));
    resolved.scheme = SchemeRef::Full(spec.scheme.clone());
    resolved.seed = Some(seed);
    if matches!(cfg.mode, SimulateMode::Quenched | SimulateMode::Paired)
        && resolved.theta_seeds.is_empty()
    {
        resolved.theta_seeds = DEFAULT_THETA_SEEDS.collect();
    }
    if cfg.mode == SimulateMode::Synthetic && resolved.synthetic_rate.is_none() {
        resolved.synthetic_rate = Some(1.0);
    }

    let mut rows: Vec<(String, SimulationEstimate)> = Vec::new();
    let tag = |label: String, curve: Vec<SimulationEstimate>| {
        curve.into_iter().map(move |e| (label.clone(), e))
    };
    match cfg.mode {
        SimulateMode::Standard => rows.extend(tag("standard".into(), rate_curve(&plan)?)),
        SimulateMode::Annealed => rows.extend(tag("annealed".into(), annealed_run(&plan)?)),
        SimulateMode::Quenched | SimulateMode::Paired => {
            for &s in &resolved.theta_seeds {
                rows.extend(tag(format!("quenched_{s}"), quenched_run(&plan, s)?));
            }
            if cfg.mode == SimulateMode::Paired {
                rows.extend(tag("annealed".into(), annealed_run(&plan)?));
            }
        }
        SimulateMode::Synthetic => {
            let rate = resolved.synthetic_rate.unwrap_or(1.0);
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(CliError::Usage(format!(
                    "synthetic_rate must be positive, got {rate}"
                )));
            }
            let curve = synthetic_curve(&plan, |n| -rate * plan.speed(n).unwrap_or(f64::NAN))?;
            rows.extend(tag("synthetic".into(), curve));
        }
    }

    ctx.create_out()?;
    write_estimates(ctx.file("simulation.csv")?, &rows)?;
    let manifest = RunConfig {
        simulate: Some(resolved),
        ..RunConfig::default()
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(ldp_tails::Error::from)?;
    let path = ctx.out.join("manifest.json");
    std::fs::write(&path, text + "\n").map_err(|source| CliError::Output { path, source })?;

    for (run, e) in &rows {
        say!(
            ctx,
            "{run} n = {}: p_hat = {}, rho = {}, target = {}",
            e.n,
            fmt_f64(e.p_hat),
            fmt_f64(e.rho),
            fmt_f64(e.target_rate)
        );
    }
    Ok(EXIT_OK)
}
