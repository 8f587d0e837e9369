use ldp_tails::export::fmt_f64;
use ldp_tails::rate_functions::consistency_lattice;
use ldp_tails::svf::{self, SlowlyVaryingSpec};
use ldp_tails::tail_models::{self, IBP_GRID};

use crate::config::resolve_seed;
use crate::{CliError, Context, SelftestArgs, EXIT_CHECK_FAILED, EXIT_OK};

const IBP_TOL: f64 = 1e-6;
const SVF_FROZEN_TOL: f64 = 1e-4;
/// |ℓ(2·10⁶)/ℓ(10⁶) − 1| for ℓ(t) = log(1 + t), by hand.
const SVF_FROZEN: f64 = 0.050171626121275604;
const SVF_DEVIATION_TOL: f64 = 0.05;
const SVF_FAR: f64 = 1e12;
const LATTICE_TOL: f64 = 1e-12;
const LATTICE_CASES: usize = 1000;

struct Check {
    suite: &'static str,
    case: String,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn svf_deviation(l: &SlowlyVaryingSpec) -> f64 {
    [0.5, 2.0, 10.0]
        .iter()
        .map(|&a| l.slow_variation_deviation(a, SVF_FAR).unwrap_or(f64::NAN))
        .fold(0.0, |acc: f64, d| {
            if d.is_nan() || acc.is_nan() {
                f64::NAN
            } else {
                acc.max(d)
            }
        })
}

pub(crate) fn run(ctx: &Context, args: &SelftestArgs) -> Result<i32, CliError> {
    let cfg = ctx.config.selftest.clone().unwrap_or_default();
    let over = args.tolerance.or(cfg.tolerance);
    if let Some(t) = over {
        if !(t >= 0.0) {
            return Err(CliError::Usage(format!(
                "tolerance must be nonnegative, got {t}"
            )));
        }
    }
    let tol = |default: f64| over.unwrap_or(default);
    let mut checks = Vec::new();

    for (name, m) in tail_models::catalogue() {
        for &(alpha, a, b) in &IBP_GRID {
            let value = m
                .integration_by_parts_residual(alpha, a, b)
                .unwrap_or(f64::NAN);
            checks.push(Check {
                suite: "integration_by_parts",
                case: format!("{name} alpha={alpha} a={a} b={b}"),
                value,
                tolerance: tol(IBP_TOL),
            });
        }
    }

    let l = SlowlyVaryingSpec::power_of_log(1.0, 1.0)?;
    let d = l.slow_variation_deviation(2.0, 1e6)?;
    checks.push(Check {
        suite: "slow_variation",
        case: "power_of_log(1,1) a=2 t=1e6 vs frozen".into(),
        value: (d - SVF_FROZEN).abs(),
        tolerance: tol(SVF_FROZEN_TOL),
    });
    for (name, l) in svf::catalogue() {
        checks.push(Check {
            suite: "slow_variation",
            case: format!("{name} t=1e12"),
            value: svf_deviation(&l),
            tolerance: tol(SVF_DEVIATION_TOL),
        });
    }
    for (i, table) in cfg.eps_tables.iter().enumerate() {
        let (value, note) = match table.build() {
            Ok(l) => (svf_deviation(&l), String::new()),
            Err(e) => (f64::NAN, format!(" ({e})")),
        };
        checks.push(Check {
            suite: "eps_table",
            case: format!("table {i}{note}"),
            value,
            tolerance: tol(SVF_DEVIATION_TOL),
        });
    }

    let seed = resolve_seed(ctx.seed_flag, None, ctx.config.seed)?;
    let lattice = consistency_lattice(LATTICE_CASES, seed)?;
    checks.push(Check {
        suite: "rate_lattice",
        case: format!("substitutions, {LATTICE_CASES} queries"),
        value: lattice.max_substitution_gap,
        tolerance: tol(LATTICE_TOL),
    });
    checks.push(Check {
        suite: "rate_lattice",
        case: format!("scaling, {LATTICE_CASES} queries"),
        value: lattice.max_scaling_gap,
        tolerance: tol(LATTICE_TOL),
    });

    ctx.create_out()?;
    let mut w = csv::Writer::from_writer(ctx.file("selftest.csv")?);
    let csv_err = |e: csv::Error| CliError::from(ldp_tails::Error::from(e));
    w.write_record(["suite", "case", "value", "tolerance", "pass"])
        .map_err(csv_err)?;
    for c in &checks {
        w.write_record([
            c.suite.to_string(),
            c.case.clone(),
            fmt_f64(c.value),
            fmt_f64(c.tolerance),
            c.pass().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))?;

    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass()).collect();
    say!(ctx, "{} checks, {} failed", checks.len(), failed.len());
    for c in &failed {
        eprintln!(
            "FAIL {}: {}: {} > {}",
            c.suite,
            c.case,
            fmt_f64(c.value),
            fmt_f64(c.tolerance)
        );
    }
    Ok(if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
