use ldp_tails::export::{fmt_f64, write_rates};
use ldp_tails::rate_functions::RateFormula;
use ldp_tails::weight_schemes::KernelSpec;

use crate::{CliError, Context, FormulaTag, RateArgs, EXIT_OK};

fn need(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("this formula needs --{flag}")))
}

fn kernel_by_name(name: &str) -> Result<KernelSpec, CliError> {
    Ok(match name {
        "epanechnikov" => KernelSpec::epanechnikov(),
        "uniform" => KernelSpec::uniform(),
        "triangular" => KernelSpec::triangular(),
        "quartic" => KernelSpec::quartic(),
        _ => {
            return Err(CliError::Usage(format!(
                "unknown kernel `{name}`; known: epanechnikov, uniform, triangular, quartic"
            )))
        }
    })
}

fn formula_from_flags(tag: FormulaTag, a: &RateArgs) -> Result<RateFormula, CliError> {
    let m = need(a.m, "m");
    Ok(match tag {
        FormulaTag::Stretched => RateFormula::Stretched {
            m: m?,
            s: need(a.s, "s")?,
            s1: need(a.s1, "s1")?,
            r: need(a.r, "r")?,
        },
        FormulaTag::Iid => RateFormula::Iid {
            m: m?,
            r: need(a.r, "r")?,
        },
        FormulaTag::RandomWeight => RateFormula::RandomWeight {
            m: m?,
            r: need(a.r, "r")?,
            e_theta: need(a.e_theta, "e-theta")?,
            m_star: need(a.m_star, "m-star")?,
        },
        FormulaTag::Kernel => RateFormula::Kernel {
            m: m?,
            r: need(a.r, "r")?,
            kernel: kernel_by_name(a.kernel.as_deref().unwrap_or("epanechnikov"))?,
        },
        FormulaTag::MixedSign => RateFormula::MixedSign {
            m: m?,
            alpha: need(a.alpha, "alpha")?,
        },
    })
}

pub(crate) fn run(ctx: &Context, args: &RateArgs) -> Result<i32, CliError> {
    let base = ctx.config.rate.as_ref();
    let formulas = match (args.formula, base) {
        (Some(tag), _) => vec![formula_from_flags(tag, args)?],
        (None, Some(cfg)) => cfg.formulas.clone(),
        (None, None) => {
            return Err(CliError::Usage(
                "rate needs --formula or a config block".into(),
            ))
        }
    };
    let xs = args
        .x
        .clone()
        .or(base.map(|c| c.x_grid.clone()))
        .ok_or_else(|| CliError::Usage("rate needs --x or an x_grid in the config".into()))?;
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(
            "the x grid must be non-empty and finite".into(),
        ));
    }
    // contradictory parameters are rejected before anything is written
    for f in &formulas {
        f.validate()?;
    }
    let mut rows = Vec::new();
    for f in &formulas {
        rows.extend(f.sweep(&xs)?);
    }
    ctx.create_out()?;
    write_rates(ctx.file("rates.csv")?, &rows)?;
    for row in &rows {
        say!(
            ctx,
            "{} x = {}: {}",
            row.formula_tag,
            fmt_f64(row.x),
            fmt_f64(row.rate)
        );
    }
    Ok(EXIT_OK)
}
