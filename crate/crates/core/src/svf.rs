//! Slowly varying functions used as tail envelopes.
//!
//! A function ℓ > 0 is slowly varying when ℓ(at)/ℓ(t) → 1 for every a > 0.
//! Only a closed set of parametric families is accepted, so that positivity
//! and slow variation can be checked instead of assumed:
//!
//! * `Constant(c)`
//! * `PowerOfLog(p, shift)`: ℓ(t) = (log(shift + t))ᵖ with shift ≥ 1
//! * `IteratedLog(p)`: ℓ(t) = (log log(e² + t))ᵖ
//! * `Karamata(a, η̄, ε)`: ℓ(t) = exp(η̄ + ∫ₐᵗ ε(u)/u du) with ε piecewise
//!   constant and vanishing beyond its last breakpoint
//!
//! Products, sums and real powers of these are exposed as derived specs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};

/// Largest |ε(u)| a Karamata table may contain.
pub const EPS_MAX: f64 = 1.0;
/// |ε| allowed on the last (unbounded) segment of a Karamata table.
pub const EPS_TAIL_TOL: f64 = 1e-12;

/// Family of a [`SlowlyVaryingSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Constant {
        value: f64,
    },
    PowerOfLog {
        p: f64,
        shift: f64,
    },
    IteratedLog {
        p: f64,
    },
    /// `eps_table` holds ordered `(breakpoint, value)` pairs: ε(u) = value on
    /// `[breakpoint_i, breakpoint_{i+1})`, zero below the first breakpoint,
    /// and the last value continues to infinity.
    Karamata {
        a: f64,
        eta_limit: f64,
        eps_table: Vec<(f64, f64)>,
    },
    Product {
        left: Box<SlowlyVaryingSpec>,
        right: Box<SlowlyVaryingSpec>,
    },
    Sum {
        left: Box<SlowlyVaryingSpec>,
        right: Box<SlowlyVaryingSpec>,
    },
    Power {
        base: Box<SlowlyVaryingSpec>,
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpecRepr {
    #[serde(flatten)]
    family: Family,
    #[serde(default = "default_floor")]
    domain_floor: f64,
}

fn default_floor() -> f64 {
    1.0
}

/// A validated slowly varying function.
///
/// Evaluation below `domain_floor` returns the value at the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct SlowlyVaryingSpec {
    family: Family,
    domain_floor: f64,
}

impl TryFrom<SpecRepr> for SlowlyVaryingSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        Self::with_floor(repr.family, repr.domain_floor)
    }
}

impl From<SlowlyVaryingSpec> for SpecRepr {
    fn from(spec: SlowlyVaryingSpec) -> Self {
        SpecRepr {
            family: spec.family,
            domain_floor: spec.domain_floor,
        }
    }
}

impl SlowlyVaryingSpec {
    pub fn new(family: Family) -> Result<Self> {
        Self::with_floor(family, 1.0)
    }

    pub fn with_floor(family: Family, domain_floor: f64) -> Result<Self> {
        if !(domain_floor.is_finite() && domain_floor > 0.0) {
            return Err(invalid(format!(
                "domain_floor must be positive, got {domain_floor}"
            )));
        }
        validate_family(&family)?;
        Ok(Self {
            family,
            domain_floor,
        })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Family::Constant { value })
    }

    pub fn one() -> Self {
        Self {
            family: Family::Constant { value: 1.0 },
            domain_floor: 1.0,
        }
    }

    pub fn power_of_log(p: f64, shift: f64) -> Result<Self> {
        Self::new(Family::PowerOfLog { p, shift })
    }

    pub fn iterated_log(p: f64) -> Result<Self> {
        Self::new(Family::IteratedLog { p })
    }

    pub fn karamata(a: f64, eta_limit: f64, eps_table: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Family::Karamata {
            a,
            eta_limit,
            eps_table,
        })
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            family: Family::Product {
                left: Box::new(self.clone()),
                right: Box::new(other.clone()),
            },
            domain_floor: self.domain_floor.max(other.domain_floor),
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self {
            family: Family::Sum {
                left: Box::new(self.clone()),
                right: Box::new(other.clone()),
            },
            domain_floor: self.domain_floor.max(other.domain_floor),
        }
    }

    pub fn power(&self, alpha: f64) -> Result<Self> {
        Self::with_floor(
            Family::Power {
                base: Box::new(self.clone()),
                alpha,
            },
            self.domain_floor,
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    /// True when this spec is the constant function 1.
    pub fn is_unit(&self) -> bool {
        matches!(self.family, Family::Constant { value } if value == 1.0)
    }

    /// ℓ(t) for t > 0.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || t.is_nan() {
            return Err(domain(format!(
                "slowly varying function evaluated at t = {t}"
            )));
        }
        Ok(self.eval_unchecked(t.max(self.domain_floor)))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.family {
            Family::Constant { value } => *value,
            Family::PowerOfLog { p, shift } => (shift + t).ln().powf(*p),
            Family::IteratedLog { p } => (std::f64::consts::E * std::f64::consts::E + t)
                .ln()
                .ln()
                .powf(*p),
            Family::Karamata {
                a,
                eta_limit,
                eps_table,
            } => (eta_limit + eps_log_integral(eps_table, *a, t)).exp(),
            Family::Product { left, right } => {
                left.eval_unchecked(t.max(left.domain_floor))
                    * right.eval_unchecked(t.max(right.domain_floor))
            }
            Family::Sum { left, right } => {
                left.eval_unchecked(t.max(left.domain_floor))
                    + right.eval_unchecked(t.max(right.domain_floor))
            }
            Family::Power { base, alpha } => {
                base.eval_unchecked(t.max(base.domain_floor)).powf(*alpha)
            }
        }
    }

    /// |ℓ(at)/ℓ(t) − 1|.
    pub fn slow_variation_deviation(&self, a: f64, t: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(domain(format!("scale factor must be positive, got {a}")));
        }
        Ok((self.evaluate(a * t)? / self.evaluate(t)? - 1.0).abs())
    }

    /// ℓ(g(t)·t)/ℓ(t). Tends to one when g(t) → `g_limit` ∈ (0, ∞).
    pub fn ratio_with_scaling<G>(&self, g_limit: f64, g: G, t: f64) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        if !(g_limit > 0.0 && g_limit.is_finite()) {
            return Err(domain(format!("g limit must lie in (0, ∞), got {g_limit}")));
        }
        let gt = g(t);
        if !(gt > 0.0) || !gt.is_finite() {
            return Err(domain(format!("g(t) = {gt} at t = {t}")));
        }
        Ok(self.evaluate(gt * t)? / self.evaluate(t)?)
    }

    /// |ℓ(m(at))/ℓ(m(t)) − 1| for the composition ℓ∘m. Composition leaves the
    /// validated families, so it is only offered as a diagnostic.
    pub fn composition_deviation(&self, inner: &Self, a: f64, t: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(domain(format!("scale factor must be positive, got {a}")));
        }
        let hi = self.evaluate(inner.evaluate(a * t)?)?;
        let lo = self.evaluate(inner.evaluate(t)?)?;
        Ok((hi / lo - 1.0).abs())
    }

    /// |log ℓ(t)| / log t, which must vanish as t → ∞.
    pub fn log_ratio(&self, t: f64) -> Result<f64> {
        if !(t > 1.0) {
            return Err(domain(format!("log ratio needs t > 1, got {t}")));
        }
        Ok(self.evaluate(t)?.ln().abs() / t.ln())
    }
}

fn validate_family(family: &Family) -> Result<()> {
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("{name} must be finite, got {v}")))
        }
    };
    match family {
        Family::Constant { value } => {
            if !(value.is_finite() && *value > 0.0) {
                return Err(invalid(format!("constant must be positive, got {value}")));
            }
        }
        Family::PowerOfLog { p, shift } => {
            finite("p", *p)?;
            if !(shift.is_finite() && *shift >= 1.0) {
                return Err(invalid(format!("shift must be ≥ 1, got {shift}")));
            }
        }
        Family::IteratedLog { p } => finite("p", *p)?,
        Family::Karamata {
            a,
            eta_limit,
            eps_table,
        } => {
            if !(a.is_finite() && *a > 0.0) {
                return Err(invalid(format!(
                    "Karamata base point must be positive, got {a}"
                )));
            }
            finite("eta_limit", *eta_limit)?;
            validate_eps_table(eps_table)?;
        }
        Family::Product { .. } | Family::Sum { .. } => {}
        Family::Power { alpha, .. } => finite("alpha", *alpha)?,
    }
    Ok(())
}

fn validate_eps_table(table: &[(f64, f64)]) -> Result<()> {
    let Some(&(_, tail)) = table.last() else {
        return Err(invalid("Karamata ε-table is empty"));
    };
    for (i, &(u, eps)) in table.iter().enumerate() {
        if !(u.is_finite() && u > 0.0) {
            return Err(invalid(format!(
                "ε-table breakpoint {i} must be positive, got {u}"
            )));
        }
        if i > 0 && u <= table[i - 1].0 {
            return Err(invalid(format!(
                "ε-table breakpoints must increase (entry {i})"
            )));
        }
        if !eps.is_finite() || eps.abs() > EPS_MAX {
            return Err(invalid(format!(
                "|ε| must be ≤ {EPS_MAX}, entry {i} has {eps}"
            )));
        }
    }
    if tail.abs() > EPS_TAIL_TOL {
        return Err(invalid(format!(
            "ε must vanish beyond the horizon {}: tail value {tail}",
            table[table.len() - 1].0
        )));
    }
    Ok(())
}

/// ∫ₐᵗ ε(u)/u du for the piecewise-constant ε, summed exactly per segment.
fn eps_log_integral(table: &[(f64, f64)], a: f64, t: f64) -> f64 {
    let (lo, hi, sign) = if t >= a { (a, t, 1.0) } else { (t, a, -1.0) };
    let mut acc = 0.0;
    for (i, &(start, eps)) in table.iter().enumerate() {
        let end = table.get(i + 1).map_or(f64::INFINITY, |s| s.0);
        let l = start.max(lo);
        let r = end.min(hi);
        if r > l && eps != 0.0 {
            acc += eps * (r / l).ln();
        }
    }
    sign * acc
}

/// Shipped instances with parameters in the documented range: |p| ≤ 1/4 for
/// `PowerOfLog`, |p| ≤ 1/2 for `IteratedLog`, constants in [1/2, 2] and
/// Karamata tables with |ε| ≤ 0.05 and |η̄| ≤ 0.1.
pub fn catalogue() -> Vec<(&'static str, SlowlyVaryingSpec)> {
    let e = std::f64::consts::E;
    vec![
        ("constant_1", SlowlyVaryingSpec::one()),
        ("constant_2", SlowlyVaryingSpec::constant(2.0).unwrap()),
        ("constant_half", SlowlyVaryingSpec::constant(0.5).unwrap()),
        (
            "log_pow_quarter",
            SlowlyVaryingSpec::power_of_log(0.25, 1.0).unwrap(),
        ),
        (
            "log_pow_neg_quarter",
            SlowlyVaryingSpec::power_of_log(-0.25, e).unwrap(),
        ),
        ("loglog_half", SlowlyVaryingSpec::iterated_log(0.5).unwrap()),
        (
            "loglog_neg_half",
            SlowlyVaryingSpec::iterated_log(-0.5).unwrap(),
        ),
        (
            "karamata_steps",
            SlowlyVaryingSpec::karamata(
                1.0,
                0.1,
                vec![(1.0, 0.05), (10.0, -0.02), (1e4, 0.01), (1e6, 0.0)],
            )
            .unwrap(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_and_log_examples() {
        let c = SlowlyVaryingSpec::one();
        assert_eq!(c.evaluate(1e6).unwrap(), 1.0);
        let l = SlowlyVaryingSpec::power_of_log(1.0, 1.0).unwrap();
        assert_relative_eq!(
            l.evaluate(std::f64::consts::E - 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn karamata_hand_integral() {
        let e = std::f64::consts::E;
        let k = SlowlyVaryingSpec::karamata(1.0, 0.0, vec![(1.0, 0.1), (e, 0.0)]).unwrap();
        assert_relative_eq!(k.evaluate(e).unwrap(), 0.1f64.exp(), max_relative = 1e-15);
        // constant beyond the horizon
        assert_relative_eq!(k.evaluate(1e9).unwrap(), 0.1f64.exp(), max_relative = 1e-15);
        // below the base point the integral runs backwards, but the floor clamps at 1
        assert_relative_eq!(k.evaluate(0.5).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn karamata_below_base_point() {
        let k = SlowlyVaryingSpec::with_floor(
            Family::Karamata {
                a: 4.0,
                eta_limit: 0.0,
                eps_table: vec![(1.0, 0.5), (8.0, 0.0)],
            },
            0.1,
        )
        .unwrap();
        // ∫₄² 0.5/u du = −0.5 ln 2
        assert_relative_eq!(
            k.evaluate(2.0).unwrap(),
            (-0.5 * 2f64.ln()).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn deviation_examples() {
        let c = SlowlyVaryingSpec::constant(5.0).unwrap();
        assert_eq!(c.slow_variation_deviation(2.0, 100.0).unwrap(), 0.0);
        let l1 = SlowlyVaryingSpec::power_of_log(1.0, 1.0).unwrap();
        let d1 = l1.slow_variation_deviation(2.0, 1e6).unwrap();
        assert!((d1 - 0.050171626121275604).abs() < 1e-12, "{d1}");
        let l2 = SlowlyVaryingSpec::power_of_log(2.0, 1.0).unwrap();
        let d2 = l2.slow_variation_deviation(2.0, 1e6).unwrap();
        assert!((d2 - 0.10286044431020427).abs() < 1e-12, "{d2}");
    }

    #[test]
    fn scaling_ratio_examples() {
        let c = SlowlyVaryingSpec::one();
        assert_eq!(c.ratio_with_scaling(3.0, |_| 3.0, 10.0).unwrap(), 1.0);
        let l = SlowlyVaryingSpec::power_of_log(1.0, 1.0).unwrap();
        assert_eq!(l.ratio_with_scaling(1.0, |_| 1.0, 123.0).unwrap(), 1.0);
        let r = l.ratio_with_scaling(2.0, |_| 2.0, 1e6).unwrap();
        assert!((r - 1.0501716261212756).abs() < 1e-12);
        assert!(matches!(
            l.ratio_with_scaling(2.0, |_| -1.0, 5.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SlowlyVaryingSpec::one().evaluate(0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            SlowlyVaryingSpec::one().evaluate(-1.0),
            Err(Error::Domain(_))
        ));
        assert!(SlowlyVaryingSpec::constant(0.0).is_err());
        assert!(SlowlyVaryingSpec::power_of_log(1.0, 0.5).is_err());
        assert!(SlowlyVaryingSpec::karamata(1.0, 0.0, vec![(1.0, 0.1), (2.0, 0.3)]).is_err());
        assert!(SlowlyVaryingSpec::karamata(1.0, 0.0, vec![(2.0, 0.1), (1.0, 0.0)]).is_err());
        assert!(SlowlyVaryingSpec::karamata(1.0, 0.0, vec![(1.0, 3.0), (2.0, 0.0)]).is_err());
    }

    #[test]
    fn iterated_log_positive_near_zero() {
        let l = SlowlyVaryingSpec::iterated_log(1.0).unwrap();
        assert_relative_eq!(
            l.evaluate(1e-9).unwrap(),
            (std::f64::consts::E.powi(2) + 1.0).ln().ln()
        );
    }

    #[test]
    fn json_round_trip_is_lossless() {
        for (_, spec) in catalogue() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: SlowlyVaryingSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
        }
        let derived = catalogue()[3]
            .1
            .product(&catalogue()[7].1)
            .power(-0.7)
            .unwrap();
        let text = serde_json::to_string(&derived).unwrap();
        assert_eq!(
            serde_json::from_str::<SlowlyVaryingSpec>(&text).unwrap(),
            derived
        );
    }

    #[test]
    fn deserialization_validates() {
        let bad =
            r#"{"family":"karamata","a":1.0,"eta_limit":0.0,"eps_table":[[1.0,0.1],[2.0,0.5]]}"#;
        assert!(serde_json::from_str::<SlowlyVaryingSpec>(bad).is_err());
        let ok = r#"{"family":"power_of_log","p":1.0,"shift":1.0}"#;
        let spec: SlowlyVaryingSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(spec.domain_floor(), 1.0);
    }
}
