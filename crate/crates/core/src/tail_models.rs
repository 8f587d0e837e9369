//! Stretched-exponential distributions.
//!
//! A [`TailModel`] is a concrete law whose upper tail sits inside the sandwich
//!
//! ```text
//! c₁(t)·exp(−b(t)·tʳ) ≤ P(X ≥ t) ≤ c₂(t)·exp(−b(t)·tʳ),   t ≥ t*
//! ```
//!
//! with `b`, `c₁`, `c₂` slowly varying. The sandwich is verified at
//! construction on a logarithmic grid that runs out to survival ≈ 1e-200, in
//! log space so that nothing underflows.
//!
//! Three families are available:
//!
//! * `ExactWeibull`: `P(X ≥ t) = exp(−tʳ)` for t ≥ 0.
//! * `ShiftedExactWeibull`: the same law translated by `offset`.
//! * `BoundedBelowEnvelope`: `P(X ≥ t) = c(t)·exp(−b(t)·tʳ)` for t ≥ t*,
//!   log-linear between `x_min` (survival 1) and t*. Sampling inverts a
//!   monotone table of the survival by bisection.
//!
//! `ExactWeibull` may carry a stretched lower tail `P(X ≤ −t) = ½·exp(−t^α)`,
//! realized as an equal-weight splice of an upper and a lower Weibull
//! half-law; the upper envelope constants then become ½.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma;

use crate::error::{domain, invalid, Error, Result};
use crate::quad;
use crate::svf::SlowlyVaryingSpec;

/// Probability mass placed on the negative half-line by [`LowerTail::StretchedLower`].
pub const LOWER_MASS: f64 = 0.5;

const TABLE_POINTS: usize = 2048;
const GRID_POINTS: usize = 400;
/// Validation and tables run until log P(X ≥ t) drops below this.
const LOG_SURVIVAL_FLOOR: f64 = -460.0;
const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFamily {
    ExactWeibull,
    ShiftedExactWeibull {
        offset: f64,
    },
    /// `c` is the prefactor actually realized; it must lie between `c₁` and `c₂`.
    BoundedBelowEnvelope {
        x_min: f64,
        c: SlowlyVaryingSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerTail {
    BoundedBelow {
        x_min: f64,
    },
    /// `P(X ≤ −t) = ½·exp(−t^α)` for t ≥ 0.
    StretchedLower {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelRepr {
    r: f64,
    b: SlowlyVaryingSpec,
    c1: SlowlyVaryingSpec,
    c2: SlowlyVaryingSpec,
    t_star: f64,
    family: ModelFamily,
    lower_tail: LowerTail,
}

/// Monotone table of log-survival for the envelope family.
#[derive(Debug)]
struct SurvivalTable {
    ts: Vec<f64>,
    log_s: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct TailModel {
    r: f64,
    b: SlowlyVaryingSpec,
    c1: SlowlyVaryingSpec,
    c2: SlowlyVaryingSpec,
    t_star: f64,
    family: ModelFamily,
    lower_tail: LowerTail,
    /// Integer value of 1/r, when it is one; enables `powi` in the sampler.
    inv_r_int: Option<i32>,
    table: Option<Arc<SurvivalTable>>,
}

impl PartialEq for TailModel {
    fn eq(&self, other: &Self) -> bool {
        self.r == other.r
            && self.b == other.b
            && self.c1 == other.c1
            && self.c2 == other.c2
            && self.t_star == other.t_star
            && self.family == other.family
            && self.lower_tail == other.lower_tail
    }
}

impl TryFrom<ModelRepr> for TailModel {
    type Error = Error;

    fn try_from(m: ModelRepr) -> Result<Self> {
        TailModel::new(m.r, m.b, m.c1, m.c2, m.t_star, m.family, m.lower_tail)
    }
}

impl From<TailModel> for ModelRepr {
    fn from(m: TailModel) -> Self {
        ModelRepr {
            r: m.r,
            b: m.b,
            c1: m.c1,
            c2: m.c2,
            t_star: m.t_star,
            family: m.family,
            lower_tail: m.lower_tail,
        }
    }
}

impl TailModel {
    /// Validated construction. Checks the parameter ranges, that the lower
    /// tail matches the family, and the sandwich on the validation grid.
    pub fn new(
        r: f64,
        b: SlowlyVaryingSpec,
        c1: SlowlyVaryingSpec,
        c2: SlowlyVaryingSpec,
        t_star: f64,
        family: ModelFamily,
        lower_tail: LowerTail,
    ) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!(
                "tail exponent r must lie in (0, 1), got {r}"
            )));
        }
        if !(t_star.is_finite() && t_star > 0.0) {
            return Err(invalid(format!("t_star must be positive, got {t_star}")));
        }
        match (&family, &lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::BoundedBelow { x_min }) if *x_min == 0.0 => {}
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(invalid(format!(
                        "lower-tail exponent must lie in (0, 1), got {alpha}"
                    )));
                }
            }
            (ModelFamily::ShiftedExactWeibull { offset }, LowerTail::BoundedBelow { x_min })
                if offset == x_min =>
            {
                if !offset.is_finite() {
                    return Err(invalid("offset must be finite"));
                }
            }
            (
                ModelFamily::BoundedBelowEnvelope { x_min, .. },
                LowerTail::BoundedBelow { x_min: lower },
            ) if x_min == lower => {
                if !(x_min.is_finite() && *x_min < t_star) {
                    return Err(invalid(format!(
                        "x_min = {x_min} must be finite and below t_star = {t_star}"
                    )));
                }
            }
            (f, l) => {
                return Err(invalid(format!(
                    "lower tail {l:?} is incompatible with family {f:?}"
                )))
            }
        }
        let inv = 1.0 / r;
        let inv_r_int = (inv.fract() == 0.0 && inv <= 16.0).then_some(inv as i32);
        let mut model = Self {
            r,
            b,
            c1,
            c2,
            t_star,
            family,
            lower_tail,
            inv_r_int,
            table: None,
        };
        if let ModelFamily::BoundedBelowEnvelope { .. } = model.family {
            if model.log_survival_tail(t_star) > 0.0 {
                return Err(invalid("envelope survival exceeds one at t_star"));
            }
            model.table = Some(Arc::new(model.build_table()?));
        }
        model.validate_sandwich()?;
        Ok(model)
    }

    /// `P(X ≥ t) = exp(−tʳ)`, t ≥ 0, with b ≡ c₁ ≡ c₂ ≡ 1 and t* = 1.
    pub fn exact_weibull(r: f64) -> Result<Self> {
        let one = SlowlyVaryingSpec::one();
        Self::new(
            r,
            one.clone(),
            one.clone(),
            one,
            1.0,
            ModelFamily::ExactWeibull,
            LowerTail::BoundedBelow { x_min: 0.0 },
        )
    }

    /// Exact Weibull upper half-law with a stretched lower tail of exponent `alpha`.
    pub fn exact_weibull_with_lower(r: f64, alpha: f64) -> Result<Self> {
        let half = SlowlyVaryingSpec::constant(1.0 - LOWER_MASS)?;
        Self::new(
            r,
            SlowlyVaryingSpec::one(),
            half.clone(),
            half,
            1.0,
            ModelFamily::ExactWeibull,
            LowerTail::StretchedLower { alpha },
        )
    }

    /// Exact Weibull translated by `offset`. The envelope constants are the
    /// extremes of exp(tʳ − (t − offset)ʳ) over t ≥ t* = max(1, offset + 1).
    pub fn shifted_weibull(r: f64, offset: f64) -> Result<Self> {
        let t_star = 1f64.max(offset + 1.0);
        let edge = (t_star.powf(r) - (t_star - offset).powf(r)).exp();
        let (lo, hi) = if offset <= 0.0 {
            (edge, 1.0)
        } else {
            (1.0, edge)
        };
        Self::new(
            r,
            SlowlyVaryingSpec::one(),
            SlowlyVaryingSpec::constant(lo)?,
            SlowlyVaryingSpec::constant(hi)?,
            t_star,
            ModelFamily::ShiftedExactWeibull { offset },
            LowerTail::BoundedBelow { x_min: offset },
        )
    }

    /// Tabulated law with survival `c(t)·exp(−b(t)·tʳ)` beyond `t_star`.
    #[allow(clippy::too_many_arguments)]
    pub fn envelope(
        r: f64,
        b: SlowlyVaryingSpec,
        c1: SlowlyVaryingSpec,
        c2: SlowlyVaryingSpec,
        c: SlowlyVaryingSpec,
        t_star: f64,
        x_min: f64,
    ) -> Result<Self> {
        Self::new(
            r,
            b,
            c1,
            c2,
            t_star,
            ModelFamily::BoundedBelowEnvelope { x_min, c },
            LowerTail::BoundedBelow { x_min },
        )
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn b(&self) -> &SlowlyVaryingSpec {
        &self.b
    }

    pub fn c1(&self) -> &SlowlyVaryingSpec {
        &self.c1
    }

    pub fn c2(&self) -> &SlowlyVaryingSpec {
        &self.c2
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    pub fn lower_tail(&self) -> LowerTail {
        self.lower_tail
    }

    /// Essential infimum of the law (−∞ with a stretched lower tail).
    pub fn lower_bound(&self) -> f64 {
        match self.lower_tail {
            LowerTail::BoundedBelow { x_min } => x_min,
            LowerTail::StretchedLower { .. } => f64::NEG_INFINITY,
        }
    }

    /// log P(X ≥ t).
    pub fn log_survival(&self, t: f64) -> f64 {
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) => {
                if t > 0.0 {
                    (1.0 - LOWER_MASS).ln() - t.powf(self.r)
                } else {
                    (-LOWER_MASS * (-(-t).powf(alpha)).exp()).ln_1p()
                }
            }
            (ModelFamily::ExactWeibull, _) => {
                if t > 0.0 {
                    -t.powf(self.r)
                } else {
                    0.0
                }
            }
            (ModelFamily::ShiftedExactWeibull { offset }, _) => {
                if t > *offset {
                    -(t - offset).powf(self.r)
                } else {
                    0.0
                }
            }
            (ModelFamily::BoundedBelowEnvelope { x_min, .. }, _) => {
                if t <= *x_min {
                    0.0
                } else if t < self.t_star {
                    self.log_survival_tail(self.t_star) * (t - x_min) / (self.t_star - x_min)
                } else {
                    self.log_survival_tail(t)
                }
            }
        }
    }

    /// log(c(t)) − b(t)·tʳ for the envelope family, t ≥ t*.
    fn log_survival_tail(&self, t: f64) -> f64 {
        let ModelFamily::BoundedBelowEnvelope { c, .. } = &self.family else {
            unreachable!("tail survival only exists for the envelope family");
        };
        let c = c.evaluate(t).expect("t ≥ t* > 0");
        let b = self.b.evaluate(t).expect("t ≥ t* > 0");
        c.ln() - b * t.powf(self.r)
    }

    /// P(X ≥ t). The law is continuous, so this also equals P(X > t).
    pub fn survival(&self, t: f64) -> f64 {
        self.log_survival(t).exp()
    }

    /// P(X < t), computed without cancellation in the stretched lower tail.
    pub fn cdf(&self, t: f64) -> f64 {
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) if t <= 0.0 => {
                LOWER_MASS * (-(-t).powf(alpha)).exp()
            }
            _ => -self.log_survival(t).exp_m1(),
        }
    }

    /// Lower and upper sandwich values at `t`, clipped to [0, 1]. Below t* the
    /// exact survival is returned as both entries.
    pub fn survival_bounds(&self, t: f64) -> (f64, f64) {
        if t < self.t_star {
            let s = self.survival(t);
            return (s, s);
        }
        let (lo, hi) = self.log_envelope(t);
        (lo.exp().clamp(0.0, 1.0), hi.exp().clamp(0.0, 1.0))
    }

    fn log_envelope(&self, t: f64) -> (f64, f64) {
        let bt = self.b.evaluate(t).expect("t ≥ t* > 0") * t.powf(self.r);
        (
            self.c1.evaluate(t).expect("t ≥ t* > 0").ln() - bt,
            self.c2.evaluate(t).expect("t ≥ t* > 0").ln() - bt,
        )
    }

    /// Density −dP(X ≥ t)/dt.
    pub fn density(&self, t: f64) -> f64 {
        let r = self.r;
        let weibull = |s: f64| {
            if s > 0.0 {
                r * s.powf(r - 1.0) * (-s.powf(r)).exp()
            } else {
                0.0
            }
        };
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) => {
                if t > 0.0 {
                    (1.0 - LOWER_MASS) * weibull(t)
                } else if t < 0.0 {
                    let s = -t;
                    LOWER_MASS * alpha * s.powf(alpha - 1.0) * (-s.powf(alpha)).exp()
                } else {
                    f64::INFINITY
                }
            }
            (ModelFamily::ExactWeibull, _) => weibull(t),
            (ModelFamily::ShiftedExactWeibull { offset }, _) => weibull(t - offset),
            (ModelFamily::BoundedBelowEnvelope { x_min, .. }, _) => {
                if t <= *x_min {
                    0.0
                } else if t < self.t_star {
                    let slope = self.log_survival_tail(self.t_star) / (self.t_star - x_min);
                    -slope * self.survival(t)
                } else {
                    // central difference of log-survival; one-sided at the kink
                    let h = 1e-5 * t.max(1.0);
                    let (lo, hi) = if t - h < self.t_star {
                        (t, t + h)
                    } else {
                        (t - h, t + h)
                    };
                    let dlog =
                        (self.log_survival_tail(hi) - self.log_survival_tail(lo)) / (hi - lo);
                    -dlog * self.survival(t)
                }
            }
        }
    }

    /// Inverse-survival transform: the `t` with P(X ≥ t) = u.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(format!(
                "uniform variate must lie in (0, 1), got {u}"
            )));
        }
        Ok(self.sample_unchecked(u))
    }

    #[inline]
    pub(crate) fn sample_unchecked(&self, u: f64) -> f64 {
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) => {
                let upper = 1.0 - LOWER_MASS;
                if u <= upper {
                    self.weibull_quantile(-(u / upper).ln())
                } else {
                    -(-((1.0 - u) / LOWER_MASS).ln()).powf(1.0 / alpha)
                }
            }
            (ModelFamily::ExactWeibull, _) => self.weibull_quantile(-u.ln()),
            (ModelFamily::ShiftedExactWeibull { offset }, _) => {
                offset + self.weibull_quantile(-u.ln())
            }
            (ModelFamily::BoundedBelowEnvelope { x_min, .. }, _) => {
                self.envelope_quantile(*x_min, u.ln())
            }
        }
    }

    #[inline]
    fn weibull_quantile(&self, e: f64) -> f64 {
        match self.inv_r_int {
            Some(k) => e.powi(k),
            None => e.powf(1.0 / self.r),
        }
    }

    fn envelope_quantile(&self, x_min: f64, log_u: f64) -> f64 {
        let table = self
            .table
            .as_ref()
            .expect("envelope family carries a table");
        let log_at_star = table.log_s[0];
        if log_u >= log_at_star {
            // log-linear section between x_min and t*
            return x_min + (self.t_star - x_min) * log_u / log_at_star;
        }
        // log_s is nonincreasing: find the bracketing cell
        let k = table.log_s.partition_point(|&v| v >= log_u);
        let (mut lo, mut hi) = if k >= table.ts.len() {
            let mut lo = table.ts[table.ts.len() - 1];
            let mut hi = 2.0 * lo;
            while self.log_survival_tail(hi) >= log_u {
                lo = hi;
                hi *= 2.0;
            }
            (lo, hi)
        } else {
            (table.ts[k - 1], table.ts[k])
        };
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if self.log_survival_tail(mid) >= log_u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Point where log-survival first drops below the validation floor.
    fn survival_horizon(&self) -> Result<f64> {
        let mut t = self.t_star.max(1.0);
        for _ in 0..2000 {
            if self.log_survival(t) < LOG_SURVIVAL_FLOOR {
                return Ok(t);
            }
            t *= 2.0;
            if !t.is_finite() {
                break;
            }
        }
        Err(invalid(
            "survival does not decay to 1e-200 on any finite horizon",
        ))
    }

    fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..points)
            .map(|i| {
                if i + 1 == points {
                    hi
                } else {
                    (a + (b - a) * i as f64 / (points - 1) as f64).exp()
                }
            })
            .collect()
    }

    fn build_table(&self) -> Result<SurvivalTable> {
        let horizon = self.survival_horizon()?;
        let ts = Self::log_grid(self.t_star, horizon, TABLE_POINTS);
        let log_s: Vec<f64> = ts.iter().map(|&t| self.log_survival_tail(t)).collect();
        if let Some(i) =
            (1..log_s.len()).find(|&i| log_s[i] > log_s[i - 1] + 1e-12 * log_s[i - 1].abs())
        {
            return Err(invalid(format!(
                "tabulated survival increases between t = {} and t = {}",
                ts[i - 1],
                ts[i]
            )));
        }
        if !log_s
            .iter()
            .all(|v| v.is_finite() || *v == f64::NEG_INFINITY)
        {
            return Err(invalid("tabulated survival is not finite"));
        }
        Ok(SurvivalTable { ts, log_s })
    }

    /// Checks c₁ ≤ c₂, the sandwich, survival ≤ 1 and monotonicity on the grid.
    fn validate_sandwich(&self) -> Result<()> {
        let horizon = self.survival_horizon()?;
        let grid = Self::log_grid(self.t_star, horizon, GRID_POINTS);
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let (c1, c2) = (self.c1.evaluate(t)?, self.c2.evaluate(t)?);
            if c1 > c2 * (1.0 + SANDWICH_SLACK) {
                return Err(invalid(format!(
                    "c1(t) = {c1} exceeds c2(t) = {c2} at t = {t}"
                )));
            }
            let ls = self.log_survival(t);
            let (lo, hi) = self.log_envelope(t);
            let slack = SANDWICH_SLACK * (1.0 + ls.abs());
            if ls < lo - slack || ls > hi + slack {
                return Err(invalid(format!(
                    "survival leaves the envelope at t = {t}: log S = {ls}, bounds [{lo}, {hi}]"
                )));
            }
            if ls > 0.0 || ls > prev + 1e-12 * prev.abs() {
                return Err(invalid(format!(
                    "survival is not a nonincreasing probability at t = {t}"
                )));
            }
            prev = ls;
        }
        Ok(())
    }

    /// Breakpoints where the density is singular or kinked.
    fn kinks(&self) -> Vec<f64> {
        match &self.family {
            ModelFamily::ExactWeibull => vec![0.0],
            ModelFamily::ShiftedExactWeibull { offset } => vec![*offset],
            ModelFamily::BoundedBelowEnvelope { x_min, .. } => vec![*x_min, self.t_star],
        }
    }

    /// Substitution exponents (left side, right side) at `z`: the density
    /// behaves like |t − z|^{1/q − 1} next to a Weibull origin, q = 1 elsewhere.
    fn grading(&self, z: f64) -> (f64, f64) {
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) if z == 0.0 => {
                (1.0 / alpha, 1.0 / self.r)
            }
            (ModelFamily::ExactWeibull, _) if z == 0.0 => (1.0, 1.0 / self.r),
            (ModelFamily::ShiftedExactWeibull { offset }, _) if z == *offset => (1.0, 1.0 / self.r),
            _ => (1.0, 1.0),
        }
    }

    /// E[X].
    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    /// E[Xᵏ], k ≥ 1.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Err(domain("moment order must be at least 1"));
        }
        let kf = k as f64;
        let r = self.r;
        match (&self.family, self.lower_tail) {
            (ModelFamily::ExactWeibull, LowerTail::StretchedLower { alpha }) => {
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                Ok((1.0 - LOWER_MASS) * gamma_fn(1.0 + kf / r)
                    + sign * LOWER_MASS * gamma_fn(1.0 + kf / alpha))
            }
            (ModelFamily::ExactWeibull, _) => Ok(gamma_fn(1.0 + kf / r)),
            (ModelFamily::ShiftedExactWeibull { offset }, _) => {
                // binomial expansion of E[(W + offset)^k]
                let mut acc = 0.0;
                let mut binom = 1.0;
                for i in 0..=k {
                    if i > 0 {
                        binom *= (k - i + 1) as f64 / i as f64;
                    }
                    acc += binom * offset.powi((k - i) as i32) * gamma_fn(1.0 + i as f64 / r);
                }
                Ok(acc)
            }
            (ModelFamily::BoundedBelowEnvelope { x_min, .. }, _) => {
                // E[g(X)] = g(x_min) + ∫_{x_min}^∞ g'(t) P(X ≥ t) dt
                let g_prime = |t: f64| kf * t.powi(k as i32 - 1) * self.survival(t);
                let mut points = vec![*x_min];
                if *x_min < 0.0 && 0.0 < self.t_star {
                    points.push(0.0);
                }
                points.push(self.t_star);
                let abs_tol = if k == 1 { 1e-10 } else { 1e-12 };
                let head = quad::integrate_pieces(g_prime, &points, abs_tol)?;
                let tail = quad::integrate_to_infinity(g_prime, self.t_star, abs_tol, 1e-9)?;
                Ok(x_min.powi(k as i32) + head + tail)
            }
        }
    }

    /// |E[e^{αX}·1{a ≤ X ≤ b}] − (α∫ₐᵇ e^{αz}P(X ≥ z)dz + e^{αa}P(X ≥ a) − e^{αb}P(X > b))|,
    /// both sides by quadrature.
    pub fn integration_by_parts_residual(&self, alpha: f64, a: f64, b_hi: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(a < b_hi) {
            return Err(domain(format!("need a < b, got a = {a}, b = {b_hi}")));
        }
        let mut points = vec![a];
        points.extend(self.kinks().into_iter().filter(|&k| k > a && k < b_hi));
        points.push(b_hi);
        let tol = 1e-11 / points.len() as f64;
        let (mut lhs, mut body) = (0.0, 0.0);
        for w in points.windows(2) {
            let (ql, qr) = (self.grading(w[0]).1, self.grading(w[1]).0);
            lhs += quad::integrate_graded(
                |z| (alpha * z).exp() * self.density(z),
                w[0],
                w[1],
                ql,
                qr,
                tol,
            )?;
            body += quad::integrate_graded(
                |z| (alpha * z).exp() * self.survival(z),
                w[0],
                w[1],
                ql,
                qr,
                tol,
            )?;
        }
        let rhs = alpha * body + (alpha * a).exp() * self.survival(a)
            - (alpha * b_hi).exp() * self.survival(b_hi);
        Ok((lhs - rhs).abs())
    }
}

/// Γ(z), exact for integer arguments up to 170.
fn gamma_fn(z: f64) -> f64 {
    if z.fract() == 0.0 && (1.0..=171.0).contains(&z) {
        (2..z as u32).fold(1.0, |acc, k| acc * k as f64)
    } else {
        gamma::gamma(z)
    }
}

/// `(α, a, b)` windows on which the integration-by-parts identity is checked.
pub const IBP_GRID: [(f64, f64, f64); 4] = [
    (0.05, 0.0, 20.0),
    (0.1, 1.0, 10.0),
    (0.1, -1.0, 5.0),
    (0.2, 2.0, 50.0),
];

/// Shipped models used by the self-test suites.
pub fn catalogue() -> Vec<(&'static str, TailModel)> {
    let envelope = TailModel::envelope(
        0.3,
        SlowlyVaryingSpec::one(),
        SlowlyVaryingSpec::constant(0.5).unwrap(),
        SlowlyVaryingSpec::constant(2.0).unwrap(),
        SlowlyVaryingSpec::one(),
        10.0,
        0.0,
    )
    .unwrap();
    let log_envelope = TailModel::envelope(
        0.5,
        SlowlyVaryingSpec::power_of_log(0.25, 1.0).unwrap(),
        SlowlyVaryingSpec::constant(0.5).unwrap(),
        SlowlyVaryingSpec::constant(2.0).unwrap(),
        SlowlyVaryingSpec::power_of_log(0.1, std::f64::consts::E).unwrap(),
        5.0,
        -1.0,
    )
    .unwrap();
    vec![
        ("weibull_r0.5", TailModel::exact_weibull(0.5).unwrap()),
        ("weibull_r0.25", TailModel::exact_weibull(0.25).unwrap()),
        (
            "shifted_weibull_r0.5_m1",
            TailModel::shifted_weibull(0.5, -1.0).unwrap(),
        ),
        (
            "weibull_r0.5_lower0.3",
            TailModel::exact_weibull_with_lower(0.5, 0.3).unwrap(),
        ),
        ("envelope_r0.3", envelope),
        ("envelope_log_b", log_envelope),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weibull_bounds_examples() {
        let m = TailModel::exact_weibull(0.5).unwrap();
        let (lo, hi) = m.survival_bounds(4.0);
        assert_relative_eq!(lo, (-2f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(hi, (-2f64).exp(), max_relative = 1e-15);
        assert_eq!(m.survival_bounds(0.0), (1.0, 1.0));
    }

    #[test]
    fn envelope_bounds_example() {
        let (_, m) = catalogue()
            .into_iter()
            .find(|(n, _)| *n == "envelope_r0.3")
            .unwrap();
        let (lo, hi) = m.survival_bounds(10.0);
        let core = (-(10f64.powf(0.3))).exp();
        assert_relative_eq!(lo, 0.5 * core, max_relative = 1e-14);
        assert_relative_eq!(hi, 2.0 * core, max_relative = 1e-14);
        assert!((10f64.powf(0.3) - 1.99526).abs() < 1e-5);
    }

    #[test]
    fn sample_examples() {
        let m = TailModel::exact_weibull(0.5).unwrap();
        assert_relative_eq!(m.sample((-2f64).exp()).unwrap(), 4.0, max_relative = 1e-14);
        assert!(m.sample(1.0 - 1e-15).unwrap() < 1e-25);
        let s = TailModel::shifted_weibull(0.5, -1.0).unwrap();
        assert_relative_eq!(s.sample((-2f64).exp()).unwrap(), 3.0, max_relative = 1e-14);
        assert!(matches!(m.sample(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.sample(1.0), Err(Error::Domain(_))));
        assert!(matches!(m.sample(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn means_and_moments() {
        let m = TailModel::exact_weibull(0.5).unwrap();
        assert_relative_eq!(m.mean().unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.moment(2).unwrap(), 24.0, max_relative = 1e-12);
        let q = TailModel::exact_weibull(0.25).unwrap();
        assert_relative_eq!(q.mean().unwrap(), 24.0, max_relative = 1e-12);
        let s = TailModel::shifted_weibull(0.5, -2.0).unwrap();
        assert!(s.mean().unwrap().abs() < 1e-12);
        let s0 = TailModel::shifted_weibull(0.5, 0.0).unwrap();
        assert_relative_eq!(
            s0.moment(1).unwrap(),
            m.mean().unwrap(),
            max_relative = 1e-14
        );
        assert!(matches!(m.moment(0), Err(Error::Domain(_))));
    }

    #[test]
    fn envelope_sampler_inverts_survival() {
        for (name, m) in catalogue() {
            for &u in &[0.9, 0.5, 0.1, 1e-3, 1e-9, 1e-15] {
                let t = m.sample(u).unwrap();
                let s = m.survival(t);
                assert_relative_eq!(s, u, max_relative = 1e-9);
                assert!(s.is_finite(), "{name}");
            }
        }
    }

    #[test]
    fn lower_tail_law() {
        let m = TailModel::exact_weibull_with_lower(0.5, 0.3).unwrap();
        // P(X ≤ −t) = ½ exp(−t^α)
        let t = 7.0;
        let p_low = 1.0 - m.survival(-t);
        assert_relative_eq!(p_low, 0.5 * (-(7f64.powf(0.3))).exp(), max_relative = 1e-12);
        assert_relative_eq!(m.survival(0.0), 0.5, max_relative = 1e-15);
        let x = m.sample(0.75).unwrap();
        assert!(x < 0.0);
        assert_relative_eq!(m.survival(x), 0.75, max_relative = 1e-12);
        assert_eq!(m.lower_bound(), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_inconsistent_models() {
        let one = SlowlyVaryingSpec::one();
        assert!(TailModel::exact_weibull(1.0).is_err());
        assert!(TailModel::exact_weibull(0.0).is_err());
        // b does not match the realized law
        let b2 = SlowlyVaryingSpec::constant(2.0).unwrap();
        assert!(TailModel::new(
            0.5,
            b2,
            one.clone(),
            one.clone(),
            1.0,
            ModelFamily::ExactWeibull,
            LowerTail::BoundedBelow { x_min: 0.0 }
        )
        .is_err());
        // c1 > c2
        let big = SlowlyVaryingSpec::constant(3.0).unwrap();
        assert!(
            TailModel::envelope(0.3, one.clone(), big, one.clone(), one.clone(), 10.0, 0.0)
                .is_err()
        );
        // lower tail mismatch
        assert!(TailModel::new(
            0.5,
            one.clone(),
            one.clone(),
            one,
            1.0,
            ModelFamily::ExactWeibull,
            LowerTail::BoundedBelow { x_min: 1.0 }
        )
        .is_err());
    }

    #[test]
    fn degenerate_ibp_interval() {
        let m = TailModel::exact_weibull(0.5).unwrap();
        let r = m
            .integration_by_parts_residual(0.1, 10.0 - 1e-12, 10.0)
            .unwrap();
        assert!(r < 1e-15, "{r}");
        assert!(m.integration_by_parts_residual(0.1, 2.0, 1.0).is_err());
        assert!(m.integration_by_parts_residual(0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        for (_, m) in catalogue() {
            let text = serde_json::to_string(&m).unwrap();
            let back: TailModel = serde_json::from_str(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }
}
