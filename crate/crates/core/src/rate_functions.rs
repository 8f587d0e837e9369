//! Rate functions.
//!
//! Closed forms for the stretched-exponential regime (speed `b(n)·nʳ`), and
//! the Legendre–Fenchel transforms used for the light-tailed comparison
//! (speed `n`). Unreachable deviations in the light-tailed case return
//! `f64::INFINITY` rather than an error, so sweeps over `x` stay complete.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::stream::StreamKey;
use crate::weight_schemes::{KernelSpec, ThetaDist};

/// Default number of series terms for [`chi_star`].
pub const DEFAULT_NU_MAX: usize = 40;
/// Largest |last term| / |partial sum| accepted by [`chi_star`].
pub const SERIES_DIVERGENCE_LIMIT: f64 = 1e-6;

const ROOT_ITERATIONS: usize = 300;
const BRACKET_LIMIT: f64 = 1e12;

/// Parameters of the stretched-exponential rate `((x − s₁m)/s)ʳ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub x: f64,
    pub m: f64,
    pub s: f64,
    pub s1: f64,
    pub r: f64,
}

impl RateQuery {
    pub fn new(x: f64, m: f64, s: f64, s1: f64, r: f64) -> Result<Self> {
        let q = Self { x, m, s, s1, r };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if ![self.x, self.m, self.s, self.s1, self.r]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(domain("rate parameters must be finite"));
        }
        if !(self.s > 0.0) {
            return Err(domain(format!("s must be positive, got {}", self.s)));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(domain(format!("r must lie in (0, 1), got {}", self.r)));
        }
        if !(self.x > self.s1 * self.m) {
            return Err(domain(format!(
                "x = {} must exceed s₁·m = {}",
                self.x,
                self.s1 * self.m
            )));
        }
        Ok(())
    }
}

/// ((x − s₁m)/s)ʳ
pub fn stretched_rate(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    Ok(((q.x - q.s1 * q.m) / q.s).powf(q.r))
}

fn check_exponent(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("exponent must lie in (0, 1), got {r}")))
    }
}

/// (x − m)ʳ, the equal-weight case.
pub fn iid_rate(x: f64, m: f64, r: f64) -> Result<f64> {
    stretched_rate(&RateQuery::new(x, m, 1.0, 1.0, r)?)
}

/// [(E θ / M*)(x − m)]ʳ, shared by the quenched and annealed regimes.
pub fn random_weight_rate(x: f64, m: f64, r: f64, e_theta: f64, m_star: f64) -> Result<f64> {
    if !(e_theta > 0.0 && m_star > 0.0 && e_theta.is_finite() && m_star.is_finite()) {
        return Err(domain("E[θ] and M* must be positive and finite"));
    }
    if e_theta > m_star {
        return Err(Error::InconsistentDistribution(format!(
            "E[θ] = {e_theta} exceeds the essential supremum M* = {m_star}"
        )));
    }
    stretched_rate(&RateQuery::new(x, m, m_star / e_theta, 1.0, r)?)
}

/// (sup k)^{−r}·(x − m)ʳ
pub fn kernel_rate(x: f64, m: f64, r: f64, k: &KernelSpec) -> Result<f64> {
    stretched_rate(&RateQuery::new(x, m, k.sup(), 1.0, r)?)
}

/// (x − m/3)^α, at speed n^α, for the ±1/n thirds scheme with a heavier
/// stretched lower tail of exponent α.
pub fn mixed_sign_rate(x: f64, m: f64, alpha: f64) -> Result<f64> {
    check_exponent(alpha)?;
    if !(x.is_finite() && m.is_finite()) {
        return Err(domain("rate parameters must be finite"));
    }
    if !(x > m / 3.0) {
        return Err(domain(format!("x = {x} must exceed m/3 = {}", m / 3.0)));
    }
    Ok((x - m / 3.0).powf(alpha))
}

/// A law with finite exponential moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LightLaw {
    Bernoulli {
        p: f64,
    },
    Normal {
        mu: f64,
        sigma2: f64,
    },
    Poisson {
        lambda: f64,
    },
    /// Uniform law on the given sample points.
    Empirical {
        samples: Vec<f64>,
    },
}

/// A light-tailed law together with the weight constants s_ν entering χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightTailedSpec {
    pub law: LightLaw,
    /// s₁, s₂, …; missing entries are taken as 1 (equal weights).
    #[serde(default)]
    pub weight_moments: Vec<f64>,
}

impl LightTailedSpec {
    pub fn new(law: LightLaw) -> Result<Self> {
        Self::with_weight_moments(law, Vec::new())
    }

    pub fn with_weight_moments(law: LightLaw, weight_moments: Vec<f64>) -> Result<Self> {
        let ok = match &law {
            LightLaw::Bernoulli { p } => *p > 0.0 && *p < 1.0,
            LightLaw::Normal { mu, sigma2 } => {
                mu.is_finite() && *sigma2 > 0.0 && sigma2.is_finite()
            }
            LightLaw::Poisson { lambda } => *lambda > 0.0 && lambda.is_finite(),
            LightLaw::Empirical { samples } => {
                !samples.is_empty() && samples.iter().all(|v| v.is_finite())
            }
        };
        if !ok {
            return Err(invalid(format!("invalid light-tailed law {law:?}")));
        }
        if weight_moments.iter().any(|s| !s.is_finite()) {
            return Err(invalid("weight constants must be finite"));
        }
        let spec = Self {
            law,
            weight_moments,
        };
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 / 8.0).collect();
        spec.check_convexity(&grid)?;
        Ok(spec)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(LightLaw::Bernoulli { p })
    }

    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(LightLaw::Normal { mu, sigma2 })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::new(LightLaw::Poisson { lambda })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Self::new(LightLaw::Empirical { samples })
    }

    /// Λ(t) = log E e^{tX}.
    pub fn cumulant(&self, t: f64) -> f64 {
        match &self.law {
            LightLaw::Bernoulli { p } => {
                if t > 0.0 {
                    t + (p + (1.0 - p) * (-t).exp()).ln()
                } else {
                    (1.0 - p + p * t.exp()).ln()
                }
            }
            LightLaw::Normal { mu, sigma2 } => mu * t + 0.5 * sigma2 * t * t,
            LightLaw::Poisson { lambda } => lambda * t.exp_m1(),
            LightLaw::Empirical { samples } => {
                let top = samples
                    .iter()
                    .map(|x| t * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = samples.iter().map(|x| (t * x - top).exp()).sum();
                top + (sum / samples.len() as f64).ln()
            }
        }
    }

    /// Λ′(t), the mean of the exponentially tilted law.
    pub fn cumulant_derivative(&self, t: f64) -> f64 {
        match &self.law {
            LightLaw::Bernoulli { p } => {
                if t > 0.0 {
                    p / (p + (1.0 - p) * (-t).exp())
                } else {
                    p * t.exp() / (1.0 - p + p * t.exp())
                }
            }
            LightLaw::Normal { mu, sigma2 } => mu + sigma2 * t,
            LightLaw::Poisson { lambda } => lambda * t.exp(),
            LightLaw::Empirical { samples } => {
                let top = samples
                    .iter()
                    .map(|x| t * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let (mut num, mut den) = (0.0, 0.0);
                for x in samples {
                    let w = (t * x - top).exp();
                    num += w * x;
                    den += w;
                }
                num / den
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.cumulant_derivative(0.0)
    }

    /// Essential supremum of the law and the probability it carries.
    fn upper_edge(&self) -> Option<(f64, f64)> {
        match &self.law {
            LightLaw::Bernoulli { p } => Some((1.0, *p)),
            LightLaw::Normal { .. } | LightLaw::Poisson { .. } => None,
            LightLaw::Empirical { samples } => {
                let top = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let hits = samples.iter().filter(|&&x| x == top).count();
                Some((top, hits as f64 / samples.len() as f64))
            }
        }
    }

    /// Fails unless Λ(0) = 0 and the second differences of Λ on `grid` are ≥ −10⁻⁸.
    pub fn check_convexity(&self, grid: &[f64]) -> Result<()> {
        if self.cumulant(0.0).abs() > 1e-12 {
            return Err(Error::Numeric {
                context: "cumulant",
                diagnostics: format!("Λ(0) = {}", self.cumulant(0.0)),
            });
        }
        for w in grid.windows(3) {
            let (h1, h2) = (w[1] - w[0], w[2] - w[1]);
            let (l0, l1, l2) = (
                self.cumulant(w[0]),
                self.cumulant(w[1]),
                self.cumulant(w[2]),
            );
            let second = ((l2 - l1) / h2 - (l1 - l0) / h1) * 2.0 / (h1 + h2);
            if second < -1e-8 {
                return Err(Error::Numeric {
                    context: "cumulant",
                    diagnostics: format!(
                        "Λ is not convex near t = {}: second difference {second:e}",
                        w[1]
                    ),
                });
            }
        }
        Ok(())
    }

    /// Taylor coefficients l_ν = c_ν/ν! of Λ at zero, for ν = 0..=nu_max.
    pub fn cumulant_taylor(&self, nu_max: usize) -> Vec<f64> {
        // Taylor coefficients of the moment generating function
        let mut a = vec![0.0; nu_max + 1];
        a[0] = 1.0;
        match &self.law {
            LightLaw::Bernoulli { p } => {
                let mut f = 1.0;
                for (n, an) in a.iter_mut().enumerate().skip(1) {
                    f /= n as f64;
                    *an = p * f;
                }
            }
            LightLaw::Normal { mu, sigma2 } => {
                let mut l = vec![0.0; nu_max + 1];
                if nu_max >= 1 {
                    l[1] = *mu;
                }
                if nu_max >= 2 {
                    l[2] = 0.5 * sigma2;
                }
                return l;
            }
            LightLaw::Poisson { lambda } => {
                let mut l = vec![0.0; nu_max + 1];
                let mut f = 1.0;
                for (n, ln) in l.iter_mut().enumerate().skip(1) {
                    f /= n as f64;
                    *ln = lambda * f;
                }
                return l;
            }
            LightLaw::Empirical { samples } => {
                let len = samples.len() as f64;
                let mut powers = vec![1.0; samples.len()];
                let mut f = 1.0;
                for (n, an) in a.iter_mut().enumerate().skip(1) {
                    f /= n as f64;
                    let mut total = 0.0;
                    for (p, x) in powers.iter_mut().zip(samples) {
                        *p *= x;
                        total += *p;
                    }
                    *an = total / len * f;
                }
            }
        }
        log_series(&a)
    }

    /// Cumulants c_ν = Λ^{(ν)}(0) for ν = 0..=nu_max.
    pub fn cumulants(&self, nu_max: usize) -> Vec<f64> {
        let mut fact = 1.0;
        self.cumulant_taylor(nu_max)
            .into_iter()
            .enumerate()
            .map(|(n, l)| {
                if n > 0 {
                    fact *= n as f64;
                }
                l * fact
            })
            .collect()
    }

    fn weight_moment(&self, nu: usize) -> f64 {
        self.weight_moments.get(nu - 1).copied().unwrap_or(1.0)
    }
}

/// Coefficients of log A(t) for a power series A with A(0) = 1, from
/// n·a_n = Σ_{k=1}^{n} k·l_k·a_{n−k}.
fn log_series(a: &[f64]) -> Vec<f64> {
    let mut l = vec![0.0; a.len()];
    for n in 1..a.len() {
        let mut acc = n as f64 * a[n];
        for k in 1..n {
            acc -= k as f64 * l[k] * a[n - k];
        }
        l[n] = acc / n as f64;
    }
    l
}

/// Find t ≥ 0 with g(t) = x for nondecreasing g, g(0) < x, by doubling then bisection.
fn solve_increasing<G: Fn(f64) -> f64>(g: G, x: f64) -> Option<f64> {
    let mut hi = 1.0;
    while g(hi) < x {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..ROOT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Λ*(x) = sup_{t ≥ 0} {tx − Λ(t)}.
///
/// Zero at or below the mean; `f64::INFINITY` beyond the essential supremum;
/// −log P(X = sup X) at the supremum itself.
pub fn cramer_rate(spec: &LightTailedSpec, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("deviation level must be finite, got {x}")));
    }
    if x <= spec.mean() {
        return Ok(0.0);
    }
    if let Some((top, mass)) = spec.upper_edge() {
        if x > top {
            return Ok(f64::INFINITY);
        }
        if x == top {
            return Ok(-mass.ln());
        }
    }
    let t = solve_increasing(|t| spec.cumulant_derivative(t), x).ok_or_else(|| Error::Numeric {
        context: "cramer_rate",
        diagnostics: format!("Λ′(t) stays below x = {x} for t ≤ {BRACKET_LIMIT:e}"),
    })?;
    Ok((t * x - spec.cumulant(t)).max(0.0))
}

/// Value of χ* with the truncation diagnostic at the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiStar {
    pub value: f64,
    pub t_opt: f64,
    /// Largest of the two final series terms over |partial sum|, at `t_opt`.
    pub diagnostic: f64,
}

/// χ*(x) = sup_{t ≥ 0} {tx − χ(t)} with χ(t) = Σ_{ν ≤ nu_max} s_ν c_ν tᵛ/ν!.
pub fn chi_star(spec: &LightTailedSpec, x: f64, nu_max: usize) -> Result<ChiStar> {
    if nu_max < 2 {
        return Err(domain("chi_star needs at least two series terms"));
    }
    if !x.is_finite() {
        return Err(domain(format!("deviation level must be finite, got {x}")));
    }
    let l = spec.cumulant_taylor(nu_max);
    let coef: Vec<f64> = (0..=nu_max)
        .map(|nu| {
            if nu == 0 {
                0.0
            } else {
                spec.weight_moment(nu) * l[nu]
            }
        })
        .collect();
    let chi = |t: f64| coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let chi_prime = |t: f64| {
        coef.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (nu, c)| acc * t + nu as f64 * c)
    };
    // the two final terms, so a law with vanishing odd or even cumulants
    // cannot hide a growing tail
    let diagnostic = |t: f64| {
        let last = (nu_max - 1..=nu_max)
            .map(|nu| (coef[nu] * t.powi(nu as i32)).abs())
            .fold(0.0, f64::max);
        if last == 0.0 {
            0.0
        } else {
            last / chi(t).abs()
        }
    };
    if x <= chi_prime(0.0) {
        return Ok(ChiStar {
            value: 0.0,
            t_opt: 0.0,
            diagnostic: 0.0,
        });
    }
    let Some(t) = solve_increasing(chi_prime, x) else {
        return Err(Error::SeriesDomain {
            t: BRACKET_LIMIT,
            diagnostic: f64::INFINITY,
        });
    };
    let d = diagnostic(t);
    if !(d <= SERIES_DIVERGENCE_LIMIT) {
        return Err(Error::SeriesDomain { t, diagnostic: d });
    }
    Ok(ChiStar {
        value: (t * x - chi(t)).max(0.0),
        t_opt: t,
        diagnostic: d,
    })
}

/// One row of an analytic rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub x: f64,
    /// `f64::INFINITY` outside the formula's domain.
    pub rate: f64,
    pub formula_tag: &'static str,
    pub params: Vec<(String, f64)>,
}

/// Which closed form a sweep evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "snake_case")]
pub enum RateFormula {
    Stretched {
        m: f64,
        s: f64,
        s1: f64,
        r: f64,
    },
    Iid {
        m: f64,
        r: f64,
    },
    RandomWeight {
        m: f64,
        r: f64,
        e_theta: f64,
        m_star: f64,
    },
    Kernel {
        m: f64,
        r: f64,
        kernel: KernelSpec,
    },
    MixedSign {
        m: f64,
        alpha: f64,
    },
    Cramer {
        spec: LightTailedSpec,
    },
    ChiStar {
        spec: LightTailedSpec,
        nu_max: usize,
    },
}

impl RateFormula {
    pub fn tag(&self) -> &'static str {
        match self {
            RateFormula::Stretched { .. } => "stretched",
            RateFormula::Iid { .. } => "iid",
            RateFormula::RandomWeight { .. } => "random_weight",
            RateFormula::Kernel { .. } => "kernel",
            RateFormula::MixedSign { .. } => "mixed_sign",
            RateFormula::Cramer { .. } => "cramer",
            RateFormula::ChiStar { .. } => "chi_star",
        }
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        let p = |k: &str, v: f64| (k.to_string(), v);
        match self {
            RateFormula::Stretched { m, s, s1, r } => {
                vec![p("m", *m), p("s", *s), p("s1", *s1), p("r", *r)]
            }
            RateFormula::Iid { m, r } => vec![p("m", *m), p("r", *r)],
            RateFormula::RandomWeight {
                m,
                r,
                e_theta,
                m_star,
            } => {
                vec![
                    p("m", *m),
                    p("r", *r),
                    p("e_theta", *e_theta),
                    p("m_star", *m_star),
                ]
            }
            RateFormula::Kernel { m, r, kernel } => {
                vec![p("m", *m), p("r", *r), p("sup_k", kernel.sup())]
            }
            RateFormula::MixedSign { m, alpha } => vec![p("m", *m), p("alpha", *alpha)],
            RateFormula::Cramer { spec } => vec![p("mean", spec.mean())],
            RateFormula::ChiStar { spec, nu_max } => {
                vec![p("mean", spec.mean()), p("nu_max", *nu_max as f64)]
            }
        }
    }

    /// Checks parameters that do not depend on x; contradictory inputs fail here.
    pub fn validate(&self) -> Result<()> {
        match self {
            RateFormula::Stretched { m, s, s1, r } => {
                RateQuery::new(s1 * m + 1.0, *m, *s, *s1, *r).map(|_| ())
            }
            RateFormula::Iid { m, r } => iid_rate(m + 1.0, *m, *r).map(|_| ()),
            RateFormula::RandomWeight {
                m,
                r,
                e_theta,
                m_star,
            } => random_weight_rate(m + 1.0, *m, *r, *e_theta, *m_star).map(|_| ()),
            RateFormula::Kernel { m, r, kernel } => {
                kernel_rate(m + 1.0, *m, *r, kernel).map(|_| ())
            }
            RateFormula::MixedSign { m, alpha } => {
                mixed_sign_rate(m / 3.0 + 1.0, *m, *alpha).map(|_| ())
            }
            RateFormula::Cramer { .. } => Ok(()),
            RateFormula::ChiStar { nu_max, .. } => {
                if *nu_max < 2 {
                    Err(domain("chi_star needs at least two series terms"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Rate at x; deviations outside the formula's domain give `f64::INFINITY`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.validate()?;
        let v = match self {
            RateFormula::Stretched { m, s, s1, r } => {
                if x > s1 * m {
                    Some(stretched_rate(&RateQuery::new(x, *m, *s, *s1, *r)?)?)
                } else {
                    None
                }
            }
            RateFormula::Iid { m, r } => (x > *m).then(|| iid_rate(x, *m, *r)).transpose()?,
            RateFormula::RandomWeight {
                m,
                r,
                e_theta,
                m_star,
            } => (x > *m)
                .then(|| random_weight_rate(x, *m, *r, *e_theta, *m_star))
                .transpose()?,
            RateFormula::Kernel { m, r, kernel } => (x > *m)
                .then(|| kernel_rate(x, *m, *r, kernel))
                .transpose()?,
            RateFormula::MixedSign { m, alpha } => (x > m / 3.0)
                .then(|| mixed_sign_rate(x, *m, *alpha))
                .transpose()?,
            RateFormula::Cramer { spec } => Some(cramer_rate(spec, x)?),
            RateFormula::ChiStar { spec, nu_max } => Some(chi_star(spec, x, *nu_max)?.value),
        };
        Ok(v.unwrap_or(f64::INFINITY))
    }

    pub fn sweep(&self, xs: &[f64]) -> Result<Vec<RateRow>> {
        let params = self.params();
        xs.iter()
            .map(|&x| {
                Ok(RateRow {
                    x,
                    rate: self.evaluate(x)?,
                    formula_tag: self.tag(),
                    params: params.clone(),
                })
            })
            .collect()
    }
}

/// Outcome of [`consistency_lattice`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub cases: usize,
    /// Largest relative gap between a specialised rate and its stretched form.
    pub max_substitution_gap: f64,
    /// Largest relative gap in ((λx − s₁λm)/s)ʳ = λʳ((x − s₁m)/s)ʳ.
    pub max_scaling_gap: f64,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Checks `iid_rate`, `kernel_rate` and `random_weight_rate` against
/// `stretched_rate` with s₁ = 1 and s = 1, sup k and M*/Eθ respectively, plus
/// the λʳ scaling, on `cases` random valid queries.
pub fn consistency_lattice(cases: usize, seed: u64) -> Result<LatticeReport> {
    let kernels = [
        KernelSpec::epanechnikov(),
        KernelSpec::uniform(),
        KernelSpec::triangular(),
        KernelSpec::quartic(),
    ];
    let mut u = StreamKey::new(seed).stream(0, 0);
    let mut sub: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..cases {
        let r = 0.02 + 0.96 * u.next_open01();
        let m = 20.0 * u.next_open01() - 10.0;
        let x = m + 1e-3 + 50.0 * u.next_open01();
        let k = &kernels[i % kernels.len()];
        let theta = ThetaDist::Uniform {
            lo: u.next_open01(),
            hi: 1.0 + 4.0 * u.next_open01(),
        };
        let (e, ms) = (theta.mean(), theta.ess_sup());
        let lambda = 0.1 + 10.0 * u.next_open01();
        let s = 0.1 + 5.0 * u.next_open01();
        let s1 = 2.0 * u.next_open01();
        let xs = s1 * m + 1e-3 + 50.0 * u.next_open01();

        let base = |s: f64| stretched_rate(&RateQuery::new(x, m, s, 1.0, r)?);
        sub = sub
            .max(rel_gap(iid_rate(x, m, r)?, base(1.0)?))
            .max(rel_gap(kernel_rate(x, m, r, k)?, base(k.sup())?))
            .max(rel_gap(random_weight_rate(x, m, r, e, ms)?, base(ms / e)?));

        let scaled = stretched_rate(&RateQuery::new(lambda * xs, lambda * m, s, s1, r)?)?;
        let plain = stretched_rate(&RateQuery::new(xs, m, s, s1, r)?)?;
        scale = scale.max(rel_gap(scaled, lambda.powf(r) * plain));
    }
    Ok(LatticeReport {
        cases,
        max_substitution_gap: sub,
        max_scaling_gap: scale,
    })
}
