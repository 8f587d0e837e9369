//! Monte Carlo estimation of `P(S̄ₙ ≥ x)` for `S̄ₙ = Σⱼ a_j(n)·Xⱼ`.
//!
//! Two estimators are provided:
//!
//! * **naive**: the fraction of replications with `S̄ₙ ≥ x`;
//! * **big jump**: a conditional single-big-jump estimator. Each replication
//!   draws an index `K` uniformly from the indices with nonzero weight, draws
//!   the other summands, and returns
//!   `Z = n_nz · P(a_K·X > max(M_K, x − Σ_{j≠K} a_jXⱼ))`,
//!   where `M_K` is the largest of the other weighted summands and `n_nz` the
//!   number of nonzero weights. The events "summand k is the largest weighted
//!   term and the sum exceeds x" partition `{S̄ₙ ≥ x}`, so `E[Z] = P(S̄ₙ ≥ x)`
//!   for any weights; `n_nz` is the likelihood ratio of the uniform index
//!   proposal.
//!
//! Replication `i` at sample size `n` reads the counter-addressed stream
//! `(seed, n, i)`: uniforms `0..n` give `X₁..Xₙ`, uniform `n` gives `K`, and
//! uniforms `n+1..=2n` give θ₁..θₙ when weights are redrawn per replication.
//! Work is split into fixed chunks of replications and the chunk accumulators
//! are merged in chunk order, so estimates are bit-identical for any number of
//! worker threads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{domain, Error, Result};
use crate::rate_functions::{
    iid_rate, kernel_rate, mixed_sign_rate, random_weight_rate, stretched_rate, RateQuery,
};
use crate::stream::StreamKey;
use crate::tail_models::{LowerTail, TailModel};
use crate::weight_schemes::{normalize_thetas, SchemeKind, ThetaDist, WeightScheme, DEFAULT_TOL};

/// Minimum number of replications per grid point.
pub const MIN_REPLICATIONS: u64 = 1000;
/// Default slack ε in t₁(n).
pub const DEFAULT_EPSILON: f64 = 0.1;

const CHUNK: u64 = 4096;
const Z_95: f64 = 1.6448536269514722;

/// Σⱼ a_j·xⱼ
pub fn weighted_sum(row: &[f64], xs: &[f64]) -> Result<f64> {
    if row.len() != xs.len() {
        return Err(Error::LengthMismatch {
            weights: row.len(),
            samples: xs.len(),
        });
    }
    Ok(row.iter().zip(xs).map(|(a, x)| a * x).sum())
}

/// t₁(n) = n(x − m·Σaⱼ + m·a_max + ε) / (n·a_max)
pub fn t1_threshold(n: usize, x: f64, row: &[f64], m: f64, epsilon: f64) -> Result<f64> {
    let a_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(a_max > 0.0) {
        return Err(domain("t₁ needs a row with a positive entry"));
    }
    let sum: f64 = row.iter().sum();
    let nf = n as f64;
    Ok(nf * (x - m * sum + m * a_max + epsilon) / (nf * a_max))
}

/// One-sided 95% Clopper–Pearson upper bound for `hits` successes in `trials`.
pub fn clopper_pearson_upper(hits: u64, trials: u64) -> f64 {
    if hits >= trials {
        return 1.0;
    }
    if hits == 0 {
        return 1.0 - 0.05f64.powf(1.0 / trials as f64);
    }
    Beta::new(hits as f64 + 1.0, (trials - hits) as f64)
        .expect("positive shape parameters")
        .inverse_cdf(0.95)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Naive,
    BigJumpIs,
}

impl Estimator {
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::Naive => "naive",
            Estimator::BigJumpIs => "big_jump_is",
        }
    }
}

/// How weight rows are produced across replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// One row per n, shared by all replications (quenched for random weights).
    Fixed,
    /// θ₁..θₙ redrawn in every replication.
    Annealed,
}

impl WeightMode {
    pub fn tag(self) -> &'static str {
        match self {
            WeightMode::Fixed => "fixed",
            WeightMode::Annealed => "annealed",
        }
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Serializable description of a simulation; this is what a run manifest records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub model: TailModel,
    pub scheme: WeightScheme,
    pub n_grid: Vec<usize>,
    pub x: f64,
    pub replications: u64,
    pub estimator: Estimator,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

/// A validated [`PlanSpec`] with the constants derived from it.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    spec: PlanSpec,
    worker_hint: Option<usize>,
    mean: f64,
    s1: f64,
    s: f64,
}

impl SimulationPlan {
    pub fn new(spec: PlanSpec) -> Result<Self> {
        if spec.replications < MIN_REPLICATIONS {
            return Err(domain(format!(
                "need at least {MIN_REPLICATIONS} replications, got {}",
                spec.replications
            )));
        }
        if spec.n_grid.is_empty() || spec.n_grid.iter().any(|&n| n == 0 || n as u64 >= 1 << 32) {
            return Err(domain("n-grid entries must lie in [1, 2³²)"));
        }
        if !spec.x.is_finite() {
            return Err(domain("x must be finite"));
        }
        if !(spec.epsilon > 0.0 && spec.epsilon.is_finite()) {
            return Err(domain("ε must be positive"));
        }
        for &n in &spec.n_grid {
            let row = spec.scheme.generate(n)?;
            if !row.iter().any(|&a| a != 0.0) {
                return Err(domain(format!(
                    "weight row for n = {n} is identically zero"
                )));
            }
        }
        let mean = spec.model.mean()?;
        let (s1, s) = scheme_constants(&spec.scheme)?;
        if !(spec.x > s1 * mean) {
            return Err(domain(format!(
                "x = {} is not a large deviation: it must exceed s₁·m = {s1}·{mean} = {}",
                spec.x,
                s1 * mean
            )));
        }
        Ok(Self {
            spec,
            worker_hint: None,
            mean,
            s1,
            s,
        })
    }

    /// Thread-count hint; never changes results.
    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.worker_hint = workers.filter(|&w| w > 0);
        self
    }

    pub fn spec(&self) -> &PlanSpec {
        &self.spec
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// (s₁, s) used for the feasibility check, t₂ and the generic target.
    pub fn limits(&self) -> (f64, f64) {
        (self.s1, self.s)
    }

    /// Same plan with a different scheme (re-validated).
    pub fn with_scheme(&self, scheme: WeightScheme) -> Result<Self> {
        let spec = PlanSpec {
            scheme,
            ..self.spec.clone()
        };
        Ok(Self::new(spec)?.with_workers(self.worker_hint))
    }

    fn signed_lower_alpha(&self) -> Option<f64> {
        match self.spec.model.lower_tail() {
            LowerTail::StretchedLower { alpha }
                if alpha < self.spec.model.r() && !self.spec.scheme.is_nonnegative() =>
            {
                Some(alpha)
            }
            _ => None,
        }
    }

    /// Normalizing speed: b(n)·nʳ, or n^α when negative weights meet a
    /// heavier stretched lower tail of exponent α < r.
    pub fn speed(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        Ok(match self.signed_lower_alpha() {
            Some(alpha) => nf.powf(alpha),
            None => self.spec.model.b().evaluate(nf)? * nf.powf(self.spec.model.r()),
        })
    }

    /// −log p / speed(n) for a given log p.
    pub fn rho_from_log_p(&self, log_p: f64, n: usize) -> Result<f64> {
        Ok(-log_p / self.speed(n)?)
    }

    /// Limit of rho predicted for this scheme; `f64::INFINITY` when x lies
    /// outside the formula's domain.
    pub fn target_rate(&self) -> f64 {
        let (x, m, r) = (self.spec.x, self.mean, self.spec.model.r());
        let v = match self.spec.scheme.kind() {
            SchemeKind::Uniform => iid_rate(x, m, r),
            SchemeKind::Kernel { kernel } => kernel_rate(x, m, r, kernel),
            SchemeKind::SelfNormalizedRandom { theta, .. } => {
                random_weight_rate(x, m, r, theta.mean(), theta.ess_sup())
            }
            SchemeKind::MixedSignThirds => match self.signed_lower_alpha() {
                Some(alpha) => mixed_sign_rate(x, m, alpha),
                None => RateQuery::new(x, m, 1.0, 1.0 / 3.0, r).and_then(|q| stretched_rate(&q)),
            },
            _ => RateQuery::new(x, m, self.s, self.s1, r).and_then(|q| stretched_rate(&q)),
        };
        v.unwrap_or(f64::INFINITY)
    }

    /// t₂(n) = n(x/s − s₁m/s)
    pub fn t2(&self, n: usize) -> f64 {
        n as f64 * (self.spec.x / self.s - self.s1 * self.mean / self.s)
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        match self.worker_hint {
            None => Ok(f()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::Numeric {
                        context: "thread pool",
                        diagnostics: e.to_string(),
                    })?;
                Ok(pool.install(f))
            }
        }
    }
}

/// (s₁, s): closed form for the built-in kinds, otherwise the condition B
/// report on the row lengths of the custom table.
fn scheme_constants(scheme: &WeightScheme) -> Result<(f64, f64)> {
    if let Some(c) = scheme.limit_constants() {
        return Ok((c.s1, c.s));
    }
    let SchemeKind::CustomTable { rows } = scheme.kind() else {
        unreachable!("only custom tables lack closed-form limits");
    };
    let mut lens: Vec<usize> = rows.iter().map(Vec::len).collect();
    lens.sort_unstable();
    if lens.len() >= 3 && *lens.last().unwrap() >= 1000 {
        let rep = scheme.assumption_b_report(&lens, DEFAULT_TOL)?;
        return Ok((rep.s1_estimate, rep.s_estimate));
    }
    let n = *lens.last().unwrap();
    let row = scheme.generate(n)?;
    let s1 = row.iter().sum();
    let s = n as f64 * row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((s1, s))
}

/// Result of one estimator at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub estimator: Estimator,
    pub mode: WeightMode,
    pub n: usize,
    pub x: f64,
    pub replications: u64,
    pub p_hat: f64,
    pub std_err: f64,
    /// One-sided 95% upper bound on p: Clopper–Pearson for the naive
    /// estimator, p̂ + 1.645·se for the big-jump estimator.
    pub p_upper: f64,
    /// −log p̂ / speed(n); `f64::INFINITY` when p̂ = 0.
    pub rho: f64,
    pub target_rate: f64,
    pub effective_sample_size: f64,
    pub t1: f64,
    pub t2: f64,
    pub seed: u64,
}

impl SimulationEstimate {
    /// p̂ ± 3·se clipped to [0, 1].
    pub fn interval3(&self) -> (f64, f64) {
        (
            (self.p_hat - 3.0 * self.std_err).max(0.0),
            (self.p_hat + 3.0 * self.std_err).min(1.0),
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, z: f64) {
        self.count += 1;
        let d = z - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (z - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        Moments {
            count,
            mean: self.mean + d * nb / count as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / count as f64,
        }
    }
}

/// Read-only state shared by the replications at one n.
struct Replicator<'a> {
    model: &'a TailModel,
    key: StreamKey,
    n: usize,
    x: f64,
    row: Arc<Vec<f64>>,
    nonzero: Vec<usize>,
    theta: Option<ThetaDist>,
}

impl Replicator<'_> {
    fn stream_id(&self, rep: u64) -> u64 {
        ((self.n as u64) << 32) | rep
    }

    /// K uniform and, when annealed, the replication's own weight row.
    fn index_and_row(&self, rep: u64) -> (usize, Vec<usize>, Option<Vec<f64>>) {
        let mut aux = self.key.stream(self.stream_id(rep), self.n as u64);
        let uk = aux.next_open01();
        match &self.theta {
            None => {
                let k = self.nonzero
                    [((uk * self.nonzero.len() as f64) as usize).min(self.nonzero.len() - 1)];
                (k, Vec::new(), None)
            }
            Some(theta) => {
                let thetas: Vec<f64> = (0..self.n)
                    .map(|_| theta.sample(aux.next_open01()))
                    .collect();
                let row = normalize_thetas(theta, &thetas);
                let nonzero: Vec<usize> = (0..self.n).filter(|&j| row[j] != 0.0).collect();
                let k = nonzero[((uk * nonzero.len() as f64) as usize).min(nonzero.len() - 1)];
                (k, nonzero, Some(row))
            }
        }
    }

    fn naive(&self, rep: u64) -> bool {
        let owned;
        let row: &[f64] = match self.theta {
            None => &self.row,
            Some(_) => {
                owned = self.index_and_row(rep).2.expect("annealed row");
                &owned
            }
        };
        let mut xs = self.key.replication(self.n, rep);
        let mut sum = 0.0;
        for &a in row {
            sum += a * self.model.sample_unchecked(xs.next_open01());
        }
        sum >= self.x
    }

    fn big_jump(&self, rep: u64) -> f64 {
        let (k, owned_nonzero, owned_row) = self.index_and_row(rep);
        let row: &[f64] = owned_row.as_deref().unwrap_or(&self.row);
        let n_nz = if owned_row.is_some() {
            owned_nonzero.len()
        } else {
            self.nonzero.len()
        };
        let mut xs = self.key.replication(self.n, rep);
        let mut others = 0.0;
        let mut biggest = f64::NEG_INFINITY;
        for (j, &a) in row.iter().enumerate() {
            let u = xs.next_open01();
            if j == k || a == 0.0 {
                continue;
            }
            let w = a * self.model.sample_unchecked(u);
            others += w;
            biggest = biggest.max(w);
        }
        let y = biggest.max(self.x - others);
        let a = row[k];
        let p = if a > 0.0 {
            self.model.survival(y / a)
        } else {
            self.model.cdf(y / a)
        };
        n_nz as f64 * p
    }
}

fn run(
    plan: &SimulationPlan,
    n: usize,
    estimator: Estimator,
    mode: WeightMode,
) -> Result<SimulationEstimate> {
    let spec = &plan.spec;
    let theta = match (mode, spec.scheme.kind()) {
        (WeightMode::Fixed, _) => None,
        (WeightMode::Annealed, SchemeKind::SelfNormalizedRandom { theta, .. }) => Some(*theta),
        (WeightMode::Annealed, _) => {
            return Err(domain(
                "annealed runs need a self-normalized random weight scheme",
            ));
        }
    };
    let row = spec.scheme.generate(n)?;
    let nonzero: Vec<usize> = (0..n).filter(|&j| row[j] != 0.0).collect();
    let t1 = t1_threshold(n, spec.x, &row, plan.mean, spec.epsilon).unwrap_or(f64::NAN);
    let rep = Replicator {
        model: &spec.model,
        key: StreamKey::new(spec.seed),
        n,
        x: spec.x,
        row: Arc::new(row),
        nonzero,
        theta,
    };
    let total = spec.replications;
    let chunks = total.div_ceil(CHUNK);
    let range = |c: u64| (c * CHUNK)..((c + 1) * CHUNK).min(total);

    let (p_hat, std_err, p_upper, ess) = match estimator {
        Estimator::Naive => {
            let hits: u64 = plan.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| range(c).filter(|&i| rep.naive(i)).count() as u64)
                    .collect::<Vec<u64>>()
                    .into_iter()
                    .sum()
            })?;
            let nf = total as f64;
            let p = hits as f64 / nf;
            (
                p,
                (p * (1.0 - p) / nf).sqrt(),
                clopper_pearson_upper(hits, total),
                nf,
            )
        }
        Estimator::BigJumpIs => {
            let acc = plan.install(|| {
                (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let mut m = Moments::default();
                        for i in range(c) {
                            m.push(rep.big_jump(i));
                        }
                        m
                    })
                    .collect::<Vec<Moments>>()
                    .into_iter()
                    .fold(Moments::default(), Moments::merge)
            })?;
            let nf = acc.count as f64;
            let se = (acc.m2 / (nf - 1.0) / nf).sqrt();
            let second = acc.mean * acc.mean + acc.m2 / nf;
            let ess = if second > 0.0 {
                nf * acc.mean * acc.mean / second
            } else {
                0.0
            };
            let p = acc.mean.clamp(0.0, 1.0);
            (p, se, (p + Z_95 * se).min(1.0), ess)
        }
    };
    let rho = if p_hat > 0.0 {
        plan.rho_from_log_p(p_hat.ln(), n)?
    } else {
        f64::INFINITY
    };
    Ok(SimulationEstimate {
        estimator,
        mode,
        n,
        x: spec.x,
        replications: total,
        p_hat,
        std_err,
        p_upper,
        rho,
        target_rate: plan.target_rate(),
        effective_sample_size: ess,
        t1,
        t2: plan.t2(n),
        seed: spec.seed,
    })
}

/// Fraction of replications with S̄ₙ ≥ x.
pub fn simulate_naive(plan: &SimulationPlan, n: usize) -> Result<SimulationEstimate> {
    run(plan, n, Estimator::Naive, WeightMode::Fixed)
}

/// Conditional single-big-jump estimate of P(S̄ₙ ≥ x).
pub fn simulate_big_jump_is(plan: &SimulationPlan, n: usize) -> Result<SimulationEstimate> {
    run(plan, n, Estimator::BigJumpIs, WeightMode::Fixed)
}

/// Runs the plan's estimator at every n of the grid with fixed weight rows.
pub fn rate_curve(plan: &SimulationPlan) -> Result<Vec<SimulationEstimate>> {
    curve(plan, WeightMode::Fixed)
}

fn curve(plan: &SimulationPlan, mode: WeightMode) -> Result<Vec<SimulationEstimate>> {
    plan.spec
        .n_grid
        .iter()
        .map(|&n| run(plan, n, plan.spec.estimator, mode))
        .collect()
}

/// Rate curve with the weight stream θ fixed by `theta_seed`.
pub fn quenched_run(plan: &SimulationPlan, theta_seed: u64) -> Result<Vec<SimulationEstimate>> {
    if !matches!(
        plan.spec.scheme.kind(),
        SchemeKind::SelfNormalizedRandom { .. }
    ) {
        return Err(domain(
            "quenched runs need a self-normalized random weight scheme",
        ));
    }
    curve(
        &plan.with_scheme(plan.spec.scheme.with_theta_seed(theta_seed))?,
        WeightMode::Fixed,
    )
}

/// Rate curve with θ₁..θₙ redrawn in every replication.
pub fn annealed_run(plan: &SimulationPlan) -> Result<Vec<SimulationEstimate>> {
    curve(plan, WeightMode::Annealed)
}

/// Rate curve from externally supplied log-probabilities, one per grid point.
pub fn synthetic_curve<F>(plan: &SimulationPlan, log_p: F) -> Result<Vec<SimulationEstimate>>
where
    F: Fn(usize) -> f64,
{
    let spec = &plan.spec;
    spec.n_grid
        .iter()
        .map(|&n| {
            let lp = log_p(n);
            let row = spec.scheme.generate(n)?;
            Ok(SimulationEstimate {
                estimator: spec.estimator,
                mode: WeightMode::Fixed,
                n,
                x: spec.x,
                replications: spec.replications,
                p_hat: lp.exp(),
                std_err: 0.0,
                p_upper: lp.exp(),
                rho: plan.rho_from_log_p(lp, n)?,
                target_rate: plan.target_rate(),
                effective_sample_size: spec.replications as f64,
                t1: t1_threshold(n, spec.x, &row, plan.mean, spec.epsilon).unwrap_or(f64::NAN),
                t2: plan.t2(n),
                seed: spec.seed,
            })
        })
        .collect()
}
