//! Triangular weight arrays `a_j(n)` and finite-grid checks of the weight
//! regularity conditions.
//!
//! Condition B asks for `Σⱼ a_j(n) → s₁ ≠ 0` and `n·max_j a_j(n) → s`.
//! Condition A asks, for every ν, for `n^{ν−1}·Σⱼ a_j(n)^ν = s_ν·R(ν, n)` with
//! `R(ν, n) → 1` (A.1) and `|R(ν, n) − 1| ≤ r_ν(1 + δₙ)^ν / n` (A.2).
//!
//! Both are statements about limits, so the reports below are surrogates on a
//! finite grid of `n`:
//!
//! * a sequence "converges" when the spread of its last three grid values is
//!   within `tol`, or when the last three values fit `L + C·n^{−γ}` with
//!   `γ ≥ 0.05`; the limit estimate is `L` in the second case;
//! * the A.2 envelope is tested through the scaled increments
//!   `D_ν(n_k) = n_k·|v_ν(n_{k+1}) − v_ν(n_k)| / (|s_ν|(1 + tol)^ν)`, which
//!   must stay bounded along the grid (growth exponent ≤ 1/4, or below a
//!   round-off floor), and `r_ν^{1/ν} = (max_k D_ν)^{1/ν}` must not increase
//!   past `1 + tol`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::quad;
use crate::stream::{StreamKey, THETA_STREAM};

/// Tolerance used by the validators when none is given.
pub const DEFAULT_TOL: f64 = 1e-2;
/// Default grid for the validators.
pub const DEFAULT_GRID: [usize; 4] = [1250, 2500, 5000, 10_000];

const MIN_RATE: f64 = 0.05;
const MAX_ENVELOPE_GROWTH: f64 = 0.25;
const ROUNDOFF_FLOOR: f64 = 1e-8;
const DEGENERATE_MOMENT: f64 = 1e-15;

/// Shape of a kernel on [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum KernelShape {
    /// 0.75(1 − u²)
    Epanechnikov,
    /// 0.5
    Uniform,
    /// 1 − |u|
    Triangular,
    /// 15/16·(1 − u²)²
    Quartic,
    /// Piecewise-linear interpolation through `(u, k(u))` nodes spanning [−1, 1].
    PiecewiseTable { nodes: Vec<(f64, f64)> },
}

/// A validated kernel: nonnegative, symmetric, integrating to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelShape", into = "KernelShape")]
pub struct KernelSpec {
    shape: KernelShape,
    sup: f64,
    integral: f64,
}

impl TryFrom<KernelShape> for KernelSpec {
    type Error = Error;

    fn try_from(shape: KernelShape) -> Result<Self> {
        KernelSpec::new(shape)
    }
}

impl From<KernelSpec> for KernelShape {
    fn from(k: KernelSpec) -> Self {
        k.shape
    }
}

impl KernelSpec {
    pub fn new(shape: KernelShape) -> Result<Self> {
        if let KernelShape::PiecewiseTable { nodes } = &shape {
            if nodes.len() < 2 {
                return Err(invalid("kernel table needs at least two nodes"));
            }
            if nodes[0].0 != -1.0 || nodes[nodes.len() - 1].0 != 1.0 {
                return Err(invalid("kernel table must span exactly [−1, 1]"));
            }
            if nodes.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(invalid("kernel table nodes must increase"));
            }
            if nodes.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(invalid("kernel table values must be finite"));
            }
        }
        let mut k = Self {
            shape,
            sup: 0.0,
            integral: 0.0,
        };
        let breaks = k.breakpoints();
        k.integral = quad::integrate_pieces(|u| k.evaluate(u), &breaks, 1e-12)?;
        if (k.integral - 1.0).abs() > 1e-8 {
            return Err(invalid(format!(
                "kernel integrates to {}, not 1",
                k.integral
            )));
        }
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            let (a, b) = (k.evaluate(u), k.evaluate(-u));
            if a < 0.0 || b < 0.0 {
                return Err(invalid(format!("kernel is negative near u = ±{u}")));
            }
            if (a - b).abs() > 1e-12 {
                return Err(invalid(format!(
                    "kernel is not symmetric at u = {u}: {a} vs {b}"
                )));
            }
        }
        if breaks.iter().any(|&u| k.evaluate(u) < 0.0) {
            return Err(invalid("kernel is negative at a table node"));
        }
        k.sup = match k.shape {
            KernelShape::Epanechnikov => 0.75,
            KernelShape::Uniform => 0.5,
            KernelShape::Triangular => 1.0,
            KernelShape::Quartic => 15.0 / 16.0,
            KernelShape::PiecewiseTable { .. } => scan_sup(|u| k.evaluate(u)),
        };
        Ok(k)
    }

    pub fn epanechnikov() -> Self {
        Self::new(KernelShape::Epanechnikov).expect("named kernel is valid")
    }

    pub fn uniform() -> Self {
        Self::new(KernelShape::Uniform).expect("named kernel is valid")
    }

    pub fn triangular() -> Self {
        Self::new(KernelShape::Triangular).expect("named kernel is valid")
    }

    pub fn quartic() -> Self {
        Self::new(KernelShape::Quartic).expect("named kernel is valid")
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            KernelShape::Epanechnikov => "epanechnikov",
            KernelShape::Uniform => "uniform",
            KernelShape::Triangular => "triangular",
            KernelShape::Quartic => "quartic",
            KernelShape::PiecewiseTable { .. } => "piecewise_table",
        }
    }

    /// k(u), zero outside [−1, 1]; both endpoints belong to the support.
    pub fn evaluate(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match &self.shape {
            KernelShape::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelShape::Uniform => 0.5,
            KernelShape::Triangular => 1.0 - u.abs(),
            KernelShape::Quartic => {
                let w = 1.0 - u * u;
                15.0 / 16.0 * w * w
            }
            KernelShape::PiecewiseTable { nodes } => {
                let i = nodes
                    .partition_point(|&(x, _)| x <= u)
                    .clamp(1, nodes.len() - 1);
                let ((x0, y0), (x1, y1)) = (nodes[i - 1], nodes[i]);
                y0 + (y1 - y0) * (u - x0) / (x1 - x0)
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            KernelShape::Triangular => vec![-1.0, 0.0, 1.0],
            KernelShape::PiecewiseTable { nodes } => nodes.iter().map(|n| n.0).collect(),
            _ => vec![-1.0, 1.0],
        }
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// ∫₋₁¹ k(u) du as computed at construction.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// ∫₋₁¹ k(u)^ν du.
    pub fn power_integral(&self, nu: u32) -> Result<f64> {
        quad::integrate_pieces(
            |u| self.evaluate(u).powi(nu as i32),
            &self.breakpoints(),
            1e-13,
        )
    }
}

/// sup over [−1, 1]: closed form for the named kernels.
pub fn kernel_sup(k: &KernelSpec) -> f64 {
    k.sup()
}

/// Maximum of `f` on [−1, 1] from a 10⁴-point scan refined by golden-section
/// search around every local maximum of the scan.
fn scan_sup<F: Fn(f64) -> f64>(f: F) -> f64 {
    const POINTS: usize = 10_000;
    let us: Vec<f64> = (0..=POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / POINTS as f64)
        .collect();
    let vs: Vec<f64> = us.iter().map(|&u| f(u)).collect();
    let mut best = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..=POINTS {
        let left = if i == 0 { f64::NEG_INFINITY } else { vs[i - 1] };
        let right = if i == POINTS {
            f64::NEG_INFINITY
        } else {
            vs[i + 1]
        };
        if vs[i] >= left && vs[i] >= right {
            let lo = us[i.saturating_sub(1)];
            let hi = us[(i + 1).min(POINTS)];
            best = best.max(golden_max(&f, lo, hi));
        }
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(lo)).max(f(hi))
}

/// Law of the positive, bounded weights θⱼ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ThetaDist {
    /// Uniform on (lo, hi], lo ≥ 0.
    Uniform {
        lo: f64,
        hi: f64,
    },
    Degenerate {
        value: f64,
    },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
}

impl ThetaDist {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ThetaDist::Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
            ThetaDist::Degenerate { value } => value > 0.0 && value.is_finite(),
            ThetaDist::TwoPoint { low, high, p_high } => {
                low > 0.0 && high >= low && high.is_finite() && (0.0..=1.0).contains(&p_high)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "θ distribution must be positive with finite essential supremum: {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ThetaDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            ThetaDist::Degenerate { value } => value,
            ThetaDist::TwoPoint { low, high, p_high } => low + p_high * (high - low),
        }
    }

    /// Essential supremum M*.
    pub fn ess_sup(&self) -> f64 {
        match *self {
            ThetaDist::Uniform { hi, .. } => hi,
            ThetaDist::Degenerate { value } => value,
            ThetaDist::TwoPoint { low, high, p_high } => {
                if p_high > 0.0 {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// Inverse-CDF draw from a uniform in (0, 1).
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            ThetaDist::Uniform { lo, hi } => hi - (hi - lo) * u,
            ThetaDist::Degenerate { value } => value,
            ThetaDist::TwoPoint { low, high, p_high } => {
                if u < p_high {
                    high
                } else {
                    low
                }
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        match *self {
            ThetaDist::Degenerate { .. } => true,
            ThetaDist::TwoPoint { low, high, p_high } => {
                low == high || p_high == 0.0 || p_high == 1.0
            }
            ThetaDist::Uniform { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    /// a_j(n) = 1/n
    Uniform,
    /// a_j(n) = k(2(j − n/2)/n) / n
    Kernel { kernel: KernelSpec },
    /// a_j(n) = θⱼ / Σᵢθᵢ with θⱼ a pure function of (seed, j)
    SelfNormalizedRandom { theta: ThetaDist, seed: u64 },
    /// 1/n for j ≤ ⌊2n/3⌋, −1/n otherwise
    MixedSignThirds,
    /// a_j(n) = n⁻¹ + n^{−(1+ε)}, ε ∈ (0, ½)
    PerturbedUniform { epsilon: f64 },
    /// Explicit rows; the row used for `n` is the one of length `n`.
    CustomTable { rows: Vec<Vec<f64>> },
}

/// A validated generator of weight rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeKind", into = "SchemeKind")]
pub struct WeightScheme {
    kind: SchemeKind,
}

impl TryFrom<SchemeKind> for WeightScheme {
    type Error = Error;

    fn try_from(kind: SchemeKind) -> Result<Self> {
        WeightScheme::new(kind)
    }
}

impl From<WeightScheme> for SchemeKind {
    fn from(s: WeightScheme) -> Self {
        s.kind
    }
}

/// Limits (s₁, s) of Σⱼ a_j(n) and n·max a_j(n), where known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitConstants {
    pub s1: f64,
    pub s: f64,
}

impl WeightScheme {
    pub fn new(kind: SchemeKind) -> Result<Self> {
        match &kind {
            SchemeKind::SelfNormalizedRandom { theta, .. } => theta.validate()?,
            SchemeKind::PerturbedUniform { epsilon } => {
                if !(*epsilon > 0.0 && *epsilon < 0.5) {
                    return Err(invalid(format!(
                        "perturbation exponent must lie in (0, ½), got {epsilon}"
                    )));
                }
            }
            SchemeKind::CustomTable { rows } => {
                if rows.is_empty() {
                    return Err(invalid("custom weight table has no rows"));
                }
                let mut lens: Vec<usize> = rows.iter().map(Vec::len).collect();
                if lens.contains(&0) {
                    return Err(invalid("custom weight table contains an empty row"));
                }
                lens.sort_unstable();
                lens.dedup();
                if lens.len() != rows.len() {
                    return Err(invalid(
                        "custom weight table has two rows of the same length",
                    ));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("custom weight table contains a non-finite entry"));
                }
            }
            _ => {}
        }
        Ok(Self { kind })
    }

    pub fn uniform() -> Self {
        Self {
            kind: SchemeKind::Uniform,
        }
    }

    pub fn kernel(kernel: KernelSpec) -> Self {
        Self {
            kind: SchemeKind::Kernel { kernel },
        }
    }

    pub fn self_normalized(theta: ThetaDist, seed: u64) -> Result<Self> {
        Self::new(SchemeKind::SelfNormalizedRandom { theta, seed })
    }

    pub fn mixed_sign_thirds() -> Self {
        Self {
            kind: SchemeKind::MixedSignThirds,
        }
    }

    pub fn perturbed_uniform(epsilon: f64) -> Result<Self> {
        Self::new(SchemeKind::PerturbedUniform { epsilon })
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn tag(&self) -> &'static str {
        match self.kind {
            SchemeKind::Uniform => "uniform",
            SchemeKind::Kernel { .. } => "kernel",
            SchemeKind::SelfNormalizedRandom { .. } => "self_normalized_random",
            SchemeKind::MixedSignThirds => "mixed_sign_thirds",
            SchemeKind::PerturbedUniform { .. } => "perturbed_uniform",
            SchemeKind::CustomTable { .. } => "custom_table",
        }
    }

    /// Same scheme with its θ stream re-keyed; other kinds are returned unchanged.
    pub fn with_theta_seed(&self, seed: u64) -> Self {
        match &self.kind {
            SchemeKind::SelfNormalizedRandom { theta, .. } => Self {
                kind: SchemeKind::SelfNormalizedRandom {
                    theta: *theta,
                    seed,
                },
            },
            _ => self.clone(),
        }
    }

    /// Whether every row this scheme can produce is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        match &self.kind {
            SchemeKind::MixedSignThirds => false,
            SchemeKind::CustomTable { rows } => rows.iter().flatten().all(|&v| v >= 0.0),
            _ => true,
        }
    }

    /// Closed-form (s₁, s) for the built-in kinds. For kernels the weights sum
    /// to a right-endpoint Riemann sum with spacing 2/n, so s₁ = ½∫k.
    pub fn limit_constants(&self) -> Option<LimitConstants> {
        match &self.kind {
            SchemeKind::Uniform | SchemeKind::PerturbedUniform { .. } => {
                Some(LimitConstants { s1: 1.0, s: 1.0 })
            }
            SchemeKind::Kernel { kernel } => Some(LimitConstants {
                s1: 0.5 * kernel.integral(),
                s: kernel.sup(),
            }),
            SchemeKind::SelfNormalizedRandom { theta, .. } => Some(LimitConstants {
                s1: 1.0,
                s: theta.ess_sup() / theta.mean(),
            }),
            SchemeKind::MixedSignThirds => Some(LimitConstants {
                s1: 1.0 / 3.0,
                s: 1.0,
            }),
            SchemeKind::CustomTable { .. } => None,
        }
    }

    /// The weight row for sample size `n`.
    pub fn generate(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(domain("weight rows need n ≥ 1"));
        }
        let nf = n as f64;
        Ok(match &self.kind {
            SchemeKind::Uniform => vec![1.0 / nf; n],
            SchemeKind::Kernel { kernel } => (1..=n)
                .map(|j| kernel.evaluate(2.0 * (j as f64 - nf / 2.0) / nf) / nf)
                .collect(),
            SchemeKind::SelfNormalizedRandom { theta, seed } => {
                let mut stream = StreamKey::new(*seed).stream(THETA_STREAM, 0);
                let thetas: Vec<f64> = (0..n).map(|_| theta.sample(stream.next_open01())).collect();
                normalize_thetas(theta, &thetas)
            }
            SchemeKind::MixedSignThirds => {
                let positive = (2 * n) / 3;
                (0..n)
                    .map(|j| if j < positive { 1.0 / nf } else { -1.0 / nf })
                    .collect()
            }
            SchemeKind::PerturbedUniform { epsilon } => {
                vec![1.0 / nf + nf.powf(-(1.0 + epsilon)); n]
            }
            SchemeKind::CustomTable { rows } => {
                rows.iter().find(|r| r.len() == n).cloned().ok_or_else(|| {
                    domain(format!("custom weight table has no row of length {n}"))
                })?
            }
        })
    }

    /// θⱼ for j = 1..=n from this scheme's stream.
    pub fn thetas(&self, n: usize) -> Option<Vec<f64>> {
        match &self.kind {
            SchemeKind::SelfNormalizedRandom { theta, seed } => {
                let mut stream = StreamKey::new(*seed).stream(THETA_STREAM, 0);
                Some((0..n).map(|_| theta.sample(stream.next_open01())).collect())
            }
            _ => None,
        }
    }

    fn grid_rows(&self, n_grid: &[usize]) -> Result<Vec<Vec<f64>>> {
        check_grid(n_grid)?;
        n_grid.iter().map(|&n| self.generate(n)).collect()
    }

    /// Condition B diagnostics over `n_grid`.
    pub fn assumption_b_report(&self, n_grid: &[usize], tol: f64) -> Result<AssumptionReport> {
        let rows = self.grid_rows(n_grid)?;
        Ok(b_report(n_grid, &rows, tol))
    }

    /// Condition A diagnostics for ν = 1..=nu_max over `n_grid`, together with
    /// the condition B fields.
    pub fn assumption_a_report(
        &self,
        nu_max: u32,
        n_grid: &[usize],
        tol: f64,
    ) -> Result<AssumptionReport> {
        if nu_max < 3 {
            return Err(domain(format!("nu_max must be at least 3, got {nu_max}")));
        }
        let rows = self.grid_rows(n_grid)?;
        let mut report = b_report(n_grid, &rows, tol);
        report.a = Some(a_diagnostics(n_grid, &rows, nu_max, tol)?);
        Ok(report)
    }

    /// Runs both reports on a nonnegative scheme and returns (a_pass, b_pass).
    pub fn implication_check(
        &self,
        nu_max: u32,
        n_grid: &[usize],
        tol: f64,
    ) -> Result<(bool, bool)> {
        if !self.is_nonnegative() || self.grid_rows(n_grid)?.iter().flatten().any(|&v| v < 0.0) {
            return Err(domain("implication check needs nonnegative weights"));
        }
        let report = self.assumption_a_report(nu_max, n_grid, tol)?;
        Ok((report.a_pass(), report.b_pass))
    }
}

/// Self-normalized row θⱼ/Σθᵢ; a degenerate θ gives exactly 1/n.
pub(crate) fn normalize_thetas(theta: &ThetaDist, thetas: &[f64]) -> Vec<f64> {
    let n = thetas.len();
    if theta.is_degenerate() {
        return vec![1.0 / n as f64; n];
    }
    let total: f64 = thetas.iter().sum();
    thetas.iter().map(|t| t / total).collect()
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.len() < 3 {
        return Err(domain("the n-grid needs at least three points"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] == 0 {
        return Err(domain(
            "the n-grid must be strictly increasing and positive",
        ));
    }
    if *n_grid.last().unwrap() < 1000 {
        return Err(domain("the largest grid point must be at least 1000"));
    }
    Ok(())
}

/// Finite-grid convergence verdict for a sequence indexed by the n-grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    /// Estimated limit: power-law extrapolation when the fit is valid, else the last value.
    pub limit: f64,
    /// Fitted rate γ in `L + C·n^{−γ}`, when the last three points admit one.
    pub exponent: Option<f64>,
    /// Spread of the last three values, relative to max(1, |last|).
    pub spread: f64,
    pub converged: bool,
}

pub fn analyse_convergence(ns: &[usize], vs: &[f64], tol: f64) -> Convergence {
    let k = vs.len();
    assert!(k >= 3 && ns.len() == k);
    let (n1, n2, n3) = (ns[k - 3] as f64, ns[k - 2] as f64, ns[k - 1] as f64);
    let (v1, v2, v3) = (vs[k - 3], vs[k - 2], vs[k - 1]);
    let hi = v1.max(v2).max(v3);
    let lo = v1.min(v2).min(v3);
    let spread = (hi - lo) / v3.abs().max(1.0);
    let (d1, d2) = (v2 - v1, v3 - v2);
    let exponent = if d1 != 0.0 && d2 != 0.0 && d1.signum() == d2.signum() {
        fit_power_rate(n1, n2, n3, d2 / d1)
    } else {
        None
    };
    let exponent = exponent.filter(|&g| g >= MIN_RATE);
    let limit = match exponent {
        Some(g) => {
            let c = d2 / (n3.powf(-g) - n2.powf(-g));
            v3 - c * n3.powf(-g)
        }
        None => v3,
    };
    Convergence {
        limit,
        exponent,
        spread,
        converged: spread <= tol || exponent.is_some(),
    }
}

/// Solve (n₂^{−γ} − n₃^{−γ})/(n₁^{−γ} − n₂^{−γ}) = ratio for γ > 0.
fn fit_power_rate(n1: f64, n2: f64, n3: f64, ratio: f64) -> Option<f64> {
    let model = |g: f64| (n2.powf(-g) - n3.powf(-g)) / (n1.powf(-g) - n2.powf(-g));
    let (mut lo, mut hi) = (1e-6, 60.0);
    if !(ratio < model(lo) && ratio > model(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model(mid) > ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Condition A part of an [`AssumptionReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionADiagnostics {
    pub nu_max: u32,
    /// s_ν for ν = 1..=nu_max.
    pub s_nu_table: Vec<f64>,
    /// `(ν, n, R(ν, n))` triples.
    pub r_table: Vec<(u32, usize, f64)>,
    /// max_k D_ν(n_k), the empirical r_ν.
    pub r_nu: Vec<f64>,
    /// Growth exponent of D_ν along the grid (None when D is below round-off).
    pub envelope_growth: Vec<Option<f64>>,
    /// The finite-grid A.2 surrogate verdict.
    pub envelope_flag: bool,
    pub a1_pass: bool,
    pub a2_pass: bool,
    pub diagnostics: Vec<String>,
}

/// Numeric diagnostics for the weight conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub n_grid: Vec<usize>,
    pub s1_sequence: Vec<f64>,
    pub s1_estimate: f64,
    pub namax_sequence: Vec<f64>,
    pub s_estimate: f64,
    pub s1_convergence: Convergence,
    pub namax_convergence: Convergence,
    pub b_pass: bool,
    pub b_diagnostics: Vec<String>,
    pub a: Option<AssumptionADiagnostics>,
}

impl AssumptionReport {
    pub fn a1_pass(&self) -> bool {
        self.a.as_ref().is_some_and(|a| a.a1_pass)
    }

    pub fn a2_pass(&self) -> bool {
        self.a.as_ref().is_some_and(|a| a.a2_pass)
    }

    pub fn a_pass(&self) -> bool {
        self.a1_pass() && self.a2_pass()
    }
}

fn b_report(n_grid: &[usize], rows: &[Vec<f64>], tol: f64) -> AssumptionReport {
    let s1_sequence: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let namax_sequence: Vec<f64> = n_grid
        .iter()
        .zip(rows)
        .map(|(&n, r)| n as f64 * r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let s1c = analyse_convergence(n_grid, &s1_sequence, tol);
    let sc = analyse_convergence(n_grid, &namax_sequence, tol);
    let mut diag = Vec::new();
    if !s1c.converged {
        diag.push(format!(
            "Σa_j(n) does not settle: spread {:.3e}, no power-law fit",
            s1c.spread
        ));
    }
    if !sc.converged {
        diag.push(format!(
            "n·a_max(n) does not settle: spread {:.3e}, no power-law fit",
            sc.spread
        ));
    }
    if s1c.limit.abs() <= 1e-12 {
        diag.push("Σa_j(n) tends to zero; s₁ must be nonzero".to_string());
    }
    let b_pass = diag.is_empty();
    AssumptionReport {
        n_grid: n_grid.to_vec(),
        s1_sequence,
        s1_estimate: s1c.limit,
        namax_sequence,
        s_estimate: sc.limit,
        s1_convergence: s1c,
        namax_convergence: sc,
        b_pass,
        b_diagnostics: diag,
        a: None,
    }
}

/// v_ν(n) = n^{ν−1}·Σⱼ a_j^ν, computed as Σⱼ (n·a_j)^ν / n.
fn power_sum(row: &[f64], nu: u32) -> f64 {
    let n = row.len() as f64;
    row.iter().map(|&a| (n * a).powi(nu as i32)).sum::<f64>() / n
}

fn a_diagnostics(
    n_grid: &[usize],
    rows: &[Vec<f64>],
    nu_max: u32,
    tol: f64,
) -> Result<AssumptionADiagnostics> {
    let mut s_nu_table = Vec::new();
    let mut r_table = Vec::new();
    let mut r_nu = Vec::new();
    let mut envelope_growth = Vec::new();
    let mut diagnostics = Vec::new();
    let mut a1_pass = true;
    let mut bounded = true;
    for nu in 1..=nu_max {
        let vs: Vec<f64> = rows.iter().map(|r| power_sum(r, nu)).collect();
        let conv = analyse_convergence(n_grid, &vs, tol);
        let s_nu = conv.limit;
        if s_nu.abs() < DEGENERATE_MOMENT {
            return Err(Error::DegenerateScheme(format!(
                "s_{nu} estimate {s_nu:e} is numerically zero"
            )));
        }
        s_nu_table.push(s_nu);
        if !conv.converged {
            a1_pass = false;
            diagnostics.push(format!(
                "ν = {nu}: n^(ν−1)Σa^ν does not settle (spread {:.3e})",
                conv.spread
            ));
        }
        for (&n, &v) in n_grid.iter().zip(&vs) {
            r_table.push((nu, n, v / s_nu));
        }
        let scale = s_nu.abs() * (1.0 + tol).powi(nu as i32);
        let d: Vec<f64> = vs
            .windows(2)
            .zip(n_grid)
            .map(|(w, &n)| n as f64 * (w[1] - w[0]).abs() / scale)
            .collect();
        let r_max = d.iter().cloned().fold(0.0, f64::max);
        r_nu.push(r_max);
        let (first, last) = (d[0], d[d.len() - 1]);
        let growth = if last <= ROUNDOFF_FLOOR {
            None
        } else if first <= 0.0 {
            Some(f64::INFINITY)
        } else {
            let span = (n_grid[n_grid.len() - 2] as f64 / n_grid[0] as f64).ln();
            Some((last / first).ln() / span)
        };
        if let Some(g) = growth {
            if g > MAX_ENVELOPE_GROWTH {
                bounded = false;
                diagnostics.push(format!(
                    "ν = {nu}: n·|ΔR| grows like n^{g:.3} along the grid; no O(1/n) envelope"
                ));
            }
        }
        envelope_growth.push(growth);
    }
    // r_ν^{1/ν} must not climb above 1 + tol
    let roots: Vec<f64> = r_nu
        .iter()
        .enumerate()
        .map(|(i, r)| r.powf(1.0 / (i + 1) as f64))
        .collect();
    let mut subexponential = true;
    for i in 1..roots.len() {
        if roots[i] > (1.0 + tol).max(roots[i - 1]) {
            subexponential = false;
            diagnostics.push(format!(
                "r_ν^(1/ν) increases at ν = {}: {:.4} after {:.4}",
                i + 1,
                roots[i],
                roots[i - 1]
            ));
        }
    }
    let a2_pass = bounded && subexponential;
    Ok(AssumptionADiagnostics {
        nu_max,
        s_nu_table,
        r_table,
        r_nu,
        envelope_growth,
        envelope_flag: a2_pass,
        a1_pass,
        a2_pass,
        diagnostics,
    })
}

/// Shipped schemes used by the implication check and the self-test.
pub fn catalogue() -> Vec<(&'static str, WeightScheme)> {
    let trapezoid = KernelSpec::new(KernelShape::PiecewiseTable {
        nodes: vec![(-1.0, 0.0), (-0.5, 2.0 / 3.0), (0.5, 2.0 / 3.0), (1.0, 0.0)],
    })
    .expect("trapezoid kernel integrates to one");
    vec![
        ("uniform", WeightScheme::uniform()),
        (
            "kernel_epanechnikov",
            WeightScheme::kernel(KernelSpec::epanechnikov()),
        ),
        (
            "kernel_uniform",
            WeightScheme::kernel(KernelSpec::uniform()),
        ),
        (
            "kernel_triangular",
            WeightScheme::kernel(KernelSpec::triangular()),
        ),
        (
            "kernel_quartic",
            WeightScheme::kernel(KernelSpec::quartic()),
        ),
        ("kernel_trapezoid_table", WeightScheme::kernel(trapezoid)),
        (
            "perturbed_uniform_0.25",
            WeightScheme::perturbed_uniform(0.25).unwrap(),
        ),
        (
            "perturbed_uniform_0.4",
            WeightScheme::perturbed_uniform(0.4).unwrap(),
        ),
        (
            "self_normalized_uniform",
            WeightScheme::self_normalized(ThetaDist::Uniform { lo: 0.0, hi: 1.0 }, 7).unwrap(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn generate_examples() {
        assert_eq!(WeightScheme::uniform().generate(4).unwrap(), vec![0.25; 4]);
        let k = WeightScheme::kernel(KernelSpec::epanechnikov());
        assert_eq!(k.generate(2).unwrap(), vec![0.375, 0.0]);
        let m = WeightScheme::mixed_sign_thirds().generate(6).unwrap();
        let s = 1.0 / 6.0;
        assert_eq!(m, vec![s, s, s, s, -s, -s]);
        assert!(matches!(
            WeightScheme::uniform().generate(0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mixed_sign_floor_convention() {
        // ⌊2n/3⌋ positive entries
        for n in 1..40 {
            let row = WeightScheme::mixed_sign_thirds().generate(n).unwrap();
            assert_eq!(row.iter().filter(|&&a| a > 0.0).count(), (2 * n) / 3);
        }
    }

    #[test]
    fn kernel_sup_examples() {
        assert_eq!(kernel_sup(&KernelSpec::epanechnikov()), 0.75);
        assert_eq!(kernel_sup(&KernelSpec::uniform()), 0.5);
        assert_eq!(kernel_sup(&KernelSpec::triangular()), 1.0);
    }

    #[test]
    fn table_kernel_sup_by_scan() {
        // tent with its apex off the scan grid
        let apex = 0.0;
        let k = KernelSpec::new(KernelShape::PiecewiseTable {
            nodes: vec![(-1.0, 0.0), (apex, 1.0), (1.0, 0.0)],
        })
        .unwrap();
        assert_relative_eq!(kernel_sup(&k), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn kernel_validation() {
        let lopsided = KernelShape::PiecewiseTable {
            nodes: vec![(-1.0, 0.0), (-0.5, 1.0), (1.0, 0.5)],
        };
        assert!(KernelSpec::new(lopsided).is_err());
        let heavy = KernelShape::PiecewiseTable {
            nodes: vec![(-1.0, 1.0), (1.0, 1.0)],
        };
        assert!(KernelSpec::new(heavy).is_err());
        assert_relative_eq!(KernelSpec::quartic().integral(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn theta_rows_are_reproducible_and_prefix_stable() {
        let s = WeightScheme::self_normalized(ThetaDist::Uniform { lo: 0.0, hi: 1.0 }, 3).unwrap();
        let a = s.thetas(10).unwrap();
        let b = s.thetas(20).unwrap();
        assert_eq!(a[..], b[..10]);
        let row = s.generate(1000).unwrap();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn degenerate_theta_is_uniform() {
        let s = WeightScheme::self_normalized(ThetaDist::Degenerate { value: 0.3 }, 1).unwrap();
        assert_eq!(
            s.generate(7).unwrap(),
            WeightScheme::uniform().generate(7).unwrap()
        );
    }

    #[test]
    fn rejects_unbounded_theta() {
        let bad = ThetaDist::Uniform {
            lo: 0.0,
            hi: f64::INFINITY,
        };
        assert!(WeightScheme::self_normalized(bad, 1).is_err());
        let json = r#"{"kind":"self_normalized_random","theta":{"dist":"uniform","lo":0.0,"hi":1e999},"seed":1}"#;
        assert!(serde_json::from_str::<WeightScheme>(json).is_err());
    }

    #[test]
    fn custom_table_lookup() {
        let s = WeightScheme::new(SchemeKind::CustomTable {
            rows: vec![vec![1.0], vec![0.5, 0.5]],
        })
        .unwrap();
        assert_eq!(s.generate(2).unwrap(), vec![0.5, 0.5]);
        assert!(s.generate(3).is_err());
        assert!(WeightScheme::new(SchemeKind::CustomTable {
            rows: vec![vec![1.0], vec![2.0]]
        })
        .is_err());
    }

    #[test]
    fn convergence_extrapolates_power_laws() {
        let ns = [1000, 2000, 4000, 8000];
        let vs: Vec<f64> = ns
            .iter()
            .map(|&n| 3.0 + 2.0 * (n as f64).powf(-0.3))
            .collect();
        let c = analyse_convergence(&ns, &vs, 1e-6);
        assert!(c.converged);
        assert_relative_eq!(c.limit, 3.0, max_relative = 1e-9);
        assert_relative_eq!(c.exponent.unwrap(), 0.3, max_relative = 1e-6);
        // log growth never settles
        let logs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        assert!(!analyse_convergence(&ns, &logs, 1e-2).converged);
    }

    #[test]
    fn uniform_reports() {
        let grid = [10, 100, 1000];
        let r = WeightScheme::uniform()
            .assumption_a_report(5, &grid, DEFAULT_TOL)
            .unwrap();
        assert!(r.b_pass && r.a1_pass() && r.a2_pass());
        assert!((r.s1_estimate - 1.0).abs() < 1e-12);
        assert!((r.s_estimate - 1.0).abs() < 1e-12);
        let a = r.a.unwrap();
        assert!(a.s_nu_table.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert!(a.r_table.iter().all(|&(_, _, v)| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn report_preconditions() {
        let u = WeightScheme::uniform();
        assert!(u.assumption_b_report(&[100, 1000], 0.01).is_err());
        assert!(u.assumption_b_report(&[10, 20, 30], 0.01).is_err());
        assert!(u.assumption_b_report(&[10, 5, 1000], 0.01).is_err());
        assert!(u.assumption_a_report(2, &DEFAULT_GRID, 0.01).is_err());
    }

    #[test]
    fn degenerate_scheme_error() {
        let rows: Vec<Vec<f64>> = [1000usize, 2000, 4000]
            .iter()
            .map(|&n| vec![0.0; n])
            .collect();
        let s = WeightScheme::new(SchemeKind::CustomTable { rows }).unwrap();
        assert!(matches!(
            s.assumption_a_report(3, &[1000, 2000, 4000], 0.01),
            Err(Error::DegenerateScheme(_))
        ));
    }

    #[test]
    fn growing_max_fails_b() {
        // n·a_max(n) = √n diverges
        let grid = [1000usize, 4000, 16000];
        let rows: Vec<Vec<f64>> = grid
            .iter()
            .map(|&n| {
                let nf = n as f64;
                let mut row = vec![(1.0 - nf.powf(-0.5)) / (nf - 1.0); n];
                row[0] = nf.powf(-0.5);
                row
            })
            .collect();
        let s = WeightScheme::new(SchemeKind::CustomTable { rows }).unwrap();
        let r = s.assumption_b_report(&grid, DEFAULT_TOL).unwrap();
        assert!(!r.b_pass, "{:?}", r.b_diagnostics);
    }
}
