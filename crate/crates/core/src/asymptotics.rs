//! Rate functions, exact finite-level hole probabilities and the limit
//! constants of their logarithmic asymptotics.

use crate::dist::{IncrementLaw, MittagLefflerLaw, RandomStream};
use crate::error::{Error, Result};
use crate::lattice::{default_horizon, ChernoffBound, SurvivalTableBuilder};
use crate::quad::{integrate, integrate_to_infinity, QuadOptions};
use crate::special::{ln_gamma_pq, riemann_zeta};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

/// Maximizer and value of `s ↦ sx − log E e^{sξ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreValue {
    pub value: f64,
    pub argmax: f64,
    /// The supremum is approached at the edge of the moment domain.
    pub at_boundary: bool,
}

/// Legendre transform of an increment law.
#[derive(Debug, Clone)]
pub struct RateFunction {
    law: IncrementLaw,
    s_tol: f64,
    sup_j: f64,
}

impl RateFunction {
    pub fn new(law: &IncrementLaw) -> Self {
        RateFunction {
            law: *law,
            s_tol: 1e-13,
            sup_j: law.mgf_domain_sup(),
        }
    }

    /// Relative tolerance on the optimizing `s`.
    pub fn with_tolerance(mut self, s_tol: f64) -> Self {
        self.s_tol = s_tol;
        self
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    /// `sup J`, the right end of the exponential-moment domain.
    pub fn sup_j(&self) -> f64 {
        self.sup_j
    }

    /// Cramér transform `I(x) = sup_s (sx − log E e^{sξ})` over all `s` with a
    /// finite moment generating function.
    pub fn legendre(&self, x: f64) -> Result<f64> {
        Ok(self.legendre_detail(x)?.value)
    }

    /// The transform with `s` restricted to `J ⊆ [0, ∞)`; equals
    /// [`Self::legendre`] for `x ≥ μ` and vanishes below the mean.
    pub fn legendre_upper(&self, x: f64) -> Result<f64> {
        if x <= self.law.mean() {
            if !(x > 0.0) {
                return Err(Error::Domain(format!("rate function needs x > 0, got {x}")));
            }
            return Ok(0.0);
        }
        self.legendre(x)
    }

    pub fn legendre_detail(&self, x: f64) -> Result<LegendreValue> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("rate function needs finite x > 0, got {x}")));
        }
        let law = &self.law;
        let mu = law.mean();
        let g = |s: f64| -> Result<f64> { Ok(s * x - law.log_mgf(s)?) };
        if x == mu {
            return Ok(LegendreValue { value: 0.0, argmax: 0.0, at_boundary: false });
        }
        let f = |s: f64| -> Result<f64> { Ok(law.tilted_mean(s)? - x) };
        if x > mu {
            if self.sup_j == 0.0 {
                return Ok(LegendreValue { value: 0.0, argmax: 0.0, at_boundary: true });
            }
            let mut hi = if self.sup_j.is_finite() { self.sup_j * 0.5 } else { 1.0 / mu };
            let mut lo = 0.0;
            loop {
                if f(hi)? >= 0.0 {
                    break;
                }
                lo = hi;
                if self.sup_j.is_finite() {
                    // approach the boundary geometrically
                    let gap = self.sup_j - hi;
                    if gap <= self.sup_j * 1e-15 {
                        return Ok(LegendreValue { value: g(hi)?, argmax: hi, at_boundary: true });
                    }
                    hi = self.sup_j - gap * 0.125;
                } else {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return Err(Error::Convergence("tilted mean stays below x".into()));
                    }
                }
            }
            let s = find_root(f, lo, hi, self.s_tol)?;
            Ok(LegendreValue { value: g(s)?.max(0.0), argmax: s, at_boundary: false })
        } else {
            if x <= essential_inf(law) {
                return Ok(LegendreValue {
                    value: f64::INFINITY,
                    argmax: f64::NEG_INFINITY,
                    at_boundary: true,
                });
            }
            let mut lo = -1.0 / mu.min(1e300);
            if !lo.is_finite() || lo == 0.0 {
                lo = -1.0;
            }
            let mut hi = 0.0;
            while f(lo)? > 0.0 {
                hi = lo;
                lo *= 2.0;
                if lo < -1e300 {
                    return Err(Error::Convergence("tilted mean stays above x".into()));
                }
            }
            let s = find_root(f, lo, hi, self.s_tol)?;
            Ok(LegendreValue { value: g(s)?.max(0.0), argmax: s, at_boundary: false })
        }
    }
}

fn essential_inf(law: &IncrementLaw) -> f64 {
    match law {
        IncrementLaw::Pareto { xm, .. } => *xm,
        _ => 0.0,
    }
}

/// Root of an increasing function on `[a, b]` with `f(a) ≤ 0 ≤ f(b)`, by
/// Illinois false position safeguarded with bisection.
fn find_root<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    for it in 0..400 {
        let width = b - a;
        if width.abs() <= rel_tol * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let mut c = if fa.is_finite() && fb.is_finite() { (a * fb - b * fa) / (fb - fa) } else { f64::NAN };
        // every fourth step bisects, which bounds the iteration count
        if !(c > a.min(b) && c < a.max(b)) || it % 4 == 3 {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// Families for which exponential moments exist and `∫₀^{1/μ} y I(1/y) dy < ∞`.
fn check_light_tail(law: &IncrementLaw) -> Result<()> {
    match law {
        IncrementLaw::Exponential { .. } | IncrementLaw::Gamma { .. } => Ok(()),
        IncrementLaw::Weibull { alpha, .. } if *alpha >= 1.0 && *alpha < 2.0 => Ok(()),
        IncrementLaw::Weibull { alpha, .. } if *alpha >= 2.0 => Err(Error::Precondition(format!(
            "{law}: the integral of y·I(1/y) over (0, 1/μ] diverges for Weibull shape {alpha} ≥ 2"
        ))),
        _ => Err(Error::Precondition(format!(
            "{law}: E exp(sξ) is infinite for every s > 0 (no exponential moment)"
        ))),
    }
}

/// `∫₀^{1/μ} y I(1/y) dy`, the limit of `Λ(t)/t²` for light-tailed laws.
pub fn rate_light(rf: &RateFunction) -> Result<f64> {
    let law = rf.law();
    check_light_tail(law)?;
    let mu = law.mean();
    // y = 1/x turns the integral into ∫_μ^∞ I(x) x⁻³ dx
    let mut failure = None;
    let r = integrate_to_infinity(
        |x| match rf.legendre(x) {
            Ok(v) => v / (x * x * x),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        mu,
        mu,
        QuadOptions::new(1e-13, 1e-9),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value)
}

/// Limit regime of `Λ(t) = −log P{min_n Ŝ_n > t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HoleCase {
    /// Light tails: `Λ(t)/t² → ∫₀^{1/μ} y I(1/y) dy`.
    #[serde(rename = "min-a")]
    MinA,
    /// `−log P{ξ>t} ∼ c t²ℓ(t)`: `Λ(t)/(t²ℓ*(t)) → c`.
    #[serde(rename = "min-b1")]
    MinB1,
    /// `−log P{ξ>t} ∼ c t^αℓ(t)`, `α > 2`: `Λ(t)/(t^αℓ(t)) → cζ(α−1)`.
    #[serde(rename = "min-b2")]
    MinB2,
    /// Regularly varying tail of index `α ∈ (0,1)`: `Λ(t)P{ξ>t} → ∫₀^∞ −log P{W_α^←(1) ≤ x} dx`.
    #[serde(rename = "heavy-a")]
    HeavyA,
    /// Regularly varying tail of index `α > 1`: `Λ(t)/(t log t) → (α−1)/μ`.
    #[serde(rename = "heavy-b")]
    HeavyB,
    /// `P{ξ>t} = e^{−t^αℓ(t)}`, `α ∈ (0,1)`: `Λ(t)/(t^{α+1}ℓ(t)) → 1/(μ(α+1))`.
    #[serde(rename = "semi")]
    Semi,
}

impl HoleCase {
    pub const ALL: [HoleCase; 6] = [
        HoleCase::MinA,
        HoleCase::MinB1,
        HoleCase::MinB2,
        HoleCase::HeavyA,
        HoleCase::HeavyB,
        HoleCase::Semi,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            HoleCase::MinA => "min-a",
            HoleCase::MinB1 => "min-b1",
            HoleCase::MinB2 => "min-b2",
            HoleCase::HeavyA => "heavy-a",
            HoleCase::HeavyB => "heavy-b",
            HoleCase::Semi => "semi",
        }
    }

    /// Short statement of the limit, used as the comparator's source tag.
    pub fn reference(&self) -> &'static str {
        match self {
            HoleCase::MinA => "light tails: lim Λ(t)/t² = ∫₀^{1/μ} y I(1/y) dy",
            HoleCase::MinB1 => "log-tail index 2: lim Λ(t)/(t² ℓ*(t)) = c",
            HoleCase::MinB2 => "log-tail index α > 2: lim Λ(t)/(t^α ℓ(t)) = c ζ(α−1)",
            HoleCase::HeavyA => "regular variation, α < 1: lim Λ(t) P{ξ>t} = ∫₀^∞ −log P{W_α^←(1) ≤ x} dx",
            HoleCase::HeavyB => "regular variation, α > 1: lim Λ(t)/(t log t) = (α−1)/μ",
            HoleCase::Semi => "semiexponential tails: lim Λ(t)/(t^{α+1} ℓ(t)) = 1/(μ(α+1))",
        }
    }

    /// The regime a law belongs to, when it is one of the supported ones.
    pub fn for_law(law: &IncrementLaw) -> Option<HoleCase> {
        match *law {
            IncrementLaw::Exponential { .. } | IncrementLaw::Gamma { .. } => Some(HoleCase::MinA),
            IncrementLaw::Weibull { alpha, .. } if alpha < 1.0 => Some(HoleCase::Semi),
            IncrementLaw::Weibull { alpha, .. } if alpha < 2.0 => Some(HoleCase::MinA),
            IncrementLaw::Weibull { alpha, .. } if alpha == 2.0 => Some(HoleCase::MinB1),
            IncrementLaw::Weibull { .. } => Some(HoleCase::MinB2),
            IncrementLaw::Pareto { alpha, .. } if alpha < 1.0 => Some(HoleCase::HeavyA),
            IncrementLaw::Pareto { alpha, .. } if alpha > 1.0 => Some(HoleCase::HeavyB),
            IncrementLaw::Pareto { .. } => None,
        }
    }

    /// Normalization `norm(t)` with `Λ(t)/norm(t)` converging.
    pub fn normalization(&self, law: &IncrementLaw, t: f64) -> Result<f64> {
        self.check(law)?;
        Ok(match (*self, *law) {
            (HoleCase::MinA, _) => t * t,
            (HoleCase::MinB1, _) => t * t * ell_star(t, &SlowlyVarying::Constant(1.0))?,
            (HoleCase::MinB2, IncrementLaw::Weibull { alpha, .. }) => t.powf(alpha),
            (HoleCase::HeavyA, _) => 1.0 / law.survival(t),
            (HoleCase::HeavyB, _) => t * t.ln(),
            (HoleCase::Semi, IncrementLaw::Weibull { alpha, c }) => c * t.powf(alpha + 1.0),
            _ => unreachable!("checked above"),
        })
    }

    /// Fails unless the law is in this regime.
    pub fn check(&self, law: &IncrementLaw) -> Result<()> {
        if HoleCase::for_law(law) == Some(*self) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "case {} does not match the tail regime of {law} ({})",
                self.tag(),
                HoleCase::for_law(law).map_or("unsupported", |c| c.tag())
            )))
        }
    }
}

impl fmt::Display for HoleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for HoleCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        HoleCase::ALL
            .iter()
            .find(|c| c.tag() == s.trim())
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown case '{s}' (expected one of min-a, min-b1, min-b2, heavy-a, heavy-b, semi)")))
    }
}

/// Parameters of the closed-form limit constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantCase {
    /// `cζ(α−1)`, `α > 2`.
    MinB2 { c: f64, alpha: f64 },
    /// `(α−1)/μ`, `α > 1`.
    HeavyB { alpha: f64, mu: f64 },
    /// `1/(μ(α+1))`, `α ∈ (0,1)`.
    Semi { alpha: f64, mu: f64 },
}

impl ConstantCase {
    /// Reads the parameters off a law in the matching regime.
    pub fn from_law(case: HoleCase, law: &IncrementLaw) -> Result<Self> {
        case.check(law)?;
        match (case, *law) {
            (HoleCase::MinB2, IncrementLaw::Weibull { alpha, c }) => Ok(ConstantCase::MinB2 { c, alpha }),
            (HoleCase::HeavyB, IncrementLaw::Pareto { alpha, .. }) => Ok(ConstantCase::HeavyB { alpha, mu: law.mean() }),
            (HoleCase::Semi, IncrementLaw::Weibull { alpha, .. }) => Ok(ConstantCase::Semi { alpha, mu: law.mean() }),
            _ => Err(Error::Unsupported(format!("case {case} has no closed-form constant"))),
        }
    }
}

/// Closed-form limit constants.
pub fn closed_form_constant(case: ConstantCase) -> Result<f64> {
    match case {
        ConstantCase::MinB2 { c, alpha } => {
            if !(alpha > 2.0) || !(c > 0.0) {
                return Err(Error::Domain(format!("cζ(α−1) needs α > 2 and c > 0, got α = {alpha}, c = {c}")));
            }
            Ok(c * riemann_zeta(alpha - 1.0)?)
        }
        ConstantCase::HeavyB { alpha, mu } => {
            if !(alpha > 1.0) || !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Domain(format!("(α−1)/μ needs α > 1 and finite μ, got α = {alpha}, μ = {mu}")));
            }
            Ok((alpha - 1.0) / mu)
        }
        ConstantCase::Semi { alpha, mu } => {
            if !(alpha > 0.0 && alpha < 1.0) || !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Domain(format!("1/(μ(α+1)) needs α ∈ (0,1) and finite μ, got α = {alpha}, μ = {mu}")));
            }
            Ok(1.0 / (mu * (alpha + 1.0)))
        }
    }
}

/// Slowly varying functions accepted by [`ell_star`].
#[derive(Debug, Clone, Copy)]
pub enum SlowlyVarying {
    Constant(f64),
    /// `c (log y)^β`, `β > −1`.
    LogPower { c: f64, beta: f64 },
    Custom(fn(f64) -> f64),
}

impl SlowlyVarying {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            SlowlyVarying::Constant(c) => c,
            SlowlyVarying::LogPower { c, beta } => c * y.ln().powf(beta),
            SlowlyVarying::Custom(f) => f(y),
        }
    }
}

/// `ℓ*(t) = ∫₁^t y⁻¹ ℓ(y) dy`.
pub fn ell_star(t: f64, ell: &SlowlyVarying) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("ℓ* needs t ≥ 1, got {t}")));
    }
    let lt = t.ln();
    match *ell {
        SlowlyVarying::Constant(c) => Ok(c * lt),
        SlowlyVarying::LogPower { c, beta } => {
            if !(beta > -1.0) {
                return Err(Error::Domain(format!("ℓ = c(log y)^β needs β > −1 for ℓ* to exist, got {beta}")));
            }
            Ok(c * lt.powf(beta + 1.0) / (beta + 1.0))
        }
        SlowlyVarying::Custom(f) => {
            if lt == 0.0 {
                return Ok(0.0);
            }
            // y = e^w
            Ok(integrate(|w| f(w.exp()), 0.0, lt, QuadOptions::new(1e-12, 1e-10))?.value)
        }
    }
}

/// Monte Carlo estimate of `∫₀^∞ −log P{W_α^←(1) ≤ x} dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeavyAEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Analytic contribution of `(0, x_min]`.
    pub head: f64,
    /// Empirical integral over `[x_min, x_max]`.
    pub body: f64,
    /// Estimate of the contribution beyond `x_max` (an upper bound in expectation).
    pub tail: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub reps: usize,
}

/// Resolution settings for [`rate_heavy_a_with`].
#[derive(Debug, Clone, Copy)]
pub struct HeavyAOptions {
    pub x_min: f64,
    /// Number of sample points kept beyond `x_max`.
    pub tail_count: usize,
    pub batches: usize,
}

impl Default for HeavyAOptions {
    fn default() -> Self {
        HeavyAOptions { x_min: 1e-3, tail_count: 10, batches: 20 }
    }
}

/// Estimate from sorted draws; returns `(head, body, tail, x_min, x_max)`.
///
/// Near zero, `P{W^←(1) ≤ x} = P{W(x) > 1} = P{W(1) > x^{−1/α}}`, and the
/// subordinator's Lévy measure `ν(y, ∞) = y^{−α}` gives `P{W(1) > y} ∼ y^{−α}`,
/// so `F(x) ∼ x` and `∫₀^{x_min} −log F ≈ x_min(1 − log x_min)`. Beyond
/// `x_max`, `−log F ≤ (1 − F)/F`, integrated as `E(X − x_max)₊ / F(x_max)`.
fn heavy_a_from_sorted(xs: &[f64], opts: &HeavyAOptions) -> Result<(f64, f64, f64, f64, f64)> {
    let m = xs.len();
    let k = opts.tail_count.max(1);
    if m < 2 * k + 10 {
        return Err(Error::Domain(format!("need at least {} draws, got {m}", 2 * k + 10)));
    }
    let below = xs.partition_point(|&x| x <= opts.x_min);
    let x_min = if below >= 10 { opts.x_min } else { xs[9] };
    let x_max = xs[m - 1 - k];
    let head = x_min * (1.0 - x_min.ln());
    let mut body = 0.0;
    let mut i = xs.partition_point(|&x| x <= x_min);
    let mut left = x_min;
    while left < x_max {
        // F̂ is constant (= i/m) on [left, xs[i])
        let right = xs[i].min(x_max);
        body += -(i as f64 / m as f64).ln() * (right - left);
        left = right;
        while i < m && xs[i] <= left {
            i += 1;
        }
    }
    let f_max = xs.partition_point(|&x| x <= x_max) as f64 / m as f64;
    let excess: f64 = xs[m - k..].iter().map(|&x| (x - x_max).max(0.0)).sum::<f64>() / m as f64;
    let tail = excess / f_max;
    Ok((head, body, tail, x_min, x_max))
}

/// `∫₀^∞ −log P{W_α^←(1) ≤ x} dx` from `reps` Mittag-Leffler draws.
pub fn rate_heavy_a(alpha: f64, reps: usize, stream: &mut RandomStream) -> Result<HeavyAEstimate> {
    rate_heavy_a_with(alpha, reps, stream, HeavyAOptions::default())
}

pub fn rate_heavy_a_with(alpha: f64, reps: usize, stream: &mut RandomStream, opts: HeavyAOptions) -> Result<HeavyAEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("α must lie in (0, 1), got {alpha}")));
    }
    let nb = opts.batches.max(2);
    let per = reps / nb;
    if per < 2 * opts.tail_count + 10 {
        return Err(Error::Domain(format!("{reps} draws are too few for {nb} batches")));
    }
    let ml = MittagLefflerLaw::new(alpha)?;
    let mut all: Vec<f64> = (0..per * nb).map(|_| ml.sample(stream)).collect();
    let mut batch_est = Vec::with_capacity(nb);
    for b in 0..nb {
        let mut chunk = all[b * per..(b + 1) * per].to_vec();
        chunk.sort_by(f64::total_cmp);
        let (h, body, tail, _, _) = heavy_a_from_sorted(&chunk, &opts)?;
        batch_est.push(h + body + tail);
    }
    all.sort_by(f64::total_cmp);
    let (head, body, tail, x_min, x_max) = heavy_a_from_sorted(&all, &opts)?;
    let mean_b = batch_est.iter().sum::<f64>() / nb as f64;
    let var_b = batch_est.iter().map(|v| (v - mean_b).powi(2)).sum::<f64>() / (nb - 1) as f64;
    Ok(HeavyAEstimate {
        estimate: head + body + tail,
        std_error: (var_b / nb as f64).sqrt(),
        head,
        body,
        tail,
        x_min,
        x_max,
        reps: per * nb,
    })
}

/// Bracket on `Λ(t) = Σ_n −log P{S_n > t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoleBracket {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
    /// Number of terms evaluated explicitly.
    pub horizon: u64,
    /// Bound on the terms beyond the horizon, included in `hi`.
    pub remainder: f64,
    /// Terms come from closed forms rather than lattice brackets.
    pub exact: bool,
}

impl HoleBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn relative_width(&self) -> f64 {
        (self.hi - self.lo) / self.mid()
    }
}

/// Cap on explicit terms in [`hole_log_prob`].
pub const HOLE_MAX_HORIZON: u64 = 2_000_000;

fn start_horizon(law: &IncrementLaw, t: f64) -> u64 {
    default_horizon(law, t).unwrap_or_else(|| match law.tail() {
        crate::dist::TailDescriptor::RegularlyVarying { index, ell } => {
            // S_n is of order (nℓ)^{1/α}
            (2.0 * t.powf(index) / ell).ceil() as u64 + 20
        }
        _ => (t.ceil() as u64).max(1),
    })
}

/// `Λ(t)` bracket with lattice step `h` (ignored for the gamma family, whose
/// terms are regularized incomplete gamma functions).
pub fn hole_log_prob(law: &IncrementLaw, t: f64, h: f64) -> Result<HoleBracket> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("level must be finite and nonnegative, got {t}")));
    }
    let cb = ChernoffBound::new(law, t)?;
    let n0 = start_horizon(law, t).max(1);
    let tol = |sum: f64| 1e-13 * sum.max(1.0);
    if let Some((k, rate)) = law.gamma_parameters() {
        let mut sum = 0.0;
        let mut n = 0u64;
        loop {
            n += 1;
            let (ln_p, ln_q) = ln_gamma_pq(k * n as f64, rate * t)?;
            // −log Q = −ln_1p(−P) keeps precision once Q is close to one
            let term = if ln_p < -0.7 { -(-ln_p.exp()).ln_1p() } else { -ln_q };
            sum += term;
            if n >= n0 {
                if let Some(r) = cb.remainder(n) {
                    if r <= tol(sum) {
                        let slack = 4.0 * f64::EPSILON * n as f64 * sum;
                        return Ok(HoleBracket { t, lo: sum - slack, hi: sum + slack + r, horizon: n, remainder: r, exact: true });
                    }
                }
            }
            if n >= HOLE_MAX_HORIZON {
                return Err(Error::Config(format!("hole sum did not converge within {HOLE_MAX_HORIZON} terms")));
            }
        }
    }
    let mut b = SurvivalTableBuilder::new(law, t, h)?;
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut n = 0u64;
    loop {
        let row = b.next_row();
        n += 1;
        lo += row.neg_log_hi();
        hi += row.neg_log_lo();
        if n >= n0 && (n - n0) % 8 == 0 {
            if let Some(r) = cb.remainder(n) {
                if r <= tol(hi) {
                    return Ok(HoleBracket { t, lo, hi: hi + r, horizon: n, remainder: r, exact: false });
                }
            }
        }
        if n >= HOLE_MAX_HORIZON {
            return Err(Error::Config(format!("hole sum did not converge within {HOLE_MAX_HORIZON} terms")));
        }
    }
}

/// One level of a [`HoleCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolePoint {
    pub t: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub norm: f64,
    pub normalized_lo: f64,
    pub normalized_hi: f64,
}

impl HolePoint {
    pub fn normalized_mid(&self) -> f64 {
        0.5 * (self.normalized_lo + self.normalized_hi)
    }
}

/// `Λ(t)/norm(t)` over a level grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleCurve {
    pub law: String,
    pub case: HoleCase,
    pub points: Vec<HolePoint>,
    pub theoretical_limit: Option<f64>,
    pub limit_std_error: Option<f64>,
    pub limit_ref: &'static str,
}

impl HoleCurve {
    /// `|normalized − limit|` at each level (midpoints).
    pub fn distances(&self) -> Option<Vec<f64>> {
        let l = self.theoretical_limit?;
        Some(self.points.iter().map(|p| (p.normalized_mid() - l).abs()).collect())
    }

    /// Distance to the limit strictly decreasing along the grid.
    pub fn approaches_limit(&self) -> Option<bool> {
        self.distances().map(|d| d.windows(2).all(|w| w[1] < w[0]))
    }

    /// CSV with columns `t,lambda_lo,lambda_hi,norm,normalized_lo,normalized_hi,theoretical_limit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lambda_lo,lambda_hi,norm,normalized_lo,normalized_hi,theoretical_limit\n");
        let lim = self.theoretical_limit.map_or(String::new(), |v| v.to_string());
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.t, p.lambda_lo, p.lambda_hi, p.norm, p.normalized_lo, p.normalized_hi, lim
            );
        }
        out
    }
}

/// Settings for [`normalized_hole_curve`].
#[derive(Debug, Clone, Copy)]
pub struct HoleOptions {
    /// Lattice cells per unit of `t` is `cells / t`, i.e. `h = t / cells`.
    pub cells: usize,
    pub heavy_a_reps: usize,
    pub seed: u64,
}

impl Default for HoleOptions {
    fn default() -> Self {
        HoleOptions { cells: 8000, heavy_a_reps: 200_000, seed: 20_240_917 }
    }
}

/// The theoretical limit for a case, with a standard error for Monte Carlo constants.
pub fn theoretical_limit(law: &IncrementLaw, case: HoleCase, opts: &HoleOptions) -> Result<(f64, Option<f64>)> {
    case.check(law)?;
    match (case, *law) {
        (HoleCase::MinA, _) => Ok((rate_light(&RateFunction::new(law))?, None)),
        (HoleCase::MinB1, IncrementLaw::Weibull { c, .. }) => Ok((c, None)),
        (HoleCase::HeavyA, IncrementLaw::Pareto { alpha, .. }) => {
            let e = rate_heavy_a(alpha, opts.heavy_a_reps, &mut RandomStream::new(opts.seed, 0))?;
            Ok((e.estimate, Some(e.std_error)))
        }
        _ => Ok((closed_form_constant(ConstantCase::from_law(case, law)?)?, None)),
    }
}

/// `Λ(t)/norm(t)` on a level grid, with the case's limit attached.
pub fn normalized_hole_curve(law: &IncrementLaw, ts: &[f64], case: HoleCase, opts: &HoleOptions) -> Result<HoleCurve> {
    case.check(law)?;
    if ts.iter().any(|&t| !(t > 1.0)) {
        return Err(Error::Domain("hole curve levels must exceed 1".into()));
    }
    let (limit, se) = theoretical_limit(law, case, opts)?;
    use rayon::prelude::*;
    let points = ts
        .par_iter()
        .map(|&t| {
            let b = hole_log_prob(law, t, t / opts.cells as f64)?;
            let norm = case.normalization(law, t)?;
            Ok(HolePoint {
                t,
                lambda_lo: b.lo,
                lambda_hi: b.hi,
                norm,
                normalized_lo: b.lo / norm,
                normalized_hi: b.hi / norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HoleCurve {
        law: law.to_string(),
        case,
        points,
        theoretical_limit: Some(limit),
        limit_std_error: se,
        limit_ref: case.reference(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> IncrementLaw {
        IncrementLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn exponential_rate_function() {
        let rf = RateFunction::new(&exp1());
        for &x in &[0.2, 0.5, 1.0, 2.0, 5.0] {
            let want: f64 = x - 1.0 - f64::ln(x);
            assert!((rf.legendre(x).unwrap() - want).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(rf.legendre_upper(0.5).unwrap(), 0.0);
        assert!((rf.legendre_upper(2.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn gamma_rate_function_pinned() {
        // dense grid search over s ∈ [0, 1) (see VALUES.md)
        let rf = RateFunction::new(&IncrementLaw::gamma(2.0, 1.0).unwrap());
        assert!((rf.legendre(3.0).unwrap() - 0.189_069_783_783_671_24).abs() < 1e-9);
    }

    #[test]
    fn rate_zero_at_mean_and_positive_elsewhere() {
        for law in [
            IncrementLaw::gamma(3.0, 2.0).unwrap(),
            IncrementLaw::weibull(1.5, 1.0).unwrap(),
            IncrementLaw::weibull(0.5, 1.0).unwrap(),
            IncrementLaw::pareto(2.5, 1.0).unwrap(),
        ] {
            let rf = RateFunction::new(&law);
            assert_eq!(rf.legendre(law.mean()).unwrap(), 0.0);
            for f in [0.5, 0.9, 1.1, 2.0] {
                let x = f * law.mean();
                if x <= essential_inf(&law) {
                    continue;
                }
                assert!(rf.legendre(x).unwrap() > 0.0 || rf.sup_j() == 0.0 && f > 1.0, "{law} at {x}");
            }
        }
    }

    #[test]
    fn heavy_tails_have_zero_rate_above_mean() {
        let rf = RateFunction::new(&IncrementLaw::pareto(2.5, 1.0).unwrap());
        let v = rf.legendre_detail(3.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.at_boundary);
        assert_eq!(rf.legendre(0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn weibull_two_rate_trend() {
        // I(t)/(c t²) increases toward 1 for −log P{ξ>t} = t²
        let rf = RateFunction::new(&IncrementLaw::weibull(2.0, 1.0).unwrap());
        let r: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|&t| rf.legendre(t).unwrap() / (t * t)).collect();
        assert!(r[0] < r[1] && r[1] < r[2] && r[2] < 1.0, "{r:?}");
    }

    #[test]
    fn light_rates() {
        assert!((rate_light(&RateFunction::new(&exp1())).unwrap() - 0.25).abs() < 1e-6);
        let e2 = IncrementLaw::exponential(2.0).unwrap();
        assert!((rate_light(&RateFunction::new(&e2)).unwrap() - 1.0).abs() < 1e-6);
        let g = IncrementLaw::gamma(2.0, 1.0).unwrap();
        assert!((rate_light(&RateFunction::new(&g)).unwrap() - 0.125).abs() < 1e-6);
        let p = IncrementLaw::pareto(2.5, 1.0).unwrap();
        assert!(matches!(rate_light(&RateFunction::new(&p)), Err(Error::Precondition(_))));
        let w = IncrementLaw::weibull(2.0, 1.0).unwrap();
        assert!(matches!(rate_light(&RateFunction::new(&w)), Err(Error::Precondition(_))));
    }

    #[test]
    fn closed_forms() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        let b2 = closed_form_constant(ConstantCase::MinB2 { c: 1.0, alpha: 3.0 }).unwrap();
        assert!((b2 - pi2_6).abs() < 1e-10);
        let p = IncrementLaw::pareto(2.5, 1.0).unwrap();
        let hb = closed_form_constant(ConstantCase::from_law(HoleCase::HeavyB, &p).unwrap()).unwrap();
        assert!((hb - 0.9).abs() < 1e-15);
        let w = IncrementLaw::weibull(0.5, 1.0).unwrap();
        let s = closed_form_constant(ConstantCase::from_law(HoleCase::Semi, &w).unwrap()).unwrap();
        assert_eq!(s, 1.0 / (1.5 * w.mean()));
        assert!(closed_form_constant(ConstantCase::MinB2 { c: 1.0, alpha: 2.0 }).is_err());
        assert!(closed_form_constant(ConstantCase::Semi { alpha: 1.5, mu: 1.0 }).is_err());
    }

    #[test]
    fn ell_star_values() {
        assert!((ell_star(std::f64::consts::E, &SlowlyVarying::Constant(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((ell_star(50.0, &SlowlyVarying::Constant(3.0)).unwrap() - 3.0 * 50f64.ln()).abs() < 1e-14);
        let e2 = std::f64::consts::E.powi(2);
        assert!((ell_star(e2, &SlowlyVarying::LogPower { c: 1.0, beta: 1.0 }).unwrap() - 2.0).abs() < 1e-14);
        fn log(y: f64) -> f64 {
            y.ln()
        }
        assert!((ell_star(e2, &SlowlyVarying::Custom(log)).unwrap() - 2.0).abs() < 1e-10);
        assert!(ell_star(0.5, &SlowlyVarying::Constant(1.0)).is_err());
    }

    #[test]
    fn case_parsing_and_regimes() {
        for c in HoleCase::ALL {
            assert_eq!(c.tag().parse::<HoleCase>().unwrap(), c);
        }
        assert!("min-c".parse::<HoleCase>().is_err());
        let p = IncrementLaw::pareto(2.5, 1.0).unwrap();
        assert!(matches!(HoleCase::MinA.check(&p), Err(Error::Precondition(_))));
        assert_eq!(HoleCase::for_law(&IncrementLaw::weibull(3.0, 1.0).unwrap()), Some(HoleCase::MinB2));
    }

    #[test]
    fn exponential_hole_pinned() {
        // Σ_{n≤500} −log Q(n, 10) with mpmath (see VALUES.md)
        let b = hole_log_prob(&exp1(), 10.0, 0.0).unwrap();
        assert!(b.exact);
        let want = 41.202_918_810_239_53;
        assert!(b.lo <= want * (1.0 + 1e-13) && want <= b.hi * (1.0 + 1e-13), "{b:?}");
        assert!(b.hi - b.lo < 1e-11 * want);
        assert!(b.lo >= 10.0);
    }

    #[test]
    fn heavy_a_head_and_value() {
        let e = rate_heavy_a(0.5, 200_000, &mut RandomStream::new(9, 1)).unwrap();
        // ∫₀^∞ −log erf(x√π/2) dx (see VALUES.md)
        let want = 1.167_212_981_015_467_8;
        assert!((e.estimate - want).abs() < 4.0 * e.std_error, "{e:?}");
        assert!(e.head <= 0.01 * e.estimate);
        assert!(e.std_error > 0.0);
        assert!(rate_heavy_a(1.5, 1000, &mut RandomStream::new(1, 1)).is_err());
    }
}
