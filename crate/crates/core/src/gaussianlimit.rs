//! The Gaussian limit process `X_α`: the stable CDF `Φ_α`, covariance and
//! variance constants, the scaling functions `c_α, h_α, b_α`, and sampling on
//! finite grids.

use crate::dist::{IncrementLaw, RandomStream, SpectrallyNegativeStable};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, integrate_with_breaks, QuadOptions};
use crate::special::{gamma, ln_gamma, normal_cdf};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

/// A distribution function usable by [`i_integral`].
pub trait CdfEvaluator: Sync {
    fn cdf(&self, x: f64) -> f64;
    /// Range outside of which the tails are handled by substitution.
    fn core_range(&self) -> (f64, f64);
    /// `Some(α)` when `F(x) ≍ |x|^{−α}` as `x → −∞`; `None` for lighter left tails.
    fn left_tail_index(&self) -> Option<f64>;
}

/// Standard normal distribution.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalCdf;

impl CdfEvaluator for NormalCdf {
    fn cdf(&self, x: f64) -> f64 {
        normal_cdf(x)
    }
    fn core_range(&self) -> (f64, f64) {
        (-9.0, 9.0)
    }
    fn left_tail_index(&self) -> Option<f64> {
        None
    }
}

/// `(Φ_α(x), φ_α(x))` by Gil-Pelaez inversion:
/// `F(x) = 1/2 + π⁻¹∫₀^∞ e^{−γz^α} sin(zx + ωz^α) z⁻¹ dz` and
/// `f(x) = π⁻¹∫₀^∞ e^{−γz^α} cos(zx + ωz^α) dz`.
pub fn stable_cdf_inversion(law: &SpectrallyNegativeStable, x: f64) -> Result<(f64, f64)> {
    let (a, g, w) = (law.alpha(), law.gamma_cos(), law.gamma_sin());
    // e^{−γZ^α} = e^{−42}
    let z_max = (42.0 / g).powf(1.0 / a);
    let panel = (PI / x.abs().max(1e-9)).min(z_max / 8.0);
    let n = ((z_max / panel).ceil() as usize).clamp(8, 200_000);
    let breaks: Vec<f64> = (0..=n).map(|i| z_max * i as f64 / n as f64).collect();
    let opts = QuadOptions::new(1e-14, 1e-12).with_max_intervals(4 * n + 2000);
    let s = integrate_with_breaks(
        |z| {
            let za = z.powf(a);
            (-g * za).exp() * (z * x + w * za).sin() / z
        },
        &breaks,
        opts,
    )?;
    let c = integrate_with_breaks(
        |z| {
            let za = z.powf(a);
            (-g * za).exp() * (z * x + w * za).cos()
        },
        &breaks,
        opts,
    )?;
    Ok(((0.5 + s.value / PI).clamp(0.0, 1.0), (c.value / PI).max(0.0)))
}

/// Left-tail expansion `P{X < −y} ∼ Σ_{n≥1} c_n y^{−nα}` with
/// `c_n = −κ^n Γ(nα) sin(nπα)/(π n!)`, `κ = −Γ(1−α)`, truncated at
/// its smallest term. Returns `(F(−y), f(−y))`.
fn stable_left_series(alpha: f64, kappa: f64, y: f64) -> (f64, f64) {
    let ya = y.powf(-alpha);
    let (mut cdf, mut pdf) = (0.0, 0.0);
    let mut prev = f64::INFINITY;
    for n in 1..60u32 {
        let nf = n as f64;
        let lmag = nf * kappa.ln() + ln_gamma(nf * alpha) - ln_gamma(nf + 1.0) + nf * ya.ln();
        let s = (nf * PI * alpha).sin();
        let term = -s * lmag.exp() / PI;
        let size = lmag.exp() / PI;
        if size > prev {
            break;
        }
        prev = size;
        cdf += term;
        pdf += term * nf * alpha / y;
        if size < 1e-18 * cdf.abs().max(1e-300) {
            break;
        }
    }
    (cdf.max(0.0), pdf.max(0.0))
}

/// Tabulated `Φ_α` on `[x₋, x₊]` with monotone cubic Hermite interpolation
/// (slopes from the inverted density); the left tail beyond `x₋` uses the
/// asymptotic expansion and `Φ_α = 1` beyond `x₊`.
#[derive(Debug, Clone)]
pub struct StableCdfTable {
    law: SpectrallyNegativeStable,
    kappa: f64,
    x0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

fn table_cache() -> &'static Mutex<HashMap<u64, Arc<StableCdfTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StableCdfTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl StableCdfTable {
    /// Builds the table for `α ∈ (1, 2)`; `α = 2` is the normal law and needs no table.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("stable CDF tables need α ∈ (1, 2), got {alpha}")));
        }
        let law = SpectrallyNegativeStable::new(alpha)?;
        let sigma = law.gamma_cos().powf(1.0 / alpha);
        let x0 = -30.0 * sigma.max(1.0);
        let step = 0.02 * sigma;
        let mut x1 = sigma;
        while 1.0 - stable_cdf_inversion(&law, x1)?.0 > 1e-15 {
            x1 *= 1.5;
        }
        let n = ((x1 - x0) / step).ceil() as usize + 1;
        let mut values = Vec::with_capacity(n);
        let mut dens = Vec::with_capacity(n);
        for i in 0..n {
            let (f, d) = stable_cdf_inversion(&law, x0 + i as f64 * step)?;
            values.push(f);
            dens.push(d);
        }
        // inversion noise of order 1e-14 can break monotonicity
        for i in 1..n {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        let slopes = fritsch_carlson(&values, &dens, step);
        Ok(StableCdfTable {
            law,
            kappa: -gamma(1.0 - alpha)?,
            x0,
            step,
            values,
            slopes,
        })
    }

    /// Process-wide cached table.
    pub fn shared(alpha: f64) -> Result<Arc<Self>> {
        let key = alpha.to_bits();
        if let Some(t) = table_cache().lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(StableCdfTable::new(alpha)?);
        table_cache().lock().unwrap().insert(key, t.clone());
        Ok(t)
    }

    pub fn alpha(&self) -> f64 {
        self.law.alpha()
    }

    pub fn grid(&self) -> (f64, f64, usize) {
        (self.x0, self.x0 + (self.values.len() - 1) as f64 * self.step, self.values.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x0 {
            return stable_left_series(self.alpha(), self.kappa, -x).0;
        }
        let u = (x - self.x0) / self.step;
        let i = u.floor() as usize;
        if i + 1 >= self.values.len() {
            return 1.0;
        }
        let s = u - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        v.clamp(0.0, 1.0)
    }
}

impl CdfEvaluator for StableCdfTable {
    fn cdf(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn core_range(&self) -> (f64, f64) {
        let (a, b, _) = self.grid();
        (a, b)
    }
    fn left_tail_index(&self) -> Option<f64> {
        Some(self.alpha())
    }
}

/// Hermite slopes limited so that each cubic piece stays monotone.
fn fritsch_carlson(y: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    let mut m = d.to_vec();
    for i in 0..y.len().saturating_sub(1) {
        let delta = (y[i + 1] - y[i]) / h;
        if delta == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let (a, b) = (m[i] / delta, m[i + 1] / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * delta;
            m[i + 1] = tau * b * delta;
        }
    }
    m
}

/// `Φ_α(x) = P{𝒮_α(1) ≤ x}`; the normal CDF at `α = 2`, a cached table otherwise.
pub fn stable_cdf(alpha: f64, x: f64) -> Result<f64> {
    if alpha == 2.0 {
        return Ok(normal_cdf(x));
    }
    Ok(StableCdfTable::shared(alpha)?.eval(x))
}

/// Shared evaluator of `Φ_α`.
pub fn stable_evaluator(alpha: f64) -> Result<Arc<dyn CdfEvaluator + Send>> {
    if alpha == 2.0 {
        Ok(Arc::new(NormalCdf))
    } else {
        Ok(StableCdfTable::shared(alpha)?)
    }
}

const LINE_OPTS: QuadOptions = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 20_000 };

/// `∫_{−∞}^{∞} g`, with `g` concentrated on `[lo, hi]` and left tail decaying
/// like `|x|^{1−index}` (or faster when `index` is `None`).
fn integrate_line<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, index: Option<f64>, panels: usize) -> Result<f64> {
    let (a, b) = (lo.min(-1.0), hi.max(1.0));
    let breaks: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
    let core = integrate_with_breaks(&g, &breaks, LINE_OPTS)?.value;
    let left = match index {
        Some(al) => {
            if !(al > 1.0) {
                return Err(Error::Domain(format!("left tail index {al} ≤ 1: the integral diverges")));
            }
            // x = a·e^w turns |x|^{−α} decay into e^{(1−α)w}
            integrate_to_infinity(
                |w| {
                    let x = a * w.exp();
                    if !x.is_finite() {
                        return 0.0;
                    }
                    g(x) * -x
                },
                0.0,
                1.0 / (al - 1.0),
                LINE_OPTS,
            )?
            .value
        }
        None => integrate_to_infinity(|s| g(a - s), 0.0, 1.0, LINE_OPTS)?.value,
    };
    let right = integrate_to_infinity(|s| g(b + s), 0.0, 1.0, LINE_OPTS)?.value;
    Ok(left + core + right)
}

/// `I_a = ∫ F(x+a)(1 − F(x)) dx`.
pub fn i_integral(f: &dyn CdfEvaluator, a: f64) -> Result<f64> {
    let (lo, hi) = f.core_range();
    let (l, h) = (lo.min(lo - a), hi.max(hi - a));
    integrate_line(|x| f.cdf(x + a) * (1.0 - f.cdf(x)), l, h, f.left_tail_index(), 64)
}

/// `Var X_α(u) = π⁻¹Γ(1−1/α)(2Γ(1−α)cos(πα/2))^{1/α}` for `α ∈ (1, 2)`, and
/// `π^{−1/2}` at `α = 2` (the standard normal value of `I₀`).
pub fn var_const(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!("α must lie in (1, 2], got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok(1.0 / PI.sqrt());
    }
    let c = SpectrallyNegativeStable::new(alpha)?.c_const();
    Ok(gamma(1.0 - 1.0 / alpha)? * c.powf(1.0 / alpha) / PI)
}

/// Index `α` and mean `μ` of the limit process; `a_α = μ^{1/α}α/(α−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub alpha: f64,
    pub mu: f64,
}

impl CovarianceSpec {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("α must lie in (1, 2], got {alpha}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("μ must be positive and finite, got {mu}")));
        }
        Ok(CovarianceSpec { alpha, mu })
    }

    pub fn a_alpha(&self) -> f64 {
        self.mu.powf(1.0 / self.alpha) * self.alpha / (self.alpha - 1.0)
    }
}

/// `Cov(X_α(u), X_α(v))`: the closed form at `α = 2`, quadrature otherwise.
pub fn cov_x(spec: &CovarianceSpec, u: f64, v: f64) -> Result<f64> {
    if spec.alpha == 2.0 {
        Ok(cov_x_closed_form(spec, u, v))
    } else {
        cov_x_quadrature(spec, u, v)
    }
}

/// `π^{−1/2}e^{−a²d²/4} − ad(1 − Φ(ad/√2))`, `d = |u − v|`, for `α = 2`.
pub fn cov_x_closed_form(spec: &CovarianceSpec, u: f64, v: f64) -> f64 {
    let ad = spec.a_alpha() * (u - v).abs();
    (-ad * ad / 4.0).exp() / PI.sqrt() - ad * normal_cdf(-ad / std::f64::consts::SQRT_2)
}

/// `∫ P{𝒮_α(1) > a(u∨v) + y} P{𝒮_α(1) ≤ a(u∧v) + y} dy` by quadrature.
///
/// Exchanging `u∧v` and `u∨v` gives a different function; this ordering is
/// the one that agrees with the `α = 2` closed form.
pub fn cov_x_quadrature(spec: &CovarianceSpec, u: f64, v: f64) -> Result<f64> {
    let f = stable_evaluator(spec.alpha)?;
    let a = spec.a_alpha();
    let (m, big) = (a * u.min(v), a * u.max(v));
    let (lo, hi) = f.core_range();
    integrate_line(
        |y| (1.0 - f.cdf(big + y)) * f.cdf(m + y),
        lo - big,
        hi - m,
        f.left_tail_index(),
        64,
    )
}

/// The white-noise form `∫ (Φ_α(a(u∧v)+x) − Φ_α(a(u∧v)+x)Φ_α(a(u∨v)+x)) dx`,
/// integrated on a fixed panel grid independent of [`cov_x_quadrature`].
pub fn y_cov_whitenoise_form(spec: &CovarianceSpec, u: f64, v: f64) -> Result<f64> {
    let f = stable_evaluator(spec.alpha)?;
    let a = spec.a_alpha();
    let (m, big) = (a * u.min(v), a * u.max(v));
    let (lo, hi) = f.core_range();
    let g = |x: f64| {
        let p = f.cdf(m + x);
        p - p * f.cdf(big + x)
    };
    let (l, h) = ((lo - m).min(-1.0), (hi - m).max(1.0));
    // composite rule on 0.01-wide panels in the core, tails as power/half-line maps
    let panels = (((h - l) / 0.01).ceil() as usize).max(16);
    let mut core = 0.0;
    for i in 0..panels {
        let a0 = l + (h - l) * i as f64 / panels as f64;
        let b0 = l + (h - l) * (i + 1) as f64 / panels as f64;
        core += integrate(&g, a0, b0, QuadOptions::new(1e-16, 1e-13).with_max_intervals(50))?.value;
    }
    let left = match f.left_tail_index() {
        Some(al) => {
            // x = l·s^{−1/(α−1)}, s ∈ (0, 1]: algebraic decay becomes bounded
            let p = 1.0 / (al - 1.0);
            integrate(
                |s| {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let x = l * s.powf(-p);
                    if !x.is_finite() {
                        return 0.0;
                    }
                    g(x) * -l * p * s.powf(-p - 1.0)
                },
                0.0,
                1.0,
                QuadOptions::new(1e-15, 1e-12).with_max_intervals(5000),
            )?
            .value
        }
        None => integrate_to_infinity(|s| g(l - s), 0.0, 1.0, LINE_OPTS)?.value,
    };
    let right = integrate_to_infinity(|s| g(h + s), 0.0, 1.0, LINE_OPTS)?.value;
    Ok(left + core + right)
}

/// Regularity assumption behind the scaling functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Finite variance `σ²`.
    A1 { sigma2: f64 },
    /// Infinite variance in the domain of attraction of the normal law.
    A2,
    /// Pareto tail `P{ξ>t} = (x_m/t)^α`, `α ∈ (1, 2)`, so `ℓ ≡ x_m^α`.
    A3Pareto { alpha: f64, xm: f64 },
}

impl Regime {
    pub fn for_law(law: &IncrementLaw) -> Result<Regime> {
        let var = law.variance();
        if var.is_finite() {
            return Ok(Regime::A1 { sigma2: var });
        }
        match *law {
            IncrementLaw::Pareto { alpha, xm } if alpha > 1.0 && alpha < 2.0 => Ok(Regime::A3Pareto { alpha, xm }),
            IncrementLaw::Pareto { alpha, .. } if alpha == 2.0 => Ok(Regime::A2),
            _ => Err(Error::Precondition(format!("{law} has infinite mean; no functional limit with centering V"))),
        }
    }

    /// Index of the limit process.
    pub fn alpha(&self) -> f64 {
        match *self {
            Regime::A1 { .. } | Regime::A2 => 2.0,
            Regime::A3Pareto { alpha, .. } => alpha,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::A1 { .. } => "A1",
            Regime::A2 => "A2",
            Regime::A3Pareto { .. } => "A3",
        }
    }
}

/// `c_α`, `h_α` (inverse of `t ↦ t/c_α(t)`), `h_α′` and `b_α(t) = μ^{−1−1/α}c_α(h_α(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFunctions {
    pub regime: Regime,
    pub mu: f64,
}

/// Builds the scaling functions; the A2 regime is not supported.
pub fn scaling(regime: Regime, mu: f64) -> Result<ScalingFunctions> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("μ must be positive and finite, got {mu}")));
    }
    match regime {
        Regime::A2 => Err(Error::Unsupported("scaling functions for the A2 regime (infinite variance, normal limit) are not supported".into())),
        Regime::A1 { sigma2 } if !(sigma2 > 0.0) => Err(Error::Domain(format!("σ² must be positive, got {sigma2}"))),
        Regime::A3Pareto { alpha, .. } if !(alpha > 1.0 && alpha < 2.0) => {
            Err(Error::Domain(format!("A3 needs α ∈ (1, 2), got {alpha}")))
        }
        _ => Ok(ScalingFunctions { regime, mu }),
    }
}

impl ScalingFunctions {
    pub fn for_law(law: &IncrementLaw) -> Result<Self> {
        scaling(Regime::for_law(law)?, law.mean())
    }

    pub fn alpha(&self) -> f64 {
        self.regime.alpha()
    }

    pub fn c(&self, t: f64) -> f64 {
        match self.regime {
            Regime::A1 { sigma2 } => (sigma2 * t).sqrt(),
            Regime::A3Pareto { alpha, xm } => xm * t.powf(1.0 / alpha),
            Regime::A2 => f64::NAN,
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        match self.regime {
            Regime::A1 { sigma2 } => sigma2 * t * t,
            Regime::A3Pareto { alpha, xm } => (xm * t).powf(alpha / (alpha - 1.0)),
            Regime::A2 => f64::NAN,
        }
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        match self.regime {
            Regime::A1 { sigma2 } => 2.0 * sigma2 * t,
            Regime::A3Pareto { alpha, xm } => {
                let p = alpha / (alpha - 1.0);
                p * xm * (xm * t).powf(p - 1.0)
            }
            Regime::A2 => f64::NAN,
        }
    }

    pub fn b(&self, t: f64) -> f64 {
        self.mu.powf(-1.0 - 1.0 / self.alpha()) * self.c(self.h(t))
    }

    /// `t h′(t)/h(t)`, which tends to `α/(α−1)`.
    pub fn elasticity(&self, t: f64) -> f64 {
        t * self.h_prime(t) / self.h(t)
    }

    /// Asymptote of `Var N̂(t)`: `var_const(α) μ^{−1−1/α} c_α(t)`, which is
    /// `(σ²t/(μ³π))^{1/2}` in the A1 regime.
    pub fn variance_asymptote(&self, t: f64) -> Result<f64> {
        Ok(var_const(self.alpha())? * self.mu.powf(-1.0 - 1.0 / self.alpha()) * self.c(t))
    }
}

/// `[cov_X(u_i, u_j)]`.
pub fn covariance_matrix(spec: &CovarianceSpec, grid: &[f64]) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let mut m = DMatrix::zeros(n, n);
    // stationarity: one evaluation per distinct lag
    let mut cache: HashMap<u64, f64> = HashMap::new();
    for i in 0..n {
        for j in 0..=i {
            let d = (grid[i] - grid[j]).abs();
            let v = match cache.get(&d.to_bits()) {
                Some(&v) => v,
                None => {
                    let v = cov_x(spec, 0.0, d)?;
                    cache.insert(d.to_bits(), v);
                    v
                }
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Square matrix as CSV with a header row of grid points.
pub fn matrix_to_csv(grid: &[f64], m: &DMatrix<f64>) -> String {
    let mut out = String::from("u");
    for g in grid {
        let _ = write!(out, ",{g}");
    }
    out.push('\n');
    for (i, g) in grid.iter().enumerate() {
        let _ = write!(out, "{g}");
        for j in 0..grid.len() {
            let _ = write!(out, ",{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Maximum grid length accepted by [`GaussianProcess::new`].
pub const GP_MAX_GRID: usize = 2048;

/// Factorized covariance of `X_α` on a grid.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    pub grid: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Diagonal jitter that made the factorization succeed (zero if none).
    pub jitter: f64,
    factor: DMatrix<f64>,
}

impl GaussianProcess {
    pub fn new(spec: &CovarianceSpec, grid: &[f64]) -> Result<Self> {
        if grid.is_empty() || grid.len() > GP_MAX_GRID {
            return Err(Error::Domain(format!("grid length must lie in 1..={GP_MAX_GRID}, got {}", grid.len())));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be strictly increasing".into()));
        }
        let cov = covariance_matrix(spec, grid)?;
        let mut jitter = 0.0;
        let mut next = 1e-10;
        for _ in 0..=11 {
            let mut m = cov.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(GaussianProcess { grid: grid.to_vec(), covariance: cov, jitter, factor: ch.l() });
            }
            jitter = next;
            next *= 2.0;
        }
        Err(Error::Convergence(format!(
            "covariance matrix not positive definite even with jitter {:e}",
            jitter / 2.0
        )))
    }

    pub fn sample(&self, stream: &mut RandomStream) -> Vec<f64> {
        let z = DVector::from_iterator(self.grid.len(), (0..self.grid.len()).map(|_| stream.standard_normal()));
        (&self.factor * z).iter().copied().collect()
    }
}

/// One draw of `(X_α(u_1), …, X_α(u_m))`.
pub fn sample_gp(spec: &CovarianceSpec, grid: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
    Ok(GaussianProcess::new(spec, grid)?.sample(stream))
}
