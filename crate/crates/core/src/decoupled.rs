//! The decoupled sequence `Ŝ₁, Ŝ₂, …` (independent, `Ŝ_n` distributed as
//! `S_n`) and the objects built from it: `N̂(t)`, `τ̂(t)`, `M_n`, and the
//! coupled walk's passage time `τ(t)`.

use crate::dist::{IncrementLaw, RandomStream};
use crate::error::{Error, Result};
use crate::lattice::{
    default_horizon, discretize, mean_preserving, smoothed_cdf, ChernoffBound, FftLadder, LatticeLaw, Rounding,
    SurvivalTableBuilder,
};
use crate::special::ln_gamma_pq;
use std::fmt::Write as _;

/// How the values of a decoupled path were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMethod {
    /// Exact draw of `S_n` from a closed-form law (gamma family).
    ClosedForm,
    /// Inversion of a lattice approximation of the law of `S_n`.
    LatticeInversion,
    /// `n` fresh increments summed for every `n`.
    NaiveSum,
}

impl GenerationMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            GenerationMethod::ClosedForm => "closed-form",
            GenerationMethod::LatticeInversion => "lattice-inversion",
            GenerationMethod::NaiveSum => "naive-sum",
        }
    }
}

/// Realized values `ŝ₁, …, ŝ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledPath {
    pub values: Vec<f64>,
    pub method: GenerationMethod,
    /// Worst-case Kolmogorov distance between the sampled and the exact
    /// marginal law, over all `n` (zero for exact methods).
    pub bias_bound: f64,
    pub note: Option<String>,
}

impl DecoupledPath {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `#{n ≤ N : ŝ_n ≤ t}`.
    pub fn counting(&self, t: f64) -> u64 {
        self.values.iter().filter(|&&s| s <= t).count() as u64
    }

    /// Running maxima `M_1, …, M_N`.
    pub fn running_max(&self) -> Vec<f64> {
        let mut m = f64::NEG_INFINITY;
        self.values
            .iter()
            .map(|&s| {
                m = m.max(s);
                m
            })
            .collect()
    }

    /// `τ̂(t)` if the path exceeds `t` within its horizon.
    pub fn passage(&self, t: f64) -> Option<u64> {
        self.values.iter().position(|&s| s > t).map(|i| i as u64 + 1)
    }

    /// CSV with columns `n,s_hat,running_max`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,s_hat,running_max\n");
        for (i, (s, m)) in self.values.iter().zip(self.running_max()).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, s, m);
        }
        out
    }
}

/// Passage of the decoupled maxima over level `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageResult {
    pub t: f64,
    pub tau: u64,
    /// `M_1, …, M_τ̂`.
    pub maxima: Vec<f64>,
}

impl PassageResult {
    /// `M_{τ̂−1}/τ̂ < t/τ̂ ≤ M_τ̂/τ̂` (the left inequality is void when `τ̂ = 1`).
    pub fn duality_holds(&self) -> bool {
        let tau = self.tau as usize;
        let last = self.maxima[tau - 1];
        let before_ok = tau == 1 || self.maxima[tau - 2] <= self.t;
        last > self.t && before_ok
    }
}

fn naive_sum(law: &IncrementLaw, n: u64, stream: &mut RandomStream) -> f64 {
    (0..n).map(|_| law.sample(stream)).sum()
}

/// Law of `S_n` on a lattice, ready for inversion.
struct InversionTable {
    h: f64,
    cumulative: Vec<f64>,
}

impl InversionTable {
    fn from_masses(h: f64, masses: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = masses
            .iter()
            .map(|&m| {
                acc += m;
                acc
            })
            .collect();
        InversionTable { h, cumulative }
    }

    fn grid_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Atom index for uniform `u` below the grid mass.
    fn atom(&self, u: f64) -> usize {
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Sampler of whole decoupled paths for a fixed law and horizon.
///
/// For the gamma family `Ŝ_n` is drawn exactly from `Γ(nk, λ)`. Otherwise the
/// law of `S_n` is approximated by FFT convolution of the mean-preserving
/// lattice rounding; an atom is drawn by inversion and spread by a triangular
/// kernel (the continuous reading of linear dispersal). Values of `n` whose
/// scale the grid does not resolve use naive summation; draws that fall in the
/// mass beyond the grid use naive summation with the last increment
/// conditioned past the remaining gap. The down/up rounded ladders bound the
/// resulting CDF error, which is recorded as the bias bound.
#[derive(Debug, Clone)]
pub struct DecoupledSampler {
    law: IncrementLaw,
    horizon: u64,
    method: GenerationMethod,
    grid_len: usize,
    track_bias: bool,
}

/// Default lattice length for the inversion path.
pub const INVERSION_GRID: usize = 1 << 16;

impl DecoupledSampler {
    /// Chooses the closed form for the gamma family and lattice inversion
    /// otherwise; infinite-mean laws fall back to naive summation.
    pub fn new(law: &IncrementLaw, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        let method = if law.gamma_parameters().is_some() {
            GenerationMethod::ClosedForm
        } else if law.mean().is_finite() {
            GenerationMethod::LatticeInversion
        } else {
            GenerationMethod::NaiveSum
        };
        Ok(DecoupledSampler {
            law: *law,
            horizon,
            method,
            grid_len: INVERSION_GRID,
            track_bias: true,
        })
    }

    /// Forces a generation method.
    pub fn with_method(mut self, method: GenerationMethod) -> Result<Self> {
        match method {
            GenerationMethod::ClosedForm if self.law.gamma_parameters().is_none() => {
                return Err(Error::Unsupported(format!("no closed-form law of S_n for {}", self.law)))
            }
            GenerationMethod::LatticeInversion if !self.law.mean().is_finite() => {
                return Err(Error::Unsupported("lattice inversion needs a finite mean".into()))
            }
            _ => {}
        }
        self.method = method;
        Ok(self)
    }

    pub fn with_grid_len(mut self, k: usize) -> Self {
        self.grid_len = k.max(64);
        self
    }

    /// Skips the down/up ladders (bias bound then reported as NaN).
    pub fn without_bias_tracking(mut self) -> Self {
        self.track_bias = false;
        self
    }

    pub fn method(&self) -> GenerationMethod {
        self.method
    }

    /// One path.
    pub fn sample(&self, stream: &mut RandomStream) -> Result<DecoupledPath> {
        Ok(self.sample_many(std::slice::from_mut(stream))?.pop().unwrap())
    }

    /// One path per stream; path `i` depends only on `streams[i]`, so the
    /// result equals calling [`Self::sample`] on each stream separately.
    pub fn sample_many(&self, streams: &mut [RandomStream]) -> Result<Vec<DecoupledPath>> {
        let n_max = self.horizon;
        let mut values: Vec<Vec<f64>> = streams.iter().map(|_| Vec::with_capacity(n_max as usize)).collect();
        let mut bias = 0.0;
        let mut note = None;
        match self.method {
            GenerationMethod::ClosedForm => {
                for n in 1..=n_max {
                    for (v, s) in values.iter_mut().zip(streams.iter_mut()) {
                        v.push(self.law.sample_gamma_sum(n, s).unwrap());
                    }
                }
            }
            GenerationMethod::NaiveSum => {
                if self.law.mean().is_infinite() && self.law.gamma_parameters().is_none() {
                    note = Some(format!("naive summation: O(N²) = {} increments per path", n_max * (n_max + 1) / 2));
                }
                for n in 1..=n_max {
                    for (v, s) in values.iter_mut().zip(streams.iter_mut()) {
                        v.push(naive_sum(&self.law, n, s));
                    }
                }
            }
            GenerationMethod::LatticeInversion => {
                let (b, first_lattice) = self.lattice_paths(streams, &mut values)?;
                bias = b;
                if first_lattice > 1 {
                    note = Some(format!("n < {first_lattice} drawn by naive summation"));
                }
            }
        }
        Ok(values
            .into_iter()
            .map(|v| DecoupledPath {
                values: v,
                method: self.method,
                bias_bound: bias,
                note: note.clone(),
            })
            .collect())
    }

    fn lattice_paths(&self, streams: &mut [RandomStream], values: &mut [Vec<f64>]) -> Result<(f64, u64)> {
        let law = &self.law;
        let n_max = self.horizon as f64;
        let (mu, var) = law.moments();
        let spread = if var.is_finite() { 10.0 * (n_max * var).sqrt() } else { 0.0 };
        let x_max = n_max * mu + spread + law.survival_quantile((1e-4 / n_max).min(0.5)) + mu;
        let k = self.grid_len;
        let h = x_max / (k - 1) as f64;
        // below this index the grid has fewer than ~200 cells per mean
        let first_lattice = ((200.0 * h / mu).ceil() as u64).max(1);
        let mut mp = FftLadder::new(&mean_preserving(law, h, k)?);
        let mut brackets = if self.track_bias {
            let d = discretize_lenient(law, h, k, Rounding::Down);
            let u = discretize_lenient(law, h, k, Rounding::Up);
            Some((FftLadder::new(&d), FftLadder::new(&u)))
        } else {
            None
        };
        let mut bias: f64 = if self.track_bias { 0.0 } else { f64::NAN };
        for n in 1..=self.horizon {
            mp.advance();
            if let Some((d, u)) = brackets.as_mut() {
                d.advance();
                u.advance();
            }
            if n < first_lattice {
                for (v, s) in values.iter_mut().zip(streams.iter_mut()) {
                    v.push(naive_sum(law, n, s));
                }
                continue;
            }
            if let Some((d, u)) = brackets.as_ref() {
                bias = bias.max(cdf_gap(d.masses(), u.masses()) + mp.lump());
            }
            let table = InversionTable::from_masses(h, mp.masses());
            let beyond = (k - 1) as f64 * h;
            for (v, s) in values.iter_mut().zip(streams.iter_mut()) {
                let w = s.uniform();
                let x = if w < table.grid_mass() {
                    let j = table.atom(w);
                    let jitter = s.uniform() + s.uniform() - 1.0;
                    ((j as f64 + jitter) * table.h).abs()
                } else {
                    let head = naive_sum(law, n - 1, s);
                    head + law.sample_above(beyond - head, s)
                };
                v.push(x);
            }
        }
        Ok((bias, first_lattice))
    }
}

fn discretize_lenient(law: &IncrementLaw, h: f64, k: usize, dir: Rounding) -> LatticeLaw {
    // the grid always covers the bulk here, so coverage errors cannot occur
    discretize(law, h, k, dir).expect("inversion grid covers the increment law")
}

/// `max_j (F_down(j+1) − F_up(j−1))`: both the exact CDF and the smoothed
/// mean-preserving CDF on cell `j` lie in this band.
fn cdf_gap(down: &[f64], up: &[f64]) -> f64 {
    let mut fd = Vec::with_capacity(down.len());
    let mut acc = 0.0;
    for &m in down {
        acc += m;
        fd.push(acc);
    }
    let mut fu_prev = 0.0;
    let mut gap: f64 = 0.0;
    for (j, &m) in up.iter().enumerate() {
        let hi = fd[(j + 1).min(fd.len() - 1)];
        gap = gap.max(hi - fu_prev);
        fu_prev += m;
    }
    gap
}

/// One decoupled path of horizon `N`.
pub fn sample_decoupled(law: &IncrementLaw, horizon: u64, stream: &mut RandomStream) -> Result<DecoupledPath> {
    DecoupledSampler::new(law, horizon)?.sample(stream)
}

/// How the probabilities `p_n = P{S_n ≤ t}` were obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountingSource {
    /// Regularized incomplete gamma (exact).
    ClosedForm,
    /// Midpoints of rigorous down/up lattice brackets with step `h`.
    Bracketed { h: f64 },
    /// Mean-preserving lattice ladder with step `h`.
    MeanPreserving { h: f64 },
}

/// Exact-in-law sampler of `N̂(t) = Σ_n 1{Ŝ_n ≤ t}` from independent Bernoulli
/// indicators.
#[derive(Debug, Clone)]
pub struct CountingSampler {
    pub t: f64,
    pub probs: Vec<f64>,
    /// Bound on `Σ_{n>N} p_n` (the truncation part of the total-variation error).
    pub truncation: f64,
    /// Bound on the total-variation error from inexact `p_n` (`None` when not bracketed).
    pub discretization: Option<f64>,
    pub source: CountingSource,
}

/// Bracketed lattices are used while `t/μ` stays below this.
const BRACKETED_MAX_RATIO: f64 = 500.0;

impl CountingSampler {
    pub fn new(law: &IncrementLaw, t: f64, eps: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("level must be finite and nonnegative, got {t}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("ε must lie in (0, 1), got {eps}")));
        }
        let mu = law.mean();
        if !mu.is_finite() {
            return Err(Error::Precondition("counting truncation needs a finite mean".into()));
        }
        let horizon = counting_horizon(law, t, eps)?;
        let n = horizon.0;
        if let Some((k, rate)) = law.gamma_parameters() {
            let probs = (1..=n)
                .map(|i| ln_gamma_pq(k * i as f64, rate * t).map(|v| v.0.exp()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(CountingSampler {
                t,
                probs,
                truncation: horizon.1,
                discretization: Some(0.0),
                source: CountingSource::ClosedForm,
            });
        }
        if t == 0.0 {
            return Ok(CountingSampler {
                t,
                probs: vec![0.0; n as usize],
                truncation: horizon.1,
                discretization: Some(0.0),
                source: CountingSource::ClosedForm,
            });
        }
        if t / mu <= BRACKETED_MAX_RATIO {
            let h = t / 4096.0;
            Self::bracketed(law, t, h, n, horizon.1)
        } else {
            Self::mean_preserving(law, t, t / 32768.0, n, horizon.1)
        }
    }

    /// `p_n` from the midpoints of rigorous lattice brackets.
    pub fn bracketed(law: &IncrementLaw, t: f64, h: f64, horizon: u64, truncation: f64) -> Result<Self> {
        let mut b = SurvivalTableBuilder::new(law, t, h)?;
        let mut probs = Vec::with_capacity(horizon as usize);
        let mut tv = 0.0;
        for _ in 0..horizon {
            let r = b.next_row();
            probs.push(0.5 * (r.cdf_lo + r.cdf_hi));
            tv += 0.5 * (r.cdf_hi - r.cdf_lo);
        }
        Ok(CountingSampler {
            t,
            probs,
            truncation,
            discretization: Some(tv),
            source: CountingSource::Bracketed { h },
        })
    }

    /// `p_n` from the mean-preserving FFT ladder read through the triangular kernel.
    pub fn mean_preserving(law: &IncrementLaw, t: f64, h: f64, horizon: u64, truncation: f64) -> Result<Self> {
        // grid reaches one cell past t so the kernel at t is complete
        let k = (t / h).floor() as usize + 3;
        let mut lad = FftLadder::mean_preserving(law, h, k)?;
        let probs = (0..horizon)
            .map(|_| {
                let (m, _) = lad.advance();
                smoothed_cdf(m, h, t).clamp(0.0, 1.0)
            })
            .collect();
        Ok(CountingSampler {
            t,
            probs,
            truncation,
            discretization: None,
            source: CountingSource::MeanPreserving { h },
        })
    }

    pub fn horizon(&self) -> u64 {
        self.probs.len() as u64
    }

    /// `E N̂(t)` over the retained indicators.
    pub fn mean(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Var N̂(t)` over the retained indicators.
    pub fn variance(&self) -> f64 {
        self.probs.iter().map(|p| p * (1.0 - p)).sum()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> u64 {
        self.probs.iter().filter(|&&p| stream.uniform() < p).count() as u64
    }
}

/// Horizon `N` with `Σ_{n>N} P{S_n ≤ t} ≤ ε`, and the bound achieved.
pub fn counting_horizon(law: &IncrementLaw, t: f64, eps: f64) -> Result<(u64, f64)> {
    let cb = ChernoffBound::new(law, t)?;
    let mut n = default_horizon(law, t).unwrap_or(1).max(1);
    loop {
        if let Some(r) = cb.cdf_tail(n) {
            if r <= eps {
                return Ok((n, r));
            }
        }
        if n > 1_000_000_000 {
            return Err(Error::Config(format!("no horizon below 1e9 reaches ε = {eps:e}")));
        }
        n += n / 16 + 1;
    }
}

/// One exact-in-law draw of `N̂(t)` up to total variation `ε`.
pub fn counting(law: &IncrementLaw, t: f64, stream: &mut RandomStream, eps: f64) -> Result<u64> {
    Ok(CountingSampler::new(law, t, eps)?.sample(stream))
}

/// Exact law of a sum of independent Bernoulli(`p_n`) variables.
pub fn poisson_binomial(probs: &[f64]) -> Vec<f64> {
    let mut dist = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &d) in dist.iter().enumerate() {
            next[k] += d * (1.0 - p);
            next[k + 1] += d * p;
        }
        dist = next;
    }
    dist
}

/// Cap on the number of indices visited by [`first_passage`].
pub const PASSAGE_CAP: u64 = 1_000_000_000;

/// Samples fresh `Ŝ_1, Ŝ_2, …` until the running maximum exceeds `t`.
///
/// The gamma family draws each `Ŝ_n` from its closed form; other laws sum `n`
/// fresh increments, which is exact but costs `O(τ̂²)`.
pub fn first_passage(law: &IncrementLaw, t: f64, stream: &mut RandomStream) -> Result<PassageResult> {
    let mut maxima = Vec::new();
    let mut m = f64::NEG_INFINITY;
    for n in 1..=PASSAGE_CAP {
        let s = match law.sample_gamma_sum(n, stream) {
            Some(s) => s,
            None => naive_sum(law, n, stream),
        };
        m = m.max(s);
        maxima.push(m);
        if m > t {
            return Ok(PassageResult { t, tau: n, maxima });
        }
    }
    Err(Error::Convergence(format!("maxima stayed below {t} for {PASSAGE_CAP} indices")))
}

/// `τ(t) = inf{n ≥ 1 : S_n > t}` for the ordinary (coupled) walk.
pub fn coupled_first_passage(law: &IncrementLaw, t: f64, stream: &mut RandomStream) -> u64 {
    let mut s = 0.0;
    let mut n = 0;
    loop {
        n += 1;
        s += law.sample(stream);
        if s > t {
            return n;
        }
    }
}

/// Brackets on `P{τ̂(t) > n} = ∏_{k≤n} P{S_k ≤ t}` and on `P{τ(t) > n} = P{S_n ≤ t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageTail {
    pub lo: f64,
    pub hi: f64,
    pub coupled_lo: f64,
    pub coupled_hi: f64,
}

/// Exact (gamma family) or lattice-bracketed (step `h`) passage tails.
pub fn passage_tail_exact(law: &IncrementLaw, t: f64, n: u64, h: f64) -> Result<PassageTail> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if let Some((k, rate)) = law.gamma_parameters() {
        let mut log_prod = 0.0;
        let mut last = 0.0;
        for i in 1..=n {
            last = ln_gamma_pq(k * i as f64, rate * t)?.0;
            log_prod += last;
        }
        // closed forms are accurate to a few ulps per factor
        let slack = 1e-13 * n as f64;
        let (p, c) = (log_prod.exp(), last.exp());
        return Ok(PassageTail {
            lo: p * (1.0 - slack),
            hi: (p * (1.0 + slack)).min(1.0),
            coupled_lo: c * (1.0 - 1e-13),
            coupled_hi: (c * (1.0 + 1e-13)).min(1.0),
        });
    }
    let mut b = SurvivalTableBuilder::new(law, t, h)?;
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut row = b.next_row();
    lo *= row.cdf_lo;
    hi *= row.cdf_hi;
    for _ in 1..n {
        row = b.next_row();
        lo *= row.cdf_lo;
        hi *= row.cdf_hi;
    }
    Ok(PassageTail {
        lo,
        hi,
        coupled_lo: row.cdf_lo,
        coupled_hi: row.cdf_hi,
    })
}
