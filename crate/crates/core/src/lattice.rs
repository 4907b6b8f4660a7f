//! Discretized laws of `S_n` with two-sided stochastic rounding.
//!
//! Rounding every increment down to the grid `hℤ` makes `S_n` stochastically
//! smaller, rounding up makes it larger, so the two iterated convolutions
//! bracket `P{S_n > t}` rigorously. The mass beyond the last grid point is kept
//! as a lump and computed from positive suffix sums, which keeps tiny tail
//! probabilities at full relative precision.

use crate::dist::IncrementLaw;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::fmt::Write as _;

/// Largest grid length accepted before reporting a configuration error.
pub const MAX_GRID: usize = 1 << 23;

/// Direction of the stochastic rounding applied to each increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

/// Law on `{0, h, …, (K−1)h}` plus a lump of mass at or beyond `Kh`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    h: f64,
    masses: Vec<f64>,
    lump: f64,
}

impl LatticeLaw {
    pub fn new(h: f64, masses: Vec<f64>, lump: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("lattice step must be positive, got {h}")));
        }
        if masses.is_empty() {
            return Err(Error::Domain("lattice needs at least one grid point".into()));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) || !(lump >= 0.0) {
            return Err(Error::Domain("lattice masses must be nonnegative".into()));
        }
        let total: f64 = masses.iter().sum::<f64>() + lump;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("lattice masses sum to {total}, not 1")));
        }
        Ok(LatticeLaw { h, masses, lump })
    }

    /// Unit mass at the origin.
    pub fn point_mass_zero(h: f64, k: usize) -> Self {
        let mut masses = vec![0.0; k.max(1)];
        masses[0] = 1.0;
        LatticeLaw { h, masses, lump: 0.0 }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn lump(&self) -> f64 {
        self.lump
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.lump
    }

    /// `P{X ≥ jh}`, summed from the far end.
    pub fn tail_from(&self, j: usize) -> f64 {
        self.lump + self.masses.get(j..).map_or(0.0, |s| s.iter().rev().sum())
    }

    /// `P{X ≤ jh}`.
    pub fn cdf_at(&self, j: usize) -> f64 {
        self.masses[..=j.min(self.masses.len() - 1)].iter().sum()
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("lattice step must be positive, got {h}")))
    }
}

fn discretize_raw(law: &IncrementLaw, h: f64, k: usize, dir: Rounding) -> LatticeLaw {
    let mut masses = vec![0.0; k];
    let lump = match dir {
        Rounding::Down => {
            // ⌊ξ/h⌋ = j on [jh, (j+1)h)
            for (j, m) in masses.iter_mut().enumerate() {
                *m = law.interval_mass(j as f64 * h, (j + 1) as f64 * h);
            }
            law.survival(k as f64 * h)
        }
        Rounding::Up => {
            // ⌈ξ/h⌉ = j on ((j−1)h, jh]; the atom at 0 is P{ξ ≤ 0}
            masses[0] = law.cdf(0.0);
            for (j, m) in masses.iter_mut().enumerate().skip(1) {
                *m = law.interval_mass((j - 1) as f64 * h, j as f64 * h);
            }
            law.survival((k - 1) as f64 * h)
        }
    };
    LatticeLaw { h, masses, lump }
}

/// Rounds the increment law down or up onto `{0, h, …, (K−1)h}`.
pub fn discretize(law: &IncrementLaw, h: f64, k: usize, dir: Rounding) -> Result<LatticeLaw> {
    check_step(h)?;
    if k == 0 || k > MAX_GRID {
        return Err(Error::Config(format!("grid length {k} outside 1..={MAX_GRID}")));
    }
    let l = discretize_raw(law, h, k, dir);
    if l.lump > 0.5 {
        return Err(Error::Config(format!(
            "grid covers too little of the law: overflow mass {} beyond {}",
            l.lump,
            k as f64 * h
        )));
    }
    Ok(l)
}

fn first_nonzero(v: &[f64]) -> usize {
    v.iter().position(|&x| x != 0.0).unwrap_or(v.len())
}

/// Suffix sums `T[m] = lump + Σ_{i ≥ m} v_i` for `m = 0..=len`.
fn suffix_tails(v: &[f64], lump: f64) -> Vec<f64> {
    let mut t = vec![0.0; v.len() + 1];
    t[v.len()] = lump;
    for i in (0..v.len()).rev() {
        t[i] = t[i + 1] + v[i];
    }
    t
}

/// `P{A + B ≥ Kh}` from positive terms only.
fn sum_lump(a: &[f64], a_lump: f64, b_tails: &[f64], k: usize) -> f64 {
    let kb = b_tails.len() - 1;
    let mut s = a_lump + a.get(k..).map_or(0.0, |r| r.iter().sum::<f64>());
    for (j, &aj) in a[..k.min(a.len())].iter().enumerate() {
        if aj != 0.0 {
            let m = k - j;
            s += aj * if m <= kb { b_tails[m] } else { b_tails[kb] };
        }
    }
    s
}

fn direct_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let k = out.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    let b0 = first_nonzero(b);
    let a0 = first_nonzero(a);
    for i in a0..k.min(a.len()) {
        let ai = a[i];
        if ai == 0.0 || i + b0 >= k {
            continue;
        }
        let end = (k - i).min(b.len());
        for (c, &bj) in out[i + b0..i + end].iter_mut().zip(&b[b0..end]) {
            *c += ai * bj;
        }
    }
}

fn check_same_step(a: &LatticeLaw, b: &LatticeLaw) -> Result<()> {
    if (a.h - b.h).abs() > 1e-14 * a.h.max(b.h) {
        return Err(Error::Domain(format!("lattice steps differ: {} vs {}", a.h, b.h)));
    }
    Ok(())
}

/// Law of `A + B` on the shorter of the two grids, by direct summation.
pub fn convolve(a: &LatticeLaw, b: &LatticeLaw) -> Result<LatticeLaw> {
    check_same_step(a, b)?;
    let k = a.len().min(b.len());
    let mut masses = vec![0.0; k];
    direct_into(&a.masses, &b.masses, &mut masses);
    let lump = sum_lump(&a.masses, a.lump, &suffix_tails(&b.masses, b.lump), k);
    Ok(LatticeLaw { h: a.h, masses, lump })
}

/// Same result as [`convolve`] through an FFT. Interior masses carry an
/// absolute error near machine epsilon, so tiny tail masses lose their
/// relative precision; the lump is still formed from exact suffix sums.
pub fn convolve_fft(a: &LatticeLaw, b: &LatticeLaw) -> Result<LatticeLaw> {
    check_same_step(a, b)?;
    let k = a.len().min(b.len());
    let masses = fft_convolve_prefix(&a.masses[..k], &b.masses[..k], k);
    let lump = sum_lump(&a.masses, a.lump, &suffix_tails(&b.masses, b.lump), k);
    Ok(LatticeLaw { h: a.h, masses, lump })
}

/// First `k` coefficients of the linear convolution of `a` and `b`, clamped at 0.
pub(crate) fn fft_convolve_prefix(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let n = (a.len() + b.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..k].iter().map(|c| (c.re * scale).max(0.0)).collect()
}

/// Linear-dispersal rounding: the mass of each cell `[jh, (j+1)h)` is split
/// between its two end points so that the cell's first moment is preserved.
/// Mass beyond `(K−1)h` goes to the lump.
pub fn mean_preserving(law: &IncrementLaw, h: f64, k: usize) -> Result<LatticeLaw> {
    check_step(h)?;
    if k < 2 || k > MAX_GRID {
        return Err(Error::Config(format!("grid length {k} outside 2..={MAX_GRID}")));
    }
    let mut masses = vec![0.0; k];
    let mut pm_prev = 0.0;
    for j in 0..k - 1 {
        let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
        let m = law.interval_mass(a, b);
        let pm = law.partial_mean(b);
        let up = ((pm - pm_prev - a * m) / h).clamp(0.0, m);
        pm_prev = pm;
        masses[j] += m - up;
        masses[j + 1] += up;
    }
    let lump = law.survival((k - 1) as f64 * h);
    Ok(LatticeLaw { h, masses, lump })
}

/// `P{X ≤ x}` for a mean-preserving lattice law read as a continuous law:
/// each atom `m_j` is spread by the triangular kernel on `[(j−1)h, (j+1)h]`.
pub fn smoothed_cdf(masses: &[f64], h: f64, x: f64) -> f64 {
    if x < -h {
        return 0.0;
    }
    let y = x / h;
    let i = y.floor();
    let f = y - i;
    let i = i as i64;
    let at = |j: i64| {
        if j >= 0 && (j as usize) < masses.len() {
            masses[j as usize]
        } else {
            0.0
        }
    };
    let full: f64 = if i > 0 { masses[..(i as usize).min(masses.len())].iter().sum() } else { 0.0 };
    full + at(i) * (1.0 - 0.5 * (1.0 - f) * (1.0 - f)) + at(i + 1) * 0.5 * f * f
}

/// Successive laws of `S_n = ξ₁ + … + ξ_n` for a lattice increment, by FFT.
///
/// Interior masses carry absolute errors near machine epsilon; this is meant
/// for sampling and for probabilities that are not deep in a tail.
pub struct FftLadder {
    k: usize,
    n: u64,
    xi_hat: Vec<Complex<f64>>,
    xi_tails: Vec<f64>,
    cur: Vec<f64>,
    cur_lump: f64,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl FftLadder {
    /// Ladder over the mean-preserving rounding of `law`.
    pub fn mean_preserving(law: &IncrementLaw, h: f64, k: usize) -> Result<Self> {
        Ok(Self::new(&mean_preserving(law, h, k)?))
    }

    pub fn new(xi: &LatticeLaw) -> Self {
        let (h, k) = (xi.h, xi.len());
        let len = (2 * k).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut xi_hat: Vec<Complex<f64>> = xi.masses.iter().map(|&x| Complex::new(x, 0.0)).collect();
        xi_hat.resize(len, Complex::new(0.0, 0.0));
        fwd.process(&mut xi_hat);
        FftLadder {
            k,
            n: 0,
            xi_tails: suffix_tails(&xi.masses, xi.lump),
            xi_hat,
            cur: LatticeLaw::point_mass_zero(h, k).masses,
            cur_lump: 0.0,
            fwd,
            inv,
            buf: vec![Complex::new(0.0, 0.0); len],
        }
    }

    /// Index `n` of the law currently held.
    pub fn index(&self) -> u64 {
        self.n
    }

    pub fn masses(&self) -> &[f64] {
        &self.cur
    }

    pub fn lump(&self) -> f64 {
        self.cur_lump
    }

    /// Advances to `S_{n+1}` and returns its masses and lump.
    pub fn advance(&mut self) -> (&[f64], f64) {
        let k = self.k;
        let lump = sum_lump(&self.cur, self.cur_lump, &self.xi_tails, k);
        for (b, &c) in self.buf.iter_mut().zip(self.cur.iter().chain(std::iter::repeat(&0.0))) {
            *b = Complex::new(c, 0.0);
        }
        self.fwd.process(&mut self.buf);
        for (b, x) in self.buf.iter_mut().zip(&self.xi_hat) {
            *b *= x;
        }
        self.inv.process(&mut self.buf);
        let scale = 1.0 / self.buf.len() as f64;
        for (c, b) in self.cur.iter_mut().zip(&self.buf) {
            *c = (b.re * scale).max(0.0);
        }
        self.cur_lump = lump;
        self.n += 1;
        (&self.cur, self.cur_lump)
    }
}

/// One row of a survival table: brackets on `P{S_n > t}` and on `P{S_n ≤ t}`.
///
/// `cdf_lo = 1 − hi` and `cdf_hi = 1 − lo` are stored separately because each
/// side is accurate where it is small.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalRow {
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
    pub cdf_lo: f64,
    pub cdf_hi: f64,
}

fn neg_log_prob(p: f64, complement: f64) -> f64 {
    if p > 0.5 {
        -(-complement).ln_1p()
    } else {
        -p.ln()
    }
}

impl SurvivalRow {
    /// Lower bound on `−log P{S_n > t}`.
    pub fn neg_log_hi(&self) -> f64 {
        neg_log_prob(self.hi, self.cdf_lo)
    }

    /// Upper bound on `−log P{S_n > t}`.
    pub fn neg_log_lo(&self) -> f64 {
        neg_log_prob(self.lo, self.cdf_hi)
    }
}

/// Iterates the down- and up-rounded convolutions one `n` at a time.
pub struct SurvivalTableBuilder {
    t: f64,
    h: f64,
    n: u64,
    xi_down: Vec<f64>,
    xi_up: Vec<f64>,
    tails_down: Vec<f64>,
    tails_up: Vec<f64>,
    cur_down: Vec<f64>,
    cur_up: Vec<f64>,
    cur_lump_down: f64,
    cur_lump_up: f64,
    scratch: Vec<f64>,
    max_mass_defect: f64,
}

impl SurvivalTableBuilder {
    pub fn new(law: &IncrementLaw, t: f64, h: f64) -> Result<Self> {
        check_step(h)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("level must be finite and nonnegative, got {t}")));
        }
        let j = (t / h).floor();
        if j + 1.0 > MAX_GRID as f64 {
            return Err(Error::Config(format!(
                "t/h = {} needs more than {MAX_GRID} grid points; increase h",
                t / h
            )));
        }
        let k = j as usize + 1;
        let down = discretize_raw(law, h, k, Rounding::Down);
        let up = discretize_raw(law, h, k, Rounding::Up);
        Ok(SurvivalTableBuilder {
            t,
            h,
            n: 0,
            tails_down: suffix_tails(&down.masses, down.lump),
            tails_up: suffix_tails(&up.masses, up.lump),
            cur_down: LatticeLaw::point_mass_zero(h, k).masses,
            cur_up: LatticeLaw::point_mass_zero(h, k).masses,
            xi_down: down.masses,
            xi_up: up.masses,
            cur_lump_down: 0.0,
            cur_lump_up: 0.0,
            scratch: vec![0.0; k],
            max_mass_defect: 0.0,
        })
    }

    pub fn level(&self) -> f64 {
        self.t
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Largest `|Σ masses + lump − 1|` seen so far.
    pub fn max_mass_defect(&self) -> f64 {
        self.max_mass_defect
    }

    /// Advances to `n + 1` and returns its row.
    pub fn next_row(&mut self) -> SurvivalRow {
        let k = self.scratch.len();
        let lump = sum_lump(&self.cur_down, self.cur_lump_down, &self.tails_down, k);
        direct_into(&self.cur_down, &self.xi_down, &mut self.scratch);
        std::mem::swap(&mut self.cur_down, &mut self.scratch);
        self.cur_lump_down = lump;
        let lump = sum_lump(&self.cur_up, self.cur_lump_up, &self.tails_up, k);
        direct_into(&self.cur_up, &self.xi_up, &mut self.scratch);
        std::mem::swap(&mut self.cur_up, &mut self.scratch);
        self.cur_lump_up = lump;
        self.n += 1;
        let cdf_hi: f64 = self.cur_down.iter().sum();
        let cdf_lo: f64 = self.cur_up.iter().sum();
        let defect = (cdf_hi + self.cur_lump_down - 1.0)
            .abs()
            .max((cdf_lo + self.cur_lump_up - 1.0).abs());
        self.max_mass_defect = self.max_mass_defect.max(defect);
        SurvivalRow {
            n: self.n,
            lo: self.cur_lump_down.min(1.0),
            hi: self.cur_lump_up.min(1.0),
            cdf_lo: cdf_lo.min(1.0),
            cdf_hi: cdf_hi.min(1.0),
        }
    }
}

/// Brackets on `P{S_n > t}` for `n = 1..=N` plus a bound on the remaining
/// `Σ_{n>N} −log P{S_n > t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    pub t: f64,
    pub h: f64,
    pub horizon: u64,
    pub rows: Vec<SurvivalRow>,
    /// `None` when no Chernoff exponent gives a bound below one.
    pub remainder: Option<f64>,
    pub max_mass_defect: f64,
}

impl SurvivalTable {
    /// CSV with columns `n,lo,hi`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,lo,hi\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:e},{:e}", r.n, r.lo, r.hi);
        }
        s
    }
}

/// Default horizon `⌈2t/μ⌉` (at least 1).
pub fn default_horizon(law: &IncrementLaw, t: f64) -> Option<u64> {
    let mu = law.mean();
    if mu.is_finite() {
        Some(((2.0 * t / mu).ceil() as u64).max(1))
    } else {
        None
    }
}

/// Survival brackets up to the horizon `N` (default `⌈2t/μ⌉`; required when `μ = ∞`).
pub fn survival_table(law: &IncrementLaw, t: f64, h: f64, horizon: Option<u64>) -> Result<SurvivalTable> {
    let n = match horizon.or_else(|| default_horizon(law, t)) {
        Some(n) if n >= 1 => n,
        Some(_) => return Err(Error::Domain("horizon must be at least 1".into())),
        None => return Err(Error::Precondition("infinite mean: a horizon must be supplied".into())),
    };
    let mut b = SurvivalTableBuilder::new(law, t, h)?;
    let rows: Vec<SurvivalRow> = (0..n).map(|_| b.next_row()).collect();
    let remainder = ChernoffBound::new(law, t)?.remainder(n);
    Ok(SurvivalTable {
        t,
        h,
        horizon: n,
        rows,
        remainder,
        max_mass_defect: b.max_mass_defect(),
    })
}

/// Extends the table past the default horizon until the remainder is at most `tol`.
pub fn survival_table_to_tolerance(law: &IncrementLaw, t: f64, h: f64, tol: f64, max_horizon: u64) -> Result<SurvivalTable> {
    let cb = ChernoffBound::new(law, t)?;
    let start = default_horizon(law, t).unwrap_or(1);
    let mut n = start;
    while !matches!(cb.remainder(n), Some(r) if r <= tol) {
        if n >= max_horizon {
            return Err(Error::Config(format!(
                "remainder above {tol:e} even at horizon {max_horizon}"
            )));
        }
        n = (n + n / 8 + 1).min(max_horizon);
    }
    let mut b = SurvivalTableBuilder::new(law, t, h)?;
    let rows: Vec<SurvivalRow> = (0..n).map(|_| b.next_row()).collect();
    Ok(SurvivalTable {
        t,
        h,
        horizon: n,
        rows,
        remainder: cb.remainder(n),
        max_mass_defect: b.max_mass_defect(),
    })
}

/// Chernoff bound `P{S_n ≤ t} ≤ e^{ut} L(u)^n`, `L(u) = E e^{−uξ}`, minimized over `u`.
pub struct ChernoffBound {
    law: IncrementLaw,
    t: f64,
    grid: Vec<(f64, f64)>,
}

const CHERNOFF_GRID: usize = 600;

impl ChernoffBound {
    pub fn new(law: &IncrementLaw, t: f64) -> Result<Self> {
        let scale = 1.0 / law.survival_quantile(0.5);
        let (lo, hi) = ((1e-6 * scale).ln(), (1e6 * scale).ln());
        let grid = (0..CHERNOFF_GRID)
            .map(|i| {
                let u = (lo + (hi - lo) * i as f64 / (CHERNOFF_GRID - 1) as f64).exp();
                law.log_mgf(-u).map(|l| (u, l))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChernoffBound { law: *law, t, grid })
    }

    /// `ln x_{N+1}` at `u`, with `ln L(u)` supplied.
    fn log_x(&self, u: f64, log_l: f64, horizon: u64) -> f64 {
        u * self.t + (horizon + 1) as f64 * log_l
    }

    /// Minimizes `objective(u, ln L(u))` over the grid then refines by golden
    /// section in `ln u` around the best grid point.
    fn minimize<F: Fn(f64, f64) -> f64>(&self, objective: F) -> Option<f64> {
        let (mut best_i, mut best) = (0usize, f64::INFINITY);
        for (i, &(u, l)) in self.grid.iter().enumerate() {
            let v = objective(u, l);
            if v < best {
                best = v;
                best_i = i;
            }
        }
        if !best.is_finite() {
            return None;
        }
        let lo_i = best_i.saturating_sub(1);
        let hi_i = (best_i + 1).min(self.grid.len() - 1);
        let (mut a, mut b) = (self.grid[lo_i].0.ln(), self.grid[hi_i].0.ln());
        let eval = |lu: f64| -> f64 {
            let u = lu.exp();
            match self.law.log_mgf(-u) {
                Ok(l) => objective(u, l),
                Err(_) => f64::INFINITY,
            }
        };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (eval(c), eval(d));
        for _ in 0..40 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(d);
            }
        }
        Some(best.min(fc).min(fd))
    }

    /// Bound on `Σ_{n>N} −log P{S_n > t}`:
    /// `x_{N+1} / ((1 − L)(1 − x_{N+1}))`, or `None` if `x_{N+1} ≥ 1` for every `u`.
    pub fn remainder(&self, horizon: u64) -> Option<f64> {
        self.minimize(|u, l| {
            let lx = self.log_x(u, l, horizon);
            if lx < 0.0 && l < 0.0 {
                lx - (-l.exp_m1()).ln() - (-lx.exp_m1()).ln()
            } else {
                f64::INFINITY
            }
        })
        .map(f64::exp)
    }

    /// Bound on `Σ_{n>N} P{S_n ≤ t}`: `x_{N+1} / (1 − L)`.
    pub fn cdf_tail(&self, horizon: u64) -> Option<f64> {
        self.minimize(|u, l| {
            let lx = self.log_x(u, l, horizon);
            if l < 0.0 {
                lx - (-l.exp_m1()).ln()
            } else {
                f64::INFINITY
            }
        })
        .map(f64::exp)
    }
}

/// Upper bound on `Σ_{n>N} −log P{S_n > t}`.
pub fn chernoff_remainder(law: &IncrementLaw, t: f64, horizon: u64) -> Result<f64> {
    if !law.mean().is_finite() {
        return Err(Error::Precondition("chernoff remainder needs a finite mean".into()));
    }
    ChernoffBound::new(law, t)?.remainder(horizon).ok_or_else(|| {
        Error::Config(format!(
            "Chernoff bound is not below one at horizon {horizon}; use a horizon of at least {}",
            default_horizon(law, t).unwrap_or(horizon + 1)
        ))
    })
}

/// Bracket on the renewal function `V(t) = Σ_{n≥1} P{S_n ≤ t}`.
pub fn renewal_v(law: &IncrementLaw, t: f64, h: f64) -> Result<(f64, f64)> {
    if !law.mean().is_finite() {
        return Err(Error::Precondition("renewal function bracket needs a finite mean".into()));
    }
    let cb = ChernoffBound::new(law, t)?;
    let tol = 1e-9 * t.max(1.0);
    let mut n = default_horizon(law, t).unwrap_or(1);
    let tail = loop {
        match cb.cdf_tail(n) {
            Some(r) if r <= tol => break r,
            _ => n += n / 8 + 1,
        }
        if n > 100_000_000 {
            return Err(Error::Config("renewal horizon exceeded 1e8".into()));
        }
    };
    let mut b = SurvivalTableBuilder::new(law, t, h)?;
    let (mut lo, mut hi) = (0.0, 0.0);
    for _ in 0..n {
        let r = b.next_row();
        lo += r.cdf_lo;
        hi += r.cdf_hi;
    }
    Ok((lo, hi + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RandomStream;
    use crate::special::{erlang_survival, ln_erlang_cdf};

    fn exp1() -> IncrementLaw {
        IncrementLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn down_mass_is_cell_probability() {
        let l = discretize(&exp1(), 0.01, 1000, Rounding::Down).unwrap();
        for j in [0usize, 1, 10, 500, 999] {
            let want = (-(j as f64) * 0.01f64).exp() * -(-0.01f64).exp_m1();
            assert!((l.masses()[j] - want).abs() < 1e-12 * want, "j={j}: {} vs {want}", l.masses()[j]);
        }
        assert!((l.total_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pareto_has_no_mass_below_cutoff() {
        let p = IncrementLaw::pareto(2.5, 1.0).unwrap();
        for dir in [Rounding::Down, Rounding::Up] {
            let l = discretize(&p, 0.01, 2000, dir).unwrap();
            assert!(l.masses()[..99].iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn coverage_error() {
        assert!(matches!(discretize(&exp1(), 0.01, 10, Rounding::Down), Err(Error::Config(_))));
    }

    #[test]
    fn bracket_shrinks_onto_single_tail() {
        let want = (-2.0f64).exp();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.01, 0.001] {
            let t = survival_table(&exp1(), 2.0, h, Some(1)).unwrap();
            let r = t.rows[0];
            assert!(r.lo <= want && want <= r.hi);
            assert!(r.hi - r.lo < prev);
            prev = r.hi - r.lo;
        }
        assert!(prev < 2e-3 * want);
    }

    #[test]
    fn identity_element() {
        let l = discretize(&exp1(), 0.05, 200, Rounding::Up).unwrap();
        let c = convolve(&LatticeLaw::point_mass_zero(0.05, 200), &l).unwrap();
        assert_eq!(c.masses(), l.masses());
        assert!((c.lump() - l.lump()).abs() < 1e-17);
    }

    #[test]
    fn two_fold_bracket() {
        let h = 0.005;
        let k = (2.0 / h) as usize + 1;
        let d = discretize(&exp1(), h, k, Rounding::Down).unwrap();
        let u = discretize(&exp1(), h, k, Rounding::Up).unwrap();
        let lo = convolve(&d, &d).unwrap().lump();
        let hi = convolve(&u, &u).unwrap().lump();
        let want = 3.0 * (-2.0f64).exp();
        assert!(lo <= want && want <= hi, "{lo} {want} {hi}");
    }

    #[test]
    fn fft_matches_direct() {
        let mut s = RandomStream::new(99, 0);
        let mk = |s: &mut RandomStream| {
            let mut v: Vec<f64> = (0..512).map(|_| s.uniform()).collect();
            let tot: f64 = v.iter().sum::<f64>() * 1.25;
            v.iter_mut().for_each(|x| *x /= tot);
            let lump = 1.0 - v.iter().sum::<f64>();
            LatticeLaw::new(0.1, v, lump).unwrap()
        };
        let a = mk(&mut s);
        let b = mk(&mut s);
        let d = convolve(&a, &b).unwrap();
        let f = convolve_fft(&a, &b).unwrap();
        let diff = d
            .masses()
            .iter()
            .zip(f.masses())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        assert_eq!(d.lump(), f.lump());
        assert!(convolve(&a, &LatticeLaw::point_mass_zero(0.2, 10)).is_err());
    }

    #[test]
    fn table_contains_erlang_and_obeys_paper_bounds() {
        let law = exp1();
        let tab = survival_table(&law, 10.0, 0.002, None).unwrap();
        assert_eq!(tab.horizon, 20);
        let mut prev = (0.0, 0.0);
        for r in &tab.rows {
            let q = erlang_survival(r.n, 10.0, 1.0);
            assert!(r.lo <= q && q <= r.hi, "n={}: {} {} {}", r.n, r.lo, q, r.hi);
            let slack = 1.0 - 1e-12;
            assert!(r.hi >= slack * law.survival(10.0 / r.n as f64).powi(r.n as i32));
            assert!(r.hi >= slack * (1.0 - law.cdf(10.0).powi(r.n as i32)));
            assert!(r.lo >= prev.0 && r.hi >= prev.1);
            prev = (r.lo, r.hi);
        }
        assert!(tab.max_mass_defect < 1e-12);
        assert!(tab.remainder.unwrap() > 0.0);
        assert!(tab.to_csv().starts_with("n,lo,hi\n1,"));
    }

    #[test]
    fn bracket_width_halves_with_step() {
        let law = IncrementLaw::gamma(2.0, 1.0).unwrap();
        let w = |h: f64| {
            survival_table(&law, 6.0, h, Some(8))
                .unwrap()
                .rows
                .iter()
                .map(|r| r.hi - r.lo)
                .fold(0.0, f64::max)
        };
        let ratio = w(0.005) / w(0.01);
        assert!((0.3..=0.7).contains(&ratio), "{ratio}");
    }

    #[test]
    fn chernoff_remainder_dominates_direct_sum() {
        // Σ_{n=61}^{500} −log Q(n, 20); terms beyond 500 are below 1e−100
        let oracle: f64 = (61..=500u64).map(|n| -(-ln_erlang_cdf(n, 20.0).exp()).ln_1p()).sum();
        assert!((oracle - 2.019_556_762_447_155e-13).abs() < 1e-24);
        let b = chernoff_remainder(&exp1(), 20.0, 60).unwrap();
        assert!(b >= oracle, "{b} < {oracle}");
        let mut prev = f64::INFINITY;
        for n in [60, 80, 120, 200, 400] {
            let r = chernoff_remainder(&exp1(), 20.0, n).unwrap();
            assert!(r <= prev);
            prev = r;
        }
        assert!(prev < 1e-30);
        assert!(matches!(chernoff_remainder(&exp1(), 20.0, 5), Err(Error::Config(_))));
    }

    #[test]
    fn mean_preserving_keeps_mean_and_mass() {
        for law in [exp1(), IncrementLaw::pareto(2.5, 1.0).unwrap(), IncrementLaw::weibull(0.5, 1.0).unwrap()] {
            let l = mean_preserving(&law, 0.01, 200_000).unwrap();
            assert!((l.total_mass() - 1.0).abs() < 1e-12);
            let m: f64 = l.masses().iter().enumerate().map(|(j, &p)| j as f64 * 0.01 * p).sum();
            // remaining mean sits beyond the grid
            let beyond = law.mean() - law.partial_mean(199_999.0 * 0.01);
            assert!((m + beyond - law.mean()).abs() < 1e-9, "{law}");
        }
    }

    #[test]
    fn ladder_tracks_erlang() {
        let mut lad = FftLadder::mean_preserving(&exp1(), 0.01, 4096).unwrap();
        for n in 1..=10u64 {
            let (m, lump) = lad.advance();
            let cdf = smoothed_cdf(m, 0.01, 10.0);
            let want = 1.0 - erlang_survival(n, 10.0, 1.0);
            assert!((cdf - want).abs() < 2e-5, "n={n}: {cdf} vs {want}");
            assert!((m.iter().sum::<f64>() + lump - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn renewal_function_brackets() {
        let (lo, hi) = renewal_v(&exp1(), 5.0, 0.001).unwrap();
        assert!(lo <= 5.0 && 5.0 <= hi && hi - lo < 0.01, "[{lo}, {hi}]");
        let (lo, hi) = renewal_v(&exp1(), 0.0, 0.001).unwrap();
        assert!(lo <= 0.0 && 0.0 <= hi && hi < 1e-2);
        // −1 ≤ V(t) − t/μ ≤ Eξ²/μ² − 1
        let g = IncrementLaw::gamma(2.0, 1.0).unwrap();
        let (lo, hi) = renewal_v(&g, 7.0, 0.002).unwrap();
        let (mu, m2) = (g.mean(), g.second_moment());
        assert!(hi >= 7.0 / mu - 1.0 && lo <= 7.0 / mu + m2 / (mu * mu) - 1.0);
    }
}
