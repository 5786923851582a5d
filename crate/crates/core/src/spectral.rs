//! Torus grid, real fields in Fourier space, Littlewood–Paley projectors and
//! the Sobolev norms built on them.
//!
//! Fourier convention: `û(ξ) = (1/2π) ∫_𝕋 u e^{−iξx} dx`, `u = Σ_ξ û(ξ) e^{iξx}`,
//! so that `∫_𝕋 |u|² = 2π Σ_ξ |û(ξ)|²`. Coefficients are stored in FFT order:
//! index `j` holds `ξ = j` for `j ≤ M/2` and `ξ = j − M` otherwise.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::envelope::DyadicSequence;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalised forward DFT (`Σ_j x_j e^{−2πijk/n}`).
pub fn fft_forward(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place unnormalised inverse DFT (`Σ_k x_k e^{+2πijk/n}`).
pub fn fft_inverse(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Uniform collocation grid on `𝕋 = ℝ/2πℤ` with `M` points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    m: usize,
}

impl TorusGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::InvalidGrid(m));
        }
        Ok(TorusGrid { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nyquist(&self) -> i64 {
        (self.m / 2) as i64
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    /// Frequency stored at FFT index `j`.
    #[inline]
    pub fn freq(&self, j: usize) -> i64 {
        if j <= self.m / 2 {
            j as i64
        } else {
            j as i64 - self.m as i64
        }
    }

    /// FFT index of frequency `xi`, if represented (`−M/2 < ξ ≤ M/2`).
    pub fn index(&self, xi: i64) -> Option<usize> {
        let h = self.nyquist();
        if xi > h || xi <= -h {
            None
        } else if xi >= 0 {
            Some(xi as usize)
        } else {
            Some((xi + self.m as i64) as usize)
        }
    }

    /// Largest admissible Littlewood–Paley index, `M/2`.
    pub fn max_dyadic(&self) -> u64 {
        (self.m / 2) as u64
    }

    /// `0, 1, 2, 4, …, M/2`.
    pub fn dyadic_levels(&self) -> Vec<u64> {
        dyadic_levels_up_to(self.max_dyadic())
    }
}

/// `0, 1, 2, 4, …, max` for a power-of-two `max`.
pub fn dyadic_levels_up_to(max: u64) -> Vec<u64> {
    let mut v = vec![0];
    let mut n = 1;
    while n <= max {
        v.push(n);
        n *= 2;
    }
    v
}

pub fn check_dyadic(n: u64) -> Result<()> {
    if n == 0 || n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotDyadic(n))
    }
}

// ---------------------------------------------------------------- cutoffs

fn eta(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth even bump: `χ = 1` on `[−1, 1]`, `supp χ ⊂ [−2, 2]`.
pub fn chi(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let num = eta(2.0 - a);
    num / (num + eta(a - 1.0))
}

/// `φ(ξ) = χ(ξ) − χ(2ξ)`, supported in `1/2 ≤ |ξ| ≤ 2`.
pub fn phi(xi: f64) -> f64 {
    chi(xi) - chi(2.0 * xi)
}

/// `φ_N(ξ) = φ(ξ/N)` for dyadic `N ≥ 1`, `φ_0(ξ) = χ(2ξ)`.
#[inline]
pub fn phi_n(n: u64, xi: f64) -> f64 {
    if n == 0 {
        chi(2.0 * xi)
    } else {
        phi(xi / n as f64)
    }
}

/// Littlewood–Paley weight `Σ_N ω_N² (1∨N)^{2s} φ_N(ξ)²` for one frequency.
fn lp_weight(xi: f64, s: f64, levels: &[u64], env: Option<&DyadicSequence>) -> f64 {
    levels
        .iter()
        .map(|&n| {
            let p = phi_n(n, xi);
            if p == 0.0 {
                return 0.0;
            }
            let om = env.map_or(1.0, |e| e.omega(n));
            om * om * (n.max(1) as f64).powf(2.0 * s) * p * p
        })
        .sum()
}

/// Per-mode weights of the canonical `H^s_ω` norm, in FFT order.
///
/// `‖u‖²_{H^s_ω} = 2π Σ_ξ w(ξ) |û(ξ)|²`.
pub fn sobolev_weights(grid: TorusGrid, s: f64, env: Option<&DyadicSequence>) -> Result<Vec<f64>> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("Sobolev index must be finite, got {s}")));
    }
    let levels = grid.dyadic_levels();
    if let Some(e) = env {
        if e.max_n() < grid.max_dyadic() {
            return Err(Error::EnvelopeTooShort { needed: grid.max_dyadic(), have: e.max_n() });
        }
    }
    Ok((0..grid.m()).map(|j| lp_weight(grid.freq(j) as f64, s, &levels, env)).collect())
}

// ---------------------------------------------------------------- fields

/// A real-valued function on the torus, stored by its Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: TorusGrid) -> Self {
        Field { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.m()] }
    }

    /// Builds a field from FFT-ordered coefficients. Hermitian symmetry is not enforced.
    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.m() {
            return Err(Error::GridMismatch(grid.m(), coeffs.len()));
        }
        Ok(Field { grid, coeffs })
    }

    /// Transforms nodal values `u(x_j)`.
    pub fn from_values(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.m() {
            return Err(Error::GridMismatch(grid.m(), values.len()));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        let inv = 1.0 / grid.m() as f64;
        buf.iter_mut().for_each(|c| *c *= inv);
        Ok(Field { grid, coeffs: buf })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: TorusGrid, f: F) -> Self {
        let vals: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        Self::from_values(grid, &vals).expect("grid-sized values")
    }

    /// `amp · cos(k x)`.
    pub fn cos_mode(grid: TorusGrid, k: i64, amp: f64) -> Self {
        let mut u = Self::zeros(grid);
        if k == 0 {
            u.coeffs[0] = Complex64::new(amp, 0.0);
        } else if k.abs() == grid.nyquist() {
            u.coeffs[grid.m() / 2] = Complex64::new(amp, 0.0);
        } else {
            let i = grid.index(k).expect("mode inside the grid");
            let j = grid.index(-k).expect("mode inside the grid");
            u.coeffs[i] += Complex64::new(amp / 2.0, 0.0);
            u.coeffs[j] += Complex64::new(amp / 2.0, 0.0);
        }
        u
    }

    /// `amp · sin(k x)` for `0 < |k| < M/2`.
    pub fn sin_mode(grid: TorusGrid, k: i64, amp: f64) -> Self {
        let mut u = Self::zeros(grid);
        if k != 0 && k.abs() < grid.nyquist() {
            let i = grid.index(k).unwrap();
            let j = grid.index(-k).unwrap();
            u.coeffs[i] += Complex64::new(0.0, -amp / 2.0);
            u.coeffs[j] += Complex64::new(0.0, amp / 2.0);
        }
        u
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `û(ξ)`, zero outside the represented band.
    pub fn coeff(&self, xi: i64) -> Complex64 {
        self.grid.index(xi).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Nodal values (real part of the inverse transform).
    pub fn values(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft_inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            Err(Error::GridMismatch(self.grid.m(), other.grid.m()))
        } else {
            Ok(())
        }
    }

    /// `max_ξ |û(−ξ) − conj û(ξ)|` relative to `max |û|`.
    pub fn hermitian_residual(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let m = self.grid.m();
        let mut r: f64 = self.coeffs[0].im.abs().max(self.coeffs[m / 2].im.abs());
        for j in 1..m / 2 {
            r = r.max((self.coeffs[m - j] - self.coeffs[j].conj()).norm());
        }
        r / scale
    }

    /// Projects onto real-valued fields.
    pub fn symmetrize(&mut self) {
        let m = self.grid.m();
        self.coeffs[0].im = 0.0;
        self.coeffs[m / 2].im = 0.0;
        for j in 1..m / 2 {
            let avg = 0.5 * (self.coeffs[j] + self.coeffs[m - j].conj());
            self.coeffs[j] = avg;
            self.coeffs[m - j] = avg.conj();
        }
    }

    /// Applies a Fourier multiplier `m(ξ)`.
    pub fn map_multiplier<F: Fn(i64) -> Complex64>(&self, m: F) -> Field {
        let coeffs = self.coeffs.iter().enumerate().map(|(j, c)| c * m(self.grid.freq(j))).collect();
        Field { grid: self.grid, coeffs }
    }

    pub fn map_real_multiplier<F: Fn(i64) -> f64>(&self, m: F) -> Field {
        let coeffs = self.coeffs.iter().enumerate().map(|(j, c)| c * m(self.grid.freq(j))).collect();
        Field { grid: self.grid, coeffs }
    }

    /// `∂_x u`; the Nyquist mode is dropped so the result stays real.
    pub fn derivative(&self) -> Field {
        let h = self.grid.nyquist();
        self.map_multiplier(|xi| if xi == h { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, xi as f64) })
    }

    /// `D_x^σ u` (multiplier `|ξ|^σ`, zero at `ξ = 0`).
    pub fn riesz(&self, sigma: f64) -> Field {
        self.map_real_multiplier(|xi| if xi == 0 { 0.0 } else { (xi.abs() as f64).powf(sigma) })
    }

    /// `∫_𝕋 |u|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `∫_𝕋 u v` for real fields.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(2.0 * PI * self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a * b.conj()).re).sum::<f64>())
    }

    /// Zero-pads or truncates to another grid, splitting/merging the Nyquist mode.
    pub fn resample(&self, target: TorusGrid) -> Field {
        let mut out = Field::zeros(target);
        let (hs, ht) = (self.grid.nyquist(), target.nyquist());
        for j in 0..self.grid.m() {
            let xi = self.grid.freq(j);
            let c = self.coeffs[j];
            if xi == hs && ht > hs {
                let half = 0.5 * c;
                out.coeffs[target.index(xi).unwrap()] += half;
                out.coeffs[target.index(-xi).unwrap()] += half;
            } else if xi.abs() < ht || xi == ht {
                out.coeffs[target.index(xi).unwrap()] += c;
            } else if xi == -ht {
                out.coeffs[target.index(ht).unwrap()] += c;
            }
        }
        out
    }

    /// Values on a grid `factor` times finer (trigonometric interpolation).
    pub fn padded_values(&self, factor: usize) -> Vec<f64> {
        let g = TorusGrid::new(self.grid.m() * factor).expect("power-of-two padding");
        self.resample(g).values()
    }

    /// `‖u‖_{L^∞}` realised as the maximum over the 4×-padded collocation grid.
    pub fn sup_norm(&self) -> f64 {
        self.padded_values(4).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `∫_𝕋 u⁴`, exact for band-limited `u` (computed on the 4×-padded grid).
    pub fn l4_norm_pow4(&self) -> f64 {
        let v = self.padded_values(4);
        let n = v.len() as f64;
        2.0 * PI / n * v.iter().map(|x| x * x * x * x).sum::<f64>()
    }

    /// Exact product on the 2×-padded grid (no aliasing for two band-limited factors).
    pub fn product_padded(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let g = TorusGrid::new(self.grid.m() * 2).expect("power-of-two padding");
        let a = self.resample(g).values();
        let b = other.resample(g).values();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Field::from_values(g, &prod)
    }

    /// Zeroes `|ξ| > M/3` (two-thirds rule).
    pub fn dealiased(&self) -> Field {
        let cut = self.grid.m() as f64 / 3.0;
        self.map_real_multiplier(|xi| if (xi.abs() as f64) > cut { 0.0 } else { 1.0 })
    }

    /// Largest coefficient difference.
    pub fn max_coeff_diff(&self, other: &Field) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Field { grid: self.grid, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        Field { grid: self.grid, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, a: f64) -> Field {
        self.scaled(a)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}

/// Random real field with modes `1 ≤ |ξ| ≤ kmax` and amplitudes decaying like `(1+|ξ|)^{−decay}`.
pub fn random_field<R: Rng + ?Sized>(grid: TorusGrid, kmax: i64, decay: f64, rng: &mut R) -> Field {
    let mut u = Field::zeros(grid);
    let top = kmax.min(grid.nyquist() - 1);
    for k in 1..=top {
        let amp = (1.0 + k as f64).powf(-decay);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        let i = grid.index(k).unwrap();
        let j = grid.index(-k).unwrap();
        u.coeffs[i] = c;
        u.coeffs[j] = c.conj();
    }
    u
}

// ---------------------------------------------------------------- projectors and norms

/// `P_N u`: multiplication by `φ_N`.
pub fn project_dyadic(u: &Field, n: u64) -> Result<Field> {
    check_dyadic(n)?;
    let max = u.grid().max_dyadic();
    if n > max {
        return Err(Error::DyadicOutOfRange { n, max });
    }
    Ok(u.map_real_multiplier(|xi| phi_n(n, xi as f64)))
}

/// `(N, ‖P_N u‖_{L²})` for every admissible `N`.
pub fn block_norms(u: &Field) -> Vec<(u64, f64)> {
    let g = u.grid();
    g.dyadic_levels()
        .into_iter()
        .map(|n| {
            let s: f64 = u
                .coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let p = phi_n(n, g.freq(j) as f64);
                    p * p * c.norm_sqr()
                })
                .sum();
            (n, (2.0 * PI * s).sqrt())
        })
        .collect()
}

/// `‖u‖_{H^s_ω} = (Σ_N ω_N² (1∨N)^{2s} ‖P_N u‖²_{L²})^{1/2}`; plain `H^s` without an envelope.
pub fn sobolev_norm(u: &Field, s: f64, env: Option<&DyadicSequence>) -> Result<f64> {
    let w = sobolev_weights(u.grid(), s, env)?;
    Ok(weighted_norm(u, &w))
}

/// `(2π Σ w(ξ)|û(ξ)|²)^{1/2}` for precomputed weights.
pub fn weighted_norm(u: &Field, weights: &[f64]) -> f64 {
    (2.0 * PI * u.coeffs().iter().zip(weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()).sqrt()
}

/// `‖u‖_{L^∞} / (N^{1/2} ‖u‖_{L²})` for a block `P_N u`; `None` when the block vanishes.
pub fn bernstein_ratio(u: &Field, n: u64) -> Result<Option<f64>> {
    let pn = project_dyadic(u, n)?;
    let l2 = pn.l2_norm();
    if l2 == 0.0 {
        return Ok(None);
    }
    Ok(Some(pn.sup_norm() / ((n.max(1) as f64).sqrt() * l2)))
}

// ---------------------------------------------------------------- commutator

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorReport {
    /// `‖[∂_x P_N², w] v‖_{L²}`.
    pub commutator_norm: f64,
    /// `‖∂_x w‖_{L^∞} ‖v‖_{L²}`.
    pub bound: f64,
    pub ratio: f64,
    /// `|∫ Π(u,v) w + ∫ u [∂_x P_N², w] v|` divided by `‖u‖‖v‖‖∂_x w‖_∞`.
    pub identity_residual: f64,
}

/// Measures the commutator `[∂_x P_N², w]` on `v` and the integration-by-parts
/// identity `∫ Π(u,v) w = −∫ u [∂_x P_N², w] v` with `Π(u,v) = v ∂_x P_N² u + u ∂_x P_N² v`.
///
/// All products are formed on the 2×-padded grid, so for fields on a common
/// grid every quantity is exact up to rounding.
pub fn commutator_check(n: u64, w: &Field, v: &Field, u: &Field) -> Result<CommutatorReport> {
    w.check_same_grid(v)?;
    w.check_same_grid(u)?;
    check_dyadic(n)?;
    let max = w.grid().max_dyadic();
    if n > max {
        return Err(Error::DyadicOutOfRange { n, max });
    }
    let fine = TorusGrid::new(w.grid().m() * 2).expect("power-of-two padding");
    let dp2 = |f: &Field| -> Field {
        f.map_multiplier(|xi| {
            let p = phi_n(n, xi as f64);
            Complex64::new(0.0, xi as f64 * p * p)
        })
    };
    let (wf, vf, uf) = (w.resample(fine), v.resample(fine), u.resample(fine));
    let mul = |a: &Field, b: &Field| -> Field {
        let (x, y) = (a.values(), b.values());
        let p: Vec<f64> = x.iter().zip(&y).map(|(s, t)| s * t).collect();
        Field::from_values(fine, &p).expect("fine grid")
    };
    // [∂P², w]v = ∂P²(wv) − w ∂P²v, with wv band-limited to M on the 2M grid
    let comm = &dp2(&mul(&wf, &vf)) - &mul(&wf, &dp2(&vf));
    let commutator_norm = comm.l2_norm();
    let dw_sup = w.derivative().sup_norm();
    let bound = dw_sup * v.l2_norm();
    // ∫Π(u,v)w = ∫ v w ∂P²u + ∫ u w ∂P²v; triple products have band ≤ 3M/2 < 2M so means are exact
    let pi_w = mul(&vf, &dp2(&uf)).inner(&wf)? + mul(&uf, &dp2(&vf)).inner(&wf)?;
    let rhs = uf.inner(&comm)?;
    let scale = u.l2_norm() * v.l2_norm() * dw_sup;
    let identity_residual = if scale > 0.0 { (pi_w + rhs).abs() / scale } else { (pi_w + rhs).abs() };
    let ratio = if bound > 0.0 {
        commutator_norm / bound
    } else if commutator_norm == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(CommutatorReport { commutator_norm, bound, ratio, identity_residual })
}

// ---------------------------------------------------------------- spectral dump

pub const SPECTRAL_CONVENTION: &str = "angular-1/2pi";

/// CSV dump: header `# M=<M> convention=angular-1/2pi`, then `xi,re,im` rows for `ξ = −M/2+1 … M/2`.
pub fn write_spectral_csv(u: &Field) -> String {
    let g = u.grid();
    let mut s = String::new();
    writeln!(s, "# M={} convention={}", g.m(), SPECTRAL_CONVENTION).unwrap();
    for xi in (-g.nyquist() + 1)..=g.nyquist() {
        let c = u.coeff(xi);
        writeln!(s, "{},{},{}", xi, crate::fmt_f64(c.re), crate::fmt_f64(c.im)).unwrap();
    }
    s
}

pub fn read_spectral_csv(text: &str) -> Result<Field> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty spectral dump".into()))?;
    let m: usize = header
        .trim_start_matches('#')
        .split_whitespace()
        .find_map(|t| t.strip_prefix("M="))
        .ok_or_else(|| Error::Parse(format!("missing M= in header `{header}`")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad M: {e}")))?;
    if !header.contains(SPECTRAL_CONVENTION) {
        return Err(Error::Parse(format!("unsupported convention in `{header}`")));
    }
    let grid = TorusGrid::new(m)?;
    let mut u = Field::zeros(grid);
    for line in lines.filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected `xi,re,im`, got `{line}`")));
        }
        let xi: i64 = parts[0].parse().map_err(|e| Error::Parse(format!("xi: {e}")))?;
        let re: f64 = parts[1].parse().map_err(|e| Error::Parse(format!("re: {e}")))?;
        let im: f64 = parts[2].parse().map_err(|e| Error::Parse(format!("im: {e}")))?;
        let i = grid.index(xi).ok_or_else(|| Error::Parse(format!("frequency {xi} outside the grid")))?;
        u.coeffs[i] = Complex64::new(re, im);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize) -> TorusGrid {
        TorusGrid::new(m).unwrap()
    }

    #[test]
    fn grid_rules() {
        assert!(TorusGrid::new(4).is_err());
        assert!(TorusGrid::new(24).is_err());
        let g = grid(16);
        assert_eq!(g.freq(8), 8);
        assert_eq!(g.freq(9), -7);
        assert_eq!(g.index(-7), Some(9));
        assert_eq!(g.index(-8), None);
        assert_eq!(g.dyadic_levels(), vec![0, 1, 2, 4, 8]);
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(-0.3), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(5.0), 0.0);
        assert!(chi(1.5) > 0.0 && chi(1.5) < 1.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15, "symmetric mollifier is 1/2 at the midpoint");
        for i in 0..200 {
            let x = 1.0 + i as f64 / 200.0;
            assert!(chi(x) >= chi(x + 0.005));
        }
    }

    #[test]
    fn partition_of_unity_and_support() {
        let levels = dyadic_levels_up_to(4096);
        for xi in -2048i64..=2048 {
            let s: f64 = levels.iter().map(|&n| phi_n(n, xi as f64)).sum();
            assert!((s - 1.0).abs() <= 1e-14, "ξ={xi}: {s}");
            for &n in &levels[1..] {
                let a = xi.abs() as f64;
                if a < n as f64 / 2.0 || a > 2.0 * n as f64 {
                    assert_eq!(phi_n(n, xi as f64), 0.0);
                }
            }
            if xi.abs() > 1 {
                assert_eq!(phi_n(0, xi as f64), 0.0);
            }
        }
    }

    #[test]
    fn cos_norm_and_zero() {
        let g = grid(64);
        let u = Field::cos_mode(g, 1, 1.0);
        assert!((sobolev_norm(&u, 0.0, None).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert_eq!(sobolev_norm(&Field::zeros(g), 1.3, None).unwrap(), 0.0);
        let u16 = Field::cos_mode(grid(128), 16, 1.0);
        for s in [0.5, 0.75, 1.0] {
            let v = sobolev_norm(&u16, s, None).unwrap();
            assert!((v - PI.sqrt() * 16f64.powf(s)).abs() < 1e-12 * v);
        }
        assert!(sobolev_norm(&u, f64::NAN, None).is_err());
    }

    #[test]
    fn from_fn_matches_modes() {
        let g = grid(32);
        let u = Field::from_fn(g, |x| 2.0 * (3.0 * x).cos() - (5.0 * x).sin() + 0.5);
        let expect = &(&Field::cos_mode(g, 3, 2.0) - &Field::sin_mode(g, 5, 1.0)) + &Field::cos_mode(g, 0, 0.5);
        assert!(u.max_coeff_diff(&expect) < 1e-15);
        assert!(u.hermitian_residual() < 1e-15);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = Field::from_values(g, &vals).unwrap();
        let back = u.values();
        let err = vals.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(err <= 1e-13 * scale);
        let direct: f64 = vals.iter().map(|v| v * v).sum::<f64>() * 2.0 * PI / 128.0;
        assert!((direct - u.l2_norm_sq()).abs() < 1e-12 * direct);
        assert!(u.hermitian_residual() < 1e-12);
    }

    #[test]
    fn projections() {
        let g = grid(128);
        let u = Field::cos_mode(g, 5, 1.0);
        let mut total = Field::zeros(g);
        for n in g.dyadic_levels() {
            total = &total + &project_dyadic(&u, n).unwrap();
        }
        assert!(total.max_coeff_diff(&u) < 1e-16);
        assert!(project_dyadic(&u, 0).unwrap().l2_norm() == 0.0);
        assert!(project_dyadic(&u, 64).unwrap().l2_norm() == 0.0);
        assert!(matches!(project_dyadic(&u, 128), Err(Error::DyadicOutOfRange { .. })));
        assert!(matches!(project_dyadic(&u, 12), Err(Error::NotDyadic(12))));
    }

    #[test]
    fn projection_overlap_rules() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(g, 120, 0.0, &mut rng);
        for n in g.dyadic_levels() {
            let once = project_dyadic(&u, n).unwrap();
            let twice = project_dyadic(&once, n).unwrap();
            let sq = u.map_real_multiplier(|xi| phi_n(n, xi as f64).powi(2));
            assert!(twice.max_coeff_diff(&sq) < 1e-15);
            assert!(twice.hermitian_residual() < 1e-14);
            for k in g.dyadic_levels() {
                if n >= 1 && k >= 1 && ((n as f64 / k as f64).log2().abs() >= 2.0) {
                    let pk = project_dyadic(&once, k).unwrap();
                    assert_eq!(pk.l2_norm(), 0.0, "N={n} K={k}");
                }
            }
        }
    }

    #[test]
    fn envelope_scaling_is_exact() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(g, 30, 1.0, &mut rng);
        let om = DyadicSequence::from_fn(32, |n| 1.0 + (n as f64).sqrt()).unwrap();
        let om2 = DyadicSequence::from_fn(32, |n| 2.0 * (1.0 + (n as f64).sqrt())).unwrap();
        let a = sobolev_norm(&u, 0.8, Some(&om)).unwrap();
        let b = sobolev_norm(&u, 0.8, Some(&om2)).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-15 * b);
        let short = DyadicSequence::from_fn(8, |_| 1.0).unwrap();
        assert!(matches!(sobolev_norm(&u, 0.8, Some(&short)), Err(Error::EnvelopeTooShort { .. })));
    }

    #[test]
    fn commutator_with_constant_vanishes() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_field(g, 20, 0.5, &mut rng);
        let u = random_field(g, 20, 0.5, &mut rng);
        let w = Field::cos_mode(g, 0, 3.0);
        let r = commutator_check(8, &w, &v, &u).unwrap();
        assert!(r.commutator_norm < 1e-12);
    }

    #[test]
    fn commutator_identity_random() {
        let g = grid(128);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [0, 1, 4, 16, 64] {
            let (u, v, w) = (
                random_field(g, 63, 0.3, &mut rng),
                random_field(g, 63, 0.3, &mut rng),
                random_field(g, 63, 0.3, &mut rng),
            );
            let r = commutator_check(n, &w, &v, &u).unwrap();
            assert!(r.identity_residual <= 1e-10, "N={n}: {}", r.identity_residual);
        }
        let other = Field::zeros(grid(64));
        let f = Field::zeros(g);
        assert!(commutator_check(4, &f, &other, &f).is_err());
    }

    #[test]
    fn commutator_ratio_resolution_stable() {
        let ratio = |m| {
            let g = grid(m);
            let w = Field::cos_mode(g, 1, 1.0);
            let v = Field::cos_mode(g, 16, 1.0);
            commutator_check(16, &w, &v, &v).unwrap().ratio
        };
        let (a, b) = (ratio(256), ratio(512));
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() <= 0.1 * a);
    }

    #[test]
    fn bernstein_constant_is_resolution_stable() {
        let measure = |m: usize| {
            let g = grid(m);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut c: f64 = 0.0;
            for _ in 0..8 {
                let u = random_field(g, 60, 0.0, &mut rng);
                for n in [1u64, 2, 4, 8, 16, 32] {
                    if let Some(r) = bernstein_ratio(&u, n).unwrap() {
                        c = c.max(r);
                    }
                }
            }
            c
        };
        let (a, b) = (measure(128), measure(256));
        assert!(a < 2.0, "{a}");
        assert!((a - b).abs() <= 0.05 * a, "{a} vs {b}");
    }

    #[test]
    fn l4_and_sup_norms() {
        let g = grid(32);
        let u = Field::cos_mode(g, 3, 2.0);
        assert!((u.sup_norm() - 2.0).abs() < 1e-12);
        // ∫cos⁴ = 3π/4
        assert!((u.l4_norm_pow4() - 16.0 * 3.0 * PI / 4.0).abs() < 1e-11);
    }

    #[test]
    fn padded_product_is_exact() {
        let g = grid(16);
        let a = Field::cos_mode(g, 7, 1.0);
        let p = a.product_padded(&a).unwrap();
        // cos²(7x) = (1 + cos 14x)/2
        let expect = &Field::cos_mode(p.grid(), 0, 0.5) + &Field::cos_mode(p.grid(), 14, 0.5);
        assert!(p.max_coeff_diff(&expect) < 1e-15);
    }

    #[test]
    fn spectral_csv_round_trip() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut u = random_field(g, 7, 0.0, &mut rng);
        u.coeffs_mut()[8] = Complex64::new(0.25, 0.0);
        let text = write_spectral_csv(&u);
        assert!(text.starts_with("# M=16 convention=angular-1/2pi\n"));
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().nth(1).unwrap().starts_with("-7,"));
        let back = read_spectral_csv(&text).unwrap();
        assert_eq!(back, u);
        assert!(read_spectral_csv("# M=16 convention=other\n").is_err());
    }
}
