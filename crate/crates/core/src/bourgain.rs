//! Space-time analysis: the extension `ρ_T`, modulation projectors `Q_L`,
//! `X^{s,b}` / `Z^s` norms and the smooth splitting of the time cutoff `1_T`.
//!
//! Space-time tables are stored in the interaction picture. For a column `ξ`
//! the table holds `ṽ(σ, ξ) = ∫ e^{−iσt} v̂(t, ξ) dt` with `v = U(−t)u`, so that
//! `ũ(τ, ξ) = ṽ(τ − p(ξ), ξ)` and the modulation `σ = τ − p(ξ)` is sampled on a
//! grid that does not depend on the size of `p(ξ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::envelope::DyadicSequence;
use crate::error::{Error, Result};
use crate::evolution::{discrete_symbol, propagator};
use crate::fmt_f64;
use crate::par::{map_indexed, Execution};
use crate::spectral::{chi, fft_forward, fft_inverse, phi_n, sobolev_weights, weighted_norm, Field, TorusGrid};
use crate::symbols::DispersionSymbol;
use crate::trajectory::Trajectory;

/// Half-width of the default extension window `[−4, 4]`.
pub const DEFAULT_HALF_WINDOW: f64 = 4.0;

/// `μ_T(t)`: `t` on `[0, T]`, `2T − t` on `[T, 2T]`, `0` otherwise.
pub fn mu(t_final: f64, t: f64) -> f64 {
    if (0.0..=t_final).contains(&t) {
        t
    } else if t > t_final && t < 2.0 * t_final {
        2.0 * t_final - t
    } else {
        0.0
    }
}

fn check_extension_time(traj: &Trajectory) -> Result<()> {
    let t = traj.t_final();
    if !(t > 0.0 && t <= 1.0 + 1e-12) {
        return Err(Error::ExtensionTimeTooLong(t));
    }
    Ok(())
}

/// Interaction-picture frames `w_n = U(−t_n) u(t_n)`.
fn interaction_frames(traj: &Trajectory, sym: &DispersionSymbol) -> Vec<Field> {
    traj.frames().iter().enumerate().map(|(n, u)| propagator(sym, -traj.time(n), u)).collect()
}

/// Cubic Lagrange interpolation of the frames at time `s`; exact at frame times.
fn interpolate(frames: &[Field], spacing: f64, s: f64) -> Field {
    let x = s / spacing;
    let n = frames.len();
    let r = x.round();
    if (x - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < n {
        return frames[r as usize].clone();
    }
    let width = n.min(4);
    let i = x.floor().max(0.0) as usize;
    let k0 = i.saturating_sub(1).min(n - width);
    let grid = frames[0].grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.m()];
    for a in k0..k0 + width {
        let mut l = 1.0;
        for b in k0..k0 + width {
            if b != a {
                l *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        for (o, c) in out.iter_mut().zip(frames[a].coeffs()) {
            *o += c * l;
        }
    }
    Field::from_coeffs(grid, out).expect("grid-sized")
}

/// `ρ_T(u)(t) = U(t) χ(t) U(−μ_T(t)) u(μ_T(t))` at a single time.
pub fn extension_at(traj: &Trajectory, sym: &DispersionSymbol, t: f64) -> Result<Field> {
    check_extension_time(traj)?;
    let w = interaction_frames(traj, sym);
    let s = mu(traj.t_final(), t);
    let v = interpolate(&w, traj.spacing(), s).scaled(chi(t));
    Ok(propagator(sym, t, &v))
}

/// Worst relative `L²` error when odd frames are interpolated from the even ones.
///
/// Bounds the interpolation error of [`extend_with`] at half the trajectory's spacing.
pub fn interpolation_error(traj: &Trajectory, sym: &DispersionSymbol) -> Result<f64> {
    let coarse = traj.subsample(2)?;
    let w = interaction_frames(&coarse, sym);
    let fine = interaction_frames(traj, sym);
    let mut worst: f64 = 0.0;
    for n in (1..traj.len()).step_by(2) {
        let approx = interpolate(&w, coarse.spacing(), traj.time(n));
        let exact = &fine[n];
        let scale = exact.l2_norm().max(f64::MIN_POSITIVE);
        worst = worst.max((&approx - exact).l2_norm() / scale);
    }
    Ok(worst)
}

/// `ρ_T(u)` sampled on `[−H, H)` together with its space-time table.
#[derive(Clone, Debug)]
pub struct ExtendedTrajectory {
    grid: TorusGrid,
    p: Vec<f64>,
    t_final: f64,
    t0: f64,
    spacing: f64,
    /// `table[j][m] = ṽ(σ_m, ξ_j)`, both indices in FFT order.
    table: Vec<Vec<Complex64>>,
}

/// Extension on the default window `[−4, 4]` at the trajectory's own spacing.
pub fn extend(traj: &Trajectory, sym: &DispersionSymbol) -> Result<ExtendedTrajectory> {
    extend_with(traj, sym, DEFAULT_HALF_WINDOW, 1, Execution::default())
}

/// Extension on `[−half_window, half_window)` with time spacing `Δt / refine`.
///
/// Needs `T ≤ 1`, `half_window ≥ 2` and `half_window` a multiple of the new spacing.
pub fn extend_with(
    traj: &Trajectory,
    sym: &DispersionSymbol,
    half_window: f64,
    refine: usize,
    exec: Execution,
) -> Result<ExtendedTrajectory> {
    check_extension_time(traj)?;
    if refine == 0 {
        return Err(Error::InvalidParameter("refine must be ≥ 1".into()));
    }
    if !(half_window >= 2.0) {
        return Err(Error::WindowTooShort { lo: -half_window, hi: half_window, need_lo: -2.0, need_hi: 2.0 });
    }
    let h = traj.spacing() / refine as f64;
    let j0f = half_window / h;
    let j0 = j0f.round() as i64;
    if (j0f - j0 as f64).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("half window {half_window} is not a multiple of the spacing {h}")));
    }
    let nt = 2 * j0 as usize;
    let big_n = (traj.len() - 1) as i64 * refine as i64;
    let w = interaction_frames(traj, sym);
    let grid = traj.grid();
    let samples: Vec<Field> = map_indexed(nt, exec, |j| {
        let q = j as i64 - j0;
        let mq = if (0..=big_n).contains(&q) {
            q
        } else if q > big_n && q < 2 * big_n {
            2 * big_n - q
        } else {
            0
        };
        let t = q as f64 * h;
        let c = chi(t);
        if c == 0.0 {
            return Field::zeros(grid);
        }
        let base = if mq % refine as i64 == 0 {
            w[(mq / refine as i64) as usize].clone()
        } else {
            interpolate(&w, traj.spacing(), mq as f64 * h)
        };
        base.scaled(c)
    });
    let t0 = -(j0 as f64) * h;
    let dsig = 2.0 * PI / (nt as f64 * h);
    let table = map_indexed(grid.m(), exec, |jx| {
        let mut col: Vec<Complex64> = samples.iter().map(|f| f.coeffs()[jx]).collect();
        fft_forward(&mut col);
        for (m, c) in col.iter_mut().enumerate() {
            let sig = dsig * fft_freq(m, nt) as f64;
            *c *= Complex64::from_polar(h, -sig * t0);
        }
        col
    });
    Ok(ExtendedTrajectory { grid, p: discrete_symbol(sym, grid), t_final: traj.t_final(), t0, spacing: h, table })
}

fn fft_freq(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

impl ExtendedTrajectory {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.table[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(t_start, t_end)` of the sampled window.
    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t0 + self.len() as f64 * self.spacing)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.spacing
    }

    /// Index of the sample at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.spacing;
        let r = x.round();
        ((x - r).abs() < 1e-6 && r >= 0.0 && (r as usize) < self.len()).then_some(r as usize)
    }

    /// Modulation spacing `Δσ = 2π / window length`.
    pub fn dsigma(&self) -> f64 {
        2.0 * PI / (self.len() as f64 * self.spacing)
    }

    pub fn sigma(&self, m: usize) -> f64 {
        self.dsigma() * fft_freq(m, self.len()) as f64
    }

    /// `|σ|` at the Nyquist index.
    pub fn sigma_nyquist(&self) -> f64 {
        PI / self.spacing
    }

    /// Largest admissible `L`: the smallest dyadic number covering the represented `|σ|`.
    pub fn max_modulation(&self) -> u64 {
        (self.sigma_nyquist().ceil() as u64).next_power_of_two()
    }

    /// `ṽ(σ_m, ξ)`.
    pub fn table_entry(&self, m: usize, xi: i64) -> Complex64 {
        self.grid.index(xi).map_or(Complex64::new(0.0, 0.0), |j| self.table[j][m])
    }

    /// `Σ_{ξ,σ} |ṽ|² Δσ`, the space-time `L²` norm squared.
    pub fn table_l2_sq(&self) -> f64 {
        self.weighted_sq(|_| 1.0, |_| 1.0)
    }

    /// `2π Δt Σ_j Σ_ξ |û(t_j, ξ)|²`.
    pub fn time_l2_sq(&self) -> f64 {
        self.samples_interaction()
            .iter()
            .map(|f| 2.0 * PI * self.spacing * f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    fn weighted_sq<A: Fn(usize) -> f64, B: Fn(f64) -> f64>(&self, space: A, modulation: B) -> f64 {
        let ds = self.dsigma();
        let mw: Vec<f64> = (0..self.len()).map(|m| modulation(self.sigma(m))).collect();
        self.table
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let a = space(j);
                if a == 0.0 {
                    return 0.0;
                }
                a * col.iter().zip(&mw).map(|(c, w)| w * c.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            * ds
    }

    /// `‖u‖_{X^{s,b}_ω} = (Σ_ξ w_s(ξ) ∫ ⟨τ − p(ξ)⟩^{2b} |ũ(τ, ξ)|² dτ)^{1/2}` with the LP weights `w_s`.
    pub fn xsb_norm(&self, s: f64, b: f64, env: Option<&DyadicSequence>) -> Result<f64> {
        let w = sobolev_weights(self.grid, s, env)?;
        Ok(self.weighted_sq(|j| w[j], |sig| (1.0 + sig * sig).powf(b)).sqrt())
    }

    /// `max_j ‖ρ_T u(t_j)‖_{H^s_ω}`.
    pub fn linf_hs(&self, s: f64, env: Option<&DyadicSequence>) -> Result<f64> {
        let w = sobolev_weights(self.grid, s, env)?;
        Ok(self.samples_interaction().iter().map(|f| weighted_norm(f, &w)).fold(0.0, f64::max))
    }

    /// `Q_L`: multiplication by `φ_L(τ − p(ξ))`.
    pub fn modulation_project(&self, l: u64) -> Result<ExtendedTrajectory> {
        crate::spectral::check_dyadic(l)?;
        let max = self.max_modulation();
        if l > max {
            return Err(Error::ModulationOutOfRange { l, max });
        }
        let mw: Vec<f64> = (0..self.len()).map(|m| phi_n(l, self.sigma(m))).collect();
        let mut out = self.clone();
        for col in &mut out.table {
            for (c, w) in col.iter_mut().zip(&mw) {
                *c *= w;
            }
        }
        Ok(out)
    }

    /// `P_N` applied to every time slice.
    pub fn project_dyadic(&self, n: u64) -> Result<ExtendedTrajectory> {
        crate::spectral::check_dyadic(n)?;
        let max = self.grid.max_dyadic();
        if n > max {
            return Err(Error::DyadicOutOfRange { n, max });
        }
        let mut out = self.clone();
        for (j, col) in out.table.iter_mut().enumerate() {
            let w = phi_n(n, self.grid.freq(j) as f64);
            for c in col.iter_mut() {
                *c *= w;
            }
        }
        Ok(out)
    }

    /// Time samples of `v = U(−t) ρ_T u` reconstructed from the table.
    pub fn samples_interaction(&self) -> Vec<Field> {
        let nt = self.len();
        let h = self.spacing;
        let ds = self.dsigma();
        let cols: Vec<Vec<Complex64>> = self
            .table
            .iter()
            .map(|col| {
                let mut c: Vec<Complex64> = col
                    .iter()
                    .enumerate()
                    .map(|(m, x)| {
                        x * Complex64::from_polar(1.0 / (nt as f64 * h), ds * fft_freq(m, nt) as f64 * self.t0)
                    })
                    .collect();
                fft_inverse(&mut c);
                c
            })
            .collect();
        (0..nt)
            .map(|j| {
                let coeffs = cols.iter().map(|c| c[j]).collect();
                Field::from_coeffs(self.grid, coeffs).expect("grid-sized")
            })
            .collect()
    }

    /// Time samples of `ρ_T u`.
    pub fn samples(&self) -> Vec<Field> {
        self.samples_interaction()
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let t = self.time(j);
                let coeffs =
                    v.coeffs().iter().zip(&self.p).map(|(c, p)| c * Complex64::from_polar(1.0, t * p)).collect();
                Field::from_coeffs(self.grid, coeffs).expect("grid-sized")
            })
            .collect()
    }
}

/// `‖u‖_{L^∞_t H^s_ω}`, `‖u‖_{X^{s−1,1}_ω}` and their sum `‖u‖_{Z^s_ω}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeNorms {
    pub xsb: f64,
    pub linf_hs: f64,
    pub zs: f64,
}

pub fn spacetime_norms(ext: &ExtendedTrajectory, s: f64, env: Option<&DyadicSequence>) -> Result<SpacetimeNorms> {
    let xsb = ext.xsb_norm(s - 1.0, 1.0, env)?;
    let linf_hs = ext.linf_hs(s, env)?;
    Ok(SpacetimeNorms { xsb, linf_hs, zs: xsb + linf_hs })
}

/// Norms of `u` on `[0, T]` alone. The `X^{s−1,1}` part is
/// `(∫_0^T ‖v‖²_{H^{s−1}_ω} + ‖∂_t v‖²_{H^{s−1}_ω} dt)^{1/2}` with `v = U(−t)u`,
/// by the trapezoid rule and second-order differences.
pub fn restricted_norms(
    traj: &Trajectory,
    sym: &DispersionSymbol,
    s: f64,
    env: Option<&DyadicSequence>,
) -> Result<SpacetimeNorms> {
    if traj.len() < 3 {
        return Err(Error::InvalidParameter("restricted norms need at least 3 frames".into()));
    }
    let w = sobolev_weights(traj.grid(), s - 1.0, env)?;
    let v = interaction_frames(traj, sym);
    let h = traj.spacing();
    let n = v.len();
    let dv = |i: usize| -> Field {
        if i == 0 {
            &(&(&v[1] * 4.0) - &(&v[0] * 3.0)) - &v[2]
        } else if i == n - 1 {
            &(&(&v[n - 1] * 3.0) - &(&v[n - 2] * 4.0)) + &v[n - 3]
        } else {
            &v[i + 1] - &v[i - 1]
        }
        .scaled(0.5 / h)
    };
    let mut integral = 0.0;
    for i in 0..n {
        let a = weighted_norm(&v[i], &w).powi(2) + weighted_norm(&dv(i), &w).powi(2);
        let q = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        integral += q * h * a;
    }
    let xsb = integral.sqrt();
    let linf_hs = traj.sup_sobolev(s, env)?;
    Ok(SpacetimeNorms { xsb, linf_hs, zs: xsb + linf_hs })
}

/// Uniform time grid `t_j = t0 + j Δt`, `j < n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub spacing: f64,
    pub n: usize,
}

impl TimeGrid {
    /// Smallest grid starting at `t0` whose last point is `≥ t1`.
    pub fn covering(t0: f64, t1: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && t1 > t0) {
            return Err(Error::InvalidParameter("need spacing > 0 and t1 > t0".into()));
        }
        let n = ((t1 - t0) / spacing - 1e-9).ceil() as usize + 1;
        Ok(TimeGrid { t0, spacing, n })
    }

    /// Default grid for [`cutoff_split`]: `[−8, 8 + T]` at `Δt = 10^{−3}`.
    pub fn for_cutoff(t_final: f64) -> Result<Self> {
        Self::covering(-8.0, 8.0 + t_final, 1e-3)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }
}

/// `1_T = 1^{low}_{T,R} + 1^{high}_{T,R}` with `𝓕_t 1^{low} = χ(τ/R) 𝓕_t 1_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffSplit {
    pub grid: TimeGrid,
    pub indicator: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub l1_high: f64,
    pub linf_low: f64,
}

/// Splits `1_{[0,T]}` (value `1/2` at the jumps) by a smooth `τ`-cutoff at scale `R`.
pub fn cutoff_split(t_final: f64, r: f64, grid: TimeGrid) -> Result<CutoffSplit> {
    if !(t_final > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!("need T > 0 and R > 0, got T={t_final} R={r}")));
    }
    if grid.n < 2 || grid.t0 > -8.0 || grid.end() < 8.0 + t_final {
        return Err(Error::WindowTooShort { lo: grid.t0, hi: grid.end(), need_lo: -8.0, need_hi: 8.0 + t_final });
    }
    let h = grid.spacing;
    let tol = 1e-9 * h;
    let indicator: Vec<f64> = (0..grid.n)
        .map(|j| {
            let t = grid.time(j);
            if (t.abs() < tol) || ((t - t_final).abs() < tol) {
                0.5
            } else if t > 0.0 && t < t_final {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut buf: Vec<Complex64> = indicator.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    let dtau = 2.0 * PI / (grid.n as f64 * h);
    for (m, c) in buf.iter_mut().enumerate() {
        *c *= chi(dtau * fft_freq(m, grid.n) as f64 / r);
    }
    fft_inverse(&mut buf);
    let low: Vec<f64> = buf.iter().map(|c| c.re / grid.n as f64).collect();
    let high: Vec<f64> = indicator.iter().zip(&low).map(|(a, b)| a - b).collect();
    let l1_high = h * high.iter().map(|x| x.abs()).sum::<f64>();
    let linf_low = low.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    Ok(CutoffSplit { grid, indicator, low, high, l1_high, linf_low })
}

/// One row of the norm report.
#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub quantity: String,
    pub s: f64,
    pub b: f64,
    pub value: f64,
    pub grid_m: usize,
    pub window: (f64, f64),
}

pub const NORM_CSV_HEADER: &str = "quantity,s,b,value,grid_M,window";

impl NormRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},[{};{}]",
            self.quantity,
            fmt_f64(self.s),
            fmt_f64(self.b),
            fmt_f64(self.value),
            self.grid_m,
            fmt_f64(self.window.0),
            fmt_f64(self.window.1)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{solve, SolverConfig};
    use crate::nonlinearity::EntireSeries;
    use crate::spectral::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    fn gkdv_run(t: f64) -> (Trajectory, DispersionSymbol) {
        let sym = DispersionSymbol::pure(2.0).unwrap();
        let u0 = &Field::cos_mode(grid(), 1, 1.0) + &Field::cos_mode(grid(), 2, 0.5);
        let f = EntireSeries::polynomial(&[0.0, 0.0, 1.0]).unwrap();
        let tr = solve(&u0, &sym, &f, &SolverConfig::new(1e-2, t)).unwrap();
        (tr, sym)
    }

    #[test]
    fn mu_branches() {
        assert_eq!(mu(0.5, 0.3), 0.3);
        assert_eq!(mu(0.5, 0.75), 0.25);
        assert_eq!(mu(0.5, 2.5), 0.0);
        assert_eq!(mu(0.5, -1.0), 0.0);
    }

    #[test]
    fn extension_pointwise_examples() {
        let (tr, sym) = gkdv_run(0.5);
        let at = extension_at(&tr, &sym, 0.3).unwrap();
        assert!(at.max_coeff_diff(&tr.frames()[30]) < 1e-15);
        let reflected = extension_at(&tr, &sym, 0.75).unwrap();
        let expect = propagator(&sym, 0.5, &tr.frames()[25]);
        assert!(reflected.max_coeff_diff(&expect) < 1e-13);
        let outside = extension_at(&tr, &sym, 2.5).unwrap();
        assert_eq!(outside.l2_norm(), 0.0);
        let before = extension_at(&tr, &sym, -1.5).unwrap();
        let expect = propagator(&sym, -1.5, &tr.frames()[0]).scaled(chi(-1.5));
        assert!(before.max_coeff_diff(&expect) < 1e-14);
        let (long, _) = gkdv_run(1.5);
        assert_eq!(extension_at(&long, &sym, 0.1), Err(Error::ExtensionTimeTooLong(long.t_final())));
    }

    #[test]
    fn extended_samples_agree_on_base_interval() {
        let (tr, sym) = gkdv_run(0.5);
        let ext = extend(&tr, &sym).unwrap();
        let samples = ext.samples();
        for n in 0..tr.len() {
            let j = ext.index_of(tr.time(n)).unwrap();
            assert!(samples[j].max_coeff_diff(&tr.frames()[n]) < 1e-12);
        }
        let j = ext.index_of(-2.5).unwrap();
        assert!(samples[j].l2_norm() < 1e-12);
    }

    #[test]
    fn plancherel_on_table() {
        let (tr, sym) = gkdv_run(0.5);
        let ext = extend(&tr, &sym).unwrap();
        let a = ext.table_l2_sq();
        let b = ext.time_l2_sq();
        assert!((a - b).abs() <= 1e-10 * b);
    }

    #[test]
    fn modulation_partition_and_commutation() {
        let (tr, sym) = gkdv_run(0.25);
        let ext = extend(&tr, &sym).unwrap();
        let lmax = ext.max_modulation();
        assert!(matches!(ext.modulation_project(2 * lmax), Err(Error::ModulationOutOfRange { .. })));
        let mut acc = vec![vec![Complex64::new(0.0, 0.0); ext.len()]; ext.grid().m()];
        let mut l = 0;
        loop {
            let q = ext.modulation_project(l).unwrap();
            for (a, c) in acc.iter_mut().zip(&q.table) {
                for (x, y) in a.iter_mut().zip(c) {
                    *x += y;
                }
            }
            if l == lmax {
                break;
            }
            l = if l == 0 { 1 } else { 2 * l };
        }
        let scale = ext.table.iter().flatten().fold(0.0_f64, |m, c| m.max(c.norm()));
        let resid =
            acc.iter().flatten().zip(ext.table.iter().flatten()).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(resid <= 1e-12 * scale);
        let qp = ext.modulation_project(4).unwrap().project_dyadic(2).unwrap();
        let pq = ext.project_dyadic(2).unwrap().modulation_project(4).unwrap();
        let d =
            qp.table.iter().flatten().zip(pq.table.iter().flatten()).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(d <= 1e-15 * scale);
    }

    #[test]
    fn free_solution_concentrates_at_low_modulation() {
        let sym = DispersionSymbol::pure(2.0).unwrap();
        let u0 = random_field(grid(), 12, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
        let tr = Trajectory::from_fn(1e-2, 100, |t| propagator(&sym, t, &u0)).unwrap();
        let ext = extend(&tr, &sym).unwrap();
        let total = ext.table_l2_sq();
        let mut last = f64::INFINITY;
        let mut l = 16;
        while l <= ext.max_modulation() {
            let mut tail = 0.0;
            let mut k = l;
            while k <= ext.max_modulation() {
                tail += ext.modulation_project(k).unwrap().table_l2_sq();
                k *= 2;
            }
            let frac = tail / total;
            assert!(frac <= last);
            last = frac;
            l *= 2;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn zero_input_and_ordering() {
        let sym = DispersionSymbol::smith();
        let zero = Trajectory::from_fn(0.05, 10, |_| Field::zeros(grid())).unwrap();
        let ext = extend(&zero, &sym).unwrap();
        let n = spacetime_norms(&ext, 0.75, None).unwrap();
        assert_eq!((n.xsb, n.linf_hs, n.zs), (0.0, 0.0, 0.0));
        assert_eq!(ext.modulation_project(0).unwrap().table_l2_sq(), 0.0);
        let (tr, sym) = gkdv_run(0.5);
        let ext = extend(&tr, &sym).unwrap();
        let n = spacetime_norms(&ext, 2.0 / 3.0, None).unwrap();
        assert!(n.zs >= n.linf_hs && n.xsb > 0.0);
        let r = restricted_norms(&tr, &sym, 2.0 / 3.0, None).unwrap();
        assert!((r.linf_hs - n.linf_hs).abs() <= 1e-12 * n.linf_hs);
        assert!(r.xsb < n.xsb);
    }

    #[test]
    fn refinement_uses_interpolation() {
        let (tr, sym) = gkdv_run(0.5);
        let err = interpolation_error(&tr, &sym).unwrap();
        assert!(err < 5e-3, "{err}");
        let coarse = extend(&tr, &sym).unwrap();
        let fine = extend_with(&tr, &sym, 4.0, 2, Execution::default()).unwrap();
        let a = spacetime_norms(&coarse, 0.7, None).unwrap();
        let b = spacetime_norms(&fine, 0.7, None).unwrap();
        assert!((a.xsb - b.xsb).abs() < 1e-2 * a.xsb);
        assert!(extend_with(&tr, &sym, 1.5, 1, Execution::default()).is_err());
    }

    #[test]
    fn cutoff_split_basics() {
        let g = TimeGrid::for_cutoff(1.0).unwrap();
        let c = cutoff_split(1.0, 10.0, g).unwrap();
        for ((a, b), i) in c.low.iter().zip(&c.high).zip(&c.indicator) {
            assert!((a + b - i).abs() < 1e-15);
        }
        let c20 = cutoff_split(1.0, 20.0, g).unwrap();
        let ratio = c.l1_high / c20.l1_high;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
        let short = TimeGrid::covering(-4.0, 4.0, 1e-3).unwrap();
        assert!(matches!(cutoff_split(1.0, 10.0, short), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn norm_row_format() {
        let r = NormRow { quantity: "xsb".into(), s: 0.5, b: 1.0, value: 2.0, grid_m: 64, window: (-4.0, 4.0) };
        assert_eq!(r.to_csv().split(',').count(), 6);
        assert!(r.to_csv().starts_with("xsb,5.0000000000000000e-1,"));
    }
}
