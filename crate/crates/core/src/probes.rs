//! Empirical Strichartz machinery: the linear `L⁴` estimate for the free flow,
//! the improved estimates along solutions, their difference versions and the
//! bilinear kernel bound on modulation-localized space-time tables.

use std::fmt::Write as _;

use rand::Rng;

use crate::envelope::DyadicSequence;
use crate::error::{Error, Result};
use crate::evolution::propagator;
use crate::fmt_f64;
use crate::nonlinearity::Majorant;
use crate::par::{map_indexed, trial_rng, Execution};
use crate::spectral::{phi_n, project_dyadic, random_field, Field, TorusGrid};
use crate::symbols::{regularity_params, DispersionSymbol};
use crate::trajectory::Trajectory;

/// Lowest regularity accepted by the improved estimates.
pub const REGULARITY_FLOOR: f64 = 0.51;

/// Time intervals used by [`linear_strichartz`] on `[0, T]`.
pub const LINEAR_TIME_INTERVALS: usize = 1024;

/// Parameters echoed in a probe report; absent entries print empty in CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProbeParams {
    pub alpha: f64,
    pub s: Option<f64>,
    pub t_final: Option<f64>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub envelope: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub probe: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `0` when `lhs = 0`, infinite when only `rhs` vanishes.
    pub ratio: f64,
    pub params: ProbeParams,
    pub witness: String,
}

pub const PROBE_CSV_HEADER: &str = "probe,alpha,s,T,M,lhs,rhs,ratio,seed";

impl ProbeReport {
    pub fn new(probe: &str, lhs: f64, rhs: f64, params: ProbeParams, witness: String) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs > 0.0 {
            lhs / rhs
        } else {
            f64::INFINITY
        };
        ProbeReport { probe: probe.to_string(), lhs, rhs, ratio, params, witness }
    }

    pub fn to_csv(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.probe,
            fmt_f64(p.alpha),
            opt(p.s),
            opt(p.t_final),
            p.m.map(|m| m.to_string()).unwrap_or_default(),
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            fmt_f64(self.ratio),
            p.seed.map(|s| s.to_string()).unwrap_or_default()
        )
        .unwrap();
        out
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// `‖U(t)u‖_{L⁴([0,T]×𝕋)}` by the trapezoid rule in time, exact in space.
pub fn free_l4_norm(sym: &DispersionSymbol, u: &Field, t_final: f64, intervals: usize) -> f64 {
    let h = t_final / intervals as f64;
    let vals: Vec<f64> = (0..=intervals).map(|n| propagator(sym, n as f64 * h, u).l4_norm_pow4()).collect();
    trapezoid(&vals, h).powf(0.25)
}

/// `max_u ‖U(t)u‖_{L⁴_{T,x}} / (T^{1/2−b(α)} ‖u‖_{L²})` over random data with flat spectra.
pub fn linear_strichartz(
    sym: &DispersionSymbol,
    t_final: f64,
    m: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<ProbeReport> {
    if !(t_final > 0.0 && t_final <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < T ≤ 1, got {t_final}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let grid = TorusGrid::new(m)?;
    let b = regularity_params(sym.alpha())?.b_alpha;
    let scale = t_final.powf(0.5 - b);
    let results = map_indexed(trials, exec, |k| {
        let mut rng = trial_rng(seed, k as u64);
        let u = random_field(grid, grid.nyquist() - 1, 0.0, &mut rng);
        let lhs = free_l4_norm(sym, &u, t_final, LINEAR_TIME_INTERVALS);
        (lhs, scale * u.l2_norm())
    });
    let (k, &(lhs, rhs)) =
        results.iter().enumerate().max_by(|a, b| (a.1 .0 / a.1 .1).total_cmp(&(b.1 .0 / b.1 .1))).expect("trials ≥ 1");
    let params = ProbeParams {
        alpha: sym.alpha(),
        s: None,
        t_final: Some(t_final),
        m: Some(m),
        seed: Some(seed),
        envelope: false,
    };
    Ok(ProbeReport::new("linear_strichartz", lhs, rhs, params, format!("trial {k}")))
}

/// Closed-form ratio for `u = cos(Nx)`: `(3πT/4)^{1/4} / (T^{1/2−b(α)} √π)`.
pub fn cosine_linear_ratio(alpha: f64, t_final: f64) -> Result<f64> {
    let b = regularity_params(alpha)?.b_alpha;
    Ok((3.0 * std::f64::consts::PI * t_final / 4.0).powf(0.25) / (t_final.powf(0.5 - b) * std::f64::consts::PI.sqrt()))
}

/// `(Σ_N a_N ‖B_N u‖^q_{L^q_T X})^{1/q}` where `frame_norm(N, u(t))` gives `‖B_N u(t)‖_X`.
fn block_time_norm<F>(traj: &Trajectory, q: f64, weight: impl Fn(u64) -> f64, frame_norm: F) -> Result<(f64, u64)>
where
    F: Fn(u64, &Field) -> Result<f64> + Sync,
{
    let levels = traj.grid().dyadic_levels();
    let per_frame = map_indexed(traj.len(), Execution::default(), |n| {
        levels.iter().map(|&l| frame_norm(l, &traj.frames()[n])).collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    let mut best = (0.0, 0);
    for (i, &l) in levels.iter().enumerate() {
        let series: Vec<f64> = per_frame.iter().map(|f| f[i].powf(q)).collect();
        let c = weight(l) * trapezoid(&series, traj.spacing());
        if c > best.0 {
            best = (c, l);
        }
        total += c;
    }
    Ok((total.powf(1.0 / q), best.1))
}

fn check_regularity(s: f64) -> Result<()> {
    if !(s >= REGULARITY_FLOOR) {
        return Err(Error::RegularityTooLow { s, floor: REGULARITY_FLOOR });
    }
    Ok(())
}

fn l4(u: &Field) -> f64 {
    u.l4_norm_pow4().max(0.0).powf(0.25)
}

/// The two improved estimates along a solution:
///
/// * `(Σ_N ω_N⁴ ‖D^{s−β}P_N u‖⁴_{L⁴_{T,x}})^{1/4}` against `T^{1/4}(1 + G(‖u‖_{L^∞_{T,x}}))‖u‖_{L^∞_T H^s_ω}`,
/// * `(Σ_N ‖D^{1/3}P_N u‖³_{L³_T L^∞_x})^{1/3}` against `T^{1/3}(1 + G(‖u‖_{L^∞_{T,x}}))‖u‖_{L^∞_T H^{7/12+β}}`.
///
/// The `1 +` accounts for the free part of the Duhamel formula, which `G` alone
/// misses when `f` is linear or zero.
pub fn improved_strichartz(
    traj: &Trajectory,
    sym: &DispersionSymbol,
    g: &Majorant,
    s: f64,
    env: Option<&DyadicSequence>,
) -> Result<(ProbeReport, ProbeReport)> {
    check_regularity(s)?;
    let beta = regularity_params(sym.alpha())?.beta_alpha;
    if let Some(e) = env {
        crate::spectral::sobolev_weights(traj.grid(), s, Some(e))?;
    }
    let t = traj.t_final();
    let omega4 = |n: u64| env.map_or(1.0, |e| e.omega(n).powi(4));
    let (lhs1, w1) = block_time_norm(traj, 4.0, omega4, |n, u| Ok(l4(&project_dyadic(u, n)?.riesz(s - beta))))?;
    let (lhs2, w2) = block_time_norm(traj, 3.0, |_| 1.0, |n, u| Ok(project_dyadic(u, n)?.riesz(1.0 / 3.0).sup_norm()))?;
    let amp = traj.sup_amplitude();
    let gv = 1.0 + g.eval(amp);
    let rhs1 = t.powf(0.25) * gv * traj.sup_sobolev(s, env)?;
    let rhs2 = t.powf(1.0 / 3.0) * gv * traj.sup_sobolev(7.0 / 12.0 + beta, None)?;
    let params = ProbeParams {
        alpha: sym.alpha(),
        s: Some(s),
        t_final: Some(t),
        m: Some(traj.grid().m()),
        seed: None,
        envelope: env.is_some(),
    };
    Ok((
        ProbeReport::new("improved_l4", lhs1, rhs1, params, format!("dominant N={w1}; G={}", fmt_f64(gv - 1.0))),
        ProbeReport::new("improved_l3_linf", lhs2, rhs2, params, format!("dominant N={w2}; G={}", fmt_f64(gv - 1.0))),
    ))
}

/// Difference estimates for `w = u − v` with `K = ‖u‖_{L^∞_T H^s} + ‖v‖_{L^∞_T H^s}`:
///
/// * `(Σ_N [(1∨N)^{s−1−β}‖P_N w‖_{L⁴_{T,x}}]⁴)^{1/4}` against `T^{1/4}(1 + G(K))‖w‖_{L^∞_T H^{s−1}}`,
/// * `(Σ_N [(1∨N)^{−5/12}‖P_N w‖_{L³_T L⁴_x}]³)^{1/3}` against `T^{1/3}(1 + G(K))‖w‖_{L^∞_T H^{−5/12+β}}`.
pub fn difference_probe(
    traj_u: &Trajectory,
    traj_v: &Trajectory,
    sym: &DispersionSymbol,
    g: &Majorant,
    s: f64,
) -> Result<(ProbeReport, ProbeReport)> {
    if !(s > 0.5) {
        return Err(Error::RegularityTooLow { s, floor: 0.5 });
    }
    let w = traj_u.difference(traj_v)?;
    let beta = regularity_params(sym.alpha())?.beta_alpha;
    let t = w.t_final();
    let lift = |n: u64, e: f64| (n.max(1) as f64).powf(e);
    let (lhs1, n1) =
        block_time_norm(&w, 4.0, |n| lift(n, s - 1.0 - beta).powi(4), |n, u| Ok(l4(&project_dyadic(u, n)?)))?;
    let (lhs2, n2) = block_time_norm(&w, 3.0, |n| lift(n, -5.0 / 12.0).powi(3), |n, u| Ok(l4(&project_dyadic(u, n)?)))?;
    let k = traj_u.sup_sobolev(s, None)? + traj_v.sup_sobolev(s, None)?;
    let gv = 1.0 + g.eval(k);
    let rhs1 = t.powf(0.25) * gv * w.sup_sobolev(s - 1.0, None)?;
    let rhs2 = t.powf(1.0 / 3.0) * gv * w.sup_sobolev(-5.0 / 12.0 + beta, None)?;
    let params = ProbeParams {
        alpha: sym.alpha(),
        s: Some(s),
        t_final: Some(t),
        m: Some(w.grid().m()),
        seed: None,
        envelope: false,
    };
    Ok((
        ProbeReport::new("difference_l4", lhs1, rhs1, params, format!("dominant N={n1}; K={}", fmt_f64(k))),
        ProbeReport::new("difference_l3_l4", lhs2, rhs2, params, format!("dominant N={n2}; K={}", fmt_f64(k))),
    ))
}

/// Real nonnegative table on `{0 ≤ ξ ≤ Ξ} × Δτ ℤ`, one column per `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationTable {
    pub dtau: f64,
    /// `(m_start, values)`: entry `i` sits at `τ = (m_start + i) Δτ`.
    pub columns: Vec<(i64, Vec<f64>)>,
}

impl ModulationTable {
    /// `φ_N(τ − p(ξ))` times independent uniform `(0, 1]` amplitudes.
    pub fn random<R: Rng + ?Sized>(sym: &DispersionSymbol, n: u64, dtau: f64, xi_max: i64, rng: &mut R) -> Self {
        let nf = n as f64;
        let columns = (0..=xi_max)
            .map(|xi| {
                let p = sym.eval(xi as f64);
                let lo = ((p - 2.0 * nf) / dtau).floor() as i64;
                let hi = ((p + 2.0 * nf) / dtau).ceil() as i64;
                let vals = (lo..=hi)
                    .map(|m| {
                        let w = phi_n(n, m as f64 * dtau - p);
                        if w == 0.0 {
                            0.0
                        } else {
                            w * (1.0 - rng.gen::<f64>())
                        }
                    })
                    .collect();
                (lo, vals)
            })
            .collect();
        ModulationTable { dtau, columns }
    }

    pub fn zero(dtau: f64, xi_max: i64) -> Self {
        ModulationTable { dtau, columns: (0..=xi_max).map(|_| (0, Vec::new())).collect() }
    }

    /// `‖·‖_{L²_τ l²_ξ}`.
    pub fn l2_norm(&self) -> f64 {
        (self.dtau * self.columns.iter().flat_map(|c| c.1.iter()).map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// `‖a *_{τ,ξ} b‖_{L²_τ l²_ξ}` for tables on a common `Δτ` lattice.
pub fn convolution_l2(a: &ModulationTable, b: &ModulationTable) -> Result<f64> {
    if a.dtau != b.dtau {
        return Err(Error::InvalidParameter("tables use different τ lattices".into()));
    }
    let h = a.dtau;
    let xi_out = a.columns.len() + b.columns.len() - 1;
    let cols = map_indexed(xi_out, Execution::default(), |xi| {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for x1 in 0..a.columns.len() {
            if xi < x1 || xi - x1 >= b.columns.len() {
                continue;
            }
            let (ca, cb) = (&a.columns[x1], &b.columns[xi - x1]);
            if ca.1.is_empty() || cb.1.is_empty() {
                continue;
            }
            lo = lo.min(ca.0 + cb.0);
            hi = hi.max(ca.0 + cb.0 + (ca.1.len() + cb.1.len()) as i64 - 2);
        }
        if lo > hi {
            return 0.0;
        }
        let mut acc = vec![0.0; (hi - lo + 1) as usize];
        for x1 in 0..a.columns.len() {
            if xi < x1 || xi - x1 >= b.columns.len() {
                continue;
            }
            let (ca, cb) = (&a.columns[x1], &b.columns[xi - x1]);
            let base = (ca.0 + cb.0 - lo) as usize;
            for (i, x) in ca.1.iter().enumerate() {
                if *x == 0.0 {
                    continue;
                }
                for (j, y) in cb.1.iter().enumerate() {
                    acc[base + i + j] += x * y;
                }
            }
        }
        acc.iter().map(|v| (h * v).powi(2)).sum::<f64>() * h
    });
    Ok(cols.iter().sum::<f64>().sqrt())
}

/// `max ‖ψ_{N₁}u * ψ_{N₂}v‖ / ((N₁∧N₂)^{1/2}(N₁∨N₂)^{2β(α)}‖ψ_{N₁}u‖‖ψ_{N₂}v‖)` over random
/// nonnegative tables on `0 ≤ ξ ≤ Ξ`, `Ξ = m·(N₁∨N₂)^{1/(α+1)}` for `m ∈ {1, 2, 4}`,
/// with `Δτ = (N₁∧N₂)/8`.
pub fn bilinear_check(
    sym: &DispersionSymbol,
    n1: u64,
    n2: u64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<ProbeReport> {
    for n in [n1, n2] {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotDyadic(n));
        }
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let alpha = sym.alpha();
    let beta = regularity_params(alpha)?.beta_alpha;
    let (lo, hi) = (n1.min(n2) as f64, n1.max(n2) as f64);
    let dtau = lo / 8.0;
    let kernel = lo.sqrt() * hi.powf(2.0 * beta);
    let base = hi.powf(1.0 / (alpha + 1.0));
    let runs = map_indexed(3 * trials, exec, |k| {
        let mult = [1.0, 2.0, 4.0][k % 3];
        let xi_max = (mult * base).ceil() as i64;
        let mut rng = trial_rng(seed, k as u64);
        let a = ModulationTable::random(sym, n1, dtau, xi_max, &mut rng);
        let b = ModulationTable::random(sym, n2, dtau, xi_max, &mut rng);
        let lhs = convolution_l2(&a, &b).expect("shared lattice");
        (lhs, kernel * a.l2_norm() * b.l2_norm(), xi_max)
    });
    let (lhs, rhs, xi_max) =
        runs.iter().copied().max_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1))).expect("trials ≥ 1");
    let params = ProbeParams { alpha, s: None, t_final: None, m: None, seed: Some(seed), envelope: false };
    Ok(ProbeReport::new("bilinear", lhs, rhs, params, format!("N1={n1} N2={n2} Xi={xi_max}")))
}
