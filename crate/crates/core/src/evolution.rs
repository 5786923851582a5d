//! Time integration of `∂_t u + L u + ∂_x f(u) = 0` and the conserved functionals.
//!
//! On the Fourier side the equation reads `∂_t û = i p(ξ) û − i ξ \widehat{f(u)}`.
//! The linear part is integrated exactly; the Nyquist mode, being its own
//! conjugate partner, is given the symbol value 0 so every operator stays real.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nonlinearity::EntireSeries;
use crate::spectral::{sobolev_weights, weighted_norm, Field, TorusGrid};
use crate::symbols::DispersionSymbol;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Etdrk4,
    StrangSplit,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "etdrk4" => Ok(Scheme::Etdrk4),
            "strang" | "strangsplit" | "strang_split" => Ok(Scheme::StrangSplit),
            other => Err(Error::Parse(format!("unknown scheme `{other}` (etdrk4 | strang)"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Etdrk4 => "etdrk4",
            Scheme::StrangSplit => "strang",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    TwoThirds,
    None,
}

impl Dealias {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two_thirds" | "2/3" | "twothirds" => Ok(Dealias::TwoThirds),
            "none" => Ok(Dealias::None),
            other => Err(Error::Parse(format!("unknown dealiasing rule `{other}` (two_thirds | none)"))),
        }
    }
}

impl fmt::Display for Dealias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dealias::TwoThirds => "two_thirds",
            Dealias::None => "none",
        })
    }
}

/// Relative H¹ growth that trips the blow-up guard.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub dealias: Dealias,
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        SolverConfig { dt, t_final, scheme: Scheme::Etdrk4, dealias: Dealias::TwoThirds, record_every: 1 }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_dealias(mut self, d: Dealias) -> Self {
        self.dealias = d;
        self
    }

    /// Number of time steps; errors unless `T/Δt` is an integer multiple of `record_every`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt and 0 < T, got dt={} T={}",
                self.dt, self.t_final
            )));
        }
        if self.dt > self.t_final {
            return Err(Error::InvalidParameter(format!("dt = {} exceeds T = {}", self.dt, self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be positive".into()));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::InvalidParameter(format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        let n = n as usize;
        if n % self.record_every != 0 {
            return Err(Error::InvalidParameter(format!(
                "{n} steps are not a multiple of record_every = {}",
                self.record_every
            )));
        }
        Ok(n)
    }
}

/// `p(ξ)` on the grid frequencies, FFT order, with the Nyquist entry set to 0.
pub fn discrete_symbol(sym: &DispersionSymbol, grid: TorusGrid) -> Vec<f64> {
    let h = grid.nyquist();
    (0..grid.m())
        .map(|j| {
            let xi = grid.freq(j);
            if xi == h {
                0.0
            } else {
                sym.eval(xi as f64)
            }
        })
        .collect()
}

/// `U(t)u`: multiplication by `e^{i t p(ξ)}`.
pub fn propagator(sym: &DispersionSymbol, t: f64, u: &Field) -> Field {
    let p = discrete_symbol(sym, u.grid());
    let coeffs = u.coeffs().iter().zip(&p).map(|(c, p)| c * Complex64::from_polar(1.0, t * p)).collect();
    Field::from_coeffs(u.grid(), coeffs).expect("same grid")
}

/// Time-dependent forcing `g(t)` added to the right-hand side.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> Field + Sync);

/// Residual forcing that makes `u*(t,x) = cos(x − t)` an exact solution:
/// `g = (1 + p(1)) sin(x − t) − f′(cos(x − t)) sin(x − t)`.
pub fn manufactured_cosine_forcing(
    sym: &DispersionSymbol,
    f: &EntireSeries,
    grid: TorusGrid,
) -> impl Fn(f64) -> Field + Sync {
    let p1 = sym.eval(1.0);
    let df = f.derivative();
    move |t: f64| {
        let nodes = grid.nodes();
        let vals: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let (s, c) = (x - t).sin_cos();
                (1.0 + p1) * s - df.eval_scalar(c).expect("|cos| ≤ 1 is within the radius guard") * s
            })
            .collect();
        Field::from_values(grid, &vals).expect("grid-sized")
    }
}

/// `cos(x − t)`, the manufactured exact solution.
pub fn manufactured_cosine(grid: TorusGrid, t: f64) -> Field {
    Field::from_fn(grid, |x| (x - t).cos())
}

struct Rhs<'a> {
    f: &'a EntireSeries,
    forcing: Option<Forcing<'a>>,
    dealias: Dealias,
    grid: TorusGrid,
    linear_only: bool,
}

impl Rhs<'_> {
    /// `−iξ D[\widehat{f(u)}] + ĝ(t)`.
    fn eval(&self, v: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let m = self.grid.m();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        if !self.linear_only {
            let u = Field::from_coeffs(self.grid, v.to_vec())?;
            let mut fu = self.f.eval_series(&u)?;
            if self.dealias == Dealias::TwoThirds {
                fu = fu.dealiased();
            }
            let h = self.grid.nyquist();
            for (j, (o, c)) in out.iter_mut().zip(fu.coeffs()).enumerate() {
                let xi = self.grid.freq(j);
                if xi != h {
                    *o = Complex64::new(0.0, -(xi as f64)) * c;
                }
            }
        }
        if let Some(g) = self.forcing {
            for (o, c) in out.iter_mut().zip(g(t).coeffs()) {
                *o += c;
            }
        }
        Ok(out)
    }
}

/// ETDRK4 coefficients for `c = i p(ξ)` and step `h`, by contour averaging.
struct EtdCoefficients {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

const CONTOUR_POINTS: usize = 32;

impl EtdCoefficients {
    fn new(p: &[f64], grid: TorusGrid, h: f64) -> Self {
        let m = grid.m();
        let zero = Complex64::new(0.0, 0.0);
        let mut c = EtdCoefficients {
            e: vec![zero; m],
            e2: vec![zero; m],
            q: vec![zero; m],
            f1: vec![zero; m],
            f2: vec![zero; m],
            f3: vec![zero; m],
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, PI * (j as f64 + 0.5) * 2.0 / CONTOUR_POINTS as f64))
            .collect();
        let n = CONTOUR_POINTS as f64;
        // compute ξ ≥ 0 and mirror, so conjugate symmetry holds bit-for-bit
        for j in 0..=m / 2 {
            let lin = Complex64::new(0.0, h * p[j]);
            let (mut q, mut f1, mut f2, mut f3) = (zero, zero, zero, zero);
            for r in &roots {
                let z = lin + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z / 2.0).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let vals = [lin.exp(), (lin / 2.0).exp(), q * h / n, f1 * h / n, f2 * h / n, f3 * h / n];
            let mirror = if j == 0 || j == m / 2 { None } else { Some(m - j) };
            for (arr, v) in [&mut c.e, &mut c.e2, &mut c.q, &mut c.f1, &mut c.f2, &mut c.f3].into_iter().zip(vals) {
                arr[j] = v;
                if let Some(k) = mirror {
                    arr[k] = v.conj();
                }
            }
        }
        c
    }
}

fn axpy(a: &[Complex64], x: &[Complex64], b: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(x).zip(b.iter().zip(y)).map(|((a, x), (b, y))| a * x + b * y).collect()
}

fn h1_weights(grid: TorusGrid) -> Vec<f64> {
    sobolev_weights(grid, 1.0, None).expect("finite index")
}

/// Integrates from `u0` and records every `record_every` steps.
pub fn solve(u0: &Field, sym: &DispersionSymbol, f: &EntireSeries, cfg: &SolverConfig) -> Result<Trajectory> {
    solve_forced(u0, sym, f, cfg, None)
}

/// [`solve`] with an additional forcing term `g(t)` on the right-hand side.
pub fn solve_forced(
    u0: &Field,
    sym: &DispersionSymbol,
    f: &EntireSeries,
    cfg: &SolverConfig,
    forcing: Option<Forcing<'_>>,
) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    let grid = u0.grid();
    let h = cfg.dt;
    let p = discrete_symbol(sym, grid);
    let rhs = Rhs { f, forcing, dealias: cfg.dealias, grid, linear_only: f.is_zero() };
    let hw = h1_weights(grid);
    let h1_ref = weighted_norm(u0, &hw);
    let mut v: Vec<Complex64> = u0.coeffs().to_vec();
    let mut frames = vec![u0.clone()];
    let mut last_stable = 0.0;

    let etd = (cfg.scheme == Scheme::Etdrk4).then(|| EtdCoefficients::new(&p, grid, h));
    let half: Vec<Complex64> = p.iter().map(|p| Complex64::from_polar(1.0, 0.5 * h * p)).collect();

    for n in 0..steps {
        let t = n as f64 * h;
        v = match &etd {
            Some(c) => {
                let nv = rhs.eval(&v, t)?;
                let a = axpy(&c.e2, &v, &c.q, &nv);
                let na = rhs.eval(&a, t + h / 2.0)?;
                let b = axpy(&c.e2, &v, &c.q, &na);
                let nb = rhs.eval(&b, t + h / 2.0)?;
                let two_nb_minus_nv: Vec<Complex64> = nb.iter().zip(&nv).map(|(b, v)| 2.0 * b - v).collect();
                let cc = axpy(&c.e2, &a, &c.q, &two_nb_minus_nv);
                let nc = rhs.eval(&cc, t + h)?;
                (0..v.len())
                    .map(|j| c.e[j] * v[j] + c.f1[j] * nv[j] + 2.0 * c.f2[j] * (na[j] + nb[j]) + c.f3[j] * nc[j])
                    .collect()
            }
            None => {
                let w: Vec<Complex64> = v.iter().zip(&half).map(|(a, b)| a * b).collect();
                // classical RK4 on the nonlinear part over a full step
                let k1 = rhs.eval(&w, t)?;
                let s1: Vec<Complex64> = w.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
                let k2 = rhs.eval(&s1, t + h / 2.0)?;
                let s2: Vec<Complex64> = w.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
                let k3 = rhs.eval(&s2, t + h / 2.0)?;
                let s3: Vec<Complex64> = w.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
                let k4 = rhs.eval(&s3, t + h)?;
                (0..w.len()).map(|j| (w[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])) * half[j]).collect()
            }
        };
        let t_new = (n + 1) as f64 * h;
        let field = Field::from_coeffs(grid, v.clone())?;
        let norm = weighted_norm(&field, &hw);
        if !norm.is_finite() || (h1_ref > 0.0 && norm > BLOW_UP_FACTOR * h1_ref) {
            return Err(Error::BlowUp { time: t_new, last_stable, norm });
        }
        last_stable = t_new;
        if (n + 1) % cfg.record_every == 0 {
            frames.push(field);
        }
    }
    Trajectory::new(h * cfg.record_every as f64, frames)
}

// ---------------------------------------------------------------- invariants

/// Conserved quantities and the high/low split of the quadratic energy.
///
/// `E = ½ (E_quad_high + E_quad_low) + E_potential` with `E_potential = −∫F(u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    pub mass: f64,
    pub energy: f64,
    /// `∫ |Λ_{α/2} P_{≥ξ₀} u|² = 2π Σ_{|k| ≥ ξ₀} (p(k)/k) |û(k)|²`.
    pub e_quad_high: f64,
    /// `2π Σ_{1 ≤ |k| < ξ₀} (p(k)/k) |û(k)|²`.
    pub e_quad_low: f64,
    pub e_potential: f64,
    /// `max_{1 ≤ |k| ≤ ξ₀} |p(k)/k|`.
    pub k0: f64,
}

/// `K_0 = max_{1 ≤ |k| ≤ ξ₀} |p(k)/k|`, zero if no integer lies in that range.
pub fn k0_constant(sym: &DispersionSymbol) -> f64 {
    let top = sym.xi0().floor() as i64;
    (1..=top).map(|k| (sym.eval(k as f64) / k as f64).abs()).fold(0.0, f64::max)
}

pub fn invariants(u: &Field, sym: &DispersionSymbol, f: &EntireSeries) -> Result<InvariantReport> {
    let grid = u.grid();
    let p = discrete_symbol(sym, grid);
    let xi0 = sym.xi0();
    let (mut high, mut low) = (0.0, 0.0);
    for (j, c) in u.coeffs().iter().enumerate() {
        let k = grid.freq(j);
        if k == 0 {
            continue;
        }
        let q = p[j] / k as f64;
        if (k.abs() as f64) >= xi0 {
            if q < 0.0 {
                return Err(Error::NegativeEnergyMultiplier { k, value: q });
            }
            high += q * c.norm_sqr();
        } else {
            low += q * c.norm_sqr();
        }
    }
    let (high, low) = (2.0 * PI * high, 2.0 * PI * low);
    let e_potential = -crate::nonlinearity::potential_integral(f, u)?;
    Ok(InvariantReport {
        mass: u.l2_norm_sq(),
        energy: 0.5 * (high + low) + e_potential,
        e_quad_high: high,
        e_quad_low: low,
        e_potential,
        k0: k0_constant(sym),
    })
}

/// Bound on `‖u‖_{H^{α/2}}` (canonical norm) for any field without a Nyquist mode,
/// given its mass, energy, and `F ≤ B`:
///
/// `‖u‖² ≤ a M + c′ (2E + 4πB + K M)` with `a = max_{|k|<ξ₀} w(k)`,
/// `c′ = max_{|k|≥ξ₀} (w(k) − a)₊ / (p(k)/k)`, `K = max_{1≤|k|<ξ₀} |p(k)/k|`
/// and `w` the `H^{α/2}` weights.
pub fn apriori_bound(sym: &DispersionSymbol, grid: TorusGrid, mass: f64, energy: f64, b: f64) -> Result<f64> {
    let w = sobolev_weights(grid, sym.alpha() / 2.0, None)?;
    let p = discrete_symbol(sym, grid);
    let xi0 = sym.xi0();
    let h = grid.nyquist();
    let mut a: f64 = 0.0;
    let mut k_low: f64 = 0.0;
    for j in 0..grid.m() {
        let k = grid.freq(j);
        if (k.abs() as f64) < xi0 {
            a = a.max(w[j]);
            if k != 0 {
                k_low = k_low.max((p[j] / k as f64).abs());
            }
        }
    }
    let mut c: f64 = 0.0;
    for j in 0..grid.m() {
        let k = grid.freq(j);
        if k == h || (k.abs() as f64) < xi0 {
            continue;
        }
        let q = p[j] / k as f64;
        if q <= 0.0 {
            return Err(Error::NegativeEnergyMultiplier { k, value: q });
        }
        c = c.max((w[j] - a).max(0.0) / q);
    }
    let quad = (2.0 * energy + 4.0 * PI * b + k_low * mass).max(0.0);
    Ok((a * mass + c * quad).sqrt())
}

/// `[min, max]` of `∫|Λ_{α/2}P_{≥ξ₀}u|² / ‖P_{≥ξ₀}u‖²_{H^{α/2}}` over the grid (Nyquist excluded).
pub fn energy_equivalence_constants(sym: &DispersionSymbol, grid: TorusGrid) -> Result<(f64, f64)> {
    let w = sobolev_weights(grid, sym.alpha() / 2.0, None)?;
    let p = discrete_symbol(sym, grid);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in 0..grid.m() {
        let k = grid.freq(j);
        if k == grid.nyquist() || k == 0 || (k.abs() as f64) < sym.xi0() {
            continue;
        }
        let r = (p[j] / k as f64) / w[j];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}
