//! Entire nonlinearities `f(x) = Σ a_k x^k`, the potential `F(x) = ∫_0^x f`,
//! measured product constants and the majorant `G[f]`.
//!
//! A series is stored by its Taylor derivatives `f^{(k)}(0)`, so that taking
//! the antiderivative or the derivative is an exact index shift.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use crate::envelope::DyadicSequence;
use crate::error::{Error, Result};
use crate::par::{map_indexed, trial_rng, Execution};
use crate::spectral::{random_field, sobolev_norm, Field, TorusGrid};

pub const DEFAULT_K_MAX: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Exp,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Exp => "exp",
            Preset::Sin => "sin",
            Preset::Cos => "cos",
            Preset::Sinh => "sinh",
            Preset::Cosh => "cosh",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "exp" => Preset::Exp,
            "sin" => Preset::Sin,
            "cos" => Preset::Cos,
            "sinh" => Preset::Sinh,
            "cosh" => Preset::Cosh,
            _ => return None,
        })
    }

    /// `f^{(k)}(0)`.
    fn derivative_at_zero(self, k: usize) -> f64 {
        match self {
            Preset::Exp => 1.0,
            Preset::Sin => [0.0, 1.0, 0.0, -1.0][k % 4],
            Preset::Cos => [1.0, 0.0, -1.0, 0.0][k % 4],
            Preset::Sinh => [0.0, 1.0][k % 2],
            Preset::Cosh => [1.0, 0.0][k % 2],
        }
    }

    /// Closed form, for oracles and diagnostics.
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Preset::Exp => x.exp(),
            Preset::Sin => x.sin(),
            Preset::Cos => x.cos(),
            Preset::Sinh => x.sinh(),
            Preset::Cosh => x.cosh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Origin {
    Polynomial,
    Preset {
        preset: Preset,
        negated: bool,
    },
    /// Antiderivative or derivative of a preset; every Taylor derivative is bounded by 1.
    Derived,
}

/// Entire function given by Taylor derivatives at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EntireSeries {
    derivs: Vec<f64>,
    coeffs: Vec<f64>,
    origin: Origin,
    tolerance: f64,
    label: String,
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, j| a * j as f64)
}

impl EntireSeries {
    fn from_derivs(derivs: Vec<f64>, origin: Origin, tolerance: f64, label: String) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        EntireSeries { derivs, coeffs, origin, tolerance, label }
    }

    /// `Σ a_k x^k` from `a_0, a_1, …`.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parse("a polynomial needs at least one coefficient".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("polynomial coefficient {c}")));
        }
        let derivs = coeffs.iter().enumerate().map(|(k, a)| a * factorial(k)).collect();
        let label = format!("poly:{}", coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
        let mut s = Self::from_derivs(derivs, Origin::Polynomial, DEFAULT_TOLERANCE, label);
        // keep the user's coefficients verbatim
        s.coeffs = coeffs.to_vec();
        Ok(s)
    }

    pub fn zero() -> Self {
        Self::polynomial(&[0.0]).expect("valid")
    }

    /// `±preset`, stored up to `K_max = 64`.
    pub fn preset(preset: Preset, negated: bool) -> Self {
        let sign = if negated { -1.0 } else { 1.0 };
        let derivs = (0..=DEFAULT_K_MAX).map(|k| sign * preset.derivative_at_zero(k)).collect();
        let label = format!("{}{}", if negated { "-" } else { "" }, preset.name());
        Self::from_derivs(derivs, Origin::Preset { preset, negated }, DEFAULT_TOLERANCE, label)
    }

    /// Parses `poly:a0,a1,…`, `exp`, `-sinh`, `sin`, … (optionally quoted).
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim().trim_matches('"').trim();
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("polynomial coefficient `{}`: {e}", t.trim())))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut p = Self::polynomial(&coeffs)?;
            p.label = s.to_string();
            return Ok(p);
        }
        let (negated, name) = match s.strip_prefix('-') {
            Some(n) => (true, n),
            None => (false, s),
        };
        let preset = Preset::from_name(name).ok_or_else(|| {
            Error::Parse(format!("unknown nonlinearity `{s}` (expected poly:a0,a1,… or [-]exp|sin|cos|sinh|cosh)"))
        })?;
        Ok(Self::preset(preset, negated))
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("truncation tolerance must be positive, got {tolerance}")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `a_k = f^{(k)}(0)/k!`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `f^{(k)}(0)`.
    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn is_polynomial(&self) -> bool {
        self.origin == Origin::Polynomial
    }

    /// Degree after trimming zero coefficients; `None` for transcendental series, `Some(0)` for constants.
    pub fn degree(&self) -> Option<usize> {
        if !self.is_polynomial() {
            return None;
        }
        Some(self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0))
    }

    /// True when `f` vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.is_polynomial() && self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// True when some coefficient of order ≥ 2 is nonzero.
    pub fn is_nonlinear(&self) -> bool {
        self.coeffs.iter().skip(2).any(|c| *c != 0.0)
    }

    /// `F(x) = ∫_0^x f`: `F^{(k+1)}(0) = f^{(k)}(0)`, `F(0) = 0`.
    pub fn antiderivative(&self) -> EntireSeries {
        let mut d = Vec::with_capacity(self.derivs.len() + 1);
        d.push(0.0);
        d.extend_from_slice(&self.derivs);
        let origin = if self.is_polynomial() { Origin::Polynomial } else { Origin::Derived };
        Self::from_derivs(d, origin, self.tolerance, format!("antiderivative({})", self.label))
    }

    /// Formal derivative `f′`.
    pub fn derivative(&self) -> EntireSeries {
        let d = if self.derivs.len() > 1 { self.derivs[1..].to_vec() } else { vec![0.0] };
        let origin = if self.is_polynomial() { Origin::Polynomial } else { Origin::Derived };
        Self::from_derivs(d, origin, self.tolerance, format!("derivative({})", self.label))
    }

    /// Certified bound on the omitted tail `Σ_{k ≥ len} |a_k| A^k`.
    fn unstored_tail(&self, amplitude: f64) -> f64 {
        if self.is_polynomial() {
            return 0.0;
        }
        // every stored family has |f^{(k)}(0)| ≤ 1, so |a_k| ≤ 1/k!
        let l = self.derivs.len();
        let mut term = 1.0;
        for k in 1..=l {
            term *= amplitude / k as f64;
        }
        term * amplitude.exp()
    }

    /// Smallest `K` with `Σ_{k>K} |a_k| A^k ≤ τ`.
    pub fn truncation_order(&self, amplitude: f64) -> Result<usize> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::NonFinite(format!("amplitude {amplitude}")));
        }
        let mut tail = self.unstored_tail(amplitude);
        if tail > self.tolerance {
            return Err(Error::AmplitudeTooLarge { amplitude });
        }
        let terms: Vec<f64> = self.coeffs.iter().enumerate().map(|(k, a)| a.abs() * amplitude.powi(k as i32)).collect();
        let mut k = terms.len() - 1;
        while k > 0 && tail + terms[k] <= self.tolerance {
            tail += terms[k];
            k -= 1;
        }
        Ok(k)
    }

    fn horner(&self, order: usize, x: f64) -> f64 {
        self.coeffs[..=order].iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    pub fn eval_scalar(&self, x: f64) -> Result<f64> {
        let k = self.truncation_order(x.abs())?;
        Ok(self.horner(k, x))
    }

    /// Pointwise `f` with one truncation order chosen for the largest amplitude.
    pub fn eval_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        let amp = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field value".into()));
        }
        let k = self.truncation_order(amp)?;
        Ok(values.iter().map(|&v| self.horner(k, v)).collect())
    }

    /// `f(u)` evaluated at the collocation nodes and transformed back.
    pub fn eval_series(&self, u: &Field) -> Result<Field> {
        let v = self.eval_values(&u.values())?;
        Field::from_values(u.grid(), &v)
    }

    /// Checks `|a_k|^{1/k}` is nonincreasing over the upper half of the stored prefix
    /// (ignoring zeros) and small at the end, the numerical signature of an infinite radius.
    pub fn verify_entire(&self) -> bool {
        if self.is_polynomial() {
            return true;
        }
        let roots: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(self.coeffs.len() / 2)
            .filter(|(_, a)| **a != 0.0)
            .map(|(k, a)| a.abs().powf(1.0 / k as f64))
            .collect();
        roots.windows(2).all(|w| w[1] <= w[0]) && roots.last().map_or(true, |r| *r < 0.1)
    }
}

impl fmt::Display for EntireSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

// ---------------------------------------------------------------- global classification

/// Growth class of the potential `F` relevant for global existence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GlobalClass {
    /// `|F(x)| ≤ C(1 + |x|^{p+1})`.
    Case1 {
        p: usize,
    },
    /// `F(x) ≤ B` on `ℝ`.
    Case2 {
        bound: f64,
    },
    Unknown,
}

/// Classifies `f` by syntactic inspection. Case 2 is reported whenever it can be
/// certified, then Case 1 for polynomials of degree `< 2α`.
pub fn classify_global(f: &EntireSeries, alpha: f64) -> GlobalClass {
    match &f.origin {
        Origin::Preset { preset, negated } => {
            let bound = match (preset, negated) {
                (Preset::Exp, true) => Some(1.0),  // F = 1 − e^x
                (Preset::Sinh, true) => Some(0.0), // F = 1 − cosh x
                (Preset::Sin, false) => Some(2.0), // F = 1 − cos x
                (Preset::Sin, true) => Some(0.0),
                (Preset::Cos, _) => Some(1.0), // F = ± sin x
                _ => None,
            };
            bound.map_or(GlobalClass::Unknown, |bound| GlobalClass::Case2 { bound })
        }
        Origin::Derived => GlobalClass::Unknown,
        Origin::Polynomial => {
            if f.is_zero() {
                return GlobalClass::Case2 { bound: 0.0 };
            }
            let d = f.degree().expect("polynomial");
            let lead = f.coeffs[d];
            if d % 2 == 1 && lead < 0.0 {
                return GlobalClass::Case2 { bound: polynomial_potential_sup(f) };
            }
            if (d as f64) < 2.0 * alpha {
                GlobalClass::Case1 { p: d.max(1) }
            } else {
                GlobalClass::Unknown
            }
        }
    }
}

/// Certified upper bound of `F` for an odd-degree polynomial `f` with negative leading coefficient.
///
/// All real roots of `f` lie in `|x| ≤ R` (Cauchy), `F` decreases away from that interval,
/// and inside it a sampled maximum plus the Lipschitz slack `L h / 2` bounds `F`.
fn polynomial_potential_sup(f: &EntireSeries) -> f64 {
    let d = f.degree().expect("polynomial");
    let a = f.coeffs();
    let lead = a[d].abs();
    let r = 1.0 + a[..d].iter().map(|c| c.abs() / lead).fold(0.0, f64::max);
    let lip: f64 = a[..=d].iter().enumerate().map(|(k, c)| c.abs() * r.powi(k as i32)).sum();
    let big_f = f.antiderivative();
    let n = 20_000usize;
    let h = 2.0 * r / n as f64;
    let sampled = (0..=n).map(|i| big_f.horner(d + 1, -r + i as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
    sampled + 0.5 * lip * h
}

/// Largest sampled value of `F` on `[−w, w]`; diagnostic only, never a certificate.
pub fn potential_window_sup(f: &EntireSeries, window: f64, samples: usize) -> Result<f64> {
    let big_f = f.antiderivative();
    let n = samples.max(2);
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let x = -window + 2.0 * window * i as f64 / (n - 1) as f64;
        best = best.max(big_f.eval_scalar(x)?);
    }
    Ok(best)
}

// ---------------------------------------------------------------- product constants and majorants

fn random_band(rng: &mut impl Rng, top: i64) -> (i64, f64) {
    let kmax = rng.gen_range(1..=top.max(1));
    let decay = [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
    (kmax, decay)
}

fn collocation_product(a: &Field, b: &Field) -> Field {
    let (x, y) = (a.values(), b.values());
    let p: Vec<f64> = x.iter().zip(&y).map(|(s, t)| s * t).collect();
    Field::from_values(a.grid(), &p).expect("same grid")
}

/// Measures the constant of `‖uv‖_{H^s_ω} ≤ C(‖u‖_{H^s_ω}‖v‖_{L^∞} + ‖u‖_{L^∞}‖v‖_{H^s_ω})`
/// as the largest observed ratio over random pairs and power pairs `(u, u^j)`.
///
/// Inputs are band-limited below `M/4` so collocation products are alias-free.
pub fn measure_product_constant(
    grid: TorusGrid,
    s: f64,
    env: Option<&DyadicSequence>,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    sobolev_norm(&Field::zeros(grid), s, env)?;
    let top = grid.m() as i64 / 4 - 1;
    let ratios = map_indexed(trials, exec, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let pairs = if t % 2 == 0 {
            let (k1, d1) = random_band(&mut rng, top);
            let (k2, d2) = random_band(&mut rng, top);
            let u = random_field(grid, k1, d1, &mut rng);
            let v = random_field(grid, k2, d2, &mut rng);
            vec![(u, v)]
        } else {
            let (k, d) = random_band(&mut rng, top / 4);
            let u = random_field(grid, k, d, &mut rng);
            let mut pow = u.clone();
            let mut out = Vec::new();
            for _ in 0..3 {
                out.push((u.clone(), pow.clone()));
                pow = collocation_product(&pow, &u);
            }
            out
        };
        pairs
            .iter()
            .map(|(u, v)| {
                let uv = collocation_product(u, v);
                let num = sobolev_norm(&uv, s, env).unwrap();
                let den =
                    sobolev_norm(u, s, env).unwrap() * v.sup_norm() + u.sup_norm() * sobolev_norm(v, s, env).unwrap();
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    });
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Measures the constant of `‖uv‖_{H^{s−1}} ≤ C ‖u‖_{H^{s−1}} ‖v‖_{H^s}` (`s > 1/2`).
pub fn measure_difference_constant(grid: TorusGrid, s: f64, trials: usize, seed: u64, exec: Execution) -> Result<f64> {
    if !(s > 0.5) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("difference estimate needs s > 1/2, got {s}")));
    }
    let top = grid.m() as i64 / 4 - 1;
    let ratios = map_indexed(trials, exec, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let (k1, d1) = random_band(&mut rng, top);
        let (k2, d2) = random_band(&mut rng, top);
        let u = random_field(grid, k1, d1, &mut rng);
        let v = random_field(grid, k2, d2, &mut rng);
        let num = sobolev_norm(&collocation_product(&u, &v), s - 1.0, None).unwrap();
        let den = sobolev_norm(&u, s - 1.0, None).unwrap() * sobolev_norm(&v, s, None).unwrap();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    });
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// `G(x) = Σ_{j ≥ 0} w_j x^j` plus a certified bound on the unstored tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Majorant {
    weights: Vec<f64>,
    /// The constant `C` raised to powers inside `G`.
    pub constant: f64,
    /// The measured product constant it was derived from.
    pub measured: f64,
    bounded_tail: bool,
}

impl Majorant {
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let head = self.weights.iter().rev().fold(0.0, |acc, w| acc * x + w);
        if !self.bounded_tail {
            return head;
        }
        // Σ_{k ≥ L} (Cx)^{k−1}/(k−1)! ≤ (Cx)^{L−1}/(L−1)! · e^{Cx}
        let y = self.constant * x;
        let l = self.weights.len() + 1;
        let mut term = 1.0;
        for j in 1..l {
            term *= y / j as f64;
        }
        head + term * y.exp()
    }
}

/// `G(x) = Σ_{k ≥ 1} |a_k| (2C)^{k−1} x^{k−1}`, which dominates
/// `‖f(u) − a_0‖_{H^s_ω} ≤ G(‖u‖_{L^∞}) ‖u‖_{H^s_ω}` when `C ≥ 1/2` bounds the product estimate.
pub fn majorant(f: &EntireSeries, measured: f64) -> Majorant {
    let c = 2.0 * measured.max(0.5);
    let weights = f.coeffs().iter().enumerate().skip(1).map(|(k, a)| a.abs() * c.powi(k as i32 - 1)).collect();
    Majorant { weights, constant: c, measured, bounded_tail: !f.is_polynomial() }
}

/// `G(x) = Σ_{k ≥ 1} k |a_k| C^{k−1} x^{k−1}` for
/// `‖f(u) − f(v)‖_{H^{s−1}} ≤ G(‖u‖_{H^s} + ‖v‖_{H^s}) ‖u − v‖_{H^{s−1}}`.
pub fn difference_majorant(f: &EntireSeries, measured: f64) -> Majorant {
    let c = measured.max(1.0);
    let weights =
        f.coeffs().iter().enumerate().skip(1).map(|(k, a)| k as f64 * a.abs() * c.powi(k as i32 - 1)).collect();
    Majorant { weights, constant: c, measured, bounded_tail: !f.is_polynomial() }
}

/// `∫_𝕋 F(u)` by the collocation rule on the field's own grid.
pub fn potential_integral(f: &EntireSeries, u: &Field) -> Result<f64> {
    let big_f = f.antiderivative();
    let v = big_f.eval_values(&u.values())?;
    Ok(2.0 * PI / v.len() as f64 * v.iter().sum::<f64>())
}
