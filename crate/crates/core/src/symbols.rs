//! Dispersion symbols `p_{α+1}` and the regularity exponents derived from `α`.
//!
//! The linear operator `L_{α+1}` is the Fourier multiplier `−i p(ξ)`. A valid
//! symbol is real, odd, and for `ξ ≥ ξ₀` satisfies `p'(ξ) ∼ ξ^α` and
//! `p''(ξ) ∼ ξ^{α−1}`. The implicit constants are never asserted; the
//! [`validate_hypothesis`] report exposes the measured brackets instead.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// User-supplied evaluator for [`SymbolKind::Custom`].
pub type SymbolFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    /// `p(ξ) = ξ|ξ|^α`, i.e. `L = ∂_x D_x^α`.
    PureFractional,
    /// Intermediate long wave: `p(ξ) = ξ² coth ξ`, `α = 1`.
    Ilw,
    /// Smith operator: `p(ξ) = ξ (1 + ξ²)^{1/2}`, `α = 1`.
    Smith,
    Custom,
}

impl SymbolKind {
    pub fn name(self) -> &'static str {
        match self {
            SymbolKind::PureFractional => "pure",
            SymbolKind::Ilw => "ilw",
            SymbolKind::Smith => "smith",
            SymbolKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pure" | "pure_fractional" | "purefractional" | "fractional" => Ok(SymbolKind::PureFractional),
            "ilw" => Ok(SymbolKind::Ilw),
            "smith" => Ok(SymbolKind::Smith),
            other => Err(Error::Parse(format!("unknown symbol kind `{other}` (expected pure, ilw or smith)"))),
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An immutable dispersion symbol. Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct DispersionSymbol {
    kind: SymbolKind,
    alpha: f64,
    xi0: f64,
    custom: Option<SymbolFn>,
}

impl fmt::Debug for DispersionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionSymbol")
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("xi0", &self.xi0)
            .finish()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && (1.0..=2.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn check_xi0(xi0: f64) -> Result<()> {
    if xi0.is_finite() && xi0 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("xi0 must be positive, got {xi0}")))
    }
}

/// Builds one of the built-in symbols.
pub fn make_symbol(kind: SymbolKind, alpha: f64, xi0: f64) -> Result<DispersionSymbol> {
    check_alpha(alpha)?;
    check_xi0(xi0)?;
    match kind {
        SymbolKind::Ilw | SymbolKind::Smith if alpha != 1.0 => {
            Err(Error::KindRequiresAlphaOne { kind: kind.name(), alpha })
        }
        SymbolKind::Custom => {
            Err(Error::InvalidParameter("custom symbols are built with DispersionSymbol::custom".into()))
        }
        _ => Ok(DispersionSymbol { kind, alpha, xi0, custom: None }),
    }
}

// ξ² coth ξ with the removable singularity at 0 handled by its Taylor series.
fn ilw(xi: f64) -> f64 {
    if xi.abs() < 1e-2 {
        let x2 = xi * xi;
        xi * (1.0 + x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2 * x2 * x2 / 945.0)
    } else {
        xi * xi / xi.tanh()
    }
}

fn pure(xi: f64, alpha: f64) -> f64 {
    let a = xi.abs();
    if alpha == 2.0 {
        xi * a * a
    } else if alpha == 1.0 {
        xi * a
    } else {
        xi * a.powf(alpha)
    }
}

impl DispersionSymbol {
    pub fn pure(alpha: f64) -> Result<Self> {
        make_symbol(SymbolKind::PureFractional, alpha, 1.0)
    }

    pub fn ilw() -> Self {
        DispersionSymbol { kind: SymbolKind::Ilw, alpha: 1.0, xi0: 1.0, custom: None }
    }

    pub fn smith() -> Self {
        DispersionSymbol { kind: SymbolKind::Smith, alpha: 1.0, xi0: 1.0, custom: None }
    }

    /// Wraps an arbitrary evaluator. Oddness is checked lazily by [`validate`](Self::validate).
    pub fn custom<F>(alpha: f64, xi0: f64, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_alpha(alpha)?;
        check_xi0(xi0)?;
        Ok(DispersionSymbol { kind: SymbolKind::Custom, alpha, xi0, custom: Some(Arc::new(eval)) })
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    /// Same symbol with a different validity threshold.
    pub fn with_xi0(mut self, xi0: f64) -> Result<Self> {
        check_xi0(xi0)?;
        self.xi0 = xi0;
        Ok(self)
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        match self.kind {
            SymbolKind::PureFractional => pure(xi, self.alpha),
            SymbolKind::Ilw => ilw(xi),
            SymbolKind::Smith => xi * (1.0 + xi * xi).sqrt(),
            SymbolKind::Custom => (self.custom.as_ref().expect("custom evaluator"))(xi),
        }
    }

    fn step(xi: f64) -> f64 {
        1e-3 * xi.abs().max(1e-3)
    }

    /// `p'(ξ)` by fourth-order central differences with step `1e−3·ξ`.
    pub fn derivative(&self, xi: f64) -> f64 {
        let h = Self::step(xi);
        (-self.eval(xi + 2.0 * h) + 8.0 * self.eval(xi + h) - 8.0 * self.eval(xi - h) + self.eval(xi - 2.0 * h))
            / (12.0 * h)
    }

    /// `p''(ξ)` by fourth-order central differences with step `1e−3·ξ`.
    pub fn second_derivative(&self, xi: f64) -> f64 {
        let h = Self::step(xi);
        (-self.eval(xi + 2.0 * h) + 16.0 * self.eval(xi + h) - 30.0 * self.eval(xi) + 16.0 * self.eval(xi - h)
            - self.eval(xi - 2.0 * h))
            / (12.0 * h * h)
    }

    /// `max_{ξ ∈ [0, ξ₀]} |p'(ξ)|`, sampled on 257 points.
    pub fn max_slope_below_xi0(&self) -> f64 {
        (0..=256).map(|i| self.derivative(self.xi0 * i as f64 / 256.0).abs()).fold(0.0, f64::max)
    }

    /// The frequency threshold `(max_{[0,ξ₀]} |p'|)^{1/α}` of the non-resonance lemmas.
    pub fn resonance_threshold(&self) -> f64 {
        self.max_slope_below_xi0().powf(1.0 / self.alpha)
    }

    /// Checks finiteness and oddness on a fixed deterministic sample set.
    pub fn validate(&self) -> Result<()> {
        let mut residual: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..=400 {
            let xi = 1e-3 * 1.035_f64.powi(i);
            let (a, b) = (self.eval(xi), self.eval(-xi));
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite(format!("p({xi})")));
            }
            residual = residual.max((a + b).abs());
            scale = scale.max(a.abs());
        }
        let p0 = self.eval(0.0);
        if !p0.is_finite() {
            return Err(Error::NonFinite("p(0)".into()));
        }
        residual = residual.max(p0.abs());
        if residual > 1e-12 * scale.max(1.0) {
            return Err(Error::NotOdd { residual });
        }
        Ok(())
    }
}

/// The exponents attached to `α`: `s(α)`, `β(α)`, `b(α)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityParams {
    pub alpha: f64,
    /// Threshold `s(α) = 1 − α/(2(α+1))`.
    pub s_alpha: f64,
    /// Derivative loss `β(α) = 1/(4(α+1))` of the improved Strichartz estimate.
    pub beta_alpha: f64,
    /// Bourgain exponent `b(α) = β(α) + 1/4`.
    pub b_alpha: f64,
}

pub fn regularity_params(alpha: f64) -> Result<RegularityParams> {
    check_alpha(alpha)?;
    // (α+2)/(2(α+1)) is the same number as 1 − α/(2(α+1)) but rounds to 2/3 exactly at α = 2.
    let s_alpha = (alpha + 2.0) / (2.0 * (alpha + 1.0));
    let beta_alpha = 1.0 / (4.0 * (alpha + 1.0));
    Ok(RegularityParams { alpha, s_alpha, beta_alpha, b_alpha: beta_alpha + 0.25 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolReport {
    /// `[min, max]` of `p'(ξ)/ξ^α` over the sampled range.
    pub slope_bracket: (f64, f64),
    /// `[min, max]` of `p''(ξ)/ξ^{α−1}` over the sampled range.
    pub curvature_bracket: (f64, f64),
    /// Least-squares exponent of `ln(p'/ξ^α)` against `ln ξ`; zero for an exact power law.
    pub slope_drift: f64,
    pub curvature_drift: f64,
    /// `max |p(ξ) + p(−ξ)|` over the samples.
    pub oddness_residual: f64,
    pub pass: bool,
}

/// Largest drift exponent still accepted as "bounded above and below" on the sampled range.
pub const MAX_BRACKET_DRIFT: f64 = 0.25;

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Measures the growth brackets of Hypothesis-style symbol conditions on `[ξ_lo, ξ_hi]`.
///
/// Samples are log-spaced. The symbol passes when both brackets are strictly
/// positive, neither ratio drifts by more than [`MAX_BRACKET_DRIFT`] in
/// log–log slope, and the oddness residual is at rounding level.
pub fn validate_hypothesis(sym: &DispersionSymbol, xi_lo: f64, xi_hi: f64, samples: usize) -> Result<SymbolReport> {
    if samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 samples, got {samples}")));
    }
    if !(xi_lo >= sym.xi0() && xi_hi > xi_lo) {
        return Err(Error::InvalidParameter(format!(
            "range [{xi_lo}, {xi_hi}] must start at or above xi0 = {}",
            sym.xi0()
        )));
    }
    let alpha = sym.alpha();
    let ratio = (xi_hi / xi_lo).powf(1.0 / (samples - 1) as f64);
    let xs: Vec<f64> = (0..samples).map(|i| xi_lo * ratio.powi(i as i32)).collect();
    let mut slope = Vec::with_capacity(samples);
    let mut curv = Vec::with_capacity(samples);
    let mut odd: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in &xs {
        let d1 = sym.derivative(x) / x.powf(alpha);
        let d2 = sym.second_derivative(x) / x.powf(alpha - 1.0);
        let (p, q) = (sym.eval(x), sym.eval(-x));
        if !(d1.is_finite() && d2.is_finite() && p.is_finite() && q.is_finite()) {
            return Err(Error::NonFinite(format!("symbol derivatives at ξ = {x}")));
        }
        slope.push(d1);
        curv.push(d2);
        odd = odd.max((p + q).abs());
        scale = scale.max(p.abs());
    }
    let bracket = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let slope_bracket = bracket(&slope);
    let curvature_bracket = bracket(&curv);
    let positive = |b: (f64, f64)| b.0 > 1e-9 * b.1.abs().max(1e-300);
    let slope_ok = positive(slope_bracket);
    let curv_ok = positive(curvature_bracket);
    let slope_drift = if slope_ok { log_slope(&xs, &slope) } else { f64::NAN };
    let curvature_drift = if curv_ok { log_slope(&xs, &curv) } else { f64::NAN };
    let pass = slope_ok
        && curv_ok
        && slope_drift.abs() <= MAX_BRACKET_DRIFT
        && curvature_drift.abs() <= MAX_BRACKET_DRIFT
        && odd <= 1e-12 * scale.max(1.0);
    Ok(SymbolReport { slope_bracket, curvature_bracket, slope_drift, curvature_drift, oddness_residual: odd, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn builtins() -> Vec<DispersionSymbol> {
        vec![
            DispersionSymbol::pure(1.0).unwrap(),
            DispersionSymbol::pure(1.5).unwrap(),
            DispersionSymbol::pure(2.0).unwrap(),
            DispersionSymbol::ilw(),
            DispersionSymbol::smith(),
        ]
    }

    #[test]
    fn pure_cubic_value() {
        let p = make_symbol(SymbolKind::PureFractional, 2.0, 1.0).unwrap();
        assert_eq!(p.eval(2.0), 8.0);
    }

    #[test]
    fn smith_value() {
        let p = make_symbol(SymbolKind::Smith, 1.0, 1.0).unwrap();
        assert!((p.eval(1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ilw_is_odd_and_regular_at_zero() {
        let p = make_symbol(SymbolKind::Ilw, 1.0, 1.0).unwrap();
        let (a, b) = (p.eval(3.0), p.eval(-3.0));
        assert!((a - 9.0 / 3f64.tanh()).abs() < 1e-13);
        assert_eq!(a + b, 0.0);
        assert_eq!(p.eval(0.0), 0.0);
        // the series branch meets the closed form continuously
        let below = p.eval(0.0099999);
        let above = p.eval(0.0100001);
        assert!((below - above).abs() < 1e-6);
        assert!((p.eval(0.01) - 0.01 * 0.01 / 0.01f64.tanh()).abs() < 1e-16);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(make_symbol(SymbolKind::PureFractional, 2.5, 1.0).unwrap_err(), Error::AlphaOutOfRange(2.5));
        assert!(matches!(make_symbol(SymbolKind::Ilw, 1.5, 1.0), Err(Error::KindRequiresAlphaOne { .. })));
        assert!(matches!(make_symbol(SymbolKind::Smith, 2.0, 1.0), Err(Error::KindRequiresAlphaOne { .. })));
        assert!(make_symbol(SymbolKind::PureFractional, 1.0, 0.0).is_err());
        let even = DispersionSymbol::custom(1.0, 1.0, |x| x * x).unwrap();
        assert!(matches!(even.validate(), Err(Error::NotOdd { .. })));
        let odd = DispersionSymbol::custom(1.0, 1.0, |x| x * x.abs()).unwrap();
        odd.validate().unwrap();
    }

    #[test]
    fn regularity_values() {
        let r2 = regularity_params(2.0).unwrap();
        assert_eq!(r2.s_alpha, 2.0 / 3.0);
        assert!((r2.beta_alpha - 1.0 / 12.0).abs() < 1e-16);
        assert!((r2.b_alpha - 1.0 / 3.0).abs() < 1e-16);
        let r1 = regularity_params(1.0).unwrap();
        assert_eq!(r1.s_alpha, 0.75);
        assert_eq!(r1.beta_alpha, 0.125);
        assert_eq!(r1.b_alpha, 0.375);
        let rs = regularity_params(2f64.sqrt()).unwrap();
        assert!((rs.s_alpha - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(regularity_params(0.5).is_err());
    }

    #[test]
    fn regularity_invariants() {
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let a = 1.0 + i as f64 / 99.0;
            let r = regularity_params(a).unwrap();
            assert!((r.s_alpha - (1.0 - a / (2.0 * (a + 1.0)))).abs() < 1e-15);
            assert!((r.s_alpha - (0.5 + 2.0 * r.beta_alpha)).abs() < 1e-15);
            assert!(r.s_alpha < prev);
            prev = r.s_alpha;
        }
    }

    #[test]
    fn builtin_oddness_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for sym in builtins() {
            for _ in 0..1000 {
                let x: f64 = rng.gen_range(-1e3..1e3);
                let r = (sym.eval(x) + sym.eval(-x)).abs();
                assert!(r <= 1e-12, "{:?} at {x}: {r}", sym.kind());
            }
            sym.validate().unwrap();
        }
    }

    #[test]
    fn pure_fractional_bracket_is_flat() {
        let p = DispersionSymbol::pure(1.5).unwrap();
        let rep = validate_hypothesis(&p, 1.0, 100.0, 64).unwrap();
        assert!((rep.slope_bracket.0 - 2.5).abs() < 1e-9);
        assert!((rep.slope_bracket.1 - 2.5).abs() < 1e-9);
        assert!(rep.pass);
    }

    #[test]
    fn smith_bracket_on_large_frequencies() {
        // oracle: p'(ξ) = √(1+ξ²) + ξ²/√(1+ξ²), divided by ξ
        let exact = |x: f64| ((1.0 + x * x).sqrt() + x * x / (1.0 + x * x).sqrt()) / x;
        let rep = validate_hypothesis(&DispersionSymbol::smith(), 10.0, 100.0, 64).unwrap();
        let (lo, hi) = rep.slope_bracket;
        assert!(lo >= 2.0 - 1e-9 && hi <= 2.02, "{lo} {hi}");
        assert!((hi - exact(10.0)).abs() < 1e-8);
        assert!(rep.pass);
    }

    #[test]
    fn linear_custom_symbol_fails() {
        let p = DispersionSymbol::custom(1.0, 1.0, |x| x).unwrap();
        let rep = validate_hypothesis(&p, 1.0, 1000.0, 32).unwrap();
        assert!(!rep.pass);
        assert!(rep.slope_bracket.0 < 2e-3);
    }

    #[test]
    fn builtins_pass_from_xi0() {
        for sym in builtins() {
            let rep = validate_hypothesis(&sym, sym.xi0(), 1e3, 64).unwrap();
            assert!(rep.pass, "{:?}: {rep:?}", sym.kind());
        }
    }

    #[test]
    fn validation_rejects_bad_ranges_and_nonfinite() {
        let p = DispersionSymbol::pure(2.0).unwrap();
        assert!(validate_hypothesis(&p, 0.5, 10.0, 32).is_err());
        assert!(validate_hypothesis(&p, 1.0, 10.0, 8).is_err());
        let bad = DispersionSymbol::custom(1.0, 1.0, |x| if x > 50.0 { f64::NAN } else { x * x.abs() }).unwrap();
        assert!(matches!(validate_hypothesis(&bad, 1.0, 100.0, 32), Err(Error::NonFinite(_))));
    }

    #[test]
    fn threshold_of_pure_cubic() {
        let p = DispersionSymbol::pure(2.0).unwrap();
        // max_{[0,1]} 3ξ² = 3
        assert!((p.max_slope_below_xi0() - 3.0).abs() < 1e-9);
        assert!((p.resonance_threshold() - 3f64.sqrt()).abs() < 1e-9);
    }
}
