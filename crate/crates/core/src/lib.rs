//! Pseudospectral laboratory for periodic dispersive equations
//!
//! ```text
//! ∂_t u + L_{α+1} u + ∂_x f(u) = 0,   x ∈ 𝕋 = ℝ/2πℤ,
//! ```
//!
//! where `L_{α+1}` is the Fourier multiplier `−i p(ξ)` for an odd dispersion
//! symbol `p` with `p'(ξ) ∼ ξ^α`, `α ∈ [1, 2]`, and `f` is an entire function.
//!
//! The crate is organised by subsystem:
//!
//! * [`symbols`] – dispersion symbols and the regularity exponents `s(α)`, `β(α)`, `b(α)`.
//! * [`spectral`] – torus grid, real fields, Littlewood–Paley cutoffs, Sobolev norms.
//! * [`nonlinearity`] – entire-series nonlinearities, the potential `F`, the majorant `G[f]`.
//! * [`evolution`] – ETDRK4 / Strang integrators and the conserved functionals.
//! * [`bourgain`] – extension operator, modulation projectors, `X^{s,b}` / `Z^s` norms.
//! * [`resonance`] – resonance functions and exhaustive non-resonance scans.
//! * [`envelope`] – dyadic frequency envelopes.
//! * [`probes`] – empirical linear, improved and bilinear Strichartz estimates.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`par`].

pub mod bourgain;
pub mod envelope;
pub mod error;
pub mod evolution;
pub mod nonlinearity;
pub mod par;
pub mod probes;
pub mod resonance;
pub mod spectral;
pub mod symbols;
pub mod trajectory;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits, the fixed format used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}
