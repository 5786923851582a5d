//! Dyadic frequency envelopes `ω_N`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spectral::{block_norms, dyadic_levels_up_to, Field};

/// Positive weights `ω_N` for `N ∈ {0, 1, 2, 4, …, N_max}` with
/// `ω_N ≤ ω_{2N} ≤ δ ω_N` for every stored `N ≥ 1`.
///
/// Index 0 holds `ω_0`, index `i ≥ 1` holds `ω_{2^{i−1}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicSequence {
    values: Vec<f64>,
    delta: f64,
}

impl DyadicSequence {
    /// Validates the values and records the smallest admissible `δ` (the largest ratio).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("an envelope needs at least ω_0 and ω_1".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("envelope values must be positive and finite, got {v}")));
        }
        let mut delta: f64 = 1.0;
        for i in 1..values.len() - 1 {
            let (a, b) = (values[i], values[i + 1]);
            if b < a {
                return Err(Error::InvalidParameter(format!("envelope decreases at N={}: {a} > {b}", 1u64 << (i - 1))));
            }
            delta = delta.max(b / a);
        }
        Ok(DyadicSequence { values, delta })
    }

    /// Like [`new`](Self::new) but with a declared `δ`, checked against every ratio.
    pub fn with_delta(values: Vec<f64>, delta: f64) -> Result<Self> {
        let mut s = Self::new(values)?;
        if !(delta >= 1.0) {
            return Err(Error::InvalidParameter(format!("δ must be ≥ 1, got {delta}")));
        }
        for i in 1..s.values.len() - 1 {
            if s.values[i + 1] > delta * s.values[i] {
                return Err(Error::InvalidParameter(format!("ratio at N={} exceeds δ={delta}", 1u64 << (i - 1))));
            }
        }
        s.delta = delta;
        Ok(s)
    }

    /// `ω_N = f(N)` for `N ∈ {0, 1, …, max_n}`.
    pub fn from_fn<F: Fn(u64) -> f64>(max_n: u64, f: F) -> Result<Self> {
        if max_n == 0 || !max_n.is_power_of_two() {
            return Err(Error::NotDyadic(max_n));
        }
        Self::new(dyadic_levels_up_to(max_n).into_iter().map(f).collect())
    }

    pub fn constant(max_n: u64, c: f64) -> Result<Self> {
        Self::from_fn(max_n, |_| c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest stored dyadic index.
    pub fn max_n(&self) -> u64 {
        1u64 << (self.values.len() - 2)
    }

    pub fn levels(&self) -> Vec<u64> {
        dyadic_levels_up_to(self.max_n())
    }

    fn slot(n: u64) -> usize {
        if n == 0 {
            0
        } else {
            n.trailing_zeros() as usize + 1
        }
    }

    pub fn get(&self, n: u64) -> Option<f64> {
        if n != 0 && !n.is_power_of_two() {
            return None;
        }
        self.values.get(Self::slot(n)).copied()
    }

    /// `ω_N`. Panics when `N` is not stored; callers check coverage first.
    pub fn omega(&self, n: u64) -> f64 {
        self.get(n).unwrap_or_else(|| panic!("ω_{n} not stored (max {})", self.max_n()))
    }

    /// Caps the growth ratio at `δ′`:
    /// `ω̃_0 = ω_0`, `ω̃_1 = ω_1`, `ω̃_{2N} = min(ω_{2N}/ω_N, δ′) ω̃_N`.
    ///
    /// The result lies below the input pointwise and satisfies
    /// `ω̃_N ≤ ω̃_{2N} ≤ δ′ ω̃_N` exactly in floating point. For `δ′ ≥ δ` it is the input.
    pub fn tame(&self, delta_prime: f64) -> Result<DyadicSequence> {
        if !(delta_prime > 1.0) || !delta_prime.is_finite() {
            return Err(Error::InvalidParameter(format!("δ′ must be a finite number > 1, got {delta_prime}")));
        }
        let mut out = self.values.clone();
        for i in 1..out.len() - 1 {
            let (w, w2, t) = (self.values[i], self.values[i + 1], out[i]);
            // products are ordered so that t == w reproduces w2 bit-for-bit
            let mut r = (w2 * (t / w)).min(delta_prime * t);
            r = r.max(t).min(w2);
            out[i + 1] = r;
        }
        Ok(DyadicSequence { values: out, delta: delta_prime.min(self.delta) })
    }

    /// `N,omega` rows with header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,omega\n");
        for (n, w) in self.levels().into_iter().zip(&self.values) {
            writeln!(s, "{},{}", n, crate::fmt_f64(*w)).unwrap();
        }
        s
    }
}

/// Envelope adapted to a datum, with `δ = 2^ε`.
///
/// With `a_K = (1∨K)^s ‖P_K u0‖`, tail energies `T_N = Σ_{K ≥ N} a_K²` and
/// `h_N = (‖u0‖²_{H^s} / T_N)^{1/4}` (infinite once the tail is empty):
/// `ω_0 = ω_1 = 1`, `ω_{2N} = min(2^ε ω_N, h_{2N})`.
/// The result is nondecreasing, grows like `N^ε` past the datum's band, and
/// `‖u0‖_{H^s_ω} ≤ √2 ‖u0‖_{H^s}`.
pub fn build_from_datum(u0: &Field, s: f64, growth: f64) -> Result<DyadicSequence> {
    build_from_data(std::slice::from_ref(u0), s, growth)
}

/// Multi-datum variant: the block profile is the per-block maximum over all data,
/// so every datum satisfies `‖u‖_{H^s_ω} ≤ √2 (Σ_K max_j a_{K,j}²)^{1/2}`.
pub fn build_from_data(data: &[Field], s: f64, growth: f64) -> Result<DyadicSequence> {
    if !(growth > 0.0 && growth < 1.0) {
        return Err(Error::InvalidParameter(format!("growth ε must lie in (0,1), got {growth}")));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("Sobolev index must be finite, got {s}")));
    }
    let first = data.first().ok_or_else(|| Error::InvalidParameter("no data".into()))?;
    let grid = first.grid();
    let mut profile = vec![0.0f64; grid.dyadic_levels().len()];
    for u in data {
        if u.grid() != grid {
            return Err(Error::GridMismatch(grid.m(), u.grid().m()));
        }
        for (slot, (n, b)) in profile.iter_mut().zip(block_norms(u)) {
            let a = (n.max(1) as f64).powf(s) * b;
            *slot = slot.max(a * a);
        }
    }
    let total: f64 = profile.iter().sum();
    let mut tails = vec![0.0; profile.len() + 1];
    for i in (0..profile.len()).rev() {
        tails[i] = tails[i + 1] + profile[i];
    }
    let ratio = 2f64.powf(growth);
    let mut values = vec![1.0, 1.0];
    for i in 2..profile.len() {
        let h = if tails[i] > 0.0 { (total / tails[i]).powf(0.25) } else { f64::INFINITY };
        let prev = values[i - 1];
        values.push((ratio * prev).min(h).max(prev));
    }
    DyadicSequence::with_delta(values, ratio)
}
