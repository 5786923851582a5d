//! Resonance functions `Ω(ξ_1, …, ξ_n) = Σ p(ξ_j)` on zero-sum integer tuples
//! and lattice scans of the non-resonance lower bounds.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::par::{map_indexed, trial_rng, Execution};
use crate::symbols::DispersionSymbol;

/// Integer frequencies summing to zero, at least three of them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyTuple(Vec<i64>);

impl FrequencyTuple {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "a frequency tuple needs at least 3 entries, got {}",
                entries.len()
            )));
        }
        let sum: i64 = entries.iter().sum();
        if sum != 0 {
            return Err(Error::NonZeroSum(sum));
        }
        Ok(FrequencyTuple(entries))
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn negated(&self) -> FrequencyTuple {
        FrequencyTuple(self.0.iter().map(|x| -x).collect())
    }
}

/// `Σ_j p(ξ_j)`.
///
/// Terms are grouped by `|ξ|` and summed in increasing `|ξ|`, so the result is
/// exactly invariant under permutations and exactly odd under negation.
pub fn omega(sym: &DispersionSymbol, t: &FrequencyTuple) -> f64 {
    omega_slice(sym, t.entries())
}

fn omega_slice(sym: &DispersionSymbol, xs: &[i64]) -> f64 {
    let mut groups: Vec<(u64, i64)> = Vec::with_capacity(xs.len());
    for &x in xs {
        let a = x.unsigned_abs();
        let s = x.signum();
        match groups.iter_mut().find(|(m, _)| *m == a) {
            Some(g) => g.1 += s,
            None => groups.push((a, s)),
        }
    }
    groups.sort_unstable_by_key(|g| g.0);
    groups.iter().filter(|g| g.1 != 0).map(|&(a, c)| c as f64 * sym.eval(a as f64)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    /// `|Ω| ≳ |ξ₃| |ξ₁|^α` under `|ξ₁| ∼ |ξ₂| ≳ |ξ₃| ≫ k max_{j≥4}|ξ_j|`.
    Res1,
    /// `|Ω| ≳ |ξ₃+ξ₄| |ξ₁|^α` under `|ξ₁| ∼ |ξ₂| ≫ |ξ₃| ≳ |ξ₄|`, `|ξ₃+ξ₄| ≫ k max_{j≥5}|ξ_j|`.
    Res2,
}

impl ScanMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "res1" => Ok(ScanMode::Res1),
            "res2" => Ok(ScanMode::Res2),
            other => Err(Error::Parse(format!("unknown resonance mode `{other}` (res1 | res2)"))),
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::Res1 => "res1",
            ScanMode::Res2 => "res2",
        })
    }
}

/// Quantified reading of `∼` (ratio `≤ λ_sim`) and `≫` (ratio `≥ λ_gg`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanHypothesis {
    pub lambda_sim: f64,
    pub lambda_gg: f64,
    pub xi_max: i64,
    pub k: usize,
    /// Sample count for `k ≥ 3`.
    pub samples: usize,
    pub seed: u64,
}

/// Largest `xi_max` accepted by the exhaustive scans.
pub const EXHAUSTIVE_XI_MAX: i64 = 4096;

impl ScanHypothesis {
    pub fn new(k: usize, xi_max: i64) -> Self {
        ScanHypothesis { lambda_sim: 2.0, lambda_gg: 8.0, xi_max, k, samples: 1_000_000, seed: 0 }
    }

    pub fn validate(&self, mode: ScanMode) -> Result<()> {
        if !(self.lambda_sim >= 1.0 && self.lambda_gg > self.lambda_sim && self.lambda_gg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need λ_gg > λ_sim ≥ 1, got λ_sim={} λ_gg={}",
                self.lambda_sim, self.lambda_gg
            )));
        }
        if self.k == 0 || (mode == ScanMode::Res2 && self.k < 2) {
            return Err(Error::InvalidParameter(format!("k = {} is not allowed for {mode}", self.k)));
        }
        if self.xi_max < 1 {
            return Err(Error::InvalidParameter("xi_max must be positive".into()));
        }
        if self.k <= 2 && self.xi_max > EXHAUSTIVE_XI_MAX {
            return Err(Error::InvalidParameter(format!(
                "exhaustive scans are limited to xi_max ≤ {EXHAUSTIVE_XI_MAX}"
            )));
        }
        if self.k >= 3 && self.samples == 0 {
            return Err(Error::InvalidParameter("sampled scans need samples ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub mode: ScanMode,
    pub hypothesis: ScanHypothesis,
    pub min_ratio: f64,
    pub witness: Vec<i64>,
    /// Admissible tuples examined (after the `ξ₁ > 0` reduction).
    pub admissible: u64,
    pub exhaustive: bool,
}

#[derive(Clone, Debug)]
struct Best {
    ratio: f64,
    witness: Vec<i64>,
    count: u64,
}

impl Best {
    fn empty() -> Self {
        Best { ratio: f64::INFINITY, witness: Vec::new(), count: 0 }
    }

    fn offer(&mut self, ratio: f64, tuple: &[i64]) {
        self.count += 1;
        let better = match ratio.partial_cmp(&self.ratio) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => self.witness.is_empty() || tuple < self.witness.as_slice(),
            _ => false,
        };
        if better {
            self.ratio = ratio;
            self.witness = tuple.to_vec();
        }
    }

    fn merge(mut self, other: Best) -> Best {
        let count = self.count + other.count;
        if !other.witness.is_empty() {
            self.count = 0;
            self.offer(other.ratio, &other.witness);
        }
        self.count = count;
        self
    }
}

struct Ctx<'a> {
    sym: &'a DispersionSymbol,
    hyp: ScanHypothesis,
    mode: ScanMode,
    alpha: f64,
}

impl Ctx<'_> {
    fn sim(&self, a: i64, b: i64) -> bool {
        let (a, b) = (a.abs() as f64, b.abs() as f64);
        a > 0.0 && b > 0.0 && a.max(b) <= self.hyp.lambda_sim * a.min(b)
    }

    /// `a ≳ b`.
    fn gtrsim(&self, a: i64, b: i64) -> bool {
        b.abs() as f64 <= self.hyp.lambda_sim * a.abs() as f64
    }

    /// `a ≫ c·b`.
    fn gg(&self, a: f64, b: f64) -> bool {
        a >= self.hyp.lambda_gg * b
    }

    /// Full hypothesis check and ratio for a tuple in role order; `None` when inadmissible.
    fn ratio(&self, t: &[i64], threshold: f64) -> Option<f64> {
        let k = self.hyp.k as f64;
        if (t[0].abs() as f64) < threshold || !self.sim(t[0], t[1]) {
            return None;
        }
        let denom = match self.mode {
            ScanMode::Res1 => {
                if t[2] == 0 || !self.gtrsim(t[1], t[2]) {
                    return None;
                }
                if t.len() > 3 {
                    let tail = t[3..].iter().map(|x| x.abs()).max().unwrap() as f64;
                    if !self.gg(t[2].abs() as f64, k * tail) {
                        return None;
                    }
                }
                t[2].abs() as f64
            }
            ScanMode::Res2 => {
                let s34 = (t[2] + t[3]).abs();
                if s34 == 0 || !self.gg(t[1].abs() as f64, t[2].abs() as f64) || !self.gtrsim(t[2], t[3]) {
                    return None;
                }
                if t.len() > 4 {
                    let tail = t[4..].iter().map(|x| x.abs()).max().unwrap() as f64;
                    if !self.gg(s34 as f64, k * tail) {
                        return None;
                    }
                }
                s34 as f64
            }
        };
        let om = omega_slice(self.sym, t).abs();
        Some(om / (denom * (t[0].abs() as f64).powf(self.alpha)))
    }
}

/// Minimum of `|Ω|/(|ξ₃||ξ₁|^α)` (Res1) or `|Ω|/(|ξ₃+ξ₄||ξ₁|^α)` (Res2) over admissible
/// tuples with `|ξ_j| ≤ xi_max` and `|ξ₁| ≥ λ_gg · (max_{[0,ξ₀]}|p′|)^{1/α}`.
///
/// `k ≤ 2` is enumerated exhaustively over `ξ₁ > 0` (the hypotheses and the ratio
/// are invariant under global negation); `k ≥ 3` draws `samples` random tuples.
/// Ties are broken by the lexicographically smallest witness.
pub fn scan_resonance(
    sym: &DispersionSymbol,
    hyp: ScanHypothesis,
    mode: ScanMode,
    exec: Execution,
) -> Result<ScanReport> {
    hyp.validate(mode)?;
    let ctx = Ctx { sym, hyp, mode, alpha: sym.alpha() };
    let threshold = hyp.lambda_gg * sym.resonance_threshold();
    let x = hyp.xi_max;
    let lo = (threshold.ceil() as i64).max(1);
    if lo > x {
        return Err(Error::EmptyAdmissibleSet { xi_max: x });
    }
    let exhaustive = hyp.k <= 2;
    let best = if exhaustive {
        let per = map_indexed((x - lo + 1) as usize, exec, |i| exhaustive_row(&ctx, lo + i as i64, threshold));
        per.into_iter().fold(Best::empty(), Best::merge)
    } else {
        const BLOCK: usize = 4096;
        let blocks = hyp.samples.div_ceil(BLOCK);
        let per = map_indexed(blocks, exec, |b| {
            let n = BLOCK.min(hyp.samples - b * BLOCK);
            sampled_block(&ctx, lo, threshold, n, b as u64)
        });
        per.into_iter().fold(Best::empty(), Best::merge)
    };
    if best.witness.is_empty() {
        return Err(Error::EmptyAdmissibleSet { xi_max: x });
    }
    Ok(ScanReport {
        mode,
        hypothesis: hyp,
        min_ratio: best.ratio,
        witness: best.witness,
        admissible: best.count,
        exhaustive,
    })
}

fn xi2_range(ctx: &Ctx<'_>, xi1: i64) -> (i64, i64) {
    let l = ctx.hyp.lambda_sim;
    let lo = ((xi1 as f64 / l).ceil() as i64).max(1);
    let hi = ((xi1 as f64 * l).floor() as i64).min(ctx.hyp.xi_max);
    (lo, hi)
}

fn exhaustive_row(ctx: &Ctx<'_>, xi1: i64, threshold: f64) -> Best {
    let x = ctx.hyp.xi_max;
    let mut best = Best::empty();
    let (lo, hi) = xi2_range(ctx, xi1);
    let mut t = vec![0i64; ctx.hyp.k + 2];
    t[0] = xi1;
    for a2 in lo..=hi {
        for xi2 in [-a2, a2] {
            t[1] = xi2;
            if ctx.hyp.k == 1 {
                t[2] = -xi1 - xi2;
                if t[2].abs() <= x {
                    if let Some(r) = ctx.ratio(&t, threshold) {
                        best.offer(r, &t);
                    }
                }
                continue;
            }
            let r3 = match ctx.mode {
                ScanMode::Res1 => ((ctx.hyp.lambda_sim * a2 as f64).floor() as i64).min(x),
                ScanMode::Res2 => ((a2 as f64 / ctx.hyp.lambda_gg).floor() as i64).min(x),
            };
            for xi3 in -r3..=r3 {
                t[2] = xi3;
                t[3] = -xi1 - xi2 - xi3;
                if t[3].abs() > x {
                    continue;
                }
                if let Some(r) = ctx.ratio(&t, threshold) {
                    best.offer(r, &t);
                }
            }
        }
    }
    best
}

fn sampled_block(ctx: &Ctx<'_>, lo: i64, threshold: f64, n: usize, block: u64) -> Best {
    let mut rng = trial_rng(ctx.hyp.seed, block);
    let x = ctx.hyp.xi_max;
    let k = ctx.hyp.k;
    let kf = k as f64;
    let mut best = Best::empty();
    let mut t = vec![0i64; k + 2];
    for _ in 0..n {
        let xi1 = rng.gen_range(lo..=x);
        let (l2, h2) = xi2_range(ctx, xi1);
        if l2 > h2 {
            continue;
        }
        let sgn = |r: &mut rand_chacha::ChaCha8Rng| if r.gen::<bool>() { 1 } else { -1 };
        t[0] = xi1;
        t[1] = sgn(&mut rng) * rng.gen_range(l2..=h2);
        let head = match ctx.mode {
            ScanMode::Res1 => {
                let r3 = ((ctx.hyp.lambda_sim * t[1].abs() as f64).floor() as i64).min(x);
                t[2] = rng.gen_range(-r3..=r3);
                3
            }
            ScanMode::Res2 => {
                let r3 = ((t[1].abs() as f64 / ctx.hyp.lambda_gg).floor() as i64).min(x);
                t[2] = rng.gen_range(-r3..=r3);
                let r4 = ((ctx.hyp.lambda_sim * t[2].abs() as f64).floor() as i64).min(x);
                t[3] = rng.gen_range(-r4..=r4);
                4
            }
        };
        let anchor = match ctx.mode {
            ScanMode::Res1 => t[2].abs(),
            ScanMode::Res2 => (t[2] + t[3]).abs(),
        } as f64;
        let rt = (anchor / (ctx.hyp.lambda_gg * kf)).floor() as i64;
        for j in head..k + 1 {
            t[j] = rng.gen_range(-rt..=rt);
        }
        t[k + 1] = -t[..k + 1].iter().sum::<i64>();
        if t[k + 1].abs() > x {
            continue;
        }
        if let Some(r) = ctx.ratio(&t, threshold) {
            best.offer(r, &t);
        }
    }
    best
}

/// Lattice count against `#{x ∈ J ∩ ℤ : g(x) ∈ I} ≤ |I| / inf_J |g′| + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountReport {
    pub count: u64,
    /// Infinite when `inf_J |g′| = 0`.
    pub bound: f64,
    pub pass: bool,
}

/// Samples used for `inf_J |g′|` in addition to the lattice points.
pub const DERIVATIVE_SAMPLES: usize = 10_001;

pub fn counting_check<G, D>(g: G, dg: D, j: (i64, i64), i: (f64, f64)) -> Result<CountReport>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if j.0 > j.1 || !(i.0 <= i.1) {
        return Err(Error::InvalidParameter("intervals must satisfy lo ≤ hi".into()));
    }
    let count = (j.0..=j.1)
        .filter(|&x| {
            let v = g(x as f64);
            v >= i.0 && v <= i.1
        })
        .count() as u64;
    let (a, b) = (j.0 as f64, j.1 as f64);
    let mut inf = f64::INFINITY;
    for s in 0..DERIVATIVE_SAMPLES {
        let x = if DERIVATIVE_SAMPLES > 1 { a + (b - a) * s as f64 / (DERIVATIVE_SAMPLES - 1) as f64 } else { a };
        let d = dg(x).abs();
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("g′({x})")));
        }
        inf = inf.min(d);
    }
    let bound = if inf == 0.0 { f64::INFINITY } else { (i.1 - i.0) / inf + 1.0 };
    Ok(CountReport { count, bound, pass: count as f64 <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cubic() -> DispersionSymbol {
        DispersionSymbol::pure(2.0).unwrap()
    }

    #[test]
    fn tuple_validation() {
        assert!(FrequencyTuple::new(vec![1, -1]).is_err());
        assert_eq!(FrequencyTuple::new(vec![1, 2, 3]), Err(Error::NonZeroSum(6)));
        assert!(FrequencyTuple::new(vec![0, 0, 0]).is_ok());
    }

    #[test]
    fn omega_examples() {
        let t = |v: Vec<i64>| FrequencyTuple::new(v).unwrap();
        assert_eq!(omega(&cubic(), &t(vec![0, 0, 0])), 0.0);
        assert_eq!(omega(&cubic(), &t(vec![4, -3, -1])), 36.0);
        assert_eq!(omega(&DispersionSymbol::pure(1.0).unwrap(), &t(vec![3, -2, -1])), 4.0);
    }

    #[test]
    fn omega_symmetries_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for sym in [DispersionSymbol::pure(1.3).unwrap(), DispersionSymbol::ilw(), DispersionSymbol::smith()] {
            for _ in 0..1000 {
                let n = rng.gen_range(3..7);
                let mut v: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(-500..=500)).collect();
                v.push(-v.iter().sum::<i64>());
                let t = FrequencyTuple::new(v.clone()).unwrap();
                let w = omega(&sym, &t);
                assert_eq!(omega(&sym, &t.negated()), -w);
                v.reverse();
                v.swap(0, 1);
                assert_eq!(omega(&sym, &FrequencyTuple::new(v).unwrap()), w);
            }
        }
    }

    #[test]
    fn cubic_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (a, b) = (rng.gen_range(-1000i64..=1000), rng.gen_range(-1000i64..=1000));
            let c = -a - b;
            let w = omega(&cubic(), &FrequencyTuple::new(vec![a, b, c]).unwrap());
            assert_eq!(w, 3.0 * (a * b * c) as f64);
            let d = rng.gen_range(-1000i64..=1000);
            let e = -a - b - d;
            let w4 = omega(&cubic(), &FrequencyTuple::new(vec![a, b, d, e]).unwrap());
            assert_eq!(w4, 3.0 * ((a + b) * (a + d) * (a + e)) as f64);
        }
    }

    #[test]
    fn res1_cubic_oracle() {
        let hyp = ScanHypothesis::new(1, 64);
        let r = scan_resonance(&cubic(), hyp, ScanMode::Res1, Execution::default()).unwrap();
        assert!((r.min_ratio - 1.5).abs() < 1e-12);
        assert_eq!(2 * r.witness[1].abs(), r.witness[0].abs());
        assert!(r.exhaustive);
    }

    #[test]
    fn execution_modes_agree() {
        let hyp = ScanHypothesis::new(2, 40);
        let sym = DispersionSymbol::pure(1.0).unwrap();
        for mode in [ScanMode::Res1, ScanMode::Res2] {
            let a = scan_resonance(&sym, hyp, mode, Execution::Sequential).unwrap();
            let b = scan_resonance(&sym, hyp, mode, Execution::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn stricter_gg_never_lowers_minimum() {
        let sym = DispersionSymbol::smith();
        let mut hyp = ScanHypothesis::new(2, 64);
        let mut last = 0.0;
        for gg in [4.0, 6.0, 8.0] {
            hyp.lambda_gg = gg;
            let r = scan_resonance(&sym, hyp, ScanMode::Res1, Execution::default()).unwrap();
            assert!(r.min_ratio >= last);
            last = r.min_ratio;
        }
    }

    #[test]
    fn hypothesis_errors() {
        let sym = cubic();
        let mut h = ScanHypothesis::new(1, 64);
        h.lambda_gg = 1.5;
        assert!(scan_resonance(&sym, h, ScanMode::Res1, Execution::Sequential).is_err());
        assert!(scan_resonance(&sym, ScanHypothesis::new(1, 64), ScanMode::Res2, Execution::Sequential).is_err());
        assert!(matches!(
            scan_resonance(&sym, ScanHypothesis::new(1, 8), ScanMode::Res1, Execution::Sequential),
            Err(Error::EmptyAdmissibleSet { .. })
        ));
        assert!(scan_resonance(&sym, ScanHypothesis::new(2, 5000), ScanMode::Res1, Execution::Sequential).is_err());
    }

    #[test]
    fn sampled_scan_is_reproducible_and_admissible() {
        let mut h = ScanHypothesis::new(3, 256);
        h.samples = 20_000;
        h.seed = 9;
        let sym = DispersionSymbol::pure(1.5).unwrap();
        let a = scan_resonance(&sym, h, ScanMode::Res1, Execution::Parallel).unwrap();
        let b = scan_resonance(&sym, h, ScanMode::Res1, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(!a.exhaustive && a.min_ratio > 0.0);
        assert_eq!(a.witness.iter().sum::<i64>(), 0);
        assert_eq!(a.witness.len(), 5);
    }

    #[test]
    fn counting_examples() {
        let r = counting_check(|x| x * x, |x| 2.0 * x, (1, 10), (1.0, 25.0)).unwrap();
        assert_eq!((r.count, r.bound, r.pass), (5, 13.0, true));
        let r = counting_check(|x| x, |_| 1.0, (0, 9), (0.0, 9.0)).unwrap();
        assert_eq!((r.count, r.bound, r.pass), (10, 10.0, true));
        let r = counting_check(|x| x * x, |x| 2.0 * x, (0, 10), (0.0, 1.0)).unwrap();
        assert!(r.bound.is_infinite() && r.pass);
    }

    #[test]
    fn res2_cubic_scale_robust() {
        let sym = DispersionSymbol::pure(2.0).unwrap();
        let a = scan_resonance(&sym, ScanHypothesis::new(2, 64), ScanMode::Res2, Execution::default()).unwrap();
        let b = scan_resonance(&sym, ScanHypothesis::new(2, 128), ScanMode::Res2, Execution::default()).unwrap();
        assert!(a.min_ratio > 0.0 && (a.min_ratio - b.min_ratio).abs() < 0.1 * a.min_ratio);
    }
}
