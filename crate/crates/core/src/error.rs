use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alpha = {0} is outside [1, 2]")]
    AlphaOutOfRange(f64),
    #[error("{kind} symbol requires alpha = 1, got {alpha}")]
    KindRequiresAlphaOne { kind: &'static str, alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol is not odd: max |p(ξ) + p(−ξ)| = {residual:e}")]
    NotOdd { residual: f64 },
    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGrid(usize),
    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
    #[error("dyadic index {n} exceeds the admissible maximum {max}")]
    DyadicOutOfRange { n: u64, max: u64 },
    #[error("{0} is neither zero nor a power of two")]
    NotDyadic(u64),
    #[error("envelope covers dyadic N up to {have}, grid needs {needed}")]
    EnvelopeTooShort { needed: u64, have: u64 },
    #[error("amplitude {amplitude} exceeds the series' radius guard")]
    AmplitudeTooLarge { amplitude: f64 },
    #[error("truncation order {needed} exceeds the stored {stored} coefficients")]
    TruncationExceeded { needed: usize, stored: usize },
    #[error("blow-up guard tripped at t = {time}: H^1 norm {norm:e} (last stable time {last_stable})")]
    BlowUp { time: f64, last_stable: f64, norm: f64 },
    #[error("p(k)/k = {value} < 0 at k = {k}: symbol misconfigured for the energy")]
    NegativeEnergyMultiplier { k: i64, value: f64 },
    #[error("extension requires 0 < T <= 1, got {0}")]
    ExtensionTimeTooLong(f64),
    #[error("modulation scale {l} exceeds the represented range (max {max})")]
    ModulationOutOfRange { l: u64, max: u64 },
    #[error("time window [{lo}, {hi}] does not cover the required [{need_lo}, {need_hi}]")]
    WindowTooShort { lo: f64, hi: f64, need_lo: f64, need_hi: f64 },
    #[error("frequency tuple does not sum to zero (sum = {0})")]
    NonZeroSum(i64),
    #[error("no admissible tuple for the scan hypothesis within |ξ| <= {xi_max}")]
    EmptyAdmissibleSet { xi_max: i64 },
    #[error("regularity s = {s} is below the floor {floor}")]
    RegularityTooLow { s: f64, floor: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
