//! `key = value` run configuration. See `CONFIG.md` for the schema.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use dispersive_lab::evolution::{Dealias, Scheme};
use dispersive_lab::resonance::ScanMode;
use dispersive_lab::symbols::SymbolKind;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    Conserve,
    Resonance,
    Strichartz,
    Envelope,
    BourgainNorms,
    ThresholdTable,
    GlobalDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Solve,
        Experiment::Conserve,
        Experiment::Resonance,
        Experiment::Strichartz,
        Experiment::Envelope,
        Experiment::BourgainNorms,
        Experiment::ThresholdTable,
        Experiment::GlobalDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Conserve => "conserve",
            Experiment::Resonance => "resonance",
            Experiment::Strichartz => "strichartz",
            Experiment::Envelope => "envelope",
            Experiment::BourgainNorms => "bourgain_norms",
            Experiment::ThresholdTable => "threshold_table",
            Experiment::GlobalDemo => "global_demo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s.trim()).ok_or_else(|| CliError::UnknownExperiment {
            name: s.to_string(),
            expected: Self::ALL.map(|e| e.name()).join(", "),
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `Σ a_k cos(kx)`.
    Cosines(Vec<(i64, f64)>),
    /// Random real field on `1 ≤ |ξ| ≤ kmax` with `|û| ∝ ⟨ξ⟩^{-decay}`, drawn from the run seed.
    Random { kmax: i64, decay: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub symbol_kind: SymbolKind,
    pub alpha: f64,
    pub xi0: f64,
    pub f: String,
    pub grid_m: usize,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub dealias: Dealias,
    pub initial: InitialData,
    /// Rescale the datum to this `H¹` norm.
    pub h1_norm: Option<f64>,
    pub scan_mode: ScanMode,
    pub scan_k: usize,
    pub xi_max: i64,
    pub lambda_sim: f64,
    pub lambda_gg: f64,
    pub scan_samples: usize,
    pub probe_trials: usize,
    pub constant_trials: usize,
    pub n1: u64,
    pub n2: u64,
    pub perturbation: f64,
    /// `None` means `s(α)`.
    pub envelope_s: Option<f64>,
    pub growth: f64,
    pub delta_prime: f64,
    pub bourgain_s: Option<f64>,
    pub half_window: f64,
    pub refine: usize,
    pub use_envelope: bool,
}

/// Every accepted key with its default. `experiment` has no default.
pub const KEYS: &[(&str, &str)] = &[
    ("experiment", ""),
    ("seed", "0"),
    ("output_dir", "out"),
    ("symbol.kind", "pure"),
    ("symbol.alpha", "2"),
    ("symbol.xi0", "1"),
    ("f", "poly:0,0,1"),
    ("grid.m", "256"),
    ("time.dt", "0.001"),
    ("time.t_final", "1"),
    ("time.record_every", "100"),
    ("solver.scheme", "etdrk4"),
    ("solver.dealias", "two_thirds"),
    ("initial.kind", "cosines"),
    ("initial.modes", "1:1,2:0.5"),
    ("initial.kmax", "8"),
    ("initial.decay", "1"),
    ("initial.h1_norm", "none"),
    ("resonance.mode", "res1"),
    ("resonance.k", "1"),
    ("resonance.xi_max", "64"),
    ("resonance.lambda_sim", "2"),
    ("resonance.lambda_gg", "8"),
    ("resonance.samples", "1000000"),
    ("strichartz.trials", "8"),
    ("strichartz.constant_trials", "64"),
    ("strichartz.n1", "4"),
    ("strichartz.n2", "16"),
    ("strichartz.perturbation", "0.01"),
    ("envelope.s", "auto"),
    ("envelope.growth", "0.25"),
    ("envelope.delta_prime", "2"),
    ("bourgain.s", "auto"),
    ("bourgain.half_window", "4"),
    ("bourgain.refine", "1"),
    ("bourgain.envelope", "false"),
];

/// Nearest known key by edit distance, compared on the full key and on its last segment.
pub fn suggest(key: &str) -> Option<String> {
    KEYS.iter()
        .map(|(k, _)| {
            let leaf = k.rsplit('.').next().unwrap_or(k);
            let d = strsim::levenshtein(key, k).min(strsim::levenshtein(key, leaf));
            (d, *k)
        })
        .min()
        .filter(|(d, _)| *d <= 3)
        .map(|(_, k)| k.to_string())
}

/// Reads `key = value` lines. `#` starts a comment; values may be double-quoted.
pub fn parse_pairs(text: &str, path: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            path: path.to_string(),
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = k.trim().to_string();
        let value = unquote(v.trim());
        if key.is_empty() {
            return Err(CliError::Syntax { path: path.to_string(), line: i + 1, message: "empty key".into() });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            let suggestion = suggest(&key);
            return Err(CliError::UnknownKey { key, suggestion });
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(CliError::DuplicateKey(key));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> String {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v).to_string()
}

struct Lookup<'a>(&'a BTreeMap<String, String>);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).expect("known key"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key);
        v.trim().parse::<T>().map_err(|e| invalid(key, format!("`{v}`: {e}")))
    }

    fn optional_f64(&self, key: &str, none: &str) -> Result<Option<f64>> {
        if self.raw(key).trim() == none {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    fn with<T>(&self, key: &str, f: impl FnOnce(&str) -> dispersive_lab::Result<T>) -> Result<T> {
        f(self.raw(key)).map_err(|e| invalid(key, e.to_string()))
    }
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::InvalidValue { key: key.to_string(), message: message.into() }
}

fn parse_modes(s: &str) -> std::result::Result<Vec<(i64, f64)>, String> {
    s.split(',')
        .map(|t| {
            let (k, a) = t.split_once(':').ok_or_else(|| format!("expected `k:amplitude`, got `{t}`"))?;
            let k: i64 = k.trim().parse().map_err(|e| format!("mode `{k}`: {e}"))?;
            let a: f64 = a.trim().parse().map_err(|e| format!("amplitude `{a}`: {e}"))?;
            if k < 0 {
                return Err(format!("mode {k} must be nonnegative"));
            }
            Ok((k, a))
        })
        .collect()
}

impl RunConfig {
    /// Builds a config from explicit pairs, filling documented defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(key) = map.keys().find(|k| !KEYS.iter().any(|(n, _)| n == k)) {
            return Err(CliError::UnknownKey { key: key.clone(), suggestion: suggest(key) });
        }
        let l = Lookup(map);
        let experiment = match map.get("experiment") {
            Some(e) => Experiment::parse(e)?,
            None => return Err(invalid("experiment", "missing")),
        };
        let initial = match l.raw("initial.kind").trim() {
            "cosines" => {
                InitialData::Cosines(parse_modes(l.raw("initial.modes")).map_err(|e| invalid("initial.modes", e))?)
            }
            "random" => InitialData::Random { kmax: l.parse("initial.kmax")?, decay: l.parse("initial.decay")? },
            other => return Err(invalid("initial.kind", format!("`{other}` (expected cosines or random)"))),
        };
        let bool_key = |key: &str| -> Result<bool> {
            match l.raw(key).trim() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(invalid(key, format!("`{other}` (expected true or false)"))),
            }
        };
        let cfg = RunConfig {
            experiment,
            seed: l.parse("seed")?,
            output_dir: PathBuf::from(l.raw("output_dir")),
            symbol_kind: l.with("symbol.kind", SymbolKind::parse)?,
            alpha: l.parse("symbol.alpha")?,
            xi0: l.parse("symbol.xi0")?,
            f: l.raw("f").trim().to_string(),
            grid_m: l.parse("grid.m")?,
            dt: l.parse("time.dt")?,
            t_final: l.parse("time.t_final")?,
            record_every: l.parse("time.record_every")?,
            scheme: l.with("solver.scheme", Scheme::parse)?,
            dealias: l.with("solver.dealias", Dealias::parse)?,
            initial,
            h1_norm: l.optional_f64("initial.h1_norm", "none")?,
            scan_mode: l.with("resonance.mode", ScanMode::parse)?,
            scan_k: l.parse("resonance.k")?,
            xi_max: l.parse("resonance.xi_max")?,
            lambda_sim: l.parse("resonance.lambda_sim")?,
            lambda_gg: l.parse("resonance.lambda_gg")?,
            scan_samples: l.parse("resonance.samples")?,
            probe_trials: l.parse("strichartz.trials")?,
            constant_trials: l.parse("strichartz.constant_trials")?,
            n1: l.parse("strichartz.n1")?,
            n2: l.parse("strichartz.n2")?,
            perturbation: l.parse("strichartz.perturbation")?,
            envelope_s: l.optional_f64("envelope.s", "auto")?,
            growth: l.parse("envelope.growth")?,
            delta_prime: l.parse("envelope.delta_prime")?,
            bourgain_s: l.optional_f64("bourgain.s", "auto")?,
            half_window: l.parse("bourgain.half_window")?,
            refine: l.parse("bourgain.refine")?,
            use_envelope: bool_key("bourgain.envelope")?,
        };
        dispersive_lab::nonlinearity::EntireSeries::parse(&cfg.f).map_err(|e| invalid("f", e.to_string()))?;
        if cfg.record_every == 0 {
            return Err(invalid("time.record_every", "must be ≥ 1"));
        }
        Ok(cfg)
    }

    /// Parses a config file's text; `experiment` overrides (or must agree with) the file.
    pub fn from_text(text: &str, path: &str, experiment: Experiment) -> Result<Self> {
        let mut map = parse_pairs(text, path)?;
        if let Some(e) = map.get("experiment") {
            if Experiment::parse(e)? != experiment {
                return Err(CliError::ExperimentMismatch { config: e.clone(), cli: experiment.name().into() });
            }
        }
        map.insert("experiment".into(), experiment.name().into());
        Self::from_map(&map)
    }

    /// Every key with its resolved value; `from_map` of this map returns an equal config.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<f64>, none: &str| v.map_or(none.to_string(), |x| x.to_string());
        let (kind, modes, kmax, decay) = match &self.initial {
            InitialData::Cosines(m) => (
                "cosines",
                m.iter().map(|(k, a)| format!("{k}:{a}")).collect::<Vec<_>>().join(","),
                KEYS_DEFAULT_KMAX.to_string(),
                KEYS_DEFAULT_DECAY.to_string(),
            ),
            InitialData::Random { kmax, decay } => {
                ("random", KEYS_DEFAULT_MODES.to_string(), kmax.to_string(), decay.to_string())
            }
        };
        let pairs: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.name().into()),
            ("seed", self.seed.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("symbol.kind", self.symbol_kind.name().into()),
            ("symbol.alpha", self.alpha.to_string()),
            ("symbol.xi0", self.xi0.to_string()),
            ("f", self.f.clone()),
            ("grid.m", self.grid_m.to_string()),
            ("time.dt", self.dt.to_string()),
            ("time.t_final", self.t_final.to_string()),
            ("time.record_every", self.record_every.to_string()),
            ("solver.scheme", self.scheme.to_string()),
            ("solver.dealias", self.dealias.to_string()),
            ("initial.kind", kind.into()),
            ("initial.modes", modes),
            ("initial.kmax", kmax),
            ("initial.decay", decay),
            ("initial.h1_norm", opt(self.h1_norm, "none")),
            ("resonance.mode", self.scan_mode.to_string()),
            ("resonance.k", self.scan_k.to_string()),
            ("resonance.xi_max", self.xi_max.to_string()),
            ("resonance.lambda_sim", self.lambda_sim.to_string()),
            ("resonance.lambda_gg", self.lambda_gg.to_string()),
            ("resonance.samples", self.scan_samples.to_string()),
            ("strichartz.trials", self.probe_trials.to_string()),
            ("strichartz.constant_trials", self.constant_trials.to_string()),
            ("strichartz.n1", self.n1.to_string()),
            ("strichartz.n2", self.n2.to_string()),
            ("strichartz.perturbation", self.perturbation.to_string()),
            ("envelope.s", opt(self.envelope_s, "auto")),
            ("envelope.growth", self.growth.to_string()),
            ("envelope.delta_prime", self.delta_prime.to_string()),
            ("bourgain.s", opt(self.bourgain_s, "auto")),
            ("bourgain.half_window", self.half_window.to_string()),
            ("bourgain.refine", self.refine.to_string()),
            ("bourgain.envelope", self.use_envelope.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The config as `key = value` text.
    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = \"{v}\"\n")).collect()
    }
}

const KEYS_DEFAULT_MODES: &str = "1:1,2:0.5";
const KEYS_DEFAULT_KMAX: i64 = 8;
const KEYS_DEFAULT_DECAY: f64 = 1.0;
