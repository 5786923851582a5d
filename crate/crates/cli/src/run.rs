use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dispersive_lab::bourgain::{extend_with, restricted_norms, spacetime_norms, NormRow, NORM_CSV_HEADER};
use dispersive_lab::envelope::build_from_datum;
use dispersive_lab::evolution::{apriori_bound, invariants, solve, SolverConfig};
use dispersive_lab::fmt_f64;
use dispersive_lab::nonlinearity::{
    classify_global, difference_majorant, majorant, measure_difference_constant, measure_product_constant,
    EntireSeries, GlobalClass,
};
use dispersive_lab::par::{trial_rng, Execution};
use dispersive_lab::probes::{
    bilinear_check, difference_probe, improved_strichartz, linear_strichartz, PROBE_CSV_HEADER,
};
use dispersive_lab::resonance::{scan_resonance, ScanHypothesis};
use dispersive_lab::spectral::{random_field, sobolev_norm, write_spectral_csv, Field, TorusGrid};
use dispersive_lab::symbols::{make_symbol, regularity_params, DispersionSymbol};
use dispersive_lab::trajectory::Trajectory;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, InitialData, RunConfig};
use crate::error::{io, numerical, CliError, Result};
use crate::manifest::{FileEntry, RunManifest, ARTIFACT_VERSION};

/// Collects emitted files and their digests.
struct Artifacts {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io(root))?;
        Ok(Artifacts { root: root.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io(dir))?;
        }
        fs::write(&path, content).map_err(io(&path))?;
        let digest = Sha256::digest(content.as_bytes());
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: content.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        });
        Ok(())
    }
}

type Summary = BTreeMap<String, String>;

fn symbol(cfg: &RunConfig) -> Result<DispersionSymbol> {
    make_symbol(cfg.symbol_kind, cfg.alpha, cfg.xi0)
        .map_err(|e| CliError::InvalidValue { key: "symbol".into(), message: e.to_string() })
}

fn nonlinearity(cfg: &RunConfig) -> Result<EntireSeries> {
    EntireSeries::parse(&cfg.f).map_err(numerical("f"))
}

fn grid(cfg: &RunConfig) -> Result<TorusGrid> {
    TorusGrid::new(cfg.grid_m).map_err(|e| CliError::InvalidValue { key: "grid.m".into(), message: e.to_string() })
}

fn initial_datum(cfg: &RunConfig, g: TorusGrid) -> Result<Field> {
    let u = match &cfg.initial {
        InitialData::Cosines(modes) => {
            let mut u = Field::zeros(g);
            for &(k, a) in modes {
                if k >= g.nyquist() {
                    return Err(CliError::InvalidValue {
                        key: "initial.modes".into(),
                        message: format!("mode {k} is not below the Nyquist frequency {}", g.nyquist()),
                    });
                }
                u = &u + &Field::cos_mode(g, k, a);
            }
            u
        }
        InitialData::Random { kmax, decay } => {
            if *kmax < 1 || *kmax >= g.nyquist() {
                return Err(CliError::InvalidValue {
                    key: "initial.kmax".into(),
                    message: format!("need 1 ≤ kmax < {}", g.nyquist()),
                });
            }
            random_field(g, *kmax, *decay, &mut trial_rng(cfg.seed, 0))
        }
    };
    match cfg.h1_norm {
        Some(target) => {
            let n = sobolev_norm(&u, 1.0, None).map_err(numerical("initial datum"))?;
            if n == 0.0 {
                return Err(CliError::InvalidValue { key: "initial.h1_norm".into(), message: "datum is zero".into() });
            }
            Ok(u.scaled(target / n))
        }
        None => Ok(u),
    }
}

fn solver(cfg: &RunConfig) -> SolverConfig {
    SolverConfig::new(cfg.dt, cfg.t_final)
        .with_record_every(cfg.record_every)
        .with_scheme(cfg.scheme)
        .with_dealias(cfg.dealias)
}

fn trajectory(cfg: &RunConfig, sym: &DispersionSymbol, f: &EntireSeries, u0: &Field) -> Result<Trajectory> {
    solve(u0, sym, f, &solver(cfg)).map_err(numerical("solve"))
}

fn invariant_csv(traj: &Trajectory, sym: &DispersionSymbol, f: &EntireSeries, summary: &mut Summary) -> Result<String> {
    let mut out = String::from("t,mass,energy,e_quad_high,e_quad_low,e_potential,mass_drift,energy_drift\n");
    let first = invariants(&traj.frames()[0], sym, f).map_err(numerical("invariants"))?;
    let (mut dm, mut de) = (0.0f64, 0.0f64);
    for (n, fr) in traj.frames().iter().enumerate() {
        let r = invariants(fr, sym, f).map_err(numerical("invariants"))?;
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { (a - b).abs() / b.abs() };
        let (m, e) = (rel(r.mass, first.mass), rel(r.energy, first.energy));
        dm = dm.max(m);
        de = de.max(e);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(traj.time(n)),
            fmt_f64(r.mass),
            fmt_f64(r.energy),
            fmt_f64(r.e_quad_high),
            fmt_f64(r.e_quad_low),
            fmt_f64(r.e_potential),
            fmt_f64(m),
            fmt_f64(e)
        )
        .unwrap();
    }
    summary.insert("max_mass_drift".into(), fmt_f64(dm));
    summary.insert("max_energy_drift".into(), fmt_f64(de));
    Ok(out)
}

fn run_solve(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary, dumps: bool) -> Result<()> {
    let (sym, f, g) = (symbol(cfg)?, nonlinearity(cfg)?, grid(cfg)?);
    let u0 = initial_datum(cfg, g)?;
    let traj = trajectory(cfg, &sym, &f, &u0)?;
    summary.insert("scheme".into(), cfg.scheme.to_string());
    summary.insert("frames".into(), traj.len().to_string());
    let csv = invariant_csv(&traj, &sym, &f, summary)?;
    out.write("invariants.csv", &csv)?;
    if dumps {
        for (n, fr) in traj.frames().iter().enumerate() {
            out.write(&format!("trajectory/t_{n}.csv"), &write_spectral_csv(fr))?;
        }
    }
    Ok(())
}

fn run_resonance(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary, exec: Execution) -> Result<()> {
    let sym = symbol(cfg)?;
    let hyp = ScanHypothesis {
        lambda_sim: cfg.lambda_sim,
        lambda_gg: cfg.lambda_gg,
        xi_max: cfg.xi_max,
        k: cfg.scan_k,
        samples: cfg.scan_samples,
        seed: cfg.seed,
    };
    let r = scan_resonance(&sym, hyp, cfg.scan_mode, exec).map_err(numerical("resonance scan"))?;
    let witness: Vec<String> = r.witness.iter().map(i64::to_string).collect();
    let csv = format!(
        "mode,k,alpha,xi_max,lambda_sim,lambda_gg,min_ratio,witness\n{},{},{},{},{},{},{},{}\n",
        r.mode,
        hyp.k,
        fmt_f64(sym.alpha()),
        hyp.xi_max,
        fmt_f64(hyp.lambda_sim),
        fmt_f64(hyp.lambda_gg),
        fmt_f64(r.min_ratio),
        witness.join(";")
    );
    summary.insert("admissible".into(), r.admissible.to_string());
    summary.insert("exhaustive".into(), r.exhaustive.to_string());
    out.write("resonance.csv", &csv)
}

fn run_strichartz(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary, exec: Execution) -> Result<()> {
    let (sym, f, g) = (symbol(cfg)?, nonlinearity(cfg)?, grid(cfg)?);
    let s = regularity_params(sym.alpha()).map_err(numerical("symbol"))?.s_alpha;
    let mut rows = vec![linear_strichartz(&sym, cfg.t_final, cfg.grid_m, cfg.probe_trials, cfg.seed, exec)
        .map_err(numerical("linear probe"))?];
    let u0 = initial_datum(cfg, g)?;
    let tu = trajectory(cfg, &sym, &f, &u0)?;
    // drift figures let a reader bound how far the discrete solution is from an exact one
    invariant_csv(&tu, &sym, &f, summary)?;
    let c = measure_product_constant(g, s, None, cfg.constant_trials, cfg.seed, exec)
        .map_err(numerical("product constant"))?;
    let (a, b) = improved_strichartz(&tu, &sym, &majorant(&f, c), s, None).map_err(numerical("improved probe"))?;
    rows.extend([a, b]);
    let tv = trajectory(cfg, &sym, &f, &u0.scaled(1.0 + cfg.perturbation))?;
    let cd = measure_difference_constant(g, s, cfg.constant_trials, cfg.seed, exec)
        .map_err(numerical("difference constant"))?;
    let (a, b) =
        difference_probe(&tu, &tv, &sym, &difference_majorant(&f, cd), s).map_err(numerical("difference probe"))?;
    rows.extend([a, b]);
    rows.push(
        bilinear_check(&sym, cfg.n1, cfg.n2, cfg.probe_trials, cfg.seed, exec).map_err(numerical("bilinear probe"))?,
    );
    summary.insert("product_constant".into(), fmt_f64(c));
    summary.insert("difference_constant".into(), fmt_f64(cd));
    let mut csv = format!("{PROBE_CSV_HEADER}\n");
    for r in &rows {
        writeln!(csv, "{}", r.to_csv()).unwrap();
        summary.insert(format!("witness.{}", r.probe), r.witness.clone());
    }
    out.write("probes.csv", &csv)
}

fn run_envelope(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary) -> Result<()> {
    let g = grid(cfg)?;
    let s = match cfg.envelope_s {
        Some(s) => s,
        None => regularity_params(cfg.alpha).map_err(numerical("symbol.alpha"))?.s_alpha,
    };
    let u0 = initial_datum(cfg, g)?;
    let env = build_from_datum(&u0, s, cfg.growth).map_err(numerical("envelope"))?;
    let tamed = env.tame(cfg.delta_prime).map_err(numerical("tame"))?;
    let plain = sobolev_norm(&u0, s, None).map_err(numerical("norm"))?;
    let weighted = sobolev_norm(&u0, s, Some(&env)).map_err(numerical("weighted norm"))?;
    summary.insert("s".into(), fmt_f64(s));
    summary.insert("delta".into(), fmt_f64(env.delta()));
    summary.insert("norm_hs".into(), fmt_f64(plain));
    summary.insert("norm_hs_omega".into(), fmt_f64(weighted));
    out.write("envelope.csv", &env.to_csv())?;
    out.write("envelope_tamed.csv", &tamed.to_csv())
}

fn run_bourgain(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary, exec: Execution) -> Result<()> {
    let (sym, f, g) = (symbol(cfg)?, nonlinearity(cfg)?, grid(cfg)?);
    let params = regularity_params(sym.alpha()).map_err(numerical("symbol"))?;
    let s = cfg.bourgain_s.unwrap_or(params.s_alpha);
    let u0 = initial_datum(cfg, g)?;
    let env = if cfg.use_envelope {
        Some(build_from_datum(&u0, s, cfg.growth).map_err(numerical("envelope"))?)
    } else {
        None
    };
    let traj = trajectory(cfg, &sym, &f, &u0)?;
    let ext = extend_with(&traj, &sym, cfg.half_window, cfg.refine, exec).map_err(numerical("extension"))?;
    let full = spacetime_norms(&ext, s, env.as_ref()).map_err(numerical("spacetime norms"))?;
    let restricted = restricted_norms(&traj, &sym, s, env.as_ref()).map_err(numerical("restricted norms"))?;
    let xsb_b = ext.xsb_norm(s, params.b_alpha, env.as_ref()).map_err(numerical("X^{s,b} norm"))?;
    let window = ext.window();
    let row = |quantity: &str, s: f64, b: f64, value: f64, window: (f64, f64)| NormRow {
        quantity: quantity.into(),
        s,
        b,
        value,
        grid_m: cfg.grid_m,
        window,
    };
    let on_t = (0.0, cfg.t_final);
    let rows = [
        row("xsb", s - 1.0, 1.0, full.xsb, window),
        row("xsb", s, params.b_alpha, xsb_b, window),
        row("linf_hs", s, 0.0, full.linf_hs, window),
        row("zs", s, 1.0, full.zs, window),
        row("xsb_restricted", s - 1.0, 1.0, restricted.xsb, on_t),
        row("linf_hs_restricted", s, 0.0, restricted.linf_hs, on_t),
        row("zs_restricted", s, 1.0, restricted.zs, on_t),
    ];
    let mut csv = format!("{NORM_CSV_HEADER}\n");
    for r in &rows {
        writeln!(csv, "{}", r.to_csv()).unwrap();
    }
    let plancherel = (ext.table_l2_sq() - ext.time_l2_sq()).abs() / ext.time_l2_sq().max(f64::MIN_POSITIVE);
    summary.insert("extension_ratio".into(), fmt_f64(full.zs / restricted.zs));
    summary.insert("plancherel_residual".into(), fmt_f64(plancherel));
    out.write("norms.csv", &csv)
}

/// `α ∈ {1, 1.1, …, 2}` followed by `√2`.
pub fn threshold_alphas() -> Vec<f64> {
    (10..=20).map(|i| i as f64 / 10.0).chain(std::iter::once(std::f64::consts::SQRT_2)).collect()
}

fn run_thresholds(out: &mut Artifacts) -> Result<()> {
    let mut csv = String::from("alpha,s_alpha,beta_alpha,b_alpha\n");
    for a in threshold_alphas() {
        let p = regularity_params(a).map_err(numerical("threshold table"))?;
        writeln!(csv, "{},{},{},{}", fmt_f64(a), fmt_f64(p.s_alpha), fmt_f64(p.beta_alpha), fmt_f64(p.b_alpha))
            .unwrap();
    }
    out.write("thresholds.csv", &csv)
}

fn run_global(cfg: &RunConfig, out: &mut Artifacts, summary: &mut Summary) -> Result<()> {
    let (sym, f, g) = (symbol(cfg)?, nonlinearity(cfg)?, grid(cfg)?);
    let b = match classify_global(&f, sym.alpha()) {
        GlobalClass::Case2 { bound } => bound,
        other => {
            return Err(CliError::InvalidValue {
                key: "f".into(),
                message: format!("global_demo needs a potential bounded above, got {other:?}"),
            })
        }
    };
    let u0 = initial_datum(cfg, g)?;
    let inv = invariants(&u0, &sym, &f).map_err(numerical("invariants"))?;
    let bound = apriori_bound(&sym, g, inv.mass, inv.energy, b).map_err(numerical("a priori bound"))?;
    let traj = trajectory(cfg, &sym, &f, &u0)?;
    let order = sym.alpha() / 2.0;
    let mut csv = String::from("t,energy_norm,bound,mass,energy\n");
    let mut sup = 0.0f64;
    for (n, fr) in traj.frames().iter().enumerate() {
        let norm = sobolev_norm(fr, order, None).map_err(numerical("energy norm"))?;
        let r = invariants(fr, &sym, &f).map_err(numerical("invariants"))?;
        sup = sup.max(norm);
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(traj.time(n)),
            fmt_f64(norm),
            fmt_f64(bound),
            fmt_f64(r.mass),
            fmt_f64(r.energy)
        )
        .unwrap();
    }
    summary.insert("potential_bound".into(), fmt_f64(b));
    summary.insert("apriori_bound".into(), fmt_f64(bound));
    summary.insert("sup_energy_norm".into(), fmt_f64(sup));
    summary.insert("within_bound".into(), (sup <= bound).to_string());
    out.write("global.csv", &csv)
}

/// Runs one experiment, writes its CSVs and `manifest.json` under `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let exec = Execution::default();
    let mut out = Artifacts::new(&cfg.output_dir)?;
    let mut summary = Summary::new();
    match cfg.experiment {
        Experiment::Solve => run_solve(cfg, &mut out, &mut summary, true)?,
        Experiment::Conserve => run_solve(cfg, &mut out, &mut summary, false)?,
        Experiment::Resonance => run_resonance(cfg, &mut out, &mut summary, exec)?,
        Experiment::Strichartz => run_strichartz(cfg, &mut out, &mut summary, exec)?,
        Experiment::Envelope => run_envelope(cfg, &mut out, &mut summary)?,
        Experiment::BourgainNorms => run_bourgain(cfg, &mut out, &mut summary, exec)?,
        Experiment::ThresholdTable => run_thresholds(&mut out)?,
        Experiment::GlobalDemo => run_global(cfg, &mut out, &mut summary)?,
    }
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        config: cfg.to_map(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: out.files.clone(),
        summary,
    };
    let path = cfg.output_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io(&path))?;
    Ok(manifest)
}
