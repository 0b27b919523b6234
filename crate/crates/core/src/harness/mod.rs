//! Command implementations behind the `crn-sobol` binary.
//!
//! Every command writes tidy CSV files plus a [`RunManifest`] into its output
//! directory. Work runs on a private rayon pool of `workers` threads; outputs
//! are identical for any worker count.

mod manifest;

pub use manifest::{sha256_hex, RunManifest, MANIFEST_FILE};

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::deterministic::{solve_rre, DetError, Method, SolverOptions};
use crate::gsa::{
    check_m_list, deterministic_samples, estimate_from_values, stochastic_samples, GsaError, IndexEnsemble,
    SaltelliDesign, SobolEstimate,
};
use crate::network::{map_parameters, parse_model, Model, ParseError};
use crate::stochastic::{nrm_simulate, stochastic_qoi_at_rates, SimError};
use crate::streams::{design_rng, SeedSpec};

const FIX_PURPOSE: u64 = 0xF1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandSpec {
    Simulate {
        m: f64,
        replicates: usize,
        seed: u64,
    },
    Rre,
    Sobol {
        mode: Mode,
        m: f64,
        n_s: usize,
        m_s: usize,
        design_seed: u64,
        master_seed: u64,
        dump_samples: bool,
    },
    Converge {
        m_list: Vec<f64>,
        n_s: usize,
        m_s: usize,
        design_seed: u64,
        master_seed: u64,
        dump_samples: bool,
    },
    /// Screen with deterministic totals (`n_s` base samples), then draw
    /// `n_samples` parameter points with `m_s` realizations each for the
    /// full and the reduced stochastic model.
    FixParams {
        threshold: f64,
        m: f64,
        n_s: usize,
        n_samples: usize,
        m_s: usize,
        design_seed: u64,
        master_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: PathBuf,
    pub command: CommandSpec,
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    pub workers: usize,
    pub out: PathBuf,
}

impl RunConfig {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            rtol: self.rtol,
            atol: self.atol,
            method: self.method,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HarnessError {
    /// 2 for input and validation problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 1,
            Self::Parse { .. } | Self::Argument(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<GsaError> for HarnessError {
    fn from(e: GsaError) -> Self {
        match e {
            GsaError::InvalidArgument(msg) => Self::Argument(msg),
            GsaError::Deterministic {
                source: DetError::Parameter(p),
                ..
            } => Self::Argument(p.to_string()),
            GsaError::Stochastic {
                source: SimError::NonIntegralInitialState { .. },
                ..
            } => Self::Argument(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonFinitePropensity { .. } => Self::Numerical(e.to_string()),
            other => Self::Argument(other.to_string()),
        }
    }
}

impl From<DetError> for HarnessError {
    fn from(e: DetError) -> Self {
        match e {
            DetError::Solver(_) => Self::Numerical(e.to_string()),
            other => Self::Argument(other.to_string()),
        }
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

struct Outputs<'a> {
    dir: &'a Path,
    report: RunReport,
}

impl Outputs<'_> {
    fn create(&mut self, name: &str) -> Result<CsvFile, HarnessError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        self.report.files.push(path.clone());
        Ok(CsvFile {
            path,
            w: BufWriter::new(file),
        })
    }
}

struct CsvFile {
    path: PathBuf,
    w: BufWriter<File>,
}

impl CsvFile {
    fn line(&mut self, fields: &[String]) -> Result<(), HarnessError> {
        writeln!(self.w, "{}", fields.join(",")).map_err(|source| HarnessError::Io {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<(), HarnessError> {
        self.w.flush().map_err(|source| HarnessError::Io {
            path: self.path,
            source,
        })
    }
}

pub fn load_model(path: &Path) -> Result<(Model, String), HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model = parse_model(&text).map_err(|source| HarnessError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((model, text))
}

/// Run one command and write its manifest.
pub fn run(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    let (model, text) = load_model(&cfg.model)?;
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
        return Err(HarnessError::Argument("--rtol and --atol must be positive".into()));
    }
    if cfg.workers == 0 {
        return Err(HarnessError::Argument("--workers must be at least 1".into()));
    }
    fs::create_dir_all(&cfg.out).map_err(|source| HarnessError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Argument(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let mut out = Outputs {
        dir: &cfg.out,
        report: RunReport::default(),
    };
    pool.install(|| match &cfg.command {
        CommandSpec::Simulate { m, replicates, seed } => cmd_simulate(&model, *m, *replicates, *seed, &mut out),
        CommandSpec::Rre => cmd_rre(&model, cfg, &mut out),
        CommandSpec::Sobol {
            mode,
            m,
            n_s,
            m_s,
            design_seed,
            master_seed,
            dump_samples,
        } => match mode {
            Mode::Deterministic => cmd_sobol_det(&model, cfg, *n_s, *design_seed, *dump_samples, &mut out),
            Mode::Stochastic => cmd_stochastic(
                &model,
                &[*m],
                *n_s,
                *m_s,
                *design_seed,
                *master_seed,
                *dump_samples,
                None,
                &mut out,
            ),
        },
        CommandSpec::Converge {
            m_list,
            n_s,
            m_s,
            design_seed,
            master_seed,
            dump_samples,
        } => {
            check_m_list(m_list)?;
            cmd_stochastic(
                &model,
                m_list,
                *n_s,
                *m_s,
                *design_seed,
                *master_seed,
                *dump_samples,
                Some(cfg),
                &mut out,
            )
        }
        CommandSpec::FixParams {
            threshold,
            m,
            n_s,
            n_samples,
            m_s,
            design_seed,
            master_seed,
        } => cmd_fix_params(
            &model,
            cfg,
            FixArgs {
                threshold: *threshold,
                m: *m,
                n_s: *n_s,
                n_samples: *n_samples,
                m_s: *m_s,
                design_seed: *design_seed,
                master_seed: *master_seed,
            },
            &mut out,
        ),
    })?;
    let manifest_path = cfg.out.join(MANIFEST_FILE);
    fs::write(&manifest_path, RunManifest::new(cfg, &text).render()).map_err(|source| HarnessError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    out.report.files.push(manifest_path);
    Ok(out.report)
}

/// Re-run the command recorded in `manifest_path`, refusing if the model file changed.
pub fn replay(manifest_path: &Path, out: PathBuf, workers: Option<usize>) -> Result<RunReport, HarnessError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| HarnessError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest = RunManifest::parse(&text)?;
    let cfg = manifest.to_config(out, workers)?;
    let (_, model_text) = load_model(&cfg.model)?;
    let hash = sha256_hex(model_text.as_bytes());
    if hash != manifest.model_hash()? {
        return Err(HarnessError::Argument(format!(
            "{} has changed since the manifest was written (sha256 {hash})",
            cfg.model.display()
        )));
    }
    run(&cfg)
}

fn check_m(m: f64) -> Result<(), HarnessError> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(HarnessError::Argument(format!("system-size multiplier must be positive, got {m}")))
    }
}

fn cmd_simulate(model: &Model, m: f64, replicates: usize, seed: u64, out: &mut Outputs) -> Result<(), HarnessError> {
    check_m(m)?;
    let net = &model.network;
    let v = m * net.v_nom;
    let rates = net.nominal_rates();
    let width = replicates.saturating_sub(1).to_string().len();
    let paths: Vec<PathBuf> = (0..replicates)
        .into_par_iter()
        .map(|i| -> Result<PathBuf, HarnessError> {
            let traj = nrm_simulate(net, v, &rates, net.t_final, SeedSpec::new(seed, i as u64))?;
            let path = out.dir.join(format!("trajectory_{i:0width$}.csv"));
            let file = File::create(&path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            traj.write_csv(BufWriter::new(file), &net.species)
                .map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
            Ok(path)
        })
        .collect::<Result<_, _>>()?;
    out.report.files.extend(paths);
    out.report.notes.push(format!("{replicates} trajectories at V = {v}"));
    Ok(())
}

/// Uniform grid of `RRE_GRID_POINTS` times including both ends.
pub const RRE_GRID_POINTS: usize = 1000;

fn cmd_rre(model: &Model, cfg: &RunConfig, out: &mut Outputs) -> Result<(), HarnessError> {
    let net = &model.network;
    let sol = solve_rre(net, &net.nominal_rates(), net.t_final, &cfg.solver())?;
    let mut csv = out.create("rre.csv")?;
    csv.line(&std::iter::once("t".to_string()).chain(net.species.iter().cloned()).collect::<Vec<_>>())?;
    for i in 0..RRE_GRID_POINTS {
        let t = net.t_final * i as f64 / (RRE_GRID_POINTS - 1) as f64;
        let z = sol.eval(t);
        csv.line(&std::iter::once(t).chain(z).map(|x| x.to_string()).collect::<Vec<_>>())?;
    }
    csv.finish()?;
    if let Some(t) = sol.stats.stiff_switch {
        out.report.notes.push(format!("stiffness detected at t = {t}; switched to Rodas4"));
    }
    Ok(())
}

fn index_header() -> Vec<String> {
    ["V", "m", "omega", "param", "S", "T", "raw_S", "raw_T"].map(String::from).to_vec()
}

fn summary_header() -> Vec<String> {
    ["V", "m", "param", "mean_T", "p5_T", "p95_T", "mean_S", "degenerate_count"]
        .map(String::from)
        .to_vec()
}

fn samples_header(names: &[&str]) -> Vec<String> {
    std::iter::once("context".to_string())
        .chain(names.iter().map(|n| format!("theta_{n}")))
        .chain(["omega".to_string(), "f".to_string()])
        .collect()
}

fn index_rows(csv: &mut CsvFile, v: &str, m: &str, omega: &str, names: &[&str], e: &SobolEstimate) -> Result<(), HarnessError> {
    let (s, t) = (e.first_order_clamped(), e.total_clamped());
    for (i, name) in names.iter().enumerate() {
        csv.line(&[
            v.to_string(),
            m.to_string(),
            omega.to_string(),
            name.to_string(),
            s[i].to_string(),
            t[i].to_string(),
            e.first_order[i].to_string(),
            e.total[i].to_string(),
        ])?;
    }
    Ok(())
}

fn sample_rows(
    csv: &mut CsvFile,
    context: &str,
    design: &SaltelliDesign,
    omega: &str,
    values: &[f64],
) -> Result<(), HarnessError> {
    for (k, f) in values.iter().enumerate() {
        let mut row = vec![context.to_string()];
        row.extend(design.point(k).iter().map(f64::to_string));
        row.push(omega.to_string());
        row.push(f.to_string());
        csv.line(&row)?;
    }
    Ok(())
}

/// Deterministic rows use `V = m = inf` and an empty omega.
fn det_summary_rows(csv: &mut CsvFile, names: &[&str], e: &SobolEstimate) -> Result<(), HarnessError> {
    let (s, t) = (e.first_order_clamped(), e.total_clamped());
    for (i, name) in names.iter().enumerate() {
        csv.line(&[
            "inf".into(),
            "inf".into(),
            name.to_string(),
            t[i].to_string(),
            t[i].to_string(),
            t[i].to_string(),
            s[i].to_string(),
            "0".into(),
        ])?;
    }
    Ok(())
}

fn deterministic_estimate(
    model: &Model,
    cfg: &RunConfig,
    n_s: usize,
    design_seed: u64,
) -> Result<(SaltelliDesign, Vec<f64>, SobolEstimate), HarnessError> {
    if model.params.is_empty() {
        return Err(HarnessError::Argument("model declares no uncertain parameters".into()));
    }
    if n_s < 2 {
        return Err(HarnessError::Argument(format!("--ns must be at least 2, got {n_s}")));
    }
    let design = SaltelliDesign::new(model.params.len(), n_s, design_seed);
    let values = deterministic_samples(&model.network, &model.params, &model.qoi, &design, &cfg.solver())?;
    let estimate = estimate_from_values(&design, &values)
        .map_err(|e| HarnessError::Numerical(format!("deterministic QoI: {e}")))?;
    Ok((design, values, estimate))
}

fn cmd_sobol_det(
    model: &Model,
    cfg: &RunConfig,
    n_s: usize,
    design_seed: u64,
    dump_samples: bool,
    out: &mut Outputs,
) -> Result<(), HarnessError> {
    let (design, values, e) = deterministic_estimate(model, cfg, n_s, design_seed)?;
    let names = model.params.names();
    let mut csv = out.create("indices.csv")?;
    csv.line(&index_header())?;
    index_rows(&mut csv, "inf", "inf", "", &names, &e)?;
    csv.finish()?;
    let mut csv = out.create("summary.csv")?;
    csv.line(&summary_header())?;
    det_summary_rows(&mut csv, &names, &e)?;
    csv.finish()?;
    if dump_samples {
        let mut csv = out.create("samples.csv")?;
        csv.line(&samples_header(&names))?;
        sample_rows(&mut csv, "deterministic", &design, "", &values)?;
        csv.finish()?;
    }
    let mut ranked: Vec<(usize, f64)> = e.total.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    out.report.notes.push(format!(
        "total indices, largest first: {}",
        ranked
            .iter()
            .map(|&(i, t)| format!("{}={t:.4}", names[i]))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    Ok(())
}

/// Stochastic ensembles for every `m` in `m_list`. With `reference` set, the
/// deterministic indices over the same design are appended to the summary.
#[allow(clippy::too_many_arguments)]
fn cmd_stochastic(
    model: &Model,
    m_list: &[f64],
    n_s: usize,
    m_s: usize,
    design_seed: u64,
    master_seed: u64,
    dump_samples: bool,
    reference: Option<&RunConfig>,
    out: &mut Outputs,
) -> Result<(), HarnessError> {
    for &m in m_list {
        check_m(m)?;
    }
    if model.params.is_empty() {
        return Err(HarnessError::Argument("model declares no uncertain parameters".into()));
    }
    if n_s < 2 || m_s < 1 {
        return Err(HarnessError::Argument(format!(
            "need --ns >= 2 and --ms >= 1, got {n_s} and {m_s}"
        )));
    }
    let net = &model.network;
    let names = model.params.names();
    let design = SaltelliDesign::new(names.len(), n_s, design_seed);

    let mut indices = out.create("indices.csv")?;
    indices.line(&index_header())?;
    let mut summary = out.create("summary.csv")?;
    summary.line(&summary_header())?;
    let mut samples_csv = if dump_samples {
        let mut c = out.create("samples.csv")?;
        c.line(&samples_header(&names))?;
        Some(c)
    } else {
        None
    };

    for &m in m_list {
        let v = m * net.v_nom;
        let samples = stochastic_samples(net, &model.params, &model.qoi, v, &design, m_s, master_seed)?;
        let ens = IndexEnsemble::from_samples(v, m, &design, &samples);
        let (vs, ms) = (v.to_string(), m.to_string());
        for (omega, est) in &ens.per_omega {
            if let Ok(e) = est {
                index_rows(&mut indices, &vs, &ms, &omega.to_string(), &names, e)?;
            }
        }
        match &ens.summary {
            Some(rows) => {
                for (name, s) in names.iter().zip(rows) {
                    summary.line(&[
                        vs.clone(),
                        ms.clone(),
                        name.to_string(),
                        s.mean_t.to_string(),
                        s.p5_t.to_string(),
                        s.p95_t.to_string(),
                        s.mean_s.to_string(),
                        ens.degenerate_count.to_string(),
                    ])?;
                }
            }
            None => {
                for name in &names {
                    summary.line(&[
                        vs.clone(),
                        ms.clone(),
                        name.to_string(),
                        "nan".into(),
                        "nan".into(),
                        "nan".into(),
                        "nan".into(),
                        ens.degenerate_count.to_string(),
                    ])?;
                }
            }
        }
        if let Some(csv) = samples_csv.as_mut() {
            let context = format!("stochastic_m{m}");
            for (omega, values) in &samples {
                sample_rows(csv, &context, &design, &omega.to_string(), values)?;
            }
        }
        if ens.degenerate_count > 0 {
            out.report.notes.push(format!(
                "m = {m}: {} of {m_s} realizations gave a degenerate QoI and were excluded",
                ens.degenerate_count
            ));
        }
    }
    if let Some(cfg) = reference {
        let (_, values, e) = deterministic_estimate(model, cfg, n_s, design_seed)?;
        det_summary_rows(&mut summary, &names, &e)?;
        if let Some(csv) = samples_csv.as_mut() {
            sample_rows(csv, "deterministic", &design, "", &values)?;
        }
    }
    indices.finish()?;
    summary.finish()?;
    if let Some(csv) = samples_csv {
        csv.finish()?;
    }
    Ok(())
}

struct FixArgs {
    threshold: f64,
    m: f64,
    n_s: usize,
    n_samples: usize,
    m_s: usize,
    design_seed: u64,
    master_seed: u64,
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Parameters whose (clamped) total index is below `threshold`.
pub fn select_unimportant(total: &[f64], threshold: f64) -> Vec<usize> {
    total
        .iter()
        .enumerate()
        .filter(|(_, t)| t.clamp(0.0, 1.5) < threshold)
        .map(|(i, _)| i)
        .collect()
}

fn cmd_fix_params(model: &Model, cfg: &RunConfig, a: FixArgs, out: &mut Outputs) -> Result<(), HarnessError> {
    check_m(a.m)?;
    if !(a.threshold.is_finite() && a.threshold >= 0.0) {
        return Err(HarnessError::Argument(format!("threshold must be >= 0, got {}", a.threshold)));
    }
    if a.m_s == 0 {
        return Err(HarnessError::Argument("--ms must be at least 1".into()));
    }
    let (_, _, e) = deterministic_estimate(model, cfg, a.n_s, a.design_seed)?;
    let names = model.params.names();
    let p = names.len();
    let fixed = select_unimportant(&e.total, a.threshold);
    if fixed.len() == p {
        return Err(HarnessError::Argument(format!(
            "threshold {} fixes every parameter; nothing left to vary",
            a.threshold
        )));
    }

    let mut csv = out.create("fixed_params.csv")?;
    csv.line(&["param", "T", "raw_T", "fixed"].map(String::from))?;
    let clamped = e.total_clamped();
    for i in 0..p {
        csv.line(&[
            names[i].to_string(),
            clamped[i].to_string(),
            e.total[i].to_string(),
            fixed.contains(&i).to_string(),
        ])?;
    }
    csv.finish()?;

    let net = &model.network;
    let v = a.m * net.v_nom;
    let mut rng = design_rng(a.design_seed, FIX_PURPOSE);
    let thetas: Vec<Vec<f64>> = (0..a.n_samples)
        .map(|_| (0..p).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
        .collect();
    let n = a.n_samples * a.m_s;
    let eval = |theta: &[f64], omega: u64| -> Result<f64, HarnessError> {
        let rates = map_parameters(net, &model.params, theta).map_err(|e| HarnessError::Argument(e.to_string()))?;
        Ok(stochastic_qoi_at_rates(net, v, &rates, &model.qoi, SeedSpec::new(a.master_seed, omega))?)
    };
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let theta = &thetas[idx / a.m_s];
            let mut reduced = theta.clone();
            for &i in &fixed {
                reduced[i] = 0.0;
            }
            Ok((eval(theta, idx as u64)?, eval(&reduced, idx as u64)?))
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut csv = out.create("fix_samples.csv")?;
    csv.line(&samples_header(&names))?;
    for (context, pick) in [("full", 0usize), ("reduced", 1)] {
        for (idx, pair) in pairs.iter().enumerate() {
            let mut theta = thetas[idx / a.m_s].clone();
            if pick == 1 {
                for &i in &fixed {
                    theta[i] = 0.0;
                }
            }
            let mut row = vec![context.to_string()];
            row.extend(theta.iter().map(f64::to_string));
            row.push(idx.to_string());
            row.push(if pick == 0 { pair.0 } else { pair.1 }.to_string());
            csv.line(&row)?;
        }
    }
    csv.finish()?;

    let full: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let reduced: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64]| {
        let mu = mean(x);
        x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
    };
    let ks = ks_statistic(&full, &reduced);
    let mut csv = out.create("fix_summary.csv")?;
    csv.line(&["threshold", "n_fixed", "n_samples", "ks_statistic", "mean_full", "mean_reduced", "var_full", "var_reduced"].map(String::from))?;
    csv.line(&[
        a.threshold.to_string(),
        fixed.len().to_string(),
        n.to_string(),
        ks.to_string(),
        mean(&full).to_string(),
        mean(&reduced).to_string(),
        var(&full).to_string(),
        var(&reduced).to_string(),
    ])?;
    csv.finish()?;
    out.report.notes.push(format!(
        "fixed {} of {p} parameters: {}; KS statistic {ks:.4}",
        fixed.len(),
        fixed.iter().map(|&i| names[i]).collect::<Vec<_>>().join(" ")
    ));
    Ok(())
}
