//! Command-line front end: `simulate`, `region`, `certify` and `fit`.
//!
//! Settings come from flags, then the `--config` JSON file, then built-in
//! defaults. Every command writes its data files plus a
//! `<command>-manifest.json` holding the fully resolved settings, so the run
//! can be repeated exactly. The manifest omits the output directory and the
//! thread count, neither of which affects any output byte.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{DelayVector, History};
use crate::jump_system::{simulate_ensemble_with, EnsembleOptions, InitialMode, JumpSystem};
use crate::lyapunov::{feasible_region, grid_midpoints};
use crate::markov::{DelayBijection, MarkovDelayChain, Mode, Tpm};
use crate::moments::{default_burn_in, emss_check, fit_decay, EmssCheck, MomentCurve};
use crate::sat_example::{
    certify_sat, certify_sat_sampled, sat_model_with, CParam, SampledOptions, SatSystemSpec,
};

pub const THREADS_ENV: &str = "MJDS_THREADS";

const DEFAULT_GAMMA: f64 = 1.2;
const DEFAULT_P: f64 = 0.95;
const DEFAULT_Q: f64 = 0.01;
const DEFAULT_HORIZON: usize = 60;
const DEFAULT_RUNS: usize = 1000;
const DEFAULT_TRAJECTORIES: usize = 1;
const DEFAULT_GRID: usize = 200;
const DEFAULT_SAMPLES: usize = 10_000;
const DEFAULT_RADIUS: f64 = 10.0;
const DEFAULT_OUT_DIR: &str = "out";

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Parser)]
#[command(
    name = "mjds",
    version,
    about = "Markov jump delay systems: simulate, certify, fit"
)]
pub struct Cli {
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores). Falls back to MJDS_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON run configuration; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo ensemble and trajectories.
    Simulate(SimulateArgs),
    /// Feasible (p, q) region of the saturation candidate.
    Region(RegionArgs),
    /// Certificate chain for the saturation system.
    Certify(CertifyArgs),
    /// Decay-rate fit and envelope check of a moment curve.
    Fit(FitArgs),
}

#[derive(Debug, Args, Default)]
pub struct SystemArgs {
    /// Built-in system name (only `sat`).
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Probability of staying in mode 1.
    #[arg(long)]
    pub p: Option<f64>,
    /// Probability of staying in mode 2.
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Constant initial history value.
    #[arg(long)]
    pub xi0: Option<f64>,
    /// `uniform` or a mode number.
    #[arg(long, value_parser = parse_initial_mode)]
    pub initial_mode: Option<InitialMode>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Number of per-run trajectory CSVs to write.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Also write a gnuplot script.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// `e` or a number.
    #[arg(long, value_parser = parse_c)]
    pub c: Option<CParam>,
    /// Cells per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_parser = parse_c)]
    pub c: Option<CParam>,
    /// Use this λ₂/λ₁ instead of the region witness.
    #[arg(long)]
    pub lambda_ratio: Option<f64>,
    /// Declared decrease constant, checked by sampling.
    #[arg(long)]
    pub alpha3: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Ensemble CSV to fit instead of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Certificate JSON to check the curve against.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[arg(long = "M")]
    pub m: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long, value_parser = parse_c)]
    pub c: Option<CParam>,
}

fn parse_c(s: &str) -> std::result::Result<CParam, String> {
    CParam::parse(s).map_err(|e| e.to_string())
}

fn parse_initial_mode(s: &str) -> std::result::Result<InitialMode, String> {
    if s == "uniform" {
        return Ok(InitialMode::Uniform);
    }
    match s.parse::<usize>() {
        Ok(m) if m >= 1 => Ok(InitialMode::Fixed(Mode::new(m))),
        _ => Err(format!(
            "expected `uniform` or a mode number >= 1, got `{s}`"
        )),
    }
}

/// Built-in model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub system: String,
    pub gamma: f64,
    pub delta: usize,
    pub alphabet: Vec<Vec<usize>>,
}

/// Initial history: `{"constant": v}` or `{"slots": [[..], ..]}` oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Xi0Config {
    Constant(f64),
    Slots(Vec<Vec<f64>>),
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub model: Option<ModelConfig>,
    pub system: Option<String>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub tpm: Option<Vec<Vec<f64>>>,
    pub c: Option<CParam>,
    pub lambda_ratio: Option<f64>,
    pub xi0: Option<Xi0Config>,
    pub horizon: Option<usize>,
    pub runs: Option<usize>,
    pub initial_mode: Option<InitialMode>,
    pub trajectories: Option<usize>,
    pub grid: Option<usize>,
    pub input: Option<PathBuf>,
    pub burn_in: Option<usize>,
    pub certificate: Option<PathBuf>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha3: Option<f64>,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub gnuplot: Option<bool>,
}

impl RunConfig {
    /// Parses JSON, reporting `file:line:column` on failure.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::config(
                format!("{origin}:{}:{}", e.line(), e.column()),
                e.to_string(),
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Field-wise `self` if set, else `base`.
    pub fn or(self, base: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            seed,
            out_dir,
            threads,
            model,
            system,
            gamma,
            p,
            q,
            tpm,
            c,
            lambda_ratio,
            xi0,
            horizon,
            runs,
            initial_mode,
            trajectories,
            grid,
            input,
            burn_in,
            certificate,
            m,
            zeta,
            alpha3,
            samples,
            radius,
            gnuplot
        )
    }
}

impl SystemArgs {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.system = self.system;
        cfg.gamma = self.gamma;
        cfg.p = self.p;
        cfg.q = self.q;
    }
}

impl EnsembleArgs {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.runs = self.runs;
        cfg.horizon = self.horizon;
        cfg.xi0 = self.xi0.map(Xi0Config::Constant);
        cfg.initial_mode = self.initial_mode;
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Region(_) => "region",
            Command::Certify(_) => "certify",
            Command::Fit(_) => "fit",
        }
    }

    fn into_overrides(self) -> RunConfig {
        let mut cfg = RunConfig::default();
        match self {
            Command::Simulate(a) => {
                a.system.apply(&mut cfg);
                a.ensemble.apply(&mut cfg);
                cfg.trajectories = a.trajectories;
                cfg.gnuplot = flag(a.gnuplot);
            }
            Command::Region(a) => {
                cfg.gamma = a.gamma;
                cfg.c = a.c;
                cfg.grid = a.grid;
                cfg.gnuplot = flag(a.gnuplot);
            }
            Command::Certify(a) => {
                a.system.apply(&mut cfg);
                cfg.c = a.c;
                cfg.lambda_ratio = a.lambda_ratio;
                cfg.alpha3 = a.alpha3;
                cfg.samples = a.samples;
                cfg.radius = a.radius;
            }
            Command::Fit(a) => {
                a.system.apply(&mut cfg);
                a.ensemble.apply(&mut cfg);
                cfg.input = a.input;
                cfg.burn_in = a.burn_in;
                cfg.certificate = a.certificate;
                cfg.m = a.m;
                cfg.zeta = a.zeta;
                cfg.c = a.c;
            }
        }
        cfg
    }
}

/// What a command wrote.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub command: &'static str,
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub headline: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Result<RunSummary>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::config("arguments", e.to_string()))?;
    execute(cli)
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{}", summary.headline);
            for p in &summary.outputs {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<RunSummary> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = cli.command.name();
    let mut overrides = cli.command.into_overrides();
    overrides.seed = cli.seed;
    overrides.out_dir = cli.out_dir;
    overrides.threads = cli.threads;
    let cfg = overrides.or(file);

    let threads = resolve_threads(cfg.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let out = Output::new(
        cfg.out_dir
            .clone()
            .unwrap_or_else(|| DEFAULT_OUT_DIR.into()),
        name,
    );
    pool.install(|| match name {
        "simulate" => cmd_simulate(&cfg, out),
        "region" => cmd_region(&cfg, out),
        "certify" => cmd_certify(&cfg, out),
        _ => cmd_fit(&cfg, out),
    })
}

fn resolve_threads(from_cfg: Option<usize>) -> Result<usize> {
    if let Some(n) = from_cfg {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map_err(|_| Error::config(THREADS_ENV, format!("expected a thread count, got `{s}`"))),
        _ => Ok(0),
    }
}

struct Output {
    dir: PathBuf,
    command: &'static str,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: PathBuf, command: &'static str) -> Self {
        Self {
            dir,
            command,
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|source| Error::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::config(name, format!("serialisation failed: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish<T: Serialize>(
        mut self,
        seed: u64,
        resolved: &T,
        notes: Vec<String>,
        headline: String,
    ) -> Result<RunSummary> {
        #[derive(Serialize)]
        struct Manifest<'a, T> {
            tool: &'static str,
            version: String,
            command: &'static str,
            seed: u64,
            resolved: &'a T,
            outputs: Vec<String>,
            notes: Vec<String>,
        }
        let outputs = self
            .written
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect();
        let manifest = Manifest {
            tool: "mjds",
            version: version_string(),
            command: self.command,
            seed,
            resolved,
            outputs,
            notes,
        };
        self.write_json(&format!("{}-manifest.json", self.command), &manifest)?;
        Ok(RunSummary {
            command: self.command,
            out_dir: self.dir,
            outputs: self.written,
            headline,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
struct ResolvedSystem {
    system: String,
    gamma: f64,
    delta: usize,
    alphabet: Vec<Vec<usize>>,
    tpm: Vec<Vec<f64>>,
}

impl ResolvedSystem {
    fn is_standard_sat(&self) -> bool {
        self.delta == 2 && self.alphabet == [vec![0], vec![2]]
    }

    /// `(p, q)` when the chain is two-state.
    fn p_q(&self) -> Option<(f64, f64)> {
        (self.tpm.len() == 2).then(|| (self.tpm[0][0], self.tpm[1][1]))
    }
}

fn resolve_system(cfg: &RunConfig) -> Result<(JumpSystem, ResolvedSystem)> {
    let name = cfg
        .system
        .clone()
        .or_else(|| cfg.model.as_ref().map(|m| m.system.clone()))
        .unwrap_or_else(|| "sat".into());
    if name != "sat" {
        return Err(Error::config(
            "system",
            format!("unknown built-in system `{name}` (known: sat)"),
        ));
    }
    let gamma = cfg
        .gamma
        .or_else(|| cfg.model.as_ref().map(|m| m.gamma))
        .unwrap_or(DEFAULT_GAMMA);
    let (delta, alphabet) = match &cfg.model {
        Some(m) => (m.delta, m.alphabet.clone()),
        None => (2, vec![vec![0], vec![2]]),
    };
    let model = sat_model_with(
        gamma,
        delta,
        alphabet.iter().cloned().map(DelayVector::new).collect(),
    )?;
    let tpm = match (&cfg.tpm, cfg.p, cfg.q) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(Error::config(
                "tpm",
                "give either `tpm` or `p`/`q`, not both",
            ));
        }
        (Some(rows), None, None) => Tpm::new(rows.clone())?,
        (None, p, q) => {
            if alphabet.len() != 2 {
                return Err(Error::config(
                    "tpm",
                    format!("a {}-mode alphabet needs an explicit `tpm`", alphabet.len()),
                ));
            }
            Tpm::two_state(p.unwrap_or(DEFAULT_P), q.unwrap_or(DEFAULT_Q))?
        }
    };
    let resolved = ResolvedSystem {
        system: name,
        gamma,
        delta,
        alphabet,
        tpm: tpm.rows().to_vec(),
    };
    let chain = MarkovDelayChain::new(tpm, DelayBijection::new(model.alphabet().to_vec())?)?;
    Ok((JumpSystem::new(model, chain)?, resolved))
}

fn resolve_xi0(cfg: &RunConfig, delta: usize) -> Result<(History, Vec<Vec<f64>>)> {
    let xi0 = match cfg.xi0.clone().unwrap_or(Xi0Config::Constant(1.0)) {
        Xi0Config::Constant(v) => History::constant(delta, &[v]),
        Xi0Config::Slots(slots) => History::from_slots(&slots)?,
    };
    if xi0.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(Error::config("xi0", "initial history must be finite"));
    }
    let slots = xi0.slots().map(<[f64]>::to_vec).collect();
    Ok((xi0, slots))
}

#[derive(Serialize)]
struct SimulateResolved {
    system: ResolvedSystem,
    xi0: Vec<Vec<f64>>,
    horizon: usize,
    runs: usize,
    initial_mode: InitialMode,
    trajectories: usize,
    gnuplot: bool,
}

fn initial_mode_note(mode: InitialMode) -> Vec<String> {
    match mode {
        InitialMode::Uniform => vec!["initial mode drawn uniformly over all modes".into()],
        InitialMode::Fixed(m) => vec![format!("initial mode fixed to {m}")],
    }
}

fn cmd_simulate(cfg: &RunConfig, mut out: Output) -> Result<RunSummary> {
    let seed = cfg.seed.unwrap_or(0);
    let (sys, system) = resolve_system(cfg)?;
    let (xi0, xi0_slots) = resolve_xi0(cfg, system.delta)?;
    let runs = cfg.runs.unwrap_or(DEFAULT_RUNS);
    if runs == 0 {
        return Err(Error::config("runs", "number of runs must be at least 1"));
    }
    let resolved = SimulateResolved {
        horizon: cfg.horizon.unwrap_or(DEFAULT_HORIZON),
        runs,
        initial_mode: cfg.initial_mode.unwrap_or_default(),
        trajectories: cfg.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
        gnuplot: cfg.gnuplot.unwrap_or(false),
        system,
        xi0: xi0_slots,
    };
    if resolved.trajectories > resolved.runs {
        return Err(Error::config(
            "trajectories",
            format!(
                "cannot write {} trajectories from {} runs",
                resolved.trajectories, resolved.runs
            ),
        ));
    }
    let ens = simulate_ensemble_with(
        &sys,
        &xi0,
        resolved.initial_mode,
        resolved.horizon,
        resolved.runs,
        seed,
        &EnsembleOptions {
            retain_trajectories: resolved.trajectories,
        },
    )?;
    out.write("ensemble.csv", &ens.stats.to_csv())?;
    for (r, t) in ens.trajectories.iter().enumerate() {
        out.write(&format!("trajectory_{r}.csv"), &t.to_csv())?;
    }
    if resolved.gnuplot {
        out.write("ensemble.gp", ENSEMBLE_GNUPLOT)?;
    }
    let headline = format!(
        "simulated {} runs to k = {}; mean |x|^2 at k = {} is {:e}",
        resolved.runs, resolved.horizon, resolved.horizon, ens.stats.mean_sq[resolved.horizon]
    );
    out.finish(
        seed,
        &resolved,
        initial_mode_note(resolved.initial_mode),
        headline,
    )
}

const ENSEMBLE_GNUPLOT: &str = "\
set datafile separator ','
set logscale y
set xlabel 'k'
set ylabel 'E|x(k)|^2'
plot 'ensemble.csv' using 1:2 skip 1 with lines title 'mean', \\
     '' using 1:($2+$6) skip 1 with lines dt 2 title '99% CI', \\
     '' using 1:($2-$6 > 0 ? $2-$6 : 1/0) skip 1 with lines dt 2 notitle
";

const REGION_GNUPLOT: &str = "\
set datafile separator ','
set xlabel '1-p'
set ylabel 'q'
plot 'region.csv' using (1-$1):($3 == 1 ? $2 : 1/0) skip 1 with points pt 5 ps 0.3 title 'feasible', \\
     'frontier.csv' using 1:2 skip 1 with lines lw 2 title 'max q'
";

#[derive(Serialize)]
struct RegionResolved {
    gamma: f64,
    c: CParam,
    c_value: f64,
    grid: usize,
}

fn cmd_region(cfg: &RunConfig, mut out: Output) -> Result<RunSummary> {
    let resolved = RegionResolved {
        gamma: cfg.gamma.unwrap_or(DEFAULT_GAMMA),
        c: cfg.c.unwrap_or_default(),
        c_value: cfg.c.unwrap_or_default().value(),
        grid: cfg.grid.unwrap_or(DEFAULT_GRID),
    };
    crate::sat_example::check_gamma(resolved.gamma)?;
    if !(resolved.c_value > 1.0) || !resolved.c_value.is_finite() {
        return Err(Error::config("c", "must be finite and > 1"));
    }
    if resolved.grid == 0 {
        return Err(Error::config("grid", "grid size must be at least 1"));
    }
    let axis = grid_midpoints(resolved.grid);
    let region = feasible_region(resolved.gamma, resolved.c_value, &axis, &axis);
    out.write("region.csv", &region.to_csv())?;
    out.write("frontier.csv", &region.frontier_csv())?;
    if cfg.gnuplot.unwrap_or(false) {
        out.write("region.gp", REGION_GNUPLOT)?;
    }
    let headline = format!(
        "{} of {} cells feasible",
        region.feasible_count(),
        resolved.grid * resolved.grid
    );
    let notes = if resolved.c_value > std::f64::consts::E {
        vec!["c exceeds e, outside the range the candidate was stated for".into()]
    } else {
        Vec::new()
    };
    out.finish(cfg.seed.unwrap_or(0), &resolved, notes, headline)
}

fn sat_spec(cfg: &RunConfig, system: &ResolvedSystem) -> Result<SatSystemSpec> {
    if !system.is_standard_sat() {
        return Err(Error::config(
            "model",
            "certification needs the built-in delay alphabet [[0],[2]] with delta 2",
        ));
    }
    let (p, q) = system.p_q().expect("two-mode alphabet");
    let mut spec = SatSystemSpec::new(system.gamma, p, q).with_c(cfg.c.unwrap_or_default());
    spec.lambda_ratio = cfg.lambda_ratio;
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct CertifyResolved {
    spec: SatSystemSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    declared_alpha3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

fn cmd_certify(cfg: &RunConfig, mut out: Output) -> Result<RunSummary> {
    let seed = cfg.seed.unwrap_or(0);
    let (_, system) = resolve_system(cfg)?;
    let spec = sat_spec(cfg, &system)?;
    let (report, resolved) = match cfg.alpha3 {
        None => (
            certify_sat(&spec)?,
            CertifyResolved {
                spec,
                declared_alpha3: None,
                samples: None,
                radius: None,
            },
        ),
        Some(alpha3) => {
            let opts = SampledOptions {
                alpha3,
                samples: cfg.samples.unwrap_or(DEFAULT_SAMPLES),
                radius: cfg.radius.unwrap_or(DEFAULT_RADIUS),
                seed,
            };
            (
                certify_sat_sampled(&spec, &opts)?,
                CertifyResolved {
                    spec,
                    declared_alpha3: Some(alpha3),
                    samples: Some(opts.samples),
                    radius: Some(opts.radius),
                },
            )
        }
    };
    out.write_json("certificate.json", &report)?;
    let headline = match report.certificate() {
        Some(c) => format!("certified: M = {:e}, zeta = {}", c.m, c.zeta),
        None => format!("no certificate ({})", report.caveat),
    };
    out.finish(seed, &resolved, Vec::new(), headline)
}

fn read_ensemble_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    const HEADER: &str = "k,mean_sq,min_norm,max_norm,std,ci99_halfwidth";
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let origin = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => {
            return Err(Error::config(
                format!("{origin}:1"),
                format!("expected header `{HEADER}`"),
            ))
        }
    }
    let (mut values, mut ci) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::config(format!("{origin}:{}", i + 1), msg);
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", cols.len())));
        }
        let k: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad step `{}`", cols[0])))?;
        if k != values.len() {
            return Err(bad(format!("expected step {}, found {k}", values.len())));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number `{s}`")))
        };
        values.push(num(cols[1])?);
        ci.push(num(cols[5])?);
    }
    if values.is_empty() {
        return Err(Error::config(origin, "no data rows"));
    }
    Ok((values, ci))
}

/// Reads `M` and `zeta` from a certificate report or a bare certificate.
fn read_certificate(path: &Path) -> Result<Option<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let origin = path.display().to_string();
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        Error::config(
            format!("{origin}:{}:{}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let cert = if v.get("chain").is_some() {
        &v["chain"]["certificate"]
    } else if v.get("certificate").is_some() {
        &v["certificate"]
    } else {
        &v
    };
    if cert.is_null() {
        return Ok(None);
    }
    match (cert["M"].as_f64(), cert["zeta"].as_f64()) {
        (Some(m), Some(z)) => Ok(Some((m, z))),
        _ => Err(Error::config(
            origin,
            "certificate lacks numeric `M` and `zeta`",
        )),
    }
}

#[derive(Serialize)]
struct FitResolved {
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulateResolved>,
    xi0_sup_norm: f64,
    burn_in: usize,
    envelope_source: String,
}

#[derive(Serialize)]
struct EmssReport {
    source: String,
    #[serde(flatten)]
    check: Option<EmssCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

fn cmd_fit(cfg: &RunConfig, mut out: Output) -> Result<RunSummary> {
    let seed = cfg.seed.unwrap_or(0);
    let (sys, system) = resolve_system(cfg)?;
    let (xi0, xi0_slots) = resolve_xi0(cfg, system.delta)?;
    let (curve, simulation) = match &cfg.input {
        Some(path) => {
            let (values, ci) = read_ensemble_csv(path)?;
            let curve = MomentCurve {
                values,
                ci_halfwidths: ci,
                n_runs: cfg.runs.unwrap_or(0),
                seed,
                xi0_sup_norm: xi0.sup_norm(),
            };
            (curve, None)
        }
        None => {
            let sim = SimulateResolved {
                horizon: cfg.horizon.unwrap_or(DEFAULT_HORIZON),
                runs: cfg.runs.unwrap_or(DEFAULT_RUNS),
                initial_mode: cfg.initial_mode.unwrap_or_default(),
                trajectories: 0,
                gnuplot: false,
                system: system.clone(),
                xi0: xi0_slots,
            };
            let stats = crate::jump_system::simulate_ensemble(
                &sys,
                &xi0,
                sim.initial_mode,
                sim.horizon,
                sim.runs,
                seed,
            )?;
            (stats.moment_curve(), Some(sim))
        }
    };
    let burn_in = cfg
        .burn_in
        .unwrap_or_else(|| default_burn_in(curve.horizon()));
    let fit = fit_decay(&curve, Some(burn_in))?;

    let (source, envelope) = match (cfg.m, cfg.zeta, &cfg.certificate) {
        (Some(m), Some(z), _) => ("flags".to_string(), Some((m, z))),
        (Some(_), None, _) | (None, Some(_), _) => {
            return Err(Error::config("M", "`M` and `zeta` must be given together"));
        }
        (None, None, Some(path)) => (path.display().to_string(), read_certificate(path)?),
        (None, None, None) => match sat_spec(cfg, &system) {
            Ok(spec) => (
                "certify".to_string(),
                certify_sat(&spec)?.certificate().map(|c| (c.m, c.zeta)),
            ),
            Err(_) => ("none".to_string(), None),
        },
    };
    let emss = match envelope {
        Some((m, z)) => EmssReport {
            source: source.clone(),
            check: Some(emss_check(&curve, m, z, curve.xi0_sup_norm)?),
            skipped: None,
        },
        None => EmssReport {
            source: source.clone(),
            check: None,
            skipped: Some("no certificate available to check against".into()),
        },
    };

    out.write_json("fit.json", &fit)?;
    out.write_json("emss_check.json", &emss)?;
    let headline = format!(
        "zeta_hat = {}, M_hat = {:e}, r^2 = {}; envelope check: {}",
        fit.zeta_hat,
        fit.m_hat,
        fit.r_squared,
        match &emss.check {
            Some(c) if c.passed => "passed",
            Some(_) => "failed",
            None => "skipped",
        }
    );
    let resolved = FitResolved {
        input: cfg.input.clone(),
        simulation,
        xi0_sup_norm: curve.xi0_sup_norm,
        burn_in,
        envelope_source: source,
    };
    out.finish(seed, &resolved, Vec::new(), headline)
}
