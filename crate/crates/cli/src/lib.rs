//! Command-line front end: reproducible CSV/JSON datasets and the
//! validation suite.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use loschmidt::analysis::{error_e, qsl_time};
use loschmidt::echo::{amplitude, dynamical_free_energy_sweep, impurity_ratio};
use loschmidt::planar::{planar_free_energy, trace_contour, CriticalData, TraceOutcome};
use loschmidt::{Boundary, ChainSpec, TimeArgument, TimeKind};

pub mod table;
pub mod validate;

use table::Table;

#[derive(Parser, Debug, Clone)]
#[command(name = "loschmidt", version, about = "Loschmidt echo datasets for the XY chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Number of flipped spins N.
    #[arg(long = "n", global = true, default_value_t = 10)]
    pub n: usize,
    /// L/N for a finite chain, as a decimal or a ratio like 5/2; infinite chain if absent.
    #[arg(long, global = true, value_parser = parse_ell)]
    pub ell: Option<f64>,
    /// Scaled time grid min:max:steps (endpoints included), or a single value.
    #[arg(long, global = true, value_parser = parse_range)]
    pub tau: Option<Range>,
    /// Scaled inverse-temperature grid, same syntax as --tau.
    #[arg(long, global = true, value_parser = parse_range)]
    pub gamma: Option<Range>,
    #[arg(long, global = true, value_enum, default_value_t = BoundaryArg::Pbc)]
    pub boundary: BoundaryArg,
    #[arg(long, global = true, value_enum, default_value_t = TimeArg::Real)]
    pub time: TimeArg,
    /// Output format; `critical` and `validate` default to json, the rest to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file, written atomically; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = parse_workers)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Exact amplitude over a time grid.
    Amplitude,
    /// Dynamical free energy f = -ln(echo)/(2 N^2).
    Dfe,
    /// Support contour of the first-phase density.
    Contour {
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// Critical constants of the planar limit.
    Critical,
    /// Speed-limit times for N = 3, 5, ..., 2 kmax + 1.
    Qsl {
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
    /// Finite-size error ln(echo_L / echo_inf).
    Errors,
    /// Impurity insertions <chi_{A_p}> against the planar prediction.
    Impurity {
        #[arg(long, default_value_t = 2)]
        pmax: usize,
    },
    /// Thermal free energy and its derivative against the planar formula.
    Thermal,
    /// Run the acceptance checks.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Amplitude => "amplitude",
            Command::Dfe => "dfe",
            Command::Contour { .. } => "contour",
            Command::Critical => "critical",
            Command::Qsl { .. } => "qsl",
            Command::Errors => "errors",
            Command::Impurity { .. } => "impurity",
            Command::Thermal => "thermal",
            Command::Validate => "validate",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryArg {
    Pbc,
    Abc,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Pbc => Boundary::Pbc,
            BoundaryArg::Abc => Boundary::Abc,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeArg {
    Real,
    Imaginary,
}

impl From<TimeArg> for TimeKind {
    fn from(t: TimeArg) -> Self {
        match t {
            TimeArg::Real => TimeKind::Real,
            TimeArg::Imaginary => TimeKind::Imaginary,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Inclusive grid of `steps + 1` evenly spaced points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    /// `0` for a single point.
    pub steps: usize,
}

impl Range {
    pub fn point(x: f64) -> Self {
        Self { min: x, max: x, steps: 0 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 0 {
            return vec![self.min];
        }
        let s = self.steps as f64;
        (0..=self.steps).map(|i| (self.min * (s - i as f64) + self.max * i as f64) / s).collect()
    }

    fn describe(&self) -> String {
        if self.steps == 0 { format!("{:?}", self.min) } else { format!("{:?}:{:?}:{}", self.min, self.max, self.steps) }
    }
}

fn parse_range(s: &str) -> Result<Range, String> {
    let num = |p: &str| p.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("'{p}' is not a finite number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(Range::point(num(x)?)),
        [a, b, n] => {
            let (min, max) = (num(a)?, num(b)?);
            let steps: usize = n.trim().parse().map_err(|_| format!("'{n}' is not a step count"))?;
            if steps < 1 {
                return Err("steps must be at least 1".into());
            }
            if min > max {
                return Err(format!("min {min} exceeds max {max}"));
            }
            Ok(Range { min, max, steps })
        }
        _ => Err(format!("expected min:max:steps or a single value, got '{s}'")),
    }
}

fn parse_ell(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
            p / q
        }
        None => s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?,
    };
    if !(v.is_finite() && v >= 1.0) {
        return Err(format!("ell = {s} must be at least 1"));
    }
    Ok(v)
}

fn parse_workers(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("'{s}' is not a positive integer")),
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Usage(String),
    /// Some acceptance checks failed; the report was still written.
    Validation(String),
    Domain(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Domain(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Domain(m) => write!(f, "{m}"),
            Failure::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

fn domain(e: loschmidt::Error, context: impl fmt::Display) -> Failure {
    match e {
        loschmidt::Error::Domain { .. } => Failure::Domain(format!("{e} ({context})")),
        _ => Failure::Domain(format!("loschmidt: {e} ({context})")),
    }
}

/// A parsed, checked invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n_flipped: usize,
    pub ell: Option<f64>,
    pub tau: Range,
    pub gamma: Range,
    pub boundary: Boundary,
    pub time_kind: TimeKind,
    pub format: Format,
    pub output_path: Option<PathBuf>,
    pub workers: usize,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let c = &cli.common;
        let default_tau = match cli.command {
            Command::Contour { .. } | Command::Impurity { .. } => Range::point(0.2),
            Command::Errors => Range { min: 0.05, max: 0.3, steps: 25 },
            _ => Range { min: 0.0, max: 0.5, steps: 50 },
        };
        if c.n == 0 {
            return Err(Failure::Usage("--n must be positive".into()));
        }
        match cli.command {
            Command::Contour { points } if points < 4 => {
                return Err(Failure::Usage(format!("--points {points}: need at least 4")));
            }
            Command::Qsl { kmax: 0 } => return Err(Failure::Usage("--kmax must be positive".into())),
            Command::Impurity { .. } if c.boundary == BoundaryArg::Abc => {
                return Err(Failure::Usage("--boundary abc: impurity insertions are periodic-chain only".into()));
            }
            _ => {}
        }
        if let Some(ell) = c.ell {
            let l = ell * c.n as f64;
            if (l - l.round()).abs() > 1e-9 {
                return Err(Failure::Usage(format!("--ell {ell}: ell * N = {l} is not an integer")));
            }
        }
        let format = c.format.unwrap_or(match cli.command {
            Command::Critical | Command::Validate => Format::Json,
            _ => Format::Csv,
        });
        Ok(Self {
            command: cli.command.clone(),
            n_flipped: c.n,
            ell: c.ell,
            tau: c.tau.unwrap_or(default_tau),
            gamma: c.gamma.unwrap_or(Range { min: 0.05, max: 1.5, steps: 29 }),
            boundary: c.boundary.into(),
            time_kind: c.time.into(),
            format,
            output_path: c.out.clone(),
            workers: c.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |k| k.get())),
        })
    }

    fn chain(&self) -> Result<ChainSpec, Failure> {
        let spec = match self.ell {
            Some(ell) => ChainSpec::with_ell(self.n_flipped, ell, self.boundary),
            None => ChainSpec::infinite(self.n_flipped, self.boundary),
        };
        spec.map_err(|e| Failure::Usage(e.to_string()))
    }

    /// Config echo for the JSON `meta` block. Worker count and output path
    /// are left out so the dataset does not depend on them.
    fn meta(&self) -> Map<String, Value> {
        let boundary = match self.boundary {
            Boundary::Pbc => "pbc",
            Boundary::Abc => "abc",
        };
        let time = match self.time_kind {
            TimeKind::Real => "real",
            TimeKind::Imaginary => "imaginary",
        };
        let mut config = json!({
            "n": self.n_flipped,
            "ell": self.ell,
            "tau": self.tau.describe(),
            "gamma": self.gamma.describe(),
            "boundary": boundary,
            "time": time,
        });
        match self.command {
            Command::Contour { points } => config["points"] = json!(points),
            Command::Qsl { kmax } => config["kmax"] = json!(kmax),
            Command::Impurity { pmax } => config["pmax"] = json!(pmax),
            _ => {}
        }
        let mut m = Map::new();
        m.insert("artifact".into(), json!("loschmidt"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command.name()));
        m.insert("config".into(), config);
        m
    }
}

/// Maps `f` over `xs` on the pool, keeping input order.
fn par_map<T: Sync, R: Send>(xs: &[T], f: impl Fn(&T) -> Result<R, Failure> + Sync + Send) -> Result<Vec<R>, Failure> {
    xs.par_iter().map(f).collect()
}

fn amplitude_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let spec = cfg.chain()?;
    let kind = cfg.time_kind;
    let cols: &[&'static str] = match kind {
        TimeKind::Real => &["tau", "t", "log_abs", "phase", "f", "zero"],
        TimeKind::Imaginary => &["gamma", "beta", "log_abs", "phase", "f", "zero"],
    };
    let grid = match kind {
        TimeKind::Real => cfg.tau.values(),
        TimeKind::Imaginary => cfg.gamma.values(),
    };
    let rows = par_map(&grid, |&x| {
        let r = amplitude(&spec, TimeArgument::scaled(kind, x, spec.n_flipped)).map_err(|e| domain(e, format!("N = {}, x = {x}", spec.n_flipped)))?;
        Ok(vec![x.into(), r.time.value.into(), r.amplitude.log_magnitude.into(), r.amplitude.phase.into(), r.free_energy.into(), r.is_zero().into()])
    })?;
    let mut t = Table::new(cols);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn dfe_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let spec = cfg.chain()?;
    let rows = par_map(&cfg.tau.values(), |&tau| {
        let r = dynamical_free_energy_sweep(&spec, &[tau]).map_err(|e| domain(e, format!("N = {}, tau = {tau}", spec.n_flipped)))?;
        let r = &r[0];
        Ok(vec![r.tau.into(), r.t.into(), r.echo_log.into(), r.free_energy.into(), r.amplitude.phase.into()])
    })?;
    let mut t = Table::new(&["tau", "t", "log_echo", "f", "phase"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn contour_table(cfg: &RunConfig, points: usize) -> Result<Table, Failure> {
    let b = cfg.boundary;
    let taus = cfg.tau.values();
    let traced = par_map(&taus, |&tau| trace_contour(b, tau, points).map_err(|e| domain(e, format!("tau = {tau}"))))?;
    let mut t = Table::new(&["tau", "index", "angle", "re", "im", "residual"]);
    for (tau, outcome) in taus.iter().zip(traced) {
        match outcome {
            TraceOutcome::Traced(c) => {
                for (k, z) in c.points.iter().enumerate() {
                    t.push(vec![(*tau).into(), k.into(), c.angles[k].into(), z.re.into(), z.im.into(), c.level_residuals[k].into()]);
                }
            }
            TraceOutcome::Pinched { angle, .. } => t.notes.push(format!("contour pinched at tau = {tau:?} (angle {angle:?})")),
        }
    }
    Ok(t)
}

fn critical_table() -> Table {
    let c = CriticalData::compute();
    let mut t = Table::new(&["tau_cr", "ell_star", "z0_imag"]);
    t.push(vec![c.tau_cr.into(), c.ell_star.into(), c.z0_imag.into()]);
    t
}

fn qsl_table(kmax: usize) -> Result<Table, Failure> {
    let ks: Vec<usize> = (1..=kmax).collect();
    let recs = par_map(&ks, |&k| qsl_time(2 * k + 1).map_err(|e| domain(e, format!("N = {}", 2 * k + 1))))?;
    let mut t = Table::new(&["n", "tau_qsl", "t_zero"]);
    for r in recs {
        t.push(vec![r.n_flipped.into(), r.tau_qsl.into(), r.t_zero.into()]);
    }
    Ok(t)
}

fn errors_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let ell = cfg.ell.unwrap_or(3.0);
    let (n, b, kind) = (cfg.n_flipped, cfg.boundary, cfg.time_kind);
    let grid = match kind {
        TimeKind::Real => cfg.tau.values(),
        TimeKind::Imaginary => cfg.gamma.values(),
    };
    let rows = par_map(&grid, |&x| {
        let e = error_e(n, ell, b, x, kind).map_err(|e| domain(e, format!("N = {n}, ell = {ell}, x = {x}")))?;
        Ok(vec![x.into(), ell.into(), e.into()])
    })?;
    let mut t = Table::new(match kind {
        TimeKind::Real => &["tau", "ell", "error_e"],
        TimeKind::Imaginary => &["gamma", "ell", "error_e"],
    });
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// `(-i t)^p / p!`, the large-N value of `<chi_{A_p}>`.
pub fn impurity_planar(t: f64, p: usize) -> Complex64 {
    let fact: f64 = (1..=p).map(|k| k as f64).product();
    Complex64::new(0.0, -t).powi(p as i32) / fact
}

fn impurity_table(cfg: &RunConfig, pmax: usize) -> Result<Table, Failure> {
    let n = cfg.n_flipped;
    let jobs: Vec<(f64, usize)> = cfg.tau.values().into_iter().flat_map(|tau| (0..=pmax).map(move |p| (tau, p))).collect();
    let rows = par_map(&jobs, |&(tau, p)| {
        let t = n as f64 * tau;
        let r = impurity_ratio(n, t, p).map_err(|e| domain(e, format!("N = {n}, t = {t}, p = {p}")))?;
        let planar = impurity_planar(t, p);
        Ok(vec![tau.into(), t.into(), p.into(), r.re.into(), r.im.into(), planar.re.into(), planar.im.into()])
    })?;
    let mut t = Table::new(&["tau", "t", "p", "re", "im", "planar_re", "planar_im"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Central-difference step in `gamma` for thermal derivatives.
pub const THERMAL_STEP: f64 = 1e-4;

/// Thermal free energy `ln Z / N^2` at `gamma` and its central-difference
/// derivative.
pub fn thermal_point(spec: &ChainSpec, gamma: f64) -> Result<(f64, f64), loschmidt::Error> {
    let n = spec.n_flipped;
    let f = |g: f64| amplitude(spec, TimeArgument::scaled(TimeKind::Imaginary, g, n)).map(|r| r.free_energy);
    let h = THERMAL_STEP;
    Ok((f(gamma)?, (f(gamma + h)? - f(gamma - h)?) / (2.0 * h)))
}

fn thermal_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let spec = cfg.chain()?;
    let n = spec.n_flipped;
    let rows = par_map(&cfg.gamma.values(), |&g| {
        let ctx = || format!("N = {n}, gamma = {g}");
        let (f, df) = thermal_point(&spec, g).map_err(|e| domain(e, ctx()))?;
        let (_, planar) = planar_free_energy(spec.boundary, TimeKind::Imaginary, g).map_err(|e| domain(e, ctx()))?;
        Ok(vec![g.into(), (n as f64 * g).into(), f.into(), df.into(), planar.into()])
    })?;
    let mut t = Table::new(&["gamma", "beta", "free_energy", "derivative", "planar_derivative"]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Builds the dataset for `cfg`. For `validate` the report text is returned
/// alongside, with the overall verdict.
pub fn build(cfg: &RunConfig) -> Result<(Table, Option<validate::Report>), Failure> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| Failure::Io(e.to_string()))?;
    pool.install(|| {
        Ok(match cfg.command {
            Command::Amplitude => (amplitude_table(cfg)?, None),
            Command::Dfe => (dfe_table(cfg)?, None),
            Command::Contour { points } => (contour_table(cfg, points)?, None),
            Command::Critical => (critical_table(), None),
            Command::Qsl { kmax } => (qsl_table(kmax)?, None),
            Command::Errors => (errors_table(cfg)?, None),
            Command::Impurity { pmax } => (impurity_table(cfg, pmax)?, None),
            Command::Thermal => (thermal_table(cfg)?, None),
            Command::Validate => {
                let report = validate::run_all();
                (report.table(), Some(report))
            }
        })
    })
}

pub fn render(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>, Failure> {
    match cfg.format {
        Format::Csv => table.to_csv().map_err(|e| Failure::Io(e.to_string())),
        Format::Json => table.to_json(cfg.meta()).map_err(|e| Failure::Io(e.to_string())),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = RunConfig::from_cli(cli)?;
    let start = Instant::now();
    let (table, report) = build(&cfg)?;
    let bytes = render(&cfg, &table)?;
    match &cfg.output_path {
        Some(p) => write_atomic(p, &bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(&bytes).map_err(|e| Failure::Io(e.to_string()))?,
    }
    if let Some(r) = &report {
        eprint!("{}", r.text());
    }
    let dest = cfg.output_path.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
    eprintln!("loschmidt {}: {} rows in {:.1} ms -> {dest}", cfg.command.name(), table.rows.len(), start.elapsed().as_secs_f64() * 1e3);
    for note in &table.notes {
        eprintln!("note: {note}");
    }
    match report {
        Some(r) if !r.ok() => Err(Failure::Validation(r.unexpected_failures().join(", "))),
        _ => Ok(()),
    }
}
