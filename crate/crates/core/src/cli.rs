//! Command-line front end.
//!
//! Exit codes: `0` success, `2` a hypothesis on the coefficients fails
//! (H2–H6, or no positive principal eigenvalue), `1` any other error including
//! usage errors. Data goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cell::{build_effective_model, cell_pencil, principal_cell_eig, AeffWeighting, EffectiveConfig, EffectiveModel};
use crate::eigen::dense::{dense_indefinite, DenseCellOracle};
use crate::eigen::{principal_positive, EigOptions};
use crate::error::{Error, Result};
use crate::expr::{check_hypotheses, CoefficientProblem};
use crate::fem::{CellGrid, SparseSym};
use crate::finescale::{assemble_rod, positive_spectrum, sweep, NormalizationRule, ResolutionPolicy, SweepConfig};
use crate::oscillator::{nu_closed_form, sign_changes, solve_truncated, OscillatorSpec};

/// Environment variable that sets the worker count.
pub const WORKERS_ENV: &str = "THINSPEC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "thinspec", version, about = "Homogenized spectra of indefinite-weight problems on thin rods")]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: THINSPEC_WORKERS, then logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct ProblemArg {
    /// Problem TOML file with a `[problem]` table, or `builtin:NAME`.
    #[arg(long)]
    problem: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check hypotheses H2–H5 on sampled coefficients.
    Check {
        #[command(flatten)]
        problem: ProblemArg,
        /// Quadrature cells per direction.
        #[arg(long, default_value_t = 64)]
        quad: usize,
    },
    /// Principal cell eigenpair at one x1.
    Cell {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long)]
        grid: Option<String>,
        /// Write the cell matrices in Matrix Market format to this directory.
        #[arg(long)]
        dump_mm: Option<PathBuf>,
    },
    /// Effective model at x1 = 0.
    Effective {
        #[command(flatten)]
        problem: ProblemArg,
        #[arg(long)]
        grid: Option<String>,
        /// Use a instead of a Psi^2 in the effective diffusion.
        #[arg(long)]
        aeff_unweighted: bool,
    },
    /// Limit oscillator eigenvalues from an effective model JSON.
    Oscillator {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Add the truncated-domain finite element values.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 2000)]
        elements: usize,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Rod solves over an eps list with a convergence report.
    Sweep {
        #[command(flatten)]
        problem: ProblemArg,
        /// Comma-separated, each `1/N` or a decimal.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        jmax: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        per_period: Option<usize>,
        #[arg(long)]
        m2: Option<usize>,
        #[arg(long)]
        aeff_unweighted: bool,
        /// Skip the negative-branch probe.
        #[arg(long)]
        no_negative_probe: bool,
    },
    /// Sparse solvers against the dense reference on a small instance.
    Oracle {
        #[command(flatten)]
        problem: ProblemArg,
        /// Cell pencil at this x1 (default), or a rod with `--eps`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x1: f64,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        per_period: Option<usize>,
        #[arg(long)]
        m2: Option<usize>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        dump_mm: Option<PathBuf>,
    },
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Problem file, relative to the config file.
    pub problem: Option<String>,
    /// `N1xN2`.
    pub cell_grid: Option<String>,
    pub per_period: Option<usize>,
    pub m2: Option<usize>,
    pub eps: Option<Vec<String>>,
    pub j_max: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub aeff_unweighted: Option<bool>,
    pub numeric: Option<bool>,
    pub dump_mm: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(p) = &cfg.problem {
            if !p.starts_with("builtin:") {
                let resolved = path.parent().unwrap_or(Path::new(".")).join(p);
                if !resolved.exists() {
                    return Err(Error::Config {
                        path: path.to_path_buf(),
                        message: format!("problem file {} does not exist", resolved.display()),
                    });
                }
                cfg.problem = Some(resolved.to_string_lossy().into_owned());
            }
        }
        if let Some(list) = &cfg.eps {
            for e in list {
                parse_eps(e).map_err(|err| Error::Config {
                    path: path.to_path_buf(),
                    message: err.to_string(),
                })?;
            }
        }
        Ok(cfg)
    }
}

/// `1/N` or a decimal.
pub fn parse_eps(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Precondition(format!("cannot read eps value `{s}`"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `builtin:NAME` or a TOML file.
pub fn load_problem(spec: &str) -> Result<CoefficientProblem> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return CoefficientProblem::builtin(name).ok_or_else(|| {
            Error::Precondition(format!(
                "unknown builtin `{name}`; available: {}",
                CoefficientProblem::builtin_names().join(", ")
            ))
        });
    }
    CoefficientProblem::from_toml_file(Path::new(spec))
}

struct Context {
    cfg: RunConfig,
}

impl Context {
    fn problem(&self, arg: &ProblemArg) -> Result<CoefficientProblem> {
        let spec = arg
            .problem
            .clone()
            .or_else(|| self.cfg.problem.clone())
            .ok_or_else(|| Error::Precondition("no problem given (use --problem or a config file)".into()))?;
        load_problem(&spec)
    }

    fn grid(&self, flag: &Option<String>, default: CellGrid) -> Result<CellGrid> {
        match flag.as_ref().or(self.cfg.cell_grid.as_ref()) {
            Some(s) => CellGrid::parse(s),
            None => Ok(default),
        }
    }

    fn policy(&self, per_period: Option<usize>, m2: Option<usize>) -> ResolutionPolicy {
        let p = per_period.or(self.cfg.per_period).unwrap_or(ResolutionPolicy::default().per_period);
        let mut policy = ResolutionPolicy::with_per_period(p);
        if let Some(m2) = m2.or(self.cfg.m2) {
            policy.m2 = m2;
        }
        policy
    }

    fn opts(&self) -> EigOptions {
        EigOptions {
            tol: self.cfg.tol.unwrap_or(EigOptions::default().tol),
            ..EigOptions::default()
        }
    }

    fn weighting(&self, flag: bool) -> AeffWeighting {
        if flag || self.cfg.aeff_unweighted.unwrap_or(false) {
            AeffWeighting::Unweighted
        } else {
            AeffWeighting::PsiSquared
        }
    }
}

fn worker_count(flag: Option<usize>, cfg: &RunConfig) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")));
    }
    Ok(cfg.workers.unwrap_or(0))
}

fn dump(dir: &Path, mats: &[(&str, &SparseSym)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, m) in mats {
        let f = fs::File::create(dir.join(format!("{name}.mtx")))?;
        m.write_matrix_market(std::io::BufWriter::new(f))?;
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Reads either an [`EffectiveModel`] or a bare [`OscillatorSpec`].
fn load_oscillator(path: &Path) -> Result<OscillatorSpec> {
    let text = fs::read_to_string(path)?;
    let config_err = |e: serde_json::Error| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(config_err)?;
    if value.get("mu0").is_some() {
        let model: EffectiveModel = serde_json::from_value(value).map_err(config_err)?;
        OscillatorSpec::from_model(&model)
    } else {
        let spec: OscillatorSpec = serde_json::from_value(value).map_err(config_err)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct OracleReport {
    kind: &'static str,
    dofs: usize,
    sparse: Vec<f64>,
    dense: Vec<f64>,
    max_relative_difference: f64,
    agree: bool,
}

const ORACLE_TOL: f64 = 1e-8;

fn oracle_report(kind: &'static str, dofs: usize, sparse: Vec<f64>, dense: Vec<f64>) -> OracleReport {
    let max_relative_difference = sparse
        .iter()
        .zip(&dense)
        .map(|(s, d)| (s - d).abs() / d.abs())
        .fold(0.0, f64::max);
    OracleReport {
        kind,
        dofs,
        agree: max_relative_difference <= ORACLE_TOL && sparse.len() == dense.len(),
        sparse,
        dense,
        max_relative_difference,
    }
}

fn execute(cli: Cli, ctx: &Context) -> Result<()> {
    match cli.command {
        Command::Check { problem, quad } => {
            let p = ctx.problem(&problem)?;
            let samples: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
            let report = check_hypotheses(&p, &samples, quad)?;
            print_json(&report)?;
            report.require()
        }
        Command::Cell {
            problem,
            x1,
            grid,
            dump_mm,
        } => {
            let p = ctx.problem(&problem)?;
            let g = ctx.grid(&grid, EffectiveConfig::default().grid)?;
            if let Some(dir) = dump_mm.or_else(|| ctx.cfg.dump_mm.clone()) {
                let pen = cell_pencil(&p, x1, &g)?;
                dump(&dir, &[("A", &pen.a), ("B", &pen.b), ("M", &pen.m)])?;
            }
            print_json(&principal_cell_eig(&p, x1, &g)?)
        }
        Command::Effective {
            problem,
            grid,
            aeff_unweighted,
        } => {
            let p = ctx.problem(&problem)?;
            let cfg = EffectiveConfig {
                grid: ctx.grid(&grid, EffectiveConfig::default().grid)?,
                weighting: ctx.weighting(aeff_unweighted),
                ..EffectiveConfig::default()
            };
            print_json(&build_effective_model(&p, &cfg)?)
        }
        Command::Oscillator {
            model,
            k,
            numeric,
            elements,
            half_width,
        } => {
            let spec = load_oscillator(&model)?;
            let numeric = numeric || ctx.cfg.numeric.unwrap_or(false);
            let solved = if numeric {
                let s = solve_truncated(&spec, half_width, elements, k)?;
                if s.widened {
                    eprintln!("truncation half-width raised to {} to bound the tail", s.half_width);
                }
                Some(s)
            } else {
                None
            };
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout().lock());
            if solved.is_some() {
                w.write_record(["j", "nu_closed_form", "nu_numeric", "relative_difference", "sign_changes"])?;
            } else {
                w.write_record(["j", "nu_closed_form"])?;
            }
            for j in 1..=k {
                let exact = nu_closed_form(&spec, j);
                let mut rec = vec![j.to_string(), exact.to_string()];
                if let Some(s) = &solved {
                    let v = s.values[j - 1];
                    rec.push(v.to_string());
                    rec.push(((v - exact).abs() / exact.abs().max(1.0)).to_string());
                    rec.push(sign_changes(&s.vectors[j - 1]).to_string());
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Sweep {
            problem,
            eps,
            jmax,
            out,
            per_period,
            m2,
            aeff_unweighted,
            no_negative_probe,
        } => {
            let p = ctx.problem(&problem)?;
            let mut cfg = SweepConfig {
                policy: ctx.policy(per_period, m2),
                weighting: ctx.weighting(aeff_unweighted),
                tol: ctx.opts().tol,
                negative_probe: !no_negative_probe,
                ..SweepConfig::default()
            };
            if let Some(list) = eps {
                cfg.eps = list.split(',').map(parse_eps).collect::<Result<_>>()?;
            } else if let Some(list) = &ctx.cfg.eps {
                cfg.eps = list.iter().map(|s| parse_eps(s)).collect::<Result<_>>()?;
            }
            if let Some(j) = jmax.or(ctx.cfg.j_max) {
                cfg.j_max = j;
            }
            let out = out
                .or_else(|| ctx.cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("report"));
            let report = sweep(&p, &cfg)?;
            report.write(&out)?;
            eprintln!("wrote {}", out.join("report.json").display());
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout().lock());
            for row in report.eigen_rows() {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Oracle {
            problem,
            x1,
            grid,
            eps,
            per_period,
            m2,
            k,
            dump_mm,
        } => {
            let p = ctx.problem(&problem)?;
            let dump_dir = dump_mm.or_else(|| ctx.cfg.dump_mm.clone());
            let report = if let Some(e) = eps {
                let policy = ctx.policy(
                    per_period.or(ctx.cfg.per_period).or(Some(8)),
                    m2.or(ctx.cfg.m2).or(Some(4)),
                );
                let rod = assemble_rod(&p, parse_eps(&e)?, &policy)?;
                if let Some(dir) = &dump_dir {
                    dump(dir, &[("A", &rod.pencil.a), ("B", &rod.pencil.b), ("M", &rod.pencil.m)])?;
                }
                let dense = dense_indefinite(&rod.pencil.a, &rod.pencil.b)?;
                let sparse = positive_spectrum(&rod, k, NormalizationRule::Unit, &ctx.opts())?;
                oracle_report("rod", rod.dim(), sparse.values, dense.positive.into_iter().take(k).collect())
            } else {
                let g = ctx.grid(&grid, CellGrid { n1: 24, n2: 24 })?;
                let pen = cell_pencil(&p, x1, &g)?;
                if let Some(dir) = &dump_dir {
                    dump(dir, &[("A", &pen.a), ("B", &pen.b), ("M", &pen.m)])?;
                }
                let dense = DenseCellOracle::new(&pen.a, &pen.b, &pen.m)?.principal()?;
                let sparse = principal_positive(&pen)?.mu;
                oracle_report("cell", pen.dim(), vec![sparse], vec![dense])
            };
            print_json(&report)?;
            if report.agree {
                Ok(())
            } else {
                Err(Error::Internal(format!(
                    "sparse and dense solvers differ by {:e} relative",
                    report.max_relative_difference
                )))
            }
        }
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    error: &'a str,
    hypothesis_failure: bool,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<&'a [(f64, f64)]>,
}

fn error_kind(e: &Error) -> &'static str {
    match e.root() {
        Error::H6Violated { .. } => "H6Violated",
        Error::Hypothesis { .. } => "HypothesisViolated",
        Error::NoPositivePrincipal { .. } => "NoPositivePrincipal",
        Error::Unbracketable { .. } => "Unbracketable",
        Error::UnderResolved { .. } => "UnderResolved",
        Error::Precondition(_) => "Precondition",
        Error::Config { .. } => "Config",
        Error::NotConverged { .. } => "NotConverged",
        Error::PartialSpectrum { .. } => "PartialSpectrum",
        Error::SizeExceeded { .. } => "SizeExceeded",
        _ => "Error",
    }
}

fn report_error(e: &Error) {
    let scan = match e.root() {
        Error::H6Violated { scan, .. } => Some(scan.as_slice()),
        _ => None,
    };
    let diag = Diagnostic {
        error: error_kind(e),
        hypothesis_failure: e.is_hypothesis_failure(),
        message: e.to_string(),
        scan,
    };
    match serde_json::to_string(&diag) {
        Ok(s) => eprintln!("{s}"),
        Err(_) => eprintln!("error: {e}"),
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = (|| {
        let cfg = match &cli.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let workers = worker_count(cli.workers, &cfg)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        let ctx = Context { cfg };
        pool.install(|| execute(cli, &ctx))
    })();
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e);
            if e.is_hypothesis_failure() {
                2
            } else {
                1
            }
        }
    }
}
