//! Command-line front end: `hc`, `lattice`, `approx`, `sweep` and `selftest`.
//!
//! [`cli_main`] does all the work and returns the exit code, so the binary is
//! a thin wrapper and tests can drive the commands in-process.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use lfft::experiment::{
    format_sci, render_svg, run_comparison, run_point_on, write_csv_to, ExperimentConfig, NRange,
    PlotGroup, StrategyName, TestFunction,
};
use lfft::lattice::{find_reconstructing_lattice_with, SearchOptions};
use lfft::oracle::selftest;
use lfft::{hyperbolic_cross, is_reconstructing, Error, Exec, FrequencySet, Rank1Lattice};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lfft",
    version,
    about = "Hyperbolic-cross approximation on rank-1 lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Keep every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the hyperbolic cross I_N^d.
    Hc(HcArgs),
    /// Search for a reconstructing lattice, or check a given one.
    Lattice(LatticeArgs),
    /// One-shot approximation error for each transform.
    Approx(ApproxArgs),
    /// Error sweep over a range of N, written as CSV and/or SVG.
    Sweep(SweepArgs),
    /// Compare the fast paths against slow reference implementations.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct HcArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long = "N")]
    n: u64,
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LatticeArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long = "N")]
    n: u64,
    #[arg(long, value_enum, default_value_t = Strategy::Korobov)]
    strategy: Strategy,
    /// Start the search at this multiple of |I|.
    #[arg(long, default_value_t = 1.0)]
    oversample: f64,
    /// Check `M:z1,z2,…` instead of searching.
    #[arg(long)]
    lattice: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Korobov,
    Cbc,
}

impl From<Strategy> for StrategyName {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Korobov => StrategyName::Korobov,
            Strategy::Cbc => StrategyName::Cbc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

/// Flags shared by `approx` and `sweep`; each overrides the config file.
#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML file with ExperimentConfig keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// quad, sum or poly.
    #[arg(long)]
    function: Option<TestFunction>,
    /// Product transform such as `sine`, `log:4` or `log:2,erf:3`; repeat to compare.
    #[arg(long)]
    transform: Vec<String>,
    /// Start the lattice search at this multiple of |I|.
    #[arg(long)]
    oversample: Option<f64>,
    /// Keep the lattice size at least |I| plus this many nodes.
    #[arg(long)]
    extra_nodes: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    /// Fill the wall_time_ms column (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct ApproxArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long = "N")]
    n: Option<u64>,
    /// Use `M:z1,z2,…` instead of searching.
    #[arg(long)]
    lattice: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// `a:b:s`, `a:b` or a single value.
    #[arg(long = "N-range")]
    n_range: Option<NRange>,
    /// Output path; `-` streams a single CSV to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let outcome = match cli.command {
        Command::Hc(a) => hc(a, out),
        Command::Lattice(a) => lattice(a, exec, out),
        Command::Approx(a) => approx(a, exec, out),
        Command::Sweep(a) => sweep(a, exec, out),
        Command::Selftest(a) => run_selftest(a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{}", Cli::command().render_usage());
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Runs `f` against a buffered file, or against `out` for `-`.
fn emit<F>(path: &Path, out: &mut dyn Write, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> lfft::Result<()>,
{
    if path == Path::new("-") {
        f(out)?;
        return out.flush().map_err(|e| Failure::Lib(io_err("<stdout>", e)));
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Failure::Lib(io_err(path, e)))
}

fn io_err(path: impl AsRef<Path>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.as_ref().to_path_buf(),
        source,
    }
}

fn hc(a: HcArgs, out: &mut dyn Write) -> Outcome {
    let set = hyperbolic_cross(a.dim, a.n)?;
    log::info!("|I_{}^{}| = {}", a.n, a.dim, set.len());
    let path = a.out.clone();
    emit(&a.out, out, |w| {
        set.write_text(w).map_err(|e| io_err(&path, e))
    })?;
    Ok(EXIT_OK)
}

fn parse_lattice(s: &str, set: &FrequencySet) -> Result<Rank1Lattice, Failure> {
    let l: Rank1Lattice = s.parse()?;
    if l.dim() != set.dim() {
        return Err(Failure::Usage(format!(
            "lattice has {} components, expected {}",
            l.dim(),
            set.dim()
        )));
    }
    Ok(l)
}

fn lattice(a: LatticeArgs, exec: Exec, out: &mut dyn Write) -> Outcome {
    let set = hyperbolic_cross(a.dim, a.n)?;
    let l = match &a.lattice {
        Some(s) => {
            let l = parse_lattice(s, &set)?;
            if !is_reconstructing(&l, &set)? {
                return Err(Error::NotReconstructing { m: l.size() }.into());
            }
            l
        }
        None => {
            let mut opts = SearchOptions::with_strategy(StrategyName::from(a.strategy).into())
                .oversampled(set.len(), a.oversample);
            opts.exec = exec;
            find_reconstructing_lattice_with(&set, &opts)?
        }
    };
    writeln!(out, "{l}").map_err(|e| io_err("<stdout>", e))?;
    Ok(EXIT_OK)
}

/// The config file (if any) with every given flag applied on top.
fn build_config(a: &ExperimentArgs, n_range: Option<NRange>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => {
            let dim = a
                .dim
                .ok_or_else(|| Failure::Usage("--dim is required without --config".into()))?;
            let range = n_range.ok_or_else(|| {
                Failure::Usage("a value of N is required without --config".into())
            })?;
            let transform = a
                .transform
                .first()
                .ok_or_else(|| Failure::Usage("--transform is required without --config".into()))?;
            let function = a.function.unwrap_or(if dim == 1 {
                TestFunction::QuadraticUnivar
            } else {
                TestFunction::CoordinateSum
            });
            ExperimentConfig::new(dim, function, transform, range)
        }
    };
    if let Some(d) = a.dim {
        cfg.dim = d;
    }
    if let Some(f) = a.function {
        cfg.test_function = f;
    }
    if let Some(t) = a.transform.first() {
        cfg.transform = t.clone();
    }
    if let Some(r) = n_range {
        cfg.n_range = r;
    }
    if let Some(o) = a.oversample {
        cfg.oversampling_factor = o;
    }
    if let Some(x) = a.extra_nodes {
        cfg.extra_nodes = x;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.strategy {
        cfg.search_strategy = s.into();
    }
    cfg.record_timing |= a.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn transforms(a: &ExperimentArgs, cfg: &ExperimentConfig) -> Vec<String> {
    if a.transform.is_empty() {
        vec![cfg.transform.clone()]
    } else {
        a.transform.clone()
    }
}

fn approx(a: ApproxArgs, exec: Exec, out: &mut dyn Write) -> Outcome {
    let cfg = build_config(&a.exp, a.n.map(NRange::single).transpose()?)?;
    if cfg.n_range.start != cfg.n_range.end {
        return Err(Failure::Usage(format!(
            "approx takes a single N, the config gives {}",
            cfg.n_range
        )));
    }
    let labels = transforms(&a.exp, &cfg);
    let n = cfg.n_range.start;
    let groups = match &a.lattice {
        Some(s) => {
            let set = hyperbolic_cross(cfg.dim, n)?;
            let l = parse_lattice(s, &set)?;
            labels
                .iter()
                .map(|t| {
                    let mut c = cfg.clone();
                    c.transform = t.clone();
                    c.validate()?;
                    Ok(PlotGroup {
                        label: t.clone(),
                        rows: vec![run_point_on(&c, set.clone(), l.clone(), exec)?],
                    })
                })
                .collect::<lfft::Result<Vec<_>>>()?
        }
        None => run_comparison(&cfg, &labels, exec)?,
    };
    let io = |e| Failure::Lib(io_err("<stdout>", e));
    writeln!(out, "transform,N,M,set_size,eps_inf").map_err(io)?;
    for g in &groups {
        for r in &g.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                g.label,
                r.n,
                r.m,
                r.set_size,
                format_sci(r.eps_inf)
            )
            .map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

/// `log:4,log:4` becomes `log-4-log-4`.
fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect();
    s.trim_matches('-').to_string()
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    match base.extension().and_then(|e| e.to_str()) {
        Some("csv" | "svg") => base.with_extension(ext),
        _ => {
            let mut s = base.as_os_str().to_owned();
            s.push(".");
            s.push(ext);
            PathBuf::from(s)
        }
    }
}

fn sweep(a: SweepArgs, exec: Exec, out: &mut dyn Write) -> Outcome {
    let cfg = build_config(&a.exp, a.n_range)?;
    let labels = transforms(&a.exp, &cfg);
    let base = a.out.clone().unwrap_or_else(|| {
        if cfg.output_path.is_empty() {
            PathBuf::from("sweep")
        } else {
            PathBuf::from(&cfg.output_path)
        }
    });
    let stdout = base == Path::new("-");
    if stdout && (a.format == Format::Both || (a.format == Format::Csv && labels.len() > 1)) {
        return Err(Failure::Usage(
            "standard output takes a single CSV or a single SVG".into(),
        ));
    }
    let groups = run_comparison(&cfg, &labels, exec)?;
    if a.format != Format::Svg {
        for g in &groups {
            let path = if stdout {
                base.clone()
            } else if groups.len() == 1 {
                with_extension(&base, "csv")
            } else {
                let stem = with_extension(&base, "csv").with_extension("");
                with_extension(
                    &PathBuf::from(format!("{}_{}", stem.display(), slug(&g.label))),
                    "csv",
                )
            };
            emit(&path, out, |w| write_csv_to(&g.rows, w))?;
            log::info!("wrote {}", path.display());
        }
    }
    if a.format != Format::Csv {
        let path = if stdout {
            base.clone()
        } else {
            with_extension(&base, "svg")
        };
        let svg = render_svg(&groups)?;
        let p = path.clone();
        emit(&path, out, |w| {
            w.write_all(svg.as_bytes()).map_err(|e| io_err(&p, e))
        })?;
        log::info!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn run_selftest(a: SelftestArgs, out: &mut dyn Write) -> Outcome {
    let checks = selftest(a.seed)?;
    let io = |e| Failure::Lib(io_err("<stdout>", e));
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!c.passed);
        writeln!(out, "{tag} {}: {}", c.name, c.detail).map_err(io)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}
