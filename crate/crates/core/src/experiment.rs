//! Error-decay experiments: built-in test functions, parameter sweeps and
//! their CSV/SVG output.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::freqset::{hyperbolic_cross_with, CrossOptions, FrequencySet};
use crate::lattice::{
    find_reconstructing_lattice_with, Rank1Lattice, SearchOptions, SearchStrategy,
};
use crate::spectral::{rel_discrete_error_with, CoefficientVector, TransformedPolynomial};
use crate::transform::{CubeFunction, ProductTransform, RealFn, WeightSpec};

/// Samples at or below this value are drawn at the floor of the log axis.
pub const PLOT_FLOOR: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `h(y) = y² − y + 3/4`, univariate.
    #[serde(alias = "quad", alias = "QuadraticUnivar")]
    QuadraticUnivar,
    /// `h(y) = Σ_j y_j`.
    #[serde(alias = "sum", alias = "CoordinateSum")]
    CoordinateSum,
    /// A transformed trigonometric polynomial on `I_N^d` with seeded random
    /// coefficients in the unit disk; its discrete error is zero up to roundoff.
    #[serde(alias = "poly", alias = "UserPolynomial")]
    UserPolynomial,
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" | "quadratic_univar" | "QuadraticUnivar" => Ok(TestFunction::QuadraticUnivar),
            "sum" | "coordinate_sum" | "CoordinateSum" => Ok(TestFunction::CoordinateSum),
            "poly" | "user_polynomial" | "UserPolynomial" => Ok(TestFunction::UserPolynomial),
            _ => Err(Error::Parse(format!(
                "unknown test function {s:?} (expected quad, sum or poly)"
            ))),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestFunction::QuadraticUnivar => "quad",
            TestFunction::CoordinateSum => "sum",
            TestFunction::UserPolynomial => "poly",
        })
    }
}

/// The closed-form test functions.
pub fn builtin_function(name: TestFunction, dim: usize) -> Result<Box<dyn CubeFunction + Send>> {
    match name {
        TestFunction::QuadraticUnivar => {
            if dim != 1 {
                return Err(Error::InvalidParameter(format!(
                    "the quadratic test function is univariate, got d = {dim}"
                )));
            }
            Ok(Box::new(RealFn(|y: &[f64]| y[0] * y[0] - y[0] + 0.75)))
        }
        TestFunction::CoordinateSum => Ok(Box::new(RealFn(|y: &[f64]| y.iter().sum::<f64>()))),
        TestFunction::UserPolynomial => Err(Error::InvalidParameter(
            "the polynomial fixture needs a frequency set and seed; use random_polynomial".into(),
        )),
    }
}

/// Coefficients drawn uniformly from the unit disk by a SplitMix64 stream.
pub fn random_coefficients(support: FrequencySet, seed: u64) -> CoefficientVector {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut c = CoefficientVector::zeros(support);
    for v in c.values_mut() {
        *v = loop {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm_sqr() <= 1.0 {
                break z;
            }
        };
    }
    c
}

pub fn random_polynomial(
    support: FrequencySet,
    transform: ProductTransform,
    seed: u64,
) -> Result<TransformedPolynomial> {
    TransformedPolynomial::new(
        random_coefficients(support, seed),
        transform,
        WeightSpec::Constant,
    )
}

/// Inclusive `start:end:step` range of hyperbolic-cross parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NRange {
    pub start: u64,
    pub end: u64,
    pub step: u64,
}

impl NRange {
    pub fn new(start: u64, end: u64, step: u64) -> Result<Self> {
        if start == 0 || step == 0 || end < start {
            return Err(Error::InvalidParameter(format!(
                "N range {start}:{end}:{step} is empty or invalid"
            )));
        }
        Ok(NRange { start, end, step })
    }

    pub fn single(n: u64) -> Result<Self> {
        Self::new(n, n, 1)
    }

    pub fn values(&self) -> impl Iterator<Item = u64> {
        (self.start..=self.end).step_by(self.step as usize)
    }
}

impl FromStr for NRange {
    type Err = Error;

    /// `a:b:s` or `a:b` (stride 1) or a single `a`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad N range {s:?}")))
        };
        match parts.as_slice() {
            [a] => Self::single(num(a)?),
            [a, b] => Self::new(num(a)?, num(b)?, 1),
            [a, b, c] => Self::new(num(a)?, num(b)?, num(c)?),
            _ => Err(Error::Parse(format!("bad N range {s:?}"))),
        }
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

impl Serialize for NRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_oversampling() -> f64 {
    2.0
}

/// One sweep: a test function and transformation over a range of `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub test_function: TestFunction,
    /// Product transformation in its string form, e.g. `log:4^d`.
    pub transform: String,
    #[serde(rename = "N_range")]
    pub n_range: NRange,
    /// The lattice search starts at `⌈factor · |I_N^d|⌉`.
    #[serde(default = "default_oversampling")]
    pub oversampling_factor: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: String,
    /// Fill `wall_time_ms`; off by default so output is byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub search_strategy: StrategyName,
    /// The search floor is also at least `|I_N^d| + extra_nodes`.
    #[serde(default)]
    pub extra_nodes: u64,
}

/// Serde face of [`SearchStrategy`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    #[default]
    Korobov,
    Cbc,
}

impl From<StrategyName> for SearchStrategy {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::Korobov => SearchStrategy::Korobov,
            StrategyName::Cbc => SearchStrategy::Cbc,
        }
    }
}

impl ExperimentConfig {
    pub fn new(dim: usize, test_function: TestFunction, transform: &str, n_range: NRange) -> Self {
        ExperimentConfig {
            dim,
            test_function,
            transform: transform.to_string(),
            n_range,
            oversampling_factor: default_oversampling(),
            seed: 0,
            output_path: String::new(),
            record_timing: false,
            search_strategy: StrategyName::default(),
            extra_nodes: 0,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut s = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut s))
            .map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn product_transform(&self) -> Result<ProductTransform> {
        ProductTransform::parse(&self.transform, Some(self.dim))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.test_function == TestFunction::QuadraticUnivar && self.dim != 1 {
            return Err(Error::InvalidParameter(
                "the quadratic test function requires dim = 1".into(),
            ));
        }
        if !(self.oversampling_factor >= 1.0 && self.oversampling_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "oversampling factor must be >= 1, got {}",
                self.oversampling_factor
            )));
        }
        self.product_transform()?;
        Ok(())
    }
}

/// One line of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub set_size: u64,
    pub eps_inf: f64,
    pub wall_time_ms: f64,
}

/// The frequency set and lattice shared by every transform at one `N`.
struct Stage {
    set: FrequencySet,
    lattice: Rank1Lattice,
    elapsed_ms: f64,
}

fn prepare(cfg: &ExperimentConfig, n: u64, exec: Exec) -> Result<Stage> {
    let started = Instant::now();
    let set = hyperbolic_cross_with(
        cfg.dim,
        n,
        &CrossOptions {
            exec,
            ..Default::default()
        },
    )?;
    let mut search = SearchOptions::with_strategy(cfg.search_strategy.into())
        .oversampled(set.len(), cfg.oversampling_factor);
    search.min_size = search.min_size.max(set.len() as u64 + cfg.extra_nodes);
    search.exec = exec;
    let lattice = find_reconstructing_lattice_with(&set, &search)?;
    Ok(Stage {
        set,
        lattice,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn measure(
    cfg: &ExperimentConfig,
    transform: &ProductTransform,
    stage: &Stage,
    n: u64,
    exec: Exec,
) -> Result<SweepRow> {
    let started = Instant::now();
    let (set, lattice) = (&stage.set, &stage.lattice);
    let weight = WeightSpec::Constant;
    let eps_inf = match cfg.test_function {
        TestFunction::UserPolynomial => {
            let h = random_polynomial(set.clone(), transform.clone(), cfg.seed.wrapping_add(n))?;
            rel_discrete_error_with(&h, &weight, transform, set, lattice, exec)?
        }
        f => {
            let h = builtin_function(f, cfg.dim)?;
            rel_discrete_error_with(h.as_ref(), &weight, transform, set, lattice, exec)?
        }
    };
    let wall_time_ms = if cfg.record_timing {
        stage.elapsed_ms + started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(SweepRow {
        n,
        m: lattice.size(),
        set_size: set.len() as u64,
        eps_inf,
        wall_time_ms,
    })
}

/// ε∞ for a single `N`.
pub fn run_point(cfg: &ExperimentConfig, n: u64, exec: Exec) -> Result<SweepRow> {
    let transform = cfg.product_transform()?;
    measure(cfg, &transform, &prepare(cfg, n, exec)?, n, exec)
}

/// ε∞ on a given lattice instead of a searched one; `N` is taken from `set`.
pub fn run_point_on(
    cfg: &ExperimentConfig,
    set: FrequencySet,
    lattice: Rank1Lattice,
    exec: Exec,
) -> Result<SweepRow> {
    let transform = cfg.product_transform()?;
    let n = set.cross_parameter();
    let stage = Stage {
        set,
        lattice,
        elapsed_ms: 0.0,
    };
    measure(cfg, &transform, &stage, n, exec)
}

/// Runs every `N` of the configured range in ascending order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    run_sweep_with(cfg, Exec::default())
}

pub fn run_sweep_with(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<SweepRow>> {
    let transform = cfg.transform.clone();
    let mut groups = run_comparison(cfg, &[transform], exec)?;
    Ok(groups.pop().map(|g| g.rows).unwrap_or_default())
}

/// One sweep per transform over the same frequency sets and lattices; the
/// configured `transform` is ignored. Groups come back in input order.
pub fn run_comparison(
    cfg: &ExperimentConfig,
    transforms: &[String],
    exec: Exec,
) -> Result<Vec<PlotGroup>> {
    cfg.validate()?;
    let maps = transforms
        .iter()
        .map(|t| ProductTransform::parse(t, Some(cfg.dim)))
        .collect::<Result<Vec<_>>>()?;
    let mut groups: Vec<PlotGroup> = transforms
        .iter()
        .map(|t| PlotGroup {
            label: t.clone(),
            rows: Vec::new(),
        })
        .collect();
    for n in cfg.n_range.values() {
        let stage = prepare(cfg, n, exec)?;
        for (group, map) in groups.iter_mut().zip(&maps) {
            match measure(cfg, map, &stage, n, exec) {
                Ok(row) => group.rows.push(row),
                Err(e @ Error::DivergentDensity { .. }) => {
                    log::warn!("{}: skipping N = {n}: {e}", group.label);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(groups)
}

/// `d.ddddde±XX`: six significant digits, at least two exponent digits.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn write_csv_to<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    out.write_record(["N", "M", "set_size", "eps_inf", "wall_time_ms"])
        .map_err(to_err)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.set_size.to_string(),
            format_sci(r.eps_inf),
            format_sci(r.wall_time_ms),
        ])
        .map_err(to_err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes rows as CSV to `path`; `-` means standard output.
pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    with_output(path, |w| write_csv_to(rows, w))
}

pub fn read_csv_from<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(r);
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(f)
}

fn with_output<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    if path == Path::new("-") {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        return f(&mut lock);
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// A labelled series of sweep rows.
#[derive(Clone, Debug)]
pub struct PlotGroup {
    pub label: String,
    pub rows: Vec<SweepRow>,
}

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#ff7f0e", "#9467bd", "#2ca02c", "#8c564b", "#e377c2", "#17becf",
];

/// Static SVG with `N` on a linear axis and ε∞ on a log axis, one polyline
/// per group and a legend in input order.
pub fn render_svg(groups: &[PlotGroup]) -> Result<String> {
    use std::fmt::Write as _;

    if groups.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let (width, height) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 200.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let clamp = |label: &str, r: &SweepRow| {
        if r.eps_inf.is_nan() || r.eps_inf <= PLOT_FLOOR {
            log::warn!(
                "{label}: eps_inf = {} at N = {} drawn at the plot floor {PLOT_FLOOR:e}",
                r.eps_inf,
                r.n
            );
            PLOT_FLOOR
        } else {
            r.eps_inf
        }
    };
    let points: Vec<Vec<(f64, f64)>> = groups
        .iter()
        .map(|g| {
            g.rows
                .iter()
                .map(|r| (r.n as f64, clamp(&g.label, r).log10()))
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
    let (mut x_min, mut x_max, mut y_min, mut y_max) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        (x_min, x_max, y_min, y_max) = (0.0, 1.0, -1.0, 0.0);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    let (y_lo, mut y_hi) = (y_min.floor(), y_max.ceil());
    if y_hi == y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let mut decade = y_lo as i32;
    while decade as f64 <= y_hi {
        let y = sy(decade as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            left + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"#,
            left - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    for x in [x_min, (x_min + x_max) / 2.0, x_max] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            top + plot_h + 18.0,
            (x * 10.0).round() / 10.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#,
        left + plot_w / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">eps_inf</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, (g, pts)) in groups.iter().zip(&points).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape_xml(&g.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_plot(groups: &[PlotGroup], path: &Path) -> Result<()> {
    let svg = render_svg(groups)?;
    with_output(path, |w| {
        w.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Least-squares slope of `log ε∞` against `log N` over rows with `N ∈ [lo, hi]`.
pub fn loglog_slope(rows: &[SweepRow], lo: u64, hi: u64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| (lo..=hi).contains(&r.n) && r.eps_inf > 0.0)
        .map(|r| ((r.n as f64).ln(), r.eps_inf.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
