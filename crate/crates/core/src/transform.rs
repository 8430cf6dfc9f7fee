//! Torus-to-cube transformations and periodization of cube functions.
//!
//! A transformation `ψ` maps `[-1/2, 1/2]` increasingly onto itself with
//! `ψ(±1/2) = ±1/2`. Composing a function `h` on the cube with `ψ` and
//! multiplying by `√(ω(ψ(x)) ψ'(x))` yields a function on the torus whose
//! smoothness at the boundary is governed by how fast `ψ'` vanishes there.
//!
//! The logarithmic and error-function families are parameterized by `η > 0`
//! and satisfy `ψ⁻¹(·, η) = ψ(·, 1/η)` and `ϱ(·, η) = ψ'(·, 1/η)`, where
//! `ϱ = (ψ⁻¹)'` is the density.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Arguments this far outside `[-1/2, 1/2]` are clamped instead of rejected.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    /// `ψ(x) = ½ tanh(η artanh(2x))`.
    Logarithmic,
    /// `ψ(x) = ½ erf(η erf⁻¹(2x))`.
    ErrorFunction,
    /// `ψ(x) = ½ sin(πx)`.
    Sine,
    Identity,
}

/// One univariate torus-to-cube transformation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformSpec {
    kind: TransformKind,
    eta: f64,
}

impl TransformSpec {
    pub fn logarithmic(eta: f64) -> Result<Self> {
        Self::parameterized(TransformKind::Logarithmic, eta)
    }

    pub fn error_function(eta: f64) -> Result<Self> {
        Self::parameterized(TransformKind::ErrorFunction, eta)
    }

    pub fn sine() -> Self {
        TransformSpec {
            kind: TransformKind::Sine,
            eta: 1.0,
        }
    }

    pub fn identity() -> Self {
        TransformSpec {
            kind: TransformKind::Identity,
            eta: 1.0,
        }
    }

    fn parameterized(kind: TransformKind, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "transformation parameter must be a positive real, got {eta}"
            )));
        }
        Ok(TransformSpec { kind, eta })
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The same family with parameter `1/η`; for the parameterized families
    /// this is the inverse map.
    fn reciprocal(&self) -> Self {
        TransformSpec {
            kind: self.kind,
            eta: 1.0 / self.eta,
        }
    }

    /// `ψ(x)`.
    pub fn forward(&self, x: f64) -> Result<f64> {
        let x = clamp_unit(x)?;
        if x.abs() == 0.5 {
            return Ok(x);
        }
        // Evaluated on |x| so that ψ is odd to the last bit.
        let a = x.abs();
        let v = match self.kind {
            TransformKind::Identity => a,
            TransformKind::Sine => 0.5 * (PI * a).sin(),
            TransformKind::Logarithmic => 0.5 * (self.eta * (2.0 * a).atanh()).tanh(),
            TransformKind::ErrorFunction => 0.5 * libm::erf(self.eta * erf_inv(2.0 * a)),
        };
        Ok(v.copysign(x))
    }

    /// `ψ⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let y = clamp_unit(y)?;
        match self.kind {
            TransformKind::Identity => Ok(y),
            TransformKind::Sine => Ok(if y.abs() == 0.5 {
                y
            } else {
                ((2.0 * y.abs()).asin() / PI).copysign(y)
            }),
            TransformKind::Logarithmic | TransformKind::ErrorFunction => {
                self.reciprocal().forward(y)
            }
        }
    }

    /// `ψ'(x)`, with the analytic limit at `x = ±1/2`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let x = clamp_unit(x)?;
        let a = x.abs();
        match self.kind {
            TransformKind::Identity => Ok(1.0),
            TransformKind::Sine => Ok(if a == 0.5 {
                0.0
            } else {
                FRAC_PI_2 * (PI * x).cos()
            }),
            TransformKind::Logarithmic => {
                if a == 0.5 {
                    return self.boundary_derivative();
                }
                // 4η(1-4x²)^(η-1) / ((1+2x)^η + (1-2x)^η)², divided through by (1+2|x|)^(2η).
                let r = (1.0 - 2.0 * a) / (1.0 + 2.0 * a);
                let rp = r.powf(self.eta);
                let s = (1.0 + 2.0 * a) * (1.0 + rp);
                Ok(4.0 * self.eta * r.powf(self.eta - 1.0) / (s * s))
            }
            TransformKind::ErrorFunction => {
                if a == 0.5 {
                    return self.boundary_derivative();
                }
                let w = erf_inv(2.0 * a);
                Ok(self.eta * ((1.0 - self.eta * self.eta) * w * w).exp())
            }
        }
    }

    fn boundary_derivative(&self) -> Result<f64> {
        if self.eta > 1.0 {
            Ok(0.0)
        } else if self.eta == 1.0 {
            Ok(1.0)
        } else {
            Err(Error::UnboundedDerivative {
                transform: self.to_string(),
            })
        }
    }

    /// `ϱ(y) = 1 / ψ'(ψ⁻¹(y))`.
    pub fn density(&self, y: f64) -> Result<f64> {
        let y = clamp_unit(y)?;
        let divergent = || Error::DivergentDensity {
            transform: self.to_string(),
            y,
        };
        match self.kind {
            TransformKind::Identity => Ok(1.0),
            TransformKind::Sine => {
                if y.abs() == 0.5 {
                    return Err(divergent());
                }
                Ok(2.0 / (PI * (1.0 - 4.0 * y * y).sqrt()))
            }
            TransformKind::Logarithmic | TransformKind::ErrorFunction => {
                self.reciprocal().derivative(y).map_err(|_| divergent())
            }
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TransformKind::Logarithmic => write!(f, "log:{}", self.eta),
            TransformKind::ErrorFunction => write!(f, "erf:{}", self.eta),
            TransformKind::Sine => f.write_str("sine"),
            TransformKind::Identity => f.write_str("id"),
        }
    }
}

impl FromStr for TransformSpec {
    type Err = Error;

    /// Accepts `log:<η>`, `erf:<η>`, `sine` and `id`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s, None),
        };
        let eta = |p: Option<&str>| -> Result<f64> {
            let p = p.ok_or_else(|| Error::Parse(format!("{s:?}: missing parameter")))?;
            p.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{s:?}: bad parameter {p:?}")))
        };
        match (name.to_ascii_lowercase().as_str(), param) {
            ("log", p) => Self::logarithmic(eta(p)?),
            ("erf", p) => Self::error_function(eta(p)?),
            ("sine" | "sin", None) => Ok(Self::sine()),
            ("id" | "identity", None) => Ok(Self::identity()),
            _ => Err(Error::Parse(format!("unknown transformation {s:?}"))),
        }
    }
}

fn clamp_unit(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() > 0.5 + CLAMP_TOLERANCE {
        return Err(Error::Domain { value: x });
    }
    Ok(x.clamp(-0.5, 0.5))
}

/// Coordinatewise product `ψ(x) = (ψ_1(x_1), …, ψ_d(x_d))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTransform {
    components: Vec<TransformSpec>,
}

impl ProductTransform {
    pub fn new(components: Vec<TransformSpec>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "product transformation needs at least one component".into(),
            ));
        }
        Ok(ProductTransform { components })
    }

    pub fn uniform(spec: TransformSpec, dim: usize) -> Result<Self> {
        Self::new(vec![spec; dim])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[TransformSpec] {
        &self.components
    }

    /// Parses a comma-separated component list or the `<spec>^<d>` shorthand.
    ///
    /// `^d` replicates to `dim`, and a lone component is replicated as well when
    /// `dim` is given.
    pub fn parse(s: &str, dim: Option<usize>) -> Result<Self> {
        let s = s.trim();
        let mut components = Vec::new();
        for part in s.split(',') {
            match part.split_once('^') {
                Some((spec, reps)) => {
                    let spec: TransformSpec = spec.parse()?;
                    let reps = match reps.trim() {
                        "d" => dim.ok_or_else(|| {
                            Error::Parse(format!("{s:?}: `^d` needs a known dimension"))
                        })?,
                        r => r
                            .parse::<usize>()
                            .map_err(|_| Error::Parse(format!("{s:?}: bad repetition {r:?}")))?,
                    };
                    components.extend(std::iter::repeat_n(spec, reps));
                }
                None => components.push(part.parse()?),
            }
        }
        if let Some(d) = dim {
            if components.len() == 1 && d > 1 {
                components = vec![components[0]; d];
            }
            if components.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: components.len(),
                });
            }
        }
        Self::new(components)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.components
            .iter()
            .zip(x)
            .map(|(t, &xk)| t.forward(xk))
            .collect()
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        self.components
            .iter()
            .zip(y)
            .map(|(t, &yk)| t.inverse(yk))
            .collect()
    }

    /// `∏_k ϱ_k(y_k)`.
    pub fn density(&self, y: &[f64]) -> Result<f64> {
        self.check_dim(y.len())?;
        self.components
            .iter()
            .zip(y)
            .try_fold(1.0, |acc, (t, &yk)| Ok(acc * t.density(yk)?))
    }
}

impl fmt::Display for ProductTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let first = self.components[0];
        if self.components.iter().all(|c| *c == first) && self.dim() > 1 {
            return write!(f, "{first}^{}", self.dim());
        }
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

type CoordinateWeight = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Weight function `ω` on the cube.
#[derive(Clone, Default)]
pub enum WeightSpec {
    /// `ω ≡ 1`.
    #[default]
    Constant,
    /// `ω(y) = ∏_k ω_k(y_k)` with user-supplied factors.
    Product(Vec<CoordinateWeight>),
}

impl WeightSpec {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            WeightSpec::Constant => 1.0,
            WeightSpec::Product(ws) => ws.iter().zip(y).map(|(w, &yk)| w(yk)).product(),
        }
    }
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant => f.write_str("Constant"),
            WeightSpec::Product(ws) => write!(f, "Product({} factors)", ws.len()),
        }
    }
}

/// A function on the cube `[-1/2, 1/2]^d`.
pub trait CubeFunction: Sync {
    fn eval(&self, y: &[f64]) -> Complex64;

    /// `h(y) · factor` where `y = ψ(x)` and `factor = √(ω(y) ∏ ψ'_k(x_k))`.
    ///
    /// Functions that are naturally known in torus coordinates may override
    /// this to avoid the `0 · ∞` that arises where `ψ'` vanishes.
    fn eval_periodized(&self, _x: &[f64], y: &[f64], factor: f64) -> Complex64 {
        if factor == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.eval(y) * factor
    }
}

impl<F> CubeFunction for F
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn eval(&self, y: &[f64]) -> Complex64 {
        self(y)
    }
}

/// Adapts a real-valued closure.
pub struct RealFn<F>(pub F);

impl<F> CubeFunction for RealFn<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn eval(&self, y: &[f64]) -> Complex64 {
        Complex64::new((self.0)(y), 0.0)
    }
}

/// `f(x) = h(ψ(x)) · ∏_k √(ω_k(ψ_k(x_k)) ψ'_k(x_k))`, evaluated entirely in
/// `x`-space so boundary nodes with `ψ' = 0` give exactly zero.
pub fn periodized_sample<H: CubeFunction + ?Sized>(
    h: &H,
    weight: &WeightSpec,
    transform: &ProductTransform,
    x: &[f64],
) -> Result<Complex64> {
    transform.check_dim(x.len())?;
    let mut y = Vec::with_capacity(x.len());
    let mut jac = 1.0;
    for (t, &xk) in transform.components.iter().zip(x) {
        y.push(t.forward(xk)?);
        jac *= t.derivative(xk)?;
    }
    let factor = (weight.eval(&y) * jac).sqrt();
    Ok(h.eval_periodized(x, &y, factor))
}

/// Exclusive lower bound `2m + 1` on `η` for the logarithmic and
/// error-function families to produce a transformed function in `H^m(T)`.
pub fn min_eta_for_smoothness(m: u32) -> f64 {
    2.0 * m as f64 + 1.0
}

/// Numerical check that the derivatives of `√ψ'` up to order `m` vanish
/// towards both endpoints.
///
/// For each order `n ≤ m` the magnitude of a central difference of order `n`
/// is taken at `±(1/2 − δ)`, `δ ∈ {1e-2, 1e-3, 1e-4}`; it must shrink strictly
/// along the ladder and end below its magnitude at `±0.4`. This is a heuristic
/// gate; [`min_eta_for_smoothness`] is the rule for the shipped families.
pub fn boundary_vanishing_check(t: &TransformSpec, m: u32) -> bool {
    const LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];
    let g = |x: f64| -> Option<f64> { t.derivative(x).ok().map(f64::sqrt) };

    for n in 0..=m {
        for side in [1.0, -1.0] {
            let mut mags = Vec::with_capacity(LADDER.len());
            for delta in LADDER {
                let h = delta / (2.0 * (n.max(1)) as f64);
                match central_difference(&g, side * (0.5 - delta), h, n) {
                    Some(v) if v.is_finite() => mags.push(v.abs()),
                    _ => return false,
                }
            }
            let reference = match central_difference(&g, side * 0.4, 1e-4, n) {
                Some(v) if v.is_finite() => v.abs(),
                _ => return false,
            };
            let decreasing = mags.windows(2).all(|w| w[1] < w[0]);
            if !(decreasing && mags[mags.len() - 1] < reference) {
                return false;
            }
        }
    }
    true
}

fn central_difference<G: Fn(f64) -> Option<f64>>(g: &G, x: f64, h: f64, n: u32) -> Option<f64> {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=n {
        let offset = (n as f64 / 2.0 - i as f64) * h;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * g(x + offset)?;
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    Some(acc / h.powi(n as i32))
}

/// Inverse error function on `[-1, 1]`.
///
/// Starts from Giles' single-precision rational approximation and polishes it
/// with Halley steps on `erf` (or on `erfc` for `|y| > 1/2`, where `1 − |y|` is
/// known exactly).
pub fn erf_inv(y: f64) -> f64 {
    if y.is_nan() || y.abs() > 1.0 {
        return f64::NAN;
    }
    if y == 0.0 {
        return y;
    }
    let a = y.abs();
    if a == 1.0 {
        return f64::INFINITY.copysign(y);
    }
    let q = 1.0 - a;
    let mut w = erf_inv_initial(a, q);
    const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
    for _ in 0..60 {
        let f = if a <= 0.5 {
            libm::erf(w) - a
        } else {
            q - libm::erfc(w)
        };
        let fp = TWO_OVER_SQRT_PI * (-w * w).exp();
        if fp == 0.0 {
            break;
        }
        let ratio = f / fp;
        let step = ratio / (1.0 + w * ratio);
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(1.0) {
            break;
        }
    }
    w.copysign(y)
}

fn erf_inv_initial(a: f64, q: f64) -> f64 {
    // -ln((1-a)(1+a)), formed from q = 1 - a to keep precision near a = 1.
    let mut w = -(q * (2.0 - q)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        for c in [
            3.432_739_39e-07,
            -3.523_387_7e-06,
            -4.391_506_54e-06,
            0.000_218_580_87,
            -0.001_253_725_03,
            -0.004_177_681_64,
            0.246_640_727,
            1.501_409_41,
        ] {
            p = c + p * w;
        }
        p
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        for c in [
            0.000_100_950_558,
            0.001_349_343_22,
            -0.003_673_428_44,
            0.005_739_507_73,
            -0.007_622_461_3,
            0.009_438_870_47,
            1.001_674_06,
            2.832_976_82,
        ] {
            p = c + p * w;
        }
        p
    };
    p * a
}
