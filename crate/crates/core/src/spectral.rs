//! Fast evaluation and reconstruction of transformed trigonometric polynomials
//! along rank-1 lattices, each with a single one-dimensional FFT.
//!
//! Evaluation aggregates `ĝ_ℓ = Σ_{k·z ≡ ℓ (mod M)} ĥ_k` and applies one
//! unnormalized backward DFT. Reconstruction applies one forward DFT and reads
//! `ĥ_k = ĝ_{k·z mod M} / M`. On a reconstructing lattice the two are inverse
//! to each other on the frequency set, which is the identity `A*A = M·I`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::dft::DftPlan;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::freqset::FrequencySet;
use crate::lattice::{is_reconstructing, Rank1Lattice};
use crate::transform::{periodized_sample, CubeFunction, ProductTransform, WeightSpec};

/// Amplitudes `ĥ_k` aligned with the order of their support.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    support: FrequencySet,
    values: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(support: FrequencySet, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                found: values.len(),
            });
        }
        Ok(CoefficientVector { support, values })
    }

    pub fn zeros(support: FrequencySet) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); support.len()];
        CoefficientVector { support, values }
    }

    pub fn support(&self) -> &FrequencySet {
        &self.support
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// `ĥ_k`, or `None` if `k` is outside the support.
    pub fn get(&self, k: &[i64]) -> Option<Complex64> {
        self.support.position(k).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], Complex64)> + '_ {
        self.support.iter().zip(self.values.iter().copied())
    }

    /// Lines `k_1 … k_d re im` under a `d N` header.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {}",
            self.support.dim(),
            self.support.cross_parameter()
        )?;
        for (k, v) in self.iter() {
            for kj in k {
                write!(w, "{kj} ")?;
            }
            writeln!(w, "{} {}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = next_line(&mut lines)?.ok_or_else(|| Error::Parse("missing header".into()))?;
        let (dim, cross_n) = parse_header(&header)?;
        let mut rows = Vec::new();
        while let Some(line) = next_line(&mut lines)? {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != dim + 2 {
                return Err(Error::Parse(format!(
                    "expected {} fields in {line:?}",
                    dim + 2
                )));
            }
            let k = toks[..dim]
                .iter()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad index {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((k, parse_complex(toks[dim], toks[dim + 1])?));
        }
        let mut support = FrequencySet::from_indices(dim, rows.iter().map(|(k, _)| k))?;
        support.set_cross_parameter(cross_n);
        if support.len() != rows.len() {
            return Err(Error::Parse("duplicate frequency".into()));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); rows.len()];
        for (k, v) in &rows {
            values[support.position(k).expect("row is in its own support")] = *v;
        }
        CoefficientVector::new(support, values)
    }
}

/// Samples along the `M` nodes of a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVector {
    dim: usize,
    values: Vec<Complex64>,
}

impl SampleVector {
    pub fn new(dim: usize, values: Vec<Complex64>) -> Self {
        SampleVector { dim, values }
    }

    /// Dimension of the lattice the samples belong to.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Lines `re im` under a `d M` header.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.dim, self.values.len())?;
        for v in &self.values {
            writeln!(w, "{} {}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = next_line(&mut lines)?.ok_or_else(|| Error::Parse("missing header".into()))?;
        let (dim, m) = parse_header(&header)?;
        let mut values = Vec::with_capacity(m as usize);
        while let Some(line) = next_line(&mut lines)? {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => continue,
                [re, im] => values.push(parse_complex(re, im)?),
                _ => return Err(Error::Parse(format!("expected `re im` in {line:?}"))),
            }
        }
        if values.len() as u64 != m {
            return Err(Error::Parse(format!(
                "header announces {m} samples, found {}",
                values.len()
            )));
        }
        Ok(SampleVector { dim, values })
    }
}

fn next_line<B: BufRead>(lines: &mut std::io::Lines<B>) -> Result<Option<String>> {
    lines
        .next()
        .transpose()
        .map_err(|e| Error::Parse(e.to_string()))
}

fn parse_header(line: &str) -> Result<(usize, u64)> {
    let mut it = line.split_whitespace();
    let dim = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad header {line:?}")))?;
    let n = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad header {line:?}")))?;
    Ok((dim, n))
}

fn parse_complex(re: &str, im: &str) -> Result<Complex64> {
    let p = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number {t:?}")))
    };
    Ok(Complex64::new(p(re)?, p(im)?))
}

/// `e^{2πi t}` with `t` reduced mod 1 first.
fn cis_turns(t: f64) -> Complex64 {
    let frac = t - t.round();
    let (s, c) = (2.0 * PI * frac).sin_cos();
    Complex64::new(c, s)
}

fn dot(k: &[i64], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum()
}

/// A frequency set bound to a lattice, with its residues and FFT plan
/// precomputed for repeated evaluation and reconstruction.
#[derive(Clone, Debug)]
pub struct LatticeFft {
    set: FrequencySet,
    lattice: Rank1Lattice,
    residues: Vec<usize>,
    plan: DftPlan,
}

impl LatticeFft {
    /// Binds `set` to `lattice` without checking the reconstruction property.
    pub fn new(set: FrequencySet, lattice: Rank1Lattice) -> Result<Self> {
        if set.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                found: lattice.dim(),
            });
        }
        let m = usize::try_from(lattice.size())
            .map_err(|_| Error::InvalidParameter("lattice too large for this platform".into()))?;
        let residues = set.iter().map(|k| lattice.residue(k) as usize).collect();
        Ok(LatticeFft {
            set,
            lattice,
            residues,
            plan: DftPlan::new(m),
        })
    }

    /// Like [`LatticeFft::new`] but fails unless the lattice reconstructs the set.
    pub fn reconstructing(set: FrequencySet, lattice: Rank1Lattice) -> Result<Self> {
        if !is_reconstructing(&lattice, &set)? {
            return Err(Error::NotReconstructing { m: lattice.size() });
        }
        Self::new(set, lattice)
    }

    pub fn set(&self) -> &FrequencySet {
        &self.set
    }

    pub fn lattice(&self) -> &Rank1Lattice {
        &self.lattice
    }

    /// Evaluates `Σ_k ĥ_k e^{2πi k·x_j}` at every node `x_j`.
    pub fn evaluate(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coefficients.len(), self.residues.len());
        let mut g = vec![Complex64::new(0.0, 0.0); self.plan.len()];
        for (&r, &c) in self.residues.iter().zip(coefficients) {
            g[r] += c;
        }
        self.plan.backward_unnormalized(&mut g);
        g
    }

    /// `ĥ_k = ĝ_{k·z mod M} / M` with `ĝ` the forward DFT of the samples.
    pub fn reconstruct(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.plan.len());
        let mut g = samples.to_vec();
        self.plan.forward(&mut g);
        let scale = 1.0 / self.plan.len() as f64;
        self.residues.iter().map(|&r| g[r] * scale).collect()
    }
}

/// Evaluates the polynomial with coefficients `c` at all lattice nodes.
pub fn evaluate_at_lattice(c: &CoefficientVector, lattice: &Rank1Lattice) -> Result<SampleVector> {
    let plan = LatticeFft::new(c.support.clone(), lattice.clone())?;
    Ok(SampleVector::new(lattice.dim(), plan.evaluate(&c.values)))
}

/// Recovers coefficients on `set` from lattice samples.
///
/// With `check` the reconstruction property is verified first; without it the
/// caller vouches for it.
pub fn reconstruct_from_lattice(
    samples: &SampleVector,
    set: &FrequencySet,
    lattice: &Rank1Lattice,
    check: bool,
) -> Result<CoefficientVector> {
    if samples.len() as u64 != lattice.size() {
        return Err(Error::DimensionMismatch {
            expected: lattice.size() as usize,
            found: samples.len(),
        });
    }
    let plan = if check {
        LatticeFft::reconstructing(set.clone(), lattice.clone())?
    } else {
        LatticeFft::new(set.clone(), lattice.clone())?
    };
    CoefficientVector::new(set.clone(), plan.reconstruct(&samples.values))
}

/// `s_j = h(y_j) √(ω(y_j)/ϱ(y_j))` over the transformed lattice nodes.
pub fn sample_transformed_function<H: CubeFunction + ?Sized>(
    h: &H,
    weight: &WeightSpec,
    transform: &ProductTransform,
    lattice: &Rank1Lattice,
) -> Result<SampleVector> {
    sample_transformed_function_with(h, weight, transform, lattice, Exec::default())
}

pub fn sample_transformed_function_with<H: CubeFunction + ?Sized>(
    h: &H,
    weight: &WeightSpec,
    transform: &ProductTransform,
    lattice: &Rank1Lattice,
    exec: Exec,
) -> Result<SampleVector> {
    if transform.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            found: transform.dim(),
        });
    }
    let d = lattice.dim();
    let values = exec.try_map_range(lattice.size() as usize, |j| {
        let mut x = vec![0.0; d];
        lattice.node_into(j as u64, &mut x);
        periodized_sample(h, weight, transform, &x)
    })?;
    Ok(SampleVector::new(d, values))
}

/// `S h(y) = Σ_k ĥ_k √(ϱ(y)/ω(y)) e^{2πi k·ψ⁻¹(y)}` at each point of the
/// row-major `points`, by direct summation.
pub fn evaluate_partial_sum(
    c: &CoefficientVector,
    weight: &WeightSpec,
    transform: &ProductTransform,
    points: &[f64],
    exec: Exec,
) -> Result<Vec<Complex64>> {
    let d = c.support.dim();
    if transform.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: transform.dim(),
        });
    }
    if !points.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: points.len() % d,
        });
    }
    exec.try_map_range(points.len() / d, |i| {
        let y = &points[i * d..(i + 1) * d];
        let x = transform.inverse(y)?;
        let scale = (transform.density(y)? / weight.eval(y)).sqrt();
        let sum: Complex64 = c.iter().map(|(k, v)| v * cis_turns(dot(k, &x))).sum();
        Ok(sum * scale)
    })
}

/// `(1/M) Σ_j g(x_j)` for a function `g` on the torus.
pub fn lattice_quadrature<G>(g: G, lattice: &Rank1Lattice) -> Complex64
where
    G: Fn(&[f64]) -> Complex64,
{
    let mut x = vec![0.0; lattice.dim()];
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..lattice.size() {
        lattice.node_into(j, &mut x);
        acc += g(&x);
    }
    acc / lattice.size() as f64
}

/// Relative discrete `ℓ∞` error `‖s − s'‖_∞ / ‖s‖_∞` where `s` are the
/// periodized samples and `s'` the samples regenerated from the coefficients
/// reconstructed on `set`.
pub fn rel_discrete_error<H: CubeFunction + ?Sized>(
    h: &H,
    weight: &WeightSpec,
    transform: &ProductTransform,
    set: &FrequencySet,
    lattice: &Rank1Lattice,
) -> Result<f64> {
    rel_discrete_error_with(h, weight, transform, set, lattice, Exec::default())
}

pub fn rel_discrete_error_with<H: CubeFunction + ?Sized>(
    h: &H,
    weight: &WeightSpec,
    transform: &ProductTransform,
    set: &FrequencySet,
    lattice: &Rank1Lattice,
    exec: Exec,
) -> Result<f64> {
    let plan = LatticeFft::reconstructing(set.clone(), lattice.clone())?;
    let samples = sample_transformed_function_with(h, weight, transform, lattice, exec)?;
    let coefficients = plan.reconstruct(samples.values());
    let approx = plan.evaluate(&coefficients);
    relative_sup_distance(samples.values(), &approx)
}

/// `‖a − b‖_∞ / ‖a‖_∞`.
pub fn relative_sup_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let norm = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Err(Error::Degenerate);
    }
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok(diff / norm)
}

/// `h(y) = Σ_k ĥ_k √(ϱ(y)/ω(y)) e^{2πi k·ψ⁻¹(y)}`, a transformed trigonometric
/// polynomial.
///
/// Its periodization is the plain trigonometric polynomial `Σ_k ĥ_k e^{2πi k·x}`,
/// which [`CubeFunction::eval_periodized`] returns directly. That shortcut
/// assumes samples are taken with the same transformation and weight.
#[derive(Clone, Debug)]
pub struct TransformedPolynomial {
    coefficients: CoefficientVector,
    transform: ProductTransform,
    weight: WeightSpec,
}

impl TransformedPolynomial {
    pub fn new(
        coefficients: CoefficientVector,
        transform: ProductTransform,
        weight: WeightSpec,
    ) -> Result<Self> {
        if coefficients.support.dim() != transform.dim() {
            return Err(Error::DimensionMismatch {
                expected: coefficients.support.dim(),
                found: transform.dim(),
            });
        }
        Ok(TransformedPolynomial {
            coefficients,
            transform,
            weight,
        })
    }

    pub fn coefficients(&self) -> &CoefficientVector {
        &self.coefficients
    }

    /// `Σ_k ĥ_k e^{2πi k·x}`.
    pub fn torus_value(&self, x: &[f64]) -> Complex64 {
        self.coefficients
            .iter()
            .map(|(k, v)| v * cis_turns(dot(k, x)))
            .sum()
    }
}

impl CubeFunction for TransformedPolynomial {
    /// NaN where the density diverges.
    fn eval(&self, y: &[f64]) -> Complex64 {
        evaluate_partial_sum(
            &self.coefficients,
            &self.weight,
            &self.transform,
            y,
            Exec::Sequential,
        )
        .map(|v| v[0])
        .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn eval_periodized(&self, x: &[f64], _y: &[f64], _factor: f64) -> Complex64 {
        self.torus_value(x)
    }
}
