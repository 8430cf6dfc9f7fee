//! Slow reference implementations and the self-test built on them.
//!
//! Everything here is written for obviousness, not speed: quadratic DFTs,
//! full-box scans, materialized difference sets and direct summation.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::dft::{dft_forward, dft_inverse};
use crate::error::Result;
use crate::freqset::{difference_set, hc_weight, hyperbolic_cross, FrequencySet};
use crate::lattice::{
    find_reconstructing_lattice, is_reconstructing, Rank1Lattice, SearchStrategy,
};
use crate::spectral::{evaluate_at_lattice, reconstruct_from_lattice, CoefficientVector};
use crate::transform::TransformSpec;

/// `e^{2πi num/den}` with the numerator reduced first.
fn turn(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, 2.0 * PI * r)
}

/// `X_ℓ = Σ_j x_j e^{−2πi ℓj/M}` by direct summation.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let m = x.len() as u64;
    (0..m)
        .map(|l| {
            x.iter()
                .enumerate()
                .map(|(j, v)| v * turn(-((l * j as u64) as i128), m))
                .sum()
        })
        .collect()
}

/// `x_j = (1/M) Σ_ℓ X_ℓ e^{+2πi ℓj/M}` by direct summation.
pub fn naive_idft(x: &[Complex64]) -> Vec<Complex64> {
    let m = x.len() as u64;
    (0..m)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(l, v)| v * turn((l as u64 * j) as i128, m))
                .sum::<Complex64>()
                / m as f64
        })
        .collect()
}

/// `I_N^d` by scanning the whole box `[-N, N]^d`.
pub fn brute_force_cross(dim: usize, n: u64) -> Vec<Vec<i64>> {
    let n = n as i64;
    let mut out = Vec::new();
    let mut k = vec![-n; dim];
    loop {
        if hc_weight(&k) <= n as u64 {
            out.push(k.clone());
        }
        // Odometer increment, last coordinate fastest.
        let mut j = dim;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if k[j] < n {
                k[j] += 1;
                break;
            }
            k[j] = -n;
        }
    }
}

/// `D(I)` as a set of vectors, by the double loop.
pub fn literal_difference_set(rows: &[Vec<i64>]) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for a in rows {
        for b in rows {
            out.insert(a.iter().zip(b).map(|(x, y)| x - y).collect());
        }
    }
    out
}

/// The reconstruction property straight from its definition:
/// `t · z ≢ 0 (mod M)` for every nonzero `t ∈ D(I)`.
pub fn reconstructs_by_differences(z: &[i64], m: u64, rows: &[Vec<i64>]) -> bool {
    literal_difference_set(rows).iter().all(|t| {
        t.iter().all(|&v| v == 0)
            || t.iter()
                .zip(z)
                .map(|(&a, &b)| a as i128 * b as i128)
                .sum::<i128>()
                .rem_euclid(m as i128)
                != 0
    })
}

/// `Σ_k c_k e^{2πi j (k·z)/M}` for every `j`, summed directly.
pub fn direct_evaluate(rows: &[Vec<i64>], c: &[Complex64], z: &[i64], m: u64) -> Vec<Complex64> {
    (0..m)
        .map(|j| {
            rows.iter()
                .zip(c)
                .map(|(k, v)| v * turn(j as i128 * dot(k, z), m))
                .sum()
        })
        .collect()
}

/// `(1/M) Σ_j s_j e^{−2πi j (k·z)/M}` for every `k`, summed directly.
pub fn direct_reconstruct(rows: &[Vec<i64>], s: &[Complex64], z: &[i64], m: u64) -> Vec<Complex64> {
    rows.iter()
        .map(|k| {
            s.iter()
                .enumerate()
                .map(|(j, v)| v * turn(-(j as i128) * dot(k, z), m))
                .sum::<Complex64>()
                / m as f64
        })
        .collect()
}

/// `A* A` for the dense matrix `A_{j,k} = e^{2πi j (k·z)/M}`.
pub fn gram_matrix(rows: &[Vec<i64>], z: &[i64], m: u64) -> Vec<Vec<Complex64>> {
    let a: Vec<Vec<Complex64>> = (0..m)
        .map(|j| {
            rows.iter()
                .map(|k| turn(j as i128 * dot(k, z), m))
                .collect()
        })
        .collect();
    let n = rows.len();
    (0..n)
        .map(|p| {
            (0..n)
                .map(|q| a.iter().map(|row| row[p].conj() * row[q]).sum())
                .collect()
        })
        .collect()
}

fn dot(k: &[i64], z: &[i64]) -> i128 {
    k.iter().zip(z).map(|(&a, &b)| a as i128 * b as i128).sum()
}

/// Uniform samples from the unit disk.
pub fn random_disk(rng: &mut SplitMix64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| loop {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm_sqr() <= 1.0 {
                break z;
            }
        })
        .collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Outcome of one self-test check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check {
            name,
            passed,
            detail,
        }
    }
}

/// Compares the fast paths against the references above on small seeded cases.
pub fn selftest(seed: u64) -> Result<Vec<Check>> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for m in (1..=40).chain([97, 128, 210]) {
        let x = random_disk(&mut rng, m);
        worst = worst.max(max_abs_diff(&dft_forward(&x), &naive_dft(&x)));
        worst = worst.max(max_abs_diff(&dft_inverse(&x), &naive_idft(&x)));
    }
    checks.push(Check::new(
        "dft matches direct summation",
        worst <= 1e-10,
        format!("max deviation {worst:.3e}"),
    ));

    let mut mismatch = None;
    'cross: for dim in 1..=3 {
        for n in 1..=12 {
            let fast = hyperbolic_cross(dim, n)?;
            let slow = brute_force_cross(dim, n);
            if fast.iter().ne(slow.iter().map(|k| k.as_slice())) {
                mismatch = Some((dim, n));
                break 'cross;
            }
        }
    }
    checks.push(Check::new(
        "hyperbolic cross matches box scan",
        mismatch.is_none(),
        match mismatch {
            Some((d, n)) => format!("differs at d = {d}, N = {n}"),
            None => "d <= 3, N <= 12".into(),
        },
    ));

    let mut disagreements = 0;
    for _ in 0..30 {
        let dim = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=6);
        let rows = brute_force_cross(dim, n);
        let m = rng.gen_range(1..=3 * rows.len() as u64);
        let z: Vec<i64> = (0..dim).map(|_| rng.gen_range(0..m as i64)).collect();
        let set = FrequencySet::from_indices(dim, &rows)?;
        let fast = is_reconstructing(&Rank1Lattice::new(m, &z)?, &set)?;
        if fast != reconstructs_by_differences(&z, m, &rows) {
            disagreements += 1;
        }
    }
    checks.push(Check::new(
        "reconstruction test matches difference set",
        disagreements == 0,
        format!("{disagreements} disagreements in 30 cases"),
    ));

    let set = hyperbolic_cross(2, 6)?;
    let lattice = find_reconstructing_lattice(&set, SearchStrategy::Korobov)?;
    let rows: Vec<Vec<i64>> = set.iter().map(|k| k.to_vec()).collect();
    let z: Vec<i64> = lattice.generator().iter().map(|&v| v as i64).collect();
    let c = CoefficientVector::new(set.clone(), random_disk(&mut rng, set.len()))?;
    let s = evaluate_at_lattice(&c, &lattice)?;
    let eval_dev = max_abs_diff(
        s.values(),
        &direct_evaluate(&rows, c.values(), &z, lattice.size()),
    );
    let back = reconstruct_from_lattice(&s, &set, &lattice, true)?;
    let recon_dev = max_abs_diff(back.values(), c.values());
    let direct_dev = max_abs_diff(
        back.values(),
        &direct_reconstruct(&rows, s.values(), &z, lattice.size()),
    );
    checks.push(Check::new(
        "lattice evaluation matches direct sums",
        eval_dev <= 1e-10,
        format!("max deviation {eval_dev:.3e} at M = {}", lattice.size()),
    ));
    checks.push(Check::new(
        "reconstruction recovers coefficients",
        recon_dev <= 1e-10 && direct_dev <= 1e-10,
        format!("roundtrip {recon_dev:.3e}, against direct sums {direct_dev:.3e}"),
    ));

    let d = difference_set(&hyperbolic_cross(2, 3)?)?;
    let literal = literal_difference_set(&brute_force_cross(2, 3));
    checks.push(Check::new(
        "difference set matches double loop",
        d.iter().eq(literal.iter().map(|k| k.as_slice())),
        format!("|D(I_3^2)| = {}", d.len()),
    ));

    let mut worst = 0.0f64;
    for spec in [
        TransformSpec::logarithmic(3.0)?,
        TransformSpec::error_function(2.0)?,
        TransformSpec::sine(),
    ] {
        for i in 1..100 {
            let y = -0.45 + 0.9 * i as f64 / 100.0;
            worst = worst.max((spec.forward(spec.inverse(y)?)? - y).abs());
        }
    }
    checks.push(Check::new(
        "transform inverses",
        worst <= 1e-12,
        format!("max roundtrip deviation {worst:.3e}"),
    ));
    Ok(checks)
}
