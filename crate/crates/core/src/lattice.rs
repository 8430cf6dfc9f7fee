//! Rank-1 lattices, the reconstruction property and generating-vector search.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::freqset::FrequencySet;
use crate::transform::ProductTransform;

/// The lattice `{ (j z / M) mod 1 : j = 0, …, M − 1 }`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rank1Lattice {
    z: Vec<u64>,
    m: u64,
}

impl Rank1Lattice {
    /// Reduces the generating vector modulo `m`.
    pub fn new(m: u64, z: &[i64]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "lattice size must be positive".into(),
            ));
        }
        if z.is_empty() {
            return Err(Error::InvalidParameter("generating vector is empty".into()));
        }
        let z = z
            .iter()
            .map(|&zj| (zj as i128).rem_euclid(m as i128) as u64)
            .collect();
        Ok(Rank1Lattice { z, m })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn size(&self) -> u64 {
        self.m
    }

    pub fn generator(&self) -> &[u64] {
        &self.z
    }

    /// `k · z mod M`.
    pub fn residue(&self, k: &[i64]) -> u64 {
        residue(k, &self.z, self.m)
    }

    /// Node `j` recentred to `[-1/2, 1/2)`.
    pub fn node_into(&self, j: u64, out: &mut [f64]) {
        let m = self.m as u128;
        let j = (j as u128) % m;
        for (o, &zk) in out.iter_mut().zip(&self.z) {
            let r = (j * zk as u128) % m;
            // ((r/M + 1/2) mod 1) − 1/2 with a single division.
            let num = if 2 * r >= m {
                r as i128 - m as i128
            } else {
                r as i128
            };
            *o = num as f64 / self.m as f64;
        }
    }

    pub fn node(&self, j: u64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(j, &mut x);
        x
    }

    /// All nodes, row-major (`M × d`), `j` ascending.
    pub fn nodes(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.m as usize * d];
        for (j, row) in out.chunks_exact_mut(d).enumerate() {
            self.node_into(j as u64, row);
        }
        out
    }
}

impl fmt::Display for Rank1Lattice {
    /// `M z_1 … z_d`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)?;
        for zj in &self.z {
            write!(f, " {zj}")?;
        }
        Ok(())
    }
}

impl FromStr for Rank1Lattice {
    type Err = Error;

    /// Accepts `M:z1,z2,…` as well as the whitespace form `M z1 z2 …`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("lattice {s:?}: {what}"));
        let s = s.trim();
        let (m, zs): (&str, Vec<&str>) = match s.split_once(':') {
            Some((m, z)) => (m, z.split(',').collect()),
            None => {
                let mut it = s.split_whitespace();
                (it.next().ok_or_else(|| bad("empty"))?, it.collect())
            }
        };
        let m: u64 = m.trim().parse().map_err(|_| bad("bad size"))?;
        let z = zs
            .iter()
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| bad("bad generator entry"))
            })
            .collect::<Result<Vec<_>>>()?;
        Rank1Lattice::new(m, &z)
    }
}

fn residue(k: &[i64], z: &[u64], m: u64) -> u64 {
    let dot: i128 = k
        .iter()
        .zip(z)
        .map(|(&kj, &zj)| kj as i128 * zj as i128)
        .sum();
    dot.rem_euclid(m as i128) as u64
}

/// A rank-1 lattice pushed through a torus-to-cube transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedLattice {
    base: Rank1Lattice,
    map: ProductTransform,
}

impl TransformedLattice {
    pub fn new(base: Rank1Lattice, map: ProductTransform) -> Result<Self> {
        if base.dim() != map.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: map.dim(),
            });
        }
        Ok(TransformedLattice { base, map })
    }

    pub fn base(&self) -> &Rank1Lattice {
        &self.base
    }

    pub fn map(&self) -> &ProductTransform {
        &self.map
    }

    /// `y_j = ψ(x_j)`, row-major.
    pub fn nodes(&self) -> Result<Vec<f64>> {
        let mut out = self.base.nodes();
        let d = self.base.dim();
        for row in out.chunks_exact_mut(d) {
            for (v, t) in row.iter_mut().zip(self.map.components()) {
                *v = t.forward(*v)?;
            }
        }
        Ok(out)
    }
}

/// Residue sets above this size fall back to hashing instead of a stamp table.
const STAMP_TABLE_LIMIT: u64 = 1 << 26;

/// Reusable "seen" table with O(1) reset.
struct Seen {
    stamps: Vec<u32>,
    generation: u32,
}

impl Seen {
    const fn new() -> Self {
        Seen {
            stamps: Vec::new(),
            generation: 0,
        }
    }

    fn reset(&mut self, m: u64) {
        if self.stamps.len() < m as usize {
            self.stamps = vec![0; m as usize];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
    }

    /// Marks `r`; false if it was already marked in this generation.
    fn insert(&mut self, r: u64) -> bool {
        let slot = &mut self.stamps[r as usize];
        if *slot == self.generation {
            return false;
        }
        *slot = self.generation;
        true
    }
}

thread_local! {
    static SEEN: RefCell<Seen> = const { RefCell::new(Seen::new()) };
}

/// Whether `k ↦ k · z mod m` is injective on the rows.
fn injective<'a, I>(rows: I, count: usize, z: &[u64], m: u64) -> bool
where
    I: Iterator<Item = &'a [i64]>,
{
    count as u64 <= m && distinct(rows, m, |k| residue(k, z, m))
}

/// Whether `key` takes pairwise distinct values below `m` on the rows.
fn distinct<'a, I, F>(rows: I, m: u64, mut key: F) -> bool
where
    I: Iterator<Item = &'a [i64]>,
    F: FnMut(&[i64]) -> u64,
{
    let mut rows = rows;
    if m > STAMP_TABLE_LIMIT {
        let mut seen = HashSet::new();
        return rows.all(|k| seen.insert(key(k)));
    }
    SEEN.with(|cell| {
        let mut seen = cell.borrow_mut();
        seen.reset(m);
        rows.all(|k| seen.insert(key(k)))
    })
}

/// The rows of a set in a fixed scrambled order. Lexicographic order keeps
/// colliding pairs far apart; scrambled, a failing candidate usually shows a
/// collision after about `√M` rows.
struct Probe {
    dim: usize,
    rows: Vec<i64>,
    /// Largest `Σ_j |k_j|`, which bounds the dot products.
    abs_sum: u64,
}

impl Probe {
    fn new<'a>(dim: usize, rows: impl Iterator<Item = &'a [i64]>) -> Self {
        let mut rows: Vec<&[i64]> = rows.collect();
        let mut rng = SplitMix64::seed_from_u64(0x5eed_1a77);
        rows.shuffle(&mut rng);
        let abs_sum = rows
            .iter()
            .map(|k| k.iter().map(|v| v.unsigned_abs()).sum::<u64>())
            .max()
            .unwrap_or(0);
        Probe {
            dim,
            rows: rows.concat(),
            abs_sum,
        }
    }

    fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    fn injective(&self, z: &[u64], m: u64) -> bool {
        if self.len() as u64 > m {
            return false;
        }
        let rows = self.rows.chunks_exact(self.dim);
        if (self.abs_sum as u128) * (m as u128) < (1u128 << 62) {
            // Every |k · z| < Σ|k_j| · M fits in an i64.
            let mi = m as i64;
            distinct(rows, m, |k| {
                let dot: i64 = k.iter().zip(z).map(|(&a, &b)| a * b as i64).sum();
                dot.rem_euclid(mi) as u64
            })
        } else {
            distinct(rows, m, |k| residue(k, z, m))
        }
    }
}

/// Whether `lattice` reconstructs `set`: `t · z ≢ 0 (mod M)` for every nonzero
/// `t` in the difference set, checked as injectivity of `k ↦ k · z mod M`.
pub fn is_reconstructing(lattice: &Rank1Lattice, set: &FrequencySet) -> Result<bool> {
    if lattice.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: lattice.dim(),
        });
    }
    Ok(injective(set.iter(), set.len(), &lattice.z, lattice.m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    /// `z = (1, a, a², …, a^{d−1}) mod M`, smallest `M` then smallest `a`.
    #[default]
    Korobov,
    /// Component-by-component: each `z_s` is the smallest value keeping the
    /// projection onto the first `s` coordinates injective.
    Cbc,
}

impl FromStr for SearchStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "korobov" => Ok(SearchStrategy::Korobov),
            "cbc" => Ok(SearchStrategy::Cbc),
            _ => Err(Error::Parse(format!("unknown search strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub strategy: SearchStrategy,
    /// Smallest lattice size tried; raised to `|I|` if lower.
    pub min_size: u64,
    /// Sizes above `cap_factor · |I|²` are not tried.
    pub cap_factor: f64,
    /// Gives up with [`Error::SearchTimeout`] once this instant has passed.
    pub deadline: Option<Instant>,
    pub exec: Exec,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            strategy: SearchStrategy::Korobov,
            min_size: 1,
            cap_factor: 2.0,
            deadline: None,
            exec: Exec::default(),
        }
    }
}

impl SearchOptions {
    pub fn with_strategy(strategy: SearchStrategy) -> Self {
        SearchOptions {
            strategy,
            ..Default::default()
        }
    }

    /// Starts the search at `⌈factor · |I|⌉`.
    pub fn oversampled(mut self, set_size: usize, factor: f64) -> Self {
        self.min_size = (factor * set_size as f64).ceil().max(1.0) as u64;
        self
    }
}

pub fn find_reconstructing_lattice(
    set: &FrequencySet,
    strategy: SearchStrategy,
) -> Result<Rank1Lattice> {
    find_reconstructing_lattice_with(set, &SearchOptions::with_strategy(strategy))
}

/// Deterministic smallest-first search for a reconstructing lattice.
pub fn find_reconstructing_lattice_with(
    set: &FrequencySet,
    opts: &SearchOptions,
) -> Result<Rank1Lattice> {
    if set.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot search a lattice for an empty frequency set".into(),
        ));
    }
    let n = set.len() as u64;
    let start = opts.min_size.max(n);
    let cap = ((opts.cap_factor * (n as f64) * (n as f64)).floor() as u64).max(start);
    let d = set.dim();
    let probes = match opts.strategy {
        SearchStrategy::Korobov => vec![Probe::new(d, set.iter())],
        // One probe per prefix projection; rows are sorted, so equal
        // prefixes are adjacent.
        SearchStrategy::Cbc => (2..=d)
            .map(|s| {
                let mut prefixes: Vec<&[i64]> = set.iter().map(|k| &k[..s]).collect();
                prefixes.dedup();
                Probe::new(s, prefixes.into_iter())
            })
            .collect(),
    };
    for m in start..=cap {
        if opts.deadline.is_some_and(|t| Instant::now() >= t) {
            return Err(Error::SearchTimeout { tried: start..m });
        }
        let found = if m == 1 || d == 1 {
            let z = vec![1 % m; d];
            injective(set.iter(), set.len(), &z, m).then_some(z)
        } else {
            match opts.strategy {
                SearchStrategy::Korobov => korobov_at(&probes[0], m, opts.exec),
                SearchStrategy::Cbc => cbc_at(&probes, m, opts.exec),
            }
        };
        if let Some(z) = found {
            log::debug!("reconstructing lattice M = {m} for |I| = {n}");
            return Ok(Rank1Lattice { z, m });
        }
    }
    Err(Error::SearchExhausted { cap })
}

/// Candidates handed to one task of a parallel scan.
const SCAN_CHUNK: u64 = 256;

/// Smallest `c` in `lo..hi` for which `fill(c, z)` builds an injective `z`.
fn scan<F>(probe: &Probe, lo: u64, hi: u64, m: u64, exec: Exec, fill: F) -> Option<Vec<u64>>
where
    F: Fn(u64, &mut [u64]) + Sync + Send,
{
    let chunks = (hi.saturating_sub(lo)).div_ceil(SCAN_CHUNK);
    exec.find_map_first(0..chunks, |c| {
        let a0 = lo + c * SCAN_CHUNK;
        let mut z = vec![0; probe.dim];
        (a0..(a0 + SCAN_CHUNK).min(hi)).find_map(|a| {
            fill(a, &mut z);
            probe.injective(&z, m).then(|| z.clone())
        })
    })
}

fn korobov_fill(a: u64, m: u64, z: &mut [u64]) {
    let mut p = 1 % m;
    for v in z.iter_mut() {
        *v = p;
        p = ((p as u128 * a as u128) % m as u128) as u64;
    }
}

fn korobov_at(probe: &Probe, m: u64, exec: Exec) -> Option<Vec<u64>> {
    scan(probe, 1, m, m, exec, |a, z| korobov_fill(a, m, z))
}

fn cbc_at(probes: &[Probe], m: u64, exec: Exec) -> Option<Vec<u64>> {
    let mut z = vec![1 % m];
    for probe in probes {
        let prefix = z.clone();
        z = scan(probe, 0, m, m, exec, |c, trial| {
            trial[..prefix.len()].copy_from_slice(&prefix);
            trial[prefix.len()] = c;
        })?;
    }
    Some(z)
}
