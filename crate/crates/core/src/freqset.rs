//! Integer frequency vectors and finite, lexicographically ordered sets of them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default ceiling on the number of elements any enumeration may produce.
pub const DEFAULT_CARDINALITY_CAP: u64 = 100_000_000;

/// A frequency vector `k ∈ Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter(
                "multi-index needs at least one component".into(),
            ));
        }
        Ok(MultiIndex(entries))
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn hc_weight(&self) -> u64 {
        hc_weight(&self.0)
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(k: &[i64]) -> Self {
        MultiIndex(k.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_row(f, &self.0)
    }
}

/// Hyperbolic-cross weight `∏_j max(1, |k_j|)`, saturating at `u64::MAX`.
pub fn hc_weight(k: &[i64]) -> u64 {
    k.iter().fold(1u64, |acc, &kj| {
        acc.saturating_mul(kj.unsigned_abs().max(1))
    })
}

/// A finite set of frequencies of a common dimension.
///
/// Elements are stored row-major in one flat buffer, sorted lexicographically
/// and free of duplicates. Coefficient vectors are indexed by position in this
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencySet {
    dim: usize,
    data: Vec<i64>,
    /// `N` when the set is the hyperbolic cross `I_N^d`, else 0.
    cross_n: u64,
}

impl FrequencySet {
    /// Builds a set from arbitrary rows, sorting and removing duplicates.
    pub fn from_indices<I, K>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = K>,
        K: AsRef<[i64]>,
    {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            set.insert(row.to_vec());
        }
        Ok(FrequencySet {
            dim,
            data: set.into_iter().flatten().collect(),
            cross_n: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The `N` of a hyperbolic cross, or 0 for any other set.
    pub fn cross_parameter(&self) -> u64 {
        self.cross_n
    }

    pub(crate) fn set_cross_parameter(&mut self, n: u64) {
        self.cross_n = n;
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, i64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[i64] {
        &self.data
    }

    /// Position of `k` in the lexicographic order, if present.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(k) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.position(k).is_some()
    }

    pub fn is_subset_of(&self, other: &FrequencySet) -> bool {
        self.dim == other.dim && self.iter().all(|k| other.contains(k))
    }

    /// Writes the text form: a `d N` header followed by one index per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.dim, self.cross_n)?;
        let mut line = String::new();
        for k in self.iter() {
            line.clear();
            for (j, kj) in k.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&kj.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut parts = header.split_whitespace();
        let dim: usize = parse_field(parts.next(), "dimension")?;
        let cross_n: u64 = parse_field(parts.next(), "cross parameter")?;
        let mut rows = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let mut set = FrequencySet::from_indices(dim, rows)?;
        set.cross_n = cross_n;
        Ok(set)
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

fn write_row(f: &mut fmt::Formatter<'_>, k: &[i64]) -> fmt::Result {
    for (j, kj) in k.iter().enumerate() {
        if j > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{kj}")?;
    }
    Ok(())
}

/// Options for enumerating hyperbolic crosses.
#[derive(Clone, Copy, Debug)]
pub struct CrossOptions {
    pub cap: u64,
    pub exec: Exec,
}

impl Default for CrossOptions {
    fn default() -> Self {
        CrossOptions {
            cap: DEFAULT_CARDINALITY_CAP,
            exec: Exec::default(),
        }
    }
}

/// The hyperbolic cross `I_N^d = { k : hc_weight(k) ≤ N }` in lexicographic order.
pub fn hyperbolic_cross(dim: usize, n: u64) -> Result<FrequencySet> {
    hyperbolic_cross_with(dim, n, &CrossOptions::default())
}

pub fn hyperbolic_cross_with(dim: usize, n: u64, opts: &CrossOptions) -> Result<FrequencySet> {
    if dim == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "hyperbolic cross needs d >= 1 and N >= 1 (got d = {dim}, N = {n})"
        )));
    }
    if n > i64::MAX as u64 {
        return Err(Error::InvalidParameter(format!("N = {n} too large")));
    }
    let count = hyperbolic_cross_cardinality(dim, n);
    if count > opts.cap as u128 {
        return Err(Error::Resource {
            what: "hyperbolic cross",
            count,
            cap: opts.cap,
        });
    }

    let mut data = Vec::with_capacity(count as usize * dim);
    let mut prefix = Vec::with_capacity(dim);
    if opts.exec.is_parallel() {
        // One chunk per value of the leading coordinate; concatenation keeps
        // the lexicographic order.
        let width = 2 * n as usize + 1;
        let chunks = opts.exec.map_range(width, |i| {
            let k1 = i as i64 - n as i64;
            let budget = n / k1.unsigned_abs().max(1);
            let mut out = Vec::new();
            let mut prefix = vec![k1];
            fill_cross(dim - 1, budget, &mut prefix, &mut out);
            out
        });
        for c in chunks {
            data.extend_from_slice(&c);
        }
    } else {
        fill_cross(dim, n, &mut prefix, &mut data);
    }
    Ok(FrequencySet {
        dim,
        data,
        cross_n: n,
    })
}

fn fill_cross(remaining: usize, budget: u64, prefix: &mut Vec<i64>, out: &mut Vec<i64>) {
    if remaining == 0 {
        out.extend_from_slice(prefix);
        return;
    }
    let b = budget as i64;
    for k in -b..=b {
        prefix.push(k);
        fill_cross(remaining - 1, budget / k.unsigned_abs().max(1), prefix, out);
        prefix.pop();
    }
}

/// `|I_N^d|`, counted without enumerating.
pub fn hyperbolic_cross_cardinality(dim: usize, n: u64) -> u128 {
    fn count(dim: usize, budget: u64, memo: &mut HashMap<(usize, u64), u128>) -> u128 {
        if dim == 1 {
            return 2 * budget as u128 + 1;
        }
        if let Some(&c) = memo.get(&(dim, budget)) {
            return c;
        }
        // |k| ∈ {0, 1} keep the full budget; |k| = a ≥ 2 leaves budget / a.
        let mut total = 3 * count(dim - 1, budget, memo);
        for a in 2..=budget {
            total += 2 * count(dim - 1, budget / a, memo);
        }
        memo.insert((dim, budget), total);
        total
    }
    if dim == 0 {
        return 0;
    }
    count(dim, n, &mut HashMap::new())
}

/// `D(I) = { k₁ − k₂ : k₁, k₂ ∈ I }`.
pub fn difference_set(set: &FrequencySet) -> Result<FrequencySet> {
    difference_set_with_cap(set, DEFAULT_CARDINALITY_CAP)
}

pub fn difference_set_with_cap(set: &FrequencySet, cap: u64) -> Result<FrequencySet> {
    if set.is_empty() {
        return Err(Error::InvalidParameter(
            "difference set of an empty set".into(),
        ));
    }
    let pairs = (set.len() as u128).pow(2);
    if pairs > cap as u128 {
        return Err(Error::Resource {
            what: "difference set pairs",
            count: pairs,
            cap,
        });
    }
    let mut out = BTreeSet::new();
    for a in set.iter() {
        for b in set.iter() {
            out.insert(a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<i64>>());
        }
    }
    FrequencySet::from_indices(set.dim(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(hc_weight(&[0, 0]), 1);
        assert_eq!(hc_weight(&[-3, 2]), 6);
        assert_eq!(hc_weight(&[1, 1, 1, 1, 1]), 1);
        assert_eq!(hc_weight(&[i64::MIN, 3]), u64::MAX);
    }

    #[test]
    fn univariate_cross() {
        let c = hyperbolic_cross(1, 4).unwrap();
        let v: Vec<i64> = c.iter().map(|k| k[0]).collect();
        assert_eq!(v, (-4..=4).collect::<Vec<_>>());
        assert_eq!(c.cross_parameter(), 4);
    }

    #[test]
    fn cardinality_matches_enumeration() {
        for d in 1..=4 {
            for n in [1, 2, 7, 16, 30] {
                let c = hyperbolic_cross(d, n).unwrap();
                assert_eq!(c.len() as u128, hyperbolic_cross_cardinality(d, n));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let opts = CrossOptions {
            cap: 100,
            ..Default::default()
        };
        assert!(matches!(
            hyperbolic_cross_with(2, 16, &opts),
            Err(Error::Resource { count: 265, .. })
        ));
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(hyperbolic_cross(0, 3).is_err());
        assert!(hyperbolic_cross(2, 0).is_err());
    }

    #[test]
    fn small_difference_sets() {
        let zero = FrequencySet::from_indices(1, [[0i64]]).unwrap();
        assert_eq!(difference_set(&zero).unwrap(), zero);
        let three = FrequencySet::from_indices(1, [[-1i64], [0], [1]]).unwrap();
        let d = difference_set(&three).unwrap();
        assert_eq!(d.as_flat(), &[-2, -1, 0, 1, 2]);
    }

    #[test]
    fn difference_cap() {
        let c = hyperbolic_cross(2, 4).unwrap();
        assert!(matches!(
            difference_set_with_cap(&c, 10),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn from_indices_sorts_and_dedups() {
        let s = FrequencySet::from_indices(2, [[1i64, 0], [-1, 2], [1, 0]]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(0), &[-1, 2]);
        assert_eq!(s.position(&[1, 0]), Some(1));
        assert!(FrequencySet::from_indices(2, [vec![1i64]]).is_err());
    }

    #[test]
    fn text_format() {
        let c = hyperbolic_cross(2, 1).unwrap();
        let mut buf = Vec::new();
        c.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 1\n-1 -1\n-1 0\n"));
        assert_eq!(text.lines().count(), 10);
        let back = FrequencySet::read_text(&buf[..]).unwrap();
        assert_eq!(back, c);
    }
}
