//! Domain types shared by every stage of the pipeline.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute tolerance for floating-point invariant checks.
pub const TOLERANCE: f64 = 1e-6;

/// Squared Euclidean distance accumulated in `f64`.
///
/// Each component difference is taken in `f32` first so that the norm of a
/// materialized residual (`a - b` stored as `f32`) reproduces this value
/// bit for bit.
#[inline]
pub fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum()
}

/// Euclidean norm accumulated in `f64`.
#[inline]
pub fn norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|x| (*x as f64) * (*x as f64))
        .sum::<f64>()
        .sqrt()
}

/// Ordered collection of `(key, vector)` pairs of uniform dimension.
///
/// Row order is ingestion order and is the processing order of every
/// assignment strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    keys: Vec<String>,
    data: Vec<f32>,
    dim: usize,
}

impl EmbeddingSet {
    /// Builds a set from keys and a row-major `keys.len() x dim` buffer.
    pub fn new(keys: Vec<String>, data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != keys.len() * dim {
            return Err(Error::DimensionMismatch {
                location: "payload".into(),
                expected: keys.len() * dim,
                found: data.len(),
            });
        }
        let mut seen = HashSet::with_capacity(keys.len());
        for (row, key) in keys.iter().enumerate() {
            if !seen.insert(key.as_str()) {
                return Err(Error::DuplicateKey {
                    key: key.clone(),
                    location: format!("row {row}"),
                });
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                location: format!("row {}, column {}", pos / dim, pos % dim),
            });
        }
        Ok(Self { keys, data, dim })
    }

    pub fn from_rows<K: Into<String>>(
        dim: usize,
        rows: impl IntoIterator<Item = (K, Vec<f32>)>,
    ) -> Result<Self> {
        let mut keys = Vec::new();
        let mut data = Vec::new();
        for (row, (key, v)) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    location: format!("row {row}"),
                    expected: dim,
                    found: v.len(),
                });
            }
            keys.push(key.into());
            data.extend_from_slice(&v);
        }
        Self::new(keys, data, dim)
    }

    /// Convenience constructor that names rows `e0`, `e1`, ...
    pub fn from_vectors(dim: usize, vectors: impl IntoIterator<Item = Vec<f32>>) -> Result<Self> {
        Self::from_rows(
            dim,
            vectors
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("e{i}"), v)),
        )
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &str {
        &self.keys[i]
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major vector buffer.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.keys
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    /// Copy with every row scaled to unit L2 norm. Zero rows stay zero.
    pub fn normalized(&self) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.dim) {
            let n = norm(row);
            if n > 0.0 {
                row.iter_mut().for_each(|x| *x = (*x as f64 / n) as f32);
            }
        }
        Self {
            keys: self.keys.clone(),
            data,
            dim: self.dim,
        }
    }

    /// Copy with rows reordered so that row `i` of the result is row `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let keys = order.iter().map(|&i| self.keys[i].clone()).collect();
        let data = order
            .iter()
            .flat_map(|&i| self.vector(i).iter().copied())
            .collect();
        Self {
            keys,
            data,
            dim: self.dim,
        }
    }
}

/// Centroids of one quantization level, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    level: usize,
    centroids: Vec<f32>,
    dim: usize,
}

impl Codebook {
    pub fn new(level: usize, centroids: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if centroids.is_empty() || !centroids.len().is_multiple_of(dim) {
            return Err(Error::InvalidConfig(format!(
                "codebook at level {level} has {} values, not a positive multiple of {dim}",
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                location: format!("codebook level {level}"),
            });
        }
        Ok(Self {
            level,
            centroids,
            dim,
        })
    }

    /// One-based level number.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }
}

/// The `L` codebooks of a residual quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookStack {
    levels: Vec<Codebook>,
    dim: usize,
}

impl CodebookStack {
    pub fn new(levels: Vec<Codebook>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::InvalidConfig(
                "a codebook stack needs at least one level".into(),
            ));
        };
        let dim = first.dim();
        for (i, cb) in levels.iter().enumerate() {
            if cb.level() != i + 1 {
                return Err(Error::InvalidConfig(format!(
                    "codebook {i} carries level {}, expected {}",
                    cb.level(),
                    i + 1
                )));
            }
            if cb.dim() != dim {
                return Err(Error::DimensionMismatch {
                    location: format!("codebook level {}", i + 1),
                    expected: dim,
                    found: cb.dim(),
                });
            }
        }
        Ok(Self { levels, dim })
    }

    /// Convenience constructor from per-level row lists.
    pub fn from_rows(levels: &[Vec<Vec<f32>>]) -> Result<Self> {
        let dim = levels
            .first()
            .and_then(|l| l.first())
            .map(Vec::len)
            .unwrap_or(0);
        let books = levels
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        location: format!("codebook level {}", i + 1),
                        expected: dim,
                        found: bad.len(),
                    });
                }
                Codebook::new(i + 1, rows.concat(), dim)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(books)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[Codebook] {
        &self.levels
    }

    /// Codebook of a zero-based level.
    pub fn level(&self, l: usize) -> &Codebook {
        &self.levels[l]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Codebook::size).collect()
    }

    /// Checks that `id` has one in-range token per level.
    pub fn validate_id(&self, id: &SemanticId) -> Result<()> {
        if id.len() != self.num_levels() {
            return Err(Error::InvalidId(format!(
                "id {id} has {} tokens, index has {} levels",
                id.len(),
                self.num_levels()
            )));
        }
        for (l, (&t, cb)) in id.tokens().iter().zip(&self.levels).enumerate() {
            if t as usize >= cb.size() {
                return Err(Error::TokenOutOfRange {
                    level: l + 1,
                    token: t,
                    size: cb.size(),
                });
            }
        }
        Ok(())
    }
}

/// Number of distinct full-length ids an index can emit.
pub trait Capacity {
    fn capacity(&self) -> u128;
}

impl Capacity for CodebookStack {
    fn capacity(&self) -> u128 {
        self.levels
            .iter()
            .fold(1u128, |acc, cb| acc.saturating_mul(cb.size() as u128))
    }
}

/// Fails with [`Error::CapacityExceeded`] when `n` ids cannot all be distinct.
pub fn capacity_check<I: Capacity + ?Sized>(n: usize, index: &I) -> Result<()> {
    let capacity = index.capacity();
    if n as u128 > capacity {
        return Err(Error::CapacityExceeded {
            n: n as u128,
            capacity,
        });
    }
    Ok(())
}

/// Fixed-length token sequence. Ordering and equality are lexicographic on tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemanticId(Vec<u32>);

impl SemanticId {
    pub fn new(tokens: Vec<u32>) -> Self {
        Self(tokens)
    }

    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::borrow::Borrow<[u32]> for SemanticId {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for SemanticId {
    fn from(tokens: Vec<u32>) -> Self {
        Self(tokens)
    }
}

impl fmt::Display for SemanticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for SemanticId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = s
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|e| Error::InvalidId(format!("token {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if tokens.is_empty() {
            return Err(Error::InvalidId("empty id".into()));
        }
        Ok(Self(tokens))
    }
}

/// A greedy prefix plus its zero-based occurrence rank in processing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuffixedId {
    pub prefix: SemanticId,
    pub suffix: u32,
}

impl fmt::Display for SuffixedId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.prefix, self.suffix)
    }
}

/// Nearest-centroid candidates for one query at one level, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub indices: Vec<u32>,
    pub distances: Vec<f64>,
    /// Row-major `len() x dim` residuals, `query - centroid` per candidate.
    pub residuals: Vec<f32>,
    pub dim: usize,
}

impl Candidates {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn residual(&self, r: usize) -> &[f32] {
        &self.residuals[r * self.dim..(r + 1) * self.dim]
    }
}

/// Per-level candidate lists for one embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub levels: Vec<Candidates>,
}

impl CandidateSet {
    /// Effective `(k_1, ..., k_L)`.
    pub fn kvec(&self) -> Vec<usize> {
        self.levels.iter().map(Candidates::len).collect()
    }
}

/// Ids granted so far plus per-prefix occurrence counters for the suffix baseline.
#[derive(Debug, Clone, Default)]
pub struct UsedIdRegistry {
    used: HashSet<SemanticId>,
    prefix_counts: HashMap<SemanticId, u32>,
}

impl UsedIdRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` when `id` was not present before.
    pub fn insert(&mut self, id: SemanticId) -> bool {
        self.used.insert(id)
    }

    pub fn contains(&self, id: &SemanticId) -> bool {
        self.used.contains(id)
    }

    /// Membership test on a raw token slice.
    pub fn contains_tokens(&self, tokens: &[u32]) -> bool {
        self.used.contains(tokens)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SemanticId> {
        self.used.iter()
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    /// Returns the occurrence rank of `prefix` and bumps its counter.
    pub fn next_suffix(&mut self, prefix: &SemanticId) -> u32 {
        let count = self.prefix_counts.entry(prefix.clone()).or_insert(0);
        let rank = *count;
        *count += 1;
        rank
    }

    pub fn prefix_count(&self, prefix: &SemanticId) -> u32 {
        self.prefix_counts.get(prefix).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(t: &[u32]) -> SemanticId {
        SemanticId::new(t.to_vec())
    }

    #[test]
    fn registry_insert_reports_novelty() {
        let mut reg = UsedIdRegistry::new();
        assert!(reg.insert(id(&[1, 2, 3])));
        assert_eq!(reg.len(), 1);
        assert!(!reg.insert(id(&[1, 2, 3])));
        assert_eq!(reg.len(), 1);
        assert!(reg.insert(id(&[1, 2, 4])));
        assert_eq!(reg.len(), 2);
        assert!(reg.contains(&id(&[1, 2, 4])));
        assert!(!reg.contains(&id(&[1, 2])));
    }

    #[test]
    fn suffix_counter_counts_occurrences() {
        let mut reg = UsedIdRegistry::new();
        let p = id(&[0, 1]);
        assert_eq!(reg.next_suffix(&p), 0);
        assert_eq!(reg.next_suffix(&p), 1);
        assert_eq!(reg.next_suffix(&id(&[2, 2])), 0);
        assert_eq!(reg.prefix_count(&p), 2);
    }

    #[test]
    fn capacity_limits() {
        let stack =
            CodebookStack::from_rows(&[vec![vec![0.0], vec![1.0]], vec![vec![0.0], vec![1.0]]])
                .unwrap();
        match capacity_check(10, &stack) {
            Err(Error::CapacityExceeded { n, capacity }) => assert_eq!((n, capacity), (10, 4)),
            other => panic!("unexpected {other:?}"),
        }
        capacity_check(4, &stack).unwrap();

        let big = CodebookStack::from_rows(&vec![vec![vec![0.0f32]; 256]; 3]).unwrap();
        assert_eq!(big.capacity(), 256u128.pow(3));
        capacity_check(109_739, &big).unwrap();
    }

    #[test]
    fn embedding_set_validation() {
        assert!(matches!(
            EmbeddingSet::from_vectors(0, Vec::<Vec<f32>>::new()),
            Err(Error::ZeroDimension)
        ));
        assert!(matches!(
            EmbeddingSet::from_rows(2, vec![("a", vec![0.0, 1.0]), ("a", vec![1.0, 1.0])]),
            Err(Error::DuplicateKey { .. })
        ));
        assert!(matches!(
            EmbeddingSet::from_rows(2, vec![("a", vec![0.0, f32::NAN])]),
            Err(Error::NonFiniteValue { .. })
        ));
        assert!(matches!(
            EmbeddingSet::from_rows(2, vec![("a", vec![0.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        let set =
            EmbeddingSet::from_rows(2, vec![("a", vec![3.0, 4.0]), ("b", vec![0.0, 0.0])]).unwrap();
        let n = set.normalized();
        assert_eq!(n.vector(0), &[0.6, 0.8]);
        assert_eq!(n.vector(1), &[0.0, 0.0]);
    }

    #[test]
    fn semantic_id_text_and_order() {
        let a: SemanticId = "1 2 3".parse().unwrap();
        assert_eq!(a, id(&[1, 2, 3]));
        assert_eq!(a.to_string(), "1 2 3");
        assert!(id(&[1, 2, 3]) < id(&[1, 3, 0]));
        assert!("".parse::<SemanticId>().is_err());
        assert!("1 x".parse::<SemanticId>().is_err());
    }

    #[test]
    fn stack_rejects_mixed_dims() {
        assert!(CodebookStack::from_rows(&[vec![vec![0.0, 1.0]], vec![vec![0.0]]]).is_err());
        assert!(CodebookStack::new(vec![]).is_err());
    }
}
