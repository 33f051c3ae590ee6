//! Lloyd's k-means with k-means++ seeding.
//!
//! The assignment step runs in parallel over points; centroid updates are a
//! sequential reduction in point order, so results do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::sq_dist;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    PlusPlus,
    /// Row-major `k x dim` starting centroids.
    Given(Vec<f32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop when the relative inertia improvement drops to or below this value.
    pub tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 100,
            tol: 1e-4,
            seed: 0,
            init: Init::PlusPlus,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        if let Init::Given(c) = &self.init {
            if c.len() != self.k * dim {
                return Err(Error::DimensionMismatch {
                    location: "initial centroids".into(),
                    expected: self.k * dim,
                    found: c.len(),
                });
            }
        }
        Ok(())
    }
}

/// Training parameters shared by every k-means run of an index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub normalize: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-4,
            seed: 0,
            normalize: false,
        }
    }
}

impl TrainParams {
    pub fn kmeans(&self, k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig::new(k)
            .with_max_iters(self.max_iters)
            .with_tol(self.tol)
            .with_seed(seed)
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<f32>,
    pub assignments: Vec<u32>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub history: Vec<f64>,
    /// `true` when the run stopped on stable assignments or on `tol`.
    pub converged: bool,
    pub dim: usize,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, j: usize) -> &[f32] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }
}

/// Index of the nearest row of `centroids` and its squared distance.
/// Ties go to the lower index.
#[inline]
pub fn nearest(point: &[f32], centroids: &[f32], dim: usize) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j as u32, d);
        }
    }
    best
}

fn assign_all(points: &[f32], centroids: &[f32], dim: usize) -> (Vec<u32>, Vec<f64>) {
    points
        .par_chunks_exact(dim)
        .map(|p| nearest(p, centroids, dim))
        .unzip()
}

fn plus_plus(points: &[f32], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut min_d: Vec<f64> = points
        .par_chunks_exact(dim)
        .map(|p| sq_dist(p, row(first)))
        .collect();
    for _ in 1..k {
        let total: f64 = min_d.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, d) in min_d.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just past the final partial sum.
            chosen.unwrap_or_else(|| min_d.iter().rposition(|d| *d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick).to_vec();
        min_d
            .par_iter_mut()
            .zip(points.par_chunks_exact(dim))
            .for_each(|(m, p)| {
                let d = sq_dist(p, &c);
                if d < *m {
                    *m = d;
                }
            });
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Clusters the row-major `points` buffer into `cfg.k` groups.
///
/// Empty clusters are reseeded to the points farthest from their current
/// centroid. The returned assignments are always nearest-centroid with
/// respect to the returned centroids.
pub fn kmeans(points: &[f32], dim: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    cfg.validate(dim)?;
    if points.is_empty() {
        return Err(Error::DegenerateInput(
            "k-means needs at least one point".into(),
        ));
    }
    if !points.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            location: "k-means input".into(),
            expected: dim,
            found: points.len() % dim,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            location: "k-means input".into(),
        });
    }
    let n = points.len() / dim;
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = match &cfg.init {
        Init::PlusPlus => plus_plus(points, dim, k, &mut rng),
        Init::Given(c) => c.clone(),
    };

    let mut assignments: Vec<u32> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    for iter in 0..cfg.max_iters {
        let (next, dists) = assign_all(points, &centroids, dim);
        let inertia: f64 = dists.iter().sum();
        let stable = next == assignments;
        assignments = next;
        let prev = history.last().copied();
        history.push(inertia);
        if stable {
            converged = true;
            break;
        }
        if let Some(prev) = prev {
            if prev - inertia <= cfg.tol * prev {
                converged = true;
                break;
            }
        }
        if iter + 1 == cfg.max_iters {
            break;
        }

        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.chunks_exact(dim).zip(&assignments) {
            let a = a as usize;
            counts[a] += 1;
            for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
                *s += *x as f64;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                for (dst, s) in centroids[j * dim..(j + 1) * dim]
                    .iter_mut()
                    .zip(&sums[j * dim..(j + 1) * dim])
                {
                    *dst = (s / c) as f32;
                }
            }
        }
        let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        if !empty.is_empty() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
            for (j, &i) in empty.iter().zip(order.iter().cycle()) {
                centroids[j * dim..(j + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
            }
        }
    }

    let inertia = *history.last().expect("at least one iteration");
    Ok(KMeansResult {
        centroids,
        assignments,
        inertia,
        history,
        converged,
        dim,
    })
}
