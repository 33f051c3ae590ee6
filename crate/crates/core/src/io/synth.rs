use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

/// Seeded Gaussian mixture.
///
/// Cluster means are uniform draws from the probability simplex scaled by
/// `d`, so neighbouring means sit roughly `sqrt(2d)` apart. Each point adds
/// isotropic noise with standard deviation `spread` to a uniformly chosen
/// mean; `spread = 0` yields exact duplicates within a cluster. Keys are
/// `doc0`, `doc1`, ...
pub fn gen_synthetic(
    n: usize,
    d: usize,
    clusters: usize,
    spread: f64,
    seed: u64,
) -> Result<EmbeddingSet> {
    if n == 0 || clusters == 0 {
        return Err(Error::InvalidConfig(
            "n and clusters must be at least 1".into(),
        ));
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..clusters)
        .map(|_| {
            let e: Vec<f64> = (0..d).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            e.into_iter().map(|x| x / total * d as f64).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mean = &means[rng.random_range(0..clusters)];
        for &m in mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push((m + spread * z) as f32);
        }
    }
    EmbeddingSet::new((0..n).map(|i| format!("doc{i}")).collect(), data, d)
}
