// Independent reference implementations used by the integration tests.
// Nothing here calls into the crate's candidate or search code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use semid::{CodebookStack, EmbeddingSet, SemanticId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng, scale: f64) -> f32 {
    let z: f64 = StandardNormal.sample(rng);
    (z * scale) as f32
}

pub fn dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f32], b: &[f32]) -> Vec<f32> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `(index, distance)` of every row, sorted ascending with index tie-break.
pub fn sorted_rows(query: &[f32], rows: &[Vec<f32>]) -> Vec<(u32, f64)> {
    let mut v: Vec<(u32, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, c)| (i as u32, dist(query, c)))
        .collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v
}

pub fn stack_rows(stack: &CodebookStack) -> Vec<Vec<Vec<f32>>> {
    stack
        .levels()
        .iter()
        .map(|cb| (0..cb.size()).map(|i| cb.centroid(i).to_vec()).collect())
        .collect()
}

/// Random stack whose level scales shrink geometrically, like a trained one.
pub fn random_stack(rng: &mut ChaCha8Rng, sizes: &[usize], dim: usize) -> CodebookStack {
    let rows: Vec<Vec<Vec<f32>>> = sizes
        .iter()
        .enumerate()
        .map(|(l, &m)| {
            let scale = 0.5f64.powi(l as i32);
            (0..m)
                .map(|_| (0..dim).map(|_| gauss(rng, scale)).collect())
                .collect()
        })
        .collect();
    CodebookStack::from_rows(&rows).unwrap()
}

/// Corpus with heavy duplication: a few anchors, each repeated with tiny noise
/// or exactly.
pub fn clumped_corpus(rng: &mut ChaCha8Rng, n: usize, dim: usize, anchors: usize) -> EmbeddingSet {
    let centers: Vec<Vec<f32>> = (0..anchors)
        .map(|_| (0..dim).map(|_| gauss(rng, 1.0)).collect())
        .collect();
    let vectors = (0..n).map(|_| {
        let c = &centers[rng.random_range(0..anchors)];
        if rng.random_bool(0.5) {
            c.clone()
        } else {
            c.iter().map(|x| x + gauss(rng, 0.05)).collect()
        }
    });
    EmbeddingSet::from_vectors(dim, vectors).unwrap()
}

/// Greedy id by direct nearest search on the running residual.
pub fn greedy_oracle(e: &[f32], rows: &[Vec<Vec<f32>>]) -> (Vec<u32>, Vec<f64>, Vec<f32>) {
    let mut x = e.to_vec();
    let mut id = Vec::new();
    let mut ds = Vec::new();
    for level in rows {
        let (i, d) = sorted_rows(&x, level)[0];
        x = sub(&x, &level[i as usize]);
        id.push(i);
        ds.push(d);
    }
    (id, ds, x)
}

/// Best unregistered id by the negative-sum score over top-k lists taken
/// against the greedy residual chain; ties go to the smaller rank tuple.
pub fn ecm_oracle(
    e: &[f32],
    rows: &[Vec<Vec<f32>>],
    kvec: &[usize],
    used: &std::collections::HashSet<Vec<u32>>,
) -> Option<Vec<u32>> {
    let mut x = e.to_vec();
    let mut lists = Vec::new();
    for (level, &k) in rows.iter().zip(kvec) {
        let s = sorted_rows(&x, level);
        x = sub(&x, &level[s[0].0 as usize]);
        lists.push(s[..k].to_vec());
    }
    let mut all: Vec<(f64, Vec<usize>, Vec<u32>)> = Vec::new();
    fn rec(
        lists: &[Vec<(u32, f64)>],
        ranks: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>, Vec<u32>)>,
    ) {
        if ranks.len() == lists.len() {
            let score = -ranks.iter().zip(lists).map(|(&r, l)| l[r].1).sum::<f64>();
            let id = ranks.iter().zip(lists).map(|(&r, l)| l[r].0).collect();
            out.push((score, ranks.clone(), id));
            return;
        }
        for r in 0..lists[ranks.len()].len() {
            ranks.push(r);
            rec(lists, ranks, out);
            ranks.pop();
        }
    }
    rec(&lists, &mut Vec::new(), &mut all);
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    all.into_iter().map(|c| c.2).find(|id| !used.contains(id))
}

/// First unregistered leaf of a nearest-first depth-first search that
/// subtracts each chosen centroid along the branch.
pub fn rrs_oracle(
    e: &[f32],
    rows: &[Vec<Vec<f32>>],
    kvec: &[usize],
    used: &std::collections::HashSet<Vec<u32>>,
) -> Option<Vec<u32>> {
    fn rec(
        x: &[f32],
        rows: &[Vec<Vec<f32>>],
        kvec: &[usize],
        used: &std::collections::HashSet<Vec<u32>>,
        prefix: &mut Vec<u32>,
    ) -> bool {
        let l = prefix.len();
        if l == rows.len() {
            return !used.contains(prefix);
        }
        for &(i, _) in sorted_rows(x, &rows[l]).iter().take(kvec[l]) {
            prefix.push(i);
            if rec(&sub(x, &rows[l][i as usize]), rows, kvec, used, prefix) {
                return true;
            }
            prefix.pop();
        }
        false
    }
    let mut prefix = Vec::new();
    rec(e, rows, kvec, used, &mut prefix).then_some(prefix)
}

pub type Oracle = fn(
    &[f32],
    &[Vec<Vec<f32>>],
    &[usize],
    &std::collections::HashSet<Vec<u32>>,
) -> Option<Vec<u32>>;

/// Runs `oracle` sequentially over a corpus with its own registry.
pub fn oracle_map(
    set: &EmbeddingSet,
    rows: &[Vec<Vec<f32>>],
    kvec: &[usize],
    oracle: Oracle,
) -> Vec<Option<Vec<u32>>> {
    let mut used = std::collections::HashSet::new();
    set.iter()
        .map(|(_, e)| {
            let id = oracle(e, rows, kvec, &used);
            if let Some(id) = &id {
                used.insert(id.clone());
            }
            id
        })
        .collect()
}

pub fn report_ids(report: &semid::assign::AssignReport) -> Vec<Option<Vec<u32>>> {
    report
        .assignments
        .iter()
        .map(|a| a.as_ref().map(|a| a.id.tokens().to_vec()))
        .collect()
}

/// Ids granted by a run, taking the partial report out of an exhaustion error.
pub fn run_ids(result: semid::Result<semid::assign::AssignReport>) -> Vec<Option<Vec<u32>>> {
    match result {
        Ok(r) => report_ids(&r),
        Err(semid::Error::ExhaustedCandidates { report, .. }) => report_ids(&report),
        Err(e) => panic!("unexpected error {e}"),
    }
}

/// Groups ids by hashing and counts members of shared groups.
pub fn conflict_oracle(ids: &[SemanticId]) -> (usize, usize) {
    let mut groups: std::collections::HashMap<&[u32], usize> = Default::default();
    for id in ids {
        *groups.entry(id.tokens()).or_default() += 1;
    }
    let shared: Vec<usize> = groups.values().copied().filter(|&c| c > 1).collect();
    (shared.iter().sum(), shared.len())
}

/// Small random instance in the family used by the oracle comparisons.
pub struct Instance {
    pub stack: CodebookStack,
    pub set: EmbeddingSet,
    pub kvec: Vec<usize>,
}

pub fn small_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let levels = r.random_range(2..=3);
    let dim = r.random_range(2..=4);
    let sizes: Vec<usize> = (0..levels).map(|_| r.random_range(3..=8)).collect();
    let kvec: Vec<usize> = sizes
        .iter()
        .map(|&m| r.random_range(2..=3).min(m))
        .collect();
    let stack = random_stack(&mut r, &sizes, dim);
    let capacity: usize = sizes.iter().product();
    let n = r.random_range(1..=50usize.min(capacity));
    let anchors = r.random_range(1..=4);
    let set = clumped_corpus(&mut r, n, dim, anchors);
    Instance { stack, set, kvec }
}
