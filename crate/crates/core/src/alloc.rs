//! Nearest-centroid retrieval (`Alloc`), the greedy residual chain and a
//! uniform candidate provider over both index kinds.
//!
//! Distances are Euclidean. Every search is an exhaustive scan; ties are
//! broken by ascending centroid index.

use crate::error::{Error, Result};
use crate::quantizer::{nearest, HcTree, Index};
use crate::types::{
    sq_dist, CandidateSet, Candidates, Capacity, Codebook, CodebookStack, SemanticId,
};

fn topk_rows(query: &[f32], rows: &[f32], dim: usize, k: usize) -> Candidates {
    let mut scored: Vec<(f64, u32)> = rows
        .chunks_exact(dim)
        .enumerate()
        .map(|(j, c)| (sq_dist(query, c), j as u32))
        .collect();
    let cmp = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);

    let mut out = Candidates {
        indices: Vec::with_capacity(k),
        distances: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k * dim),
        dim,
    };
    for (d, j) in scored {
        out.indices.push(j);
        out.distances.push(d.sqrt());
        let c = &rows[j as usize * dim..(j as usize + 1) * dim];
        out.residuals
            .extend(query.iter().zip(c).map(|(x, y)| x - y));
    }
    out
}

/// The `k` centroids of `codebook` nearest to `query`, ascending by distance,
/// with residuals `query - centroid`.
pub fn alloc_topk(query: &[f32], codebook: &Codebook, k: usize) -> Result<Candidates> {
    if k == 0 || k > codebook.size() {
        return Err(Error::InvalidConfig(format!(
            "k={k} outside 1..={} at level {}",
            codebook.size(),
            codebook.level()
        )));
    }
    if query.len() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            location: "alloc query".into(),
            expected: codebook.dim(),
            found: query.len(),
        });
    }
    Ok(topk_rows(query, codebook.centroids(), codebook.dim(), k))
}

/// Nearest-centroid path through a residual stack.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyChain {
    pub id: SemanticId,
    /// `L + 1` vectors: the input, then the residual left after each level.
    pub residuals: Vec<Vec<f32>>,
    /// Distance to the chosen centroid at each level.
    pub distances: Vec<f64>,
}

impl GreedyChain {
    /// Residual fed into zero-based `level`.
    pub fn input(&self, level: usize) -> &[f32] {
        &self.residuals[level]
    }

    pub fn final_residual(&self) -> &[f32] {
        self.residuals.last().expect("chain is never empty")
    }
}

pub fn greedy_chain(e: &[f32], stack: &CodebookStack) -> GreedyChain {
    let dim = stack.dim();
    let mut residuals = Vec::with_capacity(stack.num_levels() + 1);
    let mut tokens = Vec::with_capacity(stack.num_levels());
    let mut distances = Vec::with_capacity(stack.num_levels());
    let mut r = e.to_vec();
    for cb in stack.levels() {
        let (j, d) = nearest(&r, cb.centroids(), dim);
        let next: Vec<f32> = r
            .iter()
            .zip(cb.centroid(j as usize))
            .map(|(x, y)| x - y)
            .collect();
        tokens.push(j);
        distances.push(d.sqrt());
        residuals.push(std::mem::replace(&mut r, next));
    }
    residuals.push(r);
    GreedyChain {
        id: SemanticId::new(tokens),
        residuals,
        distances,
    }
}

/// Per-level candidate lists computed against the greedy chain's residuals.
pub fn rq_candidate_set(
    chain: &GreedyChain,
    stack: &CodebookStack,
    kvec: &[usize],
) -> Result<CandidateSet> {
    check_kvec_len(kvec, stack.num_levels())?;
    let levels = stack
        .levels()
        .iter()
        .zip(kvec)
        .enumerate()
        .map(|(l, (cb, &k))| alloc_topk(chain.input(l), cb, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet { levels })
}

fn check_kvec_len(kvec: &[usize], levels: usize) -> Result<()> {
    if kvec.len() != levels {
        return Err(Error::InvalidConfig(format!(
            "top-k vector has {} entries, index has {levels} levels",
            kvec.len()
        )));
    }
    Ok(())
}

/// Children of a tree node ranked by distance to `query`.
#[derive(Debug, Clone, PartialEq)]
pub struct HcCandidates {
    /// Residual rows carry the unchanged query; trees do not form residuals.
    pub candidates: Candidates,
    /// Set when `k` exceeded the node's arity and was reduced to it.
    pub clamped: bool,
}

pub fn hc_candidates(
    prefix: &[u32],
    query: &[f32],
    k: usize,
    tree: &HcTree,
) -> Result<HcCandidates> {
    if prefix.len() >= tree.depth() {
        return Err(Error::InvalidId(format!(
            "prefix of length {} does not name an internal node of a depth-{} tree",
            prefix.len(),
            tree.depth()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if query.len() != tree.dim() {
        return Err(Error::DimensionMismatch {
            location: "tree query".into(),
            expected: tree.dim(),
            found: query.len(),
        });
    }
    let node = tree
        .node(prefix)
        .ok_or_else(|| Error::InvalidId(format!("prefix {prefix:?} is not in the tree")))?;
    let dim = tree.dim();
    let arity = node.arity();
    let take = k.min(arity);
    let mut scored: Vec<(f64, u32)> = node
        .children
        .iter()
        .enumerate()
        .map(|(j, c)| (sq_dist(query, &c.centroid), j as u32))
        .collect();
    scored.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.truncate(take);
    let candidates = Candidates {
        indices: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0.sqrt()).collect(),
        residuals: query.repeat(take),
        dim,
    };
    Ok(HcCandidates {
        candidates,
        clamped: k > arity,
    })
}

/// Greedy id plus the distance paid at each level.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub id: SemanticId,
    pub distances: Vec<f64>,
}

/// Uniform access to candidates for either index kind.
#[derive(Debug, Clone, Copy)]
pub enum CandidateProvider<'a> {
    Rq(&'a CodebookStack),
    Hc(&'a HcTree),
}

impl<'a> From<&'a Index> for CandidateProvider<'a> {
    fn from(index: &'a Index) -> Self {
        match index {
            Index::Rq(s) => CandidateProvider::Rq(s),
            Index::Hc(t) => CandidateProvider::Hc(t),
        }
    }
}

impl<'a> From<&'a CodebookStack> for CandidateProvider<'a> {
    fn from(s: &'a CodebookStack) -> Self {
        CandidateProvider::Rq(s)
    }
}

impl<'a> From<&'a HcTree> for CandidateProvider<'a> {
    fn from(t: &'a HcTree) -> Self {
        CandidateProvider::Hc(t)
    }
}

impl CandidateProvider<'_> {
    pub fn num_levels(&self) -> usize {
        match self {
            CandidateProvider::Rq(s) => s.num_levels(),
            CandidateProvider::Hc(t) => t.depth(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CandidateProvider::Rq(s) => s.dim(),
            CandidateProvider::Hc(t) => t.dim(),
        }
    }

    pub fn capacity(&self) -> u128 {
        match self {
            CandidateProvider::Rq(s) => s.capacity(),
            CandidateProvider::Hc(t) => t.capacity(),
        }
    }

    /// Largest admissible `k` at zero-based `level`: the codebook size, or
    /// the branching factor for trees.
    pub fn level_limit(&self, level: usize) -> usize {
        match self {
            CandidateProvider::Rq(s) => s.level(level).size(),
            CandidateProvider::Hc(t) => t.branching(),
        }
    }

    /// Number of distinct values each token position can take, used for
    /// search-space reporting.
    pub fn level_sizes(&self) -> Vec<usize> {
        match self {
            CandidateProvider::Rq(s) => s.sizes(),
            CandidateProvider::Hc(t) => (0..t.depth()).map(|l| t.max_arity(l)).collect(),
        }
    }

    pub fn validate_kvec(&self, kvec: &[usize]) -> Result<()> {
        check_kvec_len(kvec, self.num_levels())?;
        for (l, &k) in kvec.iter().enumerate() {
            let limit = self.level_limit(l);
            if k == 0 || k > limit {
                return Err(Error::InvalidConfig(format!(
                    "k={k} at level {} outside 1..={limit}",
                    l + 1
                )));
            }
        }
        Ok(())
    }

    pub fn greedy(&self, query: &[f32]) -> GreedyPath {
        match self {
            CandidateProvider::Rq(s) => {
                let chain = greedy_chain(query, s);
                GreedyPath {
                    id: chain.id,
                    distances: chain.distances,
                }
            }
            CandidateProvider::Hc(t) => {
                let mut node = t.root();
                let mut tokens = Vec::with_capacity(t.depth());
                let mut distances = Vec::with_capacity(t.depth());
                while !node.children.is_empty() {
                    let (j, d) = node.children.iter().enumerate().fold(
                        (0u32, f64::INFINITY),
                        |best, (j, c)| {
                            let d = sq_dist(query, &c.centroid);
                            if d < best.1 {
                                (j as u32, d)
                            } else {
                                best
                            }
                        },
                    );
                    tokens.push(j);
                    distances.push(d.sqrt());
                    node = &node.children[j as usize];
                }
                GreedyPath {
                    id: SemanticId::new(tokens),
                    distances,
                }
            }
        }
    }

    /// Candidates at zero-based `level` below `prefix` for input `x`.
    ///
    /// For stacks `x` is the residual entering the level and the prefix is
    /// ignored; for trees `x` is the original query and `k` is clamped to
    /// the node's arity.
    pub fn expand(&self, prefix: &[u32], x: &[f32], level: usize, k: usize) -> Result<Candidates> {
        match self {
            CandidateProvider::Rq(s) => alloc_topk(x, s.level(level), k),
            CandidateProvider::Hc(t) => {
                debug_assert_eq!(prefix.len(), level);
                Ok(hc_candidates(prefix, x, k, t)?.candidates)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::HcNode;

    fn book(rows: &[[f32; 2]]) -> Codebook {
        Codebook::new(1, rows.iter().flatten().copied().collect(), 2).unwrap()
    }

    #[test]
    fn topk_direct_arithmetic() {
        let cb = book(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let c = alloc_topk(&[0.9, 0.0], &cb, 2).unwrap();
        assert_eq!(c.indices, vec![1, 0]);
        assert!((c.distances[0] - 0.1).abs() < 1e-6);
        assert!((c.distances[1] - 0.9).abs() < 1e-6);
        assert!((c.residual(0)[0] + 0.1).abs() < 1e-6);
        assert_eq!(c.residual(0)[1], 0.0);
        assert_eq!(c.residual(1), &[0.9, 0.0]);
    }

    #[test]
    fn topk_tie_goes_to_lower_index() {
        let cb = book(&[[1.0, 0.0], [5.0, 5.0], [0.0, 1.0]]);
        let c = alloc_topk(&[0.0, 0.0], &cb, 1).unwrap();
        assert_eq!(c.indices, vec![0]);
        let c = alloc_topk(&[0.0, 0.0], &cb, 3).unwrap();
        assert_eq!(c.indices, vec![0, 2, 1]);
    }

    #[test]
    fn topk_rejects_bad_k() {
        let cb = book(&[[0.0, 0.0]]);
        assert!(alloc_topk(&[0.0, 0.0], &cb, 0).is_err());
        assert!(alloc_topk(&[0.0, 0.0], &cb, 2).is_err());
        assert!(alloc_topk(&[0.0], &cb, 1).is_err());
    }

    #[test]
    fn two_level_chain() {
        let stack = CodebookStack::from_rows(&[
            vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
        ])
        .unwrap();
        let chain = greedy_chain(&[0.6, 0.0], &stack);
        assert_eq!(chain.id, SemanticId::new(vec![0, 1]));
        assert_eq!(chain.input(1), &[0.6, 0.0]);
        assert!((chain.final_residual()[0] - 0.1).abs() < 1e-6);

        // Brute force over all four token pairs picks the same id as the nearest-first chain.
        let mut best = None;
        for a in 0..2u32 {
            let r1 = [0.6 - stack.level(0).centroid(a as usize)[0], 0.0];
            let d1 = r1[0].abs();
            let greedy_first = (0..2).all(|o| (0.6f32 - stack.level(0).centroid(o)[0]).abs() >= d1);
            if !greedy_first {
                continue;
            }
            for b in 0..2u32 {
                let d2 = (r1[0] - stack.level(1).centroid(b as usize)[0]).abs();
                if best.as_ref().is_none_or(|(_, bd)| d2 < *bd) {
                    best = Some((vec![a, b], d2));
                }
            }
        }
        assert_eq!(best.unwrap().0, vec![0, 1]);
    }

    #[test]
    fn chain_exact_hit_has_zero_residual() {
        let stack = CodebookStack::from_rows(&[
            vec![vec![0.0, 0.0], vec![2.0, 3.0]],
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
        ])
        .unwrap();
        let chain = greedy_chain(&[2.0, 3.0], &stack);
        assert_eq!(chain.id, SemanticId::new(vec![1, 0]));
        assert_eq!(chain.final_residual(), &[0.0, 0.0]);
    }

    #[test]
    fn single_level_chain_equals_top1() {
        let cb = book(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let stack = CodebookStack::new(vec![cb.clone()]).unwrap();
        for q in [[0.2, 0.9], [0.7, 0.1], [-1.0, -1.0]] {
            let top = alloc_topk(&q, &cb, 1).unwrap();
            assert_eq!(greedy_chain(&q, &stack).id.tokens(), &top.indices[..]);
        }
    }

    fn leaf(c: [f32; 2]) -> HcNode {
        HcNode {
            centroid: c.to_vec(),
            count: 1,
            children: vec![],
        }
    }

    #[test]
    fn tree_candidates_and_clamping() {
        let root = HcNode {
            centroid: vec![5.0, 0.0],
            count: 3,
            children: vec![
                HcNode {
                    centroid: vec![0.0, 0.0],
                    count: 2,
                    children: vec![leaf([0.0, 0.0])],
                },
                HcNode {
                    centroid: vec![10.0, 0.0],
                    count: 1,
                    children: vec![leaf([10.0, 0.0])],
                },
            ],
        };
        let tree = HcTree::new(2, 2, 2, root).unwrap();
        let c = hc_candidates(&[], &[1.0, 1.0], 2, &tree).unwrap();
        assert_eq!(c.candidates.indices, vec![0, 1]);
        assert!(!c.clamped);
        assert_eq!(c.candidates.residual(1), &[1.0, 1.0]);

        let c = hc_candidates(&[0], &[1.0, 1.0], 3, &tree).unwrap();
        assert_eq!(c.candidates.len(), 1);
        assert!(c.clamped);

        assert!(hc_candidates(&[0, 0], &[1.0, 1.0], 1, &tree).is_err());
        assert!(hc_candidates(&[7], &[1.0, 1.0], 1, &tree).is_err());

        let g = CandidateProvider::Hc(&tree).greedy(&[9.0, 0.0]);
        assert_eq!(g.id, SemanticId::new(vec![1, 0]));
        assert!((g.distances[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kvec_validation() {
        let stack =
            CodebookStack::from_rows(&[vec![vec![0.0], vec![1.0]], vec![vec![0.0]]]).unwrap();
        let p = CandidateProvider::Rq(&stack);
        p.validate_kvec(&[2, 1]).unwrap();
        assert!(p.validate_kvec(&[2, 2]).is_err());
        assert!(p.validate_kvec(&[0, 1]).is_err());
        assert!(p.validate_kvec(&[1]).is_err());
    }
}
