use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::types::{Capacity, EmbeddingSet, SemanticId};

use super::{derive_seed, kmeans, TrainParams};

#[derive(Debug, Clone, PartialEq)]
pub struct HcNode {
    pub centroid: Vec<f32>,
    /// Training points routed through this node.
    pub count: usize,
    pub children: Vec<HcNode>,
}

impl HcNode {
    pub fn arity(&self) -> usize {
        self.children.len()
    }

    fn leaves_below(&self, depth_left: usize) -> u128 {
        if depth_left == 0 {
            1
        } else {
            self.children
                .iter()
                .map(|c| c.leaves_below(depth_left - 1))
                .sum()
        }
    }
}

/// Fixed-depth tree of recursive k-means partitions. Every root-to-leaf
/// path has exactly `depth` edges; the child indices along a path form
/// the semantic id.
#[derive(Debug, Clone, PartialEq)]
pub struct HcTree {
    depth: usize,
    branching: usize,
    dim: usize,
    root: HcNode,
}

impl HcTree {
    /// Assembles a tree, checking the fixed-depth and arity invariants.
    pub fn new(depth: usize, branching: usize, dim: usize, root: HcNode) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidConfig("tree depth must be at least 1".into()));
        }
        if branching < 2 {
            return Err(Error::InvalidConfig("branching must be at least 2".into()));
        }
        fn check(node: &HcNode, left: usize, branching: usize, dim: usize) -> Result<()> {
            if node.centroid.len() != dim {
                return Err(Error::DimensionMismatch {
                    location: "tree node centroid".into(),
                    expected: dim,
                    found: node.centroid.len(),
                });
            }
            if node.centroid.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    location: "tree node centroid".into(),
                });
            }
            if left == 0 {
                if !node.children.is_empty() {
                    return Err(Error::Corrupt("leaf node has children".into()));
                }
                return Ok(());
            }
            if node.children.is_empty() || node.children.len() > branching {
                return Err(Error::Corrupt(format!(
                    "internal node has {} children (allowed 1..={branching})",
                    node.children.len()
                )));
            }
            node.children
                .iter()
                .try_for_each(|c| check(c, left - 1, branching, dim))
        }
        check(&root, depth, branching, dim)?;
        Ok(Self {
            depth,
            branching,
            dim,
            root,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &HcNode {
        &self.root
    }

    /// The node reached by following `prefix` from the root.
    pub fn node(&self, prefix: &[u32]) -> Option<&HcNode> {
        prefix
            .iter()
            .try_fold(&self.root, |n, &t| n.children.get(t as usize))
    }

    pub fn leaf_count(&self) -> u128 {
        self.root.leaves_below(self.depth)
    }

    /// Largest arity among the nodes at zero-based `level` (children sit at level + 1).
    pub fn max_arity(&self, level: usize) -> usize {
        fn walk(n: &HcNode, left: usize) -> usize {
            if left == 0 {
                n.arity()
            } else {
                n.children
                    .iter()
                    .map(|c| walk(c, left - 1))
                    .max()
                    .unwrap_or(0)
            }
        }
        walk(&self.root, level)
    }

    /// All root-to-leaf paths in depth-first order.
    pub fn paths(&self) -> Vec<SemanticId> {
        fn walk(n: &HcNode, prefix: &mut Vec<u32>, left: usize, out: &mut Vec<SemanticId>) {
            if left == 0 {
                out.push(SemanticId::new(prefix.clone()));
                return;
            }
            for (i, c) in n.children.iter().enumerate() {
                prefix.push(i as u32);
                walk(c, prefix, left - 1, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), self.depth, &mut out);
        out
    }

    /// Centroids of the nodes visited by `id`, excluding the root.
    pub fn path_centroids(&self, id: &SemanticId) -> Result<Vec<&[f32]>> {
        if id.len() != self.depth {
            return Err(Error::InvalidId(format!(
                "id {id} has {} tokens, tree depth is {}",
                id.len(),
                self.depth
            )));
        }
        let mut node = &self.root;
        let mut out = Vec::with_capacity(self.depth);
        for (l, &t) in id.tokens().iter().enumerate() {
            node = node
                .children
                .get(t as usize)
                .ok_or(Error::TokenOutOfRange {
                    level: l + 1,
                    token: t,
                    size: node.arity(),
                })?;
            out.push(node.centroid.as_slice());
        }
        Ok(out)
    }
}

impl Capacity for HcTree {
    fn capacity(&self) -> u128 {
        self.leaf_count()
    }
}

fn mean_of(data: &[f32], dim: usize, members: &[usize]) -> Vec<f32> {
    let mut sums = vec![0f64; dim];
    for &i in members {
        for (s, x) in sums.iter_mut().zip(&data[i * dim..(i + 1) * dim]) {
            *s += *x as f64;
        }
    }
    let n = members.len().max(1) as f64;
    sums.into_iter().map(|s| (s / n) as f32).collect()
}

fn distinct_rows(data: &[f32], dim: usize, members: &[usize], cap: usize) -> usize {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for &i in members {
        seen.insert(
            data[i * dim..(i + 1) * dim]
                .iter()
                .map(|x| x.to_bits())
                .collect(),
        );
        if seen.len() >= cap {
            break;
        }
    }
    seen.len()
}

struct Builder<'a> {
    data: &'a [f32],
    dim: usize,
    depth: usize,
    branching: usize,
    params: &'a TrainParams,
}

impl Builder<'_> {
    fn children(&self, members: &[usize], level: usize, seed: u64) -> Result<Vec<HcNode>> {
        if level == self.depth {
            return Ok(Vec::new());
        }
        let dim = self.dim;
        let k = distinct_rows(self.data, dim, members, self.branching);
        let groups: Vec<(Vec<f32>, Vec<usize>)> = if k <= 1 {
            vec![(mean_of(self.data, dim, members), members.to_vec())]
        } else {
            let mut buf = Vec::with_capacity(members.len() * dim);
            for &i in members {
                buf.extend_from_slice(&self.data[i * dim..(i + 1) * dim]);
            }
            let res = kmeans(&buf, dim, &self.params.kmeans(k, seed))?;
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (&i, &a) in members.iter().zip(&res.assignments) {
                groups[a as usize].push(i);
            }
            groups
                .into_iter()
                .enumerate()
                .filter(|(_, g)| !g.is_empty())
                .map(|(j, g)| (res.centroid(j).to_vec(), g))
                .collect()
        };
        groups
            .into_iter()
            .enumerate()
            .map(|(t, (centroid, g))| {
                let children = self.children(&g, level + 1, derive_seed(seed, t as u64 + 1))?;
                Ok(HcNode {
                    centroid,
                    count: g.len(),
                    children,
                })
            })
            .collect()
    }
}

/// Recursive k-means to a fixed depth. A node with fewer than `branching`
/// distinct points gets one child per distinct point, and a single-point
/// cluster continues as a chain of single-child nodes.
pub fn train_hc(
    set: &EmbeddingSet,
    depth: usize,
    branching: usize,
    params: &TrainParams,
) -> Result<HcTree> {
    if depth == 0 {
        return Err(Error::InvalidConfig("tree depth must be at least 1".into()));
    }
    if branching < 2 {
        return Err(Error::InvalidConfig("branching must be at least 2".into()));
    }
    if set.is_empty() {
        return Err(Error::DegenerateInput(
            "cannot build a tree from zero points".into(),
        ));
    }
    let input;
    let source = if params.normalize {
        input = set.normalized();
        &input
    } else {
        set
    };
    let members: Vec<usize> = (0..source.len()).collect();
    let builder = Builder {
        data: source.data(),
        dim: source.dim(),
        depth,
        branching,
        params,
    };
    let root = HcNode {
        centroid: mean_of(source.data(), source.dim(), &members),
        count: members.len(),
        children: builder.children(&members, 0, derive_seed(params.seed, 0))?,
    };
    HcTree::new(depth, branching, source.dim(), root)
}
