//! Codebook training: plain k-means, residual k-means stacks and
//! fixed-depth hierarchical clustering trees.

mod hc;
mod kmeans;
mod rq;

pub use hc::{train_hc, HcNode, HcTree};
pub use kmeans::{kmeans, nearest, Init, KMeansConfig, KMeansResult, TrainParams};
pub use rq::{reconstruct, train_rq};

use crate::types::{Capacity, CodebookStack};

/// A trained index of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Index {
    Rq(CodebookStack),
    Hc(HcTree),
}

impl Index {
    pub fn num_levels(&self) -> usize {
        match self {
            Index::Rq(s) => s.num_levels(),
            Index::Hc(t) => t.depth(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Index::Rq(s) => s.dim(),
            Index::Hc(t) => t.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Index::Rq(_) => "rq",
            Index::Hc(_) => "hc",
        }
    }
}

impl Capacity for Index {
    fn capacity(&self) -> u128 {
        match self {
            Index::Rq(s) => s.capacity(),
            Index::Hc(t) => t.capacity(),
        }
    }
}

/// An index together with the parameters it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedIndex {
    pub index: Index,
    pub params: TrainParams,
}

/// SplitMix64 finalizer; derives independent sub-seeds from one user seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
