use crate::error::{Error, Result};
use crate::types::{Codebook, CodebookStack, EmbeddingSet, SemanticId};

use super::{derive_seed, kmeans, TrainParams};

/// Residual k-means: level 1 clusters the vectors, each further level
/// clusters the residuals left by the previous one.
pub fn train_rq(
    set: &EmbeddingSet,
    levels: usize,
    codebook_size: usize,
    params: &TrainParams,
) -> Result<CodebookStack> {
    if levels == 0 {
        return Err(Error::InvalidConfig("levels must be at least 1".into()));
    }
    if codebook_size == 0 {
        return Err(Error::InvalidConfig(
            "codebook size must be at least 1".into(),
        ));
    }
    let dim = set.dim();
    let input;
    let source = if params.normalize {
        input = set.normalized();
        &input
    } else {
        set
    };
    let mut residuals = source.data().to_vec();
    let mut books = Vec::with_capacity(levels);
    for level in 1..=levels {
        let cfg = params.kmeans(codebook_size, derive_seed(params.seed, level as u64));
        let res = kmeans(&residuals, dim, &cfg)?;
        for (r, &a) in residuals.chunks_exact_mut(dim).zip(&res.assignments) {
            let c = res.centroid(a as usize);
            for (x, y) in r.iter_mut().zip(c) {
                *x -= y;
            }
        }
        books.push(Codebook::new(level, res.centroids, dim)?);
    }
    CodebookStack::new(books)
}

/// Sum of the selected centroid of every level.
pub fn reconstruct(id: &SemanticId, stack: &CodebookStack) -> Result<Vec<f32>> {
    stack.validate_id(id)?;
    let mut out = vec![0f32; stack.dim()];
    for (&t, cb) in id.tokens().iter().zip(stack.levels()) {
        for (o, c) in out.iter_mut().zip(cb.centroid(t as usize)) {
            *o += c;
        }
    }
    Ok(out)
}
