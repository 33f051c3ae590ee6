//! File formats, persistence and synthetic corpora.

mod embeddings;
mod idmap;
mod index_file;
mod synth;

pub use embeddings::{
    read_embeddings, read_embeddings_bin, read_embeddings_lines, write_embeddings,
    write_embeddings_bin, write_embeddings_lines, EmbeddingFormat, EMBEDDING_MAGIC,
    EMBEDDING_VERSION,
};
pub use idmap::{format_idmap, parse_idmap, read_idmap, write_idmap, IdMapHeader};
pub use index_file::{
    decode_index, encode_index, read_index, write_index, CentroidEncoding, INDEX_VERSION,
};
pub use synth::gen_synthetic;
