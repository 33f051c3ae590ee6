//! Persisted indexes.
//!
//! A file is one JSON header line followed by the centroid payload. The
//! header carries the index shape, the training parameters and a SHA-256
//! digest of the payload. Centroids are stored either as raw little-endian
//! `f32` or as decimal text with nine significant digits; both decode to
//! the exact same `f32` values.
//!
//! Stack payload: the centroid rows of level 1, then level 2, and so on.
//! Tree payload: nodes in pre-order, each as `arity count centroid...`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quantizer::{HcNode, HcTree, Index, TrainParams, TrainedIndex};
use crate::types::{Codebook, CodebookStack};

pub const INDEX_VERSION: u32 = 1;
const FORMAT_TAG: &str = "semid-index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidEncoding {
    F32,
    Text,
}

impl std::str::FromStr for CentroidEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Self::F32),
            "text" => Ok(Self::Text),
            other => Err(Error::InvalidConfig(format!(
                "unknown centroid encoding {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: String,
    dim: usize,
    levels: usize,
    /// Per-level codebook sizes for stacks; empty for trees.
    #[serde(default)]
    sizes: Vec<usize>,
    /// Branching factor for trees; zero for stacks.
    #[serde(default)]
    branching: usize,
    encoding: CentroidEncoding,
    params: TrainParams,
    payload_sha256: String,
}

struct PayloadWriter {
    encoding: CentroidEncoding,
    buf: Vec<u8>,
}

impl PayloadWriter {
    fn node_prefix(&mut self, arity: usize, count: usize) {
        match self.encoding {
            CentroidEncoding::F32 => {
                self.buf.extend_from_slice(&(arity as u32).to_le_bytes());
                self.buf.extend_from_slice(&(count as u64).to_le_bytes());
            }
            CentroidEncoding::Text => {
                self.buf
                    .extend_from_slice(format!("{arity} {count} ").as_bytes());
            }
        }
    }

    fn row(&mut self, values: &[f32]) {
        match self.encoding {
            CentroidEncoding::F32 => values
                .iter()
                .for_each(|v| self.buf.extend_from_slice(&v.to_le_bytes())),
            CentroidEncoding::Text => {
                let line: Vec<String> = values.iter().map(|v| format!("{v:.8e}")).collect();
                self.buf.extend_from_slice(line.join(" ").as_bytes());
                self.buf.push(b'\n');
            }
        }
    }
}

enum PayloadReader<'a> {
    F32 {
        bytes: &'a [u8],
        pos: usize,
    },
    Text {
        tokens: std::str::SplitAsciiWhitespace<'a>,
    },
}

impl<'a> PayloadReader<'a> {
    fn new(encoding: CentroidEncoding, bytes: &'a [u8]) -> Result<Self> {
        Ok(match encoding {
            CentroidEncoding::F32 => PayloadReader::F32 { bytes, pos: 0 },
            CentroidEncoding::Text => PayloadReader::Text {
                tokens: std::str::from_utf8(bytes)
                    .map_err(|_| Error::Corrupt("text payload is not UTF-8".into()))?
                    .split_ascii_whitespace(),
            },
        })
    }

    fn bytes<const N: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; N]> {
        let out = bytes
            .get(*pos..*pos + N)
            .ok_or_else(|| Error::Corrupt(format!("payload truncated at byte {}", *pos)))?;
        *pos += N;
        Ok(out.try_into().unwrap())
    }

    fn text_token(tokens: &mut std::str::SplitAsciiWhitespace<'a>) -> Result<&'a str> {
        tokens
            .next()
            .ok_or_else(|| Error::Corrupt("text payload truncated".into()))
    }

    fn node_prefix(&mut self) -> Result<(usize, usize)> {
        match self {
            PayloadReader::F32 { bytes, pos } => {
                let arity = u32::from_le_bytes(Self::bytes::<4>(bytes, pos)?) as usize;
                let count = u64::from_le_bytes(Self::bytes::<8>(bytes, pos)?) as usize;
                Ok((arity, count))
            }
            PayloadReader::Text { tokens } => {
                let mut int = || -> Result<usize> {
                    let t = Self::text_token(tokens)?;
                    t.parse()
                        .map_err(|_| Error::Corrupt(format!("bad integer {t:?} in payload")))
                };
                Ok((int()?, int()?))
            }
        }
    }

    fn row(&mut self, dim: usize) -> Result<Vec<f32>> {
        (0..dim)
            .map(|_| match self {
                PayloadReader::F32 { bytes, pos } => {
                    Ok(f32::from_le_bytes(Self::bytes::<4>(bytes, pos)?))
                }
                PayloadReader::Text { tokens } => {
                    let t = Self::text_token(tokens)?;
                    t.parse::<f32>()
                        .map_err(|_| Error::Corrupt(format!("bad value {t:?} in payload")))
                }
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        let leftover = match self {
            PayloadReader::F32 { bytes, pos } => pos != bytes.len(),
            PayloadReader::Text { mut tokens } => tokens.next().is_some(),
        };
        if leftover {
            return Err(Error::Corrupt("trailing data after payload".into()));
        }
        Ok(())
    }
}

fn encode_tree(node: &HcNode, w: &mut PayloadWriter) {
    w.node_prefix(node.arity(), node.count);
    w.row(&node.centroid);
    for c in &node.children {
        encode_tree(c, w);
    }
}

fn decode_tree(
    r: &mut PayloadReader<'_>,
    dim: usize,
    left: usize,
    branching: usize,
) -> Result<HcNode> {
    let (arity, count) = r.node_prefix()?;
    if arity > branching || (left == 0) != (arity == 0) {
        return Err(Error::Corrupt(format!(
            "node arity {arity} invalid with {left} levels remaining"
        )));
    }
    let centroid = r.row(dim)?;
    let children = (0..arity)
        .map(|_| decode_tree(r, dim, left - 1, branching))
        .collect::<Result<Vec<_>>>()?;
    Ok(HcNode {
        centroid,
        count,
        children,
    })
}

/// Serializes an index and its training parameters.
pub fn encode_index(index: &TrainedIndex, encoding: CentroidEncoding) -> Vec<u8> {
    let mut w = PayloadWriter {
        encoding,
        buf: Vec::new(),
    };
    let (sizes, branching) = match &index.index {
        Index::Rq(stack) => {
            for cb in stack.levels() {
                for i in 0..cb.size() {
                    w.row(cb.centroid(i));
                }
            }
            (stack.sizes(), 0)
        }
        Index::Hc(tree) => {
            encode_tree(tree.root(), &mut w);
            (Vec::new(), tree.branching())
        }
    };
    let header = Header {
        format: FORMAT_TAG.into(),
        version: INDEX_VERSION,
        kind: index.index.kind().into(),
        dim: index.index.dim(),
        levels: index.index.num_levels(),
        sizes,
        branching,
        encoding,
        params: index.params,
        payload_sha256: hex::encode(Sha256::digest(&w.buf)),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.extend_from_slice(&w.buf);
    out
}

pub fn decode_index(bytes: &[u8]) -> Result<TrainedIndex> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Corrupt("missing header line".into()))?;
    let header: Header =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Corrupt(format!("header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(Error::Corrupt(format!(
            "unexpected format tag {:?}",
            header.format
        )));
    }
    if header.version != INDEX_VERSION {
        return Err(Error::VersionMismatch {
            expected: INDEX_VERSION,
            found: header.version,
        });
    }
    if header.levels == 0 {
        return Err(Error::Corrupt("index declares zero levels".into()));
    }
    if header.dim == 0 {
        return Err(Error::Corrupt("index declares zero dimension".into()));
    }
    let payload = &bytes[nl + 1..];
    if hex::encode(Sha256::digest(payload)) != header.payload_sha256 {
        return Err(Error::Corrupt("payload checksum mismatch".into()));
    }
    let mut r = PayloadReader::new(header.encoding, payload)?;
    let index = match header.kind.as_str() {
        "rq" => {
            if header.sizes.len() != header.levels || header.sizes.contains(&0) {
                return Err(Error::Corrupt(format!(
                    "sizes {:?} do not describe {} levels",
                    header.sizes, header.levels
                )));
            }
            let books = header
                .sizes
                .iter()
                .enumerate()
                .map(|(l, &size)| {
                    let rows = (0..size)
                        .map(|_| r.row(header.dim))
                        .collect::<Result<Vec<_>>>()?;
                    Codebook::new(l + 1, rows.concat(), header.dim)
                })
                .collect::<Result<Vec<_>>>()?;
            Index::Rq(CodebookStack::new(books)?)
        }
        "hc" => {
            let root = decode_tree(&mut r, header.dim, header.levels, header.branching)?;
            Index::Hc(HcTree::new(
                header.levels,
                header.branching,
                header.dim,
                root,
            )?)
        }
        other => return Err(Error::Corrupt(format!("unknown index kind {other:?}"))),
    };
    r.finish()?;
    Ok(TrainedIndex {
        index,
        params: header.params,
    })
}

pub fn write_index(path: &Path, index: &TrainedIndex, encoding: CentroidEncoding) -> Result<()> {
    fs::write(path, encode_index(index, encoding))?;
    Ok(())
}

pub fn read_index(path: &Path) -> Result<TrainedIndex> {
    decode_index(&fs::read(path)?)
}
