use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

pub const EMBEDDING_MAGIC: &[u8; 6] = b"SEMID\0";
pub const EMBEDDING_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    /// Little-endian binary records behind a `SEMID\0` header.
    Bin,
    /// One `key<TAB>v1,v2,...` record per line.
    Lines,
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(Self::Bin),
            "lines" => Ok(Self::Lines),
            other => Err(Error::InvalidConfig(format!(
                "unknown embedding format {other:?}"
            ))),
        }
    }
}

/// Reads an embedding file. Without an explicit format the binary magic
/// decides.
pub fn read_embeddings(path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingSet> {
    let bytes = fs::read(path)?;
    let format = format.unwrap_or(if bytes.starts_with(EMBEDDING_MAGIC) {
        EmbeddingFormat::Bin
    } else {
        EmbeddingFormat::Lines
    });
    match format {
        EmbeddingFormat::Bin => read_embeddings_bin(&bytes),
        EmbeddingFormat::Lines => {
            let text = String::from_utf8(bytes).map_err(|e| Error::Malformed {
                location: format!("byte {}", e.utf8_error().valid_up_to()),
                reason: "not valid UTF-8".into(),
            })?;
            read_embeddings_lines(&text, None)
        }
    }
}

pub fn write_embeddings(path: &Path, set: &EmbeddingSet, format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Bin => write_embeddings_bin(set)?,
        EmbeddingFormat::Lines => write_embeddings_lines(set)?.into_bytes(),
    };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Malformed {
                location: format!("byte {}", self.pos),
                reason: format!(
                    "truncated {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_embeddings_bin(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(6, "magic")? != EMBEDDING_MAGIC {
        return Err(Error::Malformed {
            location: "byte 0".into(),
            reason: "missing SEMID magic".into(),
        });
    }
    let version = cur.u32("version")?;
    if version != EMBEDDING_VERSION {
        return Err(Error::VersionMismatch {
            expected: EMBEDDING_VERSION,
            found: version,
        });
    }
    let count = cur.u64("count")?;
    let dim_at = cur.pos;
    let dim = cur.u32("dim")? as usize;
    if dim == 0 {
        return Err(Error::Malformed {
            location: format!("byte {dim_at}"),
            reason: "dimension is zero".into(),
        });
    }
    // Each record needs at least its length prefix and payload.
    let min_record = 2 + 4 * dim as u64;
    if count.saturating_mul(min_record) > (bytes.len() - cur.pos) as u64 {
        return Err(Error::Malformed {
            location: format!("byte {}", cur.pos),
            reason: format!("declared count {count} exceeds the payload"),
        });
    }
    let count = count as usize;
    let mut keys = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut seen = std::collections::HashSet::with_capacity(count);
    for _ in 0..count {
        let rec_at = cur.pos;
        let klen = cur.u16("key length")? as usize;
        let kbytes = cur.take(klen, "key")?;
        let key = std::str::from_utf8(kbytes).map_err(|_| Error::Malformed {
            location: format!("byte {}", rec_at + 2),
            reason: "key is not valid UTF-8".into(),
        })?;
        if !seen.insert(key) {
            return Err(Error::DuplicateKey {
                key: key.to_string(),
                location: format!("byte {rec_at}"),
            });
        }
        keys.push(key.to_string());
        let vals_at = cur.pos;
        for (j, chunk) in cur.take(4 * dim, "vector")?.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    location: format!("byte {}", vals_at + 4 * j),
                });
            }
            data.push(v);
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::Malformed {
            location: format!("byte {}", cur.pos),
            reason: format!(
                "{} trailing bytes after {count} records",
                bytes.len() - cur.pos
            ),
        });
    }
    EmbeddingSet::new(keys, data, dim)
}

pub fn write_embeddings_bin(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(18 + set.len() * (2 + 8 + 4 * set.dim()));
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&(set.dim() as u32).to_le_bytes());
    for (key, v) in set.iter() {
        let len = u16::try_from(key.len()).map_err(|_| Error::Malformed {
            location: format!("key {key:?}"),
            reason: "key longer than 65535 bytes".into(),
        })?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(key.as_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses the line format. Blank lines and `#` comments are skipped; the
/// dimension comes from `dim` or the first record.
pub fn read_embeddings_lines(text: &str, dim: Option<usize>) -> Result<EmbeddingSet> {
    let mut dim = dim;
    let mut keys = Vec::new();
    let mut data = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, values) = line.split_once('\t').ok_or_else(|| Error::Malformed {
            location: format!("line {lineno}"),
            reason: "expected key<TAB>values".into(),
        })?;
        let row = values
            .split(',')
            .map(|v| {
                v.trim().parse::<f32>().map_err(|e| Error::Malformed {
                    location: format!("line {lineno}"),
                    reason: format!("value {v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f32>>>()?;
        let expected = *dim.get_or_insert(row.len());
        if row.len() != expected {
            return Err(Error::DimensionMismatch {
                location: format!("line {lineno}"),
                expected,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                location: format!("line {lineno}"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::DuplicateKey {
                key: key.to_string(),
                location: format!("line {lineno}"),
            });
        }
        keys.push(key.to_string());
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Malformed {
        location: "line 1".into(),
        reason: "no records; dimension unknown".into(),
    })?;
    EmbeddingSet::new(keys, data, dim)
}

pub fn write_embeddings_lines(set: &EmbeddingSet) -> Result<String> {
    let mut out = String::new();
    for (key, v) in set.iter() {
        if key.contains(['\t', '\n', '\r']) || key.starts_with('#') || key.trim().is_empty() {
            return Err(Error::Malformed {
                location: format!("key {key:?}"),
                reason: "key cannot be represented in the line format".into(),
            });
        }
        out.push_str(key);
        out.push('\t');
        for (j, x) in v.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // Shortest representation that parses back to the same f32.
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}
