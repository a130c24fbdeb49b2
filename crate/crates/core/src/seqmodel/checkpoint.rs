//! Binary checkpoint container.
//!
//! ```text
//! magic   8 bytes  "THZRCKPT"
//! version u32 LE
//! hlen    u64 LE   length of the JSON header
//! header  hlen bytes: shape, task, dropout, seed, parameter group table
//! count   u64 LE   number of f64 values that follow
//! values  f64 LE   weights, then normalizer mean (3) and std (3)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelParams, ModelShape, PositionNormalizer, Task};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"THZRCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    shape: ModelShape,
    task: Task,
    dropout: f64,
    seed: u64,
    groups: Vec<(String, usize, usize)>,
}

pub fn write_checkpoint(path: &Path, model: &ModelParams, seed: u64) -> Result<()> {
    let header = Header {
        shape: model.shape,
        task: model.task,
        dropout: model.dropout,
        seed,
        groups: model
            .shape
            .groups()
            .into_iter()
            .map(|g| (g.name, g.offset, g.len))
            .collect(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let values = model
        .weights
        .iter()
        .chain(&model.normalizer.mean)
        .chain(&model.normalizer.std);
    let mut buf = Vec::with_capacity(32 + header.len() + 8 * (model.weights.len() + 6));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&((model.weights.len() + 6) as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Returns the model and the seed it was trained with.
pub fn read_checkpoint(path: &Path) -> Result<(ModelParams, u64)> {
    let bad = |message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(8).ok_or_else(|| bad("truncated".into()))? != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(cur.array().ok_or_else(|| bad("truncated".into()))?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: version.to_string(),
            expected: CHECKPOINT_VERSION.to_string(),
        });
    }
    let hlen = u64::from_le_bytes(cur.array().ok_or_else(|| bad("truncated".into()))?) as usize;
    let header: Header = serde_json::from_slice(cur.take(hlen).ok_or_else(|| bad("truncated header".into()))?)
        .map_err(|e| bad(format!("bad header: {e}")))?;
    let count = u64::from_le_bytes(cur.array().ok_or_else(|| bad("truncated".into()))?) as usize;
    let n = header.shape.n_params();
    if count != n + 6 {
        return Err(bad(format!("expected {} values, header says {count}", n + 6)));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(f64::from_le_bytes(cur.array().ok_or_else(|| bad("truncated tensor data".into()))?));
    }
    if cur.pos != bytes.len() {
        return Err(bad("trailing bytes".into()));
    }
    let std = [values[n + 3], values[n + 4], values[n + 5]];
    let mean = [values[n], values[n + 1], values[n + 2]];
    values.truncate(n);
    let model = ModelParams::from_parts(header.shape, header.task, header.dropout, PositionNormalizer { mean, std }, values)?;
    Ok((model, header.seed))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn array<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.take(N).map(|s| s.try_into().expect("length checked"))
    }
}
