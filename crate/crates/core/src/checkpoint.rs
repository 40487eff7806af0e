use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increg::{GroupKind, GroupState};
use crate::nn::{Architecture, Network};

pub const MAGIC: &[u8; 8] = b"INCREG01";
pub const FORMAT_VERSION: u32 = 1;

/// Persisted scheduler state of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub layer: usize,
    pub id: usize,
    pub kind: GroupKind,
    pub lambda: f64,
    pub pruned: bool,
}

impl From<&GroupState> for GroupRecord {
    fn from(g: &GroupState) -> Self {
        Self {
            layer: g.layer,
            id: g.id,
            kind: g.kind,
            lambda: g.lambda,
            pruned: g.pruned,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub architecture: Architecture,
    pub iteration: u64,
    pub seed: u64,
    #[serde(default)]
    pub groups: Vec<GroupRecord>,
    /// Per-channel means subtracted from the inputs.
    #[serde(default)]
    pub normalization: Option<Vec<f32>>,
}

impl CheckpointMeta {
    pub fn new(net: &Network<f32>, iteration: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            architecture: net.architecture().clone(),
            iteration,
            seed: net.seed(),
            groups: Vec::new(),
            normalization: None,
        }
    }
}

/// Layout: magic, u64 LE length of the JSON block, the JSON metadata, then
/// every parameter tensor as LE `f32` in declaration order.
pub fn write_checkpoint<W: Write>(mut w: W, net: &Network<f32>, meta: &CheckpointMeta) -> Result<()> {
    if meta.architecture != *net.architecture() {
        return Err(Error::InvalidArgument(
            "checkpoint metadata architecture differs from the network".into(),
        ));
    }
    let json = serde_json::to_vec(meta)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::new();
    for t in net.tensors() {
        buf.clear();
        buf.reserve(t.len() * 4);
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(Network<f32>, CheckpointMeta)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: impl AsRef<Path>, net: &Network<f32>, meta: &CheckpointMeta) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_checkpoint(std::io::BufWriter::new(f), net, meta)
}

pub fn load(path: impl AsRef<Path>) -> Result<(Network<f32>, CheckpointMeta)> {
    decode(&std::fs::read(path)?)
}

fn decode(bytes: &[u8]) -> Result<(Network<f32>, CheckpointMeta)> {
    let fmt = |offset: usize, msg: String| Error::Format {
        offset: offset as u64,
        msg,
    };
    if bytes.len() < 16 {
        return Err(fmt(bytes.len(), "truncated header".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(fmt(0, "bad magic".into()));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let end = 16usize
        .checked_add(usize::try_from(len).map_err(|_| fmt(8, "metadata length overflow".into()))?)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| fmt(8, format!("metadata length {len} exceeds file")))?;
    let meta: CheckpointMeta =
        serde_json::from_slice(&bytes[16..end]).map_err(|e| fmt(16, format!("metadata: {e}")))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(fmt(16, format!("unsupported format version {}", meta.format_version)));
    }
    let mut net = Network::<f32>::new(meta.architecture.clone(), meta.seed)
        .map_err(|e| fmt(16, format!("architecture: {e}")))?;
    let mut pos = end;
    for t in net.tensors_mut() {
        let need = t.len() * 4;
        if bytes.len() - pos < need {
            return Err(fmt(bytes.len(), format!("truncated tensor data, expected {need} bytes at {pos}")));
        }
        for (v, chunk) in t.iter_mut().zip(bytes[pos..pos + need].chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
        pos += need;
    }
    if pos != bytes.len() {
        return Err(fmt(pos, format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok((net, meta))
}

/// Restores `lambda` and `pruned` into freshly built groups.
pub fn apply_records(groups: &mut [GroupState], records: &[GroupRecord]) -> Result<()> {
    for rec in records {
        let g = groups
            .iter_mut()
            .find(|g| g.layer == rec.layer && g.id == rec.id && g.kind == rec.kind)
            .ok_or_else(|| {
                Error::Config(format!(
                    "checkpoint group {} of layer {} ({}) has no counterpart",
                    rec.id, rec.layer, rec.kind
                ))
            })?;
        g.lambda = rec.lambda;
        g.pruned = rec.pruned;
    }
    Ok(())
}
