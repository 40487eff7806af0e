use std::io::Write;
use std::path::{Path, PathBuf};

use increg_core::data::{synthetic_blobs, Dataset, Splits};
use increg_core::{Error, Result, Shape3};

use crate::config::{CifarConfig, DatasetConfig, IdxConfig};

const CIFAR_IMAGE: usize = 3 * 32 * 32;
const CIFAR_RECORD: usize = 1 + CIFAR_IMAGE;

fn format_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        msg: msg.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Parsed IDX file: dimensions and raw unsigned bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Idx {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

pub fn parse_idx(bytes: &[u8]) -> Result<Idx> {
    if bytes.len() < 4 {
        return Err(format_err(bytes.len(), "missing IDX magic"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(format_err(0, "IDX magic must start with two zero bytes"));
    }
    if bytes[2] != 0x08 {
        return Err(format_err(2, format!("unsupported IDX element type 0x{:02x}", bytes[2])));
    }
    let ndim = bytes[3] as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(format_err(bytes.len(), "truncated IDX header"));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect();
    let len: usize = dims.iter().product();
    let body = &bytes[header..];
    if body.len() < len {
        return Err(format_err(bytes.len(), format!("IDX body holds {} of {len} bytes", body.len())));
    }
    if body.len() > len {
        return Err(format_err(header + len, "trailing bytes after IDX body"));
    }
    Ok(Idx {
        dims,
        data: body.to_vec(),
    })
}

pub fn write_idx<W: Write>(mut w: W, dims: &[usize], data: &[u8]) -> Result<()> {
    let len: usize = dims.iter().product();
    if len != data.len() || dims.len() > 255 {
        return Err(Error::DimMismatch(format!("{} bytes for dims {dims:?}", data.len())));
    }
    w.write_all(&[0, 0, 0x08, dims.len() as u8])?;
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::InvalidArgument(format!("IDX dim {d} too large")))?;
        w.write_all(&d.to_be_bytes())?;
    }
    w.write_all(data)?;
    Ok(())
}

/// Pairs an image file (`[n, h, w]` or `[n, c, h, w]`) with a label file
/// (`[n]`). Pixels are scaled to `[0, 1]`.
pub fn idx_dataset(images: &Idx, labels: &Idx, classes: usize) -> Result<Dataset> {
    let shape = match images.dims.as_slice() {
        [_, h, w] => Shape3::new(1, *h, *w),
        [_, c, h, w] => Shape3::new(*c, *h, *w),
        d => return Err(Error::DimMismatch(format!("IDX images must have 3 or 4 dims, got {d:?}"))),
    };
    if labels.dims.len() != 1 || labels.dims[0] != images.dims[0] {
        return Err(Error::DimMismatch(format!(
            "label dims {:?} do not match {} images",
            labels.dims, images.dims[0]
        )));
    }
    if let Some(pos) = labels.data.iter().position(|&l| l as usize >= classes) {
        return Err(format_err(
            8 + pos,
            format!("label {} outside 0..{classes}", labels.data[pos]),
        ));
    }
    let pixels = images.data.iter().map(|&b| f32::from(b) / 255.0).collect();
    let labels = labels.data.iter().map(|&l| l as usize).collect();
    Dataset::new(shape, classes, pixels, labels)
}

fn load_idx(cfg: &IdxConfig) -> Result<Splits> {
    let load = |img: &PathBuf, lab: &PathBuf| -> Result<Dataset> {
        idx_dataset(&parse_idx(&read(img)?)?, &parse_idx(&read(lab)?)?, cfg.classes)
    };
    let full = load(&cfg.train_images, &cfg.train_labels)?;
    let test = load(&cfg.test_images, &cfg.test_labels)?;
    if cfg.val >= full.len() {
        return Err(Error::Config(format!(
            "validation size {} leaves no training images out of {}",
            cfg.val,
            full.len()
        )));
    }
    let cut = full.len() - cfg.val;
    Ok(Splits {
        train: full.slice(0..cut),
        val: full.slice(cut..full.len()),
        test,
    })
}

/// Records of a CIFAR-10 binary batch: one label byte then 3072 pixel
/// bytes in channel-major order.
pub fn parse_cifar(bytes: &[u8]) -> Result<(Vec<f32>, Vec<usize>)> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        let whole = bytes.len() / CIFAR_RECORD * CIFAR_RECORD;
        return Err(format_err(
            whole,
            format!("truncated record: {} of {CIFAR_RECORD} bytes", bytes.len() - whole),
        ));
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut images = Vec::with_capacity(n * CIFAR_IMAGE);
    let mut labels = Vec::with_capacity(n);
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] >= 10 {
            return Err(format_err(i * CIFAR_RECORD, format!("label {} outside 0..10", rec[0])));
        }
        labels.push(rec[0] as usize);
        images.extend(rec[1..].iter().map(|&b| f32::from(b) / 255.0));
    }
    Ok((images, labels))
}

pub fn cifar_files(dir: &Path) -> Vec<PathBuf> {
    (1..=5)
        .map(|i| dir.join(format!("data_batch_{i}.bin")))
        .chain(std::iter::once(dir.join("test_batch.bin")))
        .collect()
}

fn load_cifar_file(path: &Path) -> Result<Dataset> {
    let (images, labels) = parse_cifar(&read(path)?).map_err(|e| match e {
        Error::Format { offset, msg } => Error::Format {
            offset,
            msg: format!("{}: {msg}", path.display()),
        },
        e => e,
    })?;
    Dataset::new(Shape3::new(3, 32, 32), 10, images, labels)
}

fn concat(parts: Vec<Dataset>) -> Result<Dataset> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for p in parts {
        images.extend(p.images);
        labels.extend(p.labels);
    }
    Dataset::new(Shape3::new(3, 32, 32), 10, images, labels)
}

fn load_cifar(cfg: &CifarConfig) -> Result<Splits> {
    let files = cifar_files(&cfg.dir);
    let train_parts = files[..5].iter().map(|p| load_cifar_file(p)).collect::<Result<Vec<_>>>()?;
    let full = concat(train_parts)?;
    if cfg.train + cfg.val > full.len() {
        return Err(Error::Config(format!(
            "train {} + val {} exceeds {} training images",
            cfg.train,
            cfg.val,
            full.len()
        )));
    }
    Ok(Splits {
        train: full.slice(0..cfg.train),
        val: full.slice(cfg.train..cfg.train + cfg.val),
        test: load_cifar_file(&files[5])?,
    })
}

/// Loads the configured splits without normalization.
pub fn load_dataset(cfg: &DatasetConfig) -> Result<Splits> {
    match cfg {
        DatasetConfig::Synthetic(b) => synthetic_blobs(b),
        DatasetConfig::Idx(c) => load_idx(c),
        DatasetConfig::Cifar10Binary(c) => load_cifar(c),
    }
}

/// Subtracts stored means, or computes them from the train split.
pub fn normalize(splits: &mut Splits, means: Option<&[f32]>) -> Result<Vec<f32>> {
    match means {
        None => Ok(splits.normalize()),
        Some(m) => {
            if m.len() != splits.train.shape.channels {
                return Err(Error::DimMismatch(format!(
                    "{} stored channel means for {} channels",
                    m.len(),
                    splits.train.shape.channels
                )));
            }
            for d in [&mut splits.train, &mut splits.val, &mut splits.test] {
                d.subtract_means(m);
            }
            Ok(m.to_vec())
        }
    }
}
