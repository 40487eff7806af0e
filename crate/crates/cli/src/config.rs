use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use increg_core::compact::BenchConfig;
use increg_core::data::BlobsConfig;
use increg_core::increg::{GroupKind, LayerTarget, PruneSchedule};
use increg_core::nn::{presets, Architecture, TrainConfig};
use increg_core::{Error, Shape3};

/// Everything a command needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory for checkpoints, metrics and reports.
    pub out: PathBuf,
    pub dataset: DatasetConfig,
    pub architecture: ArchConfig,
    pub train: TrainConfig,
    pub prune: PruneConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("runs/default"),
            dataset: DatasetConfig::Synthetic(BlobsConfig::default()),
            architecture: ArchConfig::Preset {
                preset: "toy".into(),
            },
            train: TrainConfig::default(),
            prune: PruneConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case")]
pub enum DatasetConfig {
    /// Gaussian blobs generated in memory.
    Synthetic(BlobsConfig),
    /// IDX files (MNIST layout). The last `val` training images form the
    /// validation split.
    Idx(IdxConfig),
    /// CIFAR-10 binary batches `data_batch_{1..5}.bin` and `test_batch.bin`.
    Cifar10Binary(CifarConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdxConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_idx_val")]
    pub val: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CifarConfig {
    pub dir: PathBuf,
    #[serde(default = "default_cifar_train")]
    pub train: usize,
    #[serde(default = "default_cifar_val")]
    pub val: usize,
}

fn default_idx_val() -> usize {
    5000
}
fn default_classes() -> usize {
    10
}
fn default_cifar_train() -> usize {
    45_000
}
fn default_cifar_val() -> usize {
    5000
}

impl DatasetConfig {
    pub fn input_shape(&self) -> Option<Shape3> {
        match self {
            Self::Synthetic(b) => Some(b.shape),
            Self::Cifar10Binary(_) => Some(Shape3::new(3, 32, 32)),
            Self::Idx(_) => None,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            Self::Synthetic(b) => b.classes,
            Self::Idx(c) => c.classes,
            Self::Cifar10Binary(_) => 10,
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            Self::Synthetic(_) => {}
            Self::Idx(c) => {
                for p in [&mut c.train_images, &mut c.train_labels, &mut c.test_images, &mut c.test_labels] {
                    fix(p);
                }
            }
            Self::Cifar10Binary(c) => fix(&mut c.dir),
        }
    }

    fn files(&self) -> Vec<PathBuf> {
        match self {
            Self::Synthetic(_) => Vec::new(),
            Self::Idx(c) => vec![
                c.train_images.clone(),
                c.train_labels.clone(),
                c.test_images.clone(),
                c.test_labels.clone(),
            ],
            Self::Cifar10Binary(c) => crate::dataset::cifar_files(&c.dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchConfig {
    /// `toy` or `convnet`.
    Preset { preset: String },
    Inline(Architecture),
}

impl ArchConfig {
    pub fn resolve(&self, classes: usize) -> Result<Architecture, Error> {
        match self {
            Self::Preset { preset } => presets::by_name(preset, classes)
                .ok_or_else(|| Error::Config(format!("unknown architecture preset {preset:?}"))),
            Self::Inline(a) => {
                a.resolve()?;
                Ok(a.clone())
            }
        }
    }
}

/// Pruning section. With no explicit `targets`, `ratio` applies to every
/// prunable convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub kind: GroupKind,
    pub ratio: f64,
    /// Defaults to half the training weight decay.
    pub speed: Option<f64>,
    pub epsilon: f64,
    pub update_interval: u64,
    pub retrain_iters: u64,
    /// Iterations of pruning allowed before giving up.
    pub max_iters: u64,
    pub targets: Vec<LayerTarget>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        let s = PruneSchedule::default();
        Self {
            kind: s.kind,
            ratio: 0.5,
            speed: s.speed,
            epsilon: s.epsilon,
            update_interval: s.update_interval,
            retrain_iters: s.retrain_iters,
            max_iters: 100_000,
            targets: Vec::new(),
        }
    }
}

impl PruneConfig {
    pub fn schedule(&self, arch: &Architecture) -> PruneSchedule {
        let mut s = if self.targets.is_empty() {
            PruneSchedule::uniform(arch, self.ratio, self.kind)
        } else {
            PruneSchedule {
                targets: self.targets.clone(),
                kind: self.kind,
                ..PruneSchedule::default()
            }
        };
        s.speed = self.speed;
        s.epsilon = self.epsilon;
        s.update_interval = self.update_interval;
        s.retrain_iters = self.retrain_iters;
        s
    }
}

impl RunConfig {
    /// Reads a TOML file; relative dataset and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset.resolve_paths(base);
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn arch(&self) -> Result<Architecture, Error> {
        let arch = self.architecture.resolve(self.dataset.classes())?;
        if let Some(shape) = self.dataset.input_shape() {
            if shape != arch.input {
                return Err(Error::Config(format!(
                    "architecture input {:?} does not match dataset images {:?}",
                    arch.input, shape
                )));
            }
        }
        Ok(arch)
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<(), Error> {
        for f in self.dataset.files() {
            if !f.exists() {
                return Err(Error::Config(format!("dataset file {} does not exist", f.display())));
            }
        }
        let arch = self.arch()?;
        self.train.validate()?;
        self.prune
            .schedule(&arch)
            .validate(&arch, self.train.weight_decay)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn inline_architecture_and_targets() {
        let text = r#"
            seed = 3
            [dataset]
            format = "synthetic"
            classes = 3
            [architecture]
            input = { channels = 2, height = 8, width = 8 }
            [[architecture.layers]]
            kind = "conv"
            filters = 4
            kernel_h = 3
            kernel_w = 3
            stride = 1
            pad = 1
            [[architecture.layers]]
            kind = "relu"
            [[architecture.layers]]
            kind = "fully_connected"
            out = 3
            [[architecture.layers]]
            kind = "softmax_xent"
            [prune]
            kind = "row"
            [[prune.targets]]
            layer = 0
            ratio = 0.25
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(matches!(cfg.architecture, ArchConfig::Inline(_)));
        let arch = cfg.arch().unwrap();
        let s = cfg.prune.schedule(&arch);
        assert_eq!(s.targets.len(), 1);
        assert_eq!(s.kind, GroupKind::Row);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_missing_files() {
        assert!(toml::from_str::<RunConfig>("sede = 1").is_err());
        let text = r#"
            [dataset]
            format = "cifar10-binary"
            dir = "/nonexistent/cifar"
            [architecture]
            preset = "convnet"
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn shape_mismatch_is_a_config_error() {
        let cfg = RunConfig {
            architecture: ArchConfig::Preset {
                preset: "convnet".into(),
            },
            ..RunConfig::default()
        };
        assert!(matches!(cfg.arch(), Err(Error::Config(_))));
    }
}
