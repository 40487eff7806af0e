//! In-memory labelled image sets, seeded batch sampling and synthetic
//! Gaussian blobs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape3, Tensor4};

/// Labelled images stored as `f32` in `(n, c, h, w)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub shape: Shape3,
    pub classes: usize,
    pub images: Vec<f32>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(shape: Shape3, classes: usize, images: Vec<f32>, labels: Vec<usize>) -> Result<Self> {
        if images.len() != labels.len() * shape.len() {
            return Err(Error::DimMismatch(format!(
                "{} pixels for {} images of {}",
                images.len(),
                labels.len(),
                shape.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidArgument(format!(
                "label {l} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            shape,
            classes,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let n = self.shape.len();
        &self.images[i * n..(i + 1) * n]
    }

    /// Gathers `indices` into a batch tensor and label vector.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor4<T>, Vec<usize>)> {
        let n = self.shape.len();
        let mut data = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange {
                    what: "dataset sample",
                    index: i,
                    len: self.len(),
                });
            }
            data.extend(self.image(i).iter().map(|&v| T::from_f64(v as f64)));
            labels.push(self.labels[i]);
        }
        let s = self.shape;
        Ok((
            Tensor4::from_vec([indices.len(), s.channels, s.height, s.width], data)?,
            labels,
        ))
    }

    /// Samples `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let n = self.shape.len();
        Self {
            shape: self.shape,
            classes: self.classes,
            images: self.images[range.start * n..range.end * n].to_vec(),
            labels: self.labels[range].to_vec(),
        }
    }

    /// Per-channel pixel mean.
    pub fn channel_means(&self) -> Vec<f32> {
        let plane = self.shape.height * self.shape.width;
        let mut sums = vec![0.0f64; self.shape.channels];
        for img in self.images.chunks(self.shape.len().max(1)) {
            for (c, s) in sums.iter_mut().enumerate() {
                *s += img[c * plane..(c + 1) * plane].iter().map(|&v| v as f64).sum::<f64>();
            }
        }
        let count = (self.len() * plane).max(1) as f64;
        sums.into_iter().map(|s| (s / count) as f32).collect()
    }

    pub fn subtract_means(&mut self, means: &[f32]) {
        let plane = self.shape.height * self.shape.width;
        let len = self.shape.len().max(1);
        for img in self.images.chunks_mut(len) {
            for (c, &m) in means.iter().enumerate() {
                for v in &mut img[c * plane..(c + 1) * plane] {
                    *v -= m;
                }
            }
        }
    }
}

/// Train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    /// Subtracts the train split's channel means from every split and
    /// returns them.
    pub fn normalize(&mut self) -> Vec<f32> {
        let means = self.train.channel_means();
        for d in [&mut self.train, &mut self.val, &mut self.test] {
            d.subtract_means(&means);
        }
        means
    }
}

/// Seeded sampler that walks a fresh permutation each epoch.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    epoch: u64,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Self {
            order,
            pos: 0,
            epoch: 0,
            rng,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        if self.order.is_empty() {
            return out;
        }
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
                self.epoch += 1;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Gaussian blobs around one random prototype image per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobsConfig {
    pub classes: usize,
    pub shape: Shape3,
    /// Standard deviation of per-pixel noise; prototypes have unit scale.
    pub noise: f64,
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for BlobsConfig {
    fn default() -> Self {
        Self {
            classes: 4,
            shape: Shape3::new(2, 8, 8),
            noise: 1.0,
            seed: 0,
            train: 1024,
            val: 256,
            test: 256,
        }
    }
}

pub fn synthetic_blobs(cfg: &BlobsConfig) -> Result<Splits> {
    if cfg.classes == 0 || cfg.shape.is_empty() {
        return Err(Error::Config("blobs need classes > 0 and a nonempty shape".into()));
    }
    if !(cfg.noise >= 0.0) {
        return Err(Error::Config("blob noise must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.shape.len();
    let prototypes: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| (0..n).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let mut make = |count: usize| -> Result<Dataset> {
        let mut images = Vec::with_capacity(count * n);
        let mut labels = Vec::with_capacity(count);
        for i in 0..count {
            let label = i % cfg.classes;
            images.extend(
                prototypes[label]
                    .iter()
                    .map(|&p| (p + cfg.noise * unit.sample(&mut rng)) as f32),
            );
            labels.push(label);
        }
        Dataset::new(cfg.shape, cfg.classes, images, labels)
    };
    Ok(Splits {
        train: make(cfg.train)?,
        val: make(cfg.val)?,
        test: make(cfg.test)?,
    })
}
