use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flops::FlopsAccount;
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub batch: usize,
    pub repeats: usize,
    pub warmup: usize,
    /// Worker threads used for every forward pass.
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            batch: 10,
            repeats: 50,
            warmup: 5,
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareInfo {
    pub cpu: String,
    pub logical_cpus: usize,
    pub os: String,
    pub arch: String,
}

impl HardwareInfo {
    pub fn detect() -> Self {
        let cpu = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            cpu,
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

/// Timing and FLOPs of one layer, baseline versus compact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTiming {
    pub layer: usize,
    pub kind: String,
    pub flops_base: u64,
    pub flops_pruned: u64,
    /// Median milliseconds per batch forward.
    pub ms_base: f64,
    pub ms_pruned: f64,
    pub ratio: f64,
    pub mean_ms_base: f64,
    pub mean_ms_pruned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub ms_base: f64,
    pub ms_pruned: f64,
    pub ratio: f64,
    pub mean_ms_base: f64,
    pub mean_ms_pruned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub hardware: HardwareInfo,
    pub layers: Vec<LayerTiming>,
    /// All convolution layers together.
    pub conv: TimingSummary,
    /// Whole forward pass.
    pub total: TimingSummary,
    pub flops: FlopsAccount,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn summarize(base: &[f64], pruned: &[f64]) -> TimingSummary {
    let (mb, mp) = (median(base.to_vec()), median(pruned.to_vec()));
    TimingSummary {
        ms_base: mb,
        ms_pruned: mp,
        ratio: mb / mp,
        mean_ms_base: mean(base),
        mean_ms_pruned: mean(pruned),
    }
}

/// Times forward passes of `base` and `compact` on the same random batch,
/// alternating between them, after `warmup` untimed passes each.
pub fn bench<T: Scalar>(
    base: &Network<T>,
    compact: &Network<T>,
    cfg: &BenchConfig,
) -> Result<BenchReport> {
    if cfg.repeats < 10 {
        return Err(Error::Config(format!("need at least 10 repeats, got {}", cfg.repeats)));
    }
    if base.layers().len() != compact.layers().len() || base.input_shape() != compact.input_shape() {
        return Err(Error::DimMismatch("networks do not share a layer list".into()));
    }
    let s = base.input_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.batch * s.len();
    let batch = Tensor4::from_vec(
        [cfg.batch, s.channels, s.height, s.width],
        (0..n).map(|_| T::from_f64(rng.random_range(-1.0..1.0))).collect(),
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let (base_times, pruned_times) = pool.install(|| -> Result<_> {
        for _ in 0..cfg.warmup {
            base.predict(&batch)?;
            compact.predict(&batch)?;
        }
        let mut bt = Vec::with_capacity(cfg.repeats);
        let mut pt = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            bt.push(base.forward_timed(&batch)?.1);
            pt.push(compact.forward_timed(&batch)?.1);
        }
        Ok((bt, pt))
    })?;

    let flops = FlopsAccount::compare(base, compact);
    let per_layer = |times: &[Vec<Duration>], idx: usize| -> Vec<f64> {
        times.iter().map(|r| ms(r[idx])).collect()
    };
    let layers = flops
        .layers
        .iter()
        .map(|row| {
            let (b, p) = (per_layer(&base_times, row.layer), per_layer(&pruned_times, row.layer));
            let t = summarize(&b, &p);
            LayerTiming {
                layer: row.layer,
                kind: row.kind.clone(),
                flops_base: row.flops_base,
                flops_pruned: row.flops_pruned,
                ms_base: t.ms_base,
                ms_pruned: t.ms_pruned,
                ratio: t.ratio,
                mean_ms_base: t.mean_ms_base,
                mean_ms_pruned: t.mean_ms_pruned,
            }
        })
        .collect();
    let conv_layers = base.architecture().conv_layers();
    let sum_over = |times: &[Vec<Duration>], only: Option<&[usize]>| -> Vec<f64> {
        times
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(i, _)| only.is_none_or(|o| o.contains(i)))
                    .map(|(_, d)| ms(*d))
                    .sum()
            })
            .collect()
    };
    Ok(BenchReport {
        config: cfg.clone(),
        hardware: HardwareInfo::detect(),
        layers,
        conv: summarize(
            &sum_over(&base_times, Some(&conv_layers)),
            &sum_over(&pruned_times, Some(&conv_layers)),
        ),
        total: summarize(&sum_over(&base_times, None), &sum_over(&pruned_times, None)),
        flops,
    })
}

/// Fixed-width text table of a bench report.
pub fn render_table(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<6} {:<5} {:>14} {:>14} {:>8} {:>10} {:>10} {:>8}\n",
        "layer", "kind", "FLOPs base", "FLOPs pruned", "x", "ms base", "ms pruned", "x"
    ));
    for l in &report.layers {
        out.push_str(&format!(
            "{:<6} {:<5} {:>14} {:>14} {:>8.2} {:>10.3} {:>10.3} {:>8.2}\n",
            l.layer,
            l.kind,
            l.flops_base,
            l.flops_pruned,
            l.flops_base as f64 / l.flops_pruned as f64,
            l.ms_base,
            l.ms_pruned,
            l.ratio
        ));
    }
    let f = &report.flops;
    out.push_str(&format!(
        "{:<12} {:>14} {:>14} {:>8.2} {:>10.3} {:>10.3} {:>8.2}\n",
        "conv total",
        f.conv_base,
        f.conv_pruned,
        f.conv_speedup(),
        report.conv.ms_base,
        report.conv.ms_pruned,
        report.conv.ratio
    ));
    out.push_str(&format!(
        "{:<12} {:>14} {:>14} {:>8.2} {:>10.3} {:>10.3} {:>8.2}\n",
        "total",
        f.total_base,
        f.total_pruned,
        f.speedup(),
        report.total.ms_base,
        report.total.ms_pruned,
        report.total.ratio
    ));
    out.push_str(&format!(
        "batch {}, {} repeats (median), {} thread(s), {}\n",
        report.config.batch, report.config.repeats, report.config.threads, report.hardware.cpu
    ));
    out
}
