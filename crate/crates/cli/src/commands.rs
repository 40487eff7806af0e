use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use increg_core::checkpoint::{self, apply_records, CheckpointMeta, GroupRecord};
use increg_core::compact::{self, build_plan, gflops, BenchReport, FlopsAccount};
use increg_core::data::{BatchSampler, Splits};
use increg_core::increg::{build_groups, penalty_from_groups, run_pruning, GroupState, PruneReport};
use increg_core::nn::{evaluate, train_step, GroupPenalty, Network};
use increg_core::theorem::{self, SuiteReport};
use increg_core::Error;

use crate::config::RunConfig;
use crate::dataset::{load_dataset, normalize};
use crate::plot;

/// Offsets that keep the batch order independent of the weight init.
const TRAIN_STREAM: u64 = 0x7472_6169_6e00_0001;
const PRUNE_STREAM: u64 = 0x7072_756e_6500_0002;
const RETRAIN_STREAM: u64 = 0x7265_7472_6e00_0003;

const EVAL_BATCH: usize = 256;

/// `verify-theorem` found a counterexample.
#[derive(Debug, thiserror::Error)]
#[error("{0} of the continuation checks failed")]
pub struct SuiteFailed(pub usize);

/// Maps an error chain to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::NonConvergence { .. }) => 3,
        Some(
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::DimMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::Format { .. },
        ) => 2,
        _ => 1,
    }
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn data_for(cfg: &RunConfig, means: Option<&[f32]>) -> anyhow::Result<(Splits, Vec<f32>)> {
    let mut splits = load_dataset(&cfg.dataset)?;
    let means = normalize(&mut splits, means)?;
    Ok((splits, means))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub iteration: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub iterations: u64,
    pub seed: u64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub test_loss: f64,
}

/// Trains a baseline from the configured seed. Writes `baseline.ckpt`,
/// `metrics.csv` (one row per epoch, plus a final partial epoch) and
/// `train_summary.json`.
pub fn cmd_train(cfg: &RunConfig) -> anyhow::Result<TrainSummary> {
    cfg.validate()?;
    let arch = cfg.arch()?;
    let (data, means) = data_for(cfg, None)?;
    let mut net = Network::<f32>::new(arch, cfg.seed)?;
    let tc = &cfg.train;
    let mut sampler = BatchSampler::new(data.train.len(), cfg.seed ^ TRAIN_STREAM);
    let penalty = GroupPenalty::none(net.layers().len());
    let per_epoch = data.train.len().div_ceil(tc.batch_size).max(1) as u64;

    create_out(&cfg.out)?;
    let mut metrics = csv::Writer::from_path(cfg.out.join("metrics.csv"))?;
    let mut loss_sum = 0.0;
    let mut loss_n = 0u64;
    for it in 0..tc.max_iters {
        loss_sum += train_step(&mut net, &data.train, &mut sampler, tc, it, &penalty)?;
        loss_n += 1;
        let done = it + 1;
        if done % per_epoch == 0 || done == tc.max_iters {
            let val = evaluate(&net, &data.val, EVAL_BATCH)?;
            let row = EpochMetrics {
                epoch: done.div_ceil(per_epoch),
                iteration: done,
                lr: tc.lr_at(it),
                train_loss: loss_sum / loss_n as f64,
                val_loss: val.loss,
                val_accuracy: val.accuracy,
            };
            log::info!(
                "epoch {} iter {}: train loss {:.4}, val loss {:.4}, val acc {:.4}",
                row.epoch, row.iteration, row.train_loss, row.val_loss, row.val_accuracy
            );
            metrics.serialize(&row)?;
            loss_sum = 0.0;
            loss_n = 0;
        }
    }
    metrics.flush()?;

    let mut meta = CheckpointMeta::new(&net, tc.max_iters);
    meta.normalization = Some(means);
    checkpoint::save(cfg.out.join("baseline.ckpt"), &net, &meta)?;
    let test = evaluate(&net, &data.test, EVAL_BATCH)?;
    let summary = TrainSummary {
        iterations: tc.max_iters,
        seed: cfg.seed,
        train_accuracy: evaluate(&net, &data.train, EVAL_BATCH)?.accuracy,
        val_accuracy: evaluate(&net, &data.val, EVAL_BATCH)?.accuracy,
        test_accuracy: test.accuracy,
        test_loss: test.loss,
    };
    write_json(&cfg.out.join("train_summary.json"), &summary)?;
    log::info!("wrote {}", cfg.out.join("baseline.ckpt").display());
    Ok(summary)
}

fn load_matching(cfg: &RunConfig, path: &Path) -> anyhow::Result<(Network<f32>, CheckpointMeta)> {
    let (net, meta) = checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    let arch = cfg.arch()?;
    if meta.architecture != arch {
        return Err(Error::Config(format!(
            "checkpoint {} was built for a different architecture than the config",
            path.display()
        ))
        .into());
    }
    Ok((net, meta))
}

/// Rebuilds every group named in `records` with its stored state.
pub fn groups_from_records(net: &Network<f32>, records: &[GroupRecord]) -> anyhow::Result<Vec<GroupState>> {
    let keys: BTreeSet<(usize, String)> = records.iter().map(|r| (r.layer, r.kind.to_string())).collect();
    let mut groups = Vec::new();
    for (layer, kind) in keys {
        groups.extend(build_groups(net, layer, kind.parse()?)?);
    }
    apply_records(&mut groups, records)?;
    Ok(groups)
}

/// Paths written by a successful `prune`.
#[derive(Debug, Clone)]
pub struct PruneFiles {
    pub report: PathBuf,
    pub pruned: PathBuf,
    pub compact: PathBuf,
}

fn write_report(out: &Path, report: &PruneReport) -> anyhow::Result<PathBuf> {
    let path = out.join("report.csv");
    report.write_csv(BufWriter::new(File::create(&path)?))?;
    report.write_summary(BufWriter::new(File::create(out.join("prune_summary.json"))?))?;
    plot::write_l1_plot(out, &report.rows)?;
    Ok(path)
}

/// Runs incremental regularization on a baseline checkpoint. On
/// non-convergence the partial report is still written before the error
/// is returned.
pub fn cmd_prune(cfg: &RunConfig, baseline: &Path) -> anyhow::Result<PruneFiles> {
    cfg.validate()?;
    let (base, meta) = load_matching(cfg, baseline)?;
    let (data, means) = data_for(cfg, meta.normalization.as_deref())?;
    let schedule = cfg.prune.schedule(base.architecture());
    let mut tc = cfg.train.clone();
    tc.max_iters = cfg.prune.max_iters;
    let mut sampler = BatchSampler::new(data.train.len(), cfg.seed ^ PRUNE_STREAM);
    create_out(&cfg.out)?;

    let outcome = match run_pruning(base.clone(), &data.train, &tc, &schedule, &mut sampler) {
        Ok(o) => o,
        Err(Error::NonConvergence { iterations, report }) => {
            let path = write_report(&cfg.out, &report)?;
            log::error!("partial report written to {}", path.display());
            return Err(Error::NonConvergence { iterations, report }.into());
        }
        Err(e) => return Err(e.into()),
    };

    let plan = build_plan(&outcome.net, &outcome.groups)?;
    let small = compact::compact(&outcome.net, &plan)?;
    let flops = FlopsAccount::compare(&base, &small);
    let mut report = outcome.report;
    report.summary.gflops_before = Some(gflops(flops.total_base));
    report.summary.gflops_after = Some(gflops(flops.total_pruned));
    report.summary.baseline_accuracy = Some(evaluate(&base, &data.test, EVAL_BATCH)?.accuracy);
    report.summary.final_accuracy = Some(evaluate(&outcome.net, &data.test, EVAL_BATCH)?.accuracy);

    let iteration = meta.iteration + report.summary.prune_iters + report.summary.retrain_iters;
    let mut pmeta = CheckpointMeta::new(&outcome.net, iteration);
    pmeta.normalization = Some(means.clone());
    pmeta.groups = outcome.groups.iter().map(GroupRecord::from).collect();
    let files = PruneFiles {
        report: write_report(&cfg.out, &report)?,
        pruned: cfg.out.join("pruned.ckpt"),
        compact: cfg.out.join("compact.ckpt"),
    };
    checkpoint::save(&files.pruned, &outcome.net, &pmeta)?;
    let mut cmeta = CheckpointMeta::new(&small, iteration);
    cmeta.normalization = Some(means);
    checkpoint::save(&files.compact, &small, &cmeta)?;
    log::info!(
        "pruned in {} iterations: {} -> {} FLOPs, accuracy {:.4} -> {:.4}",
        report.summary.prune_iters,
        flops.total_base,
        flops.total_pruned,
        report.summary.baseline_accuracy.unwrap_or(f64::NAN),
        report.summary.final_accuracy.unwrap_or(f64::NAN),
    );
    Ok(files)
}

/// Trains a pruned checkpoint further with its masks frozen and every
/// group factor at zero. Writes `retrained.ckpt`.
pub fn cmd_retrain(cfg: &RunConfig, pruned: &Path, iters: u64) -> anyhow::Result<f64> {
    cfg.validate()?;
    let (mut net, meta) = load_matching(cfg, pruned)?;
    let (data, _) = data_for(cfg, meta.normalization.as_deref())?;
    let mut groups = groups_from_records(&net, &meta.groups)?;
    for g in &mut groups {
        g.lambda = 0.0;
    }
    let penalty = penalty_from_groups(&net, &groups)?;
    let mut sampler = BatchSampler::new(data.train.len(), cfg.seed ^ RETRAIN_STREAM);
    for it in 0..iters {
        train_step(&mut net, &data.train, &mut sampler, &cfg.train, it, &penalty)?;
    }
    let acc = evaluate(&net, &data.test, EVAL_BATCH)?.accuracy;
    let mut out_meta = meta.clone();
    out_meta.iteration += iters;
    out_meta.groups = groups.iter().map(GroupRecord::from).collect();
    create_out(&cfg.out)?;
    checkpoint::save(cfg.out.join("retrained.ckpt"), &net, &out_meta)?;
    log::info!("retrained {iters} iterations, test accuracy {acc:.4}");
    Ok(acc)
}

/// Times the baseline against the compact form of `pruned`. A checkpoint
/// without group records is taken to be compact already.
pub fn cmd_bench(cfg: &RunConfig, baseline: &Path, pruned: &Path) -> anyhow::Result<BenchReport> {
    let (base, _) = checkpoint::load(baseline).with_context(|| format!("loading {}", baseline.display()))?;
    let (net, meta) = checkpoint::load(pruned).with_context(|| format!("loading {}", pruned.display()))?;
    let small = if meta.groups.is_empty() {
        net
    } else {
        let groups = groups_from_records(&net, &meta.groups)?;
        compact::compact(&net, &build_plan(&net, &groups)?)?
    };
    let report = compact::bench(&base, &small, &cfg.bench)?;
    create_out(&cfg.out)?;
    write_json(&cfg.out.join("bench.json"), &report)?;
    Ok(report)
}

const THEOREM_LAMBDAS: [f64; 6] = [0.05, 0.1, 0.5, 1.0, 2.0, 5.0];
const THEOREM_DELTAS: [f64; 4] = [0.0, 1e-3, 1e-2, 1e-1];

/// Runs the shrinkage suite over the built-in objectives. Writes
/// `theorem.csv` and `curves.csv` (objective, start, lambda, omega).
pub fn cmd_verify_theorem(out: &Path) -> anyhow::Result<SuiteReport> {
    let objectives = theorem::library();
    let report = theorem::theorem1_suite(&objectives, &THEOREM_LAMBDAS, &THEOREM_DELTAS)?;
    create_out(out)?;
    report.write_csv(BufWriter::new(File::create(out.join("theorem.csv"))?))?;

    let mut curves = csv::Writer::from_path(out.join("curves.csv"))?;
    curves.write_record(["objective", "start", "lambda", "omega"])?;
    for obj in &objectives {
        for start in obj.seeds() {
            let Ok(curve) = theorem::continuation_curve(obj.as_ref(), 0.05, 0.05, 100, start) else {
                continue;
            };
            for (l, w) in curve {
                curves.write_record([obj.tag(), start.to_string(), l.to_string(), w.to_string()])?;
            }
        }
    }
    curves.flush()?;

    let failed = report.failures().len();
    if failed > 0 || report.rows.is_empty() {
        return Err(SuiteFailed(failed.max(1)).into());
    }
    Ok(report)
}

/// Validates a report CSV and writes plot data next to it.
pub fn cmd_report(path: &Path, out: &Path) -> anyhow::Result<Vec<plot::LayerStats>> {
    let rows = PruneReport::read_csv(File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
    PruneReport::check_order(&rows)?;
    create_out(out)?;
    plot::write_l1_plot(out, &rows)?;
    Ok(plot::layer_stats(&rows))
}
