use super::groups::{build_groups, penalty_from_groups, refresh_l1, GroupState};
use super::rank::{
    converged_candidates, delta_lambda, final_rank, prune_group, rank_groups, update_avg_rank,
    update_lambda,
};
use super::report::{LayerSummary, PruneReport, PruneSummary, ReportRow};
use super::schedule::{target_count, PruneSchedule};
use crate::data::{BatchSampler, Dataset};
use crate::error::{Error, Result};
use crate::nn::{train_step, GroupPenalty, Network, TrainConfig};
use crate::scalar::Scalar;

/// Result of a completed pruning run.
#[derive(Debug, Clone)]
pub struct PruneOutcome<T> {
    pub net: Network<T>,
    /// Final state of every scheduled group, layer by layer.
    pub groups: Vec<GroupState>,
    pub report: PruneReport,
}

struct LayerRun {
    layer: usize,
    ratio: f64,
    target: usize,
    range: std::ops::Range<usize>,
    finished_at: Option<u64>,
}

impl LayerRun {
    fn pruned(&self, groups: &[GroupState]) -> usize {
        groups[self.range.clone()].iter().filter(|g| g.pruned).count()
    }
}

/// Drives incremental regularization until every scheduled layer has
/// exactly its target number of pruned groups, then retrains with the
/// prune masks frozen.
///
/// Each iteration ranks the groups of every layer by L1-norm and folds the
/// ranks into running averages. Every `update_interval` iterations the
/// factors of unfinished layers move by the piecewise-linear increment of
/// their average rank; layers already at target instead decay their
/// remaining factors by `A` per update. After each SGD step, groups whose
/// L1-norm dropped below epsilon are pruned, at most up to the layer's
/// remaining quota (smallest norm first).
pub fn run_pruning<T: Scalar>(
    mut net: Network<T>,
    data: &Dataset,
    cfg: &TrainConfig,
    schedule: &PruneSchedule,
    sampler: &mut BatchSampler,
) -> Result<PruneOutcome<T>> {
    cfg.validate()?;
    schedule.validate(net.architecture(), cfg.weight_decay)?;
    let speed = schedule.resolved_speed(cfg.weight_decay);
    let interval = schedule.update_interval;

    let mut groups = Vec::new();
    let mut layers = Vec::new();
    for t in &schedule.targets {
        let g = build_groups(&net, t.layer, schedule.kind)?;
        let start = groups.len();
        let target = target_count(t.ratio, g.len());
        groups.extend(g);
        layers.push(LayerRun {
            layer: t.layer,
            ratio: t.ratio,
            target,
            range: start..groups.len(),
            finished_at: (target == 0).then_some(0),
        });
    }
    refresh_l1(&net, &mut groups);
    let mut penalty = penalty_from_groups(&net, &groups)?;
    let mut report = PruneReport::default();
    let mut inst = vec![0usize; groups.len()];
    let mut last_snapshot = None;

    let mut iter: u64 = 0;
    while layers.iter().any(|l| l.finished_at.is_none()) {
        if iter >= cfg.max_iters {
            snapshot(&mut report, &groups, &layers, &inst, iter, &mut last_snapshot)?;
            report.summary = summary(&layers, &groups, schedule, speed, iter, 0);
            return Err(Error::NonConvergence {
                iterations: iter,
                report: Box::new(report),
            });
        }
        for l in &layers {
            let ranks = rank_groups(&groups[l.range.clone()])?;
            for (k, r) in ranks.into_iter().enumerate() {
                inst[l.range.start + k] = r;
                update_avg_rank(&mut groups[l.range.start + k], r);
            }
        }
        if iter.is_multiple_of(interval) {
            snapshot(&mut report, &groups, &layers, &inst, iter, &mut last_snapshot)?;
        }
        if (iter + 1).is_multiple_of(interval) {
            for l in &layers {
                let layer_groups = &mut groups[l.range.clone()];
                if l.finished_at.is_some() {
                    for g in layer_groups.iter_mut().filter(|g| !g.pruned) {
                        update_lambda(g, -speed);
                    }
                    continue;
                }
                let fr = final_rank(layer_groups)?;
                let n = layer_groups.len();
                for (g, r) in layer_groups.iter_mut().zip(fr) {
                    if !g.pruned {
                        update_lambda(g, delta_lambda(r, l.ratio, n, speed)?);
                    }
                }
            }
            penalty = penalty_from_groups(&net, &groups)?;
        }

        train_step(&mut net, data, sampler, cfg, iter, &penalty)?;
        iter += 1;

        refresh_l1(&net, &mut groups);
        let mut changed = false;
        for l in layers.iter_mut().filter(|l| l.finished_at.is_none()) {
            let quota = l.target - l.pruned(&groups);
            let layer_groups = &mut groups[l.range.clone()];
            for k in converged_candidates(layer_groups, schedule.epsilon)
                .into_iter()
                .take(quota)
            {
                prune_group(&mut net, &mut layer_groups[k], iter);
                changed = true;
            }
            if l.pruned(&groups) == l.target {
                l.finished_at = Some(iter);
                log::info!("layer {} reached {} pruned groups at iteration {iter}", l.layer, l.target);
            }
        }
        if changed {
            penalty = penalty_from_groups(&net, &groups)?;
        }
    }

    // Terminal snapshot with ranks of the final weights.
    for l in &layers {
        let ranks = rank_groups(&groups[l.range.clone()])?;
        inst[l.range.clone()].copy_from_slice(&ranks);
    }
    snapshot(&mut report, &groups, &layers, &inst, iter, &mut last_snapshot)?;
    let prune_iters = iter;

    // Retrain with masks only.
    let mut masks_only = groups.clone();
    for g in &mut masks_only {
        g.lambda = 0.0;
    }
    let retrain_penalty: GroupPenalty<T> = penalty_from_groups(&net, &masks_only)?;
    for it in 0..schedule.retrain_iters {
        train_step(&mut net, data, sampler, cfg, it, &retrain_penalty)?;
    }

    report.summary = summary(&layers, &groups, schedule, speed, prune_iters, schedule.retrain_iters);
    Ok(PruneOutcome {
        net,
        groups,
        report,
    })
}

fn snapshot(
    report: &mut PruneReport,
    groups: &[GroupState],
    layers: &[LayerRun],
    inst: &[usize],
    step: u64,
    last: &mut Option<u64>,
) -> Result<()> {
    if *last == Some(step) {
        return Ok(());
    }
    let mut order: Vec<&LayerRun> = layers.iter().collect();
    order.sort_by_key(|l| l.layer);
    for l in order {
        for k in l.range.clone() {
            let g = &groups[k];
            report.rows.push(ReportRow {
                step,
                layer: g.layer,
                group_id: g.id,
                l1: g.l1,
                lambda_g: g.lambda,
                inst_rank: inst[k],
                avg_rank: g.avg_rank().unwrap_or(inst[k] as f64),
                pruned: g.pruned,
            });
        }
    }
    *last = Some(step);
    Ok(())
}

fn summary(
    layers: &[LayerRun],
    groups: &[GroupState],
    schedule: &PruneSchedule,
    speed: f64,
    prune_iters: u64,
    retrain_iters: u64,
) -> PruneSummary {
    PruneSummary {
        layers: layers
            .iter()
            .map(|l| LayerSummary {
                layer: l.layer,
                kind: schedule.kind,
                groups: l.range.len(),
                ratio: l.ratio,
                target: l.target,
                pruned: l.pruned(groups),
                finished_at: l.finished_at,
            })
            .collect(),
        prune_iters,
        retrain_iters,
        speed,
        epsilon: schedule.epsilon,
        update_interval: schedule.update_interval,
        ..PruneSummary::default()
    }
}
