//! Rank normalization of group importance and the rank-driven factor
//! update.

use super::groups::{zero_group, GroupState};
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::scalar::Scalar;

/// Position of each entry of `keys` in ascending order, ties broken by
/// index.
fn ascending_ranks(keys: impl Iterator<Item = f64>) -> Vec<usize> {
    let keys: Vec<f64> = keys.collect();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; keys.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos;
    }
    ranks
}

/// Instantaneous rank of each group by ascending L1-norm.
pub fn rank_groups(groups: &[GroupState]) -> Result<Vec<usize>> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("cannot rank an empty layer".into()));
    }
    Ok(ascending_ranks(groups.iter().map(|g| g.l1)))
}

/// Folds one instantaneous rank into the group's running average.
pub fn update_avg_rank(g: &mut GroupState, rank: usize) {
    g.rank_sum += rank as f64;
    g.rank_count += 1;
}

/// Integer rank of each group's average rank (0 = least important).
pub fn final_rank(groups: &[GroupState]) -> Result<Vec<usize>> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("cannot rank an empty layer".into()));
    }
    let avgs = groups
        .iter()
        .map(|g| {
            g.avg_rank().ok_or_else(|| {
                Error::InvalidArgument(format!("group {}:{} was never ranked", g.layer, g.id))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ascending_ranks(avgs.into_iter()))
}

/// Factor increment for a group of (possibly fractional) rank `rank` in
/// a layer of `n_groups` groups with target ratio `ratio` and speed `speed`.
///
/// Positive below the boundary `ratio * n_groups`, zero on it, negative
/// above, spanning `[-speed, speed]` over ranks `0..n_groups - 1`.
pub fn delta_lambda_at(rank: f64, ratio: f64, n_groups: usize, speed: f64) -> Result<f64> {
    let boundary = ratio * n_groups as f64;
    // (N_g - 1) - R N_g, written so that rank N_g - 1 yields exactly -speed.
    let upper_span = (n_groups as f64 - 1.0) - boundary;
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::Config(format!("speed must be positive, got {speed}")));
    }
    if !(boundary > 0.0) || !(upper_span > 0.0) || !(ratio < 1.0) {
        return Err(Error::Config(format!(
            "degenerate schedule: ratio {ratio} with {n_groups} groups"
        )));
    }
    if rank <= boundary {
        Ok(speed * (1.0 - rank / boundary))
    } else {
        Ok(-speed * ((rank - boundary) / upper_span))
    }
}

/// [`delta_lambda_at`] for an integer rank in `0..n_groups`.
pub fn delta_lambda(rank: usize, ratio: f64, n_groups: usize, speed: f64) -> Result<f64> {
    if rank >= n_groups {
        return Err(Error::IndexOutOfRange {
            what: "rank",
            index: rank,
            len: n_groups,
        });
    }
    delta_lambda_at(rank as f64, ratio, n_groups, speed)
}

/// Adds `delta` to the group factor, clamping at zero. Pruned groups keep
/// their factor.
pub fn update_lambda(g: &mut GroupState, delta: f64) {
    if g.pruned {
        log::warn!(
            "ignoring factor update on pruned group {}:{}",
            g.layer,
            g.id
        );
        return;
    }
    g.lambda = (g.lambda + delta).max(0.0);
}

/// Unpruned groups whose L1-norm is below `epsilon`, smallest first.
pub fn converged_candidates(groups: &[GroupState], epsilon: f64) -> Vec<usize> {
    let mut c: Vec<usize> = (0..groups.len())
        .filter(|&i| !groups[i].pruned && groups[i].l1 < epsilon)
        .collect();
    c.sort_by(|&a, &b| groups[a].l1.total_cmp(&groups[b].l1).then(a.cmp(&b)));
    c
}

pub(crate) fn prune_group<T: Scalar>(
    net: &mut Network<T>,
    g: &mut GroupState,
    iteration: u64,
) {
    zero_group(net, g);
    g.pruned = true;
    g.pruned_at = Some(iteration);
    g.l1 = 0.0;
}

/// Permanently prunes every unpruned group with L1-norm below `epsilon`,
/// zeroing its weights and momentum. Returns the positions (in `groups`)
/// of the newly pruned groups.
pub fn prune_converged<T: Scalar>(
    net: &mut Network<T>,
    groups: &mut [GroupState],
    epsilon: f64,
    iteration: u64,
) -> Result<Vec<usize>> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let newly = converged_candidates(groups, epsilon);
    for &i in &newly {
        prune_group(net, &mut groups[i], iteration);
    }
    Ok(newly)
}
