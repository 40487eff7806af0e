//! Incremental regularization: per-group factors driven by averaged
//! L1-norm ranks, permanent pruning of converged groups, and the loop
//! that runs both to a per-layer target ratio.

mod groups;
mod rank;
mod report;
mod run;
mod schedule;

pub use groups::{
    build_groups, penalty_from_groups, refresh_l1, zero_group, GroupKind, GroupState,
};
pub use rank::{
    converged_candidates, delta_lambda, delta_lambda_at, final_rank, prune_converged,
    rank_groups, update_avg_rank, update_lambda,
};
pub use report::{LayerSummary, PruneReport, PruneSummary, ReportRow};
pub use run::{run_pruning, PruneOutcome};
pub use schedule::{target_count, LayerTarget, PruneSchedule};
