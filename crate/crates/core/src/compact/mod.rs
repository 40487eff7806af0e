//! Physical removal of pruned rows and columns, FLOPs accounting and
//! wall-time comparison of baseline and compact networks.

mod bench;
mod flops;
mod plan;

pub use bench::{bench, render_table, BenchConfig, BenchReport, HardwareInfo, LayerTiming, TimingSummary};
pub use flops::{gflops, layer_flops, FlopsAccount, FlopsRow, LayerFlops};
pub use plan::{build_plan, compact, masked, CompactPlan, LayerPlan};
