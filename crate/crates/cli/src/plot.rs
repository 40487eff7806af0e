//! Gnuplot scripts and data files for group L1 trajectories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use increg_core::increg::ReportRow;
use increg_core::Result;

/// Per-layer statistics over a report.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStats {
    pub layer: usize,
    pub groups: usize,
    pub steps: usize,
    pub last_step: u64,
    pub pruned: usize,
    pub max_lambda: f64,
}

pub fn layer_stats(rows: &[ReportRow]) -> Vec<LayerStats> {
    let mut by_layer: BTreeMap<usize, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        by_layer.entry(r.layer).or_default().push(r);
    }
    by_layer
        .into_iter()
        .map(|(layer, rs)| {
            let last_step = rs.iter().map(|r| r.step).max().unwrap_or(0);
            let mut steps: Vec<u64> = rs.iter().map(|r| r.step).collect();
            steps.dedup();
            LayerStats {
                layer,
                groups: rs.iter().filter(|r| r.step == last_step).count(),
                steps: steps.len(),
                last_step,
                pruned: rs.iter().filter(|r| r.step == last_step && r.pruned).count(),
                max_lambda: rs.iter().map(|r| r.lambda_g).fold(0.0, f64::max),
            }
        })
        .collect()
}

pub fn render_stats(stats: &[LayerStats]) -> String {
    let mut out = format!(
        "{:<6} {:>7} {:>7} {:>7} {:>10} {:>12}\n",
        "layer", "groups", "pruned", "steps", "last step", "max lambda"
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{:<6} {:>7} {:>7} {:>7} {:>10} {:>12.4e}",
            s.layer, s.groups, s.pruned, s.steps, s.last_step, s.max_lambda
        );
    }
    out
}

/// Writes one whitespace-separated table per layer (step, then the L1-norm
/// of every group) and a gnuplot script drawing them. Returns the script
/// path.
pub fn write_l1_plot(dir: &Path, rows: &[ReportRow]) -> Result<PathBuf> {
    let mut layers: BTreeMap<usize, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        layers
            .entry(r.layer)
            .or_default()
            .entry(r.step)
            .or_default()
            .push(r.l1);
    }
    let mut script = String::from(
        "# L1-norm of every group against iteration, one panel per layer.\n\
         set terminal pngcairo size 900,600\n\
         set xlabel 'iteration'\n\
         set ylabel 'L1-norm'\n\
         set key off\n",
    );
    for (layer, steps) in &layers {
        let data = format!("l1_layer{layer}.dat");
        let mut text = String::new();
        let mut width = 0;
        for (step, l1s) in steps {
            width = width.max(l1s.len());
            let _ = write!(text, "{step}");
            for v in l1s {
                let _ = write!(text, " {v:e}");
            }
            text.push('\n');
        }
        std::fs::write(dir.join(&data), text)?;
        let _ = write!(
            script,
            "set output 'l1_layer{layer}.png'\nset title 'layer {layer}'\n\
             plot for [i=2:{}] '{data}' using 1:i with lines lw 1\n",
            width + 1
        );
    }
    let path = dir.join("fig3.gp");
    std::fs::write(&path, script)?;
    Ok(path)
}
