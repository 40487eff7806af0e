use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::groups::GroupKind;
use crate::error::{Error, Result};

/// Snapshot of one group at one update step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub step: u64,
    pub layer: usize,
    pub group_id: usize,
    pub l1: f64,
    pub lambda_g: f64,
    pub inst_rank: usize,
    pub avg_rank: f64,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub kind: GroupKind,
    pub groups: usize,
    pub ratio: f64,
    pub target: usize,
    pub pruned: usize,
    /// Iteration at which the layer reached its target.
    pub finished_at: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneSummary {
    pub layers: Vec<LayerSummary>,
    pub prune_iters: u64,
    pub retrain_iters: u64,
    pub speed: f64,
    pub epsilon: f64,
    pub update_interval: u64,
    #[serde(default)]
    pub gflops_before: Option<f64>,
    #[serde(default)]
    pub gflops_after: Option<f64>,
    #[serde(default)]
    pub baseline_accuracy: Option<f64>,
    #[serde(default)]
    pub final_accuracy: Option<f64>,
}

/// Per-step group trajectories plus a run summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneReport {
    pub rows: Vec<ReportRow>,
    pub summary: PruneSummary,
}

impl PruneReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<ReportRow>> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(rows)
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.summary)?;
        Ok(())
    }

    /// Rows must be strictly increasing in `(step, layer, group_id)`.
    pub fn check_order(rows: &[ReportRow]) -> Result<()> {
        for pair in rows.windows(2) {
            let key = |r: &ReportRow| (r.step, r.layer, r.group_id);
            if key(&pair[0]) >= key(&pair[1]) {
                return Err(Error::Format {
                    offset: 0,
                    msg: format!(
                        "report rows out of order at step {} layer {} group {}",
                        pair[1].step, pair[1].layer, pair[1].group_id
                    ),
                });
            }
        }
        Ok(())
    }

    /// Distinct snapshot steps, ascending.
    pub fn steps(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.iter().map(|r| r.step).collect();
        s.dedup();
        s
    }

    /// Rows of one layer at one step, ordered by group id.
    pub fn snapshot(&self, step: u64, layer: usize) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.step == step && r.layer == layer)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, layer: usize, group_id: usize) -> ReportRow {
        ReportRow {
            step,
            layer,
            group_id,
            l1: 0.25,
            lambda_g: 1e-4,
            inst_rank: group_id,
            avg_rank: 1.5,
            pruned: false,
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let report = PruneReport {
            rows: vec![row(0, 0, 0), row(0, 0, 1), row(10, 2, 0)],
            ..Default::default()
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,layer,group_id,l1,lambda_g,inst_rank,avg_rank,pruned\n"));
        let back = PruneReport::read_csv(&buf[..]).unwrap();
        assert_eq!(back, report.rows);
        PruneReport::check_order(&back).unwrap();
        assert!(PruneReport::check_order(&[row(1, 0, 0), row(1, 0, 0)]).is_err());
    }
}
