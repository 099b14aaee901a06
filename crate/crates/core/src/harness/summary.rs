use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::record::{read_csv, TrajectoryRecord};
use crate::error::Result;

/// One run's logged trajectory with the group it belongs to
/// (optimizer × problem, usually the run name).
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub group: String,
    pub seed: Option<u64>,
    pub records: Vec<TrajectoryRecord>,
}

impl RunTrace {
    /// Loads a CSV named `<group>__seed<N>.csv`; other names become a
    /// group of their own with no seed.
    pub fn load(path: &Path) -> Result<Self> {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        let (group, seed) = match stem.rsplit_once("__seed") {
            Some((g, s)) if s.parse::<u64>().is_ok() => (g.to_string(), s.parse().ok()),
            _ => (stem.to_string(), None),
        };
        Ok(Self { group, seed, records: read_csv(path)? })
    }

    /// A run failed if any logged loss is NaN or infinite, or if it reports accuracy
    /// and its final accuracy is not above chance.
    pub fn failed(&self) -> bool {
        self.records.iter().any(|r| !r.loss.is_finite())
            || self.records.last().and_then(|r| r.accuracy).is_some_and(|a| a <= 0.5)
    }

    /// First logged step with loss below `threshold`, or `budget + 1`.
    pub fn steps_to_threshold(&self, threshold: f64, budget: usize) -> usize {
        self.records.iter().find(|r| r.loss < threshold).map_or(budget + 1, |r| r.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub runs: usize,
    pub failures: usize,
    /// Over runs that did not fail; NaN when all failed.
    pub final_loss_mean: f64,
    /// Sample standard deviation over surviving runs; 0 for a single run.
    pub final_loss_sd: f64,
    /// Median over all runs of the per-run steps-to-threshold.
    pub steps_to_threshold: usize,
    pub peak_persistent_vectors: usize,
}

/// Rolls traces up per group. `budget` defaults to the largest logged
/// step in the group.
pub fn summarize(runs: &[RunTrace], threshold: f64, budget: Option<usize>) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<&str, Vec<&RunTrace>> = BTreeMap::new();
    for r in runs {
        groups.entry(&r.group).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(group, traces)| {
            let budget = budget
                .unwrap_or_else(|| traces.iter().filter_map(|t| t.records.last()).map(|r| r.step).max().unwrap_or(0));
            let finals: Vec<f64> =
                traces.iter().filter(|t| !t.failed()).filter_map(|t| t.records.last().map(|r| r.loss)).collect();
            let (mean, sd) = mean_sd(&finals);
            let mut steps: Vec<usize> = traces
                .iter()
                .map(|t| if t.failed() { budget + 1 } else { t.steps_to_threshold(threshold, budget) })
                .collect();
            steps.sort_unstable();
            SummaryRow {
                group: group.to_string(),
                runs: traces.len(),
                failures: traces.iter().filter(|t| t.failed()).count(),
                final_loss_mean: mean,
                final_loss_sd: sd,
                steps_to_threshold: steps[steps.len() / 2],
                peak_persistent_vectors: traces
                    .iter()
                    .flat_map(|t| t.records.iter().map(|r| r.persistent_vector_count))
                    .max()
                    .unwrap_or(0),
            }
        })
        .collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Plain-text table of summary rows.
pub fn format_summary(rows: &[SummaryRow], threshold: f64) -> String {
    let width = rows.iter().map(|r| r.group.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>4}  {:>6}  {:>24}  {:>10}  {:>6}",
        "group",
        "runs",
        "failed",
        "final loss (mean ± sd)",
        format!("steps<{threshold:.0e}"),
        "p-vecs",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>6}  {:>11.4e} ± {:<10.3e}  {:>10}  {:>6}",
            r.group,
            r.runs,
            r.failures,
            r.final_loss_mean,
            r.final_loss_sd,
            r.steps_to_threshold,
            r.peak_persistent_vectors,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(group: &str, losses: &[f64]) -> RunTrace {
        RunTrace {
            group: group.into(),
            seed: None,
            records: losses
                .iter()
                .enumerate()
                .map(|(i, &loss)| TrajectoryRecord {
                    step: (i + 1) * 10,
                    loss,
                    grad_norm: 0.0,
                    effective_lr: 0.0,
                    update_norm: 0.0,
                    accuracy: None,
                    persistent_vector_count: 3 + i % 2,
                    wall_time_ms: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn single_run_has_zero_sd() {
        let rows = summarize(&[trace("a", &[1.0, 0.5])], 0.1, None);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].final_loss_mean, rows[0].final_loss_sd), (0.5, 0.0));
        assert_eq!(rows[0].peak_persistent_vectors, 4);
    }

    #[test]
    fn nan_run_counts_as_failure_and_is_excluded() {
        let runs = [trace("a", &[1.0, 0.2]), trace("a", &[1.0, f64::NAN]), trace("a", &[1.0, 0.4])];
        let row = &summarize(&runs, 0.1, None)[0];
        assert_eq!(row.failures, 1);
        assert!((row.final_loss_mean - 0.3).abs() < 1e-15);
        assert!((row.final_loss_sd - 0.02f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn never_reaching_the_threshold_gives_the_sentinel() {
        let row = &summarize(&[trace("a", &[1.0, 0.5])], 0.1, Some(100))[0];
        assert_eq!(row.steps_to_threshold, 101);
        let row = &summarize(&[trace("a", &[1.0, 0.05])], 0.1, Some(100))[0];
        assert_eq!(row.steps_to_threshold, 20);
    }

    #[test]
    fn chance_accuracy_is_a_failure() {
        let mut t = trace("a", &[0.7]);
        t.records[0].accuracy = Some(0.5);
        assert!(t.failed());
        t.records[0].accuracy = Some(0.51);
        assert!(!t.failed());
    }

    #[test]
    fn groups_are_separate() {
        let rows = summarize(&[trace("b", &[2.0]), trace("a", &[1.0])], 0.1, None);
        assert_eq!(rows.iter().map(|r| r.group.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert!(format_summary(&rows, 0.1).lines().count() == 3);
    }
}
