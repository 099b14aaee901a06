use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{NovakError, Result};

/// One logged point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub effective_lr: f64,
    pub update_norm: f64,
    /// Held-out accuracy, classification problems only.
    pub accuracy: Option<f64>,
    pub persistent_vector_count: usize,
    pub wall_time_ms: f64,
}

pub const CSV_HEADER: [&str; 8] =
    ["step", "loss", "grad_norm", "effective_lr", "update_norm", "accuracy", "persistent_vector_count", "wall_time_ms"];

/// 17 significant digits: enough to round-trip any f64.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes records as CSV with a header row. Reals use 17 significant
/// digits; a missing accuracy is an empty field.
pub fn write_csv(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    let io = |source| NovakError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| NovakError::Io { path: path.to_path_buf(), source: e.into() };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            real(r.loss),
            real(r.grad_norm),
            real(r.effective_lr),
            real(r.update_norm),
            r.accuracy.map(real).unwrap_or_default(),
            r.persistent_vector_count.to_string(),
            real(r.wall_time_ms),
        ])
        .map_err(csv_err)?;
    }
    let mut file = w.into_inner().map_err(|e| io(e.into_error()))?;
    file.flush().map_err(io)
}

/// Parses a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let parse_err = |message: String| NovakError::Parse { path: path.to_path_buf(), message };
    let file = File::open(path).map_err(|source| NovakError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_err(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |i: usize| parse_err(format!("row {}: bad `{}` value `{}`", line + 1, CSV_HEADER[i], field(i)));
        let f = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let u = |i: usize| field(i).parse::<usize>().map_err(|_| bad(i));
        out.push(TrajectoryRecord {
            step: u(0)?,
            loss: f(1)?,
            grad_norm: f(2)?,
            effective_lr: f(3)?,
            update_norm: f(4)?,
            accuracy: if field(5).is_empty() { None } else { Some(f(5)?) },
            persistent_vector_count: u(6)?,
            wall_time_ms: f(7)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(step: usize, loss: f64, acc: Option<f64>) -> TrajectoryRecord {
        TrajectoryRecord {
            step,
            loss,
            grad_norm: 0.1 + loss,
            effective_lr: 1e-3 / 3.0,
            update_norm: std::f64::consts::PI * 1e-7,
            accuracy: acc,
            persistent_vector_count: 3,
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn empty_list_writes_only_the_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
        assert!(read_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn one_record_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&[record(1, 0.5, None)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1,5.0000000000000000e-1,"));
    }

    #[test]
    fn non_finite_values_survive() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let recs = [record(1, f64::NAN, Some(0.5)), record(2, f64::INFINITY, None)];
        write_csv(&recs, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert!(back[0].loss.is_nan());
        assert_eq!(back[1].loss, f64::INFINITY);
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        std::fs::write(&path, "step,loss\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(NovakError::Parse { .. })));
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = write_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(
            rows in prop::collection::vec(
                (any::<f64>(), any::<f64>(), prop::option::of(0.0f64..=1.0), 0usize..10), 0..20)
        ) {
            let recs: Vec<TrajectoryRecord> = rows
                .iter()
                .enumerate()
                .filter(|(_, (a, b, _, _))| a.is_finite() && b.is_finite())
                .map(|(i, &(a, b, acc, n))| TrajectoryRecord {
                    step: i + 1,
                    loss: a,
                    grad_norm: b.abs(),
                    effective_lr: b,
                    update_norm: a.abs(),
                    accuracy: acc,
                    persistent_vector_count: n,
                    wall_time_ms: 0.0,
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            write_csv(&recs, &path).unwrap();
            prop_assert_eq!(read_csv(&path).unwrap(), recs);
        }
    }
}
