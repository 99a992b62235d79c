use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimilarityScores;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "run,iter,precision,recall,f1,loss_pos,loss_neg,loss_label,cos,man,euc";

/// One telemetry row. Loss-only iterations leave the metric and similarity
/// fields empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run: u64,
    pub iter: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub loss_pos: Option<f64>,
    pub loss_neg: Option<f64>,
    pub loss_label: Option<f64>,
    pub cos: Option<f64>,
    pub man: Option<f64>,
    pub euc: Option<f64>,
}

impl MetricsRecord {
    pub fn with_similarity(mut self, s: &SimilarityScores) -> Self {
        self.cos = Some(s.cosine);
        self.man = Some(s.manhattan);
        self.euc = Some(s.euclidean);
        self
    }

    fn cells(&self) -> [Option<f64>; 9] {
        [
            self.precision,
            self.recall,
            self.f1,
            self.loss_pos,
            self.loss_neg,
            self.loss_label,
            self.cos,
            self.man,
            self.euc,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordFormat {
    Csv,
    LineJson,
}

impl RecordFormat {
    pub fn extension(self) -> &'static str {
        match self {
            RecordFormat::Csv => "csv",
            RecordFormat::LineJson => "jsonl",
        }
    }
}

/// Serializes records to text. Floats use the shortest representation that
/// parses back to the same value.
pub fn render(records: &[MetricsRecord], format: RecordFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        RecordFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in records {
                write!(out, "{},{}", r.run, r.iter).expect("string write");
                for cell in r.cells() {
                    out.push(',');
                    if let Some(v) = cell {
                        if !v.is_finite() {
                            return Err(Error::NonFinite("metrics record"));
                        }
                        write!(out, "{v:?}").expect("string write");
                    }
                }
                out.push('\n');
            }
        }
        RecordFormat::LineJson => {
            for r in records {
                if r.cells().iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("metrics record"));
                }
                out.push_str(&serde_json::to_string(r).expect("records serialize"));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn emit(records: &[MetricsRecord], path: impl AsRef<Path>, format: RecordFormat) -> Result<()> {
    let path = path.as_ref();
    let text = render(records, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_records(path: impl AsRef<Path>, format: RecordFormat) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut out = Vec::new();
    match format {
        RecordFormat::Csv => {
            let mut lines = text.lines().enumerate();
            match lines.next() {
                Some((_, h)) if h.trim() == CSV_HEADER => {}
                _ => return Err(err(1, "missing or unexpected header".into())),
            }
            for (i, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 11 {
                    return Err(err(i + 1, format!("expected 11 fields, found {}", fields.len())));
                }
                let int = |s: &str| s.trim().parse::<u64>().map_err(|e| err(i + 1, e.to_string()));
                let mut cells = [None; 9];
                for (cell, raw) in cells.iter_mut().zip(&fields[2..]) {
                    let raw = raw.trim();
                    if !raw.is_empty() {
                        *cell = Some(raw.parse::<f64>().map_err(|e| err(i + 1, format!("{raw:?}: {e}")))?);
                    }
                }
                let [precision, recall, f1, loss_pos, loss_neg, loss_label, cos, man, euc] = cells;
                out.push(MetricsRecord {
                    run: int(fields[0])?,
                    iter: int(fields[1])?,
                    precision,
                    recall,
                    f1,
                    loss_pos,
                    loss_neg,
                    loss_label,
                    cos,
                    man,
                    euc,
                });
            }
        }
        RecordFormat::LineJson => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                out.push(serde_json::from_str(line).map_err(|e| err(i + 1, e.to_string()))?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Vec<MetricsRecord> {
        vec![
            MetricsRecord { run: 0, iter: 0, loss_pos: Some(-1.3862943611198906), loss_neg: Some(-1.2), loss_label: Some(-2.0), ..Default::default() },
            MetricsRecord {
                run: 0,
                iter: 100,
                precision: Some(0.5),
                recall: Some(0.93),
                f1: Some(0.650349),
                cos: Some(0.1 + 0.2),
                man: Some(1e-300),
                euc: Some(12345.678901234567),
                ..Default::default()
            },
        ]
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for format in [RecordFormat::Csv, RecordFormat::LineJson] {
            let path = dir.path().join(format!("m.{}", format.extension()));
            emit(&sample(), &path, format).unwrap();
            assert_eq!(parse_records(&path, format).unwrap(), sample());
        }
    }

    #[test]
    fn empty_lists() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("e.csv");
        emit(&[], &csv, RecordFormat::Csv).unwrap();
        assert_eq!(fs::read_to_string(&csv).unwrap(), format!("{CSV_HEADER}\n"));
        let json = dir.path().join("e.jsonl");
        emit(&[], &json, RecordFormat::LineJson).unwrap();
        assert_eq!(fs::read_to_string(&json).unwrap(), "");
        assert!(parse_records(&csv, RecordFormat::Csv).unwrap().is_empty());
    }

    #[test]
    fn f1_survives() {
        let text = render(&sample(), RecordFormat::Csv).unwrap();
        assert!(text.contains(",0.650349,"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,,"));
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, format!("{CSV_HEADER}\n0,1,x,,,,,,,,\n")).unwrap();
        assert!(matches!(parse_records(&path, RecordFormat::Csv), Err(Error::Parse { line: 2, .. })));
        let r = MetricsRecord { loss_pos: Some(f64::NAN), ..Default::default() };
        assert!(render(&[r], RecordFormat::Csv).is_err());
        assert!(emit(&[], dir.path().join("missing/x.csv"), RecordFormat::Csv).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(vals in proptest::collection::vec(proptest::option::of(-1e6f64..1e6), 9), run in 0u64..10, iter in 0u64..100_000) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.csv");
            let r = MetricsRecord {
                run, iter,
                precision: vals[0], recall: vals[1], f1: vals[2],
                loss_pos: vals[3], loss_neg: vals[4], loss_label: vals[5],
                cos: vals[6], man: vals[7], euc: vals[8],
            };
            emit(std::slice::from_ref(&r), &path, RecordFormat::Csv).unwrap();
            prop_assert_eq!(parse_records(&path, RecordFormat::Csv).unwrap(), vec![r]);
        }
    }
}
