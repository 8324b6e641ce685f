//! Human verdicts on bug reports and the precision of a report set.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BugReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionResult {
    pub total_reports: usize,
    pub true_positives: usize,
    /// `None` when there are no reports.
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerdictError {
    #[error("reports without a verdict: {}", .0.join(", "))]
    Unlabeled(Vec<String>),
    #[error("verdict file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Share of reports judged true positives.
pub fn precision(reports: &[BugReport]) -> Result<PrecisionResult, VerdictError> {
    let unlabeled: Vec<String> = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Unlabeled)
        .map(|r| r.id.clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(VerdictError::Unlabeled(unlabeled));
    }
    let tp = reports.iter().filter(|r| r.verdict == Verdict::Tp).count();
    Ok(PrecisionResult {
        total_reports: reports.len(),
        true_positives: tp,
        precision: (!reports.is_empty()).then(|| tp as f64 / reports.len() as f64),
    })
}

/// Parses a `report_id,verdict` CSV (header optional, verdicts TP or FP).
pub fn parse_verdicts(text: &str) -> Result<HashMap<String, Verdict>, VerdictError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = HashMap::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 1;
        let record = record.map_err(|e| VerdictError::Malformed { line, msg: e.to_string() })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(VerdictError::Malformed {
                line,
                msg: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let (id, verdict) = (&record[0], &record[1]);
        if line == 1 && id.eq_ignore_ascii_case("report_id") {
            continue;
        }
        let verdict = match verdict.to_ascii_uppercase().as_str() {
            "TP" => Verdict::Tp,
            "FP" => Verdict::Fp,
            other => {
                return Err(VerdictError::Malformed {
                    line,
                    msg: format!("verdict must be TP or FP, found `{other}`"),
                })
            }
        };
        out.insert(id.to_string(), verdict);
    }
    Ok(out)
}

/// Labels every report from the verdict table; fails listing the reports
/// the table does not cover.
pub fn apply_verdicts(reports: &mut [BugReport], verdicts: &HashMap<String, Verdict>) -> Result<(), VerdictError> {
    let missing: Vec<String> = reports
        .iter()
        .filter(|r| !verdicts.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(VerdictError::Unlabeled(missing));
    }
    for r in reports.iter_mut() {
        r.verdict = verdicts[&r.id];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_csv() {
        let v = parse_verdicts("report_id,verdict\nbug-a, TP\nbug-b,fp\n\n").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v["bug-a"], Verdict::Tp);
        assert_eq!(v["bug-b"], Verdict::Fp);
        assert!(matches!(parse_verdicts("bug-a,maybe\n"), Err(VerdictError::Malformed { line: 1, .. })));
        assert!(parse_verdicts("bug-a\n").is_err());
    }
}
