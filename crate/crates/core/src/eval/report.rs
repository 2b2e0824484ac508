//! Table and CSV rendering of experiment reports.

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalReport};
use crate::data::Split;

pub const CSV_HEADER: &str = "method,encoder,streams,split,k,accuracy_mean,accuracy_std,runs";

/// A fraction in `[0, 1]` as a percentage with one decimal.
pub fn percent(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormattedReport {
    pub text: String,
    pub csv: String,
}

/// One CSV record; accuracies are percentages as rendered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub method: String,
    pub encoder: String,
    pub streams: String,
    pub split: Split,
    pub k: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub runs: usize,
}

/// Renders `reports` as a fixed-width table (val top-1, then test top-k for
/// every k) and as CSV with one row per (report, split, k).
pub fn format_report(reports: &[EvalReport]) -> Result<FormattedReport, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    let ks = &first.ks;
    if let Some(r) = reports.iter().find(|r| &r.ks != ks) {
        return Err(EvalError::InconsistentKs { expected: ks.clone(), found: r.ks.clone() });
    }
    if !ks.contains(&1) {
        return Err(EvalError::InvalidConfig("reports must include k = 1".into()));
    }
    let top1 = ks.iter().position(|&k| k == 1).expect("checked above");

    let mut header = vec!["method".to_string(), "encoder".into(), "streams".into(), "val top-1".into()];
    header.extend(ks.iter().map(|k| format!("test top-{k}")));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.method.clone(), r.encoder.clone(), r.streams.clone(), percent(r.val.mean[top1])];
            row.extend(r.test.mean.iter().map(|&v| percent(v)));
            row
        })
        .collect();
    let widths: Vec<usize> =
        (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0)).collect();
    let render = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| if c < 3 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut text = render(&header);
    text.push('\n');
    text.push_str(&"-".repeat(text.trim_end().chars().count()));
    text.push('\n');
    for row in &rows {
        text.push_str(&render(row));
        text.push('\n');
    }

    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in reports {
        for summary in [&r.val, &r.test] {
            for (i, k) in ks.iter().enumerate() {
                w.write_record([
                    r.method.as_str(),
                    &r.encoder,
                    &r.streams,
                    summary.split.name(),
                    &k.to_string(),
                    &percent(summary.mean[i]),
                    &percent(summary.std[i]),
                    &r.runs.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?).expect("CSV output is UTF-8");
    Ok(FormattedReport { text, csv })
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Csv(e.to_string())
}

/// Parses CSV produced by [`format_report`].
pub fn parse_report_csv(text: &str) -> Result<Vec<CsvRow>, EvalError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(EvalError::Csv(format!("unexpected header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::SplitSummary;
    use std::collections::BTreeMap;

    fn summary(split: Split, mean: Vec<f64>) -> SplitSummary {
        let n = mean.len();
        SplitSummary { split, num_candidates: 50, per_run: vec![mean.clone()], mean, std: vec![0.0; n], per_class: BTreeMap::new() }
    }

    fn report(ks: Vec<usize>, val: Vec<f64>, test: Vec<f64>) -> EvalReport {
        EvalReport {
            method: "LLE".into(),
            encoder: "bilstm".into(),
            streams: "body+hand".into(),
            ks,
            runs: 1,
            val: summary(Split::Val, val),
            test: summary(Split::Test, test),
            excluded_classes: Vec::new(),
            selected: Vec::new(),
        }
    }

    #[test]
    fn table_values() {
        let f = format_report(&[report(vec![1, 2, 5], vec![0.2, 0.3, 0.5], vec![0.18, 0.274, 0.438])]).unwrap();
        let row = f.text.lines().nth(2).unwrap();
        assert!(row.ends_with("20.0        18.0        27.4        43.8"), "{row}");
        let rows = parse_report_csv(&f.csv).unwrap();
        assert_eq!(rows.len(), 6);
        let test: Vec<f64> = rows.iter().filter(|r| r.split == Split::Test).map(|r| r.accuracy_mean).collect();
        assert_eq!(test, vec![18.0, 27.4, 43.8]);
    }

    #[test]
    fn single_k_and_errors() {
        let f = format_report(&[report(vec![1], vec![1.0], vec![0.5])]).unwrap();
        assert_eq!(f.text.lines().count(), 3);
        assert!(matches!(format_report(&[]), Err(EvalError::NoReports)));
        let a = report(vec![1], vec![1.0], vec![0.5]);
        let b = report(vec![1, 2], vec![1.0, 1.0], vec![0.5, 0.6]);
        assert!(matches!(format_report(&[a, b]), Err(EvalError::InconsistentKs { .. })));
    }
}
