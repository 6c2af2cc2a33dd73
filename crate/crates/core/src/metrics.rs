//! Classification metrics, confusion matrices and result tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Phase, NUM_PHASES};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("{predictions} predictions but {truths} ground-truth labels")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_PHASES]; NUM_PHASES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_PHASES).map(|c| self.counts[c][c]).sum()
    }

    pub fn support(&self, truth: Phase) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    /// Rows divided by their sums. Rows without samples stay zero.
    pub fn normalized(&self) -> [[f64; NUM_PHASES]; NUM_PHASES] {
        let mut out = [[0.0; NUM_PHASES]; NUM_PHASES];
        for (row, counts) in out.iter_mut().zip(&self.counts) {
            let n: u64 = counts.iter().sum();
            if n > 0 {
                for (o, &c) in row.iter_mut().zip(counts) {
                    *o = c as f64 / n as f64;
                }
            }
        }
        out
    }

    /// Fraction of samples on the diagonal.
    pub fn micro_accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    /// One-vs-rest counts with `class` as the positive label.
    pub fn class_counts(&self, class: Phase) -> ClassCounts {
        let c = class.index();
        let tp = self.counts[c][c];
        let fn_ = self.support(class) - tp;
        let fp = (0..NUM_PHASES).map(|t| self.counts[t][c]).sum::<u64>() - tp;
        let tn = self.total() - tp - fn_ - fp;
        ClassCounts { tp, tn, fp, fn_ }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += b;
        }
    }
}

pub fn confusion(predictions: &[Phase], truths: &[Phase]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (p, t) in predictions.iter().zip(truths) {
        m.counts[t.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassCounts {
    pub fn row(&self) -> MetricRow {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        MetricRow {
            accuracy: ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_),
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRow {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricRow {
    fn fields(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    fn from_fields(f: [f64; 4]) -> Self {
        MetricRow {
            accuracy: f[0],
            precision: f[1],
            recall: f[2],
            f1: f[3],
        }
    }

    /// Field-wise mean and sample standard deviation.
    pub fn mean_std(rows: &[MetricRow]) -> (MetricRow, MetricRow) {
        let n = rows.len();
        if n == 0 {
            return (MetricRow::default(), MetricRow::default());
        }
        let mut mean = [0.0; 4];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.fields()) {
                *m += v / n as f64;
            }
        }
        let mut var = [0.0; 4];
        if n > 1 {
            for r in rows {
                for ((s, v), m) in var.iter_mut().zip(r.fields()).zip(mean) {
                    *s += (v - m) * (v - m) / (n - 1) as f64;
                }
            }
        }
        (MetricRow::from_fields(mean), MetricRow::from_fields(var.map(f64::sqrt)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub phase: Phase,
    pub support: u64,
    pub counts: ClassCounts,
    pub row: MetricRow,
}

/// Macro row over classes that have samples, plus everything it was built from.
///
/// The row's accuracy is the exact-match fraction. Averaging per-class
/// one-vs-rest accuracies instead can never drop below 0.75 with eight
/// balanced classes, so that mean is kept separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "macro")]
    pub macro_row: MetricRow,
    pub micro_accuracy: f64,
    pub one_vs_rest_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
}

impl Metrics {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self, MetricsError> {
        if confusion.total() == 0 {
            return Err(MetricsError::EmptyInput);
        }
        let per_class: Vec<ClassMetrics> = Phase::ALL
            .iter()
            .map(|&phase| {
                let counts = confusion.class_counts(phase);
                ClassMetrics {
                    phase,
                    support: confusion.support(phase),
                    counts,
                    row: counts.row(),
                }
            })
            .collect();
        let present: Vec<MetricRow> = per_class.iter().filter(|c| c.support > 0).map(|c| c.row).collect();
        let (mut macro_row, _) = MetricRow::mean_std(&present);
        let one_vs_rest_accuracy = macro_row.accuracy;
        macro_row.accuracy = confusion.micro_accuracy();
        Ok(Metrics {
            macro_row,
            micro_accuracy: confusion.micro_accuracy(),
            one_vs_rest_accuracy,
            per_class,
            confusion,
        })
    }
}

pub fn metrics(predictions: &[Phase], truths: &[Phase]) -> Result<Metrics, MetricsError> {
    Metrics::from_confusion(confusion(predictions, truths)?)
}

/// One line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub row: MetricRow,
    /// Spread across training cycles, when there were several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<MetricRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_vs_rest_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub label: String,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown report format `{s}` (text, csv, json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub matrices: Vec<LabeledMatrix>,
}

pub fn render_report(rows: &[ReportRow], matrices: &[LabeledMatrix], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let report = Report {
                rows: rows.to_vec(),
                matrices: matrices.to_vec(),
            };
            serde_json::to_string_pretty(&report).expect("report is always serializable")
        }
        ReportFormat::Csv => render_csv(rows, matrices),
        ReportFormat::Text => render_text(rows, matrices),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(rows: &[ReportRow], matrices: &[LabeledMatrix]) -> String {
    let mut out = String::from("label,acc,pre,rec,f1,acc_std,pre_std,rec_std,f1_std,ovr_acc\n");
    for r in rows {
        let std = r.std.map(|s| s.fields().map(|v| v.to_string()));
        let _ = write!(out, "{}", csv_field(&r.label));
        for v in r.row.fields() {
            let _ = write!(out, ",{v}");
        }
        for i in 0..4 {
            let _ = write!(out, ",{}", std.as_ref().map_or("", |s| &s[i]));
        }
        let _ = writeln!(out, ",{}", r.one_vs_rest_accuracy.map(|v| v.to_string()).unwrap_or_default());
    }
    for m in matrices {
        let _ = write!(out, "\nconfusion {},true\\pred", csv_field(&m.label));
        for p in Phase::ALL {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
        for (t, row) in Phase::ALL.iter().zip(m.matrix.normalized()) {
            let _ = write!(out, ",{t}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

fn render_text(rows: &[ReportRow], matrices: &[LabeledMatrix]) -> String {
    let mut out = String::new();
    if !rows.is_empty() {
        let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
        let spread = rows.iter().any(|r| r.std.is_some());
        let cell = if spread { 13 } else { 6 };
        let _ = write!(out, "{:<width$}", "Setup");
        for h in ["Acc", "Pre", "Rec", "F1"] {
            let _ = write!(out, "  {h:>cell$}");
        }
        out.push('\n');
        for r in rows {
            let _ = write!(out, "{:<width$}", r.label);
            for (i, v) in r.row.fields().into_iter().enumerate() {
                let text = match r.std {
                    Some(s) => format!("{v:.2} ± {:.3}", s.fields()[i]),
                    None => format!("{v:.2}"),
                };
                let _ = write!(out, "  {text:>cell$}");
            }
            out.push('\n');
        }
    }
    for m in matrices {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "Confusion matrix: {} (rows true, columns predicted)", m.label);
        let _ = write!(out, "    ");
        for p in Phase::ALL {
            let _ = write!(out, "  {:>4}", p.to_string());
        }
        out.push('\n');
        for (t, row) in Phase::ALL.iter().zip(m.matrix.normalized()) {
            let _ = write!(out, "{:<4}", t.to_string());
            for v in row {
                let _ = write!(out, "  {v:>4.2}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Phase::*;

    #[test]
    fn perfect_predictions() {
        let truths: Vec<Phase> = Phase::ALL.iter().flat_map(|&p| [p, p]).collect();
        let m = metrics(&truths, &truths).unwrap();
        assert_eq!(m.macro_row, MetricRow { accuracy: 1.0, precision: 1.0, recall: 1.0, f1: 1.0 });
        let norm = m.confusion.normalized();
        for (i, row) in norm.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn binary_embedded_hand_case() {
        let m = metrics(&[P2, P5, P5, P5], &[P2, P2, P5, P5]).unwrap();
        let c = &m.per_class[1];
        assert_eq!(c.counts, ClassCounts { tp: 1, tn: 2, fp: 0, fn_: 1 });
        assert_eq!(c.row.precision, 1.0);
        assert_eq!(c.row.recall, 0.5);
        assert_eq!(c.row.f1, 2.0 / 3.0);
        assert_eq!(c.row.accuracy, 0.75);
        // Only P2 and P5 have samples.
        assert_eq!(m.per_class.iter().filter(|c| c.support > 0).count(), 2);
        assert_eq!(m.micro_accuracy, 0.75);
    }

    #[test]
    fn reported_accuracy_is_exact_match() {
        let truths = Phase::ALL.to_vec();
        let shifted: Vec<Phase> = (0..8).map(|i| Phase::ALL[(i + 1) % 8]).collect();
        let m = metrics(&shifted, &truths).unwrap();
        assert_eq!(m.macro_row.accuracy, 0.0);
        assert_eq!(m.one_vs_rest_accuracy, 0.75);
    }

    #[test]
    fn hand_tallied_matrix() {
        let pairs = [
            (P1, P1), (P1, P1), (P1, P2), (P2, P2),
            (P3, P3), (P3, P4), (P4, P4), (P4, P4),
            (P5, P7), (P5, P5), (P6, P6), (P6, P8),
            (P7, P7), (P7, P5), (P8, P8), (P8, P8),
        ];
        let (t, p): (Vec<Phase>, Vec<Phase>) = pairs.iter().copied().unzip();
        let m = confusion(&p, &t).unwrap();
        let mut want = [[0u64; 8]; 8];
        want[0][0] = 2;
        want[0][1] = 1;
        want[1][1] = 1;
        want[2][2] = 1;
        want[2][3] = 1;
        want[3][3] = 2;
        want[4][6] = 1;
        want[4][4] = 1;
        want[5][5] = 1;
        want[5][7] = 1;
        want[6][6] = 1;
        want[6][4] = 1;
        want[7][7] = 2;
        assert_eq!(m.counts, want);
        assert_eq!(m.total(), 16);
        assert_eq!(m.trace(), 11);
        let n = m.normalized();
        assert_eq!(n[4][6], 0.5);
        assert!((n[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            confusion(&[P1], &[]).unwrap_err(),
            MetricsError::LengthMismatch { predictions: 1, truths: 0 }
        );
        assert_eq!(metrics(&[], &[]).unwrap_err(), MetricsError::EmptyInput);
    }

    #[test]
    fn zero_denominators_are_zero() {
        // P3 is never predicted and P4 never correct.
        let m = metrics(&[P4, P1], &[P3, P4]).unwrap();
        for c in &m.per_class {
            assert!(c.row.precision.is_finite() && c.row.recall.is_finite());
        }
        assert_eq!(m.per_class[2].row.precision, 0.0);
        assert_eq!(m.per_class[3].row.f1, 0.0);
    }

    #[test]
    fn mean_std_of_cycles() {
        let a = MetricRow { accuracy: 0.8, precision: 0.6, recall: 1.0, f1: 0.5 };
        let b = MetricRow { accuracy: 1.0, precision: 0.6, recall: 0.0, f1: 0.5 };
        let (m, s) = MetricRow::mean_std(&[a, b]);
        assert!((m.accuracy - 0.9).abs() < 1e-15);
        assert!((s.accuracy - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.precision, 0.0);
    }

    fn sample_rows() -> Vec<ReportRow> {
        vec![
            ReportRow {
                label: "resnet101, max, cosine".into(),
                row: MetricRow { accuracy: 0.75, precision: 0.76, recall: 0.75, f1: 0.75 },
                std: None,
                one_vs_rest_accuracy: Some(0.75),
            },
            ReportRow {
                label: "lstm".into(),
                row: MetricRow { accuracy: 0.86, precision: 0.88, recall: 0.86, f1: 0.86 },
                std: Some(MetricRow { accuracy: 0.01, precision: 0.02, recall: 0.01, f1: 0.01 }),
                one_vs_rest_accuracy: None,
            },
        ]
    }

    #[test]
    fn json_round_trip() {
        let rows = sample_rows();
        let mats = vec![LabeledMatrix {
            label: "lstm".into(),
            matrix: confusion(&[P1, P7], &[P1, P5]).unwrap(),
        }];
        let text = render_report(&rows, &mats, ReportFormat::Json);
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.matrices, mats);
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let rows = sample_rows();
        let text = render_report(&rows[..1], &[], ReportFormat::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("label,acc"));
        assert!(lines[1].starts_with("\"resnet101, max, cosine\",0.75,0.76"));
    }

    #[test]
    fn csv_parses_back() {
        let rows = sample_rows();
        let mats = vec![LabeledMatrix {
            label: "knn".into(),
            matrix: confusion(&[P1, P7, P5], &[P1, P5, P5]).unwrap(),
        }];
        let text = render_report(&rows, &mats, ReportFormat::Csv);
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        for (rec, row) in records.iter().zip(&rows) {
            assert_eq!(&rec[0], row.label);
            let got: Vec<f64> = (1..5).map(|i| rec[i].parse().unwrap()).collect();
            assert_eq!(got, row.row.fields());
        }
        let p5 = records.iter().find(|r| r.len() > 1 && &r[1] == "P5").unwrap();
        assert_eq!(p5[2 + 4].parse::<f64>().unwrap(), 0.5);
        assert_eq!(p5[2 + 6].parse::<f64>().unwrap(), 0.5);
    }

    #[test]
    fn text_columns_align() {
        let text = render_report(&sample_rows(), &[], ReportFormat::Text);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let widths: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
        assert!(widths.iter().all(|&w| w == widths[0]), "{text}");
    }
}
