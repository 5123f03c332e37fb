//! Scores for alignment and misalignment predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mutation::{GroundTruth, Label};
use crate::detector::Verdict;
use crate::report::AlignmentReport;

/// Raw confusion counts for one model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Elements aligned in the ground truth.
    pub a: u64,
    /// Elements predicted aligned.
    pub pa: u64,
    /// Correctly predicted alignments.
    pub cpa: u64,
    pub m: u64,
    pub pm: u64,
    pub cpm: u64,
}

impl Counts {
    pub fn new(a: u64, pa: u64, cpa: u64, m: u64, pm: u64, cpm: u64) -> Self {
        Counts { a, pa, cpa, m, pm, cpm }
    }

    pub fn is_consistent(&self) -> bool {
        self.cpa <= self.pa.min(self.a) && self.cpm <= self.pm.min(self.m)
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            a: self.a + o.a,
            pa: self.pa + o.pa,
            cpa: self.cpa + o.cpa,
            m: self.m + o.m,
            pm: self.pm + o.pm,
            cpm: self.cpm + o.cpm,
        }
    }
}

pub const COUNT_COLUMNS: [&str; 6] = ["A", "PA", "CPA", "M", "PM", "CPM"];
pub const RATIO_COLUMNS: [&str; 9] = [
    "Prec_a", "Prec_m", "Prec", "Rec_a", "Rec_m", "Rec", "F1_a", "F1_m", "F1",
];

fn ratio<F: Float>(num: u64, den: u64) -> Option<F> {
    if den == 0 {
        None
    } else {
        Some(F::from(num)? / F::from(den)?)
    }
}

/// Harmonic mean of precision and recall. A zero precision gives zero
/// even when recall is undefined; otherwise any undefined input makes the
/// result undefined.
pub fn f1<F: Float>(precision: Option<F>, recall: Option<F>) -> Option<F> {
    let p = precision?;
    if p.is_zero() {
        return Some(F::zero());
    }
    let r = recall?;
    if (p + r).is_zero() {
        return Some(F::zero());
    }
    let two = F::one() + F::one();
    Some(two * p * r / (p + r))
}

/// One evaluated model: counts plus every derived ratio (`None` when the
/// denominator is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow<F> {
    pub counts: Counts,
    pub prec_a: Option<F>,
    pub prec_m: Option<F>,
    pub prec: Option<F>,
    pub rec_a: Option<F>,
    pub rec_m: Option<F>,
    pub rec: Option<F>,
    pub f1_a: Option<F>,
    pub f1_m: Option<F>,
    pub f1: Option<F>,
}

impl<F: Float> MetricsRow<F> {
    pub fn from_counts(c: Counts) -> Self {
        let prec_a = ratio(c.cpa, c.pa);
        let prec_m = ratio(c.cpm, c.pm);
        let prec = ratio(c.cpa + c.cpm, c.pa + c.pm);
        let rec_a = ratio(c.cpa, c.a);
        let rec_m = ratio(c.cpm, c.m);
        let rec = ratio(c.cpa + c.cpm, c.a + c.m);
        MetricsRow {
            counts: c,
            prec_a,
            prec_m,
            prec,
            rec_a,
            rec_m,
            rec,
            f1_a: f1(prec_a, rec_a),
            f1_m: f1(prec_m, rec_m),
            f1: f1(prec, rec),
        }
    }

    /// Ratios in [`RATIO_COLUMNS`] order.
    pub fn ratios(&self) -> [Option<F>; 9] {
        [
            self.prec_a,
            self.prec_m,
            self.prec,
            self.rec_a,
            self.rec_m,
            self.rec,
            self.f1_a,
            self.f1_m,
            self.f1,
        ]
    }

    pub fn ratio(&self, column: &str) -> Option<F> {
        RATIO_COLUMNS
            .iter()
            .position(|c| c.eq_ignore_ascii_case(column))
            .and_then(|i| self.ratios()[i])
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("elements only in the report: {0:?}")]
    OnlyInReport(Vec<String>),
    #[error("elements only in the ground truth: {0:?}")]
    OnlyInTruth(Vec<String>),
}

/// Compare a report with the ground truth over the same element ids.
pub fn score<F: Float>(report: &AlignmentReport, truth: &GroundTruth) -> Result<MetricsRow<F>, ScoreError> {
    let predicted: BTreeMap<&str, Verdict> = report.elements.iter().map(|e| (e.id.as_str(), e.verdict)).collect();
    let r_ids: BTreeSet<&str> = predicted.keys().copied().collect();
    let t_ids: BTreeSet<&str> = truth.labels.keys().map(String::as_str).collect();
    let only_r: Vec<String> = r_ids.difference(&t_ids).map(|s| s.to_string()).collect();
    if !only_r.is_empty() {
        return Err(ScoreError::OnlyInReport(only_r));
    }
    let only_t: Vec<String> = t_ids.difference(&r_ids).map(|s| s.to_string()).collect();
    if !only_t.is_empty() {
        return Err(ScoreError::OnlyInTruth(only_t));
    }
    let mut c = Counts::default();
    for (id, label) in &truth.labels {
        let verdict = predicted[id.as_str()];
        match label {
            Label::Aligned => c.a += 1,
            Label::Misaligned => c.m += 1,
        }
        match verdict {
            Verdict::Aligned => {
                c.pa += 1;
                c.cpa += u64::from(*label == Label::Aligned);
            }
            Verdict::Misaligned => {
                c.pm += 1;
                c.cpm += u64::from(*label == Label::Misaligned);
            }
            Verdict::Unclassified => {}
        }
    }
    Ok(MetricsRow::from_counts(c))
}

/// Summary over several rows: per-column mean and sample standard
/// deviation of the defined ratios, and the ratios of the summed counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate<F> {
    pub rows: usize,
    pub mean: [Option<F>; 9],
    pub std: [Option<F>; 9],
    pub micro: MetricsRow<F>,
}

impl<F: Float> Aggregate<F> {
    pub fn mean_of(&self, column: &str) -> Option<F> {
        RATIO_COLUMNS.iter().position(|c| *c == column).and_then(|i| self.mean[i])
    }

    pub fn std_of(&self, column: &str) -> Option<F> {
        RATIO_COLUMNS.iter().position(|c| *c == column).and_then(|i| self.std[i])
    }
}

pub fn aggregate<F: Float>(rows: &[MetricsRow<F>]) -> Aggregate<F> {
    let mut mean = [None; 9];
    let mut std = [None; 9];
    for col in 0..9 {
        let vals: Vec<F> = rows.iter().filter_map(|r| r.ratios()[col]).collect();
        if vals.is_empty() {
            continue;
        }
        let n = F::from(vals.len()).expect("row count fits the float type");
        let mu = vals.iter().fold(F::zero(), |acc, v| acc + *v) / n;
        mean[col] = Some(mu);
        if vals.len() > 1 {
            let ss = vals.iter().fold(F::zero(), |acc, v| acc + (*v - mu) * (*v - mu));
            std[col] = Some((ss / (n - F::one())).sqrt());
        }
    }
    let total = rows.iter().fold(Counts::default(), |acc, r| acc + r.counts);
    Aggregate {
        rows: rows.len(),
        mean,
        std,
        micro: MetricsRow::from_counts(total),
    }
}

fn cell<F: Float>(v: Option<F>, digits: usize) -> String {
    match v.and_then(|x| x.to_f64()) {
        Some(x) => format!("{x:.digits$}"),
        None => "-".to_string(),
    }
}

/// CSV with one line per labelled row, then `Avg`, `Std` and `Sum` lines.
/// Undefined ratios are written as `-`.
pub fn render_csv<F: Float>(rows: &[(String, MetricsRow<F>)], digits: usize, summary: bool) -> String {
    let mut out = String::from("row,");
    out.push_str(&COUNT_COLUMNS.join(","));
    out.push(',');
    out.push_str(&RATIO_COLUMNS.join(","));
    out.push('\n');
    let line = |out: &mut String, label: &str, counts: Option<Counts>, ratios: [Option<F>; 9]| {
        let _ = write!(out, "{label}");
        match counts {
            Some(c) => {
                let _ = write!(out, ",{},{},{},{},{},{}", c.a, c.pa, c.cpa, c.m, c.pm, c.cpm);
            }
            None => out.push_str(",,,,,,"),
        }
        for r in ratios {
            let _ = write!(out, ",{}", cell(r, digits));
        }
        out.push('\n');
    };
    for (label, row) in rows {
        line(&mut out, label, Some(row.counts), row.ratios());
    }
    if summary && !rows.is_empty() {
        let just_rows: Vec<MetricsRow<F>> = rows.iter().map(|(_, r)| *r).collect();
        let agg = aggregate(&just_rows);
        line(&mut out, "Avg", None, agg.mean);
        line(&mut out, "Std", None, agg.std);
        line(&mut out, "Sum", Some(agg.micro.counts), agg.micro.ratios());
    }
    out
}

/// Reads rows of `A,PA,CPA,M,PM,CPM` counts. A leading non-numeric column
/// is taken as the row label; other extra columns are ignored.
pub fn read_counts_csv(text: &str) -> Result<Vec<(String, Counts)>, String> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| format!("missing column {name}"))
    };
    let idx: Vec<usize> = COUNT_COLUMNS.iter().map(|c| find(c)).collect::<Result<_, _>>()?;
    let label_col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("row") || h.eq_ignore_ascii_case("model"));
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let get = |i: usize| -> Result<u64, String> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| format!("line {}: `{raw}` is not a count", n + 2))
        };
        let c = Counts::new(get(idx[0])?, get(idx[1])?, get(idx[2])?, get(idx[3])?, get(idx[4])?, get(idx[5])?);
        if !c.is_consistent() {
            return Err(format!("line {}: correct predictions exceed their totals", n + 2));
        }
        let label = label_col
            .and_then(|i| rec.get(i))
            .map(str::to_string)
            .unwrap_or_else(|| format!("{}", n + 1));
        out.push((label, c));
    }
    Ok(out)
}
