//! Alignment reports: JSON and CSV forms and atomic file output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{Basis, Classification, Mode, RunOptions, Verdict};
use crate::generator::GeneratedSentence;
use crate::matcher::MatchedSentenceSet;
use crate::model::ElementKind;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Write through a temporary file in the same directory, then rename, so
/// readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Wall-clock time per pipeline stage. Never serialized, so reports stay
/// byte-identical across runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub preprocess: Duration,
    pub slice: Duration,
    pub matching: Duration,
    pub generate: Duration,
    pub detect: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.preprocess + self.slice + self.matching + self.generate + self.detect
    }

    pub fn render(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1000.0;
        let mut out = String::new();
        for (label, d) in [
            ("A preprocess", self.preprocess),
            ("B slice", self.slice),
            ("C match", self.matching),
            ("D generate", self.generate),
            ("E detect", self.detect),
            ("total", self.total()),
        ] {
            let _ = writeln!(out, "{label:<14}{:>12.3} ms", ms(d));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementReport {
    pub id: String,
    pub kind: ElementKind,
    pub verdict: Verdict,
    pub basis: Basis,
    pub evidence: Vec<usize>,
    pub queries: usize,
    pub matched: Vec<usize>,
    pub sentence: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub model: String,
    pub mode: Mode,
    pub tau: f64,
    pub total_queries: usize,
    pub elements: Vec<ElementReport>,
    #[serde(skip)]
    pub timings: Timings,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    element: String,
    kind: ElementKind,
    verdict: Verdict,
    basis: Basis,
    evidence: String,
    queries: usize,
    matched: String,
    sentence: String,
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Result<Vec<usize>, std::num::ParseIntError> {
    s.split(';')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.trim_start_matches('s').parse())
        .collect()
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

impl AlignmentReport {
    pub fn new(
        model: String,
        options: RunOptions,
        classifications: Vec<Classification>,
        generated: &[GeneratedSentence],
        matched: &[MatchedSentenceSet],
        timings: Timings,
        element_times: Vec<Duration>,
    ) -> Self {
        let elements: Vec<ElementReport> = classifications
            .into_iter()
            .zip(generated)
            .zip(matched)
            .zip(element_times)
            .map(|(((c, g), m), elapsed)| ElementReport {
                id: c.element,
                kind: c.kind,
                verdict: c.verdict,
                basis: c.basis,
                evidence: c.evidence.into_iter().collect(),
                queries: c.queries,
                matched: m.sentences.iter().copied().collect(),
                sentence: g.text.clone(),
                elapsed,
            })
            .collect();
        AlignmentReport {
            model,
            mode: options.mode,
            tau: options.tau,
            total_queries: elements.iter().map(|e| e.queries).sum(),
            elements,
            timings,
        }
    }

    pub fn element(&self, id: &str) -> Option<&ElementReport> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn evidence(&self, id: &str) -> Option<BTreeSet<usize>> {
        self.element(id).map(|e| e.evidence.iter().copied().collect())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.elements {
            w.serialize(CsvRow {
                element: e.id.clone(),
                kind: e.kind,
                verdict: e.verdict,
                basis: e.basis,
                evidence: join(&e.evidence),
                queries: e.queries,
                matched: join(&e.matched),
                sentence: e.sentence.clone(),
            })
            .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads the per-element CSV. Run-level fields the CSV does not carry
    /// take their defaults.
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut elements = Vec::new();
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| e.to_string())?;
            elements.push(ElementReport {
                evidence: split(&row.evidence).map_err(|e| format!("{}: evidence: {e}", row.element))?,
                matched: split(&row.matched).map_err(|e| format!("{}: matched: {e}", row.element))?,
                id: row.element,
                kind: row.kind,
                verdict: row.verdict,
                basis: row.basis,
                queries: row.queries,
                sentence: row.sentence,
                elapsed: Duration::ZERO,
            });
        }
        let options = RunOptions::default();
        Ok(AlignmentReport {
            model: String::new(),
            mode: options.mode,
            tau: options.tau,
            total_queries: elements.iter().map(|e| e.queries).sum(),
            elements,
            timings: Timings::default(),
        })
    }

    /// CSV when the extension is `.csv`, JSON otherwise.
    pub fn render_for(&self, path: &Path) -> String {
        if is_csv(path) {
            self.to_csv()
        } else {
            self.to_json()
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        write_atomic(path, self.render_for(path).as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path)?;
        let fail = |message: String| ReportError::Format {
            path: path.display().to_string(),
            message,
        };
        if is_csv(path) {
            Self::from_csv(&text).map_err(fail)
        } else {
            Self::from_json(&text).map_err(|e| fail(e.to_string()))
        }
    }

    /// One line per element: id, verdict, basis, evidence, queries.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            let ev = e.evidence.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join(",");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{{{}}}\t{}",
                e.id, e.verdict, e.basis, ev, e.queries
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AlignmentReport {
        AlignmentReport {
            model: "M".into(),
            mode: Mode::Sequential,
            tau: 0.75,
            total_queries: 22,
            elements: vec![
                ElementReport {
                    id: "attr:Car.plate".into(),
                    kind: ElementKind::Attribute,
                    verdict: Verdict::Aligned,
                    basis: Basis::Equivalent,
                    evidence: vec![2],
                    queries: 3,
                    matched: vec![2],
                    sentence: "A car has a plate.".into(),
                    elapsed: Duration::ZERO,
                },
                ElementReport {
                    id: "end:Service--Garage#place".into(),
                    kind: ElementKind::AssociationEnd,
                    verdict: Verdict::Unclassified,
                    basis: Basis::None,
                    evidence: vec![],
                    queries: 19,
                    matched: vec![1, 6],
                    sentence: "A service has a place, which is a garage.".into(),
                    elapsed: Duration::ZERO,
                },
            ],
            timings: Timings::default(),
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(AlignmentReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn csv_round_trip_keeps_elements() {
        let r = sample();
        let csv = r.to_csv();
        assert!(csv.starts_with("element,kind,verdict,basis,evidence,queries,matched,sentence\n"));
        assert!(csv.contains("end:Service--Garage#place,ASSOCIATION_END,UNCLASSIFIED,NONE,,19,1;6,"));
        let back = AlignmentReport::from_csv(&csv).unwrap();
        assert_eq!(back.elements, r.elements);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn save_and_load_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        for name in ["r.json", "r.csv"] {
            let p = dir.path().join(name);
            r.save(&p).unwrap();
            assert_eq!(AlignmentReport::load(&p).unwrap().elements, r.elements);
        }
    }
}
