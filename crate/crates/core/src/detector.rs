//! LLM prompt-ensemble classification of model elements.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, CompletionBackend};
use crate::generator::{GeneratedSentence, Generator};
use crate::lexicon::Lexicon;
use crate::matcher::{MatchedSentenceSet, Matcher};
use crate::model::{DomainModel, ElementKind, ModelError};
use crate::preprocess::{Preprocessor, Sentence};
use crate::report::{AlignmentReport, Timings};
use crate::slicer::slice_all;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckKind {
    Equivalence,
    Contradiction,
    Inclusion,
}

const EQUIVALENCE: [&str; 5] = [
    "Are the following two statements semantically equivalent?",
    "Do the following two statements convey the same information?",
    "Are the following two statements conveying the same meaning?",
    "Are these statements synonymous?",
    "Do statement 1 and statement 2 have identical implications?",
];

const CONTRADICTION: [&str; 7] = [
    "Do these statements contradict each other?",
    "Are these statements mutually exclusive?",
    "Do these statements clash or conflict with each other?",
    "Do these statements negate each other?",
    "Are these statements inconsistent?",
    "Are these statements in disagreement?",
    "Are these statements incompatible?",
];

const INCLUSION: [&str; 7] = [
    "Can Statement 1 be inferred from Statement 2?",
    "Can Statement 1 be implied from Statement 2?",
    "Can Statement 1 be determined from Statement 2?",
    "Can Statement 1 be derived from Statement 2?",
    "Does Statement 1 logically follow from Statement 2?",
    "Can Statement 1 be concluded based on Statement 2?",
    "Does Statement 2 support Statement 1?",
];

pub const ANSWER_INSTRUCTION: &str = "Answer with exactly one of: Yes, No, Not Sure.";

impl CheckKind {
    pub const ALL: [CheckKind; 3] = [CheckKind::Equivalence, CheckKind::Contradiction, CheckKind::Inclusion];

    pub fn questions(self) -> &'static [&'static str] {
        match self {
            CheckKind::Equivalence => &EQUIVALENCE,
            CheckKind::Contradiction => &CONTRADICTION,
            CheckKind::Inclusion => &INCLUSION,
        }
    }
}

/// Upper bound on prompts for one (element, sentence) pair.
pub const MAX_QUERIES_PER_SENTENCE: usize = EQUIVALENCE.len() + CONTRADICTION.len() + INCLUSION.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    Yes,
    No,
    Unsure,
}

pub fn parse_response(text: &str) -> Vote {
    let first = text
        .split(|c: char| !c.is_alphabetic())
        .find(|w| !w.is_empty())
        .map(str::to_lowercase);
    match first.as_deref() {
        Some("yes") => Vote::Yes,
        Some("no") => Vote::No,
        _ => Vote::Unsure,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub yes: usize,
    pub no: usize,
    pub unsure: usize,
}

impl VoteTally {
    pub fn new(yes: usize, no: usize, unsure: usize) -> Self {
        VoteTally { yes, no, unsure }
    }

    pub fn add(&mut self, vote: Vote) {
        match vote {
            Vote::Yes => self.yes += 1,
            Vote::No => self.no += 1,
            Vote::Unsure => self.unsure += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.yes + self.no + self.unsure
    }

    /// The outcome if it can no longer change with `remaining` more votes.
    pub fn decided(&self, remaining: usize) -> Option<bool> {
        if self.yes > self.no + remaining && self.yes > self.unsure + remaining {
            Some(true)
        } else if self.yes + remaining <= self.no || self.yes + remaining <= self.unsure {
            Some(false)
        } else if remaining == 0 {
            Some(majority(*self))
        } else {
            None
        }
    }
}

/// Relative majority: yes strictly beats both other answers.
pub fn majority(tally: VoteTally) -> bool {
    tally.yes > tally.no && tally.yes > tally.unsure
}

/// Optional kind-specific text placed before the question line.
pub type PreambleHook = fn(CheckKind, ElementKind) -> Option<String>;

pub fn build_prompts(kind: CheckKind, element_kind: ElementKind, generated: &str, spec_sentence: &str) -> Vec<String> {
    build_prompts_with(kind, element_kind, generated, spec_sentence, None)
}

pub fn build_prompts_with(
    kind: CheckKind,
    element_kind: ElementKind,
    generated: &str,
    spec_sentence: &str,
    preamble: Option<PreambleHook>,
) -> Vec<String> {
    let pre = preamble
        .and_then(|h| h(kind, element_kind))
        .map(|p| format!("{p}\n"))
        .unwrap_or_default();
    kind.questions()
        .iter()
        .map(|q| {
            format!("{pre}{q}\nStatement 1: {generated}\nStatement 2: {spec_sentence}\n{ANSWER_INSTRUCTION}")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every prompt of every check is issued, concurrently.
    #[default]
    Parallel,
    /// Checks run in order and stop once their outcome is fixed.
    Sequential,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "parallel" => Ok(Mode::Parallel),
            "sequential" => Ok(Mode::Sequential),
            other => Err(format!("unknown mode `{other}` (expected parallel or sequential)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Parallel => "parallel",
            Mode::Sequential => "sequential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Aligned,
    Misaligned,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Basis {
    Equivalent,
    Included,
    Contradicted,
    None,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Aligned => "ALIGNED",
            Verdict::Misaligned => "MISALIGNED",
            Verdict::Unclassified => "UNCLASSIFIED",
        })
    }
}

impl FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ALIGNED" => Ok(Verdict::Aligned),
            "MISALIGNED" => Ok(Verdict::Misaligned),
            "UNCLASSIFIED" => Ok(Verdict::Unclassified),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Equivalent => "EQUIVALENT",
            Basis::Included => "INCLUDED",
            Basis::Contradicted => "CONTRADICTED",
            Basis::None => "NONE",
        })
    }
}

impl FromStr for Basis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EQUIVALENT" => Ok(Basis::Equivalent),
            "INCLUDED" => Ok(Basis::Included),
            "CONTRADICTED" => Ok(Basis::Contradicted),
            "NONE" => Ok(Basis::None),
            other => Err(format!("unknown basis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub element: String,
    pub kind: ElementKind,
    pub verdict: Verdict,
    pub basis: Basis,
    pub evidence: BTreeSet<usize>,
    /// Prompts sent for this element.
    pub queries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SentenceOutcome {
    equivalent: bool,
    contradicted: bool,
    included: bool,
}

/// Runs checks against a backend and counts the prompts it sends.
pub struct Detector<'b> {
    backend: &'b dyn CompletionBackend,
    mode: Mode,
    preamble: Option<PreambleHook>,
}

impl<'b> Detector<'b> {
    pub fn new(backend: &'b dyn CompletionBackend, mode: Mode) -> Self {
        Detector {
            backend,
            mode,
            preamble: None,
        }
    }

    pub fn with_preamble(mut self, hook: PreambleHook) -> Self {
        self.preamble = Some(hook);
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn ask(&self, prompt: &str, sent: &AtomicUsize) -> Result<Vote, BackendError> {
        sent.fetch_add(1, Ordering::Relaxed);
        match self.backend.complete(prompt) {
            Ok(text) => Ok(parse_response(&text)),
            Err(e) if e.is_fatal() => Err(e),
            Err(e) => {
                log::warn!("completion failed, counting the vote as unsure: {e}");
                Ok(Vote::Unsure)
            }
        }
    }

    fn check_counted(
        &self,
        kind: CheckKind,
        spec_sentence: &str,
        generated: &str,
        element_kind: ElementKind,
        sent: &AtomicUsize,
    ) -> Result<(bool, VoteTally), BackendError> {
        let prompts = build_prompts_with(kind, element_kind, generated, spec_sentence, self.preamble);
        let mut tally = VoteTally::default();
        match self.mode {
            Mode::Parallel => {
                let votes: Vec<Vote> = prompts
                    .par_iter()
                    .map(|p| self.ask(p, sent))
                    .collect::<Result<_, _>>()?;
                votes.into_iter().for_each(|v| tally.add(v));
                Ok((majority(tally), tally))
            }
            Mode::Sequential => {
                for (i, p) in prompts.iter().enumerate() {
                    tally.add(self.ask(p, sent)?);
                    if let Some(outcome) = tally.decided(prompts.len() - i - 1) {
                        return Ok((outcome, tally));
                    }
                }
                Ok((majority(tally), tally))
            }
        }
    }

    /// One check family on one sentence pair. Returns the outcome, the
    /// tally and the number of prompts sent.
    pub fn check(
        &self,
        kind: CheckKind,
        spec_sentence: &str,
        generated: &str,
        element_kind: ElementKind,
    ) -> Result<(bool, VoteTally, usize), BackendError> {
        let sent = AtomicUsize::new(0);
        let (ok, tally) = self.check_counted(kind, spec_sentence, generated, element_kind, &sent)?;
        Ok((ok, tally, sent.into_inner()))
    }

    fn eager_outcome(
        &self,
        spec_sentence: &str,
        generated: &str,
        element_kind: ElementKind,
        sent: &AtomicUsize,
    ) -> Result<SentenceOutcome, BackendError> {
        let results: Vec<bool> = CheckKind::ALL
            .par_iter()
            .map(|k| {
                self.check_counted(*k, spec_sentence, generated, element_kind, sent)
                    .map(|r| r.0)
            })
            .collect::<Result<_, _>>()?;
        Ok(SentenceOutcome {
            equivalent: results[0],
            contradicted: results[1],
            included: results[2],
        })
    }

    /// Classify one element from its generated sentence and the text of its
    /// matched specification sentences, given as `(index, text)` pairs.
    pub fn classify_element(
        &self,
        element: &str,
        element_kind: ElementKind,
        generated: &str,
        matched: &[(usize, &str)],
    ) -> Result<Classification, BackendError> {
        let sent = AtomicUsize::new(0);
        let mut ordered: Vec<(usize, &str)> = matched.to_vec();
        ordered.sort_by_key(|(i, _)| *i);
        ordered.dedup_by_key(|(i, _)| *i);

        let mut aligned = BTreeSet::new();
        let mut misaligned = BTreeSet::new();
        let mut included = BTreeSet::new();
        match self.mode {
            Mode::Parallel => {
                let outcomes: Vec<SentenceOutcome> = ordered
                    .par_iter()
                    .map(|(_, text)| self.eager_outcome(text, generated, element_kind, &sent))
                    .collect::<Result<_, _>>()?;
                for ((idx, _), o) in ordered.iter().zip(outcomes) {
                    if o.equivalent {
                        aligned.insert(*idx);
                    } else if aligned.is_empty() && o.contradicted {
                        misaligned.insert(*idx);
                    } else if o.included {
                        included.insert(*idx);
                    }
                }
            }
            Mode::Sequential => {
                for (idx, text) in &ordered {
                    let run = |k| self.check_counted(k, text, generated, element_kind, &sent).map(|r| r.0);
                    if run(CheckKind::Equivalence)? {
                        aligned.insert(*idx);
                    } else if aligned.is_empty() && run(CheckKind::Contradiction)? {
                        misaligned.insert(*idx);
                    } else if run(CheckKind::Inclusion)? {
                        included.insert(*idx);
                    }
                }
            }
        }
        let (verdict, basis, evidence) = if !aligned.is_empty() {
            (Verdict::Aligned, Basis::Equivalent, aligned)
        } else if !misaligned.is_empty() {
            (Verdict::Misaligned, Basis::Contradicted, misaligned)
        } else if !included.is_empty() {
            (Verdict::Aligned, Basis::Included, included)
        } else {
            (Verdict::Unclassified, Basis::None, BTreeSet::new())
        };
        Ok(Classification {
            element: element.to_string(),
            kind: element_kind,
            verdict,
            basis,
            evidence,
            queries: sent.into_inner(),
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub mode: Mode,
    pub tau: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Parallel,
            tau: crate::matcher::DEFAULT_TAU,
        }
    }
}

/// Everything the pipeline computed before asking the LLM.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sentences: Vec<Sentence>,
    pub kinds: Vec<ElementKind>,
    pub generated: Vec<GeneratedSentence>,
    pub matched: Vec<MatchedSentenceSet>,
    pub timings: Timings,
}

/// Everything up to the backend calls, for every element.
pub fn prepare(model: &DomainModel, spec: &str, tau: f64) -> Prepared {
    let mut timings = Timings::default();
    let t = Instant::now();
    let extraction = Preprocessor::default().run(spec);
    timings.preprocess = t.elapsed();

    let t = Instant::now();
    let slices = slice_all(model);
    timings.slice = t.elapsed();

    let t = Instant::now();
    let matched = Matcher::new(&extraction, tau, Lexicon::builtin()).match_all(&slices);
    timings.matching = t.elapsed();

    let t = Instant::now();
    let generator = Generator::default();
    let generated: Vec<GeneratedSentence> = slices.par_iter().map(|s| generator.generate(s)).collect();
    timings.generate = t.elapsed();

    Prepared {
        kinds: slices.iter().map(|s| s.focus.kind()).collect(),
        sentences: extraction.sentences,
        generated,
        matched,
        timings,
    }
}

/// The full pipeline over one model and specification.
pub fn classify_model(
    model: &DomainModel,
    spec: &str,
    backend: &dyn CompletionBackend,
    options: RunOptions,
) -> Result<AlignmentReport, PipelineError> {
    model.validate()?;
    let prepared = prepare(model, spec, options.tau);
    let detector = Detector::new(backend, options.mode);

    let t = Instant::now();
    let results: Vec<(Classification, Duration)> = (0..prepared.generated.len())
        .into_par_iter()
        .map(|i| {
            let started = Instant::now();
            let gen = &prepared.generated[i];
            let matched: Vec<(usize, &str)> = prepared.matched[i]
                .sentences
                .iter()
                .map(|&s| (s, prepared.sentences[s - 1].original_text.as_str()))
                .collect();
            detector
                .classify_element(&gen.element, prepared.kinds[i], &gen.text, &matched)
                .map(|c| (c, started.elapsed()))
        })
        .collect::<Result<_, _>>()?;
    let mut timings = prepared.timings;
    timings.detect = t.elapsed();

    let (classifications, element_times): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(AlignmentReport::new(
        model.name.clone(),
        options,
        classifications,
        &prepared.generated,
        &prepared.matched,
        timings,
        element_times,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::fixtures::{CAR_SERVICE_MODEL, CAR_SERVICE_SPEC};

    #[test]
    fn catalog_sizes_are_odd() {
        assert_eq!(EQUIVALENCE.len(), 5);
        assert_eq!(CONTRADICTION.len(), 7);
        assert_eq!(INCLUSION.len(), 7);
        assert_eq!(MAX_QUERIES_PER_SENTENCE, 19);
    }

    #[test]
    fn prompt_layout() {
        let p = build_prompts(
            CheckKind::Equivalence,
            ElementKind::Attribute,
            "A car has a plate.",
            "For each car that comes to the garage, the first thing to do is to register its plate number.",
        );
        assert_eq!(p.len(), 5);
        assert_eq!(
            p[0],
            "Are the following two statements semantically equivalent?\nStatement 1: A car has a plate.\nStatement 2: For each car that comes to the garage, the first thing to do is to register its plate number.\nAnswer with exactly one of: Yes, No, Not Sure."
        );
        let c = build_prompts(CheckKind::Contradiction, ElementKind::Attribute, "a", "b");
        assert!(c[0].starts_with("Do these statements contradict each other?"));
        let i = build_prompts(CheckKind::Inclusion, ElementKind::Attribute, "a", "b");
        assert!(i[6].starts_with("Does Statement 2 support Statement 1?"));
    }

    #[test]
    fn preamble_hook() {
        fn hook(_: CheckKind, k: ElementKind) -> Option<String> {
            (k == ElementKind::EnumLiteral).then(|| "About an enumeration value.".to_string())
        }
        let with = build_prompts_with(CheckKind::Inclusion, ElementKind::EnumLiteral, "a", "b", Some(hook));
        assert!(with[0].starts_with("About an enumeration value.\nCan Statement 1"));
        let without = build_prompts_with(CheckKind::Inclusion, ElementKind::Attribute, "a", "b", Some(hook));
        assert!(without[0].starts_with("Can Statement 1"));
    }

    #[test]
    fn responses() {
        assert_eq!(
            parse_response("Yes, the generated statement can be implied from the original statement."),
            Vote::Yes
        );
        assert_eq!(parse_response("No, the generated statement cannot be derived."), Vote::No);
        assert_eq!(parse_response("  **NO**"), Vote::No);
        assert_eq!(parse_response("Not Sure"), Vote::Unsure);
        assert_eq!(parse_response("Unsure."), Vote::Unsure);
        assert_eq!(parse_response("I would need more context."), Vote::Unsure);
        assert_eq!(parse_response(""), Vote::Unsure);
        assert_eq!(parse_response("Nope"), Vote::Unsure);
    }

    #[test]
    fn majority_examples() {
        assert!(majority(VoteTally::new(3, 1, 1)));
        assert!(!majority(VoteTally::new(2, 2, 1)));
        assert!(!majority(VoteTally::new(0, 0, 5)));
    }

    #[test]
    fn early_decision_agrees_with_full_tally() {
        for n in [5usize, 7] {
            for yes in 0..=n {
                for no in 0..=n - yes {
                    for unsure in 0..=n - yes - no {
                        let seen = yes + no + unsure;
                        let t = VoteTally::new(yes, no, unsure);
                        if let Some(outcome) = t.decided(n - seen) {
                            for extra_yes in 0..=n - seen {
                                for extra_no in 0..=n - seen - extra_yes {
                                    let extra_unsure = n - seen - extra_yes - extra_no;
                                    let full = VoteTally::new(yes + extra_yes, no + extra_no, unsure + extra_unsure);
                                    assert_eq!(majority(full), outcome, "{t:?} -> {full:?}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fixture_pipeline_with_default_mock() {
        let model = DomainModel::parse(CAR_SERVICE_MODEL).unwrap();
        let mock = MockBackend::new(vec![]).unwrap();
        let report = classify_model(&model, CAR_SERVICE_SPEC, &mock, RunOptions::default()).unwrap();
        assert_eq!(report.elements.len(), 14);
        assert!(report.elements.iter().all(|e| e.verdict == Verdict::Unclassified));
        for e in &report.elements {
            assert_eq!(e.queries, e.matched.len() * MAX_QUERIES_PER_SENTENCE);
        }
    }
}
