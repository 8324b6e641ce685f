//! Execution of generated suites against models under test.
//!
//! Each suite is checked against one relation:
//!
//! * MRC, semantic invariance: the answer on a reconstructed paragraph must
//!   still match a gold answer after SQuAD-style normalization.
//! * SA, directional expectation: inserting an adjunct whose own label is
//!   `L` must not raise the probability of the opposite label by more than
//!   the threshold.
//! * SSM, semantic variance: a sentence and its derivation must not be
//!   judged duplicates.

mod report;
mod wire;

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ingest::{Sentiment, Task};
use crate::metamorphic::{MrcTest, SaTest, SsmTest};
use crate::parallel::parallel_map;

pub use report::{apply_verdicts, parse_verdicts, precision, PrecisionResult, VerdictError};
pub use wire::{
    Endpoint, ModelError, MrcRequest, MrcResponse, SaProbs, SaRequest, SaResponse, SsmRequest, SsmResponse,
    WireResponse,
};

/// The relation a report violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mr {
    SemInv,
    DirExp,
    SemVar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Verdict {
    #[default]
    #[serde(rename = "unlabeled")]
    Unlabeled,
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "FP")]
    Fp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Evidence {
    Mrc {
        prediction: String,
        gold_answers: Vec<String>,
    },
    Sa {
        adjunct_label: Sentiment,
        /// The label whose probability rose.
        watched: Sentiment,
        parent_probs: SaProbs,
        child_probs: SaProbs,
        delta: f64,
        threshold: f64,
    },
    Ssm {
        duplicate: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugReport {
    pub id: String,
    pub task: Task,
    pub mr: Mr,
    pub test_id: String,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    pub evidence: Evidence,
    #[serde(default)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// SA probability increase that counts as a violation.
    pub threshold: f64,
    pub max_in_flight: usize,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    /// Wait before the first retry; doubled for each further one.
    pub backoff: Duration,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            threshold: 0.1,
            max_in_flight: 4,
            retries: 2,
            backoff: Duration::from_millis(100),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub total: usize,
    pub executed: usize,
    /// Tests with a failed model call; never counted as bugs.
    pub unexecuted: usize,
    /// Tests refused before any call (broken test invariants).
    pub rejected: usize,
    pub violations: usize,
    /// Distinct model requests issued.
    pub requests: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Calls `endpoint`, retrying transport failures with exponential backoff.
/// Responses that break the protocol are not retried.
pub fn call_with_retry<Req, Resp, E>(endpoint: &E, request: &Req, config: &HarnessConfig) -> Result<Resp, ModelError>
where
    E: Endpoint<Req, Resp> + ?Sized,
    Resp: WireResponse,
{
    let mut attempt = 0;
    loop {
        match endpoint.call(request) {
            Ok(resp) => {
                resp.validate().map_err(ModelError::Protocol)?;
                return Ok(resp);
            }
            Err(ModelError::Transport(msg)) if attempt < config.retries => {
                log::debug!("retrying after transport error: {msg}");
                std::thread::sleep(config.backoff * 2u32.pow(attempt));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// SQuAD answer normalization: lowercase, drop punctuation and the
/// articles a/an/the, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn report_id(test_id: &str) -> String {
    format!("bug-{test_id}")
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Evaluates an MRC answer; a report when it matches no gold answer.
pub fn check_mrc(test: &MrcTest, response: &MrcResponse) -> Option<BugReport> {
    let predicted = normalize_answer(&response.answer);
    if test.gold_answers.iter().any(|g| normalize_answer(g) == predicted) {
        return None;
    }
    Some(BugReport {
        id: report_id(&test.id),
        task: Task::Mrc,
        mr: Mr::SemInv,
        test_id: test.id.clone(),
        inputs: to_value(test),
        outputs: to_value(response),
        evidence: Evidence::Mrc {
            prediction: response.answer.clone(),
            gold_answers: test.gold_answers.clone(),
        },
        verdict: Verdict::Unlabeled,
    })
}

/// Evaluates an SA edge given the adjunct's own classification and the
/// predictions on the sentence without and with it.
pub fn check_sa(
    test: &SaTest,
    adjunct: &SaResponse,
    parent: &SaResponse,
    child: &SaResponse,
    threshold: f64,
) -> Option<BugReport> {
    let watched = adjunct.label.opposite();
    let delta = child.probs.get(watched) - parent.probs.get(watched);
    if delta <= threshold {
        return None;
    }
    Some(BugReport {
        id: report_id(&test.id),
        task: Task::Sa,
        mr: Mr::DirExp,
        test_id: test.id.clone(),
        inputs: to_value(test),
        outputs: serde_json::json!({ "adjunct": adjunct, "parent": parent, "child": child }),
        evidence: Evidence::Sa {
            adjunct_label: adjunct.label,
            watched,
            parent_probs: parent.probs,
            child_probs: child.probs,
            delta,
            threshold,
        },
        verdict: Verdict::Unlabeled,
    })
}

/// Evaluates an SSM pair; a report when the model calls it a duplicate.
pub fn check_ssm(test: &SsmTest, response: &SsmResponse) -> Option<BugReport> {
    (response.duplicate == 1).then(|| BugReport {
        id: report_id(&test.id),
        task: Task::Ssm,
        mr: Mr::SemVar,
        test_id: test.id.clone(),
        inputs: to_value(test),
        outputs: to_value(response),
        evidence: Evidence::Ssm {
            duplicate: response.duplicate,
        },
        verdict: Verdict::Unlabeled,
    })
}

fn sa_precondition(test: &SaTest) -> Result<(), HarnessError> {
    if test.adjunct_text.trim().is_empty() {
        return Err(HarnessError::Precondition(format!("{}: empty adjunct", test.id)));
    }
    if test.parent_text == test.child_text {
        return Err(HarnessError::Precondition(format!("{}: insertion changed nothing", test.id)));
    }
    Ok(())
}

fn ssm_precondition(test: &SsmTest) -> Result<(), HarnessError> {
    if test.text_a == test.text_b {
        return Err(HarnessError::Precondition(format!("{}: identical texts", test.id)));
    }
    Ok(())
}

pub fn run_mrc(
    test: &MrcTest,
    endpoint: &dyn Endpoint<MrcRequest, MrcResponse>,
    config: &HarnessConfig,
) -> Result<Option<BugReport>, HarnessError> {
    let req = MrcRequest {
        paragraph: test.paragraph.clone(),
        question: test.question.clone(),
    };
    Ok(check_mrc(test, &call_with_retry(endpoint, &req, config)?))
}

pub fn run_sa(
    test: &SaTest,
    endpoint: &dyn Endpoint<SaRequest, SaResponse>,
    config: &HarnessConfig,
) -> Result<Option<BugReport>, HarnessError> {
    sa_precondition(test)?;
    let ask = |text: &str| call_with_retry(endpoint, &SaRequest { text: text.to_string() }, config);
    let adjunct = ask(&test.adjunct_text)?;
    let parent = ask(&test.parent_text)?;
    let child = ask(&test.child_text)?;
    Ok(check_sa(test, &adjunct, &parent, &child, config.threshold))
}

pub fn run_ssm(
    test: &SsmTest,
    endpoint: &dyn Endpoint<SsmRequest, SsmResponse>,
    config: &HarnessConfig,
) -> Result<Option<BugReport>, HarnessError> {
    ssm_precondition(test)?;
    let req = SsmRequest {
        text_a: test.text_a.clone(),
        text_b: test.text_b.clone(),
    };
    Ok(check_ssm(test, &call_with_retry(endpoint, &req, config)?))
}

/// Issues every distinct request once, with bounded concurrency.
fn fetch_all<Req, Resp>(
    requests: BTreeSet<Req>,
    endpoint: &dyn Endpoint<Req, Resp>,
    config: &HarnessConfig,
) -> HashMap<Req, Result<Resp, ModelError>>
where
    Req: Ord + Hash + Clone + Sync,
    Resp: WireResponse,
{
    let requests: Vec<Req> = requests.into_iter().collect();
    let results = parallel_map(&requests, config.max_in_flight, |r| call_with_retry(endpoint, r, config));
    requests.into_iter().zip(results).collect()
}

fn start<Req, Resp>(endpoint: &dyn Endpoint<Req, Resp>) -> Result<(), HarnessError> {
    endpoint.probe().map_err(|e| match e {
        ModelError::Unreachable(_) => HarnessError::Model(e),
        other => HarnessError::Model(ModelError::Unreachable(other.to_string())),
    })
}

fn finish(mut reports: Vec<BugReport>, mut stats: RunStats, started: std::time::Instant) -> (Vec<BugReport>, RunStats) {
    reports.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    stats.violations = reports.len();
    stats.wall_ms = started.elapsed().as_millis() as u64;
    (reports, stats)
}

impl PartialOrd for MrcRequest {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MrcRequest {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.paragraph, &self.question).cmp(&(&other.paragraph, &other.question))
    }
}

impl PartialOrd for SaRequest {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SaRequest {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.text.cmp(&other.text)
    }
}

impl PartialOrd for SsmRequest {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SsmRequest {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.text_a, &self.text_b).cmp(&(&other.text_a, &other.text_b))
    }
}

/// Runs an MRC suite. Fails only when the endpoint is unreachable at start.
pub fn run_mrc_suite(
    tests: &[MrcTest],
    endpoint: &dyn Endpoint<MrcRequest, MrcResponse>,
    config: &HarnessConfig,
) -> Result<(Vec<BugReport>, RunStats), HarnessError> {
    let started = std::time::Instant::now();
    let mut stats = RunStats {
        total: tests.len(),
        ..RunStats::default()
    };
    if tests.is_empty() {
        return Ok(finish(Vec::new(), stats, started));
    }
    start(endpoint)?;
    let req = |t: &MrcTest| MrcRequest {
        paragraph: t.paragraph.clone(),
        question: t.question.clone(),
    };
    let answers = fetch_all(tests.iter().map(req).collect(), endpoint, config);
    stats.requests = answers.len();
    let mut reports = Vec::new();
    for t in tests {
        match &answers[&req(t)] {
            Ok(resp) => {
                stats.executed += 1;
                reports.extend(check_mrc(t, resp));
            }
            Err(e) => {
                log::warn!("{}: {e}", t.id);
                stats.unexecuted += 1;
            }
        }
    }
    Ok(finish(reports, stats, started))
}

/// Runs an SA suite. Each distinct text (adjuncts, parents, children) is
/// classified once.
pub fn run_sa_suite(
    tests: &[SaTest],
    endpoint: &dyn Endpoint<SaRequest, SaResponse>,
    config: &HarnessConfig,
) -> Result<(Vec<BugReport>, RunStats), HarnessError> {
    let started = std::time::Instant::now();
    let mut stats = RunStats {
        total: tests.len(),
        ..RunStats::default()
    };
    let runnable: Vec<&SaTest> = tests
        .iter()
        .filter(|t| match sa_precondition(t) {
            Ok(()) => true,
            Err(e) => {
                log::warn!("{e}");
                stats.rejected += 1;
                false
            }
        })
        .collect();
    if runnable.is_empty() {
        return Ok(finish(Vec::new(), stats, started));
    }
    start(endpoint)?;
    let texts: BTreeSet<SaRequest> = runnable
        .iter()
        .flat_map(|t| [&t.adjunct_text, &t.parent_text, &t.child_text])
        .map(|s| SaRequest { text: s.clone() })
        .collect();
    let preds = fetch_all(texts, endpoint, config);
    stats.requests = preds.len();
    let get = |s: &String| preds[&SaRequest { text: s.clone() }].as_ref();
    let mut reports = Vec::new();
    for t in runnable {
        match (get(&t.adjunct_text), get(&t.parent_text), get(&t.child_text)) {
            (Ok(a), Ok(p), Ok(c)) => {
                stats.executed += 1;
                reports.extend(check_sa(t, a, p, c, config.threshold));
            }
            (a, p, c) => {
                let err = [a.err(), p.err(), c.err()].into_iter().flatten().next();
                log::warn!("{}: {}", t.id, err.map(ToString::to_string).unwrap_or_default());
                stats.unexecuted += 1;
            }
        }
    }
    Ok(finish(reports, stats, started))
}

pub fn run_ssm_suite(
    tests: &[SsmTest],
    endpoint: &dyn Endpoint<SsmRequest, SsmResponse>,
    config: &HarnessConfig,
) -> Result<(Vec<BugReport>, RunStats), HarnessError> {
    let started = std::time::Instant::now();
    let mut stats = RunStats {
        total: tests.len(),
        ..RunStats::default()
    };
    let runnable: Vec<&SsmTest> = tests
        .iter()
        .filter(|t| match ssm_precondition(t) {
            Ok(()) => true,
            Err(e) => {
                log::warn!("{e}");
                stats.rejected += 1;
                false
            }
        })
        .collect();
    if runnable.is_empty() {
        return Ok(finish(Vec::new(), stats, started));
    }
    start(endpoint)?;
    let req = |t: &SsmTest| SsmRequest {
        text_a: t.text_a.clone(),
        text_b: t.text_b.clone(),
    };
    let preds = fetch_all(runnable.iter().map(|t| req(t)).collect(), endpoint, config);
    stats.requests = preds.len();
    let mut reports = Vec::new();
    for t in runnable {
        match &preds[&req(t)] {
            Ok(resp) => {
                stats.executed += 1;
                reports.extend(check_ssm(t, resp));
            }
            Err(e) => {
                log::warn!("{}: {e}", t.id);
                stats.unexecuted += 1;
            }
        }
    }
    Ok(finish(reports, stats, started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squad_normalization() {
        assert_eq!(normalize_answer("The instance."), "instance");
        assert_eq!(normalize_answer("  an   Apple, pie "), "apple pie");
        assert_eq!(normalize_answer("the solution"), "solution");
    }

    #[test]
    fn verdict_serde_names() {
        assert_eq!(serde_json::to_string(&Verdict::Tp).unwrap(), "\"TP\"");
        assert_eq!(serde_json::to_string(&Verdict::Unlabeled).unwrap(), "\"unlabeled\"");
        assert_eq!(serde_json::to_string(&Mr::DirExp).unwrap(), "\"DirExp\"");
    }
}
