//! Adjunct mutation: single-word variants of an adjunct, produced either by
//! lexicon synonyms (re-inflected to fit) or by a fill-mask model, and scored
//! by word-vector similarity to the word they replace.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::disassembly::{Adjunct, DerivationTemplate};
use crate::ingest::{EmbeddingTable, Lexicon, Stopwords, Token, Upos};
use crate::morph::{required_inflection, Inflector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Synonym,
    Mlm,
}

/// One variant of a template slot's adjunct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjunctVariant {
    /// 1-based slot the variant fills.
    pub slot: usize,
    pub tokens: Vec<String>,
    /// Position inside the adjunct that was replaced; `None` for the original.
    pub substituted: Option<usize>,
    pub substitute: Option<String>,
    pub provenance: Provenance,
    /// Cosine similarity between the replaced word and its substitute; 1.0
    /// only for the original.
    pub similarity: f64,
}

impl AdjunctVariant {
    pub fn original(adjunct: &Adjunct) -> Self {
        AdjunctVariant {
            slot: adjunct.slot,
            tokens: adjunct.tokens.iter().map(|t| t.form.clone()).collect(),
            substituted: None,
            substitute: None,
            provenance: Provenance::Original,
            similarity: 1.0,
        }
    }

    pub fn is_original(&self) -> bool {
        self.provenance == Provenance::Original
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Synonym,
    Mlm,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Synonym => "synonym",
            Strategy::Mlm => "mlm",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "synonym" => Ok(Strategy::Synonym),
            "mlm" => Ok(Strategy::Mlm),
            other => Err(format!("unknown strategy `{other}` (expected synonym or mlm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationLimits {
    pub per_word: usize,
    /// Cap on variants per adjunct, the original included.
    pub per_adjunct: usize,
    pub top_k: usize,
}

impl Default for MutationLimits {
    fn default() -> Self {
        MutationLimits {
            per_word: 3,
            per_adjunct: 8,
            top_k: 5,
        }
    }
}

/// Request body of the fill-mask service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlmRequest {
    pub text: String,
    pub mask_token: String,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlmCandidate {
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlmResponse {
    pub candidates: Vec<MlmCandidate>,
}

impl MlmResponse {
    /// Checks single-word tokens, scores in [0, 1] and descending order.
    pub fn validate(&self) -> Result<(), String> {
        for c in &self.candidates {
            if c.token.is_empty() || c.token.chars().any(char::is_whitespace) {
                return Err(format!("candidate `{}` is not a single word", c.token));
            }
            if !(0.0..=1.0).contains(&c.score) {
                return Err(format!("candidate `{}` has score {} outside [0, 1]", c.token, c.score));
            }
        }
        if self.candidates.windows(2).any(|w| w[0].score < w[1].score) {
            return Err("candidate scores are not in descending order".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MlmError {
    #[error("fill-mask transport error: {0}")]
    Transport(String),
    #[error("fill-mask protocol error: {0}")]
    Protocol(String),
}

/// A masked language model service.
pub trait FillMask: Sync {
    fn fill_mask(&self, request: &MlmRequest) -> Result<MlmResponse, MlmError>;
}

impl<F> FillMask for F
where
    F: Fn(&MlmRequest) -> Result<MlmResponse, MlmError> + Sync,
{
    fn fill_mask(&self, request: &MlmRequest) -> Result<MlmResponse, MlmError> {
        self(request)
    }
}

/// Lexical resources shared by all mutations of a run.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub lexicon: &'a Lexicon,
    pub embeddings: &'a EmbeddingTable,
    pub stopwords: &'a Stopwords,
    pub inflector: &'a Inflector,
    pub fill_mask: Option<&'a dyn FillMask>,
    pub mask_token: &'a str,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationStats {
    pub mlm_requests: usize,
    pub mlm_failures: usize,
    /// Synonyms dropped because no single-word inflection matched.
    pub inflection_drops: usize,
    /// Candidate variants rejected by a caller-supplied filter.
    pub suppressed: usize,
}

impl MutationStats {
    pub fn merge(&mut self, other: &MutationStats) {
        self.mlm_requests += other.mlm_requests;
        self.mlm_failures += other.mlm_failures;
        self.inflection_drops += other.inflection_drops;
        self.suppressed += other.suppressed;
    }
}

const ELIGIBLE: &[Upos] = &[Upos::NOUN, Upos::VERB, Upos::ADJ, Upos::ADV];

/// Indices of adjunct tokens that may be replaced: content words that are
/// not stop words.
pub fn eligible_words(tokens: &[Token], stopwords: &Stopwords) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| ELIGIBLE.contains(&t.upos) && !stopwords.contains(&t.form))
        .map(|(i, _)| i)
        .collect()
}

fn lemma_of(token: &Token) -> String {
    if token.lemma.is_empty() || token.lemma == "_" {
        token.form.to_lowercase()
    } else {
        token.lemma.to_lowercase()
    }
}

/// Gives `word` the capitalization pattern of `like`.
fn match_case(word: &str, like: &str) -> String {
    let mut chars = like.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    if first_upper && like.chars().count() > 1 && like.chars().all(|c| !c.is_lowercase()) {
        word.to_uppercase()
    } else if first_upper {
        let mut w = word.chars();
        w.next()
            .map(|c| c.to_uppercase().chain(w).collect())
            .unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// Lexicon synonyms of `token`, inflected like it. Multi-word synonyms and
/// synonyms without a matching single-word inflection are dropped; the
/// second value counts the inflection failures.
pub fn synonym_candidates(token: &Token, lexicon: &Lexicon, inflector: &Inflector) -> (Vec<String>, usize) {
    let (pairs, dropped) = inflected_synonyms(token, lexicon, inflector);
    (pairs.into_iter().map(|(form, _)| form).collect(), dropped)
}

/// `(inflected form, lemma)` of each usable synonym.
fn inflected_synonyms(token: &Token, lexicon: &Lexicon, inflector: &Inflector) -> (Vec<(String, String)>, usize) {
    let inflection = required_inflection(token);
    let mut out: Vec<(String, String)> = Vec::new();
    let mut dropped = 0;
    for syn in lexicon.synonyms(&lemma_of(token), token.upos) {
        if syn.contains([' ', '_', '-']) {
            continue;
        }
        let Some(form) = inflector.inflect(syn, token.upos, inflection) else {
            dropped += 1;
            continue;
        };
        let form = match_case(&form, &token.form);
        if !form.eq_ignore_ascii_case(&token.form) && out.iter().all(|(f, _)| *f != form) {
            out.push((form, syn.clone()));
        }
    }
    (out, dropped)
}

/// Filters a fill-mask response: drops the original word, punctuation,
/// stop words, non-alphabetic pieces and duplicates, keeping at most `top_k`.
pub fn filter_mlm_candidates(
    response: &MlmResponse,
    original: &str,
    stopwords: &Stopwords,
    top_k: usize,
) -> Vec<String> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    for c in &response.candidates {
        let token = c.token.trim();
        let lower = token.to_lowercase();
        if token.is_empty()
            || !token.chars().all(char::is_alphabetic)
            || lower == original.to_lowercase()
            || stopwords.contains(&lower)
            || !seen.insert(lower)
        {
            continue;
        }
        out.push(token.to_string());
        if out.len() == top_k {
            break;
        }
    }
    out
}

/// Sends `masked_text` to the fill-mask service and filters the answer.
pub fn mlm_candidates(
    masked_text: &str,
    original: &str,
    client: &dyn FillMask,
    mask_token: &str,
    top_k: usize,
    stopwords: &Stopwords,
) -> Result<Vec<String>, MlmError> {
    let request = MlmRequest {
        text: masked_text.to_string(),
        mask_token: mask_token.to_string(),
        top_k,
    };
    let response = client.fill_mask(&request)?;
    response.validate().map_err(MlmError::Protocol)?;
    Ok(filter_mlm_candidates(&response, original, stopwords, top_k))
}

/// Cosine similarity between two words' vectors; 0 when either is missing.
pub fn similarity_score(original: &str, substitute: &str, embeddings: &EmbeddingTable) -> f64 {
    embeddings.cosine(original, substitute).unwrap_or(0.0)
}

/// The sentence of a parent node with slot `slot_index`'s adjunct inserted
/// and its token `mask_index` replaced by the mask token.
pub fn masked_sentence(
    template: &DerivationTemplate,
    parent: &[Vec<String>],
    slot_index: usize,
    mask_index: usize,
    mask_token: &str,
) -> String {
    let mut filled: Vec<Vec<String>> = parent.to_vec();
    let mut forms: Vec<String> = template.slots[slot_index]
        .tokens
        .iter()
        .map(|t| t.form.clone())
        .collect();
    forms[mask_index] = mask_token.to_string();
    filled.push(forms);
    template.render_partial(&filled)
}

/// Predicate deciding whether a candidate variant may be used.
pub type VariantFilter<'a> = dyn Fn(&AdjunctVariant) -> bool + Sync + 'a;

/// Mutation operator configured with a strategy, resources and limits.
/// Without a strategy it only ever yields the original adjunct.
#[derive(Clone, Copy)]
pub struct Mutator<'a> {
    pub strategy: Option<Strategy>,
    pub resources: Option<Resources<'a>>,
    pub limits: MutationLimits,
    pub filter: Option<&'a VariantFilter<'a>>,
}

impl<'a> Mutator<'a> {
    pub fn identity() -> Self {
        Mutator {
            strategy: None,
            resources: None,
            limits: MutationLimits::default(),
            filter: None,
        }
    }

    pub fn new(strategy: Strategy, resources: Resources<'a>, limits: MutationLimits) -> Self {
        Mutator {
            strategy: Some(strategy),
            resources: Some(resources),
            limits,
            filter: None,
        }
    }

    pub fn with_filter(mut self, filter: &'a VariantFilter<'a>) -> Self {
        self.filter = Some(filter);
        self
    }

    /// Whether variants depend on the parent sentence.
    pub fn is_contextual(&self) -> bool {
        self.strategy == Some(Strategy::Mlm)
    }

    /// Variants of slot `slot_index` in the context of a parent whose first
    /// slots are filled with `parent`. The original always comes first.
    pub fn mutate(
        &self,
        template: &DerivationTemplate,
        slot_index: usize,
        parent: &[Vec<String>],
        stats: &mut MutationStats,
    ) -> Vec<AdjunctVariant> {
        let adjunct = &template.slots[slot_index];
        let original = AdjunctVariant::original(adjunct);
        let (Some(strategy), Some(res)) = (self.strategy, self.resources) else {
            return vec![original];
        };
        let mut pool: Vec<AdjunctVariant> = Vec::new();
        for idx in eligible_words(&adjunct.tokens, res.stopwords) {
            let token = &adjunct.tokens[idx];
            let words: Vec<(String, Option<String>)> = match strategy {
                Strategy::Synonym => {
                    let (pairs, dropped) = inflected_synonyms(token, res.lexicon, res.inflector);
                    stats.inflection_drops += dropped;
                    pairs.into_iter().map(|(form, lemma)| (form, Some(lemma))).collect()
                }
                Strategy::Mlm => {
                    let Some(client) = res.fill_mask else {
                        stats.mlm_failures += 1;
                        continue;
                    };
                    let text = masked_sentence(template, parent, slot_index, idx, res.mask_token);
                    stats.mlm_requests += 1;
                    match mlm_candidates(&text, &token.form, client, res.mask_token, self.limits.top_k, res.stopwords) {
                        Ok(words) => words.into_iter().map(|w| (w, None)).collect(),
                        Err(e) => {
                            log::warn!("{}: slot {} word {idx}: {e}", template.source_id, adjunct.slot);
                            stats.mlm_failures += 1;
                            continue;
                        }
                    }
                }
            };
            let provenance = match strategy {
                Strategy::Synonym => Provenance::Synonym,
                Strategy::Mlm => Provenance::Mlm,
            };
            let mut per_word: Vec<AdjunctVariant> = words
                .into_iter()
                .map(|(word, lemma)| {
                    // Inflected forms are often missing from the vectors;
                    // fall back to comparing lemmas.
                    let sim = res
                        .embeddings
                        .cosine(&token.form, &word)
                        .or_else(|| res.embeddings.cosine(&lemma_of(token), lemma.as_deref().unwrap_or(&word)))
                        .unwrap_or(0.0);
                    let mut tokens = original.tokens.clone();
                    tokens[idx] = word.clone();
                    AdjunctVariant {
                        slot: adjunct.slot,
                        tokens,
                        substituted: Some(idx),
                        substitute: Some(word),
                        provenance,
                        // 1.0 is reserved for the original.
                        similarity: sim.min(1.0 - f64::EPSILON),
                    }
                })
                .filter(|v| {
                    let ok = self.filter.is_none_or(|f| f(v));
                    if !ok {
                        stats.suppressed += 1;
                    }
                    ok
                })
                .collect();
            sort_by_similarity(&mut per_word);
            per_word.truncate(self.limits.per_word);
            pool.extend(per_word);
        }
        sort_by_similarity(&mut pool);
        pool.truncate(self.limits.per_adjunct.saturating_sub(1));
        let mut out = Vec::with_capacity(pool.len() + 1);
        out.push(original);
        out.extend(pool);
        out
    }
}

/// Stable sort by descending similarity.
fn sort_by_similarity(variants: &mut [AdjunctVariant]) {
    variants.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
}
