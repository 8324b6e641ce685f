//! Sentence disassembly: split a seed sentence into a derivation template
//! (the basic sentence structure with numbered slots) and its adjuncts.
//!
//! Adjunct candidates come from two structures. The dependency parse
//! supplies adjectives, adverbs, prepositional phrases and verb phrases; the
//! constituency tree supplies subordinate clauses (`SBAR`). Each candidate is
//! then scored by how many of its tokens a sentence compressor chose to keep
//! (its attention weight) and removed only when at most half of them were
//! kept.

use serde::{Deserialize, Serialize};

use crate::ingest::{ParsedSentence, Token, Upos};
use crate::render::{self, Piece};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdjunctKind {
    Adj,
    Adv,
    Pp,
    Vp,
    Clause,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSource {
    Dependency,
    Constituency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjunctCandidate {
    pub start: usize,
    pub end: usize,
    pub kind: AdjunctKind,
    pub source: CandidateSource,
    /// Number of compression 1-labels inside the span.
    pub attention_weight: usize,
}

impl AdjunctCandidate {
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    fn contains(&self, other: &AdjunctCandidate) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    fn overlaps(&self, other: &AdjunctCandidate) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A removed adjunct and the slot it leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjunct {
    /// 1-based, left to right.
    pub slot: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
    pub kind: AdjunctKind,
    pub attention_weight: usize,
    /// A comma at `start - 1` was removed together with the adjunct.
    pub leading_comma: bool,
    /// A comma at `end` was removed together with the adjunct.
    pub trailing_comma: bool,
    /// Index into the base tokens after which the slot sits; `None` when
    /// the slot is sentence-initial.
    pub anchor: Option<usize>,
}

impl Adjunct {
    /// Seed positions removed with this adjunct, delimiters included.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.tokens.len() + 2);
        if self.leading_comma {
            out.push(self.start - 1);
        }
        out.extend(self.start..self.end);
        if self.trailing_comma {
            out.push(self.end);
        }
        out
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }
}

/// Why a sentence yields a template without slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degenerate {
    /// The root is a verb without a subject (imperatives).
    NoSubject,
    /// Removing the adjuncts would delete the root or leave no words.
    EmptyBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Owner {
    Base,
    Adjunct { slot: usize, offset: usize },
    Delimiter { slot: usize },
}

/// The basic sentence structure plus ordered insertion slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationTemplate {
    pub source_id: String,
    pub seed_text: String,
    /// All seed tokens; the base is the subset listed in `base`.
    pub tokens: Vec<Token>,
    pub base: Vec<usize>,
    pub slots: Vec<Adjunct>,
    pub candidates: Vec<AdjunctCandidate>,
    pub degenerate: Option<Degenerate>,
    owners: Vec<Owner>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DisassemblyError {
    #[error("sentence `{0}` has no compression labels")]
    MissingLabels(String),
    #[error("sentence `{0}` has no tokens")]
    Empty(String),
}

impl DerivationTemplate {
    fn new(
        sentence: &ParsedSentence,
        mut slots: Vec<Adjunct>,
        candidates: Vec<AdjunctCandidate>,
        degenerate: Option<Degenerate>,
    ) -> Self {
        let mut owners = vec![Owner::Base; sentence.len()];
        for (i, adj) in slots.iter().enumerate() {
            for (offset, pos) in (adj.start..adj.end).enumerate() {
                owners[pos] = Owner::Adjunct { slot: i, offset };
            }
            if adj.leading_comma {
                owners[adj.start - 1] = Owner::Delimiter { slot: i };
            }
            if adj.trailing_comma {
                owners[adj.end] = Owner::Delimiter { slot: i };
            }
        }
        let base: Vec<usize> = (0..sentence.len())
            .filter(|&p| owners[p] == Owner::Base)
            .collect();
        for adj in &mut slots {
            adj.anchor = base.iter().rposition(|&p| p < adj.start);
        }
        DerivationTemplate {
            source_id: sentence.id.clone(),
            seed_text: sentence.text.clone(),
            tokens: sentence.tokens.clone(),
            base,
            slots,
            candidates,
            degenerate,
            owners,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn base_tokens(&self) -> impl Iterator<Item = &Token> {
        self.base.iter().map(|&p| &self.tokens[p])
    }

    /// Pieces of the sentence with the first `filled.len()` slots filled,
    /// where `filled[j]` holds the forms for slot `j + 1`'s adjunct tokens.
    pub fn pieces<'a, S: AsRef<str>>(&'a self, filled: &'a [Vec<S>]) -> Vec<Piece<'a>> {
        let mut out = Vec::with_capacity(self.tokens.len());
        for (pos, owner) in self.owners.iter().enumerate() {
            match *owner {
                Owner::Base => out.push(Piece::seed(&self.tokens, pos)),
                Owner::Delimiter { slot } if slot < filled.len() => {
                    out.push(Piece::seed(&self.tokens, pos))
                }
                Owner::Adjunct { slot, offset } if slot < filled.len() => out.push(Piece::Token {
                    pos,
                    form: filled[slot][offset].as_ref(),
                }),
                _ => {}
            }
        }
        out
    }

    /// Seed positions present once the first `level` slots are filled.
    pub fn positions(&self, level: usize) -> Vec<usize> {
        self.owners
            .iter()
            .enumerate()
            .filter(|(_, o)| match o {
                Owner::Base => true,
                Owner::Adjunct { slot, .. } | Owner::Delimiter { slot } => *slot < level,
            })
            .map(|(p, _)| p)
            .collect()
    }

    pub fn render_partial<S: AsRef<str>>(&self, filled: &[Vec<S>]) -> String {
        render::render(&self.tokens, &self.pieces(filled))
    }

    /// The basic sentence structure s0 as text.
    pub fn render_base(&self) -> String {
        self.render_partial::<&str>(&[])
    }

    /// The seed reassembled from its original adjuncts.
    pub fn render_all_originals(&self) -> String {
        let filled: Vec<Vec<&str>> = self.slots.iter().map(Adjunct::forms).collect();
        self.render_partial(&filled)
    }

    /// The template with numbered slot markers, e.g. `[1], Downtown ... fire [2].`
    pub fn render_template(&self) -> String {
        let mut pieces = Vec::new();
        for (pos, owner) in self.owners.iter().enumerate() {
            match *owner {
                Owner::Base | Owner::Delimiter { .. } => pieces.push(Piece::seed(&self.tokens, pos)),
                Owner::Adjunct { slot, offset: 0 } => pieces.push(Piece::Marker(slot + 1)),
                Owner::Adjunct { .. } => {}
            }
        }
        render::render(&self.tokens, &pieces)
    }

    /// An adjunct's text with the given forms, without delimiters or case changes.
    pub fn adjunct_text<S: AsRef<str>>(&self, slot_index: usize, forms: &[S]) -> String {
        let adj = &self.slots[slot_index];
        let positions: Vec<usize> = (adj.start..adj.end).collect();
        let forms: Vec<&str> = forms.iter().map(AsRef::as_ref).collect();
        render::render_plain(&self.tokens, &positions, &forms)
    }
}

const NEGATORS: &[&str] = &["not", "n't", "never", "no"];

fn dependency_kind(sentence: &ParsedSentence, tok: &Token) -> Option<AdjunctKind> {
    let has_child = |rel: &str, upos: Option<Upos>| {
        sentence
            .children(tok.index)
            .any(|c| c.base_deprel() == rel && upos.is_none_or(|u| c.upos == u))
    };
    match tok.base_deprel() {
        "amod" => Some(AdjunctKind::Adj),
        "advmod" if !NEGATORS.contains(&tok.form.to_lowercase().as_str()) => Some(AdjunctKind::Adv),
        "obl" | "nmod"
            if !matches!(tok.deprel_subtype(), Some("agent" | "poss"))
                && has_child("case", Some(Upos::ADP)) =>
        {
            Some(AdjunctKind::Pp)
        }
        "acl" | "xcomp" => Some(AdjunctKind::Vp),
        // Non-finite adverbial clauses ("Stated another way", "to work and study").
        "advcl"
            if tok.upos == Upos::VERB
                && !has_child("nsubj", None)
                && !has_child("mark", Some(Upos::SCONJ))
                && matches!(tok.feat("VerbForm"), Some("Part" | "Ger" | "Inf")) =>
        {
            Some(AdjunctKind::Vp)
        }
        _ => None,
    }
}

fn contiguous(indices: &[usize]) -> Option<(usize, usize)> {
    let (first, last) = (*indices.first()?, *indices.last()?);
    (last - first + 1 == indices.len()).then_some((first, last + 1))
}

/// Indices that no adjunct may contain: the root and its subject, object
/// and copula dependents.
fn protected(sentence: &ParsedSentence) -> Vec<usize> {
    let Some(root) = sentence.root() else {
        return Vec::new();
    };
    let mut out = vec![root];
    out.extend(
        sentence
            .children(root)
            .filter(|c| matches!(c.base_deprel(), "nsubj" | "obj" | "cop"))
            .map(|c| c.index),
    );
    out
}

/// Extends a span over an adjacent determiner of a word inside it; rejects
/// the span when such a determiner would be left stranded elsewhere.
fn guard_determiners(sentence: &ParsedSentence, start: usize, end: usize) -> Option<(usize, usize)> {
    let mut start = start;
    for det in sentence.tokens.iter().filter(|t| t.upos == Upos::DET) {
        let Some(head) = det.head else { continue };
        let outside = det.index < start || det.index >= end;
        if outside && (start..end).contains(&head) {
            if det.index + 1 == start {
                start = det.index;
            } else {
                return None;
            }
        }
    }
    Some((start, end))
}

/// Attention weight of a span: the count of 1-labels inside it.
pub fn attention_weight(start: usize, end: usize, labels: &[u8]) -> usize {
    labels[start..end].iter().map(|&l| usize::from(l)).sum()
}

/// Adjunct candidates of a sentence, overlap-free (outermost spans win).
/// Attention weights are filled in when the sentence has labels.
pub fn candidate_spans(sentence: &ParsedSentence) -> Vec<AdjunctCandidate> {
    let mut raw: Vec<AdjunctCandidate> = Vec::new();
    for tok in &sentence.tokens {
        let Some(kind) = dependency_kind(sentence, tok) else { continue };
        if let Some((start, end)) = contiguous(&sentence.subtree(tok.index)) {
            raw.push(AdjunctCandidate {
                start,
                end,
                kind,
                source: CandidateSource::Dependency,
                attention_weight: 0,
            });
        }
    }
    if let Some(tree) = &sentence.tree {
        collect_sbar(tree, &mut raw);
    }

    let protected = protected(sentence);
    let mut guarded: Vec<AdjunctCandidate> = raw
        .into_iter()
        .filter_map(|mut c| {
            let (start, end) = guard_determiners(sentence, c.start, c.end)?;
            c.start = start;
            c.end = end;
            let only_punct = sentence.tokens[start..end].iter().all(Token::is_punct);
            let touches_core = protected.iter().any(|&p| (start..end).contains(&p));
            (!only_punct && !touches_core).then_some(c)
        })
        .collect();

    // Clauses first for identical spans, then widest first.
    guarded.sort_by_key(|c| {
        (
            std::cmp::Reverse(c.width()),
            c.start,
            c.source != CandidateSource::Constituency,
        )
    });
    let mut kept: Vec<AdjunctCandidate> = Vec::new();
    for c in guarded {
        if kept.iter().all(|k| !k.overlaps(&c)) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.start);
    if let Some(labels) = &sentence.compression_labels {
        for c in &mut kept {
            c.attention_weight = attention_weight(c.start, c.end, labels);
        }
    }
    kept
}

fn collect_sbar(node: &crate::ingest::ConstituencyNode, out: &mut Vec<AdjunctCandidate>) {
    let label = node.label.split(['-', '=']).next().unwrap_or("");
    if label == "SBAR" && !node.is_leaf() {
        out.push(AdjunctCandidate {
            start: node.start,
            end: node.end,
            kind: AdjunctKind::Clause,
            source: CandidateSource::Constituency,
            attention_weight: 0,
        });
        return;
    }
    for child in &node.children {
        collect_sbar(child, out);
    }
}

/// Splits candidates into (adjuncts, retained). A candidate is retained when
/// its attention weight is strictly greater than half its width. Candidates
/// nested inside a removed adjunct are discarded.
pub fn classify_candidates(
    candidates: &[AdjunctCandidate],
    labels: &[u8],
) -> (Vec<AdjunctCandidate>, Vec<AdjunctCandidate>) {
    let mut order: Vec<AdjunctCandidate> = candidates
        .iter()
        .cloned()
        .map(|mut c| {
            c.attention_weight = attention_weight(c.start, c.end, labels);
            c
        })
        .collect();
    order.sort_by_key(|c| (std::cmp::Reverse(c.width()), c.start));
    let (mut adjuncts, mut retained): (Vec<AdjunctCandidate>, Vec<AdjunctCandidate>) =
        (Vec::new(), Vec::new());
    for c in order {
        if adjuncts.iter().any(|a| a.contains(&c)) {
            continue;
        }
        if 2 * c.attention_weight > c.width() {
            retained.push(c);
        } else {
            adjuncts.push(c);
        }
    }
    adjuncts.sort_by_key(|c| c.start);
    retained.sort_by_key(|c| c.start);
    (adjuncts, retained)
}

fn is_comma(tok: Option<&Token>) -> bool {
    tok.is_some_and(|t| t.is_punct() && t.form == ",")
}

/// Verbal roots need a subject; verbless fragments ("A tv movie.") are
/// kept as they are.
fn has_subject(sentence: &ParsedSentence) -> bool {
    sentence.root().is_some_and(|root| {
        !matches!(sentence.tokens[root].upos, Upos::VERB | Upos::AUX)
            || sentence
                .children(root)
                .any(|c| matches!(c.base_deprel(), "nsubj" | "csubj" | "expl"))
    })
}

/// Disassembles a sentence into its derivation template.
pub fn disassemble(sentence: &ParsedSentence) -> Result<DerivationTemplate, DisassemblyError> {
    if sentence.is_empty() {
        return Err(DisassemblyError::Empty(sentence.id.clone()));
    }
    let labels = sentence
        .compression_labels
        .as_deref()
        .ok_or_else(|| DisassemblyError::MissingLabels(sentence.id.clone()))?;
    let candidates = candidate_spans(sentence);
    if !has_subject(sentence) {
        return Ok(DerivationTemplate::new(
            sentence,
            Vec::new(),
            candidates,
            Some(Degenerate::NoSubject),
        ));
    }
    let (removed, _) = classify_candidates(&candidates, labels);

    let tokens = &sentence.tokens;
    let mut claimed = vec![false; tokens.len()];
    let mut slots = Vec::with_capacity(removed.len());
    for c in &removed {
        claimed[c.start..c.end].iter_mut().for_each(|x| *x = true);
    }
    for (i, c) in removed.iter().enumerate() {
        let leading = c.start > 0 && is_comma(tokens.get(c.start - 1)) && !claimed[c.start - 1];
        if leading {
            claimed[c.start - 1] = true;
        }
        // A comma between two removed adjuncts goes with the later one.
        let next_starts_after_comma = removed.get(i + 1).is_some_and(|n| n.start == c.end + 1);
        let trailing = is_comma(tokens.get(c.end)) && !claimed[c.end] && !next_starts_after_comma;
        if trailing {
            claimed[c.end] = true;
        }
        slots.push(Adjunct {
            slot: i + 1,
            start: c.start,
            end: c.end,
            tokens: tokens[c.start..c.end].to_vec(),
            kind: c.kind,
            attention_weight: c.attention_weight,
            leading_comma: leading,
            trailing_comma: trailing,
            anchor: None,
        });
    }

    let root = sentence.root();
    let base_has_words = (0..tokens.len()).any(|p| !claimed[p] && !tokens[p].is_punct());
    if !base_has_words || root.is_some_and(|r| claimed[r]) {
        return Ok(DerivationTemplate::new(
            sentence,
            Vec::new(),
            candidates,
            Some(Degenerate::EmptyBase),
        ));
    }
    Ok(DerivationTemplate::new(sentence, slots, candidates, None))
}
