//! Test suite generation for reading comprehension (MRC), sentiment
//! analysis (SA) and semantic similarity (SSM) from derivation trees.
//!
//! * MRC: selected paragraph sentences are replaced by their least-varied
//!   complete variants; the gold answer must not change.
//! * SA: each tree edge inserts one adjunct; the probability of the label
//!   opposite to the adjunct's own sentiment must not jump.
//! * SSM: a sentence and any of its tree descendants differ by whole
//!   adjuncts and must not be judged duplicates.

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{build_derivation_tree, DerivationTree, TreeConfig};
use crate::disassembly::{disassemble, DerivationTemplate};
use crate::ingest::{Corpus, MrcSeed, Stopwords};
use crate::mutation::{AdjunctVariant, MutationLimits, Mutator, Provenance, Resources, Strategy};

/// A candidate replacement sentence: (node id, text, score).
type Leaf = (String, String, f64);
use crate::render;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replacement {
    pub sentence_id: String,
    pub node_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrcTest {
    pub id: String,
    pub seed_id: String,
    pub paragraph: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub replaced: Vec<Replacement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaTest {
    pub id: String,
    pub seed_id: String,
    pub parent_id: String,
    pub child_id: String,
    pub parent_text: String,
    pub child_text: String,
    /// The inserted adjunct on its own.
    pub adjunct_text: String,
    pub slot: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmTest {
    pub id: String,
    pub seed_id: String,
    pub node_a: String,
    pub node_b: String,
    /// The ancestor sentence.
    pub text_a: String,
    /// The descendant sentence.
    pub text_b: String,
    pub levels: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SaSuite {
    pub tests: Vec<SaTest>,
    /// Distinct adjunct texts, classified on their own to find each
    /// adjunct's sentiment.
    pub probes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetamorphicError {
    #[error("seed `{seed}` refers to unknown sentence `{sentence}`")]
    UnknownSentence { seed: String, sentence: String },
    #[error("seed `{seed}`: {msg}")]
    InvalidSeed { seed: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrcConfig {
    /// Paragraph sentences replaced per seed.
    pub sentences: usize,
    /// Variants kept per replaced sentence.
    pub leaves: usize,
    pub max_tests: Option<usize>,
    pub tree: TreeConfig,
    pub limits: MutationLimits,
    pub rng_seed: u64,
}

impl Default for MrcConfig {
    fn default() -> Self {
        MrcConfig {
            sentences: 4,
            leaves: 4,
            max_tests: Some(256),
            tree: TreeConfig::default(),
            limits: MutationLimits::default(),
            rng_seed: 0,
        }
    }
}

/// Byte range of each seed token in the seed text.
fn token_ranges(template: &DerivationTemplate) -> Vec<Range<usize>> {
    let pieces: Vec<render::Piece<'_>> = (0..template.tokens.len())
        .map(|p| render::Piece::seed(&template.tokens, p))
        .collect();
    render::render_with_offsets(&template.tokens, &pieces).1
}

/// Byte range of each slot's adjunct (without delimiters) in the seed text.
pub fn adjunct_ranges(template: &DerivationTemplate) -> Vec<Range<usize>> {
    let ranges = token_ranges(template);
    template
        .slots
        .iter()
        .map(|a| ranges[a.start].start..ranges[a.end - 1].end)
        .collect()
}

/// Lowercased content words of a question.
pub fn question_words(question: &str, stopwords: &Stopwords) -> HashSet<String> {
    question
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty() && !stopwords.contains(w))
        .map(str::to_lowercase)
        .collect()
}

/// Whether a variant may be used in an MRC reconstruction: it must not
/// touch the answer span, and neither the replaced word nor its substitute
/// may appear in the question.
fn mrc_variant_allowed(
    template: &DerivationTemplate,
    slot_ranges: &[Range<usize>],
    answer: Option<&Range<usize>>,
    question: &HashSet<String>,
    v: &AdjunctVariant,
) -> bool {
    let idx = v.slot - 1;
    if let Some(a) = answer {
        let r = &slot_ranges[idx];
        if r.start < a.end && a.start < r.end {
            return false;
        }
    }
    let Some(pos) = v.substituted else { return true };
    let tok = &template.slots[idx].tokens[pos];
    let words = [
        tok.form.to_lowercase(),
        tok.lemma.to_lowercase(),
        v.substitute.as_deref().unwrap_or("").to_lowercase(),
    ];
    !words.iter().any(|w| question.contains(w))
}

/// Indices of the paragraph sentences chosen for replacement, ascending.
pub fn select_sentences(count: usize, wanted: usize, rng_seed: u64, stream: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(stream);
    let mut picked = sample(&mut rng, count, wanted.min(count)).into_vec();
    picked.sort_unstable();
    picked
}

/// Builds MRC tests for one seed. `stream` separates the random choices
/// of different seeds under one RNG seed.
pub fn gen_mrc_tests(
    seed: &MrcSeed,
    stream: u64,
    corpus: &Corpus,
    resources: Resources<'_>,
    config: &MrcConfig,
) -> Result<Vec<MrcTest>, MetamorphicError> {
    let para = &seed.paragraph;
    if para.sentence_ids.len() != para.offsets.len() {
        return Err(MetamorphicError::InvalidSeed {
            seed: seed.id.clone(),
            msg: "paragraph offsets do not match its sentences".into(),
        });
    }
    let question = question_words(&seed.question, resources.stopwords);
    let picked = select_sentences(para.sentence_ids.len(), config.sentences, config.rng_seed, stream);

    // Per selected sentence: paragraph index and its candidate leaves.
    let mut choices: Vec<(usize, Vec<Leaf>)> = Vec::new();
    for &k in &picked {
        let sid = &para.sentence_ids[k];
        let sentence = corpus.get(sid).ok_or_else(|| MetamorphicError::UnknownSentence {
            seed: seed.id.clone(),
            sentence: sid.clone(),
        })?;
        let template = match disassemble(sentence) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("{}: sentence {sid} left unchanged: {e}", seed.id);
                continue;
            }
        };
        let slot_ranges = adjunct_ranges(&template);
        let answer = (seed.answer.sentence_id == *sid).then_some(seed.answer.start..seed.answer.end);
        let filter = |v: &AdjunctVariant| {
            mrc_variant_allowed(&template, &slot_ranges, answer.as_ref(), &question, v)
        };
        let mutator = Mutator::new(Strategy::Synonym, resources, config.limits).with_filter(&filter);
        let tree = build_derivation_tree(&template, &mutator, &config.tree);
        let leaves = tree
            .minimal_variation_leaves(config.leaves)
            .into_iter()
            .map(|n| (n.id.clone(), n.text.clone(), n.score))
            .collect();
        choices.push((k, leaves));
    }

    let mut tests = Vec::new();
    if choices.iter().any(|(_, l)| l.is_empty()) {
        return Ok(tests);
    }
    let mut odometer = vec![0usize; choices.len()];
    'product: loop {
        if config.max_tests.is_some_and(|m| tests.len() >= m) {
            break;
        }
        let mut text = String::with_capacity(para.text.len());
        let mut cursor = 0;
        let mut replaced = Vec::with_capacity(choices.len());
        for ((k, leaves), &i) in choices.iter().zip(&odometer) {
            let (start, end) = para.offsets[*k];
            let (node_id, leaf_text, score) = &leaves[i];
            text.push_str(&para.text[cursor..start]);
            text.push_str(leaf_text);
            cursor = end;
            replaced.push(Replacement {
                sentence_id: para.sentence_ids[*k].clone(),
                node_id: node_id.clone(),
                score: *score,
            });
        }
        text.push_str(&para.text[cursor..]);
        if text != para.text {
            tests.push(MrcTest {
                id: format!("{}/{:04}", seed.id, tests.len()),
                seed_id: seed.id.clone(),
                paragraph: text,
                question: seed.question.clone(),
                gold_answers: seed.gold_answers.clone(),
                replaced,
            });
        }
        // Advance, last position fastest.
        for pos in (0..odometer.len()).rev() {
            odometer[pos] += 1;
            if odometer[pos] < choices[pos].1.len() {
                continue 'product;
            }
            odometer[pos] = 0;
        }
        break;
    }
    Ok(tests)
}

/// One test per tree edge plus the distinct inserted adjunct texts.
pub fn gen_sa_tests(tree: &DerivationTree, seed_id: &str) -> SaSuite {
    let mut suite = SaSuite::default();
    let mut probes = BTreeSet::new();
    for node in tree.nodes().filter(|n| n.level > 0) {
        let parent = tree
            .node(node.parent.as_deref().expect("non-root node has a parent"))
            .expect("parent is in the tree");
        let variant = node.variants.last().expect("level > 0 has variants");
        let adjunct_text = tree.template.adjunct_text(variant.slot - 1, &variant.tokens);
        if adjunct_text.trim().is_empty() || node.text == parent.text {
            continue;
        }
        probes.insert(adjunct_text.clone());
        suite.tests.push(SaTest {
            id: format!("{seed_id}/{}", node.id),
            seed_id: seed_id.to_string(),
            parent_id: parent.id.clone(),
            child_id: node.id.clone(),
            parent_text: parent.text.clone(),
            child_text: node.text.clone(),
            adjunct_text,
            slot: variant.slot,
            provenance: variant.provenance,
        });
    }
    suite.probes = probes.into_iter().collect();
    suite
}

/// Ancestor/descendant pairs along every tree path, deduplicated by text.
/// Pairs that differ only by stop words and punctuation are dropped.
pub fn gen_ssm_tests(tree: &DerivationTree, seed_id: &str, stopwords: &Stopwords) -> Vec<SsmTest> {
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    let slots = &tree.template.slots;
    for path in tree.paths() {
        for (i, a) in path.iter().enumerate() {
            for b in &path[i + 1..] {
                if a.text == b.text || !seen.insert((a.text.clone(), b.text.clone())) {
                    continue;
                }
                let content = b.variants[a.level..b.level].iter().any(|v| {
                    let adj = &slots[v.slot - 1];
                    adj.tokens
                        .iter()
                        .zip(&v.tokens)
                        .any(|(t, form)| !t.is_punct() && !stopwords.contains(form))
                });
                if !content {
                    continue;
                }
                out.push(SsmTest {
                    id: format!("{seed_id}/{}~{}", a.id, b.id),
                    seed_id: seed_id.to_string(),
                    node_a: a.id.clone(),
                    node_b: b.id.clone(),
                    text_a: a.text.clone(),
                    text_b: b.text.clone(),
                    levels: (a.level, b.level),
                });
            }
        }
    }
    out
}
