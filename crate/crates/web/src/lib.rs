//! Browser demo over the bundled fixture corpus: disassemble a sentence,
//! grow its derivation tree, and evaluate the sentiment relation on one
//! tree edge. The plain functions return JSON strings and are what the
//! `#[wasm_bindgen]` exports wrap.

use std::sync::OnceLock;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sentasm::harness::{check_sa, Evidence, SaProbs, SaResponse};
use sentasm::ingest::{
    parse_compression_labels, parse_conllu, parse_constituency, parse_embeddings, parse_lexicon, Corpus,
    CorpusBuilder, EmbeddingTable, Lexicon, Sentiment, Stopwords,
};
use sentasm::jsonl::TemplateRecord;
use sentasm::metamorphic::{gen_sa_tests, gen_ssm_tests, SaTest};
use sentasm::morph::Inflector;
use sentasm::mutation::{MutationLimits, Mutator, Provenance, Resources, Strategy};
use sentasm::{build_derivation_tree, disassemble, TreeConfig};

const CONLLU: &str = include_str!("../../core/tests/fixtures/corpus.conllu");
const TREES: &str = include_str!("../../core/tests/fixtures/trees.ptb");
const LABELS: &str = include_str!("../../core/tests/fixtures/labels.jsonl");
const LEXICON: &str = include_str!("../../core/tests/fixtures/lexicon.tsv");
const EMBEDDINGS: &str = include_str!("../../core/tests/fixtures/embeddings.txt");

struct Bundle {
    corpus: Corpus,
    lexicon: Lexicon,
    embeddings: EmbeddingTable,
    stopwords: Stopwords,
    inflector: Inflector,
}

fn bundle() -> &'static Bundle {
    static BUNDLE: OnceLock<Bundle> = OnceLock::new();
    BUNDLE.get_or_init(|| Bundle {
        corpus: CorpusBuilder::default()
            .sentences(parse_conllu(CONLLU).expect("bundled corpus parses"))
            .trees(parse_constituency(TREES).expect("bundled trees parse"))
            .labels(parse_compression_labels(LABELS).expect("bundled labels parse"))
            .build()
            .expect("bundled corpus is consistent"),
        lexicon: parse_lexicon(LEXICON).expect("bundled lexicon parses").0,
        embeddings: parse_embeddings(EMBEDDINGS).expect("bundled embeddings parse"),
        stopwords: Stopwords::english(),
        inflector: Inflector::english(),
    })
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view types serialize")
}

#[derive(Serialize)]
struct SentenceView<'a> {
    id: &'a str,
    text: &'a str,
}

/// `[{id, text}]` for every bundled sentence.
pub fn list_sentences() -> String {
    let views: Vec<SentenceView<'_>> = bundle()
        .corpus
        .iter()
        .map(|s| SentenceView { id: &s.id, text: &s.text })
        .collect();
    json(&views)
}

/// The template record of a bundled sentence.
pub fn template_of(id: &str) -> Result<String, String> {
    let sentence = bundle().corpus.get(id).ok_or_else(|| format!("no sentence `{id}`"))?;
    let template = disassemble(sentence).map_err(|e| e.to_string())?;
    Ok(json(&TemplateRecord::from(&template)))
}

/// The template record of one pasted CoNLL-U sentence. `labels` holds one
/// 0/1 compression label per token, separated by spaces or commas.
pub fn template_of_conllu(conllu: &str, labels: &str) -> Result<String, String> {
    let mut sentences = parse_conllu(conllu).map_err(|e| e.to_string())?;
    if sentences.len() != 1 {
        return Err(format!("expected one sentence, found {}", sentences.len()));
    }
    let mut sentence = sentences.remove(0);
    let labels: Vec<u8> = labels
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|l| !l.is_empty())
        .map(|l| match l {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(format!("label `{other}` is not 0 or 1")),
        })
        .collect::<Result<_, _>>()?;
    if labels.len() != sentence.len() {
        return Err(format!("{} labels for {} tokens", labels.len(), sentence.len()));
    }
    sentence.compression_labels = Some(labels);
    let template = disassemble(&sentence).map_err(|e| e.to_string())?;
    Ok(json(&TemplateRecord::from(&template)))
}

#[derive(Serialize)]
struct NodeView {
    id: String,
    parent: Option<String>,
    text: String,
    score: f64,
    /// Substituted words on the way from the root, if any.
    substitutions: Vec<String>,
}

#[derive(Serialize)]
struct TreeView {
    template: String,
    levels: Vec<Vec<NodeView>>,
    sa_tests: Vec<SaTest>,
    ssm_pairs: Vec<(String, String)>,
}

/// Grows the synonym derivation tree of a bundled sentence with beam width
/// `beam` (0 keeps every node) and lists the SA edges and SSM pairs.
pub fn tree_of(id: &str, beam: usize) -> Result<String, String> {
    let b = bundle();
    let sentence = b.corpus.get(id).ok_or_else(|| format!("no sentence `{id}`"))?;
    let template = disassemble(sentence).map_err(|e| e.to_string())?;
    let resources = Resources {
        lexicon: &b.lexicon,
        embeddings: &b.embeddings,
        stopwords: &b.stopwords,
        inflector: &b.inflector,
        fill_mask: None,
        mask_token: "[MASK]",
    };
    let mutator = Mutator::new(Strategy::Synonym, resources, MutationLimits::default());
    let config = TreeConfig {
        beam: (beam > 0).then_some(beam),
        workers: 1,
    };
    let tree = build_derivation_tree(&template, &mutator, &config);
    let levels = tree
        .levels
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|n| NodeView {
                    id: n.id.clone(),
                    parent: n.parent.clone(),
                    text: n.text.clone(),
                    score: n.score,
                    substitutions: n.variants.iter().filter_map(|v| v.substitute.clone()).collect(),
                })
                .collect()
        })
        .collect();
    let ssm_pairs = gen_ssm_tests(&tree, id, &b.stopwords)
        .into_iter()
        .map(|t| (t.text_a, t.text_b))
        .collect();
    Ok(json(&TreeView {
        template: template.render_template(),
        levels,
        sa_tests: gen_sa_tests(&tree, id).tests,
        ssm_pairs,
    }))
}

fn response(positive: f64) -> Result<SaResponse, String> {
    if !(0.0..=1.0).contains(&positive) {
        return Err(format!("probability {positive} is outside [0, 1]"));
    }
    let label = if positive >= 0.5 { Sentiment::Positive } else { Sentiment::Negative };
    Ok(SaResponse {
        label,
        probs: SaProbs {
            positive,
            negative: 1.0 - positive,
        },
    })
}

#[derive(Serialize)]
struct Direction {
    adjunct_label: Sentiment,
    watched: Sentiment,
    delta: f64,
    violation: bool,
}

/// Evaluates the sentiment relation on one edge from the positive-class
/// probabilities of the adjunct alone, the parent and the child.
pub fn direction(adjunct: f64, parent: f64, child: f64, threshold: f64) -> Result<String, String> {
    let (a, p, c) = (response(adjunct)?, response(parent)?, response(child)?);
    let edge = SaTest {
        id: "demo".into(),
        seed_id: "demo".into(),
        parent_id: "demo:r".into(),
        child_id: "demo:0".into(),
        parent_text: String::new(),
        child_text: String::new(),
        adjunct_text: String::new(),
        slot: 1,
        provenance: Provenance::Original,
    };
    let watched = a.label.opposite();
    let report = check_sa(&edge, &a, &p, &c, threshold);
    let delta = match &report {
        Some(r) => match r.evidence {
            Evidence::Sa { delta, .. } => delta,
            _ => unreachable!("SA checks yield SA evidence"),
        },
        None => c.probs.get(watched) - p.probs.get(watched),
    };
    Ok(json(&Direction {
        adjunct_label: a.label,
        watched,
        delta,
        violation: report.is_some(),
    }))
}

#[wasm_bindgen(js_name = listSentences)]
pub fn list_sentences_js() -> String {
    list_sentences()
}

#[wasm_bindgen(js_name = disassembleSentence)]
pub fn disassemble_sentence_js(id: &str) -> Result<String, JsError> {
    template_of(id).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = disassembleConllu)]
pub fn disassemble_conllu_js(conllu: &str, labels: &str) -> Result<String, JsError> {
    template_of_conllu(conllu, labels).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = deriveTree)]
pub fn derive_tree_js(id: &str, beam: usize) -> Result<String, JsError> {
    tree_of(id, beam).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = checkDirection)]
pub fn check_direction_js(adjunct: f64, parent: f64, child: f64, threshold: f64) -> Result<String, JsError> {
    direction(adjunct, parent, child, threshold).map_err(|e| JsError::new(&e))
}
