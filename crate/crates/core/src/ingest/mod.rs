//! Loading of parse artifacts, seed datasets and lexical resources.
//!
//! Every artifact joins on the sentence id taken from the CoNLL-U
//! `# sent_id =` comment. A [`CorpusBuilder`] accepts the dependency parses,
//! constituency trees and compression labels in any order and validates the
//! joins once everything is present.

mod conllu;
mod lexical;
mod ptb;
mod seeds;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use conllu::{parse_conllu, write_conllu};
pub use lexical::{
    parse_embeddings, parse_lexicon, parse_stopwords, EmbeddingTable, Lexicon, LexiconReport,
    Stopwords,
};
pub use ptb::{parse_constituency, parse_ptb_tree};
pub use seeds::{
    parse_mrc_seeds, parse_sa_seeds, parse_ssm_seeds, validate_seeds, AnswerLocation, MrcSeed,
    Paragraph, SaSeed, Sentiment, SsmSeed,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: dangling head {head} in a sentence of {len} tokens")]
    DanglingHead { line: usize, head: usize, len: usize },
    #[error("line {line}: duplicate sent_id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("unknown sentence id `{0}`")]
    UnknownId(String),
    #[error("sentence `{id}`: {what} covers {got} tokens but the sentence has {expected}")]
    LengthMismatch {
        id: String,
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("seed `{id}`: {msg}")]
    Seed { id: String, msg: String },
    #[error("inconsistent embedding dimension on line {line}: expected {expected}, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
}

impl IngestError {
    pub(crate) fn malformed(line: usize, msg: impl Into<String>) -> Self {
        IngestError::Malformed {
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Universal POS tags (UD v2).
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Upos {
    ADJ,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
}

impl Upos {
    pub fn as_str(self) -> &'static str {
        use Upos::*;
        match self {
            ADJ => "ADJ",
            ADP => "ADP",
            ADV => "ADV",
            AUX => "AUX",
            CCONJ => "CCONJ",
            DET => "DET",
            INTJ => "INTJ",
            NOUN => "NOUN",
            NUM => "NUM",
            PART => "PART",
            PRON => "PRON",
            PROPN => "PROPN",
            PUNCT => "PUNCT",
            SCONJ => "SCONJ",
            SYM => "SYM",
            VERB => "VERB",
            X => "X",
        }
    }

    /// Content classes whose words may be substituted by the mutation operator.
    pub fn is_open_class(self) -> bool {
        matches!(self, Upos::NOUN | Upos::VERB | Upos::ADJ | Upos::ADV)
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown UPOS tag `{0}`")]
pub struct ParseUposError(pub String);

impl FromStr for Upos {
    type Err = ParseUposError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use Upos::*;
        Ok(match s {
            "ADJ" => ADJ,
            "ADP" => ADP,
            "ADV" => ADV,
            "AUX" => AUX,
            "CCONJ" => CCONJ,
            "DET" => DET,
            "INTJ" => INTJ,
            "NOUN" => NOUN,
            "NUM" => NUM,
            "PART" => PART,
            "PRON" => PRON,
            "PROPN" => PROPN,
            "PUNCT" => PUNCT,
            "SCONJ" => SCONJ,
            "SYM" => SYM,
            "VERB" => VERB,
            "X" => X,
            other => return Err(ParseUposError(other.to_string())),
        })
    }
}

/// One token of a dependency-parsed sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 0-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    pub xpos: Option<String>,
    pub feats: BTreeMap<String, String>,
    /// Parent token index, `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl Token {
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.feats.get(key).map(String::as_str)
    }

    /// Dependency relation without its subtype (`nsubj:pass` -> `nsubj`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or(&self.deprel)
    }

    pub fn deprel_subtype(&self) -> Option<&str> {
        self.deprel.split_once(':').map(|(_, sub)| sub)
    }

    /// Whether the token is followed by whitespace in the original text.
    pub fn space_after(&self) -> bool {
        match &self.misc {
            Some(misc) => !misc.split('|').any(|m| m == "SpaceAfter=No"),
            None => true,
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == Upos::PUNCT
    }
}

/// A node of a PTB-style constituency tree. Leaves are pre-terminals that
/// carry the word and span exactly one token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituencyNode {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub word: Option<String>,
    pub children: Vec<ConstituencyNode>,
}

impl ConstituencyNode {
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    pub fn is_leaf(&self) -> bool {
        self.word.is_some()
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a ConstituencyNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |node| {
            if node.is_leaf() {
                n += 1
            }
        });
        n
    }
}

/// A sentence with its dependency parse and, once attached, its
/// constituency tree and compression labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub tree: Option<ConstituencyNode>,
    pub compression_labels: Option<Vec<u8>>,
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head.is_none())
    }

    pub fn children(&self, head: usize) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.head == Some(head))
    }

    /// Token indices of the subtree rooted at `head`, sorted.
    pub fn subtree(&self, head: usize) -> Vec<usize> {
        let mut out = vec![head];
        let mut i = 0;
        while i < out.len() {
            let h = out[i];
            out.extend(self.tokens.iter().filter(|t| t.head == Some(h)).map(|t| t.index));
            i += 1;
        }
        out.sort_unstable();
        out
    }

    /// Reconstructs the surface text from forms and `SpaceAfter=No` marks.
    pub fn surface(&self) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            out.push_str(&tok.form);
            if i + 1 < self.tokens.len() && tok.space_after() {
                out.push(' ');
            }
        }
        out
    }
}

/// The three test generation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mrc,
    Sa,
    Ssm,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Mrc => "mrc",
            Task::Sa => "sa",
            Task::Ssm => "ssm",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mrc" => Ok(Task::Mrc),
            "sa" => Ok(Task::Sa),
            "ssm" => Ok(Task::Ssm),
            other => Err(format!("unknown task `{other}` (expected mrc, sa or ssm)")),
        }
    }
}

/// A seed test of one of the three tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum SeedTest {
    Mrc(MrcSeed),
    Sa(SaSeed),
    Ssm(SsmSeed),
}

impl SeedTest {
    pub fn task(&self) -> Task {
        match self {
            SeedTest::Mrc(_) => Task::Mrc,
            SeedTest::Sa(_) => Task::Sa,
            SeedTest::Ssm(_) => Task::Ssm,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            SeedTest::Mrc(s) => &s.id,
            SeedTest::Sa(s) => &s.id,
            SeedTest::Ssm(s) => &s.id,
        }
    }

    /// Sentence ids the seed refers to.
    pub fn sentence_ids(&self) -> Vec<&str> {
        match self {
            SeedTest::Mrc(s) => s.paragraph.sentence_ids.iter().map(String::as_str).collect(),
            SeedTest::Sa(s) => vec![s.sentence_id.as_str()],
            SeedTest::Ssm(s) => vec![s.sentence_a.as_str(), s.sentence_b.as_str()],
        }
    }
}

/// An immutable, validated collection of parsed sentences keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    sentences: IndexMap<String, ParsedSentence>,
}

impl Corpus {
    pub fn get(&self, id: &str) -> Option<&ParsedSentence> {
        self.sentences.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParsedSentence> {
        self.sentences.values()
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Loads and joins the three parse artifacts from disk.
    pub fn load(
        conllu: &Path,
        trees: Option<&Path>,
        labels: Option<&Path>,
    ) -> Result<Corpus, IngestError> {
        let mut builder = CorpusBuilder::default().sentences(parse_conllu(&read_file(conllu)?)?);
        if let Some(path) = trees {
            builder = builder.trees(parse_constituency(&read_file(path)?)?);
        }
        if let Some(path) = labels {
            builder = builder.labels(parse_compression_labels(&read_file(path)?)?);
        }
        builder.build()
    }
}

impl FromIterator<ParsedSentence> for Corpus {
    fn from_iter<I: IntoIterator<Item = ParsedSentence>>(iter: I) -> Self {
        Corpus {
            sentences: iter.into_iter().map(|s| (s.id.clone(), s)).collect(),
        }
    }
}

/// Joins sentences, trees and labels regardless of the order they arrive in.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    sentences: Vec<ParsedSentence>,
    trees: IndexMap<String, ConstituencyNode>,
    labels: IndexMap<String, Vec<u8>>,
}

impl CorpusBuilder {
    pub fn sentences(mut self, sentences: Vec<ParsedSentence>) -> Self {
        self.sentences.extend(sentences);
        self
    }

    pub fn trees(mut self, trees: IndexMap<String, ConstituencyNode>) -> Self {
        self.trees.extend(trees);
        self
    }

    pub fn labels(mut self, labels: IndexMap<String, Vec<u8>>) -> Self {
        self.labels.extend(labels);
        self
    }

    pub fn build(self) -> Result<Corpus, IngestError> {
        let mut sentences: IndexMap<String, ParsedSentence> = IndexMap::new();
        for s in self.sentences {
            if sentences.contains_key(&s.id) {
                return Err(IngestError::DuplicateId { line: 0, id: s.id });
            }
            sentences.insert(s.id.clone(), s);
        }
        for (id, tree) in self.trees {
            let sentence = sentences
                .get_mut(&id)
                .ok_or_else(|| IngestError::UnknownId(id.clone()))?;
            let leaves = tree.leaf_count();
            if leaves != sentence.len() || tree.start != 0 || tree.end != sentence.len() {
                return Err(IngestError::LengthMismatch {
                    id,
                    what: "constituency tree",
                    got: leaves,
                    expected: sentence.len(),
                });
            }
            sentence.tree = Some(tree);
        }
        for (id, labels) in self.labels {
            let sentence = sentences
                .get_mut(&id)
                .ok_or_else(|| IngestError::UnknownId(id.clone()))?;
            if labels.len() != sentence.len() {
                return Err(IngestError::LengthMismatch {
                    id,
                    what: "compression labels",
                    got: labels.len(),
                    expected: sentence.len(),
                });
            }
            sentence.compression_labels = Some(labels);
        }
        Ok(Corpus { sentences })
    }
}

#[derive(Deserialize)]
struct LabelRecord {
    id: String,
    labels: Vec<i64>,
}

/// Parses JSON-lines compression labels: `{"id": str, "labels": [0|1, ...]}`.
pub fn parse_compression_labels(text: &str) -> Result<IndexMap<String, Vec<u8>>, IngestError> {
    let mut out = IndexMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabelRecord = serde_json::from_str(line)
            .map_err(|e| IngestError::malformed(line_no, format!("invalid label record: {e}")))?;
        let labels = record
            .labels
            .iter()
            .map(|&v| match v {
                0 => Ok(0u8),
                1 => Ok(1u8),
                other => Err(IngestError::malformed(
                    line_no,
                    format!("non-binary compression label {other}"),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if out.insert(record.id.clone(), labels).is_some() {
            return Err(IngestError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
    }
    Ok(out)
}

pub fn load_conllu(path: &Path) -> Result<Vec<ParsedSentence>, IngestError> {
    parse_conllu(&read_file(path)?)
}

pub fn load_constituency(path: &Path) -> Result<IndexMap<String, ConstituencyNode>, IngestError> {
    parse_constituency(&read_file(path)?)
}

pub fn load_compression_labels(path: &Path) -> Result<IndexMap<String, Vec<u8>>, IngestError> {
    parse_compression_labels(&read_file(path)?)
}

pub fn load_lexicon(path: &Path) -> Result<(Lexicon, LexiconReport), IngestError> {
    parse_lexicon(&read_file(path)?)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, IngestError> {
    parse_embeddings(&read_file(path)?)
}

pub fn load_stopwords(path: &Path) -> Result<Stopwords, IngestError> {
    Ok(parse_stopwords(&read_file(path)?))
}

/// Loads a seed dataset for `task`. MRC paragraphs are resolved against the
/// corpus while loading; SA and SSM ids are checked by [`validate_seeds`].
pub fn load_seed_dataset(
    task: Task,
    path: &Path,
    corpus: &Corpus,
) -> Result<Vec<SeedTest>, IngestError> {
    let text = read_file(path)?;
    let seeds: Vec<SeedTest> = match task {
        Task::Mrc => parse_mrc_seeds(&text, corpus)?
            .0
            .into_iter()
            .map(SeedTest::Mrc)
            .collect(),
        Task::Sa => parse_sa_seeds(&text)?.into_iter().map(SeedTest::Sa).collect(),
        Task::Ssm => parse_ssm_seeds(&text)?.into_iter().map(SeedTest::Ssm).collect(),
    };
    validate_seeds(&seeds, corpus)?;
    Ok(seeds)
}
