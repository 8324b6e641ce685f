#![allow(dead_code)]

pub mod oracle;
pub mod synth;

use std::path::PathBuf;

use sentasm::ingest::{self, Corpus, EmbeddingTable, Lexicon, Stopwords};
use sentasm::morph::Inflector;
use sentasm::mutation::{MutationLimits, Mutator, Resources, Strategy};

pub fn fixture(name: &str) -> PathBuf {
    // Also included from the cli crate's tests, hence the sibling path.
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn corpus() -> Corpus {
    Corpus::load(
        &fixture("corpus.conllu"),
        Some(&fixture("trees.ptb")),
        Some(&fixture("labels.jsonl")),
    )
    .expect("fixture corpus loads")
}

/// Lexical resources loaded from the fixture directory.
pub struct Lex {
    pub lexicon: Lexicon,
    pub embeddings: EmbeddingTable,
    pub stopwords: Stopwords,
    pub inflector: Inflector,
}

impl Lex {
    pub fn load() -> Lex {
        Lex {
            lexicon: ingest::load_lexicon(&fixture("lexicon.tsv")).unwrap().0,
            embeddings: ingest::load_embeddings(&fixture("embeddings.txt")).unwrap(),
            stopwords: Stopwords::english(),
            inflector: Inflector::english(),
        }
    }

    pub fn resources(&self) -> Resources<'_> {
        Resources {
            lexicon: &self.lexicon,
            embeddings: &self.embeddings,
            stopwords: &self.stopwords,
            inflector: &self.inflector,
            fill_mask: None,
            mask_token: "[MASK]",
        }
    }

    pub fn synonym_mutator(&self) -> Mutator<'_> {
        Mutator::new(Strategy::Synonym, self.resources(), MutationLimits::default())
    }
}
