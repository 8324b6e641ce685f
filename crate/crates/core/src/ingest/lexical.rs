use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{IngestError, Upos};

/// Synonym lists keyed by lowercased `(lemma, upos)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: HashMap<(String, Upos), Vec<String>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexiconReport {
    pub entries: usize,
    /// Rows skipped because no synonym survived cleaning.
    pub skipped_empty: usize,
}

impl Lexicon {
    pub fn synonyms(&self, lemma: &str, upos: Upos) -> &[String] {
        self.entries
            .get(&(lemma.to_lowercase(), upos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn insert(&mut self, lemma: &str, upos: Upos, synonyms: &[&str]) {
        let lemma = lemma.to_lowercase();
        let list = self.entries.entry((lemma.clone(), upos)).or_default();
        for s in synonyms {
            let s = s.trim().to_lowercase();
            if !s.is_empty() && s != lemma && !list.contains(&s) {
                list.push(s);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses `lemma<TAB>upos<TAB>syn1,syn2,...`. Self-synonyms are dropped and
/// rows left without synonyms are skipped and counted.
pub fn parse_lexicon(text: &str) -> Result<(Lexicon, LexiconReport), IngestError> {
    let mut lexicon = Lexicon::default();
    let mut report = LexiconReport::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(IngestError::malformed(
                line_no,
                format!("expected `lemma<TAB>upos<TAB>synonyms`, found {} columns", cols.len()),
            ));
        }
        let upos: Upos = cols[1]
            .trim()
            .parse()
            .map_err(|e| IngestError::malformed(line_no, format!("{e}")))?;
        let lemma = cols[0].trim().to_lowercase();
        let synonyms: Vec<&str> = cols
            .get(2)
            .map(|c| {
                c.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case(&lemma))
                    .collect()
            })
            .unwrap_or_default();
        if synonyms.is_empty() {
            report.skipped_empty += 1;
            continue;
        }
        lexicon.insert(&lemma, upos, &synonyms);
    }
    report.entries = lexicon.len();
    if report.skipped_empty > 0 {
        log::warn!("lexicon: skipped {} rows without synonyms", report.skipped_empty);
    }
    Ok((lexicon, report))
}

/// Dense word vectors of a fixed dimension, keyed by lowercased word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    /// Inserts a vector; panics if its dimension differs from the table's.
    pub fn insert(&mut self, word: &str, vector: Vec<f32>) {
        assert_eq!(vector.len(), self.dim, "embedding dimension mismatch");
        self.vectors.insert(word.to_lowercase(), vector);
    }

    /// Cosine similarity; `None` when either word is missing or a vector is zero.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (va, vb) = (self.get(a)?, self.get(b)?);
        let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
        for (&x, &y) in va.iter().zip(vb) {
            let (x, y) = (f64::from(x), f64::from(y));
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        if na == 0.0 || nb == 0.0 {
            return None;
        }
        Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Parses whitespace-separated `word v1 ... vd` rows. A leading
/// `count dim` header line (word2vec text format) is accepted.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable, IngestError> {
    let mut table: Option<EmbeddingTable> = None;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if table.is_none()
            && fields.len() == 2
            && fields.iter().all(|f| f.parse::<usize>().is_ok())
        {
            continue;
        }
        let (word, values) = fields.split_first().unwrap();
        let vector = values
            .iter()
            .map(|v| {
                v.parse::<f32>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| IngestError::malformed(line_no, format!("bad vector value `{v}`")))
            })
            .collect::<Result<Vec<f32>, _>>()?;
        if vector.is_empty() {
            return Err(IngestError::malformed(line_no, "word without a vector"));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dim {
            return Err(IngestError::Dimension {
                line: line_no,
                expected: table.dim,
                found: vector.len(),
            });
        }
        table.vectors.insert(word.to_lowercase(), vector);
    }
    Ok(table.unwrap_or_default())
}

/// Lowercased stop-word set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> Self {
        parse_stopwords(ENGLISH_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.as_ref().trim().to_lowercase()).collect())
    }
}

pub fn parse_stopwords(text: &str) -> Stopwords {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}
