use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, IngestError, SeedTest};

/// A paragraph as an ordered list of corpus sentences plus its raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub sentence_ids: Vec<String>,
    pub text: String,
    /// Byte range of each sentence inside `text`.
    pub offsets: Vec<(usize, usize)>,
}

/// Where the gold answer sits: a byte range inside one paragraph sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerLocation {
    pub sentence_id: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrcSeed {
    pub id: String,
    pub paragraph: Paragraph,
    pub question: String,
    pub gold_answers: Vec<String>,
    pub answer: AnswerLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn opposite(self) -> Sentiment {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }

    pub fn parse(token: &str) -> Option<Sentiment> {
        match token.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "1" => Some(Sentiment::Positive),
            "negative" | "neg" | "0" => Some(Sentiment::Negative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaSeed {
    pub id: String,
    pub sentence_id: String,
    pub label: Option<Sentiment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsmSeed {
    pub id: String,
    pub sentence_a: String,
    pub sentence_b: String,
    pub duplicate: Option<bool>,
}

#[derive(Deserialize)]
struct SquadFile {
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    #[serde(default)]
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    sentence_ids: Vec<String>,
    qas: Vec<SquadQa>,
}

#[derive(Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
    #[serde(default)]
    is_impossible: bool,
}

#[derive(Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: Option<usize>,
}

/// Parses SQuAD-style JSON. Each paragraph carries an extra `sentence_ids`
/// array naming its corpus sentences in order. Unanswerable questions are
/// skipped; the count of skipped questions is returned alongside.
pub fn parse_mrc_seeds(text: &str, corpus: &Corpus) -> Result<(Vec<MrcSeed>, usize), IngestError> {
    let file: SquadFile = serde_json::from_str(text).map_err(|e| IngestError::Malformed {
        line: e.line(),
        msg: format!("invalid SQuAD JSON: {e}"),
    })?;
    let mut seeds = Vec::new();
    let mut skipped = 0;
    for para in file.data.iter().flat_map(|a| &a.paragraphs) {
        let first_qa = para.qas.first().map_or("<no questions>", |q| q.id.as_str());
        let paragraph = locate_sentences(para, corpus).map_err(|msg| IngestError::Seed {
            id: first_qa.to_string(),
            msg,
        })?;
        for qa in &para.qas {
            if qa.is_impossible || qa.answers.is_empty() {
                skipped += 1;
                continue;
            }
            let answer = locate_answer(&paragraph, &qa.answers[0]).map_err(|msg| IngestError::Seed {
                id: qa.id.clone(),
                msg,
            })?;
            let mut golds: Vec<String> = Vec::new();
            for a in &qa.answers {
                if !golds.contains(&a.text) {
                    golds.push(a.text.clone());
                }
            }
            seeds.push(MrcSeed {
                id: qa.id.clone(),
                paragraph: paragraph.clone(),
                question: qa.question.clone(),
                gold_answers: golds,
                answer,
            });
        }
    }
    if skipped > 0 {
        log::warn!("mrc seeds: skipped {skipped} unanswerable questions");
    }
    Ok((seeds, skipped))
}

fn locate_sentences(para: &SquadParagraph, corpus: &Corpus) -> Result<Paragraph, String> {
    let mut offsets = Vec::with_capacity(para.sentence_ids.len());
    let mut cursor = 0;
    for id in &para.sentence_ids {
        let sentence = corpus
            .get(id)
            .ok_or_else(|| format!("paragraph sentence `{id}` is not in the corpus"))?;
        let found = para.context[cursor..]
            .find(&sentence.text)
            .ok_or_else(|| format!("sentence `{id}` does not occur in the paragraph context"))?;
        let start = cursor + found;
        let end = start + sentence.text.len();
        offsets.push((start, end));
        cursor = end;
    }
    Ok(Paragraph {
        sentence_ids: para.sentence_ids.clone(),
        text: para.context.clone(),
        offsets,
    })
}

fn locate_answer(paragraph: &Paragraph, answer: &SquadAnswer) -> Result<AnswerLocation, String> {
    let context = &paragraph.text;
    if answer.text.is_empty() {
        return Err("empty answer text".into());
    }
    // answer_start counts characters, not bytes.
    let hinted = answer.answer_start.and_then(|chars| {
        let byte = context.char_indices().nth(chars).map(|(b, _)| b)?;
        context[byte..].starts_with(&answer.text).then_some(byte)
    });
    let start = hinted
        .or_else(|| context.find(&answer.text))
        .ok_or_else(|| format!("answer `{}` not found in paragraph", answer.text))?;
    let end = start + answer.text.len();
    paragraph
        .offsets
        .iter()
        .zip(&paragraph.sentence_ids)
        .find(|((s, e), _)| *s <= start && end <= *e)
        .map(|((s, _), id)| AnswerLocation {
            sentence_id: id.clone(),
            start: start - s,
            end: end - s,
        })
        .ok_or_else(|| format!("answer `{}` does not lie within a single sentence", answer.text))
}

fn is_header(cols: &[&str]) -> bool {
    cols.first()
        .is_some_and(|c| matches!(c.trim(), "sentence_id" | "id_a" | "id"))
}

/// Parses `sentence_id<TAB>label` rows; the label column is optional.
pub fn parse_sa_seeds(text: &str) -> Result<Vec<SaSeed>, IngestError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if line.trim().is_empty() || (n == 0 && is_header(&cols)) {
            continue;
        }
        if cols.len() > 2 {
            return Err(IngestError::malformed(n + 1, "expected `sentence_id<TAB>label`"));
        }
        let label = match cols.get(1).map(|c| c.trim()).filter(|c| !c.is_empty()) {
            None => None,
            Some(tok) => Some(Sentiment::parse(tok).ok_or_else(|| {
                IngestError::malformed(n + 1, format!("unknown sentiment label `{tok}`"))
            })?),
        };
        let id = cols[0].trim().to_string();
        out.push(SaSeed {
            id: id.clone(),
            sentence_id: id,
            label,
        });
    }
    Ok(out)
}

/// Parses `id_a<TAB>id_b<TAB>is_duplicate` rows; the flag is optional.
pub fn parse_ssm_seeds(text: &str) -> Result<Vec<SsmSeed>, IngestError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if line.trim().is_empty() || (n == 0 && is_header(&cols)) {
            continue;
        }
        if !(2..=3).contains(&cols.len()) {
            return Err(IngestError::malformed(n + 1, "expected `id_a<TAB>id_b<TAB>is_duplicate`"));
        }
        let duplicate = match cols.get(2).map(|c| c.trim()).filter(|c| !c.is_empty()) {
            None => None,
            Some("1" | "true") => Some(true),
            Some("0" | "false") => Some(false),
            Some(other) => {
                return Err(IngestError::malformed(
                    n + 1,
                    format!("unknown duplicate flag `{other}`"),
                ))
            }
        };
        let (a, b) = (cols[0].trim().to_string(), cols[1].trim().to_string());
        out.push(SsmSeed {
            id: format!("{a}|{b}"),
            sentence_a: a,
            sentence_b: b,
            duplicate,
        });
    }
    Ok(out)
}

/// Checks that every referenced sentence id resolves and seed ids are unique.
pub fn validate_seeds(seeds: &[SeedTest], corpus: &Corpus) -> Result<(), IngestError> {
    let mut ids = HashSet::new();
    for seed in seeds {
        for sid in seed.sentence_ids() {
            if corpus.get(sid).is_none() {
                return Err(IngestError::Seed {
                    id: seed.id().to_string(),
                    msg: format!("unknown sentence id `{sid}`"),
                });
            }
        }
        if !ids.insert((seed.task(), seed.id())) {
            return Err(IngestError::Seed {
                id: seed.id().to_string(),
                msg: "duplicate seed id".into(),
            });
        }
        if let SeedTest::Mrc(m) = seed {
            let idx = m
                .paragraph
                .sentence_ids
                .iter()
                .position(|s| *s == m.answer.sentence_id)
                .ok_or_else(|| IngestError::Seed {
                    id: m.id.clone(),
                    msg: "answer sentence is not part of the paragraph".into(),
                })?;
            let (s, e) = m.paragraph.offsets[idx];
            if m.answer.end > e - s || m.answer.start >= m.answer.end {
                return Err(IngestError::Seed {
                    id: m.id.clone(),
                    msg: "answer span lies outside its sentence".into(),
                });
            }
        }
    }
    Ok(())
}
