use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt::Write as _;

use super::{IngestError, ParsedSentence, Token, Upos};

/// Parses CoNLL-U text. Every sentence block needs a `# sent_id =` comment;
/// multi-word token ranges and empty nodes are rejected.
pub fn parse_conllu(text: &str) -> Result<Vec<ParsedSentence>, IngestError> {
    let mut sentences = Vec::new();
    let mut seen = HashSet::new();
    let mut block = Block::default();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(sentence) = block.finish(&mut seen)? {
                sentences.push(sentence);
            }
            continue;
        }
        if block.start == 0 {
            block.start = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => block.id = Some((value.trim().to_string(), line_no)),
                    "text" => block.text = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        block.tokens.push(parse_token_line(line, line_no, block.tokens.len())?);
        block.lines.push(line_no);
    }
    if let Some(sentence) = block.finish(&mut seen)? {
        sentences.push(sentence);
    }
    Ok(sentences)
}

#[derive(Default)]
struct Block {
    start: usize,
    id: Option<(String, usize)>,
    text: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
}

impl Block {
    fn finish(&mut self, seen: &mut HashSet<String>) -> Result<Option<ParsedSentence>, IngestError> {
        let block = std::mem::take(self);
        if block.tokens.is_empty() {
            return Ok(None);
        }
        let (id, id_line) = block
            .id
            .ok_or_else(|| IngestError::malformed(block.start, "sentence without `# sent_id`"))?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId { line: id_line, id });
        }

        let len = block.tokens.len();
        let mut roots = 0;
        for (tok, &line) in block.tokens.iter().zip(&block.lines) {
            match tok.head {
                None => roots += 1,
                Some(h) if h >= len => {
                    return Err(IngestError::DanglingHead {
                        line,
                        head: h + 1,
                        len,
                    })
                }
                Some(h) if h == tok.index => {
                    return Err(IngestError::malformed(line, "token is its own head"))
                }
                Some(_) => {}
            }
        }
        if roots != 1 {
            return Err(IngestError::malformed(
                block.start,
                format!("sentence `{id}` has {roots} roots, expected exactly one"),
            ));
        }

        let mut sentence = ParsedSentence {
            id,
            text: String::new(),
            tokens: block.tokens,
            tree: None,
            compression_labels: None,
        };
        if has_cycle(&sentence) {
            return Err(IngestError::malformed(block.start, "dependency cycle"));
        }
        let surface = sentence.surface();
        match block.text {
            Some(text) if text != surface => {
                return Err(IngestError::malformed(
                    block.start,
                    format!("`# text` does not match the token forms: `{text}` vs `{surface}`"),
                ))
            }
            _ => sentence.text = surface,
        }
        Ok(Some(sentence))
    }
}

fn has_cycle(sentence: &ParsedSentence) -> bool {
    let len = sentence.tokens.len();
    sentence.tokens.iter().any(|start| {
        let mut cur = start.head;
        let mut steps = 0;
        while let Some(h) = cur {
            steps += 1;
            if steps > len {
                return true;
            }
            cur = sentence.tokens[h].head;
        }
        false
    })
}

fn parse_token_line(line: &str, line_no: usize, expected_index: usize) -> Result<Token, IngestError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(IngestError::malformed(
            line_no,
            format!("expected 10 tab-separated columns, found {}", cols.len()),
        ));
    }
    if cols[0].contains('-') {
        return Err(IngestError::malformed(
            line_no,
            format!("multi-word token range `{}` is not supported", cols[0]),
        ));
    }
    if cols[0].contains('.') {
        return Err(IngestError::malformed(line_no, "empty nodes are not supported"));
    }
    let id: usize = cols[0]
        .parse()
        .map_err(|_| IngestError::malformed(line_no, format!("bad token id `{}`", cols[0])))?;
    if id != expected_index + 1 {
        return Err(IngestError::malformed(
            line_no,
            format!("token id {id} out of sequence, expected {}", expected_index + 1),
        ));
    }
    let upos: Upos = cols[3]
        .parse()
        .map_err(|e| IngestError::malformed(line_no, format!("{e}")))?;
    let head: usize = cols[6]
        .parse()
        .map_err(|_| IngestError::malformed(line_no, format!("bad head `{}`", cols[6])))?;

    Ok(Token {
        index: id - 1,
        form: cols[1].to_string(),
        lemma: if cols[2] == "_" && cols[1] != "_" {
            cols[1].to_lowercase()
        } else {
            cols[2].to_string()
        },
        upos,
        xpos: optional(cols[4]),
        feats: parse_feats(cols[5], line_no)?,
        head: head.checked_sub(1),
        deprel: cols[7].to_string(),
        deps: optional(cols[8]),
        misc: optional(cols[9]),
    })
}

fn optional(col: &str) -> Option<String> {
    (col != "_").then(|| col.to_string())
}

fn parse_feats(col: &str, line_no: usize) -> Result<BTreeMap<String, String>, IngestError> {
    if col == "_" {
        return Ok(BTreeMap::new());
    }
    col.split('|')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| IngestError::malformed(line_no, format!("bad feature `{kv}`")))
        })
        .collect()
}

/// Serializes sentences back to CoNLL-U.
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# sent_id = {}", s.id);
        let _ = writeln!(out, "# text = {}", s.text);
        for t in &s.tokens {
            let feats = if t.feats.is_empty() {
                "_".to_string()
            } else {
                t.feats
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join("|")
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                t.index + 1,
                t.form,
                t.lemma,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                feats,
                t.head.map_or(0, |h| h + 1),
                t.deprel,
                t.deps.as_deref().unwrap_or("_"),
                t.misc.as_deref().unwrap_or("_"),
            );
        }
        out.push('\n');
    }
    out
}
