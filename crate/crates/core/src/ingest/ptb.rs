use indexmap::IndexMap;

use super::{ConstituencyNode, IngestError};

/// Parses a file with one `id<TAB>(PTB tree)` per line.
pub fn parse_constituency(text: &str) -> Result<IndexMap<String, ConstituencyNode>, IngestError> {
    let mut out = IndexMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, tree) = line
            .split_once('\t')
            .ok_or_else(|| IngestError::malformed(line_no, "expected `id<TAB>tree`"))?;
        let tree = parse_ptb_tree(tree).map_err(|msg| IngestError::malformed(line_no, msg))?;
        let id = id.trim().to_string();
        if out.contains_key(&id) {
            return Err(IngestError::DuplicateId { line: line_no, id });
        }
        out.insert(id, tree);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(input: &str) -> Vec<Lexeme<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in input.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Lexeme::Atom(&input[s..i]));
            }
            match c {
                '(' => out.push(Lexeme::Open),
                ')' => out.push(Lexeme::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Lexeme::Atom(&input[s..]));
    }
    out
}

/// Parses one bracketed tree such as `(S (NP (NNS Dogs)) (VP (VBP run)))`.
/// An unlabeled outer bracket, as emitted by some parsers, is unwrapped.
pub fn parse_ptb_tree(input: &str) -> Result<ConstituencyNode, String> {
    let lexemes = lex(input);
    let mut pos = 0;
    let mut next_token = 0;
    let tree = parse_node(&lexemes, &mut pos, &mut next_token)?;
    if pos != lexemes.len() {
        return Err("trailing input after tree".into());
    }
    if tree.label.is_empty() && tree.children.len() == 1 {
        return Ok(tree.children.into_iter().next().unwrap());
    }
    Ok(tree)
}

fn parse_node(
    lexemes: &[Lexeme<'_>],
    pos: &mut usize,
    next_token: &mut usize,
) -> Result<ConstituencyNode, String> {
    if lexemes.get(*pos) != Some(&Lexeme::Open) {
        return Err("expected `(`".into());
    }
    *pos += 1;
    let label = match lexemes.get(*pos) {
        Some(Lexeme::Atom(a)) => {
            *pos += 1;
            a.to_string()
        }
        Some(Lexeme::Open) => String::new(),
        Some(Lexeme::Close) => return Err("empty constituent `()`".into()),
        None => return Err("unbalanced parentheses".into()),
    };
    let start = *next_token;

    // Pre-terminal: (TAG word)
    if let Some(Lexeme::Atom(word)) = lexemes.get(*pos) {
        *pos += 1;
        if lexemes.get(*pos) != Some(&Lexeme::Close) {
            return Err(match lexemes.get(*pos) {
                None => "unbalanced parentheses".into(),
                _ => format!("pre-terminal `{label}` has more than one word"),
            });
        }
        *pos += 1;
        *next_token += 1;
        return Ok(ConstituencyNode {
            label,
            start,
            end: start + 1,
            word: Some(word.to_string()),
            children: Vec::new(),
        });
    }

    let mut children = Vec::new();
    loop {
        match lexemes.get(*pos) {
            Some(Lexeme::Close) => {
                *pos += 1;
                break;
            }
            Some(Lexeme::Open) => children.push(parse_node(lexemes, pos, next_token)?),
            Some(Lexeme::Atom(a)) => return Err(format!("unexpected bare word `{a}`")),
            None => return Err("unbalanced parentheses".into()),
        }
    }
    if children.is_empty() {
        return Err(format!("constituent `{label}` has no children"));
    }
    Ok(ConstituencyNode {
        label,
        start,
        end: *next_token,
        word: None,
        children,
    })
}
