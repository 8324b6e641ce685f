//! Detokenization of partial sentences.
//!
//! Sentences in a derivation tree are subsequences of the seed's tokens
//! (with some forms substituted). Spacing is recovered from the seed's
//! `SpaceAfter` marks and capitalization follows the seed's sentence case,
//! so rendering the full token sequence reproduces the seed text exactly.

use std::ops::Range;

use crate::ingest::{Token, Upos};

/// One element of a rendered sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece<'a> {
    /// Seed token at `pos`, rendered with `form`.
    Token { pos: usize, form: &'a str },
    /// A numbered slot placeholder such as `[2]`.
    Marker(usize),
}

impl<'a> Piece<'a> {
    pub fn seed(tokens: &'a [Token], pos: usize) -> Self {
        Piece::Token {
            pos,
            form: &tokens[pos].form,
        }
    }
}

const OPENING: &[&str] = &["(", "[", "{", "``", "\u{201c}", "\u{2018}"];

/// Tokens that attach to the preceding word (closing punctuation, clitics).
fn attaches_left(tok: &Token) -> bool {
    if tok.upos == Upos::PUNCT {
        return !OPENING.contains(&tok.form.as_str());
    }
    tok.form.starts_with('\'') || tok.form.eq_ignore_ascii_case("n't")
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

/// Whether the seed's first word keeps its capital when moved inside the sentence.
fn keeps_case(tok: &Token) -> bool {
    tok.upos == Upos::PROPN
        || tok.form == "I"
        || tok.form.chars().filter(|c| c.is_uppercase()).count() > 1
}

fn upper_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Whether the seed sentence starts with a capital letter.
pub fn is_sentence_case(tokens: &[Token]) -> bool {
    tokens.first().is_some_and(|t| starts_upper(&t.form))
}

fn gap(tokens: &[Token], prev: Option<&Piece<'_>>, cur: &Piece<'_>) -> bool {
    match (prev, cur) {
        (None, _) => false,
        (Some(Piece::Token { pos: a, .. }), Piece::Token { pos: b, .. }) => {
            let (a, b) = (*a, *b);
            if b == a + 1 || b == 0 {
                tokens[a].space_after()
            } else if attaches_left(&tokens[b]) {
                tokens[b - 1].space_after()
            } else {
                tokens[a].space_after() || tokens[b - 1].space_after()
            }
        }
        (Some(Piece::Token { pos: a, .. }), Piece::Marker(_)) => tokens[*a].space_after(),
        (Some(Piece::Marker(_)), Piece::Token { pos: b, .. }) => {
            *b == 0 || !attaches_left(&tokens[*b]) || tokens[*b - 1].space_after()
        }
        (Some(Piece::Marker(_)), Piece::Marker(_)) => true,
    }
}

/// Renders pieces (in increasing seed order) and returns the byte range of
/// every piece in the output.
pub fn render_with_offsets(tokens: &[Token], pieces: &[Piece<'_>]) -> (String, Vec<Range<usize>>) {
    let sentence_case = is_sentence_case(tokens);
    let mut out = String::new();
    let mut ranges = Vec::with_capacity(pieces.len());
    let mut seen_token = false;
    let mut prev: Option<&Piece<'_>> = None;
    for piece in pieces {
        if gap(tokens, prev, piece) {
            out.push(' ');
        }
        let start = out.len();
        match piece {
            Piece::Marker(slot) => out.push_str(&format!("[{slot}]")),
            Piece::Token { pos, form } => {
                if sentence_case && !seen_token {
                    out.push_str(&upper_first(form));
                } else if sentence_case && *pos == 0 && !keeps_case(&tokens[0]) {
                    out.push_str(&lower_first(form));
                } else {
                    out.push_str(form);
                }
                if !tokens[*pos].is_punct() {
                    seen_token = true;
                }
            }
        }
        ranges.push(start..out.len());
        prev = Some(piece);
    }
    (out, ranges)
}

pub fn render(tokens: &[Token], pieces: &[Piece<'_>]) -> String {
    render_with_offsets(tokens, pieces).0
}

/// Renders a token subsequence without any capitalization changes, e.g. a
/// standalone adjunct.
pub fn render_plain(tokens: &[Token], positions: &[usize], forms: &[&str]) -> String {
    let mut out = String::new();
    let mut prev: Option<Piece<'_>> = None;
    for (&pos, &form) in positions.iter().zip(forms) {
        let piece = Piece::Token { pos, form };
        if gap(tokens, prev.as_ref(), &piece) {
            out.push(' ');
        }
        out.push_str(form);
        prev = Some(piece);
    }
    out
}
