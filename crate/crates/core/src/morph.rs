//! Rule-based English inflection for re-inflecting synonyms so they match
//! the number, tense or degree of the word they replace.

use std::collections::HashMap;

use crate::ingest::{Token, Upos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inflection {
    Base,
    Plural,
    Past,
    PastParticiple,
    ThirdSingular,
    PresentParticiple,
    Comparative,
    Superlative,
}

/// The inflection a substitute must carry to fit in `token`'s place.
pub fn required_inflection(token: &Token) -> Inflection {
    use Inflection::*;
    let xpos = token.xpos.as_deref().unwrap_or("");
    match token.upos {
        Upos::NOUN => match token.feat("Number") {
            Some("Plur") => Plural,
            Some(_) => Base,
            None if xpos == "NNS" => Plural,
            None => Base,
        },
        Upos::VERB | Upos::AUX => {
            if token.feats.is_empty() {
                return match xpos {
                    "VBD" => Past,
                    "VBN" => PastParticiple,
                    "VBG" => PresentParticiple,
                    "VBZ" => ThirdSingular,
                    _ => Base,
                };
            }
            match (token.feat("VerbForm"), token.feat("Tense")) {
                (Some("Ger"), _) => PresentParticiple,
                (Some("Part"), Some("Pres")) => PresentParticiple,
                (Some("Part"), _) => PastParticiple,
                (_, Some("Past")) => Past,
                (_, Some("Pres"))
                    if token.feat("Person") == Some("3") && token.feat("Number") == Some("Sing") =>
                {
                    ThirdSingular
                }
                _ => Base,
            }
        }
        Upos::ADJ | Upos::ADV => match token.feat("Degree") {
            Some("Cmp") => Comparative,
            Some("Sup") => Superlative,
            Some(_) => Base,
            None => match xpos {
                "JJR" | "RBR" => Comparative,
                "JJS" | "RBS" => Superlative,
                _ => Base,
            },
        },
        _ => Base,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct VerbForms {
    past: Option<String>,
    past_participle: Option<String>,
    third: Option<String>,
    ing: Option<String>,
}

/// Irregular tables plus regular suffixing rules.
#[derive(Debug, Clone, Default)]
pub struct Inflector {
    verbs: HashMap<String, VerbForms>,
    nouns: HashMap<String, String>,
    adjectives: HashMap<String, (String, String)>,
}

const VERBS: &str = include_str!("../data/irregular_verbs.tsv");
const NOUNS: &str = include_str!("../data/irregular_nouns.tsv");
const ADJECTIVES: &str = include_str!("../data/irregular_adjectives.tsv");

fn rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::trim).collect())
}

fn cell(row: &[&str], i: usize) -> Option<String> {
    row.get(i).filter(|c| **c != "-" && !c.is_empty()).map(|c| c.to_string())
}

impl Inflector {
    /// The bundled English tables.
    pub fn english() -> Self {
        Self::from_tables(VERBS, NOUNS, ADJECTIVES)
    }

    /// Builds an inflector from TSV tables. Verb rows are
    /// `base past participle [3sg] [ing]`; a `-` in the past or participle
    /// column blocks that form.
    pub fn from_tables(verbs: &str, nouns: &str, adjectives: &str) -> Self {
        let mut out = Inflector::default();
        for row in rows(verbs) {
            let forms = VerbForms {
                past: cell(&row, 1),
                past_participle: cell(&row, 2),
                third: cell(&row, 3),
                ing: cell(&row, 4),
            };
            out.verbs.insert(row[0].to_lowercase(), forms);
        }
        for row in rows(nouns) {
            if let Some(plural) = cell(&row, 1) {
                out.nouns.insert(row[0].to_lowercase(), plural);
            }
        }
        for row in rows(adjectives) {
            if let (Some(c), Some(s)) = (cell(&row, 1), cell(&row, 2)) {
                out.adjectives.insert(row[0].to_lowercase(), (c, s));
            }
        }
        out
    }

    /// Inflects `lemma`; `None` when no single-word form can be produced.
    pub fn inflect(&self, lemma: &str, upos: Upos, inflection: Inflection) -> Option<String> {
        use Inflection::*;
        let lemma = lemma.to_lowercase();
        if lemma.is_empty() || !lemma.chars().all(|c| c.is_alphabetic()) {
            return None;
        }
        match (upos, inflection) {
            (_, Base) => Some(lemma),
            (Upos::NOUN, Plural) => Some(
                self.nouns
                    .get(&lemma)
                    .cloned()
                    .unwrap_or_else(|| sibilant_suffix(&lemma, false)),
            ),
            (Upos::VERB | Upos::AUX, form) => self.inflect_verb(&lemma, form),
            (Upos::ADJ | Upos::ADV, Comparative | Superlative) => {
                if let Some((c, s)) = self.adjectives.get(&lemma) {
                    return Some(if inflection == Comparative { c.clone() } else { s.clone() });
                }
                let suffix = if inflection == Comparative { "er" } else { "est" };
                grade(&lemma, suffix)
            }
            _ => None,
        }
    }

    fn inflect_verb(&self, lemma: &str, form: Inflection) -> Option<String> {
        use Inflection::*;
        let irregular = self.verbs.get(lemma);
        match form {
            Past => match irregular {
                Some(v) => v.past.clone(),
                None => Some(ed_form(lemma)),
            },
            PastParticiple => match irregular {
                Some(v) => v.past_participle.clone(),
                None => Some(ed_form(lemma)),
            },
            ThirdSingular => Some(
                irregular
                    .and_then(|v| v.third.clone())
                    .unwrap_or_else(|| sibilant_suffix(lemma, true)),
            ),
            PresentParticiple => Some(
                irregular
                    .and_then(|v| v.ing.clone())
                    .unwrap_or_else(|| ing_form(lemma)),
            ),
            _ => None,
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn syllables(word: &str) -> usize {
    let chars: Vec<char> = word.chars().collect();
    let mut count = 0;
    let mut prev_vowel = false;
    for (i, &c) in chars.iter().enumerate() {
        let vowel = is_vowel(c) || (c == 'y' && i > 0);
        if vowel && !prev_vowel {
            count += 1;
        }
        prev_vowel = vowel;
    }
    if word.ends_with('e') && !word.ends_with("le") && count > 1 {
        count -= 1;
    }
    count.max(1)
}

/// Consonant-vowel-consonant ending of a one-syllable word (stop, big).
fn doubles_final(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    n >= 3
        && !is_vowel(chars[n - 1])
        && !matches!(chars[n - 1], 'w' | 'x' | 'y')
        && is_vowel(chars[n - 2])
        && !is_vowel(chars[n - 3])
        && syllables(word) == 1
}

fn consonant_y(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    chars.len() >= 2 && chars[chars.len() - 1] == 'y' && !is_vowel(chars[chars.len() - 2])
}

fn stem(word: &str) -> &str {
    &word[..word.len() - 1]
}

fn sibilant_suffix(word: &str, verb: bool) -> String {
    if ["s", "x", "z", "ch", "sh"].iter().any(|s| word.ends_with(s)) || (verb && word.ends_with('o')) {
        format!("{word}es")
    } else if consonant_y(word) {
        format!("{}ies", stem(word))
    } else {
        format!("{word}s")
    }
}

fn ed_form(word: &str) -> String {
    if word.ends_with('e') {
        format!("{word}d")
    } else if consonant_y(word) {
        format!("{}ied", stem(word))
    } else if doubles_final(word) {
        format!("{word}{}ed", word.chars().last().unwrap())
    } else {
        format!("{word}ed")
    }
}

fn ing_form(word: &str) -> String {
    if let Some(root) = word.strip_suffix("ie") {
        format!("{root}ying")
    } else if word.ends_with('e') && !["ee", "ye", "oe"].iter().any(|s| word.ends_with(s)) && word.len() > 2 {
        format!("{}ing", stem(word))
    } else if doubles_final(word) {
        format!("{word}{}ing", word.chars().last().unwrap())
    } else {
        format!("{word}ing")
    }
}

fn grade(word: &str, suffix: &str) -> Option<String> {
    match syllables(word) {
        1 => Some(if word.ends_with('e') {
            format!("{word}{}", &suffix[1..])
        } else if doubles_final(word) {
            format!("{word}{}{suffix}", word.chars().last().unwrap())
        } else {
            format!("{word}{suffix}")
        }),
        2 if consonant_y(word) => Some(format!("{}i{suffix}", stem(word))),
        // Longer adjectives grade with "more"/"most", which is not one word.
        _ => None,
    }
}
