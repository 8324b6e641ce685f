//! Synthetic seed sentences with a chosen adjunct layout, plus a lexicon and
//! vectors giving each adjunct word a chosen number of synonyms.
//!
//! Layout: `The <adjectives> cat sat <adverbs and PPs> .` where every
//! adjunct is a single content word (`in the <noun>` for PPs) and only
//! `The cat sat` is kept by the compressor.

use sentasm::ingest::{parse_conllu, EmbeddingTable, Lexicon, ParsedSentence, Upos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Adj,
    Adv,
    Pp,
}

pub struct Synth {
    pub sentence: ParsedSentence,
    pub lexicon: Lexicon,
    pub embeddings: EmbeddingTable,
    /// Content word of each slot, left to right.
    pub words: Vec<String>,
    /// Synonym count of each slot's word, left to right.
    pub synonyms: Vec<usize>,
}

fn letters(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    String::from_utf8(out).unwrap()
}

/// Deterministic pseudo-random vector for `word` (splitmix64 over a hash).
fn vector(word: &str, seed: u64, dim: usize) -> Vec<f32> {
    let mut state = word
        .bytes()
        .fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    (0..dim)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z >> 11) as f32 / (1u64 << 53) as f32 - 0.5
        })
        .collect()
}

/// `layout[i]` is the kind of adjunct `i` and its number of synonyms.
/// Adjective adjuncts come before the subject whatever their position in
/// `layout`; the others follow the verb in order.
pub fn build(layout: &[(Kind, usize)], seed: u64) -> Synth {
    let name = |i: usize| format!("q{}", letters(i));
    let adjs: Vec<(usize, usize)> = layout
        .iter()
        .enumerate()
        .filter(|(_, (k, _))| *k == Kind::Adj)
        .map(|(i, (_, n))| (i, *n))
        .collect();
    let rest: Vec<(usize, Kind, usize)> = layout
        .iter()
        .enumerate()
        .filter(|(_, (k, _))| *k != Kind::Adj)
        .map(|(i, (k, n))| (i, *k, *n))
        .collect();

    let cat = 2 + adjs.len();
    let sat = cat + 1;
    // (form, upos, xpos, feats, head, deprel, compression label)
    let mut rows: Vec<(String, &str, &str, &str, usize, &str, u8)> = Vec::new();
    rows.push(("The".into(), "DET", "DT", "_", cat, "det", 1));
    for _ in &adjs {
        rows.push((String::new(), "ADJ", "JJ", "Degree=Pos", cat, "amod", 0));
    }
    rows.push(("cat".into(), "NOUN", "NN", "Number=Sing", sat, "nsubj", 1));
    rows.push(("sat".into(), "VERB", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin", 0, "root", 1));
    let mut slot_words: Vec<(usize, usize)> = Vec::new(); // (row index, layout index)
    for (k, (i, _)) in adjs.iter().enumerate() {
        slot_words.push((1 + k, *i));
    }
    for (i, kind, _) in &rest {
        match kind {
            Kind::Adv => {
                slot_words.push((rows.len(), *i));
                rows.push((String::new(), "ADV", "RB", "_", sat, "advmod", 0));
            }
            Kind::Pp => {
                let noun = rows.len() + 3;
                rows.push(("in".into(), "ADP", "IN", "_", noun, "case", 0));
                rows.push(("the".into(), "DET", "DT", "_", noun, "det", 0));
                slot_words.push((rows.len(), *i));
                rows.push((String::new(), "NOUN", "NN", "Number=Sing", sat, "obl", 0));
            }
            Kind::Adj => unreachable!(),
        }
    }
    for &(row, i) in &slot_words {
        rows[row].0 = name(i);
    }
    rows.push((".".into(), "PUNCT", ".", "_", sat, "punct", 0));

    let text = {
        let words: Vec<&str> = rows[..rows.len() - 1].iter().map(|r| r.0.as_str()).collect();
        format!("{}.", words.join(" "))
    };
    let mut conllu = format!("# sent_id = synth\n# text = {text}\n");
    for (n, (form, upos, xpos, feats, head, deprel, _)) in rows.iter().enumerate() {
        let misc = if n + 2 == rows.len() { "SpaceAfter=No" } else { "_" };
        let lemma = form.to_lowercase();
        conllu.push_str(&format!(
            "{}\t{form}\t{lemma}\t{upos}\t{xpos}\t{feats}\t{head}\t{deprel}\t_\t{misc}\n",
            n + 1
        ));
    }
    let mut sentence = parse_conllu(&conllu).expect("synthetic sentence parses").remove(0);
    sentence.compression_labels = Some(rows.iter().map(|r| r.6).collect());

    let mut lexicon = Lexicon::default();
    let mut embeddings = EmbeddingTable::new(6);
    let mut words = Vec::new();
    let mut counts = Vec::new();
    let mut ordered = slot_words.clone();
    ordered.sort();
    for (row, i) in ordered {
        let (form, upos) = (&rows[row].0, rows[row].1);
        let upos: Upos = upos.parse().unwrap();
        let synonyms: Vec<String> = (0..layout[i].1).map(|j| format!("{form}z{}", letters(j))).collect();
        let refs: Vec<&str> = synonyms.iter().map(String::as_str).collect();
        lexicon.insert(form, upos, &refs);
        embeddings.insert(form, vector(form, seed, 6));
        for s in &synonyms {
            embeddings.insert(s, vector(s, seed, 6));
        }
        words.push(form.clone());
        counts.push(layout[i].1);
    }
    Synth {
        sentence,
        lexicon,
        embeddings,
        words,
        synonyms: counts,
    }
}
