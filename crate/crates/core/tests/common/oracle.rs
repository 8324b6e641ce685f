//! Test oracles that do not go through the library's renderer.

use std::collections::{BTreeMap, BTreeSet};

use sentasm::{DerivationNode, DerivationTemplate, DerivationTree};

/// Lowercased word-level tokens of a text: alphanumeric runs, clitics
/// such as `'s`, and single punctuation characters. Spacing is ignored.
pub fn word_tokens(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || (c == '\'' && chars.get(i + 1).is_some_and(|n| n.is_alphabetic())) {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

/// Seed positions owned by slot `s` (0-based), delimiters included.
fn slot_positions(template: &DerivationTemplate, s: usize) -> Vec<usize> {
    let adj = &template.slots[s];
    let mut out: Vec<usize> = (adj.start..adj.end).collect();
    if adj.leading_comma {
        out.push(adj.start - 1);
    }
    if adj.trailing_comma {
        out.push(adj.end);
    }
    out
}

/// The node's token sequence rebuilt from span bookkeeping: seed tokens
/// minus the spans of unfilled slots, with filled slots' forms substituted.
pub fn node_sequence(template: &DerivationTemplate, node: &DerivationNode) -> Vec<(usize, String)> {
    let mut removed = BTreeSet::new();
    for s in node.level..template.slots.len() {
        removed.extend(slot_positions(template, s));
    }
    let mut forms: BTreeMap<usize, String> = BTreeMap::new();
    for v in &node.variants {
        let adj = &template.slots[v.slot - 1];
        for (p, f) in (adj.start..adj.end).zip(&v.tokens) {
            forms.insert(p, f.clone());
        }
    }
    (0..template.tokens.len())
        .filter(|p| !removed.contains(p))
        .map(|p| (p, forms.get(&p).cloned().unwrap_or_else(|| template.tokens[p].form.clone())))
        .collect()
}

fn join(seq: &[(usize, String)]) -> String {
    seq.iter().map(|(_, f)| f.as_str()).collect::<Vec<_>>().join(" ")
}

/// Checks that `shorter` is `longer` with the adjuncts of the slots filled
/// between their levels deleted.
pub fn check_derivation(
    template: &DerivationTemplate,
    shorter: &DerivationNode,
    longer: &DerivationNode,
) -> Result<(), String> {
    if shorter.level >= longer.level {
        return Err(format!("{} is not above {}", shorter.id, longer.id));
    }
    let prefix: Vec<&Vec<String>> = longer.variants[..shorter.level].iter().map(|v| &v.tokens).collect();
    let own: Vec<&Vec<String>> = shorter.variants.iter().map(|v| &v.tokens).collect();
    if prefix != own {
        return Err(format!("{} does not extend {}", longer.id, shorter.id));
    }
    let long_seq = node_sequence(template, longer);
    if word_tokens(&longer.text) != word_tokens(&join(&long_seq)) {
        return Err(format!("{}: text `{}` does not match its spans", longer.id, longer.text));
    }
    let mut deleted = BTreeSet::new();
    for s in shorter.level..longer.level {
        deleted.extend(slot_positions(template, s));
    }
    let kept: Vec<(usize, String)> = long_seq.into_iter().filter(|(p, _)| !deleted.contains(p)).collect();
    if word_tokens(&shorter.text) != word_tokens(&join(&kept)) {
        return Err(format!(
            "deleting slots {}..{} from `{}` does not give `{}`",
            shorter.level + 1,
            longer.level,
            longer.text,
            shorter.text
        ));
    }
    Ok(())
}

/// Checks every ancestor/descendant pair along every path of the tree.
pub fn check_tree_derivations(tree: &DerivationTree) -> Result<usize, String> {
    let mut checked = 0;
    for path in tree.paths() {
        for (i, a) in path.iter().enumerate() {
            for b in &path[i + 1..] {
                check_derivation(&tree.template, a, b)?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Everything an exhaustive enumeration predicts for an unpruned tree whose
/// slot `i` has the variant forms `sets[i]`.
pub struct Enumeration {
    /// Node id suffix (`r`, `0`, `0.2`, ...) to the chosen variant indices.
    pub nodes: BTreeMap<String, Vec<usize>>,
    pub paths: usize,
    /// Distinct (ancestor, descendant) choice prefixes along full paths.
    pub pairs: BTreeSet<(Vec<usize>, Vec<usize>)>,
}

pub fn enumerate(sets: &[usize]) -> Enumeration {
    let mut nodes = BTreeMap::new();
    nodes.insert("r".to_string(), Vec::new());
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for &n in sets {
        let mut next = Vec::new();
        for choice in &frontier {
            for v in 0..n {
                let mut c = choice.clone();
                c.push(v);
                let id = c.iter().map(ToString::to_string).collect::<Vec<_>>().join(".");
                nodes.insert(id, c.clone());
                next.push(c);
            }
        }
        frontier = next;
    }
    let mut pairs = BTreeSet::new();
    for full in &frontier {
        for i in 0..=full.len() {
            for j in i + 1..=full.len() {
                pairs.insert((full[..i].to_vec(), full[..j].to_vec()));
            }
        }
    }
    Enumeration {
        paths: frontier.len(),
        nodes,
        pairs,
    }
}
