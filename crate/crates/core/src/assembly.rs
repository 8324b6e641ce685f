//! Assembly of derivation trees: starting from the basic sentence
//! structure, fill the template's slots one at a time with every variant of
//! the slot's adjunct, optionally keeping only the best few sentences per
//! level.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::disassembly::DerivationTemplate;
use crate::mutation::{AdjunctVariant, MutationStats, Mutator};
use crate::parallel::parallel_map;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationNode {
    /// `{tree}:r` for the root, `{tree}:{v1}.{v2}...` for the variant
    /// indices chosen at each slot.
    pub id: String,
    pub level: usize,
    pub parent: Option<String>,
    pub text: String,
    pub variants: Vec<AdjunctVariant>,
    /// Mean similarity of the filled variants; 1.0 at the root.
    pub score: f64,
}

impl DerivationNode {
    /// Forms of every filled slot, in slot order.
    pub fn filled(&self) -> Vec<Vec<String>> {
        self.variants.iter().map(|v| v.tokens.clone()).collect()
    }

    fn last_similarity(&self) -> f64 {
        self.variants.last().map_or(1.0, |v| v.similarity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Beam width per level; `None` keeps every node.
    pub beam: Option<usize>,
    /// Worker cap for context-dependent mutation within a level.
    pub workers: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            beam: Some(4),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationTree {
    pub tree_id: String,
    pub template: DerivationTemplate,
    /// `levels[i]` holds the sentences with `i` slots filled.
    pub levels: Vec<Vec<DerivationNode>>,
    pub beam: Option<usize>,
    pub stats: MutationStats,
}

impl DerivationTree {
    pub fn root(&self) -> &DerivationNode {
        &self.levels[0][0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &DerivationNode> {
        self.levels.iter().flatten()
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn node(&self, id: &str) -> Option<&DerivationNode> {
        self.nodes().find(|n| n.id == id)
    }

    /// Number of slots, i.e. the level of a complete sentence.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a DerivationNode> {
        self.nodes().filter(move |n| n.parent.as_deref() == Some(id))
    }

    /// Nodes without children. After pruning these can sit above the last level.
    pub fn leaves(&self) -> Vec<&DerivationNode> {
        let parents: BTreeSet<&str> = self.nodes().filter_map(|n| n.parent.as_deref()).collect();
        self.nodes().filter(|n| !parents.contains(n.id.as_str())).collect()
    }

    /// One root-to-leaf node list per leaf.
    pub fn paths(&self) -> Vec<Vec<&DerivationNode>> {
        let by_id: HashMap<&str, &DerivationNode> = self.nodes().map(|n| (n.id.as_str(), n)).collect();
        self.leaves()
            .into_iter()
            .map(|leaf| {
                let mut path = vec![leaf];
                let mut cur = leaf;
                while let Some(p) = cur.parent.as_deref() {
                    cur = by_id[p];
                    path.push(cur);
                }
                path.reverse();
                path
            })
            .collect()
    }

    /// Distinct sentences over all levels.
    pub fn sentences(&self) -> BTreeSet<&str> {
        self.nodes().map(|n| n.text.as_str()).collect()
    }

    /// The `k` complete sentences with the least variation (highest score).
    /// A template without slots yields its root.
    pub fn minimal_variation_leaves(&self, k: usize) -> Vec<&DerivationNode> {
        let mut last: Vec<&DerivationNode> = self.levels[self.depth()].iter().collect();
        last.sort_by(|a, b| rank(a, b));
        last.truncate(k);
        last
    }
}

/// Beam order: score, then last variant's similarity, then text.
fn rank(a: &DerivationNode, b: &DerivationNode) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.last_similarity().total_cmp(&a.last_similarity()))
        .then_with(|| a.text.cmp(&b.text))
}

/// Keeps the `beam` best nodes of a level, preserving their generation order.
pub fn beam_prune(level: Vec<DerivationNode>, beam: usize) -> Vec<DerivationNode> {
    if level.len() <= beam {
        return level;
    }
    let mut order: Vec<usize> = (0..level.len()).collect();
    order.sort_by(|&a, &b| rank(&level[a], &level[b]));
    let keep: BTreeSet<usize> = order.into_iter().take(beam).collect();
    level
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, n)| n)
        .collect()
}

fn child_id(tree_id: &str, parent: &DerivationNode, variant: usize) -> String {
    if parent.level == 0 {
        format!("{tree_id}:{variant}")
    } else {
        format!("{}.{variant}", parent.id)
    }
}

/// Expands every parent with every variant of the next slot.
pub fn assemble_step(
    template: &DerivationTemplate,
    tree_id: &str,
    parents: &[DerivationNode],
    variants: &[Vec<AdjunctVariant>],
) -> Vec<DerivationNode> {
    let mut out = Vec::new();
    for (parent, options) in parents.iter().zip(variants) {
        for (v, variant) in options.iter().enumerate() {
            let mut filled = parent.variants.clone();
            filled.push(variant.clone());
            let forms: Vec<Vec<String>> = filled.iter().map(|f| f.tokens.clone()).collect();
            let score = filled.iter().map(|f| f.similarity).sum::<f64>() / filled.len() as f64;
            out.push(DerivationNode {
                id: child_id(tree_id, parent, v),
                level: parent.level + 1,
                parent: Some(parent.id.clone()),
                text: template.render_partial(&forms),
                variants: filled,
                score,
            });
        }
    }
    out
}

/// Builds the derivation tree of a template.
pub fn build_derivation_tree(
    template: &DerivationTemplate,
    mutator: &Mutator<'_>,
    config: &TreeConfig,
) -> DerivationTree {
    let tree_id = template.source_id.clone();
    let root = DerivationNode {
        id: format!("{tree_id}:r"),
        level: 0,
        parent: None,
        text: template.render_base(),
        variants: Vec::new(),
        score: 1.0,
    };
    let mut stats = MutationStats::default();
    let mut levels = vec![vec![root]];
    for slot in 0..template.slot_count() {
        let parents = levels.last().unwrap();
        let variants: Vec<Vec<AdjunctVariant>> = if mutator.is_contextual() {
            let results = parallel_map(parents, config.workers, |p| {
                let mut s = MutationStats::default();
                let v = mutator.mutate(template, slot, &p.filled(), &mut s);
                (v, s)
            });
            results
                .into_iter()
                .map(|(v, s)| {
                    stats.merge(&s);
                    v
                })
                .collect()
        } else {
            let shared = mutator.mutate(template, slot, &[], &mut stats);
            vec![shared; parents.len()]
        };
        let mut next = assemble_step(template, &tree_id, parents, &variants);
        if let Some(beam) = config.beam {
            next = beam_prune(next, beam.max(1));
        }
        levels.push(next);
    }
    DerivationTree {
        tree_id,
        template: template.clone(),
        levels,
        beam: config.beam,
        stats,
    }
}
