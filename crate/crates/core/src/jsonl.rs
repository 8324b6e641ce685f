//! JSON Lines reading and writing, plus the record types of the template
//! and tree dump files.

use std::io::{self, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::assembly::DerivationTree;
use crate::disassembly::{AdjunctKind, Degenerate, DerivationTemplate};
use crate::mutation::Provenance;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes one compact JSON document per line.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl_string<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Parses every non-blank line as a `T`.
pub fn read_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|source| JsonlError::Parse { line: n + 1, source }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotRecord {
    pub slot: usize,
    pub text: String,
    pub kind: AdjunctKind,
    pub attention_weight: usize,
    /// Token span `[start, end)` in the seed.
    pub start: usize,
    pub end: usize,
}

/// One line of `templates.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateRecord {
    pub id: String,
    pub text: String,
    pub base: String,
    pub template: String,
    pub degenerate: Option<Degenerate>,
    pub slots: Vec<SlotRecord>,
}

impl From<&DerivationTemplate> for TemplateRecord {
    fn from(t: &DerivationTemplate) -> Self {
        TemplateRecord {
            id: t.source_id.clone(),
            text: t.seed_text.clone(),
            base: t.render_base(),
            template: t.render_template(),
            degenerate: t.degenerate,
            slots: t
                .slots
                .iter()
                .enumerate()
                .map(|(i, a)| SlotRecord {
                    slot: a.slot,
                    text: t.adjunct_text(i, &a.forms()),
                    kind: a.kind,
                    attention_weight: a.attention_weight,
                    start: a.start,
                    end: a.end,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantRecord {
    pub slot: usize,
    /// The substituted word, or the adjunct text for an original.
    pub word: String,
    pub provenance: Provenance,
    pub similarity: f64,
}

/// One line of a tree dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub tree_id: String,
    pub node_id: String,
    pub level: usize,
    pub parent: Option<String>,
    pub text: String,
    pub score: f64,
    pub variants: Vec<VariantRecord>,
}

/// Tree dump lines for every node, level by level.
pub fn tree_records(tree: &DerivationTree) -> Vec<NodeRecord> {
    tree.nodes()
        .map(|n| NodeRecord {
            tree_id: tree.tree_id.clone(),
            node_id: n.id.clone(),
            level: n.level,
            parent: n.parent.clone(),
            text: n.text.clone(),
            score: n.score,
            variants: n
                .variants
                .iter()
                .map(|v| VariantRecord {
                    slot: v.slot,
                    word: v
                        .substitute
                        .clone()
                        .unwrap_or_else(|| tree.template.adjunct_text(v.slot - 1, &v.tokens)),
                    provenance: v.provenance,
                    similarity: v.similarity,
                })
                .collect(),
        })
        .collect()
}
