//! Metamorphic test generation for NLP models.
//!
//! Seed sentences are taken apart into a basic sentence structure plus a set
//! of adjuncts (modifiers, prepositional phrases, subordinate clauses), the
//! adjuncts are mutated, and the pieces are reassembled slot by slot into a
//! derivation tree of new sentences. Sentences along one tree path stand in a
//! derivation relation, which yields test oracles for reading comprehension,
//! sentiment analysis and semantic similarity models.
//!
//! The pipeline is:
//!
//! 1. [`ingest`]: load parses, compression labels, seed datasets and lexical resources.
//! 2. [`disassembly`]: build a [`disassembly::DerivationTemplate`] for each seed sentence.
//! 3. [`mutation`]: produce single-word variants of each adjunct.
//! 4. [`assembly`]: grow a beam-pruned [`assembly::DerivationTree`].
//! 5. [`metamorphic`]: derive task-specific test suites.
//! 6. [`harness`]: run suites against models and compute report precision.

pub mod assembly;
pub mod disassembly;
pub mod harness;
pub mod ingest;
pub mod jsonl;
pub mod metamorphic;
pub mod morph;
pub mod mutation;
pub mod parallel;
pub mod render;

pub use assembly::{build_derivation_tree, DerivationNode, DerivationTree, TreeConfig};
pub use disassembly::{disassemble, DerivationTemplate};
pub use ingest::{Corpus, ParsedSentence, SeedTest, Task, Token, Upos};
