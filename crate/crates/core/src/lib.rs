//! A lexicalized dependency-based statistical parser: treebank I/O, head
//! finding, dependency extraction, count tables, backed-off estimation, a
//! beam-searched chart parser and PARSEVAL scoring.

pub mod chart;
pub mod counts;
pub mod depextract;
pub mod distance;
pub mod estimator;
pub mod headrules;
pub mod oracle;
pub mod parseval;
pub mod treebank;

/// Label of noun phrases; NPs without NP descendants are baseNPs.
pub const NP_LABEL: &str = "NP";

/// Reserved word, tag and child label of the ROOT pseudo-token.
pub const ROOT_MARKER: &str = "<ROOT>";

pub use chart::{parse, ParseOutcome, ParserConfig, Variant};
pub use counts::{train, Model, TrainConfig};
pub use depextract::Extraction;
pub use headrules::HeadRuleTable;
pub use treebank::{read_tagged_sentence, read_trees, ParseTree, Punctuation, TaggedSentence, Token};
