//! Synthetic streams, label-flip injection and a small decision tree.

pub mod generators;
pub mod inject;
pub mod tree;

pub use generators::{
    gen_concept_stream, sigmoid_mix, ConceptStream, ConceptStreamConfig, GeneratorKind, LabeledData,
};
pub use inject::{inject_label_flip, DriftSchedule, Injected, RampShape};
pub use tree::{fit_tree, Node, TreeModel};
