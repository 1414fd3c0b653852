//! Semantic graphs over annotated documents and a graph-to-sequence
//! question generator trained on them.

pub mod annotations;
pub mod dp;
pub mod encoders;
pub mod gradcheck;
pub mod graph;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod qgen;
pub mod srl;
pub mod synthetic;
pub mod text;
