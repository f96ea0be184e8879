//! Diagram and table output.

mod graph;
mod tables;

pub use graph::{emit_graph, Layer, RenderOptions, UnknownLayer, PALETTE};
pub use tables::emit_tables;
