//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use nlsgraph::soliton::vertex_bump;
use nlsgraph::{GraphField, GridSpec, Mesh, MetricGraph};

pub const P: f64 = 4.0;
pub const MU: f64 = 1.0;

/// Vertex bump on the 2-bridge with unit bridges.
pub fn bridge_field(h: f64, truncation: f64) -> GraphField {
    let g = MetricGraph::bridge(2, &[1.0, 1.0]).expect("valid bridge");
    let mesh = Arc::new(Mesh::uniform(g, GridSpec::new(h, truncation).expect("valid grid")));
    vertex_bump(&mesh, P, MU, 0).expect("bump fits the mesh")
}

/// Vertex bump on the 3-bridge, which unfolds onto the line.
pub fn odd_bridge_field(h: f64, truncation: f64) -> GraphField {
    let g = MetricGraph::bridge(3, &[1.0, 0.5, 2.0]).expect("valid bridge");
    let mesh = Arc::new(Mesh::uniform(g, GridSpec::new(h, truncation).expect("valid grid")));
    vertex_bump(&mesh, P, MU, 0).expect("bump fits the mesh")
}
