//! Nonlinear Schrödinger ground states on metric graphs.
//!
//! Graphs are finite cores with half-lines attached. Fields are sampled on a
//! per-edge grid with shared vertex values, the energy
//! `E(u) = ½‖u′‖₂² − (1/p)‖u‖_p^p` is evaluated with trapezoid sums, and the
//! mass-constrained minimum is approached by a normalized gradient flow.
//! The [`reductions`] module holds the edge-merging transforms that compare
//! a graph's energy with the line soliton's.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod flows;
pub mod format;
pub mod functionals;
pub mod graph;
pub mod reductions;
pub mod scenario;
pub mod soliton;

pub use error::{Error, Result};
pub use field::{GraphField, GridSpec, Mesh};
pub use flows::{escape_metrics, minimize, EscapeMetric, FlowConfig, FlowResult, FlowSummary};
pub use functionals::{
    energy, energy_gradient, kinetic, kirchhoff_residual, mass, multiplier_fit, EnergyReport,
    KirchhoffReport,
};
pub use graph::{Edge, EdgeId, EulerPath, Length, MetricGraph, PathStep, VertexId};
pub use reductions::{
    bridge_reduce, comparison_transform, melt_selfloop, unfold, ComparisonResult, EdgeFunction,
    ReductionTrace, TraceStep,
};
pub use scenario::{run_scenario, Scenario, ScenarioReport};
pub use soliton::{soliton_energy, SolitonParams};
