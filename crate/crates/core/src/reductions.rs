//! Energy-nonincreasing graph surgery on discrete fields.
//!
//! All transforms act on node coordinates, never on values: stretching an
//! edge by `s` multiplies every interval width by `s`, so the discrete
//! kinetic term scales by exactly `1/s` and every trapezoid integral by `s`.
//! The identities behind the comparison and melting arguments therefore hold
//! for the discrete functionals up to floating-point rounding.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::{EdgeView, GraphField, Mesh};
use crate::functionals::{self, edge_kinetic, edge_power, EnergyReport};
use crate::graph::{Edge, EdgeId, MetricGraph, VertexId};

/// Tolerance on matching boundary values before splicing.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Sample variance relative to mean square above which an edge function
/// counts as nonconstant.
pub const NONCONSTANT_TOL: f64 = 1e-12;

/// A function on one interval `(0, l)`: interval widths plus node values.
/// Infinite intervals are stored truncated, with the far value pinned to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction {
    widths: Vec<f64>,
    values: Vec<f64>,
    infinite: bool,
}

impl EdgeFunction {
    pub fn new(widths: Vec<f64>, values: Vec<f64>, infinite: bool) -> Result<Self> {
        if widths.is_empty() || values.len() != widths.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: widths.len() + 1,
                got: values.len(),
            });
        }
        if widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::OutOfRange("interval widths must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("edge values must be finite".into()));
        }
        if infinite && *values.last().expect("nonempty") != 0.0 {
            return Err(Error::OutOfRange(
                "truncated infinite interval must end at 0".into(),
            ));
        }
        Ok(EdgeFunction {
            widths,
            values,
            infinite,
        })
    }

    /// Uniform grid of `values.len() − 1` intervals on `(0, l)`.
    pub fn uniform(l: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len().saturating_sub(1).max(1);
        Self::new(vec![l / n as f64; n], values, false)
    }

    /// Restriction of a graph field to one edge.
    pub fn from_field(u: &GraphField, id: EdgeId) -> Self {
        let grid = u.mesh().edge(id);
        EdgeFunction {
            widths: grid.widths().to_vec(),
            values: u.edge_values(id),
            infinite: grid.is_truncated(),
        }
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    /// Represented length (truncation length if infinite).
    pub fn span(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut x = 0.0;
        std::iter::once(0.0)
            .chain(self.widths.iter().map(|w| {
                x += w;
                x
            }))
            .collect()
    }

    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    fn view(&self) -> EdgeView<'_> {
        let n = self.values.len();
        EdgeView {
            left: self.values[0],
            interior: &self.values[1..n - 1],
            right: self.values[n - 1],
            widths: &self.widths,
        }
    }

    pub fn mass(&self) -> f64 {
        edge_power(self.view(), 2.0)
    }

    pub fn power_integral(&self, q: f64) -> f64 {
        edge_power(self.view(), q)
    }

    /// `½‖u′‖²`.
    pub fn kinetic(&self) -> f64 {
        edge_kinetic(self.view())
    }

    pub fn energy(&self, p: f64) -> EnergyReport {
        EnergyReport::new(
            self.kinetic(),
            self.power_integral(p) / p,
            self.mass(),
            p,
        )
    }

    /// `x ↦ u(x / s)` on `(0, s·l)`.
    pub fn stretched(&self, s: f64) -> Self {
        EdgeFunction {
            widths: self.widths.iter().map(|w| w * s).collect(),
            values: self.values.clone(),
            infinite: self.infinite,
        }
    }

    /// `x ↦ u(l − x)`; only meaningful for finite intervals.
    pub fn reversed(&self) -> Self {
        let mut widths = self.widths.clone();
        let mut values = self.values.clone();
        widths.reverse();
        values.reverse();
        EdgeFunction {
            widths,
            values,
            infinite: false,
        }
    }

    pub fn is_nonconstant(&self) -> bool {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let mean_sq = self.values.iter().map(|v| v * v).sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if mean_sq == 0.0 {
            false
        } else {
            var > NONCONSTANT_TOL * mean_sq
        }
    }

    /// Concatenation; `next` must start where `self` ends.
    fn joined(&self, next: &EdgeFunction) -> EdgeFunction {
        let mut widths = self.widths.clone();
        widths.extend_from_slice(&next.widths);
        let mut values = self.values.clone();
        values.extend_from_slice(&next.values[1..]);
        EdgeFunction {
            widths,
            values,
            infinite: next.infinite,
        }
    }
}

/// Outcome of merging two edge functions into one.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonResult {
    /// `‖u₂‖₂² / ‖u₁‖₂²`
    pub lambda: f64,
    /// 1 or 2: which stretched input became the merged edge.
    pub chosen: u8,
    #[serde(skip)]
    pub merged: EdgeFunction,
    pub candidate_energies: [f64; 2],
    pub energy_before: f64,
    pub energy_after: f64,
    pub strict: bool,
}

/// Merges `u1` and `u2` into a single edge function carrying their total
/// mass and no more energy.
///
/// With `λ = ‖u₂‖²/‖u₁‖²` the candidates are `u₁` stretched by `1 + λ` and
/// `u₂` stretched by `(1 + λ)/λ`; both carry the total mass and the
/// boundary values of their source, and
/// `E(ũ₁) + λE(ũ₂) ≤ (1 + λ)(E(u₁) + E(u₂))` with equality only when both
/// inputs are constant. The lower-energy candidate wins; ties go to `u₁`.
pub fn comparison_transform(u1: &EdgeFunction, u2: &EdgeFunction, p: f64) -> Result<ComparisonResult> {
    check_exponent(p)?;
    let (m1, m2) = (u1.mass(), u2.mass());
    if !(m1 > 0.0 && m2 > 0.0) {
        return Err(Error::ZeroMass);
    }
    let lambda = m2 / m1;
    let c1 = u1.stretched(1.0 + lambda);
    let c2 = u2.stretched((1.0 + lambda) / lambda);
    let e1 = c1.energy(p).total;
    let e2 = c2.energy(p).total;
    let energy_before = u1.energy(p).total + u2.energy(p).total;
    let (chosen, merged, energy_after) = if e2 < e1 { (2, c2, e2) } else { (1, c1, e1) };
    Ok(ComparisonResult {
        lambda,
        chosen,
        merged,
        candidate_energies: [e1, e2],
        energy_before,
        energy_after,
        strict: energy_after < energy_before,
    })
}

/// Splices a self-loop `loop_fn` (equal end values) onto `tail_fn`, which
/// starts at the loop's vertex. Mass and energy are additive.
pub fn melt_selfloop(loop_fn: &EdgeFunction, tail_fn: &EdgeFunction) -> Result<EdgeFunction> {
    if loop_fn.infinite {
        return Err(Error::OutOfRange("a self-loop has finite length".into()));
    }
    let a = loop_fn.start_value();
    let mismatch = (a - loop_fn.end_value())
        .abs()
        .max((a - tail_fn.start_value()).abs());
    if mismatch > BOUNDARY_TOL {
        return Err(Error::BoundaryMismatch(mismatch));
    }
    Ok(loop_fn.joined(tail_fn))
}

/// One applied transform, for the haircut certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub transform: String,
    pub edges: Vec<EdgeId>,
    pub energy_before: f64,
    pub energy_after: f64,
    pub mass_before: f64,
    pub mass_after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReductionTrace {
    pub steps: Vec<TraceStep>,
}

impl ReductionTrace {
    pub fn push(&mut self, step: TraceStep) {
        self.steps.push(step);
    }

    /// Mass constant and energy nonincreasing along the trace, with a
    /// relative slack `tol` for rounding.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.steps.iter().all(|s| {
            let scale = s.energy_before.abs().max(s.mass_before).max(1e-300);
            (s.mass_after - s.mass_before).abs() <= tol * s.mass_before.max(1e-300)
                && s.energy_after <= s.energy_before + tol * scale
        }) && self.steps.windows(2).all(|w| {
            (w[1].mass_before - w[0].mass_after).abs() <= tol * w[0].mass_after.max(1e-300)
        })
    }
}

fn step_record(name: &str, edges: Vec<EdgeId>, before: &GraphField, after: &GraphField, p: f64) -> TraceStep {
    let b = functionals::energy_unchecked(before.mesh(), before.dofs(), p);
    let a = functionals::energy_unchecked(after.mesh(), after.dofs(), p);
    TraceStep {
        transform: name.into(),
        edges,
        energy_before: b.total,
        energy_after: a.total,
        mass_before: b.mass,
        mass_after: a.mass,
    }
}

/// Rebuilds `u` on a graph where the edges in `remove` are dropped and
/// `add` (an edge with its function) is inserted at position `at` among
/// the remaining ones. Vertex ids and values are kept.
fn splice_edges(
    u: &GraphField,
    remove: &[EdgeId],
    at: usize,
    add: (VertexId, Option<VertexId>, EdgeFunction),
) -> Result<GraphField> {
    let g = u.graph();
    let (left, right, func) = add;
    let new_edge = match right {
        Some(r) if !func.infinite => Edge::finite(left, r, func.span())?,
        None if func.infinite => Edge::half_line(left),
        _ => return Err(Error::InvalidGraph("edge kind does not match function".into())),
    };
    let mismatch = (func.start_value() - u.vertex_value(left)).abs().max(
        right.map_or(0.0, |r| (func.end_value() - u.vertex_value(r)).abs()),
    );
    if mismatch > BOUNDARY_TOL {
        return Err(Error::BoundaryMismatch(mismatch));
    }

    let mut parts: Vec<(Edge, EdgeFunction)> = (0..g.num_edges())
        .filter(|id| !remove.contains(id))
        .map(|id| (*g.edge(id), EdgeFunction::from_field(u, id)))
        .collect();
    parts.insert(at.min(parts.len()), (new_edge, func));

    let graph = MetricGraph::new(g.num_vertices(), parts.iter().map(|(e, _)| *e).collect())?;
    let mesh = Arc::new(Mesh::from_widths(
        graph,
        parts.iter().map(|(_, f)| f.widths.clone()).collect(),
    )?);
    let mut dofs = u.dofs()[..g.num_vertices()].to_vec();
    for (_, f) in &parts {
        dofs.extend_from_slice(&f.values[1..f.values.len() - 1]);
    }
    GraphField::from_dofs(mesh, dofs)
}

/// Graph-level self-loop melting: the loop `loop_edge` and an edge
/// `tail_edge` incident to the loop's vertex become one edge starting at
/// that vertex.
pub fn melt_selfloop_in_graph(
    u: &GraphField,
    loop_edge: EdgeId,
    tail_edge: EdgeId,
    p: f64,
) -> Result<(GraphField, TraceStep)> {
    check_exponent(p)?;
    let g = u.graph();
    let lp = g.edge(loop_edge);
    if !lp.is_self_loop() {
        return Err(Error::InvalidGraph(format!("edge {loop_edge} is not a self-loop")));
    }
    let v = lp.left();
    let tail = g.edge(tail_edge);
    if loop_edge == tail_edge {
        return Err(Error::InvalidGraph("tail must differ from the loop".into()));
    }
    let tail_fn = EdgeFunction::from_field(u, tail_edge);
    let (tail_fn, far) = if tail.left() == v {
        (tail_fn, tail.right())
    } else if tail.right() == Some(v) {
        (tail_fn.reversed(), Some(tail.left()))
    } else {
        return Err(Error::InvalidGraph(format!(
            "edge {tail_edge} does not touch vertex {v}"
        )));
    };
    let merged = melt_selfloop(&EdgeFunction::from_field(u, loop_edge), &tail_fn)?;
    let at = loop_edge.min(tail_edge);
    let out = splice_edges(u, &[loop_edge, tail_edge], at, (v, far, merged))?;
    let step = step_record("melt_selfloop", vec![loop_edge, tail_edge], u, &out, p);
    Ok((out, step))
}

/// Vertices and edges of an `n`-bridge, recognised structurally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeShape {
    pub origins: (VertexId, VertexId),
    pub bridges: Vec<EdgeId>,
    pub half_lines: (EdgeId, EdgeId),
}

pub fn bridge_shape(g: &MetricGraph) -> Option<BridgeShape> {
    let hl: Vec<EdgeId> = g.half_lines().collect();
    if hl.len() != 2 || g.num_vertices() != 2 {
        return None;
    }
    let (a, b) = (g.edge(hl[0]).left(), g.edge(hl[1]).left());
    if a == b {
        return None;
    }
    let bridges: Vec<EdgeId> = (0..g.num_edges()).filter(|i| !hl.contains(i)).collect();
    let ok = bridges.iter().all(|&i| {
        let e = g.edge(i);
        !e.is_self_loop() && e.right().is_some()
    });
    (ok && !bridges.is_empty()).then_some(BridgeShape {
        origins: (a, b),
        bridges,
        half_lines: (hl[0], hl[1]),
    })
}

#[derive(Clone, Debug)]
pub struct BridgeReduction {
    pub field: GraphField,
    /// `None` when one merged bridge carried no mass and was simply dropped.
    pub comparison: Option<ComparisonResult>,
    pub step: TraceStep,
}

/// Replaces the two lowest-indexed bridges of an even bridge graph by their
/// comparison merge, producing a field on the `(n − 1)`-bridge.
pub fn bridge_reduce(u: &GraphField, p: f64) -> Result<BridgeReduction> {
    check_exponent(p)?;
    let shape = bridge_shape(u.graph())
        .ok_or_else(|| Error::InvalidGraph("bridge_reduce needs an n-bridge graph".into()))?;
    let n = shape.bridges.len();
    if n < 2 || n % 2 == 1 {
        return Err(Error::OutOfRange(format!(
            "bridge_reduce needs an even bridge count >= 2, got {n}"
        )));
    }
    let (a, b) = shape.origins;
    let oriented = |id: EdgeId| {
        let f = EdgeFunction::from_field(u, id);
        if u.graph().edge(id).left() == a {
            f
        } else {
            f.reversed()
        }
    };
    let (e1, e2) = (shape.bridges[0], shape.bridges[1]);
    let (u1, u2) = (oriented(e1), oriented(e2));
    let (merged, comparison, name) = match (u1.mass() > 0.0, u2.mass() > 0.0) {
        (true, true) => {
            let c = comparison_transform(&u1, &u2, p)?;
            (c.merged.clone(), Some(c), "comparison")
        }
        (true, false) => (u1, None, "drop_null_bridge"),
        (false, true) => (u2, None, "drop_null_bridge"),
        (false, false) => return Err(Error::ZeroMass),
    };
    let field = splice_edges(u, &[e1, e2], e1.min(e2), (a, Some(b), merged))?;
    let step = step_record(name, vec![e1, e2], u, &field, p);
    Ok(BridgeReduction {
        field,
        comparison,
        step,
    })
}

/// Transports `u` along the Euler path of `g` onto the line graph. The
/// first half-line becomes the line's edge 0; everything after it is laid
/// end to end on edge 1. Discrete mass and energy are unchanged.
pub fn unfold(u: &GraphField) -> Result<GraphField> {
    let g = u.graph();
    let path = g.find_euler_path()?;
    let steps = path.steps();
    let first = EdgeFunction::from_field(u, steps[0].edge);
    let mut rest: Option<EdgeFunction> = None;
    for s in &steps[1..] {
        let f = EdgeFunction::from_field(u, s.edge);
        let f = if s.reversed { f.reversed() } else { f };
        rest = Some(match rest {
            None => f,
            Some(acc) => acc.joined(&f),
        });
    }
    let rest = rest.expect("path has two half-lines");
    let mesh = Arc::new(Mesh::from_widths(
        MetricGraph::line(),
        vec![first.widths.clone(), rest.widths.clone()],
    )?);
    let mut dofs = vec![first.values[0]];
    dofs.extend_from_slice(&first.values[1..first.values.len() - 1]);
    dofs.extend_from_slice(&rest.values[1..rest.values.len() - 1]);
    GraphField::from_dofs(mesh, dofs)
}

/// Reduces a bridge field to the line: one `bridge_reduce` if the bridge
/// count is even, then `unfold`.
pub fn haircut_bridge(u: &GraphField, p: f64) -> Result<(GraphField, ReductionTrace)> {
    let mut trace = ReductionTrace::default();
    let mut cur = u.clone();
    let n = bridge_shape(cur.graph())
        .ok_or_else(|| Error::InvalidGraph("haircut needs an n-bridge graph".into()))?
        .bridges
        .len();
    if n % 2 == 0 {
        let red = bridge_reduce(&cur, p)?;
        trace.push(red.step);
        cur = red.field;
    }
    let line = unfold(&cur)?;
    let edges = (0..cur.graph().num_edges()).collect();
    trace.push(step_record("unfold", edges, &cur, &line, p));
    Ok((line, trace))
}
