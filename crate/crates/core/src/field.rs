//! Discretized functions on a metric graph.
//!
//! Every edge carries a grid of nodes spanning `[0, l]` (or `[0, L]` for a
//! half-line truncated at `L`). Nodes at graph vertices are shared degrees
//! of freedom, so the continuity condition holds by construction. The far
//! node of a truncated half-line is pinned to zero and is not a DOF.
//!
//! Packed DOF layout: the `N_v` vertex values first, then the interior nodes
//! of each edge in edge order.

use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::functionals;
use crate::graph::{EdgeId, Length, MetricGraph, VertexId};

/// Tolerance on endpoint disagreement when sampling a function.
pub const CONTINUITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Target grid spacing; actual spacing on every edge is `<= h`.
    pub h: f64,
    /// Truncation length of half-lines.
    pub truncation: f64,
}

impl GridSpec {
    pub fn new(h: f64, truncation: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::OutOfRange(format!("grid spacing h = {h} must be positive")));
        }
        if !(truncation >= 10.0 * h && truncation.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "truncation length {truncation} must be at least 10 h = {}",
                10.0 * h
            )));
        }
        Ok(GridSpec { h, truncation })
    }

    /// Number of uniform intervals covering `len` with spacing at most `h`.
    pub fn intervals(&self, len: f64) -> usize {
        // shave off representation noise so that e.g. 1.0 / 0.1 gives 10
        ((len / self.h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Node layout of one edge.
#[derive(Clone, Debug)]
pub struct EdgeGrid {
    widths: Vec<f64>,
    left: VertexId,
    /// `None` for a truncated half-line (far node pinned to zero).
    right: Option<VertexId>,
    interior: Range<usize>,
}

impl EdgeGrid {
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn intervals(&self) -> usize {
        self.widths.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.widths.len() + 1
    }

    /// Represented length (the truncation length for half-lines).
    pub fn span(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub fn is_truncated(&self) -> bool {
        self.right.is_none()
    }

    pub fn left(&self) -> VertexId {
        self.left
    }

    pub fn right(&self) -> Option<VertexId> {
        self.right
    }

    /// Packed indices of the interior nodes.
    pub fn interior(&self) -> Range<usize> {
        self.interior.clone()
    }

    /// Node coordinates, starting at 0.
    pub fn coords(&self) -> Vec<f64> {
        let mut x = 0.0;
        std::iter::once(0.0)
            .chain(self.widths.iter().map(|w| {
                x += w;
                x
            }))
            .collect()
    }

    pub(crate) fn view<'a>(&'a self, dofs: &'a [f64]) -> EdgeView<'a> {
        EdgeView {
            left: dofs[self.left],
            interior: &dofs[self.interior.clone()],
            right: self.right.map_or(0.0, |r| dofs[r]),
            widths: &self.widths,
        }
    }
}

/// Borrowed node values of one edge, split at the shared endpoints.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EdgeView<'a> {
    pub left: f64,
    pub interior: &'a [f64],
    pub right: f64,
    pub widths: &'a [f64],
}

impl EdgeView<'_> {
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.left)
            .chain(self.interior.iter().copied())
            .chain(std::iter::once(self.right))
    }
}

/// Graph plus per-edge grids; shared read-only by all fields living on it.
#[derive(Clone, Debug)]
pub struct Mesh {
    graph: MetricGraph,
    grid: Option<GridSpec>,
    edges: Vec<EdgeGrid>,
    weights: Vec<f64>,
}

impl Mesh {
    /// Uniform grid on every edge with spacing `<= spec.h`; half-lines are
    /// cut at `spec.truncation`.
    pub fn uniform(graph: MetricGraph, spec: GridSpec) -> Self {
        let widths = graph
            .edges()
            .iter()
            .map(|e| {
                let len = e.length().finite().unwrap_or(spec.truncation);
                let n = spec.intervals(len);
                vec![len / n as f64; n]
            })
            .collect();
        let mut mesh = Self::from_widths(graph, widths).expect("uniform widths are consistent");
        mesh.grid = Some(spec);
        mesh
    }

    /// Mesh with explicit interval widths per edge. Finite edges must be
    /// covered exactly (relative tolerance 1e-9); half-lines may stop at any
    /// positive truncation.
    pub fn from_widths(graph: MetricGraph, widths: Vec<Vec<f64>>) -> Result<Self> {
        if widths.len() != graph.num_edges() {
            return Err(Error::LengthMismatch {
                expected: graph.num_edges(),
                got: widths.len(),
            });
        }
        let mut next = graph.num_vertices();
        let mut edges = Vec::with_capacity(widths.len());
        for (id, (e, w)) in graph.edges().iter().zip(widths).enumerate() {
            if w.is_empty() || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidGraph(format!(
                    "edge {id}: grid widths must be positive and nonempty"
                )));
            }
            if let Length::Finite(l) = e.length() {
                let span: f64 = w.iter().sum();
                if (span - l).abs() > 1e-9 * l {
                    return Err(Error::InvalidGraph(format!(
                        "edge {id}: grid spans {span}, edge length is {l}"
                    )));
                }
            }
            let interior = next..next + w.len() - 1;
            next = interior.end;
            edges.push(EdgeGrid {
                widths: w,
                left: e.left(),
                right: e.right(),
                interior,
            });
        }
        let mut weights = vec![0.0; next];
        for eg in &edges {
            let w = &eg.widths;
            let n = w.len();
            weights[eg.left] += 0.5 * w[0];
            if let Some(r) = eg.right {
                weights[r] += 0.5 * w[n - 1];
            }
            for (k, dof) in eg.interior.clone().enumerate() {
                weights[dof] = 0.5 * (w[k] + w[k + 1]);
            }
        }
        Ok(Mesh {
            graph,
            grid: None,
            edges,
            weights,
        })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn grid(&self) -> Option<GridSpec> {
        self.grid
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeGrid {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[EdgeGrid] {
        &self.edges
    }

    pub fn num_dofs(&self) -> usize {
        self.weights.len()
    }

    /// Trapezoid weight of every DOF (the lumped mass matrix).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn min_spacing(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.widths.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Evaluates `f(edge, x)` at every node. Endpoint evaluations meeting at
    /// a vertex are averaged and must agree within [`CONTINUITY_TOL`].
    pub fn sample<F>(self: &Arc<Self>, f: F) -> Result<GraphField>
    where
        F: Fn(EdgeId, f64) -> f64,
    {
        let mut dofs = vec![0.0; self.num_dofs()];
        let mut hits: Vec<Vec<f64>> = vec![Vec::new(); self.graph.num_vertices()];
        for (id, eg) in self.edges.iter().enumerate() {
            let x = eg.coords();
            hits[eg.left].push(f(id, 0.0));
            if let Some(r) = eg.right {
                hits[r].push(f(id, x[x.len() - 1]));
            }
            for (k, dof) in eg.interior.clone().enumerate() {
                dofs[dof] = f(id, x[k + 1]);
            }
        }
        for (v, vals) in hits.iter().enumerate() {
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            if hi - lo > CONTINUITY_TOL {
                return Err(Error::ContinuityViolation {
                    vertex: v,
                    mismatch: hi - lo,
                });
            }
            dofs[v] = vals.iter().sum::<f64>() / vals.len() as f64;
        }
        GraphField::from_dofs(Arc::clone(self), dofs)
    }
}

/// A real-valued function on the graph, stored as packed DOFs.
#[derive(Clone, Debug)]
pub struct GraphField {
    mesh: Arc<Mesh>,
    dofs: Vec<f64>,
}

impl GraphField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_dofs();
        GraphField {
            mesh,
            dofs: vec![0.0; n],
        }
    }

    pub fn from_dofs(mesh: Arc<Mesh>, dofs: Vec<f64>) -> Result<Self> {
        if dofs.len() != mesh.num_dofs() {
            return Err(Error::LengthMismatch {
                expected: mesh.num_dofs(),
                got: dofs.len(),
            });
        }
        if dofs.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange("field samples must be finite".into()));
        }
        Ok(GraphField { mesh, dofs })
    }

    /// Samples `f(edge, x)` on the uniform mesh of `spec`.
    pub fn sample<F>(graph: &MetricGraph, spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(EdgeId, f64) -> f64,
    {
        Arc::new(Mesh::uniform(graph.clone(), spec)).sample(f)
    }

    pub fn pack(&self) -> Vec<f64> {
        self.dofs.clone()
    }

    pub fn unpack(v: Vec<f64>, graph: &MetricGraph, spec: GridSpec) -> Result<Self> {
        Self::from_dofs(Arc::new(Mesh::uniform(graph.clone(), spec)), v)
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn into_dofs(self) -> Vec<f64> {
        self.dofs
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.mesh.graph
    }

    pub fn vertex_value(&self, v: VertexId) -> f64 {
        self.dofs[v]
    }

    /// All node values of an edge, from coordinate 0 outward.
    pub fn edge_values(&self, id: EdgeId) -> Vec<f64> {
        self.mesh.edges[id].view(&self.dofs).nodes().collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        GraphField {
            mesh: Arc::clone(&self.mesh),
            dofs: self.dofs.iter().map(|x| alpha * x).collect(),
        }
    }

    /// Rescales to mass `mu`.
    pub fn rescale_mass(&self, mu: f64) -> Result<Self> {
        let mut out = self.clone();
        out.rescale_mass_in_place(mu)?;
        Ok(out)
    }

    pub(crate) fn rescale_mass_in_place(&mut self, mu: f64) -> Result<()> {
        if !(mu > 0.0) {
            return Err(Error::OutOfRange(format!("mass {mu} must be positive")));
        }
        let m = functionals::mass(self);
        if !(m > 0.0) {
            return Err(Error::ZeroMass);
        }
        let s = (mu / m).sqrt();
        self.dofs.iter_mut().for_each(|x| *x *= s);
        Ok(())
    }

    pub(crate) fn dofs_mut(&mut self) -> &mut [f64] {
        &mut self.dofs
    }

    /// Dumps `edge,x,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "edge,x,value")?;
        for (id, eg) in self.mesh.edges.iter().enumerate() {
            for (x, u) in eg.coords().into_iter().zip(eg.view(&self.dofs).nodes()) {
                writeln!(w, "{id},{},{}", sig(x), sig(u))?;
            }
        }
        Ok(())
    }
}
