//! Discrete NLS functionals on graph fields.
//!
//! With node values `u_k` and interval widths `w_k` on each edge:
//!
//! * `∫ |u|^q ≈ Σ_i W_i |u_i|^q`, where `W` are the trapezoid weights
//!   accumulated per DOF (vertex DOFs collect a half interval from every
//!   incident edge end);
//! * `½‖u′‖² ≈ ½ Σ_edges Σ_k (u_{k+1} − u_k)² / w_k`.
//!
//! `energy_gradient` is the exact gradient of this discrete energy with
//! respect to the packed DOFs. At a vertex DOF the kinetic part sums the
//! outgoing difference quotients of all incident edges: the discrete
//! Kirchhoff balance.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::{EdgeView, GraphField, Mesh};

/// Energy decomposition `total = kinetic − potential`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `½‖u′‖₂²`
    pub kinetic: f64,
    /// `(1/p)‖u‖_p^p`
    pub potential: f64,
    pub total: f64,
    /// `‖u‖₂²`
    pub mass: f64,
    pub p: f64,
}

impl EnergyReport {
    pub(crate) fn new(kinetic: f64, potential: f64, mass: f64, p: f64) -> Self {
        EnergyReport {
            kinetic,
            potential,
            total: kinetic - potential,
            mass,
            p,
        }
    }
}

/// Per-vertex Kirchhoff defect `|Σ_{R(e)=v} u′_e(l_e) − Σ_{L(e)=v} u′_e(0)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffReport {
    pub residuals: Vec<f64>,
}

impl KirchhoffReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn abs_pow(x: f64, q: f64) -> f64 {
    if q == 2.0 {
        x * x
    } else if q == 4.0 {
        let y = x * x;
        y * y
    } else if q.fract() == 0.0 {
        x.abs().powi(q as i32)
    } else {
        x.abs().powf(q)
    }
}

/// `|x|^{q−2} x`, the derivative of `|x|^q / q`.
#[inline]
pub(crate) fn signed_pow(x: f64, q: f64) -> f64 {
    if q == 4.0 {
        x * x * x
    } else if q == 3.0 {
        x * x.abs()
    } else {
        abs_pow(x, q - 2.0) * x
    }
}

pub(crate) fn weighted_power(weights: &[f64], dofs: &[f64], q: f64) -> f64 {
    weights.iter().zip(dofs).map(|(w, u)| w * abs_pow(*u, q)).sum()
}

pub(crate) fn edge_kinetic(view: EdgeView<'_>) -> f64 {
    let mut nodes = view.nodes();
    let mut prev = nodes.next().expect("at least two nodes");
    let mut acc = 0.0;
    for (u, w) in nodes.zip(view.widths) {
        let d = u - prev;
        acc += d * d / w;
        prev = u;
    }
    0.5 * acc
}

/// Trapezoid `∫|u|^q` over a single edge.
pub(crate) fn edge_power(view: EdgeView<'_>, q: f64) -> f64 {
    let mut nodes = view.nodes();
    let mut prev = abs_pow(nodes.next().expect("at least two nodes"), q);
    let mut acc = 0.0;
    for (u, w) in nodes.zip(view.widths) {
        let cur = abs_pow(u, q);
        acc += 0.5 * w * (prev + cur);
        prev = cur;
    }
    acc
}

pub(crate) fn kinetic_of(mesh: &Mesh, dofs: &[f64]) -> f64 {
    mesh.edges().iter().map(|e| edge_kinetic(e.view(dofs))).sum()
}

/// `‖u‖₂²` by the trapezoid rule.
pub fn mass(u: &GraphField) -> f64 {
    weighted_power(u.mesh().weights(), u.dofs(), 2.0)
}

/// `‖u‖_p^p` by the trapezoid rule.
pub fn lp_norm_p(u: &GraphField, p: f64) -> f64 {
    weighted_power(u.mesh().weights(), u.dofs(), p)
}

/// `½‖u′‖₂²` with forward differences.
pub fn kinetic(u: &GraphField) -> f64 {
    kinetic_of(u.mesh(), u.dofs())
}

pub fn energy(u: &GraphField, p: f64) -> Result<EnergyReport> {
    check_exponent(p)?;
    Ok(energy_unchecked(u.mesh(), u.dofs(), p))
}

pub(crate) fn energy_unchecked(mesh: &Mesh, dofs: &[f64], p: f64) -> EnergyReport {
    let w = mesh.weights();
    EnergyReport::new(
        kinetic_of(mesh, dofs),
        weighted_power(w, dofs, p) / p,
        weighted_power(w, dofs, 2.0),
        p,
    )
}

pub(crate) fn total_energy(mesh: &Mesh, dofs: &[f64], p: f64) -> f64 {
    kinetic_of(mesh, dofs) - weighted_power(mesh.weights(), dofs, p) / p
}

/// Gradient of the discrete energy with respect to the packed DOFs.
pub fn energy_gradient(u: &GraphField, p: f64) -> Vec<f64> {
    let mut g = vec![0.0; u.dofs().len()];
    gradient_into(u.mesh(), u.dofs(), p, &mut g);
    g
}

pub(crate) fn gradient_into(mesh: &Mesh, dofs: &[f64], p: f64, g: &mut [f64]) {
    for ((gi, w), u) in g.iter_mut().zip(mesh.weights()).zip(dofs) {
        *gi = -w * signed_pow(*u, p);
    }
    for e in mesh.edges() {
        let widths = e.widths();
        let n = widths.len();
        let interior = e.interior();
        let left = e.left();
        let node = |k: usize| -> Option<usize> {
            if k == 0 {
                Some(left)
            } else if k == n {
                e.right()
            } else {
                Some(interior.start + k - 1)
            }
        };
        let value = |k: usize| node(k).map_or(0.0, |i| dofs[i]);
        if n == 1 {
            let d = (value(1) - value(0)) / widths[0];
            g[left] -= d;
            if let Some(r) = e.right() {
                g[r] += d;
            }
            continue;
        }
        // first interval
        let d0 = (dofs[interior.start] - dofs[left]) / widths[0];
        g[left] -= d0;
        g[interior.start] += d0;
        // interior intervals: contiguous slice
        let inner = &dofs[interior.clone()];
        for k in 1..n - 1 {
            let d = (inner[k] - inner[k - 1]) / widths[k];
            g[interior.start + k - 1] -= d;
            g[interior.start + k] += d;
        }
        // last interval
        let last = interior.end - 1;
        let dn = (value(n) - dofs[last]) / widths[n - 1];
        g[last] -= dn;
        if let Some(r) = e.right() {
            g[r] += dn;
        }
    }
}

/// Three-point one-sided derivative at the first node, in the direction of
/// increasing coordinate, for spacings `a` (first interval) and `b`.
fn one_sided_derivative(u0: f64, u1: f64, u2: f64, a: f64, b: f64) -> f64 {
    -(2.0 * a + b) / (a * (a + b)) * u0 + (a + b) / (a * b) * u1 - a / (b * (a + b)) * u2
}

pub fn kirchhoff_residual(u: &GraphField) -> Result<KirchhoffReport> {
    let mesh = u.mesh();
    let mut sums = vec![0.0; mesh.graph().num_vertices()];
    for (id, e) in mesh.edges().iter().enumerate() {
        if e.num_nodes() < 3 {
            return Err(Error::TooCoarse { vertex: e.left() });
        }
        let vals = u.edge_values(id);
        let w = e.widths();
        let n = w.len();
        // outward derivatives at each vertex end
        sums[e.left()] += one_sided_derivative(vals[0], vals[1], vals[2], w[0], w[1]);
        if let Some(r) = e.right() {
            sums[r] += one_sided_derivative(vals[n], vals[n - 1], vals[n - 2], w[n - 1], w[n - 2]);
        }
    }
    Ok(KirchhoffReport {
        residuals: sums.into_iter().map(f64::abs).collect(),
    })
}

/// `‖u‖_p / (‖u‖₂^{1/2+1/p} ‖u‖_{H¹}^{1/2−1/p})` with
/// `‖u‖_{H¹}² = ‖u‖₂² + ‖u′‖₂²`.
pub fn gn_ratio(u: &GraphField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let m = mass(u);
    if !(m > 0.0) {
        return Err(Error::ZeroMass);
    }
    let h1 = (m + 2.0 * kinetic(u)).sqrt();
    Ok(lp_norm_p(u, p).powf(1.0 / p) / (m.sqrt().powf(0.5 + 1.0 / p) * h1.powf(0.5 - 1.0 / p)))
}

/// The scale-invariant Gagliardo–Nirenberg quotient, with the seminorm
/// `‖u′‖₂` in place of the full H¹ norm.
pub fn gn_quotient_homogeneous(u: &GraphField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let m = mass(u);
    let k = 2.0 * kinetic(u);
    if !(m > 0.0) || !(k > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(lp_norm_p(u, p).powf(1.0 / p) / (m.sqrt().powf(0.5 + 1.0 / p) * k.sqrt().powf(0.5 - 1.0 / p)))
}

/// Mass-lumped `W ∘ u`, the gradient direction of `½‖u‖₂²`.
pub fn weighted_field(u: &GraphField) -> Vec<f64> {
    u.mesh()
        .weights()
        .iter()
        .zip(u.dofs())
        .map(|(w, x)| w * x)
        .collect()
}

/// Lagrange multiplier `ν` of `E + ν‖u‖₂²` fitted to the gradient, and the
/// relative stationarity defect `‖∇E + 2ν W u‖ / ‖∇E‖`.
pub fn multiplier_fit(u: &GraphField, p: f64) -> (f64, f64) {
    let g = energy_gradient(u, p);
    let wu = weighted_field(u);
    let gw: f64 = g.iter().zip(&wu).map(|(a, b)| a * b).sum();
    let ww: f64 = wu.iter().map(|b| b * b).sum();
    let nu = -gw / (2.0 * ww);
    let res: f64 = g
        .iter()
        .zip(&wu)
        .map(|(a, b)| (a + 2.0 * nu * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    (nu, if gn > 0.0 { res / gn } else { 0.0 })
}
