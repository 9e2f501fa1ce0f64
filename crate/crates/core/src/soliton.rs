//! The NLS soliton on the line and fields built from it.
//!
//! For `2 < p < 6` the mass-`μ` minimizer on ℝ is
//! `φ_μ(x) = C_p μ^{2/(6−p)} sech^{2/(p−2)}(c_p μ^{(p−2)/(6−p)} x)`.
//! Substituting `A sech^α(βx)` with `α = 2/(p−2)` into
//! `−φ″ + ωφ = φ^{p−1}` gives `A^{p−2} = pω/2` and `β = (p−2)√ω/2`, and
//! the mass follows from `∫_ℝ sech^a = B(1/2, a/2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_exponent, Error, Result};
use crate::field::{GraphField, GridSpec, Mesh};
use crate::graph::{EdgeId, MetricGraph, VertexId};

/// `∫_ℝ sech^a(y) dy = √π Γ(a/2) / Γ((a+1)/2)`.
pub fn sech_power_integral(a: f64) -> f64 {
    (0.5 * PI.ln() + ln_gamma(0.5 * a) - ln_gamma(0.5 * (a + 1.0))).exp()
}

/// `ln sech(y)`, stable for large `|y|`.
fn ln_sech(y: f64) -> f64 {
    let y = y.abs();
    std::f64::consts::LN_2 - y - (-2.0 * y).exp().ln_1p()
}

/// Amplitude and width constants `(C_p, c_p)`.
pub fn soliton_constants(p: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    let alpha = 2.0 / (p - 2.0);
    // μ = K ω^{(6−p)/(2(p−2))}
    let k = (0.5 * p).powf(alpha) * (2.0 / (p - 2.0)) * sech_power_integral(2.0 * alpha);
    let amp = (0.5 * p).powf(1.0 / (p - 2.0)) * k.powf(-2.0 / (6.0 - p));
    let width = 0.5 * (p - 2.0) * k.powf(-(p - 2.0) / (6.0 - p));
    Ok((amp, width))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub p: f64,
    pub mu: f64,
    pub amplitude_const: f64,
    pub width_const: f64,
}

impl SolitonParams {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        let (amplitude_const, width_const) = soliton_constants(p)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::OutOfRange(format!("mass {mu} must be positive")));
        }
        Ok(SolitonParams {
            p,
            mu,
            amplitude_const,
            width_const,
        })
    }

    fn alpha(&self) -> f64 {
        2.0 / (self.p - 2.0)
    }

    /// Peak value `φ_μ(0)`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude_const * self.mu.powf(2.0 / (6.0 - self.p))
    }

    /// Inverse length scale `β` of the sech argument.
    pub fn inverse_width(&self) -> f64 {
        self.width_const * self.mu.powf((self.p - 2.0) / (6.0 - self.p))
    }

    /// Frequency `ω` in `−φ″ + ωφ = φ^{p−1}`.
    pub fn omega(&self) -> f64 {
        let s = 2.0 * self.inverse_width() / (self.p - 2.0);
        s * s
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude() * (self.alpha() * ln_sech(self.inverse_width() * x)).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let b = self.inverse_width();
        -self.alpha() * b * self.eval(x) * (b * x).tanh()
    }

    /// `E(φ_μ, ℝ)` by composite Simpson quadrature of the closed form.
    pub fn energy(&self) -> f64 {
        let a = self.amplitude();
        let b = self.inverse_width();
        let alpha = self.alpha();
        let p = self.p;
        let kin = 0.5 * a * a * alpha * alpha * b
            * even_integral(2.0 * alpha, |y| {
                let t = y.tanh();
                (2.0 * alpha * ln_sech(y)).exp() * t * t
            });
        let pot = a.powf(p) / (p * b) * even_integral(p * alpha, |y| (p * alpha * ln_sech(y)).exp());
        kin - pot
    }
}

/// `∫_ℝ f` for an even integrand decaying like `sech^decay`. The window is
/// widened until the tail bound `2^a e^{−aY}/a` drops below 1e-13.
fn even_integral<F: Fn(f64) -> f64>(decay: f64, f: F) -> f64 {
    let y_max = ((decay * std::f64::consts::LN_2 + 13.0 * std::f64::consts::LN_10 - decay.ln())
        / decay)
        .max(1.0);
    let n = 2 * ((y_max / 4e-4).ceil() as usize).max(1);
    let step = y_max / n as f64;
    let mut acc = f(0.0) + f(y_max);
    for i in 1..n {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += c * f(i as f64 * step);
    }
    2.0 * acc * step / 3.0
}

/// `E(φ_μ, ℝ)`.
pub fn soliton_energy(p: f64, mu: f64) -> Result<f64> {
    Ok(SolitonParams::new(p, mu)?.energy())
}

/// `φ_{2μ}` restricted to ℝ⁺ on a single half-line; its mass is `μ`.
pub fn half_soliton_field(g: &MetricGraph, spec: GridSpec, p: f64, mu: f64) -> Result<GraphField> {
    if g.num_edges() != 1 || g.num_half_lines() != 1 {
        return Err(Error::InvalidGraph(
            "half-soliton lives on a single half-line".into(),
        ));
    }
    let sol = SolitonParams::new(p, 2.0 * mu)?;
    GraphField::sample(g, spec, |_, x| sol.eval(x))
}

/// Soliton `φ_μ(· − center)` on the line graph (edge 0 is `x ≤ 0`, read
/// outward from the origin).
pub fn line_soliton_field(spec: GridSpec, p: f64, mu: f64, center: f64) -> Result<GraphField> {
    let sol = SolitonParams::new(p, mu)?;
    GraphField::sample(&MetricGraph::line(), spec, |e, t| {
        let x = if e == 0 { -t } else { t };
        sol.eval(x - center)
    })
}

/// Cubic smoothstep cutoff: 0 at the origin, 1 from 1 on.
pub fn cutoff(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// Member `n` of the escaping sequence: `A_n χ₊(x) φ_μ(x − n)` on the first
/// half-line of `g`, zero elsewhere, normalized to mass `μ`.
pub fn escaping_sequence(
    g: &MetricGraph,
    spec: GridSpec,
    p: f64,
    mu: f64,
    shift: f64,
) -> Result<GraphField> {
    let mesh = Arc::new(Mesh::uniform(g.clone(), spec));
    escaping_sequence_on(&mesh, p, mu, shift)
}

pub fn escaping_sequence_on(mesh: &Arc<Mesh>, p: f64, mu: f64, shift: f64) -> Result<GraphField> {
    let g = mesh.graph();
    let line: EdgeId = g
        .half_lines()
        .next()
        .ok_or_else(|| Error::InvalidGraph("escaping sequence needs a half-line".into()))?;
    if !(shift >= 0.0) {
        return Err(Error::OutOfRange(format!("shift {shift} must be nonnegative")));
    }
    let sol = SolitonParams::new(p, mu)?;
    let truncation = mesh.edge(line).span();
    let required = shift + 10.0 / sol.inverse_width();
    if truncation < required {
        return Err(Error::TruncationTooShort {
            truncation,
            required,
        });
    }
    let u = mesh.sample(|e, x| {
        if e == line {
            cutoff(x) * sol.eval(x - shift)
        } else {
            0.0
        }
    })?;
    u.rescale_mass(mu)
}

/// Shortest-path distances from `source` to every vertex, through finite
/// edges only.
pub fn vertex_distances(g: &MetricGraph, source: VertexId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.num_vertices()];
    dist[source] = 0.0;
    // Bellman–Ford; graphs here have a handful of vertices
    for _ in 0..g.num_vertices() {
        let mut changed = false;
        for e in g.edges() {
            let (Some(r), Some(l)) = (e.right(), e.length().finite()) else {
                continue;
            };
            let a = e.left();
            if dist[a] + l < dist[r] {
                dist[r] = dist[a] + l;
                changed = true;
            }
            if dist[r] + l < dist[a] {
                dist[a] = dist[r] + l;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// `φ_μ(d(x, v))` with `d` the graph distance to vertex `v`, rescaled to
/// mass `μ`: a bump centred at `v` that overlaps every edge.
pub fn vertex_bump(mesh: &Arc<Mesh>, p: f64, mu: f64, v: VertexId) -> Result<GraphField> {
    let g = mesh.graph();
    if v >= g.num_vertices() {
        return Err(Error::OutOfRange(format!("vertex {v} out of range")));
    }
    let sol = SolitonParams::new(p, mu)?;
    let dist = vertex_distances(g, v);
    let u = mesh.sample(|id, x| {
        let e = g.edge(id);
        let from_left = dist[e.left()] + x;
        let d = match (e.right(), e.length().finite()) {
            (Some(r), Some(l)) => from_left.min(dist[r] + l - x),
            _ => from_left,
        };
        if d.is_finite() {
            sol.eval(d)
        } else {
            0.0
        }
    })?;
    u.rescale_mass(mu)
}
