//! Mass-constrained minimization by normalized gradient flow.

use std::io::Write;
use std::sync::Arc;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::{GraphField, Mesh};
use crate::format::sig;
use crate::functionals::{self, EnergyReport};
use crate::graph::EdgeId;
use crate::soliton::soliton_energy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Initial (and maximal) step of the `L²` gradient step.
    pub tau0: f64,
    pub max_iters: usize,
    /// Stop once the energy moved less than this over `window` iterations.
    pub energy_tol: f64,
    pub backtrack: f64,
    pub window: usize,
    /// Distance `D` used for the escape trace; skipped when not below the
    /// truncation length.
    pub escape_distance: f64,
    /// Abort once the energy drops below this multiple of the line soliton
    /// energy.
    pub divergence_factor: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            tau0: 0.4 * 0.05 * 0.05,
            max_iters: 200_000,
            energy_tol: 1e-13,
            backtrack: 0.5,
            window: 200,
            escape_distance: 10.0,
            divergence_factor: 10.0,
        }
    }
}

impl FlowConfig {
    /// Defaults with `tau0 = 0.4 h²`.
    pub fn for_spacing(h: f64) -> Self {
        FlowConfig {
            tau0: 0.4 * h * h,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::OutOfRange(format!("flow config: {what}")));
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad("tau0 must be positive");
        }
        if self.max_iters == 0 || self.window == 0 {
            return bad("max_iters and window must be positive");
        }
        if !(self.energy_tol > 0.0) {
            return bad("energy_tol must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.escape_distance > 0.0) || !(self.divergence_factor > 0.0) {
            return bad("escape_distance and divergence_factor must be positive");
        }
        Ok(())
    }
}

/// Escape diagnostics of one half-line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeMetric {
    pub half_line: EdgeId,
    /// Mass beyond distance `D` from the origin, divided by the total mass.
    pub fraction_beyond: f64,
    /// `∫ x u² / ∫ u²` over the half-line; 0 if it carries no mass.
    pub center_of_mass: f64,
}

/// Per-half-line escape metrics at distance `d`.
pub fn escape_metrics(u: &GraphField, d: f64) -> Result<Vec<EscapeMetric>> {
    let g = u.graph();
    if g.num_half_lines() == 0 {
        return Err(Error::InvalidGraph("escape metrics need a half-line".into()));
    }
    let total = functionals::mass(u);
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    g.half_lines()
        .map(|id| {
            let grid = u.mesh().edge(id);
            let span = grid.span();
            if d >= span {
                return Err(Error::TruncationTooShort {
                    truncation: span,
                    required: d,
                });
            }
            let x = grid.coords();
            let v = u.edge_values(id);
            let w = grid.widths();
            let (mut beyond, mut m, mut mx) = (0.0, 0.0, 0.0);
            for k in 0..w.len() {
                let (a, b) = (v[k] * v[k], v[k + 1] * v[k + 1]);
                let seg = 0.5 * w[k] * (a + b);
                m += seg;
                mx += 0.5 * w[k] * (x[k] * a + x[k + 1] * b);
                if x[k] >= d {
                    beyond += seg;
                } else if x[k + 1] > d {
                    beyond += 0.5 * w[k] * b * (x[k + 1] - d) / w[k];
                }
            }
            Ok(EscapeMetric {
                half_line: id,
                fraction_beyond: beyond / total,
                center_of_mass: if m > 0.0 { mx / m } else { 0.0 },
            })
        })
        .collect()
}

fn max_escape(u: &GraphField, d: f64) -> f64 {
    escape_metrics(u, d)
        .map(|ms| ms.iter().map(|m| m.fraction_beyond).fold(0.0, f64::max))
        .unwrap_or(0.0)
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub field: GraphField,
    /// Energy of the initial field followed by every accepted iterate.
    pub energies: Vec<f64>,
    pub masses: Vec<f64>,
    /// Largest half-line escape fraction per recorded iterate (empty when
    /// the graph has no half-line long enough).
    pub escape_trace: Vec<f64>,
    pub report: EnergyReport,
    pub nu: f64,
    pub multiplier_residual: f64,
    pub escape: Vec<EscapeMetric>,
    pub converged: bool,
    pub iterations: usize,
}

/// Serializable digest of a [`FlowResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub energy: EnergyReport,
    pub nu: f64,
    pub multiplier_residual: f64,
    pub escape: Vec<EscapeMetric>,
    pub converged: bool,
    pub iterations: usize,
    pub escape_fraction_start: Option<f64>,
    pub escape_fraction_end: Option<f64>,
}

impl FlowResult {
    pub fn summary(&self) -> FlowSummary {
        FlowSummary {
            energy: self.report,
            nu: self.nu,
            multiplier_residual: self.multiplier_residual,
            escape: self.escape.clone(),
            converged: self.converged,
            iterations: self.iterations,
            escape_fraction_start: self.escape_trace.first().copied(),
            escape_fraction_end: self.escape_trace.last().copied(),
        }
    }

    /// Whether each accepted iterate lowered the energy.
    pub fn is_monotone(&self) -> bool {
        self.energies.windows(2).all(|w| w[1] < w[0])
    }

    /// Writes `iteration,energy,mass,max_escape_fraction` rows.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,energy,mass,max_escape_fraction")?;
        for (i, (e, m)) in self.energies.iter().zip(&self.masses).enumerate() {
            let esc = self.escape_trace.get(i).map_or_else(String::new, |&x| sig(x));
            writeln!(w, "{i},{},{},{esc}", sig(*e), sig(*m))?;
        }
        Ok(())
    }
}

/// Normalized gradient flow `u ← √μ (u − τ W⁻¹∇E) / ‖·‖₂` started from
/// `init`, halving `τ` until the energy strictly decreases.
///
/// Stops when the energy changes by less than `energy_tol` over `window`
/// accepted steps, when no step size down to `1e-12 τ₀` lowers the energy,
/// or after `max_iters` steps.
pub fn minimize(init: &GraphField, p: f64, mu: f64, cfg: &FlowConfig) -> Result<FlowResult> {
    check_exponent(p)?;
    cfg.validate()?;
    let floor = cfg.divergence_factor * soliton_energy(p, mu)?;
    let mesh = Arc::clone(init.mesh());
    let weights = mesh.weights();
    let track_escape = escape_metrics(init, cfg.escape_distance).is_ok();

    let mut u = init.rescale_mass(mu)?;
    let mut energy = functionals::total_energy(&mesh, u.dofs(), p);
    let mut energies = vec![energy];
    let mut masses = vec![functionals::mass(&u)];
    let mut escape_trace = Vec::new();
    if track_escape {
        escape_trace.push(max_escape(&u, cfg.escape_distance));
    }

    let n = mesh.num_dofs();
    let mut grad = vec![0.0; n];
    let mut trial = u.clone();
    let mut tau = cfg.tau0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        functionals::gradient_into(&mesh, u.dofs(), p, &mut grad);
        let accepted = loop {
            {
                let t = trial.dofs_mut();
                for i in 0..n {
                    t[i] = u.dofs()[i] - tau * grad[i] / weights[i];
                }
            }
            trial.rescale_mass_in_place(mu)?;
            let e = functionals::total_energy(&mesh, trial.dofs(), p);
            if e < energy {
                break Some(e);
            }
            tau *= cfg.backtrack;
            if tau < 1e-12 * cfg.tau0 {
                break None;
            }
        };
        let Some(e) = accepted else {
            debug!("no descent step left after {iterations} iterations");
            converged = true;
            break;
        };
        if e < floor {
            return Err(Error::Divergence { energy: e, floor });
        }
        std::mem::swap(&mut u, &mut trial);
        energy = e;
        iterations += 1;
        energies.push(e);
        masses.push(functionals::mass(&u));
        if track_escape {
            escape_trace.push(max_escape(&u, cfg.escape_distance));
        }
        tau = (tau / cfg.backtrack).min(cfg.tau0);
        if iterations >= cfg.window
            && (energies[iterations - cfg.window] - e).abs() < cfg.energy_tol
        {
            converged = true;
            break;
        }
    }

    let report = functionals::energy_unchecked(&mesh, u.dofs(), p);
    let (nu, multiplier_residual) = functionals::multiplier_fit(&u, p);
    let escape = if track_escape {
        escape_metrics(&u, cfg.escape_distance)?
    } else {
        Vec::new()
    };
    info!(
        "flow stopped after {iterations} iterations: E = {}, converged = {converged}",
        sig(report.total)
    );
    Ok(FlowResult {
        field: u,
        energies,
        masses,
        escape_trace,
        report,
        nu,
        multiplier_residual,
        escape,
        converged,
        iterations,
    })
}

/// Linear interpolation of `u` onto another mesh of the same graph; values
/// past the end of a shorter half-line are 0.
pub fn transfer(u: &GraphField, mesh: &Arc<Mesh>) -> Result<GraphField> {
    if u.graph() != mesh.graph() {
        return Err(Error::InvalidGraph("transfer needs meshes of the same graph".into()));
    }
    let nv = mesh.graph().num_vertices();
    let mut dofs = u.dofs()[..nv].to_vec();
    dofs.resize(mesh.num_dofs(), 0.0);
    for (id, target) in mesh.edges().iter().enumerate() {
        let xs = u.mesh().edge(id).coords();
        let vs = u.edge_values(id);
        let ys = target.coords();
        let mut k = 0;
        for (j, dof) in target.interior().enumerate() {
            let y = ys[j + 1];
            while k + 1 < xs.len() && xs[k + 1] < y {
                k += 1;
            }
            dofs[dof] = if k + 1 >= xs.len() {
                0.0
            } else {
                let t = (y - xs[k]) / (xs[k + 1] - xs[k]);
                vs[k] + t.clamp(0.0, 1.0) * (vs[k + 1] - vs[k])
            };
        }
    }
    GraphField::from_dofs(Arc::clone(mesh), dofs)
}
