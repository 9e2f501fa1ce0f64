//! Acceptance suite: one PASS/FAIL line per criterion, with runtime budget.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nlsgraph::flows::transfer;
use nlsgraph::functionals::{energy, energy_gradient, kirchhoff_residual};
use nlsgraph::reductions::{comparison_transform, melt_selfloop_in_graph, unfold, EdgeFunction};
use nlsgraph::scenario::{escaping_sweep, soliton_discretization_error};
use nlsgraph::soliton::{line_soliton_field, soliton_energy, vertex_bump, SolitonParams};
use nlsgraph::{minimize, Edge, FlowConfig, FlowResult, GraphField, GridSpec, Mesh, MetricGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: f64 = 4.0;
const MU: f64 = 1.0;
const H: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_field(g: &MetricGraph, spec: GridSpec, rng: &mut ChaCha8Rng) -> GraphField {
    let mesh = Arc::new(Mesh::uniform(g.clone(), spec));
    let dofs = (0..mesh.num_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    GraphField::from_dofs(mesh, dofs).unwrap()
}

fn random_edge_function(rng: &mut ChaCha8Rng) -> EdgeFunction {
    let n = rng.gen_range(4..40);
    let widths = (0..n).map(|_| rng.gen_range(0.01..0.2)).collect();
    let values = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    EdgeFunction::new(widths, values, false).unwrap()
}

/// Least-squares `ω` and the max residual of `−φ″ + ωφ − φ^{p−1}` on a
/// uniform grid, relative to `max |φ^{p−1}|`.
fn ode_residual(p: f64, h: f64) -> f64 {
    let sol = SolitonParams::new(p, MU).unwrap();
    let half = 30.0 / sol.inverse_width();
    let n = (2.0 * half / h) as usize;
    let x: Vec<f64> = (0..=n).map(|i| -half + i as f64 * h).collect();
    let phi: Vec<f64> = x.iter().map(|&x| sol.eval(x)).collect();
    let d2: Vec<f64> = (1..n).map(|i| (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h)).collect();
    let nl: Vec<f64> = (1..n).map(|i| phi[i].powf(p - 1.0)).collect();
    let inner = &phi[1..n];
    let num: f64 = inner.iter().zip(&d2).zip(&nl).map(|((f, d), q)| f * (d + q)).sum();
    let den: f64 = inner.iter().map(|f| f * f).sum();
    let omega = num / den;
    let res = inner
        .iter()
        .zip(&d2)
        .zip(&nl)
        .map(|((f, d), q)| (-d + omega * f - q).abs())
        .fold(0.0, f64::max);
    res / nl.iter().copied().fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let e = soliton_energy(P, MU).unwrap();
    let err = (e + 1.0 / 96.0).abs();
    let residuals: Vec<f64> = [2.5, 3.0, 4.0, 5.0].iter().map(|&p| ode_residual(p, 1e-3)).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    outcome(
        err < 1e-8 && worst <= 1e-6,
        format!("|E + 1/96| = {err:.2e}, worst ODE residual {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let spec = GridSpec::new(0.1, 2.0).unwrap();
    let families = [
        ("line", MetricGraph::line()),
        ("halfline", MetricGraph::half_line()),
        ("star3", MetricGraph::star(3).unwrap()),
        ("bridge2", MetricGraph::bridge(2, &[1.0, 1.5]).unwrap()),
        ("bridge3", MetricGraph::bridge(3, &[1.0, 0.7, 1.3]).unwrap()),
        ("star2plus1", MetricGraph::star_2plus1(1.0).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for (_, g) in &families {
        for trial in 0..50 {
            let p = [3.0, 4.0, 4.5][trial % 3];
            let u = random_field(g, spec, &mut rng);
            let grad = energy_gradient(&u, p);
            let gmax = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let mesh = Arc::clone(u.mesh());
            for i in 0..grad.len() {
                let eps = 1e-6 * u.dofs()[i].abs().max(1.0);
                let mut plus = u.dofs().to_vec();
                let mut minus = plus.clone();
                plus[i] += eps;
                minus[i] -= eps;
                let ep = energy(&GraphField::from_dofs(Arc::clone(&mesh), plus).unwrap(), p).unwrap();
                let em = energy(&GraphField::from_dofs(Arc::clone(&mesh), minus).unwrap(), p).unwrap();
                let fd = (ep.total - em.total) / (2.0 * eps);
                worst = worst.max((fd - grad[i]).abs() / gmax);
            }
        }
    }
    outcome(
        worst <= 1e-5,
        format!("6 families x 50 fields, worst |fd - grad| / |grad|_inf = {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut strict, mut mass_err, mut ident_err, mut weighted_ok) = (0, 0.0_f64, 0.0_f64, true);
    let trials = 1000;
    for _ in 0..trials {
        let u1 = random_edge_function(&mut rng);
        let u2 = random_edge_function(&mut rng);
        let r = comparison_transform(&u1, &u2, P).unwrap();
        if r.strict {
            strict += 1;
        }
        mass_err = mass_err.max(rel(r.merged.mass(), u1.mass() + u2.mass()));
        let l = r.lambda;
        let (c1, c2) = (u1.stretched(1.0 + l), u2.stretched((1.0 + l) / l));
        for e in [
            rel(c1.kinetic(), u1.kinetic() / (1.0 + l)),
            rel(c1.power_integral(P), (1.0 + l) * u1.power_integral(P)),
            rel(c2.kinetic(), l * u2.kinetic() / (1.0 + l)),
            rel(c2.power_integral(P), (1.0 + l) / l * u2.power_integral(P)),
        ] {
            ident_err = ident_err.max(e);
        }
        let lhs = c1.energy(P).total + l * c2.energy(P).total;
        let rhs = (1.0 + l) * (u1.energy(P).total + u2.energy(P).total);
        weighted_ok &= lhs < rhs;
    }
    let c = EdgeFunction::uniform(1.0, vec![0.9; 21]).unwrap();
    let eq = comparison_transform(&c, &c, P).unwrap();
    let eq_err = (eq.energy_after - eq.energy_before).abs();
    outcome(
        strict == trials && weighted_ok && eq_err <= 1e-12 && mass_err <= 1e-12 && ident_err <= 1e-14,
        format!(
            "strict {strict}/{trials}, equal-constant gap {eq_err:.1e}, mass err {mass_err:.1e}, \
             scaling identity err {ident_err:.1e}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let spec = GridSpec::new(0.05, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    let mut check = |before: &GraphField, after: &GraphField| {
        let (a, b) = (energy(before, P).unwrap(), energy(after, P).unwrap());
        let scale = a.kinetic.max(a.potential);
        worst = worst.max((a.total - b.total).abs() / scale).max(rel(b.mass, a.mass));
    };
    for n in [1, 3, 5] {
        let lengths: Vec<f64> = (0..n).map(|k| 0.5 + 0.3 * k as f64).collect();
        let g = MetricGraph::bridge(n, &lengths).unwrap();
        for _ in 0..100 {
            let u = random_field(&g, spec, &mut rng);
            check(&u, &unfold(&u).unwrap());
        }
    }
    let tadpole = MetricGraph::new(1, vec![Edge::finite(0, 0, 2.0).unwrap(), Edge::half_line(0)]).unwrap();
    let e3 = MetricGraph::exceptional_e3([1.0, 1.5, 2.0]).unwrap();
    for (g, lp, tail) in [(&tadpole, 0, 1), (&e3, 4, 2)] {
        for _ in 0..100 {
            // the shared vertex DOF gives the loop equal end values
            let u = random_field(g, spec, &mut rng);
            let (w, _) = melt_selfloop_in_graph(&u, lp, tail, P).unwrap();
            check(&u, &w);
        }
    }
    outcome(
        worst <= 1e-12,
        format!("unfold on B1/B3/B5 and self-loop melting, worst relative drift {worst:.1e}"),
    )
}

fn flow_invariants(res: &FlowResult) -> (bool, f64) {
    let mass_err = res.masses.iter().map(|m| (m - MU).abs()).fold(0.0, f64::max);
    (res.is_monotone(), mass_err)
}

struct FlowChecks {
    monotone: bool,
    mass_err: f64,
}

impl FlowChecks {
    fn new() -> Self {
        FlowChecks {
            monotone: true,
            mass_err: 0.0,
        }
    }

    fn add(&mut self, res: &FlowResult) {
        let (m, e) = flow_invariants(res);
        self.monotone &= m;
        self.mass_err = self.mass_err.max(e);
    }
}

fn criterion_5(checks: &mut FlowChecks) -> Outcome {
    let g = MetricGraph::bridge(2, &[1.0, 1.0]).unwrap();
    let baseline = soliton_energy(P, MU).unwrap();
    let mut prev: Option<GraphField> = None;
    let mut energies = Vec::new();
    let mut delta_h = 0.0;
    let mut escape = (0.0, 0.0);
    for l in [20.0, 40.0, 80.0] {
        let spec = GridSpec::new(H, l).unwrap();
        delta_h = soliton_discretization_error(spec, P, MU).unwrap();
        let mesh = Arc::new(Mesh::uniform(g.clone(), spec));
        let init = match &prev {
            None => vertex_bump(&mesh, P, MU, 0).unwrap(),
            Some(u) => transfer(u, &mesh).unwrap(),
        };
        let res = minimize(&init, P, MU, &FlowConfig::for_spacing(H)).unwrap();
        checks.add(&res);
        energies.push(res.report.total);
        if l == 80.0 {
            escape = (res.escape_trace[0], *res.escape_trace.last().unwrap());
        }
        prev = Some(res.field);
    }
    let above = energies.iter().all(|&e| e > baseline - delta_h);
    let monotone = energies.windows(2).all(|w| w[1] <= w[0]);
    let gap80 = energies[2] - baseline;
    outcome(
        above && monotone && gap80 < 5e-3 && escape.1 > escape.0,
        format!(
            "E_min(20,40,80) - baseline = {:.3e}, {:.3e}, {:.3e}; delta_h {delta_h:.2e}; \
             escape beyond 10: {:.6e} -> {:.6e}",
            energies[0] - baseline,
            energies[1] - baseline,
            gap80,
            escape.0,
            escape.1
        ),
    )
}

fn criterion_6(checks: &mut FlowChecks) -> Outcome {
    let g = MetricGraph::star_2plus1(1.0).unwrap();
    let spec = GridSpec::new(H, 40.0).unwrap();
    let baseline = soliton_energy(P, MU).unwrap();
    let delta_h = soliton_discretization_error(spec, P, MU).unwrap();
    let mesh = Arc::new(Mesh::uniform(g, spec));
    let init = vertex_bump(&mesh, P, MU, 0).unwrap();
    let res = minimize(&init, P, MU, &FlowConfig::for_spacing(H)).unwrap();
    checks.add(&res);
    let below = baseline - res.report.total;
    let kirchhoff = kirchhoff_residual(&res.field).unwrap().residuals[0];
    outcome(
        below > 3.0 * delta_h && kirchhoff <= 10.0 * H * H,
        format!(
            "baseline - E_min = {below:.3e} vs 3 delta_h = {:.2e}; vertex Kirchhoff residual {kirchhoff:.2e}",
            3.0 * delta_h
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = MetricGraph::star(3).unwrap();
    let spec = GridSpec::new(H, 60.0).unwrap();
    let rows = escaping_sweep(&g, spec, P, MU, &[0.0, 4.0, 8.0, 12.0]).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let ok = gaps.iter().all(|&x| x > 0.0)
        && gaps.windows(2).all(|w| w[1] < w[0])
        && *gaps.last().unwrap() < 1e-4;
    outcome(
        ok,
        format!(
            "gaps at shifts 0,4,8,12: {}",
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn criterion_8(checks: &FlowChecks) -> Outcome {
    let spec = GridSpec::new(H, 80.0).unwrap();
    let init = line_soliton_field(spec, P, MU, 0.0).unwrap();
    let res = minimize(&init, P, MU, &FlowConfig::for_spacing(H)).unwrap();
    let (monotone, mass_err) = flow_invariants(&res);
    let monotone = monotone && checks.monotone;
    let mass_err = mass_err.max(checks.mass_err);
    let line_err = (res.report.total + 1.0 / 96.0).abs();
    outcome(
        monotone && mass_err <= 1e-10 && res.converged && res.multiplier_residual <= 1e-2,
        format!(
            "monotone {monotone}, mass err {mass_err:.1e}, line multiplier residual {:.2e}, \
             |E_line + 1/96| {line_err:.2e}",
            res.multiplier_residual
        ),
    )
}

fn criterion_9() -> Outcome {
    let hs = [0.1, 0.05, 0.025];
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| soliton_discretization_error(GridSpec::new(h, 80.0).unwrap(), P, MU).unwrap())
        .collect();
    // least-squares slope of log err against log h
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let order = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(
        order >= 1.9,
        format!(
            "errors {:.3e}, {:.3e}, {:.3e}; fitted order {order:.3}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn run(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let pass = o.pass && elapsed < budget;
    println!(
        "criterion {n} ({name}): {} in {:.2}s of {}s budget; {}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        o.detail
    );
    pass
}

fn main() {
    let mut checks = FlowChecks::new();
    let results = [
        run(1, "soliton oracle", Duration::from_secs(1), criterion_1),
        run(2, "gradient check", Duration::from_secs(30), criterion_2),
        run(3, "comparison transform", Duration::from_secs(10), criterion_3),
        run(4, "melting and unfolding", Duration::from_secs(10), criterion_4),
        run(5, "bridge graph infimum", Duration::from_secs(300), || criterion_5(&mut checks)),
        run(6, "attained ground state", Duration::from_secs(120), || criterion_6(&mut checks)),
        run(7, "escaping sweep", Duration::from_secs(30), criterion_7),
        run(8, "flow invariants", Duration::from_secs(300), || criterion_8(&checks)),
        run(9, "mesh convergence", Duration::from_secs(10), criterion_9),
    ];
    let failed: Vec<usize> = (1..=9).filter(|&i| !results[i - 1]).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
