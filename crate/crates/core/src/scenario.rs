//! Scenario files and the stage pipeline behind `nlsgraph run`.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! graph = "bridge 2 1 1"      # family string, or graph_file = "b2.graph"
//! p = 4.0
//! mu = 1.0
//! h = 0.05
//! truncation = 80.0
//! pipeline = ["minimize", "compare_soliton"]
//! init = "vertex_bump"        # vertex_bump | random | soliton | escaping
//! seed = 42
//!
//! [flow]
//! max_iters = 100000
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::field::{GraphField, GridSpec, Mesh};
use crate::flows::{minimize, FlowConfig, FlowResult, FlowSummary};
use crate::functionals::{self, EnergyReport};
use crate::graph::MetricGraph;
use crate::reductions::{bridge_reduce, unfold, ReductionTrace, TraceStep};
use crate::soliton::{escaping_sequence_on, line_soliton_field, soliton_energy, vertex_bump};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Minimize,
    BridgeReduce,
    Unfold,
    EscapingSweep,
    CompareSoliton,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Minimize => "minimize",
            Stage::BridgeReduce => "bridge_reduce",
            Stage::Unfold => "unfold",
            Stage::EscapingSweep => "escaping_sweep",
            Stage::CompareSoliton => "compare_soliton",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Soliton profile of the graph distance to `init_vertex`.
    #[default]
    VertexBump,
    /// Independent uniform values in `(-1, 1)`.
    Random,
    /// Line soliton; only on the line graph.
    Soliton,
    /// Escaping-sequence member at the first shift.
    Escaping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    pub p: f64,
    pub mu: f64,
    pub h: f64,
    pub truncation: f64,
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub init: InitKind,
    #[serde(default)]
    pub init_vertex: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_shifts")]
    pub shifts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub flow: FlowOverrides,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_shifts() -> Vec<f64> {
    vec![0.0, 4.0, 8.0, 12.0]
}

/// Flow settings that default from the grid spacing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOverrides {
    pub tau0: Option<f64>,
    pub max_iters: Option<usize>,
    pub energy_tol: Option<f64>,
    pub backtrack: Option<f64>,
    pub window: Option<usize>,
    pub escape_distance: Option<f64>,
    pub divergence_factor: Option<f64>,
}

impl FlowOverrides {
    pub fn resolve(&self, h: f64) -> FlowConfig {
        let d = FlowConfig::for_spacing(h);
        FlowConfig {
            tau0: self.tau0.unwrap_or(d.tau0),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            energy_tol: self.energy_tol.unwrap_or(d.energy_tol),
            backtrack: self.backtrack.unwrap_or(d.backtrack),
            window: self.window.unwrap_or(d.window),
            escape_distance: self.escape_distance.unwrap_or(d.escape_distance),
            divergence_factor: self.divergence_factor.unwrap_or(d.divergence_factor),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario file; a relative `graph_file` is resolved against
    /// the scenario's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut s = Self::from_toml_str(&fs::read_to_string(path)?)?;
        if let (Some(f), Some(dir)) = (&s.graph_file, path.parent()) {
            if f.is_relative() {
                s.graph_file = Some(dir.join(f));
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.is_some() == self.graph_file.is_some() {
            return Err(Error::Scenario(
                "exactly one of `graph` and `graph_file` must be given".into(),
            ));
        }
        if self.pipeline.is_empty() {
            return Err(Error::Scenario("pipeline must not be empty".into()));
        }
        check_exponent(self.p)?;
        if !(self.mu > 0.0) {
            return Err(Error::OutOfRange(format!("mass {} must be positive", self.mu)));
        }
        if self.shifts.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Scenario("shifts must be nonnegative".into()));
        }
        GridSpec::new(self.h, self.truncation)?;
        self.flow.resolve(self.h).validate()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.h, self.truncation)
    }

    pub fn load_graph(&self) -> Result<MetricGraph> {
        match (&self.graph, &self.graph_file) {
            (Some(desc), _) => MetricGraph::from_family(desc),
            (None, Some(path)) => fs::read_to_string(path)?.parse(),
            (None, None) => Err(Error::Scenario("no graph given".into())),
        }
    }
}

/// One row of an escaping sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub shift: f64,
    pub energy: f64,
    /// `energy − E(φ_μ, ℝ)`
    pub gap: f64,
    pub mass: f64,
}

/// Discrete energies of escaping-sequence members at each shift.
pub fn escaping_sweep(
    g: &MetricGraph,
    spec: GridSpec,
    p: f64,
    mu: f64,
    shifts: &[f64],
) -> Result<Vec<SweepRow>> {
    let mesh = Arc::new(Mesh::uniform(g.clone(), spec));
    let baseline = soliton_energy(p, mu)?;
    shifts
        .iter()
        .map(|&shift| {
            let u = escaping_sequence_on(&mesh, p, mu, shift)?;
            let e = functionals::energy(&u, p)?;
            Ok(SweepRow {
                shift,
                energy: e.total,
                gap: e.total - baseline,
                mass: e.mass,
            })
        })
        .collect()
}

/// `|E_h(φ_μ) − E(φ_μ, ℝ)|`: discrete energy of the sampled line soliton
/// against the exact value, at the spacing and truncation of `spec`.
pub fn soliton_discretization_error(spec: GridSpec, p: f64, mu: f64) -> Result<f64> {
    let u = line_soliton_field(spec, p, mu, 0.0)?;
    Ok((functionals::energy(&u, p)?.total - soliton_energy(p, mu)?).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageReport {
    Minimize {
        flow: FlowSummary,
    },
    BridgeReduce {
        step: TraceStep,
        lambda: Option<f64>,
        chosen: Option<u8>,
        strict: Option<bool>,
    },
    Unfold {
        step: TraceStep,
    },
    EscapingSweep {
        rows: Vec<SweepRow>,
    },
    CompareSoliton {
        energy: EnergyReport,
        baseline: f64,
        gap: f64,
        delta_h: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeTrend {
    Outward,
    Inward,
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub graph: String,
    pub baseline: f64,
    pub stages: Vec<StageReport>,
    pub trace: ReductionTrace,
    pub final_energy: Option<EnergyReport>,
    pub gap: Option<f64>,
    pub escape_trend: Option<EscapeTrend>,
}

/// Everything a run produces; `report` is what gets serialized.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub field: Option<GraphField>,
    pub flow: Option<FlowResult>,
}

fn initial_field(s: &Scenario, mesh: &Arc<Mesh>) -> Result<GraphField> {
    match s.init {
        InitKind::VertexBump => vertex_bump(mesh, s.p, s.mu, s.init_vertex),
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let nv = mesh.num_dofs();
            let dofs = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
            GraphField::from_dofs(Arc::clone(mesh), dofs)?.rescale_mass(s.mu)
        }
        InitKind::Soliton => {
            if mesh.graph() != &MetricGraph::line() {
                return Err(Error::Scenario("soliton init needs the line graph".into()));
            }
            line_soliton_field(s.grid()?, s.p, s.mu, 0.0)
        }
        InitKind::Escaping => {
            escaping_sequence_on(mesh, s.p, s.mu, s.shifts.first().copied().unwrap_or(0.0))
        }
    }
}

fn with_stage<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: stage.name().into(),
        source: Box::new(e),
    })
}

/// Runs the pipeline in order, threading the current field through the
/// stages. The field is created from `init` when a stage first needs one.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutcome> {
    s.validate()?;
    let spec = s.grid()?;
    let graph = s.load_graph()?;
    let baseline = soliton_energy(s.p, s.mu)?;
    let cfg = s.flow.resolve(s.h);
    let mesh = Arc::new(Mesh::uniform(graph.clone(), spec));

    let mut field: Option<GraphField> = None;
    let mut flow: Option<FlowResult> = None;
    let mut stages = Vec::new();
    let mut trace = ReductionTrace::default();
    let mut gap = None;

    for &stage in &s.pipeline {
        info!("stage {}", stage.name());
        let current = match field.take() {
            Some(u) => u,
            None => with_stage(stage, initial_field(s, &mesh))?,
        };
        let (next, report) = match stage {
            Stage::Minimize => {
                let res = with_stage(stage, minimize(&current, s.p, s.mu, &cfg))?;
                let summary = res.summary();
                let u = res.field.clone();
                flow = Some(res);
                (u, StageReport::Minimize { flow: summary })
            }
            Stage::BridgeReduce => {
                let red = with_stage(stage, bridge_reduce(&current, s.p))?;
                trace.push(red.step.clone());
                let c = red.comparison.as_ref();
                let report = StageReport::BridgeReduce {
                    step: red.step,
                    lambda: c.map(|c| c.lambda),
                    chosen: c.map(|c| c.chosen),
                    strict: c.map(|c| c.strict),
                };
                (red.field, report)
            }
            Stage::Unfold => {
                let line = with_stage(stage, unfold(&current))?;
                let before = with_stage(stage, functionals::energy(&current, s.p))?;
                let after = with_stage(stage, functionals::energy(&line, s.p))?;
                let step = TraceStep {
                    transform: "unfold".into(),
                    edges: (0..current.graph().num_edges()).collect(),
                    energy_before: before.total,
                    energy_after: after.total,
                    mass_before: before.mass,
                    mass_after: after.mass,
                };
                trace.push(step.clone());
                (line, StageReport::Unfold { step })
            }
            Stage::EscapingSweep => {
                let rows = with_stage(
                    stage,
                    escaping_sweep(current.graph(), spec, s.p, s.mu, &s.shifts),
                )?;
                (current, StageReport::EscapingSweep { rows })
            }
            Stage::CompareSoliton => {
                let energy = with_stage(stage, functionals::energy(&current, s.p))?;
                let delta_h = with_stage(stage, soliton_discretization_error(spec, s.p, s.mu))?;
                gap = Some(energy.total - baseline);
                let report = StageReport::CompareSoliton {
                    energy,
                    baseline,
                    gap: energy.total - baseline,
                    delta_h,
                };
                (current, report)
            }
        };
        field = Some(next);
        stages.push(report);
    }

    let final_energy = field
        .as_ref()
        .map(|u| functionals::energy(u, s.p))
        .transpose()?;
    let escape_trend = flow.as_ref().and_then(|f| {
        let (a, b) = (f.escape_trace.first()?, f.escape_trace.last()?);
        Some(if b - a > 1e-12 {
            EscapeTrend::Outward
        } else if a - b > 1e-12 {
            EscapeTrend::Inward
        } else {
            EscapeTrend::Flat
        })
    });
    let report = ScenarioReport {
        scenario: s.clone(),
        graph: graph.to_spec_string(),
        baseline,
        stages,
        trace,
        final_energy,
        gap,
        escape_trend,
    };
    Ok(ScenarioOutcome {
        report,
        field,
        flow,
    })
}

impl ScenarioOutcome {
    /// Writes `report.json`, plus `field.csv` and `trace.csv` when present.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let f = BufWriter::new(File::create(dir.join("report.json"))?);
        serde_json::to_writer_pretty(f, &self.report)?;
        if let Some(u) = &self.field {
            u.write_csv(BufWriter::new(File::create(dir.join("field.csv"))?))?;
        }
        if let Some(flow) = &self.flow {
            flow.write_trace_csv(BufWriter::new(File::create(dir.join("trace.csv"))?))?;
        }
        Ok(())
    }
}
