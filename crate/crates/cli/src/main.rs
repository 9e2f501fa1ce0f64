use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nlsgraph::format::sig;
use nlsgraph::scenario::{run_scenario, Scenario, StageReport};
use nlsgraph::soliton::SolitonParams;
use nlsgraph::MetricGraph;

#[derive(Parser)]
#[command(name = "nlsgraph", version, about = "NLS ground states on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its report.
    Run {
        scenario: PathBuf,
        /// RNG seed for random initial fields.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json, trace.csv and field.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Grid spacing override.
        #[arg(long)]
        h: Option<f64>,
        /// Half-line truncation override.
        #[arg(long = "L", value_name = "L")]
        truncation: Option<f64>,
    },
    /// Graph-spec utilities.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Print soliton constants and energy.
    Soliton { p: f64, mu: f64 },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Validate a graph spec and report Euler unfoldability.
    Check { spec: PathBuf },
}

fn run(
    path: PathBuf,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    h: Option<f64>,
    truncation: Option<f64>,
) -> Result<()> {
    let mut s = Scenario::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(h) = h {
        s.h = h;
    }
    if let Some(l) = truncation {
        s.truncation = l;
    }
    let outcome = run_scenario(&s)?;
    let r = &outcome.report;
    println!("baseline {}", sig(r.baseline));
    for stage in &r.stages {
        match stage {
            StageReport::Minimize { flow } => println!(
                "minimize energy {} iterations {} converged {} nu {}",
                sig(flow.energy.total),
                flow.iterations,
                flow.converged,
                sig(flow.nu)
            ),
            StageReport::BridgeReduce { step, .. } | StageReport::Unfold { step } => println!(
                "{} energy {} -> {} mass {} -> {}",
                step.transform,
                sig(step.energy_before),
                sig(step.energy_after),
                sig(step.mass_before),
                sig(step.mass_after)
            ),
            StageReport::EscapingSweep { rows } => {
                for row in rows {
                    println!(
                        "escaping shift {} energy {} gap {} mass {}",
                        sig(row.shift),
                        sig(row.energy),
                        sig(row.gap),
                        sig(row.mass)
                    );
                }
            }
            StageReport::CompareSoliton {
                energy, gap, delta_h, ..
            } => println!(
                "compare_soliton energy {} gap {} delta_h {}",
                sig(energy.total),
                sig(*gap),
                sig(*delta_h)
            ),
        }
    }
    if let Some(dir) = out_dir.or_else(|| s.output.clone()) {
        outcome
            .write_to(&dir)
            .with_context(|| format!("writing outputs to {}", dir.display()))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn graph_check(path: PathBuf) -> Result<()> {
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let g: MetricGraph = text.parse()?;
    println!(
        "vertices {} edges {} half_lines {}",
        g.num_vertices(),
        g.num_edges(),
        g.num_half_lines()
    );
    println!(
        "degrees {}",
        g.degrees().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
    );
    match g.find_euler_path() {
        Ok(path) => {
            let steps: Vec<String> = path
                .steps()
                .iter()
                .map(|s| format!("{}{}", s.edge, if s.reversed { "r" } else { "" }))
                .collect();
            println!("euler_unfoldable true");
            println!("path {}", steps.join(" "));
        }
        Err(_) => println!("euler_unfoldable false"),
    }
    Ok(())
}

fn soliton(p: f64, mu: f64) -> Result<()> {
    let s = SolitonParams::new(p, mu)?;
    println!("C_p {}", sig(s.amplitude_const));
    println!("c_p {}", sig(s.width_const));
    println!("amplitude {}", sig(s.amplitude()));
    println!("inverse_width {}", sig(s.inverse_width()));
    println!("omega {}", sig(s.omega()));
    println!("energy {}", sig(s.energy()));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            out_dir,
            h,
            truncation,
        } => run(scenario, seed, out_dir, h, truncation),
        Command::Graph {
            command: GraphCommand::Check { spec },
        } => graph_check(spec),
        Command::Soliton { p, mu } => soliton(p, mu),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
