use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smt_core::flow::{compare, config_hash, render_table, run_flow, FlowMeta, FlowMode, FlowReport};
use smt_core::generator::generate_benchmark;
use smt_core::io::{parse_design, write_design};
use smt_core::svg::render_svg;
use smt_core::SmtError;

/// Selective-MT leakage optimization flow.
#[derive(Parser)]
#[command(name = "smtflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded benchmark design file.
    Gen {
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        tightness: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the flow in one mode and emit reports.
    Run {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the final design netlist here.
        #[arg(long)]
        out_design: Option<PathBuf>,
        /// Write the machine-readable cluster dump here.
        #[arg(long)]
        clusters: Option<PathBuf>,
    },
    /// Run all three modes and emit the normalized comparison table.
    Compare {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn exit_code_for(err: &SmtError) -> u8 {
    match err {
        SmtError::Syntax { .. }
        | SmtError::Unresolved { .. }
        | SmtError::Duplicate { .. }
        | SmtError::Format(_)
        | SmtError::Invalid(_)
        | SmtError::Parameter(_) => 2,
        SmtError::InfeasibleTiming(_) => 3,
        SmtError::InfeasibleClustering(_) => 4,
        SmtError::Io(_) => 5,
        SmtError::Characterization(_) | SmtError::Contract(_) => 2,
    }
}

fn write_file(path: &PathBuf, contents: &str) -> smt_core::Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn load_design(
    path: &PathBuf,
    config: &Option<PathBuf>,
) -> smt_core::Result<smt_core::Design> {
    let text = std::fs::read_to_string(path)?;
    let mut design = parse_design(&text)?;
    if let Some(cfg) = config {
        let cfg_text = std::fs::read_to_string(cfg)?;
        apply_config(&mut design, &cfg_text)?;
    }
    Ok(design)
}

/// Config file: a JSON object whose fields override Constraints fields.
fn apply_config(design: &mut smt_core::Design, text: &str) -> smt_core::Result<()> {
    let mut base = serde_json::to_value(&design.constraints).expect("constraints to json");
    let overlay: serde_json::Value =
        serde_json::from_str(text).map_err(|e| SmtError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let serde_json::Value::Object(fields) = overlay else {
        return Err(SmtError::Parameter(
            "config must be a JSON object of constraint overrides".into(),
        ));
    };
    let obj = base.as_object_mut().expect("constraints object");
    for (k, v) in fields {
        if !obj.contains_key(&k) {
            return Err(SmtError::Parameter(format!(
                "unknown constraint field `{k}` in config"
            )));
        }
        obj.insert(k, v);
    }
    design.constraints = serde_json::from_value(base).map_err(|e| {
        SmtError::Parameter(format!("bad constraint override: {e}"))
    })?;
    Ok(())
}

fn run() -> smt_core::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            cells,
            layers,
            seed,
            tightness,
            output,
        } => {
            let design = generate_benchmark(cells, layers, seed, tightness)?;
            write_file(&output, &write_design(&design))?;
            eprintln!(
                "wrote {} ({} cells, {} nets, t_clk {} ps)",
                output.display(),
                design.cells.len(),
                design.nets.len(),
                design.constraints.t_clk
            );
            Ok(true)
        }
        Command::Run {
            design,
            mode,
            config,
            seed,
            report,
            table,
            svg,
            out_design,
            clusters,
        } => {
            let input = load_design(&design, &config)?;
            let mode: FlowMode = mode.parse()?;
            let outcome = run_flow(&input, mode, seed)?;
            let meta = FlowMeta {
                seed: seed.unwrap_or(input.constraints.seed),
                config_hash: config_hash(&input.constraints),
                stages: outcome.stages.clone(),
            };
            let flow_report = FlowReport::new(vec![outcome.report.clone()], meta);
            if let Some(p) = report {
                write_file(&p, &flow_report.to_json())?;
            }
            if let Some(p) = table {
                write_file(&p, &render_table(&flow_report))?;
            }
            if let Some(p) = svg {
                write_file(&p, &render_svg(&outcome.design, &outcome.structure))?;
            }
            if let Some(p) = out_design {
                write_file(&p, &write_design(&outcome.design))?;
            }
            if let Some(p) = clusters {
                let mut dump =
                    serde_json::to_string_pretty(&outcome.structure).expect("cluster dump");
                dump.push('\n');
                write_file(&p, &dump)?;
            }
            print!("{}", render_table(&flow_report));
            eprintln!(
                "{}: area {:.2} um^2, leakage {:.2} nA, setup slack {} ps, hold slack {} ps",
                mode.label(),
                outcome.report.total_area,
                outcome.report.standby_leakage,
                outcome.report.worst_setup_slack,
                outcome.report.worst_hold_slack
            );
            Ok(outcome.report.timing_met)
        }
        Command::Compare {
            design,
            config,
            seed,
            report,
            table,
            svg,
        } => {
            let input = load_design(&design, &config)?;
            let (flow_report, outcomes) = compare(&input, seed)?;
            if let Some(p) = report {
                write_file(&p, &flow_report.to_json())?;
            }
            let rendered = render_table(&flow_report);
            if let Some(p) = table {
                write_file(&p, &rendered)?;
            }
            if let Some(p) = svg {
                let improved = outcomes
                    .iter()
                    .find(|o| o.report.mode == FlowMode::ImprovedSmt)
                    .expect("improved mode outcome");
                write_file(&p, &render_svg(&improved.design, &improved.structure))?;
            }
            print!("{rendered}");
            Ok(flow_report.modes.iter().all(|m| m.timing_met))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: final timing not met (report emitted)");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
