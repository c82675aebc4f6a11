//! Command-line interface: run one synthesis, sweep a config matrix,
//! or use the normalizer / consistency checks standalone.
//!
//! Exit codes: 0 on success, 2 on synthesis failure (budget exhausted or a
//! failed check), 1 on error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netmix::config::{builtin_task, load_config, TASK_NAMES};
use netmix::engine::run_synthesis;
use netmix::experiment::{
    emit_logs, format_summary, run_experiment, write_runs_csv, write_summary_csv,
};
use netmix::graph::netlist_to_graph;
use netmix::netlist::{parse_netlist, NetName, PortDecl};
use netmix::normalize::normalize;
use netmix::registry::combined_registry;
use netmix::sampler::{check, CheckKind};

#[derive(Parser)]
#[command(name = "netmix", about = "Evolve SPICE-subset netlists into circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one synthesis from a configuration file and write its logs.
    Run {
        config: PathBuf,
        /// Output directory (default: runs/<task>_seed<seed>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a matrix of configuration files, each repeated with derived
    /// seeds, and write per-run and per-config tables.
    Sweep {
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Output directory (default: sweep)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonicalize a netlist file and print the result.
    Normalize {
        netlist: PathBuf,
        /// Interpret the file under a library task's model set and ports.
        #[arg(long)]
        task: Option<String>,
    },
    /// Run consistency checks on a netlist file.
    Check {
        netlist: PathBuf,
        /// Comma-separated check names (default: all four).
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long)]
        task: Option<String>,
    },
    /// List the built-in tasks.
    Tasks,
}

/// Infer port counts from the net names used in a file: one past the
/// highest index per class.
fn infer_ports(text: &str) -> PortDecl {
    let mut ports = PortDecl::default();
    for token in text.split_whitespace() {
        if let Ok(net) = NetName::parse(token) {
            let slot = match net.class() {
                netmix::netlist::NetClass::Input => Some(&mut ports.inputs),
                netmix::netlist::NetClass::Output => Some(&mut ports.outputs),
                netmix::netlist::NetClass::Supply => Some(&mut ports.supplies),
                _ => None,
            };
            if let (Some(slot), Some(idx)) = (slot, net.index()) {
                *slot = (*slot).max(idx + 1);
            }
        }
    }
    ports
}

fn load_netlist(
    path: &Path,
    task: &Option<String>,
) -> Result<(netmix::Netlist, netmix::ModelRegistry), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (registry, ports) = match task {
        Some(name) => {
            let task = builtin_task(name).ok_or_else(|| format!("unknown task {name:?}"))?;
            (task.registry, task.ports)
        }
        None => (combined_registry(), infer_ports(&text)),
    };
    let netlist = parse_netlist(&text, &registry, ports).map_err(|e| e.to_string())?;
    Ok((netlist, registry))
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<bool, String> {
    let cfg = load_config(config).map_err(|e| e.to_string())?;
    let report = run_synthesis(&cfg).map_err(|e| e.to_string())?;
    let dir = out.unwrap_or_else(|| {
        PathBuf::from("runs").join(format!("{}_seed{}", report.task, report.seed))
    });
    emit_logs(&report, &dir).map_err(|e| e.to_string())?;
    println!(
        "task={} seed={} success={} evaluations={} best_reward={}",
        report.task, report.seed, report.success, report.evaluations, report.best_reward
    );
    println!("logs written to {}", dir.display());
    Ok(report.success)
}

fn cmd_sweep(configs: &[PathBuf], repeats: usize, out: Option<PathBuf>) -> Result<(), String> {
    if configs.is_empty() {
        return Err("sweep needs at least one configuration file".to_string());
    }
    if repeats == 0 {
        return Err("repeats must be at least 1".to_string());
    }
    let mut matrix = Vec::with_capacity(configs.len());
    for path in configs {
        let cfg = load_config(path).map_err(|e| e.to_string())?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        matrix.push((id, cfg));
    }
    let table = run_experiment(&matrix, repeats);
    let dir = out.unwrap_or_else(|| PathBuf::from("sweep"));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    write_runs_csv(&table, &dir.join("runs.csv")).map_err(|e| e.to_string())?;
    write_summary_csv(&table, &dir.join("summary.csv")).map_err(|e| e.to_string())?;
    print!("{}", format_summary(&table));
    println!("tables written to {}", dir.display());
    Ok(())
}

fn cmd_normalize(path: &Path, task: &Option<String>) -> Result<(), String> {
    let (netlist, registry) = load_netlist(path, task)?;
    println!("{}", normalize(&netlist, &registry).serialize());
    Ok(())
}

fn cmd_check(path: &Path, names: &[String], task: &Option<String>) -> Result<bool, String> {
    let (netlist, _) = load_netlist(path, task)?;
    let kinds: Vec<CheckKind> = if names.is_empty() {
        CheckKind::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|n| n.parse::<CheckKind>())
            .collect::<Result<_, _>>()?
    };
    let g = netlist_to_graph(&netlist);
    let mut all_pass = true;
    for kind in kinds {
        let pass = check(kind, &g, &netlist.ports);
        all_pass &= pass;
        println!("{}: {}", kind.as_str(), if pass { "pass" } else { "fail" });
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.clone()),
        Command::Sweep {
            configs,
            repeats,
            out,
        } => cmd_sweep(configs, *repeats, out.clone()).map(|()| true),
        Command::Normalize { netlist, task } => cmd_normalize(netlist, task).map(|()| true),
        Command::Check {
            netlist,
            checks,
            task,
        } => cmd_check(netlist, checks, task),
        Command::Tasks => {
            for name in TASK_NAMES {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
