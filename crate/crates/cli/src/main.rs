use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use surgetrace::bench::{aggregate, run_matrix, write_reports, Aggregate, BenchConfig, CaseResult};
use surgetrace::dag::GateDag;
use surgetrace::generator::{schedule_and_route_with, ScheduleOptions};
use surgetrace::layout::{build_layout, Layout, LayoutKind};
use surgetrace::matcher::{detect_subroutines, MatchGraph, SiteRule};
use surgetrace::pipeline::{recover, RecoverError, RecoverOptions, RecoverStatus};
use surgetrace::qasm::parse_qasm;
use surgetrace::reconstruct::placed_truth_dag;
use surgetrace::synth::{corpus_source, pattern_library, perturbations, Recipe, RECIPES};
use surgetrace::trace::{downgrade, Trace, TraceLevel};

const EXIT_ODD_ENDPOINTS: u8 = 2;
const EXIT_UNRESOLVABLE: u8 = 3;
const EXIT_INCOMPLETE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "surgetrace",
    version,
    about = "Generate and analyse lattice-surgery access traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route a QASM circuit and write its ground-truth and observed traces.
    Trace {
        qasm: PathBuf,
        #[arg(long, default_value = "compact")]
        layout: LayoutKind,
        /// Use this layout JSON instead of building one sized to the circuit.
        #[arg(long)]
        layout_file: Option<PathBuf>,
        /// Level of the observed trace written to `trace.json`.
        #[arg(long, default_value = "1")]
        level: Level,
        /// Shuffle the gate order inside each layer with this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover frames, path solutions and the gate DAG from a trace.
    ///
    /// Exit status: 0 success, 2 odd endpoint count, 3 unresolvable frame,
    /// 4 enumeration budget exhausted, 1 any other error.
    Recover {
        trace: PathBuf,
        /// Time limit for each ambiguous component's enumeration.
        #[arg(long)]
        timeout_secs: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Look for library subroutines in a reconstructed DAG.
    Match {
        dag: PathBuf,
        /// Directory of `.qasm` patterns; defaults to the bundled corpus.
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, default_value_t = 3600.0)]
        timeout_secs: f64,
        #[arg(long, default_value = "consistent")]
        sites: Sites,
        /// Directory for `matches.json`; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose corpus subroutines into benchmark programs.
    Synth {
        /// A recipe name (`mix_1` … `mix_20`) or comma-separated corpus entries.
        #[arg(long)]
        recipe: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        perturbations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the recipe × perturbation × layout matrix.
    Bench {
        /// Comma-separated recipe names; all recipes when absent.
        #[arg(long, value_delimiter = ',')]
        recipes: Vec<String>,
        #[arg(long, default_value_t = 5)]
        perturbations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "layout", value_delimiter = ',')]
        layouts: Vec<LayoutKind>,
        /// Per-pattern matching timeout.
        #[arg(long, default_value_t = 60.0)]
        timeout_secs: f64,
        #[arg(long, default_value = "consistent")]
        sites: Sites,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise a bench directory's `cases.json`.
    Report { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    #[value(name = "1")]
    L1,
    #[value(name = "2")]
    L2,
    #[value(name = "3")]
    L3,
}

impl From<Level> for TraceLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::L1 => TraceLevel::L1,
            Level::L2 => TraceLevel::L2,
            Level::L3 => TraceLevel::L3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sites {
    Structural,
    Exact,
    Consistent,
}

impl From<Sites> for SiteRule {
    fn from(s: Sites) -> Self {
        match s {
            Sites::Structural => SiteRule::Structural,
            Sites::Exact => SiteRule::Exact,
            Sites::Consistent => SiteRule::Consistent,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Trace {
            qasm,
            layout,
            layout_file,
            level,
            seed,
            out,
        } => cmd_trace(
            &qasm,
            layout,
            layout_file.as_deref(),
            level.into(),
            seed,
            &out,
        )?,
        Command::Recover {
            trace,
            timeout_secs,
            out,
        } => return cmd_recover(&trace, timeout_secs, &out),
        Command::Match {
            dag,
            library,
            timeout_secs,
            sites,
            out,
        } => cmd_match(
            &dag,
            library.as_deref(),
            timeout_secs,
            sites.into(),
            out.as_deref(),
        )?,
        Command::Synth {
            recipe,
            seed,
            perturbations,
            out,
        } => cmd_synth(&recipe, seed, perturbations, &out)?,
        Command::Bench {
            recipes,
            perturbations,
            seed,
            layouts,
            timeout_secs,
            sites,
            out,
        } => cmd_bench(
            &recipes,
            perturbations,
            seed,
            layouts,
            timeout_secs,
            sites.into(),
            &out,
        )?,
        Command::Report { dir } => cmd_report(&dir)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn secs(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid timeout {s}"))
}

fn cmd_trace(
    qasm: &Path,
    kind: LayoutKind,
    layout_file: Option<&Path>,
    level: TraceLevel,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let circuit =
        parse_qasm(&read(qasm)?).with_context(|| format!("parsing {}", qasm.display()))?;
    let layout = match layout_file {
        Some(path) => Layout::from_json(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => build_layout(kind, circuit.n_qubits.max(2))?,
    };
    let options = ScheduleOptions {
        shuffle_seed: seed,
        ..Default::default()
    };
    let routed = schedule_and_route_with(&circuit, &layout, &options)
        .with_context(|| format!("routing {} on {} layout", qasm.display(), layout.kind))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(out, "layout.json", layout.to_json()?)?;
    write(out, "trace_l3.json", routed.trace.to_json())?;
    write(
        out,
        "trace_l1.json",
        downgrade(&routed.trace, TraceLevel::L1)?.to_json(),
    )?;
    write(
        out,
        "trace.json",
        downgrade(&routed.trace, level)?.to_json(),
    )?;
    write(out, "steps.json", serde_json::to_string(&routed.steps)?)?;
    write(
        out,
        "truth_dag.json",
        placed_truth_dag(&circuit, &layout, &routed).to_json()?,
    )?;
    println!(
        "{} frames on a {}x{} {} grid",
        routed.trace.len(),
        layout.rows,
        layout.cols,
        layout.kind
    );
    Ok(())
}

fn cmd_recover(path: &Path, timeout_secs: Option<f64>, out: &Path) -> Result<ExitCode> {
    let trace =
        Trace::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let options = RecoverOptions::with_dfs_timeout(timeout_secs.map(secs).transpose()?);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let output = match recover(&trace, &options) {
        Ok(o) => o,
        Err(RecoverError::OddEndpoints {
            frame,
            component,
            count,
        }) => {
            let report = serde_json::json!({
                "status": "odd_endpoints",
                "endpoint_pairing_success": false,
                "frame": frame,
                "component": component,
                "endpoints": count,
            });
            write(out, "metrics.json", serde_json::to_string_pretty(&report)?)?;
            eprintln!(
                "odd ambiguity error: frame {frame}, component {component} has {count} endpoints"
            );
            return Ok(ExitCode::from(EXIT_ODD_ENDPOINTS));
        }
        Err(e) => return Err(e).with_context(|| format!("recovering {}", path.display())),
    };
    write(
        out,
        "recovered_l3.json",
        output.recovery.to_trace().to_json(),
    )?;
    write(out, "components.json", output.recovery.components_json()?)?;
    write(out, "solutions.json", output.solutions_json()?)?;
    write(out, "dag.json", output.reconstruction.dag.to_json()?)?;
    let metrics = output.metrics();
    write(out, "metrics.json", serde_json::to_string_pretty(&metrics)?)?;
    println!(
        "{} frames, {:.1}% ambiguous, DAG with {} nodes and {} edges",
        metrics.frames, metrics.ambiguity_pct, metrics.dag_nodes, metrics.dag_edges
    );
    Ok(match metrics.status {
        RecoverStatus::Success => ExitCode::SUCCESS,
        RecoverStatus::UnresolvableFrame => {
            for u in &metrics.unresolvable {
                eprintln!(
                    "warning: frame {} skipped, component {} has no valid cover",
                    u.frame, u.component
                );
            }
            ExitCode::from(EXIT_UNRESOLVABLE)
        }
        RecoverStatus::Incomplete => {
            eprintln!("warning: some enumeration ran out of time; alternatives may be missing");
            ExitCode::from(EXIT_INCOMPLETE)
        }
    })
}

fn load_library(dir: Option<&Path>) -> Result<Vec<(String, MatchGraph)>> {
    let Some(dir) = dir else {
        return Ok(pattern_library());
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .qasm files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let circuit =
                parse_qasm(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
            Ok((name, MatchGraph::from_circuit(&circuit)))
        })
        .collect()
}

fn cmd_match(
    dag: &Path,
    library: Option<&Path>,
    timeout_secs: f64,
    sites: SiteRule,
    out: Option<&Path>,
) -> Result<()> {
    let target = GateDag::from_json(&read(dag)?)
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("parsing {}", dag.display()))?;
    let library = load_library(library)?;
    let report = detect_subroutines(
        &library,
        &MatchGraph::from_gate_dag(&target),
        Some(secs(timeout_secs)?),
        sites,
    );
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(dir, "matches.json", json)?;
            for r in &report {
                println!(
                    "{:<20} {:?} ({:.1} ms)",
                    r.subroutine, r.status, r.elapsed_ms
                );
            }
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_synth(recipe: &str, seed: u64, count: usize, out: &Path) -> Result<()> {
    let (label, sources) = match Recipe::by_name(recipe) {
        Some(r) => (r.name.to_string(), r.sources()),
        None => {
            let sources = recipe
                .split(',')
                .map(|name| {
                    let src = corpus_source(name.trim()).with_context(|| {
                        format!("`{name}` is neither a recipe nor a corpus entry")
                    })?;
                    Ok((name.trim().to_string(), src.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            (
                sources
                    .iter()
                    .map(|(n, _)| n.as_str())
                    .collect::<Vec<_>>()
                    .join("+"),
                sources,
            )
        }
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for program in perturbations(&sources, seed, count)? {
        let stem = format!("{label}_s{}", program.record.seed);
        write(out, &format!("{stem}.qasm"), program.qasm())?;
        write(out, &format!("{stem}.json"), program.record.to_json()?)?;
        println!(
            "{stem}: {} qubits, {} gates",
            program.circuit.n_qubits,
            program.circuit.gates.len()
        );
    }
    Ok(())
}

fn cmd_bench(
    recipes: &[String],
    perturbations: usize,
    seed: u64,
    layouts: Vec<LayoutKind>,
    timeout_secs: f64,
    sites: SiteRule,
    out: &Path,
) -> Result<()> {
    let recipes = if recipes.is_empty() {
        RECIPES.iter().collect()
    } else {
        recipes
            .iter()
            .map(|n| Recipe::by_name(n).with_context(|| format!("unknown recipe `{n}`")))
            .collect::<Result<Vec<_>>>()?
    };
    let config = BenchConfig {
        recipes,
        perturbations,
        base_seed: seed,
        layouts: if layouts.is_empty() {
            LayoutKind::STANDARD.to_vec()
        } else {
            layouts
        },
        match_timeout: Some(secs(timeout_secs)?),
        sites,
        ..BenchConfig::default()
    };
    let cases = run_matrix(&config);
    let agg = aggregate(&cases, &config.curve_ms);
    write_reports(out, &cases, &agg)
        .with_context(|| format!("writing reports to {}", out.display()))?;
    print_summary(&agg);
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let path = dir.join("cases.json");
    let cases: Vec<CaseResult> = serde_json::from_str(&read(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let agg = aggregate(&cases, &BenchConfig::default().curve_ms);
    write(dir, "aggregate.json", serde_json::to_string_pretty(&agg)?)?;
    print_summary(&agg);
    Ok(())
}

fn print_summary(agg: &Aggregate) {
    println!(
        "{:<13} {:>5} {:>8} {:>9} {:>9} {:>4} {:>8} {:>9} {:>9}",
        "layout",
        "cases",
        "pairing",
        "detected",
        "given DAG",
        "FP",
        "timeouts",
        "amb med %",
        "avg nodes"
    );
    for (kind, s) in &agg.layouts {
        println!(
            "{:<13} {:>5} {:>7.1}% {:>8.1}% {:>8.1}% {:>4} {:>8} {:>9.1} {:>9.1}",
            kind.to_string(),
            s.cases,
            100.0 * s.pairing_success_rate,
            100.0 * s.detection_rate,
            100.0 * s.detection_rate_given_dag,
            s.false_positives,
            s.match_timeouts,
            s.median_ambiguity_pct,
            s.avg_dag_nodes,
        );
    }
}
