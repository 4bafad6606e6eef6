use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use twflow::bench::{self, BenchConfig, Family};
use twflow::config::parse_config;
use twflow::formats::{self, SolveSummary};
use twflow::graph::{validate_tree_decomposition, TreeDecomposition};
use twflow::mincost::{self, SolveOutcome};
use twflow::ripm::{CsvLog, IpmSettings, Mode};
use twflow::tw_approx::{self, Dinic, IpmEngine, MaxFlowEngine, TwSettings};
use twflow::Error;

/// Exit codes.
const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BAD_TD: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_NOT_CONVERGED: u8 = 5;

#[derive(Parser)]
#[command(name = "twflow", version, about = "Min-cost flow on graphs of bounded treewidth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Dinic,
    Ipm,
}

#[derive(Clone, Copy, ValueEnum)]
enum BootstrapArg {
    /// Min-fill elimination order.
    MinFill,
    /// Recursive flow-based separators.
    Separator,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ktree,
    Grid,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a DIMACS min-cost flow instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// PACE tree decomposition of the instance graph; computed when absent.
        #[arg(long)]
        td: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "min-fill")]
        bootstrap: BootstrapArg,
        /// `key = value` solver settings, applied before the other flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Per-iteration CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Flow file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximate a tree decomposition of a PACE `.gr` graph.
    TwApprox {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "dinic")]
        engine: EngineArg,
    },
    /// Solve generated instances of growing size and report a CSV.
    Bench {
        #[arg(long, value_enum, default_value = "ktree")]
        family: FamilyArg,
        /// `k` for k-trees, rows for grids.
        #[arg(long, default_value_t = 2)]
        width: usize,
        /// Comma-separated sizes: vertices for k-trees, columns for grids.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long = "big-m", default_value_t = 20)]
        big_m: i64,
        #[arg(long)]
        seed: u64,
        /// Solve the grid LP sweep through the interior point method alone.
        #[arg(long)]
        lp: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Config(_) | Error::Io(_) => EXIT_INPUT,
            Error::InvalidTreeDecomposition(_) => EXIT_BAD_TD,
            Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_FAILURE,
        };
        let message = match &e {
            Error::InvalidTreeDecomposition(v) => format!("{e} (violates {})", v.axiom()),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn in_file(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    instance: &Path,
    td_path: Option<&Path>,
    bootstrap: BootstrapArg,
    config: Option<&Path>,
    mode: Option<ModeArg>,
    seed: Option<u64>,
    log: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let inst = formats::parse_dimacs_min(&read(instance)?).map_err(|e| in_file(instance, e))?;
    let mut settings = IpmSettings::default();
    if let Some(p) = config {
        settings = parse_config(&read(p)?, settings).map_err(|e| in_file(p, e))?;
    }
    if let Some(m) = mode {
        settings.mode = match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Practical => Mode::Practical,
        };
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    let n = inst.graph.n();
    let edges: Vec<(usize, usize)> = inst.graph.edges().iter().copied().filter(|e| e.0 != e.1).collect();
    let td: TreeDecomposition = match td_path {
        Some(p) => {
            let (td, declared) = formats::parse_td(&read(p)?).map_err(|e| in_file(p, e))?;
            if declared != n {
                return Err(Failure::new(
                    EXIT_BAD_TD,
                    format!("{}: decomposition declares {declared} vertices, instance has {n}", p.display()),
                ));
            }
            validate_tree_decomposition(n, &edges, &td).map_err(|e| in_file(p, e.into()))?;
            td
        }
        None => match bootstrap {
            BootstrapArg::MinFill => tw_approx::min_fill_decomposition(n, &edges, settings.seed),
            BootstrapArg::Separator => {
                let tw = TwSettings {
                    seed: settings.seed,
                    ..TwSettings::default()
                };
                tw_approx::build_tree_decomposition(n, &edges, &mut Dinic, &tw)?
            }
        },
    };
    let outcome = match log {
        Some(p) => {
            let file = fs::File::create(p)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", p.display())))?;
            let mut csv = CsvLog::new(BufWriter::new(file));
            let outcome = mincost::solve(&inst, &td, &settings, &mut csv)?;
            let failed = csv.error.take().or_else(|| csv.into_inner().flush().err());
            if let Some(e) = failed {
                return Err(Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", p.display())));
            }
            outcome
        }
        None => mincost::solve(&inst, &td, &settings, &mut ())?,
    };
    match outcome {
        SolveOutcome::Optimal(sol) => {
            println!("cost {}", sol.cost);
            eprintln!(
                "width {} iterations {} restarts {} gap {:.3e}",
                td.width(),
                sol.stats.iterations,
                sol.stats.restarts,
                sol.stats.final_gap
            );
            if let Some(p) = out {
                let summary = SolveSummary {
                    cost: sol.cost,
                    iterations: sol.stats.iterations,
                    restarts: sol.stats.restarts,
                };
                write(Some(p), &formats::write_flow(&inst, &sol.flow, &summary))?;
            }
            Ok(())
        }
        SolveOutcome::Infeasible { cut, unrouted, .. } => {
            let members: Vec<String> = (0..n).filter(|&v| cut[v]).map(|v| (v + 1).to_string()).collect();
            println!("infeasible");
            Err(Failure::new(
                EXIT_INFEASIBLE,
                format!("{unrouted} units cannot be routed; violated cut {{{}}}", members.join(" ")),
            ))
        }
    }
}

fn cmd_tw_approx(graph: &Path, out: Option<&Path>, seed: u64, engine: EngineArg) -> Result<(), Failure> {
    let (n, edges) = formats::parse_gr(&read(graph)?).map_err(|e| in_file(graph, e))?;
    let mut dinic = Dinic;
    let mut ipm = IpmEngine::default();
    let engine: &mut dyn MaxFlowEngine = match engine {
        EngineArg::Dinic => &mut dinic,
        EngineArg::Ipm => &mut ipm,
    };
    let settings = TwSettings {
        seed,
        ..TwSettings::default()
    };
    let td = tw_approx::build_tree_decomposition(n, &edges, engine, &settings)?;
    validate_tree_decomposition(n, &edges, &td).map_err(Error::from)?;
    eprintln!("width {} bags {}", td.width(), td.bags.len());
    write(out, &formats::write_td(&td, n))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    family: FamilyArg,
    width: usize,
    sizes: Vec<usize>,
    big_m: i64,
    seed: u64,
    lp: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let settings = IpmSettings {
        seed,
        ..IpmSettings::default()
    };
    let rows = if lp {
        bench::run_lp_sweep(width.max(1), &sizes, big_m, seed, &settings)?
    } else {
        let family = match family {
            FamilyArg::Ktree => Family::KTree(width),
            FamilyArg::Grid => Family::Grid(width.max(1)),
        };
        let cfg = BenchConfig {
            family,
            sizes,
            big_m,
            seed,
            settings,
        };
        bench::run_flow_bench(&cfg)?
    };
    write(out, &bench::to_csv(&rows))?;
    match bench::fit_exponent(&rows) {
        Some(p) => eprintln!("fit: iterations ~ m^{p:.3} log(mM)"),
        None => eprintln!("fit: needs at least two sizes"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            td,
            bootstrap,
            config,
            mode,
            seed,
            log,
            out,
        } => cmd_solve(
            &instance,
            td.as_deref(),
            bootstrap,
            config.as_deref(),
            mode,
            seed,
            log.as_deref(),
            out.as_deref(),
        ),
        Command::TwApprox {
            graph,
            out,
            seed,
            engine,
        } => cmd_tw_approx(&graph, out.as_deref(), seed, engine),
        Command::Bench {
            family,
            width,
            sizes,
            big_m,
            seed,
            lp,
            out,
        } => cmd_bench(family, width, sizes, big_m, seed, lp, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
