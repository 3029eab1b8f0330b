use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// `println!` that exits quietly when the reader closes the pipe.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($t)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            panic!("stdout: {e}");
        }
    }};
}

use failover_core::domains::{enumerate_failure_scenarios, load_placement_file, residual_capacity, FailureScenario};
use failover_core::experiment::{emit_report, max_reduction, run_scenario, QueueModel, ReportFormat};
use failover_core::flows::FlowSet;
use failover_core::geo::{load_topology_file, AltPathRule, NodeId, PathMetric};
use failover_core::oscm::{build_instance, validate, OscmInstance, Solution};
use failover_core::protocol::{parse_script, replay};
use failover_core::solvers::{solve, solve_retroflow_traced, Algorithm, Outcome, SolverBudget};
use failover_core::synthetic::{gap_special_instance, random_instance, QuotaChoice, SyntheticParams};
use failover_core::world::{Config, ControlDelay, LoadSource, World};
use failover_core::{fixtures, Error};

#[derive(Parser)]
#[command(name = "failover", version, about = "Offline-switch recovery after SDN controller failures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run failure scenarios and write a report
    Run(RunArgs),
    /// Check a solution against an instance
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// List failure scenarios
    Enumerate {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, default_value = "1")]
        failures: String,
    },
    /// Replay a mode-change event script
    ProtocolTrace {
        /// Script file; the bundled example when omitted
        script: Option<PathBuf>,
    },
    /// Write the instance of one failure scenario as JSON
    Instance {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long)]
        failures: String,
        #[arg(long, default_value_t = 1.0)]
        q_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file and write the solution as JSON
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "exact")]
        algorithm: String,
        /// Print the greedy step log to stderr
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random instance as JSON
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One private flow per switch, every flow required
        #[arg(long)]
        gap: bool,
        #[arg(long, default_value = "half")]
        quota: String,
    },
    /// Print per-switch loads, residual abilities and fixture deltas
    Inspect {
        #[command(flatten)]
        world: WorldArgs,
    },
}

#[derive(Args)]
struct WorldArgs {
    /// Topology TOML; the bundled AttMpls network when omitted
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Placement TOML; the bundled six-controller placement when omitted
    #[arg(long)]
    placement: Option<PathBuf>,
    /// Explicit flows CSV (flow_id,src,dst,path); all node pairs when omitted
    #[arg(long)]
    flows: Option<PathBuf>,
    #[arg(long, default_value = "delay")]
    path_metric: String,
    #[arg(long, default_value = "edge_disjoint")]
    alt_path: String,
    #[arg(long, default_value = "ordered")]
    flow_pairs: String,
    #[arg(long, default_value = "routed")]
    control_delay: String,
    #[arg(long, default_value = "auto")]
    loads: String,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = SolverBudget::default().max_nodes_explored)]
    max_nodes: u64,
    #[arg(long, default_value_t = SolverBudget::default().time_limit_ms)]
    time_limit_ms: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Failure count K, or explicit sets such as C20+C22,C6
    #[arg(long, default_value = "1")]
    failures: String,
    #[arg(long, default_value_t = 1.0)]
    q_fraction: f64,
    #[arg(long, default_value = "exact,retroflow,nearest")]
    algorithms: String,
    #[arg(long, default_value_t = failover_core::experiment::DEFAULT_PENALTY_MS)]
    queue_penalty: f64,
    /// Disable the queueing penalty
    #[arg(long)]
    no_queue: bool,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

enum Failure {
    Input(Error),
    Infeasible,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Run(args) => run(args),
        Command::Validate { instance, solution } => {
            let inst = OscmInstance::from_json(&read(&instance)?)?;
            let sol = Solution::from_json(&read(&solution)?)?;
            let report = validate(&inst, &sol);
            out!("{report}");
            if report.feasible() {
                Ok(())
            } else {
                Err(Failure::Infeasible)
            }
        }
        Command::Enumerate { world, failures } => {
            let w = build_world(&world)?;
            for s in scenarios(&w, &failures)? {
                let offline: Vec<String> = s.offline_switches(w.placement()).iter().map(ToString::to_string).collect();
                out!("{s}\toffline={}", offline.join(","));
            }
            Ok(())
        }
        Command::ProtocolTrace { script } => {
            let text = match script {
                Some(p) => read(&p)?,
                None => fixtures::FAILOVER_SCRIPT.to_string(),
            };
            let script = parse_script(&text)?;
            let (end, log) = replay(&script);
            for line in log {
                out!("{line}");
            }
            out!("final: mode={:?} master={}", end.mode, end.master.map_or("none".into(), |m| m.to_string()));
            Ok(())
        }
        Command::Instance {
            world,
            failures,
            q_fraction,
            out,
        } => {
            let w = build_world(&world)?;
            let list = scenarios(&w, &failures)?;
            let [s] = list.as_slice() else {
                return Err(Error::InvalidArgument("exactly one scenario expected".into()).into());
            };
            let inst = build_instance(&w, s, q_fraction)?;
            write_out(out.as_deref(), &(inst.to_json() + "\n"))
        }
        Command::Solve {
            instance,
            algorithm,
            trace,
            budget,
            out,
        } => {
            let inst = OscmInstance::from_json(&read(&instance)?)?;
            let alg: Algorithm = algorithm.parse()?;
            if trace && alg == Algorithm::Retroflow {
                eprintln!("{}", solve_retroflow_traced(&inst).1);
            }
            match solve(alg, &inst, budget_of(&budget)?)? {
                Outcome::Infeasible => {
                    eprintln!("infeasible");
                    Err(Failure::Infeasible)
                }
                Outcome::Solved { solution, proven } => {
                    if alg == Algorithm::Exact && !proven {
                        eprintln!("budget exhausted; solution not proven optimal");
                    }
                    write_out(out.as_deref(), &(solution.to_json() + "\n"))
                }
            }
        }
        Command::Synth { seed, gap, quota } => {
            let inst = if gap {
                gap_special_instance(seed, 7, 3)
            } else {
                let q = match quota.as_str() {
                    "zero" => QuotaChoice::Zero,
                    "half" => QuotaChoice::Half,
                    "all" => QuotaChoice::All,
                    other => return Err(Error::InvalidArgument(format!("unknown quota '{other}'")).into()),
                };
                random_instance(seed, SyntheticParams::default(), q)
            };
            out!("{}", inst.to_json());
            Ok(())
        }
        Command::Inspect { world } => {
            let w = build_world(&world)?;
            out!("switch,domain,load,computed_load");
            for s in w.topology().node_ids() {
                out!(
                    "{s},{},{},{}",
                    w.placement().domain_of(s)?,
                    w.loads().get(s)?,
                    w.computed_loads().get(s)?
                );
            }
            out!();
            out!("controller,capacity,own_load,residual");
            for c in w.placement().controllers() {
                let other = w.placement().controller_ids().find(|&o| o != c.id);
                let residual = match other {
                    Some(o) => residual_capacity(w.placement(), w.loads(), &FailureScenario::new(w.placement(), [o])?)?
                        .get(c.id)
                        .map_or("-".to_string(), |r| r.to_string()),
                    None => "-".to_string(),
                };
                let own = failover_core::domains::domain_load(c, w.loads())?;
                out!("{},{},{own},{residual}", c.id, c.capacity);
            }
            let deltas = w.load_deltas();
            if !deltas.is_empty() {
                eprintln!(
                    "{} switches differ between fixture and computed loads (totals {} vs {})",
                    deltas.len(),
                    w.loads().total(),
                    w.computed_loads().total()
                );
            }
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> CliResult {
    let w = build_world(&args.world)?;
    let list = scenarios(&w, &args.failures)?;
    let algorithms = args
        .algorithms
        .split(',')
        .map(|a| a.trim().parse())
        .collect::<Result<Vec<Algorithm>, _>>()?;
    let format: ReportFormat = args.format.parse()?;
    let qm = if args.no_queue {
        QueueModel::disabled()
    } else {
        QueueModel::new(args.queue_penalty)?
    };
    let budget = budget_of(&args.budget)?;
    let reports = list
        .iter()
        .map(|s| run_scenario(&w, s, args.q_fraction, &algorithms, qm, budget))
        .collect::<Result<Vec<_>, _>>()?;
    write_out(args.out.as_deref(), &emit_report(&reports, format)?)?;
    for alg in [Algorithm::Exact, Algorithm::Retroflow] {
        if let Some(r) = max_reduction(&reports, alg) {
            eprintln!(
                "max overhead reduction of {alg} vs nearest: {:.1}% ({})",
                100.0 * r.reduction,
                r.scenario
            );
        }
    }
    let any_feasible = reports.iter().flat_map(|r| &r.algorithms).any(|a| a.feasible);
    if any_feasible {
        Ok(())
    } else {
        Err(Failure::Infeasible)
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| {
            Error::Io {
                path: p.display().to_string(),
                source: e,
            }
            .into()
        }),
        None => {
            use std::io::Write;
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
                r => r.map_err(|e| {
                    Error::Io {
                        path: "<stdout>".into(),
                        source: e,
                    }
                    .into()
                }),
            }
        }
    }
}

fn budget_of(b: &BudgetArgs) -> Result<SolverBudget, Error> {
    SolverBudget::new(b.max_nodes, b.time_limit_ms)
}

fn build_world(a: &WorldArgs) -> Result<World, Error> {
    let config = Config {
        path_metric: a.path_metric.parse::<PathMetric>()?,
        alt_path: a.alt_path.parse::<AltPathRule>()?,
        flow_pairs: a.flow_pairs.parse()?,
        control_delay: a.control_delay.parse::<ControlDelay>()?,
        loads: a.loads.parse::<LoadSource>()?,
    };
    let (topology, placement) = match (&a.topology, &a.placement) {
        (None, None) => {
            let t = fixtures::att_topology();
            let p = fixtures::att_placement(&t);
            (t, p)
        }
        (Some(t), Some(p)) => {
            let t = load_topology_file(t)?;
            let p = load_placement_file(p, &t)?;
            (t, p)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "--topology and --placement must be given together".into(),
            ))
        }
    };
    match &a.flows {
        Some(f) => {
            let flows = FlowSet::read_csv(&topology, read(f)?.as_bytes())?;
            World::with_flows(topology, flows, placement, config)
        }
        None => World::new(topology, placement, config),
    }
}

/// `K` for every K-subset, or a comma-separated list of `+`-joined ids.
fn scenarios(w: &World, spec: &str) -> Result<Vec<FailureScenario>, Error> {
    let p = w.placement();
    if let Ok(k) = spec.trim().parse::<usize>() {
        return enumerate_failure_scenarios(p, k);
    }
    spec.split(',')
        .map(|set| {
            let ids = set
                .split('+')
                .map(|c| {
                    let c = c.trim();
                    c.trim_start_matches(['C', 'c'])
                        .parse::<u32>()
                        .map(NodeId)
                        .map_err(|_| Error::InvalidArgument(format!("bad controller id '{c}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            FailureScenario::new(p, ids)
        })
        .collect()
}
