use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use aspplan_core::action::DEFAULT_MAX_FLUENTS;
use aspplan_core::encoder::{encode_problem, EncodeOptions, HtnChoice, OccEncoding};
use aspplan_core::ground::parse_ground;
use aspplan_core::lexer::SyntaxError;
use aspplan_core::planner::{
    cross_check, plan_asp, plan_direct, verify_plan, FoundPlan, PlanError, PlanResult, PlannerConfig,
    PlanningProblem,
};
use aspplan_core::program::check_program;
use aspplan_core::solver::{enumerate, ChoiceMode, SolveConfig, SolveError, Strategy};
use aspplan_core::syntax::{parse_problem, parse_trace, print_trace, Knowledge, ProblemFile};

#[derive(Parser)]
#[command(name = "aspplan", version, about = "Planning with action language B and answer set programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the domain, the initial state and any control program.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_FLUENTS)]
        max_fluents: usize,
    },
    /// Print the ground logic program for a problem.
    Translate {
        file: PathBuf,
        #[command(flatten)]
        enc: EncodeArgs,
        /// Write the program here instead of standard output.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Search for plans.
    Plan {
        file: PathBuf,
        #[command(flatten)]
        enc: EncodeArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_enum, default_value_t = Route::Asp)]
        route: Route,
        /// Report every plan.
        #[arg(long)]
        all: bool,
        /// Report at most this many plans.
        #[arg(long)]
        limit: Option<usize>,
        /// Cut search prefixes that cannot become traces of the control program.
        #[arg(long)]
        prune: bool,
        /// Write the first plan as a trace file.
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_FLUENTS)]
        max_fluents: usize,
    },
    /// Check a trace file against a problem.
    Check {
        file: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value_t = KnowledgeMode::Auto)]
        knowledge_mode: KnowledgeMode,
        #[arg(long, default_value_t = DEFAULT_MAX_FLUENTS)]
        max_fluents: usize,
    },
    /// Print the answer sets of a ground program.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        limit: Option<usize>,
        /// Scan all candidate sets instead of searching.
        #[arg(long)]
        exhaustive: bool,
    },
}

#[derive(Args, Clone)]
struct EncodeArgs {
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum, default_value_t = KnowledgeMode::Auto)]
    knowledge_mode: KnowledgeMode,
    #[arg(long, value_enum, default_value_t = OccArg::Rules)]
    occ_encoding: OccArg,
    #[arg(long, value_enum, default_value_t = HtnArg::Cardinality)]
    htn_choice: HtnArg,
    /// Use the rules exactly as originally stated, without the corrections.
    #[arg(long)]
    verbatim: bool,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[arg(long, value_enum, default_value_t = ChoiceArg::Native)]
    choice_mode: ChoiceArg,
    /// Maximum number of solver decisions plus conflicts.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Route {
    Direct,
    Asp,
    Both,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum KnowledgeMode {
    /// Whatever the file declares.
    Auto,
    /// Ignore control knowledge.
    None,
}

#[derive(ValueEnum, Clone, Copy)]
enum OccArg {
    Rules,
    Choice,
}

#[derive(ValueEnum, Clone, Copy)]
enum HtnArg {
    Cardinality,
    Normal,
}

#[derive(ValueEnum, Clone, Copy)]
enum ChoiceArg {
    Native,
    Expand,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NoPlan(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::NoPlan(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> CliError {
        if e.is_resource_cap() {
            CliError::Cap(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> CliError {
        PlanError::from(e).into()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn syntax(path: &Path, e: SyntaxError) -> CliError {
    CliError::Input(format!("{}:{}:{}: {}", path.display(), e.line, e.col, e.message))
}

fn load(path: &Path) -> Result<ProblemFile, CliError> {
    parse_problem(&read(path)?).map_err(|e| syntax(path, e))
}

fn load_problem(path: &Path, horizon: Option<usize>, mode: KnowledgeMode) -> Result<PlanningProblem, CliError> {
    let mut pf = load(path)?;
    if mode == KnowledgeMode::None {
        pf.knowledge = Knowledge::None;
    }
    if let Knowledge::Program(p) = &pf.knowledge {
        let report = check_program(p);
        if let Some(issue) = report.issues.first() {
            return Err(CliError::Input(format!("incoherent program: {issue}")));
        }
    }
    Ok(PlanningProblem::from_file(pf, horizon)?)
}

fn encode_options(a: &EncodeArgs) -> EncodeOptions {
    EncodeOptions {
        occ: match a.occ_encoding {
            OccArg::Rules => OccEncoding::Rules,
            OccArg::Choice => OccEncoding::Choice,
        },
        htn_choice: match a.htn_choice {
            HtnArg::Cardinality => HtnChoice::Cardinality,
            HtnArg::Normal => HtnChoice::Normal,
        },
        verbatim: a.verbatim,
    }
}

fn solve_config(a: &SolveArgs) -> SolveConfig {
    let mut c = SolveConfig {
        choice_mode: match a.choice_mode {
            ChoiceArg::Native => ChoiceMode::Native,
            ChoiceArg::Expand => ChoiceMode::Expand,
        },
        ..Default::default()
    };
    if let Some(b) = a.budget {
        c.budget = b;
    }
    c
}

fn show_plan(prob: &PlanningProblem, p: &FoundPlan) -> String {
    let acts = if p.trajectory.actions.is_empty() {
        "(no actions)".to_string()
    } else {
        prob.domain.show_actions(&p.trajectory)
    };
    if p.dead_end {
        format!("{acts}  [dead end after {} steps]", p.trajectory.len())
    } else {
        acts
    }
}

fn cmd_validate(file: &Path, max_fluents: usize) -> Result<(), CliError> {
    let pf = load(file)?;
    let d = &pf.domain;
    let report = d.validate_theory(&pf.initial, true, max_fluents);
    let mut problems: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    if let Knowledge::Program(p) = &pf.knowledge {
        problems.extend(check_program(p).issues.iter().map(|i| i.to_string()));
    }
    println!("fluents: {}, actions: {}", d.fluent_count(), d.action_count());
    if let Some(n) = report.state_count {
        println!("states: {n}");
    }
    println!("knowledge: {}", pf.knowledge.kind_name());
    match report.deterministic {
        Some(true) => println!("deterministic"),
        Some(false) => {
            print!("nondeterministic");
            if let Some((a, s)) = &report.nondeterminism_witness {
                print!(": {a} in {s}");
            }
            println!();
        }
        None => {}
    }
    if problems.is_empty() {
        println!("OK");
        Ok(())
    } else {
        for p in &problems {
            println!("ERROR: {p}");
        }
        Err(CliError::Input(format!("{} problem(s) found", problems.len())))
    }
}

fn cmd_translate(file: &Path, enc: &EncodeArgs, emit: Option<&Path>) -> Result<(), CliError> {
    let prob = load_problem(file, enc.horizon, enc.knowledge_mode)?;
    let g = encode_problem(&prob.domain, &prob.initial, &prob.goal, prob.horizon, &prob.knowledge, encode_options(enc))
        .map_err(PlanError::from)?;
    let text = g.to_text();
    match emit {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct PlanArgs<'a> {
    file: &'a Path,
    enc: &'a EncodeArgs,
    solve: &'a SolveArgs,
    route: Route,
    all: bool,
    limit: Option<usize>,
    prune: bool,
    emit: Option<&'a Path>,
    max_fluents: usize,
}

fn cmd_plan(a: PlanArgs) -> Result<(), CliError> {
    let prob = load_problem(a.file, a.enc.horizon, a.enc.knowledge_mode)?;
    let limit = if a.all { a.limit } else { Some(a.limit.unwrap_or(1)) };
    let cfg = PlannerConfig {
        encode: encode_options(a.enc),
        solve: solve_config(a.solve),
        prune: a.prune,
        limit,
        max_fluents: a.max_fluents,
        ..Default::default()
    };
    let result: PlanResult = match a.route {
        Route::Direct => plan_direct(&prob, &cfg)?,
        Route::Asp => plan_asp(&prob, &cfg)?,
        Route::Both => {
            let report = cross_check(&prob, &cfg)?;
            println!("direct: {} plan(s), asp: {} plan(s)", report.direct, report.asp);
            if !report.agree() {
                for p in &report.only_direct {
                    println!("only direct: {}", show_plan(&prob, p));
                }
                for p in &report.only_asp {
                    println!("only asp: {}", show_plan(&prob, p));
                }
                return Err(CliError::Input("routes disagree".into()));
            }
            let mut r = plan_asp(&prob, &PlannerConfig { limit: None, ..cfg.clone() })?;
            if let Some(l) = limit {
                r.plans.truncate(l);
            }
            r
        }
    };
    if result.plans.is_empty() {
        println!("no plan");
        return Err(CliError::NoPlan(format!("no plan within horizon {}", prob.horizon)));
    }
    println!("% {} {}(s), horizon {}", result.plans.len(), result.kind.describe(), prob.horizon);
    for p in &result.plans {
        println!("{}", show_plan(&prob, p));
    }
    if let Some(path) = a.emit {
        write(path, &print_trace(&prob.domain, &result.plans[0].trajectory))?;
    }
    Ok(())
}

fn cmd_check(file: &Path, plan: &Path, horizon: Option<usize>, mode: KnowledgeMode, max_fluents: usize) -> Result<(), CliError> {
    let prob = load_problem(file, horizon, mode)?;
    let d = &prob.domain;
    let tf = parse_trace(&read(plan)?, d).map_err(|e| syntax(plan, e))?;
    let s0 = d
        .initial_state(&prob.initial)
        .map_err(|v| CliError::Input(format!("invalid initial state: {}", v[0])))?;
    let t = match tf.to_trajectory(d, &s0) {
        Ok(t) => t,
        Err(e) => {
            println!("INVALID: {e}");
            return Err(CliError::Input("plan rejected".into()));
        }
    };
    let v = verify_plan(&prob, &t, max_fluents)?;
    if v.valid {
        println!("{}", v.summary());
        Ok(())
    } else {
        for diag in &v.diagnostics {
            println!("{diag}");
        }
        Err(CliError::Input("plan rejected".into()))
    }
}

fn cmd_solve(file: &Path, solve: &SolveArgs, all: bool, limit: Option<usize>, exhaustive: bool) -> Result<(), CliError> {
    let g = parse_ground(&read(file)?).map_err(|e| syntax(file, e))?;
    let mut cfg = solve_config(solve);
    cfg.limit = if all { limit } else { Some(limit.unwrap_or(1)) };
    if exhaustive {
        cfg.strategy = Strategy::Exhaustive;
    }
    let models = enumerate(&g, &cfg)?;
    for (i, m) in models.iter().enumerate() {
        println!("Answer: {}", i + 1);
        println!("{}", m.show(&g).join(" "));
    }
    if models.is_empty() {
        println!("UNSATISFIABLE");
        return Err(CliError::NoPlan("no answer set".into()));
    }
    println!("SATISFIABLE");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { file, max_fluents } => cmd_validate(file, *max_fluents),
        Command::Translate { file, enc, emit } => cmd_translate(file, enc, emit.as_deref()),
        Command::Plan { file, enc, solve, route, all, limit, prune, emit, max_fluents } => cmd_plan(PlanArgs {
            file,
            enc,
            solve,
            route: *route,
            all: *all,
            limit: *limit,
            prune: *prune,
            emit: emit.as_deref(),
            max_fluents: *max_fluents,
        }),
        Command::Check { file, plan, horizon, knowledge_mode, max_fluents } => {
            cmd_check(file, plan, *horizon, *knowledge_mode, *max_fluents)
        }
        Command::Solve { file, solve, all, limit, exhaustive } => cmd_solve(file, solve, *all, *limit, *exhaustive),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aspplan: {e}");
            ExitCode::from(e.code())
        }
    }
}
