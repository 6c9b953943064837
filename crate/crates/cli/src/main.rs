//! `gridshield` command-line driver.
//!
//! Exit codes: 0 on success, 1 when the inputs are well formed but the run
//! fails (invalid network, infeasible model, solver error, oracle
//! mismatch), 2 on usage errors and missing input files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use gridshield::formulation::{
    build_extensive_form, extract_plan, extract_schedule, fix_plan, write_schedule_csv,
    FormulationOptions, PlanDecision,
};
use gridshield::hazard::{generate_scenarios, parse_scenarios, HazardConfig, ScenarioSet};
use gridshield::network::{parse_network, validate_network, Network};
use gridshield::oracle::{enumerate_optimal, OracleFixture, DEFAULT_LIMIT};
use gridshield::report::{compare_plan, cost_breakdown, emit_report};
use gridshield::solver::{solve, SolverConfig};

#[derive(Parser)]
#[command(name = "gridshield", version, about = "Resilience planning for distribution networks under wind hazards")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed for scenario generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a hazard scenario set.
    Generate(GenerateArgs),
    /// Solve the planning problem and write the plan and schedules.
    Solve(SolveArgs),
    /// Compare a plan (optimized by default) against the do-nothing baseline.
    Evaluate(EvaluateArgs),
    /// Check the MILP against brute-force enumeration on a tiny instance.
    Oracle(OracleArgs),
    /// Check a network (and optionally a scenario file) without solving.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    network: PathBuf,
    /// Number of scenarios.
    #[arg(long)]
    scenarios: Option<usize>,
    /// Load perturbation half-width, e.g. 0.3 for +/-30%.
    #[arg(long)]
    perturb: Option<f64>,
    /// Steps per scenario.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Relative MIP gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// `highs` for the linked solver, otherwise a solver executable
    /// (`cbc`, `highs`, or a path).
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    threads: Option<u32>,
    /// Keep the solver's scratch directory.
    #[arg(long)]
    keep_files: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    network: PathBuf,
    /// Scenario file written by `generate`.
    #[arg(long)]
    scenarios: PathBuf,
    /// Pin the first stage to a plan file or to `baseline`.
    #[arg(long)]
    plan: Option<String>,
    /// Also write the model as `model.mps`.
    #[arg(long)]
    write_model: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    /// Plan file or `baseline`; optimized when absent.
    #[arg(long)]
    plan: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Combined network + scenarios file.
    #[arg(long, conflicts_with_all = ["network", "scenarios"])]
    fixture: Option<PathBuf>,
    #[arg(long, requires = "scenarios")]
    network: Option<PathBuf>,
    #[arg(long, requires = "network")]
    scenarios: Option<PathBuf>,
    /// Largest number of free binaries to enumerate.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    scenarios: Option<PathBuf>,
}

/// Contents of `--config`. Every section is optional.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    seed: Option<u64>,
    scenarios: Option<usize>,
    hazard: Option<HazardConfig>,
    solver: Option<SolverConfig>,
    formulation: Option<FormulationOptions>,
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} file not found: {}", path.display())))
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    version: &'static str,
    args: Vec<String>,
    seed: Option<u64>,
    network_digest: Option<String>,
    scenario_digest: Option<String>,
    scenario_count: Option<usize>,
    solver: Option<String>,
    mip_gap: Option<f64>,
    status: Option<String>,
    objective: Option<f64>,
    gap: Option<f64>,
    outputs: Vec<String>,
    wall_seconds: f64,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            args: std::env::args().skip(1).collect(),
            seed: None,
            network_digest: None,
            scenario_digest: None,
            scenario_count: None,
            solver: None,
            mip_gap: None,
            status: None,
            objective: None,
            gap: None,
            outputs: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    fn inputs(&mut self, net: &Network, set: &ScenarioSet) {
        self.network_digest = Some(net.digest());
        self.scenario_digest = Some(set.config_digest.clone());
        self.scenario_count = Some(set.len());
        self.seed = Some(set.seed);
    }
}

struct Ctx {
    out: PathBuf,
    seed: Option<u64>,
    file: FileConfig,
    started: Instant,
}

impl Ctx {
    fn write(&self, manifest: &mut Manifest, name: &str, body: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        manifest.outputs.push(name.to_string());
        Ok(path)
    }

    fn finish(&self, mut manifest: Manifest) -> anyhow::Result<()> {
        manifest.wall_seconds = self.started.elapsed().as_secs_f64();
        manifest.outputs.push("run.json".into());
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join("run.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    fn solver(&self, args: &SolverArgs) -> Result<SolverConfig, Failure> {
        let mut cfg = self.file.solver.clone().unwrap_or_else(SolverConfig::from_env);
        if let Some(s) = &args.solver {
            if s == "highs" {
                cfg.solver_id = "highs".into();
                cfg.executable = None;
            } else {
                cfg.use_executable(PathBuf::from(s));
            }
        }
        if let Some(g) = args.gap {
            cfg.mip_gap = g;
        }
        if let Some(t) = args.time_limit {
            cfg.time_limit_s = t;
        }
        if let Some(n) = args.threads {
            cfg.threads = n;
        }
        cfg.keep_files |= args.keep_files;
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    fn options(&self) -> FormulationOptions {
        self.file.formulation.unwrap_or_default()
    }

    fn make_out(&self) -> anyhow::Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))
    }
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    require_file(path, "network")?;
    let net = parse_network(path).map_err(|e| Failure::Domain(anyhow::anyhow!("{}: {e}", path.display())))?;
    let report = validate_network(&net);
    if let Some(issue) = report.errors.first() {
        return Err(Failure::Domain(anyhow::anyhow!(
            "{}: {} ({}): {}",
            path.display(),
            issue.code,
            issue.location,
            issue.message
        )));
    }
    Ok(net)
}

fn load_scenarios(path: &Path, net: &Network) -> Result<ScenarioSet, Failure> {
    require_file(path, "scenario")?;
    let set = parse_scenarios(path).map_err(|e| Failure::Domain(anyhow::anyhow!("{}: {e}", path.display())))?;
    set.check(net)
        .map_err(|e| Failure::Domain(anyhow::anyhow!("{}: {e}", path.display())))?;
    Ok(set)
}

fn load_plan(arg: &str, net: &Network) -> Result<PlanDecision, Failure> {
    if arg == "baseline" {
        return Ok(PlanDecision::baseline(net));
    }
    let path = Path::new(arg);
    require_file(path, "plan")?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    PlanDecision::from_json_str(net, &text)
        .map_err(|e| Failure::Domain(anyhow::anyhow!("{}: {e}", path.display())))
}

fn cmd_generate(ctx: &Ctx, args: &GenerateArgs) -> Outcome {
    let net = load_network(&args.network)?;
    let mut cfg = ctx.file.hazard.clone().unwrap_or_default();
    if let Some(p) = args.perturb {
        cfg.perturb_range = p;
    }
    if let Some(h) = args.horizon {
        cfg.horizon_steps = h;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let n = args.scenarios.or(ctx.file.scenarios).unwrap_or(10);
    if n == 0 {
        return Err(usage("--scenarios must be at least 1"));
    }
    let seed = ctx.seed.or(ctx.file.seed).unwrap_or(0);
    let set = generate_scenarios(&net, &cfg, n, seed).context("generating scenarios")?;
    ctx.make_out()?;
    let mut manifest = Manifest::new("generate");
    manifest.inputs(&net, &set);
    ctx.write(&mut manifest, "scenarios.json", set.to_json_string().as_bytes())?;
    ctx.finish(manifest)?;
    Ok(())
}

fn cmd_solve(ctx: &Ctx, args: &SolveArgs) -> Outcome {
    let net = load_network(&args.network)?;
    let set = load_scenarios(&args.scenarios, &net)?;
    let cfg = ctx.solver(&args.solver)?;
    let pinned = args.plan.as_deref().map(|p| load_plan(p, &net)).transpose()?;

    let (mut model, map) = build_extensive_form(&net, &set, &ctx.options()).context("building model")?;
    if let Some(plan) = &pinned {
        fix_plan(&mut model, &map, &net, plan).context("fixing plan")?;
    }
    ctx.make_out()?;
    let mut manifest = Manifest::new("solve");
    manifest.inputs(&net, &set);
    manifest.solver = Some(cfg.identity());
    manifest.mip_gap = Some(cfg.mip_gap);
    if args.write_model {
        let path = ctx.out.join("model.mps");
        gridshield::milp::mps::write_mps(&model, &path)
            .with_context(|| format!("writing {}", path.display()))?;
        manifest.outputs.push("model.mps".into());
    }

    let sol = solve(&model, &cfg).context("solving")?;
    manifest.status = Some(format!("{:?}", sol.status));
    if !sol.status.has_solution() {
        ctx.finish(manifest)?;
        return Err(Failure::Domain(anyhow::anyhow!("solver returned {:?}", sol.status)));
    }
    manifest.objective = Some(sol.objective_value);
    manifest.gap = Some(sol.gap);

    let plan = extract_plan(&model, &sol, &map).context("extracting plan")?;
    ctx.write(&mut manifest, "plan.json", plan.to_json_string(&net).as_bytes())?;

    let mut csv = String::from("name,value\n");
    for (v, x) in model.variables().iter().zip(&sol.values) {
        csv.push_str(&format!("{},{}\n", v.name, x));
    }
    ctx.write(&mut manifest, "solution.csv", csv.as_bytes())?;

    let schedules = (0..map.scenarios.len())
        .map(|s| extract_schedule(&model, &sol, &map, s))
        .collect::<Result<Vec<_>, _>>()
        .context("extracting schedules")?;
    let path = ctx.out.join("schedule.csv");
    let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    write_schedule_csv(&net, &schedules, BufWriter::new(file)).context("writing schedule.csv")?;
    manifest.outputs.push("schedule.csv".into());

    let breakdown = cost_breakdown(&model, &sol, &map, &net).context("cost breakdown")?;
    let mut text = serde_json::to_string_pretty(&breakdown).context("serializing costs")?;
    text.push('\n');
    ctx.write(&mut manifest, "costs.json", text.as_bytes())?;
    for w in &sol.warnings {
        eprintln!("warning: {w}");
    }
    ctx.finish(manifest)?;
    println!(
        "{:?} objective {:.2} (investment {:.2}, expected recourse {:.2})",
        sol.status, sol.objective_value, breakdown.investment, breakdown.expected_second_stage
    );
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, args: &EvaluateArgs) -> Outcome {
    let net = load_network(&args.network)?;
    let set = load_scenarios(&args.scenarios, &net)?;
    let cfg = ctx.solver(&args.solver)?;
    let pinned = args.plan.as_deref().map(|p| load_plan(p, &net)).transpose()?;
    let (report, plan) =
        compare_plan(&net, &set, &ctx.options(), &cfg, pinned.as_ref()).context("comparing plans")?;
    ctx.make_out()?;
    let mut manifest = Manifest::new("evaluate");
    manifest.inputs(&net, &set);
    manifest.solver = Some(cfg.identity());
    manifest.mip_gap = Some(cfg.mip_gap);
    manifest.objective = Some(report.total_with);
    manifest.gap = Some(report.gap_with.max(report.gap_without));
    for path in emit_report(&report, &ctx.out).context("writing report")? {
        manifest.outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    ctx.write(&mut manifest, "plan.json", plan.to_json_string(&net).as_bytes())?;
    ctx.finish(manifest)?;
    println!(
        "total {:.2} vs baseline {:.2}: {:.2}% saved ({:.2}% mean on shedding)",
        report.total_with, report.total_without, report.total_savings_pct, report.mean_savings_pct
    );
    Ok(())
}

#[derive(Serialize)]
struct OracleVerdict {
    free_binaries: usize,
    lp_solves: usize,
    oracle_objective: f64,
    milp_objective: f64,
    milp_gap: f64,
    tolerance: f64,
    agree: bool,
}

fn cmd_oracle(ctx: &Ctx, args: &OracleArgs) -> Outcome {
    let (net, set) = match (&args.fixture, &args.network, &args.scenarios) {
        (Some(f), _, _) => {
            require_file(f, "fixture")?;
            let fx = OracleFixture::load(f).map_err(|e| Failure::Domain(e.into()))?;
            (fx.network, fx.scenarios)
        }
        (None, Some(n), Some(s)) => {
            let net = load_network(n)?;
            let set = load_scenarios(s, &net)?;
            (net, set)
        }
        _ => return Err(usage("oracle needs --fixture or both --network and --scenarios")),
    };
    let cfg = ctx.solver(&args.solver)?;
    let opts = ctx.options();
    let truth = enumerate_optimal(&net, &set, &opts, args.limit, &cfg).context("enumerating")?;
    let (model, _) = build_extensive_form(&net, &set, &opts).context("building model")?;
    let sol = solve(&model, &cfg).context("solving")?;
    if !sol.status.has_solution() {
        return Err(Failure::Domain(anyhow::anyhow!("MILP solve returned {:?}", sol.status)));
    }
    let scale = truth.objective.abs().max(1.0);
    let tolerance = (1e-6f64).max(sol.gap.max(cfg.mip_gap)) * scale;
    let verdict = OracleVerdict {
        free_binaries: truth.free_binaries,
        lp_solves: truth.lp_solves,
        oracle_objective: truth.objective,
        milp_objective: sol.objective_value,
        milp_gap: sol.gap,
        tolerance,
        agree: (truth.objective - sol.objective_value).abs() <= tolerance,
    };
    ctx.make_out()?;
    let mut manifest = Manifest::new("oracle");
    manifest.inputs(&net, &set);
    manifest.solver = Some(cfg.identity());
    manifest.objective = Some(sol.objective_value);
    let mut text = serde_json::to_string_pretty(&verdict).context("serializing verdict")?;
    text.push('\n');
    ctx.write(&mut manifest, "oracle.json", text.as_bytes())?;
    ctx.finish(manifest)?;
    println!(
        "oracle {:.6} milp {:.6} over {} free binaries: {}",
        verdict.oracle_objective,
        verdict.milp_objective,
        verdict.free_binaries,
        if verdict.agree { "agree" } else { "MISMATCH" }
    );
    if verdict.agree {
        Ok(())
    } else {
        Err(Failure::Domain(anyhow::anyhow!("oracle and MILP disagree")))
    }
}

fn cmd_validate(args: &ValidateArgs) -> Outcome {
    require_file(&args.network, "network")?;
    let net = parse_network(&args.network)
        .map_err(|e| Failure::Domain(anyhow::anyhow!("{}: {e}", args.network.display())))?;
    let report = validate_network(&net);
    for w in &report.warnings {
        println!("warning {} {}: {}", w.code, w.location, w.message);
    }
    for e in &report.errors {
        println!("error {} {}: {}", e.code, e.location, e.message);
    }
    if !report.is_valid() {
        return Err(Failure::Domain(anyhow::anyhow!(
            "{} error(s) in {}",
            report.errors.len(),
            args.network.display()
        )));
    }
    if let Some(s) = &args.scenarios {
        let set = load_scenarios(s, &net)?;
        println!("{} scenarios, {} steps each", set.len(), set.config.horizon_steps);
    }
    println!("ok: {} buses, {} lines", net.num_buses(), net.num_lines());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(path) => {
            require_file(path, "config")?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        out: cli.out,
        seed: cli.seed,
        file,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Solve(a) => cmd_solve(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Oracle(a) => cmd_oracle(&ctx, a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("gridshield: {msg}");
            eprintln!("try `gridshield --help`");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("gridshield: {e:#}");
            ExitCode::from(1)
        }
    }
}
