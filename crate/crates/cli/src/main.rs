//! Command-line front end for the risk-sharing solvers.
//!
//! Subcommands: `solve`, `constrained`, `buyer`, `classify`, `curves`,
//! `verify`. Configurations are JSON documents (see the README); reports are
//! emitted as JSON with 17-significant-digit numbers, or as CSV for ladder
//! and curve dumps. Exit codes: 0 success, 2 unsolvable, 3 invalid input,
//! 4 infeasible constraints.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use riskshare::config::{BuyerConfig, ProblemConfig};
use riskshare::constrained::{
    buyer_solve, classify_exponential_avar, constrained_pareto_solve,
};
use riskshare::error::CoreError;
use riskshare::oracle::{brute_force_discrete, DiscreteInstance};
use riskshare::pareto::{
    delta_family_report, delta_family_solve, pareto_solve, risk_load_curve, RiskLoadCurve,
    SolverOptions, TieRule,
};
use riskshare::riskmeasure::rationality_check;
use riskshare::{allocation, LossModel};

mod json17;

#[derive(Parser)]
#[command(
    name = "riskshare",
    about = "Pareto optimal risk sharing with distortion risk measures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieFlag {
    Lowest,
    Highest,
    Split,
}

impl From<TieFlag> for TieRule {
    fn from(t: TieFlag) -> Self {
        match t {
            TieFlag::Lowest => TieRule::Lowest,
            TieFlag::Highest => TieRule::Highest,
            TieFlag::Split => TieRule::Split,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum FormatFlag {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonFlags {
    /// Path to the JSON problem configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the envelope grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the tie rule.
    #[arg(long, value_enum)]
    tie: Option<TieFlag>,
    /// Output path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatFlag,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the unconstrained Pareto problem.
    Solve(CommonFlags),
    /// Solve with regulator constraints (requires `constraints` in config).
    Constrained(CommonFlags),
    /// Single-buyer problem with a regulator cap (buyer-mode config).
    Buyer(CommonFlags),
    /// Closed-form case classification for exponential losses with AVaR
    /// distortions.
    Classify {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long = "budget", visible_alias = "B")]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the per-agent risk-load curves Q_k(p) as CSV.
    Curves {
        #[command(flatten)]
        common: CommonFlags,
        /// Fix the constraint multiplier instead of solving for it.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Cross-check the solver against brute-force enumeration (discrete
    /// losses only).
    Verify(CommonFlags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code_for(&e);
            let payload = serde_json::json!({
                "error": e.to_string(),
                "code": code,
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(CoreError),
    Io(String),
    Parse(String),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

fn exit_code_for(e: &CliError) -> u8 {
    match e {
        CliError::Core(CoreError::Unsolvable) => 2,
        CliError::Core(CoreError::Infeasible(_)) => 4,
        _ => 3,
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

fn effective_options(
    cfg_opts: &riskshare::config::OptionsConfig,
    flags: &CommonFlags,
) -> SolverOptions {
    let mut opts = cfg_opts.to_solver_options();
    if let Some(g) = flags.grid {
        opts.grid_size = g.max(2);
    }
    if let Some(t) = flags.tie {
        opts.tie_rule = t.into();
    }
    opts
}

fn write_output(flags_out: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    let body = if body.ends_with('\n') { body.to_string() } else { format!("{body}\n") };
    match flags_out {
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
        Some(path) => fs::write(path, body).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn emit_json<T: Serialize>(flags_out: &Option<PathBuf>, value: &T) -> Result<(), CliError> {
    let body = json17::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(flags_out, &body)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(flags) => cmd_solve(flags, false),
        Command::Constrained(flags) => cmd_solve(flags, true),
        Command::Buyer(flags) => cmd_buyer(flags),
        Command::Classify { theta, b, alpha, beta, mu, budget, out } => {
            let cls = classify_exponential_avar(theta, b, alpha, beta, mu, budget)?;
            emit_json(&out, &cls)
        }
        Command::Curves { common, lambda } => cmd_curves(common, lambda),
        Command::Verify(flags) => cmd_verify(flags),
    }
}

fn attach_rationality(
    report: &mut riskshare::SolveReport,
    cfg: &ProblemConfig,
    ladder: &riskshare::Ladder,
    opts: &SolverOptions,
) -> Result<(), CliError> {
    let Some(original) = &cfg.original else { return Ok(()) };
    let orig_components = original.components()?;
    let new_components = ladder.components()?;
    let rows = rationality_check(
        &cfg.agents,
        &orig_components,
        &new_components,
        &cfg.loss,
        opts.quad_tol,
    )?;
    for (agent, row) in report.agents.iter_mut().zip(rows) {
        agent.rationality = Some(row);
    }
    match allocation::side_payments(
        &cfg.agents,
        ladder,
        &orig_components,
        &cfg.loss,
        opts.quad_tol,
    )? {
        allocation::SidePayments::Feasible(deltas) => {
            report.side_payments = Some(deltas);
        }
        allocation::SidePayments::Infeasible { .. } => {
            report.side_payments = None;
        }
    }
    Ok(())
}

fn cmd_solve(flags: CommonFlags, constrained: bool) -> Result<(), CliError> {
    let cfg: ProblemConfig = read_config(&flags.config)?;
    cfg.validate()?;
    let opts = effective_options(&cfg.options, &flags);
    if constrained && cfg.constraints.is_empty() {
        return Err(CliError::Usage(
            "constrained mode requires a non-empty `constraints` list".into(),
        ));
    }
    if !constrained && !cfg.constraints.is_empty() {
        return Err(CliError::Usage(
            "configuration has constraints; use the `constrained` subcommand".into(),
        ));
    }

    let solve = || -> Result<(riskshare::Ladder, riskshare::SolveReport), CoreError> {
        if constrained {
            constrained_pareto_solve(&cfg.agents, &cfg.constraints, &cfg.loss, &opts)
        } else {
            pareto_solve(&cfg.agents, &cfg.loss, &opts)
        }
    };
    let (ladder, mut report) = match solve() {
        Ok(ok) => ok,
        Err(CoreError::DegenerateAllZero) => {
            // two-agent delta family when a weight was supplied
            let Some(delta) = cfg.options.delta else {
                return Err(CliError::Core(CoreError::InvalidConfig(
                    "all cost factors 1+b+c vanish; set options.delta to pick a \
                     delta-family optimum"
                        .into(),
                )));
            };
            if cfg.agents.len() != 2 {
                return Err(CliError::Core(CoreError::InvalidConfig(
                    "the all-degenerate configuration is only supported for two agents"
                        .into(),
                )));
            }
            let g1 = cfg.agents[0].g().clone();
            let g2 = cfg.agents[1].g().clone();
            let ladder = delta_family_solve(&g1, &g2, delta, &cfg.loss, &opts)?;
            let report =
                delta_family_report(&g1, &g2, &cfg.agents, delta, &ladder, &cfg.loss, &opts)?;
            (ladder, report)
        }
        Err(e) => return Err(e.into()),
    };
    attach_rationality(&mut report, &cfg, &ladder, &opts)?;
    match flags.format {
        FormatFlag::Json => emit_json(&flags.out, &report),
        FormatFlag::Csv => write_output(&flags.out, &allocation::ladder_to_csv(&report.ladder)),
    }
}

#[derive(Serialize)]
struct BuyerReport {
    lambda: f64,
    residual: f64,
    budget: f64,
    converged: bool,
    /// Component 0 retained by the buyer, component 1 insured.
    ladder: riskshare::Ladder,
    #[serde(skip_serializing_if = "Option::is_none")]
    case_label: Option<String>,
}

fn cmd_buyer(flags: CommonFlags) -> Result<(), CliError> {
    let cfg: BuyerConfig = read_config(&flags.config)?;
    let opts = effective_options(&cfg.options, &flags);
    let sol = buyer_solve(&cfg.g, &cfg.h, cfg.b, cfg.theta, cfg.budget, &cfg.loss, &opts)?;
    // Table-style case label when the ingredients are AVaR + exponential
    let case_label = match (&cfg.loss, cfg.g.avar_alpha(), cfg.h.avar_alpha()) {
        (LossModel::Exponential { rate }, Some(alpha), Some(beta)) if alpha > beta => {
            classify_exponential_avar(cfg.theta, cfg.b, alpha, beta, *rate, cfg.budget)
                .ok()
                .map(|c| c.case.to_string())
        }
        _ => None,
    };
    let report = BuyerReport {
        lambda: sol.lambda,
        residual: sol.residual,
        budget: cfg.budget,
        converged: sol.converged,
        ladder: sol.ladder,
        case_label,
    };
    match flags.format {
        FormatFlag::Json => emit_json(&flags.out, &report),
        FormatFlag::Csv => write_output(&flags.out, &allocation::ladder_to_csv(&report.ladder)),
    }
}

fn cmd_curves(flags: CommonFlags, lambda: Option<f64>) -> Result<(), CliError> {
    let cfg: ProblemConfig = read_config(&flags.config)?;
    cfg.validate()?;
    let opts = effective_options(&cfg.options, &flags);
    let grid = flags.grid.unwrap_or(100).max(1);

    // per-agent multipliers: supplied explicitly, solved, or zero
    let mut lambdas = vec![0.0; cfg.agents.len()];
    if let Some(l) = lambda {
        match cfg.constraints.as_slice() {
            [c] => lambdas[c.agent()] = l,
            _ => {
                return Err(CliError::Usage(
                    "--lambda applies to exactly one configured constraint".into(),
                ))
            }
        }
    } else if !cfg.constraints.is_empty() {
        let (_, report) =
            constrained_pareto_solve(&cfg.agents, &cfg.constraints, &cfg.loss, &opts)?;
        lambdas = report.lambda;
    }

    let curves: Vec<RiskLoadCurve<f64>> = cfg
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let h = cfg.constraints.iter().find(|c| c.agent() == i).map(|c| c.h());
            risk_load_curve(a, lambdas[i], if lambdas[i] > 0.0 { h } else { None })
        })
        .collect::<Result<_, _>>()?;

    let mut body = String::from("p");
    for i in 1..=curves.len() {
        body.push_str(&format!(",Q_{i}"));
    }
    body.push('\n');
    for k in 0..=grid {
        let p = k as f64 / grid as f64;
        body.push_str(&format!("{p:.16e}"));
        for c in &curves {
            body.push_str(&format!(",{:.16e}", c.eval(p)));
        }
        body.push('\n');
    }
    write_output(&flags.out, &body)
}

#[derive(Serialize)]
struct VerifyReport {
    solver_objective: f64,
    brute_force_objective: f64,
    difference: f64,
    comonotone_ok: bool,
    agree: bool,
}

fn cmd_verify(flags: CommonFlags) -> Result<(), CliError> {
    let cfg: ProblemConfig = read_config(&flags.config)?;
    cfg.validate()?;
    let opts = effective_options(&cfg.options, &flags);
    let discrete = cfg
        .loss
        .as_discrete()
        .ok_or_else(|| {
            CliError::Core(CoreError::InvalidConfig(
                "verify requires a discrete loss model".into(),
            ))
        })?
        .clone();
    let (ladder, report) = pareto_solve(&cfg.agents, &cfg.loss, &opts)?;
    let inst = DiscreteInstance::new(discrete.clone(), cfg.agents.clone())?;
    let brute = brute_force_discrete(&inst)?;
    let payouts: Vec<Vec<f64>> = (0..cfg.agents.len())
        .map(|i| {
            discrete
                .atoms()
                .iter()
                .map(|&y| ladder.apply(i, y))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let difference = (report.objective - brute.objective).abs();
    let verify = VerifyReport {
        solver_objective: report.objective,
        brute_force_objective: brute.objective,
        difference,
        comonotone_ok: allocation::comonotone_check(&payouts),
        agree: difference <= 1e-9,
    };
    emit_json(&flags.out, &verify)
}
