//! Command-line front end: model ingestion, dispatch and run reports.

mod model;
mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{check_sensitivity, consistency_report, find_inconsistency, SensitivityConfig, SensitivityVerdict};
use crate::envelope::{dual_check, verify_attainment, CheckStatus, MemberKind};
use crate::error::{Result, RiskError};
use crate::gexp::{convergence_study, solve_bsde, ComparisonStatus};
use crate::measures::{check_axioms, Axiom, AxiomStatus, FalsifierConfig};
use crate::space::{lift, MeasureChange};

pub use model::{sha256_hex, Model, ModelFile, ModelParams, TreeSource};
pub use report::{CheckOutcome, RunReport};

pub const DEFAULT_BUDGET: usize = 1000;
pub const DEFAULT_N_LIST: [usize; 4] = [4, 8, 16, 32];

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GlobalArgs {
    /// Model file (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Evaluation level.
    #[arg(long, global = true)]
    pub t: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample budget for randomized checks.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Risk profiles of measures on payoffs at level t.
    Eval {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        payoff: Option<String>,
    },
    /// Envelope attainment and penalty duality at the attaining anchor.
    Envelope {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        payoff: Option<String>,
        #[arg(long, value_parser = ["monetary", "star", "cone"])]
        kind: Option<String>,
    },
    /// Discrete backward equation for `-xi`: the g-risk of each payoff.
    Bsde {
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        payoff: Option<String>,
    },
    /// Error table of the driver scheme against its oracle.
    Convergence {
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        payoff: Option<String>,
        #[arg(long = "n-list", visible_alias = "N-list", value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Entropic coefficient: compares the quadratic-driver and logarithmic routes.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Also write the CSV table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Randomized falsification of A1..A6.
    Axioms {
        #[arg(long)]
        measure: Option<String>,
        /// Comma-separated subset, e.g. A1,A4.
        #[arg(long, value_delimiter = ',')]
        axioms: Option<Vec<String>>,
    },
    /// Nesting gaps over all level pairs.
    Consistency {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        payoff: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also search payoffs with leaf values in {-2, ..., 2}.
        #[arg(long)]
        grid_search: bool,
    },
    /// Atom test and ray search against a reference scenario.
    Sensitivity {
        #[arg(long)]
        measure: Option<String>,
        /// Named scenario from the model; the reference measure when omitted.
        #[arg(long = "q", visible_alias = "Q")]
        q: Option<String>,
    },
    /// Runs the canonical example suite.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Envelope { .. } => "envelope",
            Command::Bsde { .. } => "bsde",
            Command::Convergence { .. } => "convergence",
            Command::Axioms { .. } => "axioms",
            Command::Consistency { .. } => "consistency",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "riskenv", version, about = "Dynamic risk measures on scenario trees")]
pub struct Cli {
    /// Same as the `selftest` command.
    #[arg(long)]
    pub selftest: bool,
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Output of one command: the report plus an optional CSV rendering.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub csv: Option<String>,
}

struct Resolved {
    t: usize,
    seed: u64,
    budget: usize,
}

fn resolve(model: &Model, g: &GlobalArgs) -> Result<Resolved> {
    let p = &model.file.params;
    let t = g.t.or(p.t).unwrap_or(0);
    model.tree.check_level(t)?;
    Ok(Resolved { t, seed: g.seed.or(p.seed).unwrap_or(0), budget: g.budget.or(p.budget).unwrap_or(DEFAULT_BUDGET) })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn parse_kind(s: &str) -> Result<MemberKind> {
    serde_json::from_value(Value::String(s.into())).map_err(|_| RiskError::InvalidInput(format!("unknown member kind `{s}`")))
}

fn digest(model: &Model, cmd: &Command, r: &Resolved) -> String {
    let inputs = json!({ "model": model.digest, "args": to_value(cmd), "t": r.t, "seed": r.seed, "budget": r.budget });
    sha256_hex(inputs.to_string().as_bytes())
}

/// Runs a model command. `Selftest` is handled by [`run_selftest`].
pub fn execute(model: &Model, cmd: &Command, g: &GlobalArgs) -> Result<Outcome> {
    let r = resolve(model, g)?;
    let tree = &model.tree;
    let file = &model.file;
    let mut checks = Vec::new();
    let mut csv = None;
    let results = match cmd {
        Command::Selftest => return Err(RiskError::InvalidInput("selftest does not take a model".into())),
        Command::Eval { measure, payoff } => {
            let mut rows = Vec::new();
            let mut text = String::from("measure,payoff,t,node,value\n");
            for (mn, m) in model::select(&file.measures, measure.as_deref(), "measure")? {
                for (pn, x) in model::select(&model.payoffs, payoff.as_deref(), "payoff")? {
                    let p = m.evaluate(tree, x, r.t)?;
                    for (i, v) in p.values().iter().enumerate() {
                        text.push_str(&format!("{mn},{pn},{},{i},{v}\n", r.t));
                    }
                    rows.push(json!({ "measure": mn, "payoff": pn, "t": r.t, "profile": p.values() }));
                }
            }
            csv = Some(text);
            Value::Array(rows)
        }
        Command::Envelope { measure, payoff, kind } => {
            let kind = match kind.as_deref() {
                Some(k) => parse_kind(k)?,
                None => file.params.kind.unwrap_or(MemberKind::Monetary),
            };
            let mut rows = Vec::new();
            for (mn, m) in model::select(&file.measures, measure.as_deref(), "measure")? {
                for (pn, x) in model::select(&model.payoffs, payoff.as_deref(), "payoff")? {
                    let att = verify_attainment(m, kind, tree, x, r.t, r.budget, r.seed)?;
                    let anchor = x.add(&lift(tree, &m.evaluate(tree, x, r.t)?)?);
                    let dual = dual_check(tree, &anchor, x, r.t, r.budget, r.seed)?;
                    checks.push(CheckOutcome::new(format!("attainment/{mn}/{pn}"), att.status == CheckStatus::Pass, att.witness.as_ref().map(to_value)));
                    checks.push(CheckOutcome::new(format!("duality/{mn}/{pn}"), dual.status == CheckStatus::Pass, dual.witness.as_ref().map(to_value)));
                    rows.push(json!({ "measure": mn, "payoff": pn, "anchor": anchor, "attainment": att, "duality": dual }));
                }
            }
            Value::Array(rows)
        }
        Command::Bsde { generator, payoff } => {
            let mut rows = Vec::new();
            for (gn, gen) in model::select(&file.generators, generator.as_deref(), "generator")? {
                for (pn, x) in model::select(&model.payoffs, payoff.as_deref(), "payoff")? {
                    let sol = solve_bsde(tree, gen, &x.neg())?;
                    let verified = sol.comparison == ComparisonStatus::Verified;
                    checks.push(CheckOutcome::new(format!("comparison/{gn}/{pn}"), verified, Some(json!(sol.slope_margin))));
                    let z = (r.t < tree.depth()).then(|| sol.z.at(r.t).to_vec());
                    rows.push(json!({
                        "generator": gn, "payoff": pn, "t": r.t,
                        "value": sol.y_at(r.t).values(), "z": z,
                        "slope_margin": sol.slope_margin, "comparison": sol.comparison,
                    }));
                }
            }
            Value::Array(rows)
        }
        Command::Convergence { generator, payoff, n_list, gamma, horizon, csv: csv_path } => {
            let n_list = n_list.clone().or_else(|| file.params.n_list.clone()).unwrap_or(DEFAULT_N_LIST.to_vec());
            let gamma = gamma.or(file.params.gamma);
            let horizon = horizon.or(file.params.horizon).unwrap_or(tree.horizon());
            let mut rows = Vec::new();
            let mut text = String::new();
            for (gn, gen) in model::select(&file.generators, generator.as_deref(), "generator")? {
                for (pn, p) in model::select(&file.payoffs, payoff.as_deref(), "payoff")? {
                    let table = convergence_study(gen, p, &n_list, horizon, gamma)?;
                    let ok = if table.max_error() <= 1e-12 { true } else { table.strictly_decreasing() };
                    checks.push(CheckOutcome::new(format!("monotone_error/{gn}/{pn}"), ok, table.min_ratio().map(|v| json!(v))));
                    text.push_str(&format!("# {gn} {pn}\n{}", table.to_csv()));
                    rows.push(json!({ "generator": gn, "payoff": pn, "table": table }));
                }
            }
            if let Some(path) = csv_path {
                std::fs::write(path, &text)?;
            }
            csv = Some(text);
            Value::Array(rows)
        }
        Command::Axioms { measure, axioms } => {
            let which = match axioms {
                None => Axiom::ALL.to_vec(),
                Some(list) => list
                    .iter()
                    .map(|s| Axiom::parse(s).ok_or_else(|| RiskError::InvalidInput(format!("unknown axiom `{s}`"))))
                    .collect::<Result<_>>()?,
            };
            let cfg = FalsifierConfig::new(r.budget, r.seed);
            let mut rows = Vec::new();
            for (mn, m) in model::select(&file.measures, measure.as_deref(), "measure")? {
                let rep = check_axioms(m, tree, &which, &cfg);
                for o in &rep.outcomes {
                    if o.status == AxiomStatus::Error {
                        return Err(RiskError::InvalidInput(format!("{mn} {:?}: {}", o.axiom, o.error.clone().unwrap_or_default())));
                    }
                    checks.push(CheckOutcome::new(format!("{:?}/{mn}", o.axiom), o.status == AxiomStatus::Pass, o.witness.as_ref().map(to_value)));
                }
                rows.push(json!({ "measure": mn, "report": rep }));
            }
            Value::Array(rows)
        }
        Command::Consistency { measure, payoff, tol, grid_search } => {
            let mut rows = Vec::new();
            for (mn, m) in model::select(&file.measures, measure.as_deref(), "measure")? {
                let xs: Vec<_> = model::select(&model.payoffs, payoff.as_deref(), "payoff")?.into_iter().map(|(_, x)| x.clone()).collect();
                let rep = consistency_report(m, tree, &xs, *tol)?;
                let mut found = None;
                if *grid_search {
                    let grid = [-2.0, -1.0, 0.0, 1.0, 2.0];
                    'search: for t in 0..tree.depth() {
                        for s in t + 1..=tree.depth() {
                            if let Some(w) = find_inconsistency(m, tree, &grid, t, s, *tol)? {
                                found = Some(w);
                                break 'search;
                            }
                        }
                    }
                }
                let ok = rep.consistent && found.is_none();
                let witness = found.as_ref().map(to_value).or_else(|| rep.witness.as_ref().map(to_value));
                checks.push(CheckOutcome::new(format!("consistent/{mn}"), ok, witness));
                rows.push(json!({ "measure": mn, "report": rep, "grid_witness": found }));
            }
            Value::Array(rows)
        }
        Command::Sensitivity { measure, q } => {
            let reference = MeasureChange::reference(tree);
            let q = match q {
                Some(n) => file.scenarios.get(n).ok_or_else(|| RiskError::InvalidInput(format!("no scenario named `{n}` in the model")))?,
                None => &reference,
            };
            let cfg = SensitivityConfig::new(r.budget, r.seed);
            let mut rows = Vec::new();
            for (mn, m) in model::select(&file.measures, measure.as_deref(), "measure")? {
                let rep = check_sensitivity(m, tree, r.t, q, &cfg)?;
                checks.push(CheckOutcome::new(format!("sensitive/{mn}"), rep.verdict == SensitivityVerdict::SensitiveEvidence, Some(to_value(&rep.verdict))));
                rows.push(json!({ "measure": mn, "report": rep }));
            }
            Value::Array(rows)
        }
    };
    let report = RunReport::new(cmd.name(), digest(model, cmd, &r), r.seed, results, checks);
    Ok(Outcome { report, csv })
}

/// The selftest as a run report.
pub fn run_selftest(seed: u64) -> Outcome {
    let suite = crate::selftest::run(seed);
    let checks = suite.iter().map(|c| CheckOutcome::new(c.id.clone(), c.passed, Some(json!(c.detail)))).collect();
    let digest = sha256_hex(format!("selftest:{seed}").as_bytes());
    let report = RunReport::new("selftest", digest, seed, to_value(&suite), checks);
    let mut text = String::from("id,passed\n");
    for c in &suite {
        text.push_str(&format!("{},{}\n", c.id, c.passed));
    }
    Outcome { report, csv: Some(text) }
}

pub fn exit_code(err: &RiskError) -> i32 {
    if err.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("RISKENV_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RiskError::InvalidInput(format!("RISKENV_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RiskError::InvalidInput(format!("thread pool: {e}")))
}

fn emit(outcome: &Outcome, g: &GlobalArgs) -> Result<()> {
    let body = match (g.format, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (Format::Csv, None) => outcome.report.checks_csv(),
        (Format::Json, _) => {
            let mut s = serde_json::to_string_pretty(&outcome.report)?;
            s.push('\n');
            s
        }
    };
    match &g.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let selftest = cli.selftest || matches!(cli.command, Some(Command::Selftest));
    let outcome = if selftest {
        let o = run_selftest(cli.global.seed.unwrap_or(0));
        eprint!("{}", o.report.scorecard());
        o
    } else {
        let cmd = cli.command.ok_or_else(|| RiskError::InvalidInput("no command given; see --help".into()))?;
        let path = cli.global.model.as_ref().ok_or_else(|| RiskError::InvalidInput("--model is required".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| RiskError::InvalidInput(format!("{}: {e}", path.display())))?;
        let model = Model::parse(&text)?;
        execute(&model, &cmd, &cli.global)?
    };
    emit(&outcome, &cli.global)?;
    Ok(if outcome.report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
