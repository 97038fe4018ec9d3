use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Args;
use rfnet::netlist::{parse, ParamValues};
use rfnet::optimize::{size, Individual, Nsga2Config, OptimizeError, Simulator, SizingProblem, Target, VerifyReport};
use rfnet::surrogate::ModelBank;
use serde::{Deserialize, Serialize};

use crate::context::{stem, usage_error, Classify, CmdResult, Ctx, Exit};
use crate::models::BankFile;
use crate::Global;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulatorKind {
    #[default]
    ComposedModel,
    Oracle,
}

/// Problem file. Paths are relative to the file itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub netlist: PathBuf,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub simulator: SimulatorKind,
    /// Model banks, one per target frequency.
    #[serde(default)]
    pub models: Vec<PathBuf>,
    #[serde(default)]
    pub nsga2: Nsga2Config,
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    pub problem: PathBuf,
    /// Output stem; defaults to the problem file's.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Serialize)]
struct Candidate {
    values: ParamValues,
    objectives: Vec<f64>,
    violation: f64,
}

#[derive(Debug, Serialize)]
struct SizeResult<'a> {
    best: &'a ParamValues,
    report: &'a VerifyReport,
    evaluations: usize,
    failures: usize,
    surrogate_calls: usize,
    oracle_calls: usize,
    pareto: Vec<Candidate>,
}

fn classify(e: OptimizeError) -> Exit {
    match e {
        OptimizeError::Simulation(_) => Exit::Domain(e.into()),
        _ => Exit::Usage(e.into()),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn run(mut ctx: Ctx, global: &Global, args: SizeArgs) -> CmdResult<()> {
    let text = ctx.read(&args.problem)?;
    let mut problem: ProblemFile = serde_json::from_str(&text)
        .with_context(|| format!("{}: not a sizing problem", args.problem.display()))
        .usage()?;
    let base = args.problem.parent().unwrap_or(Path::new(".")).to_path_buf();
    if ctx.config_path_given() {
        problem.nsga2 = ctx.config()?;
    }
    if let Some(s) = ctx.seed {
        problem.nsga2.seed = s;
    }
    ctx.record_config(&problem);
    ctx.record_seed("base", problem.nsga2.seed);

    let net_path = resolve(&base, &problem.netlist);
    let net_text = ctx.read(&net_path)?;
    let netlist = parse(&net_text).with_context(|| net_path.display().to_string()).usage()?;
    let sp = SizingProblem::new(netlist, problem.targets.clone(), global.z0).map_err(classify)?;

    let banks: Vec<ModelBank> = match problem.simulator {
        SimulatorKind::Oracle => Vec::new(),
        SimulatorKind::ComposedModel => {
            if problem.models.is_empty() {
                return usage_error("the composed-model simulator needs at least one model bank in `models`");
            }
            let mut out = Vec::new();
            for p in &problem.models {
                let text = ctx.read(&resolve(&base, p))?;
                out.push(BankFile::from_json(&text)?);
            }
            out
        }
    };
    let sim = if banks.is_empty() { Simulator::Oracle } else { Simulator::Surrogate(&banks) };
    let outcome = size(&sp, sim, &problem.nsga2).map_err(classify)?;

    let pareto = outcome
        .evolution
        .pareto
        .iter()
        .map(|ind: &Individual| Candidate {
            values: sp.decode(&ind.genome),
            objectives: ind.objectives.clone(),
            violation: ind.violation,
        })
        .collect();
    let result = SizeResult {
        best: &outcome.best,
        report: &outcome.report,
        evaluations: outcome.evolution.evaluations,
        failures: outcome.evolution.failures,
        surrogate_calls: outcome.surrogate_calls,
        oracle_calls: outcome.oracle_calls,
        pareto,
    };
    let name = args.name.unwrap_or_else(|| stem(&args.problem));
    ctx.write_json(&format!("{name}.result.json"), &result)?;
    ctx.write(&format!("{name}.stats.csv"), &outcome.evolution.stats_csv())?;
    ctx.write(&format!("{name}.verify.csv"), &outcome.report.to_csv())?;

    for (k, v) in &outcome.best {
        println!("{k} = {v:e}");
    }
    print!("{}", outcome.report.to_csv());
    println!(
        "{}: targets {} on the oracle ({} surrogate calls, {} oracle calls)",
        name,
        if outcome.report.pass { "met" } else { "NOT met" },
        outcome.surrogate_calls,
        outcome.oracle_calls
    );
    ctx.finish(&name)
}
