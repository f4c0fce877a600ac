//! Command-line front end: alignment checks, scenario simulation, audits,
//! causality verdicts, scenario generation, and purpose grounding.
//!
//! Exit codes: 0 success or aligned; 1 misaligned or a failed causality
//! condition; 2 validation or parse error; 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use purpose_align::alignment::{self, AlignmentCase, AlignmentModel};
use purpose_align::causality::{self, Baseline, CostTable, InterventionSpec};
use purpose_align::grounding;
use purpose_align::scenario::{self, ReportFormat, ScenarioSpec};

#[derive(Parser)]
#[command(name = "purpose-align", version, about = "Purpose-to-goal alignment toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Extrinsic,
    Vut,
    Vumax,
    Intrinsic,
    Instrumental,
    Proscriptive,
    MultidomainAll,
    MultidomainAny,
}

impl CaseArg {
    fn to_case(self, threshold: f64) -> AlignmentCase {
        match self {
            CaseArg::Extrinsic => AlignmentCase::Extrinsic,
            CaseArg::Vut => AlignmentCase::VariableUtilityThreshold(threshold),
            CaseArg::Vumax => AlignmentCase::VariableUtilityMax,
            CaseArg::Intrinsic => AlignmentCase::Intrinsic,
            CaseArg::Instrumental => AlignmentCase::Instrumental,
            CaseArg::Proscriptive => AlignmentCase::InstrumentalProscriptive,
            CaseArg::MultidomainAll => AlignmentCase::MultiDomainAll,
            CaseArg::MultidomainAny => AlignmentCase::MultiDomainAny,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Semantic,
    Operational,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Idle,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an alignment case on the scenario's embedded model.
    Check {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, value_enum, default_value = "semantic")]
        mode: ModeArg,
        /// Threshold for the variable-utility case.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Execute the trial schedule and emit the report.
    Simulate {
        scenario: PathBuf,
        /// Truncate the schedule to this many trials.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// Cross-validate semantic and operational checks on random models.
    Audit {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Actual-causality verdict on the scenario's embedded model.
    Cause {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "idle")]
        baseline: BaselineArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the built-in home-robot scenario.
    GenHomeScenario {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground a purpose into a goal for one domain.
    Ground {
        scenario: PathBuf,
        #[arg(long)]
        purpose: String,
        #[arg(long)]
        domain: String,
        /// Context tag selecting among tagged encoders.
        #[arg(long)]
        tag: Option<String>,
    },
}

const EXIT_MISALIGNED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ScenarioSpec, ExitCode> {
    scenario::load_scenario(path).map_err(|e| fail(EXIT_INVALID, e))
}

fn embedded_model(spec: &ScenarioSpec) -> Result<&AlignmentModel, ExitCode> {
    spec.model
        .as_ref()
        .ok_or_else(|| fail(EXIT_INVALID, "scenario has no embedded model"))
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check { scenario: path, case, mode, threshold, seed, report } => {
            let spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let model = match embedded_model(&spec) {
                Ok(m) => m,
                Err(code) => return code,
            };
            let case = case.to_case(threshold);
            let verdict = match mode {
                ModeArg::Semantic => alignment::check_conditions(model, &case),
                ModeArg::Operational => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    alignment::check_definition(model, &case, &mut rng)
                }
            };
            match verdict {
                Ok(v) => {
                    let rendered =
                        serde_json::to_string_pretty(&v).expect("verdict serializes");
                    if let Some(path) = report {
                        if let Err(e) = std::fs::write(&path, &rendered) {
                            return fail(EXIT_RUNTIME, e);
                        }
                    }
                    println!("{rendered}");
                    if v.aligned {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_MISALIGNED)
                    }
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Simulate { scenario: path, trials, seed, report, format } => {
            let mut spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            if let Some(n) = trials {
                spec.schedule.truncate(n);
                spec.phases.retain(|p| p.first_trial <= spec.schedule.len());
                for p in &mut spec.phases {
                    p.last_trial = p.last_trial.min(spec.schedule.len());
                }
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            match scenario::run_trials(&spec, &mut rng) {
                Ok(doc) => {
                    let fmt = match format {
                        FormatArg::Json => ReportFormat::Json,
                        FormatArg::Text => ReportFormat::Text,
                    };
                    let rendered = scenario::render_report(&doc, fmt);
                    if let Some(path) = report {
                        if let Err(e) = std::fs::write(&path, &rendered) {
                            return fail(EXIT_RUNTIME, e);
                        }
                    } else {
                        print!("{rendered}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::Audit { case, threshold, count, seed } => {
            let case = case.to_case(threshold);
            let report = alignment::equivalence_audit(&case, count, seed);
            println!(
                "case {:?}: {}/{} agree, {} aligned, {} disagreements",
                report.case,
                report.agreements,
                report.total,
                report.aligned_count,
                report.disagreements.len()
            );
            for d in &report.disagreements {
                println!(
                    "  seed {}: semantic {} vs operational {}",
                    d.seed, d.semantic, d.operational
                );
            }
            if report.disagreements.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_MISALIGNED)
            }
        }
        Command::Cause { scenario: path, baseline, seed } => {
            let spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let model = match embedded_model(&spec) {
                Ok(m) => m,
                Err(code) => return code,
            };
            let intention = match &model.intention {
                Some(i) => i.clone(),
                None => return fail(EXIT_INVALID, "model has no intention"),
            };
            let do_goal = match model.pursued_goal.clone() {
                Some(g) => g,
                None => return fail(EXIT_INVALID, "model has no pursued goal"),
            };
            let horizon = model
                .domains
                .get(&intention.domain)
                .map(|d| d.states.len().max(model.chain_timeout))
                .unwrap_or(model.chain_timeout);
            let spec = InterventionSpec {
                do_goal,
                baseline: match baseline {
                    BaselineArg::Idle => Baseline::Idle,
                    BaselineArg::Random => Baseline::Random,
                },
                horizon,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = match causality::pursue_trace(model) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_RUNTIME, e),
            };
            match causality::causal_verdict(model, &spec, &trace, &CostTable::default(), &mut rng)
            {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
                    if v.overall {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_MISALIGNED)
                    }
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
        Command::GenHomeScenario { out } => {
            let spec = scenario::build_home_robot_scenario();
            let text = scenario::spec_to_string(&spec);
            match out {
                Some(path) => match std::fs::write(&path, text) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(EXIT_RUNTIME, e),
                },
                None => {
                    println!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
        Command::Ground { scenario: path, purpose, domain, tag } => {
            let spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let Some(p) = spec.purposes.iter().find(|p| p.id == purpose) else {
                return fail(EXIT_INVALID, format!("unknown purpose `{purpose}`"));
            };
            let encoder = spec
                .encoders
                .iter()
                .filter(|te| te.encoder.space == p.space && te.encoder.domain == domain)
                .find(|te| tag.is_none() || te.tag.is_none() || te.tag == tag)
                .map(|te| &te.encoder);
            let Some(encoder) = encoder else {
                return fail(
                    EXIT_INVALID,
                    format!("no encoder for space `{}` in domain `{domain}`", p.space),
                );
            };
            match grounding::ground_purpose(p, encoder) {
                Ok(goal) => {
                    println!("{}", serde_json::to_string_pretty(&goal).expect("serializes"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_RUNTIME, e),
            }
        }
    }
}
