use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ltlf_bt::bt::export_dot;
use ltlf_bt::compiler::compile_mission_tree;
use ltlf_bt::experiments::{
    run_keydoor, run_learning_outcomes, run_sweep, summarize, KeyDoorReport, LearningConfig,
    LearningRow, Mode, ScenarioScript, SweepConfig,
};
use ltlf_bt::gridworld::GridConfig;
use ltlf_bt::ltlf::Alphabet;
use ltlf_bt::mission::{
    parse_mission, parse_mission_file, MissionConfig, MissionError, MissionExpr,
};
use ltlf_bt::planners::{evaluate_policy, EvalConfig, EvalOutcome, Policy};
use ltlf_bt::verify::{check_mission, fuzz_alphabet, random_mission, InclusionReport};

/// Mission compiler, simulator and bounded checker for LTLf task missions.
#[derive(Debug, Parser)]
#[command(name = "ltlf-bt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a mission file and print its syntax tree as JSON.
    Parse {
        #[arg(long)]
        mission: PathBuf,
        /// Grid config whose alphabet is used when the file has no `props`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a mission to a behavior tree (JSON and optionally DOT).
    Compile {
        #[arg(long)]
        mission: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tick budget of the mission root and action nodes.
        #[arg(long, default_value_t = 50)]
        max_trace: u32,
        #[arg(long, default_value_t = 0)]
        theta: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Policy-iteration sweep over rewards and slip probability (CSV).
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        max_trace: Option<usize>,
        /// Discount factor of policy iteration.
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        theta: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn task policies from mission feedback, then evaluate them.
    Learn {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Independent learning runs per slip probability.
        #[arg(long)]
        runs: Option<usize>,
        /// Inference trials per learned policy.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        max_trace: Option<usize>,
        /// Feedback discount of the learning update.
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        theta: Option<u32>,
        /// Output directory for rows, curves, summary and policies.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate policies written by `learn`.
    Infer {
        /// Policy JSON file written by `learn`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        max_trace: Option<usize>,
        #[arg(long)]
        theta: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounded check that every successful tree trace satisfies the mission.
    Verify {
        /// Mission to check; without it a fuzzed corpus is checked.
        #[arg(long)]
        mission: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of fuzzed missions.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Trace bound; also the tick budget.
        #[arg(long, default_value_t = 5)]
        max_trace: usize,
        #[arg(long, default_value_t = 1)]
        theta: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scripted key-door scenario with perturbations.
    Keydoor {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        theta: Option<u32>,
        /// Make perturbations permanent.
        #[arg(long)]
        irreversible: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Baseline,
    Bt,
    Both,
}

/// Column order of sweep rows, written alone when there are no rows.
const SWEEP_HEADER: [&str; 10] = [
    "cell",
    "r_other",
    "r_good",
    "r_fire",
    "p_in",
    "n_trials",
    "success_probability",
    "mean_trace_length",
    "violations",
    "seed",
];

/// Mission file in JSON form.
#[derive(Debug, Serialize, Deserialize)]
struct MissionDoc {
    alphabet: Alphabet,
    mission: MissionExpr,
}

/// Learned tables of one run, as written by `learn` and read by `infer`.
#[derive(Debug, Serialize, Deserialize)]
struct PolicyRecord {
    p_in: f64,
    run: usize,
    seed: u64,
    grid: GridConfig,
    cheese: Policy,
    home: Policy,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    p_in: f64,
    run: usize,
    seed: u64,
    episode: usize,
    status: &'static str,
    trace_len: usize,
    cheese_reached: bool,
}

#[derive(Debug, Serialize)]
struct InferRow {
    p_in: f64,
    run: usize,
    seed: u64,
    #[serde(flatten)]
    outcome: EvalOutcome,
}

#[derive(Debug, Serialize)]
struct VerifyEntry {
    mission: String,
    report: InclusionReport,
}

enum Outcome {
    Ok,
    Violation,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Parse {
            mission,
            config,
            out,
        } => {
            let doc = load_mission(&mission, config.as_deref())?;
            emit(out.as_deref(), &to_json(&doc)?)?;
            Ok(Outcome::Ok)
        }
        Command::Compile {
            mission,
            config,
            max_trace,
            theta,
            out,
            dot,
        } => {
            let doc = load_mission(&mission, config.as_deref())?;
            let cfg = MissionConfig::new(max_trace, theta, doc.alphabet)?;
            let tree = compile_mission_tree(&doc.mission, &cfg)?;
            if let Some(path) = &dot {
                write_file(path, &export_dot(&tree))?;
            }
            if out.is_some() || dot.is_none() {
                emit(out.as_deref(), &to_json(&tree)?)?;
            }
            Ok(Outcome::Ok)
        }
        Command::Sweep {
            config,
            seed,
            trials,
            max_trace,
            discount,
            theta,
            out,
        } => {
            let mut cfg: SweepConfig = load_config(config.as_deref())?;
            set(&mut cfg.seed, seed);
            set(&mut cfg.n_trials, trials);
            set(&mut cfg.max_trace, max_trace);
            set(&mut cfg.gamma, discount);
            set(&mut cfg.theta, theta);
            let rows = run_sweep(&cfg)?;
            if let Some(row) = rows.iter().find(|r| r.violations > 0) {
                eprintln!(
                    "audit violation in sweep cell {} (seed {}): {} traces",
                    row.cell, row.seed, row.violations
                );
                if let Some(trace) = &row.counterexample {
                    eprintln!("counterexample: {trace}");
                }
                return Ok(Outcome::Violation);
            }
            let csv = if rows.is_empty() {
                format!("{}\n", SWEEP_HEADER.join(","))
            } else {
                to_csv(&rows)?
            };
            emit(out.as_deref(), &csv)?;
            Ok(Outcome::Ok)
        }
        Command::Learn {
            config,
            seed,
            runs,
            trials,
            episodes,
            max_trace,
            discount,
            theta,
            out,
        } => {
            let mut cfg: LearningConfig = load_config(config.as_deref())?;
            set(&mut cfg.seed, seed);
            set(&mut cfg.runs, runs);
            set(&mut cfg.eval.n_trials, trials);
            set(&mut cfg.learner.episodes, episodes);
            set(&mut cfg.learner.max_trace, max_trace);
            set(&mut cfg.eval.max_trace, max_trace);
            set(&mut cfg.learner.discount, discount);
            set(&mut cfg.learner.theta, theta);
            set(&mut cfg.eval.theta, theta);
            learn(&cfg, out.as_deref())
        }
        Command::Infer {
            config,
            seed,
            trials,
            max_trace,
            theta,
            out,
        } => {
            let text = read(&config)?;
            let records: Vec<PolicyRecord> = serde_json::from_str(&text)
                .with_context(|| format!("reading policies from {}", config.display()))?;
            let mut eval = EvalConfig::default();
            set(&mut eval.seed, seed);
            set(&mut eval.n_trials, trials);
            set(&mut eval.max_trace, max_trace);
            set(&mut eval.theta, theta);
            let mut rows = Vec::with_capacity(records.len());
            for (i, rec) in records.iter().enumerate() {
                let cfg = EvalConfig {
                    seed: ltlf_bt::planners::derive_seed(eval.seed, i as u64),
                    ..eval.clone()
                };
                let outcome = evaluate_policy(&rec.grid, &rec.cheese, &rec.home, &cfg)?;
                if let Some(trace) = &outcome.counterexample {
                    eprintln!("audit violation for policy {i}: {trace}");
                    return Ok(Outcome::Violation);
                }
                rows.push(InferRow {
                    p_in: rec.p_in,
                    run: rec.run,
                    seed: cfg.seed,
                    outcome,
                });
            }
            emit(out.as_deref(), &to_json(&rows)?)?;
            Ok(Outcome::Ok)
        }
        Command::Verify {
            mission,
            config,
            trials,
            seed,
            max_trace,
            theta,
            out,
        } => {
            let t = u32::try_from(max_trace).context("--max-trace is too large")?;
            let missions = match &mission {
                Some(path) => vec![load_mission(path, config.as_deref())?],
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..trials)
                        .map(|_| MissionDoc {
                            alphabet: fuzz_alphabet(),
                            mission: random_mission(&mut rng, 3),
                        })
                        .collect()
                }
            };
            let mut entries = Vec::with_capacity(missions.len());
            let mut violating = 0;
            for doc in missions {
                let cfg = MissionConfig::new(t, theta, doc.alphabet)?;
                let report = check_mission(&doc.mission, &cfg, max_trace)?;
                if report.n_violations > 0 {
                    violating += 1;
                    eprintln!(
                        "{} violating traces for {}",
                        report.n_violations, doc.mission
                    );
                    eprint!("{}", report.counterexamples_csv());
                }
                entries.push(VerifyEntry {
                    mission: doc.mission.to_string(),
                    report,
                });
            }
            emit(out.as_deref(), &to_json(&entries)?)?;
            eprintln!("{violating}/{} missions with violations", entries.len());
            Ok(if violating > 0 {
                Outcome::Violation
            } else {
                Outcome::Ok
            })
        }
        Command::Keydoor {
            config,
            mode,
            seed,
            theta,
            irreversible,
            out,
        } => {
            let mut script: ScenarioScript = load_config(config.as_deref())?;
            set(&mut script.seed, seed);
            set(&mut script.theta, theta);
            if irreversible {
                script.reversible = false;
            }
            let modes = match mode {
                ModeArg::Baseline => vec![Mode::Baseline],
                ModeArg::Bt => vec![Mode::Bt],
                ModeArg::Both => vec![Mode::Baseline, Mode::Bt],
            };
            let reports = modes
                .into_iter()
                .map(|m| run_keydoor(&script, m))
                .collect::<Result<Vec<KeyDoorReport>, _>>()?;
            for r in &reports {
                eprintln!(
                    "{:?}: undisturbed {}/{}, disturbed {}/{}",
                    r.mode,
                    r.undisturbed_successes,
                    r.undisturbed,
                    r.disturbed_successes,
                    r.disturbed
                );
            }
            emit(out.as_deref(), &to_json(&reports)?)?;
            Ok(Outcome::Ok)
        }
    }
}

fn learn(cfg: &LearningConfig, out: Option<&Path>) -> Result<Outcome> {
    let results = run_learning_outcomes(cfg)?;
    if let Some((row, _)) = results.iter().find(|(row, _)| row.violations > 0) {
        eprintln!(
            "audit violation in run {} at p_in {} (seed {})",
            row.run, row.p_in, row.seed
        );
        if let Some(trace) = &row.counterexample {
            eprintln!("counterexample: {trace}");
        }
        return Ok(Outcome::Violation);
    }
    let rows: Vec<LearningRow> = results.iter().map(|(row, _)| row.clone()).collect();
    let summary = summarize(&rows);
    for s in &summary {
        eprintln!(
            "p_in {:.2}: learning {:.3} (len {:.1}), inference {:.3} (len {:.1})",
            s.p_in,
            s.learning_success,
            s.learning_trace_length,
            s.inference_success,
            s.inference_trace_length
        );
    }
    let Some(dir) = out else {
        print!("{}", to_csv(&rows)?);
        return Ok(Outcome::Ok);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(&dir.join("learning.csv"), &to_csv(&rows)?)?;
    write_file(&dir.join("summary.json"), &to_json(&summary)?)?;
    let curves: Vec<CurveRow> = results
        .iter()
        .flat_map(|(row, outcome)| {
            outcome.curve.iter().map(move |e| CurveRow {
                p_in: row.p_in,
                run: row.run,
                seed: row.seed,
                episode: e.episode,
                status: if e.success { "success" } else { "failure" },
                trace_len: e.trace_len,
                cheese_reached: e.cheese_reached,
            })
        })
        .collect();
    write_file(&dir.join("curves.csv"), &to_csv(&curves)?)?;
    let policies: Vec<PolicyRecord> = results
        .into_iter()
        .map(|(row, outcome)| PolicyRecord {
            p_in: row.p_in,
            run: row.run,
            seed: row.seed,
            grid: GridConfig {
                p_in: row.p_in,
                ..cfg.grid.clone()
            },
            cheese: outcome.cheese,
            home: outcome.home,
        })
        .collect();
    write_file(&dir.join("policies.json"), &to_json(&policies)?)?;
    Ok(Outcome::Ok)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config<T: Default + for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => serde_json::from_str(&read(p)?)
            .with_context(|| format!("invalid config {}", p.display())),
    }
}

/// Reads a mission as JSON, as text with `props`, or as text over the grid
/// alphabet.
fn load_mission(path: &Path, grid: Option<&Path>) -> Result<MissionDoc> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        let doc: MissionDoc = serde_json::from_str(&text)
            .with_context(|| format!("invalid mission JSON {}", path.display()))?;
        doc.mission.validate(&doc.alphabet)?;
        return Ok(doc);
    }
    let parsed = match parse_mission_file(&text) {
        Ok(file) => Ok(MissionDoc {
            alphabet: file.alphabet,
            mission: file.mission,
        }),
        Err(MissionError::Syntax { expected, .. }) if expected == "`props` declaration" => {
            let grid: GridConfig = load_config(grid)?;
            let alphabet = grid.alphabet();
            parse_mission(&text, &alphabet).map(|mission| MissionDoc { alphabet, mission })
        }
        Err(e) => Err(e),
    };
    parsed.with_context(|| format!("in {}", path.display()))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes)?)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}
