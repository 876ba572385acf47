//! `eflab`: play games, transform and evaluate sentences, build nets, run
//! the verification suite and re-adjudicate transcripts.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 referee forfeit,
//! 3 check failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eflab_core::algebra::make_algebra;
use eflab_core::banach::{build_net, cover_check, subspace_span, CoverReport, NetConfig, NetRecord, Variant};
use eflab_core::eval::{eval_sentence, EvalConfig};
use eflab_core::formula::{op_transform, parse, unitary_transform, UnitaryMode};
use eflab_core::games::{parse_element, play, readjudicate, GameConfig, GameKind, GameTranscript};
use eflab_core::verify::{self, CheckReport, DEFAULT_TRIALS};

const NET_SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "eflab", version, about = "Metric Ehrenfeucht-Fraisse games over tracial algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Seed for every random choice; falls back to EF_LAB_SEED.
    #[arg(long, env = "EF_LAB_SEED")]
    seed: Option<u64>,
}

impl SeedArg {
    fn require(&self, what: &str) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| Failure::usage(format!("{what} is stochastic: pass --seed or set EF_LAB_SEED")))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and write its transcript.
    Play {
        /// atomic, banach, unitary (unitary-gram) or representability.
        #[arg(long)]
        game: GameKind,
        #[arg(long = "M")]
        m: String,
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        eps: f64,
        /// Player I strategy (default: haar).
        #[arg(long)]
        p1: Option<String>,
        /// Player II strategy (default: copy, or solver for representability).
        #[arg(long)]
        p2: Option<String>,
        /// Quantifier-free formula of the atomic game; repeatable.
        #[arg(long = "formula")]
        formulas: Vec<String>,
        /// Almost-isometry variant of the banach game.
        #[arg(long, default_value = "definition")]
        variant: Variant,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a sentence in an algebra.
    Eval {
        #[arg(long)]
        algebra: String,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// Outer and inner local-search iterations.
        #[arg(long, num_args = 2, value_names = ["OUTER", "INNER"])]
        iterations: Option<Vec<usize>>,
        /// Evaluate in the opposite algebra.
        #[arg(long)]
        opposite: bool,
        file: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a sentence as σ^op, σ^u or σ^uu.
    Transform {
        #[command(flatten)]
        which: TransformKind,
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build an ε/2-net of the unit-ball slice of a span and check its cover.
    Net {
        #[arg(long)]
        algebra: String,
        /// Spanning elements separated by `;` (e.g. "one; diag(1,-1)"), or
        /// `haar:K` for K Haar unitaries.
        #[arg(long)]
        span: String,
        #[arg(long)]
        eps: f64,
        /// Probabilistic cover-check samples.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Include the net points in the output.
        #[arg(long)]
        points: bool,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        /// Run every registered check.
        #[arg(long, conflicts_with = "check")]
        all: bool,
        /// Run one named check; repeatable.
        #[arg(long)]
        check: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Algebra specs separated by `;` (default: the standard battery).
        #[arg(long)]
        battery: Option<String>,
        /// Directory receiving one report file per check.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        /// Aggregate summary path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-run the referee on a transcript, optionally at another ε.
    Readjudicate {
        file: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TransformKind {
    #[arg(long)]
    op: bool,
    #[arg(long)]
    u: bool,
    #[arg(long)]
    uu: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::usage(e.to_string())
    }
}

#[derive(Serialize)]
struct NetOutput {
    schema_version: u32,
    algebra: String,
    span: String,
    seed: u64,
    net: NetRecord,
    cover: CoverReport,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn transcript_status(t: &GameTranscript) -> u8 {
    if t.verdict.forfeit {
        2
    } else {
        0
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Play { game, m, n, rounds, eps, p1, p2, formulas, variant, seed, out } => {
            let mut cfg = GameConfig::new(game, rounds, eps, &m, &n, seed.require("play")?);
            if let Some(p) = p1 {
                cfg.player1 = p;
            }
            if let Some(p) = p2 {
                cfg.player2 = p;
            }
            cfg.formulas = formulas;
            cfg.variant = variant;
            let t = play(&cfg)?;
            emit(out.as_deref(), &format!("{}\n", t.to_json()))?;
            eprintln!("{}: {}", t.verdict.winner, t.verdict.reason);
            Ok(transcript_status(&t))
        }
        Command::Eval { algebra, restarts, iterations, opposite, file, seed, out } => {
            let sigma = parse(&read(&file)?)?;
            let alg = Arc::new(make_algebra(&algebra)?);
            let mut cfg = EvalConfig::new(seed.require("eval")?).with_restarts(restarts).opposite(opposite);
            if let Some(it) = iterations {
                cfg = cfg.with_iterations(it[0], it[1]);
            }
            let r = eval_sentence(&sigma, &alg, &cfg)?;
            emit(out.as_deref(), &json(&r.report(&sigma, &alg)))?;
            Ok(0)
        }
        Command::Transform { which, file, out } => {
            let sigma = parse(&read(&file)?)?;
            let t = if which.op {
                op_transform(&sigma)
            } else if which.u {
                unitary_transform(&sigma, UnitaryMode::U)?
            } else {
                unitary_transform(&sigma, UnitaryMode::Uu)?
            };
            emit(out.as_deref(), &format!("{t}\n"))?;
            Ok(0)
        }
        Command::Net { algebra, span, eps, samples, points, seed, out } => {
            let seed = seed.require("net")?;
            let alg = Arc::new(make_algebra(&algebra)?);
            let vectors = match span.trim().strip_prefix("haar:") {
                Some(k) => {
                    let k: u64 = k.trim().parse().map_err(|_| Failure::usage(format!("bad count in `{span}`")))?;
                    (0..k).map(|i| eflab_core::algebra::haar_unitary(&alg, eflab_core::rng::derive_seed(seed, &[i])).into_element()).collect()
                }
                None => span
                    .split(';')
                    .map(|s| parse_element(s.trim(), &alg))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let e = subspace_span(&alg, &vectors)?;
            let net = build_net(&e, eps, &NetConfig { seed, ..NetConfig::default() })?;
            let cover = cover_check(&net, &e, samples, eflab_core::rng::derive_seed(seed, &[u64::MAX]));
            let mut record = net.to_record();
            if !points {
                record.points.clear();
            }
            let passed = cover.passed;
            emit(out.as_deref(), &json(&NetOutput { schema_version: NET_SCHEMA, algebra, span, seed, net: record, cover }))?;
            Ok(if passed { 0 } else { 3 })
        }
        Command::Verify { all, check, trials, battery, out_dir, seed, out } => {
            let seed = seed.require("verify")?;
            let battery = match battery {
                Some(b) => b.split(';').map(|s| s.trim().to_string()).collect(),
                None => verify::default_battery(),
            };
            let summary = if all || check.is_empty() {
                verify::run_all(&battery, trials, seed)?
            } else {
                let reports = check
                    .iter()
                    .map(|name| verify::run_check(name, &battery, trials, seed))
                    .collect::<Result<Vec<CheckReport>, _>>()?;
                let passed = reports.iter().filter(|r| r.pass).count();
                verify::SuiteSummary {
                    schema_version: verify::REPORT_SCHEMA,
                    seed,
                    trials,
                    passed,
                    failed: reports.len() - passed,
                    reports,
                }
            };
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
                for r in &summary.reports {
                    emit(Some(&dir.join(format!("{}.json", r.name))), &json(r))?;
                }
            }
            for r in &summary.reports {
                eprintln!("{} {} (worst slack {:e})", if r.pass { "PASS" } else { "FAIL" }, r.name, r.worst_slack);
            }
            emit(out.as_deref(), &json(&summary))?;
            Ok(if summary.failed == 0 { 0 } else { 3 })
        }
        Command::Readjudicate { file, eps, out } => {
            let t = GameTranscript::from_json(&read(&file)?)?;
            let again = readjudicate(&t, eps)?;
            emit(out.as_deref(), &format!("{}\n", again.to_json()))?;
            eprintln!("{}: {}", again.verdict.winner, again.verdict.reason);
            Ok(transcript_status(&again))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
