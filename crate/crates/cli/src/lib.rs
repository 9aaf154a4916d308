//! The `dfpb` command line.
//!
//! Exit status is 0 on success, 1 for invalid input or a failed check (with a
//! single `error[<code>]: ...` line on stderr) and 2 for filesystem errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfpb_core::df1::{
    amplified_greedy, df1_complete, solve_df1_pipeline, solve_within_budget, Df1pQuery, PipelineResult, Subroutine,
};
use dfpb_core::exact::{oracle_solve, solve_exact_dp_with, ExactDpConfig};
use dfpb_core::hardness::{export_dflp, gap_instance, reduce_x3c, GapParams, X3cInput};
use dfpb_core::io::{self, SolutionFile};
use dfpb_core::lottery::{mw_regret_check, run_mw_lottery, MwConfig, SwMaxMode};
use dfpb_core::model::is_df1;
use dfpb_core::rational::{self, Rational};
use dfpb_core::report::RunReport;
use dfpb_core::uga::{solve_uga_traced, UnanimityCertificate};
use dfpb_core::{Error, FairShareProfile, Instance, Outcome, Result};

pub const THREADS_ENV: &str = "DFPB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dfpb", version, about = "District-fair participatory budgeting solvers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Write the run report as JSON to this file.
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Worker threads (falls back to DFPB_THREADS, then 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Leave wall time out of reports, for byte-identical reruns.
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an instance file and print a summary.
    Validate { instance: PathBuf },
    /// Print every district's fair share and witness.
    Shares { instance: PathBuf },
    /// Exact district-fair optimum.
    SolveExact {
        instance: PathBuf,
        /// Use exhaustive search instead of the dynamic program.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = dfpb_core::exact::DEFAULT_MAX_DISTRICTS)]
        max_districts: usize,
        /// Write the outcome here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Lottery over welfare-optimal outcomes, fair in expectation up to ε.
    SolveLottery {
        instance: PathBuf,
        #[arg(long, default_value = "1")]
        eps: String,
        /// Override the number of iterations.
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, value_enum, default_value_t = SwMaxArg::All)]
        sw_max: SwMaxArg,
        /// Write the lottery here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Write the per-iteration trace here.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Fair up to one project, possibly overspending.
    SolveDf1 {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Tolerated coverage shortfall as a fraction of the budget.
        #[arg(long, default_value = "0")]
        allowance: String,
        /// Solve against shares scaled by β so the result fits the budget.
        #[arg(long)]
        beta: Option<String>,
        /// Add this many randomized greedy runs and keep the best coverage.
        #[arg(long)]
        amplify: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Greedy for unanimous districts with unit costs.
    SolveUga {
        instance: PathBuf,
        /// Print the pick sequence.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Build the instance reducing an exact-cover question.
    GenX3c {
        /// JSON file {"n": .., "sets": [[a, b, c], ..]} with 0-based elements.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Build the circular integrality-gap instance.
    GenGap {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: String,
        #[arg(long = "B", value_name = "B")]
        big_b: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write the LP relaxation in LP text format.
    ExportLp {
        instance: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Re-check a stored outcome or lottery against an instance.
    Report {
        instance: PathBuf,
        #[arg(long, value_name = "FILE")]
        solution: PathBuf,
        /// Guarantee to verify; `eps=P/Q` checks expected welfare ≥ f_i − ε.
        #[arg(long, default_value = "feasible")]
        expect: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SwMaxArg {
    All,
    Feasible,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Greedy,
}

/// Runs the command line with `argv` (including the program name) and
/// returns the exit status.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let threads = match threads(cli.common.threads) {
        Ok(t) => t,
        Err(e) => return fail(err, &e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return fail(err, &Error::Capability(format!("thread pool: {e}"))),
    };
    // solvers run on the pool; their text is buffered and flushed afterwards
    let mut buf = Vec::new();
    let result = pool.install(|| execute(&cli, threads, &mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => 0,
        Err(e) => fail(err, &e),
    }
}

fn fail(err: &mut dyn Write, e: &Error) -> i32 {
    let text = e.to_string();
    let code = e.code();
    let line = text.strip_prefix(code).and_then(|t| t.strip_prefix(": ")).unwrap_or(&text).replace('\n', " ");
    let _ = writeln!(err, "error[{code}]: {line}");
    if e.is_io() {
        2
    } else {
        1
    }
}

fn threads(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Validation(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(Error::Validation("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn parse_rational(flag: &str, s: &str) -> Result<Rational> {
    rational::parse(s).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("--{flag}: {m}")),
        other => other,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

struct Ctx<'a> {
    common: &'a Common,
    threads: usize,
    start: Instant,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn print(&mut self, text: &str) {
        let _ = write!(self.out, "{text}");
    }

    fn selected(&mut self, inst: &Instance, w: &Outcome) {
        let line = format!("outcome {}, welfare {}\n", inst.describe(w), inst.total_welfare(w));
        self.print(&line);
    }

    fn finish(&mut self, mut report: RunReport) -> Result<()> {
        report = report
            .with_config("threads", self.threads)
            .with_config("seed", self.common.seed);
        if !self.common.no_timing {
            report.wall_time_ms = Some(self.start.elapsed().as_millis() as u64);
        }
        self.print(&report.to_table());
        if let Some(path) = &self.common.json {
            io::write_report(path, &report)?;
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<(Instance, FairShareProfile)> {
    let instance = io::load_instance(path)?;
    let shares = dfpb_core::fair_shares::try_compute_fair_shares(&instance)?;
    Ok((instance, shares))
}

fn execute(cli: &Cli, threads: usize, out: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx {
        common: &cli.common,
        threads,
        start: Instant::now(),
        out,
    };
    match &cli.command {
        Command::Validate { instance } => {
            let inst = io::load_instance(instance)?;
            ctx.print(&format!(
                "ok: {} projects, {} districts, budget {}, total welfare {}\n",
                inst.num_projects(),
                inst.num_districts(),
                inst.budget(),
                inst.welfare_of_all()
            ));
            Ok(())
        }
        Command::Shares { instance } => {
            let (inst, shares) = load(instance)?;
            for (i, s) in shares.shares().iter().enumerate() {
                ctx.print(&format!(
                    "{}: b_i {}  f_i {}  witness {}\n",
                    inst.district_label(i),
                    rational::short(&s.budget),
                    s.value,
                    inst.describe(&s.witness)
                ));
            }
            if let Some(path) = &cli.common.json {
                let value: Vec<serde_json::Value> = shares
                    .shares()
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        serde_json::json!({
                            "district": inst.district_label(i),
                            "budget_share": rational::format(&s.budget),
                            "fair_share": s.value,
                            "witness": s.witness,
                        })
                    })
                    .collect();
                write_text(path, &io::to_canonical_json(&value))?;
            }
            Ok(())
        }
        Command::SolveExact {
            instance,
            oracle,
            max_districts,
            out,
        } => {
            let (inst, shares) = load(instance)?;
            let w = if *oracle {
                oracle_solve(&inst, &shares)?.witness
            } else {
                solve_exact_dp_with(
                    &inst,
                    &shares,
                    ExactDpConfig {
                        max_districts: *max_districts,
                        memoize: true,
                    },
                )?
            };
            if let Some(path) = out {
                io::write_outcome(path, &w)?;
            }
            let engine = if *oracle { "oracle" } else { "exact-dp" };
            ctx.selected(&inst, &w);
            ctx.finish(RunReport::for_outcome(&inst, &shares, engine, &w)?)
        }
        Command::SolveLottery {
            instance,
            eps,
            iterations,
            sw_max,
            out,
            trace,
        } => {
            let (inst, shares) = load(instance)?;
            let cfg = MwConfig {
                epsilon: parse_rational("eps", eps)?,
                t_override: *iterations,
                sw_max_mode: match sw_max {
                    SwMaxArg::All => SwMaxMode::AllProjects,
                    SwMaxArg::Feasible => SwMaxMode::FeasibleKnapsack,
                },
            };
            let (lottery, mw_trace) = run_mw_lottery(&inst, &shares, &cfg)?;
            if let Some(path) = out {
                io::write_lottery(path, &lottery)?;
            }
            if let Some(path) = trace {
                write_text(path, &io::to_canonical_json(&mw_trace))?;
            }
            let regret = mw_regret_check(&mw_trace);
            let report = RunReport::for_lottery(&inst, &shares, "mw-lottery", &lottery)
                .with_config("eps", rational::format(&cfg.epsilon))
                .with_config("iterations", mw_trace.iterations.len())
                .with_config("sw_max", mw_trace.sw_max)
                .with_config("regret_bound_holds", regret.holds);
            ctx.finish(report)
        }
        Command::SolveDf1 {
            instance,
            mode,
            allowance,
            beta,
            amplify,
            eps0,
            out,
        } => {
            let (inst, shares) = load(instance)?;
            let subroutine = match mode {
                ModeArg::Exact => Subroutine::Exact,
                ModeArg::Greedy => Subroutine::LazyGreedy,
            };
            let (profile, mut result, allowance) = match beta {
                Some(b) => {
                    let beta = parse_rational("beta", b)?;
                    let (scaled, result) = solve_within_budget(&inst, &beta, subroutine)?;
                    let allowance = match subroutine {
                        Subroutine::Exact => Rational::from_integer(0.into()),
                        Subroutine::LazyGreedy => beta.recip() - Rational::from_integer(1.into()),
                    };
                    (scaled.shares, result, allowance)
                }
                None => {
                    let allowance = parse_rational("allowance", allowance)?;
                    let result = solve_df1_pipeline(&inst, &shares, &allowance, subroutine)?;
                    (shares.clone(), result, allowance)
                }
            };
            let mut extra = Vec::new();
            if let Some(n) = amplify {
                let budget_cap = rational::floor_u64(&profile.total_budget()).min(inst.budget());
                let q = Df1pQuery {
                    welfare_floor: result.welfare_floor,
                    budget_cap,
                    subroutine: Subroutine::LazyGreedy,
                };
                let amp = amplified_greedy(&inst, &profile, &q, *n, cli.common.seed, *eps0)?;
                if amp.best.cover > result.uncompleted.cover {
                    result = PipelineResult {
                        outcome: df1_complete(&inst, &profile, &amp.best.outcome)?,
                        uncompleted: amp.best.clone(),
                        ..result
                    };
                }
                extra.push(("amplify_runs", n.to_string()));
                extra.push(("amplify_best_run", amp.best_index.to_string()));
                extra.push(("amplify_tail_bound", format!("{:e}", amp.tail_bound)));
            }
            if let Some(path) = out {
                io::write_outcome(path, &result.outcome)?;
            }
            ctx.selected(&inst, &result.outcome);
            let mut report = RunReport::for_outcome(&inst, &profile, "df1-pipeline", &result.outcome)?
                .with_config("mode", format!("{mode:?}").to_lowercase())
                .with_config("allowance", rational::format(&allowance))
                .with_config("welfare_floor", result.welfare_floor)
                .with_config("uncompleted_cover", rational::format(&result.uncompleted.cover))
                .with_config("df1_original_shares", is_df1(&inst, &shares, &result.outcome));
            if let Some(b) = beta {
                report = report.with_config("beta", b);
            }
            for (k, v) in extra {
                report = report.with_config(k, v);
            }
            ctx.finish(report)
        }
        Command::SolveUga { instance, trace, out } => {
            let (inst, shares) = load(instance)?;
            let cert = UnanimityCertificate::of(&inst);
            let (w, picks) = solve_uga_traced(&inst, &shares)?;
            if *trace {
                for (r, p) in picks.iter().enumerate() {
                    ctx.print(&format!(
                        "round {}: {} cover +{} welfare {} ({:?})\n",
                        r + 1,
                        inst.project_label(p.project),
                        p.cover_gain,
                        p.welfare,
                        p.class
                    ));
                }
            }
            if let Some(path) = out {
                io::write_outcome(path, &w)?;
            }
            let voters: Vec<String> = cert
                .voters
                .iter()
                .map(|v| v.map_or("-".to_string(), |v| v.to_string()))
                .collect();
            ctx.selected(&inst, &w);
            ctx.finish(RunReport::for_outcome(&inst, &shares, "uga", &w)?.with_config("voters", voters.join(",")))
        }
        Command::GenX3c { spec, out } => {
            let text = std::fs::read_to_string(spec).map_err(|e| Error::Io {
                path: spec.clone(),
                source: e,
            })?;
            let x: X3cInput = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: spec.clone(),
                message: e.to_string(),
            })?;
            let (inst, target) = reduce_x3c(&x)?;
            if let Some(path) = out {
                io::write_instance(path, &inst)?;
            }
            ctx.print(&format!(
                "x3c instance: {} districts, {} projects, budget {}, welfare target {target}\n",
                inst.num_districts(),
                inst.num_projects(),
                inst.budget()
            ));
            Ok(())
        }
        Command::GenGap { k, eps, big_b, out } => {
            let p = GapParams {
                k: *k,
                epsilon: parse_rational("eps", eps)?,
                big_b: *big_b,
            };
            let (inst, witness) = gap_instance(&p)?;
            if let Some(path) = out {
                io::write_instance(path, &inst)?;
            }
            let value = inst.fractional_total_welfare(&witness)?;
            let fractions: Vec<String> = witness.fractions().iter().map(rational::format).collect();
            ctx.print(&format!(
                "gap instance: {} districts, {} projects, utilities scaled by {}\nfractional witness [{}] value {}\n",
                inst.num_districts(),
                inst.num_projects(),
                p.scale(),
                fractions.join(", "),
                rational::format(&value)
            ));
            Ok(())
        }
        Command::ExportLp { instance, out } => {
            let (inst, shares) = load(instance)?;
            export_dflp(&inst, &shares, out)?;
            ctx.print(&format!(
                "wrote {} variables, {} rows to {}\n",
                inst.num_projects(),
                inst.num_districts() + 1,
                out.display()
            ));
            Ok(())
        }
        Command::Report {
            instance,
            solution,
            expect,
        } => {
            let (inst, shares) = load(instance)?;
            let report = match io::load_solution(solution, &inst)? {
                SolutionFile::Outcome(w) => {
                    ctx.selected(&inst, &w);
                    RunReport::for_outcome(&inst, &shares, "report", &w)?
                }
                SolutionFile::Lottery(l) => RunReport::for_lottery(&inst, &shares, "report", &l),
            };
            check_contract(&report, expect)?;
            ctx.finish(report.with_config("expect", expect))
        }
    }
}

/// Fails with a `contract` error when the report misses the expected guarantee.
fn check_contract(report: &RunReport, expect: &str) -> Result<()> {
    let t = &report.totals;
    let violated = |what: &str| Err(Error::Contract(format!("{what} guarantee violated")));
    if !t.budget_feasible {
        return violated("budget");
    }
    match expect {
        "feasible" => Ok(()),
        "df" if t.district_fair => Ok(()),
        "df" => violated("df"),
        "df1" => match t.df1 {
            Some(true) => Ok(()),
            Some(false) => violated("df1"),
            None => Err(Error::Validation("df1 applies to single outcomes only".into())),
        },
        other => match other.strip_prefix("eps=") {
            Some(e) => {
                let eps = parse_rational("expect", e)?;
                if report.districts.iter().all(|r| r.deficit <= eps) {
                    Ok(())
                } else {
                    violated(other)
                }
            }
            None => Err(Error::Validation(format!(
                "--expect {other:?}: use feasible, df, df1 or eps=P/Q"
            ))),
        },
    }
}
