//! Command-line front end: problem-file loading, audit orchestration,
//! machine-readable JSON reports, and CSV sample export.
//!
//! Exit codes: 0 pass/holds, 1 counterexample/fail, 2 input error,
//! 3 not checkable.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ivex::audit::{AuditConfig, Verdict};
use ivex::invexity::{self, PhiMode, StrictMode};
use ivex::ivf::{self, GradSemantics};
use ivex::optprog::{self, KKTPoint};
use ivex::problem::{config_echo, LoadedProblem};
use ivex::report::Report;

#[derive(Parser)]
#[command(
    name = "ivex",
    version,
    about = "Auditor for LU-ordered interval-valued generalized invexity and interval-valued programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Problem file (JSON)
    file: PathBuf,
    /// Sample budget
    #[arg(long)]
    samples: Option<u64>,
    /// Base seed for the deterministic sampler
    #[arg(long)]
    seed: Option<u64>,
    /// Violation tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Gradient semantics for first-order audits
    #[arg(long, value_enum)]
    grad: Option<GradFlag>,
    /// Worker threads (defaults to available parallelism)
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the JSON report to this path
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradFlag {
    Direct,
    Composite,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassFlag {
    SeiSet,
    EInvexSet,
    Sluep,
    SluepStrict,
    Ssluep,
    Psluep,
    WeaklySei,
    Sluei,
    ConditionA,
    EpiGsei,
    LuNondecreasing,
}

impl ClassFlag {
    fn name(self) -> &'static str {
        match self {
            ClassFlag::SeiSet => "sei-set",
            ClassFlag::EInvexSet => "e-invex-set",
            ClassFlag::Sluep => "sluep",
            ClassFlag::SluepStrict => "sluep-strict",
            ClassFlag::Ssluep => "ssluep",
            ClassFlag::Psluep => "psluep",
            ClassFlag::WeaklySei => "weakly-sei",
            ClassFlag::Sluei => "sluei",
            ClassFlag::ConditionA => "condition-a",
            ClassFlag::EpiGsei => "epi-gsei",
            ClassFlag::LuNondecreasing => "lu-nondecreasing",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiFlag {
    Derived,
    Supplied,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the interval function and its composition with E at a point
    Eval {
        /// Problem file (JSON)
        file: PathBuf,
        /// Point, comma-separated constant expressions (e.g. "ln(2)")
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Run a class audit and report a verdict
    Audit {
        #[command(flatten)]
        common: CommonFlags,
        /// Which class to audit
        #[arg(long, value_enum)]
        class: ClassFlag,
        /// Certificate mode for the pseudo-preinvexity audit
        #[arg(long, value_enum, default_value = "derived")]
        phi: PhiFlag,
    },
    /// First-order sufficiency audit at a candidate point
    Kkt {
        #[command(flatten)]
        common: CommonFlags,
        /// Candidate point
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Multipliers, comma-separated, one per constraint
        #[arg(long, allow_hyphen_values = true)]
        multipliers: String,
    },
    /// Search feasible samples for a strict LU dominator of the candidate
    Dominance {
        #[command(flatten)]
        common: CommonFlags,
        /// Candidate point
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Local-minimality then global-dominance audit at a candidate point
    LocalGlobal {
        #[command(flatten)]
        common: CommonFlags,
        /// Candidate point
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Local ball radius (defaults to 1e-2 of the box diagonal)
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Export grid samples of the endpoint functions as CSV
    SampleCsv {
        /// Problem file (JSON)
        file: PathBuf,
        /// Grid points per coordinate
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank LU-nondominated candidate minimizers from a refined grid
    Candidates {
        #[command(flatten)]
        common: CommonFlags,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn merge_config(lp: &LoadedProblem, flags: &CommonFlags) -> AuditConfig {
    let mut cfg = lp.defaults.clone();
    if let Some(s) = flags.samples {
        cfg.samples = s;
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(t) = flags.tol {
        cfg.tol = t;
    }
    if let Some(g) = flags.grad {
        cfg.semantics = match g {
            GradFlag::Direct => GradSemantics::Direct,
            GradFlag::Composite => GradSemantics::Composite,
        };
    }
    if let Some(w) = flags.workers {
        cfg.workers = w.max(1);
    }
    cfg
}

fn emit_report(
    lp: &LoadedProblem,
    flags: &CommonFlags,
    command: String,
    cfg: &AuditConfig,
    results: serde_json::Value,
    started: Instant,
) -> Result<(), String> {
    let report = Report::new(
        &flags.file.display().to_string(),
        &lp.sha256,
        &lp.name,
        command,
        config_echo(cfg),
        results,
        started.elapsed().as_secs_f64(),
    );
    let text = report.to_pretty_json();
    println!("{text}");
    if let Some(path) = &flags.report {
        std::fs::write(path, text.as_bytes())
            .map_err(|e| format!("cannot write report {}: {e}", path.display()))?;
    }
    Ok(())
}

fn summarize(verdict: &Verdict) -> String {
    match &verdict.outcome {
        ivex::audit::Outcome::Holds => format!(
            "holds: no counterexample among {} samples",
            verdict.samples_checked
        ),
        ivex::audit::Outcome::Fails { witness } => format!(
            "fails at sample {} with margin {:.3e}",
            witness.sample_index, witness.margin
        ),
        ivex::audit::Outcome::NotCheckable { reason } => format!("not checkable: {reason}"),
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Eval { file, point } => {
            let lp = LoadedProblem::from_path(&file).map_err(|e| e.to_string())?;
            let p = lp.parse_point(&point).map_err(|e| e.to_string())?;
            if !lp.problem.set.region.contains(&p) {
                return Err(format!(
                    "point {p:?} lies outside the domain box {:?}",
                    lp.problem.set.region.bounds()
                ));
            }
            let direct = lp.problem.objective.eval(&p).map_err(|e| e.to_string())?;
            let image = lp.problem.e.eval(&p).map_err(|e| e.to_string())?;
            let composed = lp
                .problem
                .objective
                .eval(&image)
                .map_err(|e| e.to_string())?;
            println!("h(zeta) = {direct}");
            println!("h(E(zeta)) = {composed}");
            Ok(0)
        }
        Command::Audit { common, class, phi } => {
            let started = Instant::now();
            let lp = LoadedProblem::from_path(&common.file).map_err(|e| e.to_string())?;
            let cfg = merge_config(&lp, &common);
            let p = &lp.problem;
            let verdict = match class {
                ClassFlag::SeiSet => invexity::check_sei_set(&p.set, &p.e, &p.psi, &cfg),
                ClassFlag::EInvexSet => {
                    invexity::check_sei_set(&p.set, &p.e, &p.psi, &invexity::alpha_zero(&cfg))
                }
                ClassFlag::Sluep => invexity::check_sluep(
                    &p.objective,
                    &p.e,
                    &p.psi,
                    &p.set,
                    &cfg,
                    StrictMode::Weak,
                ),
                ClassFlag::SluepStrict => invexity::check_sluep(
                    &p.objective,
                    &p.e,
                    &p.psi,
                    &p.set,
                    &cfg,
                    StrictMode::Strict,
                ),
                ClassFlag::Ssluep => {
                    invexity::check_ssluep(&p.objective, &p.e, &p.psi, &p.set, &cfg)
                }
                ClassFlag::Psluep => {
                    let mode =
                        match phi {
                            PhiFlag::Derived => PhiMode::Derived,
                            PhiFlag::Supplied => match &lp.big_phi {
                                Some(map) => PhiMode::Supplied(map),
                                None => return Err(
                                    "supplied phi mode requires a Phi entry in the problem file"
                                        .to_string(),
                                ),
                            },
                        };
                    invexity::check_psluep(&p.objective, &p.e, &p.psi, &p.set, &cfg, mode)
                }
                ClassFlag::WeaklySei => {
                    invexity::check_weakly_sei(&p.objective, &p.e, &p.psi, &p.set, &cfg)
                }
                ClassFlag::Sluei => invexity::check_sluei(&p.objective, &p.e, &p.psi, &p.set, &cfg),
                ClassFlag::ConditionA => invexity::check_condition_a(&p.set, &p.e, &p.psi, &cfg),
                ClassFlag::EpiGsei => match &lp.e0 {
                    Some(e0) => {
                        invexity::check_epigraph_gsei(&p.objective, &p.e, &p.psi, e0, &p.set, &cfg)
                    }
                    None => {
                        return Err(
                            "the epigraph audit requires an E0 entry in the problem file"
                                .to_string(),
                        )
                    }
                },
                ClassFlag::LuNondecreasing => match &lp.phi {
                    Some(map) => ivf::is_lu_nondecreasing(map, &cfg),
                    None => {
                        return Err(
                            "the monotonicity audit requires a phi entry in the problem file"
                                .to_string(),
                        )
                    }
                },
            };
            eprintln!("{}: {}", class.name(), summarize(&verdict));
            let code = verdict.exit_code();
            let results = serde_json::json!({
                "class": class.name(),
                "verdict": verdict,
            });
            emit_report(
                &lp,
                &common,
                format!("audit --class {}", class.name()),
                &cfg,
                results,
                started,
            )?;
            Ok(code)
        }
        Command::Kkt {
            common,
            point,
            multipliers,
        } => {
            let started = Instant::now();
            let lp = LoadedProblem::from_path(&common.file).map_err(|e| e.to_string())?;
            let cfg = merge_config(&lp, &common);
            let pt = KKTPoint {
                point: lp.parse_point(&point).map_err(|e| e.to_string())?,
                multipliers: parse_scalars(&multipliers)?,
            };
            let audit = optprog::kkt_sufficiency_audit(&lp.problem, &pt, &cfg)
                .map_err(|e| e.to_string())?;
            eprintln!(
                "kkt: {} (max residual {:.3e})",
                if audit.pass { "PASS" } else { "FAIL" },
                audit.residuals.max_residual
            );
            let code = if audit.pass { 0 } else { 1 };
            emit_report(
                &lp,
                &common,
                "kkt".to_string(),
                &cfg,
                serde_json::to_value(&audit).expect("serializable"),
                started,
            )?;
            Ok(code)
        }
        Command::Dominance { common, point } => {
            let started = Instant::now();
            let lp = LoadedProblem::from_path(&common.file).map_err(|e| e.to_string())?;
            let cfg = merge_config(&lp, &common);
            let p = lp.parse_point(&point).map_err(|e| e.to_string())?;
            let report =
                optprog::non_dominated_audit(&lp.problem, &p, &cfg).map_err(|e| e.to_string())?;
            let code = if report.non_dominated() { 0 } else { 1 };
            eprintln!(
                "dominance: {} over {} feasible samples",
                if report.non_dominated() {
                    "no dominator"
                } else {
                    "dominated"
                },
                report.samples_checked
            );
            emit_report(
                &lp,
                &common,
                "dominance".to_string(),
                &cfg,
                serde_json::to_value(&report).expect("serializable"),
                started,
            )?;
            Ok(code)
        }
        Command::LocalGlobal { common, point, eps } => {
            let started = Instant::now();
            let lp = LoadedProblem::from_path(&common.file).map_err(|e| e.to_string())?;
            let cfg = merge_config(&lp, &common);
            let p = lp.parse_point(&point).map_err(|e| e.to_string())?;
            let report = optprog::local_global_audit(&lp.problem, &p, &cfg, eps)
                .map_err(|e| e.to_string())?;
            let code = if report.pass { 0 } else { 1 };
            eprintln!(
                "local-global: {} (locally minimal: {})",
                if report.pass { "PASS" } else { "FAIL" },
                report.locally_minimal
            );
            emit_report(
                &lp,
                &common,
                "local-global".to_string(),
                &cfg,
                serde_json::to_value(&report).expect("serializable"),
                started,
            )?;
            Ok(code)
        }
        Command::SampleCsv { file, grid, out } => {
            let lp = LoadedProblem::from_path(&file).map_err(|e| e.to_string())?;
            let csv = sample_csv(&lp, grid)?;
            match out {
                Some(path) => std::fs::write(&path, csv.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => {
                    std::io::stdout()
                        .write_all(csv.as_bytes())
                        .map_err(|e| e.to_string())?;
                }
            }
            Ok(0)
        }
        Command::Candidates { common } => {
            let started = Instant::now();
            let lp = LoadedProblem::from_path(&common.file).map_err(|e| e.to_string())?;
            let cfg = merge_config(&lp, &common);
            let front = optprog::grid_candidates(&lp.problem, &cfg).map_err(|e| e.to_string())?;
            eprintln!("candidates: {} LU-nondominated point(s)", front.len());
            emit_report(
                &lp,
                &common,
                "candidates".to_string(),
                &cfg,
                serde_json::json!({ "candidates": front }),
                started,
            )?;
            Ok(0)
        }
    }
}

fn parse_scalars(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| format!("invalid multiplier `{}`: {e}", part.trim()))
        })
        .collect()
}

fn sample_csv(lp: &LoadedProblem, grid: usize) -> Result<String, String> {
    let p = &lp.problem;
    let n = p.dim();
    let grid = grid.max(2);
    let axes: Vec<Vec<f64>> = p
        .set
        .region
        .bounds()
        .iter()
        .map(|&(lo, hi)| {
            (0..grid)
                .map(|k| lo + (hi - lo) * (k as f64) / ((grid - 1) as f64))
                .collect()
        })
        .collect();
    let mut out = String::new();
    for i in 1..=n {
        out.push_str(&format!("z{i},"));
    }
    out.push_str("hL,hU,hL_of_E,hU_of_E\n");
    let total: usize = axes.iter().map(|a| a.len()).product();
    for flat in 0..total {
        let mut idx = flat;
        let mut point = Vec::with_capacity(n);
        for axis in &axes {
            point.push(axis[idx % axis.len()]);
            idx /= axis.len();
        }
        let direct = match p.objective.eval(&point) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let composed = match p
            .e
            .eval(&point)
            .map_err(|e| e.to_string())
            .and_then(|img| p.objective.eval(&img).map_err(|e| e.to_string()))
        {
            Ok(v) => v,
            Err(_) => continue,
        };
        for x in &point {
            out.push_str(&format!("{x},"));
        }
        out.push_str(&format!(
            "{},{},{},{}\n",
            direct.lo(),
            direct.hi(),
            composed.lo(),
            composed.hi()
        ));
    }
    Ok(out)
}
