//! Shared audit machinery: configuration, verdicts, witnesses, and the
//! deterministic parallel sample runner.
//!
//! Every audit maps a sample index to an outcome through a pure function of
//! `(seed, index)`, so verdicts are byte-identical across worker counts and
//! a failing sample replays from the report alone. A `Holds` verdict always
//! means "no counterexample among the checked samples", never a proof.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::expr::Expr;
use crate::interval::Interval;
use crate::ivf::{BoxDomain, GradSemantics};
use crate::rng::Stream;

/// Values for one of the `[0, 1]` quantifier axes (alpha or lambda):
/// a fixed grid, optionally topped up with uniform random draws.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub values: Vec<f64>,
    pub random: bool,
}

impl Default for GridSpec {
    fn default() -> GridSpec {
        GridSpec {
            values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            random: true,
        }
    }
}

impl GridSpec {
    /// Grid pinned to a single value, no random draws. `fixed(0.0)` turns
    /// the strongly-E-invex quantifier into the plain E-invex one.
    pub fn fixed(value: f64) -> GridSpec {
        GridSpec {
            values: vec![value],
            random: false,
        }
    }

    fn slots(&self) -> usize {
        self.values.len() + usize::from(self.random)
    }

    fn pick(&self, slot: usize, stream: &mut Stream) -> f64 {
        if slot < self.values.len() {
            self.values[slot]
        } else {
            stream.next_f64()
        }
    }
}

/// Sampling parameters shared by all auditors.
#[derive(Debug, Clone, Serialize)]
pub struct AuditConfig {
    pub samples: u64,
    pub seed: u64,
    /// An LU inequality only counts as violated when some required endpoint
    /// inequality fails by more than this margin.
    pub tol: f64,
    pub alpha: GridSpec,
    pub lambda: GridSpec,
    pub semantics: GradSemantics,
    pub workers: usize,
}

impl Default for AuditConfig {
    fn default() -> AuditConfig {
        AuditConfig {
            samples: 10_000,
            seed: 42,
            tol: 1e-9,
            alpha: GridSpec::default(),
            lambda: GridSpec::default(),
            semantics: GradSemantics::Composite,
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

/// A concrete violating tuple together with both sides of the inequality it
/// breaks. Re-deriving the draw from `(seed, sample_index)` and re-running
/// the check reproduces `lhs`/`rhs`; the runner verifies this before
/// returning.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub sample_index: u64,
    pub zeta: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub lhs: Interval,
    pub rhs: Interval,
    /// Amount by which the required inequality fails; always > tol.
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Holds,
    Fails { witness: Witness },
    NotCheckable { reason: String },
}

/// Result of one audit over a sample budget.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub samples_checked: u64,
    /// For premise-guarded audits: how many samples triggered the premise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triggered: Option<u64>,
    pub skipped_nonsmooth: u64,
    pub eval_errors: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self.outcome, Outcome::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self.outcome, Outcome::Fails { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Fails { witness } => Some(witness),
            _ => None,
        }
    }

    pub fn not_checkable(reason: impl Into<String>) -> Verdict {
        Verdict {
            outcome: Outcome::NotCheckable {
                reason: reason.into(),
            },
            samples_checked: 0,
            triggered: None,
            skipped_nonsmooth: 0,
            eval_errors: 0,
            notes: Vec::new(),
        }
    }

    /// CLI contract: 0 holds, 1 counterexample, 3 not checkable.
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::Holds => 0,
            Outcome::Fails { .. } => 1,
            Outcome::NotCheckable { .. } => 3,
        }
    }
}

/// Outcome of checking a single sample.
pub enum SampleEval {
    Pass,
    /// Premise not met; the sample is vacuous for the audited implication.
    NotTriggered,
    Fail(Witness),
    /// Nonsmooth even after perturbation retries.
    SkipNonsmooth,
    /// Expression failure at this sample; recorded, not fatal.
    EvalError(String),
    /// The whole audit cannot proceed (for example rejection sampling
    /// exhausted); becomes `NotCheckable`.
    Abort(String),
}

/// Runs `eval` over every sample index on `cfg.workers` threads and merges
/// outcomes by index, so the reported witness is the one with the lowest
/// sample index regardless of scheduling.
pub fn run_samples<F>(cfg: &AuditConfig, eval: F) -> Verdict
where
    F: Fn(u64) -> SampleEval + Sync,
{
    let n = cfg.samples;
    let results: Vec<SampleEval> = if cfg.workers <= 1 {
        (0..n).map(&eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .expect("worker pool");
        pool.install(|| {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(&eval).collect()
        })
    };

    let mut verdict = Verdict {
        outcome: Outcome::Holds,
        samples_checked: n,
        triggered: None,
        skipped_nonsmooth: 0,
        eval_errors: 0,
        notes: Vec::new(),
    };
    let mut triggered = 0u64;
    let mut saw_trigger_counting = false;
    let mut first_fail: Option<Witness> = None;
    let mut first_abort: Option<String> = None;

    for res in results {
        match res {
            SampleEval::Pass => {
                triggered += 1;
            }
            SampleEval::NotTriggered => {
                saw_trigger_counting = true;
            }
            SampleEval::Fail(w) => {
                triggered += 1;
                if first_fail.is_none() {
                    first_fail = Some(w);
                }
            }
            SampleEval::SkipNonsmooth => verdict.skipped_nonsmooth += 1,
            SampleEval::EvalError(_) => verdict.eval_errors += 1,
            SampleEval::Abort(reason) => {
                if first_abort.is_none() {
                    first_abort = Some(reason);
                }
            }
        }
    }

    if let Some(reason) = first_abort {
        verdict.outcome = Outcome::NotCheckable { reason };
        return verdict;
    }
    if saw_trigger_counting {
        verdict.triggered = Some(triggered);
    }
    if let Some(witness) = first_fail {
        // replay check: the same index must reproduce the violation
        if let SampleEval::Fail(rw) = eval(witness.sample_index) {
            let near = |a: f64, b: f64| (a - b).abs() <= 1e-12;
            let ok = near(rw.lhs.lo(), witness.lhs.lo())
                && near(rw.lhs.hi(), witness.lhs.hi())
                && near(rw.rhs.lo(), witness.rhs.lo())
                && near(rw.rhs.hi(), witness.rhs.hi());
            if !ok {
                verdict
                    .notes
                    .push("witness replay mismatch beyond 1e-12".to_string());
            }
        } else {
            verdict
                .notes
                .push("witness did not reproduce on replay".to_string());
        }
        verdict.outcome = Outcome::Fails { witness };
    }
    verdict
}

/// The set `S`: a sampling box plus optional membership constraints
/// (`point` belongs to `S` iff every expression is `<= 0`). The box is the
/// sampling region, possibly a truncation of an unbounded `S`; membership
/// is decided by the constraints alone.
#[derive(Debug, Clone)]
pub struct SetSpec {
    pub region: BoxDomain,
    pub membership: Vec<Expr>,
    var_names: Vec<String>,
}

impl SetSpec {
    pub fn new(region: BoxDomain, membership: Vec<Expr>) -> SetSpec {
        let var_names = crate::expr::maps::point_vars(region.dim());
        SetSpec {
            region,
            membership,
            var_names,
        }
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Largest membership-constraint value at `point`, clamped below at 0.
    /// Zero means the point satisfies every constraint.
    pub fn violation(&self, point: &[f64]) -> Result<f64, crate::expr::ExprError> {
        let env = crate::expr::Env::new(&self.var_names, point);
        let mut worst = 0.0f64;
        for g in &self.membership {
            worst = worst.max(g.eval(&env)?);
        }
        Ok(worst)
    }

    /// Rejection-samples a member of `S` from the box. At most 100 attempts
    /// per point, after which the audit aborts as not checkable.
    pub fn draw_point(&self, stream: &mut Stream) -> Result<Vec<f64>, String> {
        for _ in 0..100 {
            let p = self.region.sample(stream);
            match self.violation(&p) {
                Ok(v) if v <= 0.0 => return Ok(p),
                Ok(_) => continue,
                Err(e) => return Err(format!("membership evaluation failed: {e}")),
            }
        }
        Err("rejection sampling exceeded factor 100 drawing from S".to_string())
    }
}

/// One audited tuple: the two set points and the two `[0, 1]` quantifiers,
/// plus the remainder of the sample's random stream for checks that need
/// further draws.
pub struct Draw {
    pub zeta: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub stream: Stream,
}

/// Deterministic draw for a sample index: the `(alpha, lambda)` pair walks
/// the cartesian product of the grid slots (so every grid pair recurs every
/// few dozen samples), and `(zeta, delta)` are rejection draws from `S`.
pub fn draw_standard(cfg: &AuditConfig, set: &SetSpec, index: u64) -> Result<Draw, String> {
    let mut stream = Stream::for_sample(cfg.seed, index);
    let na = cfg.alpha.slots();
    let nl = cfg.lambda.slots();
    let cell = (index % (na as u64 * nl as u64)) as usize;
    let alpha = cfg.alpha.pick(cell / nl, &mut stream);
    let lambda = cfg.lambda.pick(cell % nl, &mut stream);
    let zeta = set.draw_point(&mut stream)?;
    let delta = set.draw_point(&mut stream)?;
    Ok(Draw {
        zeta,
        delta,
        alpha,
        lambda,
        stream,
    })
}
