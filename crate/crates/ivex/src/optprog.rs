//! Interval-valued nonlinear programs: feasibility, invexity structure of
//! the underlying set, KKT residuals and sufficiency, non-dominance, and
//! local-versus-global audits.

use serde::Serialize;
use thiserror::Error;

use crate::audit::{AuditConfig, SetSpec, Verdict};
use crate::expr::{Expr, ExprError, MapError, VectorMap};
use crate::interval::Interval;
use crate::invexity::{check_sei_set, check_sluei, check_sluep, check_weakly_sei, StrictMode};
use crate::ivf::{GradSemantics, GradientEngine, IVFn, IvfError};
use crate::rng::Stream;

#[derive(Debug, Clone, Error)]
pub enum OptError {
    #[error(transparent)]
    Ivf(#[from] IvfError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("candidate point {point:?} is not feasible: {detail}")]
    InfeasibleCandidate { point: Vec<f64>, detail: String },
    #[error("multiplier count mismatch: {expected} constraint(s), got {got}")]
    MultiplierCount { expected: usize, got: usize },
    #[error("point has {got} coordinate(s), problem dimension is {expected}")]
    PointDim { expected: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// How the objective is read at a point: through the map `E` (the
/// transformed program `min h(E(z))`) or directly (`min h(z)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveForm {
    Composed,
    Direct,
}

/// One constraint: either a real-valued `g(E(z)) <= 0` or an
/// interval-valued `h_j(z) LU<= 0` (both endpoints nonpositive).
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub function: IVFn,
    pub interval_valued: bool,
}

/// An interval-valued program over a sampling region with optional domain
/// membership constraints.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: IVFn,
    pub objective_form: ObjectiveForm,
    pub constraints: Vec<Constraint>,
    pub e: VectorMap,
    pub psi: VectorMap,
    pub set: SetSpec,
    pub semantics: GradSemantics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintSlack {
    pub name: String,
    pub value: Interval,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub domain_violation: f64,
    pub constraints: Vec<ConstraintSlack>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Objective value at a point under the declared objective form.
    pub fn objective_value(&self, point: &[f64]) -> Result<Interval, OptError> {
        match self.objective_form {
            ObjectiveForm::Composed => {
                let image = self.e.eval(point)?;
                Ok(self.objective.eval(&image)?)
            }
            ObjectiveForm::Direct => Ok(self.objective.eval(point)?),
        }
    }

    /// Constraint value at a point: real constraints evaluate at `E(z)`,
    /// interval constraints at `z`.
    fn constraint_value(&self, c: &Constraint, point: &[f64]) -> Result<Interval, OptError> {
        if c.interval_valued {
            Ok(c.function.eval(point)?)
        } else {
            let image = self.e.eval(point)?;
            Ok(c.function.eval(&image)?)
        }
    }

    /// Feasibility with slack values: every real `g(E(z))` and both
    /// endpoints of every interval constraint must be `<= tol`, and the
    /// domain membership constraints must hold.
    pub fn feasible(&self, point: &[f64], tol: f64) -> Result<FeasibilityReport, OptError> {
        if point.len() != self.dim() {
            return Err(OptError::PointDim {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let domain_violation = self.set.violation(point)?;
        let mut entries = Vec::with_capacity(self.constraints.len());
        let mut ok = domain_violation <= tol;
        for c in &self.constraints {
            let value = self.constraint_value(c, point)?;
            let satisfied = value.lo() <= tol && value.hi() <= tol;
            ok &= satisfied;
            entries.push(ConstraintSlack {
                name: c.name.clone(),
                value,
                satisfied,
            });
        }
        Ok(FeasibilityReport {
            feasible: ok,
            domain_violation,
            constraints: entries,
        })
    }

    /// Strict feasibility test used by samplers (no tolerance slack).
    fn is_feasible_exact(&self, point: &[f64]) -> Result<bool, OptError> {
        if self.set.violation(point)? > 0.0 {
            return Ok(false);
        }
        for c in &self.constraints {
            let value = self.constraint_value(c, point)?;
            if value.lo() > 0.0 || value.hi() > 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rejection draw of a feasible point; `None` when 100 attempts fail.
    fn draw_feasible(&self, stream: &mut Stream) -> Result<Option<Vec<f64>>, OptError> {
        for _ in 0..100 {
            let p = self.set.region.sample(stream);
            if self.is_feasible_exact(&p)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }
}

/// Audits the strongly-E-invex structure of the problem's underlying
/// domain set `S` (sampling box plus membership constraints), the set the
/// invexity hypotheses of the optimality theorems live on. The hypothesis
/// `E(S) subset of S` is spot-checked by sampling and reported as a note.
pub fn check_feasible_set_sei(p: &Problem, cfg: &AuditConfig) -> Verdict {
    let mut escapes = 0u64;
    let mut checked = 0u64;
    let mut first: Option<String> = None;
    for k in 0..256u64 {
        let mut s = Stream::for_sample(cfg.seed ^ 0xe5e5, k);
        let Ok(point) = p.set.draw_point(&mut s) else {
            break;
        };
        let Ok(image) = p.e.eval(&point) else {
            continue;
        };
        checked += 1;
        if p.set.violation(&image).map(|v| v > cfg.tol).unwrap_or(true) {
            escapes += 1;
            if first.is_none() {
                first = Some(format!("E({point:?}) = {image:?} leaves S"));
            }
        }
    }
    let mut verdict = check_sei_set(&p.set, &p.e, &p.psi, cfg);
    if escapes == 0 {
        verdict
            .notes
            .push(format!("E(S) within S on all {checked} spot-check samples"));
    } else {
        verdict.notes.push(format!(
            "E(S) subset of S violated on {escapes}/{checked} spot-check samples ({})",
            first.unwrap_or_default()
        ));
    }
    verdict
}

/// A candidate stationary point with its multipliers.
#[derive(Debug, Clone, Serialize)]
pub struct KKTPoint {
    pub point: Vec<f64>,
    pub multipliers: Vec<f64>,
}

/// Residuals of the first-order system: endpoint stationarity, aggregate
/// complementary slackness, multiplier sign, and feasibility.
#[derive(Debug, Clone, Serialize)]
pub struct KKTReport {
    pub stationarity_lo: Vec<f64>,
    pub stationarity_hi: Vec<f64>,
    pub comp_slack: f64,
    pub comp_slack_terms: Vec<f64>,
    pub multiplier_min: f64,
    pub feasibility: FeasibilityReport,
    pub max_residual: f64,
    pub used_finite_difference: bool,
}

fn gradient_at(
    engine: &GradientEngine,
    semantics: GradSemantics,
    e: &VectorMap,
    point: &[f64],
) -> Result<crate::ivf::GradientPair, OptError> {
    match semantics {
        GradSemantics::Composite => Ok(engine.pair_at(point)?),
        GradSemantics::Direct => {
            let image = e.eval(point)?;
            Ok(engine.pair_at(&image)?)
        }
    }
}

/// Evaluates the first-order residuals at a candidate point. Requires the
/// transformed objective form and real-valued constraints, matching the
/// program the sufficiency theorem is stated for.
pub fn kkt_residuals(p: &Problem, pt: &KKTPoint) -> Result<KKTReport, OptError> {
    if p.objective_form != ObjectiveForm::Composed {
        return Err(OptError::Unsupported(
            "KKT residuals require the transformed objective form".to_string(),
        ));
    }
    if p.constraints.iter().any(|c| c.interval_valued) {
        return Err(OptError::Unsupported(
            "KKT residuals require real-valued constraints".to_string(),
        ));
    }
    if pt.multipliers.len() != p.constraints.len() {
        return Err(OptError::MultiplierCount {
            expected: p.constraints.len(),
            got: pt.multipliers.len(),
        });
    }
    if pt.point.len() != p.dim() {
        return Err(OptError::PointDim {
            expected: p.dim(),
            got: pt.point.len(),
        });
    }

    let n = p.dim();
    let obj_engine = GradientEngine::new(&p.objective, p.semantics, Some(&p.e))?;
    let obj_grad = gradient_at(&obj_engine, p.semantics, &p.e, &pt.point)?;
    let mut used_fd = obj_grad.used_finite_difference;

    let mut stationarity_lo = obj_grad.lo.clone();
    let mut stationarity_hi = obj_grad.hi.clone();
    let mut comp_slack_terms = Vec::with_capacity(p.constraints.len());
    let image = p.e.eval(&pt.point)?;
    for (c, &v) in p.constraints.iter().zip(&pt.multipliers) {
        let engine = GradientEngine::new(&c.function, p.semantics, Some(&p.e))?;
        let grad = gradient_at(&engine, p.semantics, &p.e, &pt.point)?;
        used_fd |= grad.used_finite_difference;
        for i in 0..n {
            stationarity_lo[i] += v * grad.lo[i];
            stationarity_hi[i] += v * grad.hi[i];
        }
        let gval = c.function.eval(&image)?.lo();
        comp_slack_terms.push(v * gval);
    }
    let comp_slack: f64 = comp_slack_terms.iter().sum();
    let multiplier_min_value = pt.multipliers.iter().copied().fold(0.0f64, f64::min);
    let negative_multiplier = (-multiplier_min_value).max(0.0);
    let feasibility = p.feasible(&pt.point, 1e-9)?;

    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let feas_violation = feasibility
        .constraints
        .iter()
        .map(|s| s.value.lo().max(s.value.hi()).max(0.0))
        .fold(feasibility.domain_violation, f64::max);
    let max_residual = inf_norm(&stationarity_lo)
        .max(inf_norm(&stationarity_hi))
        .max(comp_slack.abs())
        .max(negative_multiplier)
        .max(feas_violation);

    Ok(KKTReport {
        stationarity_lo,
        stationarity_hi,
        comp_slack,
        comp_slack_terms,
        multiplier_min: multiplier_min_value,
        feasibility,
        max_residual,
        used_finite_difference: used_fd,
    })
}

/// A feasible point strictly LU-dominating the candidate, if one was found.
#[derive(Debug, Clone, Serialize)]
pub struct Dominator {
    pub point: Vec<f64>,
    pub value: Interval,
    pub margin: f64,
    pub sample_index: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub candidate_point: Vec<f64>,
    pub candidate_value: Interval,
    pub dominating_point: Option<Dominator>,
    pub samples_checked: u64,
    pub draw_failures: u64,
    pub eval_errors: u64,
}

impl DominanceReport {
    pub fn non_dominated(&self) -> bool {
        self.dominating_point.is_none()
    }
}

fn strict_dominance_margin(value: &Interval, candidate: &Interval, tol: f64) -> Option<f64> {
    if value.lo() <= candidate.lo() && value.hi() <= candidate.hi() {
        let margin = f64::max(candidate.lo() - value.lo(), candidate.hi() - value.hi());
        if margin > tol {
            return Some(margin);
        }
    }
    None
}

/// Searches feasible samples for a point whose objective value strictly
/// LU-dominates the candidate's by more than `cfg.tol`. Draw failures are
/// counted, not fatal: a problem whose feasible set is too thin to sample
/// passes vacuously with zero checked samples.
pub fn non_dominated_audit(
    p: &Problem,
    point: &[f64],
    cfg: &AuditConfig,
) -> Result<DominanceReport, OptError> {
    let feas = p.feasible(point, cfg.tol.max(1e-9))?;
    if !feas.feasible {
        return Err(OptError::InfeasibleCandidate {
            point: point.to_vec(),
            detail: format!("{feas:?}"),
        });
    }
    let candidate_value = p.objective_value(point)?;
    let mut best: Option<Dominator> = None;
    let mut checked = 0u64;
    let mut failures = 0u64;
    let mut eval_errors = 0u64;
    for i in 0..cfg.samples {
        let mut stream = Stream::for_sample(cfg.seed, i);
        let sample = match p.draw_feasible(&mut stream) {
            Ok(Some(sample)) => sample,
            Ok(None) => {
                failures += 1;
                continue;
            }
            Err(_) => {
                eval_errors += 1;
                continue;
            }
        };
        checked += 1;
        let value = match p.objective_value(&sample) {
            Ok(v) => v,
            Err(_) => {
                eval_errors += 1;
                continue;
            }
        };
        if let Some(margin) = strict_dominance_margin(&value, &candidate_value, cfg.tol) {
            if best.is_none() {
                best = Some(Dominator {
                    point: sample,
                    value,
                    margin,
                    sample_index: i,
                });
            }
        }
    }
    // replay: a reported dominator must re-verify from scratch
    if let Some(d) = &best {
        let value = p.objective_value(&d.point)?;
        debug_assert!(strict_dominance_margin(&value, &candidate_value, cfg.tol).is_some());
    }
    Ok(DominanceReport {
        candidate_point: point.to_vec(),
        candidate_value,
        dominating_point: best,
        samples_checked: checked,
        draw_failures: failures,
        eval_errors,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedVerdict {
    pub name: String,
    pub verdict: Verdict,
}

/// Full sufficiency audit: (a) invexity hypotheses (first-order objective
/// audit plus the real-valued endpoint-invexity audit of each constraint),
/// (b) first-order residuals within tolerance, (c) no strict dominator
/// among feasible samples. PASS requires all three.
#[derive(Debug, Clone, Serialize)]
pub struct KKTAudit {
    pub hypothesis_objective: Verdict,
    pub hypothesis_constraints: Vec<NamedVerdict>,
    pub residuals: KKTReport,
    pub dominance: DominanceReport,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
}

pub fn kkt_sufficiency_audit(
    p: &Problem,
    pt: &KKTPoint,
    cfg: &AuditConfig,
) -> Result<KKTAudit, OptError> {
    let hypothesis_objective = check_sluei(&p.objective, &p.e, &p.psi, &p.set, cfg);
    let mut hypothesis_constraints = Vec::new();
    for c in &p.constraints {
        // the real-valued strongly-E-invexity reading: the weak first-order
        // endpoint inequalities collapse to one inequality on a degenerate
        // interval function
        let verdict = check_weakly_sei(&c.function, &p.e, &p.psi, &p.set, cfg);
        hypothesis_constraints.push(NamedVerdict {
            name: c.name.clone(),
            verdict,
        });
    }
    let residuals = kkt_residuals(p, pt)?;
    let dominance = non_dominated_audit(p, &pt.point, cfg)?;

    let mut failed_stage = None;
    if !hypothesis_objective.holds() || hypothesis_constraints.iter().any(|nv| !nv.verdict.holds())
    {
        failed_stage = Some("hypothesis".to_string());
    } else if residuals.max_residual > cfg.tol {
        failed_stage = Some("residuals".to_string());
    } else if !dominance.non_dominated() {
        failed_stage = Some("dominance".to_string());
    }
    Ok(KKTAudit {
        hypothesis_objective,
        hypothesis_constraints,
        residuals,
        dominance,
        pass: failed_stage.is_none(),
        failed_stage,
    })
}

/// Local-versus-global audit: the candidate must have no strict dominator
/// in an `eps` ball, and then none globally. The preinvexity hypotheses of
/// the underlying theorem are spot-checked and reported, but the verdict is
/// about the conclusion only.
#[derive(Debug, Clone, Serialize)]
pub struct LocalGlobalReport {
    pub eps: f64,
    pub hypothesis: Vec<NamedVerdict>,
    pub local: DominanceReport,
    pub global: DominanceReport,
    pub locally_minimal: bool,
    pub pass: bool,
}

pub fn local_global_audit(
    p: &Problem,
    point: &[f64],
    cfg: &AuditConfig,
    eps: Option<f64>,
) -> Result<LocalGlobalReport, OptError> {
    let feas = p.feasible(point, cfg.tol.max(1e-9))?;
    if !feas.feasible {
        return Err(OptError::InfeasibleCandidate {
            point: point.to_vec(),
            detail: format!("{feas:?}"),
        });
    }
    let eps = eps.unwrap_or(1e-2 * p.set.region.diagonal());

    // informational hypothesis audits on a reduced budget
    let hcfg = AuditConfig {
        samples: cfg.samples.min(2000),
        ..cfg.clone()
    };
    let mut hypothesis = vec![NamedVerdict {
        name: "objective strictly preinvex (informational)".to_string(),
        verdict: check_sluep(
            &p.objective,
            &p.e,
            &p.psi,
            &p.set,
            &hcfg,
            StrictMode::Strict,
        ),
    }];
    for c in &p.constraints {
        hypothesis.push(NamedVerdict {
            name: format!("constraint {} preinvex (informational)", c.name),
            verdict: check_sluep(&c.function, &p.e, &p.psi, &p.set, &hcfg, StrictMode::Weak),
        });
    }

    let candidate_value = p.objective_value(point)?;
    let norm = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    // local stage: sample the eps ball around the candidate
    let mut local = DominanceReport {
        candidate_point: point.to_vec(),
        candidate_value,
        dominating_point: None,
        samples_checked: 0,
        draw_failures: 0,
        eval_errors: 0,
    };
    'samples: for i in 0..cfg.samples {
        let mut stream = Stream::for_sample(cfg.seed ^ 0x10ca1, i);
        let mut found = None;
        for _ in 0..100 {
            let candidate: Vec<f64> = point
                .iter()
                .map(|&x| stream.in_range(x - eps, x + eps))
                .collect();
            if norm(&candidate, point) > eps {
                continue;
            }
            match p.is_feasible_exact(&candidate) {
                Ok(true) => {
                    found = Some(candidate);
                    break;
                }
                Ok(false) => {}
                Err(_) => {
                    local.eval_errors += 1;
                    continue 'samples;
                }
            }
        }
        let Some(sample) = found else {
            local.draw_failures += 1;
            continue;
        };
        local.samples_checked += 1;
        let value = match p.objective_value(&sample) {
            Ok(v) => v,
            Err(_) => {
                local.eval_errors += 1;
                continue;
            }
        };
        if let Some(margin) = strict_dominance_margin(&value, &candidate_value, cfg.tol) {
            if local.dominating_point.is_none() {
                local.dominating_point = Some(Dominator {
                    point: sample,
                    value,
                    margin,
                    sample_index: i,
                });
            }
        }
    }

    let global = non_dominated_audit(p, point, cfg)?;
    let locally_minimal = local.dominating_point.is_none();
    let pass = locally_minimal && global.non_dominated();
    Ok(LocalGlobalReport {
        eps,
        hypothesis,
        local,
        global,
        locally_minimal,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub point: Vec<f64>,
    pub value: Interval,
}

/// Coarse grid search with iterative zoom on the objective (under the
/// problem's objective form), returning the LU-nondominated feasible
/// candidates ranked by endpoint sum. Plumbing for seeding the KKT and
/// dominance audits, not a solver.
pub fn grid_candidates(p: &Problem, cfg: &AuditConfig) -> Result<Vec<Candidate>, OptError> {
    let n = p.dim();
    // per-round budget bounded by the sample budget
    let budget = (cfg.samples.max(81) as f64).powf(1.0 / n as f64).floor() as usize;
    let per_dim: usize = match n {
        1 => 129.min(budget),
        2 => 65.min(budget),
        _ => 17.min(budget),
    }
    .max(3);
    let mut center: Vec<f64> = p
        .set
        .region
        .bounds()
        .iter()
        .map(|&(lo, hi)| 0.5 * (lo + hi))
        .collect();
    let mut half: Vec<f64> = p
        .set
        .region
        .bounds()
        .iter()
        .map(|&(lo, hi)| 0.5 * (hi - lo))
        .collect();

    let mut evaluated: Vec<Candidate> = Vec::new();
    for _round in 0..3 {
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let (blo, bhi) = p.set.region.bounds()[i];
                let lo = (center[i] - half[i]).max(blo);
                let hi = (center[i] + half[i]).min(bhi);
                (0..per_dim)
                    .map(|k| lo + (hi - lo) * (k as f64) / ((per_dim - 1) as f64))
                    .collect()
            })
            .collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut round_best: Option<(f64, Vec<f64>)> = None;
        let mut round_points: Vec<Candidate> = Vec::new();
        for flat in 0..total {
            let mut idx = flat;
            let mut point = Vec::with_capacity(n);
            for axis in &axes {
                point.push(axis[idx % axis.len()]);
                idx /= axis.len();
            }
            if !p.is_feasible_exact(&point)? {
                continue;
            }
            let value = match p.objective_value(&point) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let score = value.lo() + value.hi();
            if round_best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
                round_best = Some((score, point.clone()));
            }
            round_points.push(Candidate { point, value });
        }
        let Some((_, best_point)) = round_best else {
            break;
        };
        evaluated = round_points;
        let step: Vec<f64> = axes
            .iter()
            .map(|a| if a.len() > 1 { a[1] - a[0] } else { 0.0 })
            .collect();
        center = best_point;
        half = step.iter().map(|s| (2.0 * s).max(1e-12)).collect();
    }

    // keep the LU-nondominated front of the final refinement
    let mut front: Vec<Candidate> = Vec::new();
    for c in &evaluated {
        if evaluated.iter().any(|o| o.value.lu_lt(&c.value)) {
            continue;
        }
        front.push(c.clone());
    }
    front.sort_by(|a, b| {
        (a.value.lo() + a.value.hi())
            .partial_cmp(&(b.value.lo() + b.value.hi()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    front.truncate(10);
    Ok(front)
}

/// Real-constraint builder used by the problem loader and tests.
pub fn real_constraint(
    name: &str,
    expr: Expr,
    domain: crate::ivf::BoxDomain,
) -> Result<Constraint, OptError> {
    Ok(Constraint {
        name: name.to_string(),
        function: IVFn::degenerate(expr, domain)?,
        interval_valued: false,
    })
}

/// Interval-constraint builder.
pub fn interval_constraint(
    name: &str,
    lo: Expr,
    hi: Expr,
    domain: crate::ivf::BoxDomain,
) -> Result<Constraint, OptError> {
    Ok(Constraint {
        name: name.to_string(),
        function: IVFn::new(lo, hi, domain)?,
        interval_valued: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::GridSpec;
    use crate::expr::parse;
    use crate::ivf::BoxDomain;

    fn cfg(samples: u64) -> AuditConfig {
        AuditConfig {
            samples,
            ..AuditConfig::default()
        }
    }

    const LN2: f64 = std::f64::consts::LN_2;

    // min [4 e^z - 8 z, 8 e^z - 16 z] subject to e^z <= 4 and e^z <= 16 on
    // the half-line starting at ln 2, expressed as a transformed program
    fn worked_program() -> Problem {
        let domain = BoxDomain::new(vec![(LN2, 10.0)]).unwrap();
        let objective = IVFn::new(
            parse("4*z1 - 8*ln(z1)", &["z1"]).unwrap(),
            parse("8*z1 - 16*ln(z1)", &["z1"]).unwrap(),
            BoxDomain::new(vec![(0.5, 25.0)]).unwrap(),
        )
        .unwrap();
        Problem {
            objective,
            objective_form: ObjectiveForm::Composed,
            constraints: vec![
                real_constraint("g1", parse("z1 - 4", &["z1"]).unwrap(), domain.clone()).unwrap(),
                real_constraint("g2", parse("z1 - 16", &["z1"]).unwrap(), domain.clone()).unwrap(),
            ],
            e: VectorMap::point_map(vec![parse("exp(z1)", &["z1"]).unwrap()], 1).unwrap(),
            psi: VectorMap::pair_map(vec![parse("-1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![parse("ln(2) - z1", &["z1"]).unwrap()]),
            semantics: GradSemantics::Composite,
        }
    }

    // the same program restated in constraint form: precomposed objective,
    // interval constraints, direct objective reading
    fn worked_program_constraint_form() -> Problem {
        let domain = BoxDomain::new(vec![(LN2, 10.0)]).unwrap();
        let objective = IVFn::new(
            parse("4*exp(z1) - 8*z1", &["z1"]).unwrap(),
            parse("8*exp(z1) - 16*z1", &["z1"]).unwrap(),
            domain.clone(),
        )
        .unwrap();
        Problem {
            objective,
            objective_form: ObjectiveForm::Direct,
            constraints: vec![
                interval_constraint(
                    "c1",
                    parse("exp(z1) - 4", &["z1"]).unwrap(),
                    parse("exp(z1) - 4", &["z1"]).unwrap(),
                    domain.clone(),
                )
                .unwrap(),
                interval_constraint(
                    "c2",
                    parse("exp(z1) - 16", &["z1"]).unwrap(),
                    parse("exp(z1) - 16", &["z1"]).unwrap(),
                    domain.clone(),
                )
                .unwrap(),
            ],
            e: VectorMap::point_map(vec![parse("exp(z1)", &["z1"]).unwrap()], 1).unwrap(),
            psi: VectorMap::pair_map(vec![parse("-1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![parse("ln(2) - z1", &["z1"]).unwrap()]),
            semantics: GradSemantics::Composite,
        }
    }

    #[test]
    fn feasibility_of_the_worked_program() {
        let p = worked_program();
        let r = p.feasible(&[LN2], 1e-9).unwrap();
        assert!(r.feasible);

        let r = p.feasible(&[5f64.ln()], 1e-9).unwrap();
        assert!(!r.feasible);
        assert!(!r.constraints[0].satisfied); // e^z - 4 = 1
        assert!((r.constraints[0].value.lo() - 1.0).abs() < 1e-12);
        assert!(r.constraints[1].satisfied);

        // without constraints everything inside S is feasible
        let mut free = worked_program();
        free.constraints.clear();
        assert!(free.feasible(&[2.0], 1e-9).unwrap().feasible);
    }

    #[test]
    fn kkt_residuals_at_the_stationary_point() {
        let p = worked_program();
        let pt = KKTPoint {
            point: vec![LN2],
            multipliers: vec![0.0, 0.0],
        };
        let r = kkt_residuals(&p, &pt).unwrap();
        assert!(r.max_residual <= 1e-9, "max_residual = {}", r.max_residual);
        assert!(r.stationarity_lo[0].abs() <= 1e-9);
        assert!(r.stationarity_hi[0].abs() <= 1e-9);
        assert_eq!(r.comp_slack, 0.0);

        // off the stationary point the lower-endpoint residual is 4 exactly
        let pt = KKTPoint {
            point: vec![3f64.ln()],
            multipliers: vec![0.0, 0.0],
        };
        let r = kkt_residuals(&p, &pt).unwrap();
        assert!((r.stationarity_lo[0] - 4.0).abs() < 1e-9);

        // multiplier bookkeeping
        let bad = KKTPoint {
            point: vec![LN2],
            multipliers: vec![-1.0, 0.0],
        };
        let r = kkt_residuals(&p, &bad).unwrap();
        assert!(r.max_residual >= 1.0);
        assert_eq!(r.multiplier_min, -1.0);

        let wrong_count = KKTPoint {
            point: vec![LN2],
            multipliers: vec![0.0],
        };
        assert!(matches!(
            kkt_residuals(&p, &wrong_count),
            Err(OptError::MultiplierCount { .. })
        ));
    }

    #[test]
    fn kkt_sufficiency_audit_passes_at_the_optimum_only() {
        let p = worked_program();
        let c = cfg(3000);
        let audit = kkt_sufficiency_audit(
            &p,
            &KKTPoint {
                point: vec![LN2],
                multipliers: vec![0.0, 0.0],
            },
            &c,
        )
        .unwrap();
        assert!(audit.pass, "{:?}", audit.failed_stage);
        assert!(audit.hypothesis_objective.holds());
        assert!(audit
            .hypothesis_constraints
            .iter()
            .all(|nv| nv.verdict.holds()));

        let audit = kkt_sufficiency_audit(
            &p,
            &KKTPoint {
                point: vec![3f64.ln()],
                multipliers: vec![0.0, 0.0],
            },
            &c,
        )
        .unwrap();
        assert!(!audit.pass);
        assert_eq!(audit.failed_stage.as_deref(), Some("residuals"));
    }

    #[test]
    fn dominance_audit_on_the_worked_program() {
        let p = worked_program();
        let c = cfg(4000);
        let r = non_dominated_audit(&p, &[LN2], &c).unwrap();
        assert!(r.non_dominated());
        assert!(r.samples_checked > 1000);

        let r = non_dominated_audit(&p, &[4f64.ln()], &c).unwrap();
        assert!(!r.non_dominated());
        let d = r.dominating_point.unwrap();
        assert!(d.margin > 0.1);

        assert!(matches!(
            non_dominated_audit(&p, &[5f64.ln()], &c),
            Err(OptError::InfeasibleCandidate { .. })
        ));
    }

    #[test]
    fn local_global_audit_on_the_constraint_form() {
        let p = worked_program_constraint_form();
        let c = cfg(3000);
        let r = local_global_audit(&p, &[LN2], &c, None).unwrap();
        assert!(r.pass, "local dominator: {:?}", r.local.dominating_point);

        let r = local_global_audit(&p, &[3f64.ln()], &c, None).unwrap();
        assert!(!r.locally_minimal);
        assert!(!r.pass);
    }

    #[test]
    fn vacuous_pass_on_a_single_point_feasible_set() {
        // constraints pin z = -2 exactly
        let domain = BoxDomain::new(vec![(-5.0, 5.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("z1", &["z1"]).unwrap(),
                parse("z1 + 1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![
                interval_constraint(
                    "pin_lo",
                    parse("z1 + 2", &["z1"]).unwrap(),
                    parse("z1 + 2", &["z1"]).unwrap(),
                    domain.clone(),
                )
                .unwrap(),
                interval_constraint(
                    "pin_hi",
                    parse("-2 - z1", &["z1"]).unwrap(),
                    parse("-2 - z1", &["z1"]).unwrap(),
                    domain.clone(),
                )
                .unwrap(),
            ],
            e: VectorMap::identity(1),
            psi: VectorMap::pair_map(vec![parse("a1 - b1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![]),
            semantics: GradSemantics::Composite,
        };
        let c = cfg(200);
        let r = local_global_audit(&p, &[-2.0], &c, None).unwrap();
        assert!(r.pass);
        assert_eq!(r.global.samples_checked, 0);
        assert_eq!(r.global.draw_failures, 200);
    }

    #[test]
    fn feasible_set_structure_audit_holds_for_the_domain() {
        let p = worked_program();
        let v = check_feasible_set_sei(&p, &cfg(3000));
        assert!(v.holds(), "{v:?}");
        assert!(v.notes.iter().any(|n| n.contains("E(S) within S")));

        // a membership-bounded set with an escaping construction fails
        let domain = BoxDomain::new(vec![(0.0, 1.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("0", &["z1"]).unwrap(),
                parse("1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![],
            e: VectorMap::identity(1),
            psi: VectorMap::pair_map(vec![parse("10", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(
                domain,
                vec![
                    parse("-z1", &["z1"]).unwrap(),
                    parse("z1 - 1", &["z1"]).unwrap(),
                ],
            ),
            semantics: GradSemantics::Composite,
        };
        assert!(check_feasible_set_sei(&p, &cfg(2000)).fails());

        // stationary construction: identity map, zero Psi, alpha pinned
        let domain = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("0", &["z1"]).unwrap(),
                parse("1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![],
            e: VectorMap::identity(1),
            psi: VectorMap::pair_map(vec![parse("0", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(
                domain,
                vec![
                    parse("-1 - z1", &["z1"]).unwrap(),
                    parse("z1 - 1", &["z1"]).unwrap(),
                ],
            ),
            semantics: GradSemantics::Composite,
        };
        let c = AuditConfig {
            alpha: GridSpec::fixed(0.0),
            ..cfg(2000)
        };
        assert!(check_feasible_set_sei(&p, &c).holds());
    }

    #[test]
    fn grid_candidates_locate_the_optimum() {
        let p = worked_program();
        let c = cfg(10_000);
        let front = grid_candidates(&p, &c).unwrap();
        assert!(!front.is_empty());
        assert!(
            (front[0].point[0] - LN2).abs() <= 1e-4,
            "top candidate {} vs {LN2}",
            front[0].point[0]
        );

        // monotone objective on a box ends at a vertex
        let domain = BoxDomain::new(vec![(-1.0, 2.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("z1", &["z1"]).unwrap(),
                parse("z1 + 1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![],
            e: VectorMap::identity(1),
            psi: VectorMap::pair_map(vec![parse("a1 - b1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![]),
            semantics: GradSemantics::Composite,
        };
        let front = grid_candidates(&p, &c).unwrap();
        assert!((front[0].point[0] - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn constant_objective_admits_no_dominator() {
        let domain = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("0", &["z1"]).unwrap(),
                parse("1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![],
            e: VectorMap::identity(1),
            psi: VectorMap::pair_map(vec![parse("a1 - b1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![]),
            semantics: GradSemantics::Composite,
        };
        let c = cfg(2000);
        let r = non_dominated_audit(&p, &[0.5], &c).unwrap();
        assert!(r.non_dominated());
        // and the candidate ranker returns feasible points all tied
        let front = grid_candidates(&p, &c).unwrap();
        assert!(!front.is_empty());
        assert!(front
            .iter()
            .all(|cand| cand.value == Interval::new(0.0, 1.0).unwrap()));
    }

    // Closure of the optimal set under the invexity construction, on a
    // program with a flat optimal region whose map image stays optimal.
    #[test]
    fn optimal_set_closure_under_the_construction() {
        let domain = BoxDomain::new(vec![(-10.0, 0.0)]).unwrap();
        let p = Problem {
            objective: IVFn::new(
                parse("max(z1, -1)", &["z1"]).unwrap(),
                parse("max(z1, -1) + 1", &["z1"]).unwrap(),
                domain.clone(),
            )
            .unwrap(),
            objective_form: ObjectiveForm::Direct,
            constraints: vec![],
            e: VectorMap::point_map(vec![parse("floor(z1)", &["z1"]).unwrap()], 1).unwrap(),
            psi: VectorMap::pair_map(vec![parse("a1 - b1", &["a1", "b1"]).unwrap()], 1).unwrap(),
            set: SetSpec::new(domain, vec![parse("z1", &["z1"]).unwrap()]),
            semantics: GradSemantics::Composite,
        };
        let optimal_value = Interval::new(-1.0, 0.0).unwrap();
        let mut stream = Stream::for_sample(99, 0);
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut checked = 0;
        for _ in 0..500 {
            let zeta = [stream.in_range(-10.0, -1.0)];
            let delta = [stream.in_range(-10.0, -1.0)];
            assert_eq!(p.objective_value(&zeta).unwrap(), optimal_value);
            for &alpha in &grid {
                for &lambda in &grid {
                    let t =
                        crate::invexity::transform_at(&p.e, &p.psi, &zeta, &delta, alpha, lambda)
                            .unwrap();
                    assert!(p.is_feasible_exact(&t.w).unwrap());
                    assert_eq!(p.objective_value(&t.w).unwrap(), optimal_value);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 500 * 25);
    }
}
