//! Sampling-based falsification auditors for the generalized invexity
//! classes of interval-valued functions.
//!
//! Every checker quantifies over tuples `(zeta, delta, alpha, lambda)` with
//! the set points drawn from `S` and the scalars from the configured grids,
//! and returns either a replayable counterexample or "no counterexample
//! among N samples". An LU inequality counts as violated only when some
//! required endpoint inequality fails by more than `cfg.tol`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::audit::{
    draw_standard, run_samples, AuditConfig, Draw, GridSpec, SampleEval, SetSpec, Verdict, Witness,
};
use crate::expr::{Env, Expr, IntervalMapExpr, MapError, VectorMap};
use crate::interval::Interval;
use crate::ivf::{GradSemantics, GradientEngine, GradientPair, IVFn, IvfError};
use crate::rng::Stream;

/// Transformed points of one audited tuple.
#[derive(Debug, Clone)]
pub struct Transformed {
    /// `alpha zeta + E(zeta)`
    pub a: Vec<f64>,
    /// `alpha delta + E(delta)`
    pub b: Vec<f64>,
    /// `Psi(a, b)`
    pub psi: Vec<f64>,
    /// `b + lambda psi`, the constructed point
    pub w: Vec<f64>,
    /// `E(zeta)`
    pub e_zeta: Vec<f64>,
    /// `E(delta)`
    pub e_delta: Vec<f64>,
}

/// Computes the transformed points for a tuple.
pub fn transform_at(
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    lambda: f64,
) -> Result<Transformed, MapError> {
    let e_zeta = e.eval(zeta)?;
    let e_delta = e.eval(delta)?;
    let a: Vec<f64> = zeta
        .iter()
        .zip(&e_zeta)
        .map(|(z, ez)| alpha * z + ez)
        .collect();
    let b: Vec<f64> = delta
        .iter()
        .zip(&e_delta)
        .map(|(d, ed)| alpha * d + ed)
        .collect();
    let psi_val = psi.eval_pair(&a, &b)?;
    let w: Vec<f64> = b
        .iter()
        .zip(&psi_val)
        .map(|(bi, pi)| bi + lambda * pi)
        .collect();
    Ok(Transformed {
        a,
        b,
        psi: psi_val,
        w,
        e_zeta,
        e_delta,
    })
}

/// Amount by which `lhs LU<= rhs` fails (positive means violated).
fn lu_violation(lhs: &Interval, rhs: &Interval) -> f64 {
    f64::max(lhs.lo() - rhs.lo(), lhs.hi() - rhs.hi())
}

fn witness(
    index: u64,
    draw: &Draw,
    lhs: Interval,
    rhs: Interval,
    margin: f64,
    note: Option<String>,
    extra: BTreeMap<String, f64>,
) -> Witness {
    Witness {
        sample_index: index,
        zeta: draw.zeta.clone(),
        delta: draw.delta.clone(),
        alpha: draw.alpha,
        lambda: draw.lambda,
        lhs,
        rhs,
        margin,
        note,
        extra,
    }
}

fn vec_extra(prefix: &str, v: &[f64], extra: &mut BTreeMap<String, f64>) {
    for (i, x) in v.iter().enumerate() {
        extra.insert(format!("{prefix}{}", i + 1), *x);
    }
}

macro_rules! try_sample {
    ($expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(err) => return SampleEval::EvalError(err.to_string()),
        }
    };
}

// Overflowing expressions produce infinities that would poison witnesses;
// treat them as per-sample evaluation failures.
macro_rules! finite_or_error {
    ($x:expr) => {{
        let v = $x;
        if !v.is_finite() {
            return SampleEval::EvalError(format!("non-finite value {v} in audit arithmetic"));
        }
        v
    }};
}

fn singleton(x: f64) -> Interval {
    Interval::new(x, x).expect("guarded finite")
}

fn check_dims(set: &SetSpec, e: &VectorMap, psi: &VectorMap, f: Option<&IVFn>) -> Option<String> {
    let n = set.dim();
    if e.out_dim() != n || e.in_dim() != n {
        return Some(format!("map E has arity {} on dimension {n}", e.out_dim()));
    }
    if psi.out_dim() != n || psi.in_dim() != 2 * n {
        return Some(format!(
            "map Psi has arity {} on dimension {n}",
            psi.out_dim()
        ));
    }
    if let Some(f) = f {
        if f.dim() != n {
            return Some(format!(
                "function dimension {} does not match S (n = {n})",
                f.dim()
            ));
        }
    }
    None
}

/// Audits whether `S` is a strongly E-invex set: the constructed point
/// `alpha delta + E(delta) + lambda Psi(...)` must satisfy the membership
/// constraints of `S`. Pin `alpha` to zero (`GridSpec::fixed(0.0)`) for the
/// plain E-invex-set check.
pub fn check_sei_set(set: &SetSpec, e: &VectorMap, psi: &VectorMap, cfg: &AuditConfig) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, None) {
        return Verdict::not_checkable(msg);
    }
    run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let t = try_sample!(transform_at(
            e,
            psi,
            &draw.zeta,
            &draw.delta,
            draw.alpha,
            draw.lambda
        ));
        let v = finite_or_error!(try_sample!(set.violation(&t.w)));
        if v > cfg.tol {
            let mut extra = BTreeMap::new();
            vec_extra("w", &t.w, &mut extra);
            SampleEval::Fail(witness(
                i,
                &draw,
                singleton(v),
                Interval::ZERO,
                v,
                Some("constructed point escapes S; extra carries its coordinates".to_string()),
                extra,
            ))
        } else {
            SampleEval::Pass
        }
    })
}

fn sluep_sides_full(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    lambda: f64,
) -> Result<(Interval, Interval, Transformed), IvfError> {
    let t = transform_at(e, psi, zeta, delta, alpha, lambda)?;
    let lhs = f.eval(&t.w)?;
    let rhs = f.eval(&t.e_zeta)?.scale(lambda) + f.eval(&t.e_delta)?.scale(1.0 - lambda);
    Ok((lhs, rhs, t))
}

fn ssluep_sides_full(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    lambda: f64,
) -> Result<(Interval, Interval, Transformed), IvfError> {
    let t = transform_at(e, psi, zeta, delta, alpha, lambda)?;
    let lhs = f.eval(&t.w)?;
    let rhs = f.eval(zeta)?.scale(lambda) + f.eval(delta)?.scale(1.0 - lambda);
    Ok((lhs, rhs, t))
}

/// Both sides of the strongly LU-E-preinvex inequality at one tuple:
/// `h(w)` against `lambda h(E(zeta)) + (1 - lambda) h(E(delta))`.
pub fn sluep_sides(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    lambda: f64,
) -> Result<(Interval, Interval), IvfError> {
    sluep_sides_full(f, e, psi, zeta, delta, alpha, lambda).map(|(l, r, _)| (l, r))
}

/// Both sides of the semi variant: the right-hand side mixes the
/// untransformed arguments `h(zeta)`, `h(delta)`.
pub fn ssluep_sides(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    lambda: f64,
) -> Result<(Interval, Interval), IvfError> {
    ssluep_sides_full(f, e, psi, zeta, delta, alpha, lambda).map(|(l, r, _)| (l, r))
}

fn check_jensen_like<Sides>(
    set: &SetSpec,
    cfg: &AuditConfig,
    strict: StrictMode,
    sides: Sides,
) -> Verdict
where
    Sides: Fn(&Draw) -> Result<(Interval, Interval, Transformed), IvfError> + Sync,
{
    run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let (lhs, rhs, t) = try_sample!(sides(&draw));
        match strict {
            StrictMode::Weak => {
                let margin = lu_violation(&lhs, &rhs);
                if margin > cfg.tol {
                    SampleEval::Fail(witness(i, &draw, lhs, rhs, margin, None, BTreeMap::new()))
                } else {
                    SampleEval::Pass
                }
            }
            StrictMode::Strict => {
                // the strict inequality is only required off the diagonal
                // and for interior lambda
                let distinct = t.a.iter().zip(&t.b).any(|(x, y)| (x - y).abs() > cfg.tol);
                if !distinct || draw.lambda <= 0.0 || draw.lambda >= 1.0 {
                    return SampleEval::NotTriggered;
                }
                let weak_margin = lu_violation(&lhs, &rhs);
                if weak_margin > cfg.tol {
                    return SampleEval::Fail(witness(
                        i,
                        &draw,
                        lhs,
                        rhs,
                        weak_margin,
                        None,
                        BTreeMap::new(),
                    ));
                }
                let strict_gap = f64::max(rhs.lo() - lhs.lo(), rhs.hi() - lhs.hi());
                if strict_gap <= cfg.tol {
                    return SampleEval::Fail(witness(
                        i,
                        &draw,
                        lhs,
                        rhs,
                        2.0 * cfg.tol - strict_gap,
                        Some("strictness failure: sides coincide within tol".to_string()),
                        BTreeMap::new(),
                    ));
                }
                SampleEval::Pass
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictMode {
    Weak,
    Strict,
}

/// Audits the strongly LU-E-preinvex inequality (transformed right-hand
/// side). With `StrictMode::Strict` the inequality must be strict whenever
/// the transformed arguments differ and `lambda` is interior.
pub fn check_sluep(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    set: &SetSpec,
    cfg: &AuditConfig,
    strict: StrictMode,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    check_jensen_like(set, cfg, strict, |draw| {
        sluep_sides_full(f, e, psi, &draw.zeta, &draw.delta, draw.alpha, draw.lambda)
    })
}

/// Audits the semi strongly LU-E-preinvex inequality (untransformed
/// right-hand side).
pub fn check_ssluep(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    set: &SetSpec,
    cfg: &AuditConfig,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    check_jensen_like(set, cfg, StrictMode::Weak, |draw| {
        ssluep_sides_full(f, e, psi, &draw.zeta, &draw.delta, draw.alpha, draw.lambda)
    })
}

/// A strictly positive certificate function `Phi(u, v)` into intervals,
/// given as endpoint expressions over `a1..an, b1..bn`.
#[derive(Debug, Clone)]
pub struct PairIntervalMap {
    pub lo: Expr,
    pub hi: Expr,
    vars: Vec<String>,
}

impl PairIntervalMap {
    pub fn new(lo: Expr, hi: Expr, dim: usize) -> PairIntervalMap {
        PairIntervalMap {
            lo,
            hi,
            vars: crate::expr::pair_vars(dim),
        }
    }

    fn eval(&self, u: &[f64], v: &[f64]) -> Result<(f64, f64), MapError> {
        let mut args = Vec::with_capacity(u.len() + v.len());
        args.extend_from_slice(u);
        args.extend_from_slice(v);
        let env = Env::new(&self.vars, &args);
        Ok((self.lo.eval(&env)?, self.hi.eval(&env)?))
    }
}

/// Choice of the certificate in the pseudo-preinvexity audit: either the
/// endpoint-difference construction that witnesses every preinvex function
/// as pseudo-preinvex, or a user-supplied map.
pub enum PhiMode<'a> {
    Derived,
    Supplied(&'a PairIntervalMap),
}

/// Audits the pseudo variant: on samples whose premise
/// `h(E(zeta)) LU< h(E(delta))` triggers, requires
/// `h(w) LU<= h(E(delta)) + lambda (lambda - 1) Phi(E(zeta), E(delta))`
/// and that `Phi` is strictly positive there. In derived mode
/// `Phi = [hU(E(delta)) - hU(E(zeta)), hL(E(delta)) - hL(E(zeta))]` and the
/// right-hand side is computed endpointwise from that construction, so the
/// audit tests a sufficient certificate rather than the bare existential
/// definition. Untriggered samples are counted and skipped.
pub fn check_psluep(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    set: &SetSpec,
    cfg: &AuditConfig,
    phi: PhiMode,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    let mut verdict = run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let t = try_sample!(transform_at(
            e,
            psi,
            &draw.zeta,
            &draw.delta,
            draw.alpha,
            draw.lambda
        ));
        let hez = try_sample!(f.eval(&t.e_zeta));
        let hed = try_sample!(f.eval(&t.e_delta));
        if !hez.lu_lt(&hed) {
            return SampleEval::NotTriggered;
        }
        let (phi_lo, phi_hi, supplied) = match &phi {
            PhiMode::Derived => (hed.hi() - hez.hi(), hed.lo() - hez.lo(), false),
            PhiMode::Supplied(map) => {
                let (lo, hi) = try_sample!(map.eval(&t.e_zeta, &t.e_delta));
                (finite_or_error!(lo), finite_or_error!(hi), true)
            }
        };
        let mut extra = BTreeMap::new();
        extra.insert("phi_lo".to_string(), phi_lo);
        extra.insert("phi_hi".to_string(), phi_hi);
        if supplied && phi_lo > phi_hi + cfg.tol {
            return SampleEval::Fail(witness(
                i,
                &draw,
                hez,
                hed,
                phi_lo - phi_hi,
                Some("supplied Phi is not an interval here".to_string()),
                extra,
            ));
        }
        // strict positivity of Phi on the triggered sample
        let neg = f64::max(-phi_lo, -phi_hi);
        let top = f64::max(phi_lo, phi_hi);
        if neg > cfg.tol || top <= cfg.tol {
            let margin = if neg > cfg.tol {
                neg
            } else {
                2.0 * cfg.tol - top
            };
            return SampleEval::Fail(witness(
                i,
                &draw,
                hez,
                hed,
                margin,
                Some("Phi is not strictly positive on a triggered sample".to_string()),
                extra,
            ));
        }
        // lambda (lambda - 1) <= 0, so the scalar multiple swaps endpoints
        let k = draw.lambda * (draw.lambda - 1.0);
        let rhs_lo = finite_or_error!(hed.lo() + k * phi_hi);
        let rhs_hi = finite_or_error!(hed.hi() + k * phi_lo);
        let lhs = try_sample!(f.eval(&t.w));
        let margin = f64::max(lhs.lo() - rhs_lo, lhs.hi() - rhs_hi);
        if margin > cfg.tol {
            let rhs = Interval::new(rhs_lo.min(rhs_hi), rhs_lo.max(rhs_hi)).expect("guarded finite");
            SampleEval::Fail(witness(i, &draw, lhs, rhs, margin, None, extra))
        } else {
            SampleEval::Pass
        }
    });
    // triggered is always meaningful for this premise-guarded audit, even
    // when every sample triggered
    if verdict.triggered.is_none()
        && !matches!(verdict.outcome, crate::audit::Outcome::NotCheckable { .. })
    {
        verdict.triggered =
            Some(verdict.samples_checked - verdict.skipped_nonsmooth - verdict.eval_errors);
    }
    if let PhiMode::Derived = phi {
        verdict.notes.push(
            "derived Phi: sufficient certificate from the endpoint-difference construction"
                .to_string(),
        );
    }
    verdict
}

/// Scalar sides of the two weak first-order endpoint inequalities at one
/// tuple, under the chosen gradient semantics: returns
/// `((lhs_lo, rhs_lo), (lhs_hi, rhs_hi))` where each inequality requires
/// `lhs >= rhs`. Replay helper for witnesses of the weak audit.
pub fn weakly_sei_sides(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    zeta: &[f64],
    delta: &[f64],
    alpha: f64,
    semantics: GradSemantics,
) -> Result<((f64, f64), (f64, f64)), IvfError> {
    let t = transform_at(e, psi, zeta, delta, alpha, 0.0)?;
    let engine = GradientEngine::new(f, semantics, Some(e))?;
    let gpoint: &[f64] = match semantics {
        GradSemantics::Direct => &t.e_delta,
        GradSemantics::Composite => delta,
    };
    let pair = engine.pair_at(gpoint)?;
    let hez = f.eval(&t.e_zeta)?;
    let hed = f.eval(&t.e_delta)?;
    Ok((
        (hez.lo() - hed.lo(), dot(&t.psi, &pair.lo)),
        (hez.hi() - hed.hi(), dot(&t.psi, &pair.hi)),
    ))
}

/// Gradient-based per-sample context shared by the first-order audits.
struct GradSample {
    t: Transformed,
    pair: GradientPair,
    delta_used: Vec<f64>,
}

/// Draws gradients at `E(delta)` (direct semantics) or through `E` at
/// `delta` (composite). Near a kink the sample point is nudged by 1e-7 up
/// to three times; a sample still on a kink after that is skipped.
fn gradient_sample(
    e: &VectorMap,
    psi: &VectorMap,
    engine: &GradientEngine,
    cfg: &AuditConfig,
    draw: &Draw,
) -> Result<Option<GradSample>, IvfError> {
    let mut delta = draw.delta.clone();
    for _attempt in 0..=3 {
        let t = transform_at(e, psi, &draw.zeta, &delta, draw.alpha, draw.lambda)?;
        let gpoint: &[f64] = match cfg.semantics {
            GradSemantics::Direct => &t.e_delta,
            GradSemantics::Composite => &delta,
        };
        if engine.near_kink(gpoint)? {
            for x in delta.iter_mut() {
                *x += 1e-7;
            }
            continue;
        }
        let pair = engine.pair_at(gpoint)?;
        return Ok(Some(GradSample {
            t,
            pair,
            delta_used: delta,
        }));
    }
    Ok(None)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Audits the weakly strongly-E-invex first-order endpoint inequalities:
/// `hX(E(zeta)) - hX(E(delta)) >= Psi(a, b) . grad hX(E(delta))` for both
/// endpoints, under the configured gradient semantics.
pub fn check_weakly_sei(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    set: &SetSpec,
    cfg: &AuditConfig,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    let engine = match GradientEngine::new(f, cfg.semantics, Some(e)) {
        Ok(eng) => eng,
        Err(err) => return Verdict::not_checkable(err.to_string()),
    };
    let fd_uses = AtomicU64::new(0);
    let mut verdict = run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let gs = match gradient_sample(e, psi, &engine, cfg, &draw) {
            Ok(Some(gs)) => gs,
            Ok(None) => return SampleEval::SkipNonsmooth,
            Err(err) => return SampleEval::EvalError(err.to_string()),
        };
        if gs.pair.used_finite_difference {
            fd_uses.fetch_add(1, AtomicOrdering::Relaxed);
        }
        let hez = try_sample!(f.eval(&gs.t.e_zeta));
        let hed = try_sample!(f.eval(&gs.t.e_delta));
        let lhs_l = finite_or_error!(hez.lo() - hed.lo());
        let lhs_u = finite_or_error!(hez.hi() - hed.hi());
        let rhs_l = finite_or_error!(dot(&gs.t.psi, &gs.pair.lo));
        let rhs_u = finite_or_error!(dot(&gs.t.psi, &gs.pair.hi));
        let viol_l = rhs_l - lhs_l;
        let viol_u = rhs_u - lhs_u;
        let margin = f64::max(viol_l, viol_u);
        if margin > cfg.tol {
            let (side, lv, rv) = if viol_l >= viol_u {
                ("lower", lhs_l, rhs_l)
            } else {
                ("upper", lhs_u, rhs_u)
            };
            let mut extra = BTreeMap::new();
            extra.insert("lhs_lower".to_string(), lhs_l);
            extra.insert("rhs_lower".to_string(), rhs_l);
            extra.insert("lhs_upper".to_string(), lhs_u);
            extra.insert("rhs_upper".to_string(), rhs_u);
            vec_extra("delta_used", &gs.delta_used, &mut extra);
            SampleEval::Fail(witness(
                i,
                &draw,
                singleton(lv),
                singleton(rv),
                margin,
                Some(format!(
                    "{side}-endpoint first-order inequality violated ({:?} gradients)",
                    cfg.semantics
                )),
                extra,
            ))
        } else {
            SampleEval::Pass
        }
    });
    let fd = fd_uses.into_inner();
    if fd > 0 {
        verdict.notes.push(format!(
            "finite-difference gradient fallback on {fd} samples"
        ));
    }
    verdict
}

/// Audits the strongly LU-E-invex condition:
/// `<Psi(a, b), grad h(E(delta))>_gH LU<= h(E(zeta)) gh- h(E(delta))`.
pub fn check_sluei(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    set: &SetSpec,
    cfg: &AuditConfig,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    let engine = match GradientEngine::new(f, cfg.semantics, Some(e)) {
        Ok(eng) => eng,
        Err(err) => return Verdict::not_checkable(err.to_string()),
    };
    let fd_uses = AtomicU64::new(0);
    let mut verdict = run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let gs = match gradient_sample(e, psi, &engine, cfg, &draw) {
            Ok(Some(gs)) => gs,
            Ok(None) => return SampleEval::SkipNonsmooth,
            Err(err) => return SampleEval::EvalError(err.to_string()),
        };
        if gs.pair.used_finite_difference {
            fd_uses.fetch_add(1, AtomicOrdering::Relaxed);
        }
        let lhs = try_sample!(crate::ivf::gh_gradient_product(&gs.t.psi, &gs.pair));
        let hez = try_sample!(f.eval(&gs.t.e_zeta));
        let hed = try_sample!(f.eval(&gs.t.e_delta));
        let rhs = hez.gh_diff(&hed);
        let margin = lu_violation(&lhs, &rhs);
        if margin > cfg.tol {
            let mut extra = BTreeMap::new();
            vec_extra("delta_used", &gs.delta_used, &mut extra);
            SampleEval::Fail(witness(
                i,
                &draw,
                lhs,
                rhs,
                margin,
                Some(format!("{:?} gradients", cfg.semantics)),
                extra,
            ))
        } else {
            SampleEval::Pass
        }
    });
    let fd = fd_uses.into_inner();
    if fd > 0 {
        verdict.notes.push(format!(
            "finite-difference gradient fallback on {fd} samples"
        ));
    }
    verdict
}

const BISECT_ITERS: usize = 200;
const BISECT_TOL: f64 = 1e-12;

/// Coordinatewise inverse of a diagonal monotone map component by bracketed
/// bisection. Returns the preimage or a diagnostic.
fn invert_component(expr: &Expr, var: &str, target: f64, range: (f64, f64)) -> Result<f64, String> {
    let vars = vec![var.to_string()];
    let eval = |x: f64| -> Result<f64, String> {
        expr.eval(&Env::new(&vars, &[x])).map_err(|e| e.to_string())
    };
    let (mut lo, mut hi) = range;
    let mut flo = eval(lo)?;
    let mut fhi = eval(hi)?;
    // expand the bracket geometrically until the target is enclosed
    let mut pad = f64::max(1.0, hi - lo);
    for _ in 0..64 {
        if (flo - target) * (fhi - target) <= 0.0 {
            break;
        }
        lo -= pad;
        hi += pad;
        pad *= 2.0;
        flo = eval(lo)?;
        fhi = eval(hi)?;
    }
    if (flo - target) * (fhi - target) > 0.0 {
        return Err(format!(
            "could not bracket E^-1({target}) from [{}, {}]",
            range.0, range.1
        ));
    }
    let increasing = fhi >= flo;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let fmid = eval(mid)?;
        let go_right = if increasing {
            fmid < target
        } else {
            fmid > target
        };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = (eval(root)? - target).abs();
    if residual > BISECT_TOL * f64::max(1.0, target.abs()) {
        return Err(format!(
            "bisection residual {residual:e} exceeds {BISECT_TOL:e} at target {target}"
        ));
    }
    Ok(root)
}

/// Audits the two functional identities on `Psi` along the constructed
/// point `delta_bar` with `E(delta_bar) = alpha delta + E(delta) +
/// lambda Psi(a, b)`. Requires `E` to be coordinatewise and strictly
/// monotone on the box; otherwise the audit is not checkable.
pub fn check_condition_a(
    set: &SetSpec,
    e: &VectorMap,
    psi: &VectorMap,
    cfg: &AuditConfig,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, None) {
        return Verdict::not_checkable(msg);
    }
    let n = set.dim();
    // E must be diagonal: component i may only reference z_i
    for (j, component) in e.exprs().iter().enumerate() {
        let mut vars = std::collections::BTreeSet::new();
        component.free_vars(&mut vars);
        let own = format!("z{}", j + 1);
        if vars.iter().any(|v| *v != own) {
            return Verdict::not_checkable(format!(
                "E component {} is not coordinatewise; cannot invert",
                j + 1
            ));
        }
    }
    // strict monotonicity probe on each coordinate range
    let var_names: Vec<String> = crate::expr::point_vars(n);
    for (j, component) in e.exprs().iter().enumerate() {
        let (lo, hi) = set.region.bounds()[j];
        let mut prev: Option<f64> = None;
        let mut dir = 0i8;
        for k in 0..=64 {
            let x = lo + (hi - lo) * (k as f64) / 64.0;
            let v = match component.eval(&Env::new(&var_names[j..j + 1], &[x])) {
                Ok(v) => v,
                Err(err) => {
                    return Verdict::not_checkable(format!(
                        "E component {} failed to evaluate while probing monotonicity: {err}",
                        j + 1
                    ))
                }
            };
            if let Some(p) = prev {
                let step = if v > p {
                    1
                } else if v < p {
                    -1
                } else {
                    0
                };
                if step == 0 || (dir != 0 && step != dir) {
                    return Verdict::not_checkable(format!(
                        "E component {} is not strictly monotone on the box; inversion failed",
                        j + 1
                    ));
                }
                dir = step;
            }
            prev = Some(v);
        }
    }

    run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let t = try_sample!(transform_at(
            e,
            psi,
            &draw.zeta,
            &draw.delta,
            draw.alpha,
            draw.lambda
        ));
        let mut delta_bar = vec![0.0; n];
        for j in 0..n {
            let var = format!("z{}", j + 1);
            match invert_component(&e.exprs()[j], &var, t.w[j], set.region.bounds()[j]) {
                Ok(x) => delta_bar[j] = x,
                Err(msg) => return SampleEval::Abort(format!("inversion failed: {msg}")),
            }
        }
        let e_bar = try_sample!(e.eval(&delta_bar));
        let a_bar: Vec<f64> = delta_bar
            .iter()
            .zip(&e_bar)
            .map(|(d, ed)| draw.alpha * d + ed)
            .collect();
        let lhs1 = try_sample!(psi.eval_pair(&t.b, &a_bar));
        let lhs2 = try_sample!(psi.eval_pair(&t.a, &a_bar));
        for x in lhs1.iter().chain(&lhs2) {
            finite_or_error!(*x);
        }
        let mut worst = 0.0f64;
        let mut worst_vals = (0.0, 0.0, 1u8);
        for j in 0..n {
            let core = finite_or_error!(draw.alpha * delta_bar[j] + t.psi[j]);
            let rhs1 = -draw.lambda * core;
            let rhs2 = (1.0 - draw.lambda) * core;
            let d1 = (lhs1[j] - rhs1).abs();
            let d2 = (lhs2[j] - rhs2).abs();
            if d1 > worst {
                worst = d1;
                worst_vals = (lhs1[j], rhs1, 1);
            }
            if d2 > worst {
                worst = d2;
                worst_vals = (lhs2[j], rhs2, 2);
            }
        }
        if worst > cfg.tol {
            let (lv, rv, which) = worst_vals;
            let mut extra = BTreeMap::new();
            vec_extra("delta_bar", &delta_bar, &mut extra);
            SampleEval::Fail(witness(
                i,
                &draw,
                singleton(lv),
                singleton(rv),
                worst,
                Some(format!("Condition A identity {which} violated")),
                extra,
            ))
        } else {
            SampleEval::Pass
        }
    })
}

/// Audits whether the epigraph of `h` is a G-strongly-E-invex set with
/// respect to `Psi` and the interval map `E0`: for sampled epigraph members
/// `(zeta, I1)`, `(delta, I2)` the combined pair must again lie in the
/// epigraph, i.e. `h(w) LU<= lambda E0(I1) + (1 - lambda) E0(I2)`. The
/// compatibility condition `E0(h(z) + t) = h(E(z)) + t` is sampled on
/// `t in {0, 0.5, 1, 2}` and reported as a note; ontoness of `E0` is
/// assumed.
pub fn check_epigraph_gsei(
    f: &IVFn,
    e: &VectorMap,
    psi: &VectorMap,
    e0: &IntervalMapExpr,
    set: &SetSpec,
    cfg: &AuditConfig,
) -> Verdict {
    if let Some(msg) = check_dims(set, e, psi, Some(f)) {
        return Verdict::not_checkable(msg);
    }
    // side condition probe
    let mut side_checked = 0u64;
    let mut side_violations = 0u64;
    let mut first_violation: Option<String> = None;
    let probes = 256.min(cfg.samples);
    for k in 0..probes {
        let mut s = Stream::for_sample(cfg.seed ^ 0x51dec0de, k);
        let point = match set.draw_point(&mut s) {
            Ok(p) => p,
            Err(_) => break,
        };
        let (hz, hez) = match (f.eval(&point), e.eval(&point).map_err(IvfError::from)) {
            (Ok(a), Ok(img)) => match f.eval(&img) {
                Ok(b) => (a, b),
                Err(_) => continue,
            },
            _ => continue,
        };
        for t in [0.0, 0.5, 1.0, 2.0] {
            let shift = Interval::new(t, t).expect("finite");
            side_checked += 1;
            match e0.apply(hz + shift) {
                Ok(lhs) => {
                    let rhs = hez + shift;
                    if lhs.hausdorff(&rhs) > f64::max(cfg.tol, 1e-9) {
                        side_violations += 1;
                        if first_violation.is_none() {
                            first_violation =
                                Some(format!("at z = {point:?}, t = {t}: {lhs} vs {rhs}"));
                        }
                    }
                }
                Err(_) => {
                    side_violations += 1;
                }
            }
        }
    }

    let mut verdict = run_samples(cfg, |i| {
        let draw = match draw_standard(cfg, set, i) {
            Ok(d) => d,
            Err(reason) => return SampleEval::Abort(reason),
        };
        let mut draw = draw;
        let t = try_sample!(transform_at(
            e,
            psi,
            &draw.zeta,
            &draw.delta,
            draw.alpha,
            draw.lambda
        ));
        let h1 = try_sample!(f.eval(&draw.zeta));
        let h2 = try_sample!(f.eval(&draw.delta));
        // epigraph members: independent nonnegative endpoint offsets that
        // keep the interval valid
        let mut epi_member = |h: Interval| -> Interval {
            let v_off = draw.stream.in_range(0.0, 2.0);
            let u_off = draw.stream.in_range(0.0, f64::min(2.0, h.width() + v_off));
            Interval::new(h.lo() + u_off, h.hi() + v_off).expect("ordered")
        };
        let i1 = epi_member(h1);
        let i2 = epi_member(h2);
        let lhs = try_sample!(f.eval(&t.w));
        let e0_i1 = try_sample!(e0.apply(i1));
        let e0_i2 = try_sample!(e0.apply(i2));
        let rhs = e0_i1.scale(draw.lambda) + e0_i2.scale(1.0 - draw.lambda);
        let margin = lu_violation(&lhs, &rhs);
        if margin > cfg.tol {
            let mut extra = BTreeMap::new();
            extra.insert("i1_lo".to_string(), i1.lo());
            extra.insert("i1_hi".to_string(), i1.hi());
            extra.insert("i2_lo".to_string(), i2.lo());
            extra.insert("i2_hi".to_string(), i2.hi());
            SampleEval::Fail(witness(
                i,
                &draw,
                lhs,
                rhs,
                margin,
                Some("combined epigraph pair escapes epi(h)".to_string()),
                extra,
            ))
        } else {
            SampleEval::Pass
        }
    });
    verdict
        .notes
        .push("ontoness of E0 is assumed; not checkable by sampling".to_string());
    if side_violations == 0 {
        verdict.notes.push(format!(
            "side condition E0(h(z) + t) = h(E(z)) + t held on all {side_checked} probes"
        ));
    } else {
        verdict.notes.push(format!(
            "side condition E0(h(z) + t) = h(E(z)) + t violated on {side_violations}/{side_checked} probes (first {})",
            first_violation.unwrap_or_default()
        ));
    }
    verdict
}

/// Clone of `cfg` with alpha pinned to zero; turns the strongly-E-invex
/// quantifier into the plain E-invex one.
pub fn alpha_zero(cfg: &AuditConfig) -> AuditConfig {
    AuditConfig {
        alpha: GridSpec::fixed(0.0),
        ..cfg.clone()
    }
}
