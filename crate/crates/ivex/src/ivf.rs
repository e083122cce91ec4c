//! Interval-valued functions on `R^n`: evaluation, gH-gradients, the
//! gH-derivative consistency check, and the constructors used by the
//! closure theorems (nonnegative combinations, suprema, outer composition
//! with an interval map).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{run_samples, AuditConfig, SampleEval, Verdict, Witness};
use crate::expr::{diff, Derivative, Env, Expr, ExprError, IntervalMapExpr, MapError, VectorMap};
use crate::interval::{Interval, IntervalError};
use crate::rng::Stream;

const LOAD_CHECK_SAMPLES: usize = 1024;
const LOAD_CHECK_SEED: u64 = 0x5eed;
/// Distance from a kink below which symbolic gradients are not trusted.
pub const KINK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IvfError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("endpoint order violated at {point:?}: hL = {lo} > hU = {hi}")]
    EndpointOrderViolation { point: Vec<f64>, lo: f64, hi: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty function family")]
    EmptyFamily,
    #[error("negative combination coefficient {0}")]
    NegativeCoefficient(f64),
    #[error("composite gradient semantics require the map E")]
    MissingEMap,
    #[error("invalid domain box: {0}")]
    BadDomain(String),
    #[error("operation requires a univariate function")]
    UnivariateOnly,
}

/// Axis-aligned closed box, the sampling region for a (possibly truncated)
/// domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    bounds: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<BoxDomain, IvfError> {
        if bounds.is_empty() {
            return Err(IvfError::BadDomain("box has no coordinates".to_string()));
        }
        for &(lo, hi) in &bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(IvfError::BadDomain(format!(
                    "non-finite bound [{lo}, {hi}]"
                )));
            }
            if lo > hi {
                return Err(IvfError::BadDomain(format!("bound [{lo}, {hi}] inverted")));
            }
        }
        Ok(BoxDomain { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.bounds.len()
            && point
                .iter()
                .zip(&self.bounds)
                .all(|(x, &(lo, hi))| *x >= lo && *x <= hi)
    }

    pub fn sample(&self, stream: &mut Stream) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| stream.in_range(lo, hi))
            .collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise intersection; errors when empty.
    pub fn intersect(&self, other: &BoxDomain) -> Result<BoxDomain, IvfError> {
        if self.dim() != other.dim() {
            return Err(IvfError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let bounds = self
            .bounds
            .iter()
            .zip(&other.bounds)
            .map(|(&(a, b), &(c, d))| (a.max(c), b.min(d)))
            .collect::<Vec<_>>();
        BoxDomain::new(bounds)
            .map_err(|_| IvfError::BadDomain("box intersection is empty".to_string()))
    }
}

/// Which gradient an audit reads when the literature writes the gradient of
/// an interval function at a transformed point: the gradient of the
/// endpoint functions themselves (`Direct`) or of their composition with
/// `E` (`Composite`, the chain-rule reading).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradSemantics {
    Direct,
    Composite,
}

/// An interval-valued function given by two endpoint expressions over
/// `z1..zn`. Construction samples the domain box and rejects any function
/// whose endpoints cross.
#[derive(Debug, Clone)]
pub struct IVFn {
    lo_expr: Expr,
    hi_expr: Expr,
    domain: BoxDomain,
    var_names: Vec<String>,
}

impl IVFn {
    pub fn new(lo_expr: Expr, hi_expr: Expr, domain: BoxDomain) -> Result<IVFn, IvfError> {
        let var_names = crate::expr::maps::point_vars(domain.dim());
        let f = IVFn {
            lo_expr,
            hi_expr,
            domain,
            var_names,
        };
        let mut stream = Stream::for_sample(LOAD_CHECK_SEED, 0);
        for _ in 0..LOAD_CHECK_SAMPLES {
            let p = f.domain.sample(&mut stream);
            f.eval(&p)?;
        }
        Ok(f)
    }

    /// Degenerate interval function `[g, g]` wrapping a real-valued
    /// expression.
    pub fn degenerate(expr: Expr, domain: BoxDomain) -> Result<IVFn, IvfError> {
        IVFn::new(expr.clone(), expr, domain)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn lo_expr(&self) -> &Expr {
        &self.lo_expr
    }

    pub fn hi_expr(&self) -> &Expr {
        &self.hi_expr
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// `[hL(point), hU(point)]`. The point need not lie in the sampling
    /// box; the box only truncates unbounded domains for sampling.
    pub fn eval(&self, point: &[f64]) -> Result<Interval, IvfError> {
        if point.len() != self.dim() {
            return Err(IvfError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let env = Env::new(&self.var_names, point);
        let lo = self.lo_expr.eval(&env)?;
        let hi = self.hi_expr.eval(&env)?;
        Interval::new(lo, hi).map_err(|e| match e {
            IntervalError::OrderViolation { .. } => IvfError::EndpointOrderViolation {
                point: point.to_vec(),
                lo,
                hi,
            },
            other => IvfError::Interval(other),
        })
    }

    /// True when the point sits within `KINK_TOL` of a nonsmooth feature of
    /// either endpoint expression.
    fn near_kink(&self, point: &[f64]) -> Result<bool, IvfError> {
        let env = Env::new(&self.var_names, point);
        Ok(self.lo_expr.near_kink(&env, KINK_TOL)? || self.hi_expr.near_kink(&env, KINK_TOL)?)
    }
}

/// Endpoint gradients of an interval function at one point.
#[derive(Debug, Clone, Serialize)]
pub struct GradientPair {
    /// Gradient of the lower endpoint (under the engine's semantics).
    pub lo: Vec<f64>,
    /// Gradient of the upper endpoint.
    pub hi: Vec<f64>,
    /// Per-coordinate flag: false when the symbolic derivative was not
    /// trusted at this point and finite differences were used instead.
    pub smooth: Vec<bool>,
    /// True when any coordinate fell back to finite differences.
    pub used_finite_difference: bool,
}

/// Closed form for the gH-product of a vector with an endpoint gradient
/// pair: `[v . gL, v . gU]`, swapped when out of order. The dot products
/// are accumulated as the positive-index sum minus the negative-index sum
/// so the result is bit-identical to `interval::gh_product` on the
/// per-coordinate interval tuple; that dual-path identity is a test oracle.
pub fn gh_gradient_product(v: &[f64], g: &GradientPair) -> Result<Interval, IvfError> {
    if v.len() != g.lo.len() {
        return Err(IvfError::Interval(IntervalError::LengthMismatch {
            vector: v.len(),
            intervals: g.lo.len(),
        }));
    }
    let (mut plus_lo, mut plus_hi) = (0.0f64, 0.0f64);
    let (mut minus_lo, mut minus_hi) = (0.0f64, 0.0f64);
    for (i, &vi) in v.iter().enumerate() {
        if vi >= 0.0 {
            plus_lo += vi * g.lo[i];
            plus_hi += vi * g.hi[i];
        } else {
            minus_lo += -vi * g.lo[i];
            minus_hi += -vi * g.hi[i];
        }
    }
    let p = plus_lo - minus_lo;
    let q = plus_hi - minus_hi;
    Ok(Interval::new(p.min(q), p.max(q))?)
}

/// Precompiled symbolic derivatives for one function under one gradient
/// semantics; auditors build it once and evaluate it per sample.
pub struct GradientEngine<'a> {
    f: &'a IVFn,
    semantics: GradSemantics,
    e_map: Option<&'a VectorMap>,
    d_lo: Vec<Derivative>,
    d_hi: Vec<Derivative>,
    /// Jacobian entries of E: `d_e[j][i] = dE_j/dz_i`.
    d_e: Vec<Vec<Derivative>>,
    h_nonsmooth: bool,
    e_nonsmooth: bool,
}

impl<'a> GradientEngine<'a> {
    pub fn new(
        f: &'a IVFn,
        semantics: GradSemantics,
        e_map: Option<&'a VectorMap>,
    ) -> Result<GradientEngine<'a>, IvfError> {
        if semantics == GradSemantics::Composite && e_map.is_none() {
            return Err(IvfError::MissingEMap);
        }
        let vars = f.var_names.clone();
        let d_lo: Vec<Derivative> = vars.iter().map(|v| diff(&f.lo_expr, v)).collect();
        let d_hi: Vec<Derivative> = vars.iter().map(|v| diff(&f.hi_expr, v)).collect();
        let d_e: Vec<Vec<Derivative>> = match (semantics, e_map) {
            (GradSemantics::Composite, Some(e)) => e
                .exprs()
                .iter()
                .map(|component| vars.iter().map(|v| diff(component, v)).collect())
                .collect(),
            _ => Vec::new(),
        };
        let h_nonsmooth = d_lo.iter().chain(&d_hi).any(|d| !d.smooth);
        let e_nonsmooth = d_e.iter().flatten().any(|d| !d.smooth);
        Ok(GradientEngine {
            f,
            semantics,
            e_map,
            d_lo,
            d_hi,
            d_e,
            h_nonsmooth,
            e_nonsmooth,
        })
    }

    /// True when symbolic derivatives cannot be trusted at this point.
    pub fn near_kink(&self, point: &[f64]) -> Result<bool, IvfError> {
        match self.semantics {
            GradSemantics::Direct => Ok(self.h_nonsmooth && self.f.near_kink(point)?),
            GradSemantics::Composite => {
                let e = self.e_map.expect("checked in new");
                let image = e.eval(point)?;
                if self.h_nonsmooth && self.f.near_kink(&image)? {
                    return Ok(true);
                }
                if self.e_nonsmooth {
                    let vars = &self.f.var_names;
                    let env = Env::new(vars, point);
                    for component in e.exprs() {
                        if component.near_kink(&env, KINK_TOL)? {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
        }
    }

    pub fn pair_at(&self, point: &[f64]) -> Result<GradientPair, IvfError> {
        if point.len() != self.f.dim() {
            return Err(IvfError::DimensionMismatch {
                expected: self.f.dim(),
                got: point.len(),
            });
        }
        let fd = self.near_kink(point)?;
        if fd {
            return self.pair_by_finite_difference(point);
        }
        let n = self.f.dim();
        let vars = &self.f.var_names;
        match self.semantics {
            GradSemantics::Direct => {
                let env = Env::new(vars, point);
                let lo = self
                    .d_lo
                    .iter()
                    .map(|d| d.expr.eval(&env))
                    .collect::<Result<Vec<_>, _>>()?;
                let hi = self
                    .d_hi
                    .iter()
                    .map(|d| d.expr.eval(&env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GradientPair {
                    lo,
                    hi,
                    smooth: vec![true; n],
                    used_finite_difference: false,
                })
            }
            GradSemantics::Composite => {
                let e = self.e_map.expect("checked in new");
                let image = e.eval(point)?;
                let env_point = Env::new(vars, point);
                let env_image = Env::new(vars, &image);
                let grad_lo_at_image = self
                    .d_lo
                    .iter()
                    .map(|d| d.expr.eval(&env_image))
                    .collect::<Result<Vec<_>, _>>()?;
                let grad_hi_at_image = self
                    .d_hi
                    .iter()
                    .map(|d| d.expr.eval(&env_image))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut lo = vec![0.0; n];
                let mut hi = vec![0.0; n];
                for (j, row) in self.d_e.iter().enumerate() {
                    for i in 0..n {
                        let jac = row[i].expr.eval(&env_point)?;
                        lo[i] += grad_lo_at_image[j] * jac;
                        hi[i] += grad_hi_at_image[j] * jac;
                    }
                }
                Ok(GradientPair {
                    lo,
                    hi,
                    smooth: vec![true; n],
                    used_finite_difference: false,
                })
            }
        }
    }

    fn scalar(&self, endpoint_hi: bool, point: &[f64]) -> Result<f64, IvfError> {
        let expr = if endpoint_hi {
            &self.f.hi_expr
        } else {
            &self.f.lo_expr
        };
        let vars = &self.f.var_names;
        match self.semantics {
            GradSemantics::Direct => {
                let env = Env::new(vars, point);
                Ok(expr.eval(&env)?)
            }
            GradSemantics::Composite => {
                let image = self.e_map.expect("checked in new").eval(point)?;
                let env = Env::new(vars, &image);
                Ok(expr.eval(&env)?)
            }
        }
    }

    fn pair_by_finite_difference(&self, point: &[f64]) -> Result<GradientPair, IvfError> {
        let n = self.f.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let h = fd_step(point[i]);
            let mut up = point.to_vec();
            let mut down = point.to_vec();
            up[i] += h;
            down[i] -= h;
            lo[i] = (self.scalar(false, &up)? - self.scalar(false, &down)?) / (2.0 * h);
            hi[i] = (self.scalar(true, &up)? - self.scalar(true, &down)?) / (2.0 * h);
        }
        Ok(GradientPair {
            lo,
            hi,
            smooth: vec![false; n],
            used_finite_difference: true,
        })
    }
}

/// Central finite-difference step.
pub fn fd_step(x: f64) -> f64 {
    1e-6 * f64::max(1.0, x.abs())
}

/// Convenience wrapper of [`GradientEngine`] for one-off gradients.
pub fn gradient_pair(
    f: &IVFn,
    point: &[f64],
    semantics: GradSemantics,
    e_map: Option<&VectorMap>,
) -> Result<GradientPair, IvfError> {
    GradientEngine::new(f, semantics, e_map)?.pair_at(point)
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivStep {
    pub t: f64,
    pub quotient_forward: Interval,
    pub quotient_backward: Interval,
}

/// Report of the gH-derivative consistency check at one point.
#[derive(Debug, Clone, Serialize)]
pub struct DerivCheckReport {
    pub steps: Vec<DerivStep>,
    /// Last forward quotient when the quotient sequence went Cauchy.
    pub gh_limit: Option<Interval>,
    /// Closed-form value from the endpoint derivatives.
    pub lemma_value: Interval,
    /// Endpoint difference quotients agree from both sides, so the function
    /// is (numerically) weakly differentiable here.
    pub endpoint_onesided_agree: bool,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_rate: Option<f64>,
    pub limit_matches_lemma: Option<bool>,
}

const DERIV_CAUCHY_TOL: f64 = 1e-4;

/// Compares the shrinking-step gH-difference quotients of a univariate
/// function against the closed-form endpoint-derivative value. Convergence
/// additionally requires the one-sided endpoint quotients to agree, since
/// the closed form assumes weak differentiability.
pub fn gh_derivative_check(
    f: &IVFn,
    zeta0: f64,
    steps: &[f64],
) -> Result<DerivCheckReport, IvfError> {
    if f.dim() != 1 {
        return Err(IvfError::UnivariateOnly);
    }
    let base = f.eval(&[zeta0])?;
    let mut recs = Vec::with_capacity(steps.len());
    for &t in steps {
        let t = t.abs();
        if t == 0.0 {
            return Err(IvfError::BadDomain("zero step in derivative check".into()));
        }
        let fwd = f.eval(&[zeta0 + t])?.gh_diff(&base).scale(1.0 / t);
        let bwd = f.eval(&[zeta0 - t])?.gh_diff(&base).scale(-1.0 / t);
        recs.push(DerivStep {
            t,
            quotient_forward: fwd,
            quotient_backward: bwd,
        });
    }

    let last = recs.last().expect("at least one step");
    let mut cauchy = true;
    if recs.len() >= 2 {
        let prev = &recs[recs.len() - 2];
        cauchy = last
            .quotient_forward
            .hausdorff(&prev.quotient_forward)
            .max(last.quotient_backward.hausdorff(&prev.quotient_backward))
            < DERIV_CAUCHY_TOL;
    }
    let two_sided = last.quotient_forward.hausdorff(&last.quotient_backward) < DERIV_CAUCHY_TOL;

    // weak differentiability: endpoint quotients must match across sides
    let hl = |x: f64| -> Result<f64, IvfError> { Ok(f.eval(&[x])?.lo()) };
    let hu = |x: f64| -> Result<f64, IvfError> { Ok(f.eval(&[x])?.hi()) };
    let t = last.t;
    let ql_f = (hl(zeta0 + t)? - base.lo()) / t;
    let ql_b = (base.lo() - hl(zeta0 - t)?) / t;
    let qu_f = (hu(zeta0 + t)? - base.hi()) / t;
    let qu_b = (base.hi() - hu(zeta0 - t)?) / t;
    let endpoint_onesided_agree =
        (ql_f - ql_b).abs() < DERIV_CAUCHY_TOL && (qu_f - qu_b).abs() < DERIV_CAUCHY_TOL;

    let engine = GradientEngine::new(f, GradSemantics::Direct, None)?;
    let g = engine.pair_at(&[zeta0])?;
    let lemma_value = gh_gradient_product(&[1.0], &g)?;

    let converged = cauchy && two_sided && endpoint_onesided_agree;
    let gh_limit = if cauchy && two_sided {
        Some(last.quotient_forward)
    } else {
        None
    };
    let limit_matches_lemma =
        gh_limit.map(|lim| lim.hausdorff(&lemma_value) < 10.0 * DERIV_CAUCHY_TOL);

    // observed order from successive distances to the finest quotient
    let mut observed_rate = None;
    if converged && recs.len() >= 3 {
        let lim = last.quotient_forward;
        let mut rates = Vec::new();
        for pair in recs.windows(2) {
            let d0 = pair[0].quotient_forward.hausdorff(&lim);
            let d1 = pair[1].quotient_forward.hausdorff(&lim);
            if d0 > 0.0 && d1 > 0.0 && pair[0].t > pair[1].t {
                rates.push((d0 / d1).ln() / (pair[0].t / pair[1].t).ln());
            }
        }
        if !rates.is_empty() {
            rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            observed_rate = Some(rates[rates.len() / 2]);
        }
    }

    Ok(DerivCheckReport {
        steps: recs,
        gh_limit,
        lemma_value,
        endpoint_onesided_agree,
        converged,
        observed_rate,
        limit_matches_lemma,
    })
}

/// Endpointwise nonnegative combination `sum_j nu_j f_j`.
pub fn nonneg_combination(fs: &[&IVFn], coeffs: &[f64]) -> Result<IVFn, IvfError> {
    if fs.is_empty() {
        return Err(IvfError::EmptyFamily);
    }
    if fs.len() != coeffs.len() {
        return Err(IvfError::DimensionMismatch {
            expected: fs.len(),
            got: coeffs.len(),
        });
    }
    if let Some(&bad) = coeffs.iter().find(|c| **c < 0.0) {
        return Err(IvfError::NegativeCoefficient(bad));
    }
    let dim = fs[0].dim();
    let mut domain = fs[0].domain.clone();
    for f in &fs[1..] {
        if f.dim() != dim {
            return Err(IvfError::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        domain = domain.intersect(&f.domain)?;
    }
    let term = |e: &Expr, c: f64| {
        Expr::Bin(
            crate::expr::BinOp::Mul,
            Box::new(Expr::Num(c)),
            Box::new(e.clone()),
        )
    };
    let mut lo = term(&fs[0].lo_expr, coeffs[0]);
    let mut hi = term(&fs[0].hi_expr, coeffs[0]);
    for (f, &c) in fs.iter().zip(coeffs).skip(1) {
        lo = Expr::Bin(
            crate::expr::BinOp::Add,
            Box::new(lo),
            Box::new(term(&f.lo_expr, c)),
        );
        hi = Expr::Bin(
            crate::expr::BinOp::Add,
            Box::new(hi),
            Box::new(term(&f.hi_expr, c)),
        );
    }
    IVFn::new(lo, hi, domain)
}

/// Pointwise LU supremum of a finite family: componentwise max of the
/// endpoint functions.
pub fn sup_family(fs: &[&IVFn]) -> Result<IVFn, IvfError> {
    if fs.is_empty() {
        return Err(IvfError::EmptyFamily);
    }
    let dim = fs[0].dim();
    let mut domain = fs[0].domain.clone();
    let mut lo = fs[0].lo_expr.clone();
    let mut hi = fs[0].hi_expr.clone();
    for f in &fs[1..] {
        if f.dim() != dim {
            return Err(IvfError::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        domain = domain.intersect(&f.domain)?;
        lo = Expr::Call(crate::expr::Func::Max, vec![lo, f.lo_expr.clone()]);
        hi = Expr::Call(crate::expr::Func::Max, vec![hi, f.hi_expr.clone()]);
    }
    IVFn::new(lo, hi, domain)
}

/// Outer composition `phi(h(.))` of an interval map with an interval
/// function. The result inherits `f`'s domain; the load-time check rejects
/// maps that invert the endpoint order anywhere on it.
pub fn compose_outer(phi: &IntervalMapExpr, f: &IVFn) -> Result<IVFn, IvfError> {
    let mut map = std::collections::BTreeMap::new();
    map.insert("lo".to_string(), f.lo_expr.clone());
    map.insert("hi".to_string(), f.hi_expr.clone());
    let lo = phi.lo.substitute(&map);
    let hi = phi.hi.substitute(&map);
    IVFn::new(lo, hi, f.domain.clone())
}

fn interval_witness(
    index: u64,
    first: Interval,
    second: Interval,
    k: f64,
    lhs: Interval,
    rhs: Interval,
    margin: f64,
    note: &str,
) -> Witness {
    Witness {
        sample_index: index,
        zeta: vec![first.lo(), first.hi()],
        delta: vec![second.lo(), second.hi()],
        alpha: k,
        lambda: 0.0,
        lhs,
        rhs,
        margin,
        note: Some(note.to_string()),
        extra: std::collections::BTreeMap::new(),
    }
}

/// Samples LU-ordered interval pairs and reports the first pair whose
/// images under `phi` break the order.
pub fn is_lu_nondecreasing(phi: &IntervalMapExpr, cfg: &AuditConfig) -> Verdict {
    run_samples(cfg, |i| {
        let mut s = Stream::for_sample(cfg.seed, i);
        let a = s.in_range(-8.0, 8.0);
        let w = s.in_range(0.0, 8.0);
        let first = Interval::new(a, a + w).expect("ordered");
        let d_hi = s.in_range(0.0, 4.0);
        let d_lo = s.in_range(0.0, f64::min(4.0, w + d_hi));
        let second = Interval::new(a + d_lo, a + w + d_hi).expect("ordered");
        debug_assert!(first.lu_leq(&second));
        let out1 = match phi.apply(first) {
            Ok(v) => v,
            Err(e) => return SampleEval::EvalError(e.to_string()),
        };
        let out2 = match phi.apply(second) {
            Ok(v) => v,
            Err(e) => return SampleEval::EvalError(e.to_string()),
        };
        let margin = f64::max(out1.lo() - out2.lo(), out1.hi() - out2.hi());
        if margin > cfg.tol {
            SampleEval::Fail(interval_witness(
                i,
                first,
                second,
                0.0,
                out1,
                out2,
                margin,
                "phi(I1) is not LU-below phi(I2); zeta/delta hold I1/I2 endpoints",
            ))
        } else {
            SampleEval::Pass
        }
    })
}

/// Samples intervals and positive scales, comparing `phi(k I)` against
/// `k phi(I)`.
pub fn is_positively_homogeneous(phi: &IntervalMapExpr, cfg: &AuditConfig) -> Verdict {
    run_samples(cfg, |i| {
        let mut s = Stream::for_sample(cfg.seed, i);
        let a = s.in_range(-8.0, 8.0);
        let w = s.in_range(0.0, 8.0);
        let iv = Interval::new(a, a + w).expect("ordered");
        let k = s.in_range(1e-3, 4.0);
        let lhs = match phi.apply(iv.scale(k)) {
            Ok(v) => v,
            Err(e) => return SampleEval::EvalError(e.to_string()),
        };
        let rhs = match phi.apply(iv) {
            Ok(v) => v.scale(k),
            Err(e) => return SampleEval::EvalError(e.to_string()),
        };
        let scale = 1.0f64
            .max(lhs.lo().abs())
            .max(lhs.hi().abs())
            .max(rhs.lo().abs())
            .max(rhs.hi().abs());
        let margin = lhs.hausdorff(&rhs) - cfg.tol * scale;
        if margin > 0.0 {
            SampleEval::Fail(interval_witness(
                i,
                iv,
                iv.scale(k),
                k,
                lhs,
                rhs,
                margin,
                "phi(k I) != k phi(I); alpha holds the scale k",
            ))
        } else {
            SampleEval::Pass
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn boxed(lo: f64, hi: f64) -> BoxDomain {
        BoxDomain::new(vec![(lo, hi)]).unwrap()
    }

    fn ivf1(lo: &str, hi: &str, domain: BoxDomain) -> IVFn {
        IVFn::new(
            parse(lo, &["z1"]).unwrap(),
            parse(hi, &["z1"]).unwrap(),
            domain,
        )
        .unwrap()
    }

    fn piecewise_31() -> IVFn {
        ivf1(
            "if(z1 > 0, 0, z1)",
            "if(z1 > 0, 1, z1 + 1)",
            boxed(-5.0, 5.0),
        )
    }

    #[test]
    fn eval_paper_fixtures() {
        let h = piecewise_31();
        assert_eq!(h.eval(&[0.5]).unwrap(), Interval::new(0.0, 1.0).unwrap());

        let h32 = ivf1("z1", "z1 + 1", boxed(-5.0, 5.0));
        assert_eq!(
            h32.eval(&[-0.25]).unwrap(),
            Interval::new(-0.25, 0.75).unwrap()
        );
        assert_eq!(h32.eval(&[0.0]).unwrap(), Interval::new(0.0, 1.0).unwrap());
    }

    #[test]
    fn load_time_check_rejects_crossed_endpoints() {
        let bad = IVFn::new(
            parse("z1", &["z1"]).unwrap(),
            parse("-z1", &["z1"]).unwrap(),
            boxed(-1.0, 1.0),
        );
        assert!(matches!(bad, Err(IvfError::EndpointOrderViolation { .. })));
    }

    #[test]
    fn gradients_direct_and_composite() {
        // objective endpoints of the worked programming example
        let h = ivf1("4*z1 - 8*ln(z1)", "8*z1 - 16*ln(z1)", boxed(0.5, 25.0));
        let e = VectorMap::point_map(vec![parse("exp(z1)", &["z1"]).unwrap()], 1).unwrap();
        let at = [2f64.ln()];
        let g = gradient_pair(&h, &at, GradSemantics::Composite, Some(&e)).unwrap();
        assert!(g.lo[0].abs() < 1e-12);
        assert!(g.hi[0].abs() < 1e-12);
        assert!(!g.used_finite_difference);

        // one-sided calculus away from the abs kink
        let habs = ivf1("-abs(z1)", "abs(z1)", boxed(-5.0, 5.0));
        let g = gradient_pair(&habs, &[-1.0], GradSemantics::Direct, None).unwrap();
        assert_eq!(g.lo[0], 1.0);
        assert_eq!(g.hi[0], -1.0);

        // chain rule through a constant map kills the gradient
        let cst = VectorMap::point_map(vec![parse("-1", &[]).unwrap()], 1).unwrap();
        let g = gradient_pair(&habs, &[3.0], GradSemantics::Composite, Some(&cst)).unwrap();
        assert_eq!(g.lo[0], 0.0);
        assert_eq!(g.hi[0], 0.0);

        assert!(matches!(
            gradient_pair(&habs, &[0.0], GradSemantics::Composite, None),
            Err(IvfError::MissingEMap)
        ));
    }

    #[test]
    fn finite_difference_fallback_at_kinks() {
        let habs = ivf1("-abs(z1)", "abs(z1)", boxed(-5.0, 5.0));
        let g = gradient_pair(&habs, &[0.0], GradSemantics::Direct, None).unwrap();
        assert!(g.used_finite_difference);
        assert!(!g.smooth[0]);
        // central difference at the kink averages the one-sided slopes
        assert!(g.lo[0].abs() < 1e-9);
        assert!(g.hi[0].abs() < 1e-9);
    }

    #[test]
    fn gh_gradient_product_cases() {
        let g = GradientPair {
            lo: vec![1.0, 1.0],
            hi: vec![2.0, 2.0],
            smooth: vec![true, true],
            used_finite_difference: false,
        };
        assert_eq!(
            gh_gradient_product(&[1.0, 1.0], &g).unwrap(),
            Interval::new(2.0, 4.0).unwrap()
        );

        let g = GradientPair {
            lo: vec![1.0],
            hi: vec![-1.0],
            smooth: vec![true],
            used_finite_difference: false,
        };
        assert_eq!(
            gh_gradient_product(&[3.0], &g).unwrap(),
            Interval::new(-3.0, 3.0).unwrap()
        );

        let zero = GradientPair {
            lo: vec![5.0, -2.0],
            hi: vec![7.0, 4.0],
            smooth: vec![true, true],
            used_finite_difference: false,
        };
        assert_eq!(
            gh_gradient_product(&[0.0, 0.0], &zero).unwrap(),
            Interval::ZERO
        );
    }

    // Dual-path oracle: the closed form equals the gH-product of the
    // per-coordinate gradient intervals whenever those are valid intervals.
    proptest! {
        #[test]
        fn gradient_product_matches_gh_product(
            pairs in proptest::collection::vec((-50.0f64..50.0, 0.0f64..50.0), 1..6),
            vraw in proptest::collection::vec(-20.0f64..20.0, 6),
        ) {
            let n = pairs.len();
            let v = &vraw[..n];
            let lo: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
            let hi: Vec<f64> = pairs.iter().map(|(a, w)| a + w).collect();
            let g = GradientPair { lo: lo.clone(), hi: hi.clone(), smooth: vec![true; n], used_finite_difference: false };
            let tuple: Vec<Interval> = lo.iter().zip(&hi).map(|(&a, &b)| Interval::new(a, b).unwrap()).collect();
            let via_lemma = gh_gradient_product(v, &g).unwrap();
            let via_product = crate::interval::gh_product(v, &tuple).unwrap();
            prop_assert_eq!(via_lemma, via_product);
        }
    }

    #[test]
    fn derivative_check_converges_on_smooth_function() {
        let h = ivf1("4*z1 - 8*ln(z1)", "8*z1 - 16*ln(z1)", boxed(0.5, 25.0));
        let steps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let rep = gh_derivative_check(&h, 4.0, &steps).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.lemma_value, Interval::new(2.0, 4.0).unwrap());
        assert!(rep.gh_limit.unwrap().hausdorff(&rep.lemma_value) < 1e-3);
        assert_eq!(rep.limit_matches_lemma, Some(true));
    }

    #[test]
    fn derivative_check_affine() {
        let h = ivf1("z1", "z1 + 1", boxed(-5.0, 5.0));
        let rep = gh_derivative_check(&h, 0.3, &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.lemma_value, Interval::new(1.0, 1.0).unwrap());
    }

    #[test]
    fn derivative_check_flags_onesided_mismatch() {
        let h = ivf1("-abs(z1)", "abs(z1)", boxed(-5.0, 5.0));
        let rep = gh_derivative_check(&h, 0.0, &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!(!rep.endpoint_onesided_agree);
        assert!(!rep.converged);
    }

    #[test]
    fn combinations_and_suprema() {
        let f1 = ivf1("z1", "z1 + 1", boxed(-5.0, 5.0));
        let f2 = ivf1("0", "1", boxed(-5.0, 5.0));
        let combo = nonneg_combination(&[&f1, &f2], &[1.0, 2.0]).unwrap();
        assert_eq!(
            combo.eval(&[0.25]).unwrap(),
            Interval::new(0.25, 3.25).unwrap()
        );

        assert!(matches!(
            nonneg_combination(&[&f1], &[-0.5]),
            Err(IvfError::NegativeCoefficient(_))
        ));
        assert!(matches!(
            nonneg_combination(&[], &[]),
            Err(IvfError::EmptyFamily)
        ));

        let zero = nonneg_combination(&[&f1], &[0.0]).unwrap();
        assert_eq!(zero.eval(&[3.0]).unwrap(), Interval::ZERO);

        let single = nonneg_combination(&[&f1], &[1.0]).unwrap();
        assert_eq!(single.eval(&[0.5]).unwrap(), f1.eval(&[0.5]).unwrap());

        let sup = sup_family(&[&f1, &f2]).unwrap();
        assert_eq!(sup.eval(&[-2.0]).unwrap(), Interval::new(0.0, 1.0).unwrap());
        assert_eq!(sup.eval(&[2.0]).unwrap(), Interval::new(2.0, 3.0).unwrap());
        assert!(matches!(sup_family(&[]), Err(IvfError::EmptyFamily)));

        let sup1 = sup_family(&[&f1]).unwrap();
        assert_eq!(sup1.eval(&[0.1]).unwrap(), f1.eval(&[0.1]).unwrap());
    }

    #[test]
    fn sup_family_is_least_upper_bound_on_samples() {
        let f1 = ivf1("z1", "z1 + 1", boxed(-5.0, 5.0));
        let f2 = ivf1("-z1", "1 - z1", boxed(-5.0, 5.0));
        let sup = sup_family(&[&f1, &f2]).unwrap();
        let mut s = Stream::for_sample(7, 0);
        for _ in 0..500 {
            let p = [s.in_range(-5.0, 5.0)];
            let v1 = f1.eval(&p).unwrap();
            let v2 = f2.eval(&p).unwrap();
            let vs = sup.eval(&p).unwrap();
            assert!(v1.lu_leq(&vs) && v2.lu_leq(&vs));
            // anything above both members is above the sup
            let ub =
                Interval::new(v1.lo().max(v2.lo()) + 0.01, v1.hi().max(v2.hi()) + 0.01).unwrap();
            assert!(vs.lu_leq(&ub));
        }
    }

    #[test]
    fn outer_composition_and_predicates() {
        let f = ivf1("z1", "z1 + 1", boxed(1.0, 2.0));
        let double = IntervalMapExpr {
            lo: parse("2 * lo", &["lo", "hi"]).unwrap(),
            hi: parse("2 * hi", &["lo", "hi"]).unwrap(),
        };
        let g = compose_outer(&double, &f).unwrap();
        assert_eq!(g.eval(&[1.0]).unwrap(), Interval::new(2.0, 4.0).unwrap());

        let idm = IntervalMapExpr::identity();
        let same = compose_outer(&idm, &f).unwrap();
        assert_eq!(same.eval(&[1.5]).unwrap(), f.eval(&[1.5]).unwrap());

        let swap = IntervalMapExpr {
            lo: parse("hi", &["lo", "hi"]).unwrap(),
            hi: parse("lo", &["lo", "hi"]).unwrap(),
        };
        assert!(matches!(
            compose_outer(&swap, &f),
            Err(IvfError::EndpointOrderViolation { .. })
        ));

        let cfg = AuditConfig {
            samples: 2000,
            ..AuditConfig::default()
        };
        assert!(is_lu_nondecreasing(&double, &cfg).holds());
        assert!(is_positively_homogeneous(&double, &cfg).holds());
        assert!(is_lu_nondecreasing(&idm, &cfg).holds());

        // phi(O) = -O reverses the order; phi(O) = O + 1 is not homogeneous
        let neg = IntervalMapExpr {
            lo: parse("-hi", &["lo", "hi"]).unwrap(),
            hi: parse("-lo", &["lo", "hi"]).unwrap(),
        };
        let v = is_lu_nondecreasing(&neg, &cfg);
        assert!(v.fails());
        let shift = IntervalMapExpr {
            lo: parse("lo + 1", &["lo", "hi"]).unwrap(),
            hi: parse("hi + 1", &["lo", "hi"]).unwrap(),
        };
        assert!(is_positively_homogeneous(&shift, &cfg).fails());
    }

    #[test]
    fn composite_gradients_use_the_full_jacobian() {
        // two coordinates, diagonal map: h(u) = [u1 u2, u1 u2 + 1] with
        // E = (exp(z1), z2), so grad (hL after E) = (z2 e^z1, e^z1)
        let dom = BoxDomain::new(vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        let h = IVFn::new(
            parse("z1 * z2", &["z1", "z2"]).unwrap(),
            parse("z1 * z2 + 1", &["z1", "z2"]).unwrap(),
            dom.clone(),
        )
        .unwrap();
        let e = VectorMap::point_map(
            vec![
                parse("exp(z1)", &["z1", "z2"]).unwrap(),
                parse("z2", &["z1", "z2"]).unwrap(),
            ],
            2,
        )
        .unwrap();
        let g = gradient_pair(&h, &[0.5, 2.0], GradSemantics::Composite, Some(&e)).unwrap();
        let ex = 0.5f64.exp();
        assert!((g.lo[0] - 2.0 * ex).abs() < 1e-12);
        assert!((g.lo[1] - ex).abs() < 1e-12);
        assert_eq!(g.lo, g.hi);

        // non-diagonal map: h(u) = [u1, u1 + 1] with E = (z1 + z2, z2)
        let h = IVFn::new(
            parse("z1", &["z1", "z2"]).unwrap(),
            parse("z1 + 1", &["z1", "z2"]).unwrap(),
            dom.clone(),
        )
        .unwrap();
        let e = VectorMap::point_map(
            vec![
                parse("z1 + z2", &["z1", "z2"]).unwrap(),
                parse("z2", &["z1", "z2"]).unwrap(),
            ],
            2,
        )
        .unwrap();
        let g = gradient_pair(&h, &[0.25, 2.5], GradSemantics::Composite, Some(&e)).unwrap();
        assert_eq!(g.lo, vec![1.0, 1.0]);
        assert_eq!(g.hi, vec![1.0, 1.0]);
    }

    #[test]
    fn box_domain_utilities() {
        let b = BoxDomain::new(vec![(0.0, 1.0), (-2.0, 2.0)]).unwrap();
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        assert!((b.diagonal() - (1.0f64 + 16.0).sqrt()).abs() < 1e-12);
        assert!(BoxDomain::new(vec![(1.0, 0.0)]).is_err());
        assert!(BoxDomain::new(vec![]).is_err());
        let c = BoxDomain::new(vec![(0.5, 2.0), (-1.0, 1.0)]).unwrap();
        let i = b.intersect(&c).unwrap();
        assert_eq!(i.bounds(), &[(0.5, 1.0), (-1.0, 1.0)]);
    }
}
