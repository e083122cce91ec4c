//! Problem-file loading: a JSON document describing the interval function,
//! the maps, the domain, constraints, and audit defaults. Expressions are
//! carried as strings in the DSL; loading parses everything against the
//! declared dimension and runs the endpoint-order sampling checks.

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audit::{AuditConfig, GridSpec, SetSpec};
use crate::expr::{parse, Expr, ExprError, IntervalMapExpr, MapError, VectorMap};
use crate::invexity::PairIntervalMap;
use crate::ivf::{BoxDomain, GradSemantics, IVFn, IvfError};
use crate::optprog::{interval_constraint, real_constraint, ObjectiveForm, OptError, Problem};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in expression `{text}`: {source}")]
    BadExpr { text: String, source: ExprError },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Ivf(#[from] IvfError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: String,
    #[serde(default)]
    description: Option<String>,
    dimension: usize,
    functions: RawFunctions,
    maps: RawMaps,
    #[serde(default, rename = "E0")]
    e0: Option<RawIntervalMap>,
    #[serde(default)]
    phi: Option<RawIntervalMap>,
    #[serde(default, rename = "Phi")]
    big_phi: Option<RawIntervalMap>,
    domain: RawDomain,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
    #[serde(default)]
    objective_form: Option<ObjectiveForm>,
    #[serde(default)]
    audit: Option<RawAudit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctions {
    #[serde(rename = "hL")]
    h_lo: String,
    #[serde(rename = "hU")]
    h_hi: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaps {
    #[serde(rename = "E")]
    e: Vec<String>,
    #[serde(rename = "Psi")]
    psi: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntervalMap {
    lo: String,
    hi: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    #[serde(default)]
    membership: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawConstraint {
    Real {
        name: String,
        expr: String,
    },
    Interval {
        name: String,
        #[serde(rename = "hL")]
        h_lo: String,
        #[serde(rename = "hU")]
        h_hi: String,
    },
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAudit {
    samples: Option<u64>,
    seed: Option<u64>,
    tol: Option<f64>,
    grad: Option<GradSemantics>,
    alpha_grid: Option<Vec<f64>>,
    alpha_random: Option<bool>,
    lambda_grid: Option<Vec<f64>>,
    lambda_random: Option<bool>,
    workers: Option<usize>,
}

/// A fully parsed and checked problem file.
#[derive(Debug)]
pub struct LoadedProblem {
    pub name: String,
    pub description: Option<String>,
    pub problem: Problem,
    /// Interval map for the epigraph audit, when declared.
    pub e0: Option<IntervalMapExpr>,
    /// Interval map for composition and monotonicity audits, when declared.
    pub phi: Option<IntervalMapExpr>,
    /// Supplied pseudo-preinvexity certificate, when declared.
    pub big_phi: Option<PairIntervalMap>,
    /// Audit defaults from the file, merged over the built-in defaults.
    pub defaults: AuditConfig,
    /// Hex SHA-256 of the raw file bytes.
    pub sha256: String,
}

fn parse_with(text: &str, vars: &[&str]) -> Result<Expr, ProblemError> {
    parse(text, vars).map_err(|source| ProblemError::BadExpr {
        text: text.to_string(),
        source,
    })
}

impl LoadedProblem {
    pub fn from_path(path: &Path) -> Result<LoadedProblem, ProblemError> {
        let bytes = std::fs::read(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        LoadedProblem::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<LoadedProblem, ProblemError> {
        let raw: RawProblem = serde_json::from_slice(bytes)?;
        let sha256 = {
            let mut hasher = Sha256::new();
            hasher.update(bytes);
            hasher
                .finalize()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect::<String>()
        };

        let n = raw.dimension;
        if n == 0 {
            return Err(ProblemError::Invalid("dimension must be positive".into()));
        }
        if raw.domain.bounds.len() != n {
            return Err(ProblemError::Invalid(format!(
                "domain box has {} coordinate(s), dimension is {n}",
                raw.domain.bounds.len()
            )));
        }
        let domain = BoxDomain::new(raw.domain.bounds.iter().map(|b| (b[0], b[1])).collect())?;

        let point_vars: Vec<String> = crate::expr::point_vars(n);
        let point_refs: Vec<&str> = point_vars.iter().map(|s| s.as_str()).collect();
        let pair_vars: Vec<String> = crate::expr::pair_vars(n);
        let pair_refs: Vec<&str> = pair_vars.iter().map(|s| s.as_str()).collect();

        let h_lo = parse_with(&raw.functions.h_lo, &point_refs)?;
        let h_hi = parse_with(&raw.functions.h_hi, &point_refs)?;
        let objective = IVFn::new(h_lo, h_hi, domain.clone())?;

        if raw.maps.e.len() != n {
            return Err(ProblemError::Invalid(format!(
                "map E has {} component(s), dimension is {n}",
                raw.maps.e.len()
            )));
        }
        if raw.maps.psi.len() != n {
            return Err(ProblemError::Invalid(format!(
                "map Psi has {} component(s), dimension is {n}",
                raw.maps.psi.len()
            )));
        }
        let e = VectorMap::point_map(
            raw.maps
                .e
                .iter()
                .map(|t| parse_with(t, &point_refs))
                .collect::<Result<_, _>>()?,
            n,
        )?;
        let psi = VectorMap::pair_map(
            raw.maps
                .psi
                .iter()
                .map(|t| parse_with(t, &pair_refs))
                .collect::<Result<_, _>>()?,
            n,
        )?;

        let membership = raw
            .domain
            .membership
            .iter()
            .map(|t| parse_with(t, &point_refs))
            .collect::<Result<Vec<_>, _>>()?;
        let set = SetSpec::new(domain.clone(), membership);

        let mut constraints = Vec::with_capacity(raw.constraints.len());
        for rc in &raw.constraints {
            match rc {
                RawConstraint::Real { name, expr } => {
                    let g = parse_with(expr, &point_refs)?;
                    constraints.push(real_constraint(name, g, domain.clone())?);
                }
                RawConstraint::Interval { name, h_lo, h_hi } => {
                    let lo = parse_with(h_lo, &point_refs)?;
                    let hi = parse_with(h_hi, &point_refs)?;
                    constraints.push(interval_constraint(name, lo, hi, domain.clone())?);
                }
            }
        }

        let interval_map = |raw: &RawIntervalMap| -> Result<IntervalMapExpr, ProblemError> {
            let map = IntervalMapExpr {
                lo: parse_with(&raw.lo, &["lo", "hi"])?,
                hi: parse_with(&raw.hi, &["lo", "hi"])?,
            };
            map.check_order_preserving(1024, 0x0e0)?;
            Ok(map)
        };
        let e0 = raw.e0.as_ref().map(&interval_map).transpose()?;
        let phi = raw.phi.as_ref().map(&interval_map).transpose()?;
        let big_phi = match &raw.big_phi {
            Some(m) => Some(PairIntervalMap::new(
                parse_with(&m.lo, &pair_refs)?,
                parse_with(&m.hi, &pair_refs)?,
                n,
            )),
            None => None,
        };

        let audit = raw.audit.unwrap_or_default();
        let base = AuditConfig::default();
        let defaults = AuditConfig {
            samples: audit.samples.unwrap_or(base.samples),
            seed: audit.seed.unwrap_or(base.seed),
            tol: audit.tol.unwrap_or(base.tol),
            alpha: grid_from(audit.alpha_grid, audit.alpha_random, &base.alpha)?,
            lambda: grid_from(audit.lambda_grid, audit.lambda_random, &base.lambda)?,
            semantics: audit.grad.unwrap_or(base.semantics),
            workers: audit.workers.filter(|w| *w > 0).unwrap_or(base.workers),
        };

        let problem = Problem {
            objective,
            objective_form: raw.objective_form.unwrap_or(ObjectiveForm::Composed),
            constraints,
            e,
            psi,
            set,
            semantics: defaults.semantics,
        };

        Ok(LoadedProblem {
            name: raw.name,
            description: raw.description,
            problem,
            e0,
            phi,
            big_phi,
            defaults,
            sha256,
        })
    }

    /// Parses a comma-separated point, each coordinate a constant
    /// expression (so `ln(2)` is a valid coordinate).
    pub fn parse_point(&self, text: &str) -> Result<Vec<f64>, ProblemError> {
        let names: Vec<String> = Vec::new();
        let coords = text
            .split(',')
            .map(|part| {
                let e = parse_with(part.trim(), &[])?;
                e.eval(&crate::expr::Env::new(&names, &[]))
                    .map_err(|source| ProblemError::BadExpr {
                        text: part.trim().to_string(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coords.len() != self.problem.dim() {
            return Err(ProblemError::Invalid(format!(
                "point has {} coordinate(s), dimension is {}",
                coords.len(),
                self.problem.dim()
            )));
        }
        Ok(coords)
    }
}

fn grid_from(
    values: Option<Vec<f64>>,
    random: Option<bool>,
    base: &GridSpec,
) -> Result<GridSpec, ProblemError> {
    let spec = GridSpec {
        values: values.unwrap_or_else(|| base.values.clone()),
        random: random.unwrap_or(base.random),
    };
    if spec.values.is_empty() && !spec.random {
        return Err(ProblemError::Invalid(
            "grid must have values or allow random draws".into(),
        ));
    }
    if spec.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(ProblemError::Invalid(
            "grid values must lie in [0, 1]".into(),
        ));
    }
    Ok(spec)
}

/// Echo of the effective configuration for reports.
pub fn config_echo(cfg: &AuditConfig) -> serde_json::Value {
    serde_json::json!({
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tol": cfg.tol,
        "alpha": { "values": cfg.alpha.values, "random": cfg.alpha.random },
        "lambda": { "values": cfg.lambda.values, "random": cfg.lambda.random },
        "semantics": cfg.semantics,
        "workers": cfg.workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "mini",
        "dimension": 1,
        "functions": { "hL": "z1", "hU": "z1 + 1" },
        "maps": { "E": ["z1"], "Psi": ["a1 - b1"] },
        "domain": { "box": [[-1, 1]] }
    }"#;

    #[test]
    fn loads_a_minimal_problem() {
        let lp = LoadedProblem::from_bytes(MINIMAL.as_bytes()).unwrap();
        assert_eq!(lp.name, "mini");
        assert_eq!(lp.problem.dim(), 1);
        assert_eq!(lp.defaults.samples, 10_000);
        assert_eq!(lp.defaults.seed, 42);
        assert_eq!(lp.sha256.len(), 64);
        let p = lp.parse_point("ln(2)").unwrap();
        assert!((p[0] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_crossed_endpoints_and_bad_arity() {
        let crossed = MINIMAL.replace("\"hU\": \"z1 + 1\"", "\"hU\": \"z1 - 1\"");
        assert!(LoadedProblem::from_bytes(crossed.as_bytes()).is_err());

        let bad_map = MINIMAL.replace("\"E\": [\"z1\"]", "\"E\": [\"z1\", \"z1\"]");
        assert!(LoadedProblem::from_bytes(bad_map.as_bytes()).is_err());

        let bad_var = MINIMAL.replace("\"hL\": \"z1\"", "\"hL\": \"z2\"");
        let err = LoadedProblem::from_bytes(bad_var.as_bytes()).unwrap_err();
        assert!(matches!(err, ProblemError::BadExpr { .. }));
    }

    #[test]
    fn audit_defaults_override() {
        let with_audit = MINIMAL.replace(
            "\"domain\": { \"box\": [[-1, 1]] }",
            "\"domain\": { \"box\": [[-1, 1]] }, \"audit\": { \"samples\": 77, \"grad\": \"direct\", \"alpha_grid\": [0], \"alpha_random\": false }",
        );
        let lp = LoadedProblem::from_bytes(with_audit.as_bytes()).unwrap();
        assert_eq!(lp.defaults.samples, 77);
        assert_eq!(lp.defaults.semantics, GradSemantics::Direct);
        assert_eq!(lp.defaults.alpha.values, vec![0.0]);
        assert!(!lp.defaults.alpha.random);
    }
}
