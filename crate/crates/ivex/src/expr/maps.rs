//! Vector-valued point maps and interval-to-interval maps built from
//! expressions.

use serde::Serialize;
use thiserror::Error;

use super::{Env, Expr, ExprError};
use crate::interval::Interval;
use crate::rng::Stream;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("arity mismatch: map has {exprs} component(s) for dimension {dim}")]
    Arity { exprs: usize, dim: usize },
    #[error("argument count mismatch: expected {expected}, got {got}")]
    ArgCount { expected: usize, got: usize },
    #[error("interval map output out of order at input [{in_lo}, {in_hi}]: [{out_lo}, {out_hi}]")]
    EndpointOrderViolation {
        in_lo: f64,
        in_hi: f64,
        out_lo: f64,
        out_hi: f64,
    },
}

/// A map from points to points given by one expression per output
/// coordinate. `E` maps are over `z1..zn`; `Psi` maps are over
/// `a1..an, b1..bn` (first and second argument).
#[derive(Debug, Clone, Serialize)]
pub struct VectorMap {
    #[serde(serialize_with = "super::maps::serialize_exprs")]
    exprs: Vec<Expr>,
    #[serde(skip)]
    var_names: Vec<String>,
}

pub(crate) fn serialize_exprs<S: serde::Serializer>(
    exprs: &[Expr],
    s: S,
) -> Result<S::Ok, S::Error> {
    let texts: Vec<String> = exprs.iter().map(|e| e.to_string()).collect();
    serde::Serialize::serialize(&texts, s)
}

/// Variable names `z1..zn`.
pub fn point_vars(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("z{i}")).collect()
}

/// Variable names `a1..an, b1..bn`.
pub fn pair_vars(dim: usize) -> Vec<String> {
    (1..=dim)
        .map(|i| format!("a{i}"))
        .chain((1..=dim).map(|i| format!("b{i}")))
        .collect()
}

impl VectorMap {
    /// Map on points (`E`-style): `dim` expressions over `z1..zn`.
    pub fn point_map(exprs: Vec<Expr>, dim: usize) -> Result<VectorMap, MapError> {
        if exprs.len() != dim {
            return Err(MapError::Arity {
                exprs: exprs.len(),
                dim,
            });
        }
        Ok(VectorMap {
            exprs,
            var_names: point_vars(dim),
        })
    }

    /// Map on pairs of points (`Psi`-style): `dim` expressions over
    /// `a1..an, b1..bn`.
    pub fn pair_map(exprs: Vec<Expr>, dim: usize) -> Result<VectorMap, MapError> {
        if exprs.len() != dim {
            return Err(MapError::Arity {
                exprs: exprs.len(),
                dim,
            });
        }
        Ok(VectorMap {
            exprs,
            var_names: pair_vars(dim),
        })
    }

    /// The identity point map on `dim` coordinates.
    pub fn identity(dim: usize) -> VectorMap {
        VectorMap {
            exprs: (1..=dim).map(|i| Expr::Var(format!("z{i}"))).collect(),
            var_names: point_vars(dim),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.exprs.len()
    }

    pub fn in_dim(&self) -> usize {
        self.var_names.len()
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    /// Evaluates all components. For pair maps pass the concatenation of the
    /// two argument points.
    pub fn eval(&self, args: &[f64]) -> Result<Vec<f64>, MapError> {
        if args.len() != self.var_names.len() {
            return Err(MapError::ArgCount {
                expected: self.var_names.len(),
                got: args.len(),
            });
        }
        let env = Env::new(&self.var_names, args);
        self.exprs
            .iter()
            .map(|e| e.eval(&env).map_err(MapError::from))
            .collect()
    }

    /// Evaluates a pair map at `(a, b)`.
    pub fn eval_pair(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, MapError> {
        let mut args = Vec::with_capacity(a.len() + b.len());
        args.extend_from_slice(a);
        args.extend_from_slice(b);
        self.eval(&args)
    }
}

/// A map from intervals to intervals given by two expressions over the
/// input endpoints `lo` and `hi`. Hosts the `E0` and `phi` maps.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalMapExpr {
    #[serde(serialize_with = "super::maps::serialize_expr")]
    pub lo: Expr,
    #[serde(serialize_with = "super::maps::serialize_expr")]
    pub hi: Expr,
}

pub(crate) fn serialize_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&e.to_string(), s)
}

impl IntervalMapExpr {
    pub fn identity() -> IntervalMapExpr {
        IntervalMapExpr {
            lo: Expr::Var("lo".to_string()),
            hi: Expr::Var("hi".to_string()),
        }
    }

    pub fn vars() -> Vec<String> {
        vec!["lo".to_string(), "hi".to_string()]
    }

    /// Applies the map; an out-of-order output is an error rather than a
    /// silently reordered interval.
    pub fn apply(&self, iv: Interval) -> Result<Interval, MapError> {
        let vars = Self::vars();
        let vals = [iv.lo(), iv.hi()];
        let env = Env::new(&vars, &vals);
        let out_lo = self.lo.eval(&env)?;
        let out_hi = self.hi.eval(&env)?;
        Interval::new(out_lo, out_hi).map_err(|_| MapError::EndpointOrderViolation {
            in_lo: iv.lo(),
            in_hi: iv.hi(),
            out_lo,
            out_hi,
        })
    }

    /// Load-time sampling check that ordered inputs give ordered outputs.
    pub fn check_order_preserving(&self, samples: usize, seed: u64) -> Result<(), MapError> {
        let mut s = Stream::for_sample(seed, 0x1f);
        for _ in 0..samples {
            let a = s.in_range(-10.0, 10.0);
            let w = s.in_range(0.0, 10.0);
            let iv = Interval::new(a, a + w).expect("ordered by construction");
            self.apply(iv)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn point_and_pair_maps() {
        let e = VectorMap::point_map(vec![parse("exp(z1)", &["z1"]).unwrap()], 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), vec![1.0]);

        let psi = VectorMap::pair_map(vec![parse("a1 - b1", &["a1", "b1"]).unwrap()], 1).unwrap();
        assert_eq!(psi.eval_pair(&[3.0], &[1.0]).unwrap(), vec![2.0]);

        let id = VectorMap::identity(2);
        assert_eq!(id.eval(&[4.0, 5.0]).unwrap(), vec![4.0, 5.0]);

        assert!(matches!(
            VectorMap::point_map(vec![], 1),
            Err(MapError::Arity { .. })
        ));
        assert!(matches!(psi.eval(&[1.0]), Err(MapError::ArgCount { .. })));
    }

    #[test]
    fn interval_maps() {
        let vars = IntervalMapExpr::vars();
        let double = IntervalMapExpr {
            lo: parse("2 * lo", &[&vars[0], &vars[1]]).unwrap(),
            hi: parse("2 * hi", &[&vars[0], &vars[1]]).unwrap(),
        };
        let out = double.apply(Interval::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(out, Interval::new(2.0, 4.0).unwrap());
        assert!(double.check_order_preserving(1000, 42).is_ok());

        // swapping endpoints violates the order on any non-degenerate input
        let swap = IntervalMapExpr {
            lo: parse("hi", &["lo", "hi"]).unwrap(),
            hi: parse("lo", &["lo", "hi"]).unwrap(),
        };
        assert!(matches!(
            swap.apply(Interval::new(0.0, 1.0).unwrap()),
            Err(MapError::EndpointOrderViolation { .. })
        ));
        assert!(swap.check_order_preserving(1000, 42).is_err());
    }
}
