//! Scalar expression language used to define endpoint functions, the point
//! maps `E` and `Psi`, constraints, and interval maps.
//!
//! The language covers real literals, declared variables, `+ - * / ^`,
//! unary minus, `ln exp abs floor sqrt min max`, a conditional
//! `if(cmp, then, else)` with comparisons `< <= > >= ==`, and the constants
//! `pi` and `e`. ASTs are immutable after parsing; evaluation and
//! differentiation are pure.

mod deriv;
pub(crate) mod maps;
mod parse;

pub use deriv::{diff, Derivative};
pub use maps::{pair_vars, point_vars, IntervalMapExpr, MapError, VectorMap};
pub use parse::parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at offset {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Abs,
    Floor,
    Sqrt,
    Min,
    Max,
}

impl Func {
    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }
}

/// Comparison used as the guard of an `if`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cmp {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

/// Expression AST.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    If {
        cond: Box<Cmp>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

/// Variable binding for evaluation: parallel slices of names and values.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    names: &'a [String],
    vals: &'a [f64],
}

impl<'a> Env<'a> {
    pub fn new(names: &'a [String], vals: &'a [f64]) -> Env<'a> {
        debug_assert_eq!(names.len(), vals.len());
        Env { names, vals }
    }

    fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vals[i])
    }
}

impl Expr {
    /// IEEE double evaluation. The named partial functions (`ln`, `sqrt`,
    /// division, powers of negative bases) raise `Domain` instead of
    /// producing NaN; the untaken branch of an `if` is not evaluated.
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        match self {
            Expr::Num(x) => Ok(*x),
            Expr::Var(name) => env
                .get(name)
                .ok_or_else(|| ExprError::UnboundVariable { name: name.clone() }),
            Expr::Neg(inner) => Ok(-inner.eval(env)?),
            Expr::Bin(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y == 0.0 {
                            Err(ExprError::Domain(format!("division of {x} by zero")))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => {
                        if x == 0.0 && y < 0.0 {
                            Err(ExprError::Domain(format!("zero base with exponent {y}")))
                        } else if x < 0.0 && y.fract() != 0.0 {
                            Err(ExprError::Domain(format!(
                                "negative base {x} with non-integer exponent {y}"
                            )))
                        } else {
                            Ok(x.powf(y))
                        }
                    }
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].eval(env)?;
                match func {
                    Func::Ln => {
                        if x <= 0.0 {
                            Err(ExprError::Domain(format!("ln of non-positive {x}")))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    Func::Exp => Ok(x.exp()),
                    Func::Abs => Ok(x.abs()),
                    Func::Floor => Ok(x.floor()),
                    Func::Sqrt => {
                        if x < 0.0 {
                            Err(ExprError::Domain(format!("sqrt of negative {x}")))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Func::Min => Ok(x.min(args[1].eval(env)?)),
                    Func::Max => Ok(x.max(args[1].eval(env)?)),
                }
            }
            Expr::If {
                cond,
                then,
                otherwise,
            } => {
                if cond.eval(env)? {
                    then.eval(env)
                } else {
                    otherwise.eval(env)
                }
            }
        }
    }

    /// True when the binding sits within `tol` of a nonsmooth point of the
    /// expression: an `abs`/`min`/`max` tie, a `floor` step, or an `if`
    /// guard knife edge. Used by auditors before trusting symbolic
    /// gradients.
    pub fn near_kink(&self, env: &Env, tol: f64) -> Result<bool, ExprError> {
        match self {
            Expr::Num(_) | Expr::Var(_) => Ok(false),
            Expr::Neg(inner) => inner.near_kink(env, tol),
            Expr::Bin(_, a, b) => Ok(a.near_kink(env, tol)? || b.near_kink(env, tol)?),
            Expr::Call(func, args) => {
                for a in args {
                    if a.near_kink(env, tol)? {
                        return Ok(true);
                    }
                }
                let x = args[0].eval(env)?;
                match func {
                    Func::Abs => Ok(x.abs() <= tol),
                    Func::Floor => Ok((x - x.round()).abs() <= tol),
                    Func::Min | Func::Max => {
                        let y = args[1].eval(env)?;
                        Ok((x - y).abs() <= tol)
                    }
                    _ => Ok(false),
                }
            }
            Expr::If {
                cond,
                then,
                otherwise,
            } => {
                let l = cond.lhs.eval(env)?;
                let r = cond.rhs.eval(env)?;
                if (l - r).abs() <= tol {
                    return Ok(true);
                }
                if cond.lhs.near_kink(env, tol)? || cond.rhs.near_kink(env, tol)? {
                    return Ok(true);
                }
                if cond.eval(env)? {
                    then.near_kink(env, tol)
                } else {
                    otherwise.near_kink(env, tol)
                }
            }
        }
    }

    /// Collects the names of variables occurring in the expression.
    pub fn free_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(inner) => inner.free_vars(out),
            Expr::Bin(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Expr::Call(_, args) => {
                for a in args {
                    a.free_vars(out);
                }
            }
            Expr::If {
                cond,
                then,
                otherwise,
            } => {
                cond.lhs.free_vars(out);
                cond.rhs.free_vars(out);
                then.free_vars(out);
                otherwise.free_vars(out);
            }
        }
    }

    /// Replaces variables by expressions. Unmapped variables stay as they
    /// are.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(name) => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.substitute(map))),
            Expr::Bin(op, a, b) => Expr::Bin(
                *op,
                Box::new(a.substitute(map)),
                Box::new(b.substitute(map)),
            ),
            Expr::Call(func, args) => {
                Expr::Call(*func, args.iter().map(|a| a.substitute(map)).collect())
            }
            Expr::If {
                cond,
                then,
                otherwise,
            } => Expr::If {
                cond: Box::new(Cmp {
                    lhs: cond.lhs.substitute(map),
                    op: cond.op,
                    rhs: cond.rhs.substitute(map),
                }),
                then: Box::new(then.substitute(map)),
                otherwise: Box::new(otherwise.substitute(map)),
            },
        }
    }
}

impl Cmp {
    pub fn eval(&self, env: &Env) -> Result<bool, ExprError> {
        let l = self.lhs.eval(env)?;
        let r = self.rhs.eval(env)?;
        Ok(match self.op {
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Gt => l > r,
            CmpOp::Ge => l >= r,
            CmpOp::Eq => l == r,
        })
    }
}

// Printing with minimal parentheses; `parse(print(e))` reproduces the AST.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(x) if *x < 0.0 => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn fmt_child(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(inner) => {
                write!(f, "-")?;
                fmt_child(inner, 3, f)
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    // right-associative, binds tighter than unary minus on
                    // the left, admits unary minus on the right
                    BinOp::Pow => (" ^ ", 5, 3),
                };
                fmt_child(a, lp, f)?;
                write!(f, "{sym}")?;
                fmt_child(b, rp, f)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::If {
                cond,
                then,
                otherwise,
            } => write!(
                f,
                "if({} {} {}, {}, {})",
                cond.lhs,
                cond.op.symbol(),
                cond.rhs,
                then,
                otherwise
            ),
        }
    }
}
