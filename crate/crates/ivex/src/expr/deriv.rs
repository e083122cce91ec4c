//! Symbolic forward differentiation.
//!
//! Derivatives of `abs`, `floor`, `min`, `max`, and `if` are one-sided
//! selections; any such node marks the result nonsmooth so callers can fall
//! back to finite differences near the kink.

use super::{BinOp, Cmp, CmpOp, Expr, Func};

/// A derivative expression plus a smoothness flag. `smooth == false` means
/// some nonsmooth construct contributed, and the expression is only valid
/// away from its kinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub expr: Expr,
    pub smooth: bool,
}

fn num(x: f64) -> Expr {
    Expr::Num(x)
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(x) if *x == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(x) if *x == 1.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x + y);
    }
    Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x - y);
    }
    if is_zero(&a) {
        return neg(b);
    }
    Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return num(x * y);
    }
    Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if let Expr::Num(y) = &b {
        if *y == 1.0 {
            return a;
        }
        if *y == 0.0 {
            return num(1.0);
        }
    }
    Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b))
}

/// Partial derivative of `e` with respect to `var`.
pub fn diff(e: &Expr, var: &str) -> Derivative {
    match e {
        Expr::Num(_) => Derivative {
            expr: num(0.0),
            smooth: true,
        },
        Expr::Var(name) => Derivative {
            expr: num(if name == var { 1.0 } else { 0.0 }),
            smooth: true,
        },
        Expr::Neg(inner) => {
            let d = diff(inner, var);
            Derivative {
                expr: neg(d.expr),
                smooth: d.smooth,
            }
        }
        Expr::Bin(op, a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            let smooth = da.smooth && db.smooth;
            let expr = match op {
                BinOp::Add => add(da.expr, db.expr),
                BinOp::Sub => sub(da.expr, db.expr),
                BinOp::Mul => add(mul(da.expr, (**b).clone()), mul((**a).clone(), db.expr)),
                BinOp::Div => div(
                    sub(mul(da.expr, (**b).clone()), mul((**a).clone(), db.expr)),
                    pow((**b).clone(), num(2.0)),
                ),
                BinOp::Pow => match (&**a, &**b) {
                    // c^v: c^v * ln(c) * v'
                    (Expr::Num(c), _) => mul(
                        mul(
                            pow((**a).clone(), (**b).clone()),
                            Expr::Call(Func::Ln, vec![num(*c)]),
                        ),
                        db.expr,
                    ),
                    // u^c: c * u^(c-1) * u'
                    (_, Expr::Num(c)) => {
                        mul(mul(num(*c), pow((**a).clone(), num(c - 1.0))), da.expr)
                    }
                    // u^v: u^v * (v' ln u + v u'/u)
                    _ => mul(
                        pow((**a).clone(), (**b).clone()),
                        add(
                            mul(db.expr, Expr::Call(Func::Ln, vec![(**a).clone()])),
                            mul((**b).clone(), div(da.expr, (**a).clone())),
                        ),
                    ),
                },
            };
            Derivative { expr, smooth }
        }
        Expr::Call(func, args) => {
            let u = args[0].clone();
            let du = diff(&args[0], var);
            match func {
                Func::Ln => Derivative {
                    expr: div(du.expr, u),
                    smooth: du.smooth,
                },
                Func::Exp => Derivative {
                    expr: mul(du.expr, Expr::Call(Func::Exp, vec![u])),
                    smooth: du.smooth,
                },
                Func::Sqrt => Derivative {
                    expr: div(du.expr, mul(num(2.0), Expr::Call(Func::Sqrt, vec![u]))),
                    smooth: du.smooth,
                },
                Func::Abs => Derivative {
                    expr: pick(u, CmpOp::Ge, num(0.0), du.expr.clone(), neg(du.expr)),
                    smooth: false,
                },
                Func::Floor => Derivative {
                    expr: num(0.0),
                    smooth: false,
                },
                Func::Min => {
                    let dv = diff(&args[1], var);
                    Derivative {
                        expr: pick(u, CmpOp::Le, args[1].clone(), du.expr, dv.expr),
                        smooth: false,
                    }
                }
                Func::Max => {
                    let dv = diff(&args[1], var);
                    Derivative {
                        expr: pick(u, CmpOp::Ge, args[1].clone(), du.expr, dv.expr),
                        smooth: false,
                    }
                }
            }
        }
        Expr::If {
            cond,
            then,
            otherwise,
        } => {
            let dt = diff(then, var);
            let de = diff(otherwise, var);
            Derivative {
                expr: pick(
                    cond.lhs.clone(),
                    cond.op,
                    cond.rhs.clone(),
                    dt.expr,
                    de.expr,
                ),
                smooth: false,
            }
        }
    }
}

fn pick(lhs: Expr, op: CmpOp, rhs: Expr, then: Expr, otherwise: Expr) -> Expr {
    if then == otherwise {
        return then;
    }
    Expr::If {
        cond: Box::new(Cmp { lhs, op, rhs }),
        then: Box::new(then),
        otherwise: Box::new(otherwise),
    }
}
