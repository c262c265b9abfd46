use std::f64::consts::PI;
use std::fmt;

/// Independent variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in functions. `Sign` is never produced by the parser; it only
/// appears in derivatives of `abs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree over the variables `x` and `t`.
///
/// Trees built by [`parse`](super::parse) satisfy two structural rules: every
/// leaf is a constant or one of the two variables, and the exponent of every
/// `Pow` node is free of variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Evaluation failure, naming the sub-expression that produced it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} in `{node}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub node: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("power outside its real domain")]
    PowDomain,
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// True if `v` occurs anywhere in the tree.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        !self.depends_on(Var::X) && !self.depends_on(Var::T)
    }

    /// Evaluates the expression at `(x, t)`.
    ///
    /// Division by zero, domain violations and overflow are reported as
    /// errors rather than returned as non-finite values.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        let fail = |kind| EvalError {
            kind,
            node: self.to_string(),
        };
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::T) => t,
            Expr::Neg(a) => -a.eval(x, t)?,
            Expr::Binary(op, a, b) => {
                let l = a.eval(x, t)?;
                let r = b.eval(x, t)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero));
                        }
                        l / r
                    }
                    BinOp::Pow => {
                        if l == 0.0 && r < 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero));
                        }
                        if l < 0.0 && r.fract() != 0.0 {
                            return Err(fail(EvalErrorKind::PowDomain));
                        }
                        pow(l, r)
                    }
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(x, t)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(fail(EvalErrorKind::NegativeSqrt));
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                    Func::Sign => sign(v),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }

    /// Value of a variable-free expression.
    pub fn eval_const(&self) -> Result<f64, EvalError> {
        self.eval(0.0, 0.0)
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

/// sign(0) = 0.
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

const NEG_PRECEDENCE: u8 = 3;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Const(c) if *c < 0.0 => NEG_PRECEDENCE,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Prints a fully re-parseable form (except for `sign`, which the grammar
/// does not accept).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c == PI => write!(f, "pi"),
            Expr::Const(c) if *c < 0.0 => write!(f, "-{}", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, NEG_PRECEDENCE + 1)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                // Left-associative operators need the right operand bracketed
                // at equal precedence; `^` is right-associative.
                let (lp, rp) = if *op == BinOp::Pow {
                    (p + 1, p)
                } else {
                    (p, p + 1)
                };
                a.fmt_child(f, lp)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_child(f, rp)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
