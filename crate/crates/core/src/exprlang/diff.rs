use super::ast::{BinOp, Expr, Func, Var};

// Smart constructors: fold constant operands and drop additive zeros and
// multiplicative ones. No further simplification.

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(base: Expr, exponent: Expr) -> Expr {
    match as_const(&exponent) {
        Some(1.0) => base,
        Some(0.0) => Expr::Const(1.0),
        _ => Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    /// Symbolic partial derivative with respect to `t`.
    ///
    /// `x` is held constant, so any `t`-free subtree differentiates to zero.
    /// The derivative of `abs(f)` is `sign(f) * f'` with `sign(0) = 0`; the
    /// derivative of `sqrt(f)` is `f' / (2 sqrt(f))` and fails to evaluate
    /// where `f = 0`.
    pub fn differentiate_t(&self) -> Expr {
        if !self.depends_on(Var::T) {
            return Expr::Const(0.0);
        }
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(Var::T) => Expr::Const(1.0),
            Expr::Var(Var::X) => Expr::Const(0.0),
            Expr::Neg(a) => neg(a.differentiate_t()),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    BinOp::Add => add(a.differentiate_t(), b.differentiate_t()),
                    BinOp::Sub => sub(a.differentiate_t(), b.differentiate_t()),
                    BinOp::Mul => {
                        let (da, db) = (a.differentiate_t(), b.differentiate_t());
                        add(mul(da, b), mul(a, db))
                    }
                    BinOp::Div => {
                        let (da, db) = (a.differentiate_t(), b.differentiate_t());
                        let num = sub(mul(da, b.clone()), mul(a, db));
                        div(num, pow(b, Expr::Const(2.0)))
                    }
                    BinOp::Pow => {
                        // exponent is variable-free by construction
                        let da = a.differentiate_t();
                        let lowered = sub(b.clone(), Expr::Const(1.0));
                        mul(mul(b, pow(a, lowered)), da)
                    }
                }
            }
            Expr::Call(f, a) => {
                let inner = a.as_ref().clone();
                let da = inner.differentiate_t();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Sqrt => {
                        return div(da, mul(Expr::Const(2.0), call(Func::Sqrt, inner)));
                    }
                    Func::Abs => call(Func::Sign, inner),
                    Func::Sign => Expr::Const(0.0),
                };
                mul(outer, da)
            }
        }
    }
}
