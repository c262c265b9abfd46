//! Scalar expressions in `x` and `t`.
//!
//! Reference signals, disturbances, coefficients and initial data are given
//! as strings such as `2 + 4*cos(pi*t) - 3*sin(pi*t)`. The grammar is small:
//! decimal and scientific literals, the identifiers `x`, `t` and `pi`, the
//! functions `sin`, `cos`, `exp`, `sqrt`, `abs`, the operators `+ - * / ^`
//! and parentheses. Exponents must be constant so that every expression has
//! a closed-form time derivative, which the feedforward law needs.
//!
//! ```
//! use burgerlab_core::exprlang::parse;
//!
//! let r = parse("2 + 4*cos(pi*t) - 3*sin(pi*t)").unwrap();
//! assert_eq!(r.eval(0.0, 0.0).unwrap(), 6.0);
//! let dr = r.differentiate_t();
//! assert!((dr.eval(0.0, 0.0).unwrap() + 3.0 * std::f64::consts::PI).abs() < 1e-12);
//! ```

mod ast;
mod diff;
mod parse;

pub use ast::{BinOp, EvalError, EvalErrorKind, Expr, Func, Var};
pub use parse::{parse, ParseError, ParseErrorKind};
