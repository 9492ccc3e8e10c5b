//! Scalar expressions over state, control, and endpoint variables.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" [ "-" ] integer ] ;
//! atom    = number | variable | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
//! variable = "x" index | "u" index | "x0_" index | "x1_" index ;
//! ```
//!
//! Indices are 1-based. `x0_k` / `x1_k` are the k-th state coordinate at the
//! left / right endpoint and may only appear in the endpoint cost.

mod diff;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parser::parse;

/// A variable reference, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X(usize),
    U(usize),
    /// State at the left endpoint.
    X0(usize),
    /// State at the right endpoint.
    X1(usize),
}

impl Var {
    pub fn is_endpoint(self) -> bool {
        matches!(self, Var::X0(_) | Var::X1(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::U(i) => write!(f, "u{}", i + 1),
            Var::X0(i) => write!(f, "x0_{}", i + 1),
            Var::X1(i) => write!(f, "x1_{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree. Immutable once built; evaluation is reentrant.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable `{name}` at position {pos} is outside the declared dimensions")]
    IndexOutOfRange { name: String, pos: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Declared dimensions that bound variable indices during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scope {
    pub n: usize,
    pub m: usize,
}

/// Values for the free variables of an expression. Empty slices are unbound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Binding<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub x0: &'a [f64],
    pub x1: &'a [f64],
}

impl<'a> Binding<'a> {
    pub fn running(x: &'a [f64], u: &'a [f64]) -> Self {
        Binding { x, u, ..Default::default() }
    }

    pub fn endpoints(x0: &'a [f64], x1: &'a [f64]) -> Self {
        Binding { x0, x1, ..Default::default() }
    }

    fn get(&self, v: Var) -> Result<f64, ExprError> {
        let (slice, i) = match v {
            Var::X(i) => (self.x, i),
            Var::U(i) => (self.u, i),
            Var::X0(i) => (self.x0, i),
            Var::X1(i) => (self.x1, i),
        };
        slice.get(i).copied().ok_or(ExprError::Unbound(v))
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    /// Evaluates the expression. Non-finite intermediate results are errors.
    pub fn eval(&self, b: &Binding<'_>) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(v) => b.get(*v)?,
            Expr::Neg(a) => -a.eval(b)?,
            Expr::Add(a, c) => a.eval(b)? + c.eval(b)?,
            Expr::Sub(a, c) => a.eval(b)? - c.eval(b)?,
            Expr::Mul(a, c) => a.eval(b)? * c.eval(b)?,
            Expr::Div(a, c) => {
                let num = a.eval(b)?;
                let den = c.eval(b)?;
                if den == 0.0 {
                    return Err(ExprError::Domain("division by zero"));
                }
                num / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval(b)?;
                if base == 0.0 && *k < 0 {
                    return Err(ExprError::Domain("zero raised to a negative power"));
                }
                base.powi(*k)
            }
            Expr::Call(func, a) => {
                let arg = a.eval(b)?;
                match func {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => {
                        if arg <= 0.0 {
                            return Err(ExprError::Domain("log of a nonpositive number"));
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(ExprError::Domain("sqrt of a negative number"));
                        }
                        arg.sqrt()
                    }
                    Func::Abs => arg.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Number of AST nodes. An integer exponent counts as one node.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Pow(a, _) => 2 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Free variables, sorted.
    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, pred: impl Fn(Var) -> bool) -> bool {
        self.variables().into_iter().any(pred)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(c) if *c == 0.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 0,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_operand(f, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                a.write_operand(f, 1)?;
                write!(f, " {op} ")?;
                b.write_operand(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Mul(..)) { "*" } else { "/" };
                a.write_operand(f, 2)?;
                write!(f, " {op} ")?;
                b.write_operand(f, 3)
            }
            Expr::Pow(a, k) => {
                a.write_operand(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
