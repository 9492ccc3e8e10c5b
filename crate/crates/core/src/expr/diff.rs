use super::{Expr, Func, Var};

// Constructors that fold only literal zeros/ones, enough to keep derivative
// trees from carrying dead `0 * ...` branches.

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero_literal() => b,
        _ if b.is_zero_literal() => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if b.is_zero_literal() => a,
        _ if a.is_zero_literal() => neg(b),
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if a.is_zero_literal() || b.is_zero_literal() => Expr::Num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() {
        return Expr::Num(0.0);
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    /// Exact symbolic derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(w) => Expr::Num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => {
                add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)))
            }
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                if db.is_zero_literal() {
                    return div(da, (**b).clone());
                }
                // (a'b - ab') / b^2
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    Expr::Pow(b.clone(), 2),
                )
            }
            Expr::Pow(a, k) => {
                let da = a.diff(v);
                match *k {
                    0 => Expr::Num(0.0),
                    1 => da,
                    k => mul(mul(Expr::Num(k as f64), Expr::Pow(a.clone(), k - 1)), da),
                }
            }
            Expr::Call(func, a) => {
                let da = a.diff(v);
                if da.is_zero_literal() {
                    return Expr::Num(0.0);
                }
                let inner = (**a).clone();
                let outer = match func {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => return div(da, inner),
                    Func::Sqrt => {
                        return div(da, mul(Expr::Num(2.0), call(Func::Sqrt, inner)));
                    }
                    Func::Abs => div(inner.clone(), call(Func::Abs, inner)),
                };
                mul(outer, da)
            }
        }
    }
}
