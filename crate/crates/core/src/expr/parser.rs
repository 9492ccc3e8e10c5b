use super::{Expr, ExprError, Func, Scope, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|t| (t, start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Tok::Ident(name), start));
        }
        Err(ExprError::Syntax { pos: start, msg: format!("unexpected character `{}`", c as char) })
    }

    fn number(&mut self, start: usize) -> Result<Tok, ExprError> {
        let digits = |lx: &mut Self| {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
        };
        digits(self);
        let mut integral = true;
        if self.src.get(self.pos) == Some(&b'.') {
            integral = false;
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                integral = false;
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if integral {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(Tok::Int(i));
            }
        }
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Tok::Num)
            .ok_or_else(|| ExprError::Syntax { pos: start, msg: format!("malformed number `{text}`") })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: Scope,
}

/// Parses `source` against the declared dimensions.
pub fn parse(source: &str, scope: Scope) -> Result<Expr, ExprError> {
    let toks = Lexer::tokens(source)?;
    if toks.len() == 1 {
        return Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, at: 0, scope };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected token {t:?}"))),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ExprError {
        ExprError::Syntax { pos: self.pos(), msg }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {want:?}, found {:?}", self.peek())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Int(k) => {
                let k = if negative { -k } else { k };
                let k = i32::try_from(k).map_err(|_| self.err("exponent out of range".into()))?;
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => {
                self.at = self.at.saturating_sub(1);
                Err(self.err("exponent must be an integer literal".into()))
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Int(i) => Ok(Expr::Num(i as f64)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.variable(&name, pos).map(Expr::Var)
            }
            Tok::End => Err(ExprError::Syntax { pos, msg: "unexpected end of input".into() }),
            t => Err(ExprError::Syntax { pos, msg: format!("unexpected token {t:?}") }),
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Var, ExprError> {
        let unknown = || ExprError::UnknownIdentifier { name: name.to_string(), pos };
        let index = |digits: &str| -> Result<usize, ExprError> {
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(unknown());
            }
            digits.parse::<usize>().map_err(|_| unknown())
        };
        let (var, k, bound) = if let Some(rest) = name.strip_prefix("x0_") {
            let k = index(rest)?;
            (Var::X0(k.wrapping_sub(1)), k, self.scope.n)
        } else if let Some(rest) = name.strip_prefix("x1_") {
            let k = index(rest)?;
            (Var::X1(k.wrapping_sub(1)), k, self.scope.n)
        } else if let Some(rest) = name.strip_prefix('x') {
            let k = index(rest)?;
            (Var::X(k.wrapping_sub(1)), k, self.scope.n)
        } else if let Some(rest) = name.strip_prefix('u') {
            let k = index(rest)?;
            (Var::U(k.wrapping_sub(1)), k, self.scope.m)
        } else {
            return Err(unknown());
        };
        if k == 0 || k > bound {
            return Err(ExprError::IndexOutOfRange { name: name.to_string(), pos });
        }
        Ok(var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCOPE: Scope = Scope { n: 2, m: 1 };

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3", SCOPE).unwrap();
        assert_eq!(e.eval(&Default::default()).unwrap(), -4.0);
        let e = parse("2 * 3 ^ 2", SCOPE).unwrap();
        assert_eq!(e.eval(&Default::default()).unwrap(), 18.0);
        let e = parse("-2 ^ 2", SCOPE).unwrap();
        assert_eq!(e.eval(&Default::default()).unwrap(), -4.0);
        let e = parse("8 / 4 / 2", SCOPE).unwrap();
        assert_eq!(e.eval(&Default::default()).unwrap(), 1.0);
        let e = parse("1.5e2 + .5", SCOPE).unwrap();
        assert_eq!(e.eval(&Default::default()).unwrap(), 150.5);
    }

    #[test]
    fn endpoint_variables() {
        let e = parse("x0_1 * x1_2", SCOPE).unwrap();
        assert_eq!(e, Expr::Mul(Box::new(Expr::Var(Var::X0(0))), Box::new(Expr::Var(Var::X1(1)))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(
            parse("x1 + * 2", SCOPE).unwrap_err(),
            ExprError::Syntax { pos: 5, msg: "unexpected token Star".into() }
        );
        assert!(matches!(parse("", SCOPE), Err(ExprError::Syntax { pos: 0, .. })));
        assert!(matches!(parse("(x1", SCOPE), Err(ExprError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1 ^ 0.5", SCOPE), Err(ExprError::Syntax { pos: 5, .. })));
        assert!(matches!(parse("x1 $", SCOPE), Err(ExprError::Syntax { pos: 3, .. })));
    }

    #[test]
    fn unknown_and_out_of_range() {
        assert_eq!(
            parse("1 + y1", SCOPE).unwrap_err(),
            ExprError::UnknownIdentifier { name: "y1".into(), pos: 4 }
        );
        assert_eq!(
            parse("tan(x1)", SCOPE).unwrap_err(),
            ExprError::UnknownIdentifier { name: "tan".into(), pos: 0 }
        );
        assert_eq!(
            parse("x3", SCOPE).unwrap_err(),
            ExprError::IndexOutOfRange { name: "x3".into(), pos: 0 }
        );
        assert_eq!(
            parse("u2", SCOPE).unwrap_err(),
            ExprError::IndexOutOfRange { name: "u2".into(), pos: 0 }
        );
        assert!(matches!(parse("x0", SCOPE), Err(ExprError::IndexOutOfRange { .. })));
        assert!(matches!(parse("x1_0", SCOPE), Err(ExprError::IndexOutOfRange { .. })));
        assert!(matches!(parse("xa", SCOPE), Err(ExprError::UnknownIdentifier { .. })));
    }
}
