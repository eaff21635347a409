//! Scalar expressions in one variable `u`, with symbolic differentiation.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom (("^" | "**") unary)?
//! atom    := number | "u" | "pi" | func "(" expr ")" | "(" expr ")"
//! func    := sin | cos | tan | arctan | atan | ln | log | exp | sqrt | abs | sign
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-u^2 = -(u^2)` and `2^-1 = 0.5`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Arctan,
    Ln,
    Exp,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "arctan" | "atan" => Func::Arctan,
            "ln" | "log" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Arctan => x.atan(),
            Func::Ln => x.ln(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            src_len: src.len(),
        };
        let e = p.expr()?;
        if let Some((off, tok)) = p.tokens.get(p.pos) {
            return Err(Error::Expression {
                offset: *off,
                message: format!("unexpected {tok:?}"),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Const(c) => *c,
            Var => u,
            Neg(a) => -a.eval(u),
            Add(a, b) => a.eval(u) + b.eval(u),
            Sub(a, b) => a.eval(u) - b.eval(u),
            Mul(a, b) => a.eval(u) * b.eval(u),
            Div(a, b) => a.eval(u) / b.eval(u),
            Pow(a, b) => pow(a.eval(u), b, u),
            Call(f, a) => f.apply(a.eval(u)),
        }
    }

    pub fn depends_on_var(&self) -> bool {
        match self {
            Const(_) => false,
            Var => true,
            Neg(a) | Call(_, a) => a.depends_on_var(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.depends_on_var() || b.depends_on_var()
            }
        }
    }

    /// Value of an expression that does not mention `u`.
    pub fn eval_const(&self) -> Result<f64> {
        if self.depends_on_var() {
            return Err(Error::Expression {
                offset: 0,
                message: "expected a constant expression".into(),
            });
        }
        Ok(self.eval(0.0))
    }

    /// d/du, lightly simplified.
    pub fn derivative(&self) -> Expr {
        match self {
            Const(_) => Const(0.0),
            Var => Const(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow_e((**b).clone(), Const(2.0)),
            ),
            Pow(a, b) => {
                let da = a.derivative();
                if !b.depends_on_var() {
                    // b a^(b-1) a'
                    let b_minus_1 = match **b {
                        Const(c) => Const(c - 1.0),
                        _ => sub((**b).clone(), Const(1.0)),
                    };
                    mul(mul((**b).clone(), pow_e((**a).clone(), b_minus_1)), da)
                } else {
                    // a^b (b' ln a + b a'/a)
                    let db = b.derivative();
                    mul(
                        self.clone(),
                        add(
                            mul(db, Call(Func::Ln, a.clone())),
                            div(mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let da = a.derivative();
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, Box::new(inner)),
                    Func::Cos => neg(Call(Func::Sin, Box::new(inner))),
                    Func::Tan => div(
                        Const(1.0),
                        pow_e(Call(Func::Cos, Box::new(inner)), Const(2.0)),
                    ),
                    Func::Arctan => div(Const(1.0), add(Const(1.0), pow_e(inner, Const(2.0)))),
                    Func::Ln => div(Const(1.0), inner),
                    Func::Exp => self.clone(),
                    Func::Sqrt => div(Const(0.5), self.clone()),
                    Func::Abs => Call(Func::Sign, Box::new(inner)),
                    Func::Sign => Const(0.0),
                };
                mul(outer, da)
            }
        }
    }
}

fn pow(base: f64, exponent: &Expr, u: f64) -> f64 {
    match exponent {
        Const(c) if c.fract() == 0.0 && c.abs() < 64.0 => base.powi(*c as i32),
        e => base.powf(e.eval(u)),
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Const(c) if *c == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Const(c) => Const(-c),
        Neg(inner) => *inner,
        a => Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x + y),
        (a, b) if is_const(&a, 0.0) => b,
        (a, b) if is_const(&b, 0.0) => a,
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x - y),
        (a, b) if is_const(&b, 0.0) => a,
        (a, b) if is_const(&a, 0.0) => neg(b),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Const(x), Const(y)) => Const(x * y),
        (a, b) if is_const(&a, 0.0) || is_const(&b, 0.0) => Const(0.0),
        (a, b) if is_const(&a, 1.0) => b,
        (a, b) if is_const(&b, 1.0) => a,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if is_const(&a, 0.0) => Const(0.0),
        (a, b) if is_const(&b, 1.0) => a,
        (a, b) => Div(Box::new(a), Box::new(b)),
    }
}

fn pow_e(a: Expr, b: Expr) -> Expr {
    if is_const(&b, 1.0) {
        a
    } else if is_const(&b, 0.0) {
        Const(1.0)
    } else {
        Pow(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Var => f.write_str("u"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a})^({b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let end = chars.get(i).map_or(src.len(), |c| c.0);
                let text = &src[chars[start].0..end];
                let v: f64 = text.parse().map_err(|_| Error::Expression {
                    offset: off,
                    message: format!("bad number `{text}`"),
                })?;
                out.push((off, Token::Num(v)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let end = chars.get(i).map_or(src.len(), |c| c.0);
                out.push((off, Token::Ident(src[chars[start].0..end].to_string())));
            }
            '+' => {
                out.push((off, Token::Plus));
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push((off, Token::Minus));
                i += 1;
            }
            '*' | '\u{d7}' => {
                if c == '*' && chars.get(i + 1).is_some_and(|n| n.1 == '*') {
                    out.push((off, Token::Caret));
                    i += 2;
                } else {
                    out.push((off, Token::Star));
                    i += 1;
                }
            }
            '/' | '\u{f7}' => {
                out.push((off, Token::Slash));
                i += 1;
            }
            '^' => {
                out.push((off, Token::Caret));
                i += 1;
            }
            '(' => {
                out.push((off, Token::LParen));
                i += 1;
            }
            ')' => {
                out.push((off, Token::RParen));
                i += 1;
            }
            other => {
                return Err(Error::Expression {
                    offset: off,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    src_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.src_len, |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expression {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {tok:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(Neg(Box::new(self.unary()?)))
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Const(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                let lower = name.to_ascii_lowercase();
                if lower == "u" {
                    self.pos += 1;
                    return Ok(Var);
                }
                if lower == "pi" {
                    self.pos += 1;
                    return Ok(Const(PI));
                }
                match Func::from_name(&lower) {
                    Some(f) => {
                        self.pos += 1;
                        self.expect(Token::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Token::RParen)?;
                        Ok(Call(f, Box::new(arg)))
                    }
                    None => self.err(format!("unknown identifier `{name}`")),
                }
            }
            Some(tok) => self.err(format!("unexpected {tok:?}")),
            None => self.err("unexpected end of expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, u: f64) -> f64 {
        Expr::parse(s).unwrap().eval(u)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("-u^2", 3.0), -9.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("u ** 2", 4.0), 16.0);
        assert_eq!(ev("1e-3 * 2E2", 0.0), 0.2);
        assert!((ev("pi", 0.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn functions() {
        let u = 0.7;
        assert!((ev("sin(u) + cos(u)", u) - (u.sin() + u.cos())).abs() < 1e-15);
        assert!((ev("arctan(u) - atan(u)", u)).abs() < 1e-15);
        assert!((ev("ln(u^2 + 1)", u) - (u * u + 1.0).ln()).abs() < 1e-15);
        assert_eq!(ev("abs(u)", -2.0), 2.0);
    }

    #[test]
    fn errors_carry_offsets() {
        match Expr::parse("u + foo(u)") {
            Err(Error::Expression { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(u").is_err());
        assert!(Expr::parse("u u").is_err());
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("u $ 2").is_err());
    }

    #[test]
    fn constants() {
        let e = Expr::parse("pi^2 / 2").unwrap();
        assert!((e.eval_const().unwrap() - PI * PI / 2.0).abs() < 1e-14);
        assert!(Expr::parse("u + 1").unwrap().eval_const().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            "pi^2*u + 5*(u^2+1)^(5/12)*sin(u)",
            "cos(u) + u*(pi^2 + (2/pi)*arctan(u) + 0.9*sin(ln(u^2+1)))",
            "u/(1+u^2)",
            "2.5*u - u^3",
            "abs(u)*u",
            "exp(-u^2)*sqrt(1+u^2)",
            "(1+u^2)^u",
            "tan(u/10)",
        ];
        for src in cases {
            let e = Expr::parse(src).unwrap();
            let d = e.derivative();
            for &u in &[-3.3, -0.4, 0.25, 1.7, 4.1] {
                let h = 1e-5 * (1.0 + f64::abs(u));
                let fd = (e.eval(u + h) - e.eval(u - h)) / (2.0 * h);
                let an = d.eval(u);
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                    "{src} at {u}: {an} vs {fd} ({d})"
                );
            }
        }
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("-(u^2) + 3*sin(u)/(1-u)").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        for &u in &[0.1, 2.0, -5.0] {
            assert!((e.eval(u) - again.eval(u)).abs() < 1e-14);
        }
    }
}
