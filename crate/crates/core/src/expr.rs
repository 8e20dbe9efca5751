//! Scalar real functions of one variable `x`.
//!
//! Potentials and observable coefficients are written as small expressions
//! such as `cos(x)` or `2*sin(x)^2 - 1`. The grammar, from loosest to
//! tightest binding:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'exp' | 'tanh'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-2^2 == -4` and `2^3^2 == 512`.
//!
//! The function set is entire and (for sin/cos) periodic, but nothing checks
//! that a user expression is periodic on the simulation domain.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "tanh" => Some(Func::Tanh),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Abstract syntax tree. Immutable once built, so it can be shared freely
/// between worker threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Pi,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// True when the expression does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::X => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        eval_expr(self, x)
    }
}

pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source,
        pos: 0,
    };
    p.skip_ws();
    if p.pos == source.len() {
        return Err(p.syntax("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != source.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

pub fn eval_expr(e: &Expr, x: f64) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::X => x,
        Expr::Pi => std::f64::consts::PI,
        Expr::Neg(inner) => -eval_expr(inner, x)?,
        Expr::Call(f, arg) => f.apply(eval_expr(arg, x)?),
        Expr::Binary(op, l, r) => {
            let a = eval_expr(l, x)?;
            let b = eval_expr(r, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
                BinOp::Pow => pow(a, b)?,
            }
        }
    })
}

fn pow(base: f64, exp: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exp < 0.0 {
        return Err(EvalError::Domain(format!("0^{exp}")));
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(EvalError::Domain(format!("({base})^{exp}")));
    }
    Ok(base.powf(exp))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut digits = 0;
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
            digits += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark;
                return Err(self.syntax("malformed exponent"));
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        match name {
            "x" => return Ok(Expr::X),
            "pi" => return Ok(Expr::Pi),
            _ => {}
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            });
        };
        if !self.eat(b'(') {
            return Err(self.syntax(&format!("expected `(` after `{name}`")));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.syntax("expected `)`"));
        }
        Ok(Expr::call(func, arg))
    }
}

// Printing parenthesizes every compound subexpression, so re-parsing always
// reproduces the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}
