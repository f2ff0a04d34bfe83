//! Small arithmetic expressions in `g1, g2, g3` (the components of γ),
//! evaluated at any `Real` so they can serve as differentiable conformal
//! factors.
//!
//! Grammar: `+ - * /`, `^` with a constant exponent, unary minus,
//! parentheses, and `sqrt exp ln log sin cos abs`.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < cs.len() && (cs[i] == 'e' || cs[i] == 'E') {
                let mut j = i + 1;
                if j < cs.len() && (cs[j] == '+' || cs[j] == '-') {
                    j += 1;
                }
                if j < cs.len() && cs[j].is_ascii_digit() {
                    i = j;
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let t: String = cs[st..i].iter().collect();
            let v = t.parse().map_err(|_| Error::Invalid(format!("bad number `{t}` in expression")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Invalid(format!("unexpected `{c}` in expression")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        loop {
            if self.eat('+') {
                e = Expr::Add(Box::new(e), Box::new(self.product()?));
            } else if self.eat('-') {
                e = Expr::Sub(Box::new(e), Box::new(self.product()?));
            } else {
                return Ok(e);
            }
        }
    }
    fn product(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat('*') {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat('/') {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }
    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            // right associative; the exponent must not depend on γ
            let ex = self.unary()?;
            let p = ex
                .constant()
                .ok_or_else(|| Error::Invalid("exponent must be a constant".into()))?;
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }
    fn atom(&mut self) -> Result<Expr> {
        let t = self.peek().cloned();
        self.pos += 1;
        match t {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Op('(')) => {
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(Error::Invalid("missing `)` in expression".into()));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let var = match name.as_str() {
                    "g1" => Some(0),
                    "g2" => Some(1),
                    "g3" => Some(2),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Expr::Var(v));
                }
                let f = match name.as_str() {
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "abs" => Func::Abs,
                    _ => return Err(Error::Invalid(format!("unknown name `{name}` in expression"))),
                };
                if !self.eat('(') {
                    return Err(Error::Invalid(format!("`{name}` needs an argument in parentheses")));
                }
                let arg = self.sum()?;
                if !self.eat(')') {
                    return Err(Error::Invalid("missing `)` in expression".into()));
                }
                Ok(Expr::Call(f, Box::new(arg)))
            }
            _ => Err(Error::Invalid("incomplete expression".into())),
        }
    }
}

impl Expr {
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Parser { toks: lex(s)?, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(Error::Invalid(format!("trailing input in expression `{s}`")));
        }
        Ok(e)
    }

    /// Value when no variable occurs.
    fn constant(&self) -> Option<f64> {
        if self.has_var() {
            None
        } else {
            Some(self.eval::<f64>(&[0.0; 3]))
        }
    }

    fn has_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.has_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.has_var() || b.has_var(),
        }
    }

    pub fn eval<S: Real>(&self, g: &[S; 3]) -> S {
        match self {
            Expr::Num(v) => S::cst(*v),
            Expr::Var(i) => g[*i],
            Expr::Neg(a) => -a.eval(g),
            Expr::Add(a, b) => a.eval(g) + b.eval(g),
            Expr::Sub(a, b) => a.eval(g) - b.eval(g),
            Expr::Mul(a, b) => a.eval(g) * b.eval(g),
            Expr::Div(a, b) => a.eval(g) / b.eval(g),
            Expr::Pow(a, p) => a.eval(g).powf(*p),
            Expr::Call(f, a) => {
                let x = a.eval(g);
                match f {
                    Func::Sqrt => x.sqrt(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Abs => x.abs(),
                }
            }
        }
    }
}
