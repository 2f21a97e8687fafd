//! A small expression language for algebra elements.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (['·'] factor)*
//! factor := atom ['*']
//! atom   := 'u' | 'v' | 'i' | number | '(' expr ')'
//! number := digits ['.' digits] ['i']
//! ```
//!
//! A postfix `*` is the adjoint and juxtaposition is multiplication, so
//! `u* u` evaluates to 1.

use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::{AlgebraElement, Coefficient, Element, ExactComplex, ExactElement, Letter};
use crate::error::{Error, Result};

/// A decimal literal, kept as written so exact evaluation is possible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub digits: String,
    pub imaginary: bool,
}

impl Literal {
    pub fn to_c64(&self) -> Complex64 {
        let x: f64 = self.digits.parse().expect("lexer only produces valid decimals");
        if self.imaginary {
            Complex64::new(0.0, x)
        } else {
            Complex64::new(x, 0.0)
        }
    }

    pub fn to_exact(&self) -> ExactComplex {
        let (int, frac) = self.digits.split_once('.').unwrap_or((&self.digits, ""));
        let ratio = format!("{int}{frac}/1{}", "0".repeat(frac.len()));
        let x: BigRational = ratio.parse().expect("lexer only produces valid decimals");
        if self.imaginary {
            ExactComplex::new(BigRational::zero(), x)
        } else {
            ExactComplex::new(x, BigRational::zero())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Gen(Letter),
    /// The imaginary unit `i`.
    ImagUnit,
    Number(Literal),
    Adjoint(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    U,
    V,
    I,
    Num(Literal),
    Star,
    Plus,
    Minus,
    Dot,
    LParen,
    RParen,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::U => "'u'".into(),
        Tok::V => "'v'".into(),
        Tok::I => "'i'".into(),
        Tok::Num(l) => format!("number {}", l.digits),
        Tok::Star => "'*'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Dot => "'·'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
    }
}

fn parse_error(position: usize, message: impl Into<String>) -> Error {
    Error::Parse { position, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, ch)) = chars.next() {
        let tok = match ch {
            c if c.is_whitespace() => continue,
            'u' => Tok::U,
            'v' => Tok::V,
            'i' => Tok::I,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '·' => Tok::Dot,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_digit() => {
                let mut digits = c.to_string();
                let mut seen_dot = false;
                while let Some(&(p, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                    } else if d == '.' && !seen_dot {
                        seen_dot = true;
                        digits.push(d);
                        chars.next();
                        match chars.peek() {
                            Some(&(_, e)) if e.is_ascii_digit() => continue,
                            _ => return Err(parse_error(p + 1, "expected digits after '.'")),
                        }
                    } else {
                        break;
                    }
                    chars.next();
                }
                let imaginary = matches!(chars.peek(), Some(&(_, 'i')));
                if imaginary {
                    chars.next();
                }
                Tok::Num(Literal { digits, imaginary })
            }
            other => return Err(parse_error(pos, format!("unexpected character {other:?}"))),
        };
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Some(Tok::U | Tok::V | Tok::I | Tok::Num(_) | Tok::LParen))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.peek() == Some(&Tok::Dot) {
                self.bump();
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.starts_atom() {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let atom = self.atom()?;
        if self.peek() == Some(&Tok::Star) {
            self.bump();
            return Ok(Expr::Adjoint(Box::new(atom)));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.here();
        match self.bump() {
            Some(Tok::U) => Ok(Expr::Gen(Letter::U)),
            Some(Tok::V) => Ok(Expr::Gen(Letter::V)),
            Some(Tok::I) => Ok(Expr::ImagUnit),
            Some(Tok::Num(l)) => Ok(Expr::Number(l)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                let close = self.here();
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    Some(t) => Err(parse_error(close, format!("expected ')', found {}", describe(&t)))),
                    None => Err(parse_error(close, "expected ')', found end of input")),
                }
            }
            Some(t) => Err(parse_error(at, format!("expected an operand, found {}", describe(&t)))),
            None => Err(parse_error(at, "expected an operand, found end of input")),
        }
    }
}

/// Parses the whole input; trailing tokens are an error.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if let Some(t) = p.peek().cloned() {
        return Err(parse_error(p.here(), format!("unexpected {}", describe(&t))));
    }
    Ok(e)
}

impl Expr {
    fn eval_with<C: Coefficient>(&self, lit: &impl Fn(&Literal) -> C, imag: &impl Fn() -> C) -> AlgebraElement<C> {
        match self {
            Expr::Gen(g) => AlgebraElement::generator(*g),
            Expr::ImagUnit => AlgebraElement::scalar(imag()),
            Expr::Number(l) => AlgebraElement::scalar(lit(l)),
            Expr::Adjoint(a) => a.eval_with(lit, imag).adjoint(),
            Expr::Neg(a) => a.eval_with(lit, imag).scale(&-C::one()),
            Expr::Add(a, b) => a.eval_with(lit, imag) + b.eval_with(lit, imag),
            Expr::Sub(a, b) => a.eval_with(lit, imag) - b.eval_with(lit, imag),
            Expr::Mul(a, b) => a.eval_with(lit, imag) * b.eval_with(lit, imag),
        }
    }

    pub fn eval(&self) -> Element {
        self.eval_with(&Literal::to_c64, &|| Complex64::new(0.0, 1.0))
    }

    /// Evaluation with exact rational coefficients.
    pub fn eval_exact(&self) -> ExactElement {
        self.eval_with(&Literal::to_exact, &|| ExactComplex::new(BigRational::zero(), BigRational::one()))
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Expr::Gen(_) | Expr::ImagUnit | Expr::Number(_))
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, leading: bool) -> fmt::Result {
        let paren = |f: &mut fmt::Formatter<'_>, e: &Expr| -> fmt::Result {
            write!(f, "(")?;
            e.write(f, true)?;
            write!(f, ")")
        };
        match self {
            Expr::Gen(g) => write!(f, "{}", g.as_char()),
            Expr::ImagUnit => write!(f, "i"),
            Expr::Number(l) => write!(f, "{}{}", l.digits, if l.imaginary { "i" } else { "" }),
            Expr::Adjoint(a) => {
                if a.is_atomic() {
                    a.write(f, false)?;
                } else {
                    paren(f, a)?;
                }
                write!(f, "*")
            }
            Expr::Neg(a) => {
                if !leading {
                    return paren(f, self);
                }
                write!(f, "-")?;
                a.write_product_operand(f)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(f, leading)?;
                write!(f, " {} ", if matches!(self, Expr::Add(..)) { '+' } else { '-' })?;
                match **b {
                    Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) => paren(f, b),
                    _ => b.write(f, false),
                }
            }
            Expr::Mul(a, b) => {
                a.write_product_operand(f)?;
                write!(f, " ")?;
                match **b {
                    Expr::Mul(..) => paren(f, b),
                    _ => b.write_product_operand(f),
                }
            }
        }
    }

    fn write_product_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) => {
                write!(f, "(")?;
                self.write(f, true)?;
                write!(f, ")")
            }
            _ => self.write(f, false),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, true)
    }
}
