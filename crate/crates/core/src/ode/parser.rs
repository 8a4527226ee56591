//! Recursive-descent parser for equation text.
//!
//! ```text
//! equation := ('order' INT ';')? expr
//! expr     := ('+'|'-')? term (('+'|'-') term)*
//! term     := factor ('*' factor)*
//! factor   := base ('^' power)?
//! base     := 'z' | 'u' | 'D(u,' INT ')' | '(' expr ')' | scalar
//! scalar   := INT ('/' INT)? | 'i'
//! power    := INT ('/' INT)? | '(' '-'? INT ('/' INT)? ')'
//! ```
//!
//! `#` starts a comment running to the end of the line.

use std::collections::BTreeMap;

use rug::{Integer, Rational};

use super::{Monomial, PolyOde};
use crate::error::ParseError;
use crate::gps::GaussianRational;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(Integer),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    Semi,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {}", n),
            Tok::Ident(s) => format!("'{}'", s),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Semi => "';'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        match ch {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n = Integer::from_str_radix(&digits, 10).expect("digits parse");
                out.push((pos, Tok::Int(n)));
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Ident(word)));
            }
            _ => {
                let tok = match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '+' => Tok::Plus,
                    '-' | '\u{2212}' => Tok::Minus,
                    '*' | '\u{00b7}' => Tok::Star,
                    '^' => Tok::Caret,
                    '/' => Tok::Slash,
                    ';' => Tok::Semi,
                    other => {
                        return Err(ParseError::Syntax {
                            pos,
                            expected: vec!["a token".into()],
                            found: format!("character {:?}", other),
                        })
                    }
                };
                chars.next();
                out.push((pos, tok));
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// Polynomial being built: `(z-exponent, u-powers) → coefficient`, with
/// trailing zero powers trimmed.
#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<(Rational, Vec<u32>), GaussianRational>);

impl Poly {
    fn constant(c: GaussianRational) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.0.insert((Rational::new(), Vec::new()), c);
        }
        p
    }

    fn z_power(beta: Rational) -> Poly {
        let mut p = Poly::default();
        p.0.insert((beta, Vec::new()), GaussianRational::one());
        p
    }

    fn u(i: usize) -> Poly {
        let mut q = vec![0u32; i + 1];
        q[i] = 1;
        let mut p = Poly::default();
        p.0.insert((Rational::new(), q), GaussianRational::one());
        p
    }

    fn add(mut self, other: Poly, sign: i64) -> Poly {
        for (k, c) in other.0 {
            let c = if sign < 0 { -c } else { c };
            let entry = self.0.entry(k).or_default();
            *entry = &*entry + &c;
        }
        self.0.retain(|_, c| !c.is_zero());
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for ((ba, qa), ca) in &self.0 {
            for ((bb, qb), cb) in &other.0 {
                let mut q = vec![0u32; qa.len().max(qb.len())];
                for (k, e) in qa.iter().enumerate() {
                    q[k] += e;
                }
                for (k, e) in qb.iter().enumerate() {
                    q[k] += e;
                }
                let key = (Rational::from(ba + bb), q);
                let entry = out.0.entry(key).or_default();
                *entry = &*entry + &(ca * cb);
            }
        }
        out.0.retain(|_, c| !c.is_zero());
        out
    }

    fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::constant(GaussianRational::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// The single `z`-power this polynomial consists of, if any.
    fn as_z_monomial(&self) -> Option<&Rational> {
        if self.0.len() != 1 {
            return None;
        }
        let ((beta, q), c) = self.0.iter().next()?;
        (q.iter().all(|&e| e == 0) && c.is_one()).then_some(beta)
    }
}

enum BaseKind {
    Z,
    U,
    Other,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    declared: Option<usize>,
    max_index: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn int(&mut self) -> Result<Integer, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn header(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Ident("order".into()) {
            self.bump();
            let n = self.int()?;
            let m = n.to_usize().ok_or_else(|| ParseError::Syntax {
                pos: self.pos(),
                expected: vec!["small order".into()],
                found: n.to_string(),
            })?;
            self.declared = Some(m);
            self.expect(Tok::Semi, "';'")?;
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut sign = 1;
        match self.peek() {
            Tok::Minus => {
                self.bump();
                sign = -1;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let first = self.term()?;
        let mut acc = Poly::default().add(first, sign);
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1,
                Tok::Minus => -1,
                _ => break,
            };
            self.bump();
            let t = self.term()?;
            acc = acc.add(t, sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, ParseError> {
        let (base, kind) = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let power = self.power()?;
        if power.cmp0().is_lt() {
            return Err(ParseError::NonPolynomial {
                pos,
                detail: format!("negative exponent {}", power),
            });
        }
        match kind {
            BaseKind::Z => Ok(Poly::z_power(power)),
            _ if power.is_integer() => {
                let n = power.numer().to_u32().ok_or_else(|| ParseError::NonPolynomial {
                    pos,
                    detail: format!("exponent {} too large", power),
                })?;
                Ok(base.pow(n))
            }
            BaseKind::Other if base.as_z_monomial().is_some() => {
                let beta = base.as_z_monomial().cloned().unwrap_or_default();
                Ok(Poly::z_power(beta * power))
            }
            _ => Err(ParseError::NonPolynomial {
                pos,
                detail: format!("fractional power {} of a non-z factor", power),
            }),
        }
    }

    fn rational_literal(&mut self) -> Result<Rational, ParseError> {
        let n = self.int()?;
        if *self.peek() == Tok::Slash {
            self.bump();
            let pos = self.pos();
            let d = self.int()?;
            if d == 0 {
                return Err(ParseError::Syntax {
                    pos,
                    expected: vec!["nonzero denominator".into()],
                    found: "0".into(),
                });
            }
            Ok(Rational::from((n, d)))
        } else {
            Ok(Rational::from(n))
        }
    }

    fn power(&mut self) -> Result<Rational, ParseError> {
        match self.peek().clone() {
            Tok::Int(_) => self.rational_literal(),
            Tok::LParen => {
                self.bump();
                let negative = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                if let Tok::Ident(name) = self.peek().clone() {
                    if name == "i" {
                        return Err(ParseError::NonPolynomial {
                            pos: self.pos(),
                            detail: "complex exponent".into(),
                        });
                    }
                }
                let r = self.rational_literal()?;
                if let Tok::Ident(name) = self.peek().clone() {
                    if name == "i" {
                        return Err(ParseError::NonPolynomial {
                            pos: self.pos(),
                            detail: "complex exponent".into(),
                        });
                    }
                }
                if matches!(self.peek(), Tok::Plus | Tok::Star) {
                    return Err(ParseError::NonPolynomial {
                        pos: self.pos(),
                        detail: "exponents must be rational literals".into(),
                    });
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(if negative { -r } else { r })
            }
            Tok::Minus => Err(ParseError::NonPolynomial {
                pos: self.pos(),
                detail: "negative exponent".into(),
            }),
            Tok::Ident(name) if name == "i" => Err(ParseError::NonPolynomial {
                pos: self.pos(),
                detail: "complex exponent".into(),
            }),
            _ => self.fail(&["integer", "'('"]),
        }
    }

    fn base(&mut self) -> Result<(Poly, BaseKind), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(_) => {
                let r = self.rational_literal()?;
                Ok((Poly::constant(GaussianRational::real(r)), BaseKind::Other))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok((inner, BaseKind::Other))
            }
            Tok::Ident(name) => match name.as_str() {
                "z" => {
                    self.bump();
                    Ok((Poly::z_power(Rational::from(1)), BaseKind::Z))
                }
                "u" => {
                    self.bump();
                    Ok((self.use_index(0), BaseKind::U))
                }
                "i" => {
                    self.bump();
                    Ok((Poly::constant(GaussianRational::i()), BaseKind::Other))
                }
                "D" => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    if *self.peek() != Tok::Ident("u".into()) {
                        return self.fail(&["'u'"]);
                    }
                    self.bump();
                    self.expect(Tok::Comma, "','")?;
                    let ipos = self.pos();
                    let n = self.int()?;
                    self.expect(Tok::RParen, "')'")?;
                    let i = n.to_usize().ok_or(ParseError::IndexOutOfRange {
                        index: usize::MAX,
                        order: self.declared.unwrap_or(0),
                    })?;
                    if let Some(order) = self.declared {
                        if i > order {
                            return Err(ParseError::IndexOutOfRange { index: i, order });
                        }
                    }
                    let _ = ipos;
                    Ok((self.use_index(i), BaseKind::U))
                }
                _ => Err(ParseError::Syntax {
                    pos,
                    expected: vec!["'z'".into(), "'u'".into(), "'D'".into(), "'i'".into()],
                    found: format!("'{}'", name),
                }),
            },
            _ => self.fail(&["'z'", "'u'", "'D(u,'", "'('", "scalar"]),
        }
    }

    fn use_index(&mut self, i: usize) -> Poly {
        self.max_index = self.max_index.max(i);
        Poly::u(i)
    }
}

/// Parses equation text into a canonical [`PolyOde`].
///
/// Without an `order N;` header the order is the highest `D(u,i)` index
/// used; a header may declare a higher order. `u` is the same as `D(u,0)`.
pub fn parse_equation(text: &str) -> Result<PolyOde, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        declared: None,
        max_index: 0,
    };
    p.header()?;
    let poly = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["'+'", "'-'", "'*'", "end of input"]);
    }
    let order = p.declared.unwrap_or(p.max_index);
    let monomials = poly
        .0
        .into_iter()
        .map(|((beta, q), coeff)| Monomial { coeff, beta, q })
        .collect::<Vec<_>>();
    if monomials.iter().any(|m| m.q.len() > order + 1) {
        let used = monomials.iter().map(|m| m.q.len() - 1).max().unwrap_or(0);
        return Err(ParseError::IndexOutOfRange { index: used, order });
    }
    match p.declared {
        // an explicit header may declare derivatives the polynomial omits
        Some(order) => {
            let f = PolyOde::canonical(order, monomials);
            if f.is_zero() {
                return Err(ParseError::ZeroEquation);
            }
            Ok(f)
        }
        None => PolyOde::new(order, monomials),
    }
}
