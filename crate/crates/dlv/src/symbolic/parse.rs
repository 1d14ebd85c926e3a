//! Text form of [`Expr`](super::Expr).
//!
//! Grammar (binding powers in parentheses, higher binds tighter):
//!
//! ```text
//! e := e '+' e | e '-' e      (1)   left-assoc
//!    | '-' e                  (2)   prefix
//!    | e '*' e | e '/' e      (3)   left-assoc
//!    | e '^' exponent         (5)   exponent is a numeric constant
//!    | name '(' e ')'              function call
//!    | '(' e ')' | name | number
//! ```
//!
//! Note the deliberate choice that prefix minus binds *looser* than `*`:
//! `-a*b` is `-(a*b)`. The [`Display`](std::fmt::Display) impl assumes the
//! same convention, which is what makes printing and parsing mutually
//! inverse on the nose (tree equality, not just value equality).
//!
//! Exponents must fold to a number at parse time: `x^2`, `x^(-1.5)`, and
//! `x^(3.0/2.0)` are accepted, `x^y` is not.

use super::{coth, neg, num, pow, unary, var, Expr, UnaryFn};

/// A parse failure, with the byte offset into the input where it happened.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
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

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return err(i, "expected digits after decimal point");
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    // otherwise the 'e' is an identifier start, not an exponent
                }
                let lit = &text[start..i];
                match lit.parse::<f64>() {
                    Ok(v) => toks.push((Tok::Num(v), start)),
                    Err(_) => return err(start, format!("invalid number literal `{lit}`")),
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => return err(i, format!("unexpected character `{}`", &text[i..i + 1])),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    allowed: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => err(self.offset(), "expected `)`"),
        }
    }

    /// Pratt loop. `min_bp` is the minimum left binding power an infix
    /// operator must have to be consumed at this level.
    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = match self.bump() {
            Some(Tok::Num(v)) => num(v),
            Some(Tok::Minus) => {
                // Prefix minus: binds looser than `*`, tighter than `+`.
                let operand = self.expr(2)?;
                neg(operand)
            }
            Some(Tok::LParen) => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                inner
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    let call_offset = self.offset();
                    self.pos += 1;
                    let arg = self.expr(0)?;
                    self.expect_rparen()?;
                    match name.as_str() {
                        "exp" => unary(UnaryFn::Exp, arg),
                        "sin" => unary(UnaryFn::Sin, arg),
                        "cos" => unary(UnaryFn::Cos, arg),
                        "tan" => unary(UnaryFn::Tan, arg),
                        "sinh" => unary(UnaryFn::Sinh, arg),
                        "cosh" => unary(UnaryFn::Cosh, arg),
                        "tanh" => unary(UnaryFn::Tanh, arg),
                        "sqrt" => unary(UnaryFn::Sqrt, arg),
                        "coth" => coth(arg),
                        _ => return err(call_offset, format!("unknown function `{name}`")),
                    }
                } else {
                    if let Some(allowed) = self.allowed {
                        if !allowed.contains(&name.as_str()) {
                            return err(
                                self.toks[self.pos - 1].1,
                                format!(
                                    "unknown variable `{name}` (allowed: {})",
                                    allowed.join(", ")
                                ),
                            );
                        }
                    }
                    var(&name)
                }
            }
            Some(other) => {
                return err(
                    self.toks[self.pos - 1].1,
                    format!("expected an expression, found `{other:?}`"),
                )
            }
            None => return err(self.end, "unexpected end of input"),
        };

        loop {
            let (l_bp, op) = match self.peek() {
                Some(Tok::Plus) => (1, Tok::Plus),
                Some(Tok::Minus) => (1, Tok::Minus),
                Some(Tok::Star) => (3, Tok::Star),
                Some(Tok::Slash) => (3, Tok::Slash),
                Some(Tok::Caret) => (5, Tok::Caret),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            if op == Tok::Caret {
                let c = self.exponent()?;
                lhs = pow(lhs, c);
                continue;
            }
            let rhs = self.expr(l_bp + 1)?;
            lhs = match op {
                Tok::Plus => super::add(lhs, rhs),
                Tok::Minus => super::sub(lhs, rhs),
                Tok::Star => super::mul(lhs, rhs),
                Tok::Slash => super::div(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    /// Exponent position: a number, optionally sign-prefixed, or a
    /// parenthesized constant expression.
    fn exponent(&mut self) -> Result<f64, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Minus) => match self.bump() {
                Some(Tok::Num(v)) => Ok(-v),
                _ => err(at, "expected a number after `^-`"),
            },
            Some(Tok::LParen) => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                match inner.as_const() {
                    Some(c) => Ok(c),
                    None => err(at, "exponent must be a numeric constant"),
                }
            }
            _ => err(at, "expected a numeric exponent after `^`"),
        }
    }
}

pub(super) fn parse(text: &str, allowed: Option<&[&str]>) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        allowed,
    };
    let e = p.expr(0)?;
    if p.pos != p.toks.len() {
        return err(p.offset(), "unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn parses_arithmetic_with_precedence() {
        let e = Expr::parse("1.0 + 2.0*x - 6.0/3.0").unwrap();
        assert_eq!(e.eval(&[("x", 4.0)]).unwrap(), 7.0);
    }

    #[test]
    fn prefix_minus_binds_looser_than_mul() {
        let e = Expr::parse("-x*y").unwrap();
        assert_eq!(e, neg(mul(var("x"), var("y"))));
    }

    #[test]
    fn left_associativity() {
        let e = Expr::parse("10.0 - 4.0 - 3.0").unwrap();
        assert_eq!(e, num(3.0));
        let e = Expr::parse("x - y - z").unwrap();
        assert_eq!(e, sub(sub(var("x"), var("y")), var("z")));
    }

    #[test]
    fn functions_and_powers() {
        let e = Expr::parse("cosh(k*x)^3").unwrap();
        let k = 0.5_f64;
        let xv = 1.2_f64;
        let expect = (k * xv).cosh().powi(3);
        assert!((e.eval(&[("k", k), ("x", xv)]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn coth_desugars_to_cosh_over_sinh() {
        let e = Expr::parse("coth(x)").unwrap();
        assert_eq!(e, coth(var("x")));
        let got = e.eval(&[("x", 0.7)]).unwrap();
        assert!((got - 1.0 / 0.7f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn scientific_notation_and_constant_exponents() {
        let e = Expr::parse("1.5e-3*x^(-2)").unwrap();
        assert!((e.eval(&[("x", 2.0)]).unwrap() - 1.5e-3 / 4.0).abs() < 1e-18);
        let e = Expr::parse("x^(3.0/2.0)").unwrap();
        assert_eq!(e, pow(var("x"), 1.5));
    }

    #[test]
    fn symbolic_exponent_is_rejected() {
        let e = Expr::parse("x^(y)");
        assert!(e.is_err());
        let msg = e.unwrap_err();
        assert!(msg.message.contains("constant"), "{msg}");
    }

    #[test]
    fn error_offsets_point_at_the_problem() {
        let e = Expr::parse("x + $").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = Expr::parse("x + ").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = Expr::parse("frob(x)").unwrap_err();
        assert_eq!(e.offset, 4); // points at the opening paren of the call
        let e = Expr::parse("x + y) + z").unwrap_err();
        assert_eq!(e.offset, 5);
    }

    #[test]
    fn variable_allowlist_is_enforced() {
        assert!(Expr::parse_with_vars("a*t + x", &["t", "x", "a"]).is_ok());
        let e = Expr::parse_with_vars("a*t + y", &["t", "x", "a"]).unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(e.message.contains("unknown variable `y`"));
    }

    #[test]
    fn identifier_starting_with_e_after_digits_is_not_an_exponent() {
        // `2.0e` with no digits after must not swallow the `e` of `exp`.
        let e = Expr::parse("2.0*exp(x)").unwrap();
        assert!((e.eval(&[("x", 1.0)]).unwrap() - 2.0 * 1.0f64.exp()).abs() < 1e-12);
    }
}
