//! Rational-function expressions in one variable.
//!
//! Grammar, loosest first: binary `+ -`, then `* /`, then unary `-`, then `^` with an
//! integer exponent. Binary operators associate to the left. Literals are unsigned
//! integers; `5/48` is a quotient that the parser folds into one rational literal.

use std::fmt;

use spectral_core::algebra::rational::int;
use spectral_core::algebra::{Rational, RationalFunction};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Num(Rational),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        offset,
        message: message.into(),
    })
}

/// Parses `text` in the variable `var` and evaluates it.
pub fn parse_expression(text: &str, var: char) -> Result<RationalFunction, ExprError> {
    parse_with_ast(text, var).map(|(_, f)| f)
}

/// Parses `text`, returning the tree and its value.
pub fn parse_with_ast(text: &str, var: char) -> Result<(Expr, RationalFunction), ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        var: var as u8,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return err(p.pos, "empty expression");
    }
    let out = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return err(p.pos, format!("unexpected '{}'", p.src[p.pos] as char));
    }
    Ok(out)
}

type Node = (Expr, RationalFunction);

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var: u8,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut left = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let right = self.product()?;
            left = if op == b'+' {
                (
                    Expr::Add(Box::new(left.0), Box::new(right.0)),
                    &left.1 + &right.1,
                )
            } else {
                (
                    Expr::Sub(Box::new(left.0), Box::new(right.0)),
                    &left.1 - &right.1,
                )
            };
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut left = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            let at = self.pos;
            self.pos += 1;
            let right = self.unary()?;
            left = if op == b'*' {
                (
                    Expr::Mul(Box::new(left.0), Box::new(right.0)),
                    &left.1 * &right.1,
                )
            } else {
                if right.1.is_zero() {
                    return err(at, "division by the zero polynomial");
                }
                let value = left.1.div(&right.1).expect("nonzero divisor");
                let tree = match (&left.0, &right.0) {
                    (Expr::Num(a), Expr::Num(b)) => Expr::Num(a / b),
                    _ => Expr::Div(Box::new(left.0), Box::new(right.0)),
                };
                (tree, value)
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let (e, v) = self.unary()?;
            let tree = match e {
                Expr::Num(q) => Expr::Num(-q),
                e => Expr::Neg(Box::new(e)),
            };
            return Ok((tree, -&v));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        self.pos += 1;
        let negative = self.peek() == Some(b'-');
        if negative {
            self.pos += 1;
        }
        let digits_at = self.pos;
        let magnitude = self.integer()?;
        let e = i32::try_from(magnitude)
            .ok()
            .filter(|e| *e <= 1000)
            .ok_or_else(|| ExprError {
                offset: digits_at,
                message: "exponent too large".into(),
            })?;
        let e = if negative { -e } else { e };
        if e < 0 && base.1.is_zero() {
            return err(at, "division by the zero polynomial");
        }
        let value = base.1.pow(e).expect("nonzero base");
        Ok((Expr::Pow(Box::new(base.0), e), value))
    }

    fn integer(&mut self) -> Result<u64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return err(start, "expected an integer exponent");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii digits")
            .parse()
            .or_else(|_| err(start, "exponent too large"))
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => err(self.pos, "unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return err(self.pos, "expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                let q: Rational = Rational::from_integer(text.parse().expect("digits"));
                Ok((Expr::Num(q.clone()), RationalFunction::constant(q)))
            }
            Some(c) if c == self.var => {
                let at = self.pos;
                self.pos += 1;
                if self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    return err(at, "unknown identifier");
                }
                Ok((Expr::Var, RationalFunction::z()))
            }
            Some(c) if c.is_ascii_alphabetic() => err(self.pos, "unknown identifier"),
            Some(c) => err(self.pos, format!("unexpected '{}'", c as char)),
        }
    }
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            // A fraction prints as a quotient, a negative integer as a negation.
            Expr::Num(q) if !q.is_integer() => 2,
            Expr::Num(q) if q < &int(0) => 3,
            Expr::Num(_) | Expr::Var => 5,
        }
    }

    /// Value of the tree; `None` on division by zero.
    pub fn eval(&self) -> Option<RationalFunction> {
        Some(match self {
            Expr::Num(q) => RationalFunction::constant(q.clone()),
            Expr::Var => RationalFunction::z(),
            Expr::Neg(e) => -&e.eval()?,
            Expr::Add(a, b) => &a.eval()? + &b.eval()?,
            Expr::Sub(a, b) => &a.eval()? - &b.eval()?,
            Expr::Mul(a, b) => &a.eval()? * &b.eval()?,
            Expr::Div(a, b) => a.eval()?.div(&b.eval()?).ok()?,
            Expr::Pow(a, e) => a.eval()?.pow(*e).ok()?,
        })
    }

    /// Renders with `var` as the variable name and only the parentheses the grammar needs.
    pub fn render(&self, var: char) -> String {
        let mut out = String::new();
        self.write(&mut out, var);
        out
    }

    fn write(&self, out: &mut String, var: char) {
        let child = |e: &Expr, min: u8, out: &mut String| {
            if e.precedence() < min {
                out.push('(');
                e.write(out, var);
                out.push(')');
            } else {
                e.write(out, var);
            }
        };
        match self {
            // `-p/q` parses as `(-p)/q` and folds back into one literal.
            Expr::Num(q) => out.push_str(&q.to_string()),
            Expr::Var => out.push(var),
            Expr::Neg(e) => {
                out.push('-');
                child(e, 3, out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                child(a, 1, out);
                out.push_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                });
                child(b, 2, out);
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                child(a, 2, out);
                out.push_str(if matches!(self, Expr::Mul(..)) {
                    "*"
                } else {
                    "/"
                });
                child(b, 3, out);
            }
            Expr::Pow(a, e) => {
                child(a, 5, out);
                out.push_str(&format!("^{e}"));
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render('z'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spectral_core::algebra::rational::rat;

    fn value(text: &str) -> RationalFunction {
        parse_expression(text, 'z').unwrap()
    }

    #[test]
    fn precedence_and_association() {
        let z = RationalFunction::z();
        assert_eq!(value("-z^2"), -&(&z * &z));
        assert_eq!(value("2^-1"), RationalFunction::constant(rat(1, 2)));
        assert_eq!(value("1/2/3"), RationalFunction::constant(rat(1, 6)));
        assert_eq!(value("8 - 2 - 1"), RationalFunction::constant(int(5)));
        assert_eq!(value("2*z^2 - -z"), value("z + 2*z*z"));
        assert_eq!(
            parse_with_ast("5/48", 'z').unwrap().0,
            Expr::Num(rat(5, 48))
        );
        assert_eq!(
            parse_with_ast("-(5)/48", 'z').unwrap().0,
            Expr::Num(rat(-5, 48))
        );
    }

    #[test]
    fn errors_carry_offsets() {
        let e = |t: &str| parse_expression(t, 'z').unwrap_err();
        assert_eq!(e("1/(1-z^2").offset, 8);
        assert_eq!(e("").offset, 0);
        assert_eq!(e("z + y").offset, 4);
        assert_eq!(e("z^1.5").offset, 3);
        assert_eq!(e("z^z").offset, 2);
        assert_eq!(e("1/(z-z)").message, "division by the zero polynomial");
        assert_eq!(e("1/(z-z)").offset, 1);
        assert_eq!(e("(z-z)^-2").offset, 5);
        assert_eq!(e("z)").offset, 1);
        assert_eq!(e("zz").offset, 0);
    }

    #[test]
    fn renders_minimal_parentheses() {
        let (ast, _) = parse_with_ast("(z^2)^3 - (-z)^2 + 5/48*z/(1 - z)", 'z').unwrap();
        assert_eq!(ast.to_string(), "(z^2)^3 - (-z)^2 + 5/48*z/(1 - z)");
    }
}
