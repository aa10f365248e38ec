//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (("+"|"-") term)*
//! term  := unary (("*"|"/") unary)*
//! unary := "-" unary | pow
//! pow   := atom ("^" atom)?
//! atom  := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! `xI` is the base coordinate `x^I`, `yA_I` the jet coordinate `y^(A)I`;
//! other identifiers are parameters, except the function names
//! `sin cos tan exp log sqrt`, which must be applied.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, ToPrimitive, Zero};

use super::{simplify, Expr, ExprError, Exponent, Func, VarId};

/// Parse `text` for a model of dimension `n` whose jet variables go up to
/// level `k_max`.
pub fn parse_expression(text: &str, n: usize, k_max: usize) -> Result<Expr, ExprError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        n,
        k_max,
    };
    let e = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
    k_max: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(Expr::neg(self.term()?));
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(Expr::powi(self.unary()?, -1));
            } else {
                return Ok(Expr::product(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.pow()
        }
    }

    fn pow(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = simplify(&self.atom()?);
        let r = exponent
            .as_number()
            .and_then(|q| Some(Exponent::new(q.numer().to_i64()?, q.denom().to_i64()?)))
            .ok_or(ExprError::Syntax {
                offset: at,
                message: "exponent must be a rational constant".into(),
            })?;
        Ok(Expr::pow(base, r))
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("expected a number, identifier, or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let int_part = self.digits().to_string();
        let mut frac_part = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = self.digits().to_string();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exp10: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            let negative = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let digits = self.digits();
            if digits.is_empty() {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
            let v: i64 = digits
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            exp10 = if negative { -v } else { v };
        }
        let mantissa: BigInt = format!("{int_part}{frac_part}")
            .parse()
            .unwrap_or_else(|_| BigInt::zero());
        let shift = exp10 - frac_part.len() as i64;
        if shift.abs() > 4000 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "number exponent out of range".into(),
            });
        }
        let ten = BigInt::from(10);
        let value = if shift >= 0 {
            BigRational::from_integer(mantissa * ten.pow(shift as u32))
        } else {
            BigRational::new(mantissa, ten.pow((-shift) as u32))
        };
        Ok(Expr::rational(value))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownFunction {
                name: name.to_string(),
                offset: start,
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(Expr::call(func, arg));
        }
        if Func::from_name(name).is_some() {
            return Err(ExprError::Syntax {
                offset: start,
                message: format!("function `{name}` needs an argument"),
            });
        }
        match classify(name) {
            Ident::Param => Ok(Expr::param(name)),
            Ident::Malformed => Err(ExprError::Syntax {
                offset: start,
                message: format!("malformed variable `{name}` (use xI or yA_I)"),
            }),
            Ident::Var(v) => {
                let range_err = |reason: String| ExprError::VariableRange {
                    var: name.to_string(),
                    offset: start,
                    reason,
                };
                let index = v.index() as usize;
                if index < 1 || index > self.n {
                    return Err(range_err(format!(
                        "index {index} not in 1..={}",
                        self.n
                    )));
                }
                let level = v.level() as usize;
                if matches!(v, VarId::Jet { .. }) && (level < 1 || level > self.k_max) {
                    return Err(range_err(format!(
                        "level {level} exceeds order {}",
                        self.k_max
                    )));
                }
                Ok(Expr::var(v))
            }
        }
    }
}

enum Ident {
    Var(VarId),
    Param,
    Malformed,
}

fn classify(name: &str) -> Ident {
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let num = |s: &str| s.parse::<u32>().ok();
    let looks_like_var = |rest: &str| rest.bytes().next().is_some_and(|b| b.is_ascii_digit());
    if let Some(rest) = name.strip_prefix('x') {
        if !looks_like_var(rest) {
            return Ident::Param;
        }
        return match (all_digits(rest), num(rest)) {
            (true, Some(i)) => Ident::Var(VarId::Base(i)),
            _ => Ident::Malformed,
        };
    }
    if let Some(rest) = name.strip_prefix('y') {
        if !looks_like_var(rest) {
            return Ident::Param;
        }
        return match rest.split_once('_') {
            Some((a, i)) if all_digits(a) && all_digits(i) => match (num(a), num(i)) {
                (Some(level), Some(index)) => Ident::Var(VarId::Jet { level, index }),
                _ => Ident::Malformed,
            },
            _ => Ident::Malformed,
        };
    }
    Ident::Param
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn jet_square() {
        let e = parse_expression("y2_1^2", 1, 2).unwrap();
        assert_eq!(e, Expr::powi(Expr::y(2, 1), 2));
    }

    #[test]
    fn spinning_particle_coefficient() {
        let e = parse_expression("omega^2*y2_1/12", 1, 3).unwrap();
        match e.node() {
            Node::Product(fs) => {
                assert_eq!(fs[0], Expr::powi(Expr::param("omega"), 2));
                assert_eq!(fs[1], Expr::y(2, 1));
                assert_eq!(fs[2], Expr::powi(Expr::int(12), -1));
            }
            other => panic!("expected product, got {other:?}"),
        }
    }

    #[test]
    fn level_above_order_is_rejected() {
        let err = parse_expression("y4_1", 1, 3).unwrap_err();
        assert!(
            matches!(err, ExprError::VariableRange { ref reason, .. } if reason.contains("level 4 exceeds order 3"))
        );
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(
            parse_expression("x3", 2, 1),
            Err(ExprError::VariableRange { .. })
        ));
        assert!(matches!(
            parse_expression("y1_0", 2, 1),
            Err(ExprError::VariableRange { .. })
        ));
    }

    #[test]
    fn syntax_errors_report_offsets() {
        assert_eq!(
            parse_expression("x1 + * 2", 1, 1),
            Err(ExprError::Syntax {
                offset: 5,
                message: "expected a number, identifier, or `(`".into()
            })
        );
        assert!(matches!(
            parse_expression("(x1", 1, 1),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse_expression("x1^x1", 1, 1),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse_expression("y2", 1, 1),
            Err(ExprError::Syntax { .. })
        ));
    }

    #[test]
    fn unknown_function() {
        assert_eq!(
            parse_expression("2*cosh(x1)", 1, 1),
            Err(ExprError::UnknownFunction {
                name: "cosh".into(),
                offset: 2
            })
        );
    }

    #[test]
    fn decimal_literals_are_exact() {
        let e = parse_expression("0.3", 1, 1).unwrap();
        assert_eq!(e, Expr::frac(3, 10));
        let e = parse_expression("2.5e-3", 1, 1).unwrap();
        assert_eq!(e, Expr::frac(1, 400));
        let e = parse_expression("1E2", 1, 1).unwrap();
        assert_eq!(e, Expr::int(100));
    }

    #[test]
    fn parenthesized_exponents() {
        let e = parse_expression("x1^(-1/2)", 1, 1).unwrap();
        assert_eq!(e, Expr::pow(Expr::x(1), Exponent::new(-1, 2)));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = simplify(&parse_expression("-x1^2", 1, 1).unwrap());
        assert_eq!(e, simplify(&parse_expression("-(x1^2)", 1, 1).unwrap()));
    }
}
