//! Printing in the input grammar, so `parse(print(e))` round-trips.

use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, SUM, f)
    }
}

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Number(n) => {
            let q = n.exact();
            if q.is_integer() && !q.is_negative() {
                ATOM
            } else {
                PRODUCT
            }
        }
        Node::Var(_) | Node::Param(_) | Node::Call(..) => ATOM,
        Node::Power(_, r) if *r.numer() < 0 => PRODUCT,
        Node::Power(..) => POWER,
        Node::Neg(_) => UNARY,
        Node::Product(_) => PRODUCT,
        Node::Sum(_) => SUM,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut impl Write) -> fmt::Result {
    if precedence(e) < min {
        f.write_char('(')?;
        write_node(e, f)?;
        f.write_char(')')
    } else {
        write_node(e, f)
    }
}

fn write_rational(q: &BigRational, f: &mut impl Write) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Split a leading sign off a term: returns `(negative, magnitude)`.
fn split_sign(e: &Expr) -> (bool, Expr) {
    match e.node() {
        Node::Number(n) if n.exact().is_negative() => (true, Expr::rational(-n.exact().clone())),
        Node::Neg(a) => (true, a.clone()),
        Node::Product(fs) => match fs[0].as_number() {
            Some(q) if q.is_negative() => {
                let mut rest = fs.clone();
                let q = -q.clone();
                if q.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::rational(q);
                }
                (true, Expr::product(rest))
            }
            _ => (false, e.clone()),
        },
        _ => (false, e.clone()),
    }
}

fn write_node(e: &Expr, f: &mut impl Write) -> fmt::Result {
    match e.node() {
        Node::Number(n) => write_rational(n.exact(), f),
        Node::Var(v) => write!(f, "{v}"),
        Node::Param(p) => f.write_str(p),
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_prec(a, SUM, f)?;
            f.write_char(')')
        }
        Node::Neg(a) => {
            f.write_char('-')?;
            write_prec(a, POWER, f)
        }
        Node::Power(_, r) if *r.numer() < 0 => write_product(e, f),
        Node::Power(b, r) => {
            write_prec(b, ATOM, f)?;
            if r.is_integer() && *r.numer() >= 0 {
                write!(f, "^{}", r.numer())
            } else if r.is_integer() {
                write!(f, "^({})", r.numer())
            } else {
                write!(f, "^({}/{})", r.numer(), r.denom())
            }
        }
        Node::Sum(ts) => {
            // Constants are printed last: `x1 + 1`.
            let (consts, mut ts): (Vec<&Expr>, Vec<&Expr>) =
                ts.iter().partition(|t| matches!(t.node(), Node::Number(_)));
            ts.extend(consts);
            for (i, t) in ts.into_iter().enumerate() {
                if i == 0 {
                    write_prec(t, SUM, f)?;
                    continue;
                }
                let (negative, magnitude) = split_sign(t);
                f.write_str(if negative { " - " } else { " + " })?;
                write_prec(&magnitude, PRODUCT, f)?;
            }
            Ok(())
        }
        Node::Product(_) => write_product(e, f),
    }
}

fn write_product(e: &Expr, f: &mut impl Write) -> fmt::Result {
    let (negative, magnitude) = split_sign(e);
    let factors = match magnitude.node() {
        Node::Product(fs) => fs.clone(),
        _ => vec![magnitude.clone()],
    };
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    for x in &factors {
        match x.node() {
            Node::Number(q) if !q.exact().is_negative() => {
                let q = q.exact();
                if !q.numer().is_one() || factors.len() == 1 {
                    num.push(q.numer().to_string());
                }
                if !q.denom().is_one() {
                    den.push(q.denom().to_string());
                }
            }
            Node::Power(b, r) if *r.numer() < 0 => {
                let inverse = if *r.numer() == -1 && r.is_integer() {
                    b.clone()
                } else {
                    Expr::pow(b.clone(), -*r)
                };
                let mut s = String::new();
                write_prec(&inverse, POWER, &mut s)?;
                den.push(s);
            }
            _ => {
                let mut s = String::new();
                write_prec(x, POWER, &mut s)?;
                num.push(s);
            }
        }
    }
    if negative {
        f.write_char('-')?;
    }
    if num.is_empty() {
        f.write_char('1')?;
    } else {
        f.write_str(&num.join("*"))?;
    }
    match den.len() {
        0 => Ok(()),
        1 => write!(f, "/{}", den[0]),
        _ => write!(f, "/({})", den.join("*")),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{equal_randomized, parse_expression, simplify, RandomizedCheck};

    fn show(s: &str) -> String {
        simplify(&parse_expression(s, 2, 3).unwrap()).to_string()
    }

    #[test]
    fn readable_forms() {
        assert_eq!(show("omega^2*y2_1/12*4"), "omega^2*y2_1/3");
        assert_eq!(show("-5*y2_1^2"), "-5*y2_1^2");
        assert_eq!(show("x1 - y1_1"), "x1 - y1_1");
        assert_eq!(show("1/x1"), "1/x1");
        assert_eq!(show("-3/4"), "-3/4");
        assert_eq!(show("y1_1^2/x1"), "y1_1^2/x1");
        assert_eq!(show("x1^(1/2)"), "x1^(1/2)");
        assert_eq!(show("2/(x1 + 1)^2"), "2/(x1 + 1)^2");
    }

    #[test]
    fn round_trips_through_parser() {
        for s in [
            "x1/(3*y1_2^2) - 2*sin(x2)^(-3)",
            "(x1 + 1)^(-1/2)*exp(-y1_1) + 7/9",
            "-(x1 - y2_2)^3*omega",
            "tan(x1/2) - log(1 + x2^2)",
        ] {
            let e = parse_expression(s, 2, 3).unwrap();
            let back = parse_expression(&e.to_string(), 2, 3).unwrap();
            assert!(equal_randomized(&e, &back, &RandomizedCheck::default()).unwrap(), "{s}");
            let canon = simplify(&e);
            let back = parse_expression(&canon.to_string(), 2, 3).unwrap();
            assert_eq!(simplify(&back), canon, "{s}");
        }
    }
}
