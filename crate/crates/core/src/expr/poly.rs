//! Canonical sum-of-monomials normal form.
//!
//! A term is an exact rational coefficient times a product of atoms raised to
//! rational exponents. Atoms are variables, parameters, function calls with
//! simplified arguments, and opaque bases (multi-term sums under a negative
//! or fractional power). Products of sums are distributed, so polynomial
//! identities in the atoms reduce to structural equality.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{Expr, Exponent, Func, Node};

/// Largest positive integer power of a multi-term sum that is expanded.
const EXPAND_LIMIT: i64 = 12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Monomial(Vec<(Expr, Exponent)>);

impl Monomial {
    fn atom(base: Expr, exponent: Exponent) -> Self {
        Monomial(vec![(base, exponent)])
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    fn powi(&self, n: i64) -> Monomial {
        Monomial(
            self.0
                .iter()
                .map(|(b, e)| (b.clone(), *e * Exponent::from_integer(n)))
                .collect(),
        )
    }

    fn needs_normalizing(&self) -> bool {
        self.0.iter().any(|(b, e)| match b.node() {
            Node::Number(_) => e.is_integer(),
            Node::Sum(_) => e.is_integer() && *e.numer() > 0,
            _ => false,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::default(), c);
        p
    }

    fn atom(base: Expr, exponent: Exponent) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::atom(base, exponent), BigRational::one());
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add_assign(&mut self, other: Poly) {
        if self.terms.len() < other.terms.len() {
            let mine = std::mem::replace(self, other);
            for (m, c) in mine.terms {
                self.add_term(m, c);
            }
        } else {
            for (m, c) in other.terms {
                self.add_term(m, c);
            }
        }
    }

    fn scale(mut self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        for v in self.terms.values_mut() {
            *v *= c;
        }
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    fn single_term(&self) -> Option<(&Monomial, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn powi(&self, n: i64) -> Poly {
        if n == 0 {
            return Poly::constant(BigRational::one());
        }
        if self.is_zero() {
            return if n > 0 {
                Poly::zero()
            } else {
                Poly::atom(Expr::zero(), Exponent::from_integer(n))
            };
        }
        if let Some((m, c)) = self.single_term() {
            let mut p = Poly::zero();
            p.add_term(m.powi(n), rational_powi(c, n));
            return p;
        }
        if (1..=EXPAND_LIMIT).contains(&n) {
            let mut acc = self.clone();
            for _ in 1..n {
                acc = acc.mul(self);
            }
            return acc;
        }
        Poly::atom(self.to_expr(), Exponent::from_integer(n))
    }

    fn pow(&self, r: Exponent) -> Poly {
        if r.is_integer() {
            return self.powi(*r.numer());
        }
        if self.is_zero() && *r.numer() > 0 {
            return Poly::zero();
        }
        if let Some((m, c)) = self.single_term() {
            if c.is_one() && m.0.len() == 1 && m.0[0].1.is_one() {
                return Poly::atom(m.0[0].0.clone(), r);
            }
            if m.0.is_empty() {
                if let Some(root) = exact_root(c, r) {
                    return Poly::constant(root);
                }
            }
        }
        Poly::atom(self.to_expr(), r)
    }

    /// Fold numeric atoms with integer exponents into coefficients and expand
    /// sums whose exponents merged to positive integers.
    fn normalize(self) -> Poly {
        if !self.terms.keys().any(Monomial::needs_normalizing) {
            return self;
        }
        let mut out = Poly::zero();
        for (m, c) in self.terms {
            if !m.needs_normalizing() {
                out.add_term(m, c);
                continue;
            }
            let mut acc = Poly::constant(c);
            let mut rest = Vec::new();
            for (b, e) in m.0 {
                let fold = match b.node() {
                    Node::Number(_) => e.is_integer(),
                    Node::Sum(_) => e.is_integer() && *e.numer() > 0,
                    _ => false,
                };
                if fold {
                    acc = acc.mul(&to_poly(&b).powi(*e.numer()));
                } else {
                    rest.push((b, e));
                }
            }
            out.add_assign(acc.mul(&Poly {
                terms: std::iter::once((Monomial(rest), BigRational::one())).collect(),
            }));
        }
        out.normalize()
    }

    pub(crate) fn to_expr(&self) -> Expr {
        let terms: Vec<Expr> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut factors: Vec<Expr> = m
                    .0
                    .iter()
                    .map(|(b, e)| {
                        if e.is_one() {
                            b.clone()
                        } else {
                            Expr::pow(b.clone(), *e)
                        }
                    })
                    .collect();
                if factors.is_empty() || !c.is_one() {
                    factors.insert(0, Expr::rational(c.clone()));
                }
                Expr::product(factors)
            })
            .collect();
        Expr::sum(terms)
    }
}

fn rational_powi(c: &BigRational, n: i64) -> BigRational {
    let e = i32::try_from(n).expect("exponent out of range");
    num_traits::Pow::pow(c, e)
}

/// Exact `c^r` for a non-integer rational `r`, when the root is rational.
fn exact_root(c: &BigRational, r: Exponent) -> Option<BigRational> {
    if c.is_negative() {
        return None;
    }
    let den = u32::try_from(*r.denom()).ok()?;
    let root = |v: &BigInt| -> Option<BigInt> {
        let s = v.nth_root(den);
        (num_traits::Pow::pow(&s, den) == *v).then_some(s)
    };
    let base = BigRational::new(root(c.numer())?, root(c.denom())?);
    Some(rational_powi(&base, *r.numer()))
}

/// Exact value of a function at a rational argument, when it is rational.
fn fold_call(func: Func, arg: &BigRational) -> Option<BigRational> {
    let zero = arg.is_zero();
    match func {
        Func::Sin | Func::Tan if zero => Some(BigRational::zero()),
        Func::Cos | Func::Exp if zero => Some(BigRational::one()),
        Func::Log if arg.is_one() => Some(BigRational::zero()),
        _ => None,
    }
}

/// Split `e` into base and exponent, collapsing `(b^r)^n` to `b^(r·n)` for
/// integer `n`.
fn power_parts(e: &Expr) -> (&Expr, Exponent) {
    match e.node() {
        Node::Power(b, r) if r.is_integer() => {
            let (inner, s) = power_parts(b);
            (inner, s * *r)
        }
        Node::Power(b, r) => (b, *r),
        _ => (e, Exponent::one()),
    }
}

pub(crate) fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Number(n) => Poly::constant(n.exact().clone()),
        Node::Var(_) | Node::Param(_) => Poly::atom(e.clone(), Exponent::one()),
        Node::Sum(xs) => {
            let mut acc = Poly::zero();
            for x in xs {
                acc.add_assign(to_poly(x));
            }
            acc
        }
        Node::Product(xs) => {
            // Powers of the same multi-term sum are merged before expansion,
            // so that `(1 + x)^2 * (1 + x)^(-1)` collapses to `1 + x`.
            let mut acc = Poly::constant(BigRational::one());
            let mut sum_powers: BTreeMap<Expr, Exponent> = BTreeMap::new();
            for x in xs {
                let (base, r) = power_parts(x);
                let bp = to_poly(base).normalize();
                if bp.terms.len() > 1 {
                    *sum_powers.entry(bp.to_expr()).or_insert_with(Exponent::zero) += r;
                    continue;
                }
                acc = acc.mul(&bp.pow(r));
                if acc.is_zero() {
                    return acc;
                }
            }
            for (base, r) in sum_powers {
                if !r.is_zero() {
                    acc = acc.mul(&to_poly(&base).pow(r));
                }
            }
            acc
        }
        Node::Neg(a) => to_poly(a).scale(&-BigRational::one()),
        Node::Power(..) => {
            let (b, r) = power_parts(e);
            to_poly(b).pow(r)
        }
        Node::Call(Func::Sqrt, a) => to_poly(a).pow(Exponent::new(1, 2)),
        Node::Call(f, a) => {
            let arg = simplify(a);
            match arg.as_number().and_then(|q| fold_call(*f, q)) {
                Some(v) => Poly::constant(v),
                None => Poly::atom(Expr::call(*f, arg), Exponent::one()),
            }
        }
    }
}

/// Bring an expression into canonical form: constants folded, sums and
/// products flattened, products distributed over sums, like terms collected
/// over exact rationals, and terms ordered canonically. The value is
/// preserved wherever the original expression is defined.
///
/// No trigonometric or logarithmic identities are applied.
pub fn simplify(e: &Expr) -> Expr {
    to_poly(e).normalize().to_expr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, VarId};

    fn p(s: &str) -> Expr {
        parse_expression(s, 3, 3).unwrap()
    }

    #[test]
    fn zero_absorption() {
        assert_eq!(simplify(&p("x1 + 0*y1_1")), Expr::x(1));
    }

    #[test]
    fn like_terms_cancel() {
        assert!(simplify(&p("2*y2_1^2 + 4*y2_1^2 - 6*y2_1^2")).is_zero());
    }

    #[test]
    fn trig_identity_is_not_applied() {
        let s = simplify(&p("sin(x1)^2 + cos(x1)^2"));
        assert!(!s.is_one());
        assert!(matches!(s.node(), Node::Sum(v) if v.len() == 2));
    }

    #[test]
    fn distributes_and_collects() {
        let a = simplify(&p("(x1 + y1_1)^2"));
        let b = simplify(&p("x1^2 + 2*x1*y1_1 + y1_1^2"));
        assert_eq!(a, b);
    }

    #[test]
    fn exponents_merge() {
        assert!(simplify(&p("x1^2 * x1^(-2)")).is_one());
        assert_eq!(simplify(&p("sqrt(x1)*sqrt(x1)")), Expr::x(1));
        assert_eq!(simplify(&p("sqrt(9/4)")), Expr::frac(3, 2));
        assert_eq!(
            simplify(&p("(x1 + 1)^(-1) * (x1 + 1)^2")),
            simplify(&p("x1 + 1"))
        );
    }

    #[test]
    fn rational_coefficients_stay_exact() {
        let e = simplify(&p("omega^2*y2_1/12*4"));
        assert_eq!(e, simplify(&p("omega^2*y2_1/3")));
        let e = simplify(&p("1/3 + 1/6"));
        assert_eq!(e, Expr::frac(1, 2));
    }

    #[test]
    fn folds_trivial_calls() {
        assert!(simplify(&p("sin(0) + log(1)")).is_zero());
        assert!(simplify(&p("exp(x1 - x1)")).is_one());
    }

    #[test]
    fn is_idempotent_on_mixed_input() {
        for s in [
            "x1/(x1 + y1_1) + sin(x2)^3*cos(x2)",
            "(x1^2 + 1)^(1/2) * exp(y1_1)",
            "y1_1^2/x1 - 2*x1*y1_2",
        ] {
            let once = simplify(&p(s));
            assert_eq!(simplify(&once), once, "{s}");
        }
    }

    #[test]
    fn canonical_term_order_follows_var_order() {
        let e = simplify(&p("y1_1 + x1"));
        match e.node() {
            Node::Sum(ts) => assert_eq!(ts[0], Expr::var(VarId::x(1))),
            _ => panic!("expected a sum"),
        }
    }
}
