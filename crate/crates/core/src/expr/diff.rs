use num_traits::One;

use super::{simplify, Expr, Exponent, Func, Node, VarId};

/// Exact partial derivative `∂e/∂v`, simplified.
pub fn differentiate(e: &Expr, v: VarId) -> Expr {
    match raw_derivative(e, v) {
        Some(d) => simplify(&d),
        None => Expr::zero(),
    }
}

/// Unsimplified derivative; `None` stands for an exact zero.
pub(crate) fn raw_derivative(e: &Expr, v: VarId) -> Option<Expr> {
    match e.node() {
        Node::Number(_) | Node::Param(_) => None,
        Node::Var(w) => (*w == v).then(Expr::one),
        Node::Sum(xs) => {
            let ds: Vec<Expr> = xs.iter().filter_map(|x| raw_derivative(x, v)).collect();
            (!ds.is_empty()).then(|| Expr::sum(ds))
        }
        Node::Product(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                if let Some(d) = raw_derivative(x, v) {
                    let mut factors = xs.clone();
                    factors[i] = d;
                    terms.push(Expr::product(factors));
                }
            }
            (!terms.is_empty()).then(|| Expr::sum(terms))
        }
        Node::Neg(a) => raw_derivative(a, v).map(Expr::neg),
        Node::Power(b, r) => {
            let db = raw_derivative(b, v)?;
            let r_minus_one = *r - Exponent::one();
            Some(Expr::product(vec![
                Expr::frac(*r.numer(), *r.denom()),
                Expr::pow(b.clone(), r_minus_one),
                db,
            ]))
        }
        Node::Call(f, a) => {
            let da = raw_derivative(a, v)?;
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, a.clone()),
                Func::Cos => Expr::neg(Expr::call(Func::Sin, a.clone())),
                Func::Tan => Expr::powi(Expr::call(Func::Cos, a.clone()), -2),
                Func::Exp => e.clone(),
                Func::Log => Expr::powi(a.clone(), -1),
                Func::Sqrt => Expr::product(vec![
                    Expr::frac(1, 2),
                    Expr::pow(a.clone(), Exponent::new(-1, 2)),
                ]),
            };
            Some(outer * da)
        }
    }
}
