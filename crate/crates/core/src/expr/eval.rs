use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Expr, ExprError, Func, Node, VarId};

/// A numeric point of the order-k tangent bundle together with parameter
/// values.
///
/// Coordinates are stored level-major: `x^1..x^n`, then `y^(1)1..y^(1)n`,
/// and so on up to level `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    n: usize,
    k: usize,
    coords: Vec<f64>,
    params: Arc<BTreeMap<String, f64>>,
}

impl JetPoint {
    pub fn zeros(n: usize, k: usize) -> Self {
        JetPoint {
            n,
            k,
            coords: vec![0.0; n * (k + 1)],
            params: Arc::default(),
        }
    }

    /// Build from a flat coordinate vector of length `n·(k+1)`.
    pub fn from_coords(n: usize, k: usize, coords: Vec<f64>) -> Option<Self> {
        (coords.len() == n * (k + 1)).then(|| JetPoint {
            n,
            k,
            coords,
            params: Arc::default(),
        })
    }

    /// Build from the base point and the jet levels `y^(1)..y^(k)`.
    pub fn from_levels(x: &[f64], y: &[Vec<f64>]) -> Option<Self> {
        let n = x.len();
        if y.iter().any(|level| level.len() != n) {
            return None;
        }
        let mut coords = x.to_vec();
        y.iter().for_each(|level| coords.extend_from_slice(level));
        JetPoint::from_coords(n, y.len(), coords)
    }

    pub fn with_params(mut self, params: Arc<BTreeMap<String, f64>>) -> Self {
        self.params = params;
        self
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        Arc::make_mut(&mut self.params).insert(name.to_string(), value);
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn params(&self) -> &Arc<BTreeMap<String, f64>> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    fn slot(&self, v: VarId) -> Option<usize> {
        let (level, index) = (v.level() as usize, v.index() as usize);
        (index >= 1 && index <= self.n && level <= self.k).then(|| level * self.n + index - 1)
    }

    pub fn get(&self, v: VarId) -> Option<f64> {
        self.slot(v).map(|s| self.coords[s])
    }

    /// Panics if `v` is outside the point's dimension or order.
    pub fn set(&mut self, v: VarId, value: f64) {
        let s = self.slot(v).expect("coordinate out of range");
        self.coords[s] = value;
    }

    /// The level-`level` block (level 0 is `x`).
    pub fn level(&self, level: usize) -> &[f64] {
        &self.coords[level * self.n..(level + 1) * self.n]
    }

    /// A point is regular when `y^(1) ≠ 0` (the slit bundle).
    pub fn is_regular(&self) -> bool {
        self.k == 0 || self.level(1).iter().any(|v| *v != 0.0)
    }
}

/// Evaluate in IEEE double precision.
pub fn evaluate(e: &Expr, p: &JetPoint) -> Result<f64, ExprError> {
    match e.node() {
        Node::Number(n) => Ok(n.approx()),
        Node::Var(v) => p.get(*v).ok_or(ExprError::UnboundVariable(*v)),
        Node::Param(name) => p
            .param(name)
            .ok_or_else(|| ExprError::UnboundParameter(name.to_string())),
        Node::Sum(xs) => xs.iter().try_fold(0.0, |acc, x| Ok(acc + evaluate(x, p)?)),
        Node::Product(xs) => xs.iter().try_fold(1.0, |acc, x| Ok(acc * evaluate(x, p)?)),
        Node::Neg(a) => Ok(-evaluate(a, p)?),
        Node::Power(b, r) => {
            let base = evaluate(b, p)?;
            let value = if r.is_integer() {
                if base == 0.0 && *r.numer() < 0 {
                    return Err(ExprError::Domain(format!("division by zero in {e}")));
                }
                base.powi(i32::try_from(*r.numer()).unwrap_or(i32::MAX))
            } else {
                let exponent = *r.numer() as f64 / *r.denom() as f64;
                if base < 0.0 {
                    if r.denom() % 2 == 0 {
                        return Err(ExprError::Domain(format!("even root of {base} in {e}")));
                    }
                    let sign = if r.numer() % 2 == 0 { 1.0 } else { -1.0 };
                    sign * (-base).powf(exponent)
                } else if base == 0.0 && *r.numer() < 0 {
                    return Err(ExprError::Domain(format!("division by zero in {e}")));
                } else {
                    base.powf(exponent)
                }
            };
            finite(value, e)
        }
        Node::Call(f, a) => {
            let x = evaluate(a, p)?;
            let value = match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Log if x <= 0.0 => {
                    return Err(ExprError::Domain(format!("log of {x}")));
                }
                Func::Log => x.ln(),
                Func::Sqrt if x < 0.0 => {
                    return Err(ExprError::Domain(format!("sqrt of {x}")));
                }
                Func::Sqrt => x.sqrt(),
            };
            finite(value, e)
        }
    }
}

fn finite(value: f64, e: &Expr) -> Result<f64, ExprError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::Domain(format!("non-finite value in {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    #[test]
    fn evaluates_jet_square() {
        let mut pt = JetPoint::zeros(1, 2);
        pt.set(VarId::y(2, 1), 3.0);
        let e = parse_expression("y2_1^2", 1, 2).unwrap();
        assert_eq!(evaluate(&e, &pt).unwrap(), 9.0);
    }

    #[test]
    fn evaluates_parameters() {
        let mut pt = JetPoint::zeros(1, 3);
        pt.set(VarId::y(2, 1), 6.0);
        pt.set_param("omega", 2.0);
        let e = parse_expression("omega^2*y2_1/12", 1, 3).unwrap();
        assert!((evaluate(&e, &pt).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_symbols_are_errors() {
        let pt = JetPoint::zeros(1, 1);
        let e = parse_expression("x2", 2, 1).unwrap();
        assert_eq!(
            evaluate(&e, &pt),
            Err(ExprError::UnboundVariable(VarId::x(2)))
        );
        let e = parse_expression("omega", 1, 1).unwrap();
        assert!(matches!(
            evaluate(&e, &pt),
            Err(ExprError::UnboundParameter(_))
        ));
    }

    #[test]
    fn domain_errors() {
        let mut pt = JetPoint::zeros(1, 1);
        pt.set(VarId::x(1), -1.0);
        for s in ["log(x1)", "sqrt(x1)", "1/(x1 + 1)", "x1^(1/2)"] {
            let e = parse_expression(s, 1, 1).unwrap();
            assert!(matches!(evaluate(&e, &pt), Err(ExprError::Domain(_))), "{s}");
        }
        let e = parse_expression("x1^(1/3)", 1, 1).unwrap();
        assert!((evaluate(&e, &pt).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn regularity_follows_first_jet_level() {
        let mut pt = JetPoint::zeros(2, 2);
        assert!(!pt.is_regular());
        pt.set(VarId::y(2, 1), 1.0);
        assert!(!pt.is_regular());
        pt.set(VarId::y(1, 2), 0.5);
        assert!(pt.is_regular());
    }

    #[test]
    fn from_levels_layout() {
        let pt = JetPoint::from_levels(&[1.0, 2.0], &[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(pt.get(VarId::x(2)), Some(2.0));
        assert_eq!(pt.get(VarId::y(1, 1)), Some(3.0));
        assert_eq!(pt.get(VarId::y(2, 2)), Some(6.0));
        assert_eq!(pt.get(VarId::y(3, 1)), None);
        assert!(JetPoint::from_levels(&[1.0], &[vec![1.0, 2.0]]).is_none());
    }
}
