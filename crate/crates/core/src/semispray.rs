//! Semisprays of order `k` and the derivations they carry.
//!
//! In jet coordinates `y^(α) = x^(α)/α!` a semispray is the vector field
//!
//! ```text
//! S = y^(1)i ∂/∂x^i + Σ_{α<k} (α+1) y^(α+1)i ∂/∂y^(α)i − (k+1) G^i ∂/∂y^(k)i
//! ```
//!
//! whose integral curves are the lifts of solutions of
//! `x^(k+1)/(k+1)! + G(x, y^(1), …, y^(k)) = 0`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::expr::diff::raw_derivative;
use crate::expr::{evaluate, simplify, Expr, ExprError, JetPoint, VarId};

/// Errors raised when a model does not fit its declared shape.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("expected {expected} coefficient expressions, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("coefficient {coefficient} uses {var}, which exceeds order {k}")]
    Level { coefficient: usize, var: VarId, k: usize },
    #[error("coefficient {coefficient} uses {var}, outside dimension {n}")]
    Index { coefficient: usize, var: VarId, n: usize },
    #[error("dimension and order must be at least 1 (got n={n}, k={k})")]
    Shape { n: usize, k: usize },
    #[error("parameter `{name}` is not declared")]
    UndeclaredParameter { name: String },
}

/// `m!` as an exact rational.
pub fn factorial(m: usize) -> BigRational {
    BigRational::from_integer((1..=m).map(BigInt::from).product())
}

/// `m!` in floating point.
pub fn factorial_f64(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Semispray {
    n: usize,
    k: usize,
    g: Vec<Expr>,
    params: BTreeSet<String>,
}

/// Validate `g` against dimension `n` and order `k`. Parameters used by `g`
/// are declared implicitly.
pub fn make_semispray(n: usize, k: usize, g: Vec<Expr>) -> Result<Semispray, ModelError> {
    if n == 0 || k == 0 {
        return Err(ModelError::Shape { n, k });
    }
    if g.len() != n {
        return Err(ModelError::Arity {
            expected: n,
            found: g.len(),
        });
    }
    let mut params = BTreeSet::new();
    for (i, gi) in g.iter().enumerate() {
        for var in gi.variables() {
            if var.level() as usize > k {
                return Err(ModelError::Level {
                    coefficient: i + 1,
                    var,
                    k,
                });
            }
            if var.index() == 0 || var.index() as usize > n {
                return Err(ModelError::Index {
                    coefficient: i + 1,
                    var,
                    n,
                });
            }
        }
        params.extend(gi.parameters());
    }
    let g = g.iter().map(simplify).collect();
    Ok(Semispray { n, k, g, params })
}

impl Semispray {
    /// Restrict the parameter set to `declared`; fails if `G` uses others.
    pub fn with_declared_parameters<I, T>(mut self, declared: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let declared: BTreeSet<String> = declared.into_iter().map(Into::into).collect();
        if let Some(name) = self.params.difference(&declared).next() {
            return Err(ModelError::UndeclaredParameter { name: name.clone() });
        }
        self.params = declared;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// The coefficients `G^1..G^n`.
    pub fn coefficients(&self) -> &[Expr] {
        &self.g
    }

    pub fn parameters(&self) -> &BTreeSet<String> {
        &self.params
    }

    /// `S(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        s_apply(self, f)
    }

    /// `S^m(f)`.
    pub fn power(&self, f: &Expr, m: usize) -> Expr {
        s_power(self, f, m)
    }

    pub fn apply_all(&self, fs: &[Expr]) -> Vec<Expr> {
        fs.iter().map(|f| self.apply(f)).collect()
    }
}

/// Component of `S` along `∂/∂v`.
fn s_component(s: &Semispray, v: VarId) -> Expr {
    let i = v.index();
    let level = v.level() as usize;
    if level == 0 {
        Expr::y(1, i)
    } else if level < s.k {
        Expr::int(level as i64 + 1) * Expr::y(level as u32 + 1, i)
    } else {
        Expr::int(-(s.k as i64 + 1)) * s.g[i as usize - 1].clone()
    }
}

/// `S(f)`, simplified.
pub fn s_apply(s: &Semispray, f: &Expr) -> Expr {
    let terms: Vec<Expr> = f
        .variables()
        .into_iter()
        .filter_map(|v| raw_derivative(f, v).map(|d| s_component(s, v) * d))
        .collect();
    simplify(&Expr::sum(terms))
}

/// `S^m(f)`, simplifying after each application.
pub fn s_power(s: &Semispray, f: &Expr, m: usize) -> Expr {
    let mut out = simplify(f);
    for _ in 0..m {
        out = s_apply(s, &out);
    }
    out
}

/// Total-derivative operator on `T^k M`:
/// `d_T = y^(1)i ∂/∂x^i + Σ_{α=1}^{k−1} (α+1) y^(α+1)i ∂/∂y^(α)i`.
///
/// It has no `∂/∂y^(k)` component, so it agrees with every semispray of
/// order `k` on functions independent of `y^(k)`.
pub fn tulczyjew_apply(f: &Expr, n: usize, k: usize) -> Expr {
    let terms: Vec<Expr> = f
        .variables()
        .into_iter()
        .filter(|v| (v.index() as usize) <= n && (v.level() as usize) < k)
        .filter_map(|v| {
            let level = v.level();
            let coeff = Expr::int(level as i64 + 1) * Expr::y(level + 1, v.index());
            raw_derivative(f, v).map(|d| coeff * d)
        })
        .collect();
    simplify(&Expr::sum(terms))
}

/// First-order system `dz/dt = S(z)` on the state `(x, y^(1), …, y^(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSystem {
    n: usize,
    k: usize,
    /// Minus `(k+1)` times `G`: the right-hand side of the top level.
    top: Vec<Expr>,
}

pub fn geodesic_system(s: &Semispray) -> GeodesicSystem {
    let scale = -(s.k as i64 + 1);
    GeodesicSystem {
        n: s.n,
        k: s.k,
        top: s
            .g
            .iter()
            .map(|g| simplify(&(Expr::int(scale) * g.clone())))
            .collect(),
    }
}

impl GeodesicSystem {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn state_len(&self) -> usize {
        self.n * (self.k + 1)
    }

    /// Symbolic right-hand side, level-major like [`JetPoint`] coordinates.
    pub fn rhs(&self) -> Vec<Expr> {
        let mut out = Vec::with_capacity(self.state_len());
        for level in 0..self.k {
            for i in 1..=self.n as u32 {
                out.push(simplify(
                    &(Expr::int(level as i64 + 1) * Expr::y(level as u32 + 1, i)),
                ));
            }
        }
        out.extend(self.top.iter().cloned());
        out
    }

    /// Numeric right-hand side at `p`, written into `out`.
    pub fn eval_rhs(&self, p: &JetPoint, out: &mut [f64]) -> Result<(), ExprError> {
        let n = self.n;
        let c = p.coords();
        for level in 0..self.k {
            for i in 0..n {
                out[level * n + i] = (level as f64 + 1.0) * c[(level + 1) * n + i];
            }
        }
        for (i, e) in self.top.iter().enumerate() {
            out[self.k * n + i] = evaluate(e, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equal_randomized, parse_expression, random_polynomial, RandomizedCheck};

    fn spray(n: usize, k: usize, g: &[&str]) -> Semispray {
        let g = g.iter().map(|s| parse_expression(s, n, k).unwrap()).collect();
        make_semispray(n, k, g).unwrap()
    }

    fn p(s: &str, n: usize, k: usize) -> Expr {
        simplify(&parse_expression(s, n, k).unwrap())
    }

    #[test]
    fn construction_checks_shape() {
        let sp = spray(1, 3, &["omega^2*y2_1/12"]);
        assert!(sp.parameters().contains("omega"));
        assert!(make_semispray(1, 1, vec![Expr::zero()]).is_ok());
        assert!(matches!(
            make_semispray(1, 2, vec![Expr::y(3, 1)]),
            Err(ModelError::Level { .. })
        ));
        assert!(matches!(
            make_semispray(2, 2, vec![Expr::zero()]),
            Err(ModelError::Arity { expected: 2, found: 1 })
        ));
        assert!(matches!(
            sp.clone().with_declared_parameters(["mu"]),
            Err(ModelError::UndeclaredParameter { .. })
        ));
        assert!(sp.with_declared_parameters(["omega", "mu"]).is_ok());
    }

    #[test]
    fn action_on_coordinates() {
        let sp = spray(2, 3, &["x1*y3_2", "y1_1^2"]);
        assert_eq!(sp.apply(&Expr::x(2)), Expr::y(1, 2));
        assert_eq!(sp.apply(&Expr::y(1, 1)), p("2*y2_1", 2, 3));
        assert_eq!(sp.apply(&Expr::y(2, 2)), p("3*y3_2", 2, 3));
        assert_eq!(sp.apply(&Expr::y(3, 1)), p("-4*x1*y3_2", 2, 3));
    }

    #[test]
    fn quadratic_top_level() {
        let sp = spray(1, 2, &["y2_1^2"]);
        assert_eq!(sp.apply(&Expr::y(2, 1)), p("-3*y2_1^2", 1, 2));
    }

    #[test]
    fn applied_to_own_coefficient() {
        let sp = spray(1, 1, &["x1*y1_1"]);
        let sg = sp.apply(&sp.coefficients()[0]);
        assert_eq!(sg, p("y1_1^2 - 2*x1^2*y1_1", 1, 1));
    }

    #[test]
    fn iterates() {
        let free = spray(1, 1, &["0"]);
        assert_eq!(free.power(&Expr::x(1), 0), Expr::x(1));
        assert!(free.power(&Expr::x(1), 2).is_zero());
        let lin = spray(1, 2, &["y2_1"]);
        assert!(lin.power(&Expr::int(5), 2).is_zero());
    }

    #[test]
    fn total_derivative_truncates() {
        assert_eq!(tulczyjew_apply(&Expr::x(1), 1, 3), Expr::y(1, 1));
        assert_eq!(tulczyjew_apply(&Expr::y(2, 1), 1, 3), p("3*y3_1", 1, 3));
        assert!(tulczyjew_apply(&Expr::y(3, 1), 1, 3).is_zero());
    }

    #[test]
    fn total_derivative_iterates_match_semispray_on_base_functions() {
        let sp = spray(2, 3, &["x1*y3_2 + y2_1^2", "sin(x2)*y1_1*y3_1"]);
        let f = p("x1^2*cos(x2) + x2", 2, 3);
        let (mut a, mut b) = (f.clone(), f);
        for _ in 0..3 {
            a = tulczyjew_apply(&a, 2, 3);
            b = sp.apply(&b);
            assert!(equal_randomized(&a, &b, &RandomizedCheck::default()).unwrap());
        }
    }

    #[test]
    fn geodesic_rhs_is_the_coefficient_vector() {
        let sp = spray(1, 2, &["y2_1"]);
        let sys = geodesic_system(&sp);
        assert_eq!(sys.rhs(), vec![Expr::y(1, 1), p("2*y2_1", 1, 2), p("-3*y2_1", 1, 2)]);
        let pt = JetPoint::from_levels(&[0.5], &[vec![2.0], vec![1.0]]).unwrap();
        let mut out = [0.0; 3];
        sys.eval_rhs(&pt, &mut out).unwrap();
        assert_eq!(out, [2.0, 2.0, -3.0]);
        for (i, e) in sys.rhs().iter().enumerate() {
            assert_eq!(evaluate(e, &pt).unwrap(), out[i]);
        }
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), BigRational::from_integer(1.into()));
        assert_eq!(factorial(4), BigRational::from_integer(24.into()));
        assert_eq!(factorial_f64(5), 120.0);
    }

    #[test]
    fn leibniz_rule() {
        let sp = spray(2, 2, &["x1*y2_2 - y1_1^2", "y2_1*x2"]);
        let vars = [VarId::x(1), VarId::x(2), VarId::y(1, 1), VarId::y(2, 2)];
        for seed in 0..5 {
            let f = random_polynomial(seed, &vars, 3, 4);
            let g = random_polynomial(seed + 100, &vars, 3, 4);
            let lhs = sp.apply(&(f.clone() * g.clone()));
            let rhs = sp.apply(&f) * g.clone() + f.clone() * sp.apply(&g);
            assert!(equal_randomized(&lhs, &rhs, &RandomizedCheck::default()).unwrap());
        }
    }
}
