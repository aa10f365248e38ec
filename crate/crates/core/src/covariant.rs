//! Dynamical covariant derivative and symmetry equations.
//!
//! On components, `∇X^i = S(X^i) + N^i_(1)j X^j`, extended to one-forms and
//! `(1,1)` tensors by the Leibniz rule.

use crate::connection::{canonical_connection, ConnectionCoeffs, DualCoeffs};
use crate::curvature::curvature_with_canonical;
use crate::expr::diff::raw_derivative;
use crate::expr::{
    compare_randomized, simplify, Expr, ExprError, IdentityReport, RandomizedCheck, VarId,
};
use crate::matrix::{merge_reports, ExprMatrix};
use crate::semispray::{factorial, Semispray};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CovariantError {
    #[error("level {alpha} is outside 1..={k}")]
    Level { alpha: usize, k: usize },
    #[error("expected {expected} components, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("component {component} depends on {var}; a point symmetry must depend on x only")]
    NotPointField { component: usize, var: VarId },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn check_arity(s: &Semispray, x: &[Expr]) -> Result<(), CovariantError> {
    if x.len() == s.dimension() {
        Ok(())
    } else {
        Err(CovariantError::Arity {
            expected: s.dimension(),
            found: x.len(),
        })
    }
}

fn add_lists(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    a.iter().zip(b).map(|(p, q)| simplify(&(p + q))).collect()
}

/// `∇X^i = S(X^i) + N^i_(1)j X^j`.
pub fn nabla_vector(s: &Semispray, conn: &ConnectionCoeffs, x: &[Expr]) -> Vec<Expr> {
    add_lists(&s.apply_all(x), &conn.level(1).apply(x))
}

/// `(∇ω)_j = S(ω_j) − ω_i N^i_(1)j`.
pub fn nabla_oneform(s: &Semispray, conn: &ConnectionCoeffs, w: &[Expr]) -> Vec<Expr> {
    let n1 = conn.level(1);
    (0..w.len())
        .map(|j| {
            let mut terms = vec![s.apply(&w[j])];
            for (i, wi) in w.iter().enumerate() {
                if !n1.get(i, j).is_zero() && !wi.is_zero() {
                    terms.push(Expr::neg(wi * n1.get(i, j)));
                }
            }
            simplify(&Expr::sum(terms))
        })
        .collect()
}

/// `(∇A)^i_j = S(A^i_j) + N^i_(1)l A^l_j − A^i_l N^l_(1)j`.
pub fn nabla_tensor11(s: &Semispray, conn: &ConnectionCoeffs, a: &ExprMatrix) -> ExprMatrix {
    let n1 = conn.level(1);
    a.map(|e| s.apply(e)).add(&n1.mul(a)).sub(&a.mul(n1))
}

/// `∇^m X`.
pub fn nabla_power(s: &Semispray, conn: &ConnectionCoeffs, x: &[Expr], m: usize) -> Vec<Expr> {
    let mut out: Vec<Expr> = x.iter().map(simplify).collect();
    for _ in 0..m {
        out = nabla_vector(s, conn, &out);
    }
    out
}

/// `∇^(α)X = S^α X + α! Σ_{β=1}^{α} M_(β) S^{α−β}X / (α−β)!`.
pub fn nabla_alpha_dual(
    s: &Semispray,
    dual: &DualCoeffs,
    x: &[Expr],
    alpha: usize,
) -> Result<Vec<Expr>, CovariantError> {
    check_arity(s, x)?;
    if alpha == 0 || alpha > dual.order() {
        return Err(CovariantError::Level {
            alpha,
            k: dual.order(),
        });
    }
    let mut iterates = vec![x.iter().map(simplify).collect::<Vec<_>>()];
    for m in 1..=alpha {
        iterates.push(s.apply_all(&iterates[m - 1]));
    }
    let mut out = iterates[alpha].clone();
    let fa = factorial(alpha);
    for beta in 1..=alpha {
        let c = &fa / factorial(alpha - beta);
        let term = dual.level(beta).scale(&c).apply(&iterates[alpha - beta]);
        out = add_lists(&out, &term);
    }
    Ok(out)
}

/// A base field together with its jet components `(1/α!) S^α X`.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonoidField {
    /// `levels[α]` holds the level-`α` components; `levels[0]` is `X`.
    pub levels: Vec<Vec<Expr>>,
}

impl NewtonoidField {
    /// The field as a derivation: `Σ_α Σ_j X^(α)j ∂f/∂y^(α)j`.
    pub fn derivation(&self, f: &Expr) -> Expr {
        let mut terms = Vec::new();
        for var in f.variables() {
            let level = var.level() as usize;
            let Some(comp) = self.levels.get(level) else {
                continue;
            };
            let c = &comp[var.index() as usize - 1];
            if c.is_zero() {
                continue;
            }
            if let Some(d) = raw_derivative(f, var) {
                terms.push(c * &d);
            }
        }
        simplify(&Expr::sum(terms))
    }
}

pub fn newtonoid_prolongation(s: &Semispray, x: &[Expr]) -> NewtonoidField {
    let mut levels = vec![x.iter().map(simplify).collect::<Vec<_>>()];
    let mut iterate = levels[0].clone();
    for alpha in 1..=s.order() {
        iterate = s.apply_all(&iterate);
        let c = factorial(alpha).recip();
        levels.push(iterate.iter().map(|e| simplify(&e.scale(c.clone()))).collect());
    }
    NewtonoidField { levels }
}

/// `S^{k+1}X^i + (k+1)! X̂(G^i)`, with `X̂` the newtonoid prolongation.
pub fn symmetry_residual_raw(s: &Semispray, x: &[Expr]) -> Vec<Expr> {
    let k = s.order();
    let field = newtonoid_prolongation(s, x);
    let top = s.apply_all(&field.levels[k]);
    // S^{k+1}X = (k!)·S(X^(k)) since X^(k) = S^k X / k!.
    let fk = factorial(k);
    let fk1 = factorial(k + 1);
    top.iter()
        .zip(s.coefficients())
        .map(|(t, g)| simplify(&(t.scale(fk.clone()) + field.derivation(g).scale(fk1.clone()))))
        .collect()
}

/// `(1/k!) ∇^{k+1}X^i + Σ_{α=0}^{k−1} (1/α!) R^i_(α)j ∇^α X^j`, canonical
/// connection throughout.
pub fn symmetry_residual_covariant(s: &Semispray, x: &[Expr]) -> Vec<Expr> {
    let conn = canonical_connection(s);
    covariant_residual_with(s, &conn, x)
}

/// As [`symmetry_residual_covariant`] for an already computed canonical
/// connection.
pub fn covariant_residual_with(s: &Semispray, conn: &ConnectionCoeffs, x: &[Expr]) -> Vec<Expr> {
    let k = s.order();
    let r = curvature_with_canonical(s, conn);
    let mut powers = vec![x.iter().map(simplify).collect::<Vec<_>>()];
    for m in 1..=k + 1 {
        powers.push(nabla_vector(s, conn, &powers[m - 1]));
    }
    let mut out: Vec<Expr> = powers[k + 1]
        .iter()
        .map(|e| simplify(&e.scale(factorial(k).recip())))
        .collect();
    for alpha in 0..k {
        let term = r
            .level(alpha)
            .scale(&factorial(alpha).recip())
            .apply(&powers[alpha]);
        out = add_lists(&out, &term);
    }
    out
}

/// Outcome of a point-symmetry test.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub raw: Vec<Expr>,
    pub covariant: Vec<Expr>,
    pub raw_check: IdentityReport,
    pub covariant_check: IdentityReport,
    /// Whether the covariant residual equals `(1/k!)` times the raw one.
    pub proportionality: IdentityReport,
    /// Both residuals simplify to literal zeros.
    pub exact: bool,
    pub is_symmetry: bool,
}

impl SymmetryReport {
    /// Largest sampled residual magnitude over both paths.
    pub fn max_magnitude(&self) -> f64 {
        self.raw_check.max_magnitude.max(self.covariant_check.max_magnitude)
    }

    pub fn verdicts_agree(&self) -> bool {
        self.raw_check.equal == self.covariant_check.equal
    }
}

fn vanishes(list: &[Expr], check: &RandomizedCheck) -> Result<IdentityReport, ExprError> {
    let reports = list
        .iter()
        .map(|e| compare_randomized(e, &Expr::zero(), check))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_reports(reports))
}

/// Decide whether `X` (a field on the base) is a point symmetry, through
/// both the raw and the covariant symmetry equations.
pub fn lie_symmetry_check(
    s: &Semispray,
    x: &[Expr],
    check: &RandomizedCheck,
) -> Result<SymmetryReport, CovariantError> {
    check_arity(s, x)?;
    for (i, xi) in x.iter().enumerate() {
        if let Some(var) = xi.variables().into_iter().find(|v| v.level() > 0) {
            return Err(CovariantError::NotPointField {
                component: i + 1,
                var,
            });
        }
    }
    let raw = symmetry_residual_raw(s, x);
    let covariant = symmetry_residual_covariant(s, x);
    let scale = factorial(s.order()).recip();
    let scaled: Vec<Expr> = raw.iter().map(|e| simplify(&e.scale(scale.clone()))).collect();
    let proportionality = merge_reports(
        covariant
            .iter()
            .zip(&scaled)
            .map(|(a, b)| compare_randomized(a, b, check))
            .collect::<Result<Vec<_>, _>>()?,
    );
    let raw_check = vanishes(&raw, check)?;
    let covariant_check = vanishes(&covariant, check)?;
    let exact = raw.iter().chain(&covariant).all(Expr::is_zero);
    let is_symmetry = raw_check.equal && covariant_check.equal;
    Ok(SymmetryReport {
        raw,
        covariant,
        raw_check,
        covariant_check,
        proportionality,
        exact,
        is_symmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equal_randomized, parse_expression, random_polynomial};
    use crate::semispray::make_semispray;

    fn spray(n: usize, k: usize, g: &[&str]) -> Semispray {
        let g = g.iter().map(|s| parse_expression(s, n, k).unwrap()).collect();
        make_semispray(n, k, g).unwrap()
    }

    fn list(n: usize, k: usize, xs: &[&str]) -> Vec<Expr> {
        xs.iter().map(|s| simplify(&parse_expression(s, n, k).unwrap())).collect()
    }

    #[test]
    fn vector_derivative_hand_values() {
        let sp = spray(1, 1, &["x1*y1_1"]);
        let conn = canonical_connection(&sp);
        let x = list(1, 1, &["y1_1"]);
        assert_eq!(nabla_vector(&sp, &conn, &x), list(1, 1, &["-x1*y1_1"]));
        assert_eq!(nabla_power(&sp, &conn, &x, 0), x);
        assert_eq!(
            nabla_power(&sp, &conn, &x, 2),
            list(1, 1, &["-y1_1^2 + x1^2*y1_1"])
        );
        assert_eq!(nabla_vector(&sp, &conn, &[Expr::zero()]), vec![Expr::zero()]);
    }

    #[test]
    fn constants_are_parallel_for_the_spinning_particle() {
        let sp = spray(1, 3, &["omega^2*y2_1/12"]);
        let conn = canonical_connection(&sp);
        let c = vec![Expr::int(7)];
        for m in 1..4 {
            assert!(nabla_power(&sp, &conn, &c, m)[0].is_zero());
        }
        assert!(symmetry_residual_covariant(&sp, &c)[0].is_zero());
    }

    #[test]
    fn identity_tensor_is_parallel() {
        let sp = spray(2, 2, &["x2*y2_1^2", "y2_2*y2_1 + x1"]);
        let conn = canonical_connection(&sp);
        assert!(nabla_tensor11(&sp, &conn, &ExprMatrix::identity(2)).is_zero());
    }

    #[test]
    fn scalar_tensor_derivative_is_s() {
        let sp = spray(1, 2, &["y2_1^2 + x1"]);
        let conn = canonical_connection(&sp);
        let a = ExprMatrix::from_rows(vec![list(1, 2, &["x1*y1_1"])]).unwrap();
        assert_eq!(nabla_tensor11(&sp, &conn, &a).get(0, 0), &sp.apply(a.get(0, 0)));
    }

    #[test]
    fn pairing_satisfies_leibniz() {
        let sp = spray(2, 2, &["x2*y2_1^2 + y1_2", "y2_2*y2_1 - x1*y1_1"]);
        let conn = canonical_connection(&sp);
        let w = list(2, 2, &["x1*y1_2", "y2_1 + x2^2"]);
        let x = list(2, 2, &["y1_1 - x2", "x1*x2"]);
        let pair = |w: &[Expr], x: &[Expr]| simplify(&Expr::sum(w.iter().zip(x).map(|(a, b)| a * b).collect()));
        let lhs = sp.apply(&pair(&w, &x));
        let rhs = pair(&nabla_oneform(&sp, &conn, &w), &x) + pair(&w, &nabla_vector(&sp, &conn, &x));
        assert!(equal_randomized(&lhs, &rhs, &RandomizedCheck::default()).unwrap());
    }

    #[test]
    fn function_times_field_leibniz() {
        let sp = spray(2, 2, &["x2*y2_1^2", "y2_2*y2_1 - x1"]);
        let conn = canonical_connection(&sp);
        let f = simplify(&parse_expression("x1*y1_2 + 1", 2, 2).unwrap());
        let x = list(2, 2, &["y1_1 - x2", "x1*x2"]);
        let fx: Vec<Expr> = x.iter().map(|e| &f * e).collect();
        let lhs = nabla_vector(&sp, &conn, &fx);
        let sf = sp.apply(&f);
        let nx = nabla_vector(&sp, &conn, &x);
        for i in 0..2 {
            let rhs = &sf * &x[i] + &f * &nx[i];
            assert!(equal_randomized(&lhs[i], &rhs, &RandomizedCheck::default()).unwrap());
        }
    }

    #[test]
    fn dual_iterates_match_powers() {
        let sp = spray(2, 3, &["x2*y3_1^2 + y1_2", "y3_2*y3_1 - x1*y2_2"]);
        let conn = canonical_connection(&sp);
        let dual = crate::connection::dual_recursive(&sp);
        let x = list(2, 3, &["x1*x2", "x2^2 - x1"]);
        for alpha in 1..=3 {
            let a = nabla_alpha_dual(&sp, &dual, &x, alpha).unwrap();
            let b = nabla_power(&sp, &conn, &x, alpha);
            for (p, q) in a.iter().zip(&b) {
                assert!(equal_randomized(p, q, &RandomizedCheck::default()).unwrap(), "alpha={alpha}");
            }
        }
        assert!(matches!(
            nabla_alpha_dual(&sp, &dual, &x, 4),
            Err(CovariantError::Level { alpha: 4, k: 3 })
        ));
    }

    #[test]
    fn prolongation_of_coordinates() {
        let sp = spray(1, 2, &["y2_1^2"]);
        let f = newtonoid_prolongation(&sp, &[Expr::x(1)]);
        assert_eq!(f.levels, vec![vec![Expr::x(1)], vec![Expr::y(1, 1)], vec![Expr::y(2, 1)]]);
        let zero = newtonoid_prolongation(&sp, &[Expr::zero()]);
        assert!(zero.levels.iter().flatten().all(Expr::is_zero));
    }

    #[test]
    fn scaling_symmetry_of_first_order_model() {
        let sp = spray(1, 1, &["y1_1^2/x1"]);
        let x = vec![Expr::x(1)];
        assert!(symmetry_residual_raw(&sp, &x)[0].is_zero());
        let report = lie_symmetry_check(&sp, &x, &RandomizedCheck::default()).unwrap();
        assert!(report.is_symmetry && report.exact && report.verdicts_agree());
    }

    #[test]
    fn non_symmetry_is_detected() {
        let sp = spray(1, 1, &["x1*y1_1"]);
        let x = vec![Expr::x(1)];
        assert_eq!(symmetry_residual_raw(&sp, &x), list(1, 1, &["2*x1*y1_1"]));
        let report = lie_symmetry_check(&sp, &x, &RandomizedCheck::default()).unwrap();
        assert!(!report.is_symmetry && report.verdicts_agree());
        assert!(report.proportionality.equal);
    }

    #[test]
    fn jet_dependent_fields_are_rejected() {
        let sp = spray(1, 1, &["0"]);
        assert!(matches!(
            lie_symmetry_check(&sp, &[Expr::y(1, 1)], &RandomizedCheck::default()),
            Err(CovariantError::NotPointField { .. })
        ));
        let report = lie_symmetry_check(&sp, &[Expr::zero()], &RandomizedCheck::default()).unwrap();
        assert!(report.is_symmetry);
    }

    #[test]
    fn residuals_are_proportional_at_higher_order() {
        for (k, g) in [(2usize, "x1*y2_1^2 + y1_1"), (3, "y3_1^2 - x1*y1_1")] {
            let sp = spray(1, k, &[g]);
            let vars = [VarId::x(1)];
            let x = vec![random_polynomial(k as u64, &vars, 2, 3)];
            let raw = symmetry_residual_raw(&sp, &x);
            let cov = symmetry_residual_covariant(&sp, &x);
            let scaled = simplify(&raw[0].scale(factorial(k).recip()));
            assert!(equal_randomized(&cov[0], &scaled, &RandomizedCheck::default()).unwrap());
        }
    }
}
