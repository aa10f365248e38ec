//! Components `R_(0)..R_(k−1)` of the Jacobi endomorphism.
//!
//! They are reported in the adapted coframe; entry `(i, j)` of `R_(α)` is
//! `R^i_(α)j`.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::connection::{adapted_jacobian, canonical_connection, i_tensors, s_matrix, ConnectionCoeffs};
use crate::matrix::ExprMatrix;
use crate::semispray::Semispray;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureComponents {
    components: Vec<ExprMatrix>,
}

impl CurvatureComponents {
    pub fn order(&self) -> usize {
        self.components.len()
    }

    /// `R_(α)` for `α ∈ 0..k`.
    pub fn level(&self, alpha: usize) -> &ExprMatrix {
        &self.components[alpha]
    }

    pub fn levels(&self) -> &[ExprMatrix] {
        &self.components
    }
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Curvature for an arbitrary connection:
///
/// ```text
/// R_(α) = (k+1) δG/δy^(α) − α N_(k+1−α) − S(N_(k−α)) + N_(k−α)·N_(1)
///         + Σ_{β=2}^{k−α} N_(k+1−α−β)·I_(β)
/// ```
pub fn curvature_general(s: &Semispray, conn: &ConnectionCoeffs) -> CurvatureComponents {
    let k = s.order();
    assert_eq!(conn.order(), k, "connection order does not match the semispray");
    let it = i_tensors(s, conn);
    let first = conn.level(1);
    let components = (0..k)
        .map(|alpha| {
            let mut r = adapted_jacobian(s.coefficients(), alpha, conn).scale(&int(k + 1));
            if alpha >= 1 {
                r = r.sub(&conn.level(k + 1 - alpha).scale(&int(alpha)));
            }
            let lower = conn.level(k - alpha);
            r = r.sub(&s_matrix(s, lower)).add(&lower.mul(first));
            for beta in 2..=k - alpha {
                r = r.add(&conn.level(k + 1 - alpha - beta).mul(it.level(beta)));
            }
            r
        })
        .collect();
    CurvatureComponents { components }
}

/// Curvature of the canonical connection:
/// `R_(α) = (k+1)(δG/δy^(α) − N_(k+1−α))` for `α ≥ 1` and
/// `R_(0) = (k+1) δG/δx − S(N_(k)) + N_(k)·N_(1)`.
pub fn curvature_canonical(s: &Semispray) -> CurvatureComponents {
    curvature_with_canonical(s, &canonical_connection(s))
}

/// As [`curvature_canonical`], reusing an already computed canonical
/// connection.
pub fn curvature_with_canonical(s: &Semispray, conn: &ConnectionCoeffs) -> CurvatureComponents {
    assert!(conn.is_canonical(), "expected the canonical connection");
    let k = s.order();
    let mut components = Vec::with_capacity(k);
    let top = conn.level(k);
    components.push(
        adapted_jacobian(s.coefficients(), 0, conn)
            .scale(&int(k + 1))
            .sub(&s_matrix(s, top))
            .add(&top.mul(conn.level(1))),
    );
    for alpha in 1..k {
        components.push(
            adapted_jacobian(s.coefficients(), alpha, conn)
                .sub(conn.level(k + 1 - alpha))
                .scale(&int(k + 1)),
        );
    }
    CurvatureComponents { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::jacobian;
    use crate::expr::{parse_expression, simplify, Expr, RandomizedCheck, VarId};
    use crate::matrix::compare_matrices;
    use crate::semispray::make_semispray;

    fn spray(n: usize, k: usize, g: &[&str]) -> Semispray {
        let g = g.iter().map(|s| parse_expression(s, n, k).unwrap()).collect();
        make_semispray(n, k, g).unwrap()
    }

    fn scalar(s: &str, k: usize) -> ExprMatrix {
        ExprMatrix::from_rows(vec![vec![simplify(&parse_expression(s, 1, k).unwrap())]]).unwrap()
    }

    #[test]
    fn spinning_particle() {
        for n in [1usize, 3] {
            let g: Vec<String> = (1..=n).map(|i| format!("omega^2*y2_{i}/12")).collect();
            let g: Vec<&str> = g.iter().map(String::as_str).collect();
            let r = curvature_canonical(&spray(n, 3, &g));
            let expected = ExprMatrix::identity(n)
                .map(|e| simplify(&(e.clone() * Expr::powi(Expr::param("omega"), 2) * Expr::frac(1, 3))));
            assert_eq!(r.level(2), &expected);
            assert!(r.level(1).is_zero());
            assert!(r.level(0).is_zero());
        }
    }

    #[test]
    fn first_order_hand_value() {
        let r = curvature_canonical(&spray(1, 1, &["x1*y1_1"]));
        assert_eq!(r.level(0), &scalar("y1_1 - x1^2", 1));
    }

    #[test]
    fn linear_second_order_hand_values() {
        let r = curvature_canonical(&spray(1, 2, &["y2_1"]));
        assert_eq!(r.level(1), &scalar("-3/2", 2));
        assert_eq!(r.level(0), &scalar("1", 2));
    }

    #[test]
    fn general_formula_with_ad_hoc_connection() {
        let sp = spray(1, 2, &["y2_1^2"]);
        let conn = ConnectionCoeffs::new(vec![scalar("y2_1", 2), scalar("0", 2)]);
        let r = curvature_general(&sp, &conn);
        assert_eq!(r.level(1), &scalar("-2*y2_1^2", 2));
    }

    #[test]
    fn free_motion_is_flat() {
        let sp = spray(2, 3, &["0", "0"]);
        let r = curvature_general(&sp, &ConnectionCoeffs::zero(2, 3));
        assert!(r.levels().iter().all(ExprMatrix::is_zero));
    }

    #[test]
    fn general_matches_canonical() {
        let sp = spray(2, 3, &["x2*y3_1^2 + y1_2*y2_1", "y3_1*y3_2 - x1^2*y2_2"]);
        let conn = canonical_connection(&sp);
        let a = curvature_general(&sp, &conn);
        let b = curvature_with_canonical(&sp, &conn);
        for alpha in 0..3 {
            assert!(compare_matrices(a.level(alpha), b.level(alpha), &RandomizedCheck::default())
                .unwrap()
                .equal);
        }
    }

    #[test]
    fn first_order_reduces_to_second_order_ode_formula() {
        // R^i_j = 2 ∂G^i/∂x^j − S(∂G^i/∂y^j) − N^i_l N^l_j + ... written out
        // directly from δ/δx = ∂/∂x − N ∂/∂y.
        let sp = spray(2, 1, &["x2*y1_1^2 + sin(x1)*y1_2", "y1_1*y1_2*x1"]);
        let n = jacobian(&sp, 1);
        let dx = jacobian(&sp, 0);
        let expected = dx
            .scale(&int(2))
            .sub(&n.mul(&n).scale(&int(2)))
            .sub(&s_matrix(&sp, &n))
            .add(&n.mul(&n));
        let r = curvature_canonical(&sp);
        assert!(compare_matrices(r.level(0), &expected, &RandomizedCheck::default())
            .unwrap()
            .equal);
    }

    #[test]
    fn spray_curvature_annihilates_velocity() {
        // Geodesic spray of the round sphere: G = ½ γ y y.
        let sp = spray(
            2,
            1,
            &[
                "-sin(x1)*cos(x1)*y1_2^2/2",
                "cos(x1)/sin(x1)*y1_1*y1_2",
            ],
        );
        let r = curvature_canonical(&sp);
        let y = vec![Expr::var(VarId::y(1, 1)), Expr::var(VarId::y(1, 2))];
        let ry = r.level(0).apply(&y);
        let check = RandomizedCheck::default().with_box(0.3, 1.5);
        for e in ry {
            assert!(crate::expr::equal_randomized(&e, &Expr::zero(), &check).unwrap());
        }
    }
}
