//! Scalar invariants of third- and fourth-order scalar equations.
//!
//! For `n = 1` both invariants equal `∇R_(k−1) − 2R_(k−2)`; the direct
//! formulas are kept as an independent check of that identity.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::connection::canonical_connection;
use crate::covariant::nabla_tensor11;
use crate::curvature::curvature_with_canonical;
use crate::expr::{compare_randomized, differentiate, simplify, Expr, ExprError, RandomizedCheck, VarId};
use crate::semispray::Semispray;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InvariantError {
    #[error("{what} needs a scalar equation with k = {expected_k}, got n = {n}, k = {k}")]
    Shape {
        what: &'static str,
        expected_k: &'static str,
        n: usize,
        k: usize,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    W3,
    W4,
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvariantKind::W3 => "W3",
            InvariantKind::W4 => "W4",
        })
    }
}

/// How strongly the vanishing of an invariant is established.
#[derive(Debug, Clone, PartialEq)]
pub enum Vanishing {
    /// Simplifies to the literal zero.
    Exact,
    /// Zero at every sampled point, but not reduced to zero symbolically.
    Sampled,
    /// Nonzero; `witness` is the simplified expression.
    Nonzero { witness: Expr },
}

impl Vanishing {
    pub fn vanishes(&self) -> bool {
        !matches!(self, Vanishing::Nonzero { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub kind: InvariantKind,
    pub direct: Expr,
    /// `∇R_(k−1) − 2R_(k−2)`.
    pub curvature_form: Expr,
    /// The two forms agree at every sampled point.
    pub identity_verified: bool,
    pub identity_discrepancy: f64,
    pub vanishing: Vanishing,
    /// Largest sampled `|W|`.
    pub sample_max: f64,
    pub notes: Vec<String>,
}

impl InvariantReport {
    /// Verdict line for the variationality question (meaningful for W4).
    pub fn verdict(&self) -> &'static str {
        match (self.kind, self.vanishing.vanishes()) {
            (InvariantKind::W4, true) => "passes the W4 necessary condition",
            (InvariantKind::W4, false) => "fails (not variational)",
            (InvariantKind::W3, true) => "W3 vanishes",
            (InvariantKind::W3, false) => "W3 does not vanish",
        }
    }
}

fn require_scalar(s: &Semispray, k: usize, what: &'static str, expected: &'static str) -> Result<(), InvariantError> {
    if s.dimension() != 1 || s.order() != k {
        return Err(InvariantError::Shape {
            what,
            expected_k: expected,
            n: s.dimension(),
            k: s.order(),
        });
    }
    Ok(())
}

fn q(num: i64, den: i64) -> Expr {
    Expr::frac(num, den)
}

/// Partial derivatives `(G_x, G_y1, …, G_yk)` of the single coefficient.
fn partials(s: &Semispray) -> Vec<Expr> {
    let g = &s.coefficients()[0];
    (0..=s.order() as u32)
        .map(|level| simplify(&differentiate(g, VarId::at_level(level, 1))))
        .collect()
}

/// `W3 = −½S²(G₂) − 3G₂S(G₂) + 3S(G₁) − 2G₂³ + 6G₁G₂ − 6G_x`, where `Gₐ`
/// is the partial derivative in `y^(a)`.
pub fn wuenschmann_w3(s: &Semispray) -> Result<Expr, InvariantError> {
    require_scalar(s, 2, "W3", "2")?;
    let d = partials(s);
    let (gx, g1, g2) = (&d[0], &d[1], &d[2]);
    let sg2 = s.apply(g2);
    let terms = vec![
        q(-1, 2) * s.apply(&sg2),
        q(-3, 1) * g2.clone() * sg2,
        q(3, 1) * s.apply(g1),
        q(-2, 1) * Expr::powi(g2.clone(), 3),
        q(6, 1) * g1.clone() * g2.clone(),
        q(-6, 1) * gx.clone(),
    ];
    Ok(simplify(&Expr::sum(terms)))
}

/// `W4 = −⅔S²(G₃) − 4G₃S(G₃) + 4S(G₂) − (8/3)G₃³ + 8G₂G₃ − 8G₁`.
pub fn fels_w4(s: &Semispray) -> Result<Expr, InvariantError> {
    require_scalar(s, 3, "W4", "3")?;
    let d = partials(s);
    let (g1, g2, g3) = (&d[1], &d[2], &d[3]);
    let sg3 = s.apply(g3);
    let terms = vec![
        q(-2, 3) * s.apply(&sg3),
        q(-4, 1) * g3.clone() * sg3,
        q(4, 1) * s.apply(g2),
        q(-8, 3) * Expr::powi(g3.clone(), 3),
        q(8, 1) * g2.clone() * g3.clone(),
        q(-8, 1) * g1.clone(),
    ];
    Ok(simplify(&Expr::sum(terms)))
}

/// `∇R_(k−1) − 2R_(k−2)` for a scalar equation of order 3 or 4.
pub fn invariant_via_curvature(s: &Semispray) -> Result<Expr, InvariantError> {
    if s.dimension() != 1 || !(2..=3).contains(&s.order()) {
        return Err(InvariantError::Shape {
            what: "curvature form of the invariant",
            expected_k: "2 or 3",
            n: s.dimension(),
            k: s.order(),
        });
    }
    let k = s.order();
    let conn = canonical_connection(s);
    let r = curvature_with_canonical(s, &conn);
    let two = BigRational::from_integer(BigInt::from(2));
    let w = nabla_tensor11(s, &conn, r.level(k - 1)).sub(&r.level(k - 2).scale(&two));
    Ok(simplify(w.get(0, 0)))
}

/// Both forms of the invariant for `(n, k) = (1, 2)` or `(1, 3)`, the
/// identity check between them, and a vanishing verdict.
pub fn invariant_report(s: &Semispray, check: &RandomizedCheck) -> Result<InvariantReport, InvariantError> {
    let (kind, direct) = match (s.dimension(), s.order()) {
        (1, 2) => (InvariantKind::W3, wuenschmann_w3(s)?),
        (1, 3) => (InvariantKind::W4, fels_w4(s)?),
        (n, k) => {
            return Err(InvariantError::Shape {
                what: "invariant",
                expected_k: "2 or 3",
                n,
                k,
            })
        }
    };
    let curvature_form = invariant_via_curvature(s)?;
    let identity = compare_randomized(&direct, &curvature_form, check)?;
    let zero = compare_randomized(&direct, &Expr::zero(), check)?;
    let vanishing = if direct.is_zero() {
        Vanishing::Exact
    } else if zero.equal {
        Vanishing::Sampled
    } else {
        Vanishing::Nonzero {
            witness: direct.clone(),
        }
    };
    let evidence = match vanishing {
        Vanishing::Exact => "vanishing established exactly (simplifies to 0)",
        Vanishing::Sampled => "vanishing established by random sampling only",
        Vanishing::Nonzero { .. } => "nonzero at sampled points",
    };
    let mut notes = vec![evidence.to_string()];
    if kind == InvariantKind::W4 {
        notes.push(
            "W4 = 0 is necessary for a variational multiplier; the second invariant is not computed"
                .to_string(),
        );
        notes.push("W4 = -3 I_1 for the invariant I_1 of the equivalence problem (not computed)".to_string());
    }
    Ok(InvariantReport {
        kind,
        direct,
        curvature_form,
        identity_verified: identity.equal,
        identity_discrepancy: identity.max_discrepancy,
        vanishing,
        sample_max: zero.max_magnitude,
        notes,
    })
}

/// Necessary-condition test for the existence of a variational multiplier
/// of a scalar fourth-order equation.
pub fn variationality_report(s: &Semispray, check: &RandomizedCheck) -> Result<InvariantReport, InvariantError> {
    require_scalar(s, 3, "variationality report", "3")?;
    invariant_report(s, check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equal_randomized, parse_expression, random_polynomial};
    use crate::semispray::make_semispray;

    fn spray(k: usize, g: &str) -> Semispray {
        make_semispray(1, k, vec![parse_expression(g, 1, k).unwrap()]).unwrap()
    }

    fn e(s: &str, k: usize) -> Expr {
        simplify(&parse_expression(s, 1, k).unwrap())
    }

    #[test]
    fn w3_hand_values() {
        assert!(wuenschmann_w3(&spray(2, "0")).unwrap().is_zero());
        assert_eq!(wuenschmann_w3(&spray(2, "y2_1")).unwrap(), Expr::int(-2));
        assert_eq!(invariant_via_curvature(&spray(2, "y2_1")).unwrap(), Expr::int(-2));
        assert_eq!(wuenschmann_w3(&spray(2, "sin(x1)")).unwrap(), e("-6*cos(x1)", 2));
    }

    #[test]
    fn w4_hand_values() {
        assert!(fels_w4(&spray(3, "0")).unwrap().is_zero());
        assert!(fels_w4(&spray(3, "omega^2*y2_1/12")).unwrap().is_zero());
        assert!(invariant_via_curvature(&spray(3, "omega^2*y2_1/12")).unwrap().is_zero());
        assert_eq!(fels_w4(&spray(3, "y1_1^2")).unwrap(), e("-16*y1_1", 3));
    }

    #[test]
    fn shape_errors() {
        assert!(wuenschmann_w3(&spray(3, "0")).is_err());
        assert!(fels_w4(&spray(2, "0")).is_err());
        let two = make_semispray(2, 2, vec![Expr::zero(), Expr::zero()]).unwrap();
        assert!(invariant_via_curvature(&two).is_err());
        assert!(invariant_via_curvature(&spray(1, "0")).is_err());
        assert!(variationality_report(&spray(2, "0"), &RandomizedCheck::default()).is_err());
    }

    #[test]
    fn identities_on_random_polynomials() {
        for k in [2usize, 3] {
            let vars: Vec<VarId> = (0..=k as u32).map(|l| VarId::at_level(l, 1)).collect();
            for seed in 0..6 {
                let g = random_polynomial(seed, &vars, 3, 4);
                let s = make_semispray(1, k, vec![g]).unwrap();
                let direct = if k == 2 { wuenschmann_w3(&s) } else { fels_w4(&s) }.unwrap();
                let curv = invariant_via_curvature(&s).unwrap();
                assert!(equal_randomized(&direct, &curv, &RandomizedCheck::default().with_seed(seed)).unwrap());
            }
        }
    }

    #[test]
    fn reports() {
        let check = RandomizedCheck::default();
        let spin = variationality_report(&spray(3, "omega^2*y2_1/12"), &check).unwrap();
        assert_eq!(spin.vanishing, Vanishing::Exact);
        assert!(spin.identity_verified);
        assert_eq!(spin.verdict(), "passes the W4 necessary condition");

        let bad = variationality_report(&spray(3, "y1_1^2"), &check).unwrap();
        assert_eq!(bad.vanishing, Vanishing::Nonzero { witness: e("-16*y1_1", 3) });
        assert_eq!(bad.verdict(), "fails (not variational)");
        assert!(bad.identity_verified);

        let w3 = invariant_report(&spray(2, "y2_1"), &check).unwrap();
        assert_eq!(w3.kind, InvariantKind::W3);
        assert!(w3.identity_verified);
        assert_eq!(w3.sample_max, 2.0);
    }
}
