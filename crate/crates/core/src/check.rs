//! Self-consistency suite: every structural identity that must hold for any
//! semispray, evaluated on one model.

use crate::connection::{canonical_connection, dual_from_primal, dual_recursive, i_tensors};
use crate::covariant::{
    nabla_alpha_dual, nabla_power, symmetry_residual_covariant, symmetry_residual_raw, CovariantError,
};
use crate::curvature::{curvature_general, curvature_with_canonical};
use crate::expr::{compare_randomized, random_polynomial, simplify, Expr, ExprError, IdentityReport, RandomizedCheck, VarId};
use crate::invariants::{fels_w4, invariant_via_curvature, wuenschmann_w3, InvariantError};
use crate::matrix::{compare_lists, compare_matrices, merge_reports, ExprMatrix};
use crate::semispray::{factorial, Semispray};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Covariant(#[from] CovariantError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub report: IdentityReport,
}

impl CheckItem {
    pub fn passed(&self) -> bool {
        self.report.equal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub items: Vec<CheckItem>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(CheckItem::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.passed())
    }
}

/// A generic test vector whose components are random polynomials in all
/// jet coordinates up to order `k`.
pub fn probe_vector(n: usize, k: usize, seed: u64, point_only: bool) -> Vec<Expr> {
    let top = if point_only { 0 } else { k as u32 };
    let vars: Vec<VarId> = (0..=top)
        .flat_map(|l| (1..=n as u32).map(move |i| VarId::at_level(l, i)))
        .collect();
    (0..n)
        .map(|i| random_polynomial(seed.wrapping_mul(31).wrapping_add(i as u64), &vars, 2, 3))
        .collect()
}

/// Covariant residual against `(1/k!)` times the raw one.
pub fn residual_proportionality(
    s: &Semispray,
    field: &[Expr],
    check: &RandomizedCheck,
) -> Result<IdentityReport, CheckError> {
    let raw = symmetry_residual_raw(s, field);
    let cov = symmetry_residual_covariant(s, field);
    let scale = factorial(s.order()).recip();
    let scaled: Vec<Expr> = raw.iter().map(|e| simplify(&e.scale(scale.clone()))).collect();
    Ok(compare_lists(&cov, &scaled, check)?)
}

/// Run the suite. `field` is the symmetry candidate used for the residual
/// identity; a random point field is used when absent.
pub fn identity_suite(
    s: &Semispray,
    field: Option<&[Expr]>,
    check: &RandomizedCheck,
) -> Result<SuiteReport, CheckError> {
    let (n, k) = (s.dimension(), s.order());
    let mut items = Vec::new();
    let mut push = |name: &str, report: IdentityReport| {
        items.push(CheckItem {
            name: name.to_string(),
            report,
        })
    };

    let conn = canonical_connection(s);
    let primal = dual_from_primal(&conn);
    let recursive = dual_recursive(s);
    let dual = merge_reports(
        (1..=k)
            .map(|a| compare_matrices(primal.level(a), recursive.level(a), check))
            .collect::<Result<Vec<_>, _>>()?,
    );
    push("dual coefficients: direct vs recursive", dual);

    let it = i_tensors(s, &conn);
    let zero = ExprMatrix::zeros(n);
    let i_zero = merge_reports(
        it.levels()
            .iter()
            .map(|m| compare_matrices(m, &zero, check))
            .collect::<Result<Vec<_>, _>>()?,
    );
    push("I-tensors vanish for the canonical connection", i_zero);

    let general = curvature_general(s, &conn);
    let canonical = curvature_with_canonical(s, &conn);
    let curv = merge_reports(
        (0..k)
            .map(|a| compare_matrices(general.level(a), canonical.level(a), check))
            .collect::<Result<Vec<_>, _>>()?,
    );
    push("curvature: general vs canonical formula", curv);

    let probe = probe_vector(n, k, check.seed, false);
    let mut powers = Vec::new();
    for alpha in 1..=k {
        let a = nabla_alpha_dual(s, &recursive, &probe, alpha)?;
        let b = nabla_power(s, &conn, &probe, alpha);
        powers.push(compare_lists(&a, &b, check)?);
    }
    push("iterated derivative vs dual-coefficient expansion", merge_reports(powers));

    let generated;
    let field = match field {
        Some(f) => f,
        None => {
            generated = probe_vector(n, k, check.seed ^ 0x9e37, true);
            &generated
        }
    };
    push(
        "symmetry residual: covariant = raw / k!",
        residual_proportionality(s, field, check)?,
    );

    if n == 1 && (k == 2 || k == 3) {
        let direct = if k == 2 { wuenschmann_w3(s)? } else { fels_w4(s)? };
        let via = invariant_via_curvature(s)?;
        let name = if k == 2 {
            "W3 = nabla R_(1) - 2 R_(0)"
        } else {
            "W4 = nabla R_(2) - 2 R_(1)"
        };
        push(name, compare_randomized(&direct, &via, check)?);
    }
    Ok(SuiteReport { items })
}
