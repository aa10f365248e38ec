//! Nonlinear connections on the jet bundle.
//!
//! A connection is given by matrices `N_(1)..N_(k)`; entry `(i, j)` of
//! `N_(α)` is `N^i_(α)j`. The adapted frame is
//!
//! ```text
//! δ/δy^(α)j = ∂/∂y^(α)j − Σ_{β=1}^{k−α} N^l_(β)j ∂/∂y^(α+β)l
//! ```
//!
//! with `α = 0` standing for `δ/δx^j`. The canonical connection of a
//! semispray is fixed by `N_(1) = ∂G/∂y^(k)` and the recursion
//! `α N_(α) = S(N_(α−1)) − N_(α−1)·N_(1)`.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::expr::diff::raw_derivative;
use crate::expr::{differentiate, simplify, Expr, VarId};
use crate::matrix::ExprMatrix;
use crate::semispray::Semispray;

fn inverse_of(alpha: usize) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(alpha))
}

/// Jacobian `∂G^i/∂y^(level)j`.
pub fn jacobian(s: &Semispray, level: u32) -> ExprMatrix {
    let g = s.coefficients();
    ExprMatrix::from_fn(s.dimension(), |i, j| {
        differentiate(&g[i], VarId::at_level(level, j as u32 + 1))
    })
}

/// `S` applied entrywise.
pub fn s_matrix(s: &Semispray, m: &ExprMatrix) -> ExprMatrix {
    m.map(|e| s.apply(e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs {
    n: usize,
    primal: Vec<ExprMatrix>,
    canonical: bool,
}

impl ConnectionCoeffs {
    /// A user-supplied (not necessarily canonical) connection; `levels[α−1]`
    /// is `N_(α)`.
    pub fn new(levels: Vec<ExprMatrix>) -> Self {
        assert!(!levels.is_empty(), "a connection needs at least one level");
        let n = levels[0].dim();
        assert!(levels.iter().all(|m| m.dim() == n), "mixed matrix sizes");
        ConnectionCoeffs {
            n,
            primal: levels.iter().map(ExprMatrix::simplified).collect(),
            canonical: false,
        }
    }

    pub fn zero(n: usize, k: usize) -> Self {
        ConnectionCoeffs::new(vec![ExprMatrix::zeros(n); k])
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.primal.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// `N_(α)` for `α ∈ 1..=k`.
    pub fn level(&self, alpha: usize) -> &ExprMatrix {
        assert!(alpha >= 1 && alpha <= self.order(), "level {alpha} out of range");
        &self.primal[alpha - 1]
    }

    pub fn levels(&self) -> &[ExprMatrix] {
        &self.primal
    }
}

/// Coefficients `M_(α)` of the adapted coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCoeffs {
    dual: Vec<ExprMatrix>,
}

impl DualCoeffs {
    pub fn order(&self) -> usize {
        self.dual.len()
    }

    /// `M_(α)` for `α ∈ 1..=k`.
    pub fn level(&self, alpha: usize) -> &ExprMatrix {
        assert!(alpha >= 1 && alpha <= self.order(), "level {alpha} out of range");
        &self.dual[alpha - 1]
    }

    pub fn levels(&self) -> &[ExprMatrix] {
        &self.dual
    }
}

/// Obstructions `I_(2)..I_(k)`; all vanish for the canonical connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ITensors {
    tensors: Vec<ExprMatrix>,
}

impl ITensors {
    /// `I_(α)` for `α ∈ 2..=k`.
    pub fn level(&self, alpha: usize) -> &ExprMatrix {
        assert!(alpha >= 2 && alpha < self.tensors.len() + 2, "level {alpha} out of range");
        &self.tensors[alpha - 2]
    }

    pub fn levels(&self) -> &[ExprMatrix] {
        &self.tensors
    }

    pub fn all_literally_zero(&self) -> bool {
        self.tensors.iter().all(ExprMatrix::is_zero)
    }
}

pub fn canonical_connection(s: &Semispray) -> ConnectionCoeffs {
    let first = jacobian(s, s.order() as u32);
    let mut primal = vec![first.clone()];
    for alpha in 2..=s.order() {
        let prev = &primal[alpha - 2];
        let next = s_matrix(s, prev)
            .sub(&prev.mul(&first))
            .scale(&inverse_of(alpha));
        primal.push(next);
    }
    ConnectionCoeffs {
        n: s.dimension(),
        primal,
        canonical: true,
    }
}

/// `M_(1) = N_(1)`, `M_(α) = N_(α) + Σ_{β=1}^{α−1} N_(α−β)·M_(β)`.
pub fn dual_from_primal(conn: &ConnectionCoeffs) -> DualCoeffs {
    let mut dual: Vec<ExprMatrix> = Vec::with_capacity(conn.order());
    for alpha in 1..=conn.order() {
        let mut m = conn.level(alpha).clone();
        for beta in 1..alpha {
            m = m.add(&conn.level(alpha - beta).mul(&dual[beta - 1]));
        }
        dual.push(m);
    }
    DualCoeffs { dual }
}

/// `M_(1) = ∂G/∂y^(k)`, `α M_(α) = S(M_(α−1)) + M_(1)·M_(α−1)`.
pub fn dual_recursive(s: &Semispray) -> DualCoeffs {
    let first = jacobian(s, s.order() as u32);
    let mut dual = vec![first.clone()];
    for alpha in 2..=s.order() {
        let prev = &dual[alpha - 2];
        let next = s_matrix(s, prev)
            .add(&first.mul(prev))
            .scale(&inverse_of(alpha));
        dual.push(next);
    }
    DualCoeffs { dual }
}

/// `δf/δy^(level)j` with `j` one-based; `level = 0` is `δf/δx^j`.
pub fn adapted_derivative(f: &Expr, level: usize, j: u32, conn: &ConnectionCoeffs) -> Expr {
    let k = conn.order();
    assert!(level <= k, "level {level} exceeds order {k}");
    let mut terms = Vec::new();
    if let Some(d) = raw_derivative(f, VarId::at_level(level as u32, j)) {
        terms.push(d);
    }
    for beta in 1..=k - level {
        let nb = conn.level(beta);
        for l in 1..=conn.dimension() as u32 {
            let coeff = nb.get(l as usize - 1, j as usize - 1);
            if coeff.is_zero() {
                continue;
            }
            if let Some(d) = raw_derivative(f, VarId::at_level((level + beta) as u32, l)) {
                terms.push(Expr::neg(coeff.clone() * d));
            }
        }
    }
    simplify(&Expr::sum(terms))
}

/// Matrix of adapted derivatives `δf^i/δy^(level)j`.
pub fn adapted_jacobian(fs: &[Expr], level: usize, conn: &ConnectionCoeffs) -> ExprMatrix {
    ExprMatrix::from_fn(fs.len(), |i, j| {
        adapted_derivative(&fs[i], level, j as u32 + 1, conn)
    })
}

/// `I_(α) = αN_(α) − S(N_(α−1)) + N_(α−1)·N_(1) + Σ_{β=2}^{α−1} N_(α−β)·I_(β)`.
pub fn i_tensors(s: &Semispray, conn: &ConnectionCoeffs) -> ITensors {
    let first = conn.level(1);
    let mut tensors: Vec<ExprMatrix> = Vec::new();
    for alpha in 2..=conn.order() {
        let prev = conn.level(alpha - 1);
        let mut t = conn
            .level(alpha)
            .scale(&BigRational::from_integer(BigInt::from(alpha)))
            .sub(&s_matrix(s, prev))
            .add(&prev.mul(first));
        for beta in 2..alpha {
            t = t.add(&conn.level(alpha - beta).mul(&tensors[beta - 2]));
        }
        tensors.push(t);
    }
    ITensors { tensors }
}
