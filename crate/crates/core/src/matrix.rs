//! Square matrices of expressions.
//!
//! Indices are zero-based in code; entry `(i, j)` holds the component with
//! upper index `i+1` and lower index `j+1`, so composition `A·B` is the
//! contraction `A^i_s B^s_j`.

use std::fmt;

use num_rational::BigRational;

use crate::expr::{
    compare_randomized, evaluate, simplify, Expr, ExprError, IdentityReport, JetPoint,
    RandomizedCheck,
};

#[derive(Clone, PartialEq, Eq)]
pub struct ExprMatrix {
    n: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zeros(n: usize) -> Self {
        ExprMatrix {
            n,
            entries: vec![Expr::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        ExprMatrix { n, entries }
    }

    /// Build from rows; `None` if the rows are not square.
    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(ExprMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.entries[i * self.n + j] = e;
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        self.entries.chunks(self.n).map(<[Expr]>::to_vec).collect()
    }

    pub fn map(&self, f: impl FnMut(&Expr) -> Expr) -> Self {
        ExprMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn simplified(&self) -> Self {
        self.map(simplify)
    }

    pub fn add(&self, other: &ExprMatrix) -> Self {
        self.zip(other, |a, b| simplify(&(a + b)))
    }

    pub fn sub(&self, other: &ExprMatrix) -> Self {
        self.zip(other, |a, b| simplify(&(a - b)))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        self.map(|a| simplify(&a.scale(c.clone())))
    }

    /// Composition `(self · other)^i_j = self^i_s other^s_j`, simplified.
    pub fn mul(&self, other: &ExprMatrix) -> Self {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        Self::from_fn(self.n, |i, j| {
            let terms = (0..self.n)
                .filter(|&s| !self.get(i, s).is_zero() && !other.get(s, j).is_zero())
                .map(|s| self.get(i, s) * other.get(s, j))
                .collect();
            simplify(&Expr::sum(terms))
        })
    }

    /// `(self · v)^i = self^i_j v^j`, simplified.
    pub fn apply(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.n, v.len(), "vector length mismatch");
        (0..self.n)
            .map(|i| {
                let terms = (0..self.n)
                    .filter(|&j| !self.get(i, j).is_zero() && !v[j].is_zero())
                    .map(|j| self.get(i, j) * &v[j])
                    .collect();
                simplify(&Expr::sum(terms))
            })
            .collect()
    }

    /// True when every entry is the literal zero.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Expr::is_zero)
    }

    /// Row-major numeric values at `p`.
    pub fn evaluate(&self, p: &JetPoint) -> Result<Vec<f64>, ExprError> {
        self.entries.iter().map(|e| evaluate(e, p)).collect()
    }

    fn zip(&self, other: &ExprMatrix, f: impl Fn(&Expr, &Expr) -> Expr) -> Self {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        ExprMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl fmt::Display for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Merge per-entry reports into one (equal iff all entries are equal).
pub fn merge_reports(reports: impl IntoIterator<Item = IdentityReport>) -> IdentityReport {
    let mut out = IdentityReport {
        equal: true,
        max_discrepancy: 0.0,
        max_magnitude: 0.0,
        samples: 0,
        rejected: 0,
    };
    for r in reports {
        out.equal &= r.equal;
        out.max_discrepancy = out.max_discrepancy.max(r.max_discrepancy);
        out.max_magnitude = out.max_magnitude.max(r.max_magnitude);
        out.samples += r.samples;
        out.rejected += r.rejected;
    }
    out
}

/// Entrywise randomized comparison of two expression lists of equal length.
pub fn compare_lists(
    a: &[Expr],
    b: &[Expr],
    check: &RandomizedCheck,
) -> Result<IdentityReport, ExprError> {
    assert_eq!(a.len(), b.len(), "list length mismatch");
    let reports = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            if x == y {
                Ok(IdentityReport {
                    equal: true,
                    max_discrepancy: 0.0,
                    max_magnitude: 0.0,
                    samples: 0,
                    rejected: 0,
                })
            } else {
                compare_randomized(x, y, check)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_reports(reports))
}

pub fn compare_matrices(
    a: &ExprMatrix,
    b: &ExprMatrix,
    check: &RandomizedCheck,
) -> Result<IdentityReport, ExprError> {
    compare_lists(a.entries(), b.entries(), check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn m(rows: &[&[&str]]) -> ExprMatrix {
        ExprMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|s| parse_expression(s, 2, 2).unwrap()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn composition_contracts_inner_index() {
        let a = m(&[&["x1", "1"], &["0", "y1_2"]]);
        let b = m(&[&["1", "0"], &["x2", "2"]]);
        let c = a.mul(&b);
        assert_eq!(c, m(&[&["x1 + x2", "2"], &["x2*y1_2", "2*y1_2"]]).simplified());
    }

    #[test]
    fn identity_is_neutral() {
        let a = m(&[&["x1", "sin(x2)"], &["y1_1^2", "3"]]).simplified();
        assert_eq!(a.mul(&ExprMatrix::identity(2)), a);
        assert_eq!(ExprMatrix::identity(2).mul(&a), a);
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn apply_matches_column_contraction() {
        let a = m(&[&["x1", "1"], &["0", "y1_2"]]);
        let v = vec![Expr::int(2), Expr::x(2)];
        assert_eq!(a.apply(&v), vec![simplify(&parse_expression("2*x1 + x2", 2, 2).unwrap()),
            simplify(&parse_expression("x2*y1_2", 2, 2).unwrap())]);
    }

    #[test]
    fn randomized_matrix_comparison() {
        let a = m(&[&["(x1 + 1)^2", "0"], &["0", "1"]]);
        let b = m(&[&["x1^2 + 2*x1 + 1", "0"], &["0", "1"]]);
        assert!(compare_matrices(&a, &b, &RandomizedCheck::default()).unwrap().equal);
        let c = m(&[&["x1^2 + 2*x1", "0"], &["0", "1"]]);
        assert!(!compare_matrices(&a, &c, &RandomizedCheck::default()).unwrap().equal);
    }
}
