//! Randomized identity testing.
//!
//! Two expressions are declared equal when they agree, to a relative
//! tolerance, at a batch of seeded pseudo-random regular jet points. For the
//! polynomial and elementary expressions this engine produces, a handful of
//! agreeing samples makes a false accept vanishingly unlikely.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate, simplify, Expr, ExprError, JetPoint, VarId};

/// Uniform sampling interval applied to every coordinate and free parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { lo: -2.0, hi: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedCheck {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    pub sample_box: SampleBox,
    /// Parameters pinned to fixed values; others are sampled like coordinates.
    pub params: BTreeMap<String, f64>,
}

impl Default for RandomizedCheck {
    fn default() -> Self {
        RandomizedCheck {
            trials: 20,
            tol: 1e-9,
            seed: 0x5eed,
            sample_box: SampleBox::default(),
            params: BTreeMap::new(),
        }
    }
}

impl RandomizedCheck {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Self {
        self.sample_box = SampleBox { lo, hi };
        self
    }
}

/// Outcome of a randomized comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub equal: bool,
    /// Largest `|a − b| / (1 + max(|a|, |b|))` seen.
    pub max_discrepancy: f64,
    /// Largest `max(|a|, |b|)` seen.
    pub max_magnitude: f64,
    pub samples: usize,
    /// Points rejected because evaluation left the domain.
    pub rejected: usize,
}

/// Compare `a` and `b` at `check.trials` random regular points.
pub fn compare_randomized(
    a: &Expr,
    b: &Expr,
    check: &RandomizedCheck,
) -> Result<IdentityReport, ExprError> {
    assert!(check.trials >= 1, "at least one trial is required");
    let vars: Vec<VarId> = a.variables().union(&b.variables()).copied().collect();
    let n = vars.iter().map(|v| v.index() as usize).max().unwrap_or(1).max(1);
    let k = vars.iter().map(|v| v.level() as usize).max().unwrap_or(1).max(1);
    let free_params: Vec<String> = a
        .parameters()
        .union(&b.parameters())
        .filter(|p| !check.params.contains_key(*p))
        .cloned()
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let SampleBox { lo, hi } = check.sample_box;
    let max_rejections = 10 * check.trials + 100;
    let mut report = IdentityReport {
        equal: true,
        max_discrepancy: 0.0,
        max_magnitude: 0.0,
        samples: 0,
        rejected: 0,
    };
    let mut last_error = None;
    while report.samples < check.trials {
        if report.rejected > max_rejections {
            return Err(ExprError::Sampling(format!(
                "{} sample points rejected; last error: {}",
                report.rejected,
                last_error.map_or_else(|| "none".to_string(), |e: ExprError| e.to_string())
            )));
        }
        let point = loop {
            let coords: Vec<f64> = (0..n * (k + 1)).map(|_| rng.random_range(lo..=hi)).collect();
            let candidate = JetPoint::from_coords(n, k, coords).unwrap();
            if candidate.is_regular() {
                break candidate;
            }
        };
        let mut params = check.params.clone();
        for p in &free_params {
            params.insert(p.clone(), rng.random_range(lo..=hi));
        }
        let point = point.with_params(Arc::new(params));
        let (va, vb) = match (evaluate(a, &point), evaluate(b, &point)) {
            (Ok(va), Ok(vb)) => (va, vb),
            (Err(e @ ExprError::Domain(_)), _) | (_, Err(e @ ExprError::Domain(_))) => {
                report.rejected += 1;
                last_error = Some(e);
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let scale = va.abs().max(vb.abs());
        let discrepancy = (va - vb).abs() / (1.0 + scale);
        report.max_discrepancy = report.max_discrepancy.max(discrepancy);
        report.max_magnitude = report.max_magnitude.max(scale);
        if !(discrepancy <= check.tol) {
            report.equal = false;
        }
        report.samples += 1;
    }
    Ok(report)
}

/// True iff `|a − b| ≤ tol·(1 + max(|a|, |b|))` at every sampled point.
pub fn equal_randomized(a: &Expr, b: &Expr, check: &RandomizedCheck) -> Result<bool, ExprError> {
    compare_randomized(a, b, check).map(|r| r.equal)
}

/// A random polynomial with `terms` monomials of total degree at most
/// `max_degree` in `vars`, with nonzero integer coefficients in `-3..=3`.
pub fn random_polynomial(seed: u64, vars: &[VarId], max_degree: u32, terms: usize) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut c: i64 = rng.random_range(1..=3);
        if rng.random_bool(0.5) {
            c = -c;
        }
        let degree = rng.random_range(0..=max_degree);
        let mut factors = vec![Expr::int(c)];
        for _ in 0..degree {
            factors.push(Expr::var(vars[rng.random_range(0..vars.len())]));
        }
        out.push(Expr::product(factors));
    }
    simplify(&Expr::sum(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;

    fn p(s: &str) -> Expr {
        parse_expression(s, 2, 2).unwrap()
    }

    #[test]
    fn expanded_square_is_equal() {
        let a = p("(x1 + y1_1)^2");
        let b = p("x1*x1 + y1_1*(2*x1 + y1_1)");
        assert!(equal_randomized(&a, &b, &RandomizedCheck::default()).unwrap());
    }

    #[test]
    fn small_perturbation_is_detected() {
        let a = p("y1_1");
        let b = p("y1_1 + 1e-3*x1");
        assert!(!equal_randomized(&a, &b, &RandomizedCheck::default()).unwrap());
    }

    #[test]
    fn deterministic_under_seed() {
        let a = p("sin(x1)*y1_1");
        let b = p("sin(x1)*y1_1 + 1e-12");
        let c = RandomizedCheck::default().with_seed(7);
        assert_eq!(
            compare_randomized(&a, &b, &c).unwrap(),
            compare_randomized(&a, &b, &c).unwrap()
        );
    }

    #[test]
    fn domain_errors_are_resampled() {
        let a = p("log(x1)");
        let b = p("log(x1)");
        let r = compare_randomized(&a, &b, &RandomizedCheck::default()).unwrap();
        assert!(r.equal);
        assert!(r.rejected > 0);
    }

    #[test]
    fn persistent_domain_errors_fail_with_diagnostic() {
        let a = p("log(-1 - x1^2)");
        let err = compare_randomized(&a, &a, &RandomizedCheck::default()).unwrap_err();
        assert!(matches!(err, ExprError::Sampling(_)));
    }

    #[test]
    fn pinned_parameters_are_used() {
        let a = p("omega*x1");
        let b = p("2*x1");
        let mut c = RandomizedCheck::default();
        assert!(!equal_randomized(&a, &b, &c).unwrap());
        c.params.insert("omega".into(), 2.0);
        assert!(equal_randomized(&a, &b, &c).unwrap());
    }

    #[test]
    fn random_polynomials_respect_degree() {
        let vars = [VarId::x(1), VarId::y(1, 1)];
        for seed in 0..10 {
            let e = random_polynomial(seed, &vars, 3, 5);
            assert!(e.variables().iter().all(|v| vars.contains(v)));
        }
        assert_ne!(
            random_polynomial(1, &vars, 3, 5),
            random_polynomial(2, &vars, 3, 5)
        );
    }
}
