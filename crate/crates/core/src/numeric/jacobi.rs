//! Jacobi fields along geodesics.
//!
//! The Jacobi equation is integrated in covariant state
//! `v_α = ∇^α ξ`, `α = 0..k`, using
//!
//! ```text
//! dv_α/dt = v_{α+1} − N_(1) v_α,    v_{k+1} = −k! Σ_{α<k} R_(α) v_α / α!
//! ```
//!
//! jointly with the base geodesic, so that the coefficients are evaluated at
//! the RK4 stage points of the base flow itself.

use std::io::{self, Write};
use std::sync::Arc;

use super::{
    check_shape, ensure_finite, integrate_semispray_flow, rk4_step, write_row, IntegratorConfig,
    NumericError, Trajectory,
};
use crate::connection::{canonical_connection, dual_recursive, DualCoeffs};
use crate::curvature::curvature_with_canonical;
use crate::expr::{ExprError, JetPoint};
use crate::matrix::ExprMatrix;
use crate::semispray::{factorial_f64, geodesic_system, Semispray};

/// Samples of a variation field and (optionally) its covariant derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationSeries {
    times: Vec<f64>,
    /// `values[i][α]` is `∇^α ξ (t_i)`.
    values: Vec<Vec<Vec<f64>>>,
}

impl VariationSeries {
    pub fn new(times: Vec<f64>, values: Vec<Vec<Vec<f64>>>) -> Self {
        assert_eq!(times.len(), values.len(), "one value set per sample");
        VariationSeries { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of stored levels (1 for `ξ` alone).
    pub fn levels(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn dimension(&self) -> usize {
        self.values.first().map_or(0, |v| v[0].len())
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        &self.values[i][0]
    }

    pub fn level(&self, i: usize, alpha: usize) -> &[f64] {
        &self.values[i][alpha]
    }

    /// CSV with header `t,xi1..xin,nabla1_1..nabla{k}_n`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let n = self.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("xi{i}")));
        for level in 1..self.levels() {
            header.extend((1..=n).map(|i| format!("nabla{level}_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, v) in self.times.iter().zip(&self.values) {
            write_row(&mut w, *t, v.iter().flatten())?;
        }
        Ok(())
    }
}

/// Coefficients of the Jacobi equation of a semispray.
#[derive(Debug, Clone)]
pub struct JacobiOperator {
    n: usize,
    k: usize,
    first: ExprMatrix,
    curvature: Vec<ExprMatrix>,
    dual: DualCoeffs,
}

impl JacobiOperator {
    pub fn new(s: &Semispray) -> Self {
        let conn = canonical_connection(s);
        let curvature = curvature_with_canonical(s, &conn).levels().to_vec();
        JacobiOperator {
            n: s.dimension(),
            k: s.order(),
            first: conn.level(1).clone(),
            curvature,
            dual: dual_recursive(s),
        }
    }

    pub fn dual(&self) -> &DualCoeffs {
        &self.dual
    }

    /// Numeric `N_(1)` at `p`, row-major.
    pub fn connection_at(&self, p: &JetPoint) -> Result<Vec<f64>, ExprError> {
        self.first.evaluate(p)
    }

    /// Time derivative of the covariant state `v` (level-major) at `p`.
    pub fn rhs(&self, p: &JetPoint, v: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        let (n, k) = (self.n, self.k);
        let n1 = self.first.evaluate(p)?;
        let mut top = vec![0.0; n];
        for alpha in 0..k {
            let r = self.curvature[alpha].evaluate(p)?;
            let c = factorial_f64(k) / factorial_f64(alpha);
            mat_vec_acc(&r, &v[alpha * n..(alpha + 1) * n], -c, &mut top);
        }
        for alpha in 0..=k {
            let next = if alpha < k {
                &v[(alpha + 1) * n..(alpha + 2) * n]
            } else {
                &top[..]
            };
            let block = &mut out[alpha * n..(alpha + 1) * n];
            block.copy_from_slice(next);
            mat_vec_acc(&n1, &v[alpha * n..(alpha + 1) * n], -1.0, block);
        }
        Ok(())
    }

    /// Residual `(1/k!) v_{k+1} + Σ_{α<k} (1/α!) R_(α) v_α` at `p`.
    pub fn residual(&self, p: &JetPoint, v: &[Vec<f64>]) -> Result<Vec<f64>, ExprError> {
        let k = self.k;
        let mut out: Vec<f64> = v[k + 1].iter().map(|x| x / factorial_f64(k)).collect();
        for alpha in 0..k {
            let r = self.curvature[alpha].evaluate(p)?;
            mat_vec_acc(&r, &v[alpha], 1.0 / factorial_f64(alpha), &mut out);
        }
        Ok(out)
    }
}

/// `out += c · A v` for a row-major square `A`.
fn mat_vec_acc(a: &[f64], v: &[f64], c: f64, out: &mut [f64]) {
    let n = v.len();
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a[i * n + j] * v[j];
        }
        out[i] += c * acc;
    }
}

fn check_levels(levels: &[Vec<f64>], n: usize, k: usize, what: &str) -> Result<(), NumericError> {
    if levels.len() == k + 1 && levels.iter().all(|l| l.len() == n) {
        Ok(())
    } else {
        Err(NumericError::Config(format!(
            "{what} needs {} levels of {n} values",
            k + 1
        )))
    }
}

/// `∇^α ξ = ξ^(α) + α! Σ_{β=1}^{α} M_(β) ξ^(α−β) / (α−β)!` at `p`, where
/// `raw[m]` holds the ordinary derivative `ξ^(m)`.
pub fn covariant_from_raw(
    dual: &DualCoeffs,
    p: &JetPoint,
    raw: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, ExprError> {
    assert!(raw.len() <= dual.order() + 1, "too many levels");
    let ms = (1..raw.len())
        .map(|beta| dual.level(beta).evaluate(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(raw.len());
    for alpha in 0..raw.len() {
        let mut v = raw[alpha].clone();
        for beta in 1..=alpha {
            let c = factorial_f64(alpha) / factorial_f64(alpha - beta);
            mat_vec_acc(&ms[beta - 1], &raw[alpha - beta], c, &mut v);
        }
        out.push(v);
    }
    Ok(out)
}

/// Inverse of [`covariant_from_raw`].
pub fn raw_from_covariant(
    dual: &DualCoeffs,
    p: &JetPoint,
    cov: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, ExprError> {
    assert!(cov.len() <= dual.order() + 1, "too many levels");
    let ms = (1..cov.len())
        .map(|beta| dual.level(beta).evaluate(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(cov.len());
    for alpha in 0..cov.len() {
        let mut d = cov[alpha].clone();
        for beta in 1..=alpha {
            let c = factorial_f64(alpha) / factorial_f64(alpha - beta);
            mat_vec_acc(&ms[beta - 1], &raw[alpha - beta], -c, &mut d);
        }
        raw.push(d);
    }
    Ok(raw)
}

fn check_grid(traj: &Trajectory, cfg: &IntegratorConfig) -> Result<(), NumericError> {
    let steps = cfg.steps();
    if traj.len() != steps + 1 {
        return Err(NumericError::Grid(format!(
            "trajectory has {} samples, configuration needs {}",
            traj.len(),
            steps + 1
        )));
    }
    let tol = 1e-9 * cfg.h;
    let aligned = traj
        .times()
        .iter()
        .enumerate()
        .all(|(i, t)| (t - cfg.time(i)).abs() <= tol.max(1e-12 * t.abs()));
    if aligned {
        Ok(())
    } else {
        Err(NumericError::Grid("sample times differ from the configured grid".into()))
    }
}

/// Integrate the Jacobi equation along `traj` from covariant initial data
/// `init[α] = ∇^α ξ (t0)`, `α = 0..k`.
pub fn integrate_jacobi(
    s: &Semispray,
    traj: &Trajectory,
    init: &[Vec<f64>],
    cfg: &IntegratorConfig,
) -> Result<VariationSeries, NumericError> {
    let (n, k) = (s.dimension(), s.order());
    check_shape(s, traj.point(0))?;
    check_levels(init, n, k, "the variation initial value")?;
    check_grid(traj, cfg)?;
    let op = JacobiOperator::new(s);
    let sys = geodesic_system(s);
    let params = Arc::clone(traj.point(0).params());
    let base_len = n * (k + 1);
    let to_point = |state: &[f64]| {
        JetPoint::from_coords(n, k, state[..base_len].to_vec())
            .expect("state length matches the jet layout")
            .with_params(Arc::clone(&params))
    };
    let mut state = traj.point(0).coords().to_vec();
    state.extend(init.iter().flatten());
    ensure_finite(&state, cfg.t0)?;
    let split = |state: &[f64]| -> Vec<Vec<f64>> {
        state[base_len..].chunks(n).map(<[f64]>::to_vec).collect()
    };
    let mut times = vec![cfg.t0];
    let mut values = vec![split(&state)];
    for i in 0..cfg.steps() {
        rk4_step(
            |t, y, out| {
                let p = to_point(y);
                let (base_out, var_out) = out.split_at_mut(base_len);
                sys.eval_rhs(&p, base_out)
                    .and_then(|_| op.rhs(&p, &y[base_len..], var_out))
                    .map_err(|source| NumericError::Eval { t, source })
            },
            cfg.time(i),
            &mut state,
            cfg.h,
        )?;
        let t = cfg.time(i + 1);
        ensure_finite(&state, t)?;
        times.push(t);
        values.push(split(&state));
    }
    Ok(VariationSeries::new(times, values))
}

/// Central-difference approximation of the variation field of the family of
/// geodesics with initial jets `init ± s·δ`, where level `α` of `δ` is
/// `ξ^(α)(t0)/α!` for the ordinary derivatives `direction[α] = ξ^(α)(t0)`.
pub fn variation_oracle(
    s: &Semispray,
    init: &JetPoint,
    direction: &[Vec<f64>],
    offset: f64,
    cfg: &IntegratorConfig,
) -> Result<VariationSeries, NumericError> {
    let (n, k) = (s.dimension(), s.order());
    check_shape(s, init)?;
    check_levels(direction, n, k, "the variation direction")?;
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(NumericError::Config(format!("offset {offset} must be positive")));
    }
    let shifted = |sign: f64| {
        let mut coords = init.coords().to_vec();
        for (alpha, level) in direction.iter().enumerate() {
            let c = sign * offset / factorial_f64(alpha);
            for (i, d) in level.iter().enumerate() {
                coords[alpha * n + i] += c * d;
            }
        }
        JetPoint::from_coords(n, k, coords)
            .expect("layout preserved")
            .with_params(Arc::clone(init.params()))
    };
    let plus = integrate_semispray_flow(s, &shifted(1.0), cfg)?;
    let minus = integrate_semispray_flow(s, &shifted(-1.0), cfg)?;
    let values = (0..plus.len())
        .map(|i| {
            let xi = plus
                .position(i)
                .iter()
                .zip(minus.position(i))
                .map(|(a, b)| (a - b) / (2.0 * offset))
                .collect();
            vec![xi]
        })
        .collect();
    Ok(VariationSeries::new(plus.times().to_vec(), values))
}

/// Largest absolute difference over samples, components, and the levels
/// stored in both series.
pub fn series_max_error(a: &VariationSeries, b: &VariationSeries) -> Result<f64, NumericError> {
    if a.len() != b.len() {
        return Err(NumericError::Grid(format!(
            "series have {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    if a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + t.abs())) {
        return Err(NumericError::Grid("sample times differ".into()));
    }
    let levels = a.levels().min(b.levels());
    let mut worst: f64 = 0.0;
    for (va, vb) in a.values.iter().zip(&b.values) {
        for alpha in 0..levels {
            for (x, y) in va[alpha].iter().zip(&vb[alpha]) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    Ok(worst)
}

/// The tangent field `ξ = dx/dt = y^(1)` of a trajectory.
pub fn tangent_variation(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.points().iter().map(|p| p.level(1).to_vec()).collect()
}

/// Central finite difference of order `order ∈ 1..=4` at sample `i`; the
/// first derivative uses the five-point fourth-order stencil. Needs two
/// samples on each side.
pub fn central_difference(values: &[f64], order: usize, h: f64, i: usize) -> f64 {
    let f = |o: isize| values[(i as isize + o) as usize];
    match order {
        1 => (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h),
        2 => (f(-1) - 2.0 * f(0) + f(1)) / (h * h),
        3 => (-f(-2) + 2.0 * f(-1) - 2.0 * f(1) + f(2)) / (2.0 * h * h * h),
        4 => (f(-2) - 4.0 * f(-1) + 6.0 * f(0) - 4.0 * f(1) + f(2)) / (h * h * h * h),
        _ => panic!("unsupported derivative order {order}"),
    }
}

/// Sampled magnitudes of a residual along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledResidual {
    pub times: Vec<f64>,
    /// Largest absolute component at each sample.
    pub values: Vec<f64>,
}

impl SampledResidual {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Jacobi residual of a sampled field `ξ(t_i)` along `traj`, with covariant
/// derivatives rebuilt by finite differences: `∇V = dV/dt + N_(1) V`. Each
/// derivative uses the five-point stencil, so `2(k+1)` samples are lost at
/// each end.
pub fn jacobi_residual_fd(
    s: &Semispray,
    traj: &Trajectory,
    xi: &[Vec<f64>],
) -> Result<SampledResidual, NumericError> {
    let (n, k) = (s.dimension(), s.order());
    check_shape(s, traj.point(0))?;
    if xi.len() != traj.len() || xi.iter().any(|v| v.len() != n) {
        return Err(NumericError::Grid("field samples do not match the trajectory".into()));
    }
    let margin = 2 * (k + 1);
    if traj.len() < 2 * margin + 1 {
        return Err(NumericError::Grid("trajectory too short for the stencil".into()));
    }
    let h = traj.times()[1] - traj.times()[0];
    let op = JacobiOperator::new(s);
    let eval_err = |i: usize| move |source| NumericError::Eval { t: traj.times()[i], source };
    let n1 = (0..traj.len())
        .map(|i| op.connection_at(traj.point(i)).map_err(eval_err(i)))
        .collect::<Result<Vec<_>, _>>()?;
    // levels[m][i] = ∇^m ξ at sample i (meaningful for 2m ≤ i < len − 2m).
    let mut levels = vec![xi.to_vec()];
    for m in 1..=k + 1 {
        let prev = &levels[m - 1];
        let mut next = vec![vec![0.0; n]; traj.len()];
        for i in 2 * m..traj.len() - 2 * m {
            for c in 0..n {
                let series: Vec<f64> = (i - 2..=i + 2).map(|j| prev[j][c]).collect();
                next[i][c] = central_difference(&series, 1, h, 2);
            }
            mat_vec_acc(&n1[i], &prev[i], 1.0, &mut next[i]);
        }
        levels.push(next);
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in margin..traj.len() - margin {
        let v: Vec<Vec<f64>> = levels.iter().map(|l| l[i].clone()).collect();
        let r = op.residual(traj.point(i), &v).map_err(eval_err(i))?;
        times.push(traj.times()[i]);
        values.push(r.iter().map(|x| x.abs()).fold(0.0, f64::max));
    }
    Ok(SampledResidual { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::semispray::make_semispray;

    fn spray(n: usize, k: usize, g: &[&str]) -> Semispray {
        let g = g.iter().map(|s| parse_expression(s, n, k).unwrap()).collect();
        make_semispray(n, k, g).unwrap()
    }

    fn spinning() -> (Semispray, JetPoint) {
        let sp = spray(1, 3, &["omega^2*y2_1/12"]);
        let mut p = JetPoint::from_levels(&[0.0], &[vec![2.0], vec![0.0], vec![-8.0 / 6.0]]).unwrap();
        p.set_param("omega", 2.0);
        (sp, p)
    }

    fn column(levels: &[f64]) -> Vec<Vec<f64>> {
        levels.iter().map(|v| vec![*v]).collect()
    }

    #[test]
    fn spinning_particle_closed_forms() {
        let (sp, init) = spinning();
        let cfg = IntegratorConfig::new(0.0, 1.0, 1e-3).unwrap();
        let traj = integrate_semispray_flow(&sp, &init, &cfg).unwrap();
        let lin = integrate_jacobi(&sp, &traj, &column(&[0.0, 1.0, 0.0, 0.0]), &cfg).unwrap();
        let cos = integrate_jacobi(&sp, &traj, &column(&[1.0, 0.0, -4.0, 0.0]), &cfg).unwrap();
        for i in 0..lin.len() {
            let t = lin.times()[i];
            assert!((lin.xi(i)[0] - t).abs() < 1e-8);
            assert!((cos.xi(i)[0] - (2.0 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn free_variation_is_linear() {
        let sp = spray(1, 1, &["0"]);
        let init = JetPoint::from_levels(&[0.0], &[vec![1.0]]).unwrap();
        let cfg = IntegratorConfig::new(0.0, 2.0, 0.1).unwrap();
        let traj = integrate_semispray_flow(&sp, &init, &cfg).unwrap();
        let jac = integrate_jacobi(&sp, &traj, &column(&[0.5, 2.0]), &cfg).unwrap();
        let orc = variation_oracle(&sp, &init, &column(&[0.5, 2.0]), 1e-2, &cfg).unwrap();
        for i in 0..jac.len() {
            let t = jac.times()[i];
            assert!((jac.xi(i)[0] - (0.5 + 2.0 * t)).abs() < 1e-12);
            assert!((orc.xi(i)[0] - (0.5 + 2.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn covariant_conversion_round_trips() {
        let sp = spray(2, 3, &["x2*y3_1^2 + y1_2", "y3_2*y3_1 - x1*y2_2"]);
        let dual = dual_recursive(&sp);
        let p = JetPoint::from_levels(&[0.3, -0.2], &[vec![1.0, 0.5], vec![0.2, -0.4], vec![0.7, 0.1]])
            .unwrap();
        let raw = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.25, 3.0], vec![2.0, -2.0]];
        let cov = covariant_from_raw(&dual, &p, &raw).unwrap();
        assert_ne!(cov, raw);
        let back = raw_from_covariant(&dual, &p, &cov).unwrap();
        for (a, b) in raw.iter().flatten().zip(back.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_approaches_jacobi_quadratically() {
        // Nonlinear order-2 model: the ±s geodesics differ from the linear
        // variation at O(s²).
        let sp = spray(1, 2, &["x1*y1_1^2/4 + y2_1^2/5"]);
        let init = JetPoint::from_levels(&[0.3], &[vec![0.8], vec![-0.2]]).unwrap();
        let cfg = IntegratorConfig::new(0.0, 1.0, 1e-3).unwrap();
        let traj = integrate_semispray_flow(&sp, &init, &cfg).unwrap();
        let raw = column(&[1.0, -0.5, 0.3]);
        let op = JacobiOperator::new(&sp);
        let cov = covariant_from_raw(op.dual(), &init, &raw).unwrap();
        let jac = integrate_jacobi(&sp, &traj, &cov, &cfg).unwrap();
        let e = |s: f64| {
            let orc = variation_oracle(&sp, &init, &raw, s, &cfg).unwrap();
            series_max_error(&orc, &jac).unwrap()
        };
        let (e1, e2) = (e(4e-2), e(2e-2));
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} ({e1}, {e2})");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let (sp, init) = spinning();
        let cfg = IntegratorConfig::new(0.0, 1.0, 1e-2).unwrap();
        let traj = integrate_semispray_flow(&sp, &init, &cfg).unwrap();
        let other = IntegratorConfig::new(0.0, 1.0, 5e-3).unwrap();
        assert!(matches!(
            integrate_jacobi(&sp, &traj, &column(&[0.0, 1.0, 0.0, 0.0]), &other),
            Err(NumericError::Grid(_))
        ));
    }

    #[test]
    fn series_error() {
        let a = VariationSeries::new(vec![0.0, 1.0], vec![vec![vec![1.0]], vec![vec![2.0]]]);
        let b = VariationSeries::new(vec![0.0, 1.0], vec![vec![vec![1.0001]], vec![vec![2.0001]]]);
        assert_eq!(series_max_error(&a, &a).unwrap(), 0.0);
        assert!((series_max_error(&a, &b).unwrap() - 1e-4).abs() < 1e-15);
        let c = VariationSeries::new(vec![0.0], vec![vec![vec![1.0]]]);
        assert!(series_max_error(&a, &c).is_err());
    }

    #[test]
    fn integrated_jacobi_fields_have_small_fd_residual() {
        let (sp, init) = spinning();
        let cfg = IntegratorConfig::new(0.0, 1.0, 1e-2).unwrap();
        let traj = integrate_semispray_flow(&sp, &init, &cfg).unwrap();
        let jac = integrate_jacobi(&sp, &traj, &column(&[1.0, 0.3, -4.0, 0.5]), &cfg).unwrap();
        let xi: Vec<Vec<f64>> = (0..jac.len()).map(|i| jac.xi(i).to_vec()).collect();
        let res = jacobi_residual_fd(&sp, &traj, &xi).unwrap();
        assert!(res.max() < 1e-4, "residual {}", res.max());
        // A field that is not a Jacobi field shows up clearly.
        let bad: Vec<Vec<f64>> = traj.times().iter().map(|t| vec![t * t * t * t]).collect();
        assert!(jacobi_residual_fd(&sp, &traj, &bad).unwrap().max() > 1.0);
    }

    #[test]
    fn variation_csv_header() {
        let a = VariationSeries::new(vec![0.0], vec![vec![vec![1.0, 2.0], vec![3.0, 4.0]]]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,xi1,xi2,nabla1_1,nabla1_2\n"));
    }
}
