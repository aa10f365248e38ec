//! Riemannian metrics, their geodesic sprays, and the order-3 semispray of
//! the prolongation Lagrangian `L2 = ½ g(z, z)` with covariant acceleration
//! `z^i = y^(2)i + ½ γ^i_jk y^(1)j y^(1)k`.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::covariant::nabla_vector;
use crate::connection::canonical_connection;
use crate::curvature::curvature_canonical;
use crate::expr::{
    compare_randomized, differentiate, evaluate, simplify, Expr, ExprError, JetPoint,
    RandomizedCheck, VarId,
};
use crate::matrix::ExprMatrix;
use crate::numeric::{central_difference, NumericError, SampledResidual, Trajectory};
use crate::semispray::{make_semispray, tulczyjew_apply, Semispray};

/// Largest supported dimension (symbolic inversion is by cofactors).
pub const MAX_DIMENSION: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric dimension {0} is outside 1..={MAX_DIMENSION}")]
    Dimension(usize),
    #[error("metric entry ({i}, {j}) depends on {var}; entries must depend on x only")]
    JetDependence { i: usize, j: usize, var: VarId },
    #[error("metric is not symmetric at entries ({i}, {j}) and ({j}, {i})")]
    NotSymmetric { i: usize, j: usize },
    #[error("metric determinant vanishes identically")]
    Degenerate,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        _ => {
            let terms = (0..n)
                .filter(|&j| !m[0][j].is_zero())
                .map(|j| {
                    let sign = if j % 2 == 0 { Expr::one() } else { Expr::int(-1) };
                    Expr::product(vec![sign, m[0][j].clone(), determinant(&minor(m, 0, j))])
                })
                .collect();
            simplify(&Expr::sum(terms))
        }
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// A metric `g_ij(x)` with its symbolic inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    g: ExprMatrix,
    inverse: ExprMatrix,
    det: Expr,
}

impl Metric {
    pub fn new(g: ExprMatrix) -> Result<Self, MetricError> {
        let n = g.dim();
        if n == 0 || n > MAX_DIMENSION {
            return Err(MetricError::Dimension(n));
        }
        let g = g.simplified();
        let check = RandomizedCheck::default();
        for i in 0..n {
            for j in 0..n {
                if let Some(var) = g.get(i, j).variables().into_iter().find(|v| v.level() > 0) {
                    return Err(MetricError::JetDependence { i: i + 1, j: j + 1, var });
                }
                if j > i
                    && g.get(i, j) != g.get(j, i)
                    && !compare_randomized(g.get(i, j), g.get(j, i), &check)?.equal
                {
                    return Err(MetricError::NotSymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
        let rows = g.rows();
        let det = determinant(&rows);
        if det.is_zero() || compare_randomized(&det, &Expr::zero(), &check)?.equal {
            return Err(MetricError::Degenerate);
        }
        let inv_det = Expr::powi(det.clone(), -1);
        let inverse = ExprMatrix::from_fn(n, |i, j| {
            // (g^{-1})_ij = (−1)^{i+j} det(minor_ji) / det
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            let cof = if n == 1 { Expr::one() } else { determinant(&minor(&rows, j, i)) };
            simplify(&Expr::product(vec![Expr::int(sign), cof, inv_det.clone()]))
        });
        Ok(Metric { g, inverse, det })
    }

    /// A constant or position-dependent diagonal metric.
    pub fn diagonal(entries: Vec<Expr>) -> Result<Self, MetricError> {
        let n = entries.len();
        Metric::new(ExprMatrix::from_fn(n, |i, j| {
            if i == j {
                entries[i].clone()
            } else {
                Expr::zero()
            }
        }))
    }

    pub fn dimension(&self) -> usize {
        self.g.dim()
    }

    pub fn matrix(&self) -> &ExprMatrix {
        &self.g
    }

    pub fn inverse(&self) -> &ExprMatrix {
        &self.inverse
    }

    pub fn determinant(&self) -> &Expr {
        &self.det
    }
}

/// Levi-Civita symbols `γ^i_jk`, zero-based `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    symbols: Vec<Expr>,
}

impl Christoffel {
    pub fn get(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.symbols[(i * self.n + j) * self.n + k]
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// `½ γ^i_jk v^j w^k` summed, for each `i`.
    fn contract(&self, v: &[Expr], w: &[Expr], scale: &BigRational) -> Vec<Expr> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut terms = Vec::new();
                for j in 0..n {
                    for k in 0..n {
                        let c = self.get(i, j, k);
                        if !c.is_zero() {
                            terms.push(Expr::product(vec![c.clone(), v[j].clone(), w[k].clone()]));
                        }
                    }
                }
                simplify(&Expr::sum(terms).scale(scale.clone()))
            })
            .collect()
    }
}

/// `γ^i_jk = ½ g^il (∂_k g_lj + ∂_j g_lk − ∂_l g_jk)`.
pub fn christoffel(metric: &Metric) -> Christoffel {
    let n = metric.dimension();
    let g = metric.matrix();
    let dg = |a: usize, b: usize, c: usize| differentiate(g.get(a, b), VarId::x(c as u32 + 1));
    // Lowered symbols Γ_ljk.
    let mut lowered = vec![Expr::zero(); n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                let e = dg(l, j, k) + dg(l, k, j) - dg(j, k, l);
                lowered[(l * n + j) * n + k] = simplify(&e.scale(half()));
            }
        }
    }
    let mut symbols = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let terms = (0..n)
                    .filter(|&l| !metric.inverse().get(i, l).is_zero())
                    .map(|l| metric.inverse().get(i, l) * &lowered[(l * n + j) * n + k])
                    .collect();
                symbols.push(simplify(&Expr::sum(terms)));
            }
        }
    }
    Christoffel { n, symbols }
}

fn jet_vector(level: u32, n: usize) -> Vec<Expr> {
    (1..=n as u32).map(|i| Expr::y(level, i)).collect()
}

/// The geodesic spray `G^i = ½ γ^i_jk y^j y^k` (order 1).
pub fn metric_spray(metric: &Metric) -> Semispray {
    let n = metric.dimension();
    let y = jet_vector(1, n);
    let g = christoffel(metric).contract(&y, &y, &half());
    make_semispray(n, 1, g).expect("spray coefficients are well formed")
}

/// Covariant acceleration `z^i` and the Lagrangian `L2 = ½ g_ij z^i z^j`.
pub fn prolong_lagrangian(metric: &Metric) -> (Vec<Expr>, Expr) {
    let n = metric.dimension();
    let y1 = jet_vector(1, n);
    let gamma_yy = christoffel(metric).contract(&y1, &y1, &half());
    let z: Vec<Expr> = (0..n)
        .map(|i| simplify(&(Expr::y(2, i as u32 + 1) + gamma_yy[i].clone())))
        .collect();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let gij = metric.matrix().get(i, j);
            if !gij.is_zero() {
                terms.push(Expr::product(vec![gij.clone(), z[i].clone(), z[j].clone()]));
            }
        }
    }
    let l2 = simplify(&Expr::sum(terms).scale(half()));
    (z, l2)
}

/// Order-3 semispray of the Euler–Lagrange equations of `L2`:
/// `6 g_ij G^j = ∂L2/∂x^i − d_T(∂L2/∂y^(1)i) + ½ d_T²(∂L2/∂y^(2)i)`.
pub fn el_semispray3(metric: &Metric) -> Semispray {
    let n = metric.dimension();
    let (_, l2) = prolong_lagrangian(metric);
    let lhs: Vec<Expr> = (1..=n as u32)
        .map(|l| {
            let dx = differentiate(&l2, VarId::x(l));
            let d1 = tulczyjew_apply(&differentiate(&l2, VarId::y(1, l)), n, 3);
            let d2 = differentiate(&l2, VarId::y(2, l));
            let d2 = tulczyjew_apply(&tulczyjew_apply(&d2, n, 3), n, 3);
            simplify(&(dx - d1 + d2.scale(half())))
        })
        .collect();
    let sixth = BigRational::new(BigInt::from(1), BigInt::from(6));
    let g = metric.inverse().scale(&sixth).apply(&lhs);
    make_semispray(n, 3, g).expect("Euler–Lagrange coefficients are well formed")
}

/// Curvature tensor, zero-based `(i, j, k, l)`:
/// `R^i_jkl = ∂_k γ^i_lj − ∂_l γ^i_kj + γ^i_km γ^m_lj − γ^i_lm γ^m_kj`.
///
/// With this convention the geodesic-spray curvature is
/// `R^i_j = R^i_kjl y^k y^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    n: usize,
    components: Vec<Expr>,
}

impl RiemannTensor {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> &Expr {
        let n = self.n;
        &self.components[((i * n + j) * n + k) * n + l]
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// `R^i_kjl v^k w^l` as a matrix in `(i, j)`.
    pub fn contract(&self, v: &[Expr], w: &[Expr]) -> ExprMatrix {
        let n = self.n;
        ExprMatrix::from_fn(n, |i, j| {
            let mut terms = Vec::new();
            for k in 0..n {
                for l in 0..n {
                    let c = self.get(i, k, j, l);
                    if !c.is_zero() {
                        terms.push(Expr::product(vec![c.clone(), v[k].clone(), w[l].clone()]));
                    }
                }
            }
            simplify(&Expr::sum(terms))
        })
    }

    /// `R^i_jsk v^s w^k` as a matrix in `(i, j)`.
    pub fn contract_last(&self, v: &[Expr], w: &[Expr]) -> ExprMatrix {
        let n = self.n;
        ExprMatrix::from_fn(n, |i, j| {
            let mut terms = Vec::new();
            for s in 0..n {
                for k in 0..n {
                    let c = self.get(i, j, s, k);
                    if !c.is_zero() {
                        terms.push(Expr::product(vec![c.clone(), v[s].clone(), w[k].clone()]));
                    }
                }
            }
            simplify(&Expr::sum(terms))
        })
    }
}

pub fn riemann_tensor(metric: &Metric) -> RiemannTensor {
    let n = metric.dimension();
    let gamma = christoffel(metric);
    let d = |i: usize, a: usize, b: usize, c: usize| {
        differentiate(gamma.get(i, a, b), VarId::x(c as u32 + 1))
    };
    let mut components = Vec::with_capacity(n * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut terms = vec![d(i, l, j, k), Expr::neg(d(i, k, j, l))];
                    for m in 0..n {
                        terms.push(gamma.get(i, k, m) * gamma.get(m, l, j));
                        terms.push(Expr::neg(gamma.get(i, l, m) * gamma.get(m, k, j)));
                    }
                    components.push(simplify(&Expr::sum(terms)));
                }
            }
        }
    }
    RiemannTensor { n, components }
}

/// Curvature `R^i_j(x, y)` of the geodesic spray.
pub fn spray_curvature(metric: &Metric) -> ExprMatrix {
    curvature_canonical(&metric_spray(metric)).level(0).clone()
}

/// Order-3 jet of the metric geodesic through `(x, y1)`:
/// `y^(2) = −G(x, y1)` and `y^(3) = −S(G)/3` for the geodesic spray `G`.
pub fn geodesic_jet3(metric: &Metric, x: &[f64], y1: &[f64]) -> Result<JetPoint, ExprError> {
    let spray = metric_spray(metric);
    let base = JetPoint::from_levels(x, &[y1.to_vec()]).expect("x and y1 have equal length");
    let y2 = spray
        .coefficients()
        .iter()
        .map(|g| evaluate(g, &base).map(|v| -v))
        .collect::<Result<Vec<_>, _>>()?;
    let y3 = spray
        .coefficients()
        .iter()
        .map(|g| evaluate(&spray.apply(g), &base).map(|v| -v / 3.0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JetPoint::from_levels(x, &[y1.to_vec(), y2, y3]).expect("consistent lengths"))
}

/// Symbolic `∇³y^(1) + R(x, y^(1)) ∇y^(1)`, with `∇` the dynamical
/// derivative of the Euler–Lagrange semispray. It vanishes identically:
/// the Euler–Lagrange equations of `L2` are the biharmonic equations.
pub fn biharmonic_expression(metric: &Metric) -> Vec<Expr> {
    let n = metric.dimension();
    let el = el_semispray3(metric);
    let conn = canonical_connection(&el);
    let v1 = nabla_vector(&el, &conn, &jet_vector(1, n));
    let v2 = nabla_vector(&el, &conn, &v1);
    let v3 = nabla_vector(&el, &conn, &v2);
    let rv = spray_curvature(metric).apply(&v1);
    v3.iter().zip(&rv).map(|(a, b)| simplify(&(a + b))).collect()
}

/// Largest component of `D³ċ + R(x, ċ) Dċ` along the sampled base curve of
/// `traj`, where `D V = dV/dt + γ(ċ) V` is the Levi-Civita derivative along
/// the curve. Time derivatives use the five-point stencil, so six samples
/// are lost at each end.
pub fn biharmonic_residual(metric: &Metric, traj: &Trajectory) -> Result<SampledResidual, NumericError> {
    let n = metric.dimension();
    if traj.dimension() != n {
        return Err(NumericError::Shape {
            n,
            k: traj.order(),
            found_n: traj.dimension(),
            found_k: traj.order(),
        });
    }
    let margin = 6;
    if traj.len() < 2 * margin + 1 {
        return Err(NumericError::Grid("trajectory too short for the stencil".into()));
    }
    let h = traj.times()[1] - traj.times()[0];
    let spray = metric_spray(metric);
    let first = canonical_connection(&spray).level(1).clone();
    let curvature = spray_curvature(metric);
    let mut gamma = Vec::with_capacity(traj.len());
    let mut r = Vec::with_capacity(traj.len());
    for (t, p) in traj.times().iter().zip(traj.points()) {
        let p = JetPoint::from_levels(p.level(0), &[p.level(1).to_vec()])
            .expect("levels of one point have equal length")
            .with_params(p.params().clone());
        let err = |source| NumericError::Eval { t: *t, source };
        gamma.push(first.evaluate(&p).map_err(err)?);
        r.push(curvature.evaluate(&p).map_err(err)?);
    }
    let mat_vec = |m: &[f64], v: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
    };
    let mut levels = vec![traj.points().iter().map(|p| p.level(1).to_vec()).collect::<Vec<_>>()];
    for m in 1..=3 {
        let prev = &levels[m - 1];
        let mut next = vec![vec![0.0; n]; traj.len()];
        for i in 2 * m..traj.len() - 2 * m {
            let g = mat_vec(&gamma[i], &prev[i]);
            for c in 0..n {
                let series: Vec<f64> = (i - 2..=i + 2).map(|j| prev[j][c]).collect();
                next[i][c] = central_difference(&series, 1, h, 2) + g[c];
            }
        }
        levels.push(next);
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in margin..traj.len() - margin {
        let rv = mat_vec(&r[i], &levels[1][i]);
        let worst = (0..n)
            .map(|c| (levels[3][i][c] + rv[c]).abs())
            .fold(0.0, f64::max);
        times.push(traj.times()[i]);
        values.push(worst);
    }
    Ok(SampledResidual { times, values })
}
