//! Fixed-step integration of semispray flows and Jacobi fields.

mod jacobi;

use std::io::{self, Write};
use std::sync::Arc;

use crate::expr::{ExprError, JetPoint};
use crate::semispray::{geodesic_system, Semispray};

pub use jacobi::{
    central_difference, covariant_from_raw, integrate_jacobi, jacobi_residual_fd, raw_from_covariant,
    series_max_error, tangent_variation, variation_oracle, JacobiOperator, SampledResidual,
    VariationSeries,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("expected a point of dimension {n} and order {k}, got dimension {found_n} and order {found_k}")]
    Shape {
        n: usize,
        k: usize,
        found_n: usize,
        found_k: usize,
    },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: ExprError },
    #[error("grid mismatch: {0}")]
    Grid(String),
}

/// Classical fourth-order Runge–Kutta on a uniform grid over `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

const MAX_STEPS: f64 = 1e8;

impl IntegratorConfig {
    /// The step must divide the interval (to 1e−9 relative).
    pub fn new(t0: f64, t1: f64, h: f64) -> Result<Self, NumericError> {
        if !(t0.is_finite() && t1.is_finite() && h.is_finite()) {
            return Err(NumericError::Config("non-finite bounds or step".into()));
        }
        if h <= 0.0 {
            return Err(NumericError::Config(format!("step {h} must be positive")));
        }
        if t1 <= t0 {
            return Err(NumericError::Config(format!("t1 = {t1} must exceed t0 = {t0}")));
        }
        let steps = (t1 - t0) / h;
        if steps > MAX_STEPS {
            return Err(NumericError::Config(format!("{steps:.0} steps exceed the limit")));
        }
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(NumericError::Config(format!(
                "step {h} does not divide [{t0}, {t1}]"
            )));
        }
        Ok(IntegratorConfig { t0, t1, h })
    }

    pub fn steps(&self) -> usize {
        ((self.t1 - self.t0) / self.h).round() as usize
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }
}

/// One RK4 step of `dy/dt = f(t, y)`, in place.
pub fn rk4_step<E>(
    mut f: impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    t: f64,
    y: &mut [f64],
    h: f64,
) -> Result<(), E> {
    let m = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    f(t, y, &mut k1)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..m {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, &tmp, &mut k4)?;
    for i in 0..m {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Samples of the lifted geodesic `t ↦ j^k c(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    points: Vec<JetPoint>,
}

impl Trajectory {
    pub(crate) fn new(times: Vec<f64>, points: Vec<JetPoint>) -> Self {
        Trajectory { times, points }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].dimension()
    }

    pub fn order(&self) -> usize {
        self.points[0].order()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[JetPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &JetPoint {
        &self.points[i]
    }

    /// Base coordinates `x(t_i)`.
    pub fn position(&self, i: usize) -> &[f64] {
        self.points[i].level(0)
    }

    /// Per-sample flag: `y^(1) ≠ 0`.
    pub fn regularity(&self) -> Vec<bool> {
        self.points.iter().map(JetPoint::is_regular).collect()
    }

    /// False if the curve passed through the zero section `y^(1) = 0`.
    pub fn all_regular(&self) -> bool {
        self.points.iter().all(JetPoint::is_regular)
    }

    /// CSV with header `t,x1..xn,y1_1..yk_n`, 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let (n, k) = (self.dimension(), self.order());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        for level in 1..=k {
            header.extend((1..=n).map(|i| format!("y{level}_{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, p) in self.times.iter().zip(&self.points) {
            write_row(&mut w, *t, p.coords().iter())?;
        }
        Ok(())
    }
}

pub(crate) fn write_row<'a>(
    w: &mut impl Write,
    t: f64,
    values: impl Iterator<Item = &'a f64>,
) -> io::Result<()> {
    write!(w, "{t:.16e}")?;
    for v in values {
        write!(w, ",{v:.16e}")?;
    }
    writeln!(w)
}

pub(crate) fn check_shape(s: &Semispray, p: &JetPoint) -> Result<(), NumericError> {
    if p.dimension() == s.dimension() && p.order() == s.order() {
        Ok(())
    } else {
        Err(NumericError::Shape {
            n: s.dimension(),
            k: s.order(),
            found_n: p.dimension(),
            found_k: p.order(),
        })
    }
}

pub(crate) fn ensure_finite(state: &[f64], t: f64) -> Result<(), NumericError> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericError::NonFinite { t })
    }
}

/// Integrate the flow of `s` from `init` with RK4.
pub fn integrate_semispray_flow(
    s: &Semispray,
    init: &JetPoint,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, NumericError> {
    check_shape(s, init)?;
    let sys = geodesic_system(s);
    let (n, k) = (s.dimension(), s.order());
    let params = Arc::clone(init.params());
    let to_point = |state: &[f64]| {
        JetPoint::from_coords(n, k, state.to_vec())
            .expect("state length matches the jet layout")
            .with_params(Arc::clone(&params))
    };
    let steps = cfg.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let mut state = init.coords().to_vec();
    ensure_finite(&state, cfg.t0)?;
    times.push(cfg.t0);
    points.push(to_point(&state));
    for i in 0..steps {
        let t = cfg.time(i);
        rk4_step(
            |t, y, out| {
                sys.eval_rhs(&to_point(y), out)
                    .map_err(|source| NumericError::Eval { t, source })
            },
            t,
            &mut state,
            cfg.h,
        )?;
        let t_next = cfg.time(i + 1);
        ensure_finite(&state, t_next)?;
        times.push(t_next);
        points.push(to_point(&state));
    }
    Ok(Trajectory::new(times, points))
}
