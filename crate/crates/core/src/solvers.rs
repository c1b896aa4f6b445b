//! Accelerated proximal gradient for complex least squares with an `ℓ1`-ball
//! constraint or a squared-`ℓ1` penalty.
//!
//! Complex coordinates are treated as groups of two reals: thresholding acts
//! on magnitudes and keeps phases.
//!
//! Internally each problem is rescaled so that `‖A‖ = ‖b‖ = 1`; the
//! reported certificate (gradient-mapping norm) and the stopping rule
//! `‖G(x)‖ ≤ tol · (1 + ‖x‖)` refer to that rescaled problem, which makes
//! `tol` a relative accuracy.

use serde::{Deserialize, Serialize};

use crate::conv::{operator_norm, LinearOperator, POWER_ITERS};
use crate::error::{Error, Result};
use crate::signal::{C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Relative margin added to the Lipschitz estimate.
    pub step_safety: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 5000,
            tol: 1e-9,
            step_safety: 0.1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig(
                "solver.max_iters must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig("solver.tol must be positive".into()));
        }
        if !(self.step_safety > 0.0 && self.step_safety <= 1.0) {
            return Err(Error::InvalidConfig(
                "solver.step_safety must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub solution: Vec<C64>,
    /// Objective in the original (unscaled) units.
    pub objective: f64,
    /// Gradient-mapping norm at `solution` for the rescaled problem.
    pub certificate: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn l1(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rescale every entry of `f` to magnitude `new_mag(|f_k|)`, keeping its phase.
fn with_magnitudes(f: &[C64], new_mag: impl Fn(f64) -> f64) -> Vec<C64> {
    f.iter()
        .map(|&z| {
            let a = z.norm();
            let b = new_mag(a);
            if a == 0.0 || b <= 0.0 {
                ZERO
            } else {
                z * (b / a)
            }
        })
        .collect()
}

/// Euclidean projection onto `{g : Σ|g_k| ≤ r}`.
pub fn project_l1_ball(f: &[C64], r: f64) -> Vec<C64> {
    assert!(r >= 0.0, "radius must be non-negative");
    if l1(f) <= r {
        return f.to_vec();
    }
    if r == 0.0 {
        return vec![ZERO; f.len()];
    }
    let mut mags: Vec<f64> = f.iter().map(|z| z.norm()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cum += u;
        let t = (cum - r) / (j + 1) as f64;
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    with_magnitudes(f, |a| a - theta)
}

/// `argmin_g ½‖g − f‖² + γ (Σ|g_k|)²`.
pub fn prox_squared_l1(f: &[C64], gamma: f64) -> Vec<C64> {
    assert!(gamma >= 0.0, "gamma must be non-negative");
    if gamma == 0.0 {
        return f.to_vec();
    }
    let mut mags: Vec<f64> = f.iter().map(|z| z.norm()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    // With k active entries the threshold is 2γ A_k / (1 + 2γk).
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cum += u;
        let t = 2.0 * gamma * cum / (1.0 + 2.0 * gamma * (j + 1) as f64);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    with_magnitudes(f, |a| a - theta)
}

/// Minimize `‖b − A f‖²` subject to `‖f‖_1 ≤ r`.
pub fn solve_constrained(
    a: &dyn LinearOperator,
    b: &[C64],
    r: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "radius must be finite and non-negative, got {r}"
        )));
    }
    solve(a, b, Regularizer::Ball(r), opts)
}

/// Minimize `‖b − A f‖² + c (‖f‖_1)²`.
pub fn solve_penalized(
    a: &dyn LinearOperator,
    b: &[C64],
    c: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "penalty weight must be finite and non-negative, got {c}"
        )));
    }
    solve(a, b, Regularizer::SquaredL1(c), opts)
}

#[derive(Clone, Copy, Debug)]
enum Regularizer {
    Ball(f64),
    SquaredL1(f64),
}

impl Regularizer {
    fn value(self, x: &[C64]) -> f64 {
        match self {
            Regularizer::Ball(_) => 0.0,
            Regularizer::SquaredL1(c) => c * l1(x).powi(2),
        }
    }

    /// Proximal step with step size `step`.
    fn prox(self, v: &[C64], step: f64) -> Vec<C64> {
        match self {
            Regularizer::Ball(r) => project_l1_ball(v, r),
            Regularizer::SquaredL1(c) => prox_squared_l1(v, step * c),
        }
    }
}

fn residual_sq(ax: &[C64], b: &[C64]) -> f64 {
    ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum()
}

/// `A` divided by a positive scalar.
struct Scaled<'a> {
    op: &'a dyn LinearOperator,
    inv: f64,
}

impl LinearOperator for Scaled<'_> {
    fn input_dim(&self) -> usize {
        self.op.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.op.output_dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut v = self.op.apply(x);
        v.iter_mut().for_each(|z| *z *= self.inv);
        v
    }
    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        let mut v = self.op.adjoint(r);
        v.iter_mut().for_each(|z| *z *= self.inv);
        v
    }
}

fn solve(
    op: &dyn LinearOperator,
    b: &[C64],
    reg: Regularizer,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    opts.validate()?;
    if b.len() != op.output_dim() {
        return Err(Error::Dimension {
            expected: op.output_dim(),
            got: b.len(),
        });
    }
    let dim = op.input_dim();
    let a_norm = operator_norm(op, POWER_ITERS);
    let b_norm = l2(b);
    if a_norm == 0.0 || b_norm == 0.0 || dim == 0 {
        return Ok(SolverResult {
            solution: vec![ZERO; dim],
            objective: b_norm * b_norm,
            certificate: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    // Rescaled problem: A' = A/‖A‖, b' = b/‖b‖, x' = ‖A‖ x / ‖b‖.
    let scaled = Scaled {
        op,
        inv: 1.0 / a_norm,
    };
    let bs: Vec<C64> = b.iter().map(|z| z / b_norm).collect();
    let reg_s = match reg {
        Regularizer::Ball(r) => Regularizer::Ball(r * a_norm / b_norm),
        Regularizer::SquaredL1(c) => Regularizer::SquaredL1(c / (a_norm * a_norm)),
    };

    let run = fista(&scaled, &bs, reg_s, opts);

    let solution: Vec<C64> = run.x.iter().map(|z| z * (b_norm / a_norm)).collect();
    Ok(SolverResult {
        solution,
        objective: run.objective * b_norm * b_norm,
        certificate: run.certificate,
        iterations: run.iterations,
        converged: run.converged,
    })
}

struct Run {
    x: Vec<C64>,
    objective: f64,
    certificate: f64,
    iterations: usize,
    converged: bool,
}

/// `2 Aᴴ (A x − b)` given `A x`.
fn gradient(op: &dyn LinearOperator, ax: &[C64], b: &[C64]) -> Vec<C64> {
    let r: Vec<C64> = ax.iter().zip(b).map(|(p, q)| 2.0 * (p - q)).collect();
    op.adjoint(&r)
}

/// Prox-gradient step from `y` with Lipschitz guess `lip`, doubling `lip`
/// until the quadratic upper bound holds. Returns the new point, `A` applied
/// to it, and its smooth objective value.
fn prox_step(
    op: &dyn LinearOperator,
    b: &[C64],
    reg: Regularizer,
    y: &[C64],
    fy: f64,
    grad: &[C64],
    lip: &mut f64,
) -> (Vec<C64>, Vec<C64>, f64) {
    loop {
        let step = 1.0 / *lip;
        let v: Vec<C64> = y.iter().zip(grad).map(|(p, g)| p - g * step).collect();
        let x = reg.prox(&v, step);
        let ax = op.apply(&x);
        let fx = residual_sq(&ax, b);
        let mut lin = 0.0;
        let mut quad = 0.0;
        for ((xi, yi), gi) in x.iter().zip(y).zip(grad) {
            let d = xi - yi;
            lin += (gi.conj() * d).re;
            quad += d.norm_sqr();
        }
        let bound = fy + lin + 0.5 * *lip * quad;
        if fx <= bound + 1e-12 * fy.abs().max(1e-300) || *lip > 1e12 {
            return (x, ax, fx);
        }
        *lip *= 2.0;
    }
}

fn fista(op: &dyn LinearOperator, b: &[C64], reg: Regularizer, opts: &SolverOptions) -> Run {
    let dim = op.input_dim();
    let mut lip = 2.0 * (1.0 + opts.step_safety);

    let mut x = vec![ZERO; dim];
    let mut ax = vec![ZERO; op.output_dim()];
    let mut f_x = residual_sq(&ax, b);
    let mut obj_x = f_x + reg.value(&x);
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut f_y = f_x;
    let mut t = 1.0f64;

    let mut iterations = 0;
    let mut converged = false;
    let mut certificate = f64::INFINITY;

    while iterations < opts.max_iters {
        iterations += 1;
        let grad = gradient(op, &ay, b);
        let (x_new, ax_new, f_new) = prox_step(op, b, reg, &y, f_y, &grad, &mut lip);
        let obj_new = f_new + reg.value(&x_new);

        // Gradient mapping at the extrapolated point.
        let g_map = lip
            * x_new
                .iter()
                .zip(&y)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();

        if obj_new > obj_x && t > 1.0 {
            // Function-value restart: drop momentum and retry from x.
            y.clone_from(&x);
            ay.clone_from(&ax);
            f_y = f_x;
            t = 1.0;
            continue;
        }

        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(p, q)| p + (p - q) * beta)
            .collect();
        ay = ax_new
            .iter()
            .zip(&ax)
            .map(|(p, q)| p + (p - q) * beta)
            .collect();
        f_y = residual_sq(&ay, b);
        t = t_new;
        x = x_new;
        ax = ax_new;
        f_x = f_new;
        obj_x = obj_new;

        if g_map <= opts.tol * (1.0 + l2(&x)) {
            certificate = mapping_norm(op, b, reg, &x, &ax, lip);
            if certificate <= opts.tol * (1.0 + l2(&x)) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        certificate = mapping_norm(op, b, reg, &x, &ax, lip);
        converged = certificate <= opts.tol * (1.0 + l2(&x));
    }
    Run {
        x,
        objective: obj_x,
        certificate,
        iterations,
        converged,
    }
}

/// `‖L (x − prox(x − ∇f(x)/L))‖`.
fn mapping_norm(
    op: &dyn LinearOperator,
    b: &[C64],
    reg: Regularizer,
    x: &[C64],
    ax: &[C64],
    lip: f64,
) -> f64 {
    let grad = gradient(op, ax, b);
    let step = 1.0 / lip;
    let v: Vec<C64> = x.iter().zip(&grad).map(|(p, g)| p - g * step).collect();
    let p = reg.prox(&v, step);
    lip * x
        .iter()
        .zip(&p)
        .map(|(a, c)| (a - c).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
