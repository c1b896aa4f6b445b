//! Full-domain recovery of harmonic oscillations by stitching a two-sided fit
//! on a central window with one-sided fits on the two edges.

use serde::{Deserialize, Serialize};

use super::{estimate, fit_filter, Filter, FilterClass, Regularization};
use crate::error::{Error, Result};
use crate::signal::{Domain, Signal};
use crate::solvers::SolverOptions;

/// Tuning constants of the composite estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeKnobs {
    /// Target of `(M+1)/(N−M+1)` in units of `s·log(N+1)`.
    pub c_ratio: f64,
    /// Edge constraint level in units of `s²·log((2N+1)s+1)`.
    pub edge_scale: f64,
}

impl Default for CompositeKnobs {
    fn default() -> Self {
        CompositeKnobs {
            c_ratio: 1.0,
            edge_scale: 2.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositeFit {
    /// Estimate on `D_N`.
    pub estimate: Signal,
    /// Half-width `M` of the central window.
    pub split: usize,
    pub central: Filter,
    /// Causal filter for the right edge, in the frame where `t = N` is the origin.
    pub right: Filter,
    /// Same for the time-reversed signal (left edge).
    pub left: Filter,
    pub central_rho_bar: f64,
    pub edge_rho_bar: f64,
}

impl CompositeFit {
    pub fn converged(&self) -> bool {
        self.central.converged() && self.right.converged() && self.left.converged()
    }
}

/// Half-width `M` with `(M+1)/(N−M+1) ≈ c_ratio·s·log(N+1)`, rounded and
/// clipped to `[⌈N/2⌉, N−1]`.
pub fn select_split(big_n: usize, s: usize, c_ratio: f64) -> Result<usize> {
    let lo = big_n.div_ceil(2);
    if big_n < 2 || lo > big_n - 1 {
        return Err(Error::InvalidConfig(format!(
            "N = {big_n} is too small for the composite estimator (need N >= 2)"
        )));
    }
    if s < 1 {
        return Err(Error::InvalidConfig("s must be at least 1".into()));
    }
    if !(c_ratio > 0.0 && c_ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "c_ratio must be positive, got {c_ratio}"
        )));
    }
    let r = c_ratio * s as f64 * ((big_n + 1) as f64).ln();
    let m = (r * (big_n + 1) as f64 - 1.0) / (1.0 + r);
    let m = m.round().max(0.0) as usize;
    Ok(m.clamp(lo, big_n - 1))
}

/// Three-step estimate of `x` on `D_N` from `y` observed on `D_N`.
pub fn denoise_full_composite(
    y: &Signal,
    big_n: usize,
    s: usize,
    knobs: CompositeKnobs,
    solver: &SolverOptions,
) -> Result<CompositeFit> {
    let n_i = big_n as i64;
    y.require(-n_i, n_i)?;
    if !(knobs.edge_scale > 0.0 && knobs.edge_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "edge_scale must be positive, got {}",
            knobs.edge_scale
        )));
    }
    let split = select_split(big_n, s, knobs.c_ratio)?;
    let y = y.restrict(Domain::symmetric(big_n));

    let central_rho_bar = 4.0 * s as f64;
    let m_c = big_n - split;
    let central = fit_filter(
        &y,
        FilterClass::Bilateral { m: m_c },
        Domain::symmetric(split),
        Regularization::Radius(central_rho_bar / ((2 * m_c + 1) as f64).sqrt()),
        solver,
    )?;
    let central_est = estimate(&central, &y, Domain::symmetric(split))?;

    let s_f = s as f64;
    let edge_rho_bar = knobs.edge_scale * s_f * s_f * (((2 * big_n + 1) as f64) * s_f + 1.0).ln();
    let (right, right_est) = fit_edge(&y, big_n, split, edge_rho_bar, solver)?;
    let reversed = y.reversed();
    let (left, left_est) = fit_edge(&reversed, big_n, split, edge_rho_bar, solver)?;

    let estimate = Signal::from_fn(Domain::symmetric(big_n), |t| {
        if t.unsigned_abs() as usize <= split {
            central_est.at(t)
        } else if t > 0 {
            right_est.at(t)
        } else {
            left_est.at(-t)
        }
    });
    Ok(CompositeFit {
        estimate,
        split,
        central,
        right,
        left,
        central_rho_bar,
        edge_rho_bar,
    })
}

/// Causal fit with residual on `{M..N}` and taps on `{0..N+M}`, applied on
/// `{M+1..N}`.
fn fit_edge(
    y: &Signal,
    big_n: usize,
    split: usize,
    rho_bar: f64,
    solver: &SolverOptions,
) -> Result<(Filter, Signal)> {
    let n_i = big_n as i64;
    // Move t = N to the origin so the residual window is {-(N-M)..0}.
    let local = y.shift(-n_i);
    let m = big_n + split;
    let n = big_n - split;
    let filter = fit_filter(
        &local,
        FilterClass::Shifted { m, h: 0 },
        Domain::interval(-(n as i64), 0)?,
        Regularization::Radius(rho_bar / ((m + 1) as f64).sqrt()),
        solver,
    )?;
    let out = Domain::interval(split as i64 + 1, n_i)?;
    let est = estimate(&filter, y, out)?;
    Ok((filter, est))
}
