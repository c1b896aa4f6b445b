//! Remainder terms of the oracle inequalities.

use serde::{Deserialize, Serialize};

use super::{kappa, Side};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderInputs {
    pub m: usize,
    pub n: usize,
    pub side: Side,
    /// Constraint level of the constrained estimator.
    pub rho_bar: Option<f64>,
    /// Norm level of the comparison filter for the penalized estimator.
    pub varrho: Option<f64>,
    /// Misspecification level.
    pub varkappa: f64,
    /// Subspace dimension.
    pub s: f64,
    /// Confidence parameter in `(0, 1]`.
    pub alpha: f64,
    pub lambda: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub inputs: RemainderInputs,
    pub kappa: f64,
    /// Constrained remainder; present when `rho_bar` is given.
    pub q0: Option<f64>,
    pub q1: f64,
    /// Penalized remainder; present when `varrho` is given.
    pub q2: Option<f64>,
    /// `√Q1`.
    pub suggested_lambda: f64,
}

/// `Q0 = ρ̄(κ²+1)log((m+n)/α) + ρ̄ϰ√log(1/α) + s`,
/// `Q1 = (κ²+1)log((m+n)/α) + ϰ√log(1/α) + 1`,
/// `Q2 = ϱ log(1/α) + ϰ√log(1/α) + s`.
pub fn remainder_bounds(inp: &RemainderInputs) -> Result<RemainderReport> {
    if !(inp.alpha > 0.0 && inp.alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1], got {}",
            inp.alpha
        )));
    }
    if inp.m + inp.n == 0 {
        return Err(Error::InvalidConfig("m + n must be positive".into()));
    }
    let nonneg = |name: &str, v: f64| {
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{name} must be finite and non-negative, got {v}"
            )))
        }
    };
    nonneg("varkappa", inp.varkappa)?;
    nonneg("s", inp.s)?;
    if let Some(r) = inp.rho_bar {
        nonneg("rho_bar", r)?;
    }
    if let Some(r) = inp.varrho {
        nonneg("varrho", r)?;
    }
    let window = match inp.side {
        Side::Bilateral => 2 * inp.n + 1,
        Side::Unilateral => inp.n + 1,
    };
    if inp.s > window as f64 {
        return Err(Error::InvalidConfig(format!(
            "s = {} exceeds the window length {window}",
            inp.s
        )));
    }
    let k = kappa(inp.m, inp.n, inp.side);
    let log_mn = ((inp.m + inp.n) as f64 / inp.alpha).ln();
    let log_a = (1.0 / inp.alpha).ln();
    let mis = inp.varkappa * log_a.sqrt();
    let q1 = (k * k + 1.0) * log_mn + mis + 1.0;
    let q0 = inp
        .rho_bar
        .map(|r| r * (k * k + 1.0) * log_mn + r * mis + inp.s);
    let q2 = inp.varrho.map(|r| r * log_a + mis + inp.s);
    Ok(RemainderReport {
        inputs: *inp,
        kappa: k,
        q0,
        q1,
        q2,
        suggested_lambda: q1.sqrt(),
    })
}
