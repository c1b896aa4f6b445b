use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{basis_matrix, orthonormal_span, SubspaceSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate, kappa, Filter, FilterClass, Side};
use crate::signal::{Domain, Signal};

/// Norm and bias constants of a filter on a given signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicityCertificate {
    pub rho: f64,
    pub theta: f64,
    pub m: usize,
    pub n: usize,
    /// Prediction horizon; `None` for two-sided filters.
    pub h: Option<usize>,
}

/// Window layout for [`shift_invariance_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Bilateral,
    Predictive { h: usize },
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// `ρ = ‖φ‖₂ √len` and `θ = max_t |x_t − [φ*x]_t| · √len / (σρ)`.
///
/// Two-sided filters on `D_m` are checked on `D_{m+n}`; shifted filters on
/// `{h..h+m}` on `{−m−n−h, ..., 2h}`, with `len = 2m+1` and `m+1`
/// respectively.
pub fn simplicity_certificate(
    filter: &Filter,
    x: &Signal,
    sigma: f64,
    n: usize,
) -> Result<SimplicityCertificate> {
    check_sigma(sigma)?;
    let (m, h, len, domain) = match filter.class() {
        FilterClass::Bilateral { m } => (m, None, 2 * m + 1, Domain::symmetric(m + n)),
        FilterClass::Shifted { m, h } => {
            if h < 0 {
                return Err(Error::InvalidConfig(format!(
                    "predictive filters need a non-negative shift, got {h}"
                )));
            }
            let (mi, ni) = (m as i64, n as i64);
            (
                m,
                Some(h as usize),
                m + 1,
                Domain::interval(-mi - ni - h, 2 * h)?,
            )
        }
    };
    let support = filter.support();
    x.require(domain.lo() - support.hi(), domain.hi() - support.lo())?;
    let est = estimate(filter, x, domain)?;
    let bias = domain
        .indices()
        .map(|t| (x.at(t) - est.at(t)).norm())
        .fold(0.0, f64::max);
    let scale = (len as f64).sqrt();
    let rho = filter.l2_norm() * scale;
    let theta = if bias == 0.0 {
        0.0
    } else if rho == 0.0 {
        f64::INFINITY
    } else {
        bias * scale / (sigma * rho)
    };
    Ok(SimplicityCertificate {
        rho,
        theta,
        m,
        n,
        h,
    })
}

/// `max_τ ‖x − Π x‖ / σ` over sliding windows, where `Π` projects onto the
/// subspace restricted to each window.
///
/// Two-sided: windows `[τ−n, τ+n]`, `τ ∈ D_m`. Predictive: windows
/// `[−n−τ, −τ]`, `τ ∈ {0..h+m}`.
pub fn shift_invariance_residual(
    x: &Signal,
    spec: &SubspaceSpec,
    m: usize,
    n: usize,
    sigma: f64,
    geometry: Geometry,
) -> Result<f64> {
    check_sigma(sigma)?;
    let (mi, ni) = (m as i64, n as i64);
    let windows: Vec<Domain> = match geometry {
        Geometry::Bilateral => (-mi..=mi)
            .map(|tau| Domain::symmetric(n).shift(tau))
            .collect(),
        Geometry::Predictive { h } => (0..=h as i64 + mi)
            .map(|tau| Domain::one_sided(n).shift(-ni - tau))
            .collect(),
    };
    let lo = windows.iter().map(|w| w.lo()).min().expect("non-empty");
    let hi = windows.iter().map(|w| w.hi()).max().expect("non-empty");
    x.require(lo, hi)?;
    let roots = spec.roots()?;
    let mut worst = 0.0f64;
    for w in windows {
        // The span is shift-invariant, but the basis is rebuilt per window to
        // keep it well conditioned.
        let q = orthonormal_span(&basis_matrix(&roots, w));
        let v = DVector::from_vec(x.slice(w.lo(), w.hi()));
        let coef = q.adjoint() * &v;
        let r = v - &q * coef;
        worst = worst.max(r.norm());
    }
    Ok(worst / sigma)
}

/// `θ + 2ϰ/κ` (two-sided) or `θ + 2√2 ϰ/κ` (one-sided), `κ = κ_{m,n}`.
pub fn theta_inflation(theta: f64, varkappa: f64, m: usize, n: usize, side: Side) -> f64 {
    let k = kappa(m, n, side);
    match side {
        Side::Bilateral => theta + 2.0 * varkappa / k,
        Side::Unilateral => theta + 2.0 * std::f64::consts::SQRT_2 * varkappa / k,
    }
}
