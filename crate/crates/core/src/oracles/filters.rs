use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{basis_matrix, orthonormal_span, SubspaceSpec};
use crate::error::{Error, Result};
use crate::estimators::{Filter, FilterClass};
use crate::fourier::linear_convolve;
use crate::signal::{Domain, C64, ZERO};

/// Orthogonal projector onto the span of the subspace sampled on `{0..m}`.
fn projector(spec: &SubspaceSpec, m: usize) -> Result<DMatrix<C64>> {
    let roots = spec.roots()?;
    let v = basis_matrix(&roots, Domain::one_sided(m));
    let q = orthonormal_span(&v);
    Ok(&q * q.adjoint())
}

/// Two-sided filter on `D_m` with `x = φ * x` for every `x` in the subspace.
///
/// Takes the row of the projector onto the subspace sampled on `{0..m}` with
/// the smallest norm (ties broken toward the middle), and places its diagonal
/// entry at the origin. The result depends only on `spec`.
pub fn interpolating_filter(spec: &SubspaceSpec, m: usize) -> Result<Filter> {
    let s = spec.dim();
    if s > m + 1 {
        return Err(Error::InvalidConfig(format!(
            "subspace dimension {s} exceeds m + 1 = {}",
            m + 1
        )));
    }
    let pi = projector(spec, m)?;
    let mid = m as f64 / 2.0;
    let diag: Vec<f64> = (0..=m).map(|j| pi[(j, j)].re).collect();
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let j = (0..=m)
        .filter(|&j| diag[j] <= min + 1e-12 * (1.0 + min.abs()))
        .min_by(|&a, &b| {
            (a as f64 - mid)
                .abs()
                .total_cmp(&(b as f64 - mid).abs())
                .then(a.cmp(&b))
        })
        .expect("non-empty");
    // x_j = Σ_u Π_{j,u} x_u, so φ_{j−u} = Π_{j,u}.
    let mut taps = vec![ZERO; 2 * m + 1];
    for u in 0..=m {
        let tau = j as i64 - u as i64;
        taps[(tau + m as i64) as usize] = pi[(j, u)];
    }
    Filter::new(FilterClass::Bilateral { m }, taps)
}

/// One-sided filter built from the last row of the projector, with the
/// separation diagnostics that control its norm.
#[derive(Clone, Debug)]
pub struct SeparatedFilter {
    pub filter: Filter,
    /// Smallest wrap-around distance between frequencies (`2π` for one).
    pub min_separation: f64,
    /// `min_separation · (m+1) / 2π`.
    pub nu: f64,
    /// `(ν+1)/(ν−1)` when `ν > 1`.
    pub q_factor: Option<f64>,
    /// `√(Q s / (m+1))` when `ν > 1`.
    pub norm_bound: Option<f64>,
    pub warning: Option<String>,
}

fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Causal filter on `{0..m}` reproducing `Σ c_k e^{iω_k t}`.
pub fn predictive_filter_separated(omegas: &[f64], m: usize) -> Result<SeparatedFilter> {
    let s = omegas.len();
    if s == 0 {
        return Err(Error::InvalidSpec("no frequencies given".into()));
    }
    if s > m + 1 {
        return Err(Error::InvalidConfig(format!(
            "{s} frequencies exceed m + 1 = {}",
            m + 1
        )));
    }
    let mut min_sep = std::f64::consts::TAU;
    for i in 0..s {
        for j in i + 1..s {
            min_sep = min_sep.min(wrap_distance(omegas[i], omegas[j]));
        }
    }
    if min_sep <= 1e-12 {
        return Err(Error::InvalidSpec("repeated frequencies".into()));
    }
    let spec = SubspaceSpec::from_frequencies(omegas);
    let pi = projector(&spec, m)?;
    // φ_{m−u} = Π_{m,u}.
    let taps: Vec<C64> = (0..=m).map(|tau| pi[(m, m - tau)]).collect();
    let filter = Filter::new(FilterClass::Shifted { m, h: 0 }, taps)?;
    let nu = min_sep * (m + 1) as f64 / std::f64::consts::TAU;
    let (q_factor, norm_bound, warning) = if nu > 1.0 {
        let q = (nu + 1.0) / (nu - 1.0);
        (Some(q), Some((q * s as f64 / (m + 1) as f64).sqrt()), None)
    } else {
        let w = format!(
            "frequency separation {min_sep:.4} is below 2π/(m+1); the norm bound does not apply"
        );
        log::warn!("{w}");
        (None, None, Some(w))
    };
    Ok(SeparatedFilter {
        filter,
        min_separation: min_sep,
        nu,
        q_factor,
        norm_bound,
        warning,
    })
}

/// Smallest admissible `m` for [`predictive_filter_unit_roots`]:
/// `8 s² log(s+1) + s`.
pub fn unit_roots_threshold(s: usize) -> f64 {
    let s = s as f64;
    8.0 * s * s * (s + 1.0).ln() + s
}

/// Upper limit on the damping `ε` in the unit-roots construction.
pub const UNIT_ROOTS_EPS_MAX: f64 = 0.125;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitRootsParams {
    /// Truncation degree `m − s`.
    pub degree: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `40 s (s+2) log(8 s (m−s)) / (m−s)`.
    pub norm_sq_bound: f64,
}

#[derive(Clone, Debug)]
pub struct UnitRootsFilter {
    pub filter: Filter,
    pub params: UnitRootsParams,
}

/// Causal filter on `{0..m}` with `φ_0 = 0` and `1 − φ(z)` divisible by `p(z)`.
///
/// With `θ_i` the roots of `p`, the Taylor series of `1/∏(δz − θ_i)` is
/// truncated at degree `ℓ = m − s` and multiplied by `∏(z − θ_i)`, giving a
/// degree-`m` polynomial `q` with `q(0) = 1`; the taps are `−q_τ`, `τ ≥ 1`.
pub fn predictive_filter_unit_roots(spec: &SubspaceSpec, m: usize) -> Result<UnitRootsFilter> {
    let thetas = spec.poly_roots()?;
    for th in &thetas {
        if (th.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpec(format!(
                "root {th} is not on the unit circle"
            )));
        }
    }
    let s = thetas.len();
    let threshold = unit_roots_threshold(s);
    if (m as f64) < threshold || m <= s {
        return Err(Error::BelowThreshold(format!(
            "m = {m} is below the unit-roots threshold 8 s^2 log(s+1) + s = {threshold:.2} for s = {s}"
        )));
    }
    let l = m - s;
    let (lf, sf) = (l as f64, s as f64);
    let alpha = 4.0 * sf * (sf + 2.0) * (8.0 * lf * sf).ln();
    let epsilon = (alpha / (2.0 * lf * sf)).min(UNIT_ROOTS_EPS_MAX);
    let delta = 1.0 - epsilon;

    // Series of 1/∏(δz − θ): dividing c(z) by (δz − θ) gives
    // g_0 = −c_0/θ, g_j = (δ g_{j−1} − c_j)/θ.
    let mut series = vec![ZERO; l + 1];
    series[0] = C64::new(1.0, 0.0);
    for th in &thetas {
        let mut g = vec![ZERO; l + 1];
        g[0] = -series[0] / th;
        for j in 1..=l {
            g[j] = (g[j - 1] * delta - series[j]) / th;
        }
        series = g;
    }
    let mut monic = vec![C64::new(1.0, 0.0)];
    for th in &thetas {
        // Multiply by (z − θ), coefficients in increasing degree.
        monic = linear_convolve(&monic, &[-th, C64::new(1.0, 0.0)]);
    }
    let q = linear_convolve(&monic, &series);
    debug_assert_eq!(q.len(), m + 1);
    let mut taps: Vec<C64> = q.iter().map(|c| -c).collect();
    taps[0] = ZERO;
    let filter = Filter::new(FilterClass::Shifted { m, h: 0 }, taps)?;
    Ok(UnitRootsFilter {
        filter,
        params: UnitRootsParams {
            degree: l,
            alpha,
            epsilon,
            delta,
            norm_sq_bound: 40.0 * sf * (sf + 2.0) * (8.0 * sf * lf).ln() / lf,
        },
    })
}

/// `φ * φ` on `D_{2m}` for a two-sided `φ` on `D_m`.
pub fn square_oracle(filter: &Filter) -> Result<Filter> {
    let m = match filter.class() {
        FilterClass::Bilateral { m } => m,
        FilterClass::Shifted { .. } => {
            return Err(Error::InvalidConfig(
                "square oracle needs a two-sided filter".into(),
            ))
        }
    };
    let taps = linear_convolve(filter.coeffs(), filter.coeffs());
    Filter::new(FilterClass::Bilateral { m: 2 * m }, taps)
}

/// Minimum-norm filter on `{h..h+m}` reproducing every element of the
/// subspace: `x_t = Σ_τ φ_τ x_{t−τ}`.
///
/// Shift invariance reduces the conditions to `t = 0`. For `h = 0` and
/// distinct unit frequencies this coincides with
/// [`predictive_filter_separated`].
pub fn predictive_oracle(spec: &SubspaceSpec, m: usize, h: usize) -> Result<Filter> {
    let s = spec.dim();
    if s > m + 1 {
        return Err(Error::InvalidConfig(format!(
            "subspace dimension {s} exceeds m + 1 = {}",
            m + 1
        )));
    }
    let roots = spec.roots()?;
    let lo = -((h + m) as i64);
    let v = basis_matrix(&roots, Domain::interval(lo, 0)?);
    let last = v.nrows() - 1;
    // Row k, column j: basis element k at t = −(h+j).
    let a = DMatrix::from_fn(s, m + 1, |k, j| v[(last - h - j, k)]);
    let b = nalgebra::DVector::from_fn(s, |k, _| v[(last, k)]);
    let svd = a.clone().svd(true, true);
    let eps = 1e-10 * svd.singular_values.max();
    let phi = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidSpec(format!("oracle solve failed: {e}")))?;
    let resid = (&a * &phi - &b).norm();
    if resid > 1e-8 * (1.0 + b.norm()) {
        return Err(Error::InvalidSpec(format!(
            "subspace cannot be reproduced from {} past samples (residual {resid:.2e})",
            m + 1
        )));
    }
    Filter::new(
        FilterClass::Shifted { m, h: h as i64 },
        phi.iter().copied().collect(),
    )
}
