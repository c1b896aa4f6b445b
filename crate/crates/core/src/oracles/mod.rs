//! Shift-invariant subspaces and the oracle filters that reproduce them.

mod certificates;
mod filters;

pub use certificates::{
    shift_invariance_residual, simplicity_certificate, theta_inflation, Geometry,
    SimplicityCertificate,
};
pub use filters::{
    interpolating_filter, predictive_filter_separated, predictive_filter_unit_roots,
    predictive_oracle, square_oracle, unit_roots_threshold, SeparatedFilter, UnitRootsFilter,
    UnitRootsParams, UNIT_ROOTS_EPS_MAX,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Domain, Signal, C64, ZERO};

/// Roots closer than this are merged into one root with multiplicity.
pub const ROOT_CLUSTER_TOL: f64 = 1e-7;

/// Tolerance on `p(0) = 1` and on unit modulus.
const SPEC_TOL: f64 = 1e-9;

/// One exponential mode `t ↦ t^j e^{iωt}`, `j < mult`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralMode {
    pub omega: f64,
    pub mult: usize,
}

/// A shift-invariant subspace, the solution set of `p(Δ) x = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceSpec {
    /// `p(z) = ∏ (1 − e^{iω_k} z)^{mult_k}`.
    Modes(Vec<SpectralMode>),
    /// Coefficients `(1, p_1, ..., p_s)` of `p(z) = 1 + p_1 z + ... + p_s z^s`.
    Poly(Vec<C64>),
}

/// Characteristic root `λ` (the sequence `λ^t`) with multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub lambda: C64,
    pub mult: usize,
}

impl SubspaceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SubspaceSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Frequencies with multiplicity one each.
    pub fn from_frequencies(omegas: &[f64]) -> Self {
        SubspaceSpec::Modes(
            omegas
                .iter()
                .map(|&omega| SpectralMode { omega, mult: 1 })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SubspaceSpec::Modes(modes) => {
                if modes.is_empty() {
                    return Err(Error::InvalidSpec("no modes given".into()));
                }
                for md in modes {
                    if md.mult == 0 {
                        return Err(Error::InvalidSpec("multiplicity must be at least 1".into()));
                    }
                    if !md.omega.is_finite() {
                        return Err(Error::InvalidSpec("frequency must be finite".into()));
                    }
                }
                Ok(())
            }
            SubspaceSpec::Poly(p) => {
                let p = trim(p);
                if p.is_empty() || (p[0] - C64::new(1.0, 0.0)).norm() > SPEC_TOL {
                    return Err(Error::InvalidSpec("p(0) must equal 1".into()));
                }
                if p.len() < 2 {
                    return Err(Error::InvalidSpec("p must have degree at least 1".into()));
                }
                if p.iter().any(|z| !z.is_finite()) {
                    return Err(Error::InvalidSpec("coefficients must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Subspace dimension `s`.
    pub fn dim(&self) -> usize {
        match self {
            SubspaceSpec::Modes(m) => m.iter().map(|x| x.mult).sum(),
            SubspaceSpec::Poly(p) => trim(p).len().saturating_sub(1),
        }
    }

    /// Coefficients `(1, p_1, ..., p_s)`.
    pub fn poly(&self) -> Result<Vec<C64>> {
        self.validate()?;
        Ok(match self {
            SubspaceSpec::Poly(p) => trim(p).to_vec(),
            SubspaceSpec::Modes(modes) => {
                let mut p = vec![C64::new(1.0, 0.0)];
                for md in modes {
                    let lam = C64::from_polar(1.0, md.omega);
                    for _ in 0..md.mult {
                        // Multiply by (1 − λ z).
                        let mut next = vec![ZERO; p.len() + 1];
                        for (i, c) in p.iter().enumerate() {
                            next[i] += c;
                            next[i + 1] -= lam * c;
                        }
                        p = next;
                    }
                }
                p
            }
        })
    }

    /// Characteristic roots `λ_k` (sequences `t^j λ_k^t`), clustered.
    pub fn roots(&self) -> Result<Vec<Root>> {
        self.validate()?;
        match self {
            SubspaceSpec::Modes(modes) => {
                let raw: Vec<C64> = modes
                    .iter()
                    .flat_map(|md| std::iter::repeat_n(C64::from_polar(1.0, md.omega), md.mult))
                    .collect();
                Ok(cluster(&raw))
            }
            SubspaceSpec::Poly(p) => {
                let p = trim(p);
                // p(1/λ) = 0 ⇔ λ is a root of the reversed polynomial
                // λ^s + p_1 λ^{s-1} + ... + p_s, which is monic since p_0 = 1.
                let s = p.len() - 1;
                let companion = DMatrix::from_fn(s, s, |i, j| {
                    if i == 0 {
                        -p[j + 1]
                    } else if i == j + 1 {
                        C64::new(1.0, 0.0)
                    } else {
                        ZERO
                    }
                });
                let (_, t) = nalgebra::linalg::Schur::new(companion).unpack();
                let raw: Vec<C64> = (0..s).map(|i| t[(i, i)]).collect();
                if raw.iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
                    return Err(Error::InvalidSpec("degenerate polynomial".into()));
                }
                Ok(cluster(&raw))
            }
        }
    }

    /// Roots `θ = 1/λ` of `p`, repeated by multiplicity.
    pub fn poly_roots(&self) -> Result<Vec<C64>> {
        Ok(self
            .roots()?
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.lambda.inv(), r.mult))
            .collect())
    }

    /// Frequencies of a spec whose roots all lie on the unit circle.
    pub fn unit_frequencies(&self) -> Result<Vec<(f64, usize)>> {
        self.roots()?
            .iter()
            .map(|r| {
                if (r.lambda.norm() - 1.0).abs() > 1e-6 {
                    Err(Error::InvalidSpec(format!(
                        "root {} is not on the unit circle",
                        r.lambda
                    )))
                } else {
                    Ok((r.lambda.arg().rem_euclid(std::f64::consts::TAU), r.mult))
                }
            })
            .collect()
    }
}

fn trim(p: &[C64]) -> &[C64] {
    let mut end = p.len();
    while end > 1 && p[end - 1] == ZERO {
        end -= 1;
    }
    &p[..end]
}

fn cluster(raw: &[C64]) -> Vec<Root> {
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for &z in raw {
        match groups
            .iter_mut()
            .find(|(c, k)| (c / *k as f64 - z).norm() <= ROOT_CLUSTER_TOL)
        {
            Some((c, k)) => {
                *c += z;
                *k += 1;
            }
            None => groups.push((z, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(c, k)| Root {
            lambda: c / k as f64,
            mult: k,
        })
        .collect()
}

/// Basis `t^j λ_k^t` sampled on `domain`, one signal per basis element.
pub fn basis_from_spec(spec: &SubspaceSpec, domain: Domain) -> Result<Vec<Signal>> {
    let s = spec.dim();
    if domain.len() < s {
        return Err(Error::InvalidSpec(format!(
            "domain of length {} is shorter than the subspace dimension {s}",
            domain.len()
        )));
    }
    let roots = spec.roots()?;
    let mut out = Vec::with_capacity(s);
    for r in &roots {
        for j in 0..r.mult {
            out.push(Signal::from_fn(domain, |t| {
                r.lambda.powf(t as f64) * (t as f64).powi(j as i32)
            }));
        }
    }
    Ok(out)
}

/// Well-conditioned basis of the same span on `domain`, as a dense
/// `len × s` matrix: powers of a centered, scaled time variable.
pub(crate) fn basis_matrix(roots: &[Root], domain: Domain) -> DMatrix<C64> {
    let s: usize = roots.iter().map(|r| r.mult).sum();
    let center = 0.5 * (domain.lo() + domain.hi()) as f64;
    let scale = 0.5 * (domain.len() as f64) + 1.0;
    let mut cols = Vec::with_capacity(s);
    for r in roots {
        // Normalize λ^t at the window center to keep magnitudes moderate.
        let ref_pow = r.lambda.powf(center);
        for j in 0..r.mult {
            cols.push((r.lambda, ref_pow, j));
        }
    }
    DMatrix::from_fn(domain.len(), s, |i, c| {
        let t = domain.lo() + i as i64;
        let (lam, ref_pow, j) = cols[c];
        let u = (t as f64 - center) / scale;
        lam.powf(t as f64) / ref_pow * u.powi(j as i32)
    })
}

/// Orthonormal basis of the column span (singular values above `1e-10`
/// times the largest).
pub(crate) fn orthonormal_span(v: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = v.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    DMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// `max_t |Σ_τ p_τ x_{t−τ}|` over `domain`.
pub fn check_difference_equation(spec: &SubspaceSpec, x: &Signal, domain: Domain) -> Result<f64> {
    let p = spec.poly()?;
    let s = p.len() as i64 - 1;
    x.require(domain.lo() - s, domain.hi())?;
    Ok(domain
        .indices()
        .map(|t| {
            p.iter()
                .enumerate()
                .map(|(tau, c)| c * x.at(t - tau as i64))
                .sum::<C64>()
                .norm()
        })
        .fold(0.0, f64::max))
}

/// `Σ_k Σ_j c_{k,j} t^j λ_k^t` with one coefficient list per root; list `k`
/// must have exactly `mult_k` entries.
pub fn subspace_element(
    spec: &SubspaceSpec,
    coeffs: &[Vec<C64>],
    domain: Domain,
) -> Result<Signal> {
    let roots = spec.roots()?;
    if roots.len() != coeffs.len() {
        return Err(Error::InvalidSpec(format!(
            "expected {} coefficient lists, got {}",
            roots.len(),
            coeffs.len()
        )));
    }
    for (r, c) in roots.iter().zip(coeffs) {
        if r.mult != c.len() {
            return Err(Error::InvalidSpec(format!(
                "root with multiplicity {} needs {} polynomial coefficients, got {}",
                r.mult,
                r.mult,
                c.len()
            )));
        }
    }
    Ok(Signal::from_fn(domain, |t| {
        roots
            .iter()
            .zip(coeffs)
            .map(|(r, c)| {
                let poly: C64 = c
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * (t as f64).powi(j as i32))
                    .sum();
                poly * r.lambda.powf(t as f64)
            })
            .sum()
    }))
}

#[cfg(test)]
mod tests;
