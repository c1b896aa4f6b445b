//! Adaptive filter estimators.
//!
//! A filter is fitted by minimizing the residual `‖y − φ * y‖²` over an
//! estimation window, with the `ℓ1` norm of the filter's unitary DFT either
//! bounded or penalized. The problem is solved in the Fourier coefficients
//! `f = F φ`, where the regularizer is separable.

mod blockwise;
mod composite;
mod remainder;

pub use blockwise::blockwise_denoise;
pub use composite::{denoise_full_composite, select_split, CompositeFit, CompositeKnobs};
pub use remainder::{remainder_bounds, RemainderInputs, RemainderReport};

use serde::{Deserialize, Serialize};

use crate::conv::{LinearOperator, ToeplitzOp};
use crate::error::{Error, Result};
use crate::fourier::{centered_dft, centered_idft, unitary_dft, unitary_idft};
use crate::signal::{Domain, Signal, C64};
use crate::solvers::{solve_constrained, solve_penalized, SolverOptions, SolverResult};

/// Which DFT normalizes the regularizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Two-sided filters on `D_m`, DFT of length `2m+1`.
    Bilateral,
    /// One-sided filters on `{h, ..., h+m}`, DFT of length `m+1`.
    Unilateral,
}

/// `√((2n+1)/(2m+1))`, or `√((n+1)/(m+1))` for one-sided geometry.
pub fn kappa(m: usize, n: usize, side: Side) -> f64 {
    match side {
        Side::Bilateral => ((2 * n + 1) as f64 / (2 * m + 1) as f64).sqrt(),
        Side::Unilateral => ((n + 1) as f64 / (m + 1) as f64).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Fourier `ℓ1` norm at most `rho_bar / √(len)`.
    Constrained { rho_bar: f64 },
    /// Penalty `σ² λ² len (‖F φ‖_1)²`; `lambda = None` selects the default.
    Penalized { lambda: Option<f64>, sigma: f64 },
}

/// Geometry and regularization of a fit.
///
/// `h = None` fits a two-sided filter on `D_m` against the window `D_n`;
/// `h = Some(h)` fits a one-sided filter on `{h..h+m}` against `{-n..0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub m: usize,
    pub n: usize,
    pub h: Option<usize>,
    pub mode: Mode,
    pub solver: SolverOptions,
}

/// Significance level used for the default penalty weight.
pub const DEFAULT_ALPHA: f64 = 0.1;

impl EstimatorConfig {
    pub fn constrained(m: usize, n: usize, rho_bar: f64) -> Self {
        EstimatorConfig {
            m,
            n,
            h: None,
            mode: Mode::Constrained { rho_bar },
            solver: SolverOptions::default(),
        }
    }

    pub fn penalized(m: usize, n: usize, lambda: Option<f64>, sigma: f64) -> Self {
        EstimatorConfig {
            m,
            n,
            h: None,
            mode: Mode::Penalized { lambda, sigma },
            solver: SolverOptions::default(),
        }
    }

    pub fn with_horizon(mut self, h: usize) -> Self {
        self.h = Some(h);
        self
    }

    pub fn side(&self) -> Side {
        if self.h.is_some() {
            Side::Unilateral
        } else {
            Side::Bilateral
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        match self.mode {
            Mode::Constrained { rho_bar } => {
                if !(rho_bar >= 1.0 && rho_bar.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "rho_bar must be a finite number >= 1, got {rho_bar}"
                    )));
                }
            }
            Mode::Penalized { lambda, sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "sigma must be finite and positive, got {sigma}"
                    )));
                }
                if let Some(l) = lambda {
                    if !(l > 0.0 && l.is_finite()) {
                        return Err(Error::InvalidConfig(format!(
                            "lambda must be finite and positive, got {l}"
                        )));
                    }
                }
            }
        }
        self.solver.validate()
    }

    /// Filter support, residual window, and the DFT length of the regularizer.
    fn geometry(&self) -> (Domain, Domain, usize) {
        match self.h {
            None => (
                Domain::symmetric(self.m),
                Domain::symmetric(self.n),
                2 * self.m + 1,
            ),
            Some(h) => (
                Domain::shifted(self.m, h as i64),
                Domain::interval(-(self.n as i64), 0).expect("non-empty window"),
                self.m + 1,
            ),
        }
    }

    /// The explicit regularization this configuration resolves to, plus an
    /// optional warning.
    pub fn regularization(&self) -> (Regularization, Option<String>) {
        let (_, _, len) = self.geometry();
        match self.mode {
            Mode::Constrained { rho_bar } => {
                (Regularization::Radius(rho_bar / (len as f64).sqrt()), None)
            }
            Mode::Penalized { lambda, sigma } => {
                let lambda = lambda.unwrap_or_else(|| self.default_lambda());
                let (sigma, warning) = if sigma == 0.0 {
                    (
                        f64::EPSILON,
                        Some("sigma = 0 replaced by machine epsilon in the penalty".to_string()),
                    )
                } else {
                    (sigma, None)
                };
                (
                    Regularization::Penalty(sigma * sigma * lambda * lambda * len as f64),
                    warning,
                )
            }
        }
    }

    /// `√Q1` with zero misspecification and [`DEFAULT_ALPHA`].
    pub fn default_lambda(&self) -> f64 {
        let report = remainder_bounds(&RemainderInputs {
            m: self.m,
            n: self.n,
            side: self.side(),
            rho_bar: None,
            varrho: None,
            varkappa: 0.0,
            s: 0.0,
            alpha: DEFAULT_ALPHA,
            lambda: None,
        })
        .expect("valid default inputs");
        report.suggested_lambda
    }
}

/// Regularization in the Fourier coefficients of the filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    /// `‖F φ‖_1 ≤ r`.
    Radius(f64),
    /// `+ c (‖F φ‖_1)²`.
    Penalty(f64),
}

/// Filter class and its support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterClass {
    /// Taps on `D_m`.
    Bilateral { m: usize },
    /// Taps on `{h, ..., h+m}`.
    Shifted { m: usize, h: i64 },
}

impl FilterClass {
    pub fn support(&self) -> Domain {
        match *self {
            FilterClass::Bilateral { m } => Domain::symmetric(m),
            FilterClass::Shifted { m, h } => Domain::shifted(m, h),
        }
    }

    pub fn m(&self) -> usize {
        match *self {
            FilterClass::Bilateral { m } | FilterClass::Shifted { m, .. } => m,
        }
    }
}

/// Solver diagnostics attached to a fitted filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub converged: bool,
    pub iterations: usize,
    /// Residual plus penalty at the returned filter.
    pub objective: f64,
    pub certificate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    class: FilterClass,
    coeffs: Vec<C64>,
    info: Option<FitInfo>,
}

impl Filter {
    pub fn new(class: FilterClass, coeffs: Vec<C64>) -> Result<Self> {
        let expected = class.support().len();
        if coeffs.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Filter {
            class,
            coeffs,
            info: None,
        })
    }

    /// `δ_0` on `D_m`.
    pub fn identity(m: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m + 1];
        coeffs[m] = C64::new(1.0, 0.0);
        Filter {
            class: FilterClass::Bilateral { m },
            coeffs,
            info: None,
        }
    }

    pub fn class(&self) -> FilterClass {
        self.class
    }

    pub fn support(&self) -> Domain {
        self.class.support()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn info(&self) -> Option<&FitInfo> {
        self.info.as_ref()
    }

    pub fn with_info(mut self, info: FitInfo) -> Self {
        self.info = Some(info);
        self
    }

    /// True unless a fit reported non-convergence.
    pub fn converged(&self) -> bool {
        self.info.as_ref().is_none_or(|i| i.converged)
    }

    pub fn to_signal(&self) -> Signal {
        Signal::new(self.support().lo(), self.coeffs.clone())
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Fourier `ℓ1` norm in the class convention: centered DFT on `D_m`, or
    /// unilateral DFT of the taps moved to `{0..m}`.
    pub fn fourier_l1(&self) -> f64 {
        self.fourier_coeffs().iter().map(|z| z.norm()).sum()
    }

    fn fourier_coeffs(&self) -> Vec<C64> {
        match self.class {
            FilterClass::Bilateral { .. } => centered_dft(&self.coeffs),
            FilterClass::Shifted { .. } => unitary_dft(&self.coeffs),
        }
    }

    /// The same taps viewed as a filter on the wider `D_m` (zero-padded).
    pub fn widen(&self, m: usize) -> Result<Filter> {
        let s = self.support();
        let wide = Domain::symmetric(m);
        if s.lo() < wide.lo() || s.hi() > wide.hi() {
            return Err(Error::InvalidConfig(format!(
                "filter support [{}, {}] does not fit in D_{m}",
                s.lo(),
                s.hi()
            )));
        }
        let sig = self.to_signal();
        Filter::new(
            FilterClass::Bilateral { m },
            sig.slice(-(m as i64), m as i64),
        )
    }
}

/// `φ̂ = F* f` composed with `T(y)`.
struct FourierOp {
    toeplitz: ToeplitzOp,
    side: Side,
}

impl FourierOp {
    fn taps(&self, f: &[C64]) -> Vec<C64> {
        match self.side {
            Side::Bilateral => centered_idft(f),
            Side::Unilateral => unitary_idft(f),
        }
    }

    fn spectrum(&self, v: &[C64]) -> Vec<C64> {
        match self.side {
            Side::Bilateral => centered_dft(v),
            Side::Unilateral => unitary_dft(v),
        }
    }
}

impl LinearOperator for FourierOp {
    fn input_dim(&self) -> usize {
        self.toeplitz.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.toeplitz.output_dim()
    }

    fn apply(&self, f: &[C64]) -> Vec<C64> {
        self.toeplitz.apply(&self.taps(f))
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        self.spectrum(&self.toeplitz.adjoint(r))
    }

    fn frobenius_norm(&self) -> f64 {
        self.toeplitz.frobenius_norm()
    }
}

/// Fit with explicit geometry and regularization.
///
/// `filter` must be `D_m` (bilateral) or `{h..h+m}` (unilateral); the residual
/// is taken over `window`.
pub fn fit_filter(
    y: &Signal,
    class: FilterClass,
    window: Domain,
    reg: Regularization,
    solver: &SolverOptions,
) -> Result<Filter> {
    let side = match class {
        FilterClass::Bilateral { .. } => Side::Bilateral,
        FilterClass::Shifted { .. } => Side::Unilateral,
    };
    let toeplitz = ToeplitzOp::new(y, class.support(), window)?;
    y.require(window.lo(), window.hi())?;
    let target = y.slice(window.lo(), window.hi());
    let op = FourierOp { toeplitz, side };
    let res: SolverResult = match reg {
        Regularization::Radius(r) => solve_constrained(&op, &target, r, solver)?,
        Regularization::Penalty(c) => solve_penalized(&op, &target, c, solver)?,
    };
    let coeffs = op.taps(&res.solution);
    let warning = (!res.converged).then(|| {
        format!(
            "solver stopped after {} iterations with certificate {:.3e}",
            res.iterations, res.certificate
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(Filter::new(class, coeffs)?.with_info(FitInfo {
        converged: res.converged,
        iterations: res.iterations,
        objective: res.objective,
        certificate: res.certificate,
        warning,
    }))
}

/// Fit per `cfg`: two-sided when `cfg.h` is `None`, one-sided otherwise.
pub fn fit(y: &Signal, cfg: &EstimatorConfig) -> Result<Filter> {
    cfg.validate()?;
    let (support, window, _) = cfg.geometry();
    let class = match cfg.h {
        None => FilterClass::Bilateral { m: cfg.m },
        Some(h) => FilterClass::Shifted {
            m: cfg.m,
            h: h as i64,
        },
    };
    debug_assert_eq!(class.support(), support);
    let (reg, warning) = cfg.regularization();
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let mut filter = fit_filter(y, class, window, reg, &cfg.solver)?;
    if let (Some(w), Some(info)) = (warning, filter.info.as_mut()) {
        info.warning = Some(match info.warning.take() {
            Some(prev) => format!("{w}; {prev}"),
            None => w,
        });
    }
    Ok(filter)
}

/// Two-sided constrained fit; `cfg` must be constrained with no horizon.
pub fn fit_constrained(y: &Signal, cfg: &EstimatorConfig) -> Result<Filter> {
    if cfg.h.is_some() || !matches!(cfg.mode, Mode::Constrained { .. }) {
        return Err(Error::InvalidConfig(
            "fit_constrained needs a constrained configuration without h".into(),
        ));
    }
    fit(y, cfg)
}

/// Two-sided penalized fit; `cfg` must be penalized with no horizon.
pub fn fit_penalized(y: &Signal, cfg: &EstimatorConfig) -> Result<Filter> {
    if cfg.h.is_some() || !matches!(cfg.mode, Mode::Penalized { .. }) {
        return Err(Error::InvalidConfig(
            "fit_penalized needs a penalized configuration without h".into(),
        ));
    }
    fit(y, cfg)
}

/// One-sided fit for filtering (`h = 0`) or prediction (`h > 0`).
pub fn fit_predictive(y: &Signal, cfg: &EstimatorConfig) -> Result<Filter> {
    if cfg.h.is_none() {
        return Err(Error::InvalidConfig("fit_predictive needs h".into()));
    }
    fit(y, cfg)
}

/// `[φ * y]_t` for `t` in `domain`.
pub fn estimate(filter: &Filter, y: &Signal, domain: Domain) -> Result<Signal> {
    let op = ToeplitzOp::new(y, filter.support(), domain)?;
    Ok(Signal::new(domain.lo(), op.try_apply(filter.coeffs())?))
}

/// `‖y − φ * y‖²` over `window`.
pub fn residual_objective(filter: &Filter, y: &Signal, window: Domain) -> Result<f64> {
    y.require(window.lo(), window.hi())?;
    let est = estimate(filter, y, window)?;
    Ok(window
        .indices()
        .map(|t| (y.at(t) - est.at(t)).norm_sqr())
        .sum())
}

/// Residual window of a configuration.
pub fn residual_window(cfg: &EstimatorConfig) -> Domain {
    cfg.geometry().1
}

/// Filter export: class, bandwidth, shift, `[re, im]` coefficient pairs and
/// the fit diagnostics when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterJson {
    pub class: String,
    pub m: usize,
    pub shift: i64,
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitInfo>,
}

impl From<&Filter> for FilterJson {
    fn from(f: &Filter) -> Self {
        let (class, shift) = match f.class {
            FilterClass::Bilateral { m } => ("bilateral", -(m as i64)),
            FilterClass::Shifted { h, .. } => ("shifted", h),
        };
        FilterJson {
            class: class.into(),
            m: f.class.m(),
            shift,
            coefficients: f.coeffs.iter().map(|z| [z.re, z.im]).collect(),
            fit: f.info.clone(),
        }
    }
}

impl TryFrom<FilterJson> for Filter {
    type Error = Error;

    fn try_from(j: FilterJson) -> Result<Self> {
        let class = match j.class.as_str() {
            "bilateral" => {
                if j.shift != -(j.m as i64) {
                    return Err(Error::InvalidConfig(format!(
                        "bilateral filter with m = {} must have shift {}",
                        j.m,
                        -(j.m as i64)
                    )));
                }
                FilterClass::Bilateral { m: j.m }
            }
            "shifted" => FilterClass::Shifted { m: j.m, h: j.shift },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown filter class {other:?}"
                )))
            }
        };
        let coeffs = j
            .coefficients
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        let mut f = Filter::new(class, coeffs)?;
        f.info = j.fit;
        Ok(f)
    }
}

impl Filter {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FilterJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Filter> {
        let j: FilterJson = serde_json::from_str(text)?;
        Filter::try_from(j)
    }
}

/// JSON form of [`EstimatorConfig`]: flat keys `m, n, h, mode, rho_bar,
/// lambda, sigma, solver`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigJson {
    pub m: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl TryFrom<ConfigJson> for EstimatorConfig {
    type Error = Error;

    fn try_from(j: ConfigJson) -> Result<Self> {
        let mode = match j.mode.as_str() {
            "constrained" => Mode::Constrained {
                rho_bar: j
                    .rho_bar
                    .ok_or_else(|| Error::InvalidConfig("constrained mode needs rho_bar".into()))?,
            },
            "penalized" => Mode::Penalized {
                lambda: j.lambda,
                sigma: j
                    .sigma
                    .ok_or_else(|| Error::InvalidConfig("penalized mode needs sigma".into()))?,
            },
            other => return Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        };
        let cfg = EstimatorConfig {
            m: j.m,
            n: j.n,
            h: j.h,
            mode,
            solver: j.solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&EstimatorConfig> for ConfigJson {
    fn from(c: &EstimatorConfig) -> Self {
        let (mode, rho_bar, lambda, sigma) = match c.mode {
            Mode::Constrained { rho_bar } => ("constrained", Some(rho_bar), None, None),
            Mode::Penalized { lambda, sigma } => ("penalized", None, lambda, Some(sigma)),
        };
        ConfigJson {
            m: c.m,
            n: c.n,
            h: c.h,
            mode: mode.into(),
            rho_bar,
            lambda,
            sigma,
            solver: c.solver,
        }
    }
}

impl EstimatorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let j: ConfigJson = serde_json::from_str(text).map_err(|e| {
            if e.is_data() || e.is_syntax() || e.is_eof() {
                Error::InvalidConfig(format!("config: {e}"))
            } else {
                Error::Json(e)
            }
        })?;
        EstimatorConfig::try_from(j)
    }
}
