use serde::{Deserialize, Serialize};

use super::{gen_noise, trial_seed, NoiseModel, SEED_DERIVATION};
use crate::error::{Error, Result};
use crate::estimators::{
    denoise_full_composite, estimate, fit, residual_window, CompositeKnobs, ConfigJson,
    EstimatorConfig, Filter, Mode,
};
use crate::oracles::{interpolating_filter, predictive_oracle, square_oracle, SubspaceSpec};
use crate::par::Execution;
use crate::signal::{Domain, Signal};
use crate::solvers::SolverOptions;

/// An estimator run once per trial.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    /// One fit per `cfg`, evaluated on its residual window.
    Window(EstimatorConfig),
    /// Full recovery on `D_N`.
    Composite {
        big_n: usize,
        s: usize,
        knobs: CompositeKnobs,
        solver: SolverOptions,
    },
}

/// JSON form of [`Estimator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EstimatorChoice {
    Window {
        config: ConfigJson,
    },
    Composite {
        big_n: usize,
        s: usize,
        #[serde(default)]
        knobs: CompositeKnobs,
        #[serde(default)]
        solver: SolverOptions,
    },
}

impl TryFrom<EstimatorChoice> for Estimator {
    type Error = Error;

    fn try_from(c: EstimatorChoice) -> Result<Self> {
        let est = match c {
            EstimatorChoice::Window { config } => Estimator::Window(config.try_into()?),
            EstimatorChoice::Composite {
                big_n,
                s,
                knobs,
                solver,
            } => Estimator::Composite {
                big_n,
                s,
                knobs,
                solver,
            },
        };
        est.validate()?;
        Ok(est)
    }
}

impl From<&Estimator> for EstimatorChoice {
    fn from(e: &Estimator) -> Self {
        match e {
            Estimator::Window(cfg) => EstimatorChoice::Window { config: cfg.into() },
            Estimator::Composite {
                big_n,
                s,
                knobs,
                solver,
            } => EstimatorChoice::Composite {
                big_n: *big_n,
                s: *s,
                knobs: *knobs,
                solver: *solver,
            },
        }
    }
}

impl Estimator {
    pub fn validate(&self) -> Result<()> {
        match self {
            Estimator::Window(cfg) => cfg.validate(),
            Estimator::Composite {
                big_n, s, solver, ..
            } => {
                if *big_n < 2 || *s < 1 {
                    return Err(Error::InvalidConfig(format!(
                        "composite needs N >= 2 and s >= 1, got N = {big_n}, s = {s}"
                    )));
                }
                solver.validate()
            }
        }
    }

    /// Indices of `y` the estimator reads.
    pub fn observation_domain(&self) -> Domain {
        match self {
            Estimator::Window(cfg) => {
                let (m, n) = (cfg.m as i64, cfg.n as i64);
                match cfg.h {
                    None => Domain::symmetric(cfg.m + cfg.n),
                    Some(h) => Domain::interval(-n - h as i64 - m, 0).expect("non-empty"),
                }
            }
            Estimator::Composite { big_n, .. } => Domain::symmetric(*big_n),
        }
    }

    /// Indices where the loss is measured.
    pub fn loss_domain(&self) -> Domain {
        match self {
            Estimator::Window(cfg) => residual_window(cfg),
            Estimator::Composite { big_n, .. } => Domain::symmetric(*big_n),
        }
    }

    /// Estimate on [`Self::loss_domain`] and whether every solve converged.
    pub fn run(&self, y: &Signal) -> Result<(Signal, bool)> {
        match self {
            Estimator::Window(cfg) => {
                let filter = fit(y, cfg)?;
                let est = estimate(&filter, y, self.loss_domain())?;
                Ok((est, filter.converged()))
            }
            Estimator::Composite {
                big_n,
                s,
                knobs,
                solver,
            } => {
                let out = denoise_full_composite(y, *big_n, *s, *knobs, solver)?;
                let converged = out.converged();
                Ok((out.estimate, converged))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RiskOptions {
    pub execution: Execution,
    /// Keep per-trial records in the report.
    pub keep_trials: bool,
    /// Fixed filter evaluated on the same observations in every trial.
    pub oracle: Option<Filter>,
}

impl Default for RiskOptions {
    fn default() -> Self {
        RiskOptions {
            execution: Execution::Parallel,
            keep_trials: false,
            oracle: None,
        }
    }
}

/// Order statistics of a sample (quantiles by linear interpolation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q25: f64,
    pub q75: f64,
    pub q90: f64,
    pub min: f64,
    pub max: f64,
}

impl LossStats {
    /// `None` for an empty sample.
    pub fn from_sample(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (i, frac) = (pos.floor() as usize, pos - pos.floor());
            if i + 1 < v.len() {
                v[i] + frac * (v[i + 1] - v[i])
            } else {
                v[i]
            }
        };
        Some(LossStats {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: q(0.5),
            q10: q(0.1),
            q25: q(0.25),
            q75: q(0.75),
            q90: q(0.9),
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

/// Statistics of `|x_t − x̂_t|` at one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub t: i64,
    pub mean: f64,
    pub median: f64,
    pub rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_l2_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Paired comparison with a fixed oracle filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub filter_l2_norm: f64,
    pub filter_fourier_l1: f64,
    pub l2_loss: Option<LossStats>,
    /// Adaptive loss minus oracle loss, per trial.
    pub excess: Option<LossStats>,
    /// Adaptive loss over oracle loss, over trials with positive oracle loss.
    pub ratio: Option<LossStats>,
    pub normalized_mse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub estimator: EstimatorChoice,
    pub sigma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub loss_domain: [i64; 2],
    pub completed: usize,
    pub failed: usize,
    /// Completed trials in which some solve hit the iteration cap.
    pub non_converged: usize,
    /// `‖x − x̂‖₂` over the loss domain.
    pub l2_loss: Option<LossStats>,
    /// `(len)^{-1/2} · (mean of squared ℓ2 losses)^{1/2}`.
    pub normalized_mse: Option<f64>,
    pub pointwise: Vec<PointStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialRecord>>,
}

/// [`mc_risk_with`] for a window fit with default options.
pub fn mc_risk(
    x: &Signal,
    cfg: &EstimatorConfig,
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<RiskReport> {
    mc_risk_with(
        x,
        &Estimator::Window(*cfg),
        sigma,
        trials,
        master_seed,
        &RiskOptions::default(),
    )
}

struct Outcome {
    record: TrialRecord,
    abs_err: Option<Vec<f64>>,
}

/// Monte Carlo risk of `estimator` at signal `x` and noise level `sigma`.
///
/// Trial `i` observes `x + σ ζ` on the estimator's observation domain with
/// `ζ` drawn from [`trial_seed`]`(master_seed, i)`. Failed trials are
/// excluded from the statistics and counted.
pub fn mc_risk_with(
    x: &Signal,
    estimator: &Estimator,
    sigma: f64,
    trials: usize,
    master_seed: u64,
    opts: &RiskOptions,
) -> Result<RiskReport> {
    estimator.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let obs = estimator.observation_domain();
    let loss = estimator.loss_domain();
    x.require(obs.lo(), obs.hi())?;
    let x_obs = x.restrict(obs);
    if let Some(o) = &opts.oracle {
        if matches!(estimator, Estimator::Composite { .. }) {
            return Err(Error::InvalidConfig(
                "oracle comparison needs a window estimator".into(),
            ));
        }
        let sup = o.support();
        x_obs.require(loss.lo() - sup.hi(), loss.hi() - sup.lo())?;
    }

    let outcomes = opts.execution.map_indices(trials, |i| {
        let seed = trial_seed(master_seed, i);
        let y = x_obs.add(&gen_noise(obs, &NoiseModel { sigma, seed }));
        let errs = |est: &Signal| -> Vec<f64> {
            loss.indices()
                .map(|t| (x.at(t) - est.at(t)).norm())
                .collect()
        };
        let l2 = |e: &[f64]| e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let oracle_l2_loss = opts.oracle.as_ref().map(|o| {
            let est = estimate(o, &y, loss).expect("coverage checked above");
            l2(&errs(&est))
        });
        match estimator.run(&y) {
            Ok((est, converged)) => {
                let e = errs(&est);
                Outcome {
                    record: TrialRecord {
                        trial: i,
                        seed,
                        l2_loss: Some(l2(&e)),
                        oracle_l2_loss,
                        converged: Some(converged),
                        error: None,
                    },
                    abs_err: Some(e),
                }
            }
            Err(err) => {
                log::warn!("trial {i} failed: {err}");
                Outcome {
                    record: TrialRecord {
                        trial: i,
                        seed,
                        l2_loss: None,
                        oracle_l2_loss,
                        converged: None,
                        error: Some(err.to_string()),
                    },
                    abs_err: None,
                }
            }
        }
    });

    let ok: Vec<&Outcome> = outcomes.iter().filter(|o| o.abs_err.is_some()).collect();
    let losses: Vec<f64> = ok.iter().filter_map(|o| o.record.l2_loss).collect();
    let len = loss.len() as f64;
    let nmse = |ls: &[f64]| {
        (!ls.is_empty())
            .then(|| (ls.iter().map(|v| v * v).sum::<f64>() / ls.len() as f64 / len).sqrt())
    };

    let pointwise = if ok.is_empty() {
        Vec::new()
    } else {
        loss.indices()
            .enumerate()
            .map(|(k, t)| {
                let col: Vec<f64> = ok
                    .iter()
                    .map(|o| o.abs_err.as_ref().expect("completed")[k])
                    .collect();
                let st = LossStats::from_sample(&col).expect("non-empty");
                PointStats {
                    t,
                    mean: st.mean,
                    median: st.median,
                    rms: (col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64).sqrt(),
                }
            })
            .collect()
    };

    let oracle = opts.oracle.as_ref().map(|o| {
        let ol: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.record.oracle_l2_loss)
            .collect();
        let paired: Vec<(f64, f64)> = ok
            .iter()
            .filter_map(|o| Some((o.record.l2_loss?, o.record.oracle_l2_loss?)))
            .collect();
        let excess: Vec<f64> = paired.iter().map(|(a, b)| a - b).collect();
        let ratio: Vec<f64> = paired
            .iter()
            .filter(|(_, b)| *b > 0.0)
            .map(|(a, b)| a / b)
            .collect();
        OracleSummary {
            filter_l2_norm: o.l2_norm(),
            filter_fourier_l1: o.fourier_l1(),
            l2_loss: LossStats::from_sample(&ol),
            excess: LossStats::from_sample(&excess),
            ratio: LossStats::from_sample(&ratio),
            normalized_mse: nmse(&ol),
        }
    });

    Ok(RiskReport {
        estimator: estimator.into(),
        sigma,
        trials,
        master_seed,
        seed_derivation: SEED_DERIVATION.into(),
        loss_domain: [loss.lo(), loss.hi()],
        completed: ok.len(),
        failed: trials - ok.len(),
        non_converged: ok
            .iter()
            .filter(|o| o.record.converged == Some(false))
            .count(),
        l2_loss: LossStats::from_sample(&losses),
        normalized_mse: nmse(&losses),
        pointwise,
        oracle,
        per_trial: opts
            .keep_trials
            .then(|| outcomes.into_iter().map(|o| o.record).collect()),
    })
}

/// Oracle filter for the geometry of `cfg`.
///
/// Two-sided: the interpolating filter on `D_m` or the square of the one on
/// `D_{⌊m/2⌋}`, whichever has the smaller Fourier `ℓ1` norm. One-sided: the
/// minimum-norm reproducing filter on `{h..h+m}`. In constrained mode the
/// oracle must satisfy the constraint.
pub fn build_oracle(spec: &SubspaceSpec, cfg: &EstimatorConfig) -> Result<Filter> {
    cfg.validate()?;
    let (oracle, len) = match cfg.h {
        None => {
            let mut candidates = Vec::new();
            if let Ok(f) = interpolating_filter(spec, cfg.m) {
                candidates.push(f);
            }
            if let Ok(f) = interpolating_filter(spec, cfg.m / 2) {
                candidates.push(square_oracle(&f)?.widen(cfg.m)?);
            }
            let best = candidates
                .into_iter()
                .min_by(|a, b| a.fourier_l1().total_cmp(&b.fourier_l1()))
                .ok_or_else(|| {
                    Error::OracleInfeasible(format!(
                        "no reproducing filter on D_{} for a subspace of dimension {}",
                        cfg.m,
                        spec.dim()
                    ))
                })?;
            (best, 2 * cfg.m + 1)
        }
        Some(h) => (
            predictive_oracle(spec, cfg.m, h)
                .map_err(|e| Error::OracleInfeasible(e.to_string()))?,
            cfg.m + 1,
        ),
    };
    if let Mode::Constrained { rho_bar } = cfg.mode {
        let needed = oracle.fourier_l1() * (len as f64).sqrt();
        if needed > rho_bar * (1.0 + 1e-9) {
            return Err(Error::OracleInfeasible(format!(
                "the oracle filter needs rho_bar >= {needed:.4}, configured {rho_bar}; increase rho_bar"
            )));
        }
    }
    Ok(oracle)
}

/// Paired comparison of the adaptive fit with [`build_oracle`]`(spec, cfg)`.
pub fn oracle_comparison(
    x: &Signal,
    spec: &SubspaceSpec,
    cfg: &EstimatorConfig,
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<RiskReport> {
    oracle_comparison_with(
        x,
        spec,
        cfg,
        sigma,
        trials,
        master_seed,
        RiskOptions::default(),
    )
}

pub fn oracle_comparison_with(
    x: &Signal,
    spec: &SubspaceSpec,
    cfg: &EstimatorConfig,
    sigma: f64,
    trials: usize,
    master_seed: u64,
    mut opts: RiskOptions,
) -> Result<RiskReport> {
    opts.oracle = Some(build_oracle(spec, cfg)?);
    mc_risk_with(
        x,
        &Estimator::Window(*cfg),
        sigma,
        trials,
        master_seed,
        &opts,
    )
}
