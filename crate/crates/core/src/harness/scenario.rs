use serde::{Deserialize, Serialize};

use super::risk::{
    build_oracle, mc_risk_with, Estimator, EstimatorChoice, RiskOptions, RiskReport,
};
use super::{gen_generalized_harmonic, gen_harmonic, gen_harmonic_with};
use crate::error::{Error, Result};
use crate::oracles::SubspaceSpec;
use crate::par::Execution;
use crate::signal::{Domain, Signal, C64};

/// Where the clean signal of a scenario comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SignalSource {
    /// Random frequencies and unit-modulus amplitudes from `seed`.
    Harmonic { s: usize, seed: u64 },
    /// Given frequencies; amplitudes default to 1.
    Frequencies {
        omegas: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitudes: Option<Vec<C64>>,
    },
    /// Polynomial-modulated exponentials, one coefficient list per root.
    Spec {
        spec: SubspaceSpec,
        coeffs: Vec<Vec<C64>>,
    },
}

impl SignalSource {
    pub fn generate(&self, domain: Domain) -> Result<(Signal, SubspaceSpec)> {
        match self {
            SignalSource::Harmonic { s, seed } => gen_harmonic(*s, domain, *seed),
            SignalSource::Frequencies { omegas, amplitudes } => {
                let ones = vec![C64::new(1.0, 0.0); omegas.len()];
                gen_harmonic_with(omegas, amplitudes.as_deref().unwrap_or(&ones), domain)
            }
            SignalSource::Spec { spec, coeffs } => {
                spec.validate()?;
                Ok((
                    gen_generalized_harmonic(spec, coeffs, domain)?,
                    spec.clone(),
                ))
            }
        }
    }
}

/// A grid of Monte Carlo runs: every `sigma` (and every size, when given)
/// shares the same master seed, so points along a curve are paired.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub signal: SignalSource,
    pub estimator: EstimatorChoice,
    pub sigmas: Vec<f64>,
    /// Overrides `N` (composite) or `n` (window) per curve point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    pub trials: usize,
    pub master_seed: u64,
    /// Add a paired comparison with the oracle filter (window estimators).
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub per_trial: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() {
            return Err(Error::InvalidConfig(
                "scenario needs at least one sigma".into(),
            ));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and >= 0, got {s}"
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if matches!(&self.sizes, Some(v) if v.is_empty()) {
            return Err(Error::InvalidConfig("sizes must not be empty".into()));
        }
        for (_, est) in self.estimators()? {
            est.validate()?;
        }
        Ok(())
    }

    fn estimators(&self) -> Result<Vec<(Option<usize>, Estimator)>> {
        let base = Estimator::try_from(self.estimator.clone())?;
        let Some(sizes) = &self.sizes else {
            return Ok(vec![(None, base)]);
        };
        sizes
            .iter()
            .map(|&size| {
                let est = match &base {
                    Estimator::Window(cfg) => {
                        let mut cfg = *cfg;
                        cfg.n = size;
                        Estimator::Window(cfg)
                    }
                    Estimator::Composite {
                        s, knobs, solver, ..
                    } => Estimator::Composite {
                        big_n: size,
                        s: *s,
                        knobs: *knobs,
                        solver: *solver,
                    },
                };
                Ok((Some(size), est))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    pub sigma: f64,
    pub report: RiskReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub points: Vec<CurvePoint>,
}

impl ScenarioReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Run every grid point of `scenario`.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport> {
    scenario.validate()?;
    let mut points = Vec::new();
    for (size, est) in scenario.estimators()? {
        let (x, spec) = scenario.signal.generate(est.observation_domain())?;
        let oracle = match (&est, scenario.oracle) {
            (Estimator::Window(cfg), true) => Some(build_oracle(&spec, cfg)?),
            (Estimator::Composite { .. }, true) => {
                return Err(Error::InvalidConfig(
                    "oracle comparison needs a window estimator".into(),
                ))
            }
            (_, false) => None,
        };
        let opts = RiskOptions {
            execution: scenario.execution,
            keep_trials: scenario.per_trial,
            oracle,
        };
        for &sigma in &scenario.sigmas {
            log::info!("scenario point size={size:?} sigma={sigma}");
            let report = mc_risk_with(
                &x,
                &est,
                sigma,
                scenario.trials,
                scenario.master_seed,
                &opts,
            )?;
            points.push(CurvePoint {
                size,
                sigma,
                report,
            });
        }
    }
    Ok(ScenarioReport {
        scenario: scenario.clone(),
        points,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn size_field(size: Option<usize>) -> String {
    size.map(|s| s.to_string()).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// One row per grid point: loss-vs-σ / loss-vs-size data.
pub fn curves_csv(report: &ScenarioReport) -> String {
    let rows = report
        .points
        .iter()
        .map(|p| {
            let r = &p.report;
            let l = r.l2_loss.as_ref();
            let o = r.oracle.as_ref();
            vec![
                size_field(p.size),
                p.sigma.to_string(),
                r.trials.to_string(),
                r.completed.to_string(),
                r.failed.to_string(),
                r.non_converged.to_string(),
                opt(l.map(|s| s.mean)),
                opt(l.map(|s| s.median)),
                opt(l.map(|s| s.q10)),
                opt(l.map(|s| s.q90)),
                opt(r.normalized_mse),
                opt(o.and_then(|o| o.l2_loss.as_ref()).map(|s| s.median)),
                opt(o.and_then(|o| o.ratio.as_ref()).map(|s| s.median)),
            ]
        })
        .collect();
    to_csv(
        &[
            "size",
            "sigma",
            "trials",
            "completed",
            "failed",
            "non_converged",
            "mean",
            "median",
            "q10",
            "q90",
            "normalized_mse",
            "oracle_median",
            "ratio_median",
        ],
        rows,
    )
}

/// One row per trial; empty body unless the scenario kept per-trial records.
pub fn trials_csv(report: &ScenarioReport) -> String {
    let rows = report
        .points
        .iter()
        .flat_map(|p| {
            p.report.per_trial.iter().flatten().map(move |t| {
                vec![
                    size_field(p.size),
                    p.sigma.to_string(),
                    t.trial.to_string(),
                    t.seed.to_string(),
                    opt(t.l2_loss),
                    opt(t.oracle_l2_loss),
                    t.converged.map(|c| c.to_string()).unwrap_or_default(),
                    t.error.clone().unwrap_or_default(),
                ]
            })
        })
        .collect();
    to_csv(
        &[
            "size",
            "sigma",
            "trial",
            "seed",
            "l2_loss",
            "oracle_l2_loss",
            "converged",
            "error",
        ],
        rows,
    )
}
