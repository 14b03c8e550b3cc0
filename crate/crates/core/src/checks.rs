//! Self-checks of the sampler: two-start convergence runs and comparison
//! against the exact posterior on tiny random datasets.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::estimators::log_odds_ratio;
use crate::generator::{draw_cohort, draw_params, observe_spontaneous};
use crate::model::{ObservedClass, ObservedData, PriorName, PriorSpec};
use crate::oracle::{exact_posterior_t0, OracleSummary};
use crate::rng::RngState;
use crate::sampler::{
    convergence_check, run_chain, summarize_trace, ChainConfig, ConvergenceReport, StartMode,
    Truth, DEFAULT_BURN_IN,
};

pub struct ConvergenceRun {
    pub seed: u64,
    pub t0_true: f64,
    pub n_hosp: u64,
    pub report: ConvergenceReport,
}

/// Simulates one cohort and runs two chains on it, one started from the
/// prior and one from the true parameters and latent counts. The start
/// mode in `cfg` is ignored.
pub fn convergence_run(
    prior: &PriorSpec,
    n: u64,
    cfg: &ChainConfig,
    seed: u64,
) -> Result<ConvergenceRun> {
    let mut rng = RngState::new(seed);
    let params = draw_params(prior, &mut rng)?;
    let cohort = draw_cohort(&params, n, &mut rng)?;
    let obs = observe_spontaneous(&cohort);
    let truth = Truth { params, cohort };
    let a = run_chain(
        prior,
        &obs,
        &cfg.with_start(StartMode::FromPrior),
        Some(&truth),
        rng.fork(),
    )?;
    let b = run_chain(
        prior,
        &obs,
        &cfg.with_start(StartMode::FromTruth),
        Some(&truth),
        rng.fork(),
    )?;
    Ok(ConvergenceRun {
        seed,
        t0_true: log_odds_ratio(params.j[0], params.j[1])?,
        n_hosp: obs.hospitalised(),
        report: convergence_check(&a, &b, cfg.burn_in_fraction)?,
    })
}

/// Largest dataset drawn by [`oracle_instance`].
pub const ORACLE_INSTANCE_MAX: u64 = 6;

/// Draws a dataset of 1 to 6 individuals from the model under `prior`.
/// For about half of the draws some unseen individuals also lose their
/// vaccination status, so the unknown-status class gets exercised.
pub fn oracle_instance(prior: &PriorSpec, rng: &mut RngState) -> Result<ObservedData> {
    let n = rng.random_range(1..=ORACLE_INSTANCE_MAX);
    let params = draw_params(prior, rng)?;
    let obs = observe_spontaneous(&draw_cohort(&params, n, rng)?);
    if !rng.random_bool(0.5) {
        return Ok(obs);
    }
    let mut classes = Vec::new();
    for c in obs.classes() {
        if c.hospitalised {
            classes.push(*c);
            continue;
        }
        let hidden = rng.random_range(0..=c.count);
        classes.push(ObservedClass::unseen(c.vaccinated, c.count - hidden));
        classes.push(ObservedClass::unseen(None, hidden));
    }
    ObservedData::new(classes)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub prior: String,
    pub instance: usize,
    pub individuals: u64,
    pub gibbs: (f64, f64),
    pub exact: (f64, f64),
    pub max_diff: f64,
}

impl OracleComparison {
    pub fn within(&self, tolerance: f64) -> bool {
        self.max_diff <= tolerance
    }
}

/// Settings for [`oracle_check`].
#[derive(Debug, Clone, Copy)]
pub struct OracleCheckConfig {
    pub instances: usize,
    /// Gibbs samples kept after burn-in.
    pub gibbs_samples: usize,
    pub exact_draws: usize,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        OracleCheckConfig {
            instances: 10,
            gibbs_samples: 50_000,
            exact_draws: 1_000_000,
        }
    }
}

/// Sweeps needed so that `kept` samples survive a burn-in of `fraction`.
pub fn samples_for_kept(kept: usize, fraction: f64) -> usize {
    let mut total = (kept as f64 / (1.0 - fraction)).ceil() as usize;
    while total - (total as f64 * fraction).floor() as usize > kept {
        total -= 1;
    }
    while total - ((total as f64 * fraction).floor() as usize) < kept {
        total += 1;
    }
    total
}

/// Compares Gibbs and exact posterior `t0` centiles on random datasets,
/// with the same instances for every prior.
pub fn oracle_check(
    priors: &[PriorName],
    cfg: &OracleCheckConfig,
    seed: u64,
) -> Result<Vec<OracleComparison>> {
    if cfg.instances == 0 || cfg.gibbs_samples == 0 || cfg.exact_draws == 0 {
        return Err(invalid("oracle check needs instances, samples and draws"));
    }
    let mut master = RngState::new(seed);
    let wide_open = PriorSpec::named(PriorName::WideOpen);
    let datasets: Vec<ObservedData> = (0..cfg.instances)
        .map(|_| oracle_instance(&wide_open, &mut master))
        .collect::<Result<_>>()?;
    let chain = ChainConfig::new(samples_for_kept(cfg.gibbs_samples, DEFAULT_BURN_IN));

    let mut out = Vec::new();
    for &name in priors {
        let prior = PriorSpec::named(name);
        for (i, obs) in datasets.iter().enumerate() {
            let trace = run_chain(&prior, obs, &chain, None, master.fork())?;
            let g = summarize_trace(&trace, chain.burn_in_fraction)?;
            let e: OracleSummary =
                exact_posterior_t0(obs, &prior, cfg.exact_draws, &mut master.fork())?;
            out.push(OracleComparison {
                prior: name.to_string(),
                instance: i,
                individuals: obs.total(),
                gibbs: (g.c2_5, g.c97_5),
                exact: (e.c2_5, e.c97_5),
                max_diff: (g.c2_5 - e.c2_5).abs().max((g.c97_5 - e.c97_5).abs()),
            });
        }
    }
    Ok(out)
}
