//! Replicated experiments: simulate, estimate, infer and summarise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{
    crude_estimate, e1_e2_estimates, effectiveness, log_odds_ratio, tncc_estimate, PopulationTotals,
};
use crate::generator::{
    apply_random_testing, draw_cohort, draw_params, load_real_data, observe_spontaneous,
    ObservationRegime, UnseenAssumption,
};
use crate::model::{PriorName, PriorSpec};
use crate::rng::{replication_seed, RngState};
use crate::sampler::{run_chain, summarize_trace, ChainConfig, ChainTrace, StartMode, Truth};
use crate::stats::{mean, rms};

/// Environment variable overriding the worker pool size.
pub const THREADS_ENV: &str = "VE_INFER_THREADS";

/// One replication. `t0_true`, `p_l_given_v_true` and `e_true` are absent
/// for real data. Effectiveness values are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub t0_true: Option<f64>,
    #[serde(rename = "pLv_true")]
    pub p_l_given_v_true: Option<f64>,
    pub t1: f64,
    pub t2: f64,
    pub c2_5: f64,
    pub c97_5: f64,
    pub e_true: Option<f64>,
    pub e1: f64,
    pub e2: f64,
    pub e_c2_5: f64,
    pub e_c97_5: f64,
    pub n_hosp: u64,
}

impl RunRecord {
    pub fn t1_error(&self) -> Option<f64> {
        self.t0_true.map(|t| self.t1 - t)
    }

    pub fn t2_error(&self) -> Option<f64> {
        self.t0_true.map(|t| self.t2 - t)
    }

    pub fn ci_width(&self) -> f64 {
        self.c97_5 - self.c2_5
    }
}

/// Aggregate statistics of a suite. Error spreads are root-mean-square
/// signed errors `t - t0_true`, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub n_runs: usize,
    pub n_t1_better: usize,
    pub sd_t1_error: f64,
    pub sd_t2_error: f64,
    pub mean_ci_width: f64,
    pub mean_n_hosp: f64,
    pub mean_t1_error: f64,
    pub mean_t2_error: f64,
}

impl SuiteSummary {
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid("cannot summarise an empty suite"));
        }
        let e1: Option<Vec<f64>> = records.iter().map(RunRecord::t1_error).collect();
        let e2: Option<Vec<f64>> = records.iter().map(RunRecord::t2_error).collect();
        let (e1, e2) = e1
            .zip(e2)
            .ok_or_else(|| invalid("suite summaries need the true value for every run"))?;
        let widths: Vec<f64> = records.iter().map(RunRecord::ci_width).collect();
        let hosp: Vec<f64> = records.iter().map(|r| r.n_hosp as f64).collect();
        Ok(SuiteSummary {
            n_runs: records.len(),
            n_t1_better: e1
                .iter()
                .zip(&e2)
                .filter(|(a, b)| a.abs() < b.abs())
                .count(),
            sd_t1_error: rms(&e1),
            sd_t2_error: rms(&e2),
            mean_ci_width: mean(&widths),
            mean_n_hosp: mean(&hosp),
            mean_t1_error: mean(&e1),
            mean_t2_error: mean(&e2),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Label used in reports, usually the prior name.
    pub label: String,
    pub prior: PriorSpec,
    pub n: u64,
    pub reps: usize,
    pub n_samples: usize,
    pub base_seed: u64,
    pub regime: ObservationRegime,
    pub start_mode: StartMode,
    /// Posterior `t0` draws kept per run for plotting.
    pub keep_samples: usize,
    /// Worker threads; `None` reads the environment, then uses all cores.
    pub threads: Option<usize>,
}

/// Default chain length for a cohort of `n`: 1000 sweeps up to N = 1000,
/// then one sweep per individual.
pub fn default_samples(n: u64) -> usize {
    (n as usize).max(1000)
}

pub const REAL_DATA_SAMPLES: usize = 200_000;

impl SuiteConfig {
    pub fn named(prior: PriorName, n: u64) -> Self {
        SuiteConfig {
            label: prior.to_string(),
            prior: PriorSpec::named(prior),
            n,
            reps: 20,
            n_samples: default_samples(n),
            base_seed: 1,
            regime: ObservationRegime::Spontaneous,
            start_mode: StartMode::FromPrior,
            keep_samples: 200,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        if self.n < 10 {
            return Err(invalid("suites need N >= 10"));
        }
        if self.reps == 0 {
            return Err(invalid("suites need at least one replication"));
        }
        if matches!(self.regime, ObservationRegime::RealDataPartial { .. }) {
            return Err(invalid(
                "partial real-data observation is run through run_real_data",
            ));
        }
        ChainConfig::new(self.n_samples).validate()
    }
}

/// A finished replication: its record and a thinned posterior sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub record: RunRecord,
    pub posterior_t0: Vec<f64>,
}

fn thin(trace: &ChainTrace, burn_in_fraction: f64, keep: usize) -> Vec<f64> {
    let kept = trace.post_burn_in(burn_in_fraction);
    if keep == 0 || kept.is_empty() {
        return Vec::new();
    }
    let step = kept.len().div_ceil(keep).max(1);
    kept.iter().step_by(step).map(|s| s.t0).collect()
}

pub fn run_replication(cfg: &SuiteConfig, index: usize) -> Result<Replication> {
    let seed = replication_seed(cfg.base_seed, index);
    let mut rng = RngState::new(seed);
    let params = draw_params(&cfg.prior, &mut rng)?;
    let mut cohort = draw_cohort(&params, cfg.n, &mut rng)?;
    if let ObservationRegime::RandomTesting { test_probability } = cfg.regime {
        cohort = apply_random_testing(&cohort, test_probability, &mut rng)?;
    }
    let obs = observe_spontaneous(&cohort);
    let totals = PopulationTotals::observed(&obs);
    let t1 = tncc_estimate(&obs);
    let t2 = crude_estimate(&obs, totals.unvaccinated, totals.vaccinated)?;
    let (e1, e2) = e1_e2_estimates(&obs, totals)?;

    let chain_cfg = ChainConfig::new(cfg.n_samples).with_start(cfg.start_mode);
    let truth = Truth { params, cohort };
    let trace = run_chain(&cfg.prior, &obs, &chain_cfg, Some(&truth), rng)?;
    let summary = summarize_trace(&trace, chain_cfg.burn_in_fraction)?;

    let t0_true = log_odds_ratio(params.j[0], params.j[1])?;
    Ok(Replication {
        record: RunRecord {
            run_index: index,
            seed,
            t0_true: Some(t0_true),
            p_l_given_v_true: Some(params.j[0]),
            t1,
            t2,
            c2_5: summary.c2_5,
            c97_5: summary.c97_5,
            e_true: Some(effectiveness(params.j[0], params.j[1])),
            e1,
            e2,
            e_c2_5: summary.e_c2_5,
            e_c97_5: summary.e_c97_5,
            n_hosp: obs.hospitalised(),
        },
        posterior_t0: thin(&trace, chain_cfg.burn_in_fraction, cfg.keep_samples),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub label: String,
    pub n: u64,
    /// Sorted by `t0_true`, ties broken by seed; `run_index` is the position.
    pub records: Vec<RunRecord>,
    pub summary: SuiteSummary,
    /// Thinned posterior `t0` draws aligned with `records`.
    pub posterior_t0: Vec<Vec<f64>>,
}

pub fn pool_size(requested: Option<usize>) -> usize {
    requested
        .or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(feature = "parallel")]
fn run_all(cfg: &SuiteConfig) -> Result<Vec<Replication>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(pool_size(cfg.threads))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|i| run_replication(cfg, i))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_all(cfg: &SuiteConfig) -> Result<Vec<Replication>> {
    (0..cfg.reps).map(|i| run_replication(cfg, i)).collect()
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut reps = run_all(cfg)?;
    reps.sort_by(|a, b| {
        let key = |r: &Replication| r.record.t0_true.unwrap_or(f64::NAN);
        key(a)
            .total_cmp(&key(b))
            .then(a.record.seed.cmp(&b.record.seed))
    });
    for (i, r) in reps.iter_mut().enumerate() {
        r.record.run_index = i;
    }
    let (records, posterior_t0): (Vec<_>, Vec<_>) =
        reps.into_iter().map(|r| (r.record, r.posterior_t0)).unzip();
    let summary = SuiteSummary::from_records(&records)?;
    Ok(SuiteReport {
        label: cfg.label.clone(),
        n: cfg.n,
        records,
        summary,
        posterior_t0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataResult {
    pub assumption: UnseenAssumption,
    pub record: RunRecord,
    pub trace: ChainTrace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealDataConfig {
    pub assumption: UnseenAssumption,
    pub n_samples: usize,
    pub seed: u64,
    pub unseen_multiple: f64,
}

impl RealDataConfig {
    pub fn new(assumption: UnseenAssumption) -> Self {
        RealDataConfig {
            assumption,
            n_samples: REAL_DATA_SAMPLES,
            seed: 1,
            unseen_multiple: 2.0,
        }
    }
}

/// Inference on the embedded hospital table under the wide-open prior.
/// When some vaccination statuses are unknown, the crude estimate uses the
/// posterior mean number of unvaccinated individuals.
pub fn run_real_data(cfg: &RealDataConfig) -> Result<RealDataResult> {
    let obs = load_real_data(cfg.assumption, cfg.unseen_multiple)?;
    let prior = PriorSpec::named(PriorName::WideOpen);
    let chain_cfg = ChainConfig::new(cfg.n_samples);
    let trace = run_chain(&prior, &obs, &chain_cfg, None, RngState::new(cfg.seed))?;
    let summary = summarize_trace(&trace, chain_cfg.burn_in_fraction)?;

    let totals = if obs.unknown_vaccination() > 0 {
        let unvaccinated = summary.mean_unvaccinated_count;
        PopulationTotals {
            unvaccinated,
            vaccinated: obs.total() as f64 - unvaccinated,
        }
    } else {
        PopulationTotals::observed(&obs)
    };
    let t1 = tncc_estimate(&obs);
    let t2 = crude_estimate(&obs, totals.unvaccinated, totals.vaccinated)?;
    let (e1, e2) = e1_e2_estimates(&obs, totals)?;
    Ok(RealDataResult {
        assumption: cfg.assumption,
        record: RunRecord {
            run_index: 0,
            seed: cfg.seed,
            t0_true: None,
            p_l_given_v_true: None,
            t1,
            t2,
            c2_5: summary.c2_5,
            c97_5: summary.c97_5,
            e_true: None,
            e1,
            e2,
            e_c2_5: summary.e_c2_5,
            e_c97_5: summary.e_c97_5,
            n_hosp: obs.hospitalised(),
        },
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(prior: PriorName) -> SuiteConfig {
        let mut cfg = SuiteConfig::named(prior, 200);
        cfg.reps = 4;
        cfg.n_samples = 100;
        cfg.threads = Some(2);
        cfg
    }

    #[test]
    fn suite_is_sorted_and_consistent() {
        let report = run_suite(&small(PriorName::WideOpen)).unwrap();
        assert_eq!(report.records.len(), 4);
        for w in report.records.windows(2) {
            assert!(w[0].t0_true.unwrap() <= w[1].t0_true.unwrap());
        }
        for (i, r) in report.records.iter().enumerate() {
            assert_eq!(r.run_index, i);
            assert!(r.c2_5 <= r.c97_5);
            assert!(r.n_hosp <= 200);
        }
        assert_eq!(
            SuiteSummary::from_records(&report.records).unwrap(),
            report.summary
        );
        assert!(report.summary.n_t1_better <= report.summary.n_runs);
    }

    #[test]
    fn suite_is_deterministic_across_pool_sizes() {
        let mut a = small(PriorName::Prior1);
        let b = a.clone();
        a.threads = Some(1);
        assert_eq!(run_suite(&a).unwrap(), run_suite(&b).unwrap());
    }

    #[test]
    fn random_testing_regime_runs() {
        let mut cfg = small(PriorName::WideOpen);
        cfg.regime = ObservationRegime::RandomTesting {
            test_probability: 0.5,
        };
        let report = run_suite(&cfg).unwrap();
        assert_eq!(report.records.len(), 4);
    }

    #[test]
    fn invalid_suites_rejected() {
        let mut cfg = small(PriorName::WideOpen);
        cfg.n = 5;
        assert!(run_suite(&cfg).is_err());
        let mut cfg = small(PriorName::WideOpen);
        cfg.n_samples = 3;
        assert!(run_suite(&cfg).is_err());
        let mut cfg = small(PriorName::WideOpen);
        cfg.regime = ObservationRegime::RealDataPartial {
            unseen_multiple: 2.0,
            assumption: UnseenAssumption::SameFraction,
        };
        assert!(run_suite(&cfg).is_err());
    }

    #[test]
    fn summary_counts_better_runs() {
        let rec = |t0: f64, t1: f64, t2: f64| RunRecord {
            run_index: 0,
            seed: 0,
            t0_true: Some(t0),
            p_l_given_v_true: Some(0.5),
            t1,
            t2,
            c2_5: -1.0,
            c97_5: 1.0,
            e_true: Some(0.0),
            e1: 0.0,
            e2: 0.0,
            e_c2_5: 0.0,
            e_c97_5: 0.0,
            n_hosp: 10,
        };
        let s = SuiteSummary::from_records(&[rec(0.0, 0.5, 1.0), rec(0.0, -2.0, 1.0)]).unwrap();
        assert_eq!(s.n_t1_better, 1);
        assert!((s.sd_t1_error - (4.25f64 / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.sd_t2_error, 1.0);
        assert_eq!(s.mean_ci_width, 2.0);
        assert_eq!(s.mean_n_hosp, 10.0);

        let mut real = rec(0.0, 0.0, 0.0);
        real.t0_true = None;
        assert!(SuiteSummary::from_records(&[real]).is_err());
        assert!(SuiteSummary::from_records(&[]).is_err());
    }

    #[test]
    fn pool_size_prefers_explicit_request() {
        assert_eq!(pool_size(Some(3)), 3);
        assert!(pool_size(None) >= 1);
    }

    #[test]
    fn default_sample_counts() {
        assert_eq!(default_samples(1000), 1000);
        assert_eq!(default_samples(10_000), 10_000);
        assert_eq!(default_samples(50), 1000);
    }
}
