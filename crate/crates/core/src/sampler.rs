//! Gibbs sampling of the posterior over the model probabilities and the
//! unobserved attributes of every individual.
//!
//! Individuals in the same observation class are exchangeable, so the chain
//! stores, for each class, how many of its members currently sit in each
//! compatible full cell `(s, v, l)`. Resampling a class is one multinomial
//! draw, which has the same distribution as resampling its members one by
//! one given the parameters.
//!
//! One sweep visits the blocks `p, r, j, q, latent, q, j, r, p`. Every block
//! is an exact full-conditional draw, so the palindromic composition is
//! reversible with respect to the posterior.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{effectiveness_from_t0, log_odds_ratio, observable_probs, ObservableProbs};
use crate::model::{bern, BetaParams, CohortCounts, ModelParams, ObservedData, PriorSpec};
use crate::rng::RngState;
use crate::sampling::{beta, multinomial};
use crate::stats::{centile_sorted, mean, sorted};

/// Smallest distance from 0 and 1 allowed for a sampled probability.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Parameters drawn from the prior, latent attributes from their
    /// conditionals given those parameters.
    FromPrior,
    /// The generating parameters and cohort.
    FromTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_samples: usize,
    pub burn_in_fraction: f64,
    pub start_mode: StartMode,
    /// Sweeps per recorded sample.
    pub thinning: usize,
}

/// Fraction of each chain discarded before summarising.
pub const DEFAULT_BURN_IN: f64 = 0.10;

impl ChainConfig {
    pub fn new(n_samples: usize) -> Self {
        ChainConfig {
            n_samples,
            burn_in_fraction: DEFAULT_BURN_IN,
            start_mode: StartMode::FromPrior,
            thinning: 1,
        }
    }

    pub fn with_start(mut self, start_mode: StartMode) -> Self {
        self.start_mode = start_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(invalid("a chain needs at least 10 samples"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(invalid("burn-in fraction must lie in [0, 1)"));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        Ok(())
    }
}

/// Generating values of a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub params: ModelParams,
    pub cohort: CohortCounts,
}

#[derive(Debug, Clone)]
struct ClassBlock {
    hospitalised: usize,
    count: u64,
    cells: Vec<[usize; 3]>,
    allocation: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub params: ModelParams,
    latent: CohortCounts,
    blocks: Vec<ClassBlock>,
    pub rng: RngState,
    clamp_events: u64,
}

impl ChainState {
    /// Completed population counts over all 16 cells.
    pub fn latent(&self) -> &CohortCounts {
        &self.latent
    }

    /// Number of sampled probabilities that were clamped away from 0 or 1.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    /// Checks that the completed counts agree with every observed class.
    pub fn consistent_with(&self, obs: &ObservedData) -> bool {
        if obs.classes().len() != self.blocks.len() {
            return false;
        }
        let mut rebuilt = CohortCounts::default();
        for (class, block) in obs.classes().iter().zip(&self.blocks) {
            if block.allocation.iter().sum::<u64>() != class.count {
                return false;
            }
            for (cell, &c) in block.cells.iter().zip(&block.allocation) {
                let [s, v, l] = *cell;
                if class.vaccinated.is_some_and(|x| x as usize != v)
                    || class.infected.is_some_and(|x| x as usize != l)
                {
                    return false;
                }
                rebuilt.add(s, v, l, block.hospitalised, c);
            }
        }
        rebuilt == self.latent
    }

    fn rebuild_latent(&mut self) {
        let mut latent = CohortCounts::default();
        for b in &self.blocks {
            for (&[s, v, l], &c) in b.cells.iter().zip(&b.allocation) {
                latent.add(s, v, l, b.hospitalised, c);
            }
        }
        self.latent = latent;
    }

    fn draw(&mut self, prior: BetaParams, n0: u64, n1: u64) -> f64 {
        let x = beta(prior.updated(n0 as f64, n1 as f64), &mut self.rng);
        let clamped = x.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        if clamped != x {
            self.clamp_events += 1;
        }
        clamped
    }
}

fn layout(obs: &ObservedData) -> Vec<ClassBlock> {
    obs.classes()
        .iter()
        .map(|c| {
            let cells = c.compatible_cells();
            ClassBlock {
                hospitalised: c.hospitalised as usize,
                count: c.count,
                allocation: vec![0; cells.len()],
                cells,
            }
        })
        .collect()
}

/// Distributes the truth cohort over the observation classes. Classes are
/// filled in order and each takes from the matching cells in turn.
fn allocate_truth(blocks: &mut [ClassBlock], cohort: &CohortCounts) -> Result<()> {
    let mut pool = *cohort;
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    // most constrained classes first
    order.sort_by_key(|&i| blocks[i].cells.len());
    for i in order {
        let b = &mut blocks[i];
        let mut remaining = b.count;
        for (k, &[s, v, l]) in b.cells.iter().enumerate() {
            let take = remaining.min(pool.n[s][v][l][b.hospitalised]);
            b.allocation[k] = take;
            pool.n[s][v][l][b.hospitalised] -= take;
            remaining -= take;
        }
        if remaining > 0 {
            return Err(invalid(
                "truth cohort is inconsistent with the observed data",
            ));
        }
    }
    if pool.total() > 0 {
        return Err(invalid(
            "truth cohort has individuals outside the observed classes",
        ));
    }
    Ok(())
}

pub fn init_chain(
    prior: &PriorSpec,
    obs: &ObservedData,
    cfg: &ChainConfig,
    truth: Option<&Truth>,
    rng: RngState,
) -> Result<ChainState> {
    prior.validate()?;
    cfg.validate()?;
    let mut state = ChainState {
        params: ModelParams::constant(0.5),
        latent: CohortCounts::default(),
        blocks: layout(obs),
        rng,
        clamp_events: 0,
    };
    match cfg.start_mode {
        StartMode::FromPrior => {
            state.params = crate::generator::draw_params(prior, &mut state.rng)?;
            for x in [&mut state.params.p]
                .into_iter()
                .chain(state.params.r.iter_mut())
                .chain(state.params.j.iter_mut())
                .chain(state.params.q.iter_mut().flatten().flatten())
            {
                *x = x.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            }
            update_latent(&mut state)?;
        }
        StartMode::FromTruth => {
            let truth =
                truth.ok_or_else(|| invalid("start from truth needs the generating values"))?;
            truth.params.validate()?;
            allocate_truth(&mut state.blocks, &truth.cohort)?;
            state.params = truth.params;
            state.rebuild_latent();
        }
    }
    Ok(state)
}

pub fn update_p(state: &mut ChainState, prior: &PriorSpec) {
    let n0 = state.latent.count_where(Some(0), None, None, None);
    let n1 = state.latent.count_where(Some(1), None, None, None);
    state.params.p = state.draw(prior.alpha, n0, n1);
}

pub fn update_r(state: &mut ChainState, prior: &PriorSpec) {
    for s in 0..2 {
        let n0 = state.latent.count_where(Some(s), Some(0), None, None);
        let n1 = state.latent.count_where(Some(s), Some(1), None, None);
        state.params.r[s] = state.draw(prior.beta[s], n0, n1);
    }
}

pub fn update_j(state: &mut ChainState, prior: &PriorSpec) {
    for v in 0..2 {
        let n0 = state.latent.count_where(None, Some(v), Some(0), None);
        let n1 = state.latent.count_where(None, Some(v), Some(1), None);
        state.params.j[v] = state.draw(prior.gamma[v], n0, n1);
    }
}

pub fn update_q(state: &mut ChainState, prior: &PriorSpec) {
    for s in 0..2 {
        for l in 0..2 {
            for v in 0..2 {
                let n0 = state.latent.get(s, v, l, 0);
                let n1 = state.latent.get(s, v, l, 1);
                state.params.q[s][l][v] = state.draw(prior.delta[s][l][v], n0, n1);
            }
        }
    }
}

/// Redraws all 13 probabilities from their Beta full conditionals given
/// the completed counts.
pub fn update_conjugate(state: &mut ChainState, prior: &PriorSpec) {
    update_p(state, prior);
    update_r(state, prior);
    update_j(state, prior);
    update_q(state, prior);
}

/// Redraws the unobserved attributes of every individual given the
/// parameters, one multinomial per observation class.
pub fn update_latent(state: &mut ChainState) -> Result<()> {
    let params = state.params;
    let mut weights = [0.0f64; 8];
    let mut counts = [0u64; 8];
    for b in state.blocks.iter_mut() {
        let k = b.cells.len();
        for (w, &[s, v, l]) in weights.iter_mut().zip(&b.cells) {
            *w = params.prevalence_weight(s, v, l) * bern(params.q[s][l][v], b.hospitalised);
        }
        if !multinomial(b.count, &weights[..k], &mut counts[..k], &mut state.rng) {
            return Err(Error::NumericalDegeneracy(format!(
                "every completion of a class of {} individuals has zero weight",
                b.count
            )));
        }
        b.allocation.copy_from_slice(&counts[..k]);
    }
    state.rebuild_latent();
    Ok(())
}

pub fn palindromic_sweep(state: &mut ChainState, prior: &PriorSpec) -> Result<()> {
    update_p(state, prior);
    update_r(state, prior);
    update_j(state, prior);
    update_q(state, prior);
    update_latent(state)?;
    update_q(state, prior);
    update_j(state, prior);
    update_r(state, prior);
    update_p(state, prior);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t0: f64,
    /// Classical effectiveness in percent.
    pub e0: f64,
    pub params: ModelParams,
    pub observables: ObservableProbs,
    /// Completed number of unvaccinated individuals.
    pub unvaccinated: u64,
}

impl SampleRecord {
    fn from_state(state: &ChainState) -> Result<Self> {
        let params = state.params;
        let t0 = log_odds_ratio(params.j[0], params.j[1])?;
        Ok(SampleRecord {
            t0,
            e0: effectiveness_from_t0(t0, params.j[0]),
            params,
            observables: observable_probs(&params)?,
            unvaccinated: state.latent.count_where(None, Some(0), None, None),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub samples: Vec<SampleRecord>,
    pub clamp_events: u64,
}

pub fn run_chain_from(
    state: &mut ChainState,
    prior: &PriorSpec,
    cfg: &ChainConfig,
) -> Result<ChainTrace> {
    cfg.validate()?;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        for _ in 0..cfg.thinning {
            palindromic_sweep(state, prior)?;
        }
        samples.push(SampleRecord::from_state(state)?);
    }
    Ok(ChainTrace {
        samples,
        clamp_events: state.clamp_events,
    })
}

pub fn run_chain(
    prior: &PriorSpec,
    obs: &ObservedData,
    cfg: &ChainConfig,
    truth: Option<&Truth>,
    rng: RngState,
) -> Result<ChainTrace> {
    let mut state = init_chain(prior, obs, cfg, truth, rng)?;
    run_chain_from(&mut state, prior, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub c2_5: f64,
    pub c97_5: f64,
    pub mean_t0: f64,
    pub mean_e0: f64,
    pub e_c2_5: f64,
    pub e_c97_5: f64,
    pub mean_unvaccinated_count: f64,
}

/// Minimum number of samples left after burn-in for a summary.
pub const MIN_SUMMARY_SAMPLES: usize = 40;

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples after dropping the first `floor(n * burn_in_fraction)`.
    pub fn post_burn_in(&self, burn_in_fraction: f64) -> &[SampleRecord] {
        let skip = (self.samples.len() as f64 * burn_in_fraction).floor() as usize;
        &self.samples[skip.min(self.samples.len())..]
    }

    pub fn t0_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t0).collect()
    }

    /// Writes one row per sample: index, t0, e0, the 13 probabilities and
    /// the three observable probabilities.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["sample_index", "t0", "e0", "p", "r0", "r1", "j0", "j1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for s in 0..2 {
            for l in 0..2 {
                for v in 0..2 {
                    header.push(format!("q_s{s}_l{l}_v{v}"));
                }
            }
        }
        header.extend(["p_V", "p_H", "p_L_given_H"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for (i, s) in self.samples.iter().enumerate() {
            let mut row = vec![i.to_string(), s.t0.to_string(), s.e0.to_string()];
            row.extend(s.params.values().iter().map(|x| x.to_string()));
            row.extend(
                [
                    s.observables.p_v,
                    s.observables.p_h,
                    s.observables.p_l_given_h,
                ]
                .iter()
                .map(|x| x.to_string()),
            );
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn summarize_trace(trace: &ChainTrace, burn_in_fraction: f64) -> Result<TraceSummary> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(invalid("burn-in fraction must lie in [0, 1)"));
    }
    let kept = trace.post_burn_in(burn_in_fraction);
    if kept.len() < MIN_SUMMARY_SAMPLES {
        return Err(invalid(format!(
            "{} samples after burn-in, need at least {MIN_SUMMARY_SAMPLES}",
            kept.len()
        )));
    }
    let t0 = sorted(kept.iter().map(|s| s.t0));
    let e0 = sorted(kept.iter().map(|s| s.e0));
    let unvacc: Vec<f64> = kept.iter().map(|s| s.unvaccinated as f64).collect();
    Ok(TraceSummary {
        c2_5: centile_sorted(&t0, 0.025),
        c97_5: centile_sorted(&t0, 0.975),
        mean_t0: mean(&t0),
        mean_e0: mean(&e0),
        e_c2_5: centile_sorted(&e0, 0.025),
        e_c97_5: centile_sorted(&e0, 0.975),
        mean_unvaccinated_count: mean(&unvacc),
    })
}

/// Thresholds for comparing chains started in different ways.
pub const CONVERGENCE_T0_TOLERANCE: f64 = 0.25;
pub const CONVERGENCE_PROB_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityComparison {
    pub quantity: String,
    pub mean_diff: f64,
    pub c2_5_diff: f64,
    pub c97_5_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub quantities: Vec<QuantityComparison>,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn get(&self, quantity: &str) -> Option<&QuantityComparison> {
        self.quantities.iter().find(|q| q.quantity == quantity)
    }
}

/// Compares post-burn-in means and (2.5, 97.5) centiles of `t0`, `p_V`,
/// `p_H` and `p_L_given_H` between two chains.
pub fn convergence_check(
    a: &ChainTrace,
    b: &ChainTrace,
    burn_in_fraction: f64,
) -> Result<ConvergenceReport> {
    if a.len() != b.len() {
        return Err(invalid("convergence check needs traces of equal length"));
    }
    let (ka, kb) = (
        a.post_burn_in(burn_in_fraction),
        b.post_burn_in(burn_in_fraction),
    );
    if ka.is_empty() {
        return Err(invalid("no samples left after burn-in"));
    }
    type Getter = fn(&SampleRecord) -> f64;
    let quantities: [(&str, Getter, f64); 4] = [
        ("t0", |s| s.t0, CONVERGENCE_T0_TOLERANCE),
        ("p_V", |s| s.observables.p_v, CONVERGENCE_PROB_TOLERANCE),
        ("p_H", |s| s.observables.p_h, CONVERGENCE_PROB_TOLERANCE),
        (
            "p_L_given_H",
            |s| s.observables.p_l_given_h,
            CONVERGENCE_PROB_TOLERANCE,
        ),
    ];
    let mut rows = Vec::new();
    for (name, get, tolerance) in quantities {
        let xa = sorted(ka.iter().map(get));
        let xb = sorted(kb.iter().map(get));
        let mean_diff = (mean(&xa) - mean(&xb)).abs();
        let c2_5_diff = (centile_sorted(&xa, 0.025) - centile_sorted(&xb, 0.025)).abs();
        let c97_5_diff = (centile_sorted(&xa, 0.975) - centile_sorted(&xb, 0.975)).abs();
        let pass = mean_diff <= tolerance && c2_5_diff <= tolerance && c97_5_diff <= tolerance;
        rows.push(QuantityComparison {
            quantity: name.to_string(),
            mean_diff,
            c2_5_diff,
            c97_5_diff,
            tolerance,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConvergenceReport {
        quantities: rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{draw_cohort, draw_params, observe_spontaneous};
    use crate::model::{ObservedClass, PriorName};

    fn simulated(seed: u64, n: u64) -> (PriorSpec, ObservedData, Truth) {
        let prior = PriorSpec::named(PriorName::WideOpen);
        let mut rng = RngState::new(seed);
        let params = draw_params(&prior, &mut rng).unwrap();
        let cohort = draw_cohort(&params, n, &mut rng).unwrap();
        (
            prior,
            observe_spontaneous(&cohort),
            Truth { params, cohort },
        )
    }

    #[test]
    fn from_truth_matches_observations() {
        let (prior, obs, truth) = simulated(3, 500);
        let cfg = ChainConfig::new(10).with_start(StartMode::FromTruth);
        let state = init_chain(&prior, &obs, &cfg, Some(&truth), RngState::new(1)).unwrap();
        assert!(state.consistent_with(&obs));
        assert_eq!(*state.latent(), truth.cohort);
        assert_eq!(state.params, truth.params);
    }

    #[test]
    fn from_truth_requires_truth() {
        let (prior, obs, _) = simulated(3, 50);
        let cfg = ChainConfig::new(10).with_start(StartMode::FromTruth);
        assert!(init_chain(&prior, &obs, &cfg, None, RngState::new(1)).is_err());
    }

    #[test]
    fn inconsistent_truth_rejected() {
        let (prior, obs, mut truth) = simulated(3, 50);
        truth.cohort.add(0, 0, 0, 1, 1);
        let cfg = ChainConfig::new(10).with_start(StartMode::FromTruth);
        assert!(init_chain(&prior, &obs, &cfg, Some(&truth), RngState::new(1)).is_err());
    }

    #[test]
    fn sweeps_preserve_observed_marginals() {
        let (prior, obs, _) = simulated(8, 300);
        let cfg = ChainConfig::new(10);
        let mut state = init_chain(&prior, &obs, &cfg, None, RngState::new(2)).unwrap();
        for _ in 0..1000 {
            palindromic_sweep(&mut state, &prior).unwrap();
            assert!(state.consistent_with(&obs));
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let (prior, obs, _) = simulated(8, 300);
        let cfg = ChainConfig::new(10);
        let mut a = init_chain(&prior, &obs, &cfg, None, RngState::new(9)).unwrap();
        let mut b = init_chain(&prior, &obs, &cfg, None, RngState::new(9)).unwrap();
        for _ in 0..2 {
            palindromic_sweep(&mut a, &prior).unwrap();
            palindromic_sweep(&mut b, &prior).unwrap();
        }
        assert_eq!(a.params, b.params);
        assert_eq!(a.latent(), b.latent());
    }

    #[test]
    fn degenerate_subset_prior_leaves_latent_fixed() {
        let mut prior = PriorSpec::named(PriorName::WideOpen);
        prior.alpha = BetaParams { a0: 1e12, a1: 1e-3 };
        let obs = ObservedData::new([
            ObservedClass::hospitalised(true, true, 4),
            ObservedClass::hospitalised(false, false, 6),
        ])
        .unwrap();
        let cfg = ChainConfig::new(10);
        let mut state = init_chain(&prior, &obs, &cfg, None, RngState::new(1)).unwrap();
        for _ in 0..20 {
            palindromic_sweep(&mut state, &prior).unwrap();
            assert_eq!(state.latent().get(0, 1, 1, 1), 4);
            assert_eq!(state.latent().get(0, 0, 0, 1), 6);
        }
    }

    #[test]
    fn certain_hospitalisation_forces_uninfected() {
        let obs = ObservedData::new([ObservedClass::unseen(Some(true), 500)]).unwrap();
        let cfg = ChainConfig::new(10);
        let mut state =
            init_chain(&PriorSpec::uniform(), &obs, &cfg, None, RngState::new(4)).unwrap();
        state.params = ModelParams::constant(0.5);
        for s in 0..2 {
            for v in 0..2 {
                state.params.q[s][1][v] = 1.0;
            }
        }
        update_latent(&mut state).unwrap();
        assert_eq!(state.latent().count_where(None, None, Some(1), None), 0);
    }

    #[test]
    fn zero_weight_class_is_an_error() {
        let obs = ObservedData::new([ObservedClass::hospitalised(true, true, 3)]).unwrap();
        let cfg = ChainConfig::new(10);
        let mut state =
            init_chain(&PriorSpec::uniform(), &obs, &cfg, None, RngState::new(4)).unwrap();
        state.params = ModelParams::constant(0.5);
        state.params.j[1] = 0.0;
        assert!(matches!(
            update_latent(&mut state),
            Err(Error::NumericalDegeneracy(_))
        ));
    }

    #[test]
    fn empty_data_conditionals_are_priors() {
        let prior = PriorSpec::named(PriorName::Prior3);
        let cfg = ChainConfig::new(10);
        let mut state =
            init_chain(&prior, &ObservedData::empty(), &cfg, None, RngState::new(6)).unwrap();
        let n = 4000;
        let mut sum = 0.0;
        for _ in 0..n {
            update_conjugate(&mut state, &prior);
            sum += state.params.p;
        }
        assert!((sum / n as f64 - 0.995).abs() < 0.001);
    }

    #[test]
    fn run_chain_length_and_config_validation() {
        let (prior, obs, _) = simulated(1, 100);
        let trace = run_chain(
            &prior,
            &obs,
            &ChainConfig::new(1000),
            None,
            RngState::new(1),
        )
        .unwrap();
        assert_eq!(trace.len(), 1000);
        assert!(trace.samples.iter().all(|s| s.t0.is_finite()));
        assert!(run_chain(&prior, &obs, &ChainConfig::new(5), None, RngState::new(1)).is_err());
        let mut cfg = ChainConfig::new(100);
        cfg.burn_in_fraction = 1.0;
        assert!(cfg.validate().is_err());
        cfg.burn_in_fraction = 0.1;
        cfg.thinning = 0;
        assert!(cfg.validate().is_err());
    }

    fn constant_trace(t0: f64, n: usize) -> ChainTrace {
        let params = ModelParams::constant(0.5);
        let rec = SampleRecord {
            t0,
            e0: 0.0,
            params,
            observables: observable_probs(&params).unwrap(),
            unvaccinated: 7,
        };
        ChainTrace {
            samples: vec![rec; n],
            clamp_events: 0,
        }
    }

    #[test]
    fn summary_of_ramp_and_constant() {
        let mut trace = constant_trace(0.0, 1000);
        for (i, s) in trace.samples.iter_mut().enumerate() {
            s.t0 = (i + 1) as f64;
        }
        let sum = summarize_trace(&trace, 0.1).unwrap();
        assert!((sum.c2_5 - 123.475).abs() < 1e-9);
        assert!((sum.c97_5 - 977.525).abs() < 1e-9);
        assert_eq!(sum.mean_unvaccinated_count, 7.0);

        let sum = summarize_trace(&constant_trace(-1.5, 100), 0.1).unwrap();
        assert_eq!(sum.c2_5, -1.5);
        assert_eq!(sum.c97_5, -1.5);

        assert!(summarize_trace(&constant_trace(0.0, 43), 0.1).is_err());
        assert!(summarize_trace(&constant_trace(0.0, 44), 0.1).is_ok());
    }

    #[test]
    fn convergence_identical_and_shifted() {
        let (prior, obs, _) = simulated(2, 200);
        let a = run_chain(&prior, &obs, &ChainConfig::new(200), None, RngState::new(1)).unwrap();
        let report = convergence_check(&a, &a, 0.1).unwrap();
        assert!(report.pass);
        assert!(report.quantities.iter().all(|q| q.mean_diff == 0.0));

        let mut b = a.clone();
        for s in &mut b.samples {
            s.t0 += 1.0;
        }
        let report = convergence_check(&a, &b, 0.1).unwrap();
        assert!(!report.pass);
        assert!(!report.get("t0").unwrap().pass);
        assert!(report.get("p_H").unwrap().pass);

        let short = ChainTrace {
            samples: a.samples[..100].to_vec(),
            clamp_events: 0,
        };
        assert!(convergence_check(&a, &short, 0.1).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        let trace = constant_trace(0.25, 12);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert!(lines[0].starts_with("sample_index,t0,e0,p,r0,r1,j0,j1,q_s0_l0_v0"));
        assert!(lines[0].ends_with("p_V,p_H,p_L_given_H"));
        assert_eq!(lines[1].split(',').count(), 19);
    }
}
