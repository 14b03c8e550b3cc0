//! Effectiveness measures and the closed-form estimators computed from
//! observed counts.
//!
//! All log-odds quantities are in nats. `E` values are percentages.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{ModelParams, ObservedData};

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Log ratio of the odds of infection when vaccinated (`j1`) to the odds
/// when unvaccinated (`j0`).
pub fn log_odds_ratio(j0: f64, j1: f64) -> Result<f64> {
    if !(j0 > 0.0 && j0 < 1.0 && j1 > 0.0 && j1 < 1.0) {
        return Err(domain(format!(
            "infection probabilities must lie strictly inside (0, 1), got j0={j0} j1={j1}"
        )));
    }
    Ok(logit(j1) - logit(j0))
}

/// Classical effectiveness `100 * (1 - P(L|V)/P(L|v))` recovered from the
/// log odds ratio and the baseline infection probability `p_l_given_v`.
pub fn effectiveness_from_t0(t0: f64, p_l_given_v: f64) -> f64 {
    let et = t0.exp();
    100.0 * (1.0 - et / (1.0 + (et - 1.0) * p_l_given_v))
}

/// Classical effectiveness computed directly from the two probabilities.
pub fn effectiveness(j0: f64, j1: f64) -> f64 {
    100.0 * (1.0 - j1 / j0)
}

/// Subset counts, each one plus the raw number of individuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlusOneCounts {
    /// #LHV
    pub infected_vaccinated: f64,
    /// #lHV
    pub uninfected_vaccinated: f64,
    /// #LHv
    pub infected_unvaccinated: f64,
    /// #lHv
    pub uninfected_unvaccinated: f64,
    /// #V, over everyone with known vaccination status
    pub vaccinated: f64,
    /// #v, over everyone with known vaccination status
    pub unvaccinated: f64,
}

pub fn plus_one_counts(obs: &ObservedData) -> PlusOneCounts {
    let c = |v, h, l| 1.0 + obs.count_where(v, h, l) as f64;
    PlusOneCounts {
        infected_vaccinated: c(Some(true), Some(true), Some(true)),
        uninfected_vaccinated: c(Some(true), Some(true), Some(false)),
        infected_unvaccinated: c(Some(false), Some(true), Some(true)),
        uninfected_unvaccinated: c(Some(false), Some(true), Some(false)),
        vaccinated: c(Some(true), None, None),
        unvaccinated: c(Some(false), None, None),
    }
}

impl PlusOneCounts {
    pub fn tncc(&self) -> f64 {
        ((self.infected_vaccinated / self.uninfected_vaccinated)
            / (self.infected_unvaccinated / self.uninfected_unvaccinated))
            .ln()
    }

    /// Crude estimate against plus-one population totals `#v` and `#V`.
    pub fn crude(&self, unvaccinated_hash: f64, vaccinated_hash: f64) -> Result<f64> {
        let rate_v = self.infected_vaccinated / vaccinated_hash;
        let rate_u = self.infected_unvaccinated / unvaccinated_hash;
        for (name, rate) in [("#LHV/#V", rate_v), ("#LHv/#v", rate_u)] {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(domain(format!(
                    "{name} = {rate} is not a probability below 1"
                )));
            }
        }
        Ok(logit(rate_v) - logit(rate_u))
    }
}

/// Test-negative case-control estimate of the log odds ratio.
pub fn tncc_estimate(obs: &ObservedData) -> f64 {
    plus_one_counts(obs).tncc()
}

/// Population sizes used by the crude estimate, before the plus-one
/// adjustment. May be fractional when they are posterior means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationTotals {
    pub unvaccinated: f64,
    pub vaccinated: f64,
}

impl PopulationTotals {
    /// Totals over individuals with observed vaccination status.
    pub fn observed(obs: &ObservedData) -> Self {
        PopulationTotals {
            unvaccinated: obs.count_where(Some(false), None, None) as f64,
            vaccinated: obs.count_where(Some(true), None, None) as f64,
        }
    }
}

/// Crude estimate comparing per-capita positive-test rates. The totals are
/// raw population sizes; exactly one is added to each.
pub fn crude_estimate(
    obs: &ObservedData,
    unvaccinated_total: f64,
    vaccinated_total: f64,
) -> Result<f64> {
    plus_one_counts(obs).crude(1.0 + unvaccinated_total, 1.0 + vaccinated_total)
}

/// `(E1, E2)` in percent. E1 uses the baseline `#LHv / (#LHv + #lHv)`,
/// E2 uses `#LHv / (1 + #v)`.
pub fn e1_e2_estimates(obs: &ObservedData, totals: PopulationTotals) -> Result<(f64, f64)> {
    let counts = plus_one_counts(obs);
    let t1 = counts.tncc();
    let unvacc_hash = 1.0 + totals.unvaccinated;
    let t2 = counts.crude(unvacc_hash, 1.0 + totals.vaccinated)?;
    let base1 = counts.infected_unvaccinated
        / (counts.infected_unvaccinated + counts.uninfected_unvaccinated);
    let base2 = counts.infected_unvaccinated / (1.0 + unvacc_hash);
    Ok((
        effectiveness_from_t0(t1, base1),
        effectiveness_from_t0(t2, base2),
    ))
}

/// Infinite-population limits of the estimators under fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationIdentities {
    pub t0: f64,
    pub t1_pop: f64,
    pub t2_pop: f64,
    /// P(H|LV) P(H|lv) / (P(H|Lv) P(H|lV)), with `s` marginalised.
    pub bias_factor: f64,
}

/// Joint P(v, l, h) with the subset marginalised, indexed `[v][l][h]`.
fn joint_vlh(params: &ModelParams) -> [[[f64; 2]; 2]; 2] {
    let mut out = [[[0.0; 2]; 2]; 2];
    for (v, by_l) in out.iter_mut().enumerate() {
        for (l, by_h) in by_l.iter_mut().enumerate() {
            for (h, x) in by_h.iter_mut().enumerate() {
                *x = (0..2).map(|s| params.cell_probability(s, v, l, h)).sum();
            }
        }
    }
    out
}

pub fn population_identities(params: &ModelParams) -> Result<PopulationIdentities> {
    if !params.is_interior() {
        return Err(domain(
            "population identities need every probability inside (0, 1)",
        ));
    }
    let t0 = log_odds_ratio(params.j[0], params.j[1])?;
    let pj = joint_vlh(params);
    let hosp_given = |v: usize, l: usize| pj[v][l][1] / (pj[v][l][0] + pj[v][l][1]);
    let bias_factor = hosp_given(1, 1) * hosp_given(0, 0) / (hosp_given(0, 1) * hosp_given(1, 0));
    let t1_pop = ((pj[1][1][1] / pj[1][0][1]) / (pj[0][1][1] / pj[0][0][1])).ln();
    let marginal = |v: usize| pj[v].iter().flatten().sum::<f64>();
    let t2_pop = logit(pj[1][1][1] / marginal(1)) - logit(pj[0][1][1] / marginal(0));
    Ok(PopulationIdentities {
        t0,
        t1_pop,
        t2_pop,
        bias_factor,
    })
}

/// Probabilities of the directly observable quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableProbs {
    pub p_v: f64,
    pub p_h: f64,
    pub p_l_given_h: f64,
}

pub fn observable_probs(params: &ModelParams) -> Result<ObservableProbs> {
    let pj = joint_vlh(params);
    let p_v = (1.0 - params.p) * params.r[0] + params.p * params.r[1];
    let p_h: f64 = (0..2)
        .flat_map(|v| (0..2).map(move |l| (v, l)))
        .map(|(v, l)| pj[v][l][1])
        .sum();
    if p_h.is_nan() || p_h <= 0.0 {
        return Err(domain("P(H) is zero, so P(L|H) is undefined"));
    }
    let p_l_given_h = (pj[0][1][1] + pj[1][1][1]) / p_h;
    Ok(ObservableProbs {
        p_v,
        p_h,
        p_l_given_h,
    })
}
