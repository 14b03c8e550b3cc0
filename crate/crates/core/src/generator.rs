//! Synthetic data: parameter draws, cohorts and observation regimes,
//! including the partially observed hospital dataset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{CohortCounts, ModelParams, ObservedClass, ObservedData, PriorSpec};
use crate::rng::RngState;
use crate::sampling::{beta, binomial};

/// How individuals come to be tested, and what is known about those who are not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationRegime {
    /// Tested if and only if hospitalised.
    Spontaneous,
    /// Tests sent to random members of the population: `h` is redrawn
    /// independently of everything else.
    RandomTesting { test_probability: f64 },
    /// Hospitalised individuals as observed, plus an unseen untested
    /// population of `unseen_multiple` times their number.
    RealDataPartial {
        unseen_multiple: f64,
        assumption: UnseenAssumption,
    },
}

/// Vaccination status of the unseen population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnseenAssumption {
    /// Vaccinated in the same fraction as the hospitalised.
    SameFraction,
    /// Everyone vaccinated.
    AllVaccinated,
    /// Half split as the hospitalised, the other half of unknown status.
    HalfUnknown,
}

impl UnseenAssumption {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(UnseenAssumption::SameFraction),
            2 => Ok(UnseenAssumption::AllVaccinated),
            3 => Ok(UnseenAssumption::HalfUnknown),
            _ => Err(invalid(format!("assumption must be 1, 2 or 3, got {i}"))),
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            UnseenAssumption::SameFraction => 1,
            UnseenAssumption::AllVaccinated => 2,
            UnseenAssumption::HalfUnknown => 3,
        }
    }
}

pub fn draw_params(prior: &PriorSpec, rng: &mut RngState) -> Result<ModelParams> {
    prior.validate()?;
    let mut params = ModelParams::constant(0.0);
    params.p = beta(prior.alpha, rng);
    for s in 0..2 {
        params.r[s] = beta(prior.beta[s], rng);
    }
    for v in 0..2 {
        params.j[v] = beta(prior.gamma[v], rng);
    }
    for s in 0..2 {
        for l in 0..2 {
            for v in 0..2 {
                params.q[s][l][v] = beta(prior.delta[s][l][v], rng);
            }
        }
    }
    Ok(params)
}

/// Population of `n` individuals drawn stage by stage: `s`, then `v | s`,
/// `l | v` and `h | s, l, v`, each as a binomial split of the counts.
pub fn draw_cohort(params: &ModelParams, n: u64, rng: &mut RngState) -> Result<CohortCounts> {
    if n == 0 {
        return Err(invalid("cohort size must be at least 1"));
    }
    params.validate()?;
    let mut cohort = CohortCounts::default();
    let n_s1 = binomial(n, params.p, rng);
    for (s, n_s) in [(0, n - n_s1), (1, n_s1)] {
        let n_v1 = binomial(n_s, params.r[s], rng);
        for (v, n_sv) in [(0, n_s - n_v1), (1, n_v1)] {
            let n_l1 = binomial(n_sv, params.j[v], rng);
            for (l, n_svl) in [(0, n_sv - n_l1), (1, n_l1)] {
                let n_h1 = binomial(n_svl, params.q[s][l][v], rng);
                cohort.n[s][v][l][0] = n_svl - n_h1;
                cohort.n[s][v][l][1] = n_h1;
            }
        }
    }
    Ok(cohort)
}

/// Redraws `h` for every individual with a fixed testing probability.
pub fn apply_random_testing(
    cohort: &CohortCounts,
    test_probability: f64,
    rng: &mut RngState,
) -> Result<CohortCounts> {
    if !(0.0..=1.0).contains(&test_probability) {
        return Err(invalid("test probability must lie in [0, 1]"));
    }
    let mut out = CohortCounts::default();
    for s in 0..2 {
        for v in 0..2 {
            for l in 0..2 {
                let m = cohort.n[s][v][l][0] + cohort.n[s][v][l][1];
                let tested = binomial(m, test_probability, rng);
                out.n[s][v][l][1] = tested;
                out.n[s][v][l][0] = m - tested;
            }
        }
    }
    Ok(out)
}

/// Vaccination known for all, infection known for the hospitalised only.
pub fn observe_spontaneous(cohort: &CohortCounts) -> ObservedData {
    let mut classes = Vec::with_capacity(6);
    for v in 0..2 {
        for l in 0..2 {
            let c = cohort.count_where(None, Some(v), Some(l), Some(1));
            classes.push(ObservedClass::hospitalised(v == 1, l == 1, c));
        }
        let c = cohort.count_where(None, Some(v), None, Some(0));
        classes.push(ObservedClass::unseen(Some(v == 1), c));
    }
    ObservedData::new(classes).expect("spontaneous classes are valid")
}

pub fn observe(
    cohort: &CohortCounts,
    regime: ObservationRegime,
    rng: &mut RngState,
) -> Result<ObservedData> {
    match regime {
        ObservationRegime::Spontaneous => Ok(observe_spontaneous(cohort)),
        ObservationRegime::RandomTesting { test_probability } => Ok(observe_spontaneous(
            &apply_random_testing(cohort, test_probability, rng)?,
        )),
        ObservationRegime::RealDataPartial {
            unseen_multiple,
            assumption,
        } => {
            let table = HospitalTable::from_cohort(cohort);
            partial_observation(&table, unseen_multiple, assumption)
        }
    }
}

/// Counts of hospitalised, tested individuals indexed `[v][l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HospitalTable {
    pub counts: [[u64; 2]; 2],
}

/// Unvaccinated or two-dose patients who tested negative or positive for
/// the alpha variant.
pub const ALPHA_VARIANT_TABLE: HospitalTable = HospitalTable {
    counts: [[96371, 7313], [23993, 143]],
};

#[derive(Debug, Deserialize)]
struct TableRow {
    v: u8,
    l: u8,
    count: u64,
}

impl HospitalTable {
    pub fn from_cohort(cohort: &CohortCounts) -> Self {
        let mut counts = [[0u64; 2]; 2];
        for (v, row) in counts.iter_mut().enumerate() {
            for (l, c) in row.iter_mut().enumerate() {
                *c = cohort.count_where(None, Some(v), Some(l), Some(1));
            }
        }
        HospitalTable { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn vaccinated(&self) -> u64 {
        self.counts[1][0] + self.counts[1][1]
    }

    /// Reads a CSV with header `v,l,count`; rows for the same cell add up.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut counts = [[0u64; 2]; 2];
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in rdr.deserialize::<TableRow>() {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            if row.v > 1 || row.l > 1 {
                return Err(Error::Parse(format!(
                    "v and l must be 0 or 1, got v={} l={}",
                    row.v, row.l
                )));
            }
            counts[row.v as usize][row.l as usize] += row.count;
        }
        Ok(HospitalTable { counts })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

/// Hospitalised classes from `table` plus an untested population of
/// `round(unseen_multiple * N)` individuals whose vaccination status
/// follows `assumption`. Fractional counts are rounded half to even.
pub fn partial_observation(
    table: &HospitalTable,
    unseen_multiple: f64,
    assumption: UnseenAssumption,
) -> Result<ObservedData> {
    if !(unseen_multiple >= 0.0 && unseen_multiple.is_finite()) {
        return Err(invalid("unseen multiple must be non-negative"));
    }
    let n = table.total();
    let mut classes = Vec::with_capacity(7);
    for v in 0..2 {
        for l in 0..2 {
            classes.push(ObservedClass::hospitalised(
                v == 1,
                l == 1,
                table.counts[v][l],
            ));
        }
    }
    let unseen = (unseen_multiple * n as f64).round_ties_even() as u64;
    let fraction = if n > 0 {
        table.vaccinated() as f64 / n as f64
    } else {
        0.0
    };
    let split = |m: u64| {
        let vacc = (m as f64 * fraction).round_ties_even() as u64;
        (vacc.min(m), m - vacc.min(m))
    };
    match assumption {
        UnseenAssumption::SameFraction => {
            let (vacc, unvacc) = split(unseen);
            classes.push(ObservedClass::unseen(Some(true), vacc));
            classes.push(ObservedClass::unseen(Some(false), unvacc));
        }
        UnseenAssumption::AllVaccinated => {
            classes.push(ObservedClass::unseen(Some(true), unseen));
        }
        UnseenAssumption::HalfUnknown => {
            let known = (unseen as f64 / 2.0).round_ties_even() as u64;
            let (vacc, unvacc) = split(known);
            classes.push(ObservedClass::unseen(Some(true), vacc));
            classes.push(ObservedClass::unseen(Some(false), unvacc));
            classes.push(ObservedClass::unseen(None, unseen - known));
        }
    }
    ObservedData::new(classes)
}

pub fn load_real_data(assumption: UnseenAssumption, unseen_multiple: f64) -> Result<ObservedData> {
    partial_observation(&ALPHA_VARIANT_TABLE, unseen_multiple, assumption)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BetaParams, PriorName};

    #[test]
    fn concentrated_prior_draws_near_mean() {
        let mut prior = PriorSpec::uniform();
        let means: Vec<f64> = (0..13).map(|k| 0.05 + 0.07 * k as f64).collect();
        for ((key, _), m) in PriorSpec::uniform().entries().iter().zip(&means) {
            *prior.entry_mut(key).unwrap() = BetaParams {
                a0: 1e9 * (1.0 - m),
                a1: 1e9 * m,
            };
        }
        let params = draw_params(&prior, &mut RngState::new(5)).unwrap();
        for (x, m) in params.values().iter().zip(&means) {
            assert!((x - m).abs() < 1e-3, "{x} vs {m}");
        }
    }

    #[test]
    fn wide_open_moments() {
        let prior = PriorSpec::named(PriorName::WideOpen);
        let mut rng = RngState::new(11);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| draw_params(&prior, &mut rng).unwrap().p)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert!((var - 1.0 / 12.0).abs() < 0.01);
    }

    #[test]
    fn draws_are_deterministic() {
        let prior = PriorSpec::named(PriorName::Prior1);
        let a = draw_params(&prior, &mut RngState::new(42)).unwrap();
        let b = draw_params(&prior, &mut RngState::new(42)).unwrap();
        assert_eq!(a.values().map(f64::to_bits), b.values().map(f64::to_bits));
    }

    #[test]
    fn degenerate_cohort() {
        let mut params = ModelParams::constant(0.5);
        params.p = 0.0;
        params.r[0] = 1.0;
        params.j[1] = 0.0;
        params.q[0][0][1] = 1.0;
        let cohort = draw_cohort(&params, 100, &mut RngState::new(1)).unwrap();
        assert_eq!(cohort.get(0, 1, 0, 1), 100);
        assert_eq!(cohort.total(), 100);
    }

    #[test]
    fn binomial_split_of_subsets() {
        let mut params = ModelParams::constant(0.0);
        params.p = 0.5;
        let n = 100_000u64;
        let cohort = draw_cohort(&params, n, &mut RngState::new(9)).unwrap();
        let s1 = cohort.count_where(Some(1), None, None, None) as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((s1 - 50_000.0).abs() < 4.0 * sigma);
        assert_eq!(cohort.get(0, 0, 0, 0) + cohort.get(1, 0, 0, 0), n);
    }

    #[test]
    fn zero_cohort_rejected() {
        assert!(draw_cohort(&ModelParams::constant(0.5), 0, &mut RngState::new(1)).is_err());
    }

    #[test]
    fn spontaneous_masks_unhospitalised() {
        let mut cohort = CohortCounts::default();
        cohort.add(0, 1, 1, 0, 10);
        cohort.add(1, 0, 0, 0, 5);
        let obs = observe(
            &cohort,
            ObservationRegime::Spontaneous,
            &mut RngState::new(1),
        )
        .unwrap();
        assert_eq!(obs.count_where(None, None, Some(true)), 0);
        assert_eq!(obs.count_where(None, None, Some(false)), 0);
        assert_eq!(obs.total(), 15);
    }

    #[test]
    fn random_testing_everyone() {
        let params = ModelParams::constant(0.3);
        let mut rng = RngState::new(3);
        let cohort = draw_cohort(&params, 500, &mut rng).unwrap();
        let obs = observe(
            &cohort,
            ObservationRegime::RandomTesting {
                test_probability: 1.0,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(obs.hospitalised(), 500);
        assert_eq!(
            obs.count_where(None, None, Some(true)),
            cohort.count_where(None, None, Some(1), None)
        );
    }

    #[test]
    fn spontaneous_conserves_hospitalised_count() {
        let mut rng = RngState::new(17);
        let prior = PriorSpec::named(PriorName::WideOpen);
        for _ in 0..20 {
            let params = draw_params(&prior, &mut rng).unwrap();
            let cohort = draw_cohort(&params, 1000, &mut rng).unwrap();
            let obs = observe(&cohort, ObservationRegime::Spontaneous, &mut rng).unwrap();
            let known_l =
                obs.count_where(None, None, Some(true)) + obs.count_where(None, None, Some(false));
            assert_eq!(known_l, cohort.hospitalised());
            assert_eq!(obs.total(), 1000);
            for v in [false, true] {
                assert_eq!(
                    obs.count_where(Some(v), None, None),
                    cohort.count_where(None, Some(v as usize), None, None)
                );
            }
        }
    }

    #[test]
    fn real_data_assumptions() {
        let a2 = load_real_data(UnseenAssumption::AllVaccinated, 2.0).unwrap();
        assert_eq!(a2.count_where(Some(true), Some(false), None), 255_640);
        assert_eq!(a2.count_where(Some(false), Some(false), None), 0);

        let a1 = load_real_data(UnseenAssumption::SameFraction, 2.0).unwrap();
        assert_eq!(a1.count_where(Some(true), Some(false), None), 48_272);
        assert_eq!(
            a1.count_where(Some(false), Some(false), None),
            255_640 - 48_272
        );

        let a3 = load_real_data(UnseenAssumption::HalfUnknown, 2.0).unwrap();
        assert_eq!(a3.count_where(Some(true), Some(false), None), 24_136);
        assert_eq!(
            a3.count_where(Some(false), Some(false), None),
            127_820 - 24_136
        );
        assert_eq!(a3.unknown_vaccination(), 127_820);

        for obs in [&a1, &a2, &a3] {
            assert_eq!(obs.hospitalised(), 127_820);
            assert_eq!(obs.total(), 3 * 127_820);
        }
    }

    #[test]
    fn table_from_csv() {
        let text = "v,l,count\n0,0,96371\n0,1,7313\n1,0,23993\n1,1,143\n";
        assert_eq!(
            HospitalTable::from_csv_reader(text.as_bytes()).unwrap(),
            ALPHA_VARIANT_TABLE
        );
        assert!(HospitalTable::from_csv_reader("v,l,count\n2,0,1\n".as_bytes()).is_err());
        assert!(HospitalTable::from_csv_reader("v,l,count\n0,0,x\n".as_bytes()).is_err());
    }

    #[test]
    fn assumption_indices() {
        for i in 1..=3 {
            assert_eq!(UnseenAssumption::from_index(i).unwrap().index(), i);
        }
        assert!(UnseenAssumption::from_index(4).is_err());
    }
}
