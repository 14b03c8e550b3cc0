//! Domain types: Beta priors, model probabilities, population counts and
//! observation classes.
//!
//! Binary attributes use the index convention `0 = no, 1 = yes`:
//! `s` is the healthcare-seeking subset, `v` vaccination, `l` infection and
//! `h` hospitalisation (which is also being tested).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters of a Beta distribution over the probability of outcome 1.
///
/// `a0` is the pseudo-count for outcome 0 and `a1` for outcome 1, so the
/// mean is `a1 / (a0 + a1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a0: f64,
    pub a1: f64,
}

impl BetaParams {
    pub const UNIFORM: BetaParams = BetaParams { a0: 1.0, a1: 1.0 };

    pub fn new(a0: f64, a1: f64) -> Result<Self> {
        if !(a0.is_finite() && a1.is_finite() && a0 > 0.0 && a1 > 0.0) {
            return Err(invalid(format!(
                "Beta pseudo-counts must be finite and positive, got ({a0}, {a1})"
            )));
        }
        Ok(BetaParams { a0, a1 })
    }

    pub fn mean(&self) -> f64 {
        self.a1 / (self.a0 + self.a1)
    }

    pub fn total(&self) -> f64 {
        self.a0 + self.a1
    }

    /// Posterior after observing `n0` outcomes of 0 and `n1` outcomes of 1.
    pub fn updated(&self, n0: f64, n1: f64) -> BetaParams {
        BetaParams {
            a0: self.a0 + n0,
            a1: self.a1 + n1,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        BetaParams::new(self.a0, self.a1).map(|_| ())
    }
}

/// Beta parameters with the given mean whose pseudo-counts sum to `total`.
pub fn make_beta(mean: f64, total: f64) -> Result<BetaParams> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(invalid(format!("mean must lie in (0, 1), got {mean}")));
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(invalid(format!("total must be positive, got {total}")));
    }
    let a1 = mean * total;
    BetaParams::new(total - a1, a1)
}

/// The 13 independent Beta priors over the model probabilities.
///
/// `beta` is indexed by `s`, `gamma` by `v` and `delta` by `[s][l][v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: BetaParams,
    pub beta: [BetaParams; 2],
    pub gamma: [BetaParams; 2],
    pub delta: [[[BetaParams; 2]; 2]; 2],
}

impl PriorSpec {
    pub fn uniform() -> Self {
        let u = BetaParams::UNIFORM;
        PriorSpec {
            alpha: u,
            beta: [u; 2],
            gamma: [u; 2],
            delta: [[[u; 2]; 2]; 2],
        }
    }

    pub fn named(name: PriorName) -> Self {
        named_prior(name)
    }

    /// All 13 entries with their config keys, in a fixed order.
    pub fn entries(&self) -> Vec<(String, BetaParams)> {
        let mut out = Vec::with_capacity(13);
        out.push(("alpha".to_string(), self.alpha));
        for s in 0..2 {
            out.push((format!("beta_s{s}"), self.beta[s]));
        }
        for v in 0..2 {
            out.push((format!("gamma_v{v}"), self.gamma[v]));
        }
        for s in 0..2 {
            for l in 0..2 {
                for v in 0..2 {
                    out.push((format!("delta_s{s}_l{l}_v{v}"), self.delta[s][l][v]));
                }
            }
        }
        out
    }

    pub fn entry_mut(&mut self, key: &str) -> Option<&mut BetaParams> {
        let digit = |c: Option<char>| c.and_then(|c| c.to_digit(10)).filter(|d| *d < 2);
        if key == "alpha" {
            return Some(&mut self.alpha);
        }
        if let Some(rest) = key.strip_prefix("beta_s") {
            let s = digit(rest.chars().next()).filter(|_| rest.len() == 1)?;
            return Some(&mut self.beta[s as usize]);
        }
        if let Some(rest) = key.strip_prefix("gamma_v") {
            let v = digit(rest.chars().next()).filter(|_| rest.len() == 1)?;
            return Some(&mut self.gamma[v as usize]);
        }
        if let Some(rest) = key.strip_prefix("delta_") {
            // s{d}_l{d}_v{d}
            let b = rest.as_bytes();
            if b.len() != 8 || &rest[0..1] != "s" || &rest[2..4] != "_l" || &rest[5..7] != "_v" {
                return None;
            }
            let s = digit(rest.chars().nth(1))? as usize;
            let l = digit(rest.chars().nth(4))? as usize;
            let v = digit(rest.chars().nth(7))? as usize;
            return Some(&mut self.delta[s][l][v]);
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        for (key, b) in self.entries() {
            b.validate()
                .map_err(|e| invalid(format!("prior entry {key}: {e}")))?;
        }
        Ok(())
    }
}

/// The four prior configurations used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorName {
    WideOpen,
    Prior1,
    Prior2,
    Prior3,
}

impl PriorName {
    pub const ALL: [PriorName; 4] = [
        PriorName::WideOpen,
        PriorName::Prior1,
        PriorName::Prior2,
        PriorName::Prior3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PriorName::WideOpen => "wide_open",
            PriorName::Prior1 => "prior1",
            PriorName::Prior2 => "prior2",
            PriorName::Prior3 => "prior3",
        }
    }
}

impl fmt::Display for PriorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wide_open" | "wideopen" | "prior0" | "0" => Ok(PriorName::WideOpen),
            "prior1" | "1" => Ok(PriorName::Prior1),
            "prior2" | "2" => Ok(PriorName::Prior2),
            "prior3" | "3" => Ok(PriorName::Prior3),
            other => Err(invalid(format!("unknown prior name '{other}'"))),
        }
    }
}

fn informative(mean: f64) -> BetaParams {
    make_beta(mean, 200.0).expect("table means lie in (0, 1)")
}

pub fn named_prior(name: PriorName) -> PriorSpec {
    let mut prior = PriorSpec::uniform();
    match name {
        PriorName::WideOpen => {}
        PriorName::Prior1 => {
            prior.alpha = informative(0.5);
            prior.beta = [informative(0.005), informative(0.995)];
            for l in 0..2 {
                for v in 0..2 {
                    prior.delta[0][l][v] = informative(0.4);
                    prior.delta[1][l][v] = informative(0.995);
                }
            }
        }
        PriorName::Prior2 => {
            prior.alpha = informative(0.995);
        }
        PriorName::Prior3 => {
            prior.alpha = informative(0.995);
            prior.beta = [informative(0.5); 2];
            for s in 0..2 {
                for l in 0..2 {
                    for v in 0..2 {
                        let mean = if l == 1 || v == 1 { 0.995 } else { 0.1 };
                        prior.delta[s][l][v] = informative(mean);
                    }
                }
            }
        }
    }
    prior
}

/// One concrete setting of the 13 model probabilities.
///
/// `r` is indexed by `s`, `j` by `v` and `q` by `[s][l][v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// P(s = 1)
    pub p: f64,
    /// P(v = 1 | s)
    pub r: [f64; 2],
    /// P(l = 1 | v)
    pub j: [f64; 2],
    /// P(h = 1 | s, l, v)
    pub q: [[[f64; 2]; 2]; 2],
}

impl ModelParams {
    pub fn constant(x: f64) -> Self {
        ModelParams {
            p: x,
            r: [x; 2],
            j: [x; 2],
            q: [[[x; 2]; 2]; 2],
        }
    }

    pub fn values(&self) -> [f64; 13] {
        let mut out = [0.0; 13];
        out[0] = self.p;
        out[1..3].copy_from_slice(&self.r);
        out[3..5].copy_from_slice(&self.j);
        let mut k = 5;
        for s in 0..2 {
            for l in 0..2 {
                for v in 0..2 {
                    out[k] = self.q[s][l][v];
                    k += 1;
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.values().iter().all(|x| (0.0..=1.0).contains(x)) {
            Ok(())
        } else {
            Err(invalid("model probabilities must lie in [0, 1]"))
        }
    }

    pub fn is_interior(&self) -> bool {
        self.values().iter().all(|x| *x > 0.0 && *x < 1.0)
    }

    /// P(s) P(v|s) P(l|v) without the hospitalisation factor.
    pub fn prevalence_weight(&self, s: usize, v: usize, l: usize) -> f64 {
        bern(self.p, s) * bern(self.r[s], v) * bern(self.j[v], l)
    }

    /// Joint probability of a full cell `(s, v, l, h)`.
    pub fn cell_probability(&self, s: usize, v: usize, l: usize, h: usize) -> f64 {
        self.prevalence_weight(s, v, l) * bern(self.q[s][l][v], h)
    }
}

#[inline]
pub(crate) fn bern(prob_one: f64, outcome: usize) -> f64 {
    if outcome == 1 {
        prob_one
    } else {
        1.0 - prob_one
    }
}

/// Population counts over the 16 cells, indexed `[s][v][l][h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CohortCounts {
    pub n: [[[[u64; 2]; 2]; 2]; 2],
}

impl CohortCounts {
    pub fn get(&self, s: usize, v: usize, l: usize, h: usize) -> u64 {
        self.n[s][v][l][h]
    }

    pub fn add(&mut self, s: usize, v: usize, l: usize, h: usize, count: u64) {
        self.n[s][v][l][h] += count;
    }

    pub fn total(&self) -> u64 {
        self.cells().map(|(_, c)| c).sum()
    }

    pub fn hospitalised(&self) -> u64 {
        self.cells()
            .filter(|(k, _)| k[3] == 1)
            .map(|(_, c)| c)
            .sum()
    }

    /// Iterates `([s, v, l, h], count)` over all 16 cells.
    pub fn cells(&self) -> impl Iterator<Item = ([usize; 4], u64)> + '_ {
        (0..16).map(move |i| {
            let k = [(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1];
            (k, self.n[k[0]][k[1]][k[2]][k[3]])
        })
    }

    /// Sum over cells matching the pattern; `None` matches either value.
    pub fn count_where(
        &self,
        s: Option<usize>,
        v: Option<usize>,
        l: Option<usize>,
        h: Option<usize>,
    ) -> u64 {
        let m = |want: Option<usize>, got: usize| want.is_none_or(|w| w == got);
        self.cells()
            .filter(|(k, _)| m(s, k[0]) && m(v, k[1]) && m(l, k[2]) && m(h, k[3]))
            .map(|(_, c)| c)
            .sum()
    }

    /// Swaps the infection label `l` on every cell.
    pub fn relabel_infection(&self) -> CohortCounts {
        let mut out = CohortCounts::default();
        for (k, c) in self.cells() {
            out.n[k[0]][k[1]][1 - k[2]][k[3]] = c;
        }
        out
    }
}

/// A group of exchangeable individuals sharing the same observed attributes.
///
/// `None` marks an attribute that is not observed for the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservedClass {
    pub vaccinated: Option<bool>,
    pub hospitalised: bool,
    pub infected: Option<bool>,
    pub count: u64,
}

impl ObservedClass {
    pub fn hospitalised(vaccinated: bool, infected: bool, count: u64) -> Self {
        ObservedClass {
            vaccinated: Some(vaccinated),
            hospitalised: true,
            infected: Some(infected),
            count,
        }
    }

    pub fn unseen(vaccinated: Option<bool>, count: u64) -> Self {
        ObservedClass {
            vaccinated,
            hospitalised: false,
            infected: None,
            count,
        }
    }

    fn key(&self) -> (Option<bool>, bool, Option<bool>) {
        (self.vaccinated, self.hospitalised, self.infected)
    }

    /// Full cells `(s, v, l)` compatible with this class; `h` is fixed by the class.
    pub fn compatible_cells(&self) -> Vec<[usize; 3]> {
        let opts = |o: Option<bool>| match o {
            Some(b) => vec![b as usize],
            None => vec![0, 1],
        };
        let mut out = Vec::with_capacity(8);
        for s in 0..2 {
            for v in opts(self.vaccinated) {
                for l in opts(self.infected) {
                    out.push([s, v, l]);
                }
            }
        }
        out
    }
}

/// Observed data as a list of classes.
///
/// Infection status is known exactly for hospitalised individuals (they are
/// tested) and never for anyone else; `s` is never observed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObservedData {
    classes: Vec<ObservedClass>,
}

impl ObservedData {
    /// Validates and canonicalises: duplicate classes are merged, empty ones
    /// dropped, and the result is sorted.
    pub fn new(classes: impl IntoIterator<Item = ObservedClass>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<_, u64> = Default::default();
        for c in classes {
            if c.hospitalised && c.infected.is_none() {
                return Err(invalid(
                    "hospitalised classes must have known infection status",
                ));
            }
            if !c.hospitalised && c.infected.is_some() {
                return Err(invalid(
                    "infection status is only observed for hospitalised classes",
                ));
            }
            *merged.entry(c.key()).or_default() += c.count;
        }
        let classes = merged
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .map(
                |((vaccinated, hospitalised, infected), count)| ObservedClass {
                    vaccinated,
                    hospitalised,
                    infected,
                    count,
                },
            )
            .collect();
        Ok(ObservedData { classes })
    }

    pub fn empty() -> Self {
        ObservedData::default()
    }

    pub fn classes(&self) -> &[ObservedClass] {
        &self.classes
    }

    pub fn total(&self) -> u64 {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn hospitalised(&self) -> u64 {
        self.count_where(None, Some(true), None)
    }

    /// Sum over classes whose observed attributes equal the given values.
    /// `v` and `l` patterns only match classes where the attribute is known.
    pub fn count_where(&self, v: Option<bool>, h: Option<bool>, l: Option<bool>) -> u64 {
        self.classes
            .iter()
            .filter(|c| v.is_none_or(|v| c.vaccinated == Some(v)))
            .filter(|c| h.is_none_or(|h| c.hospitalised == h))
            .filter(|c| l.is_none_or(|l| c.infected == Some(l)))
            .map(|c| c.count)
            .sum()
    }

    pub fn unknown_vaccination(&self) -> u64 {
        self.classes
            .iter()
            .filter(|c| c.vaccinated.is_none())
            .map(|c| c.count)
            .sum()
    }

    /// Swaps observed infection labels.
    pub fn relabel_infection(&self) -> ObservedData {
        ObservedData::new(self.classes.iter().map(|c| ObservedClass {
            infected: c.infected.map(|l| !l),
            ..*c
        }))
        .expect("relabelling preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: BetaParams, a0: f64, a1: f64) -> bool {
        (a.a0 - a0).abs() < 1e-9 && (a.a1 - a1).abs() < 1e-9
    }

    #[test]
    fn make_beta_examples() {
        assert!(close(make_beta(0.5, 200.0).unwrap(), 100.0, 100.0));
        assert!(close(make_beta(0.995, 200.0).unwrap(), 1.0, 199.0));
        assert!(close(make_beta(0.4, 200.0).unwrap(), 120.0, 80.0));
    }

    #[test]
    fn make_beta_rejects_bad_input() {
        assert!(make_beta(0.0, 200.0).is_err());
        assert!(make_beta(1.0, 200.0).is_err());
        assert!(make_beta(0.5, 0.0).is_err());
        assert!(make_beta(f64::NAN, 1.0).is_err());
        assert!(BetaParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn named_priors_match_table() {
        let w = named_prior(PriorName::WideOpen);
        assert!(w.entries().iter().all(|(_, b)| *b == BetaParams::UNIFORM));

        let p3 = named_prior(PriorName::Prior3);
        assert!(close(p3.delta[0][0][0], 180.0, 20.0));
        assert!(close(p3.delta[1][1][0], 1.0, 199.0));
        assert!(close(p3.delta[1][0][1], 1.0, 199.0));
        assert!(close(p3.alpha, 1.0, 199.0));
        assert!(close(p3.beta[1], 100.0, 100.0));

        let p1 = named_prior(PriorName::Prior1);
        assert!(close(p1.beta[0], 199.0, 1.0));
        assert!(close(p1.beta[1], 1.0, 199.0));
        assert!(close(p1.delta[0][1][0], 120.0, 80.0));
        assert!(close(p1.delta[1][0][1], 1.0, 199.0));
        assert_eq!(p1.gamma, [BetaParams::UNIFORM; 2]);

        let p2 = named_prior(PriorName::Prior2);
        assert!(close(p2.alpha, 1.0, 199.0));
        assert!(p2.entries()[1..]
            .iter()
            .all(|(_, b)| *b == BetaParams::UNIFORM));
    }

    #[test]
    fn named_prior_totals_are_2_or_200() {
        for name in PriorName::ALL {
            for (_, b) in named_prior(name).entries() {
                let t = b.total();
                assert!(
                    (t - 2.0).abs() < 1e-12 || (t - 200.0).abs() < 1e-9,
                    "{name}: {t}"
                );
            }
        }
    }

    #[test]
    fn prior_names_parse() {
        assert_eq!(
            "wide_open".parse::<PriorName>().unwrap(),
            PriorName::WideOpen
        );
        assert_eq!(
            "wide-open".parse::<PriorName>().unwrap(),
            PriorName::WideOpen
        );
        assert_eq!("prior3".parse::<PriorName>().unwrap(), PriorName::Prior3);
        assert!("prior9".parse::<PriorName>().is_err());
    }

    #[test]
    fn entry_keys_resolve() {
        let mut p = PriorSpec::uniform();
        for (key, _) in PriorSpec::uniform().entries() {
            assert!(p.entry_mut(&key).is_some(), "{key}");
        }
        assert!(p.entry_mut("delta_s2_l0_v0").is_none());
        assert!(p.entry_mut("beta_s01").is_none());
        assert!(p.entry_mut("gamma").is_none());
    }

    #[test]
    fn observed_data_validation() {
        assert!(ObservedData::new([ObservedClass {
            vaccinated: Some(true),
            hospitalised: true,
            infected: None,
            count: 1
        }])
        .is_err());
        assert!(ObservedData::new([ObservedClass {
            vaccinated: Some(true),
            hospitalised: false,
            infected: Some(false),
            count: 1
        }])
        .is_err());
        let obs = ObservedData::new([
            ObservedClass::hospitalised(true, true, 3),
            ObservedClass::hospitalised(true, true, 2),
            ObservedClass::unseen(None, 0),
        ])
        .unwrap();
        assert_eq!(obs.classes().len(), 1);
        assert_eq!(obs.total(), 5);
    }

    #[test]
    fn compatible_cells_sizes() {
        assert_eq!(
            ObservedClass::hospitalised(true, false, 1)
                .compatible_cells()
                .len(),
            2
        );
        assert_eq!(
            ObservedClass::unseen(Some(false), 1)
                .compatible_cells()
                .len(),
            4
        );
        assert_eq!(ObservedClass::unseen(None, 1).compatible_cells().len(), 8);
    }

    #[test]
    fn cell_probabilities_sum_to_one() {
        let params = ModelParams {
            p: 0.3,
            r: [0.2, 0.7],
            j: [0.4, 0.1],
            q: [[[0.1, 0.2], [0.3, 0.4]], [[0.5, 0.6], [0.7, 0.8]]],
        };
        let mut total = 0.0;
        for i in 0..16 {
            total += params.cell_probability(i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
