//! Text configuration format for [`PriorSpec`].
//!
//! The format is TOML with flat keys, one per Beta prior:
//!
//! ```toml
//! base = "prior1"                        # optional, defaults to "wide_open"
//! alpha = [100.0, 100.0]                 # (a0, a1) pseudo-counts
//! beta_s0 = { mean = 0.005, total = 200 }
//! delta_s1_l0_v1 = [1.0, 199.0]
//! ```
//!
//! Keys are `alpha`, `beta_s{s}`, `gamma_v{v}` and `delta_s{s}_l{l}_v{v}`.
//! Entries not listed keep the value from `base`.

use toml::{Table, Value};

use crate::error::{invalid, Error, Result};
use crate::model::{make_beta, BetaParams, PriorName, PriorSpec};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn number(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(parse_err(format!("{what} must be a number"))),
    }
}

fn parse_entry(key: &str, value: &Value) -> Result<BetaParams> {
    match value {
        Value::Array(items) if items.len() == 2 => {
            let a0 = number(&items[0], key)?;
            let a1 = number(&items[1], key)?;
            BetaParams::new(a0, a1)
        }
        Value::Table(t) => {
            let get = |name: &str| {
                t.get(name)
                    .ok_or_else(|| parse_err(format!("{key}: missing '{name}'")))
                    .and_then(|v| number(v, key))
            };
            if let Some(extra) = t.keys().find(|k| *k != "mean" && *k != "total") {
                return Err(parse_err(format!("{key}: unexpected field '{extra}'")));
            }
            make_beta(get("mean")?, get("total")?)
        }
        _ => Err(parse_err(format!(
            "{key}: expected [a0, a1] or {{ mean, total }}"
        ))),
    }
}

pub fn parse_prior(text: &str) -> Result<PriorSpec> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
    let mut prior = match table.get("base") {
        None => PriorSpec::uniform(),
        Some(Value::String(name)) => PriorSpec::named(name.parse::<PriorName>()?),
        Some(_) => return Err(parse_err("base must be a prior name string")),
    };
    for (key, value) in &table {
        if key == "base" {
            continue;
        }
        let entry = parse_entry(key, value)?;
        *prior
            .entry_mut(key)
            .ok_or_else(|| parse_err(format!("unknown prior key '{key}'")))? = entry;
    }
    prior.validate()?;
    Ok(prior)
}

/// Writes all 13 entries explicitly as `[a0, a1]` pairs.
pub fn format_prior(prior: &PriorSpec) -> String {
    let mut table = Table::new();
    for (key, b) in prior.entries() {
        table.insert(
            key,
            Value::Array(vec![Value::Float(b.a0), Value::Float(b.a1)]),
        );
    }
    toml::to_string(&table).expect("a flat table of floats always serialises")
}

/// Resolves a prior given on the command line: a named prior or a path to a
/// config file.
pub fn resolve_prior(name_or_path: &str) -> Result<PriorSpec> {
    match name_or_path.parse::<PriorName>() {
        Ok(name) => Ok(PriorSpec::named(name)),
        Err(_) => {
            let path = std::path::Path::new(name_or_path);
            if path.exists() {
                parse_prior(&std::fs::read_to_string(path)?)
            } else {
                Err(invalid(format!(
                    "{name_or_path:?} is neither a prior name (wide_open, prior1, prior2, \
                     prior3) nor an existing prior file"
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn named_priors_round_trip() {
        for name in PriorName::ALL {
            let prior = PriorSpec::named(name);
            assert_eq!(parse_prior(&format_prior(&prior)).unwrap(), prior);
        }
    }

    #[test]
    fn base_and_shorthand() {
        let text = r#"
            base = "prior1"
            gamma_v0 = { mean = 0.25, total = 8 }
            delta_s0_l1_v1 = [3, 4.5]
        "#;
        let prior = parse_prior(text).unwrap();
        let mut want = PriorSpec::named(PriorName::Prior1);
        want.gamma[0] = BetaParams { a0: 6.0, a1: 2.0 };
        want.delta[0][1][1] = BetaParams { a0: 3.0, a1: 4.5 };
        assert_eq!(prior, want);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_prior("alpha = [0, 1]").is_err());
        assert!(parse_prior("alpha = [1, 1, 1]").is_err());
        assert!(parse_prior("zeta = [1, 1]").is_err());
        assert!(parse_prior("base = \"prior7\"").is_err());
        assert!(parse_prior("beta_s0 = { mean = 1.5, total = 2 }").is_err());
        assert!(parse_prior("beta_s0 = { mean = 0.5, totl = 2 }").is_err());
        assert!(parse_prior("alpha = ").is_err());
    }

    fn arb_beta() -> impl Strategy<Value = BetaParams> {
        (1e-6f64..1e6, 1e-6f64..1e6).prop_map(|(a0, a1)| BetaParams { a0, a1 })
    }

    proptest! {
        #[test]
        fn arbitrary_priors_round_trip(entries in proptest::collection::vec(arb_beta(), 13)) {
            let mut prior = PriorSpec::uniform();
            for ((key, _), b) in PriorSpec::uniform().entries().iter().zip(entries) {
                *prior.entry_mut(key).unwrap() = b;
            }
            prop_assert_eq!(parse_prior(&format_prior(&prior)).unwrap(), prior);
        }

        #[test]
        fn make_beta_recovers_mean_and_total(mean in 1e-6f64..(1.0 - 1e-6), total in 1e-3f64..1e6) {
            let b = make_beta(mean, total).unwrap();
            prop_assert!(((b.mean() - mean) / mean).abs() < 1e-12);
            prop_assert!(((b.total() - total) / total).abs() < 1e-12);
        }
    }
}
