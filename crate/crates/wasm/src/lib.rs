//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string,
//! so the page needs no generated type glue beyond `wasm-bindgen`'s own.
//! Errors come back as `{"error": "..."}`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ve_core::estimators::PopulationTotals;
use ve_core::estimators::{crude_estimate, e1_e2_estimates, effectiveness_from_t0, tncc_estimate};
use ve_core::harness::{run_suite, SuiteConfig};
use ve_core::report::render_svg;
use ve_core::{ObservedClass, ObservedData, PriorName};

fn to_json<T: Serialize>(result: ve_core::Result<T>) -> String {
    match result {
        Ok(value) => serde_json::to_string(&value).expect("plain data serialises"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[derive(Serialize)]
struct TableEstimates {
    t1: f64,
    t2: f64,
    e1: f64,
    e2: f64,
}

/// TNCC and crude estimates from a hospital table plus counts of
/// vaccinated and unvaccinated people who were never hospitalised.
#[wasm_bindgen]
pub fn estimate_from_table(
    unvacc_uninfected: u32,
    unvacc_infected: u32,
    vacc_uninfected: u32,
    vacc_infected: u32,
    unseen_unvacc: u32,
    unseen_vacc: u32,
) -> String {
    to_json((|| {
        let obs = ObservedData::new([
            ObservedClass::hospitalised(false, false, unvacc_uninfected.into()),
            ObservedClass::hospitalised(false, true, unvacc_infected.into()),
            ObservedClass::hospitalised(true, false, vacc_uninfected.into()),
            ObservedClass::hospitalised(true, true, vacc_infected.into()),
            ObservedClass::unseen(Some(false), unseen_unvacc.into()),
            ObservedClass::unseen(Some(true), unseen_vacc.into()),
        ])?;
        let totals = PopulationTotals::observed(&obs);
        let (e1, e2) = e1_e2_estimates(&obs, totals)?;
        Ok(TableEstimates {
            t1: tncc_estimate(&obs),
            t2: crude_estimate(&obs, totals.unvaccinated, totals.vaccinated)?,
            e1,
            e2,
        })
    })())
}

/// Effectiveness (percent) implied by log odds ratio `t0` at `points`
/// evenly spaced values of the unvaccinated infection probability in
/// (0, 1), as `[[p, e], ...]`.
#[wasm_bindgen]
pub fn effectiveness_curve(t0: f64, points: u32) -> String {
    let points = points.clamp(2, 1000);
    let curve: Vec<[f64; 2]> = (1..=points)
        .map(|i| {
            let p = i as f64 / (points + 1) as f64;
            [p, effectiveness_from_t0(t0, p)]
        })
        .collect();
    to_json(Ok(curve))
}

#[derive(Serialize)]
struct SuiteView {
    summary: ve_core::harness::SuiteSummary,
    records: Vec<ve_core::harness::RunRecord>,
    svg: String,
}

/// Runs a small simulation suite in the page and returns its summary,
/// records and rendered plot.
#[wasm_bindgen]
pub fn simulate_suite(prior: &str, n: u32, reps: u32, samples: u32, seed: u32) -> String {
    to_json((|| {
        let name: PriorName = prior.parse()?;
        let mut cfg = SuiteConfig::named(name, n.into());
        cfg.reps = reps as usize;
        cfg.n_samples = samples as usize;
        cfg.base_seed = seed.into();
        cfg.keep_samples = 100;
        cfg.threads = Some(1);
        let report = run_suite(&cfg)?;
        Ok(SuiteView {
            svg: render_svg(&report)?,
            summary: report.summary,
            records: report.records,
        })
    })())
}
