use serde_json::Value;
use ve_wasm::{effectiveness_curve, estimate_from_table, simulate_suite};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).expect("valid JSON")
}

#[test]
fn table_estimates_match_the_library() {
    // hospital table with twice as many unseen people, split like the
    // hospitalised
    let v = parse(&estimate_from_table(96371, 7313, 23993, 143, 207456, 48272));
    assert!((v["t1"].as_f64().unwrap() + 2.537).abs() < 0.001, "{v}");
    assert!((v["t2"].as_f64().unwrap() + 2.492).abs() < 0.001, "{v}");
    assert!((v["e1"].as_f64().unwrap() - 91.5).abs() < 0.1, "{v}");
}

#[test]
fn curve_spans_the_open_interval() {
    let v = parse(&effectiveness_curve((0.5f64).ln(), 9));
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 9);
    assert!((pts[0][0].as_f64().unwrap() - 0.1).abs() < 1e-12);
    // odds ratio 1/2 at P(L|v) = 0.5 gives E = 100 (1 - 0.5 / 0.75)
    let mid = &pts[4];
    assert!((mid[1].as_f64().unwrap() - 100.0 / 3.0).abs() < 1e-9);
}

#[test]
fn suite_returns_plot_and_summary() {
    let v = parse(&simulate_suite("prior1", 200, 3, 200, 4));
    assert_eq!(v["summary"]["n_runs"], 3);
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
    assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
}

#[test]
fn errors_are_reported_as_json() {
    let v = parse(&simulate_suite("nonsense", 200, 3, 200, 4));
    assert!(v["error"].as_str().unwrap().contains("nonsense"));
    let v = parse(&simulate_suite("wide_open", 5, 3, 200, 4));
    assert!(v["error"].is_string());
}
