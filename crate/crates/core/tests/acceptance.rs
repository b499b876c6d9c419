//! Runs every acceptance criterion on the reference configuration and prints
//! one pass/fail line per criterion.
//!
//! Optimisation results are cached under `STA_COOL_CACHE`, or the test target
//! directory when unset, so a rerun only repeats the simulations that changed.

use sta_cool::config::ExperimentConfig;
use sta_cool::store::ResultStore;
use sta_cool::validation::{Validator, CRITERIA};

#[test]
fn acceptance() {
    let cfg = ExperimentConfig::reference();
    let store = ResultStore::from_env(
        std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache"),
    )
    .expect("cache directory");
    let v = Validator::new(cfg.constraints, cfg.consts, Some(store));

    let reports: Vec<_> = CRITERIA.iter().map(|&id| v.run(id)).collect();
    for r in &reports {
        eprintln!("{}", r.details());
    }
    println!();
    for r in &reports {
        println!("{}", r.line());
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.line())
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
