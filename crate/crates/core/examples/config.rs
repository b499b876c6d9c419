//! Loads an experiment configuration and writes a design report and a sampled
//! protocol with metadata headers.
//!
//! `cargo run --example config -- path/to/experiment.toml out/`

use std::path::PathBuf;

use sta_cool::config::ExperimentConfig;
use sta_cool::export::{write_csv_file, write_json_file, Metadata};
use sta_cool::protocol::{AnsatzParams, Protocol};
use sta_cool::unequal::solve_design;

fn main() -> sta_cool::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    let out = args.next().map_or_else(
        || std::env::temp_dir().join("sta-cool-config"),
        PathBuf::from,
    );

    let design = solve_design(&cfg.constraints, &cfg.consts)?;
    let meta = Metadata::new(cfg.hash()).with("cost", cfg.spec.kind.name());
    write_json_file(&out.join("design.json"), &meta, &design)?;

    let protocol = Protocol::new(
        &design,
        AnsatzParams::new(0.0, 0.0, cfg.t_f[cfg.t_f.len() / 2]),
    )?;
    let rows = protocol.samples(201)?.into_iter().map(|p| {
        vec![
            p.t.to_string(),
            p.d.to_string(),
            p.alpha.to_string(),
            p.beta.to_string(),
            p.gamma.to_string(),
        ]
    });
    write_csv_file(
        &out.join("protocol.csv"),
        &meta,
        &["t", "d", "alpha", "beta", "gamma"],
        rows,
    )?;
    println!("config {} -> {}", &cfg.hash()[..12], out.display());
    Ok(())
}
