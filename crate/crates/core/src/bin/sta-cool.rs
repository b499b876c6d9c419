use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sta_cool::analysis::{
    cooling_scan_unequal, envelope_from_sweep, find_cooling_time, initial_energy_scan, resonance,
    robustness_grid, runtime_sweep, scaling_study, CoolingSettings,
};
use sta_cool::config::ExperimentConfig;
use sta_cool::design::critical_distance;
use sta_cool::error::{Error, Result};
use sta_cool::export::{self, Metadata};
use sta_cool::optimize::{CostKind, CostSpec};
use sta_cool::protocol::Protocol;
use sta_cool::store::ResultStore;
use sta_cool::unequal::{check_modes, solve_design};
use sta_cool::validation::{Validator, CRITERIA};

#[derive(Parser)]
#[command(
    name = "sta-cool",
    version,
    about = "Fast transport and exchange cooling of two trapped ions"
)]
struct Cli {
    /// Experiment configuration (TOML); the bundled reference design if omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, short, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Result cache directory, overriding the configuration.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Do not read or write the result cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Midpoint separation in critical distances.
    #[arg(long, global = true)]
    d_in_ratio: Option<f64>,
    /// Cost function: approx_nonrobust, exact_nonrobust, approx_robust or exact_robust.
    #[arg(long, global = true)]
    cost: Option<CostKind>,
    /// Free ansatz parameters (1 or 2).
    #[arg(long, global = true)]
    params: Option<usize>,
    /// Initial energy of the hot ion, in quanta.
    #[arg(long, global = true)]
    e_hot: Option<f64>,
    /// Motional phases to average over.
    #[arg(long, global = true)]
    phases: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary and midpoint design.
    Design,
    /// Optimise the ansatz over the run-time grid.
    Optimize,
    /// Robustness grid over run-time and stray field.
    Sweep {
        /// Start the first ion with the hot-ion energy instead of the ground state.
        #[arg(long)]
        hot: bool,
    },
    /// Cooling time and the initial-energy scan at it.
    Cool,
    /// Resonance width against stray fields for each inner separation.
    Resonance,
    /// Cooling and critical times across quartic confinements.
    Scale,
    /// Cooling across mass ratios.
    Unequal,
    /// Run the acceptance criteria on the bundled reference configuration.
    Validate {
        /// Criteria to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

struct Context {
    cfg: ExperimentConfig,
    store: Option<ResultStore>,
    out: PathBuf,
}

impl Context {
    fn meta(&self) -> Metadata {
        Metadata::new(self.cfg.hash())
    }

    fn store(&self) -> Option<&ResultStore> {
        self.store.as_ref()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn design(&self) -> Result<sta_cool::design::DesignBoundary> {
        solve_design(&self.cfg.constraints, &self.cfg.consts)
    }
}

fn load(cli: &Cli) -> Result<Context> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::reference(),
    };
    let o = &cli.overrides;
    if let Some(r) = o.d_in_ratio {
        cfg.constraints.d_in = r * critical_distance(cfg.constraints.beta_max, &cfg.consts)?;
        cfg.d_in_ratio = vec![r];
    }
    if let Some(k) = o.cost {
        let sim = cfg.spec.sim;
        cfg.spec = CostSpec {
            sim,
            ..CostSpec::new(k)
        };
    }
    if let Some(n) = o.params {
        cfg.spec = cfg.spec.with_params(n);
    }
    if let Some(e) = o.e_hot {
        cfg.e_hot = e;
    }
    if let Some(n) = o.phases {
        cfg.n_phases = n.max(1);
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(dir) = &cli.cache {
        cfg.cache_dir = Some(dir.clone());
    }
    let store = if cli.no_cache {
        None
    } else {
        Some(cfg.open_store()?)
    };
    Ok(Context {
        out: cfg.output_dir.clone(),
        cfg,
        store,
    })
}

fn report<T: Serialize>(ctx: &Context, name: &str, meta: &Metadata, value: &T) -> Result<PathBuf> {
    let path = ctx.path(name);
    export::write_json_file(&path, meta, value)?;
    Ok(path)
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn cmd_design(ctx: &Context) -> Result<()> {
    let d = ctx.design()?;
    let f0 = d.omega0 / (2.0 * std::f64::consts::PI);
    println!("critical distance  d_c = {:.4} um", d.d_c);
    println!(
        "separations        d0 = {:.4} um, d_in = {:.4} um",
        d.constraints.d0, d.constraints.d_in
    );
    println!(
        "outer potential    alpha = {:.6e}, beta = {:.6e}, gamma = {:.6e}",
        d.alpha_out, d.beta_out, d.gamma_out
    );
    println!(
        "inner potential    alpha = {:.6e}, beta = {:.6e}, gamma = {:.6e}",
        d.alpha_in, d.beta_in, d.gamma_in
    );
    println!(
        "trap frequency     omega0/2pi = {f0:.4} MHz (cycle {:.4} us)",
        d.cycle()
    );
    println!(
        "mode frequencies   Omega-/2pi = {:.4} MHz, Omega+/2pi = {:.4} -> {:.4} MHz",
        d.omega_minus() / std::f64::consts::TAU,
        d.omega0_plus() / std::f64::consts::TAU,
        d.omega_in_plus() / std::f64::consts::TAU
    );
    announce(&report(ctx, "design.json", &ctx.meta(), &d)?);
    Ok(())
}

fn cmd_optimize(ctx: &Context) -> Result<()> {
    let d = ctx.design()?;
    let sweep = runtime_sweep(&d, &ctx.cfg.spec, &ctx.cfg.t_f, &ctx.cfg.nm, ctx.store())?;
    let meta = ctx.meta().with("cost", ctx.cfg.spec.kind.name());
    let csv = ctx.path("optimize.csv");
    export::write_csv_file(
        &csv,
        &meta,
        &export::SWEEP_HEADER,
        export::sweep_rows(&sweep),
    )?;
    announce(&csv);
    match envelope_from_sweep(&sweep) {
        Ok(fit) => {
            println!(
                "critical time T_crit = {:.3} us ({:.2} cycles)",
                fit.t_crit,
                fit.t_crit / d.cycle()
            );
            announce(&report(ctx, "envelope.json", &meta, &fit)?);
        }
        Err(e) => log::warn!("no envelope fit: {e}"),
    }
    if sweep.flagged() > 0 {
        log::warn!("{} run-times flagged", sweep.flagged());
    }
    Ok(())
}

fn cmd_sweep(ctx: &Context, hot: bool) -> Result<()> {
    let d = ctx.design()?;
    let sweep = runtime_sweep(&d, &ctx.cfg.spec, &ctx.cfg.t_f, &ctx.cfg.nm, ctx.store())?;
    let e_in = if hot {
        [ctx.cfg.e_hot, 0.0]
    } else {
        [0.0, 0.0]
    };
    let grid = robustness_grid(
        &d,
        &sweep.params(),
        &ctx.cfg.eta,
        e_in,
        ctx.cfg.n_phases,
        &ctx.cfg.spec.sim,
    )?;
    let meta = ctx
        .meta()
        .with("cost", ctx.cfg.spec.kind.name())
        .with("e_in_quanta", e_in[0]);
    let csv = ctx.path(if hot { "sweep_hot.csv" } else { "sweep.csv" });
    export::write_csv_file(&csv, &meta, &export::GRID_HEADER, export::grid_rows(&grid))?;
    announce(&csv);
    Ok(())
}

fn cmd_cool(ctx: &Context) -> Result<()> {
    let d = ctx.design()?;
    let sweep = runtime_sweep(&d, &ctx.cfg.spec, &ctx.cfg.t_f, &ctx.cfg.nm, ctx.store())?;
    let c = find_cooling_time(&sweep, ctx.cfg.e_hot, ctx.cfg.n_phases)?;
    let meta = ctx.meta().with("cost", ctx.cfg.spec.kind.name());
    let csv = ctx.path("cool.csv");
    export::write_csv_file(
        &csv,
        &meta,
        &export::COOLING_HEADER,
        export::cooling_rows(&c),
    )?;
    announce(&csv);
    println!(
        "cooling time T_c = {:.3} us ({:.3} cycles), E_ex,1 = {:.3e} quanta{}",
        c.t_c,
        c.t_c_cycles,
        c.e_min,
        if c.cooled {
            ""
        } else {
            " (no cooling solution below 0.1 quanta)"
        }
    );
    let params = sweep.params()[c.min_index].1;
    let scan = initial_energy_scan(
        &Protocol::new(&d, params)?,
        &ctx.cfg.e_in,
        ctx.cfg.n_phases,
        &ctx.cfg.spec.sim,
    )?;
    #[derive(Serialize)]
    struct CoolReport<'a> {
        cooling: &'a sta_cool::analysis::CoolingResult,
        protocol: sta_cool::protocol::AnsatzParams,
        initial_energy_scan: &'a [(f64, [f64; 2])],
    }
    announce(&report(
        ctx,
        "cool.json",
        &meta,
        &CoolReport {
            cooling: &c,
            protocol: params,
            initial_energy_scan: &scan,
        },
    )?);
    Ok(())
}

fn cmd_resonance(ctx: &Context) -> Result<()> {
    let mut results = Vec::new();
    for &ratio in &ctx.cfg.d_in_ratio {
        let pc = ctx
            .cfg
            .constraints
            .with_d_in_ratio(ratio, &ctx.cfg.consts)?;
        let d = solve_design(&pc, &ctx.cfg.consts)?;
        let sweep = runtime_sweep(&d, &ctx.cfg.spec, &ctx.cfg.t_f, &ctx.cfg.nm, ctx.store())?;
        let c = find_cooling_time(&sweep, ctx.cfg.e_hot, ctx.cfg.n_phases)?;
        let r = resonance(&sweep, &c, &ctx.cfg.eta, ctx.cfg.n_phases)?;
        println!(
            "d_in = {ratio} d_c: T_c = {:.3} us, k = {:.4}, eta_half = {:.4}, tolerable |eta| = {:.5}",
            r.t_c, r.fit.k, r.fit.eta_half, r.tolerable_eta
        );
        results.push(r);
    }
    announce(&report(ctx, "resonance.json", &ctx.meta(), &results)?);
    Ok(())
}

fn cmd_scale(ctx: &Context) -> Result<()> {
    let study = scaling_study(
        &ctx.cfg.constraints,
        &ctx.cfg.consts,
        &ctx.cfg.beta_multiplier,
        &ctx.cfg.d_in_ratio,
        &ctx.cfg.t_f_cycles,
        &ctx.cfg.cooling_settings(),
        ctx.store(),
    )?;
    for c in &study.cells {
        let tc = c.cooling.as_ref().map_or(f64::NAN, |c| c.t_c_cycles);
        println!(
            "beta x {:<6} d_in = {} d_c: omega0/2pi = {:.4} MHz, T_c = {:.3} cycles, T_crit = {}",
            c.beta_multiplier,
            c.d_in_ratio,
            c.omega0 / std::f64::consts::TAU,
            tc,
            c.t_crit_cycles
                .map_or("n/a".to_string(), |t| format!("{t:.3} cycles"))
        );
    }
    let e = study.exponents;
    println!(
        "exponents: omega0 {:.4}, d_c {:.4}, gamma_half {:.4}, exchange/omega0 {:.4}",
        e.omega0, e.d_c, e.gamma_half, e.exchange_ratio
    );
    announce(&report(ctx, "scale.json", &ctx.meta(), &study)?);
    Ok(())
}

fn cmd_unequal(ctx: &Context) -> Result<()> {
    let mut spec = ctx.cfg.spec;
    if matches!(spec.kind, CostKind::ApproxRobust | CostKind::ExactRobust) {
        log::info!("unequal masses use the non-robust exact cost");
        spec = CostSpec {
            sim: spec.sim,
            ..CostSpec::new(CostKind::ExactNonRobust)
        }
        .with_params(2);
    }
    let settings = CoolingSettings {
        spec,
        ..ctx.cfg.cooling_settings()
    };
    let scans = cooling_scan_unequal(
        &ctx.cfg.constraints,
        &ctx.cfg.consts,
        &ctx.cfg.mass_ratio,
        &ctx.cfg.t_f,
        &settings,
        ctx.store(),
    )?;
    for s in &scans {
        let worst =
            Protocol::new(
                &s.design,
                s.sweep.params().first().map(|p| p.1).unwrap_or_else(|| {
                    sta_cool::protocol::AnsatzParams::new(0.0, 0.0, ctx.cfg.t_f[0])
                }),
            )
            .and_then(|p| check_modes(&p, 100))?
            .iter()
            .fold(0.0f64, |m, c| m.max(c.curvature_mismatch));
        let meta = ctx.meta().with("mass_ratio", s.ratio);
        let csv = ctx.path(&format!("unequal_{}.csv", s.ratio));
        export::write_csv_file(
            &csv,
            &meta,
            &export::SWEEP_HEADER,
            export::sweep_rows(&s.sweep),
        )?;
        announce(&csv);
        match &s.cooling {
            Some(c) => println!(
                "m1/m2 = {}: omega0/2pi = {:.4} MHz, T_c = {:.3} us, E_ex,1 = {:.3e} quanta, curvature mismatch {:.1e}",
                s.ratio,
                s.design.omega0 / std::f64::consts::TAU,
                c.t_c,
                c.e_min,
                worst
            ),
            None => println!("m1/m2 = {}: {}", s.ratio, s.flag.as_deref().unwrap_or("no result")),
        }
    }
    announce(&report(ctx, "unequal.json", &ctx.meta(), &scans)?);
    Ok(())
}

fn cmd_validate(ctx: &Context, only: &[u8]) -> Result<bool> {
    let cfg = ExperimentConfig::reference();
    let store = match &ctx.store {
        Some(s) => Some(ResultStore::open(s.root())?),
        None => None,
    };
    let v = Validator::new(cfg.constraints, cfg.consts, store);
    let ids: Vec<u8> = if only.is_empty() {
        CRITERIA.to_vec()
    } else {
        only.to_vec()
    };
    let mut reports = Vec::new();
    for id in ids {
        let r = v.run(id);
        println!("{}", r.details());
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.passed());
    announce(&report(
        ctx,
        "validate.json",
        &Metadata::new(cfg.hash()),
        &reports,
    )?);
    Ok(all)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let ctx = load(cli)?;
    match &cli.command {
        Command::Design => cmd_design(&ctx)?,
        Command::Optimize => cmd_optimize(&ctx)?,
        Command::Sweep { hot } => cmd_sweep(&ctx, *hot)?,
        Command::Cool => cmd_cool(&ctx)?,
        Command::Resonance => cmd_resonance(&ctx)?,
        Command::Scale => cmd_scale(&ctx)?,
        Command::Unequal => cmd_unequal(&ctx)?,
        Command::Validate { only } => {
            if !cmd_validate(&ctx, only)? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
