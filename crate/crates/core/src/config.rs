//! Experiment configuration files.
//!
//! Configurations are TOML. Every dimensional value is a string with an explicit
//! unit (`"0.85e-3 N/m^3"`, `"39.96 amu"`, `"15 us"`); lengths may also be given
//! in critical distances (`"1.1 d_c"`). Grids are either a list or a
//! `{ start, stop, step }` table.
//!
//! ```toml
//! [constraints]
//! beta_max = "0.85e-3 N/m^3"
//! d0 = "5 d_c"
//! d_in = "1.1 d_c"
//! m1 = "39.96 amu"
//! m2 = "39.96 amu"
//!
//! [cost]
//! kind = "exact_robust"
//!
//! [grids]
//! t_f = { start = "12 us", stop = "20 us", step = "0.2 us" }
//! eta = { start = -0.05, stop = 0.05, step = 0.0025 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{linspace_step, CoolingSettings, DEFAULT_PHASES, HOT_QUANTA};
use crate::design::{critical_distance, PhysicalConstraints};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::optimize::{CostKind, CostSpec, NelderMeadOptions};
use crate::store::ResultStore;
use crate::units::{parse_quantity, Dimension, PhysConstants};

/// The reference configuration shipped with the library.
pub const REFERENCE_TOML: &str = include_str!("../configs/reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn resolve(&self, dim: Dimension, d_c: Option<f64>) -> Result<f64> {
        match (self, dim) {
            (Scalar::Number(v), Dimension::Dimensionless) => Ok(*v),
            (Scalar::Number(v), _) => {
                Err(Error::Config(format!("{v} needs an explicit {dim} unit")))
            }
            (Scalar::Text(s), _) => Ok(parse_quantity(s, dim, d_c)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<Scalar>),
    Range {
        start: Scalar,
        stop: Scalar,
        step: Scalar,
    },
}

impl GridSpec {
    pub fn resolve(&self, name: &str, dim: Dimension) -> Result<Vec<f64>> {
        let grid = match self {
            GridSpec::List(v) => v
                .iter()
                .map(|s| s.resolve(dim, None))
                .collect::<Result<Vec<_>>>()?,
            GridSpec::Range { start, stop, step } => linspace_step(
                start.resolve(dim, None)?,
                stop.resolve(dim, None)?,
                step.resolve(dim, None)?,
            ),
        };
        crate::analysis::check_grid(name, &grid)?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    pub beta_max: Scalar,
    pub d0: Scalar,
    pub d_in: Scalar,
    pub m1: Scalar,
    pub m2: Option<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFile {
    pub kind: String,
    pub eta_design: Option<f64>,
    pub params: Option<usize>,
    pub beta_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsFile {
    pub t_f: Option<GridSpec>,
    pub t_f_cycles: Option<GridSpec>,
    pub eta: Option<GridSpec>,
    pub d_in_ratio: Option<GridSpec>,
    pub beta_multiplier: Option<GridSpec>,
    pub mass_ratio: Option<GridSpec>,
    pub e_in: Option<GridSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorFile {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_step: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerFile {
    pub f_tol: Option<f64>,
    pub x_tol: Option<f64>,
    pub max_eval: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingFile {
    pub e_hot: Option<f64>,
    pub phases: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

/// A configuration file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub constraints: ConstraintsFile,
    pub cost: CostFile,
    #[serde(default)]
    pub grids: GridsFile,
    #[serde(default)]
    pub integrator: IntegratorFile,
    #[serde(default)]
    pub optimizer: OptimizerFile,
    #[serde(default)]
    pub cooling: CoolingFile,
    #[serde(default)]
    pub output: OutputFile,
}

/// Run-time grid used when a configuration gives none.
pub const DEFAULT_TF_GRID: (f64, f64, f64) = (10.0, 60.0, 0.2);

/// A configuration resolved into internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub constraints: PhysicalConstraints,
    pub consts: PhysConstants,
    pub spec: CostSpec,
    pub nm: NelderMeadOptions,
    pub t_f: Vec<f64>,
    pub t_f_cycles: Vec<f64>,
    pub eta: Vec<f64>,
    pub d_in_ratio: Vec<f64>,
    pub beta_multiplier: Vec<f64>,
    pub mass_ratio: Vec<f64>,
    /// Initial energies of the hot ion, in quanta.
    pub e_in: Vec<f64>,
    pub e_hot: f64,
    pub n_phases: usize,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(&file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The bundled reference configuration.
    pub fn reference() -> Self {
        Self::from_toml(REFERENCE_TOML).expect("bundled configuration is valid")
    }

    pub fn resolve(file: &ConfigFile) -> Result<Self> {
        let consts = PhysConstants::codata();
        let c = &file.constraints;
        let beta_max = c.beta_max.resolve(Dimension::Quartic, None)?;
        let d_c = critical_distance(beta_max, &consts)?;
        let m1 = c.m1.resolve(Dimension::Mass, None)?;
        let constraints = PhysicalConstraints {
            beta_max,
            d0: c.d0.resolve(Dimension::Length, Some(d_c))?,
            d_in: c.d_in.resolve(Dimension::Length, Some(d_c))?,
            m1,
            m2: c
                .m2
                .as_ref()
                .map_or(Ok(m1), |m| m.resolve(Dimension::Mass, None))?,
        };

        let kind: CostKind = file.cost.kind.parse()?;
        let mut spec = CostSpec::new(kind);
        if let Some(e) = file.cost.eta_design {
            spec.eta_design = e;
        }
        if let Some(n) = file.cost.params {
            spec = spec.with_params(n);
        }
        if file.cost.beta_tolerance.is_some() {
            spec.beta_tolerance = file.cost.beta_tolerance;
        }
        let i = &file.integrator;
        spec.sim = SimConfig {
            rtol: i.rtol.unwrap_or(spec.sim.rtol),
            atol: i.atol.unwrap_or(spec.sim.atol),
            max_step: match &i.max_step {
                Some(s) => s.resolve(Dimension::Time, None)?,
                None => spec.sim.max_step,
            },
            ..spec.sim
        };
        if !(spec.sim.rtol > 0.0 && spec.sim.atol > 0.0) {
            return Err(Error::Config(
                "integrator tolerances must be positive".into(),
            ));
        }

        let mut nm = NelderMeadOptions::default();
        let o = &file.optimizer;
        nm.f_tol = o.f_tol.unwrap_or(nm.f_tol);
        nm.x_tol = o.x_tol.unwrap_or(nm.x_tol);
        nm.max_eval = o.max_eval.unwrap_or(nm.max_eval);

        let g = &file.grids;
        let grid =
            |spec: &Option<GridSpec>, name: &str, dim: Dimension, default: Vec<f64>| match spec {
                Some(s) => s.resolve(name, dim),
                None => Ok(default),
            };
        let (lo, hi, step) = DEFAULT_TF_GRID;
        Ok(Self {
            constraints,
            consts,
            spec,
            nm,
            t_f: grid(&g.t_f, "t_f", Dimension::Time, linspace_step(lo, hi, step))?,
            t_f_cycles: grid(
                &g.t_f_cycles,
                "t_f_cycles",
                Dimension::Dimensionless,
                linspace_step(5.0, 9.0, 0.1),
            )?,
            eta: grid(
                &g.eta,
                "eta",
                Dimension::Dimensionless,
                linspace_step(-0.05, 0.05, 0.0025),
            )?,
            d_in_ratio: grid(
                &g.d_in_ratio,
                "d_in_ratio",
                Dimension::Dimensionless,
                vec![1.05, 1.1],
            )?,
            beta_multiplier: grid(
                &g.beta_multiplier,
                "beta_multiplier",
                Dimension::Dimensionless,
                vec![0.1, 1.0, 10.0, 100.0],
            )?,
            mass_ratio: grid(
                &g.mass_ratio,
                "mass_ratio",
                Dimension::Dimensionless,
                vec![1.25, 2.0, 5.0, 10.0],
            )?,
            e_in: grid(
                &g.e_in,
                "e_in",
                Dimension::Dimensionless,
                linspace_step(0.0, 20.0, 2.0),
            )?,
            e_hot: file.cooling.e_hot.unwrap_or(HOT_QUANTA),
            n_phases: file.cooling.phases.unwrap_or(DEFAULT_PHASES).max(1),
            output_dir: file
                .output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("sta-cool-out")),
            cache_dir: file.output.cache_dir.clone(),
        })
    }

    /// Hash of the physics-relevant settings; output locations are excluded.
    pub fn hash(&self) -> String {
        ResultStore::key("config", self).expect("configuration serialises")
    }

    pub fn cooling_settings(&self) -> CoolingSettings {
        CoolingSettings {
            spec: self.spec,
            nm: self.nm,
            e_hot: self.e_hot,
            n_phases: self.n_phases,
        }
    }

    /// The store named by the environment, else the configured cache directory,
    /// else `<output>/cache`.
    pub fn open_store(&self) -> Result<ResultStore> {
        let default = self
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("cache"));
        ResultStore::from_env(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_the_reference() {
        let cfg = ExperimentConfig::reference();
        let reference = PhysicalConstraints::reference(&cfg.consts);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(cfg.constraints.beta_max, reference.beta_max) < 1e-12);
        assert!(rel(cfg.constraints.d0, reference.d0) < 1e-12);
        assert!(rel(cfg.constraints.d_in, reference.d_in) < 1e-12);
        assert_eq!(cfg.constraints.m1, cfg.constraints.m2);
    }

    #[test]
    fn output_paths_do_not_change_the_hash() {
        let a = ExperimentConfig::reference();
        let b = ExperimentConfig::from_toml(&format!(
            "{REFERENCE_TOML}\n[output]\ndir = \"elsewhere\"\n"
        ))
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c =
            ExperimentConfig::from_toml(&REFERENCE_TOML.replace("1.1 d_c", "1.05 d_c")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn grids_as_list_or_range() {
        let text = REFERENCE_TOML.to_string()
            + "\n[grids]\nt_f = [\"15 us\", \"20 us\", \"0.025 ms\"]\neta = { start = -0.01, stop = 0.01, step = 0.01 }\n";
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.t_f, vec![15.0, 20.0, 25.0]);
        assert_eq!(cfg.eta, vec![-0.01, 0.0, 0.01]);
    }

    #[test]
    fn errors_are_configuration_errors() {
        for bad in [
            REFERENCE_TOML.replace("39.96 amu", "39.96 furlongs"),
            REFERENCE_TOML.replace("0.85e-3 N/m^3", "0.85e-3"),
            REFERENCE_TOML.replace("exact_robust", "fastest"),
            REFERENCE_TOML.to_string() + "\n[grids]\nt_f = [\"20 us\", \"15 us\"]\n",
            REFERENCE_TOML.to_string() + "\n[grids]\nt_f = [20.0]\n",
            "[cost]\nkind = \"exact_robust\"\n".to_string(),
        ] {
            let err = ExperimentConfig::from_toml(&bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }
}
