//! File-backed run configuration (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use quasineutral::limit::{default_initial_fields, InitMode};
use quasineutral::{Error, Grid, ModelParams, Result, SolveConfig, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Ep,
    Mhd,
    Sweep,
    Check,
    Order,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Taylor-Green velocity with an Orszag-Tang-type field.
    OrszagTang,
    /// Fluid at rest, no field.
    Uniform,
    /// Fluid at rest in the field `(sin y, 0, 0)`.
    MagneticShear,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dim: 2, n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub lambda_list: Option<Vec<f64>>,
    pub dealias: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            lambda: None,
            lambda_list: None,
            dealias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_lambda_factor: f64,
    pub sample_interval: f64,
    pub snapshot_stride: usize,
    pub density_band: [f64; 2],
}

impl Default for SolveSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        Self {
            t_end: d.t_end,
            cfl: d.cfl,
            dt_lambda_factor: d.dt_lambda_factor,
            sample_interval: d.sample_interval,
            snapshot_stride: d.snapshot_stride,
            density_band: [d.density_band.0, d.density_band.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    pub s: u32,
    pub max_order: u32,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { s: 2, max_order: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub preset: Preset,
    pub mode: InitMode,
    /// Added to the initial density; any nonzero value breaks solvability.
    pub density_offset: f64,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            preset: Preset::OrszagTang,
            mode: InitMode::Exact,
            density_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSection {
    pub window: [f64; 2],
}

impl Default for RateSection {
    fn default() -> Self {
        Self { window: [0.8, 1.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: Option<System>,
    pub seed: Option<u64>,
    pub grid: GridSection,
    pub model: ModelSection,
    pub solve: SolveSection,
    pub metrics: MetricsSection,
    pub init: InitSection,
    pub output: OutputSection,
    pub rate: RateSection,
}

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_LAMBDAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn lambda(&self) -> f64 {
        self.model.lambda.unwrap_or(DEFAULT_LAMBDA)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.model.lambda_list.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            lambda: self.lambda(),
            gamma: self.model.gamma,
            sobolev_index: self.metrics.s,
            dealias: self.model.dealias,
        }
    }

    pub fn solve(&self) -> SolveConfig {
        let s = &self.solve;
        SolveConfig {
            t_end: s.t_end,
            cfl: s.cfl,
            dt_lambda_factor: s.dt_lambda_factor,
            sample_interval: s.sample_interval,
            snapshot_stride: s.snapshot_stride,
            density_band: (s.density_band[0], s.density_band[1]),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.rate.window[0], self.rate.window[1])
    }

    /// Re-validates every constraint of the owning modules for `system`.
    pub fn validate(&self, system: System) -> Result<()> {
        let config_err = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        if let Some(declared) = self.system {
            if declared != system {
                return Err(Error::Config(format!(
                    "configuration declares system {declared:?} but {system:?} was requested"
                )));
            }
        }
        self.grid()?;
        self.params().validate().map_err(config_err)?;
        if self.metrics.max_order > self.metrics.s {
            return Err(Error::Config(format!(
                "metrics.max_order {} exceeds metrics.s {}",
                self.metrics.max_order, self.metrics.s
            )));
        }
        if !self.init.density_offset.is_finite() {
            return Err(Error::Config("init.density_offset must be finite".into()));
        }
        let (lo, hi) = self.window();
        if !(lo < hi) {
            return Err(Error::Config(format!("rate.window must be increasing, got [{lo}, {hi}]")));
        }
        if system != System::Check {
            self.solve().validate().map_err(config_err)?;
        }
        if system == System::Sweep {
            let l = self.lambdas();
            if l.len() < 3 {
                return Err(Error::Config(format!("model.lambda_list needs at least 3 values, got {}", l.len())));
            }
            if l.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::Config("model.lambda_list values must lie in (0, 1]".into()));
            }
            if l.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config("model.lambda_list must be strictly decreasing".into()));
            }
        }
        Ok(())
    }

    /// Limit velocity and field of the chosen preset.
    pub fn initial_fields(&self, grid: &Grid) -> (VectorField, VectorField) {
        match self.init.preset {
            Preset::OrszagTang => default_initial_fields(grid),
            Preset::Uniform => (VectorField::zeros(grid.shape()), VectorField::zeros(grid.shape())),
            Preset::MagneticShear => (
                VectorField::zeros(grid.shape()),
                grid.vector_from_fn(|x| [x[1].sin(), 0.0, 0.0]),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.validate(System::Sweep).is_ok());
        assert_eq!(c.lambdas(), DEFAULT_LAMBDAS.to_vec());
        assert_eq!(c.solve(), SolveConfig::default());
    }

    #[test]
    fn full_document_parses() {
        let text = r#"
            system = "sweep"
            seed = 11
            [grid]
            dim = 2
            n = 32
            [model]
            gamma = 1.6666666666666667
            lambda_list = [0.2, 0.1, 0.05]
            [solve]
            t_end = 0.25
            cfl = 0.3
            dt_lambda_factor = 0.4
            sample_interval = 0.025
            snapshot_stride = 2
            density_band = [0.6, 1.4]
            [metrics]
            s = 3
            max_order = 1
            [init]
            preset = "magnetic-shear"
            mode = "relaxed"
            [output]
            dir = "results"
            [rate]
            window = [0.9, 1.2]
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.system, Some(System::Sweep));
        assert_eq!(c.seed(), 11);
        assert_eq!(c.init.mode, InitMode::Relaxed);
        assert_eq!(c.init.preset, Preset::MagneticShear);
        assert_eq!(c.solve().density_band, (0.6, 1.4));
        assert_eq!(c.params().sobolev_index, 3);
        assert!(c.validate(System::Sweep).is_ok());
        assert!(c.validate(System::Ep).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[grid]\nsize = 3\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
        assert!(RunConfig::from_toml("[init]\npreset = \"vortex\"\n").is_err());
    }

    #[test]
    fn constraints_are_revalidated() {
        let bad = |text: &str, system| RunConfig::from_toml(text).unwrap().validate(system).is_err();
        assert!(bad("[model]\ngamma = 1.0\n", System::Ep));
        assert!(bad("[model]\nlambda = 0.0\n", System::Ep));
        assert!(bad("[grid]\nn = 31\n", System::Ep));
        assert!(bad("[grid]\ndim = 4\n", System::Ep));
        assert!(bad("[solve]\ncfl = 1.5\n", System::Ep));
        assert!(bad("[solve]\nt_end = -1.0\n", System::Mhd));
        assert!(bad("[model]\nlambda_list = [0.2, 0.1]\n", System::Sweep));
        assert!(bad("[model]\nlambda_list = [0.1, 0.2, 0.05]\n", System::Sweep));
        assert!(bad("[metrics]\ns = 1\nmax_order = 2\n", System::Sweep));
        assert!(bad("[rate]\nwindow = [1.3, 0.8]\n", System::Sweep));
    }
}
