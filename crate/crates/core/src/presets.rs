//! Named parameter sets for the benchmark datasets.
//!
//! | preset | graph | c | supervision |
//! |---|---|---|---|
//! | `three-moons` | zmp, k = M = 10 | 0.1 | 5% |
//! | `three-moons-sparse` | zmp, k = M = 10, supervised nodes ×50 | 0.1 | 0.6% |
//! | `mnist` | zmp, k = M = 8 | 0.05 | 3.57% |
//! | `coil` | zmp, k = M = 4 | 0.03 | 10% |
//! | `landsat` | zmp, k = M = 4 | 0.3 | 10% |
//! | `two-moons` | zmp, k = M = 10 | 0.1 | none |
//! | `pointcloud` | point-cloud weights, k = 20 | 0.1 | none |
//!
//! All supervised presets use η = 500. The zmp weights vanish beyond the
//! M-th neighbour, so the kNN graph uses k = M. The `coil` preset expects
//! features already projected onto 241 principal components.

use crate::config::{GraphConfig, RunConfig, UnsupConfig, WeightKind};
use crate::data::{self, Dataset, SceneSpec};
use crate::region::{RegionClass, RegionTermConfig};
use crate::solver::{Eta, SizeSpec, SolverParams};
use crate::spectral::Normalization;
use crate::{Error, Result};

pub const PRESET_NAMES: [&str; 7] =
    ["three-moons", "three-moons-sparse", "mnist", "coil", "landsat", "two-moons", "pointcloud"];

/// Where the points of a preset come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    ThreeMoons { n_per_class: usize, dims: usize, noise: f64 },
    TwoMoons { n_per_class: usize, dims: usize, noise: f64 },
    Scene { spec: SceneSpec, density: f64 },
    /// Read from files; the class count is what the preset was tuned for.
    External { n_classes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub source: DatasetSource,
    pub config: RunConfig,
}

/// Independent seed for one consumer of randomness, derived from the run
/// seed so that a single `--seed` drives everything.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub const STREAM_DATA: u64 = 0;
pub const STREAM_SUPERVISION: u64 = 1;
pub const STREAM_SPECTRAL: u64 = 2;

fn zmp(km: usize) -> GraphConfig {
    GraphConfig {
        k: km,
        weight: WeightKind::Zmp,
        m: km,
        sigma: None,
        gamma: 0.0,
        boost: 1,
    }
}

fn semi(c: f64, km: usize, fraction: f64) -> RunConfig {
    RunConfig {
        solver: SolverParams { c, ..SolverParams::default() },
        eta: Eta::Finite(500.0),
        size: SizeSpec::None,
        graph: zmp(km),
        supervised_fraction: fraction,
        ..RunConfig::default()
    }
}

impl Preset {
    pub fn get(name: &str) -> Result<Preset> {
        let moons3 = DatasetSource::ThreeMoons { n_per_class: 1000, dims: 100, noise: 0.14 };
        let (name, source, config): (&'static str, _, _) = match name {
            "three-moons" => ("three-moons", moons3, semi(0.1, 10, 0.05)),
            "three-moons-sparse" => {
                let mut cfg = semi(0.1, 10, 0.006);
                cfg.graph.boost = 50;
                ("three-moons-sparse", moons3, cfg)
            }
            "mnist" => ("mnist", DatasetSource::External { n_classes: 10 }, semi(0.05, 8, 0.0357)),
            "coil" => ("coil", DatasetSource::External { n_classes: 6 }, semi(0.03, 4, 0.10)),
            "landsat" => ("landsat", DatasetSource::External { n_classes: 6 }, semi(0.3, 4, 0.10)),
            "two-moons" => {
                let cfg = RunConfig {
                    graph: zmp(10),
                    unsup: UnsupConfig {
                        alpha: None,
                        p: 2,
                        outer_iters: 10,
                        laplacian: Normalization::RandomWalk,
                    },
                    ..RunConfig::default()
                };
                ("two-moons", DatasetSource::TwoMoons { n_per_class: 1000, dims: 2, noise: 0.05 }, cfg)
            }
            "pointcloud" => {
                let cfg = RunConfig {
                    graph: GraphConfig {
                        k: 20,
                        weight: WeightKind::PointCloud,
                        m: 0,
                        sigma: Some(0.5),
                        gamma: 0.1,
                        boost: 1,
                    },
                    region: RegionTermConfig { lambda_v: 0.85, ..RegionTermConfig::default() },
                    region_classes: vec![RegionClass::Ground, RegionClass::Human, RegionClass::Vegetation],
                    height_radius: Some(8.0),
                    ..RunConfig::default()
                };
                ("pointcloud", DatasetSource::Scene { spec: SceneSpec::default(), density: 19.0 }, cfg)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(Preset { name, source, config })
    }

    /// Generates the preset's synthetic data; `None` for file-based presets.
    pub fn generate(&self, seed: u64) -> Result<Option<Dataset>> {
        let s = sub_seed(seed, STREAM_DATA);
        Ok(Some(match &self.source {
            DatasetSource::ThreeMoons { n_per_class, dims, noise } => data::three_moons(*n_per_class, *dims, *noise, s)?,
            DatasetSource::TwoMoons { n_per_class, dims, noise } => data::two_moons(*n_per_class, *dims, *noise, s)?,
            DatasetSource::Scene { spec, density } => data::synth_scene(spec, *density, s)?,
            DatasetSource::External { .. } => return Ok(None),
        }))
    }
}
