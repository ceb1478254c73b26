//! Run configuration: a preset, overlaid by a TOML file, overlaid by flags.
//!
//! Recognised keys:
//!
//! ```toml
//! c = 0.1
//! delta = 1e-10
//! max_iters = 10000
//! q_step = 0.1            # omit for per-edge steps
//! inner_q_steps = 1
//! eta = 500               # or "inf"
//!
//! [size]
//! mode = "interval"       # none | exact | interval | penalty
//! lower = [900, 900, 900]
//! upper = [1100, 1100, 1100]
//! gamma = 10            # penalty slope, default 10
//!
//! [graph]
//! k = 10
//! weight = "zmp"          # gaussian | zmp | pointcloud
//! m = 10
//! sigma = 0.5
//! gamma = 0.1             # convexity term of the point-cloud weights
//! boost = 1
//!
//! [supervision]
//! fraction = 0.05
//!
//! [region]
//! classes = ["ground", "human", "vegetation"]
//! lambda_g = 0.0
//! lambda_h = 0.0
//! lambda_v = 0.85
//! lambda_v2 = 1.5
//! lambda_smoke = 0.4
//! c_mix = 0.2
//! theta = 1.0
//! up = [0, 0, 1]
//! alpha = 20
//! length_scale = 0.5
//! height_radius = 8.0
//!
//! [unsup]
//! alpha = 1.0
//! p = 2
//! outer_iters = 10
//! laplacian = "rw"        # rw | unnorm
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::graph::WeightSpec;
use crate::region::{RegionClass, RegionTermConfig};
use crate::solver::{Eta, SizeSpec, SolverParams};
use crate::spectral::Normalization;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Gaussian,
    Zmp,
    PointCloud,
}

impl std::str::FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(WeightKind::Gaussian),
            "zmp" => Ok(WeightKind::Zmp),
            "pointcloud" => Ok(WeightKind::PointCloud),
            _ => Err(Error::InvalidConfig(format!("unknown weight '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphConfig {
    pub k: usize,
    pub weight: WeightKind,
    /// Scale neighbour of the self-tuning weights.
    pub m: usize,
    /// Gaussian width; `None` uses the mean kNN edge length.
    pub sigma: Option<f64>,
    /// Convexity coefficient of the point-cloud weights.
    pub gamma: f64,
    /// Supervised nodes connect to `boost · k` neighbours.
    pub boost: usize,
}

impl GraphConfig {
    /// Weight specification once `sigma` is known.
    pub fn weight_spec(&self, sigma: f64) -> WeightSpec {
        match self.weight {
            WeightKind::Gaussian => WeightSpec::Gaussian { sigma },
            WeightKind::Zmp => WeightSpec::Zmp { m: self.m },
            WeightKind::PointCloud => WeightSpec::PointCloud { sigma, gamma: self.gamma },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnsupConfig {
    /// `None` picks `α` from the data.
    pub alpha: Option<f64>,
    pub p: u32,
    pub outer_iters: usize,
    pub laplacian: Normalization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverParams,
    pub eta: Eta,
    pub size: SizeSpec,
    pub graph: GraphConfig,
    pub supervised_fraction: f64,
    pub region: RegionTermConfig,
    pub region_classes: Vec<RegionClass>,
    /// Horizontal radius for the local ground height; `None` uses the kNN
    /// neighbourhood.
    pub height_radius: Option<f64>,
    pub unsup: UnsupConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solver: SolverParams::default(),
            eta: Eta::default(),
            size: SizeSpec::None,
            graph: GraphConfig {
                k: 10,
                weight: WeightKind::Zmp,
                m: 10,
                sigma: None,
                gamma: 0.0,
                boost: 1,
            },
            supervised_fraction: 0.05,
            region: RegionTermConfig::default(),
            region_classes: vec![RegionClass::Ground, RegionClass::Human, RegionClass::Vegetation],
            height_radius: None,
            unsup: UnsupConfig {
                alpha: None,
                p: 2,
                outer_iters: 10,
                laplacian: Normalization::RandomWalk,
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrInf {
    Num(f64),
    Text(String),
}

impl NumOrInf {
    fn value(&self) -> Result<f64> {
        match self {
            NumOrInf::Num(v) => Ok(*v),
            NumOrInf::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(f64::INFINITY),
            NumOrInf::Text(s) => Err(Error::InvalidConfig(format!("expected a number or \"inf\", got '{s}'"))),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SizeFile {
    mode: Option<String>,
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    gamma: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    k: Option<usize>,
    weight: Option<String>,
    m: Option<usize>,
    sigma: Option<f64>,
    gamma: Option<f64>,
    boost: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SupervisionFile {
    fraction: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    classes: Option<Vec<String>>,
    lambda_g: Option<f64>,
    lambda_h: Option<f64>,
    lambda_v: Option<f64>,
    lambda_v2: Option<f64>,
    lambda_smoke: Option<f64>,
    c_mix: Option<f64>,
    theta: Option<f64>,
    up: Option<[f64; 3]>,
    alpha: Option<f64>,
    length_scale: Option<f64>,
    height_radius: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct UnsupFile {
    alpha: Option<f64>,
    p: Option<u32>,
    outer_iters: Option<usize>,
    laplacian: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    c: Option<f64>,
    delta: Option<f64>,
    max_iters: Option<usize>,
    q_step: Option<f64>,
    inner_q_steps: Option<usize>,
    eta: Option<NumOrInf>,
    #[serde(default)]
    size: SizeFile,
    #[serde(default)]
    graph: GraphFile,
    #[serde(default)]
    supervision: SupervisionFile,
    #[serde(default)]
    region: RegionFile,
    #[serde(default)]
    unsup: UnsupFile,
}

/// Penalty slope used when `size.gamma` is not given.
pub const DEFAULT_SIZE_GAMMA: f64 = 10.0;

pub fn parse_normalization(s: &str) -> Result<Normalization> {
    match s {
        "rw" | "random_walk" => Ok(Normalization::RandomWalk),
        "unnorm" | "unnormalized" => Ok(Normalization::Unnormalized),
        _ => Err(Error::InvalidConfig(format!("unknown laplacian '{s}', expected rw or unnorm"))),
    }
}

pub fn parse_eta(s: &str) -> Result<Eta> {
    let v = if matches!(s, "inf" | "infinity" | "Inf") {
        f64::INFINITY
    } else {
        s.parse().map_err(|_| Error::InvalidConfig(format!("eta must be a number or inf, got '{s}'")))?
    };
    eta_from(v)
}

fn eta_from(v: f64) -> Result<Eta> {
    if v.is_infinite() && v > 0.0 {
        Ok(Eta::Infinite)
    } else if v > 0.0 && v.is_finite() {
        Ok(Eta::Finite(v))
    } else {
        Err(Error::InvalidConfig(format!("eta must be > 0, got {v}")))
    }
}

/// Builds a size specification from its parts. Exact mode takes the sizes
/// from `lower` (or `upper` when only that is given).
pub fn size_spec(mode: &str, lower: Option<Vec<f64>>, upper: Option<Vec<f64>>, gamma: Option<f64>) -> Result<SizeSpec> {
    let need = |v: Option<Vec<f64>>, what: &str| {
        v.ok_or_else(|| Error::InvalidConfig(format!("size mode '{mode}' needs size.{what}")))
    };
    match mode {
        "none" => Ok(SizeSpec::None),
        "exact" => {
            let sizes = match (lower, upper) {
                (Some(l), Some(u)) if l != u => {
                    return Err(Error::InvalidConfig("exact sizes need lower == upper".into()))
                }
                (Some(l), _) => l,
                (None, Some(u)) => u,
                (None, None) => return Err(Error::InvalidConfig("size mode 'exact' needs size.lower".into())),
            };
            Ok(SizeSpec::Exact(sizes))
        }
        "interval" => Ok(SizeSpec::Interval { lower: need(lower, "lower")?, upper: need(upper, "upper")? }),
        "penalty" => Ok(SizeSpec::Penalty {
            lower: need(lower, "lower")?,
            upper: need(upper, "upper")?,
            gamma: gamma.unwrap_or(DEFAULT_SIZE_GAMMA),
        }),
        other => Err(Error::InvalidConfig(format!("unknown size mode '{other}'"))),
    }
}

impl RunConfig {
    /// Overlays the keys present in a TOML file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_toml(&text)
    }

    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let s = &mut self.solver;
        if let Some(v) = f.c {
            s.c = v;
        }
        if let Some(v) = f.delta {
            s.delta = v;
        }
        if let Some(v) = f.max_iters {
            s.max_iters = v;
        }
        if let Some(v) = f.q_step {
            s.q_step = Some(v);
        }
        if let Some(v) = f.inner_q_steps {
            s.inner_q_steps = v;
        }
        if let Some(e) = f.eta {
            self.eta = eta_from(e.value()?)?;
        }
        let sz = f.size;
        if sz.mode.is_some() || sz.lower.is_some() || sz.upper.is_some() || sz.gamma.is_some() {
            let mode = sz.mode.as_deref().unwrap_or(match &self.size {
                SizeSpec::None => "none",
                SizeSpec::Exact(_) => "exact",
                SizeSpec::Interval { .. } => "interval",
                SizeSpec::Penalty { .. } => "penalty",
            });
            self.size = size_spec(mode, sz.lower, sz.upper, sz.gamma)?;
        }
        let g = &mut self.graph;
        if let Some(v) = f.graph.k {
            g.k = v;
        }
        if let Some(v) = f.graph.weight {
            g.weight = v.parse()?;
        }
        if let Some(v) = f.graph.m {
            g.m = v;
        }
        if let Some(v) = f.graph.sigma {
            g.sigma = Some(v);
        }
        if let Some(v) = f.graph.gamma {
            g.gamma = v;
        }
        if let Some(v) = f.graph.boost {
            g.boost = v;
        }
        if let Some(v) = f.supervision.fraction {
            self.supervised_fraction = v;
        }
        let r = f.region;
        if let Some(cl) = r.classes {
            self.region_classes = cl.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        let rc = &mut self.region;
        for (dst, src) in [
            (&mut rc.lambda_g, r.lambda_g),
            (&mut rc.lambda_h, r.lambda_h),
            (&mut rc.lambda_v, r.lambda_v),
            (&mut rc.lambda_v2, r.lambda_v2),
            (&mut rc.lambda_smoke, r.lambda_smoke),
            (&mut rc.c_mix, r.c_mix),
            (&mut rc.theta, r.theta),
            (&mut rc.alpha, r.alpha),
        ] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if let Some(v) = r.up {
            rc.up = v;
        }
        if let Some(v) = r.length_scale {
            rc.length_scale = Some(v);
        }
        if let Some(v) = r.height_radius {
            self.height_radius = Some(v);
        }
        let u = f.unsup;
        if let Some(v) = u.alpha {
            self.unsup.alpha = Some(v);
        }
        if let Some(v) = u.p {
            self.unsup.p = v;
        }
        if let Some(v) = u.outer_iters {
            self.unsup.outer_iters = v;
        }
        if let Some(v) = u.laplacian {
            self.unsup.laplacian = parse_normalization(&v)?;
        }
        Ok(())
    }

    /// Range checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.graph.k == 0 {
            return Err(Error::InvalidConfig("graph.k must be >= 1".into()));
        }
        if self.graph.boost == 0 {
            return Err(Error::InvalidConfig("graph.boost must be >= 1".into()));
        }
        if let Some(s) = self.graph.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("graph.sigma must be > 0, got {s}")));
            }
        }
        if !(self.supervised_fraction > 0.0 && self.supervised_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "supervision.fraction must lie in (0, 1), got {}",
                self.supervised_fraction
            )));
        }
        if !matches!(self.unsup.p, 1 | 2) {
            return Err(Error::InvalidConfig(format!("unsup.p must be 1 or 2, got {}", self.unsup.p)));
        }
        if let Some(r) = self.height_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidConfig(format!("region.height_radius must be > 0, got {r}")));
            }
        }
        self.region.validate()
    }
}
