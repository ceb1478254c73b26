//! End-to-end runs shared by the command-line tool and the tests.

use ndarray::ArrayView2;

use crate::config::{GraphConfig, RunConfig, WeightKind};
use crate::graph::{boost_supervised_edges, build_knn_graph, pointcloud_weights, Graph, WeightSpec};
use crate::region::{class_region_terms, local_pca, mean_edge_length, LocalGeometry};
use crate::solver::{self, assemble_costs, RegionCosts, SizeSpec, SolverResult};
use crate::spectral::{
    alternating_segmentation, default_alpha, second_eigenvector, AlternatingOptions, AlternatingResult,
    SpectralField, SpectralOptions,
};
use crate::{Error, Result};

/// Gaussian width: the configured one or the mean length of the kNN edges.
fn resolve_sigma(points: ArrayView2<'_, f64>, cfg: &GraphConfig) -> Result<f64> {
    if let Some(s) = cfg.sigma {
        return Ok(s);
    }
    let g = build_knn_graph(points, cfg.k, &WeightSpec::Gaussian { sigma: 1.0 })?;
    let l = mean_edge_length(points, &g);
    if l > 0.0 {
        Ok(l)
    } else {
        Err(Error::InvalidInput("all neighbouring points coincide".into()))
    }
}

/// kNN graph for the semi-supervised and unsupervised runs. Supervised
/// nodes get `boost · k` neighbours when `cfg.boost > 1`.
pub fn build_graph(points: ArrayView2<'_, f64>, cfg: &GraphConfig, supervised: &[usize]) -> Result<Graph> {
    let spec = match cfg.weight {
        WeightKind::PointCloud => {
            return Err(Error::InvalidConfig("point-cloud weights need the pointcloud pipeline".into()))
        }
        WeightKind::Zmp => WeightSpec::Zmp { m: cfg.m },
        WeightKind::Gaussian => WeightSpec::Gaussian { sigma: resolve_sigma(points, cfg)? },
    };
    if cfg.boost > 1 {
        boost_supervised_edges(points, cfg.k, &spec, supervised, cfg.boost)
    } else {
        build_knn_graph(points, cfg.k, &spec)
    }
}

#[derive(Clone, Debug)]
pub struct SegmentRun {
    pub graph: Graph,
    pub costs: RegionCosts,
    pub result: SolverResult,
}

/// Graph, fidelity costs from `(node, class)` supervision, solve.
pub fn segment(
    points: ArrayView2<'_, f64>,
    supervision: &[(usize, usize)],
    n_classes: usize,
    cfg: &RunConfig,
) -> Result<SegmentRun> {
    cfg.validate()?;
    let nodes: Vec<usize> = supervision.iter().map(|&(x, _)| x).collect();
    let graph = build_graph(points, &cfg.graph, &nodes)?;
    let costs = assemble_costs(points.nrows(), n_classes, supervision, cfg.eta, None)?;
    let result = solver::solve(&graph, &costs, &cfg.size, &cfg.solver)?;
    Ok(SegmentRun { graph, costs, result })
}

#[derive(Clone, Debug)]
pub struct PointCloudRun {
    pub graph: Graph,
    pub geometry: LocalGeometry,
    pub costs: RegionCosts,
    pub result: SolverResult,
}

/// Gaussian kNN graph, local PCA, region terms, point-cloud reweighting,
/// solve. One class per entry of `cfg.region_classes`.
pub fn pointcloud(points: ArrayView2<'_, f64>, cfg: &RunConfig) -> Result<PointCloudRun> {
    cfg.validate()?;
    if points.ncols() != 3 {
        return Err(Error::InvalidInput(format!("point clouds need 3 coordinates, got {}", points.ncols())));
    }
    let sigma = resolve_sigma(points, &cfg.graph)?;
    let g0 = build_knn_graph(points, cfg.graph.k, &WeightSpec::Gaussian { sigma })?;
    let mut geometry = local_pca(points, &g0)?;
    if let Some(r) = cfg.height_radius {
        geometry = geometry.with_radius_height(points, r)?;
    }
    let graph = match cfg.graph.weight {
        WeightKind::PointCloud => pointcloud_weights(&g0, points, &geometry.normals(), sigma, cfg.graph.gamma)?,
        WeightKind::Gaussian => g0,
        WeightKind::Zmp => build_knn_graph(points, cfg.graph.k, &WeightSpec::Zmp { m: cfg.graph.m })?,
    };
    let f = class_region_terms(points, &graph, &geometry, &cfg.region, &cfg.region_classes)?;
    let costs = RegionCosts::new(f)?;
    let result = solver::solve(&graph, &costs, &cfg.size, &cfg.solver)?;
    Ok(PointCloudRun { graph, geometry, costs, result })
}

#[derive(Clone, Debug)]
pub struct UnsupervisedRun {
    pub graph: Graph,
    pub field: SpectralField,
    pub alpha: f64,
    pub run: AlternatingResult,
}

/// Second eigenvector, then the alternating two-class segmentation.
pub fn unsupervised(points: ArrayView2<'_, f64>, cfg: &RunConfig, seed: u64) -> Result<UnsupervisedRun> {
    cfg.validate()?;
    if !matches!(cfg.size, SizeSpec::None) {
        return Err(Error::InvalidConfig("the unsupervised model takes no size constraints".into()));
    }
    let graph = build_graph(points, &cfg.graph, &[])?;
    let opts = SpectralOptions { normalization: cfg.unsup.laplacian, seed, ..SpectralOptions::default() };
    let field = second_eigenvector(&graph, &opts)?;
    let alpha = cfg.unsup.alpha.unwrap_or_else(|| default_alpha(&graph, &field.phi, cfg.unsup.p));
    let alt = AlternatingOptions { max_outer: cfg.unsup.outer_iters, p: cfg.unsup.p, ..AlternatingOptions::default() };
    let run = alternating_segmentation(&graph, &field.phi, alpha, &cfg.solver, &alt)?;
    Ok(UnsupervisedRun { graph, field, alpha, run })
}
