//! Geometric region terms for 3D point clouds.
//!
//! For every point `x` with graph neighbours `y¹..yᵐ`, the centred
//! neighbourhood `Y = [ȳ⁰..ȳᵐ]` (with `y⁰ = x`) gives the scatter matrix
//! `YYᵀ`. Its smallest eigenvalue `λ¹` measures how far the neighbourhood is
//! from planar and the matching eigenvector `v¹` estimates the surface
//! normal. Coordinates are `(x₁, x₂, x₃)` with `x₃` pointing up.

use std::collections::HashMap;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::graph::Graph;
use crate::{Error, Result};

/// Per-point PCA features.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGeometry {
    /// Eigenvalues of `YYᵀ`, ascending and clamped at zero.
    pub lambda: Vec<[f64; 3]>,
    /// Unit eigenvectors `[v¹, v², v³]` matching `lambda`; `v¹₃ ≥ 0`.
    pub vectors: Vec<[[f64; 3]; 3]>,
    /// Local height estimate `h*`.
    pub h_star: Vec<f64>,
    /// Points whose neighbourhood collapsed to a single location.
    pub degenerate: Vec<bool>,
}

impl LocalGeometry {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Estimated normals `v¹`.
    pub fn normals(&self) -> Vec<[f64; 3]> {
        self.vectors.iter().map(|v| v[0]).collect()
    }

    /// Replaces `h*` by the mean height of all points within horizontal
    /// distance `radius`, which sees past the object a point belongs to.
    pub fn with_radius_height(mut self, points: ArrayView2<'_, f64>, radius: f64) -> Result<Self> {
        self.h_star = radius_height(points, radius)?;
        Ok(self)
    }
}

fn check_points(points: ArrayView2<'_, f64>, n: usize) -> Result<()> {
    if points.dim() != (n, 3) {
        return Err(Error::InvalidInput(format!(
            "expected {n}x3 points, got {:?}",
            points.dim()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("point coordinates must be finite".into()));
    }
    Ok(())
}

/// Scatter-matrix features over each point's graph neighbourhood.
/// `h*` is the mean height over the same neighbourhood.
pub fn local_pca(points: ArrayView2<'_, f64>, g: &Graph) -> Result<LocalGeometry> {
    let n = g.n_nodes();
    check_points(points, n)?;
    let per_point: Vec<_> = (0..n)
        .into_par_iter()
        .map(|x| {
            let idx: Vec<usize> = std::iter::once(x).chain(g.neighbors(x).map(|(y, _)| y)).collect();
            let m = idx.len() as f64;
            let mut mean = Vector3::zeros();
            for &i in &idx {
                mean += Vector3::new(points[[i, 0]], points[[i, 1]], points[[i, 2]]);
            }
            mean /= m;
            let mut s = Matrix3::zeros();
            for &i in &idx {
                let d = Vector3::new(points[[i, 0]], points[[i, 1]], points[[i, 2]]) - mean;
                s += d * d.transpose();
            }
            let (lambda, vectors, degenerate) = eigen_ascending(&s);
            (lambda, vectors, mean.z, degenerate)
        })
        .collect();
    let mut geom = LocalGeometry {
        lambda: Vec::with_capacity(n),
        vectors: Vec::with_capacity(n),
        h_star: Vec::with_capacity(n),
        degenerate: Vec::with_capacity(n),
    };
    for (l, v, h, d) in per_point {
        geom.lambda.push(l);
        geom.vectors.push(v);
        geom.h_star.push(h);
        geom.degenerate.push(d);
    }
    Ok(geom)
}

/// Eigenpairs of a symmetric 3×3 matrix, ascending, with the sign of the
/// first eigenvector fixed to a nonnegative third component.
pub fn eigen_ascending(s: &Matrix3<f64>) -> ([f64; 3], [[f64; 3]; 3], bool) {
    if s.iter().all(|&v| v == 0.0) {
        return ([0.0; 3], [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], true);
    }
    let eig = SymmetricEigen::new(*s);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut lambda = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (k, &j) in order.iter().enumerate() {
        lambda[k] = eig.eigenvalues[j].max(0.0);
        let v = eig.eigenvectors.column(j);
        vectors[k] = [v[0], v[1], v[2]];
    }
    if vectors[0][2] < 0.0 {
        vectors[0] = vectors[0].map(|c| -c);
    }
    (lambda, vectors, false)
}

/// Mean height of the points within horizontal distance `radius`, for every
/// point (the point itself included).
pub fn radius_height(points: ArrayView2<'_, f64>, radius: f64) -> Result<Vec<f64>> {
    check_points(points, points.nrows())?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("height radius must be > 0, got {radius}")));
    }
    let cell = |v: f64| (v / radius).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..points.nrows() {
        grid.entry((cell(points[[i, 0]]), cell(points[[i, 1]]))).or_default().push(i);
    }
    let r2 = radius * radius;
    Ok((0..points.nrows())
        .into_par_iter()
        .map(|i| {
            let (px, py) = (points[[i, 0]], points[[i, 1]]);
            let (cx, cy) = (cell(px), cell(py));
            let (mut sum, mut count) = (0.0, 0usize);
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    for &j in grid.get(&(gx, gy)).map(Vec::as_slice).unwrap_or(&[]) {
                        let (dx, dy) = (points[[j, 0]] - px, points[[j, 1]] - py);
                        if dx * dx + dy * dy <= r2 {
                            sum += points[[j, 2]];
                            count += 1;
                        }
                    }
                }
            }
            sum / count as f64
        })
        .collect())
}

/// Mean Euclidean length of the graph's edges.
pub fn mean_edge_length(points: ArrayView2<'_, f64>, g: &Graph) -> f64 {
    let mut s = 0.0;
    let mut k = 0usize;
    for (x, y, _) in g.undirected_edges() {
        let d2: f64 = (0..points.ncols()).map(|a| (points[[x, a]] - points[[y, a]]).powi(2)).sum();
        s += d2.sqrt();
        k += 1;
    }
    if k == 0 {
        0.0
    } else {
        s / k as f64
    }
}

/// `|λ¹ − λ_i|²`.
pub fn lambda_homogeneity(lambda1: f64, lambda_i: f64) -> f64 {
    (lambda1 - lambda_i).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionClass {
    Ground,
    Human,
    Vegetation,
    Vegetation2,
    Smoke,
}

impl FromStr for RegionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ground" => Ok(RegionClass::Ground),
            "human" | "structure" | "building" => Ok(RegionClass::Human),
            "vegetation" => Ok(RegionClass::Vegetation),
            "vegetation2" => Ok(RegionClass::Vegetation2),
            "smoke" => Ok(RegionClass::Smoke),
            other => Err(Error::InvalidConfig(format!("unknown region class '{other}'"))),
        }
    }
}

impl RegionClass {
    pub fn name(self) -> &'static str {
        match self {
            RegionClass::Ground => "ground",
            RegionClass::Human => "human",
            RegionClass::Vegetation => "vegetation",
            RegionClass::Vegetation2 => "vegetation2",
            RegionClass::Smoke => "smoke",
        }
    }
}

/// Parameters of the point-cloud region terms.
///
/// Eigenvalues enter the costs as `λ / (m ℓ²)`, where `m` is the
/// neighbourhood size (so the scatter becomes a covariance) and `ℓ` is
/// `length_scale`. The `lambda_*` levels are in those units.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionTermConfig {
    pub lambda_g: f64,
    pub lambda_h: f64,
    pub lambda_v: f64,
    pub lambda_v2: f64,
    pub lambda_smoke: f64,
    /// Balance between eigenvalue and direction terms, in `(0, 1)`.
    pub c_mix: f64,
    /// Slope of the height term `θ (x₃ − h*)`.
    pub theta: f64,
    /// Unit up direction `n^g`.
    pub up: [f64; 3],
    /// Overall multiplier applied to all costs.
    pub alpha: f64,
    /// Length unit `ℓ`; `None` uses the mean edge length of the graph.
    pub length_scale: Option<f64>,
}

impl Default for RegionTermConfig {
    fn default() -> Self {
        RegionTermConfig {
            lambda_g: 0.0,
            lambda_h: 0.0,
            lambda_v: 0.08,
            lambda_v2: 0.15,
            lambda_smoke: 0.3,
            c_mix: 0.2,
            theta: 1.0,
            up: [0.0, 0.0, 1.0],
            alpha: 20.0,
            length_scale: None,
        }
    }
}

impl RegionTermConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_mix > 0.0 && self.c_mix < 1.0) {
            return Err(Error::InvalidConfig(format!("c_mix must lie in (0, 1), got {}", self.c_mix)));
        }
        let norm = self.up.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("up direction must be a unit vector".into()));
        }
        let finite = [self.lambda_g, self.lambda_h, self.lambda_v, self.lambda_v2, self.lambda_smoke, self.theta, self.alpha];
        if finite.iter().any(|v| !v.is_finite()) || self.alpha < 0.0 {
            return Err(Error::InvalidConfig("region term parameters must be finite, alpha >= 0".into()));
        }
        if let Some(l) = self.length_scale {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("length scale must be > 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Costs `f_i(x)` for the requested classes, one column per class:
///
/// ```text
/// f_g = (1−C)|λ¹−λ_g|² + C(−|v¹·n| + θ(x₃ − h*))
/// f_h = (1−C)|λ¹−λ_h|² + C|v¹·n|
/// f_v = C|λ¹−λ_v|²
/// ```
///
/// The second vegetation class and the smoke class use `C|λ¹−λ_i|²` with
/// their own levels.
pub fn class_region_terms(
    points: ArrayView2<'_, f64>,
    g: &Graph,
    geom: &LocalGeometry,
    cfg: &RegionTermConfig,
    classes: &[RegionClass],
) -> Result<Array2<f64>> {
    cfg.validate()?;
    let n = geom.len();
    check_points(points, n)?;
    if classes.is_empty() {
        return Err(Error::InvalidConfig("no region classes requested".into()));
    }
    let ell = match cfg.length_scale {
        Some(l) => l,
        None => {
            let l = mean_edge_length(points, g);
            if l > 0.0 {
                l
            } else {
                1.0
            }
        }
    };
    let cm = cfg.c_mix;
    Ok(Array2::from_shape_fn((n, classes.len()), |(x, k)| {
        let m = (g.degree(x) + 1) as f64;
        let l1 = geom.lambda[x][0] / (m * ell * ell);
        let v1 = geom.vectors[x][0];
        let dir = (v1[0] * cfg.up[0] + v1[1] * cfg.up[1] + v1[2] * cfg.up[2]).abs();
        let height = cfg.theta * (points[[x, 2]] - geom.h_star[x]);
        let f = match classes[k] {
            RegionClass::Ground => (1.0 - cm) * lambda_homogeneity(l1, cfg.lambda_g) + cm * (-dir + height),
            RegionClass::Human => (1.0 - cm) * lambda_homogeneity(l1, cfg.lambda_h) + cm * dir,
            RegionClass::Vegetation => cm * lambda_homogeneity(l1, cfg.lambda_v),
            RegionClass::Vegetation2 => cm * lambda_homogeneity(l1, cfg.lambda_v2),
            RegionClass::Smoke => cm * lambda_homogeneity(l1, cfg.lambda_smoke),
        };
        cfg.alpha * f
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_knn_graph, WeightSpec};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_knn(points: ArrayView2<'_, f64>, k: usize) -> Graph {
        build_knn_graph(points, k, &WeightSpec::Gaussian { sigma: 1.0 }).unwrap()
    }

    #[test]
    fn plane_has_vertical_normal() {
        let pts = Array2::from_shape_fn((49, 3), |(i, j)| match j {
            0 => (i % 7) as f64 * 0.3,
            1 => (i / 7) as f64 * 0.2 + 0.01 * (i % 7) as f64,
            _ => 0.0,
        });
        let g = gaussian_knn(pts.view(), 8);
        let geom = local_pca(pts.view(), &g).unwrap();
        for x in 0..49 {
            assert!(geom.lambda[x][0].abs() < 1e-12);
            assert!((geom.vectors[x][0][2] - 1.0).abs() < 1e-12);
            assert_eq!(geom.h_star[x], 0.0);
        }
    }

    #[test]
    fn isotropic_cloud_is_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = Array2::from_shape_fn((501, 3), |_| StandardNormal.sample(&mut rng));
        let g = Graph::from_undirected(501, (1..501).map(|y| (0, y, 1.0))).unwrap();
        let geom = local_pca(pts.view(), &g).unwrap();
        let l = geom.lambda[0];
        assert!(l[0] / l[2] > 0.8, "{l:?}");
    }

    #[test]
    fn two_points_rank_one() {
        let pts = array![[0.0, 0.0, 0.0], [1.0, 2.0, 0.5]];
        let g = gaussian_knn(pts.view(), 1);
        let geom = local_pca(pts.view(), &g).unwrap();
        assert!(geom.lambda[0][0].abs() < 1e-12 && geom.lambda[0][1].abs() < 1e-12);
        assert!(geom.lambda[0][2] > 0.0);
    }

    #[test]
    fn coincident_points_are_flagged() {
        let pts = array![[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]];
        let g = gaussian_knn(pts.view(), 1);
        let geom = local_pca(pts.view(), &g).unwrap();
        assert!(geom.degenerate[0]);
        assert_eq!(geom.lambda[0], [0.0; 3]);
        assert_eq!(geom.vectors[0][0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn homogeneity_examples() {
        assert_eq!(lambda_homogeneity(0.3, 0.3), 0.0);
        assert_eq!(lambda_homogeneity(3.0, 1.0), 4.0);
        assert_eq!(lambda_homogeneity(0.0, 0.5), 0.25);
    }

    fn single_point_terms(normal: [f64; 3], x3: f64, h: f64, l1: f64, cfg: &RegionTermConfig) -> Vec<f64> {
        let pts = array![[0.0, 0.0, x3], [1.0, 0.0, x3]];
        let g = Graph::from_undirected(2, [(0, 1, 1.0)]).unwrap();
        let geom = LocalGeometry {
            lambda: vec![[l1 * 2.0, 1.0, 2.0]; 2],
            vectors: vec![[normal, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]; 2],
            h_star: vec![h; 2],
            degenerate: vec![false; 2],
        };
        let all = [RegionClass::Ground, RegionClass::Human, RegionClass::Vegetation];
        class_region_terms(pts.view(), &g, &geom, cfg, &all).unwrap().row(0).to_vec()
    }

    #[test]
    fn flat_ground_and_wall_examples() {
        let cfg = RegionTermConfig { alpha: 1.0, length_scale: Some(1.0), theta: 0.5, ..Default::default() };
        let f = single_point_terms([0.0, 0.0, 1.0], 2.0, 2.0, cfg.lambda_g, &cfg);
        assert!((f[0] + cfg.c_mix).abs() < 1e-15);
        let f = single_point_terms([1.0, 0.0, 0.0], 3.0, 2.0, cfg.lambda_h, &cfg);
        assert!(f[1].abs() < 1e-15);
        assert!((f[0] - cfg.c_mix * 0.5 * 1.0).abs() < 1e-15);
        assert!(RegionClass::from_str("lava").is_err());
    }

    #[test]
    fn direction_terms_cancel() {
        let cfg = RegionTermConfig { alpha: 1.0, length_scale: Some(1.0), lambda_g: 0.0, lambda_h: 0.0, theta: 0.0, ..Default::default() };
        let f = single_point_terms([0.6, 0.0, 0.8], 0.0, 0.0, 0.0, &cfg);
        assert!((f[0] + f[1]).abs() < 1e-15);
    }

    #[test]
    fn radius_height_averages_columns() {
        let pts = array![[0.0, 0.0, 0.0], [0.5, 0.0, 2.0], [5.0, 5.0, 7.0]];
        let h = radius_height(pts.view(), 1.0).unwrap();
        assert_eq!(h, vec![1.0, 1.0, 7.0]);
    }
}
