//! Synthetic datasets and supervision sampling.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)` in a fixed
//! order, so a seed reproduces the same data on every platform.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Features with optional ground truth (0-based classes).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Option<Vec<usize>>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_classes];
        if let Some(l) = &self.labels {
            l.iter().for_each(|&c| s[c] += 1);
        }
        s
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples arcs, embeds them in `dims` dimensions by zero padding and adds
/// iid Gaussian noise to every coordinate.
fn arcs(arcs: &[&dyn Fn(f64) -> [f64; 2]], n_per_class: usize, dims: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if dims < 2 {
        return Err(Error::InvalidParameter(format!("dims must be >= 2, got {dims}")));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be >= 0, got {noise_std}")));
    }
    let mut r = rng(seed);
    let n = n_per_class * arcs.len();
    let mut features = Array2::zeros((n, dims));
    let mut labels = Vec::with_capacity(n);
    for (c, arc) in arcs.iter().enumerate() {
        for j in 0..n_per_class {
            let t = r.random_range(0.0..PI);
            let [a, b] = arc(t);
            let x = c * n_per_class + j;
            features[[x, 0]] = a;
            features[[x, 1]] = b;
            labels.push(c);
        }
    }
    if noise_std > 0.0 {
        for v in features.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut r);
            *v += noise_std * z;
        }
    }
    Ok(Dataset {
        features,
        labels: Some(labels),
        n_classes: arcs.len(),
    })
}

/// Upper unit half-circles centred at `(0, 0)` (class 0) and `(3, 0)`
/// (class 2), and a lower half-circle of radius 1.5 centred at `(1.5, 0.4)`
/// (class 1).
pub fn three_moons(n_per_class: usize, dims: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    let left = |t: f64| [t.cos(), t.sin()];
    let bottom = |t: f64| [1.5 + 1.5 * t.cos(), 0.4 - 1.5 * t.sin()];
    let right = |t: f64| [3.0 + t.cos(), t.sin()];
    arcs(&[&left, &bottom, &right], n_per_class, dims, noise_std, seed)
}

/// Upper unit half-circle centred at `(0, 0)` (class 0) and the lower unit
/// half-circle centred at `(1, 0.5)` (class 1).
pub fn two_moons(n_per_class: usize, dims: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    let top = |t: f64| [t.cos(), t.sin()];
    let bottom = |t: f64| [1.0 - t.cos(), 0.5 - t.sin()];
    arcs(&[&top, &bottom], n_per_class, dims, noise_std, seed)
}

pub const GROUND: usize = 0;
pub const HUMAN: usize = 1;
pub const VEGETATION: usize = 2;
pub const SCENE_CLASSES: [&str; 3] = ["ground", "human", "vegetation"];

/// Axis-aligned box (before yaw) standing on the ground.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSpec {
    /// Footprint centre `(x₁, x₂)`.
    pub center: [f64; 2],
    /// Extents along `x₁`, `x₂` and height.
    pub size: [f64; 3],
    /// Rotation about the up axis, radians.
    pub yaw: f64,
}

/// Isotropic Gaussian blob; `height` is the centre height above the ground.
#[derive(Clone, Debug, PartialEq)]
pub struct BlobSpec {
    pub center: [f64; 2],
    pub height: f64,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    /// Half extents of the ground rectangle around the origin; `None` for no
    /// ground.
    pub ground: Option<[f64; 2]>,
    /// Ground slope along `x₁` (rise per unit length).
    pub tilt: f64,
    pub boxes: Vec<BoxSpec>,
    pub blobs: Vec<BlobSpec>,
    /// Standard deviation of the noise added to surface points.
    pub noise: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            ground: Some([15.0, 15.0]),
            tilt: 0.0,
            boxes: vec![BoxSpec {
                center: [-4.0, -3.0],
                size: [6.0, 5.0, 4.0],
                yaw: 0.3,
            }],
            blobs: [[6.0, 5.0], [7.5, -6.0], [-7.0, 8.0], [1.0, 9.5]]
                .into_iter()
                .map(|center| BlobSpec { center, height: 4.5, spread: 1.2 })
                .collect(),
            noise: 0.01,
        }
    }
}

/// Surface area assigned to each class (blobs count as `4π spread²`).
pub fn scene_areas(spec: &SceneSpec) -> [f64; 3] {
    let footprint: f64 = spec.boxes.iter().map(|b| b.size[0] * b.size[1]).sum();
    let ground = spec
        .ground
        .map(|[ex, ey]| 4.0 * ex * ey * (1.0 + spec.tilt * spec.tilt).sqrt() - footprint)
        .unwrap_or(0.0);
    let boxes: f64 = spec
        .boxes
        .iter()
        .map(|b| 2.0 * (b.size[0] + b.size[1]) * b.size[2] + b.size[0] * b.size[1])
        .sum();
    let blobs: f64 = spec.blobs.iter().map(|b| 4.0 * PI * b.spread * b.spread).sum();
    [ground.max(0.0), boxes, blobs]
}

fn in_box_footprint(b: &BoxSpec, x: f64, y: f64) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let (dx, dy) = (x - b.center[0], y - b.center[1]);
    let (lx, ly) = (c * dx + s * dy, -s * dx + c * dy);
    lx.abs() <= b.size[0] / 2.0 && ly.abs() <= b.size[1] / 2.0
}

/// Samples a scene with about `density` points per unit area.
///
/// Points are ordered ground, boxes, blobs. Labels are [`GROUND`],
/// [`HUMAN`] and [`VEGETATION`].
pub fn synth_scene(spec: &SceneSpec, density: f64, seed: u64) -> Result<Dataset> {
    if !(density > 0.0 && density.is_finite()) {
        return Err(Error::InvalidParameter(format!("density must be > 0, got {density}")));
    }
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if let Some([ex, ey]) = spec.ground {
        if !positive(ex) || !positive(ey) {
            return Err(Error::InvalidParameter("ground extents must be > 0".into()));
        }
    }
    if spec.boxes.iter().any(|b| !b.size.iter().all(|&s| positive(s)))
        || spec.blobs.iter().any(|b| !positive(b.spread))
        || !(spec.noise >= 0.0)
        || !spec.tilt.is_finite()
    {
        return Err(Error::InvalidParameter("scene extents must be > 0 and noise >= 0".into()));
    }
    let ground_z = |x: f64| spec.tilt * x;
    let mut r = rng(seed);
    let mut pts: Vec<[f64; 3]> = Vec::new();
    let mut labels = Vec::new();
    let areas = scene_areas(spec);

    if let Some([ex, ey]) = spec.ground {
        let count = (areas[GROUND] * density).round() as usize;
        let mut made = 0;
        while made < count {
            let x = r.random_range(-ex..ex);
            let y = r.random_range(-ey..ey);
            if spec.boxes.iter().any(|b| in_box_footprint(b, x, y)) {
                continue;
            }
            pts.push([x, y, ground_z(x)]);
            labels.push(GROUND);
            made += 1;
        }
    }
    for b in &spec.boxes {
        let [sx, sy, sz] = b.size;
        let base = ground_z(b.center[0]);
        // faces: 4 walls then the roof, chosen in proportion to area
        let faces = [sy * sz, sy * sz, sx * sz, sx * sz, sx * sy];
        let total: f64 = faces.iter().sum();
        let count = (total * density).round() as usize;
        let (s, c) = b.yaw.sin_cos();
        for _ in 0..count {
            let mut pick = r.random_range(0.0..total);
            let mut face = 0;
            while face < 4 && pick >= faces[face] {
                pick -= faces[face];
                face += 1;
            }
            let u: f64 = r.random_range(-0.5..0.5);
            let v: f64 = r.random_range(0.0..1.0);
            let (lx, ly, z) = match face {
                0 => (-sx / 2.0, u * sy, v * sz),
                1 => (sx / 2.0, u * sy, v * sz),
                2 => (u * sx, -sy / 2.0, v * sz),
                3 => (u * sx, sy / 2.0, v * sz),
                _ => (u * sx, (v - 0.5) * sy, sz),
            };
            pts.push([b.center[0] + c * lx - s * ly, b.center[1] + s * lx + c * ly, base + z]);
            labels.push(HUMAN);
        }
    }
    let surface = pts.len();
    for b in &spec.blobs {
        let count = (4.0 * PI * b.spread * b.spread * density).round() as usize;
        let base = ground_z(b.center[0]) + b.height;
        for _ in 0..count {
            let z: [f64; 3] = [0, 1, 2].map(|_| StandardNormal.sample(&mut r));
            pts.push([b.center[0] + b.spread * z[0], b.center[1] + b.spread * z[1], base + b.spread * z[2]]);
            labels.push(VEGETATION);
        }
    }
    if spec.noise > 0.0 {
        for p in pts.iter_mut().take(surface) {
            for v in p.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut r);
                *v += spec.noise * z;
            }
        }
    }
    let features = Array2::from_shape_fn((pts.len(), 3), |(i, j)| pts[i][j]);
    Ok(Dataset {
        features,
        labels: Some(labels),
        n_classes: 3,
    })
}

/// How supervised nodes are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum SupervisionStrategy {
    Uniform,
    /// Only nodes whose `score` lies in `[lo, hi]` are eligible.
    Biased { scores: Vec<f64>, lo: f64, hi: f64 },
}

/// Stratified sample of `round(fraction · N_c)` nodes (at least one) from
/// each class `c`, without replacement. Returns sorted node indices.
pub fn sample_supervision(data: &Dataset, fraction: f64, strategy: &SupervisionStrategy, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("supervision sampling needs ground-truth labels".into()))?;
    let eligible = |x: usize| match strategy {
        SupervisionStrategy::Uniform => true,
        SupervisionStrategy::Biased { scores, lo, hi } => scores[x] >= *lo && scores[x] <= *hi,
    };
    if let SupervisionStrategy::Biased { scores, .. } = strategy {
        if scores.len() != labels.len() {
            return Err(Error::InvalidInput("one score per node is required".into()));
        }
    }
    let mut r = rng(seed);
    let mut out = Vec::new();
    for c in 0..data.n_classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&x| labels[x] == c).collect();
        if members.is_empty() {
            continue;
        }
        let want = ((fraction * members.len() as f64).round() as usize).max(1);
        let pool: Vec<usize> = members.into_iter().filter(|&x| eligible(x)).collect();
        if pool.len() < want {
            return Err(Error::InfeasibleSupervision(format!(
                "class {} has {} eligible nodes, {want} requested",
                c + 1,
                pool.len()
            )));
        }
        out.extend(sample(&mut r, pool.len(), want).into_iter().map(|i| pool[i]));
    }
    out.sort_unstable();
    Ok(out)
}

/// `(node, class)` pairs for the given nodes, read from the ground truth.
pub fn supervision_pairs(data: &Dataset, nodes: &[usize]) -> Result<Vec<(usize, usize)>> {
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("dataset has no labels".into()))?;
    Ok(nodes.iter().map(|&x| (x, labels[x])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_moons_defaults() {
        let d = three_moons(1000, 100, 0.14, 1).unwrap();
        assert_eq!(d.features.dim(), (3000, 100));
        assert_eq!(d.class_sizes(), vec![1000, 1000, 1000]);
        assert_eq!(d, three_moons(1000, 100, 0.14, 1).unwrap());
        assert_ne!(d, three_moons(1000, 100, 0.14, 2).unwrap());
    }

    #[test]
    fn clean_moons_lie_on_arcs() {
        let d = three_moons(200, 5, 0.0, 3).unwrap();
        let l = d.labels.as_ref().unwrap();
        for (x, row) in d.features.rows().into_iter().enumerate() {
            let (cx, cy, r) = [(0.0, 0.0, 1.0), (1.5, 0.4, 1.5), (3.0, 0.0, 1.0)][l[x]];
            let dist = ((row[0] - cx).powi(2) + (row[1] - cy).powi(2)).sqrt();
            assert!((dist - r).abs() < 1e-12);
            assert!(row.iter().skip(2).all(|&v| v == 0.0));
        }
        let t = two_moons(100, 3, 0.0, 3).unwrap();
        let l = t.labels.as_ref().unwrap();
        for (x, row) in t.features.rows().into_iter().enumerate() {
            let (cx, cy) = [(0.0, 0.0), (1.0, 0.5)][l[x]];
            assert!((((row[0] - cx).powi(2) + (row[1] - cy).powi(2)).sqrt() - 1.0).abs() < 1e-12);
        }
        assert_eq!(t.class_sizes(), vec![100, 100]);
    }

    #[test]
    fn clean_three_moons_arcs_are_separated() {
        // dense parameter sweep of the three arcs
        let arcs: [fn(f64) -> [f64; 2]; 3] = [
            |t| [t.cos(), t.sin()],
            |t| [1.5 + 1.5 * t.cos(), 0.4 - 1.5 * t.sin()],
            |t| [3.0 + t.cos(), t.sin()],
        ];
        let m = 2000;
        let mut min = f64::INFINITY;
        for a in 0..3 {
            for b in a + 1..3 {
                for i in 0..=m {
                    let p = arcs[a](PI * i as f64 / m as f64);
                    for j in 0..=m {
                        let q = arcs[b](PI * j as f64 / m as f64);
                        min = min.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
                    }
                }
            }
        }
        assert!(min > 0.3, "{min}");
    }

    #[test]
    fn supervision_is_stratified() {
        let d = three_moons(1000, 3, 0.1, 4).unwrap();
        let s = sample_supervision(&d, 0.05, &SupervisionStrategy::Uniform, 9).unwrap();
        assert_eq!(s.len(), 150);
        let l = d.labels.as_ref().unwrap();
        for c in 0..3 {
            assert_eq!(s.iter().filter(|&&x| l[x] == c).count(), 50);
        }
        let tiny = sample_supervision(&d, 0.0001, &SupervisionStrategy::Uniform, 9).unwrap();
        assert_eq!(tiny.len(), 3);
    }

    #[test]
    fn full_band_equals_uniform() {
        let d = two_moons(300, 2, 0.05, 4).unwrap();
        let scores: Vec<f64> = (0..600).map(|x| x as f64).collect();
        let all = SupervisionStrategy::Biased { scores: scores.clone(), lo: f64::NEG_INFINITY, hi: f64::INFINITY };
        assert_eq!(
            sample_supervision(&d, 0.05, &all, 2).unwrap(),
            sample_supervision(&d, 0.05, &SupervisionStrategy::Uniform, 2).unwrap()
        );
        let narrow = SupervisionStrategy::Biased { scores, lo: 0.0, hi: 5.0 };
        assert!(matches!(sample_supervision(&d, 0.05, &narrow, 2), Err(Error::InfeasibleSupervision(_))));
    }

    #[test]
    fn single_object_scenes() {
        let plane = SceneSpec { boxes: vec![], blobs: vec![], ..Default::default() };
        let d = synth_scene(&plane, 2.0, 1).unwrap();
        assert!(d.labels.unwrap().iter().all(|&l| l == GROUND));
        let boxed = SceneSpec { ground: None, blobs: vec![], ..Default::default() };
        let d = synth_scene(&boxed, 2.0, 1).unwrap();
        assert!(!d.is_empty());
        assert!(d.labels.unwrap().iter().all(|&l| l == HUMAN));
    }

    #[test]
    fn default_scene_proportions() {
        let spec = SceneSpec::default();
        let areas = scene_areas(&spec);
        let total: f64 = areas.iter().sum();
        let density = 20000.0 / total;
        let d = synth_scene(&spec, density, 5).unwrap();
        assert!(d.len() >= 19990);
        let sizes = d.class_sizes();
        for c in 0..3 {
            let got = sizes[c] as f64 / d.len() as f64;
            assert!((got - areas[c] / total).abs() < 0.05);
        }
    }
}
