//! Unsupervised two-class segmentation seeded by the second Laplacian
//! eigenvector.
//!
//! The eigenvector `φ` of the second smallest eigenvalue of `−Δ` is
//! computed by Lanczos iteration with full reorthogonalization, deflated
//! against the known trivial eigenvector. Region costs `α|φ − c_k|^p` then
//! drive the max-flow solver, and for `p = 2` the centroids `c₁, c₂` are
//! re-estimated as class means until the partition stops changing.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::Graph;
use crate::solver::{self, RegionCosts, SizeSpec, SolverParams, SolverResult, SolverState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `L = D − W` (`r = 0`).
    Unnormalized,
    /// `D_count^{-1} (D − W)` (`r = 1`), solved in the symmetric form
    /// `D_count^{-1/2} (D − W) D_count^{-1/2}`.
    #[default]
    RandomWalk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOptions {
    pub normalization: Normalization,
    /// Residual tolerance relative to a bound on the operator norm.
    pub tol: f64,
    /// Maximum operator applications, as a multiple of N.
    pub budget_factor: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            normalization: Normalization::RandomWalk,
            tol: 1e-8,
            budget_factor: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    /// Eigenvector of `−Δ`; unit norm in `⟨·,·⟩_V` with the matching `r`.
    /// The entry of largest magnitude is positive.
    pub phi: Vec<f64>,
    pub eigenvalue: f64,
    /// `‖Sψ − λψ‖` of the symmetric problem, relative to the norm bound.
    pub residual: f64,
    pub matvecs: usize,
    /// Connected components of the graph; above 1 the eigenvector is a
    /// component indicator.
    pub components: usize,
}

struct Operator<'a> {
    g: &'a Graph,
    /// `d^{-1/2}` for the random-walk form.
    scale: Option<Vec<f64>>,
}

impl Operator<'_> {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let g = self.g;
        match &self.scale {
            None => {
                for (x, o) in out.iter_mut().enumerate() {
                    *o = g.neighbors(x).map(|(y, w)| w * (v[x] - v[y])).sum();
                }
            }
            Some(s) => {
                for (x, o) in out.iter_mut().enumerate() {
                    let vx = v[x] * s[x];
                    let t: f64 = g.neighbors(x).map(|(y, w)| w * (vx - v[y] * s[y])).sum();
                    *o = s[x] * t;
                }
            }
        }
    }

    /// Gershgorin bound on the spectral radius.
    fn norm_bound(&self) -> f64 {
        let g = self.g;
        (0..g.n_nodes())
            .map(|x| match &self.scale {
                None => 2.0 * g.weighted_degree(x),
                Some(s) => {
                    let diag = g.weighted_degree(x) * s[x] * s[x];
                    diag + g.neighbors(x).map(|(y, w)| w * s[x] * s[y]).sum::<f64>()
                }
            })
            .fold(0.0, f64::max)
    }

    fn trivial(&self) -> Vec<f64> {
        let n = self.g.n_nodes();
        let v: Vec<f64> = match &self.scale {
            None => vec![1.0; n],
            Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        };
        let norm = dot(&v, &v).sqrt();
        v.into_iter().map(|a| a / norm).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Removes the components along every vector of `basis` (twice, for
/// numerical orthogonality).
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let h = dot(v, b);
            axpy(-h, b, v);
        }
    }
}

/// Second eigenvector of `−Δ` with the requested normalization.
pub fn second_eigenvector(g: &Graph, opts: &SpectralOptions) -> Result<SpectralField> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two nodes".into()));
    }
    let scale = match opts.normalization {
        Normalization::Unnormalized => None,
        Normalization::RandomWalk => {
            if let Some(x) = (0..n).find(|&x| g.degree(x) == 0) {
                return Err(Error::InvalidInput(format!(
                    "node {x} has no neighbours; the random-walk Laplacian is undefined"
                )));
            }
            Some((0..n).map(|x| 1.0 / (g.degree(x) as f64).sqrt()).collect::<Vec<_>>())
        }
    };
    let op = Operator { g, scale };
    let bound = op.norm_bound().max(f64::MIN_POSITIVE);
    let trivial = op.trivial();
    let budget = opts.budget_factor.max(1) * n;
    let max_dim = (n - 1).min(400);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut matvecs = 0;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut tmp = vec![0.0; n];

    while matvecs < budget {
        let deflate = vec![trivial.clone()];
        orthogonalize(&mut start, &deflate);
        if normalize(&mut start) == 0.0 {
            break;
        }
        // Lanczos with full reorthogonalization against trivial + basis
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let (mut v, theta) = loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut tmp);
            matvecs += 1;
            let mut w = tmp.clone();
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            orthogonalize(&mut w, &deflate);
            orthogonalize(&mut w, &basis);
            let b = normalize(&mut w);
            let exhausted = basis.len() >= max_dim || b <= 1e-13 * bound || matvecs >= budget;
            if exhausted || basis.len().is_multiple_of(10) {
                let (theta, y) = smallest_ritz(&alpha, &beta);
                // residual of the Ritz pair is |b · y_last|
                let res = (b * y[y.len() - 1]).abs() / bound;
                let mut v = vec![0.0; n];
                for (k, bk) in basis.iter().enumerate() {
                    axpy(y[k], bk, &mut v);
                }
                if res <= opts.tol || exhausted {
                    break (v, theta);
                }
            }
            beta.push(b);
            basis.push(w);
        };
        orthogonalize(&mut v, std::slice::from_ref(&trivial));
        normalize(&mut v);
        // explicit residual, independent of the recurrence
        op.apply(&v, &mut tmp);
        matvecs += 1;
        let r: f64 = tmp.iter().zip(&v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt() / bound;
        let better = best.as_ref().is_none_or(|(_, _, br)| r < *br);
        if better {
            best = Some((v.clone(), theta, r));
        }
        if r <= opts.tol {
            break;
        }
        start = v;
    }

    let (psi, eigenvalue, residual) = best.ok_or(Error::SpectralConvergence {
        residual: f64::INFINITY,
        matvecs,
    })?;
    if residual > opts.tol {
        return Err(Error::SpectralConvergence { residual, matvecs });
    }
    let mut phi: Vec<f64> = match &op.scale {
        None => psi,
        Some(s) => psi.iter().zip(s).map(|(p, si)| p * si).collect(),
    };
    let mut imax = 0;
    for (i, v) in phi.iter().enumerate() {
        if v.abs() > phi[imax].abs() {
            imax = i;
        }
    }
    if phi[imax] < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(SpectralField {
        phi,
        eigenvalue,
        residual,
        matvecs,
        components: g.connected_components().0,
    })
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`.
fn smallest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let k = eig.eigenvalues.iamin_by(|a, b| a < b);
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

trait ArgMin {
    fn iamin_by(&self, less: impl Fn(f64, f64) -> bool) -> usize;
}

impl ArgMin for nalgebra::DVector<f64> {
    fn iamin_by(&self, less: impl Fn(f64, f64) -> bool) -> usize {
        let mut k = 0;
        for i in 1..self.len() {
            if less(self[i], self[k]) {
                k = i;
            }
        }
        k
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentroidPair {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    /// Exponent `p`, 1 or 2.
    pub p: u32,
}

/// `f_k(x) = α |φ(x) − c_k|^p` for `k = 1, 2`, as an N×2 matrix.
pub fn spectral_region_terms(phi: &[f64], c: &CentroidPair) -> Result<Array2<f64>> {
    if c.p != 1 && c.p != 2 {
        return Err(Error::InvalidParameter(format!("p must be 1 or 2, got {}", c.p)));
    }
    if !(c.alpha >= 0.0 && c.alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {}", c.alpha)));
    }
    Ok(Array2::from_shape_fn((phi.len(), 2), |(x, k)| {
        let ck = if k == 0 { c.c1 } else { c.c2 };
        c.alpha * (phi[x] - ck).abs().powi(c.p as i32)
    }))
}

/// `α` making the mean region cost at the initial centroids equal the
/// mean weighted degree.
pub fn default_alpha(g: &Graph, phi: &[f64], p: u32) -> f64 {
    let (lo, hi) = min_max(phi);
    let n = phi.len() as f64;
    let region: f64 = phi
        .iter()
        .map(|&v| 0.5 * ((v - hi).abs().powi(p as i32) + (v - lo).abs().powi(p as i32)))
        .sum::<f64>()
        / n;
    let degree: f64 = (0..g.n_nodes()).map(|x| g.weighted_degree(x)).sum::<f64>() / n;
    if region > 0.0 {
        degree / region
    } else {
        1.0
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlternatingOptions {
    pub max_outer: usize,
    /// Exponent of the region terms; centroids are only updated for 2.
    pub p: u32,
    /// Start each solve from the previous solver state.
    pub warm_start: bool,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        AlternatingOptions {
            max_outer: 10,
            p: 2,
            warm_start: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlternatingResult {
    pub result: SolverResult,
    /// Centroids used by each solve, then the final ones.
    pub centroids: Vec<(f64, f64)>,
    pub outer_iterations: usize,
    /// Some class was empty after a solve; its centroid was kept.
    pub empty_class: bool,
    /// Joint energy after each solve and after each centroid update.
    pub energies: Vec<f64>,
}

/// `α Σ_{V₁}|c₁−φ|^p + α Σ_{V₂}|c₂−φ|^p + TV(1_{V₁}) + TV(1_{V₂})`.
pub fn joint_energy(g: &Graph, phi: &[f64], labels: &[usize], c: &CentroidPair) -> f64 {
    let mut e = 0.0;
    for (x, &l) in labels.iter().enumerate() {
        let ck = if l == 0 { c.c1 } else { c.c2 };
        e += c.alpha * (phi[x] - ck).abs().powi(c.p as i32);
    }
    for (x, y, w) in g.undirected_edges() {
        if labels[x] != labels[y] {
            e += 2.0 * w;
        }
    }
    e
}

/// Alternates between solving the two-class problem with costs
/// `α|φ − c_k|^p` and moving each centroid to the mean of `φ` over its
/// class. Starts from `c₁ = max φ`, `c₂ = min φ` and stops when the labels
/// repeat or after `max_outer` solves.
pub fn alternating_segmentation(
    g: &Graph,
    phi: &[f64],
    alpha: f64,
    params: &SolverParams,
    opts: &AlternatingOptions,
) -> Result<AlternatingResult> {
    if opts.max_outer == 0 {
        return Err(Error::InvalidParameter("max_outer must be >= 1".into()));
    }
    if phi.len() != g.n_nodes() {
        return Err(Error::InvalidInput("phi must have one entry per node".into()));
    }
    let (lo, hi) = min_max(phi);
    let mut c = CentroidPair { c1: hi, c2: lo, alpha, p: opts.p };
    let mut centroids = vec![(c.c1, c.c2)];
    let mut energies = Vec::new();
    let mut empty_class = false;
    let mut prev: Option<Vec<usize>> = None;
    let mut state: Option<SolverState> = None;
    let mut outer = 0;
    let result = loop {
        outer += 1;
        let costs = RegionCosts::new(spectral_region_terms(phi, &c)?)?;
        let init = if opts.warm_start { state.take() } else { None };
        let res = solver::solve_from(g, &costs, &SizeSpec::None, params, init)?;
        energies.push(joint_energy(g, phi, &res.labels, &c));
        let unchanged = prev.as_deref() == Some(res.labels.as_slice());
        if opts.p == 2 {
            for (k, slot) in [&mut c.c1, &mut c.c2].into_iter().enumerate() {
                let (s, m) = res
                    .labels
                    .iter()
                    .zip(phi)
                    .filter(|(&l, _)| l == k)
                    .fold((0.0, 0usize), |(s, m), (_, &v)| (s + v, m + 1));
                if m > 0 {
                    *slot = s / m as f64;
                } else {
                    empty_class = true;
                }
            }
            energies.push(joint_energy(g, phi, &res.labels, &c));
            centroids.push((c.c1, c.c2));
        }
        if unchanged || outer >= opts.max_outer || opts.p != 2 {
            break res;
        }
        prev = Some(res.labels.clone());
        state = Some(res.state);
    };
    Ok(AlternatingResult {
        result,
        centroids,
        outer_iterations: outer,
        empty_class,
        energies,
    })
}
