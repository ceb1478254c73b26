//! Weighted symmetric graphs built from point sets.
//!
//! Edges are stored in compressed sparse row form as *directed* pairs: every
//! undirected edge `{x, y}` appears as `(x, y)` and `(y, x)` with identical
//! weight. Per-node edge lists are sorted by target index, which fixes the
//! summation order used everywhere downstream.

pub mod knn;

use std::ops::Range;

use ndarray::ArrayView2;

use crate::{Error, Result};

pub use knn::Neighbor;

/// Edge weight function.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// `exp(-d² / σ²)`.
    Gaussian { sigma: f64 },
    /// Locally scaled weights `exp(-d² / (s(x) s(y)))`, where `s(x)` is the
    /// distance from `x` to its `m`-th nearest neighbour.
    Zmp { m: usize },
    /// Gaussian weights with a convexity term driven by surface normals.
    /// The graph is first built with Gaussian weights; see [`pointcloud_weights`].
    PointCloud { sigma: f64, gamma: f64 },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Gaussian { sigma } | WeightSpec::PointCloud { sigma, .. }
                if !(sigma > 0.0 && sigma.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "sigma must be positive and finite, got {sigma}"
                )))
            }
            WeightSpec::PointCloud { gamma, .. } if !gamma.is_finite() => Err(
                Error::InvalidParameter(format!("gamma must be finite, got {gamma}")),
            ),
            WeightSpec::Zmp { m: 0 } => Err(Error::InvalidParameter("zmp scale neighbour M must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// Immutable symmetric weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    sources: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    reverse: Vec<usize>,
}

impl Graph {
    /// Builds a graph from undirected edges, each listed once.
    pub fn from_undirected<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adj = vec![Vec::new(); n_nodes];
        for (x, y, w) in edges {
            check_edge(n_nodes, x, y, w)?;
            adj[x].push((y, w));
            adj[y].push((x, w));
        }
        Self::from_adjacency(adj)
    }

    /// Builds a graph from directed edges; both directions must be present
    /// with identical weights.
    pub fn from_directed<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adj = vec![Vec::new(); n_nodes];
        for (x, y, w) in edges {
            check_edge(n_nodes, x, y, w)?;
            adj[x].push((y, w));
        }
        let g = Self::from_adjacency(adj)?;
        for e in 0..g.n_edges() {
            let r = g.reverse[e];
            if r == usize::MAX {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) has no reverse edge",
                    g.sources[e], g.targets[e]
                )));
            }
            if g.weights[r] != g.weights[e] {
                return Err(Error::InvalidInput(format!(
                    "asymmetric weight on edge ({}, {})",
                    g.sources[e], g.targets[e]
                )));
            }
        }
        Ok(g)
    }

    fn from_adjacency(mut adj: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for (x, list) in adj.iter_mut().enumerate() {
            list.sort_by_key(|&(y, _)| y);
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({x}, {})",
                    pair[0].0
                )));
            }
            for &(y, w) in list.iter() {
                sources.push(x);
                targets.push(y);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let mut g = Graph {
            offsets,
            sources,
            targets,
            weights,
            reverse: Vec::new(),
        };
        g.reverse = (0..g.n_edges())
            .map(|e| g.find_edge(g.targets[e], g.sources[e]).unwrap_or(usize::MAX))
            .collect();
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of directed edges (twice the number of undirected edges).
    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    /// Number of neighbours of `x`.
    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes()).map(|x| self.degree(x)).collect()
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.weights[self.edge_range(x)].iter().sum()
    }

    /// Indices of the directed edges leaving `x`.
    pub fn edge_range(&self, x: usize) -> Range<usize> {
        self.offsets[x]..self.offsets[x + 1]
    }

    /// `(neighbour, weight)` pairs of `x`, sorted by neighbour index.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edge_range(x)
            .map(move |e| (self.targets[e], self.weights[e]))
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `reverse()[e]` is the index of the edge opposite to `e`.
    pub fn reverse(&self) -> &[usize] {
        &self.reverse
    }

    pub fn find_edge(&self, x: usize, y: usize) -> Option<usize> {
        let r = self.edge_range(x);
        self.targets[r.clone()]
            .binary_search(&y)
            .ok()
            .map(|i| r.start + i)
    }

    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.find_edge(x, y).map(|e| self.weights[e])
    }

    /// Undirected edges `(x, y, w)` with `x < y`, in edge order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_edges())
            .filter(move |&e| self.sources[e] < self.targets[e])
            .map(move |e| (self.sources[e], self.targets[e], self.weights[e]))
    }

    /// Component id per node (numbered in order of first appearance) and
    /// the number of components.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.n_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for (y, _) in self.neighbors(x) {
                    if comp[y] == usize::MAX {
                        comp[y] = count;
                        stack.push(y);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    /// Copy of the graph with new weights, one per directed edge.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n_edges() {
            return Err(Error::InvalidInput(format!(
                "expected {} weights, got {}",
                self.n_edges(),
                weights.len()
            )));
        }
        for (e, &w) in weights.iter().enumerate() {
            check_edge(self.n_nodes(), self.sources[e], self.targets[e], w)?;
        }
        Ok(Graph {
            weights,
            ..self.clone()
        })
    }
}

fn check_edge(n: usize, x: usize, y: usize, w: f64) -> Result<()> {
    if x >= n || y >= n {
        return Err(Error::InvalidInput(format!(
            "edge ({x}, {y}) out of range for {n} nodes"
        )));
    }
    if x == y {
        return Err(Error::InvalidInput(format!("self edge at node {x}")));
    }
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "edge ({x}, {y}) has invalid weight {w}"
        )));
    }
    Ok(())
}

/// Symmetric kNN graph with each node connected to its `k` Euclidean
/// nearest neighbours. Ties in distance go to the lower node index.
pub fn build_knn_graph(points: ArrayView2<'_, f64>, k: usize, weight: &WeightSpec) -> Result<Graph> {
    build_with_counts(points, k, &vec![k; points.nrows()], weight)
}

/// Like [`build_knn_graph`], but supervised nodes connect to their
/// `factor * k` nearest neighbours before symmetrization. This raises the
/// energy of the trivial single-class labelling when supervision is sparse.
pub fn boost_supervised_edges(
    points: ArrayView2<'_, f64>,
    k: usize,
    weight: &WeightSpec,
    supervised: &[usize],
    factor: usize,
) -> Result<Graph> {
    let n = points.nrows();
    if factor == 0 {
        return Err(Error::InvalidParameter("boost factor must be >= 1".into()));
    }
    if factor * k >= n {
        return Err(Error::InvalidParameter(format!(
            "boosted neighbourhood {} must be smaller than N = {n}",
            factor * k
        )));
    }
    let mut counts = vec![k; n];
    for &x in supervised {
        if x >= n {
            return Err(Error::InvalidInput(format!("supervised node {x} out of range")));
        }
        counts[x] = factor * k;
    }
    build_with_counts(points, k, &counts, weight)
}

fn build_with_counts(
    points: ArrayView2<'_, f64>,
    k: usize,
    counts: &[usize],
    weight: &WeightSpec,
) -> Result<Graph> {
    weight.validate()?;
    let (n, dim) = points.dim();
    if dim == 0 {
        return Err(Error::InvalidParameter("points need at least one coordinate".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} requires 1 <= k < N = {n}"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("point coordinates must be finite".into()));
    }
    let scale_rank = match *weight {
        WeightSpec::Zmp { m } if m >= n => {
            return Err(Error::InvalidParameter(format!(
                "zmp scale neighbour M = {m} requires M < N = {n}"
            )))
        }
        WeightSpec::Zmp { m } => m,
        _ => 0,
    };
    let search: Vec<usize> = counts.iter().map(|&c| c.max(scale_rank)).collect();
    let lists = knn::knn_lists(points, &search);

    let scales: Vec<f64> = if scale_rank > 0 {
        lists
            .iter()
            .enumerate()
            .map(|(x, l)| {
                let s = l[scale_rank - 1].dist();
                if s > 0.0 {
                    Ok(s)
                } else {
                    Err(Error::DegenerateScale { node: x, m: scale_rank })
                }
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    // union of directed kNN relations, weights from a symmetric formula
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (x, list) in lists.iter().enumerate() {
        for nb in &list[..counts[x]] {
            let y = nb.index;
            let w = match *weight {
                WeightSpec::Gaussian { sigma } | WeightSpec::PointCloud { sigma, .. } => {
                    (-nb.dist2 / (sigma * sigma)).exp()
                }
                WeightSpec::Zmp { .. } => {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    (-nb.dist2 / (scales[a] * scales[b])).exp()
                }
            };
            adj[x].push((y, w));
            adj[y].push((x, w));
        }
    }
    for list in adj.iter_mut() {
        list.sort_by_key(|a| a.0);
        // mutual neighbours were inserted twice; max-symmetrize
        list.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.max(b.1);
                true
            } else {
                false
            }
        });
    }
    Graph::from_adjacency(adj)
}

/// Reweights a point-cloud graph so that boundaries prefer convex creases.
///
/// Each edge gets `exp(-d²/σ² + γ · (v₃(y) - v₃(x)) / d · sign(y₁ - x₁))`,
/// where `v` is the estimated unit normal, axis 1 (index 0) is the view
/// direction and axis 3 (index 2) points up. The result is re-symmetrized
/// by taking the larger of the two directed weights.
pub fn pointcloud_weights(
    graph: &Graph,
    points: ArrayView2<'_, f64>,
    normals: &[[f64; 3]],
    sigma: f64,
    gamma: f64,
) -> Result<Graph> {
    WeightSpec::PointCloud { sigma, gamma }.validate()?;
    let n = graph.n_nodes();
    if points.dim() != (n, 3) || normals.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n}x3 points and {n} normals"
        )));
    }
    let directed: Vec<f64> = (0..graph.n_edges())
        .map(|e| {
            let (x, y) = (graph.sources[e], graph.targets[e]);
            let px = points.row(x);
            let py = points.row(y);
            let d2: f64 = (0..3).map(|a| (py[a] - px[a]).powi(2)).sum();
            if d2 == 0.0 {
                return Err(Error::DegenerateDistance { src: x, dst: y });
            }
            let d = d2.sqrt();
            let dx = py[0] - px[0];
            let sign = if dx > 0.0 {
                1.0
            } else if dx < 0.0 {
                -1.0
            } else {
                0.0
            };
            let convexity = gamma * (normals[y][2] - normals[x][2]) / d * sign;
            Ok((-d2 / (sigma * sigma) + convexity).exp())
        })
        .collect::<Result<_>>()?;
    let weights = (0..graph.n_edges())
        .map(|e| directed[e].max(directed[graph.reverse[e]]))
        .collect();
    graph.with_weights(weights)
}
