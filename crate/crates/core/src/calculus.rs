//! Difference operators on a [`Graph`].
//!
//! With exponents `r ∈ [0, 1]` and `q ∈ [½, 1]`:
//!
//! ```text
//! (∇u)(x,y)   = w^{1-q} (u(y) - u(x))
//! (div φ)(x)  = 1 / (2 d(x)^r) Σ_y w^q (φ(x,y) - φ(y,x))
//! TV(u)       = ½ Σ_{x,y} w^q |u(y) - u(x)|
//! (Δu)(x)     = Σ_y w / d(x)^r (u(y) - u(x))
//! ⟨u,v⟩_V     = Σ_x u v d(x)^r
//! ⟨φ,ψ⟩_E     = ½ Σ_{x,y} φ ψ w^{2q-1}
//! ```
//!
//! `d(x)` is the number of neighbours of `x`. Sums over edges run in edge
//! index order.

use std::ops::{Deref, DerefMut};

use crate::graph::Graph;
use crate::{Error, Result};

/// One value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction(pub Vec<f64>);

/// One value per directed edge, indexed like [`Graph::targets`].
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction(pub Vec<f64>);

macro_rules! vec_newtype {
    ($t:ty) => {
        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}
vec_newtype!(VertexFunction);
vec_newtype!(EdgeFunction);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalculusParams {
    pub r: f64,
    pub q: f64,
}

impl Default for CalculusParams {
    fn default() -> Self {
        CalculusParams { r: 0.0, q: 1.0 }
    }
}

impl CalculusParams {
    pub fn new(r: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!("r = {r} outside [0, 1]")));
        }
        if !(0.5..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q = {q} outside [1/2, 1]")));
        }
        Ok(CalculusParams { r, q })
    }

    // Exact shortcuts for the common exponents keep the default path free
    // of `powf` rounding.
    fn wpow(w: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else if e == 1.0 {
            w
        } else {
            w.powf(e)
        }
    }

    fn dpow(&self, d: usize) -> f64 {
        Self::wpow(d as f64, self.r)
    }
}

pub fn gradient(g: &Graph, u: &[f64], p: CalculusParams) -> EdgeFunction {
    let (src, dst, w) = (g.sources(), g.targets(), g.weights());
    EdgeFunction(
        (0..g.n_edges())
            .map(|e| CalculusParams::wpow(w[e], 1.0 - p.q) * (u[dst[e]] - u[src[e]]))
            .collect(),
    )
}

pub fn divergence(g: &Graph, phi: &[f64], p: CalculusParams) -> VertexFunction {
    let mut out = vec![0.0; g.n_nodes()];
    divergence_into(g, phi, p, &mut out);
    VertexFunction(out)
}

pub(crate) fn divergence_into(g: &Graph, phi: &[f64], p: CalculusParams, out: &mut [f64]) {
    let (rev, w) = (g.reverse(), g.weights());
    for (x, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for e in g.edge_range(x) {
            s += CalculusParams::wpow(w[e], p.q) * (phi[e] - phi[rev[e]]);
        }
        *o = s / (2.0 * p.dpow(g.degree(x)));
    }
}

pub fn total_variation(g: &Graph, u: &[f64], p: CalculusParams) -> f64 {
    let (src, dst, w) = (g.sources(), g.targets(), g.weights());
    let s: f64 = (0..g.n_edges())
        .map(|e| CalculusParams::wpow(w[e], p.q) * (u[dst[e]] - u[src[e]]).abs())
        .sum();
    0.5 * s
}

pub fn laplacian_apply(g: &Graph, u: &[f64], p: CalculusParams) -> VertexFunction {
    VertexFunction(
        (0..g.n_nodes())
            .map(|x| {
                let s: f64 = g.neighbors(x).map(|(y, w)| w * (u[y] - u[x])).sum();
                s / p.dpow(g.degree(x))
            })
            .collect(),
    )
}

pub fn inner_product_vertex(g: &Graph, u: &[f64], v: &[f64], p: CalculusParams) -> f64 {
    (0..g.n_nodes())
        .map(|x| u[x] * v[x] * p.dpow(g.degree(x)))
        .sum()
}

pub fn inner_product_edge(g: &Graph, phi: &[f64], psi: &[f64], p: CalculusParams) -> f64 {
    let w = g.weights();
    let s: f64 = (0..g.n_edges())
        .map(|e| phi[e] * psi[e] * CalculusParams::wpow(w[e], 2.0 * p.q - 1.0))
        .sum();
    0.5 * s
}

/// `max |φ(x,y)|` over directed edges.
pub fn edge_inf_norm(phi: &[f64]) -> f64 {
    phi.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(w: f64) -> Graph {
        Graph::from_undirected(2, [(0, 1, w)]).unwrap()
    }

    #[test]
    fn two_node_examples() {
        let g = pair(4.0);
        let d = CalculusParams::default();
        assert!(gradient(&g, &[3.0, 3.0], d).iter().all(|&v| v == 0.0));
        assert_eq!(gradient(&g, &[0.0, 1.0], d).0, vec![1.0, -1.0]);
        let half = CalculusParams::new(0.0, 0.5).unwrap();
        assert_eq!(gradient(&g, &[0.0, 1.0], half).0, vec![2.0, -2.0]);
        assert_eq!(divergence(&g, &[1.0, 0.0], d).0, vec![2.0, -2.0]);
        assert_eq!(divergence(&g, &[0.7, 0.7], d).0, vec![0.0, 0.0]);
        assert_eq!(total_variation(&g, &[0.0, 1.0], d), 4.0);
        assert_eq!(laplacian_apply(&g, &[0.0, 1.0], d).0, vec![4.0, -4.0]);
    }

    #[test]
    fn inner_products_of_ones() {
        let g = Graph::from_undirected(3, [(0, 1, 0.5), (1, 2, 2.0)]).unwrap();
        let d = CalculusParams::default();
        assert_eq!(inner_product_vertex(&g, &[1.0; 3], &[1.0; 3], d), 3.0);
        assert_eq!(inner_product_edge(&g, &[1.0; 4], &[1.0; 4], d), 2.5);
    }

    #[test]
    fn regular_graph_with_r_one() {
        // 4-cycle: every node has degree 2
        let g = Graph::from_undirected(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let u = [1.0, 2.0, 4.0, 8.0];
        let p = CalculusParams::new(1.0, 1.0).unwrap();
        let lap = laplacian_apply(&g, &u, p);
        let expected = [(2.0 + 8.0 - 2.0) / 2.0, (1.0 + 4.0 - 4.0) / 2.0, (2.0 + 8.0 - 8.0) / 2.0, (4.0 + 1.0 - 16.0) / 2.0];
        assert_eq!(lap.0, expected);
    }

    #[test]
    fn parameter_ranges() {
        assert!(CalculusParams::new(1.5, 1.0).is_err());
        assert!(CalculusParams::new(0.0, 0.4).is_err());
    }
}
