#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tvseg::Graph;

/// Connected random graph: a random spanning tree plus extra edges with
/// probability `p`, weights uniform in `[0.05, 1)`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for y in 1..n {
        let x = rng.random_range(0..y);
        seen.insert((x, y));
        edges.push((x, y, rng.random_range(0.05..1.0)));
    }
    for x in 0..n {
        for y in x + 1..n {
            if !seen.contains(&(x, y)) && rng.random_bool(p) {
                edges.push((x, y, rng.random_range(0.05..1.0)));
            }
        }
    }
    Graph::from_undirected(n, edges).unwrap()
}

/// One to two supervised nodes per class, distinct nodes.
pub fn random_supervision(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<(usize, usize)> {
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        nodes.swap(i, j);
    }
    let mut out = Vec::new();
    let mut it = nodes.into_iter();
    for c in 0..classes {
        for _ in 0..rng.random_range(1..=2) {
            if let Some(x) = it.next() {
                out.push((x, c));
            }
        }
    }
    out
}
