//! Exact k-nearest-neighbour search.
//!
//! Neighbours are ordered by `(squared distance, index)`, so ties are broken
//! by the smaller node index and results are reproducible. Low-dimensional
//! inputs go through a kd-tree; high-dimensional feature vectors use a
//! brute-force scan, where a kd-tree would visit most leaves anyway.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::ArrayView2;
use rayon::prelude::*;

/// Dimensions above which the brute-force scan is used.
const KD_TREE_MAX_DIM: usize = 8;
const LEAF_SIZE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn dist(&self) -> f64 {
        self.dist2.sqrt()
    }
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Flat row-major copy of the point matrix.
fn flatten(points: ArrayView2<'_, f64>) -> Vec<f64> {
    points.iter().copied().collect()
}

/// `counts[x]` nearest neighbours of every point `x`, excluding `x` itself.
pub fn knn_lists(points: ArrayView2<'_, f64>, counts: &[usize]) -> Vec<Vec<Neighbor>> {
    let dim = points.ncols();
    let flat = flatten(points);
    if dim <= KD_TREE_MAX_DIM {
        let tree = KdTree::new(&flat, dim);
        (0..counts.len())
            .into_par_iter()
            .map(|x| tree.knn(x, counts[x]))
            .collect()
    } else {
        (0..counts.len())
            .into_par_iter()
            .map(|x| brute_force_one(&flat, dim, x, counts[x]))
            .collect()
    }
}

/// Reference O(N²) search used as the oracle for the kd-tree.
pub fn knn_brute_force(points: ArrayView2<'_, f64>, k: usize) -> Vec<Vec<Neighbor>> {
    let dim = points.ncols();
    let flat = flatten(points);
    (0..points.nrows())
        .map(|x| brute_force_one(&flat, dim, x, k))
        .collect()
}

fn brute_force_one(flat: &[f64], dim: usize, x: usize, k: usize) -> Vec<Neighbor> {
    let n = flat.len() / dim;
    let q = &flat[x * dim..(x + 1) * dim];
    let mut all: Vec<Neighbor> = (0..n)
        .filter(|&y| y != x)
        .map(|y| Neighbor {
            index: y,
            dist2: dist2(q, &flat[y * dim..(y + 1) * dim]),
        })
        .collect();
    let k = k.min(all.len());
    if k < all.len() {
        all.select_nth_unstable(k);
        all.truncate(k);
    }
    all.sort_unstable();
    all
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over a flat point buffer.
pub struct KdTree<'a> {
    data: &'a [f64],
    dim: usize,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        let n = data.len() / dim;
        let mut tree = KdTree {
            data,
            dim,
            perm: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.data[i * self.dim + axis]
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest spread
        let mut axis = 0;
        let mut best = f64::NEG_INFINITY;
        for a in 0..self.dim {
            let (lo, hi) = self.perm[start..end]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.coord(i, a);
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best {
                best = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let data = self.data;
        let dim = self.dim;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            data[a * dim + axis]
                .total_cmp(&data[b * dim + axis])
                .then(a.cmp(&b))
        });
        let value = self.coord(self.perm[mid], axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest neighbours of stored point `x`, excluding `x`.
    pub fn knn(&self, x: usize, k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, x, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, x: usize, k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let q = self.point(x);
                for &y in &self.perm[start..end] {
                    if y == x {
                        continue;
                    }
                    let cand = Neighbor {
                        index: y,
                        dist2: dist2(q, self.point(y)),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = self.coord(x, axis) - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, x, k, heap);
                // equal distances must still be visited for the index tie-break
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.search(far, x, k, heap);
                }
            }
        }
    }
}
