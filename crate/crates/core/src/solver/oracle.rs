//! Exhaustive minimization over hard labellings, for testing.

use super::{penalty_value, RegionCosts, SizeBounds, SizeSpec};
use crate::graph::Graph;
use crate::{Error, Result};

/// Largest number of labellings `n^N` the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e7;

/// Energy of a hard labelling: costs, plus `Σ_i TV(1_{V_i})` (each cut edge
/// counted once for each of its two classes), plus the size penalty in
/// penalty mode. Hard size bounds are not checked here.
pub fn labeling_energy(g: &Graph, costs: &RegionCosts, size: &SizeSpec, labels: &[usize]) -> Result<f64> {
    let b = size.resolve(costs.n_nodes(), costs.n_classes())?;
    Ok(energy_with_bounds(g, costs, &b, labels))
}

pub(crate) fn energy_with_bounds(g: &Graph, costs: &RegionCosts, b: &SizeBounds, labels: &[usize]) -> f64 {
    let mut e: f64 = labels.iter().enumerate().map(|(x, &l)| costs.get(x, l)).sum();
    for (x, y, w) in g.undirected_edges() {
        if labels[x] != labels[y] {
            e += 2.0 * w;
        }
    }
    if b.gamma > 0.0 && b.gamma.is_finite() {
        let mut sizes = vec![0.0; costs.n_classes()];
        labels.iter().for_each(|&l| sizes[l] += 1.0);
        e += penalty_value(&sizes, &b.lower, &b.upper, b.gamma);
    }
    e
}

/// Minimum-energy hard labelling subject to the size spec (hard bounds are
/// enforced, penalties added). Among equal energies the lexicographically
/// first labelling wins.
pub fn brute_force_oracle(g: &Graph, costs: &RegionCosts, size: &SizeSpec) -> Result<(Vec<usize>, f64)> {
    let (nn, nc) = (costs.n_nodes(), costs.n_classes());
    if g.n_nodes() != nn {
        return Err(Error::InvalidInput("costs and graph disagree on N".into()));
    }
    if (nc as f64).powi(nn as i32) > ORACLE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "{nc}^{nn} labellings exceed the enumeration limit"
        )));
    }
    let b = size.resolve(nn, nc)?;
    let hard = b.gamma.is_infinite();
    // cheapest finite cost of the nodes after x, for pruning
    let mut rest_min = vec![0.0; nn + 1];
    for x in (0..nn).rev() {
        let m = (0..nc).map(|i| costs.get(x, i)).fold(f64::INFINITY, f64::min);
        rest_min[x] = rest_min[x + 1] + m;
    }
    let mut s = Search {
        g,
        costs,
        b: &b,
        hard,
        rest_min,
        labels: vec![0; nn],
        counts: vec![0.0; nc],
        best: None,
    };
    s.dfs(0, 0.0);
    match s.best {
        Some((labels, _)) => {
            // recompute in canonical summation order
            let e = energy_with_bounds(g, costs, &b, &labels);
            Ok((labels, e))
        }
        None => Err(Error::InfeasibleSize("no labelling satisfies the size bounds".into())),
    }
}

struct Search<'a> {
    g: &'a Graph,
    costs: &'a RegionCosts,
    b: &'a SizeBounds,
    hard: bool,
    rest_min: Vec<f64>,
    labels: Vec<usize>,
    counts: Vec<f64>,
    best: Option<(Vec<usize>, f64)>,
}

impl Search<'_> {
    fn dfs(&mut self, x: usize, partial: f64) {
        let nn = self.labels.len();
        if let Some((_, best)) = &self.best {
            // costs and cuts of the remaining nodes are bounded below
            if partial + self.rest_min[x] > *best + 1e-12 * best.abs().max(1.0) {
                return;
            }
        }
        if x == nn {
            let mut e = partial;
            if self.b.gamma > 0.0 && self.b.gamma.is_finite() {
                e += penalty_value(&self.counts, &self.b.lower, &self.b.upper, self.b.gamma);
            }
            if self.best.as_ref().is_none_or(|(_, best)| e < *best) {
                self.best = Some((self.labels.clone(), e));
            }
            return;
        }
        let remaining = (nn - x - 1) as f64;
        for l in 0..self.costs.n_classes() {
            let c = self.costs.get(x, l);
            if c.is_infinite() {
                continue;
            }
            if self.hard {
                if self.counts[l] + 1.0 > self.b.upper[l] {
                    continue;
                }
                self.counts[l] += 1.0;
                let deficit: f64 = self
                    .counts
                    .iter()
                    .zip(&self.b.lower)
                    .map(|(&n, &lo)| (lo - n).max(0.0))
                    .sum();
                self.counts[l] -= 1.0;
                if deficit > remaining {
                    continue;
                }
            }
            let mut add = c;
            for (y, w) in self.g.neighbors(x) {
                if y < x && self.labels[y] != l {
                    add += 2.0 * w;
                }
            }
            self.labels[x] = l;
            self.counts[l] += 1.0;
            self.dfs(x + 1, partial + add);
            self.counts[l] -= 1.0;
        }
    }
}
