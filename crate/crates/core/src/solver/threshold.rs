use ndarray::{Array2, ArrayView2};

use super::oracle::energy_with_bounds;
use super::{penalty_value, RegionCosts, SizeBounds, SizeSpec, SolverState};
use crate::graph::Graph;
use crate::Result;

/// Classes whose dual value is within this distance of the minimum count as
/// tied.
const TIE_TOL: f64 = 1e-9;

/// `argmax_i u_i(x)` per node; ties go to the lowest class.
pub fn threshold_rounding(u: ArrayView2<'_, f64>) -> Vec<usize> {
    u.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Array2<f64> {
    let mut u = Array2::zeros((labels.len(), n_classes));
    for (x, &l) in labels.iter().enumerate() {
        u[[x, l]] = 1.0;
    }
    u
}

/// `(1 / (2 n N)) Σ_i Σ_x |u^T_i(x) - u_i(x)|` where `u^T` is the rounding of `u`.
pub fn binary_difference(u: ArrayView2<'_, f64>) -> f64 {
    let (nn, nc) = u.dim();
    if nn == 0 {
        return 0.0;
    }
    let labels = threshold_rounding(u);
    let mut s = 0.0;
    for (x, row) in u.rows().into_iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let t = if labels[x] == i { 1.0 } else { 0.0 };
            s += (t - v).abs();
        }
    }
    s / (2.0 * nc as f64 * nn as f64)
}

/// Best two-class labelling among the argmax rounding and the level sets
/// `{x : s(x) > t}` of two scores, `u₀ − u₁` and the dual gap
/// `(C₁ + div q₁) − (C₀ + div q₀)`.
///
/// By the coarea formula the relaxed energy of a two-class `u` is the mean
/// energy of its level sets, so some level set is at least as good as `u`.
/// This matters when the relaxed optimum is not unique and the solver stops
/// inside the optimal face, where argmax picks up rounding noise. Hard size
/// bounds restrict the admissible level sets; argmax wins ties. Returns the
/// argmax rounding unchanged for other class counts.
pub fn level_set_rounding(g: &Graph, costs: &RegionCosts, size: &SizeSpec, state: &SolverState) -> Result<Vec<usize>> {
    let bounds = size.resolve(costs.n_nodes(), costs.n_classes())?;
    Ok(level_set_with_bounds(g, costs, &bounds, state))
}

pub(crate) fn level_set_with_bounds(g: &Graph, costs: &RegionCosts, b: &SizeBounds, st: &SolverState) -> Vec<usize> {
    let argmax = threshold_rounding(st.u_matrix().view());
    let nn = st.n_nodes;
    if st.n_classes != 2 || nn == 0 {
        return argmax;
    }
    let hard = b.gamma.is_infinite();
    let feasible = |s0: usize| !hard || fits(s0 as f64, b, 0) && fits((nn - s0) as f64, b, 1);
    let count0 = argmax.iter().filter(|&&l| l == 0).count();
    let mut best = if feasible(count0) { energy_with_bounds(g, costs, b, &argmax) } else { f64::INFINITY };
    let mut best_labels = argmax;

    let divq = st.div_q(g);
    let by_u: Vec<f64> = (0..nn).map(|x| st.u[x] - st.u[nn + x]).collect();
    let by_dual: Vec<f64> = (0..nn).map(|x| (costs.get(x, 1) + divq[nn + x]) - (costs.get(x, 0) + divq[x])).collect();
    for score in [by_u, by_dual] {
        let mut order: Vec<usize> = (0..nn).collect();
        order.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
        if let Some((k, e)) = sweep(g, costs, b, &order, &feasible) {
            if !best.is_finite() || e < best - 1e-12 * best.abs().max(1.0) {
                best = e;
                best_labels = vec![1; nn];
                order[..k].iter().for_each(|&x| best_labels[x] = 0);
            }
        }
    }
    best_labels
}

fn fits(s: f64, b: &SizeBounds, i: usize) -> bool {
    b.lower[i] <= s && s <= b.upper[i]
}

/// Moves the nodes of `order` into class 0 one at a time, starting from all
/// class 1, and returns the best admissible prefix length and its energy.
fn sweep(
    g: &Graph,
    costs: &RegionCosts,
    b: &SizeBounds,
    order: &[usize],
    feasible: &dyn Fn(usize) -> bool,
) -> Option<(usize, f64)> {
    let nn = order.len();
    let soft = b.gamma > 0.0 && b.gamma.is_finite();
    let energy = |data: f64, cut: f64, s0: usize| {
        let mut e = data + 2.0 * cut;
        if soft {
            e += penalty_value(&[s0 as f64, (nn - s0) as f64], &b.lower, &b.upper, b.gamma);
        }
        e
    };
    let mut data: f64 = (0..nn).map(|x| costs.get(x, 1)).sum();
    let mut cut = 0.0;
    let mut in0 = vec![false; nn];
    let mut best = feasible(0).then(|| (0, energy(data, cut, 0)));
    for (k, &x) in order.iter().enumerate() {
        data += costs.get(x, 0) - costs.get(x, 1);
        for (y, w) in g.neighbors(x) {
            cut += if in0[y] { -w } else { w };
        }
        in0[x] = true;
        if feasible(k + 1) {
            let e = energy(data, cut, k + 1);
            if e.is_finite() && best.is_none_or(|(_, eb)| e < eb) {
                best = Some((k + 1, e));
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualThreshold {
    pub labels: Vec<usize>,
    /// Nodes where the minimizing class is not unique.
    pub ties: usize,
}

/// `argmin_i (C_i + div q_i + ρ²_i − ρ¹_i)(x)` per node; ties go to the lowest
/// class and are counted.
pub fn threshold_dual(g: &Graph, costs: &RegionCosts, state: &SolverState) -> DualThreshold {
    let nn = state.n_nodes;
    let divq = state.div_q(g);
    let mut ties = 0;
    let labels = (0..nn)
        .map(|x| {
            let vals: Vec<f64> = (0..state.n_classes)
                .map(|i| costs.get(x, i) + divq[i * nn + x] + state.rho2[i] - state.rho1[i])
                .collect();
            let mut best = 0;
            for (i, &v) in vals.iter().enumerate() {
                if v < vals[best] {
                    best = i;
                }
            }
            let tol = TIE_TOL * vals[best].abs().max(1.0);
            if vals.iter().enumerate().any(|(i, &v)| i != best && v - vals[best] <= tol) {
                ties += 1;
            }
            best
        })
        .collect();
    DualThreshold { labels, ties }
}
