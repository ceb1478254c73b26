use ndarray::ArrayView2;

use super::{RegionCosts, SizeBounds, SizeSpec, SolverState};
use crate::calculus::{total_variation, CalculusParams};
use crate::graph::Graph;
use crate::Result;

/// `Σ_i Σ_x C_i(x) u_i(x) + Σ_i TV(u_i)`, plus the size penalty when the size
/// spec is a finite penalty. Forbidden (infinite-cost) entries contribute
/// only where `u` is nonzero.
pub fn primal_energy(g: &Graph, u: ArrayView2<'_, f64>, costs: &RegionCosts, size: &SizeSpec) -> Result<f64> {
    let bounds = size.resolve(costs.n_nodes(), costs.n_classes())?;
    Ok(primal_with_bounds(g, u, costs, &bounds))
}

/// Primal energy without any size term.
pub fn relaxed_primal(g: &Graph, u: ArrayView2<'_, f64>, costs: &RegionCosts) -> f64 {
    let bounds = SizeSpec::None
        .resolve(costs.n_nodes(), costs.n_classes())
        .expect("no size spec always resolves");
    primal_with_bounds(g, u, costs, &bounds)
}

pub(crate) fn primal_with_bounds(g: &Graph, u: ArrayView2<'_, f64>, costs: &RegionCosts, b: &SizeBounds) -> f64 {
    let (nn, nc) = u.dim();
    let mut e = 0.0;
    for x in 0..nn {
        for i in 0..nc {
            let v = u[[x, i]];
            if v != 0.0 {
                e += costs.get(x, i) * v;
            }
        }
    }
    let p = CalculusParams::default();
    let mut sizes = Vec::with_capacity(nc);
    for i in 0..nc {
        let col = u.column(i).to_vec();
        e += total_variation(g, &col, p);
        sizes.push(col.iter().sum::<f64>());
    }
    if b.gamma > 0.0 && b.gamma.is_finite() {
        e += super::penalty_value(&sizes, &b.lower, &b.upper, b.gamma);
    }
    e
}

/// `Σ_x p_s(x) + Σ_i (ρ¹_i S^ℓ_i − ρ²_i S^u_i)`.
pub fn dual_energy(state: &SolverState, size: &SizeSpec) -> Result<f64> {
    let bounds = size.resolve(state.n_nodes, state.n_classes)?;
    Ok(dual_with_bounds(state, &bounds))
}

pub(crate) fn dual_with_bounds(state: &SolverState, b: &SizeBounds) -> f64 {
    let mut e: f64 = state.p_s.iter().sum();
    if b.gamma > 0.0 {
        for i in 0..state.n_classes {
            e += state.rho1[i] * b.lower[i] - state.rho2[i] * b.upper[i];
        }
    }
    e
}

/// `Σ_x min_i (C_i + div q_i + ρ²_i − ρ¹_i)(x) + Σ_i (ρ¹_i S^ℓ_i − ρ²_i S^u_i)`.
///
/// For any state with `|q| ≤ 1` and `0 ≤ ρ ≤ γ` this is a lower bound on the
/// relaxed optimum, whether or not flow conservation holds.
pub fn dual_bound(g: &Graph, costs: &RegionCosts, state: &SolverState, size: &SizeSpec) -> Result<f64> {
    let b = size.resolve(state.n_nodes, state.n_classes)?;
    let nn = state.n_nodes;
    let divq = state.div_q(g);
    let (r1, r2): (Vec<f64>, Vec<f64>) = if b.gamma > 0.0 {
        (state.rho1.clone(), state.rho2.clone())
    } else {
        (vec![0.0; state.n_classes], vec![0.0; state.n_classes])
    };
    let mut e = 0.0;
    for x in 0..nn {
        let m = (0..state.n_classes)
            .map(|i| costs.get(x, i) + divq[i * nn + x] + r2[i] - r1[i])
            .fold(f64::INFINITY, f64::min);
        e += m;
    }
    for i in 0..state.n_classes {
        e += r1[i] * b.lower[i] - r2[i] * b.upper[i];
    }
    Ok(e)
}
