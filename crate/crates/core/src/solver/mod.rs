//! Augmented Lagrangian max-flow solver for the relaxed multiclass problem
//!
//! ```text
//! min_u  Σ_i Σ_x C_i(x) u_i(x) + Σ_i TV(u_i)   (+ size penalty)
//! ```
//!
//! over `u(x)` in the unit simplex. The solver maximizes the equivalent flow
//! problem in `(p_s, p, q, ρ¹, ρ²)` and treats `u` as the multiplier of the
//! flow conservation constraint `div q_i - p_s + p_i = ρ¹_i - ρ²_i`.
//!
//! The operators use `r = 0` and `q = 1`.

mod costs;
mod energy;
mod oracle;
mod size;
mod threshold;

use ndarray::Array2;
use rayon::prelude::*;

use crate::calculus::{divergence_into, CalculusParams};
use crate::graph::Graph;
use crate::{Error, Result};

pub use costs::{assemble_costs, Eta, RegionCosts};
pub use energy::{dual_bound, dual_energy, primal_energy, relaxed_primal};
pub use oracle::{brute_force_oracle, labeling_energy, ORACLE_LIMIT};
pub use size::{penalty_value, SizeBounds, SizeSpec};
pub use threshold::{
    binary_difference, level_set_rounding, one_hot, threshold_dual, threshold_rounding, DualThreshold,
};

/// Clamp of a flow value to `[-1, 1]`.
#[inline]
pub fn project_flow(s: f64) -> f64 {
    s.clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Augmented Lagrangian penalty.
    pub c: f64,
    /// Step of the projected gradient step on `q`, the same on every edge.
    /// `None` uses per-edge steps from [`q_step_sizes`], which equal `c`
    /// wherever that is stable and shrink on hubs and heavy edges.
    pub q_step: Option<f64>,
    /// Projected gradient steps on `q` per outer iteration.
    pub inner_q_steps: usize,
    /// Stop once `(1/N) Σ |u - u_old| < delta`, provided `Σ_i u_i` is within
    /// `√delta` of 1 on average.
    pub delta: f64,
    pub max_iters: usize,
    /// Record energies every this many iterations; 0 disables the trace.
    pub trace_every: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            c: 0.1,
            q_step: None,
            inner_q_steps: 1,
            delta: 1e-10,
            max_iters: 10_000,
            trace_every: 1,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be > 0, got {}", self.c)));
        }
        if let Some(t) = self.q_step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("q_step must be > 0, got {t}")));
            }
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.inner_q_steps == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("inner_q_steps and max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Flow variables and multiplier. Per-class arrays are stored class-major:
/// entry `(x, i)` lives at `i * N + x`; `q[i]` is indexed by directed edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub u: Vec<f64>,
    pub p_s: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
}

impl SolverState {
    /// `u, q, ρ = 0`, `p_s = C_n` (the last class), `p_i = p_s`.
    ///
    /// Where `C_n(x)` is infinite the smallest finite cost of `x` is used.
    pub fn initial(g: &Graph, costs: &RegionCosts) -> Self {
        let (nn, nc) = (costs.n_nodes(), costs.n_classes());
        let p_s: Vec<f64> = (0..nn)
            .map(|x| {
                let last = costs.get(x, nc - 1);
                if last.is_finite() {
                    last
                } else {
                    (0..nc)
                        .map(|i| costs.get(x, i))
                        .filter(|v| v.is_finite())
                        .fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        let p = (0..nc).flat_map(|_| p_s.iter().copied()).collect();
        SolverState {
            n_nodes: nn,
            n_classes: nc,
            u: vec![0.0; nn * nc],
            p_s,
            p,
            q: vec![vec![0.0; g.n_edges()]; nc],
            rho1: vec![0.0; nc],
            rho2: vec![0.0; nc],
        }
    }

    /// Relaxed labels as an N×n matrix.
    pub fn u_matrix(&self) -> Array2<f64> {
        let n = self.n_nodes;
        Array2::from_shape_fn((n, self.n_classes), |(x, i)| self.u[i * n + x])
    }

    /// `div q_i` for every class, class-major.
    pub fn div_q(&self, g: &Graph) -> Vec<f64> {
        let n = self.n_nodes;
        let mut out = vec![0.0; n * self.n_classes];
        for (i, chunk) in out.chunks_mut(n).enumerate() {
            divergence_into(g, &self.q[i], CalculusParams::default(), chunk);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// Relaxed primal energy of the current `u`.
    pub primal: f64,
    pub dual: f64,
    pub binary_diff: f64,
    pub u_change: f64,
    /// Primal energy of the rounded labelling.
    pub thresholded_primal: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    /// Relaxed labels, N×n.
    pub u: Array2<f64>,
    /// Rounded labels, 0-based classes: the argmax of `u`, replaced by the
    /// best level set for two classes (see [`level_set_rounding`]).
    pub labels: Vec<usize>,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    pub converged: bool,
    /// `(1/N) Σ |u - u_old|` of the last iteration.
    pub u_change: f64,
    pub state: SolverState,
}

/// Runs the solver from the standard initial state.
pub fn solve(g: &Graph, costs: &RegionCosts, size: &SizeSpec, params: &SolverParams) -> Result<SolverResult> {
    solve_from(g, costs, size, params, None)
}

/// Runs the solver, optionally warm-started from an earlier state of the
/// same dimensions.
pub fn solve_from(
    g: &Graph,
    costs: &RegionCosts,
    size: &SizeSpec,
    params: &SolverParams,
    init: Option<SolverState>,
) -> Result<SolverResult> {
    let bounds = size.resolve(costs.n_nodes(), costs.n_classes())?;
    solve_impl(g, costs, &bounds, params, init, bounds.gamma == 0.0)
}

fn solve_impl(
    g: &Graph,
    costs: &RegionCosts,
    bounds: &SizeBounds,
    params: &SolverParams,
    init: Option<SolverState>,
    skip_rho: bool,
) -> Result<SolverResult> {
    params.validate()?;
    let (nn, nc) = (costs.n_nodes(), costs.n_classes());
    if g.n_nodes() != nn {
        return Err(Error::InvalidInput(format!(
            "costs have {nn} rows but the graph has {} nodes",
            g.n_nodes()
        )));
    }
    let mut st = match init {
        Some(s) => {
            if s.n_nodes != nn || s.n_classes != nc || s.q.iter().any(|q| q.len() != g.n_edges()) {
                return Err(Error::InvalidInput("warm-start state has the wrong shape".into()));
            }
            s
        }
        None => SolverState::initial(g, costs),
    };
    let cost_cols: Vec<f64> = (0..nc).flat_map(|i| (0..nn).map(move |x| (i, x))).map(|(i, x)| costs.get(x, i)).collect();

    let c = params.c;
    let tau = match params.q_step {
        Some(t) => vec![t; g.n_edges()],
        None => q_step_sizes(g, c),
    };
    let inv_c = 1.0 / c;
    let nf = nn as f64;
    let calc = CalculusParams::default();
    let mut divq = st.div_q(g);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut u_change = f64::INFINITY;
    let mut f_buf = vec![vec![0.0; nn]; nc]; // div q_i − F_i

    for k in 1..=params.max_iters {
        iterations = k;
        // q_i ← Π(q_i + τ ∇(div q_i − F_i)), τ per edge,  F_i = p_s − p_i + u_i/c − ρ²_i + ρ¹_i
        {
            let SolverState { q, p, u, p_s, rho1, rho2, .. } = &mut st;
            q.par_iter_mut()
                .zip(divq.par_chunks_mut(nn))
                .zip(f_buf.par_iter_mut())
                .enumerate()
                .for_each(|(i, ((qi, dqi), ri))| {
                    let off = i * nn;
                    let (src, dst) = (g.sources(), g.targets());
                    for _ in 0..params.inner_q_steps {
                        for x in 0..nn {
                            let f = p_s[x] - p[off + x] + u[off + x] * inv_c - rho2[i] + rho1[i];
                            ri[x] = dqi[x] - f;
                        }
                        for (e, qe) in qi.iter_mut().enumerate() {
                            *qe = project_flow(*qe + tau[e] * (ri[dst[e]] - ri[src[e]]));
                        }
                        divergence_into(g, qi, calc, dqi);
                    }
                });
        }

        // p_s = (1/n) Σ_i G_i + 1/(c n),  G_i = p_i + div q_i − u_i/c + ρ²_i − ρ¹_i
        let ncf = nc as f64;
        for x in 0..nn {
            let mut s = 0.0;
            for i in 0..nc {
                let j = i * nn + x;
                s += st.p[j] + divq[j] - st.u[j] * inv_c + st.rho2[i] - st.rho1[i];
            }
            st.p_s[x] = s / ncf + inv_c / ncf;
        }

        // p_i = min(p_s − div q_i + u_i/c − ρ²_i + ρ¹_i, C_i)
        for i in 0..nc {
            for x in 0..nn {
                let j = i * nn + x;
                let h = st.p_s[x] - divq[j] + st.u[j] * inv_c - st.rho2[i] + st.rho1[i];
                st.p[j] = h.min(cost_cols[j]);
            }
        }

        if !skip_rho {
            for i in 0..nc {
                let off = i * nn;
                let mut sj = 0.0;
                for x in 0..nn {
                    let j = off + x;
                    sj += -st.p[j] - divq[j] + st.u[j] * inv_c + st.p_s[x] - st.rho2[i];
                }
                st.rho1[i] = clamp_rho(-sj / nf + bounds.lower[i] * inv_c / nf, bounds.gamma);
                let mut sm = 0.0;
                for x in 0..nn {
                    let j = off + x;
                    sm += st.p[j] + divq[j] - st.u[j] * inv_c - st.p_s[x] - st.rho1[i];
                }
                st.rho2[i] = clamp_rho(-sm / nf - bounds.upper[i] * inv_c / nf, bounds.gamma);
            }
        }

        // u_i ← u_i − c (div q_i − p_s + p_i + ρ²_i − ρ¹_i)
        let mut change = 0.0;
        for i in 0..nc {
            for x in 0..nn {
                let j = i * nn + x;
                let step = c * (divq[j] - st.p_s[x] + st.p[j] + st.rho2[i] - st.rho1[i]);
                st.u[j] -= step;
                change += step.abs();
            }
        }
        u_change = change / nf;
        let infeasibility = (0..nn).map(|x| ((0..nc).map(|i| st.u[i * nn + x]).sum::<f64>() - 1.0).abs()).sum::<f64>() / nf;
        if !u_change.is_finite() || st.p_s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: k });
        }

        // A stalled u with Σ_i u_i ≠ 1 is not a fixed point: p_s keeps moving.
        let done = u_change < params.delta && infeasibility < params.delta.sqrt();
        if params.trace_every > 0 && (k % params.trace_every == 0 || done || k == params.max_iters) {
            trace.push(trace_entry(g, costs, bounds, &st, k, u_change));
        }
        if done {
            converged = true;
            break;
        }
    }

    let u = st.u_matrix();
    let labels = threshold::level_set_with_bounds(g, costs, bounds, &st);
    Ok(SolverResult {
        u,
        labels,
        trace,
        iterations,
        converged,
        u_change,
        state: st,
    })
}

/// Per-edge steps `τ_e = min(c, 1 / (d_w(x) + d_w(y)))` for the `q`
/// gradient step, with `d_w` the weighted degree.
///
/// One step maps the antisymmetric part of `q` by `I − T ∇ div`, and the
/// rows of `T ∇ div` have absolute sums `τ_e (d_w(x) + d_w(y))`. A bound of
/// 2 keeps the inner step stable on its own; the coupled `q`/`u` iteration
/// needs 1 and falls into a limit cycle above it. Per-edge steps keep `c`
/// wherever that is safe instead of shrinking the whole graph because of
/// one hub or one near-duplicate point pair.
pub fn q_step_sizes(g: &Graph, c: f64) -> Vec<f64> {
    let wd: Vec<f64> = (0..g.n_nodes()).map(|x| g.weighted_degree(x)).collect();
    g.sources()
        .iter()
        .zip(g.targets())
        .map(|(&x, &y)| {
            let b = wd[x] + wd[y];
            if b > 0.0 {
                c.min(1.0 / b)
            } else {
                c
            }
        })
        .collect()
}

fn clamp_rho(v: f64, gamma: f64) -> f64 {
    v.max(0.0).min(gamma)
}

fn trace_entry(g: &Graph, costs: &RegionCosts, bounds: &SizeBounds, st: &SolverState, iter: usize, u_change: f64) -> TraceEntry {
    let u = st.u_matrix();
    let labels = threshold_rounding(u.view());
    let ut = one_hot(&labels, st.n_classes);
    TraceEntry {
        iter,
        primal: energy::primal_with_bounds(g, u.view(), costs, bounds),
        dual: energy::dual_with_bounds(st, bounds),
        binary_diff: binary_difference(u.view()),
        u_change,
        thresholded_primal: energy::primal_with_bounds(g, ut.view(), costs, bounds),
    }
}
