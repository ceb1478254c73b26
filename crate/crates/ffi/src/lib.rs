//! C interface to `tvseg`.
//!
//! Graphs and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`TvsStatus`]; on failure [`tvs_last_error_message`] describes the error
//! for the calling thread. Panics never cross the boundary.
//!
//! Arrays are row-major. Classes are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ndarray::{Array2, ArrayView2};
use tvseg::graph::{build_knn_graph, Graph, WeightSpec};
use tvseg::solver::{self, assemble_costs, binary_difference, Eta, RegionCosts, SizeSpec, SolverParams, SolverResult};
use tvseg::Error;

/// Status codes. The non-zero values below 5 match the exit codes of the
/// command-line tool.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvsStatus {
    Ok = 0,
    /// Invalid parameter or configuration.
    InvalidParameter = 1,
    /// Invalid or inconsistent input data.
    InvalidInput = 2,
    /// The solver produced non-finite values.
    Divergence = 3,
    /// The size constraints admit no labelling.
    InfeasibleSize = 4,
    NullPointer = 5,
    /// Internal error; the library caught a panic.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvsWeightKind {
    /// `exp(-d²/σ²)`, uses `sigma`.
    Gaussian = 0,
    /// Locally scaled weights, uses `m`.
    Zmp = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvsSizeMode {
    None = 0,
    /// `lower` holds the sizes.
    Exact = 1,
    Interval = 2,
    Penalty = 3,
}

/// Class-size constraint. `lower` and `upper` point to `n_classes` values
/// and may be null when the mode does not use them.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TvsSizeSpec {
    pub mode: TvsSizeMode,
    pub lower: *const f64,
    pub upper: *const f64,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvsSolverParams {
    pub c: f64,
    pub delta: f64,
    pub max_iters: usize,
}

/// Opaque graph handle.
pub struct TvsGraph(Graph);

/// Opaque solver result handle.
pub struct TvsResult(SolverResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(TvsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            1 => TvsStatus::InvalidParameter,
            3 => TvsStatus::Divergence,
            4 => TvsStatus::InfeasibleSize,
            _ => TvsStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TvsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TvsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TvsStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal error");
            TvsStatus::Panic
        }
    }
}

unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn tvs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tvs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn tvs_solver_params_default() -> TvsSolverParams {
    let d = SolverParams::default();
    TvsSolverParams { c: d.c, delta: d.delta, max_iters: d.max_iters }
}

/// Symmetric kNN graph of `n` points with `dim` coordinates each.
///
/// # Safety
/// `points` must hold `n * dim` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvs_graph_build_knn(
    points: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    kind: TvsWeightKind,
    sigma: f64,
    m: usize,
    out: *mut *mut TvsGraph,
) -> TvsStatus {
    guard(|| {
        let data = view(points, n.saturating_mul(dim), "points")?;
        let pts = ArrayView2::from_shape((n, dim), data).map_err(|e| Fail(TvsStatus::InvalidInput, e.to_string()))?;
        let spec = match kind {
            TvsWeightKind::Gaussian => WeightSpec::Gaussian { sigma },
            TvsWeightKind::Zmp => WeightSpec::Zmp { m },
        };
        let g = build_knn_graph(pts, k, &spec)?;
        store(out, TvsGraph(g))
    })
}

/// Graph from `n_edges` undirected edges `(src[e], dst[e], weight[e])`.
///
/// # Safety
/// The three arrays must hold `n_edges` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tvs_graph_from_edges(
    n_nodes: usize,
    src: *const usize,
    dst: *const usize,
    weight: *const f64,
    n_edges: usize,
    out: *mut *mut TvsGraph,
) -> TvsStatus {
    guard(|| {
        let (s, d, w) = (view(src, n_edges, "src")?, view(dst, n_edges, "dst")?, view(weight, n_edges, "weight")?);
        let edges = (0..n_edges).map(|e| (s[e], d[e], w[e]));
        let g = Graph::from_undirected(n_nodes, edges)?;
        store(out, TvsGraph(g))
    })
}

/// Number of nodes; 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_graph_n_nodes(g: *const TvsGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_nodes())
}

/// Number of directed edges (twice the undirected count); 0 for null.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_graph_n_edges(g: *const TvsGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_edges())
}

/// # Safety
/// `g` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tvs_graph_free(g: *mut TvsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Fills the `n_nodes × n_classes` cost matrix `out` with `eta` where a
/// supervised node would take a class other than its own and 0 elsewhere.
/// A non-finite `eta` forbids those classes outright.
///
/// # Safety
/// `nodes` and `classes` must hold `n_supervised` values and `out` must
/// hold `n_nodes * n_classes`.
#[no_mangle]
pub unsafe extern "C" fn tvs_supervision_costs(
    n_nodes: usize,
    n_classes: usize,
    nodes: *const usize,
    classes: *const usize,
    n_supervised: usize,
    eta: f64,
    out: *mut f64,
) -> TvsStatus {
    guard(|| {
        let (xs, ls) = (view(nodes, n_supervised, "nodes")?, view(classes, n_supervised, "classes")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let pairs: Vec<(usize, usize)> = xs.iter().copied().zip(ls.iter().copied()).collect();
        let eta = if eta.is_infinite() && eta > 0.0 { Eta::Infinite } else { Eta::Finite(eta) };
        let c = assemble_costs(n_nodes, n_classes, &pairs, eta, None)?.into_inner();
        let dst = slice::from_raw_parts_mut(out, n_nodes * n_classes);
        for (d, v) in dst.iter_mut().zip(c.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

unsafe fn size_spec(s: Option<&TvsSizeSpec>, n_classes: usize) -> Result<SizeSpec, Fail> {
    let Some(s) = s else { return Ok(SizeSpec::None) };
    let list = |p: *const f64, what: &str| view(p, n_classes, what).map(<[f64]>::to_vec);
    Ok(match s.mode {
        TvsSizeMode::None => SizeSpec::None,
        TvsSizeMode::Exact => SizeSpec::Exact(list(s.lower, "size lower")?),
        TvsSizeMode::Interval => SizeSpec::Interval { lower: list(s.lower, "size lower")?, upper: list(s.upper, "size upper")? },
        TvsSizeMode::Penalty => SizeSpec::Penalty {
            lower: list(s.lower, "size lower")?,
            upper: list(s.upper, "size upper")?,
            gamma: s.gamma,
        },
    })
}

/// Minimizes costs plus total variation over `g`.
///
/// `costs` is `n_nodes × n_classes`, row-major, `+inf` marking forbidden
/// classes. `size` and `params` may be null for no constraint and default
/// parameters.
///
/// # Safety
/// `g` must be a live handle, `costs` must hold `n_nodes * n_classes`
/// values, `size` and `params` must be null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tvs_solve(
    g: *const TvsGraph,
    costs: *const f64,
    n_classes: usize,
    size: *const TvsSizeSpec,
    params: *const TvsSolverParams,
    out: *mut *mut TvsResult,
) -> TvsStatus {
    guard(|| {
        let g = &g.as_ref().ok_or_else(|| null("graph"))?.0;
        let n = g.n_nodes();
        let c = view(costs, n.saturating_mul(n_classes), "costs")?;
        let c = Array2::from_shape_vec((n, n_classes), c.to_vec()).map_err(|e| Fail(TvsStatus::InvalidInput, e.to_string()))?;
        let costs = RegionCosts::new(c)?;
        let size = size_spec(size.as_ref(), n_classes)?;
        let p = params.as_ref().copied().unwrap_or_else(|| tvs_solver_params_default());
        let params = SolverParams { c: p.c, delta: p.delta, max_iters: p.max_iters, trace_every: 0, ..SolverParams::default() };
        let res = solver::solve(g, &costs, &size, &params)?;
        store(out, TvsResult(res))
    })
}

/// Copies the `n_nodes` hard labels into `out`.
///
/// # Safety
/// `r` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_labels(r: *const TvsResult, out: *mut usize, len: usize) -> TvsStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != r.labels.len() {
            return Err(Fail(TvsStatus::InvalidInput, format!("buffer holds {len}, need {}", r.labels.len())));
        }
        slice::from_raw_parts_mut(out, len).copy_from_slice(&r.labels);
        Ok(())
    })
}

/// Copies the relaxed labels, `n_nodes × n_classes` row-major, into `out`.
///
/// # Safety
/// `r` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_u(r: *const TvsResult, out: *mut f64, len: usize) -> TvsStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != r.u.len() {
            return Err(Fail(TvsStatus::InvalidInput, format!("buffer holds {len}, need {}", r.u.len())));
        }
        let dst = slice::from_raw_parts_mut(out, len);
        for (d, v) in dst.iter_mut().zip(r.u.iter()) {
            *d = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_n_nodes(r: *const TvsResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.u.nrows())
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_n_classes(r: *const TvsResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.u.ncols())
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_iterations(r: *const TvsResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// 1 when the stopping tolerance was reached, 0 otherwise or for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_converged(r: *const TvsResult) -> i32 {
    r.as_ref().map_or(0, |r| r.0.converged as i32)
}

/// Mean distance of the relaxed labels to their rounding; NaN for null.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_binary_difference(r: *const TvsResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| binary_difference(r.0.u.view()))
}

/// # Safety
/// `r` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn tvs_result_free(r: *mut TvsResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
