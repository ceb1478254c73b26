//! `tvseg`: dataset generation, segmentation runs, oracle fixtures and
//! reports. Exit codes: 1 configuration, 2 data, 3 solver divergence,
//! 4 infeasible size constraints.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use ndarray::Array2;

use tvseg::config::{parse_eta, parse_normalization, size_spec, RunConfig, WeightKind};
use tvseg::data::{self, sample_supervision, supervision_pairs, Dataset, SceneSpec, SupervisionStrategy};
use tvseg::eval::{self, EvalReport};
use tvseg::graph::Graph;
use tvseg::io;
use tvseg::pipeline;
use tvseg::presets::{sub_seed, DatasetSource, Preset, STREAM_SPECTRAL, STREAM_SUPERVISION};
use tvseg::region::RegionClass;
use tvseg::solver::{brute_force_oracle, RegionCosts, SizeSpec};
use tvseg::{Error, Result};

#[derive(Parser)]
#[command(name = "tvseg", version, about = "Convex multiclass segmentation on weighted graphs")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "TVSEG_THREADS")]
    threads: Option<usize>,
    /// Run on a single thread. Results never depend on the thread count;
    /// this also fixes the order of every parallel loop.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic dataset.
    Gen(GenArgs),
    /// Semi-supervised segmentation of a feature matrix.
    Segment(SegmentArgs),
    /// Unsupervised segmentation of a 3D point cloud with region terms.
    Pointcloud(PointCloudArgs),
    /// Two-class segmentation from the second Laplacian eigenvector.
    Unsup(UnsupArgs),
    /// Exhaustive minimum of a tiny instance.
    Oracle(OracleArgs),
    /// Accuracy and energy of an existing labelling.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    ThreeMoons,
    TwoMoons,
    Scene,
}

#[derive(Args)]
struct GenArgs {
    kind: GenKind,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    n_per_class: usize,
    /// Ambient dimension; defaults to 100 for three moons and 2 for two moons.
    #[arg(long)]
    dims: Option<usize>,
    /// Noise level; defaults to 0.14 for three moons, 0.05 for two moons and
    /// 0.01 for the scene.
    #[arg(long)]
    noise: Option<f64>,
    /// Scene points per unit area.
    #[arg(long, default_value_t = 19.0)]
    density: f64,
    /// Also write supervision.csv with this fraction of nodes per class.
    #[arg(long)]
    supervised: Option<f64>,
}

/// Solver and graph overrides shared by the segmentation commands.
#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    preset: Option<String>,
    /// TOML configuration, applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Uniform step of the flow update; per-edge steps by default.
    #[arg(long)]
    q_step: Option<f64>,
    /// Supervision penalty, a number or `inf`.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// gaussian, zmp or pointcloud.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Neighbour multiplier for supervised nodes.
    #[arg(long)]
    boost: Option<usize>,
    /// none, exact, interval or penalty.
    #[arg(long)]
    size_mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    size_lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    size_upper: Option<Vec<f64>>,
    #[arg(long)]
    size_gamma: Option<f64>,
    /// Also write the relaxed labels to u.csv.
    #[arg(long)]
    dump_u: bool,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunFlags,
    /// Feature CSV; without it the preset's synthetic data is generated.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Ground-truth labels for the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Supervised nodes as `node_index,label`.
    #[arg(long, conflicts_with = "supervised")]
    supervision: Option<PathBuf>,
    /// Sample this fraction of each class from the ground truth.
    #[arg(long)]
    supervised: Option<f64>,
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args)]
struct PointCloudArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunFlags,
    /// XYZ file; without it the synthetic scene is generated.
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Comma-separated classes: ground, human, vegetation, vegetation2, smoke.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Convexity coefficient of the edge weights.
    #[arg(long)]
    gamma_conv: Option<f64>,
    /// Multiplier of all region terms.
    #[arg(long)]
    alpha: Option<f64>,
    /// Horizontal radius for the local ground height.
    #[arg(long)]
    height_radius: Option<f64>,
    /// Also write the local PCA features to features.csv.
    #[arg(long)]
    dump_features: bool,
}

#[derive(Args)]
struct UnsupArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunFlags,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    p: Option<u32>,
    #[arg(long)]
    outer_iters: Option<usize>,
    /// rw or unnorm.
    #[arg(long)]
    laplacian: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// `src,dst,weight`; each undirected edge once or in both directions.
    #[arg(long)]
    edges: PathBuf,
    /// N rows of per-class costs, no header.
    #[arg(long)]
    costs: PathBuf,
    #[arg(long)]
    size_mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    size_lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    size_upper: Option<Vec<f64>>,
    #[arg(long)]
    size_gamma: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Graph edges for the energy.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Best accuracy over class permutations.
    #[arg(long)]
    permute: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Segment(a) => segment(a),
        Cmd::Pointcloud(a) => pointcloud(a),
        Cmd::Unsup(a) => unsup(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::Report(a) => report(a),
    }
}

fn out_dir(p: &Path) -> Result<&Path> {
    std::fs::create_dir_all(p)?;
    Ok(p)
}

fn gen(a: GenArgs) -> Result<()> {
    let dir = out_dir(&a.common.out_dir)?;
    let seed = a.common.seed;
    let d = match a.kind {
        GenKind::ThreeMoons => data::three_moons(a.n_per_class, a.dims.unwrap_or(100), a.noise.unwrap_or(0.14), seed)?,
        GenKind::TwoMoons => data::two_moons(a.n_per_class, a.dims.unwrap_or(2), a.noise.unwrap_or(0.05), seed)?,
        GenKind::Scene => {
            let spec = SceneSpec { noise: a.noise.unwrap_or(0.01), ..SceneSpec::default() };
            data::synth_scene(&spec, a.density, seed)?
        }
    };
    match a.kind {
        GenKind::Scene => io::write_xyz(&dir.join("cloud.xyz"), d.features.view(), None)?,
        _ => io::write_features_csv(&dir.join("features.csv"), d.features.view())?,
    }
    let truth = d.labels.as_deref().expect("generators attach labels");
    io::write_labels_csv(&dir.join("labels.csv"), truth)?;
    if let Some(f) = a.supervised {
        let nodes = sample_supervision(&d, f, &SupervisionStrategy::Uniform, sub_seed(seed, STREAM_SUPERVISION))?;
        io::write_pairs_csv(&dir.join("supervision.csv"), supervision_pairs(&d, &nodes)?)?;
    }
    println!("wrote {} points in {} classes to {}", d.len(), d.n_classes, dir.display());
    Ok(())
}

/// Preset, then config file, then flags.
fn build_config(r: &RunFlags, default_preset: Option<&str>) -> Result<(Option<Preset>, RunConfig)> {
    let preset = match r.preset.as_deref().or(default_preset) {
        Some(name) => Some(Preset::get(name)?),
        None => None,
    };
    let mut cfg = preset.as_ref().map_or_else(RunConfig::default, |p| p.config.clone());
    if let Some(path) = &r.config {
        cfg.apply_file(path)?;
    }
    let s = &mut cfg.solver;
    s.c = r.c.unwrap_or(s.c);
    s.delta = r.delta.unwrap_or(s.delta);
    s.max_iters = r.max_iters.unwrap_or(s.max_iters);
    if r.q_step.is_some() {
        s.q_step = r.q_step;
    }
    if let Some(e) = &r.eta {
        cfg.eta = parse_eta(e)?;
    }
    let g = &mut cfg.graph;
    g.k = r.k.unwrap_or(g.k);
    g.m = r.m.unwrap_or(g.m);
    if let Some(w) = &r.weight {
        g.weight = w.parse::<WeightKind>()?;
    }
    if r.sigma.is_some() {
        g.sigma = r.sigma;
    }
    g.boost = r.boost.unwrap_or(g.boost);
    if r.size_mode.is_some() || r.size_lower.is_some() || r.size_upper.is_some() {
        let mode = r.size_mode.as_deref().unwrap_or("interval");
        cfg.size = size_spec(mode, r.size_lower.clone(), r.size_upper.clone(), r.size_gamma)?;
    } else if let (Some(gamma), SizeSpec::Penalty { lower, upper, .. }) = (r.size_gamma, &cfg.size) {
        cfg.size = SizeSpec::Penalty { lower: lower.clone(), upper: upper.clone(), gamma };
    }
    Ok((preset, cfg))
}

/// Features from a file, or the preset's synthetic data.
fn load_points(
    file: Option<&Path>,
    truth: Option<&Path>,
    preset: Option<&Preset>,
    seed: u64,
    xyz: bool,
) -> Result<Dataset> {
    let mut d = match (file, preset) {
        (Some(f), _) => {
            let features = if xyz { io::read_xyz(f)? } else { io::read_features_csv(f)? };
            Dataset { features, labels: None, n_classes: 0 }
        }
        (None, Some(p)) => p.generate(seed)?.ok_or_else(|| {
            Error::InvalidConfig(format!("preset '{}' reads its data from files; pass the input file", p.name))
        })?,
        (None, None) => return Err(Error::InvalidConfig("no input file and no preset".into())),
    };
    if let Some(t) = truth {
        let labels = io::read_label_vector(t)?;
        if labels.len() != d.len() {
            return Err(Error::InvalidInput(format!("{} truth labels for {} points", labels.len(), d.len())));
        }
        d.n_classes = labels.iter().max().map_or(0, |m| m + 1);
        d.labels = Some(labels);
    }
    Ok(d)
}

fn finish(dir: &Path, rep: &EvalReport, result: &tvseg::SolverResult, dump_u: bool) -> Result<()> {
    io::write_labels_csv(&dir.join("labels.csv"), &result.labels)?;
    io::write_trace_csv(&dir.join("trace.csv"), &result.trace)?;
    if dump_u {
        io::write_u_csv(&dir.join("u.csv"), result.u.view())?;
    }
    rep.write(dir)?;
    print!("{}", rep.to_text());
    Ok(())
}

fn segment(a: SegmentArgs) -> Result<()> {
    let dir = out_dir(&a.common.out_dir)?;
    let seed = a.common.seed;
    let default = if a.run.config.is_none() && a.features.is_none() { Some("three-moons") } else { None };
    let (preset, mut cfg) = build_config(&a.run, default)?;
    if let Some(f) = a.supervised {
        cfg.supervised_fraction = f;
    }
    let d = load_points(a.features.as_deref(), a.truth.as_deref(), preset.as_ref(), seed, false)?;
    let pairs = match &a.supervision {
        Some(p) => io::read_labels_csv(p)?,
        None => {
            let nodes = sample_supervision(&d, cfg.supervised_fraction, &SupervisionStrategy::Uniform, sub_seed(seed, STREAM_SUPERVISION))?;
            supervision_pairs(&d, &nodes)?
        }
    };
    let from_files = pairs.iter().map(|&(_, l)| l + 1).max().unwrap_or(0).max(d.n_classes);
    let fallback = match preset.as_ref().map(|p| &p.source) {
        Some(DatasetSource::External { n_classes }) => *n_classes,
        _ => 0,
    };
    let n = a.classes.unwrap_or(if from_files > 0 { from_files } else { fallback });
    if n < 2 {
        return Err(Error::InvalidInput("need at least two classes; pass --classes".into()));
    }
    info!("{} points, {} supervised, {n} classes", d.len(), pairs.len());
    io::write_pairs_csv(&dir.join("supervision.csv"), pairs.iter().copied())?;
    let run = pipeline::segment(d.features.view(), &pairs, n, &cfg)?;
    let rep = eval::report(&run.result, d.labels.as_deref(), &run.graph, &run.costs, &cfg.size, false)?;
    finish(dir, &rep, &run.result, a.run.dump_u)
}

fn pointcloud(a: PointCloudArgs) -> Result<()> {
    let dir = out_dir(&a.common.out_dir)?;
    let (preset, mut cfg) = build_config(&a.run, Some("pointcloud"))?;
    if let Some(cl) = &a.classes {
        cfg.region_classes = cl.iter().map(|s| s.parse::<RegionClass>()).collect::<Result<_>>()?;
    }
    if let Some(g) = a.gamma_conv {
        cfg.graph.gamma = g;
    }
    if let Some(al) = a.alpha {
        cfg.region.alpha = al;
    }
    if a.height_radius.is_some() {
        cfg.height_radius = a.height_radius;
    }
    let d = load_points(a.cloud.as_deref(), a.truth.as_deref(), preset.as_ref(), a.common.seed, true)?;
    if a.cloud.is_none() {
        io::write_xyz(&dir.join("cloud.xyz"), d.features.view(), None)?;
    }
    let run = pipeline::pointcloud(d.features.view(), &cfg)?;
    io::write_xyz(&dir.join("labelled.xyz"), d.features.view(), Some(&run.result.labels))?;
    if a.dump_features {
        io::write_point_features_csv(&dir.join("features.csv"), d.features.view(), &run.geometry)?;
    }
    let names: Vec<&str> = cfg.region_classes.iter().map(|c| c.name()).collect();
    println!("classes             {}", names.join(" "));
    let rep = eval::report(&run.result, d.labels.as_deref(), &run.graph, &run.costs, &cfg.size, false)?;
    finish(dir, &rep, &run.result, a.run.dump_u)
}

fn unsup(a: UnsupArgs) -> Result<()> {
    let dir = out_dir(&a.common.out_dir)?;
    let seed = a.common.seed;
    let default = if a.features.is_none() { Some("two-moons") } else { None };
    let (preset, mut cfg) = build_config(&a.run, default)?;
    if a.alpha.is_some() {
        cfg.unsup.alpha = a.alpha;
    }
    cfg.unsup.p = a.p.unwrap_or(cfg.unsup.p);
    cfg.unsup.outer_iters = a.outer_iters.unwrap_or(cfg.unsup.outer_iters);
    if let Some(l) = &a.laplacian {
        cfg.unsup.laplacian = parse_normalization(l)?;
    }
    let d = load_points(a.features.as_deref(), a.truth.as_deref(), preset.as_ref(), seed, false)?;
    let run = pipeline::unsupervised(d.features.view(), &cfg, sub_seed(seed, STREAM_SPECTRAL))?;
    let phi = Array2::from_shape_vec((d.len(), 1), run.field.phi.clone()).expect("one value per node");
    io::write_u_csv(&dir.join("phi.csv"), phi.view())?;
    let costs = RegionCosts::new(tvseg::spectral::spectral_region_terms(
        &run.field.phi,
        &tvseg::spectral::CentroidPair {
            c1: run.run.centroids.last().map_or(0.0, |c| c.0),
            c2: run.run.centroids.last().map_or(0.0, |c| c.1),
            alpha: run.alpha,
            p: cfg.unsup.p,
        },
    )?)?;
    println!("eigenvalue          {:.6e} (residual {:.1e})", run.field.eigenvalue, run.field.residual);
    println!("alpha               {:.6e}", run.alpha);
    println!("outer iterations    {}", run.run.outer_iterations);
    if let Some((c1, c2)) = run.run.centroids.last() {
        println!("centroids           {c1:.6e} {c2:.6e}");
    }
    if run.run.empty_class {
        println!("warning: a class became empty; its centroid was kept");
    }
    let rep = eval::report(&run.run.result, d.labels.as_deref(), &run.graph, &costs, &SizeSpec::None, true)?;
    finish(dir, &rep, &run.run.result, a.run.dump_u)
}

/// Reads an edge list written with one or both directions per edge.
fn read_graph(path: &Path, n: Option<usize>) -> Result<Graph> {
    let edges = io::read_edges_csv(path)?;
    let n = n.unwrap_or_else(|| edges.iter().map(|&(x, y, _)| x.max(y) + 1).max().unwrap_or(0));
    let seen: HashSet<(usize, usize)> = edges.iter().map(|&(x, y, _)| (x, y)).collect();
    let both = edges.iter().all(|&(x, y, _)| seen.contains(&(y, x)));
    if both {
        Graph::from_directed(n, edges)
    } else {
        Graph::from_undirected(n, edges)
    }
}

fn oracle(a: OracleArgs) -> Result<()> {
    let dir = out_dir(&a.out_dir)?;
    let costs = RegionCosts::new(io::read_features_csv(&a.costs)?)?;
    let g = read_graph(&a.edges, Some(costs.n_nodes()))?;
    let size = match &a.size_mode {
        Some(mode) => size_spec(mode, a.size_lower, a.size_upper, a.size_gamma)?,
        None => SizeSpec::None,
    };
    let (labels, energy) = brute_force_oracle(&g, &costs, &size)?;
    io::write_labels_csv(&dir.join("labels.csv"), &labels)?;
    std::fs::write(dir.join("energy.txt"), format!("{energy:e}\n"))?;
    println!("energy {energy:e}");
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let labels = io::read_label_vector(&a.labels)?;
    if let Some(t) = &a.truth {
        let truth = io::read_label_vector(t)?;
        let n = labels.iter().chain(&truth).max().map_or(0, |m| m + 1);
        println!("accuracy            {:.4}%", 100.0 * eval::accuracy(&labels, &truth, a.permute)?);
        let pc = eval::per_class_accuracy(&labels, &truth, n)?;
        println!("per-class accuracy  {}", pc.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "));
    }
    if let Some(e) = &a.edges {
        let g = read_graph(e, Some(labels.len()))?;
        println!("cut weight          {:.6}", eval::cut_weight(&g, &labels));
        println!("tv energy           {:.6}", eval::tv_energy(&g, &labels));
    }
    let n = labels.iter().max().map_or(0, |m| m + 1);
    let sizes = eval::class_sizes(&labels, n);
    println!("class sizes         {}", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "));
    Ok(())
}
