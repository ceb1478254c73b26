use tvseg::config::RunConfig;
use tvseg::data::{self, sample_supervision, supervision_pairs, SupervisionStrategy};
use tvseg::eval::accuracy;
use tvseg::pipeline;
use tvseg::presets::Preset;
use tvseg::solver::SizeSpec;
use tvseg::Error;

#[test]
fn small_three_moons_segment() {
    let d = data::three_moons(80, 10, 0.14, 5).unwrap();
    let nodes = sample_supervision(&d, 0.1, &SupervisionStrategy::Uniform, 6).unwrap();
    let pairs = supervision_pairs(&d, &nodes).unwrap();
    let cfg = Preset::get("three-moons").unwrap().config;
    let run = pipeline::segment(d.features.view(), &pairs, 3, &cfg).unwrap();
    assert!(run.result.converged);
    let acc = accuracy(&run.result.labels, d.labels.as_deref().unwrap(), false).unwrap();
    assert!(acc > 0.9, "accuracy {acc}");
    for &(x, l) in &pairs {
        assert_eq!(run.result.labels[x], l);
    }
}

#[test]
fn interval_sizes_are_respected() {
    let d = data::three_moons(60, 10, 0.14, 1).unwrap();
    let nodes = sample_supervision(&d, 0.05, &SupervisionStrategy::Uniform, 2).unwrap();
    let pairs = supervision_pairs(&d, &nodes).unwrap();
    let mut cfg = Preset::get("three-moons").unwrap().config;
    cfg.apply_toml("[size]\nmode = \"interval\"\nlower = [55, 55, 55]\nupper = [65, 65, 65]\n").unwrap();
    let run = pipeline::segment(d.features.view(), &pairs, 3, &cfg).unwrap();
    let sizes = tvseg::eval::class_sizes(&run.result.labels, 3);
    // the relaxed sizes obey the bounds; rounding may move a handful of nodes
    for (i, col) in run.result.u.columns().into_iter().enumerate() {
        let s = col.sum();
        assert!((55.0 - 1e-3..=65.0 + 1e-3).contains(&s), "class {i}: relaxed size {s}, rounded {sizes:?}");
    }
}

#[test]
fn two_moons_unsupervised() {
    let d = data::two_moons(150, 2, 0.05, 3).unwrap();
    let cfg = Preset::get("two-moons").unwrap().config;
    let run = pipeline::unsupervised(d.features.view(), &cfg, 4).unwrap();
    let acc = accuracy(&run.run.result.labels, d.labels.as_deref().unwrap(), true).unwrap();
    assert!(acc > 0.95, "accuracy {acc}");
    assert!(run.alpha > 0.0);
}

#[test]
fn config_errors() {
    let mut cfg = RunConfig::default();
    assert!(matches!(cfg.apply_toml("c = -1.0"), Ok(())));
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    let mut cfg = RunConfig::default();
    assert!(matches!(cfg.apply_toml("no_such_key = 1"), Err(Error::InvalidConfig(_))));
    let mut cfg = Preset::get("two-moons").unwrap().config;
    cfg.size = SizeSpec::Exact(vec![150.0, 150.0]);
    let d = data::two_moons(150, 2, 0.05, 3).unwrap();
    assert!(matches!(pipeline::unsupervised(d.features.view(), &cfg, 0), Err(Error::InvalidConfig(_))));
}

#[test]
fn preset_data_shapes() {
    let d = Preset::get("three-moons").unwrap().generate(0).unwrap().unwrap();
    assert_eq!((d.len(), d.features.ncols(), d.n_classes), (3000, 100, 3));
    assert!(Preset::get("mnist").unwrap().generate(0).unwrap().is_none());
}
