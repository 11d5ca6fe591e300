use polsem::data::Layout;
use polsem::pipeline::{load_input, run, sweep, sweep_csv, PipelineConfig, SweepParam};

fn small_urban() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.input.synthetic.layout = Layout::Urban { contrast_db: 10.0 };
    cfg.input.synthetic.width = 96;
    cfg.input.synthetic.height = 96;
    cfg
}

#[test]
fn end_to_end_writes_every_artifact() {
    let cfg = small_urban();
    let (img, truth) = load_input(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&img, truth.as_ref(), &cfg, Some(dir.path())).unwrap();
    for name in [
        "config.toml",
        "span.ppm",
        "pauli.ppm",
        "energy.sca",
        "edges.ppm",
        "sketch.txt",
        "sketch.ppm",
        "region_map.ppm",
        "region_map.lab",
        "aggregation.tsv",
        "superpixels.lab",
        "segmentation.lab",
        "regions.csv",
        "class_wishart.lab",
        "class_voted.ppm",
        "confusion_pre.csv",
        "confusion.csv",
        "diagnostics.toml",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let d = &out.diagnostics;
    assert!(d.accuracy.is_some() && d.accuracy_pre_vote.is_some());
    assert!(d.regions <= d.superpixels + d.structural_splits);
    let embedded = std::fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert_eq!(PipelineConfig::from_toml(&embedded).unwrap(), cfg);
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let cfg = small_urban();
    let (img, truth) = load_input(&cfg).unwrap();
    let a = run(&img, truth.as_ref(), &cfg, None).unwrap();
    let b = run(&img, truth.as_ref(), &cfg, None).unwrap();
    assert_eq!(a.back.voted, b.back.voted);
    assert_eq!(
        a.back.segmentation.region_id(),
        b.back.segmentation.region_id()
    );
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn disabled_stages_fall_back() {
    let mut cfg = small_urban();
    cfg.stages.region_map = false;
    cfg.stages.semantic_vote = false;
    let (img, truth) = load_input(&cfg).unwrap();
    let out = run(&img, truth.as_ref(), &cfg, None).unwrap();
    assert!(out.back.analysis.is_none());
    assert_eq!(out.back.voted, out.front.wishart.map.labels);
    assert_eq!(out.back.segmentation.len(), out.front.superpixels.len());
}

#[test]
fn sweep_keeps_going_past_bad_values() {
    let cfg = small_urban();
    let (img, truth) = load_input(&cfg).unwrap();
    let rows = sweep(
        &img,
        truth.as_ref().unwrap(),
        &cfg,
        SweepParam::Nr,
        &[0, 10, 40],
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].1.is_none());
    assert!(rows[1].1.is_some() && rows[2].1.is_some());
    let csv = sweep_csv("n_r", &rows);
    assert!(csv.starts_with("n_r,average_accuracy\n0,\n"));
}
