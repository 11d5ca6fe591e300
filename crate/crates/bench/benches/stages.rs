use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use polsem::classify::{h_alpha, init_zones, wishart_iterate};
use polsem::data::Layout;
use polsem::detect::{detect, Detector};
use polsem::pipeline::{load_input, run, stage_sketch, PipelineConfig};
use polsem::regionmap::extract_region_map;
use polsem::segment::mean_shift_superpixels;

fn config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.input.synthetic.layout = Layout::Urban { contrast_db: 10.0 };
    cfg.input.synthetic.width = 128;
    cfg.input.synthetic.height = 128;
    cfg
}

fn stages(c: &mut Criterion) {
    let cfg = config();
    let (img, truth) = load_input(&cfg).unwrap();
    let det = Detector::new(&cfg.detect.bank).unwrap();
    let detection = detect(&img, &det, cfg.detect.gradient).unwrap();
    let (_, selection) = stage_sketch(&img, &detection, &cfg);

    let mut g = c.benchmark_group("urban-128");
    g.sample_size(10);
    g.bench_function("detect", |b| {
        b.iter(|| detect(&img, &det, cfg.detect.gradient).unwrap())
    });
    g.bench_function("sketch", |b| {
        b.iter(|| stage_sketch(&img, &detection, &cfg))
    });
    g.bench_function("region map", |b| {
        b.iter(|| extract_region_map(&selection.map, &cfg.region).unwrap())
    });
    g.bench_function("mean shift", |b| {
        b.iter(|| mean_shift_superpixels(&img, &cfg.segment.mean_shift).unwrap())
    });
    g.bench_function("h/alpha wishart", |b| {
        b.iter_batched(
            || init_zones(&h_alpha(&img), &cfg.classify.zones),
            |zones| wishart_iterate(&img, &zones, &cfg.classify.wishart).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("pipeline", |b| {
        b.iter(|| run(&img, truth.as_ref(), &cfg, None).unwrap())
    });
    g.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
