use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::PipelineConfig;
use crate::classify::{
    evaluate, h_alpha, init_zones, semantic_vote, wishart_iterate, ConfusionMatrix, HAlphaField,
    Mapping, WishartRun,
};
use crate::data::io::{load_image, read_labels, write_atomic, write_labels, write_scalar};
use crate::data::render::{log_gray, pauli_image, render, Palette, RgbImage};
use crate::data::span;
use crate::detect::{detect, Detection, Detector};
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, LabelRaster};
use crate::regionmap::{extract_region_map, RegionAnalysis, RegionLabel};
use crate::segment::{mean_shift_superpixels, segment, SegmentationMap, SuperpixelPartition};
use crate::sketch::{
    line_significance, pursue_sketch, select_lines, write_sketch, SegmentLabel, Selection,
    SketchMap,
};

/// Pipeline stage, used to say where a run failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Detect,
    Sketch,
    RegionMap,
    Superpixels,
    Segment,
    Classify,
    Evaluate,
    Artifacts,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Input => "input",
            Stage::Detect => "detect",
            Stage::Sketch => "sketch",
            Stage::RegionMap => "regionmap",
            Stage::Superpixels => "superpixels",
            Stage::Segment => "segment",
            Stage::Classify => "classify",
            Stage::Evaluate => "evaluate",
            Stage::Artifacts => "artifacts",
        };
        f.write_str(s)
    }
}

/// A library error tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait At<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> At<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

pub type StageResult<T> = std::result::Result<T, StageError>;

/// Ground truth for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub labels: LabelRaster,
    pub names: Vec<String>,
    pub ignore: Option<u32>,
}

/// Outputs that do not depend on the region-map or merging parameters.
#[derive(Debug, Clone)]
pub struct Front {
    pub detection: Detection,
    /// Number of traced lines before selection.
    pub candidates: usize,
    pub selection: Selection,
    pub superpixels: SuperpixelPartition,
    pub h_alpha: HAlphaField,
    pub zones: LabelRaster,
    pub wishart: WishartRun,
}

/// Outputs of the region-map, segmentation and voting stages.
#[derive(Debug, Clone)]
pub struct Back {
    pub analysis: Option<RegionAnalysis>,
    pub segmentation: SegmentationMap,
    pub voted: LabelRaster,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub front: Front,
    pub back: Back,
    pub confusion_pre: Option<ConfusionMatrix>,
    pub confusion: Option<ConfusionMatrix>,
    pub diagnostics: Diagnostics,
}

/// Summary numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub width: usize,
    pub height: usize,
    pub looks: f64,
    pub sketch_candidates: usize,
    pub sketch_lines: usize,
    pub sketch_segments: usize,
    pub clg_threshold: f64,
    pub aggregated_segments: usize,
    pub isolated_segments: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub adh_peak: f64,
    pub delta2_below_peak: bool,
    pub groups: usize,
    pub aggregated_pixels: usize,
    pub structural_pixels: usize,
    pub homogenous_pixels: usize,
    pub superpixels: usize,
    pub structural_splits: usize,
    pub hierarchical_merges: usize,
    pub regions: usize,
    pub wishart_iterations: usize,
    pub classes: usize,
    pub accuracy_pre_vote: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Detection energies and thinned edges.
pub fn stage_detect(img: &CoherencyImage, cfg: &PipelineConfig) -> StageResult<Detection> {
    let det = Detector::new(&cfg.detect.bank).at(Stage::Detect)?;
    detect(img, &det, cfg.detect.gradient).at(Stage::Detect)
}

/// Sketch pursuit and CLG selection. Returns the candidate count too.
pub fn stage_sketch(
    img: &CoherencyImage,
    det: &Detection,
    cfg: &PipelineConfig,
) -> (usize, Selection) {
    let mut lines = pursue_sketch(&det.edges, &det.energy, &cfg.sketch.pursuit);
    for l in &mut lines {
        l.clg = line_significance(l, img);
    }
    (
        lines.len(),
        select_lines(lines, img.shape(), cfg.sketch.threshold),
    )
}

/// H/α zones and the Wishart iteration started from them.
pub fn stage_classify(
    img: &CoherencyImage,
    cfg: &PipelineConfig,
) -> StageResult<(HAlphaField, LabelRaster, WishartRun)> {
    let field = h_alpha(img);
    let zones = init_zones(&field, &cfg.classify.zones);
    let run = wishart_iterate(img, &zones, &cfg.classify.wishart).at(Stage::Classify)?;
    Ok((field, zones, run))
}

/// Runs every stage that does not depend on the region-map or merging
/// parameters.
pub fn prepare(img: &CoherencyImage, cfg: &PipelineConfig) -> StageResult<Front> {
    cfg.validate().at(Stage::Input)?;
    let detection = stage_detect(img, cfg)?;
    let (candidates, selection) = stage_sketch(img, &detection, cfg);
    let superpixels =
        mean_shift_superpixels(img, &cfg.segment.mean_shift).at(Stage::Superpixels)?;
    let (h_alpha, zones, wishart) = stage_classify(img, cfg)?;
    Ok(Front {
        detection,
        candidates,
        selection,
        superpixels,
        h_alpha,
        zones,
        wishart,
    })
}

/// Region map, segmentation and voting on top of a prepared front.
pub fn finish(img: &CoherencyImage, front: &Front, cfg: &PipelineConfig) -> StageResult<Back> {
    let analysis = if cfg.stages.region_map {
        Some(extract_region_map(&front.selection.map, &cfg.region).at(Stage::RegionMap)?)
    } else {
        None
    };
    let segmentation = match &analysis {
        Some(a) => segment(
            img,
            &front.superpixels,
            a,
            &front.detection.energy.energy,
            cfg.region.block_width,
            &cfg.segment,
        )
        .at(Stage::Segment)?,
        None => SegmentationMap::unmerged(front.superpixels.clone()),
    };
    let voted = if cfg.stages.semantic_vote {
        semantic_vote(&front.wishart.map.labels, segmentation.region_id()).at(Stage::Classify)?
    } else {
        front.wishart.map.labels.clone()
    };
    Ok(Back {
        analysis,
        segmentation,
        voted,
    })
}

/// Confusion of a class raster against the truth.
pub fn score(labels: &LabelRaster, truth: &Truth) -> StageResult<ConfusionMatrix> {
    evaluate(
        labels,
        &truth.labels,
        &truth.names,
        truth.ignore,
        &Mapping::Auto,
    )
    .at(Stage::Evaluate)
}

fn diagnostics(
    img: &CoherencyImage,
    front: &Front,
    back: &Back,
    pre: &Option<ConfusionMatrix>,
    post: &Option<ConfusionMatrix>,
) -> Diagnostics {
    let (w, h) = img.shape();
    let map = &front.selection.map;
    let a = back.analysis.as_ref();
    let stats = a.map(|a| &a.labeling.stats);
    let count = |l: SegmentLabel| a.map_or(0, |a| a.labeling.indices(l).len());
    let pixels = |l: RegionLabel| a.map_or(0, |a| a.region_map.count(l));
    let peak = stats
        .and_then(|s| s.adh.as_ref())
        .map_or(0.0, |h| h.peak_value());
    let delta2 = stats.map_or(0.0, |s| s.delta2);
    Diagnostics {
        width: w,
        height: h,
        looks: img.looks(),
        sketch_candidates: front.candidates,
        sketch_lines: map.lines.len(),
        sketch_segments: map.segment_count(),
        clg_threshold: map.threshold,
        aggregated_segments: count(SegmentLabel::Aggregated),
        isolated_segments: count(SegmentLabel::Isolated),
        delta1: stats.map_or(0.0, |s| s.delta1),
        delta2,
        adh_peak: peak,
        delta2_below_peak: stats.is_some_and(|s| s.adh.is_some()) && delta2 < peak,
        groups: a.map_or(0, |a| a.groups.len()),
        aggregated_pixels: pixels(RegionLabel::Aggregated),
        structural_pixels: pixels(RegionLabel::Structural),
        homogenous_pixels: if a.is_some() {
            pixels(RegionLabel::Homogenous)
        } else {
            w * h
        },
        superpixels: back.segmentation.superpixels,
        structural_splits: back.segmentation.splits,
        hierarchical_merges: back.segmentation.merges.len(),
        regions: back.segmentation.len(),
        wishart_iterations: front.wishart.changes.len(),
        classes: front.wishart.map.class_count(),
        accuracy_pre_vote: pre.as_ref().map(|c| c.average_accuracy()),
        accuracy: post.as_ref().map(|c| c.average_accuracy()),
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> StageResult<()> {
    write_atomic(&dir.join(name), bytes).at(Stage::Artifacts)
}

/// Draws the sketch segments over `base`, coloured by label.
pub fn draw_sketch(base: &mut RgbImage, map: &SketchMap) {
    for s in map.segments() {
        let color = match s.label {
            SegmentLabel::Aggregated => [0, 0, 255],
            SegmentLabel::Isolated => [255, 0, 0],
            SegmentLabel::Unlabeled => [0, 255, 0],
        };
        base.draw_segments(&[((s.head.x, s.head.y), (s.tail.x, s.tail.y))], color);
    }
}

fn sketch_overlay(img: &CoherencyImage, map: &SketchMap) -> RgbImage {
    let mut out = log_gray(&span(img));
    draw_sketch(&mut out, map);
    out
}

fn write_front(dir: &Path, img: &CoherencyImage, front: &Front) -> StageResult<()> {
    let a = Stage::Artifacts;
    log_gray(&span(img)).save(&dir.join("span.ppm")).at(a)?;
    pauli_image(img, 0.99)
        .at(a)?
        .save(&dir.join("pauli.ppm"))
        .at(a)?;
    let d = &front.detection;
    for (name, field) in [
        ("energy_edge", &d.fused_edge),
        ("energy_line", &d.fused_line),
        ("energy", &d.energy),
    ] {
        write_scalar(&dir.join(format!("{name}.sca")), &field.energy).at(a)?;
        render(&field.energy, Palette::Gray)
            .save(&dir.join(format!("{name}.ppm")))
            .at(a)?;
    }
    render(&d.edges.map(|&b| u8::from(b)), Palette::Gray)
        .save(&dir.join("edges.ppm"))
        .at(a)?;
    write(
        dir,
        "sketch.txt",
        write_sketch(&front.selection.map).as_bytes(),
    )?;
    sketch_overlay(img, &front.selection.map)
        .save(&dir.join("sketch.ppm"))
        .at(a)?;
    write_labels(&dir.join("superpixels.lab"), &front.superpixels.region_id).at(a)?;
    render(&front.superpixels.region_id, Palette::Labels)
        .save(&dir.join("superpixels.ppm"))
        .at(a)?;
    write_scalar(&dir.join("entropy.sca"), &front.h_alpha.entropy).at(a)?;
    write_scalar(&dir.join("alpha.sca"), &front.h_alpha.alpha).at(a)?;
    write_labels(&dir.join("zones.lab"), &front.zones).at(a)?;
    write_labels(&dir.join("class_wishart.lab"), &front.wishart.map.labels).at(a)?;
    render(&front.wishart.map.labels, Palette::Labels)
        .save(&dir.join("class_wishart.ppm"))
        .at(a)
}

fn write_back(dir: &Path, back: &Back, front: &Front) -> StageResult<()> {
    let a = Stage::Artifacts;
    if let Some(an) = &back.analysis {
        let semantic = an.semantic_sketch(&front.selection.map);
        write(
            dir,
            "semantic_sketch.txt",
            write_sketch(&semantic).as_bytes(),
        )?;
        an.region_map
            .to_rgb()
            .save(&dir.join("region_map.ppm"))
            .at(a)?;
        write_labels(
            &dir.join("region_map.lab"),
            &an.region_map.labels.map(|l| u32::from(l.code())),
        )
        .at(a)?;
        write_labels(&dir.join("aggregated_id.lab"), &an.region_map.aggregated_id).at(a)?;
        write(
            dir,
            "aggregation.tsv",
            an.labeling.stats.to_table().as_bytes(),
        )?;
    }
    write_labels(&dir.join("segmentation.lab"), back.segmentation.region_id()).at(a)?;
    render(back.segmentation.region_id(), Palette::Labels)
        .save(&dir.join("segmentation.ppm"))
        .at(a)?;
    write(dir, "regions.csv", back.segmentation.to_csv().as_bytes())?;
    write_labels(&dir.join("class_voted.lab"), &back.voted).at(a)?;
    render(&back.voted, Palette::Labels)
        .save(&dir.join("class_voted.ppm"))
        .at(a)
}

/// Runs the whole pipeline. With `out` set, each stage's artifacts are
/// written as soon as the stage completes, so a failure leaves the earlier
/// ones in place.
pub fn run(
    img: &CoherencyImage,
    truth: Option<&Truth>,
    cfg: &PipelineConfig,
    out: Option<&Path>,
) -> StageResult<RunOutput> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .map_err(Error::from)
            .at(Stage::Artifacts)?;
        write(dir, "config.toml", cfg.to_toml().as_bytes())?;
    }
    if let Some(t) = truth {
        t.labels.ensure_shape(img.shape()).at(Stage::Input)?;
    }
    let front = prepare(img, cfg)?;
    if let Some(dir) = out {
        write_front(dir, img, &front)?;
    }
    let back = finish(img, &front, cfg)?;
    if let Some(dir) = out {
        write_back(dir, &back, &front)?;
    }
    let (pre, post) = match truth {
        Some(t) => (
            Some(score(&front.wishart.map.labels, t)?),
            Some(score(&back.voted, t)?),
        ),
        None => (None, None),
    };
    let diagnostics = diagnostics(img, &front, &back, &pre, &post);
    if let Some(dir) = out {
        if let (Some(pre), Some(post)) = (&pre, &post) {
            write(dir, "confusion_pre.csv", pre.to_csv().as_bytes())?;
            write(dir, "confusion.csv", post.to_csv().as_bytes())?;
        }
        let text = toml::to_string_pretty(&diagnostics).expect("diagnostics serialise");
        write(dir, "diagnostics.toml", text.as_bytes())?;
    }
    Ok(RunOutput {
        front,
        back,
        confusion_pre: pre,
        confusion: post,
        diagnostics,
    })
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K,
    Nr,
}

impl SweepParam {
    fn apply(self, cfg: &mut PipelineConfig, value: usize) {
        match self {
            SweepParam::K => cfg.region.k = value,
            SweepParam::Nr => cfg.segment.n_r = value,
        }
    }
}

/// Average accuracy for each value of the parameter. The stages ahead of
/// the region map run once. A failing value gives `None` and the sweep
/// goes on.
pub fn sweep(
    img: &CoherencyImage,
    truth: &Truth,
    cfg: &PipelineConfig,
    param: SweepParam,
    values: &[usize],
) -> StageResult<Vec<(usize, Option<f64>)>> {
    let front = prepare(img, cfg)?;
    Ok(values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            param.apply(&mut c, v);
            let acc = c
                .validate()
                .at(Stage::Input)
                .and_then(|_| finish(img, &front, &c))
                .and_then(|b| score(&b.voted, truth))
                .map(|m| m.average_accuracy());
            if let Err(e) = &acc {
                log::warn!("sweep value {v}: {e}");
            }
            (v, acc.ok())
        })
        .collect())
}

/// CSV of sweep rows; failed values leave the accuracy empty.
pub fn sweep_csv(name: &str, rows: &[(usize, Option<f64>)]) -> String {
    let mut s = format!("{name},average_accuracy\n");
    for (v, a) in rows {
        match a {
            Some(a) => s.push_str(&format!("{v},{a:.4}\n")),
            None => s.push_str(&format!("{v},\n")),
        }
    }
    s
}

/// Loads the configured image and truth, or samples the synthetic scene.
pub fn load_input(cfg: &PipelineConfig) -> StageResult<(CoherencyImage, Option<Truth>)> {
    let input = &cfg.input;
    match &input.path {
        Some(path) => {
            let mut img = load_image(path, input.format).at(Stage::Input)?;
            if let Some(l) = input.looks {
                img = CoherencyImage::new(img.pixels().clone(), l).at(Stage::Input)?;
            }
            let truth = match &input.truth {
                Some(p) => {
                    let labels = read_labels(p).at(Stage::Input)?;
                    let n = labels
                        .as_slice()
                        .iter()
                        .copied()
                        .filter(|&l| Some(l) != input.ignore_label)
                        .max()
                        .map_or(0, |m| m as usize + 1);
                    let names = if input.truth_names.len() >= n {
                        input.truth_names.clone()
                    } else {
                        (0..n).map(|i| format!("class{i}")).collect()
                    };
                    Some(Truth {
                        labels,
                        names,
                        ignore: input.ignore_label,
                    })
                }
                None => None,
            };
            Ok((img, truth))
        }
        None => {
            let s = &input.synthetic;
            let scene = s
                .layout
                .sample(s.width, s.height, s.looks, cfg.seed)
                .at(Stage::Input)?;
            let names = s
                .layout
                .build(s.width, s.height)
                .at(Stage::Input)?
                .truth_names;
            Ok((
                scene.image,
                Some(Truth {
                    labels: scene.truth,
                    names,
                    ignore: None,
                }),
            ))
        }
    }
}
