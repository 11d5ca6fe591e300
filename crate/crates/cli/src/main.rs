//! `polsem` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
//! pipeline stage fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polsem::classify::{evaluate, Mapping};
use polsem::data::io::{
    read_coherency, read_labels, read_scalar, write_atomic, write_coherency, write_labels,
    ImageFormat,
};
use polsem::data::render::{log_gray, pauli_image, render, Palette, RgbImage};
use polsem::data::{span, Layout};
use polsem::error::Error;
use polsem::pipeline::{self, PipelineConfig, Stage, StageError, SweepParam};
use polsem::sketch::read_sketch;

#[derive(Parser)]
#[command(
    name = "polsem",
    version,
    about = "Semantic segmentation and classification of PolSAR coherency images"
)]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write every artifact.
    Run(RunArgs),
    /// Generate a planted synthetic scene with its truth.
    Synth(SynthArgs),
    /// Average accuracy over a range of K or N_r.
    Sweep(SweepArgs),
    /// Re-render a saved artifact as a PPM image.
    Render(RenderArgs),
    /// Confusion matrix of a saved class map against a truth map.
    Eval(EvalArgs),
}

/// Overrides applied on top of the config file.
#[derive(Args)]
struct ConfigArgs {
    /// Config file. A missing file is created holding the full defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Coherency image (a container file or a T3 directory).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    looks: Option<f64>,
    /// Ground-truth label raster.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    truth_names: Option<Vec<String>>,
    #[arg(long)]
    ignore_label: Option<u32>,
    /// Detector scales in pixels, comma separated.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long)]
    orientations: Option<usize>,
    /// Fixed CLG threshold instead of the histogram rule.
    #[arg(long)]
    clg: Option<f64>,
    /// Neighbour count K of the aggregation degree.
    #[arg(short = 'k', long)]
    k: Option<usize>,
    #[arg(long)]
    theta0: Option<f64>,
    /// Aggregation histogram mass ratio r.
    #[arg(long)]
    mass_ratio: Option<f64>,
    #[arg(long)]
    side_fraction: Option<f64>,
    #[arg(long)]
    block_width: Option<usize>,
    #[arg(long)]
    h_spatial: Option<f64>,
    #[arg(long)]
    h_range: Option<f64>,
    /// Regions kept per homogenous subspace.
    #[arg(long)]
    n_r: Option<usize>,
    /// Keep the infeasible H/α zone as its own class.
    #[arg(long)]
    keep_infeasible: bool,
    /// Skip the region map (superpixels, Wishart and vote only).
    #[arg(long)]
    no_region_map: bool,
    #[arg(long)]
    no_vote: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long, env = "POLSEM_OUTPUT_DIR")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Container,
    T3Dir,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Uniform,
    Edge,
    Line,
    Dots,
    Mosaic,
    Urban,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    layout: LayoutArg,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 6.0)]
    contrast_db: f64,
    #[arg(long, default_value_t = 4)]
    looks: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 32)]
    tile: usize,
    #[arg(long, default_value_t = 3)]
    line_width: usize,
    #[arg(long, default_value_t = 6)]
    dot: usize,
    #[arg(long, default_value_t = 12)]
    pitch: usize,
    #[arg(short, long, env = "POLSEM_OUTPUT_DIR", default_value = "polsem-scene")]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    K,
    Nr,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: ParamArg,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PaletteArg {
    Gray,
    Log,
    Labels,
    RegionMap,
}

#[derive(Args)]
struct RenderArgs {
    /// `.coh`, `.sca`, `.lab` or sketch `.txt` artifact.
    file: PathBuf,
    /// Palette for rasters; picked from the file kind when absent.
    #[arg(long, value_enum)]
    palette: Option<PaletteArg>,
    /// Output PPM; defaults to the input with a `.ppm` extension.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    #[arg(long)]
    ignore_label: Option<u32>,
    /// Truth class of every predicted cluster; greedy overlap when absent.
    #[arg(long, value_delimiter = ',')]
    mapping: Option<Vec<u32>>,
    /// CSV path; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Stage(StageError),
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Stage(e)
    }
}

fn stage(stage: Stage) -> impl Fn(Error) -> Failure {
    move |source| Failure::Stage(StageError { stage, source })
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Render(a) => cmd_render(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: config: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

/// Loads (or creates) the config file and applies the flags.
fn build_config(a: &ConfigArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) if p.exists() => PipelineConfig::load(p).map_err(config_error)?,
        Some(p) => {
            let cfg = PipelineConfig::default();
            write_atomic(p, cfg.to_toml().as_bytes()).map_err(config_error)?;
            log::info!("wrote default config to {}", p.display());
            cfg
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = &a.input {
        cfg.input.path = Some(v.clone());
    }
    if let Some(f) = a.format {
        cfg.input.format = match f {
            FormatArg::Container => ImageFormat::Container,
            FormatArg::T3Dir => ImageFormat::T3Dir,
        };
    }
    if let Some(v) = a.looks {
        cfg.input.looks = Some(v);
    }
    if let Some(v) = &a.truth {
        cfg.input.truth = Some(v.clone());
    }
    if let Some(v) = &a.truth_names {
        cfg.input.truth_names = v.clone();
    }
    if let Some(v) = a.ignore_label {
        cfg.input.ignore_label = Some(v);
    }
    if let Some(v) = &a.scales {
        cfg.detect.bank.scales = v.clone();
    }
    if let Some(v) = a.orientations {
        cfg.detect.bank.orientations = v;
    }
    if let Some(v) = a.clg {
        cfg.sketch.threshold = polsem::sketch::ThresholdMode::Fixed(v);
    }
    let r = &mut cfg.region;
    r.k = a.k.unwrap_or(r.k);
    r.theta0 = a.theta0.unwrap_or(r.theta0);
    r.mass_ratio = a.mass_ratio.unwrap_or(r.mass_ratio);
    r.side_fraction = a.side_fraction.unwrap_or(r.side_fraction);
    r.block_width = a.block_width.unwrap_or(r.block_width);
    let m = &mut cfg.segment.mean_shift;
    m.h_spatial = a.h_spatial.unwrap_or(m.h_spatial);
    m.h_range = a.h_range.unwrap_or(m.h_range);
    cfg.segment.n_r = a.n_r.unwrap_or(cfg.segment.n_r);
    cfg.classify.zones.keep_infeasible |= a.keep_infeasible;
    cfg.stages.region_map &= !a.no_region_map;
    cfg.stages.semantic_vote &= !a.no_vote;
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if let Some(v) = &a.output {
        cfg.output_dir = v.clone();
    }
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Outcome {
    let cfg = build_config(&a.config)?;
    let (img, truth) = pipeline::load_input(&cfg)?;
    let out = pipeline::run(&img, truth.as_ref(), &cfg, Some(&cfg.output_dir))?;
    let d = &out.diagnostics;
    println!("regions {}  classes {}", d.regions, d.classes);
    if let (Some(pre), Some(post)) = (d.accuracy_pre_vote, d.accuracy) {
        println!("average accuracy {pre:.2}% before vote, {post:.2}% after");
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Outcome {
    let layout = match a.layout {
        LayoutArg::Uniform => Layout::Uniform,
        LayoutArg::Edge => Layout::TwoClassEdge {
            contrast_db: a.contrast_db,
        },
        LayoutArg::Line => Layout::BrightLine {
            contrast_db: a.contrast_db,
            line_width: a.line_width,
        },
        LayoutArg::Dots => Layout::DotGrid {
            contrast_db: a.contrast_db,
            dot: a.dot,
            pitch: a.pitch,
        },
        LayoutArg::Mosaic => Layout::Mosaic {
            classes: a.classes,
            tile: a.tile,
        },
        LayoutArg::Urban => Layout::Urban {
            contrast_db: a.contrast_db,
        },
    };
    let planted = layout.build(a.width, a.height).map_err(config_error)?;
    let scene = layout
        .sample(a.width, a.height, a.looks, a.seed)
        .map_err(config_error)?;
    let dir = &a.output;
    let io = stage(Stage::Artifacts);
    fs::create_dir_all(dir).map_err(|e| io(e.into()))?;
    write_coherency(&dir.join("scene.coh"), &scene.image).map_err(&io)?;
    write_labels(&dir.join("truth.lab"), &scene.truth).map_err(&io)?;
    render(&scene.truth, Palette::Labels)
        .save(&dir.join("truth.ppm"))
        .map_err(&io)?;
    log_gray(&span(&scene.image))
        .save(&dir.join("span.ppm"))
        .map_err(&io)?;
    pauli_image(&scene.image, 0.99)
        .map_err(&io)?
        .save(&dir.join("pauli.ppm"))
        .map_err(&io)?;

    // a ready-to-run config for the scene
    let mut cfg = PipelineConfig::default();
    cfg.input.path = Some(dir.join("scene.coh"));
    cfg.input.truth = Some(dir.join("truth.lab"));
    cfg.input.truth_names = planted.truth_names.clone();
    cfg.seed = a.seed;
    cfg.output_dir = dir.join("run");
    write_atomic(&dir.join("run.toml"), cfg.to_toml().as_bytes()).map_err(&io)?;

    let mut counts = vec![0usize; planted.truth_names.len()];
    for &t in scene.truth.as_slice() {
        counts[t as usize] += 1;
    }
    for (name, n) in planted.truth_names.iter().zip(counts) {
        println!("{name}: {n} px");
    }
    println!("scene in {}", dir.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    if a.step == 0 || a.from > a.to {
        return Err(Failure::Config(
            "sweep range needs from <= to and step >= 1".into(),
        ));
    }
    let cfg = build_config(&a.config)?;
    let (img, truth) = pipeline::load_input(&cfg)?;
    let truth = truth.ok_or_else(|| Failure::Config("sweep needs a truth raster".into()))?;
    let (param, name) = match a.param {
        ParamArg::K => (SweepParam::K, "k"),
        ParamArg::Nr => (SweepParam::Nr, "n_r"),
    };
    let values: Vec<usize> = (a.from..=a.to).step_by(a.step).collect();
    let rows = pipeline::sweep(&img, &truth, &cfg, param, &values)?;
    let csv = pipeline::sweep_csv(name, &rows);
    let io = stage(Stage::Artifacts);
    fs::create_dir_all(&cfg.output_dir).map_err(|e| io(e.into()))?;
    let path = cfg.output_dir.join(format!("sweep_{name}.csv"));
    write_atomic(&path, csv.as_bytes()).map_err(&io)?;
    print!("{csv}");
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Outcome {
    let io = stage(Stage::Artifacts);
    let ext = a.file.extension().and_then(|e| e.to_str()).unwrap_or("");
    let palette = |default: Palette| match a.palette {
        None => default,
        Some(PaletteArg::Gray | PaletteArg::Log) => Palette::Gray,
        Some(PaletteArg::Labels) => Palette::Labels,
        Some(PaletteArg::RegionMap) => Palette::RegionMap,
    };
    let image: RgbImage = match ext {
        "coh" => {
            let img = read_coherency(&a.file).map_err(&io)?;
            match a.palette {
                Some(PaletteArg::Log | PaletteArg::Gray) => log_gray(&span(&img)),
                _ => pauli_image(&img, 0.99).map_err(&io)?,
            }
        }
        "sca" => {
            let r = read_scalar(&a.file).map_err(&io)?;
            match a.palette {
                Some(PaletteArg::Log) => log_gray(&r),
                _ => render(&r, palette(Palette::Gray)),
            }
        }
        "lab" => {
            let r = read_labels(&a.file).map_err(&io)?;
            let region = a.file.file_stem().is_some_and(|s| s == "region_map");
            render(
                &r,
                palette(if region {
                    Palette::RegionMap
                } else {
                    Palette::Labels
                }),
            )
        }
        "txt" => {
            let text = fs::read_to_string(&a.file).map_err(|e| io(e.into()))?;
            let map = read_sketch(&text).map_err(&io)?;
            let (w, h) = map.shape;
            let mut canvas = RgbImage {
                width: w,
                height: h,
                data: vec![[0, 0, 0]; w * h],
            };
            pipeline::draw_sketch(&mut canvas, &map);
            canvas
        }
        _ => {
            return Err(Failure::Config(format!(
                "cannot render {}",
                a.file.display()
            )))
        }
    };
    let out = a.output.unwrap_or_else(|| a.file.with_extension("ppm"));
    if out == a.file {
        return Err(Failure::Config("output would overwrite the input".into()));
    }
    image.save(&out).map_err(&io)?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let input = stage(Stage::Input);
    let pred = read_labels(&a.pred).map_err(&input)?;
    let truth = read_labels(&a.truth).map_err(&input)?;
    let n = truth
        .as_slice()
        .iter()
        .copied()
        .filter(|&t| Some(t) != a.ignore_label)
        .max()
        .map_or(0, |m| m as usize + 1);
    let names = a
        .names
        .unwrap_or_else(|| (0..n).map(|i| format!("class{i}")).collect());
    let mapping = a.mapping.map_or(Mapping::Auto, Mapping::Given);
    let m = evaluate(&pred, &truth, &names, a.ignore_label, &mapping)
        .map_err(stage(Stage::Evaluate))?;
    let csv = m.to_csv();
    match &a.output {
        Some(p) => {
            write_atomic(p, csv.as_bytes()).map_err(stage(Stage::Artifacts))?;
            println!(
                "average accuracy {:.2}%, overall {:.2}%",
                m.average_accuracy(),
                m.overall_accuracy()
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}
