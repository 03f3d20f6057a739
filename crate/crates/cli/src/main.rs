//! `lmw`: segment images, generate phantoms, compare against a global
//! threshold, and score label maps.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on an I/O or data error.

mod io;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use lmw_core::{
    build_band_tree_with, evaluate, make_phantom, otsu_threshold, quantize, segment, segment_iterative, Connectivity,
    GrayImage, IterateConfig, PhantomKind, Predicate, SegmentConfig, SegmentationResult,
};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lmw", version, about = "Local-minimal-width band segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment an image (or every image in a directory).
    Segment(SegmentCmd),
    /// Render a synthetic phantom and its ground-truth labels.
    Phantom(PhantomCmd),
    /// Segment an image and threshold it globally, then summarize both.
    Compare(CompareCmd),
    /// Score a predicted label map against ground truth (JSON to stdout).
    Metrics(MetricsCmd),
}

#[derive(Args)]
struct SegmentOpts {
    /// Number of gray grades.
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    grades: u32,
    /// Treat dark objects on a bright background.
    #[arg(long)]
    invert: bool,
    /// Re-segment objects that fail the predicate inside their own bounds.
    #[arg(long)]
    iterative: bool,
    #[arg(long, default_value_t = 5)]
    max_iter: u32,
    /// `max-area-fraction:<f>` or `min-contrast:<c>`.
    #[arg(long, default_value = "max-area-fraction:0.2", value_parser = parse_predicate)]
    predicate: Predicate,
    /// Pixel adjacency of bands.
    #[arg(long, default_value = "4", value_parser = parse_connectivity)]
    connectivity: Connectivity,
    /// Drop objects smaller than this many pixels.
    #[arg(long, default_value_t = 1)]
    min_area: usize,
    /// Keep objects that touch the image border.
    #[arg(long)]
    keep_border: bool,
    /// Worker threads (0 = all cores); outputs do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct SegmentCmd {
    /// PGM or grayscale PNG, or a directory of them.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    opts: SegmentOpts,
    /// Contours as JSON.
    #[arg(long)]
    out_contours: Option<PathBuf>,
    /// Object labels as a 16-bit PGM.
    #[arg(long)]
    out_labels: Option<PathBuf>,
    /// Per-object statistics as JSON.
    #[arg(long)]
    out_objects: Option<PathBuf>,
    /// Contours drawn over the dimmed input (PGM, or PNG by extension).
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Band tree as JSON.
    #[arg(long)]
    dump_tree: Option<PathBuf>,
    /// Output directory when `--input` is a directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PhantomCmd {
    /// Phantom description as JSON: {kind, seed, width, height, params}.
    #[arg(long, conflicts_with_all = ["kind", "width", "height", "seed", "param"])]
    spec: Option<PathBuf>,
    #[arg(long, required_unless_present = "spec", value_parser = parse_kind)]
    kind: Option<PhantomKind>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parameter override `name=value`, repeatable.
    #[arg(long, value_name = "NAME=VALUE")]
    param: Vec<String>,
    /// Image output (PGM, or PNG by extension).
    #[arg(long)]
    out_image: PathBuf,
    /// Ground-truth labels as a 16-bit PGM.
    #[arg(long)]
    out_truth: Option<PathBuf>,
    /// The resolved specification as JSON.
    #[arg(long)]
    out_spec: Option<PathBuf>,
}

#[derive(Args)]
struct CompareCmd {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    opts: SegmentOpts,
    /// Segmentation labels as a 16-bit PGM.
    #[arg(long)]
    out_lmw: Option<PathBuf>,
    /// Threshold components as a 16-bit PGM.
    #[arg(long)]
    out_otsu: Option<PathBuf>,
    /// Ground truth to score both label maps against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Summary JSON (stdout when absent).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsCmd {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

fn parse_predicate(s: &str) -> Result<Predicate, String> {
    s.parse().map_err(|e: lmw_core::SegmentError| e.to_string())
}

fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    s.parse()
        .ok()
        .and_then(Connectivity::from_count)
        .ok_or_else(|| format!("expected 4 or 8, got {s:?}"))
}

fn parse_kind(s: &str) -> Result<PhantomKind, String> {
    s.parse().map_err(|e: lmw_core::PhantomError| e.to_string())
}

impl SegmentOpts {
    fn config(&self) -> SegmentConfig {
        SegmentConfig {
            n_grades: self.grades,
            invert: self.invert,
            connectivity: self.connectivity,
            min_object_area: self.min_area,
            drop_border_objects: !self.keep_border,
            ..SegmentConfig::default()
        }
    }

    fn run(&self, img: &GrayImage) -> Result<SegmentationResult> {
        let config = self.config();
        let result = if self.iterative {
            let iterate = IterateConfig {
                predicate: self.predicate,
                max_iter: self.max_iter,
            };
            segment_iterative(img, &config, &iterate)
        } else {
            segment(img, &config)
        };
        Ok(result?)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build()?)
    }
}

fn summary_line(name: &str, img: &GrayImage, r: &SegmentationResult) -> String {
    let t = &r.tree_summary;
    format!(
        "{name}: {}x{}, grades {}, {} bands ({} virtual), {} lmw bands, {} objects, {} iterations",
        img.width(),
        img.height(),
        t.n_grades,
        t.bands,
        t.virtual_bands,
        t.lmw_bands,
        r.objects.len(),
        t.iterations
    )
}

struct Outputs<'a> {
    contours: Option<&'a Path>,
    labels: Option<&'a Path>,
    objects: Option<&'a Path>,
    overlay: Option<&'a Path>,
    tree: Option<&'a Path>,
}

fn segment_one(input: &Path, opts: &SegmentOpts, out: &Outputs) -> Result<String> {
    let img = io::read_image(input)?;
    let r = opts
        .run(&img)
        .with_context(|| format!("cannot segment {}", input.display()))?;
    if let Some(p) = out.contours {
        io::write_json(p, &r.contours)?;
    }
    if let Some(p) = out.labels {
        io::write_labels(p, &r.labels)?;
    }
    if let Some(p) = out.objects {
        io::write_json(p, &r.objects)?;
    }
    if let Some(p) = out.overlay {
        io::write_image(p, &io::overlay(&img, &r.contours))?;
    }
    if let Some(p) = out.tree {
        let gm = quantize(&img, opts.grades, opts.invert)?;
        let tree = build_band_tree_with(&gm, opts.connectivity);
        io::write_json(p, &tree.dump())?;
    }
    Ok(summary_line(&input.display().to_string(), &img, &r))
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm" | "png")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_segment(cmd: SegmentCmd) -> Result<()> {
    let pool = cmd.opts.pool()?;
    if !cmd.input.is_dir() {
        let out = Outputs {
            contours: cmd.out_contours.as_deref(),
            labels: cmd.out_labels.as_deref(),
            objects: cmd.out_objects.as_deref(),
            overlay: cmd.overlay.as_deref(),
            tree: cmd.dump_tree.as_deref(),
        };
        println!("{}", pool.install(|| segment_one(&cmd.input, &cmd.opts, &out))?);
        return Ok(());
    }
    let out_dir = cmd
        .out_dir
        .as_deref()
        .ok_or_else(|| Usage(anyhow!("--out-dir is required when --input is a directory")))?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let files = image_files(&cmd.input)?;
    let lines: Vec<Result<String>> = pool.install(|| {
        use rayon::prelude::*;
        files
            .par_iter()
            .map(|f| {
                let stem = f.file_stem().unwrap_or_default().to_string_lossy();
                let path = |suffix: &str| out_dir.join(format!("{stem}.{suffix}"));
                let (c, l, o) = (path("contours.json"), path("labels.pgm"), path("objects.json"));
                let overlay = cmd.overlay.is_some().then(|| path("overlay.pgm"));
                let tree = cmd.dump_tree.is_some().then(|| path("tree.json"));
                let out = Outputs {
                    contours: Some(&c),
                    labels: Some(&l),
                    objects: Some(&o),
                    overlay: overlay.as_deref(),
                    tree: tree.as_deref(),
                };
                segment_one(f, &cmd.opts, &out)
            })
            .collect()
    });
    for line in lines {
        println!("{}", line?);
    }
    Ok(())
}

fn parse_param(s: &str) -> Result<(String, Value)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected NAME=VALUE, got {s:?}"))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_owned()));
    Ok((name.replace('-', "_"), value))
}

fn run_phantom(cmd: PhantomCmd) -> Result<()> {
    let mut spec = match &cmd.spec {
        Some(p) => io::read_json(p)?,
        None => {
            let params: serde_json::Map<String, Value> = cmd
                .param
                .iter()
                .map(|p| parse_param(p))
                .collect::<Result<_>>()
                .map_err(Usage)?;
            json!({
                "kind": cmd.kind.expect("required by the parser"),
                "seed": cmd.seed,
                "width": cmd.width,
                "height": cmd.height,
                "params": params,
            })
        }
    };
    if let Ok(seed) = std::env::var("LMW_SEED") {
        let seed: u64 = seed
            .trim()
            .parse()
            .map_err(|_| Usage(anyhow!("LMW_SEED must be an unsigned integer, got {seed:?}")))?;
        spec["seed"] = json!(seed);
    }
    let origin = cmd
        .spec
        .as_ref()
        .map_or("phantom flags".to_owned(), |p| p.display().to_string());
    let spec: lmw_core::PhantomSpec =
        serde_json::from_value(spec).with_context(|| format!("invalid phantom spec in {origin}"))?;
    let (img, truth) = make_phantom(&spec).with_context(|| format!("invalid phantom spec in {origin}"))?;
    io::write_image(&cmd.out_image, &img)?;
    if let Some(p) = &cmd.out_truth {
        io::write_labels(p, &truth)?;
    }
    if let Some(p) = &cmd.out_spec {
        io::write_json(p, &spec)?;
    }
    println!(
        "{}: {} {}x{}, seed {}, {} truth objects",
        cmd.out_image.display(),
        serde_json::to_value(spec.kind)?.as_str().unwrap_or_default(),
        spec.width,
        spec.height,
        spec.seed,
        truth.object_ids().len()
    );
    Ok(())
}

fn run_compare(cmd: CompareCmd) -> Result<()> {
    let img = io::read_image(&cmd.input)?;
    let truth = cmd.truth.as_deref().map(io::read_labels).transpose()?;
    let pool = cmd.opts.pool()?;
    let r = pool
        .install(|| cmd.opts.run(&img))
        .with_context(|| format!("cannot segment {}", cmd.input.display()))?;
    let (threshold, otsu) = match otsu_threshold(&img) {
        Ok((t, mask)) => (Some(t), mask.components(cmd.opts.connectivity)),
        Err(_) => (None, lmw_core::LabelMap::zeros(img.width(), img.height())),
    };
    let mut lmw = json!({ "objects": r.objects.len(), "grades": cmd.opts.grades });
    let mut baseline = json!({ "threshold": threshold, "objects": otsu.object_ids().len() });
    if let Some(t) = &truth {
        let context = || {
            format!(
                "{} does not match {}",
                cmd.input.display(),
                cmd.truth.as_ref().unwrap().display()
            )
        };
        lmw["metrics"] = serde_json::to_value(evaluate(&r.labels, t).with_context(context)?)?;
        baseline["metrics"] = serde_json::to_value(evaluate(&otsu, t).with_context(context)?)?;
        let wrong = otsu
            .labels()
            .iter()
            .zip(t.labels())
            .filter(|(&a, &b)| (a > 0) != (b > 0))
            .count();
        baseline["misclassified_pixels"] = json!(wrong);
    }
    if let Some(p) = &cmd.out_lmw {
        io::write_labels(p, &r.labels)?;
    }
    if let Some(p) = &cmd.out_otsu {
        io::write_labels(p, &otsu)?;
    }
    let summary = json!({ "lmw": lmw, "otsu": baseline });
    match &cmd.summary {
        Some(p) => {
            io::write_json(p, &summary)?;
            println!("{}", summary_line(&cmd.input.display().to_string(), &img, &r));
        }
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(())
}

fn run_metrics(cmd: MetricsCmd) -> Result<()> {
    let pred = io::read_labels(&cmd.pred)?;
    let truth = io::read_labels(&cmd.truth)?;
    let report = evaluate(&pred, &truth)
        .with_context(|| format!("{} does not match {}", cmd.pred.display(), cmd.truth.display()))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// A usage problem found after argument parsing.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Segment(c) => run_segment(c),
        Command::Phantom(c) => run_phantom(c),
        Command::Compare(c) => run_compare(c),
        Command::Metrics(c) => run_metrics(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
