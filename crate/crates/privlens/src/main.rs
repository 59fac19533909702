//! Command-line front end: anonymize image directories, score the three
//! evaluation dimensions from prepared inputs, and assemble or re-weight
//! trade-off reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use privlens::config::{load_config, normalized_weights};
use privlens::pipeline::{
    evaluate_all, run_anonymize_job, run_practicality_job, AnonymizeJob, PracticalityJob,
    PracticalityMethodInputs,
};
use privlens::{emit, io, toyset};
use privlens_core::anonymize::OperatorSpec;
use privlens_core::practicality::WeightVector;
use privlens_core::privacy::{self, PrivacyResult};
use privlens_core::report::{rerank, utility_report, EvaluationSettings};
use privlens_core::utility::pr_curve;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "privlens",
    version,
    about = "Anonymize image regions and rate methods on privacy, utility and practicality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one anonymization operator to a directory of images.
    Anonymize(AnonymizeArgs),
    /// Score attribute predictions: per-attribute AP and their mean.
    Privacy(PrivacyArgs),
    /// Score detections against ground truth: P/R/F1 and PR curves.
    Utility(UtilityArgs),
    /// Fuse throughput, robustness and intelligibility across methods.
    Practicality(PracticalityArgs),
    /// Evaluate every configured method and write the trade-off table.
    Report(ReportArgs),
    /// Re-fuse a stored table's practicality scores under new weights.
    Rerank(RerankArgs),
    /// Generate the bundled deterministic demo dataset.
    Toyset(ToysetArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpKind {
    Blur,
    Pixelate,
    Emboss,
    Mask,
    Encrypt,
    Lowres,
}

#[derive(Args)]
struct AnonymizeArgs {
    /// Operator to apply.
    #[arg(long, value_enum)]
    op: OpKind,
    /// Size parameter: blur/emboss kernel, pixelate block, lowres side.
    #[arg(long)]
    k: Option<u32>,
    /// AES-128 key as 32 hex digits (encrypt only).
    #[arg(long)]
    key_hex: Option<String>,
    /// CTR nonce as 32 hex digits (encrypt only).
    #[arg(long)]
    nonce_hex: Option<String>,
    /// Directory of PNG/JPEG frames; ids are file stems.
    #[arg(long)]
    images: PathBuf,
    /// Directory of single-channel mask PNGs named `<id>.png`.
    #[arg(long)]
    masks: PathBuf,
    /// Output directory for the anonymized frames.
    #[arg(long)]
    out: PathBuf,
    /// Also record per-frame completion timestamps to this CSV.
    #[arg(long)]
    timing: Option<PathBuf>,
}

#[derive(Args)]
struct PrivacyArgs {
    /// Attribute score CSV (`image_id,<attr>...`).
    #[arg(long)]
    scores: PathBuf,
    /// Matching binary label CSV with the same header and ids.
    #[arg(long)]
    labels: PathBuf,
    /// Score CSV of the un-anonymized run; adds the relative-drop table.
    #[arg(long)]
    baseline_scores: Option<PathBuf>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UtilityArgs {
    /// Detection JSON (array of image_id/category_id/bbox/score).
    #[arg(long)]
    detections: PathBuf,
    /// Ground-truth JSON (same shape, score ignored).
    #[arg(long)]
    ground_truth: PathBuf,
    /// IoU threshold for matching.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Confidence threshold for the P/R/F1 operating point.
    #[arg(long, default_value_t = 0.25)]
    conf: f64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-class PR-curve points to this CSV.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Args)]
struct PracticalityArgs {
    /// Per-method timing CSV, repeatable as `name=path`.
    #[arg(long = "timing", value_name = "NAME=PATH", required = true)]
    timing: Vec<String>,
    /// Detections of the un-anonymized run.
    #[arg(long)]
    orig_dets: PathBuf,
    /// Per-method detections, repeatable as `name=path`.
    #[arg(long = "anon-dets", value_name = "NAME=PATH", required = true)]
    anon_dets: Vec<String>,
    /// Embeddings of the un-anonymized run (CSV or binary).
    #[arg(long)]
    orig_embeds: PathBuf,
    /// Per-method embeddings, repeatable as `name=path`.
    #[arg(long = "anon-embeds", value_name = "NAME=PATH", required = true)]
    anon_embeds: Vec<String>,
    /// Directory of un-anonymized frames (for similarity crops).
    #[arg(long)]
    orig_images: PathBuf,
    /// Per-method anonymized frame directories, repeatable as `name=path`.
    #[arg(long = "anon-images", value_name = "NAME=PATH", required = true)]
    anon_images: Vec<String>,
    /// Fusion weights `robustness,intelligibility,throughput`, scaled by
    /// their sum.
    #[arg(long, default_value = "0.3,0.3,0.3")]
    weights: String,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluation config (TOML) with baseline and per-method inputs.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving report.json / report.csv / report.svg.
    #[arg(long)]
    out_dir: PathBuf,
    /// Comma-separated subset of json,csv,svg.
    #[arg(long, default_value = "json,csv,svg")]
    format: String,
}

#[derive(Args)]
struct RerankArgs {
    /// Previously written report JSON.
    #[arg(long)]
    table: PathBuf,
    /// New fusion weights `robustness,intelligibility,throughput`.
    #[arg(long)]
    weights: String,
    /// Output JSON path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ToysetArgs {
    /// Directory to generate the dataset in.
    #[arg(long)]
    out: PathBuf,
    /// Seed for the generator.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_hex16(value: &str, flag: &str) -> Result<[u8; 16]> {
    let bytes = hex::decode(value).with_context(|| format!("{flag} is not valid hex"))?;
    let len = bytes.len();
    bytes
        .try_into()
        .map_err(|_| anyhow::anyhow!("{flag} must encode exactly 16 bytes, got {len}"))
}

fn build_spec(args: &AnonymizeArgs) -> Result<OperatorSpec> {
    let k = |what: &str| args.k.with_context(|| format!("--op {what} requires --k"));
    let no_k = |what: &str| {
        if args.k.is_some() {
            bail!("--op {what} takes no --k");
        }
        Ok(())
    };
    if args.op != OpKind::Encrypt && (args.key_hex.is_some() || args.nonce_hex.is_some()) {
        bail!("--key-hex/--nonce-hex only apply to --op encrypt");
    }
    let spec = match args.op {
        OpKind::Blur => OperatorSpec::Blur { kernel: k("blur")? },
        OpKind::Pixelate => OperatorSpec::Pixelate {
            block: k("pixelate")?,
        },
        OpKind::Emboss => OperatorSpec::Emboss {
            kernel: k("emboss")?,
        },
        OpKind::Mask => {
            no_k("mask")?;
            OperatorSpec::MaskBlack
        }
        OpKind::Encrypt => {
            no_k("encrypt")?;
            let key = args
                .key_hex
                .as_deref()
                .context("--op encrypt requires --key-hex")?;
            let nonce = args
                .nonce_hex
                .as_deref()
                .context("--op encrypt requires --nonce-hex")?;
            OperatorSpec::Encrypt {
                key: parse_hex16(key, "--key-hex")?,
                nonce: parse_hex16(nonce, "--nonce-hex")?,
            }
        }
        OpKind::Lowres => OperatorSpec::Lowres { side: k("lowres")? },
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_weights(text: &str) -> Result<WeightVector> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad weight `{p}`"))
        })
        .collect::<Result<_>>()?;
    let [r, i, t] = parts.as_slice() else {
        bail!(
            "--weights takes exactly 3 comma-separated values, got {}",
            parts.len()
        );
    };
    normalized_weights(*r, *i, *t)
}

/// Parses repeated `name=path` occurrences of one flag into a map.
fn parse_named(values: &[String], flag: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut map = BTreeMap::new();
    for value in values {
        let Some((name, path)) = value.split_once('=') else {
            bail!("{flag} takes name=path, got `{value}`");
        };
        if name.is_empty() {
            bail!("{flag} has an empty method name in `{value}`");
        }
        if map.insert(name.to_string(), PathBuf::from(path)).is_some() {
            bail!("{flag} names `{name}` twice");
        }
    }
    Ok(map)
}

/// Privacy subcommand output: the scored table, plus the baseline result
/// and per-attribute relative AP drop (percent) when a baseline is given.
#[derive(Serialize)]
struct PrivacyOutput {
    #[serde(flatten)]
    scored: PrivacyResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<PrivacyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_drop_percent: Option<BTreeMap<String, Option<f64>>>,
}

fn run_privacy(args: &PrivacyArgs) -> Result<()> {
    let table = io::scores::load_scores(&args.scores, &args.labels)?;
    let scored = privacy::cmap(&table)?;
    let output = match &args.baseline_scores {
        Some(baseline_path) => {
            let baseline_table = io::scores::load_scores(baseline_path, &args.labels)?;
            let baseline = privacy::cmap(&baseline_table)?;
            let drops = privacy::relative_drop(&baseline, &scored)?;
            PrivacyOutput {
                scored,
                baseline: Some(baseline),
                relative_drop_percent: Some(drops),
            }
        }
        None => PrivacyOutput {
            scored,
            baseline: None,
            relative_drop_percent: None,
        },
    };
    emit::write_json(&output, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn write_curves(
    path: &Path,
    dets: &privlens_core::model::DetectionSet,
    gts: &privlens_core::model::GroundTruthSet,
    iou: f64,
) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["class_id", "class_name", "recall", "precision"])?;
    for class_id in gts.class_ids() {
        let Some(curve) = pr_curve(dets, gts, class_id, iou) else {
            continue;
        };
        let name = gts.class_name(class_id).unwrap_or("").to_string();
        for (recall, precision) in curve.points {
            writer.write_record([
                class_id.to_string(),
                name.clone(),
                format!("{recall:.6}"),
                format!("{precision:.6}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn run_utility(args: &UtilityArgs) -> Result<()> {
    let dets = io::detections::load_detections(&args.detections)?;
    let gts = io::detections::load_ground_truth(&args.ground_truth)?;
    let report = utility_report(&dets, &gts, args.iou, args.conf)?;
    emit::write_json(&report, &args.out)?;
    println!("wrote {}", args.out.display());
    if let Some(curves_path) = &args.curves {
        write_curves(curves_path, &dets, &gts, args.iou)?;
        println!("wrote {}", curves_path.display());
    }
    Ok(())
}

fn run_practicality(args: &PracticalityArgs) -> Result<()> {
    let timing = parse_named(&args.timing, "--timing")?;
    let anon_dets = parse_named(&args.anon_dets, "--anon-dets")?;
    let anon_embeds = parse_named(&args.anon_embeds, "--anon-embeds")?;
    let anon_images = parse_named(&args.anon_images, "--anon-images")?;
    let names: Vec<&String> = timing.keys().collect();
    for (map, flag) in [
        (&anon_dets, "--anon-dets"),
        (&anon_embeds, "--anon-embeds"),
        (&anon_images, "--anon-images"),
    ] {
        if map.keys().collect::<Vec<_>>() != names {
            bail!(
                "{flag} must name the same methods as --timing ({})",
                names
                    .iter()
                    .map(|n| n.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    let mut methods = BTreeMap::new();
    for (name, timing_path) in timing {
        let inputs = PracticalityMethodInputs {
            timing: timing_path,
            detections: anon_dets[&name].clone(),
            embeddings: anon_embeds[&name].clone(),
            images: anon_images[&name].clone(),
        };
        methods.insert(name, inputs);
    }
    let job = PracticalityJob {
        orig_detections: args.orig_dets.clone(),
        orig_embeddings: args.orig_embeds.clone(),
        orig_images: args.orig_images.clone(),
        methods,
        settings: EvaluationSettings {
            weights: parse_weights(&args.weights)?,
            ..EvaluationSettings::default()
        },
    };
    let run = run_practicality_job(&job)?;
    emit::write_json(&run, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<()> {
    let mut formats = Vec::new();
    for part in args.format.split(',') {
        match part.trim() {
            "json" | "csv" | "svg" => {
                let part = part.trim().to_string();
                if !formats.contains(&part) {
                    formats.push(part);
                }
            }
            other => bail!("unknown format `{other}` (expected json, csv, svg)"),
        }
    }
    let config = load_config(&args.config)?;
    let table = evaluate_all(&config)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for format in formats {
        let path = args.out_dir.join(format!("report.{format}"));
        match format.as_str() {
            "json" => emit::write_json(&table, &path)?,
            "csv" => emit::write_csv(&table, &path)?,
            _ => emit::write_svg(&table, &path)?,
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_rerank(args: &RerankArgs) -> Result<()> {
    let table = emit::load_table(&args.table)?;
    let reranked = rerank(&table, &parse_weights(&args.weights)?)?;
    match &args.out {
        Some(path) => {
            emit::write_json(&reranked, path)?;
            println!("wrote {}", path.display());
        }
        None => println!("{}", emit::to_json_string(&reranked)?),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Anonymize(args) => {
            let job = AnonymizeJob {
                spec: build_spec(&args)?,
                images_dir: args.images,
                masks_dir: args.masks,
                out_dir: args.out,
                timing_out: args.timing,
            };
            let ids = run_anonymize_job(&job)?;
            println!(
                "anonymized {} images into {}",
                ids.len(),
                job.out_dir.display()
            );
        }
        Command::Privacy(args) => run_privacy(&args)?,
        Command::Utility(args) => run_utility(&args)?,
        Command::Practicality(args) => run_practicality(&args)?,
        Command::Report(args) => run_report(&args)?,
        Command::Rerank(args) => run_rerank(&args)?,
        Command::Toyset(args) => {
            fs::create_dir_all(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            toyset::generate(&args.out, args.seed)?;
            println!("generated demo dataset in {}", args.out.display());
        }
    }
    Ok(())
}
