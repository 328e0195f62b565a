//! Command-line surface tying the preprocessing modules together: image and
//! video tokenization reports, a toy encoder forward pass, sequence packing,
//! document parsing, and grounding/temporal metric evaluation.
//!
//! All output is JSON with stable key order; errors go to stderr as
//! `{"error": ...}` with a non-zero exit status.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use vlmprep::encoder::{
    merge_patches, patch_embed, vit_forward, window_partition, EncoderConfig, EncoderWeights,
};
use vlmprep::geometry::{llm_token_count, smart_resize, vit_token_count};
use vlmprep::grounding::{
    count_objects, iou, miou, parse_spatial_output, BBox, SpatialItem, TimeSpan, WireFormat,
};
use vlmprep::packing::{balance_report, pack};
use vlmprep::report::{
    ErrorReport, ForwardReport, GroundingEvalReport, ImageReport, MRopeSummary, PackBinReport,
    PackReport, TemporalEvalReport, VideoReport,
};
use vlmprep::rope::{mrope_ids_image, mrope_ids_video, rope2d_ids_vit, RopeConfig};
use vlmprep::videopipe::{enforce_token_budget, sample_frames, MAX_FRAMES, MAX_VIDEO_TOKENS};
use vlmprep::{docformat, ppm};

#[derive(Parser)]
#[command(name = "vlmprep", version, about = "Multimodal preprocessing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    #[value(name = "3b")]
    Size3b,
    #[value(name = "7b")]
    Size7b,
    #[value(name = "72b")]
    Size72b,
}

impl Preset {
    fn config(self) -> EncoderConfig {
        match self {
            Preset::Size3b => EncoderConfig::preset_3b(),
            Preset::Size7b => EncoderConfig::preset_7b(),
            Preset::Size72b => EncoderConfig::preset_72b(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Json,
    Xml,
}

impl From<CliFormat> for WireFormat {
    fn from(f: CliFormat) -> Self {
        match f {
            CliFormat::Json => WireFormat::Json,
            CliFormat::Xml => WireFormat::Xml,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report resize geometry, token counts, and position-id summary for a
    /// P6 image.
    PreprocessImage {
        path: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_tokens: usize,
        #[arg(long, default_value_t = 16384)]
        max_tokens: usize,
        /// Position id the image span starts at.
        #[arg(long, default_value_t = 0)]
        start_id: u64,
    },
    /// Report frame sampling, grouping, temporal ids, and token totals for
    /// a frame directory with a meta.json sidecar.
    PreprocessVideo {
        frame_dir: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        fps: f64,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        #[arg(long, default_value_t = MAX_FRAMES)]
        max_frames: usize,
        #[arg(long, default_value_t = MAX_VIDEO_TOKENS)]
        max_tokens: usize,
    },
    /// Run the toy encoder over a P6 image and write the merged token
    /// tensor.
    Forward {
        input: PathBuf,
        /// Weight file stem (expects .bin/.json); seeded init when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Full-scale preset; heavy, prefer the default toy config.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        max_tokens: usize,
        /// Output tensor stem (.bin/.json); defaults next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pack a JSON-lines file of {id, length} samples into bins.
    Pack {
        jsonl: PathBuf,
        #[arg(long, default_value_t = 8192)]
        capacity: usize,
    },
    /// Parse a QwenVL HTML document into layout JSON.
    ParseDoc {
        html: PathBuf,
        /// Also run layout validation against a page size.
        #[arg(long, requires = "page_w", requires = "page_h")]
        validate: bool,
        #[arg(long)]
        page_w: Option<u64>,
        #[arg(long)]
        page_h: Option<u64>,
    },
    /// Score predicted grounding payloads against references (one payload
    /// per line in both files).
    EvalGrounding {
        pred: PathBuf,
        gold: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: CliFormat,
    },
    /// Score predicted time spans against references (JSON arrays of
    /// [start, end] pairs).
    EvalTemporal { pred: PathBuf, gold: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(json) => println!("{json}"),
        Err(error) => {
            let report = ErrorReport { error };
            eprintln!("{}", serde_json::to_string(&report).expect("error report"));
            std::process::exit(1);
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<String, String> {
    match command {
        Command::PreprocessImage {
            path,
            min_tokens,
            max_tokens,
            start_id,
        } => {
            let (h, w) = ppm::read_dims(&path).map_err(|e| e.to_string())?;
            let grid = smart_resize(h, w, min_tokens, max_tokens).map_err(|e| e.to_string())?;
            let ids = mrope_ids_image(start_id, grid.merged_h, grid.merged_w);
            let report = ImageReport {
                grid,
                vit_tokens: vit_token_count(&grid),
                llm_tokens: llm_token_count(&grid).map_err(|e| e.to_string())?,
                mrope: MRopeSummary {
                    start: start_id,
                    next_start: ids.next_start,
                    token_count: ids.triples.len(),
                    first: ids.triples.first().copied(),
                    last: ids.triples.last().copied(),
                },
            };
            to_json(&report)
        }
        Command::PreprocessVideo {
            frame_dir,
            fps,
            tau,
            max_frames,
            max_tokens,
        } => {
            let meta = VideoMeta::load(&frame_dir)?;
            let sampling = sample_frames(meta.duration, meta.source_fps, fps, max_frames)
                .map_err(|e| e.to_string())?;
            let (h, w) = meta.dims(&frame_dir)?;
            let grid = smart_resize(h, w, 1, 16384).map_err(|e| e.to_string())?;
            let (grid, groups) =
                enforce_token_budget(&grid, sampling.group_times.len(), max_tokens)
                    .map_err(|e| e.to_string())?;
            let group_times: Vec<f64> = sampling.group_times[..groups].to_vec();
            let rope_cfg = RopeConfig {
                ids_per_second: tau,
                ..RopeConfig::default()
            };
            let ids = mrope_ids_video(0, &group_times, grid.merged_h, grid.merged_w, &rope_cfg)
                .map_err(|e| e.to_string())?;
            let per_frame = grid.merged_h * grid.merged_w;
            let mut temporal_ids: Vec<u64> = ids
                .triples
                .chunks(per_frame)
                .map(|chunk| chunk[0].0)
                .collect();
            temporal_ids.dedup();
            let report = VideoReport {
                source_fps: meta.source_fps,
                duration: meta.duration,
                effective_fps: sampling.effective_fps,
                frame_count: sampling.timestamps.len(),
                group_count: groups,
                timestamps: sampling.timestamps.clone(),
                group_times,
                temporal_ids,
                grid,
                tokens_per_frame: per_frame,
                total_tokens: per_frame * groups,
            };
            to_json(&report)
        }
        Command::Forward {
            input,
            weights,
            preset,
            seed,
            max_tokens,
            out,
        } => {
            let config = preset.map(Preset::config).unwrap_or_else(EncoderConfig::toy);
            let weights = match weights {
                Some(path) => EncoderWeights::load(&path, &config).map_err(|e| e.to_string())?,
                None => EncoderWeights::seeded(&config, seed).map_err(|e| e.to_string())?,
            };
            let frame = ppm::read_frame(&input).map_err(|e| e.to_string())?;
            let grid =
                smart_resize(frame.h, frame.w, 1, max_tokens).map_err(|e| e.to_string())?;
            let resized = ppm::resample_nearest(&frame, grid.resized_h, grid.resized_w);
            let feats = patch_embed(&[resized], &weights, &config).map_err(|e| e.to_string())?;
            let layout = window_partition(grid.grid_h, grid.grid_w, config.window_patches());
            let ids = rope2d_ids_vit(grid.grid_h, grid.grid_w);
            let encoded =
                vit_forward(&feats, &layout, &ids, &config, &weights).map_err(|e| e.to_string())?;
            let tokens = merge_patches(&encoded, grid.grid_h, grid.grid_w, &weights, &config)
                .map_err(|e| e.to_string())?;

            let out_stem = out.unwrap_or_else(|| input.with_extension("out"));
            write_tensor(&out_stem, tokens.rows(), tokens.cols(), tokens.data())?;
            let data = tokens.data();
            let report = ForwardReport {
                grid,
                output_rows: tokens.rows(),
                output_cols: tokens.cols(),
                mean: data.iter().sum::<f64>() / data.len() as f64,
                min: data.iter().cloned().fold(f64::INFINITY, f64::min),
                max: data.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                l2_norm: data.iter().map(|v| v * v).sum::<f64>().sqrt(),
                output_path: out_stem.display().to_string(),
            };
            to_json(&report)
        }
        Command::Pack { jsonl, capacity } => {
            let text = fs::read_to_string(&jsonl).map_err(|e| e.to_string())?;
            let mut ids = Vec::new();
            let mut lengths = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let sample: PackSample = serde_json::from_str(line)
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                ids.push(sample.id);
                lengths.push(sample.length);
            }
            let batch = pack(&lengths, capacity).map_err(|e| e.to_string())?;
            let balance = balance_report(&batch);
            let report = PackReport {
                capacity,
                bin_count: batch.bins.len(),
                bins: batch
                    .bins
                    .iter()
                    .map(|b| PackBinReport {
                        ids: b.samples.iter().map(|&i| ids[i].clone()).collect(),
                        total_length: b.total_length,
                    })
                    .collect(),
                balance,
            };
            to_json(&report)
        }
        Command::ParseDoc {
            html,
            validate,
            page_w,
            page_h,
        } => {
            let text = fs::read_to_string(&html).map_err(|e| e.to_string())?;
            let tree = docformat::parse_qwenvl_html(&text).map_err(|e| e.to_string())?;
            if validate {
                let page = (page_w.unwrap_or(0), page_h.unwrap_or(0));
                let issues = docformat::validate(&tree, page);
                #[derive(Serialize)]
                struct ValidatedReport {
                    layout: docformat::DocTree,
                    issues: Vec<docformat::Issue>,
                }
                to_json(&ValidatedReport {
                    layout: tree,
                    issues,
                })
            } else {
                Ok(docformat::to_layout_json(&tree))
            }
        }
        Command::EvalGrounding { pred, gold, format } => eval_grounding(&pred, &gold, format.into()),
        Command::EvalTemporal { pred, gold } => eval_temporal(&pred, &gold),
    }
}

#[derive(Deserialize)]
struct PackSample {
    id: serde_json::Value,
    length: usize,
}

#[derive(Deserialize)]
struct VideoMeta {
    source_fps: f64,
    duration: f64,
    #[serde(default)]
    width: Option<usize>,
    #[serde(default)]
    height: Option<usize>,
}

impl VideoMeta {
    fn load(frame_dir: &Path) -> Result<Self, String> {
        let path = frame_dir.join("meta.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }

    /// Frame dimensions (h, w): from the sidecar if given, else from the
    /// first .ppm frame in the directory.
    fn dims(&self, frame_dir: &Path) -> Result<(usize, usize), String> {
        if let (Some(w), Some(h)) = (self.width, self.height) {
            return Ok((h, w));
        }
        let mut frames: Vec<PathBuf> = fs::read_dir(frame_dir)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "ppm"))
            .collect();
        frames.sort();
        let first = frames
            .first()
            .ok_or("no frame dimensions: meta.json lacks width/height and no .ppm frames found")?;
        ppm::read_dims(first).map_err(|e| e.to_string())
    }
}

fn write_tensor(stem: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<(), String> {
    #[derive(Serialize)]
    struct TensorMeta<'a> {
        name: &'a str,
        shape: [usize; 2],
    }
    let meta = serde_json::to_string_pretty(&TensorMeta {
        name: "merged_tokens",
        shape: [rows, cols],
    })
    .map_err(|e| e.to_string())?;
    fs::write(stem.with_extension("json"), meta).map_err(|e| e.to_string())?;
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(stem.with_extension("bin"), bytes).map_err(|e| e.to_string())
}

fn label_counts(items: &[SpatialItem]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for item in items {
        if let SpatialItem::Box(b) = item {
            *counts.entry(b.label.clone()).or_insert(0) += 1;
        }
    }
    counts
}

fn boxes_of(items: &[SpatialItem]) -> Vec<&BBox> {
    items
        .iter()
        .filter_map(|i| match i {
            SpatialItem::Box(b) => Some(b),
            SpatialItem::Point(_) => None,
        })
        .collect()
}

fn eval_grounding(pred: &Path, gold: &Path, format: WireFormat) -> Result<String, String> {
    let pred_text = fs::read_to_string(pred).map_err(|e| e.to_string())?;
    let gold_text = fs::read_to_string(gold).map_err(|e| e.to_string())?;
    let pred_lines: Vec<&str> = pred_text.lines().filter(|l| !l.trim().is_empty()).collect();
    let gold_lines: Vec<&str> = gold_text.lines().filter(|l| !l.trim().is_empty()).collect();
    if pred_lines.len() != gold_lines.len() {
        return Err(format!(
            "sample count mismatch: {} predictions vs {} references",
            pred_lines.len(),
            gold_lines.len()
        ));
    }
    let mut ious = Vec::new();
    let mut count_hits = 0usize;
    for (p_line, g_line) in pred_lines.iter().zip(&gold_lines) {
        let p = parse_spatial_output(p_line, format).map_err(|e| e.to_string())?;
        let g = parse_spatial_output(g_line, format).map_err(|e| e.to_string())?;
        let (pb, gb) = (boxes_of(&p), boxes_of(&g));
        // Boxes are matched by position within the sample; label-aware
        // counting is scored separately.
        for (a, b) in pb.iter().zip(&gb) {
            ious.push(iou(a, b));
        }
        let p_counts = label_counts(&p);
        let g_counts = label_counts(&g);
        let all_match = g_counts
            .keys()
            .chain(p_counts.keys())
            .all(|label| {
                count_objects(
                    &pb.iter().map(|&b| b.clone()).collect::<Vec<_>>(),
                    label,
                ) == count_objects(&gb.iter().map(|&b| b.clone()).collect::<Vec<_>>(), label)
            });
        if all_match {
            count_hits += 1;
        }
    }
    let matched = ious.len();
    let report = GroundingEvalReport {
        samples: pred_lines.len(),
        matched_pairs: matched,
        mean_iou: if matched == 0 {
            0.0
        } else {
            ious.iter().sum::<f64>() / matched as f64
        },
        accuracy_at_0_5: if matched == 0 {
            0.0
        } else {
            ious.iter().filter(|&&v| v >= 0.5).count() as f64 / matched as f64
        },
        count_accuracy: if pred_lines.is_empty() {
            1.0
        } else {
            count_hits as f64 / pred_lines.len() as f64
        },
    };
    to_json(&report)
}

fn eval_temporal(pred: &Path, gold: &Path) -> Result<String, String> {
    let read_spans = |path: &Path| -> Result<Vec<TimeSpan>, String> {
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let raw: Vec<(f64, f64)> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        raw.into_iter()
            .map(|(s, e)| TimeSpan::new(s, e).map_err(|e| e.to_string()))
            .collect()
    };
    let p = read_spans(pred)?;
    let g = read_spans(gold)?;
    if p.len() != g.len() {
        return Err(format!(
            "span count mismatch: {} predictions vs {} references",
            p.len(),
            g.len()
        ));
    }
    let pairs: Vec<(TimeSpan, TimeSpan)> = p.into_iter().zip(g).collect();
    let report = TemporalEvalReport {
        pairs: pairs.len(),
        miou: miou(&pairs).map_err(|e| e.to_string())?,
    };
    to_json(&report)
}
