//! End-to-end workflows behind the command-line subcommands.
//!
//! Every command reads and writes under the dataset root `cfg.out`:
//!
//! ```text
//! images/{id}.png  labels/{id}.txt  provenance/{id}.txt
//! manifest.txt  split.txt  config.txt
//! stats/  anchors/  predictions/  eval/
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::anchors::{self, AnchorSet, PyramidConfig};
use crate::baseline;
use crate::config::{AnchorMode, RunConfig};
use crate::dataset::{self, Annotation, BoundingBox, DatasetLayout};
use crate::eval::{self, EvalSummary};
use crate::iq::{compose_scene, NoiseModel};
use crate::scene::{self, SceneConfig};
use crate::spectrogram::{self, SpectrogramImage, StftConfig};
use crate::{Error, Result};

/// Seed domain of the train/test split, kept apart from the scene streams.
const SPLIT_DOMAIN: u64 = 4;

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Synthesizes and renders one scene.
pub fn render_scene(
    scene: &SceneConfig,
    noise: &NoiseModel,
    stft: &StftConfig,
) -> Result<SpectrogramImage> {
    spectrogram::render(&compose_scene(scene, noise)?, stft)
}

/// Ground truth of every planned scene, computed from metadata alone.
pub fn plan_annotations(cfg: &RunConfig) -> Result<Vec<(String, Vec<Annotation>)>> {
    Ok(scene::plan_dataset(&cfg.plan())?
        .iter()
        .map(|s| (s.scene_id(), dataset::annotations_for(s)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateReport {
    pub scene_ids: Vec<String>,
    pub root: PathBuf,
}

/// Writes every planned scene, then the manifest, split and config.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateReport> {
    cfg.validate()?;
    let scenes = scene::plan_dataset(&cfg.plan())?;
    let noise = cfg.noise()?;
    let layout = DatasetLayout::new(&cfg.out);
    let written: Vec<Result<String>> = with_pool(cfg.jobs, || {
        scenes
            .par_iter()
            .map(|s| {
                let image = render_scene(s, &noise, &cfg.stft)?;
                Ok(layout.write_scene(s, &image)?.scene_id)
            })
            .collect()
    })?;
    let scene_ids = written.into_iter().collect::<Result<Vec<_>>>()?;
    layout.write_manifest(&scene_ids)?;
    let split_seed = crate::rng::derive(cfg.seed, SPLIT_DOMAIN);
    layout.write_split(&scene::split_train_test(
        &scene_ids,
        cfg.test_fraction,
        split_seed,
    )?)?;
    write_text(&cfg.out.join("config.txt"), &cfg.to_text())?;
    Ok(GenerateReport {
        scene_ids,
        root: cfg.out.clone(),
    })
}

fn boxes(gt: &[(String, Vec<Annotation>)]) -> Vec<BoundingBox> {
    gt.iter()
        .flat_map(|(_, a)| a.iter().map(|a| a.bbox))
        .collect()
}

/// Writes histogram CSVs (and SVGs when enabled) plus a summary for the
/// given ground truth.
pub fn write_stats(
    gt: &[(String, Vec<Annotation>)],
    dir: &Path,
    svg: bool,
) -> Result<anchors::BoxStats> {
    let stats = anchors::box_stats(&boxes(gt))?;
    let files = [
        ("aspect_ratio", &stats.ratio_hist, "aspect ratio (w/h)"),
        ("side_length", &stats.side_hist, "side length sqrt(w*h) px"),
        ("width", &stats.width_hist, "width px"),
        ("height", &stats.height_hist, "height px"),
    ];
    for (name, hist, title) in files {
        write_text(&dir.join(format!("{name}_hist.csv")), &hist.to_csv())?;
        if svg {
            write_text(&dir.join(format!("{name}_hist.svg")), &hist.to_svg(title))?;
        }
    }
    write_text(&dir.join("summary.txt"), &format!("{}\n", stats.summary()))?;
    Ok(stats)
}

pub fn cmd_stats(cfg: &RunConfig) -> Result<anchors::BoxStats> {
    let gt = DatasetLayout::new(&cfg.out).load_ground_truth()?;
    write_stats(&gt, &cfg.out.join("stats"), cfg.svg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorReport {
    pub mode: AnchorMode,
    pub anchors: AnchorSet,
    /// Matched fraction of the anchors at `cfg.anchor_tau`.
    pub matched_fraction: f64,
    pub best_possible_recall: f64,
    pub objective: Vec<f64>,
}

impl AnchorReport {
    pub fn to_text(&self, tau: f64) -> String {
        let mut s = String::new();
        writeln!(s, "mode = {}", self.mode).unwrap();
        writeln!(s, "anchors = {}", self.anchors.anchors.len()).unwrap();
        writeln!(s, "iou_threshold = {tau}").unwrap();
        writeln!(s, "matched_fraction = {:.6}", self.matched_fraction).unwrap();
        writeln!(s, "best_possible_recall = {:.6}", self.best_possible_recall).unwrap();
        if let Some(last) = self.objective.last() {
            writeln!(s, "kmeans_iterations = {}", self.objective.len() - 1).unwrap();
            writeln!(s, "kmeans_objective = {last:.6}").unwrap();
        }
        s
    }
}

pub fn anchor_report(gt: &[(String, Vec<Annotation>)], cfg: &RunConfig) -> Result<AnchorReport> {
    let b = boxes(gt);
    if b.is_empty() {
        return Err(Error::NoAnnotations);
    }
    let (anchors, objective) = match cfg.anchor_mode {
        AnchorMode::DefaultReport => (
            anchors::default_anchor_pyramid(&PyramidConfig::default())?,
            Vec::new(),
        ),
        AnchorMode::KMeans => {
            let r = anchors::kmeans_anchors(&b, cfg.anchor_k, cfg.seed)?;
            (r.anchors, r.objective)
        }
    };
    let m = anchors::match_rate(&b, &anchors, cfg.anchor_tau)?;
    Ok(AnchorReport {
        mode: cfg.anchor_mode,
        matched_fraction: m.matched_fraction,
        best_possible_recall: m.best_possible_recall,
        anchors,
        objective,
    })
}

/// Writes `anchors/{mode}_anchors.txt` and `anchors/{mode}_report.txt`.
pub fn cmd_anchors(cfg: &RunConfig) -> Result<AnchorReport> {
    let gt = DatasetLayout::new(&cfg.out).load_ground_truth()?;
    let report = anchor_report(&gt, cfg)?;
    let dir = cfg.out.join("anchors");
    write_text(
        &dir.join(format!("{}_anchors.txt", cfg.anchor_mode)),
        &report.anchors.to_text(),
    )?;
    write_text(
        &dir.join(format!("{}_report.txt", cfg.anchor_mode)),
        &report.to_text(cfg.anchor_tau),
    )?;
    Ok(report)
}

/// One prediction file per manifest image. Returns the detection count.
pub fn cmd_detect_baseline(cfg: &RunConfig) -> Result<usize> {
    cfg.validate()?;
    let layout = DatasetLayout::new(&cfg.out);
    let ids = layout.read_manifest()?;
    let dir = cfg.predictions_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let counts: Vec<Result<usize>> = with_pool(cfg.jobs, || {
        ids.par_iter()
            .map(|id| {
                let image = dataset::read_png(layout.image_path(id))?;
                let dets = baseline::detect(&image, &cfg.detector)?;
                dataset::write_prediction_file(&dets, dir.join(format!("{id}.txt")))?;
                Ok(dets.len())
            })
            .collect()
    })?;
    counts.into_iter().sum()
}

/// Writes `eval/summary.csv` and `eval/report.txt`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvalSummary> {
    let gt = DatasetLayout::new(&cfg.out).load_ground_truth()?;
    let preds = dataset::read_predictions(cfg.predictions_dir())?;
    let summary = eval::evaluate(&gt, &preds, &cfg.eval_options()?)?;
    let dir = cfg.out.join("eval");
    write_text(&dir.join("summary.csv"), &summary.to_csv())?;
    write_text(&dir.join("report.txt"), &summary.to_report())?;
    Ok(summary)
}
