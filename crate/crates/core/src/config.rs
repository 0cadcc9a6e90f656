//! Run configuration as line-oriented `key = value` text.
//!
//! Every key has an embedded default, so an empty file is a valid config and
//! [`RunConfig::to_text`] prints a file that reproduces the run exactly.
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::anchors::DEFAULT_K;
use crate::baseline::EnergyDetectorConfig;
use crate::eval::EvalOptions;
use crate::iq::NoiseModel;
use crate::scene::{DatasetPlan, MetadataRanges, UniformRange};
use crate::spectrogram::StftConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorMode {
    /// Match rate of the default pyramid.
    DefaultReport,
    KMeans,
}

impl std::str::FromStr for AnchorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default-report" | "default" => Ok(Self::DefaultReport),
            "kmeans" => Ok(Self::KMeans),
            _ => Err(Error::InvalidArgument(format!(
                "anchor mode must be default-report or kmeans, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for AnchorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DefaultReport => "default-report",
            Self::KMeans => "kmeans",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Dataset root shared by all commands.
    pub out: PathBuf,
    /// Worker threads; 0 uses every hardware thread.
    pub jobs: usize,
    /// `None` keeps every class combination.
    pub combos_per_k: Option<usize>,
    pub configs: usize,
    pub realizations: usize,
    pub test_fraction: f64,
    pub noise_psd: f64,
    pub ranges: MetadataRanges,
    pub stft: StftConfig,
    pub detector: EnergyDetectorConfig,
    pub class_agnostic: bool,
    pub max_dets: usize,
    /// Predictions directory; defaults to `<out>/predictions`.
    pub predictions: Option<PathBuf>,
    /// Optional file listing the scene ids to score, one per line.
    pub eval_ids: Option<PathBuf>,
    pub anchor_mode: AnchorMode,
    pub anchor_k: usize,
    pub anchor_tau: f64,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            out: PathBuf::from("dataset"),
            jobs: 0,
            combos_per_k: None,
            configs: 20,
            realizations: 5,
            test_fraction: 0.2,
            noise_psd: NoiseModel::default().psd,
            ranges: MetadataRanges::default(),
            stft: StftConfig::default(),
            detector: EnergyDetectorConfig::default(),
            class_agnostic: false,
            max_dets: crate::eval::DEFAULT_MAX_DETS,
            predictions: None,
            eval_ids: None,
            anchor_mode: AnchorMode::KMeans,
            anchor_k: DEFAULT_K,
            anchor_tau: 0.5,
            svg: true,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

fn parse_range(key: &str, v: &str) -> Result<UniformRange> {
    let (lo, hi) = v
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("{key}: expected \"lo, hi\", got {v:?}")))?;
    Ok(UniformRange::new(
        parse_num(key, lo.trim())?,
        parse_num(key, hi.trim())?,
    ))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let r = &mut self.ranges;
        match key.trim() {
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = parse_num(key, v)?,
            "combos_per_k" => {
                self.combos_per_k = if v == "all" {
                    None
                } else {
                    Some(parse_num(key, v)?)
                }
            }
            "configs" => self.configs = parse_num(key, v)?,
            "realizations" => self.realizations = parse_num(key, v)?,
            "test_fraction" => self.test_fraction = parse_num(key, v)?,
            "noise_psd" => self.noise_psd = parse_num(key, v)?,
            "bandwidth_hz" => r.bandwidth_hz = parse_range(key, v)?,
            "ble_bandwidth_hz" => r.ble_bandwidth_hz = parse_range(key, v)?,
            "wifi_bandwidth_hz" => r.wifi_bandwidth_hz = parse_range(key, v)?,
            "center_freq_hz" => r.center_freq_hz = parse_range(key, v)?,
            "snr_db" => r.snr_db = parse_range(key, v)?,
            "arrival_max_s" => r.arrival_max_s = parse_num(key, v)?,
            "duration_min_s" => r.duration_min_s = parse_num(key, v)?,
            "max_instances" => r.max_instances = parse_num(key, v)?,
            "nfft" => self.stft.nfft = parse_num(key, v)?,
            "window_len" => self.stft.window_len = parse_num(key, v)?,
            "hop" => self.stft.hop = parse_num(key, v)?,
            "detector_smooth_time" => self.detector.smooth_time = parse_num(key, v)?,
            "detector_smooth_freq" => self.detector.smooth_freq = parse_num(key, v)?,
            "detector_k" => self.detector.k = parse_num(key, v)?,
            "detector_connectivity" => self.detector.connectivity = v.parse()?,
            "detector_min_area" => self.detector.min_area = parse_num(key, v)?,
            "class_agnostic" => self.class_agnostic = parse_bool(key, v)?,
            "max_dets" => self.max_dets = parse_num(key, v)?,
            "predictions" => {
                self.predictions = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "eval_ids" => {
                self.eval_ids = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "anchor_mode" => self.anchor_mode = v.parse()?,
            "anchor_k" => self.anchor_k = parse_num(key, v)?,
            "anchor_tau" => self.anchor_tau = parse_num(key, v)?,
            "svg" => self.svg = parse_bool(key, v)?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Defaults overridden by each `key = value` line of `text`.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected key = value"))?;
            cfg.set(k, v)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let r = &self.ranges;
        let range = |u: UniformRange| format!("{:?}, {:?}", u.lo, u.hi);
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("out", self.out.display().to_string());
        kv("jobs", self.jobs.to_string());
        kv(
            "combos_per_k",
            self.combos_per_k.map_or("all".into(), |n| n.to_string()),
        );
        kv("configs", self.configs.to_string());
        kv("realizations", self.realizations.to_string());
        kv("test_fraction", format!("{:?}", self.test_fraction));
        kv("noise_psd", format!("{:?}", self.noise_psd));
        kv("bandwidth_hz", range(r.bandwidth_hz));
        kv("ble_bandwidth_hz", range(r.ble_bandwidth_hz));
        kv("wifi_bandwidth_hz", range(r.wifi_bandwidth_hz));
        kv("center_freq_hz", range(r.center_freq_hz));
        kv("snr_db", range(r.snr_db));
        kv("arrival_max_s", format!("{:?}", r.arrival_max_s));
        kv("duration_min_s", format!("{:?}", r.duration_min_s));
        kv("max_instances", r.max_instances.to_string());
        kv("nfft", self.stft.nfft.to_string());
        kv("window_len", self.stft.window_len.to_string());
        kv("hop", self.stft.hop.to_string());
        kv(
            "detector_smooth_time",
            self.detector.smooth_time.to_string(),
        );
        kv(
            "detector_smooth_freq",
            self.detector.smooth_freq.to_string(),
        );
        kv("detector_k", format!("{:?}", self.detector.k));
        kv(
            "detector_connectivity",
            self.detector.connectivity.to_string(),
        );
        kv("detector_min_area", self.detector.min_area.to_string());
        kv("class_agnostic", self.class_agnostic.to_string());
        kv("max_dets", self.max_dets.to_string());
        kv(
            "predictions",
            self.predictions
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv(
            "eval_ids",
            self.eval_ids
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv("anchor_mode", self.anchor_mode.to_string());
        kv("anchor_k", self.anchor_k.to_string());
        kv("anchor_tau", format!("{:?}", self.anchor_tau));
        kv("svg", self.svg.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs == 0 || self.realizations == 0 || self.combos_per_k == Some(0) {
            return Err(Error::InvalidArgument(
                "plan counts must be at least 1".into(),
            ));
        }
        if self.max_dets == 0 || self.anchor_k == 0 {
            return Err(Error::InvalidArgument(
                "max_dets and anchor_k must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.anchor_tau) {
            return Err(Error::InvalidArgument(
                "anchor_tau must be in [0, 1]".into(),
            ));
        }
        NoiseModel::new(self.noise_psd)?;
        self.stft.validate()?;
        self.detector.validate()?;
        self.ranges.validate()
    }

    pub fn plan(&self) -> DatasetPlan {
        let mut plan = DatasetPlan::protocol(self.seed);
        if let Some(n) = self.combos_per_k {
            plan = plan.limit_combos_per_size(n);
        }
        plan.configs_per_combo = self.configs;
        plan.realizations_per_config = self.realizations;
        plan.ranges = self.ranges.clone();
        plan
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_psd)
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        let image_ids = match &self.eval_ids {
            None => None,
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Some(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(String::from)
                        .collect(),
                )
            }
        };
        Ok(EvalOptions {
            class_agnostic: self.class_agnostic,
            max_dets: self.max_dets,
            image_ids,
        })
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.predictions
            .clone()
            .unwrap_or_else(|| crate::dataset::DatasetLayout::new(&self.out).predictions_dir())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("combos_per_k", "3").unwrap();
        cfg.set("snr_db", "10, 30").unwrap();
        cfg.set("detector_connectivity", "4").unwrap();
        cfg.set("eval_ids", "ids.txt").unwrap();
        cfg.set("predictions", "preds").unwrap();
        let back = RunConfig::parse(&cfg.to_text(), Path::new("c")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(
            RunConfig::parse(&RunConfig::default().to_text(), Path::new("c")).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn comments_blank_lines_and_errors() {
        let cfg = RunConfig::parse("# header\n\nseed = 11 # trailing\n", Path::new("c")).unwrap();
        assert_eq!(cfg.seed, 11);
        let err = RunConfig::parse("seed = 1\nbogus = 2\n", Path::new("c.txt")).unwrap_err();
        assert!(err.to_string().starts_with("c.txt:2:"), "{err}");
        assert!(RunConfig::parse("seed 1\n", Path::new("c")).is_err());
    }

    #[test]
    fn default_plan_is_protocol() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.plan().scene_count(), 5600);
        let mut small = cfg.clone();
        small.combos_per_k = Some(1);
        assert_eq!(small.plan().combos.len(), 4);
    }
}
