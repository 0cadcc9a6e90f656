//! The dataset randomization protocol.
//!
//! For every combination of one to four signal classes, signal metadata
//! (center frequency, bandwidth, SNR) is drawn `configs_per_combo` times, and
//! each metadata draw is realized `realizations_per_config` times with fresh
//! arrival times and durations. With the defaults that is 56 x 20 x 5 scenes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::iq::{SignalClass, SignalSpec};
use crate::rng::{self, Stream};
use crate::{Error, Result, BAND_EDGE_HZ, CAPTURE_DURATION_S};

pub const DEFAULT_CONFIGS_PER_COMBO: usize = 20;
pub const DEFAULT_REALIZATIONS: usize = 5;
/// Upper bound on signal instances in one scene.
pub const MAX_INSTANCES: usize = 13;

const CONFIG_DOMAIN: u64 = 1;
const REALIZATION_DOMAIN: u64 = 2;
const SCENE_DOMAIN: u64 = 3;

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

impl UniformRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} range [{}, {}] is empty or non-finite",
                self.lo, self.hi
            )))
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * rng.random::<f64>()
        }
    }
}

/// Bounds for the uniformly drawn signal metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataRanges {
    /// Bandwidth for DSSS, QAM, AM and FM.
    pub bandwidth_hz: UniformRange,
    pub ble_bandwidth_hz: UniformRange,
    pub wifi_bandwidth_hz: UniformRange,
    /// Center frequencies are drawn from this range intersected with the
    /// positions that keep the whole band inside +-50 MHz.
    pub center_freq_hz: UniformRange,
    pub snr_db: UniformRange,
    pub arrival_max_s: f64,
    pub duration_min_s: f64,
    /// Signal instances per scene are drawn from `|combo|..=max_instances`;
    /// 0 means exactly one per class in the combination.
    pub max_instances: usize,
}

impl Default for MetadataRanges {
    fn default() -> Self {
        Self {
            bandwidth_hz: UniformRange::new(1e6, 20e6),
            ble_bandwidth_hz: UniformRange::new(1e6, 2e6),
            wifi_bandwidth_hz: UniformRange::new(10e6, 20e6),
            center_freq_hz: UniformRange::new(-BAND_EDGE_HZ, BAND_EDGE_HZ),
            snr_db: UniformRange::new(-5.0, 30.0),
            arrival_max_s: 0.04,
            duration_min_s: 0.0005,
            max_instances: 0,
        }
    }
}

impl MetadataRanges {
    pub fn bandwidth_for(&self, class: SignalClass) -> UniformRange {
        match class {
            SignalClass::Ble => self.ble_bandwidth_hz,
            SignalClass::Wifi => self.wifi_bandwidth_hz,
            _ => self.bandwidth_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("bandwidth", self.bandwidth_hz),
            ("ble bandwidth", self.ble_bandwidth_hz),
            ("wifi bandwidth", self.wifi_bandwidth_hz),
            ("center frequency", self.center_freq_hz),
            ("snr", self.snr_db),
        ] {
            r.validate(name)?;
        }
        for r in [
            self.bandwidth_hz,
            self.ble_bandwidth_hz,
            self.wifi_bandwidth_hz,
        ] {
            if r.lo <= 0.0 {
                return Err(Error::InvalidArgument("bandwidths must be positive".into()));
            }
            if r.hi > 2.0 * BAND_EDGE_HZ {
                return Err(Error::InvalidArgument(format!(
                    "maximum bandwidth {} Hz exceeds the 100 MHz capture",
                    r.hi
                )));
            }
            // The widest band must still have a feasible center frequency.
            feasible_center(self.center_freq_hz, r.hi)?;
        }
        if !(self.duration_min_s > 0.0 && self.arrival_max_s >= 0.0)
            || self.arrival_max_s + self.duration_min_s > CAPTURE_DURATION_S + 1e-12
        {
            return Err(Error::InvalidArgument(format!(
                "arrival max {} s and minimum duration {} s do not fit in 50 ms",
                self.arrival_max_s, self.duration_min_s
            )));
        }
        if self.max_instances > MAX_INSTANCES {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_INSTANCES} signal instances per scene"
            )));
        }
        Ok(())
    }
}

fn feasible_center(range: UniformRange, bw: f64) -> Result<UniformRange> {
    let lo = range.lo.max(-BAND_EDGE_HZ + bw / 2.0);
    let hi = range.hi.min(BAND_EDGE_HZ - bw / 2.0);
    if lo <= hi {
        Ok(UniformRange::new(lo, hi))
    } else {
        Err(Error::InvalidArgument(format!(
            "no center frequency in [{}, {}] keeps a {bw} Hz band inside +-50 MHz",
            range.lo, range.hi
        )))
    }
}

/// A set of signal classes with its position in the full enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combo {
    pub index: usize,
    pub classes: Vec<SignalClass>,
}

/// All subsets of `classes` with `min_k..=max_k` members, ordered by size
/// and then lexicographically by position in `classes`.
pub fn enumerate_combinations(
    classes: &[SignalClass],
    min_k: usize,
    max_k: usize,
) -> Result<Vec<Combo>> {
    if classes.is_empty() {
        return Err(Error::InvalidArgument("empty class set".into()));
    }
    if !(1 <= min_k && min_k <= max_k && max_k <= classes.len()) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= min_k <= max_k <= {}, got {min_k}..{max_k}",
            classes.len()
        )));
    }
    let mut out = Vec::new();
    for k in min_k..=max_k {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(Combo {
                index: out.len(),
                classes: idx.iter().map(|&i| classes[i]).collect(),
            });
            // Advance to the next k-subset in lexicographic order.
            let n = classes.len();
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// One scene: the signals present and where the scene sits in the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub combo_index: usize,
    pub combo: Vec<SignalClass>,
    pub specs: Vec<SignalSpec>,
    pub config_index: usize,
    pub realization_index: usize,
    /// Root of this scene's random streams.
    pub seed: u64,
}

impl SceneConfig {
    pub fn scene_id(&self) -> String {
        scene_id(self.combo_index, self.config_index, self.realization_index)
    }
}

pub fn scene_id(combo: usize, config: usize, realization: usize) -> String {
    format!("{combo:02}_{config:02}_{realization:02}")
}

/// Draws center frequency, bandwidth and SNR for every signal of `combo`.
/// Arrival and duration are left spanning the whole capture until
/// [`realize`] draws them.
pub fn sample_config(
    combo: &Combo,
    ranges: &MetadataRanges,
    rng: &mut Stream,
) -> Result<SceneConfig> {
    ranges.validate()?;
    if combo.classes.is_empty() || combo.classes.len() > MAX_INSTANCES {
        return Err(Error::InvalidArgument(
            "combination must hold 1..=13 classes".into(),
        ));
    }
    let mut classes = combo.classes.clone();
    if ranges.max_instances > classes.len() {
        let total = rng.random_range(classes.len()..=ranges.max_instances);
        while classes.len() < total {
            let extra = combo.classes[rng.random_range(0..combo.classes.len())];
            classes.push(extra);
        }
    }
    let mut specs = Vec::with_capacity(classes.len());
    for (i, &class) in classes.iter().enumerate() {
        let bw = ranges.bandwidth_for(class).sample(rng);
        let fc = feasible_center(ranges.center_freq_hz, bw)?.sample(rng);
        let snr = ranges.snr_db.sample(rng);
        specs.push(
            SignalSpec::new(class, fc, bw, snr, 0.0, CAPTURE_DURATION_S).with_instance(i as u32),
        );
    }
    Ok(SceneConfig {
        combo_index: combo.index,
        combo: combo.classes.clone(),
        specs,
        config_index: 0,
        realization_index: 0,
        seed: 0,
    })
}

/// Draws arrival ~ U[0, arrival_max] and duration ~ U[duration_min,
/// 50 ms - arrival] for every signal.
pub fn realize(config: &SceneConfig, ranges: &MetadataRanges, rng: &mut Stream) -> SceneConfig {
    let mut out = config.clone();
    for spec in &mut out.specs {
        let arrival = UniformRange::new(0.0, ranges.arrival_max_s).sample(rng);
        let longest = (CAPTURE_DURATION_S - arrival).max(ranges.duration_min_s);
        let duration = UniformRange::new(ranges.duration_min_s, longest).sample(rng);
        spec.arrival_s = arrival;
        spec.duration_s = duration.min(CAPTURE_DURATION_S - arrival);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub master_seed: u64,
    pub combos: Vec<Combo>,
    pub configs_per_combo: usize,
    pub realizations_per_config: usize,
    pub ranges: MetadataRanges,
}

impl DatasetPlan {
    /// All 56 combinations of one to four classes, 20 configurations each,
    /// 5 realizations per configuration.
    pub fn protocol(master_seed: u64) -> Self {
        Self {
            master_seed,
            combos: enumerate_combinations(&SignalClass::ALL, 1, 4).expect("static class set"),
            configs_per_combo: DEFAULT_CONFIGS_PER_COMBO,
            realizations_per_config: DEFAULT_REALIZATIONS,
            ranges: MetadataRanges::default(),
        }
    }

    /// Keeps only the first `n` combinations of each size.
    pub fn limit_combos_per_size(mut self, n: usize) -> Self {
        let mut seen = std::collections::BTreeMap::<usize, usize>::new();
        self.combos.retain(|c| {
            let count = seen.entry(c.classes.len()).or_default();
            *count += 1;
            *count <= n
        });
        self
    }

    pub fn scene_count(&self) -> usize {
        self.combos.len() * self.configs_per_combo * self.realizations_per_config
    }

    pub fn validate(&self) -> Result<()> {
        if self.combos.is_empty()
            || self.configs_per_combo == 0
            || self.realizations_per_config == 0
        {
            return Err(Error::InvalidArgument(
                "plan counts must be at least 1".into(),
            ));
        }
        if self.configs_per_combo > 100 || self.realizations_per_config > 100 {
            return Err(Error::InvalidArgument(
                "scene ids hold at most 100 configurations and realizations".into(),
            ));
        }
        self.ranges.validate()
    }
}

/// Expands the plan into its scenes, ordered by combination, configuration
/// and realization.
pub fn plan_dataset(plan: &DatasetPlan) -> Result<Vec<SceneConfig>> {
    plan.validate()?;
    let mut scenes = Vec::with_capacity(plan.scene_count());
    for combo in &plan.combos {
        let c = combo.index as u64;
        for j in 0..plan.configs_per_combo {
            let mut rng = rng::stream(rng::derive_path(
                plan.master_seed,
                &[CONFIG_DOMAIN, c, j as u64],
            ));
            let mut config = sample_config(combo, &plan.ranges, &mut rng)?;
            config.config_index = j;
            for r in 0..plan.realizations_per_config {
                let path = [c, j as u64, r as u64];
                let mut rng = rng::stream(rng::derive_path(
                    plan.master_seed,
                    &[REALIZATION_DOMAIN, path[0], path[1], path[2]],
                ));
                let mut scene = realize(&config, &plan.ranges, &mut rng);
                scene.realization_index = r;
                scene.seed =
                    rng::derive_path(plan.master_seed, &[SCENE_DOMAIN, path[0], path[1], path[2]]);
                scenes.push(scene);
            }
        }
    }
    Ok(scenes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Shuffled partition with `round(test_fraction * N)` test ids. Each side
/// keeps the input order.
pub fn split_train_test(
    scene_ids: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitManifest> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = scene_ids.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed));
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (id, t) in scene_ids.iter().zip(is_test) {
        if t {
            test.push(id.clone());
        } else {
            train.push(id.clone());
        }
    }
    Ok(SplitManifest { train, test, seed })
}

impl SplitManifest {
    /// `train` header, train ids, `test` header, test ids; one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::from("train\n");
        for id in &self.train {
            s.push_str(id);
            s.push('\n');
        }
        s.push_str("test\n");
        for id in &self.test {
            s.push_str(id);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &std::path::Path, seed: u64) -> Result<Self> {
        let mut out = SplitManifest {
            train: Vec::new(),
            test: Vec::new(),
            seed,
        };
        let mut section: Option<bool> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            match line {
                "" => {}
                "train" => section = Some(false),
                "test" => section = Some(true),
                id => match section {
                    Some(false) => out.train.push(id.to_string()),
                    Some(true) => out.test.push(id.to_string()),
                    None => {
                        return Err(Error::parse(
                            path,
                            i + 1,
                            "scene id before a section header",
                        ))
                    }
                },
            }
        }
        Ok(out)
    }
}
