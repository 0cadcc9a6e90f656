//! Boxes from signal metadata and the on-disk dataset.
//!
//! Layout under a dataset root:
//!
//! ```text
//! images/{scene_id}.png        8-bit grayscale spectrogram
//! labels/{scene_id}.txt        `class cx cy w h`, normalized, 6 decimals
//! predictions/{scene_id}.txt   `class cx cy w h score`
//! provenance/{scene_id}.txt    `key = value` echo of the scene metadata
//! manifest.txt                 one scene id per line
//! split.txt                    `train` / `test` sections
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::iq::{SignalClass, SignalSpec};
use crate::scene::{SceneConfig, SplitManifest};
use crate::spectrogram::SpectrogramImage;
use crate::{Error, Result, BAND_EDGE_HZ, CAPTURE_DURATION_S, IMAGE_SIZE};

const SIDE: f64 = IMAGE_SIZE as f64;

/// Axis-aligned box in pixel coordinates, `[0, 512]` on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidArgument(format!("degenerate box {b:?}")));
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn clamp_to_image(self) -> Self {
        Self {
            x_min: self.x_min.clamp(0.0, SIDE),
            y_min: self.y_min.clamp(0.0, SIDE),
            x_max: self.x_max.clamp(0.0, SIDE),
            y_max: self.y_max.clamp(0.0, SIDE),
        }
    }

    /// `[cx, cy, w, h]` divided by the image side.
    pub fn to_normalized(&self) -> [f64; 4] {
        [
            (self.x_min + self.x_max) / 2.0 / SIDE,
            (self.y_min + self.y_max) / 2.0 / SIDE,
            self.width() / SIDE,
            self.height() / SIDE,
        ]
    }

    pub fn from_normalized([cx, cy, w, h]: [f64; 4]) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "non-positive size {w} x {h}"
            )));
        }
        Self::new(
            (cx - w / 2.0) * SIDE,
            (cy - h / 2.0) * SIDE,
            (cx + w / 2.0) * SIDE,
            (cy + h / 2.0) * SIDE,
        )
        .map(Self::clamp_to_image)
    }
}

/// Pixel column of frequency `f_hz` (column 0 = -50 MHz).
pub fn freq_to_x(f_hz: f64) -> f64 {
    (f_hz + BAND_EDGE_HZ) / (2.0 * BAND_EDGE_HZ) * SIDE
}

/// Pixel row of time `t_s` (row 0 = start of capture).
pub fn time_to_y(t_s: f64) -> f64 {
    t_s / CAPTURE_DURATION_S * SIDE
}

/// Ground-truth box of a signal: its band across its lifetime.
pub fn bbox_from_spec(spec: &SignalSpec) -> BoundingBox {
    let half = spec.bandwidth_hz / 2.0;
    BoundingBox {
        x_min: freq_to_x(spec.center_freq_hz - half),
        x_max: freq_to_x(spec.center_freq_hz + half),
        y_min: time_to_y(spec.arrival_s),
        y_max: time_to_y(spec.arrival_s + spec.duration_s),
    }
    .clamp_to_image()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub class_id: u32,
    pub bbox: BoundingBox,
}

impl Annotation {
    pub fn from_spec(spec: &SignalSpec) -> Self {
        Self {
            class_id: spec.class.class_id(),
            bbox: bbox_from_spec(spec),
        }
    }
}

pub fn annotations_for(scene: &SceneConfig) -> Vec<Annotation> {
    scene.specs.iter().map(Annotation::from_spec).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub class_id: u32,
    pub bbox: BoundingBox,
    pub score: f64,
}

fn label_line(out: &mut String, class_id: u32, bbox: &BoundingBox) {
    let [cx, cy, w, h] = bbox.to_normalized();
    write!(out, "{class_id} {cx:.6} {cy:.6} {w:.6} {h:.6}").unwrap();
}

pub fn labels_to_text(annotations: &[Annotation]) -> String {
    let mut s = String::new();
    for a in annotations {
        label_line(&mut s, a.class_id, &a.bbox);
        s.push('\n');
    }
    s
}

pub fn predictions_to_text(detections: &[Detection]) -> String {
    let mut s = String::new();
    for d in detections {
        label_line(&mut s, d.class_id, &d.bbox);
        writeln!(s, " {:.6}", d.score).unwrap();
    }
    s
}

struct Row {
    class_id: u32,
    bbox: BoundingBox,
    score: Option<f64>,
}

fn parse_row(line: &str, path: &Path, lineno: usize, with_score: bool) -> Result<Row> {
    let err = |m: String| Error::parse(path, lineno, m);
    let fields: Vec<&str> = line.split_whitespace().collect();
    let want = if with_score { 6 } else { 5 };
    if fields.len() != want {
        let what = if with_score && fields.len() == 5 {
            "missing score column".to_string()
        } else {
            format!("expected {want} fields, found {}", fields.len())
        };
        return Err(err(what));
    }
    let class_id: u32 = fields[0]
        .parse()
        .map_err(|_| err(format!("bad class id `{}`", fields[0])))?;
    if SignalClass::from_class_id(class_id).is_none() {
        return Err(err(format!("class id {class_id} out of range")));
    }
    let mut nums = [0.0; 5];
    for (slot, text) in nums.iter_mut().zip(&fields[1..]) {
        *slot = text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("bad number `{text}`")))?;
    }
    let bbox = BoundingBox::from_normalized([nums[0], nums[1], nums[2], nums[3]])
        .map_err(|e| err(e.to_string()))?;
    let score = if with_score {
        let s = nums[4];
        if !(0.0..=1.0).contains(&s) {
            return Err(err(format!("score {s} outside [0, 1]")));
        }
        Some(s)
    } else {
        None
    };
    Ok(Row {
        class_id,
        bbox,
        score,
    })
}

fn parse_rows(text: &str, path: &Path, with_score: bool) -> Result<Vec<Row>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l, path, i + 1, with_score))
        .collect()
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<Annotation>> {
    Ok(parse_rows(text, path, false)?
        .into_iter()
        .map(|r| Annotation {
            class_id: r.class_id,
            bbox: r.bbox,
        })
        .collect())
}

pub fn parse_predictions(text: &str, path: &Path) -> Result<Vec<Detection>> {
    Ok(parse_rows(text, path, true)?
        .into_iter()
        .map(|r| Detection {
            class_id: r.class_id,
            bbox: r.bbox,
            score: r.score.unwrap_or_default(),
        })
        .collect())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_label_file(annotations: &[Annotation], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &labels_to_text(annotations))
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    parse_labels(&read_text(path)?, path)
}

pub fn write_prediction_file(detections: &[Detection], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &predictions_to_text(detections))
}

pub fn read_prediction_file(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    parse_predictions(&read_text(path)?, path)
}

/// Every `*.txt` in `dir`, keyed by file stem. A missing directory reads
/// as no predictions.
pub fn read_predictions(dir: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<Detection>>> {
    let dir = dir.as_ref();
    let mut out = BTreeMap::new();
    if !dir.exists() {
        return Ok(out);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        out.insert(stem.to_string(), read_prediction_file(&path)?);
    }
    Ok(out)
}

/// Gray level of a `[0, 1]` pixel: `floor(p * 255 + 0.5)`.
pub fn quantize(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn write_png(image: &SpectrogramImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let side = SpectrogramImage::SIZE as u32;
    let mut encoder = png::Encoder::new(BufWriter::new(file), side, side);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = image.pixels().iter().map(|&p| quantize(p)).collect();
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Png(e.to_string()))?;
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}

/// Raw 8-bit gray levels of a dataset PNG.
pub fn read_png_gray(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let side = SpectrogramImage::SIZE as u32;
    if info.width != side
        || info.height != side
        || info.color_type != png::ColorType::Grayscale
        || info.bit_depth != png::BitDepth::Eight
    {
        return Err(Error::Png(format!(
            "{}: expected {side}x{side} 8-bit grayscale",
            path.display()
        )));
    }
    buf.truncate(info.buffer_size());
    Ok(buf)
}

pub fn read_png(path: impl AsRef<Path>) -> Result<SpectrogramImage> {
    let gray = read_png_gray(path)?;
    SpectrogramImage::new(gray.into_iter().map(|v| v as f64 / 255.0).collect())
}

/// `key = value` text describing a scene exactly (floats use shortest
/// round-trip formatting).
pub fn provenance_to_text(scene: &SceneConfig) -> String {
    let mut s = String::new();
    let combo: Vec<&str> = scene.combo.iter().map(|c| c.name()).collect();
    writeln!(s, "scene_id = {}", scene.scene_id()).unwrap();
    writeln!(s, "combo_index = {}", scene.combo_index).unwrap();
    writeln!(s, "combo = {}", combo.join(",")).unwrap();
    writeln!(s, "config_index = {}", scene.config_index).unwrap();
    writeln!(s, "realization_index = {}", scene.realization_index).unwrap();
    writeln!(s, "seed = {}", scene.seed).unwrap();
    writeln!(s, "signals = {}", scene.specs.len()).unwrap();
    for (i, sp) in scene.specs.iter().enumerate() {
        writeln!(s, "signal.{i}.class = {}", sp.class).unwrap();
        writeln!(s, "signal.{i}.instance = {}", sp.instance).unwrap();
        writeln!(s, "signal.{i}.center_freq_hz = {:?}", sp.center_freq_hz).unwrap();
        writeln!(s, "signal.{i}.bandwidth_hz = {:?}", sp.bandwidth_hz).unwrap();
        writeln!(s, "signal.{i}.snr_db = {:?}", sp.snr_db).unwrap();
        writeln!(s, "signal.{i}.arrival_s = {:?}", sp.arrival_s).unwrap();
        writeln!(s, "signal.{i}.duration_s = {:?}", sp.duration_s).unwrap();
    }
    s
}

pub fn parse_provenance(text: &str, path: &Path) -> Result<SceneConfig> {
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
        kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    fn get<T: std::str::FromStr>(
        kv: &BTreeMap<String, (usize, String)>,
        key: &str,
        path: &Path,
    ) -> Result<T> {
        let (line, v) = kv
            .get(key)
            .ok_or_else(|| Error::parse(path, 0, format!("missing key `{key}`")))?;
        v.parse()
            .map_err(|_| Error::parse(path, *line, format!("bad value for `{key}`: `{v}`")))
    }
    let combo_text: String = get(&kv, "combo", path)?;
    let combo = combo_text
        .split(',')
        .map(|c| c.trim().parse::<SignalClass>())
        .collect::<Result<Vec<_>>>()?;
    let n: usize = get(&kv, "signals", path)?;
    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        let class: String = get(&kv, &format!("signal.{i}.class"), path)?;
        specs.push(SignalSpec {
            class: class.parse()?,
            instance: get(&kv, &format!("signal.{i}.instance"), path)?,
            center_freq_hz: get(&kv, &format!("signal.{i}.center_freq_hz"), path)?,
            bandwidth_hz: get(&kv, &format!("signal.{i}.bandwidth_hz"), path)?,
            snr_db: get(&kv, &format!("signal.{i}.snr_db"), path)?,
            arrival_s: get(&kv, &format!("signal.{i}.arrival_s"), path)?,
            duration_s: get(&kv, &format!("signal.{i}.duration_s"), path)?,
        });
    }
    Ok(SceneConfig {
        combo_index: get(&kv, "combo_index", path)?,
        combo,
        specs,
        config_index: get(&kv, "config_index", path)?,
        realization_index: get(&kv, "realization_index", path)?,
        seed: get(&kv, "seed", path)?,
    })
}

/// One stored scene.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub scene_id: String,
    pub image_path: PathBuf,
    pub annotations: Vec<Annotation>,
    pub provenance: SceneConfig,
}

/// Paths of a dataset rooted at one directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLayout {
    root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn image_path(&self, id: &str) -> PathBuf {
        self.root.join("images").join(format!("{id}.png"))
    }

    pub fn label_path(&self, id: &str) -> PathBuf {
        self.root.join("labels").join(format!("{id}.txt"))
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.root.join("predictions")
    }

    pub fn prediction_path(&self, id: &str) -> PathBuf {
        self.predictions_dir().join(format!("{id}.txt"))
    }

    pub fn provenance_path(&self, id: &str) -> PathBuf {
        self.root.join("provenance").join(format!("{id}.txt"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.txt")
    }

    pub fn split_path(&self) -> PathBuf {
        self.root.join("split.txt")
    }

    /// Writes image, labels and provenance for one scene.
    pub fn write_scene(
        &self,
        scene: &SceneConfig,
        image: &SpectrogramImage,
    ) -> Result<DatasetRecord> {
        let id = scene.scene_id();
        let annotations = annotations_for(scene);
        let image_path = self.image_path(&id);
        write_png(image, &image_path)?;
        write_label_file(&annotations, self.label_path(&id))?;
        write_text(&self.provenance_path(&id), &provenance_to_text(scene))?;
        Ok(DatasetRecord {
            scene_id: id,
            image_path,
            annotations,
            provenance: scene.clone(),
        })
    }

    pub fn write_manifest(&self, ids: &[String]) -> Result<()> {
        let mut s = String::new();
        for id in ids {
            s.push_str(id);
            s.push('\n');
        }
        write_text(&self.manifest_path(), &s)
    }

    pub fn read_manifest(&self) -> Result<Vec<String>> {
        let path = self.manifest_path();
        Ok(read_text(&path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect())
    }

    pub fn write_split(&self, split: &SplitManifest) -> Result<()> {
        write_text(&self.split_path(), &split.to_text())
    }

    pub fn read_split(&self) -> Result<SplitManifest> {
        let path = self.split_path();
        SplitManifest::parse(&read_text(&path)?, &path, 0)
    }

    pub fn read_provenance(&self, id: &str) -> Result<SceneConfig> {
        let path = self.provenance_path(id);
        parse_provenance(&read_text(&path)?, &path)
    }

    pub fn read_labels(&self, id: &str) -> Result<Vec<Annotation>> {
        let path = self.label_path(id);
        if !path.exists() {
            return Err(Error::MissingLabels(id.to_string()));
        }
        read_label_file(path)
    }

    pub fn read_record(&self, id: &str) -> Result<DatasetRecord> {
        let image_path = self.image_path(id);
        if !image_path.exists() {
            return Err(Error::io(
                &image_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing image"),
            ));
        }
        Ok(DatasetRecord {
            scene_id: id.to_string(),
            annotations: self.read_labels(id)?,
            provenance: self.read_provenance(id)?,
            image_path,
        })
    }

    /// Ground truth of every manifest scene, in manifest order.
    pub fn load_ground_truth(&self) -> Result<Vec<(String, Vec<Annotation>)>> {
        self.read_manifest()?
            .into_iter()
            .map(|id| {
                let a = self.read_labels(&id)?;
                Ok((id, a))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(fc: f64, bw: f64, arrival: f64, duration: f64) -> SignalSpec {
        SignalSpec::new(SignalClass::Qam, fc, bw, 10.0, arrival, duration)
    }

    #[test]
    fn bbox_examples() {
        let b = bbox_from_spec(&spec(0.0, 20e6, 0.0, 0.05));
        assert!((b.x_min - 204.8).abs() < 1e-9 && (b.x_max - 307.2).abs() < 1e-9);
        assert_eq!((b.y_min, b.y_max), (0.0, 512.0));
        let b = bbox_from_spec(&spec(-50e6 + 5e6, 10e6, 0.01, 0.01));
        assert_eq!(b.x_min, 0.0);
        let b = bbox_from_spec(&spec(0.0, 1e8, 0.0, 0.05));
        assert_eq!(
            (b.x_min, b.y_min, b.x_max, b.y_max),
            (0.0, 0.0, 512.0, 512.0)
        );
    }

    #[test]
    fn bbox_is_monotone_in_metadata() {
        let a = bbox_from_spec(&spec(1e6, 5e6, 0.01, 0.01));
        let wider = bbox_from_spec(&spec(1e6, 8e6, 0.01, 0.01));
        let later = bbox_from_spec(&spec(1e6, 5e6, 0.02, 0.01));
        let longer = bbox_from_spec(&spec(1e6, 5e6, 0.01, 0.02));
        assert!(wider.width() > a.width());
        assert!(later.y_min > a.y_min);
        assert!(longer.height() > a.height());
    }

    #[test]
    fn label_line_format() {
        let a = Annotation {
            class_id: 2,
            bbox: BoundingBox::new(204.8, 0.0, 307.2, 512.0).unwrap(),
        };
        assert_eq!(
            labels_to_text(&[a]),
            "2 0.500000 0.500000 0.200000 1.000000\n"
        );
        assert_eq!(labels_to_text(&[]), "");
    }

    #[test]
    fn prediction_parsing() {
        let p = Path::new("p.txt");
        let d = parse_predictions("2 0.5 0.5 0.2 1.0 0.97\n", p).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].class_id, 2);
        assert_eq!(d[0].score, 0.97);
        let b = d[0].bbox;
        assert!((b.x_min - 204.8).abs() < 1e-9 && (b.x_max - 307.2).abs() < 1e-9);
        assert_eq!((b.y_min, b.y_max), (0.0, 512.0));

        let err = parse_predictions("1 0.5 0.5 0.1 0.1 0.5\n2 0.5 0.5 0.2 1.0\n", p).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("p.txt:2") && msg.contains("missing score"),
            "{msg}"
        );

        let err = parse_predictions("2 0.5 0.5 0.2 1.0 1.5\n", p).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        assert!(parse_predictions("", p).unwrap().is_empty());
    }

    #[test]
    fn label_errors_carry_line_numbers() {
        let p = Path::new("l.txt");
        let err = parse_labels("0 0.5 0.5 0.1 0.1\n9 0.5 0.5 0.1 0.1\n", p).unwrap_err();
        assert!(err.to_string().starts_with("l.txt:2:"), "{err}");
        let err = parse_labels("0 0.5 x 0.1 0.1\n", p).unwrap_err();
        assert!(err.to_string().starts_with("l.txt:1:"), "{err}");
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(1.0), 255);
    }

    #[test]
    fn provenance_round_trip() {
        let scene = SceneConfig {
            combo_index: 12,
            combo: vec![SignalClass::Ble, SignalClass::Wifi],
            specs: vec![
                spec(0.1234567891, 1.5e6, 0.001, 0.0123).with_instance(0),
                SignalSpec::new(SignalClass::Wifi, -3e6, 17.77e6, -4.2, 0.02, 0.03)
                    .with_instance(1),
            ],
            config_index: 3,
            realization_index: 4,
            seed: u64::MAX - 5,
        };
        let text = provenance_to_text(&scene);
        assert!(text.starts_with("scene_id = 12_03_04\n"));
        assert_eq!(parse_provenance(&text, Path::new("x")).unwrap(), scene);
    }
}
