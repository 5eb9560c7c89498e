use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::{derive_channel, grid_points, receive, sub_seed, validate_points, ChannelConfig, ReferencePoint};
use super::fm::{fm_modulate, lowpass_message};
use crate::artifact::{sha256_hex, write_atomic, write_dir_atomic};
use crate::{Error, Result};

/// Recording days; training data comes from day 1 only.
pub const DAYS: u32 = 3;
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const CONFIG_FILE: &str = "config.toml";
const MANIFEST_HEADER: &str = "# wkpnet dataset manifest v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "test-day1")]
    TestDay1,
    #[serde(rename = "test-day2")]
    TestDay2,
    #[serde(rename = "test-day3")]
    TestDay3,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::TestDay1, Split::TestDay2, Split::TestDay3];

    pub fn day(self) -> u32 {
        match self {
            Split::Train | Split::TestDay1 => 1,
            Split::TestDay2 => 2,
            Split::TestDay3 => 3,
        }
    }

    pub fn test_for_day(day: u32) -> Option<Split> {
        match day {
            1 => Some(Split::TestDay1),
            2 => Some(Split::TestDay2),
            3 => Some(Split::TestDay3),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestDay1 => "test-day1",
            Split::TestDay2 => "test-day2",
            Split::TestDay3 => "test-day3",
        }
    }

    fn file_name(self) -> String {
        format!("{}.iq", self.as_str())
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::format("manifest", format!("unknown split {s:?}")))
    }
}

/// Everything that determines a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Grid spacing in meters.
    pub spacing: f64,
    pub train_per_point: usize,
    /// Test examples per point for each of the three days.
    pub test_per_point: usize,
    pub window_len: usize,
    pub sample_rate: f64,
    /// Per-example SNR is uniform on this range (dB).
    pub snr_db: [f64; 2],
    /// Station carrier offsets from band center (Hz).
    pub station_offsets: Vec<f64>,
    pub deviation: f64,
    pub message_bandwidth: f64,
    pub channel: ChannelConfig,
    pub seed: u64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig::indoor()
    }
}

impl SignalConfig {
    /// 4x4 points at 1 m.
    pub fn indoor() -> Self {
        SignalConfig {
            grid_rows: 4,
            grid_cols: 4,
            spacing: 1.0,
            train_per_point: 200,
            test_per_point: 50,
            window_len: 4096,
            sample_rate: 4e6,
            snr_db: [5.0, 20.0],
            station_offsets: vec![-1.2e6, 0.0, 1.2e6],
            deviation: 75e3,
            message_bandwidth: 15e3,
            channel: ChannelConfig::default(),
            seed: 0,
        }
    }

    /// 4x4 points at 5 m with lower SNR.
    pub fn outdoor() -> Self {
        SignalConfig {
            spacing: 5.0,
            snr_db: [0.0, 15.0],
            channel: ChannelConfig {
                correlation_length: 10.0,
                ..ChannelConfig::default()
            },
            ..SignalConfig::indoor()
        }
    }

    pub fn num_points(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn points(&self) -> Vec<ReferencePoint> {
        grid_points(self.grid_rows, self.grid_cols, self.spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points() < 2 {
            return Err(Error::Config("need at least two reference points".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config("grid spacing must be positive".into()));
        }
        if self.window_len == 0 || !(self.sample_rate > 0.0) {
            return Err(Error::Config("window length and sample rate must be positive".into()));
        }
        let [lo, hi] = self.snr_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad snr range [{lo}, {hi}]")));
        }
        if self.station_offsets.is_empty() {
            return Err(Error::Config("need at least one station".into()));
        }
        if self.station_offsets.iter().any(|f| f.abs() >= self.sample_rate / 2.0) {
            return Err(Error::Config("station offset outside the simulated band".into()));
        }
        if !(self.deviation > 0.0 && self.message_bandwidth > 0.0) {
            return Err(Error::Config("deviation and message bandwidth must be positive".into()));
        }
        self.channel.validate(self.window_len)?;
        validate_points(&self.points())
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn config_hash(&self) -> Result<String> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        Ok(sha256_hex(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleEntry {
    pub file: String,
    /// Byte offset of the first I sample.
    pub offset: u64,
    pub label: usize,
    pub day: u32,
    pub split: Split,
    pub snr_db: f64,
}

/// Index of a generated dataset: points, every example's location in the
/// binary files, and the generator config hash.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub points: Vec<ReferencePoint>,
    pub examples: Vec<ExampleEntry>,
    pub window_len: usize,
    pub sample_rate: f64,
    pub config_hash: String,
}

impl DatasetManifest {
    pub fn num_classes(&self) -> usize {
        self.points.len()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ExampleEntry> {
        self.examples.iter().filter(move |e| e.split == split)
    }

    pub fn validate(&self) -> Result<()> {
        validate_points(&self.points).map_err(|e| Error::format("manifest", e.to_string()))?;
        if let Some(e) = self.examples.iter().find(|e| e.label >= self.points.len()) {
            return Err(Error::format("manifest", format!("label {} has no point", e.label)));
        }
        Ok(())
    }

    /// Key/value header followed by a whitespace-separated example table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MANIFEST_HEADER}");
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "sample_rate = {}", self.sample_rate);
        let _ = writeln!(s, "window_len = {}", self.window_len);
        let _ = writeln!(s, "points = {}", self.points.len());
        let _ = writeln!(s, "examples = {}", self.examples.len());
        let _ = writeln!(s, "\n[points]\nid x y");
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p.id, p.coord.0, p.coord.1);
        }
        let _ = writeln!(s, "\n[examples]\nfile offset label day split snr_db");
        for e in &self.examples {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {:.6}",
                e.file, e.offset, e.label, e.day, e.split, e.snr_db
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |d: String| Error::format("manifest", d);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MANIFEST_HEADER) {
            return Err(bad("missing header".into()));
        }
        let mut keys = std::collections::BTreeMap::new();
        let mut section = "";
        let mut points = Vec::new();
        let mut examples = Vec::new();
        for line in lines {
            if line.starts_with('[') {
                section = line;
                continue;
            }
            match section {
                "" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
                    keys.insert(k.trim().to_string(), v.trim().to_string());
                }
                "[points]" if line == "id x y" => {}
                "[points]" => {
                    let f: Vec<&str> = line.split_whitespace().collect();
                    let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
                    if f.len() != 3 {
                        return Err(bad(format!("point row {line:?}")));
                    }
                    points.push(ReferencePoint {
                        id: f[0].parse().map_err(|e| bad(format!("{e}")))?,
                        coord: (parse(f[1])?, parse(f[2])?),
                    });
                }
                "[examples]" if line.starts_with("file ") => {}
                "[examples]" => {
                    let f: Vec<&str> = line.split_whitespace().collect();
                    if f.len() != 6 {
                        return Err(bad(format!("example row {line:?}")));
                    }
                    let num = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("{s:?}: {e}")));
                    examples.push(ExampleEntry {
                        file: f[0].to_string(),
                        offset: num(f[1])?,
                        label: num(f[2])? as usize,
                        day: num(f[3])? as u32,
                        split: f[4].parse()?,
                        snr_db: f[5].parse().map_err(|e| bad(format!("{e}")))?,
                    });
                }
                other => return Err(bad(format!("unknown section {other}"))),
            }
        }
        let key = |k: &str| keys.get(k).ok_or_else(|| bad(format!("missing key {k}")));
        let manifest = DatasetManifest {
            config_hash: key("config_hash")?.clone(),
            sample_rate: key("sample_rate")?.parse().map_err(|e| bad(format!("{e}")))?,
            window_len: key("window_len")?.parse().map_err(|e| bad(format!("{e}")))?,
            points,
            examples,
        };
        let count = |k: &str| -> Result<usize> { key(k)?.parse().map_err(|e| bad(format!("{e}"))) };
        if count("points")? != manifest.points.len() || count("examples")? != manifest.examples.len() {
            return Err(bad("row counts disagree with header".into()));
        }
        manifest.validate()?;
        Ok(manifest)
    }
}

/// One received example.
#[derive(Debug, Clone, PartialEq)]
pub struct IqRecording {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub label: usize,
    pub day: u32,
    pub snr_db: f64,
}

const TAG_EXAMPLE: u64 = 10;

/// Synthesizes one example: independent station messages summed at unit
/// total power, passed through the (point, day) channel with noise.
fn synthesize(config: &SignalConfig, point: &ReferencePoint, day: u32, index: usize) -> Result<IqRecording> {
    let seed = sub_seed(config.seed, &[TAG_EXAMPLE, point.id as u64, day as u64, index as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.window_len;
    let norm = (config.station_offsets.len() as f64).sqrt();
    let mut tx = vec![Complex64::new(0.0, 0.0); n];
    for &offset in &config.station_offsets {
        let message = lowpass_message(&mut rng, n, config.message_bandwidth, config.sample_rate);
        let rotation = Complex64::from_polar(1.0 / norm, rng.random_range(0.0..std::f64::consts::TAU));
        let s = fm_modulate(&message, config.deviation, offset, config.sample_rate)?;
        tx.iter_mut().zip(s).for_each(|(t, v)| *t += rotation * v);
    }
    let [lo, hi] = config.snr_db;
    let snr_db = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let channel = derive_channel(point, day, config.seed, &config.channel, n)?;
    let samples = receive(&tx, &channel, snr_db, rng.random())?;
    Ok(IqRecording {
        samples,
        sample_rate: config.sample_rate,
        label: point.id,
        day,
        snr_db,
    })
}

fn encode(samples: &[Complex64], out: &mut Vec<u8>) {
    for v in samples {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
}

/// Writes `<split>.iq` files, `manifest.txt` and `config.toml` into `out`.
///
/// Day-1 cells hold `train_per_point + test_per_point` examples, days 2 and 3
/// `test_per_point`. Example `i` of a cell is seeded by (seed, point, day, i)
/// alone, so the output is a pure function of the config.
pub fn generate_dataset(config: &SignalConfig, out: &Path, overwrite: bool) -> Result<DatasetManifest> {
    config.validate()?;
    let config_hash = config.config_hash()?;
    let points = config.points();
    let mut manifest = DatasetManifest {
        points: points.clone(),
        examples: Vec::new(),
        window_len: config.window_len,
        sample_rate: config.sample_rate,
        config_hash,
    };
    let mut files: Vec<(Split, Vec<u8>)> = Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
    for (split_idx, split) in Split::ALL.into_iter().enumerate() {
        let (first, count) = match split {
            Split::Train => (0, config.train_per_point),
            Split::TestDay1 => (config.train_per_point, config.test_per_point),
            _ => (0, config.test_per_point),
        };
        for point in &points {
            for i in first..first + count {
                let rec = synthesize(config, point, split.day(), i)?;
                let buf = &mut files[split_idx].1;
                manifest.examples.push(ExampleEntry {
                    file: split.file_name(),
                    offset: buf.len() as u64,
                    label: rec.label,
                    day: rec.day,
                    split,
                    snr_db: rec.snr_db,
                });
                encode(&rec.samples, buf);
            }
        }
    }
    let config_text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    write_dir_atomic(out, overwrite, |dir| {
        for (split, bytes) in &files {
            write_atomic(&dir.join(split.file_name()), bytes)?;
        }
        write_atomic(&dir.join(CONFIG_FILE), config_text.as_bytes())?;
        write_atomic(&dir.join(MANIFEST_FILE), manifest.to_text().as_bytes())
    })?;
    Ok(manifest)
}

/// A generated dataset on disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Dataset {
            dir: dir.to_path_buf(),
            manifest: DatasetManifest::parse(&text)?,
        })
    }

    /// The generator config stored alongside the manifest.
    pub fn config(&self) -> Result<SignalConfig> {
        let path = self.dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::format("dataset config", e.to_string()))
    }

    /// All examples of `split` in manifest order.
    pub fn load_split(&self, split: Split) -> Result<Vec<IqRecording>> {
        let mut cache: Option<(String, Vec<u8>)> = None;
        let bytes_per = self.manifest.window_len * 8;
        let mut out = Vec::new();
        for e in self.manifest.split(split) {
            if cache.as_ref().map(|c| &c.0) != Some(&e.file) {
                let path = self.dir.join(&e.file);
                let bytes = fs::read(&path).map_err(|err| Error::io(&path, err))?;
                cache = Some((e.file.clone(), bytes));
            }
            let bytes = &cache.as_ref().expect("loaded above").1;
            let start = e.offset as usize;
            let chunk = bytes
                .get(start..start + bytes_per)
                .ok_or_else(|| Error::format("iq file", format!("{} truncated at {start}", e.file)))?;
            let samples = chunk
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
                    let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
                    Complex64::new(re as f64, im as f64)
                })
                .collect();
            out.push(IqRecording {
                samples,
                sample_rate: self.manifest.sample_rate,
                label: e.label,
                day: e.day,
                snr_db: e.snr_db,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SignalConfig {
        SignalConfig {
            grid_rows: 2,
            grid_cols: 2,
            train_per_point: 0,
            test_per_point: 2,
            window_len: 512,
            ..SignalConfig::indoor()
        }
    }

    #[test]
    fn counts_and_split_tags() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(&tiny(), &dir.path().join("d"), false).unwrap();
        assert_eq!(m.examples.len(), 24);
        for split in [Split::TestDay1, Split::TestDay2, Split::TestDay3] {
            assert_eq!(m.split(split).count(), 8);
            assert!(m.split(split).all(|e| e.day == split.day()));
        }
        let c = SignalConfig { train_per_point: 3, ..tiny() };
        let m = generate_dataset(&c, &dir.path().join("e"), false).unwrap();
        assert_eq!(m.split(Split::Train).count(), 12);
        assert!(m.split(Split::Train).all(|e| e.day == 1));
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d");
        let m = generate_dataset(&tiny(), &path, false).unwrap();
        let ds = Dataset::open(&path).unwrap();
        assert_eq!(ds.manifest.points, m.points);
        assert_eq!(ds.manifest.examples.len(), m.examples.len());
        assert_eq!(ds.config().unwrap(), tiny());
        let recs = ds.load_split(Split::TestDay2).unwrap();
        assert_eq!(recs.len(), 8);
        assert!(recs.iter().all(|r| r.samples.len() == 512 && r.day == 2));
    }

    #[test]
    fn hash_tracks_every_parameter() {
        let base = tiny().config_hash().unwrap();
        assert_eq!(base, tiny().config_hash().unwrap());
        let mut c = tiny();
        c.channel.drift += 0.01;
        assert_ne!(c.config_hash().unwrap(), base);
        let mut c = tiny();
        c.seed = 1;
        assert_ne!(c.config_hash().unwrap(), base);
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d");
        generate_dataset(&tiny(), &path, false).unwrap();
        assert!(matches!(generate_dataset(&tiny(), &path, false), Err(Error::OutputExists(_))));
        generate_dataset(&tiny(), &path, true).unwrap();
    }

    #[test]
    fn rejects_malformed_manifest() {
        assert!(DatasetManifest::parse("nonsense").is_err());
        let m = DatasetManifest {
            points: grid_points(1, 2, 1.0),
            examples: vec![],
            window_len: 8,
            sample_rate: 1.0,
            config_hash: "x".into(),
        };
        let text = m.to_text().replace("points = 2", "points = 3");
        assert!(DatasetManifest::parse(&text).is_err());
        assert_eq!(DatasetManifest::parse(&m.to_text()).unwrap(), m);
    }
}
