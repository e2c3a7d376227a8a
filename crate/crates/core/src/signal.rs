//! Marker recordings, online normalization, RNN input/target windows and the
//! train / cross-validation / test partition of a sequence.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest scale a normalizer channel may take, in mm.
pub const SCALE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreathingClass {
    Regular,
    Irregular,
    #[default]
    Unlabeled,
}

impl fmt::Display for BreathingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Regular => "regular",
            Self::Irregular => "irregular",
            Self::Unlabeled => "unlabeled",
        })
    }
}

/// A uniformly sampled recording of `n_markers` 3D positions (mm).
///
/// Positions are stored row-major: step `k` occupies
/// `positions[k * 3 * n_markers..(k + 1) * 3 * n_markers]`, marker-major
/// within the step (`m1x, m1y, m1z, m2x, ...`).
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerRecord {
    sample_period: f64,
    n_markers: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
    pub label: String,
    pub breathing_class: BreathingClass,
}

impl MarkerRecord {
    /// Builds a record whose time stamps are `k * sample_period`.
    pub fn new(sample_period: f64, n_markers: usize, positions: Vec<f64>) -> Result<Self> {
        let width = 3 * n_markers;
        if width == 0 {
            return Err(Error::InvalidParameter("record needs at least one marker".into()));
        }
        if !positions.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch {
                what: "record positions (multiple of 3 * n_markers)",
                expected: (positions.len() / width + 1) * width,
                found: positions.len(),
            });
        }
        let times = (0..positions.len() / width)
            .map(|k| k as f64 * sample_period)
            .collect();
        Self::with_times(sample_period, n_markers, times, positions)
    }

    fn with_times(
        sample_period: f64,
        n_markers: usize,
        times: Vec<f64>,
        positions: Vec<f64>,
    ) -> Result<Self> {
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if positions.is_empty() {
            return Err(Error::Empty("marker record has no time steps".into()));
        }
        if let Some(k) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate at step {}",
                k / (3 * n_markers)
            )));
        }
        Ok(Self {
            sample_period,
            n_markers,
            times,
            positions,
            label: String::new(),
            breathing_class: BreathingClass::Unlabeled,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_class(mut self, class: BreathingClass) -> Self {
        self.breathing_class = class;
        self
    }

    /// Overrides the sampling period, e.g. from a manifest entry.
    pub fn with_sample_period(mut self, sample_period: f64) -> Result<Self> {
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        self.sample_period = sample_period;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.n_coords()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    /// Number of scalar coordinates per step, `3 * n_markers`.
    pub fn n_coords(&self) -> usize {
        3 * self.n_markers
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Coordinates of all markers at step `k`.
    pub fn step(&self, k: usize) -> &[f64] {
        let w = self.n_coords();
        &self.positions[k * w..(k + 1) * w]
    }

    /// Converts a duration to a whole number of steps, rounding to nearest.
    pub fn steps(&self, seconds: f64) -> usize {
        (seconds / self.sample_period).round() as usize
    }
}

/// Reads a marker CSV: a header row, then `t_seconds, m1x, m1y, m1z, ...`.
///
/// The sampling period is inferred from the first and last time stamps.
pub fn load_record(path: impl AsRef<Path>) -> Result<MarkerRecord> {
    let path = path.as_ref();
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let header_width = reader.headers()?.len();
    if header_width < 4 || (header_width - 1) % 3 != 0 {
        return Err(parse_err(
            1,
            format!("header has {header_width} columns, expected 1 + 3 * n_markers"),
        ));
    }
    let n_markers = (header_width - 1) / 3;

    let mut times = Vec::new();
    let mut positions = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != header_width {
            return Err(parse_err(
                line,
                format!("expected {header_width} columns, found {}", row.len()),
            ));
        }
        for (col, cell) in row.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: not a number: {cell:?}", col + 1)))?;
            if !value.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value {cell:?}", col + 1)));
            }
            if col == 0 {
                times.push(value);
            } else {
                positions.push(value);
            }
        }
    }

    if times.is_empty() {
        return Err(parse_err(2, "file contains no data rows".into()));
    }
    if times.len() < 2 {
        return Err(parse_err(2, "need at least two rows to infer the sampling period".into()));
    }
    let period = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(period > 0.0) {
        return Err(parse_err(2, "time stamps are not increasing".into()));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(MarkerRecord::with_times(period, n_markers, times, positions)?.with_label(label))
}

/// Writes a record in the format read by [`load_record`].
pub fn write_record(record: &MarkerRecord, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["t_seconds".to_string()];
    for j in 1..=record.n_markers() {
        for axis in ["x", "y", "z"] {
            header.push(format!("m{j}{axis}"));
        }
    }
    writer.write_record(&header)?;
    for k in 0..record.len() {
        let row = std::iter::once(record.times[k])
            .chain(record.step(k).iter().copied())
            .map(|v| v.to_string());
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-coordinate affine map to roughly `[-1, 1]`, fitted once on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    offset: Vec<f64>,
    scale: Vec<f64>,
    floored: Vec<usize>,
}

impl Normalizer {
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Channels whose half-range fell below [`SCALE_FLOOR`].
    pub fn floored_channels(&self) -> &[usize] {
        &self.floored
    }

    pub fn n_coords(&self) -> usize {
        self.offset.len()
    }

    pub fn normalize_value(&self, channel: usize, value: f64) -> f64 {
        (value - self.offset[channel]) / self.scale[channel]
    }

    pub fn denormalize_value(&self, channel: usize, value: f64) -> f64 {
        value * self.scale[channel] + self.offset[channel]
    }

    /// Normalizes one step worth of coordinates.
    pub fn normalize(&self, coords: &[f64]) -> Vec<f64> {
        coords
            .iter()
            .enumerate()
            .map(|(c, &v)| self.normalize_value(c % self.n_coords(), v))
            .collect()
    }

    /// Inverse of [`Normalizer::normalize`].
    pub fn denormalize(&self, coords: &[f64]) -> Vec<f64> {
        coords
            .iter()
            .enumerate()
            .map(|(c, &v)| self.denormalize_value(c % self.n_coords(), v))
            .collect()
    }
}

/// Fits midpoint / half-range statistics over the steps in `window`.
pub fn fit_normalizer(record: &MarkerRecord, window: Range<usize>) -> Result<Normalizer> {
    if window.is_empty() {
        return Err(Error::Empty("normalizer window".into()));
    }
    if window.end > record.len() {
        return Err(Error::OutOfRange(format!(
            "normalizer window ends at {} but record has {} steps",
            window.end,
            record.len()
        )));
    }
    let width = record.n_coords();
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for k in window {
        for (c, &v) in record.step(k).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    let mut floored = Vec::new();
    let mut offset = Vec::with_capacity(width);
    let mut scale = Vec::with_capacity(width);
    for c in 0..width {
        offset.push(0.5 * (lo[c] + hi[c]));
        let half = 0.5 * (hi[c] - lo[c]);
        if half < SCALE_FLOOR {
            log::warn!(
                "record {:?}: coordinate {c} is constant over the normalization window, scale floored",
                record.label
            );
            floored.push(c);
            scale.push(SCALE_FLOOR);
        } else {
            scale.push(half);
        }
    }
    Ok(Normalizer {
        offset,
        scale,
        floored,
    })
}

/// One RNN training example: bias-prefixed history and the horizon target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    pub input: DVector<f64>,
    pub target: DVector<f64>,
    pub time_index: usize,
}

fn check_window(len: usize, shl: usize, horizon: usize, n: usize) -> Result<()> {
    if shl == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(format!(
            "history length and horizon must be at least one step (got L={shl}, h={horizon})"
        )));
    }
    if n + shl + horizon > len {
        return Err(Error::OutOfRange(format!(
            "window n={n}, L={shl}, h={horizon} needs step {} but record has {len} steps",
            n + shl + horizon - 1
        )));
    }
    Ok(())
}

/// Builds `u_n = [1, coords(n), ..., coords(n+L-1)]` and the target
/// `coords(n+L+h-1)`, all normalized.
pub fn build_io(
    record: &MarkerRecord,
    normalizer: &Normalizer,
    shl: usize,
    horizon: usize,
    n: usize,
) -> Result<WindowedSample> {
    crate::error::check_len("normalizer channels", record.n_coords(), normalizer.n_coords())?;
    check_window(record.len(), shl, horizon, n)?;
    let width = record.n_coords();
    let mut input = DVector::zeros(width * shl + 1);
    input[0] = 1.0;
    for (s, k) in (n..n + shl).enumerate() {
        for (c, &v) in record.step(k).iter().enumerate() {
            input[1 + s * width + c] = normalizer.normalize_value(c, v);
        }
    }
    let target = DVector::from_vec(normalizer.normalize(record.step(n + shl + horizon - 1)));
    Ok(WindowedSample {
        input,
        target,
        time_index: n,
    })
}

/// A record normalized once up front, for cheap repeated window extraction.
#[derive(Debug, Clone)]
pub struct NormalizedSeries {
    width: usize,
    values: Vec<f64>,
}

impl NormalizedSeries {
    pub fn new(record: &MarkerRecord, normalizer: &Normalizer) -> Result<Self> {
        crate::error::check_len("normalizer channels", record.n_coords(), normalizer.n_coords())?;
        Ok(Self {
            width: record.n_coords(),
            values: normalizer.normalize(record.positions()),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    /// Fills `input` with `u_n` in place; `input` must hold `width * shl + 1`.
    pub fn fill_input(&self, shl: usize, n: usize, input: &mut [f64]) {
        input[0] = 1.0;
        input[1..].copy_from_slice(&self.values[n * self.width..(n + shl) * self.width]);
    }

    pub fn sample(&self, shl: usize, horizon: usize, n: usize) -> Result<WindowedSample> {
        check_window(self.len(), shl, horizon, n)?;
        let mut input = DVector::zeros(self.width * shl + 1);
        self.fill_input(shl, n, input.as_mut_slice());
        Ok(WindowedSample {
            input,
            target: DVector::from_column_slice(self.step(n + shl + horizon - 1)),
            time_index: n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// 30 s training, 30 s cross-validation (online learners).
    Online30_30,
    /// 54 s training, 6 s cross-validation (offline regression).
    Offline54_6,
}

/// Contiguous, disjoint step ranges covering a whole record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub train: Range<usize>,
    pub cross_validation: Range<usize>,
    pub test: Range<usize>,
}

pub fn make_partition(record: &MarkerRecord, scheme: PartitionScheme) -> Result<Partition> {
    let train_seconds = match scheme {
        PartitionScheme::Online30_30 => 30.0,
        PartitionScheme::Offline54_6 => 54.0,
    };
    let train_end = record.steps(train_seconds);
    let dev_end = record.steps(60.0);
    if record.len() <= dev_end {
        return Err(Error::OutOfRange(format!(
            "record {:?} has {} steps; at least {} are needed to leave a test set after 60 s",
            record.label,
            record.len(),
            dev_end + 1
        )));
    }
    Ok(Partition {
        train: 0..train_end,
        cross_validation: train_end..dev_end,
        test: dev_end..record.len(),
    })
}

/// A breathing-like test recording: per coordinate, two sinusoids with
/// shared periods and random phases, amplitudes drawn from 5 to 20 mm, a
/// linear drift and white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub seconds: f64,
    pub sample_period: f64,
    pub n_markers: usize,
    /// Largest drift magnitude in mm/s.
    pub max_drift: f64,
    /// Noise standard deviation in mm.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seconds: 200.0,
            sample_period: 0.1,
            n_markers: 3,
            max_drift: 0.02,
            noise_std: 0.1,
            seed: 0,
        }
    }
}

pub fn synthetic_record(spec: &SyntheticSpec) -> Result<MarkerRecord> {
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    if !(spec.noise_std >= 0.0) || !spec.max_drift.is_finite() || !(spec.seconds > 0.0) {
        return Err(Error::InvalidParameter(format!("synthetic signal {spec:?}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let n_steps = (spec.seconds / spec.sample_period).round() as usize;
    let width = 3 * spec.n_markers;
    let periods = [rng.random_range(3.5..4.5), rng.random_range(1.5..2.5)];
    let channels: Vec<[f64; 6]> = (0..width)
        .map(|_| {
            [
                rng.random_range(5.0..20.0),
                rng.random_range(5.0..20.0),
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..TAU),
                rng.random_range(-spec.max_drift..=spec.max_drift),
                rng.random_range(-50.0..50.0),
            ]
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut positions = Vec::with_capacity(n_steps * width);
    for k in 0..n_steps {
        let t = k as f64 * spec.sample_period;
        for &[a1, a2, p1, p2, drift, offset] in &channels {
            let wave = a1 * (TAU * t / periods[0] + p1).sin() + a2 * (TAU * t / periods[1] + p2).sin();
            positions.push(offset + wave + drift * t + noise.sample(&mut rng));
        }
    }
    Ok(MarkerRecord::new(spec.sample_period, spec.n_markers, positions)?
        .with_label(format!("synthetic-{}", spec.seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ramp(n_steps: usize, n_markers: usize) -> MarkerRecord {
        let w = 3 * n_markers;
        let pos = (0..n_steps * w).map(|i| (i % w) as f64 * 10.0 + (i / w) as f64).collect();
        MarkerRecord::new(0.1, n_markers, pos).unwrap()
    }

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "t_seconds,m1x,m1y,m1z,m2x,m2y,m2z,m3x,m3y,m3z\n";

    #[test]
    fn loads_730_rows() {
        let mut s = String::from(HEADER);
        for k in 0..730 {
            let t = k as f64 * 0.1;
            s.push_str(&format!("{t},1,2,3,4,5,6,7,8,{k}\n"));
        }
        let f = write_csv(&s);
        let rec = load_record(f.path()).unwrap();
        assert_eq!(rec.len(), 730);
        assert_eq!(rec.n_markers(), 3);
        assert!((rec.sample_period() - 0.1).abs() < 1e-12);
        assert_eq!(rec.step(729)[8], 729.0);
    }

    #[test]
    fn nan_row_is_reported() {
        let s = format!("{HEADER}0,1,2,3,4,5,6,7,8,9\n0.1,1,2,NaN,4,5,6,7,8,9\n");
        let err = load_record(write_csv(&s).path()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_rows_are_reported() {
        let short = format!("{HEADER}0,1,2,3,4,5,6,7,8,9\n0.1,1,2,3\n");
        assert!(matches!(
            load_record(write_csv(&short).path()),
            Err(Error::Parse { row: 3, .. })
        ));
        let text = format!("{HEADER}0,1,2,3,4,5,6,7,8,9\n0.1,1,2,3,4,5,six,7,8,9\n");
        assert!(matches!(
            load_record(write_csv(&text).path()),
            Err(Error::Parse { row: 3, .. })
        ));
        assert!(matches!(
            load_record(write_csv(HEADER).path()),
            Err(Error::Parse { .. })
        ));
        assert!(load_record(write_csv("").path()).is_err());
    }

    #[test]
    fn write_then_load_preserves_values() {
        let rec = MarkerRecord::new(
            0.1,
            3,
            (0..90).map(|i| (i as f64 * 0.37).sin() * 12.345678901).collect(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        write_record(&rec, &path).unwrap();
        let back = load_record(&path).unwrap();
        assert_eq!(back.positions(), rec.positions());
        assert_eq!(back.times(), rec.times());
        write_record(&back, dir.path().join("again.csv")).unwrap();
        let again = load_record(dir.path().join("again.csv")).unwrap();
        assert_eq!(again.positions(), back.positions());
    }

    #[test]
    fn normalizer_midpoint_and_half_range() {
        // channel 0 spans [10, 30], channel 1 is constant 5
        let pos = vec![10.0, 5.0, 0.0, 30.0, 5.0, 1.0, 20.0, 5.0, 2.0];
        let rec = MarkerRecord::new(0.1, 1, pos).unwrap();
        let norm = fit_normalizer(&rec, 0..3).unwrap();
        assert_eq!(norm.offset()[0], 20.0);
        assert_eq!(norm.scale()[0], 10.0);
        assert_eq!(norm.offset()[1], 5.0);
        assert_eq!(norm.scale()[1], SCALE_FLOOR);
        assert_eq!(norm.floored_channels(), &[1]);
    }

    #[test]
    fn normalizer_window_errors() {
        let rec = ramp(10, 1);
        assert!(fit_normalizer(&rec, 3..3).is_err());
        assert!(fit_normalizer(&rec, 0..11).is_err());
    }

    #[test]
    fn smallest_window() {
        let rec = ramp(5, 3);
        let norm = fit_normalizer(&rec, 0..5).unwrap();
        let s = build_io(&rec, &norm, 1, 1, 0).unwrap();
        assert_eq!(s.input.len(), 10);
        assert_eq!(s.input[0], 1.0);
        assert_eq!(s.target.as_slice(), norm.normalize(rec.step(1)).as_slice());
    }

    #[test]
    fn layout_is_step_major_then_marker_major() {
        let rec = ramp(6, 3);
        let norm = fit_normalizer(&rec, 0..6).unwrap();
        let s = build_io(&rec, &norm, 2, 1, 0).unwrap();
        assert_eq!(&s.input.as_slice()[1..10], norm.normalize(rec.step(0)).as_slice());
        assert_eq!(&s.input.as_slice()[10..19], norm.normalize(rec.step(1)).as_slice());
        assert_eq!(s.target.as_slice(), norm.normalize(rec.step(2)).as_slice());
    }

    #[test]
    fn window_out_of_range() {
        let rec = ramp(6, 1);
        let norm = fit_normalizer(&rec, 0..6).unwrap();
        assert!(build_io(&rec, &norm, 3, 3, 0).is_ok());
        assert!(matches!(build_io(&rec, &norm, 3, 3, 1), Err(Error::OutOfRange(_))));
        assert!(build_io(&rec, &norm, 0, 1, 0).is_err());
        assert!(build_io(&rec, &norm, 1, 0, 0).is_err());
    }

    #[test]
    fn normalized_series_matches_build_io() {
        let rec = ramp(20, 3);
        let norm = fit_normalizer(&rec, 0..10).unwrap();
        let series = NormalizedSeries::new(&rec, &norm).unwrap();
        for n in 0..10 {
            assert_eq!(series.sample(4, 3, n).unwrap(), build_io(&rec, &norm, 4, 3, n).unwrap());
        }
    }

    #[test]
    fn partition_of_73_second_record() {
        let rec = ramp(730, 3);
        let p = make_partition(&rec, PartitionScheme::Online30_30).unwrap();
        assert_eq!(p.train.len(), 300);
        assert_eq!(p.cross_validation.len(), 300);
        assert_eq!(p.test.len(), 130);
    }

    #[test]
    fn partition_boundaries() {
        assert!(make_partition(&ramp(600, 1), PartitionScheme::Online30_30).is_err());
        let p = make_partition(&ramp(1000, 1), PartitionScheme::Offline54_6).unwrap();
        assert_eq!(p.train, 0..540);
        assert_eq!(p.cross_validation.len(), 60);
        assert_eq!(p.test, 600..1000);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(MarkerRecord::new(0.0, 1, vec![0.0; 3]).is_err());
        assert!(MarkerRecord::new(0.1, 1, vec![0.0; 4]).is_err());
        assert!(MarkerRecord::new(0.1, 1, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(MarkerRecord::new(0.1, 1, vec![]).is_err());
    }

    #[test]
    fn synthetic_record_shape_and_determinism() {
        let spec = SyntheticSpec {
            seconds: 70.0,
            ..Default::default()
        };
        let a = synthetic_record(&spec).unwrap();
        assert_eq!((a.len(), a.n_markers()), (700, 3));
        assert_eq!(a, synthetic_record(&spec).unwrap());
        assert_ne!(a, synthetic_record(&SyntheticSpec { seed: 1, ..spec }).unwrap());
        let clean = synthetic_record(&SyntheticSpec { noise_std: 0.0, max_drift: 0.0, ..spec }).unwrap();
        for c in 0..9 {
            let v: Vec<f64> = (0..700).map(|k| clean.step(k)[c]).collect();
            let span = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            assert!(span > 5.0 && span < 80.0, "{span}");
        }
    }
}
