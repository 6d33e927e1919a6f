//! Room-temperature time series: ingestion of recorded logs and generation
//! of synthetic traces with a slow drift plus white noise.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Unit of the time column in a CSV log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Seconds,
    Minutes,
    Hours,
}

impl TimeUnit {
    fn to_seconds(self, value: f64) -> f64 {
        match self {
            TimeUnit::Seconds => value,
            TimeUnit::Minutes => value * 60.0,
            TimeUnit::Hours => value * 3600.0,
        }
    }
}

/// Column mapping for CSV ingestion. Delimiter is auto-detected: comma if
/// present on the line, otherwise any whitespace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMapping {
    #[serde(default)]
    pub time_col: usize,
    #[serde(default = "default_temp_col")]
    pub temp_col: usize,
    #[serde(default)]
    pub time_unit: TimeUnit,
}

fn default_temp_col() -> usize {
    1
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self { time_col: 0, temp_col: 1, time_unit: TimeUnit::Seconds }
    }
}

/// A time-stamped temperature series in seconds and degrees Celsius.
///
/// Timestamps are strictly increasing and all temperatures lie inside the
/// physically sane window [-50, 150] C.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureTrace {
    samples: Vec<(f64, f64)>,
    dt_nominal: f64,
    pub label: String,
}

pub const TEMP_MIN_C: f64 = -50.0;
pub const TEMP_MAX_C: f64 = 150.0;

impl TemperatureTrace {
    /// Build a trace from raw (t, T) samples, enforcing the invariants.
    pub fn new(samples: Vec<(f64, f64)>, label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        for (i, &(t, temp)) in samples.iter().enumerate() {
            if !t.is_finite() || !temp.is_finite() {
                return Err(Error::OutOfRange(format!("non-finite sample at index {i}")));
            }
            if !(TEMP_MIN_C..=TEMP_MAX_C).contains(&temp) {
                return Err(Error::OutOfRange(format!(
                    "temperature {temp} C at index {i} outside [{TEMP_MIN_C}, {TEMP_MAX_C}]"
                )));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::NonMonotoneTime { index: i });
            }
        }
        let dt_nominal = nominal_dt(&samples);
        Ok(Self { samples, dt_nominal, label: label.into() })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nominal sampling interval (median of successive differences).
    pub fn dt_nominal(&self) -> f64 {
        self.dt_nominal
    }

    pub fn t_start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t_start()
    }

    /// Linear interpolation at time `t`; exact at sample points.
    pub fn sample_at(&self, t: f64) -> Result<f64> {
        if self.samples.len() < 2 {
            return Err(Error::OutOfRange(
                "interpolation requires at least 2 samples".into(),
            ));
        }
        if t < self.t_start() || t > self.t_end() {
            return Err(Error::OutOfRange(format!(
                "t = {t} s outside trace span [{}, {}]",
                self.t_start(),
                self.t_end()
            )));
        }
        let idx = self
            .samples
            .partition_point(|&(ts, _)| ts <= t)
            .min(self.samples.len() - 1);
        let (t1, v1) = self.samples[idx];
        if idx == 0 {
            return Ok(v1);
        }
        let (t0, v0) = self.samples[idx - 1];
        if t <= t0 {
            return Ok(v0);
        }
        let w = (t - t0) / (t1 - t0);
        Ok(v0 + w * (v1 - v0))
    }

    /// Peak-to-peak temperature span.
    pub fn peak_to_peak(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(_, v) in &self.samples {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// Pointwise sum of temperatures on this trace's time grid. The other
    /// trace is interpolated; its mean offset is kept.
    pub fn add(&self, other: &TemperatureTrace) -> Result<TemperatureTrace> {
        let samples = self
            .samples
            .iter()
            .map(|&(t, v)| Ok((t, v + other.sample_at(t)?)))
            .collect::<Result<Vec<_>>>()?;
        TemperatureTrace::new(samples, format!("{}+{}", self.label, other.label))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t_s,temp_c\n");
        for &(t, v) in &self.samples {
            out.push_str(&format!("{t:.6},{v:.9}\n"));
        }
        out
    }
}

fn nominal_dt(samples: &[(f64, f64)]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
    diffs.sort_by(f64::total_cmp);
    diffs[diffs.len() / 2]
}

/// Load a trace from a CSV (or whitespace-delimited) log file.
///
/// A single leading header line is skipped when its mapped columns do not
/// parse as numbers; `#` lines are treated as comments.
pub fn load_trace(path: &Path, format: &ColumnMapping) -> Result<TemperatureTrace> {
    let text = fs::read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    parse_trace(&text, format, label)
}

/// Parse CSV text into a trace; see [`load_trace`].
pub fn parse_trace(
    text: &str,
    format: &ColumnMapping,
    label: impl Into<String>,
) -> Result<TemperatureTrace> {
    let mut samples = Vec::new();
    let mut saw_data = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let max_col = format.time_col.max(format.temp_col);
        if fields.len() <= max_col {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected at least {} columns, found {}", max_col + 1, fields.len()),
            });
        }
        let t_raw = fields[format.time_col].parse::<f64>();
        let v_raw = fields[format.temp_col].parse::<f64>();
        match (t_raw, v_raw) {
            (Ok(t), Ok(v)) => {
                samples.push((format.time_unit.to_seconds(t), v));
                saw_data = true;
            }
            _ if !saw_data => continue, // header line
            (Err(e), _) => {
                return Err(Error::Parse { line: lineno + 1, msg: format!("bad time field: {e}") })
            }
            (_, Err(e)) => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad temperature field: {e}"),
                })
            }
        }
    }
    TemperatureTrace::new(samples, label)
}

/// Specification of a synthetic room trace: slow sinusoidal drift plus
/// white Gaussian noise, fully determined by the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTraceSpec {
    pub duration_s: f64,
    pub dt_s: f64,
    pub mean_c: f64,
    pub drift_amplitude_c: f64,
    pub drift_period_s: f64,
    pub noise_sigma_c: f64,
    pub seed: u64,
}

impl SyntheticTraceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) {
            return Err(Error::InvalidParameter { name: "dt_s", msg: "must be > 0".into() });
        }
        if self.duration_s < self.dt_s {
            return Err(Error::InvalidParameter {
                name: "duration_s",
                msg: "must be >= dt_s".into(),
            });
        }
        if self.noise_sigma_c < 0.0 {
            return Err(Error::InvalidParameter {
                name: "noise_sigma_c",
                msg: "must be >= 0".into(),
            });
        }
        if self.drift_amplitude_c != 0.0 && !(self.drift_period_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "drift_period_s",
                msg: "must be > 0 when drift_amplitude_c != 0".into(),
            });
        }
        Ok(())
    }
}

/// Generate a synthetic trace. The noiseless drift component starts at its
/// minimum (-cos phase), so its peak-to-peak equals twice the amplitude
/// whenever the trace spans at least one full period.
pub fn synthesize_trace(spec: &SyntheticTraceSpec) -> Result<TemperatureTrace> {
    spec.validate()?;
    let n = (spec.duration_s / spec.dt_s).round() as usize + 1;
    let mut rng = rng::stream(spec.seed, "synthetic_trace", 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * spec.dt_s;
        let drift = if spec.drift_amplitude_c == 0.0 {
            0.0
        } else {
            -spec.drift_amplitude_c * (std::f64::consts::TAU * t / spec.drift_period_s).cos()
        };
        // draw unconditionally so the stream layout does not depend on sigma
        let draw: f64 = normal.sample(&mut rng);
        let noise = spec.noise_sigma_c * draw;
        samples.push((t, spec.mean_c + drift + noise));
    }
    TemperatureTrace::new(samples, "synthetic")
}

/// Uniform random trace helper used by property tests.
pub fn constant_trace(duration_s: f64, dt_s: f64, value_c: f64) -> TemperatureTrace {
    let n = (duration_s / dt_s).round() as usize + 1;
    let samples = (0..n).map(|k| (k as f64 * dt_s, value_c)).collect();
    TemperatureTrace::new(samples, "constant").expect("valid constant trace")
}

#[allow(dead_code)]
fn _rng_is_send_sync(r: rand_chacha::ChaCha8Rng) -> impl Rng {
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn two_point_trace() -> TemperatureTrace {
        TemperatureTrace::new(vec![(0.0, 22.0), (10.0, 23.0)], "t").unwrap()
    }

    #[test]
    fn parse_two_sample_csv() {
        let tr = parse_trace("0,22.0\n10,22.1\n", &ColumnMapping::default(), "t").unwrap();
        assert_eq!(tr.len(), 2);
        assert_relative_eq!(tr.dt_nominal(), 10.0);
        assert_eq!(tr.samples()[1], (10.0, 22.1));
    }

    #[test]
    fn empty_file_is_no_samples() {
        let err = parse_trace("", &ColumnMapping::default(), "t").unwrap_err();
        assert!(matches!(err, Error::NoSamples));
    }

    #[test]
    fn header_and_whitespace_delimiters_are_accepted() {
        let tr = parse_trace(
            "time temp\n0 21.5\n60 21.6\n",
            &ColumnMapping { time_unit: TimeUnit::Minutes, ..Default::default() },
            "t",
        )
        .unwrap();
        assert_eq!(tr.len(), 2);
        assert_relative_eq!(tr.t_end(), 3600.0);
    }

    #[test]
    fn non_monotone_time_reports_index() {
        let err =
            parse_trace("0,22\n10,22\n5,22\n", &ColumnMapping::default(), "t").unwrap_err();
        match err {
            Error::NonMonotoneTime { index } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_failure_names_line() {
        let err = parse_trace("0,22\nx,23\n", &ColumnMapping::default(), "t").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn twenty_hour_fixture_round_trips() {
        // 7200 rows at 10 s spacing -> 20 h trace
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "t_s,temp_c").unwrap();
        for k in 0..7200 {
            let t = k as f64 * 10.0;
            let v = 22.0 + 0.3 * (t / 30000.0).sin();
            writeln!(file, "{t},{v:.9}").unwrap();
        }
        let tr = load_trace(file.path(), &ColumnMapping::default()).unwrap();
        assert_eq!(tr.len(), 7200);
        assert_relative_eq!(tr.dt_nominal(), 10.0);
        assert_relative_eq!(tr.duration(), 71990.0);
        // round trip through the writer
        let reparsed = parse_trace(&tr.to_csv_string(), &ColumnMapping::default(), "t").unwrap();
        assert_eq!(reparsed.len(), tr.len());
        for (a, b) in reparsed.samples().iter().zip(tr.samples()) {
            assert_relative_eq!(a.0, b.0, epsilon = 1e-9);
            assert_relative_eq!(a.1, b.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn interpolation_midpoint_and_endpoints() {
        let tr = two_point_trace();
        assert_relative_eq!(tr.sample_at(5.0).unwrap(), 22.5);
        assert_relative_eq!(tr.sample_at(0.0).unwrap(), 22.0);
        assert_relative_eq!(tr.sample_at(10.0).unwrap(), 23.0);
        assert!(tr.sample_at(10.1).is_err());
        assert!(tr.sample_at(-0.1).is_err());
    }

    #[test]
    fn constant_spec_gives_constant_trace() {
        let spec = SyntheticTraceSpec {
            duration_s: 100.0,
            dt_s: 10.0,
            mean_c: 22.0,
            drift_amplitude_c: 0.0,
            drift_period_s: 0.0,
            noise_sigma_c: 0.0,
            seed: 1,
        };
        let tr = synthesize_trace(&spec).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.samples().iter().all(|&(_, v)| v == 22.0));
    }

    #[test]
    fn drift_peak_to_peak_matches_amplitude() {
        // 0.35 C amplitude, 8 h period over 20 h: the ambient swing scale.
        let spec = SyntheticTraceSpec {
            duration_s: 72000.0,
            dt_s: 10.0,
            mean_c: 22.0,
            drift_amplitude_c: 0.35,
            drift_period_s: 28800.0,
            noise_sigma_c: 0.0,
            seed: 1,
        };
        let tr = synthesize_trace(&spec).unwrap();
        assert_eq!(tr.len(), 7201);
        assert_relative_eq!(tr.peak_to_peak(), 0.7, epsilon = 1e-3);
    }

    #[test]
    fn same_seed_same_trace() {
        let spec = SyntheticTraceSpec {
            duration_s: 3600.0,
            dt_s: 10.0,
            mean_c: 22.0,
            drift_amplitude_c: 0.2,
            drift_period_s: 1800.0,
            noise_sigma_c: 0.05,
            seed: 99,
        };
        let a = synthesize_trace(&spec).unwrap();
        let b = synthesize_trace(&spec).unwrap();
        assert_eq!(a, b);
        let c = synthesize_trace(&SyntheticTraceSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        // Interpolation stays within the bracketing sample values.
        #[test]
        fn interpolation_is_bounded(vals in proptest::collection::vec(-20.0f64..60.0, 2..40),
                                    frac in 0.0f64..1.0) {
            let samples: Vec<(f64, f64)> =
                vals.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
            let tr = TemperatureTrace::new(samples, "p").unwrap();
            let t = frac * tr.t_end();
            let v = tr.sample_at(t).unwrap();
            let idx = tr.samples().partition_point(|&(ts, _)| ts <= t).min(tr.len() - 1);
            let lo = tr.samples()[idx.saturating_sub(1)].1.min(tr.samples()[idx].1);
            let hi = tr.samples()[idx.saturating_sub(1)].1.max(tr.samples()[idx].1);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
