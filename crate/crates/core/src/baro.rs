//! Barometric altitude estimation and floor tracking.
//!
//! Altitude change relative to the starting position follows the
//! international barometric formula
//!
//! ```text
//! dz = 44330 * (1 - (mean_p / p_ref)^(1 / 5.255))
//! ```
//!
//! where `mean_p` is the trailing moving average of the pressure stream and
//! `p_ref` is the pressure measured at the start. Floor changes are detected
//! by thresholding `dz` against the value recorded at the last floor change.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, io_err, parse_err, Error, Result};

const SCALE_M: f64 = 44330.0;
const EXPONENT: f64 = 5.255;

/// One barometer reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSample {
    /// Seconds since session start.
    pub t: f64,
    /// Pascals.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaroConfig {
    /// Moving-average length in samples.
    pub window: usize,
    /// Reference pressure at the starting position, pascals.
    pub p_cri: f64,
    pub floor_threshold: f64,
    pub nominal_floor_height: f64,
}

impl Default for BaroConfig {
    fn default() -> Self {
        Self {
            window: 100,
            p_cri: 101_325.0,
            floor_threshold: 2.5,
            nominal_floor_height: 3.64,
        }
    }
}

impl BaroConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(invalid("baro window must be at least 1"));
        }
        if !(self.p_cri > 0.0) {
            return Err(invalid("reference pressure must be positive"));
        }
        if !(self.floor_threshold > 0.0) {
            return Err(invalid("floor threshold must be positive"));
        }
        if !(self.nominal_floor_height > 0.0) || 2.0 * self.floor_threshold < self.nominal_floor_height {
            return Err(invalid("floor threshold must be at least half the nominal floor height"));
        }
        Ok(())
    }
}

/// Altitude change in meters for a window of pressure readings, positive
/// for ascent.
pub fn estimate_delta_z(window: &[f64], p_cri: f64) -> Result<f64> {
    if window.is_empty() {
        return Err(invalid("pressure window is empty"));
    }
    if !(p_cri > 0.0) {
        return Err(invalid(format!("reference pressure {p_cri} must be positive")));
    }
    if let Some(bad) = window.iter().find(|p| !(**p > 0.0)) {
        return Err(invalid(format!("pressure {bad} must be positive")));
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    Ok(SCALE_M * (1.0 - (mean / p_cri).powf(1.0 / EXPONENT)))
}

/// Pressure observed `delta_z` meters above the reference position.
pub fn pressure_for_altitude(delta_z: f64, p_cri: f64) -> Result<f64> {
    if !(p_cri > 0.0) {
        return Err(invalid(format!("reference pressure {p_cri} must be positive")));
    }
    if !(delta_z < SCALE_M) {
        return Err(Error::Domain(format!(
            "altitude {delta_z} m is outside the barometric formula's range (< {SCALE_M} m)"
        )));
    }
    Ok(p_cri * (1.0 - delta_z / SCALE_M).powf(EXPONENT))
}

/// Discrete floor index driven by barometric altitude.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FloorTracker {
    pub current_floor: i32,
    /// Nominal altitude change of the current floor.
    pub z_ref_of_floor: f64,
}

impl FloorTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the latest altitude change (relative to the session start) and
    /// returns the updated floor. Each crossing moves the reference by one
    /// nominal floor height, so a long climb never lags behind the floors and
    /// undoing a change needs a reversal past the opposite threshold.
    pub fn update(&mut self, delta_z: f64, cfg: &BaroConfig) -> i32 {
        while (delta_z - self.z_ref_of_floor).abs() > cfg.floor_threshold {
            let step = if delta_z > self.z_ref_of_floor { 1 } else { -1 };
            self.current_floor += step;
            self.z_ref_of_floor += step as f64 * cfg.nominal_floor_height;
        }
        self.current_floor
    }
}

/// Trailing moving average over a time-ordered pressure stream.
///
/// For each query time the mean uses the last `window` samples with
/// `t <= query`, or all of them when fewer are available.
pub fn trailing_window<'a>(
    stream: &'a [PressureSample],
    t: f64,
    window: usize,
) -> impl Iterator<Item = f64> + 'a {
    let end = stream.partition_point(|s| s.t <= t + 1e-9);
    let start = end.saturating_sub(window);
    stream[start..end].iter().map(|s| s.p)
}

/// Altitude change at each query time, from the trailing window ending there.
pub fn altitude_profile(
    stream: &[PressureSample],
    times: &[f64],
    cfg: &BaroConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    times
        .iter()
        .map(|&t| {
            let window: Vec<f64> = trailing_window(stream, t, cfg.window).collect();
            if window.is_empty() {
                return Err(invalid(format!("no pressure samples at or before t = {t}")));
            }
            estimate_delta_z(&window, cfg.p_cri)
        })
        .collect()
}

/// Runs a fresh tracker over a sequence of altitude changes.
pub fn floor_labels(delta_z: &[f64], cfg: &BaroConfig) -> Vec<i32> {
    let mut tracker = FloorTracker::new();
    delta_z.iter().map(|&dz| tracker.update(dz, cfg)).collect()
}

pub fn read_pressure_csv(path: &Path) -> Result<Vec<PressureSample>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t_s,pressure_pa")) => {}
        _ => return Err(parse_err(&name, 1, "expected header `t_s,pressure_pa`")),
    }
    let mut out = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(t), Some(p), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(&name, n + 1, "expected 2 columns"));
        };
        let t: f64 = t.parse().map_err(|_| parse_err(&name, n + 1, "bad time"))?;
        let p: f64 = p.parse().map_err(|_| parse_err(&name, n + 1, "bad pressure"))?;
        if !(p > 0.0) {
            return Err(parse_err(&name, n + 1, "pressure must be positive"));
        }
        if t < last_t {
            return Err(parse_err(&name, n + 1, "timestamps must be non-decreasing"));
        }
        last_t = t;
        out.push(PressureSample { t, p });
    }
    Ok(out)
}

pub fn write_pressure_csv(path: &Path, samples: &[PressureSample]) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 24 + 16);
    out.push_str("t_s,pressure_pa\n");
    for s in samples {
        out.push_str(&format!("{},{}\n", s.t, s.p));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io_err(path))
}
