use std::io::Write;
use std::path::Path;

use crate::error::{invalid, io_err, parse_err, Result};

/// Number of elevation channels on the sensor.
pub const N_CHANNELS: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Ring index, 0 is the lowest beam.
    pub channel: u8,
}

impl ScanPoint {
    pub fn new(x: f64, y: f64, z: f64, channel: u8) -> Self {
        Self { x, y, z, channel }
    }

    pub fn range_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
}

/// One LiDAR sweep in the sensor frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub points: Vec<ScanPoint>,
    pub node_id: usize,
    /// Seconds since session start.
    pub t: f64,
}

impl Scan {
    pub fn new(node_id: usize, t: f64, points: Vec<ScanPoint>) -> Self {
        Self { points, node_id, t }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid(format!("scan {} is empty", self.node_id)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if p.channel >= N_CHANNELS {
                return Err(invalid(format!("channel {} out of range", p.channel)));
            }
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(invalid("non-finite scan coordinate"));
            }
        }
        Ok(())
    }
}

pub fn scan_file_name(node_id: usize) -> String {
    format!("scan_{node_id}.csv")
}

pub fn write_scan_csv(path: &Path, scan: &Scan) -> Result<()> {
    let mut out = String::with_capacity(scan.points.len() * 40 + 16);
    out.push_str("x,y,z,channel\n");
    for p in &scan.points {
        out.push_str(&format!("{},{},{},{}\n", p.x, p.y, p.z, p.channel));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io_err(path))
}

pub fn read_scan_csv(path: &Path, node_id: usize, t: f64) -> Result<Scan> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x,y,z,channel")) => {}
        _ => return Err(parse_err(&name, 1, "expected header `x,y,z,channel`")),
    }
    let mut points = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(parse_err(&name, n + 1, "expected 4 columns"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| parse_err(&name, n + 1, format!("bad number `{s}`")))
        };
        let channel: u8 = cols[3]
            .parse()
            .ok()
            .filter(|c| *c < N_CHANNELS)
            .ok_or_else(|| parse_err(&name, n + 1, "channel must be 0..15"))?;
        points.push(ScanPoint::new(num(cols[0])?, num(cols[1])?, num(cols[2])?, channel));
    }
    Ok(Scan::new(node_id, t, points))
}
