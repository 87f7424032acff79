//! Elevator detection from range statistics and the hollow-cuboid cloud that
//! stands in for an elevator ride on the map.

use crate::error::{invalid, Result};
use crate::scan::{Scan, ScanPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorDetectConfig {
    /// Mean squared range below which the sensor is taken to be inside a cab, m².
    pub range_sq_threshold: f64,
    /// Half-extents (x, y) of the synthesized cuboid cross-section, meters.
    pub footprint: (f64, f64),
    /// Spacing between synthesized points, meters.
    pub shell_spacing: f64,
}

impl Default for ElevatorDetectConfig {
    fn default() -> Self {
        Self {
            range_sq_threshold: 9.0,
            footprint: (1.0, 1.0),
            shell_spacing: 0.1,
        }
    }
}

impl ElevatorDetectConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.footprint;
        if !(self.range_sq_threshold > 0.0 && a > 0.0 && b > 0.0 && self.shell_spacing > 0.0) {
            return Err(invalid("elevator detection parameters must be positive"));
        }
        Ok(())
    }
}

pub fn mean_squared_range(scan: &Scan) -> Result<f64> {
    scan.require_non_empty()?;
    Ok(scan.points.iter().map(ScanPoint::range_sq).sum::<f64>() / scan.len() as f64)
}

pub fn detect_elevator_interior(scan: &Scan, cfg: &ElevatorDetectConfig) -> Result<bool> {
    Ok(mean_squared_range(scan)? < cfg.range_sq_threshold)
}

/// Evenly spaced samples covering `[lo, hi]` including both ends, at most
/// `spacing` apart.
fn samples(lo: f64, hi: f64, spacing: f64) -> impl DoubleEndedIterator<Item = f64> {
    let n = ((hi - lo) / spacing).ceil().max(1.0) as usize;
    (0..=n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

/// Points on the four vertical faces of a cuboid centered on the robot's
/// x, y and spanning `delta_z` vertically from `base_pose_z`.
///
/// x and y are relative to the robot; z is absolute. The interior is empty.
pub fn synthesize_elevator_cloud(
    cfg: &ElevatorDetectConfig,
    delta_z: f64,
    base_pose_z: f64,
) -> Result<Scan> {
    cfg.validate()?;
    if delta_z == 0.0 || !delta_z.is_finite() {
        return Err(invalid("elevator ride needs a non-zero altitude change"));
    }
    let (a, b) = cfg.footprint;
    let s = cfg.shell_spacing;

    // Perimeter walked once, counter-clockwise, without repeating corners.
    let mut ring: Vec<(f64, f64)> = Vec::new();
    ring.extend(samples(-a, a, s).map(|x| (x, -b)));
    ring.extend(samples(-b, b, s).skip(1).map(|y| (a, y)));
    ring.extend(samples(-a, a, s).rev().skip(1).map(|x| (x, b)));
    ring.extend(samples(-b, b, s).rev().skip(1).map(|y| (-a, y)));
    ring.pop();

    let (lo, hi) = (delta_z.min(0.0), delta_z.max(0.0));
    let mut points = Vec::new();
    for z in samples(lo, hi, s) {
        points.extend(ring.iter().map(|&(x, y)| ScanPoint::new(x, y, base_pose_z + z, 0)));
    }
    Ok(Scan::new(0, 0.0, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(radius: f64) -> Scan {
        let points = (0..36)
            .flat_map(|i| {
                (0..8).map(move |j| {
                    let az = i as f64 * 10f64.to_radians();
                    let el = (j as f64 * 10.0 - 35.0).to_radians();
                    ScanPoint::new(
                        radius * el.cos() * az.cos(),
                        radius * el.cos() * az.sin(),
                        radius * el.sin(),
                        j,
                    )
                })
            })
            .collect();
        Scan::new(0, 0.0, points)
    }

    #[test]
    fn mean_squared_range_examples() {
        assert!((mean_squared_range(&sphere(1.0)).unwrap() - 1.0).abs() < 1e-12);
        let two = Scan::new(
            0,
            0.0,
            vec![ScanPoint::new(1.0, 0.0, 0.0, 0), ScanPoint::new(0.0, 3.0, 0.0, 1)],
        );
        assert_eq!(mean_squared_range(&two).unwrap(), 5.0);
        let origin = Scan::new(0, 0.0, vec![ScanPoint::new(0.0, 0.0, 0.0, 0); 3]);
        assert_eq!(mean_squared_range(&origin).unwrap(), 0.0);
        assert!(mean_squared_range(&Scan::default()).is_err());
    }

    #[test]
    fn detection_threshold_is_strict() {
        let cfg = ElevatorDetectConfig::default();
        assert!(detect_elevator_interior(&sphere(1.2), &cfg).unwrap());
        assert!(!detect_elevator_interior(&sphere(5.0), &cfg).unwrap());
        assert!(!detect_elevator_interior(&sphere(3.0), &cfg).unwrap());
        assert!(detect_elevator_interior(&Scan::default(), &cfg).is_err());
    }

    #[test]
    fn cuboid_shell_geometry() {
        let cfg = ElevatorDetectConfig {
            shell_spacing: 0.5,
            ..Default::default()
        };
        let cloud = synthesize_elevator_cloud(&cfg, 3.64, 0.0).unwrap();
        let mut zmin = f64::INFINITY;
        let mut zmax = f64::NEG_INFINITY;
        for p in &cloud.points {
            assert!((p.x.abs().max(p.y.abs()) - 1.0).abs() < 1e-12);
            zmin = zmin.min(p.z);
            zmax = zmax.max(p.z);
        }
        assert!((zmax - zmin - 3.64).abs() < 1e-12);

        let down = synthesize_elevator_cloud(&cfg, -3.64, 0.0).unwrap();
        let zs: Vec<f64> = down.points.iter().map(|p| p.z).collect();
        assert!((zs.iter().cloned().fold(f64::INFINITY, f64::min) + 3.64).abs() < 1e-12);
        assert!(zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).abs() < 1e-12);
    }

    #[test]
    fn cuboid_is_hollow_and_unique() {
        let cfg = ElevatorDetectConfig::default();
        let cloud = synthesize_elevator_cloud(&cfg, 1.0, 2.0).unwrap();
        assert!(cloud.points.iter().all(|p| !(p.x.abs() < 1.0 - 1e-9 && p.y.abs() < 1.0 - 1e-9)));
        let mut keys: Vec<_> = cloud
            .points
            .iter()
            .map(|p| ((p.x * 1e6) as i64, (p.y * 1e6) as i64, (p.z * 1e6) as i64))
            .collect();
        let n = keys.len();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), n);
    }

    #[test]
    fn zero_ride_is_rejected() {
        assert!(synthesize_elevator_cloud(&ElevatorDetectConfig::default(), 0.0, 0.0).is_err());
    }
}
