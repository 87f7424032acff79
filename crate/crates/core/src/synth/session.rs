use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::building::{generate_building, Building};
use super::geometry::{raycast, Aabb};
use super::spec::SessionSpec;
use crate::baro::{floor_labels, pressure_for_altitude, BaroConfig, PressureSample};
use crate::error::{Error, Result};
use crate::graph::Pose3;
use crate::scan::{Scan, ScanPoint, N_CHANNELS};
use crate::scanproc::{mean_squared_range, ElevatorDetectConfig};
use crate::voxel::VoxelMap;

/// Sensor mount height above the floor, meters.
pub const SENSOR_HEIGHT: f64 = 0.5;
/// Distance between consecutive poses along the route, meters.
pub const POSE_SPACING: f64 = 1.0;
/// Seconds between consecutive poses.
pub const POSE_PERIOD: f64 = 1.0;
pub const AZIMUTH_STEPS: usize = 360;
pub const MAX_RANGE: f64 = 100.0;
/// Interior height of an elevator cab, meters.
pub const CAB_HEIGHT: f64 = 2.4;

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub p_cri: f64,
    pub window: usize,
    pub seed: u64,
    pub poses: usize,
    pub pose_period: f64,
    pub first_pose_time: f64,
    pub sensor_height: f64,
    pub floors: usize,
    pub floor_height: f64,
    pub elevators: usize,
    /// Start pose as x, y, z, yaw.
    pub start: [f64; 4],
}

impl Manifest {
    pub fn pose_time(&self, i: usize) -> f64 {
        self.first_pose_time + i as f64 * self.pose_period
    }

    pub fn start_pose(&self) -> Pose3 {
        let [x, y, z, yaw] = self.start;
        Pose3::from_xyz_yaw(x, y, z, yaw)
    }

    pub fn baro_config(&self) -> BaroConfig {
        BaroConfig {
            window: self.window,
            p_cri: self.p_cri,
            nominal_floor_height: self.floor_height,
            ..BaroConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdometryEdge {
    pub i: usize,
    pub j: usize,
    /// Measured pose of `j` in the frame of `i`.
    pub rel: Pose3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub manifest: Manifest,
    pub scans: Vec<Scan>,
    pub pressure: Vec<PressureSample>,
    pub odometry: Vec<OdometryEdge>,
    pub ground_truth: Vec<Pose3>,
    pub floors: Vec<i32>,
    pub truth_voxels: Option<VoxelMap>,
}

/// Route resampled at `POSE_SPACING` as (ground point, yaw).
pub fn sample_route(route: &[[f64; 3]]) -> Vec<([f64; 3], f64)> {
    let seg_len: Vec<f64> = route
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2) + (w[1][2] - w[0][2]).powi(2)).sqrt())
        .collect();
    let seg_yaw: Vec<Option<f64>> = route
        .windows(2)
        .map(|w| {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            (dx.hypot(dy) > 1e-9).then(|| dy.atan2(dx))
        })
        .collect();
    let first_yaw = seg_yaw.iter().flatten().next().copied().unwrap_or(0.0);
    let total: f64 = seg_len.iter().sum();

    let mut stations = Vec::new();
    let mut s = 0.0;
    while s < total - 1e-9 {
        stations.push(s);
        s += POSE_SPACING;
    }
    stations.push(total);

    let mut out = Vec::with_capacity(stations.len());
    let (mut seg, mut seg_start) = (0usize, 0.0);
    let mut yaw = first_yaw;
    for st in stations {
        while seg + 1 < seg_len.len() && st > seg_start + seg_len[seg] + 1e-12 {
            if let Some(y) = seg_yaw[seg] {
                yaw = y;
            }
            seg_start += seg_len[seg];
            seg += 1;
        }
        if route.len() == 1 {
            out.push((route[0], yaw));
            continue;
        }
        if let Some(y) = seg_yaw[seg] {
            yaw = y;
        }
        let f = if seg_len[seg] > 0.0 { ((st - seg_start) / seg_len[seg]).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (route[seg], route[seg + 1]);
        let p = [0, 1, 2].map(|k| a[k] + f * (b[k] - a[k]));
        out.push((p, yaw));
    }
    out
}

fn beam_directions() -> Vec<(u8, [f64; 3])> {
    let mut dirs = Vec::with_capacity(N_CHANNELS as usize * AZIMUTH_STEPS);
    for c in 0..N_CHANNELS {
        let el = (-15.0 + 2.0 * c as f64).to_radians();
        for a in 0..AZIMUTH_STEPS {
            let az = (a as f64 * 360.0 / AZIMUTH_STEPS as f64).to_radians();
            dirs.push((c, [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]));
        }
    }
    dirs
}

/// Interior volume of the cab the robot stands in.
fn cab_box(building: &Building, elevator: usize, ground_z: f64) -> Aabb {
    let r = building.spec.elevators[elevator].footprint;
    Aabb::new([r.x0, r.y0, ground_z], [r.x1, r.y1, ground_z + CAB_HEIGHT])
}

fn supported(building: &Building, g: [f64; 3]) -> bool {
    let spec = &building.spec;
    if let Some(e) = building.elevator_at(g[0], g[1]) {
        let e = &spec.elevators[e];
        let (lo, hi) = (spec.floor_z(e.first_floor), spec.floor_z(e.last_floor));
        if g[2] >= lo - 1e-6 && g[2] <= hi + 1e-6 {
            return true;
        }
    }
    let tol = spec.rise().unwrap_or(0.0).max(0.05) + 1e-6;
    building.surface_heights(g[0], g[1]).any(|z| (z - g[2]).abs() <= tol)
}

/// Whether a ground point lies on a corridor floor rather than a landing or
/// step.
fn in_corridor(building: &Building, g: [f64; 3]) -> bool {
    let spec = &building.spec;
    (0..spec.floors).any(|f| {
        (spec.floor_z(f) - g[2]).abs() < 1e-6 && spec.corridors_on(f).any(|r| r.contains(g[0], g[1]))
    })
}

#[allow(clippy::too_many_arguments)]
fn cast_scan(
    building: &Building,
    dirs: &[(u8, [f64; 3])],
    id: usize,
    t: f64,
    pose: &Pose3,
    ground_z: f64,
    cab: Option<usize>,
    range_sigma: f64,
    seed: u64,
) -> Scan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    let noise = Normal::new(0.0, range_sigma).expect("sigma checked non-negative");
    let origin = [pose.x(), pose.y(), pose.z()];
    let cab = cab.map(|e| cab_box(building, e, ground_z));
    let mut points = Vec::with_capacity(dirs.len());
    for (channel, d) in dirs {
        let w = pose.rotation * Vector3::new(d[0], d[1], d[2]);
        let world = [w.x, w.y, w.z];
        let range = match &cab {
            Some(b) => Some(b.exit(origin, world)),
            None => raycast(&building.boxes, origin, world, MAX_RANGE),
        };
        let Some(r) = range else { continue };
        let r = if range_sigma > 0.0 { r + noise.sample(&mut rng) } else { r };
        points.push(ScanPoint::new(r * d[0], r * d[1], r * d[2], *channel));
    }
    Scan::new(id, t, points)
}

/// Simulates a full sensor session along the route.
pub fn generate_session(spec: &SessionSpec, seed: u64) -> Result<Session> {
    let building = generate_building(&spec.building)?;
    generate_session_in(&building, spec, seed)
}

/// As `generate_session`, reusing an already generated building.
pub fn generate_session_in(building: &Building, spec: &SessionSpec, seed: u64) -> Result<Session> {
    spec.noise.validate()?;
    let mut errs = Vec::new();
    if spec.route.len() < 2 {
        errs.push("the route needs at least two waypoints".to_string());
    }
    if spec.window == 0 || !(spec.p_cri > 0.0) {
        errs.push("window must be positive and p_cri positive".to_string());
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }

    let samples = sample_route(&spec.route);
    for (n, (g, _)) in samples.iter().enumerate() {
        if !supported(building, *g) {
            errs.push(format!("route leaves the building at pose {n} ({:.3}, {:.3}, {:.3})", g[0], g[1], g[2]));
        }
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }

    let truth: Vec<Pose3> = samples
        .iter()
        .map(|(g, yaw)| Pose3::from_xyz_yaw(g[0], g[1], g[2] + SENSOR_HEIGHT, *yaw))
        .collect();
    let cabs: Vec<Option<usize>> = samples.iter().map(|(g, _)| building.elevator_at(g[0], g[1])).collect();
    let z0 = truth[0].z();
    let true_dz: Vec<f64> = truth.iter().map(|p| p.z() - z0).collect();

    let manifest = Manifest {
        p_cri: spec.p_cri,
        window: spec.window,
        seed,
        poses: truth.len(),
        pose_period: POSE_PERIOD,
        first_pose_time: POSE_PERIOD,
        sensor_height: SENSOR_HEIGHT,
        floors: spec.building.floors,
        floor_height: spec.building.floor_height,
        elevators: spec.building.elevators.len(),
        start: [truth[0].x(), truth[0].y(), truth[0].z(), truth[0].yaw()],
    };
    let floors = floor_labels(&true_dz, &manifest.baro_config());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut pressure = Vec::with_capacity(truth.len() * spec.window);
    for (i, dz) in true_dz.iter().enumerate() {
        let p = pressure_for_altitude(*dz, spec.p_cri)?;
        let t_i = manifest.pose_time(i);
        for m in 0..spec.window {
            let t = t_i - (spec.window - 1 - m) as f64 * POSE_PERIOD / spec.window as f64;
            let noise = spec.noise.pressure_sigma * unit.sample(&mut rng);
            pressure.push(PressureSample { t, p: p + noise });
        }
    }

    let mut odometry = Vec::with_capacity(truth.len().saturating_sub(1));
    for i in 0..truth.len().saturating_sub(1) {
        let rel = truth[i].between(&truth[i + 1]);
        let frozen = cabs[i].is_some() && cabs[i + 1].is_some();
        let t = rel.translation;
        let d = if frozen { t.x.hypot(t.y) } else { t.norm() };
        let n = &spec.noise;
        let dx = t.x + n.odom_sigma_xy * d * unit.sample(&mut rng);
        let dy = t.y + n.odom_sigma_xy * d * unit.sample(&mut rng);
        let dz_noise = n.odom_sigma_z * d * unit.sample(&mut rng);
        let dz = if frozen { 0.0 } else { t.z + dz_noise };
        let dyaw = n.odom_sigma_yaw * d * unit.sample(&mut rng);
        let rot = rel.rotation * nalgebra::UnitQuaternion::from_axis_angle(&Vector3::z_axis(), dyaw);
        odometry.push(OdometryEdge {
            i,
            j: i + 1,
            rel: Pose3::new(Vector3::new(dx, dy, dz), rot),
        });
    }

    let dirs = beam_directions();
    let scans: Vec<Scan> = (0..truth.len())
        .into_par_iter()
        .map(|i| {
            cast_scan(
                building,
                &dirs,
                i,
                manifest.pose_time(i),
                &truth[i],
                samples[i].0[2],
                cabs[i],
                spec.noise.range_sigma,
                seed,
            )
        })
        .collect();

    let detect = ElevatorDetectConfig::default();
    for (i, scan) in scans.iter().enumerate() {
        if cabs[i].is_none() && !in_corridor(building, samples[i].0) {
            continue;
        }
        let msr = mean_squared_range(scan)?;
        let inside = msr < detect.range_sq_threshold;
        if inside != cabs[i].is_some() {
            errs.push(format!(
                "pose {i}: mean squared range {msr:.2} m^2 does not separate cab from corridor"
            ));
        }
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }

    Ok(Session {
        manifest,
        scans,
        pressure,
        odometry,
        ground_truth: truth,
        floors,
        truth_voxels: Some(building.truth.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_is_resampled_every_meter() {
        let s = sample_route(&[[0.0, 0.0, 0.0], [2.5, 0.0, 0.0], [2.5, 2.0, 0.0]]);
        let xs: Vec<[f64; 3]> = s.iter().map(|(p, _)| *p).collect();
        assert_eq!(xs.len(), 6);
        assert_eq!(xs[1], [1.0, 0.0, 0.0]);
        assert!((xs[3][1] - 0.5).abs() < 1e-12);
        assert_eq!(xs[5], [2.5, 2.0, 0.0]);
        assert!((s[4].1 - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(s[0].1, 0.0);
    }

    #[test]
    fn vertical_segments_keep_heading() {
        let s = sample_route(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 3.0]]);
        assert!(s.iter().all(|(_, y)| (*y - std::f64::consts::FRAC_PI_2).abs() < 1e-12));
    }
}
