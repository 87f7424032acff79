//! Offline mapping: barometric floors, elevator handling, floor-labelled
//! loop closure and pose-graph optimisation, producing a corrected
//! world-frame cloud with a source class per point.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::baro::{altitude_profile, floor_labels};
use crate::error::{invalid, io_err, parse_err, Error, Result};
use crate::graph::{diagonal_information, optimize, OptimizeParams, OptimizeResult, Pose3, PoseGraph};
use crate::loopdet::{
    estimate_relative_pose, make_descriptor, wrap_angle, LoopCandidate, LoopDb, LoopDbConfig, PlanarTransform,
};
use crate::scanproc::{detect_elevator_interior, synthesize_elevator_cloud, ElevatorDetectConfig};
use crate::synth::Session;
use crate::voxel::SourceClass;

#[derive(Debug, Clone, PartialEq)]
pub struct MappingConfig {
    pub detect: ElevatorDetectConfig,
    pub loops: LoopDbConfig,
    pub optimize: OptimizeParams,
    pub odom_sigma_xy: f64,
    pub odom_sigma_z: f64,
    pub odom_sigma_rot: f64,
    /// z standard deviation of odometry edges between two in-cab poses,
    /// where wheel odometry cannot see the vertical motion.
    pub cab_sigma_z: f64,
    pub prior_sigma: f64,
    pub elevation_sigma_z: f64,
    pub loop_sigma_xy: f64,
    pub loop_sigma_yaw: f64,
    /// Largest planar extent of a run of close-range scans that still
    /// counts as a cab ride, meters.
    pub max_ride_travel: f64,
    /// A loop is kept only if its planar offset agrees with dead reckoning
    /// within `loop_gate_xy + loop_gate_xy_per_node · |i - j|` meters and
    /// `loop_gate_yaw` radians.
    pub loop_gate_xy: f64,
    pub loop_gate_xy_per_node: f64,
    pub loop_gate_yaw: f64,
    pub use_floor_labels: bool,
    pub use_elevation_constraints: bool,
    pub max_ground_channel: u8,
    /// Leaf size for thinning the output cloud; 0 keeps every point.
    pub cloud_leaf: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            detect: ElevatorDetectConfig::default(),
            loops: LoopDbConfig::default(),
            optimize: OptimizeParams::default(),
            odom_sigma_xy: 0.05,
            odom_sigma_z: 0.05,
            odom_sigma_rot: 0.01,
            cab_sigma_z: 10.0,
            prior_sigma: 1e-3,
            elevation_sigma_z: 0.3,
            loop_sigma_xy: 0.1,
            loop_sigma_yaw: 0.02,
            max_ride_travel: 1.0,
            loop_gate_xy: 1.0,
            loop_gate_xy_per_node: 0.02,
            loop_gate_yaw: 0.3,
            use_floor_labels: true,
            use_elevation_constraints: true,
            max_ground_channel: 4,
            cloud_leaf: 0.05,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<()> {
        self.detect.validate()?;
        self.loops.validate()?;
        let sigmas = [
            self.odom_sigma_xy,
            self.odom_sigma_z,
            self.odom_sigma_rot,
            self.cab_sigma_z,
            self.prior_sigma,
            self.elevation_sigma_z,
            self.loop_sigma_xy,
            self.loop_sigma_yaw,
            self.max_ride_travel,
            self.loop_gate_xy,
            self.loop_gate_yaw,
        ];
        if !sigmas.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(invalid("mapping sigmas must be positive"));
        }
        if !(self.loop_gate_xy_per_node >= 0.0) {
            return Err(invalid("loop_gate_xy_per_node must be non-negative"));
        }
        if self.max_ground_channel > 15 || !(self.cloud_leaf >= 0.0) {
            return Err(invalid("max_ground_channel must be <= 15 and cloud_leaf >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MappingOutput {
    pub graph: PoseGraph,
    pub result: OptimizeResult,
    pub delta_z: Vec<f64>,
    pub floors: Vec<i32>,
    pub in_cab: Vec<bool>,
    pub loops: Vec<LoopCandidate>,
    /// Candidates dropped by scan alignment or the dead-reckoning gate.
    pub rejected_loops: usize,
    /// Inclusive pose ranges spent inside a cab.
    pub rides: Vec<(usize, usize)>,
    pub cloud: Vec<([f64; 3], SourceClass)>,
}

/// Maximal runs of consecutive in-cab poses.
fn cab_runs(in_cab: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, inside) in in_cab.iter().chain(std::iter::once(&false)).enumerate() {
        match (start, *inside) {
            (None, true) => start = Some(i),
            (Some(a), false) => {
                runs.push((a, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    runs
}

/// Keeps only the close-range runs with little planar motion; a stairwell
/// is as cramped as a cab but the robot crosses it.
fn stationary_runs(close: &[bool], poses: &[Pose3], max_travel: f64) -> Vec<bool> {
    let mut keep = vec![false; close.len()];
    for (a, b) in cab_runs(close) {
        let xy = |i: usize| (poses[i].x(), poses[i].y());
        let (x0, y0) = xy(a);
        let travel = (a..=b).map(|i| (xy(i).0 - x0).hypot(xy(i).1 - y0)).fold(0.0, f64::max);
        if travel <= max_travel {
            keep[a..=b].iter_mut().for_each(|k| *k = true);
        }
    }
    keep
}

fn consistent(initial: &[Pose3], c: &LoopCandidate, t: &PlanarTransform, cfg: &MappingConfig) -> bool {
    let rel = initial[c.match_id].between(&initial[c.query_id]);
    let gap = c.query_id.abs_diff(c.match_id) as f64;
    let dxy = (rel.x() - t.dx).hypot(rel.y() - t.dy);
    dxy <= cfg.loop_gate_xy + cfg.loop_gate_xy_per_node * gap
        && wrap_angle(rel.yaw() - t.dyaw).abs() <= cfg.loop_gate_yaw
}

fn dead_reckoning(session: &Session) -> Result<Vec<Pose3>> {
    let n = session.manifest.poses;
    let mut poses = vec![session.manifest.start_pose()];
    for (k, e) in session.odometry.iter().enumerate() {
        if e.i != k || e.j != k + 1 {
            return Err(invalid(format!("odometry row {k} links {} -> {}, expected {k} -> {}", e.i, e.j, k + 1)));
        }
        poses.push(poses[k].compose(&e.rel));
    }
    if poses.len() != n {
        return Err(invalid(format!("{} odometry edges for {n} poses", session.odometry.len())));
    }
    Ok(poses)
}

/// Runs the full mapping pipeline on a loaded session.
pub fn run_mapping(session: &Session, cfg: &MappingConfig) -> Result<MappingOutput> {
    cfg.validate()?;
    let m = &session.manifest;
    let n = m.poses;
    if n == 0 || session.scans.len() != n {
        return Err(invalid(format!("session has {} scans for {n} poses", session.scans.len())));
    }
    let baro = m.baro_config();
    let times: Vec<f64> = (0..n).map(|i| m.pose_time(i)).collect();
    let delta_z = altitude_profile(&session.pressure, &times, &baro)?;
    let floors = floor_labels(&delta_z, &baro);
    let close = session
        .scans
        .iter()
        .map(|s| detect_elevator_interior(s, &cfg.detect))
        .collect::<Result<Vec<_>>>()?;
    let initial = dead_reckoning(session)?;
    let in_cab = stationary_runs(&close, &initial, cfg.max_ride_travel);

    let mut graph = PoseGraph::new();
    for (i, p) in initial.iter().enumerate() {
        graph.add_node(i, *p);
    }
    let s = cfg.prior_sigma;
    graph.set_prior(0, m.start_pose(), diagonal_information([s; 3], [s; 3]))?;
    let (sxy, sz, sr) = (cfg.odom_sigma_xy, cfg.odom_sigma_z, cfg.odom_sigma_rot);
    for e in &session.odometry {
        let z = if in_cab[e.i] && in_cab[e.j] { cfg.cab_sigma_z } else { sz };
        graph.add_odometry(e.i, e.j, e.rel, diagonal_information([sxy, sxy, z], [sr; 3]))?;
    }
    if cfg.use_elevation_constraints {
        for (i, dz) in delta_z.iter().enumerate() {
            graph.add_elevation_constraint(i, *dz, cfg.elevation_sigma_z)?;
        }
    }

    let mut db = LoopDb::with_labels(&cfg.loops, cfg.use_floor_labels);
    let loop_info = Matrix3::from_diagonal(&Vector3::new(
        cfg.loop_sigma_xy.powi(-2),
        cfg.loop_sigma_xy.powi(-2),
        cfg.loop_sigma_yaw.powi(-2),
    ));
    let mut loops = Vec::new();
    let mut rejected_loops = 0;
    for i in 0..n {
        if in_cab[i] || session.scans[i].is_empty() {
            continue;
        }
        let label = if cfg.use_floor_labels { floors[i] } else { 0 };
        let mut desc = make_descriptor(&session.scans[i], &cfg.loops, label)?;
        desc.node_id = i;
        if let Some(c) = db.query(&desc, label, &cfg.loops) {
            match estimate_relative_pose(&session.scans[i], &session.scans[c.match_id], c.shift, &cfg.loops) {
                Ok((t, _)) if consistent(&initial, &c, &t, cfg) => {
                    graph.add_loop(&c, &t, loop_info)?;
                    loops.push(c);
                }
                Ok(_) => rejected_loops += 1,
                Err(Error::RejectedLoop { .. }) => rejected_loops += 1,
                Err(e) => return Err(e),
            }
        }
        db.insert(i, label, desc)?;
    }

    let result = optimize(&graph, &cfg.optimize)?;
    let rides = cab_runs(&in_cab);
    let cloud = build_cloud(session, &result.poses, &in_cab, &rides, cfg)?;
    Ok(MappingOutput {
        graph,
        result,
        delta_z,
        floors,
        in_cab,
        loops,
        rejected_loops,
        rides,
        cloud,
    })
}

fn build_cloud(
    session: &Session,
    poses: &BTreeMap<usize, Pose3>,
    in_cab: &[bool],
    rides: &[(usize, usize)],
    cfg: &MappingConfig,
) -> Result<Vec<([f64; 3], SourceClass)>> {
    let mut seen: HashSet<(i64, i64, i64, u8)> = HashSet::new();
    let mut cloud = Vec::new();
    let mut push = |p: Vector3<f64>, class: SourceClass, cloud: &mut Vec<([f64; 3], SourceClass)>| {
        if cfg.cloud_leaf > 0.0 {
            let key = (
                (p.x / cfg.cloud_leaf).floor() as i64,
                (p.y / cfg.cloud_leaf).floor() as i64,
                (p.z / cfg.cloud_leaf).floor() as i64,
                class as u8,
            );
            if !seen.insert(key) {
                return;
            }
        }
        cloud.push(([p.x, p.y, p.z], class));
    };
    for (i, scan) in session.scans.iter().enumerate() {
        if in_cab[i] {
            continue;
        }
        let pose = &poses[&i];
        for q in &scan.points {
            let w = pose.transform_point(&Vector3::new(q.x, q.y, q.z));
            let class = if q.channel <= cfg.max_ground_channel {
                SourceClass::Ground
            } else {
                SourceClass::Other
            };
            push(w, class, &mut cloud);
        }
    }
    let sensor = session.manifest.sensor_height;
    for &(a, b) in rides {
        let zs: Vec<f64> = (a..=b).map(|i| poses[&i].z()).collect();
        let lo = zs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 0.5 * session.manifest.floor_height {
            continue;
        }
        let k = (b - a + 1) as f64;
        let cx = (a..=b).map(|i| poses[&i].x()).sum::<f64>() / k;
        let cy = (a..=b).map(|i| poses[&i].y()).sum::<f64>() / k;
        let yaw = poses[&a].yaw();
        let (sn, cs) = yaw.sin_cos();
        let shell = synthesize_elevator_cloud(&cfg.detect, hi - lo, lo - sensor)?;
        for q in &shell.points {
            let w = Vector3::new(cx + cs * q.x - sn * q.y, cy + sn * q.x + cs * q.y, q.z);
            push(w, SourceClass::ElevatorSynth, &mut cloud);
        }
    }
    Ok(cloud)
}

pub fn write_cloud_csv(path: &Path, cloud: &[([f64; 3], SourceClass)]) -> Result<()> {
    let mut out = String::with_capacity(cloud.len() * 48 + 16);
    out.push_str("x,y,z,class\n");
    for ([x, y, z], c) in cloud {
        writeln!(out, "{x},{y},{z},{}", c.name()).unwrap();
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn read_cloud_csv(path: &Path) -> Result<Vec<([f64; 3], SourceClass)>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some("x,y,z,class") {
        return Err(parse_err(&name, 1, "expected header `x,y,z,class`"));
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| parse_err(&name, n + 1, m);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err("expected 4 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        let class = SourceClass::from_name(f[3]).ok_or_else(|| err("class must be ground, elevator or other"))?;
        out.push(([num(f[0])?, num(f[1])?, num(f[2])?], class));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cab_runs_are_maximal() {
        let r = cab_runs(&[false, true, true, false, true]);
        assert_eq!(r, vec![(1, 2), (4, 4)]);
        assert!(cab_runs(&[false, false]).is_empty());
    }

    #[test]
    fn moving_runs_are_not_rides() {
        let poses: Vec<Pose3> = [0.0, 1.0, 1.0, 1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|x| Pose3::from_xyz_yaw(*x, 0.0, 0.0, 0.0))
            .collect();
        let close = [false, true, true, true, false, true, true];
        let kept = stationary_runs(&close, &poses, 0.5);
        assert_eq!(kept, vec![false, true, true, true, false, false, false]);
    }

    #[test]
    fn cloud_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cloud.csv");
        let c = vec![([0.1, -2.0, 3.64], SourceClass::Ground), ([1.0, 1.0, 1.0], SourceClass::ElevatorSynth)];
        write_cloud_csv(&p, &c).unwrap();
        assert_eq!(read_cloud_csv(&p).unwrap(), c);
    }
}
