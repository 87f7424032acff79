//! Session directory layout: `manifest.txt`, `pressure.csv`,
//! `odometry.csv`, `scan_<id>.csv`, `ground_truth.csv` and
//! `truth_voxels.txt`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::session::{Manifest, OdometryEdge, Session};
use crate::baro::{read_pressure_csv, write_pressure_csv};
use crate::error::{io_err, parse_err, Result};
use crate::graph::Pose3;
use crate::scan::{read_scan_csv, scan_file_name, write_scan_csv};
use crate::voxel::{read_voxel_map, write_voxel_map};

pub const MANIFEST: &str = "manifest.txt";
pub const PRESSURE: &str = "pressure.csv";
pub const ODOMETRY: &str = "odometry.csv";
pub const GROUND_TRUTH: &str = "ground_truth.csv";
pub const TRUTH_VOXELS: &str = "truth_voxels.txt";

const ODOM_HEADER: &str = "i,j,dx,dy,dz,dqx,dqy,dqz,dqw";
const TRUTH_HEADER: &str = "id,x,y,z,qx,qy,qz,qw,floor";

fn manifest_to_string(m: &Manifest) -> String {
    let [x, y, z, yaw] = m.start;
    format!(
        "p_cri={}\nwindow={}\nseed={}\nposes={}\npose_period={}\nfirst_pose_time={}\nsensor_height={}\nfloors={}\nfloor_height={}\nelevators={}\nstart={x} {y} {z} {yaw}\n",
        m.p_cri, m.window, m.seed, m.poses, m.pose_period, m.first_pose_time, m.sensor_height, m.floors, m.floor_height, m.elevators
    )
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut kv = std::collections::BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&name, n + 1, "expected key=value"))?;
        kv.insert(k.trim().to_string(), (n + 1, v.trim().to_string()));
    }
    let get = |k: &str| -> Result<(usize, &str)> {
        kv.get(k)
            .map(|(n, v)| (*n, v.as_str()))
            .ok_or_else(|| parse_err(&name, 0, format!("missing `{k}`")))
    };
    fn parse<T: std::str::FromStr>(name: &str, (n, v): (usize, &str)) -> Result<T> {
        v.parse().map_err(|_| parse_err(name, n, format!("bad value `{v}`")))
    }
    let (sn, sv) = get("start")?;
    let start: Vec<f64> = sv
        .split_whitespace()
        .map(|s| parse(&name, (sn, s)))
        .collect::<Result<_>>()?;
    let start: [f64; 4] = start
        .try_into()
        .map_err(|_| parse_err(&name, sn, "start takes x y z yaw"))?;
    Ok(Manifest {
        p_cri: parse(&name, get("p_cri")?)?,
        window: parse(&name, get("window")?)?,
        seed: parse(&name, get("seed")?)?,
        poses: parse(&name, get("poses")?)?,
        pose_period: parse(&name, get("pose_period")?)?,
        first_pose_time: parse(&name, get("first_pose_time")?)?,
        sensor_height: parse(&name, get("sensor_height")?)?,
        floors: parse(&name, get("floors")?)?,
        floor_height: parse(&name, get("floor_height")?)?,
        elevators: parse(&name, get("elevators")?)?,
        start,
    })
}

fn pose_fields(p: &Pose3) -> [f64; 7] {
    let q = p.rotation.quaternion();
    [p.x(), p.y(), p.z(), q.i, q.j, q.k, q.w]
}

fn pose_from_fields(f: &[f64]) -> Pose3 {
    let q = UnitQuaternion::from_quaternion(Quaternion::new(f[6], f[3], f[4], f[5]));
    Pose3::new(Vector3::new(f[0], f[1], f[2]), q)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn read_rows(path: &Path, header: &str, cols: usize) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(header) {
        return Err(parse_err(&name, 1, format!("expected header `{header}`")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != cols {
            return Err(parse_err(&name, n + 1, format!("expected {cols} columns")));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn numbers(path: &Path, row: usize, cells: &[String]) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| {
            c.parse()
                .map_err(|_| parse_err(&path.display().to_string(), row + 2, format!("bad number `{c}`")))
        })
        .collect()
}

pub fn read_odometry_csv(path: &Path) -> Result<Vec<OdometryEdge>> {
    let rows = read_rows(path, ODOM_HEADER, 9)?;
    rows.iter()
        .enumerate()
        .map(|(n, r)| {
            let bad = || parse_err(&path.display().to_string(), n + 2, "bad node id");
            let i = r[0].parse().map_err(|_| bad())?;
            let j = r[1].parse().map_err(|_| bad())?;
            let f = numbers(path, n, &r[2..])?;
            Ok(OdometryEdge {
                i,
                j,
                rel: pose_from_fields(&f),
            })
        })
        .collect()
}

/// Ground-truth poses and floor labels.
pub fn read_ground_truth_csv(path: &Path) -> Result<(Vec<Pose3>, Vec<i32>)> {
    let rows = read_rows(path, TRUTH_HEADER, 9)?;
    let mut poses = Vec::with_capacity(rows.len());
    let mut floors = Vec::with_capacity(rows.len());
    for (n, r) in rows.iter().enumerate() {
        let f = numbers(path, n, &r[1..8])?;
        poses.push(pose_from_fields(&f));
        floors.push(
            r[8].parse()
                .map_err(|_| parse_err(&path.display().to_string(), n + 2, "bad floor"))?,
        );
    }
    Ok((poses, floors))
}

pub fn write_session(dir: &Path, s: &Session) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(io_err(p))
    };
    write(MANIFEST, manifest_to_string(&s.manifest))?;
    write_pressure_csv(&dir.join(PRESSURE), &s.pressure)?;

    let mut odom = format!("{ODOM_HEADER}\n");
    for e in &s.odometry {
        writeln!(odom, "{},{},{}", e.i, e.j, join(&pose_fields(&e.rel))).unwrap();
    }
    write(ODOMETRY, odom)?;

    let mut truth = format!("{TRUTH_HEADER}\n");
    for (id, (p, f)) in s.ground_truth.iter().zip(&s.floors).enumerate() {
        writeln!(truth, "{id},{},{f}", join(&pose_fields(p))).unwrap();
    }
    write(GROUND_TRUTH, truth)?;

    for scan in &s.scans {
        write_scan_csv(&dir.join(scan_file_name(scan.node_id)), scan)?;
    }
    if let Some(v) = &s.truth_voxels {
        write_voxel_map(&dir.join(TRUTH_VOXELS), v)?;
    }
    Ok(())
}

/// Loads a session directory. Ground truth files are optional.
pub fn read_session(dir: &Path) -> Result<Session> {
    let manifest = read_manifest(&dir.join(MANIFEST))?;
    let pressure = read_pressure_csv(&dir.join(PRESSURE))?;
    let odometry = read_odometry_csv(&dir.join(ODOMETRY))?;
    let scans = (0..manifest.poses)
        .map(|i| read_scan_csv(&dir.join(scan_file_name(i)), i, manifest.pose_time(i)))
        .collect::<Result<Vec<_>>>()?;
    let truth_path = dir.join(GROUND_TRUTH);
    let (ground_truth, floors) = if truth_path.exists() {
        read_ground_truth_csv(&truth_path)?
    } else {
        (Vec::new(), Vec::new())
    };
    let voxel_path = dir.join(TRUTH_VOXELS);
    let truth_voxels = if voxel_path.exists() {
        Some(read_voxel_map(&voxel_path)?)
    } else {
        None
    };
    Ok(Session {
        manifest,
        scans,
        pressure,
        odometry,
        ground_truth,
        floors,
        truth_voxels,
    })
}
