use std::path::{Path, PathBuf};
use std::process::Command;

use munes::graph::{graph_to_string, read_graph};
use munes::mapping::{read_cloud_csv, write_cloud_csv};
use munes::plan::{read_trajectory_csv, MoveMode};
use munes::synth::{generate_building, read_session, read_session_spec};
use munes::voxel::{map_to_string, read_voxel_map, write_voxel_map, SourceClass, VoxelClass};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn munes(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_munes")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, spec: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("session-{seed}"));
    let (code, _, err) = munes(&["generate", "--spec", s(spec), "--out", s(&out), "--seed", seed]);
    assert_eq!(code, 0, "{err}");
    out
}

fn two_floor_truth(dir: &Path) -> PathBuf {
    let spec = read_session_spec(&fixture("two_floor.spec")).unwrap();
    let path = dir.join("truth.txt");
    write_voxel_map(&path, &generate_building(&spec.building).unwrap().truth).unwrap();
    path
}

#[test]
fn generate_writes_every_stream_deterministically() {
    let tmp = TempDir::new().unwrap();
    let a = generate(tmp.path(), &fixture("two_floor.spec"), "7");
    for f in ["manifest.txt", "pressure.csv", "odometry.csv", "ground_truth.csv", "truth_voxels.txt", "scan_0.csv"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let b = tmp.path().join("again");
    munes(&["generate", "--spec", s(&fixture("two_floor.spec")), "--out", s(&b), "--seed", "7"]);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn malformed_spec_exits_2() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("bad.spec");
    std::fs::write(&spec, "floors = 2\ncorridor = 0 0 12\n").unwrap();
    let (code, _, err) = munes(&["generate", "--spec", s(&spec), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.spec:2"), "{err}");
}

#[test]
fn noise_free_map_recovers_heights() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("clean.spec");
    let mut text = std::fs::read_to_string(fixture("two_floor.spec")).unwrap();
    for k in ["odom_sigma_xy", "odom_sigma_z", "odom_sigma_yaw", "pressure_sigma", "range_sigma"] {
        text.push_str(&format!("noise.{k} = 0\n"));
    }
    std::fs::write(&spec, text).unwrap();
    let session = generate(tmp.path(), &spec, "1");
    let graph = tmp.path().join("graph.txt");
    let cloud = tmp.path().join("cloud.csv");
    let (code, out, err) = munes(&["map", "--session", s(&session), "--out", s(&graph), "--map-cloud", s(&cloud)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 1);

    let g = read_graph(&graph).unwrap();
    assert_eq!(graph_to_string(&g), std::fs::read_to_string(&graph).unwrap());
    let truth = read_session(&session).unwrap().ground_truth;
    let sq: f64 = truth.iter().enumerate().map(|(i, p)| (g.nodes[&i].z() - p.z()).powi(2)).sum();
    assert!((sq / truth.len() as f64).sqrt() < 1e-3);

    let points = read_cloud_csv(&cloud).unwrap();
    let copy = tmp.path().join("copy.csv");
    write_cloud_csv(&copy, &points).unwrap();
    assert_eq!(read_cloud_csv(&copy).unwrap(), points);
}

#[test]
fn map_without_pressure_exits_2() {
    let tmp = TempDir::new().unwrap();
    let session = generate(tmp.path(), &fixture("two_floor.spec"), "2");
    std::fs::remove_file(session.join("pressure.csv")).unwrap();
    let (code, _, err) = munes(&[
        "map", "--session", s(&session), "--out", s(&tmp.path().join("g")), "--map-cloud", s(&tmp.path().join("c")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("pressure.csv"), "{err}");
}

#[test]
fn broken_odometry_exits_3() {
    let tmp = TempDir::new().unwrap();
    let session = generate(tmp.path(), &fixture("two_floor.spec"), "2");
    let odom = session.join("odometry.csv");
    let text = std::fs::read_to_string(&odom).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut f: Vec<String> = lines[1].split(',').map(String::from).collect();
    f[2] = "NaN".into();
    lines[1] = f.join(",");
    std::fs::write(&odom, lines.join("\n") + "\n").unwrap();
    let (code, _, err) = munes(&[
        "map", "--session", s(&session), "--out", s(&tmp.path().join("g")), "--map-cloud", s(&tmp.path().join("c")),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn voxelize_mapped_cloud() {
    let tmp = TempDir::new().unwrap();
    let session = generate(tmp.path(), &fixture("two_floor.spec"), "3");
    let cloud = tmp.path().join("cloud.csv");
    let (code, _, err) = munes(&[
        "map", "--session", s(&session), "--out", s(&tmp.path().join("g")), "--map-cloud", s(&cloud),
    ]);
    assert_eq!(code, 0, "{err}");
    let vox = tmp.path().join("vox.txt");
    let (code, out, err) = munes(&["voxelize", "--cloud", s(&cloud), "--out", s(&vox)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("ELEVATOR"), "{out}");
    let map = read_voxel_map(&vox).unwrap();
    assert_eq!(map_to_string(&map), std::fs::read_to_string(&vox).unwrap());
    let manifest = read_session(&session).unwrap().manifest;
    assert_eq!(map.elevators.len(), manifest.elevators);
}

#[test]
fn corridor_only_cloud_has_no_stairs_or_cabs() {
    let tmp = TempDir::new().unwrap();
    let cloud = tmp.path().join("flat.csv");
    let pts: Vec<_> = (0..40)
        .flat_map(|i| (0..10).map(move |j| ([(i as f64 + 0.5) * 0.3, (j as f64 + 0.5) * 0.3, 0.05], SourceClass::Ground)))
        .collect();
    write_cloud_csv(&cloud, &pts).unwrap();
    let vox = tmp.path().join("vox.txt");
    let (code, _, _) = munes(&["voxelize", "--cloud", s(&cloud), "--out", s(&vox)]);
    assert_eq!(code, 0);
    let map = read_voxel_map(&vox).unwrap();
    assert_eq!(map.count(VoxelClass::Corridor), 400);
    assert_eq!(map.count(VoxelClass::Stair) + map.count(VoxelClass::Elevator), 0);

    write_cloud_csv(&cloud, &[]).unwrap();
    assert_eq!(munes(&["voxelize", "--cloud", s(&cloud), "--out", s(&vox)]).0, 2);
}

#[test]
fn cab_position_flips_the_route() {
    let tmp = TempDir::new().unwrap();
    let truth = two_floor_truth(tmp.path());
    let traj = tmp.path().join("t.csv");
    let run = |z: &str| {
        let (code, out, err) = munes(&[
            "plan", "--voxels", s(&truth), "--waypoints", "2.4,0.6,0;6.6,0.6,3.64", "--elevator-z", &format!("e0={z}"),
            "--out", s(&traj),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("total_time"), "{out}");
        read_trajectory_csv(&traj).unwrap()
    };
    let down = run("0.0");
    assert!(down.iter().any(|r| r.2 == MoveMode::Elev));
    let up = run("3.64");
    assert!(up.iter().any(|r| r.2 == MoveMode::Stair));
    assert!(!up.iter().any(|r| r.2 == MoveMode::Elev));
}

#[test]
fn plan_errors_map_to_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let truth = two_floor_truth(tmp.path());
    let traj = s(&tmp.path().join("t.csv")).to_string();
    let plan = |wps: &str| munes(&["plan", "--voxels", s(&truth), "--waypoints", wps, "--out", &traj]);
    let (code, _, err) = plan("2.4,0.6,0;20,0.6,0");
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("waypoint 1"), "{err}");
    assert_eq!(plan("2.4,0.6;6,0.6,0").0, 2);
    let (_, _, err) = plan("2.4,0.6,0.4;6.6,0.6,0");
    assert!(err.contains("snapped"), "{err}");

    let map = read_voxel_map(&truth).unwrap();
    let mut cut = map.clone();
    for (v, c) in map.iter() {
        if *c != VoxelClass::Corridor || v.k > 0 {
            cut.remove(v);
        }
    }
    cut.elevators.clear();
    let island = tmp.path().join("island.txt");
    write_voxel_map(&island, &cut).unwrap();
    let mut lone = cut.clone();
    let far = lone.index_of([30.0, 0.0, 0.0]);
    lone.insert(far, VoxelClass::Corridor);
    write_voxel_map(&island, &lone).unwrap();
    let (code, _, err) = munes(&["plan", "--voxels", s(&island), "--waypoints", "2.4,0.6,0;30,0,0", "--out", &traj]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn config_file_is_applied_and_checked() {
    let tmp = TempDir::new().unwrap();
    let truth = two_floor_truth(tmp.path());
    let traj = s(&tmp.path().join("t.csv")).to_string();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "plan.v_rbt = 0.5\n").unwrap();
    let args = ["plan", "--voxels", s(&truth), "--waypoints", "0.6,0.6,0;6.6,0.6,0", "--out", &traj];
    let time = |out: &str| out.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap();
    let (_, fast, _) = munes(&args);
    let mut slow_args = args.to_vec();
    slow_args.extend(["--config", s(&cfg)]);
    let (code, slow, _) = munes(&slow_args);
    assert_eq!(code, 0);
    assert!((time(&slow) - 2.0 * time(&fast)).abs() < 1e-6, "{fast} {slow}");

    std::fs::write(&cfg, "plan.speed = 2\n").unwrap();
    let (code, _, err) = munes(&slow_args);
    assert_eq!(code, 2);
    assert!(err.contains("unknown key"), "{err}");
}
