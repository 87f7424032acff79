use munes::baro::{altitude_profile, floor_labels, estimate_delta_z};
use munes::scanproc::{mean_squared_range, ElevatorDetectConfig};
use munes::synth::{generate_building, generate_session_in, parse_session_spec, NoiseSpec, SessionSpec, SurfaceKind};
use munes::voxel::{voxelize, SourceClass, VoxelClass, VoxelizeConfig};

const STAIRS_UP: &str = "\
floors = 2
corridor = 0 0 12 4.2
stairs = 3 4.2 12 0.3 0.9
elevator = e0 1.5 -1.8 3.3 0 0 1 0
waypoint = 10 2.1 0
waypoint = 2.4 2.1 0
waypoint = 2.4 4.65 0
waypoint = 3.0 4.65 0
waypoint = 6.6 4.65 3.64
waypoint = 7.2 4.65 3.64
waypoint = 7.2 2.1 3.64
waypoint = 11 2.1 3.64
waypoint = 7.2 2.1 3.64
waypoint = 7.2 4.65 3.64
waypoint = 6.6 4.65 3.64
waypoint = 3.0 4.65 0
waypoint = 2.4 4.65 0
waypoint = 2.4 0.6 0
waypoint = 2.4 -0.9 0
waypoint = 2.4 -0.9 3.64
waypoint = 2.4 0.6 3.64
";

fn spec(noise: NoiseSpec) -> SessionSpec {
    let mut s = parse_session_spec(STAIRS_UP, "stairs").unwrap();
    s.noise = noise;
    s
}

#[test]
fn same_seed_same_session() {
    let s = spec(NoiseSpec::default());
    let b = generate_building(&s.building).unwrap();
    let a = generate_session_in(&b, &s, 5).unwrap();
    assert_eq!(a, generate_session_in(&b, &s, 5).unwrap());
    assert_ne!(a.pressure, generate_session_in(&b, &s, 6).unwrap().pressure);
}

#[test]
fn noise_free_pressure_inverts_to_true_height() {
    let s = spec(NoiseSpec::zero());
    let b = generate_building(&s.building).unwrap();
    let ses = generate_session_in(&b, &s, 1).unwrap();
    let m = &ses.manifest;
    let z0 = ses.ground_truth[0].z();
    for (i, p) in ses.ground_truth.iter().enumerate() {
        let w: Vec<f64> = ses.pressure[i * m.window..(i + 1) * m.window].iter().map(|s| s.p).collect();
        let dz = estimate_delta_z(&w, m.p_cri).unwrap();
        assert!((dz - (p.z() - z0)).abs() < 1e-6, "pose {i}: {dz}");
    }
}

#[test]
fn pressure_falls_going_up_and_rises_going_down() {
    let s = spec(NoiseSpec::zero());
    let b = generate_building(&s.building).unwrap();
    let ses = generate_session_in(&b, &s, 1).unwrap();
    let w = ses.manifest.window;
    for i in 1..ses.ground_truth.len() {
        let dz = ses.ground_truth[i].z() - ses.ground_truth[i - 1].z();
        let dp = ses.pressure[i * w].p - ses.pressure[(i - 1) * w].p;
        if dz.abs() > 1e-9 {
            assert!(dz * dp < 0.0, "pose {i}: dz {dz} dp {dp}");
        }
    }
}

#[test]
fn one_flight_gives_one_transition() {
    let mut s = spec(NoiseSpec::default());
    s.route.truncate(11);
    let b = generate_building(&s.building).unwrap();
    for seed in 0..5 {
        let ses = generate_session_in(&b, &s, seed).unwrap();
        let m = &ses.manifest;
        let times: Vec<f64> = (0..m.poses).map(|i| m.pose_time(i)).collect();
        let labels = floor_labels(&altitude_profile(&ses.pressure, &times, &m.baro_config()).unwrap(), &m.baro_config());
        let changes = labels.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1, "seed {seed}: {labels:?}");
        assert_eq!((labels[0], *labels.last().unwrap()), (0, 1));
    }
}

#[test]
fn cab_scans_separate_from_corridor_scans() {
    let s = spec(NoiseSpec::default());
    let b = generate_building(&s.building).unwrap();
    let ses = generate_session_in(&b, &s, 2).unwrap();
    let limit = ElevatorDetectConfig::default().range_sq_threshold;
    let mut cabs = 0;
    for (i, p) in ses.ground_truth.iter().enumerate() {
        let msr = mean_squared_range(&ses.scans[i]).unwrap();
        let ground = p.z() - ses.manifest.sensor_height;
        let on_floor = (0..2).any(|f| (ground - f as f64 * 3.64).abs() < 1e-6);
        let corridor = on_floor && p.y() > 0.0 && p.y() < 4.2;
        if b.elevator_at(p.x(), p.y()).is_some() {
            cabs += 1;
            assert!(msr < limit, "cab pose {i}: {msr}");
        } else if corridor {
            assert!(msr > limit, "corridor pose {i}: {msr}");
        }
    }
    assert!(cabs >= 3);
}

#[test]
fn truth_corridors_match_voxelized_floor_surfaces() {
    let s = spec(NoiseSpec::zero());
    let b = generate_building(&s.building).unwrap();
    let res = s.building.resolution;
    let mut pts = Vec::new();
    for surf in b.surfaces.iter().filter(|s| matches!(s.kind, SurfaceKind::Floor(_))) {
        for (i, j) in surf.rect.cells(res) {
            pts.push(([(i as f64 + 0.5) * res, (j as f64 + 0.5) * res, surf.z], SourceClass::Ground));
        }
    }
    let m = voxelize(&pts, &VoxelizeConfig::default()).unwrap();
    let corridors = |m: &munes::voxel::VoxelMap, skip_cabs: bool| {
        m.sorted()
            .into_iter()
            .filter(|(v, c)| {
                *c != VoxelClass::Stair && !(skip_cabs && b.truth.elevator_at(v.column()).is_some())
            })
            .map(|(v, _)| v)
            .collect::<Vec<_>>()
    };
    assert_eq!(corridors(&m, true), corridors(&b.truth, true));
}
