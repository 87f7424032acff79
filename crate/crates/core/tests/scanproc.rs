use munes::scan::{Scan, ScanPoint};
use munes::scanproc::{
    detect_elevator_interior, mean_squared_range, synthesize_elevator_cloud, ElevatorDetectConfig,
};
use munes::voxel::{voxelize, SourceClass, VoxelClass, VoxelizeConfig};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-8.0f64..8.0, -8.0f64..8.0, -2.0f64..3.0), 1..60)
}

fn scan_of(pts: &[(f64, f64, f64)]) -> Scan {
    Scan::new(0, 0.0, pts.iter().map(|&(x, y, z)| ScanPoint::new(x, y, z, 3)).collect())
}

proptest! {
    #[test]
    fn mean_squared_range_ignores_rotation(pts in points(), a in -3.2f64..3.2) {
        let (s, c) = a.sin_cos();
        let turned: Vec<_> = pts.iter().map(|&(x, y, z)| (c * x - s * y, s * x + c * y, z)).collect();
        let m0 = mean_squared_range(&scan_of(&pts)).unwrap();
        let m1 = mean_squared_range(&scan_of(&turned)).unwrap();
        prop_assert!((m0 - m1).abs() <= 1e-9 * m0.max(1.0));
    }

    #[test]
    fn scaling_out_never_enters_a_cab(pts in points(), s in 1.0f64..5.0) {
        let cfg = ElevatorDetectConfig::default();
        let grown: Vec<_> = pts.iter().map(|&(x, y, z)| (s * x, s * y, s * z)).collect();
        let before = detect_elevator_interior(&scan_of(&pts), &cfg).unwrap();
        let after = detect_elevator_interior(&scan_of(&grown), &cfg).unwrap();
        prop_assert!(before || !after);
    }

    #[test]
    fn cab_shell_voxelizes_to_one_column(
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
        floors in 1usize..5,
    ) {
        let cfg = ElevatorDetectConfig::default();
        let dz = floors as f64 * 3.64;
        let shell = synthesize_elevator_cloud(&cfg, dz, 0.0).unwrap();
        let pts: Vec<_> = shell
            .points
            .iter()
            .map(|p| ([x + p.x, y + p.y, p.z], SourceClass::ElevatorSynth))
            .collect();
        let vcfg = VoxelizeConfig::default();
        let map = voxelize(&pts, &vcfg).unwrap();
        prop_assert_eq!(map.elevators.len(), 1);
        let col = map.elevators[0].column;
        prop_assert!(map.iter().all(|(v, c)| *c == VoxelClass::Elevator && v.column() == col));
        let robot = map.index_of([x, y, 0.0]);
        prop_assert!((robot.i - col.0).abs() <= 1 && (robot.j - col.1).abs() <= 1);
    }
}
