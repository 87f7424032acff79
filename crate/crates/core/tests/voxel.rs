use std::collections::HashMap;

use munes::scan::ScanPoint;
use munes::voxel::{
    extract_ground, map_as_points, map_from_string, map_to_string, voxelize, SourceClass, VoxelClass,
    VoxelMap, VoxelizeConfig,
};
use proptest::prelude::*;

fn class() -> impl Strategy<Value = SourceClass> {
    prop_oneof![Just(SourceClass::Ground), Just(SourceClass::Other)]
}

fn cloud() -> impl Strategy<Value = Vec<([f64; 3], SourceClass)>> {
    prop::collection::vec((prop::array::uniform3(-3.0f64..3.0), class()), 1..300)
}

fn index_set(m: &VoxelMap) -> Vec<(munes::voxel::VoxelIndex, VoxelClass)> {
    m.sorted()
}

proptest! {
    #[test]
    fn ground_extraction_keeps_low_channels(chs in prop::collection::vec(0u8..16, 0..100), max in 0u8..16) {
        let pts: Vec<ScanPoint> = chs.iter().map(|&c| ScanPoint::new(1.0, 0.0, 0.0, c)).collect();
        let kept = extract_ground(&pts, max);
        prop_assert_eq!(kept.len(), chs.iter().filter(|&&c| c <= max).count());
        prop_assert!(kept.iter().all(|p| p.channel <= max));
    }

    #[test]
    fn voxelizing_centres_is_idempotent(pts in cloud()) {
        let cfg = VoxelizeConfig::default();
        let m = voxelize(&pts, &cfg).unwrap();
        let again = voxelize(&map_as_points(&m), &cfg).unwrap();
        prop_assert_eq!(index_set(&m), index_set(&again));
    }

    #[test]
    fn stair_columns_are_capped(pts in cloud(), n_z in 1usize..6) {
        let cfg = VoxelizeConfig { n_z, ..VoxelizeConfig::default() };
        let m = voxelize(&pts, &cfg).unwrap();
        let mut per_column: HashMap<(i32, i32), usize> = HashMap::new();
        for (v, c) in m.iter() {
            if *c == VoxelClass::Stair {
                *per_column.entry(v.column()).or_default() += 1;
            }
        }
        prop_assert!(per_column.values().all(|&n| n <= n_z));
    }

    #[test]
    fn corridor_voxels_sit_on_empty_voxels(pts in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 1..300)) {
        let cloud: Vec<_> = pts.into_iter().map(|p| (p, SourceClass::Ground)).collect();
        let m = voxelize(&cloud, &VoxelizeConfig::default()).unwrap();
        for (v, c) in m.iter() {
            prop_assert_eq!(*c, VoxelClass::Corridor);
            prop_assert!(!m.contains(&v.offset(0, 0, -1)));
        }
    }

    #[test]
    fn index_round_trip_within_half_voxel(p in prop::array::uniform3(-100.0f64..100.0), res in 0.05f64..1.0) {
        let m = VoxelMap::new(res, [0.3, -0.7, -0.1]);
        let c = m.center(m.index_of(p));
        for a in 0..3 {
            prop_assert!((c[a] - p[a]).abs() <= res / 2.0 + 1e-9);
        }
    }

    #[test]
    fn saved_maps_reload_byte_identically(pts in cloud()) {
        let m = voxelize(&pts, &VoxelizeConfig::default()).unwrap();
        let text = map_to_string(&m);
        let back = map_from_string(&text, "map").unwrap();
        prop_assert_eq!(map_to_string(&back), text);
    }
}
