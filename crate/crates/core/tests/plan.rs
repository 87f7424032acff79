use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::SQRT_2;

use munes::plan::{accessible, astar, plan_multi, MoveMode, PlanConfig};
use munes::synth::{generate_building, parse_session_spec};
use munes::voxel::{VoxelClass, VoxelIndex, VoxelMap};
use proptest::prelude::*;

const TWO_FLOORS: &str = "\
floors = 2
corridor = 0 0 12 4.2
stairs = 3 4.2 12 0.3 0.9
elevator = e0 1.5 -1.8 3.3 0 0 1 0
";

#[derive(PartialEq)]
struct Key(f64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

fn sqrt3() -> f64 {
    3f64.sqrt()
}

fn seconds(c: [u32; 3], res: f64, v: f64) -> f64 {
    (c[0] as f64 + c[1] as f64 * SQRT_2 + c[2] as f64 * sqrt3()) * res / v
}

/// Uniform-cost search over walking moves, counting moves by how many
/// indices they change.
fn oracle(map: &VoxelMap, start: VoxelIndex, goal: VoxelIndex, v: f64) -> Option<f64> {
    let res = map.resolution;
    let mut best: HashMap<VoxelIndex, [u32; 3]> = HashMap::from([(start, [0; 3])]);
    let mut open = BinaryHeap::from([Reverse((Key(0.0), start))]);
    while let Some(Reverse((Key(t), u))) = open.pop() {
        let cu = best[&u];
        if t > seconds(cu, res, v) {
            continue;
        }
        if u == goal {
            return Some(t);
        }
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    let w = u.offset(di, dj, dk);
                    let n = [di, dj, dk].iter().filter(|d| **d != 0).count();
                    if n == 0 || !map.contains(&w) || !accessible(map, u, w).unwrap() {
                        continue;
                    }
                    let mut cw = cu;
                    cw[n - 1] += 1;
                    let tw = seconds(cw, res, v);
                    if best.get(&w).map_or(true, |c| tw < seconds(*c, res, v)) {
                        best.insert(w, cw);
                        open.push(Reverse((Key(tw), w)));
                    }
                }
            }
        }
    }
    None
}

/// Two floors of randomly holed corridor joined by a 3-step staircase.
fn stairs_map() -> impl Strategy<Value = VoxelMap> {
    (6i32..20, 6i32..20).prop_flat_map(|(w, d)| {
        let cells = (w * d) as usize;
        (
            Just((w, d)),
            prop::collection::vec(prop::bool::weighted(0.8), cells),
            prop::collection::vec(prop::bool::weighted(0.8), cells),
            0..w - 4,
            0..d,
        )
            .prop_map(|((w, d), lower, upper, si, sj)| {
                let mut m = VoxelMap::new(0.3, [0.0; 3]);
                for i in 0..w {
                    for j in 0..d {
                        let n = (i * d + j) as usize;
                        if lower[n] {
                            m.insert(VoxelIndex::new(i, j, 0), VoxelClass::Corridor);
                        }
                        if upper[n] {
                            m.insert(VoxelIndex::new(i, j, 4), VoxelClass::Corridor);
                        }
                    }
                }
                m.insert(VoxelIndex::new(si, sj, 0), VoxelClass::Corridor);
                for s in 1..4 {
                    m.insert(VoxelIndex::new(si + s, sj, s), VoxelClass::Stair);
                }
                m.insert(VoxelIndex::new(si + 4, sj, 4), VoxelClass::Corridor);
                m
            })
    })
}

fn two_floor_map() -> VoxelMap {
    let spec = parse_session_spec(TWO_FLOORS, "two floors").unwrap();
    generate_building(&spec.building).unwrap().truth
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn astar_matches_uniform_cost_oracle(map in stairs_map(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let voxels = map.sorted();
        let start = voxels[a.index(voxels.len())].0;
        let goal = voxels[b.index(voxels.len())].0;
        let cfg = PlanConfig::default();
        match (astar(&map, start, goal, &cfg), oracle(&map, start, goal, cfg.v_rbt)) {
            (Ok(t), Some(o)) => {
                prop_assert_eq!(t.total_time, o);
                for w in t.waypoints.windows(2) {
                    if w[0].voxel != w[1].voxel {
                        prop_assert!(accessible(&map, w[0].voxel, w[1].voxel).unwrap());
                    }
                }
            }
            (Err(_), None) => {}
            (t, o) => prop_assert!(false, "astar {:?} vs oracle {:?}", t.map(|t| t.total_time), o),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn waiting_longer_never_helps(z in 0.0f64..3.64, extra in 0.0f64..3.64) {
        let map = two_floor_map();
        let start = map.index_of([2.4, 0.6, 0.0]);
        let goal = map.index_of([6.6, 0.6, 3.64]);
        let run = |cab: f64| {
            let mut cfg = PlanConfig::default();
            cfg.elevator_z.insert("e0".into(), cab);
            astar(&map, start, goal, &cfg).unwrap()
        };
        let near = run(z);
        let far = run((z + extra).min(3.64));
        prop_assert!(far.total_time >= near.total_time);
        if !far.uses(MoveMode::Elev) && !near.uses(MoveMode::Elev) {
            prop_assert_eq!(far.total_time, near.total_time);
        }
    }

    #[test]
    fn multi_leg_is_chained_single_legs(
        a in prop::array::uniform2(0.3f64..11.7),
        b in prop::array::uniform2(0.3f64..11.7),
        c in prop::array::uniform2(0.3f64..11.7),
        floors in prop::array::uniform3(0usize..2),
        cab in 0usize..2,
    ) {
        let map = two_floor_map();
        let pts = [a, b, c];
        let wps: Vec<VoxelIndex> = (0..3)
            .map(|n| map.index_of([pts[n][0], pts[n][1].min(4.0), floors[n] as f64 * 3.64]))
            .collect();
        prop_assume!(wps.iter().all(|v| map.contains(v)));
        let mut cfg = PlanConfig::default();
        cfg.elevator_z.insert("e0".into(), cab as f64 * 3.64);
        let multi = plan_multi(&map, &wps, false, &cfg).unwrap();
        let first = astar(&map, wps[0], wps[1], &cfg).unwrap();
        let mut next = cfg.clone();
        for (id, z) in &first.rides {
            next.elevator_z.insert(id.clone(), *z);
        }
        let second = astar(&map, wps[1], wps[2], &next).unwrap();
        prop_assert!((multi.total_time - (first.total_time + second.total_time)).abs() < 1e-9);
        prop_assert!((multi.leg_time(0) - first.total_time).abs() < 1e-9);
    }
}
