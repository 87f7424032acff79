use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::geometry::Aabb;
use super::spec::{BuildingSpec, Rect, SLAB};
use crate::error::{Error, Result};
use crate::plan::{successors, Cost, PlanConfig, SearchState};
use crate::voxel::{ElevatorInfo, VoxelClass, VoxelIndex, VoxelMap, VoxelizeConfig};

const WALL_THICKNESS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Floor(usize),
    Step { flight: usize, step: usize },
}

/// Upward-facing walkable rectangle at height `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub rect: Rect,
    pub z: f64,
    pub kind: SurfaceKind,
}

#[derive(Debug, Clone)]
pub struct Building {
    pub spec: BuildingSpec,
    pub boxes: Vec<Aabb>,
    pub surfaces: Vec<Surface>,
    pub truth: VoxelMap,
}

impl Building {
    /// Elevator whose footprint contains (x, y).
    pub fn elevator_at(&self, x: f64, y: f64) -> Option<usize> {
        self.spec.elevators.iter().position(|e| e.footprint.contains(x, y))
    }

    /// Walkable surface heights above (x, y).
    pub fn surface_heights(&self, x: f64, y: f64) -> impl Iterator<Item = f64> + '_ {
        self.surfaces.iter().filter(move |s| s.rect.contains(x, y)).map(|s| s.z)
    }
}

fn walkable_rects(spec: &BuildingSpec, floor: usize) -> Vec<Rect> {
    let mut rects: Vec<Rect> = spec.corridors_on(floor).copied().collect();
    if let Some(s) = &spec.stairs {
        rects.extend(s.landings());
    }
    rects.extend(spec.elevators.iter().filter(|e| e.serves(floor)).map(|e| e.footprint));
    rects
}

fn cell_set<'a>(rects: impl IntoIterator<Item = &'a Rect>, res: f64) -> HashSet<(i32, i32)> {
    rects.into_iter().flat_map(|r| r.cells(res)).collect()
}

/// Wall boxes along the boundary of `walk`, merged into straight runs.
fn boundary_walls(
    walk: &HashSet<(i32, i32)>,
    open: impl Fn((i32, i32), (i32, i32)) -> bool,
    res: f64,
    z0: f64,
    z1: f64,
) -> Vec<Aabb> {
    // (axis, side, line index) -> cells along the line
    let mut runs: BTreeMap<(u8, i8, i32), BTreeSet<i32>> = BTreeMap::new();
    for &(i, j) in walk {
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = (i + di, j + dj);
            if walk.contains(&n) || open((i, j), n) {
                continue;
            }
            if di != 0 {
                runs.entry((0, di as i8, i)).or_default().insert(j);
            } else {
                runs.entry((1, dj as i8, j)).or_default().insert(i);
            }
        }
    }
    let t = WALL_THICKNESS;
    let mut out = Vec::new();
    for ((axis, side, line), cells) in runs {
        let cells: Vec<i32> = cells.into_iter().collect();
        let mut start = 0;
        for n in 1..=cells.len() {
            if n < cells.len() && cells[n] == cells[n - 1] + 1 {
                continue;
            }
            let (a, b) = (cells[start] as f64 * res, (cells[n - 1] + 1) as f64 * res);
            let face = if side > 0 { (line + 1) as f64 * res } else { line as f64 * res };
            let (c0, c1) = if side > 0 { (face, face + t) } else { (face - t, face) };
            out.push(if axis == 0 {
                Aabb::new([c0, a, z0], [c1, b, z1])
            } else {
                Aabb::new([a, c0, z0], [b, c1, z1])
            });
            start = n;
        }
    }
    out
}

/// Builds the surface geometry and the voxel map it implies.
pub fn generate_building(spec: &BuildingSpec) -> Result<Building> {
    spec.validate()?;
    let res = spec.resolution;
    let top = spec.floor_z(spec.floors);
    let mut boxes = Vec::new();
    let mut surfaces = Vec::new();

    let landing_cells = cell_set(spec.stairs.iter().flat_map(|s| s.landings()).collect::<Vec<_>>().iter(), res);
    let well_cells = cell_set(spec.stairs.iter().map(|s| s.well()).collect::<Vec<_>>().iter(), res);
    let mut walk_cells = Vec::new();
    for f in 0..spec.floors {
        let z = spec.floor_z(f);
        let rects = walkable_rects(spec, f);
        for r in &rects {
            boxes.push(Aabb::new([r.x0, r.y0, z - SLAB], [r.x1, r.y1, z]));
            surfaces.push(Surface {
                rect: *r,
                z,
                kind: SurfaceKind::Floor(f),
            });
        }
        let cells = cell_set(&rects, res);
        let open = |c: (i32, i32), n: (i32, i32)| landing_cells.contains(&c) && well_cells.contains(&n);
        boxes.extend(boundary_walls(&cells, open, res, z, z + spec.wall_height));
        if f + 1 == spec.floors {
            for r in &rects {
                boxes.push(Aabb::new([r.x0, r.y0, top - SLAB], [r.x1, r.y1, top]));
            }
        }
        walk_cells.push(cells);
    }

    if let (Some(s), Some(rise)) = (&spec.stairs, spec.rise()) {
        let w = s.well();
        boxes.push(Aabb::new([w.x0, w.y0, -SLAB], [w.x1, w.y1, 0.0]));
        boxes.push(Aabb::new([w.x0, w.y0, top - SLAB], [w.x1, w.y1, top]));
        boxes.push(Aabb::new([w.x0, w.y0 - WALL_THICKNESS, 0.0], [w.x1, w.y0, top]));
        boxes.push(Aabb::new([w.x0, w.y1, 0.0], [w.x1, w.y1 + WALL_THICKNESS, top]));
        for flight in 0..spec.floors - 1 {
            let z = spec.floor_z(flight);
            for step in 0..s.steps {
                let r = s.step_rect(flight, step);
                let z_top = z + (step + 1) as f64 * rise;
                boxes.push(Aabb::new([r.x0, r.y0, z], [r.x1, r.y1, z_top]));
                surfaces.push(Surface {
                    rect: r,
                    z: z_top,
                    kind: SurfaceKind::Step { flight, step },
                });
            }
        }
    }

    let truth = truth_map(spec, &walk_cells)?;
    check_connectivity(&truth)?;
    Ok(Building {
        spec: spec.clone(),
        boxes,
        surfaces,
        truth,
    })
}

fn truth_map(spec: &BuildingSpec, walk_cells: &[HashSet<(i32, i32)>]) -> Result<VoxelMap> {
    let mut map = VoxelMap::new(spec.resolution, VoxelizeConfig::default().origin);
    let k_of = |map: &VoxelMap, z: f64| map.index_of([0.0, 0.0, z]).k;
    for (f, cells) in walk_cells.iter().enumerate() {
        let k = k_of(&map, spec.floor_z(f));
        for &(i, j) in cells {
            map.insert(VoxelIndex::new(i, j, k), VoxelClass::Corridor);
        }
    }
    if let (Some(s), Some(rise)) = (&spec.stairs, spec.rise()) {
        for flight in 0..spec.floors - 1 {
            for step in 0..s.steps {
                let z_top = spec.floor_z(flight) + (step + 1) as f64 * rise;
                let k = k_of(&map, z_top);
                for (i, j) in s.step_rect(flight, step).cells(spec.resolution) {
                    map.insert(VoxelIndex::new(i, j, k), VoxelClass::Stair);
                }
            }
        }
    }
    for e in &spec.elevators {
        let [cx, cy] = e.footprint.center();
        let column = map.index_of([cx, cy, 0.0]).column();
        map.add_elevator(ElevatorInfo {
            id: e.id.clone(),
            column,
            k_min: k_of(&map, spec.floor_z(e.first_floor)),
            k_max: k_of(&map, spec.floor_z(e.last_floor)),
            initial_z: spec.floor_z(e.initial_floor),
        })?;
    }
    Ok(map)
}

/// Every voxel must be reachable from the ground floor.
fn check_connectivity(map: &VoxelMap) -> Result<()> {
    let Some(start) = map
        .sorted()
        .into_iter()
        .filter(|(_, c)| *c == VoxelClass::Corridor)
        .map(|(v, _)| v)
        .min_by_key(|v| (v.k, v.i, v.j))
    else {
        return Err(Error::Validation(vec!["building has no walkable voxels".into()]));
    };
    let cfg = PlanConfig::default();
    let cabs = vec![0.0; map.elevators.len()];
    let mut seen: HashSet<SearchState> = HashSet::from([SearchState::walking(start)]);
    let mut queue = VecDeque::from([SearchState::walking(start)]);
    while let Some(s) = queue.pop_front() {
        for (n, _) in successors(map, &s, Cost::default(), &cfg, &cabs) {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let reached: HashSet<VoxelIndex> = seen.into_iter().map(|s| s.voxel).collect();
    let mut missing: BTreeMap<i32, usize> = BTreeMap::new();
    for (v, _) in map.iter() {
        if !reached.contains(v) {
            *missing.entry(v.k).or_default() += 1;
        }
    }
    if missing.is_empty() {
        return Ok(());
    }
    Err(Error::Validation(
        missing
            .into_iter()
            .map(|(k, n)| format!("{n} voxels at layer {k} are not connected to the ground floor"))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::spec::{ElevatorSpec, StairSpec};

    fn base(floors: usize) -> BuildingSpec {
        BuildingSpec {
            floors,
            corridors: vec![(None, Rect::new(0.0, 0.0, 12.0, 1.8))],
            ..BuildingSpec::default()
        }
    }

    fn stairs() -> StairSpec {
        StairSpec {
            x: 3.0,
            y: 1.8,
            steps: 12,
            run: 0.3,
            width: 0.9,
            landing: 1.2,
        }
    }

    fn elevator(last: usize) -> ElevatorSpec {
        ElevatorSpec {
            id: "e0".into(),
            footprint: Rect::new(8.1, -1.8, 9.9, 0.0),
            first_floor: 0,
            last_floor: last,
            initial_floor: 0,
        }
    }

    #[test]
    fn single_corridor_is_all_corridor() {
        let b = generate_building(&base(1)).unwrap();
        assert_eq!(b.truth.len(), b.truth.count(VoxelClass::Corridor));
        assert_eq!(b.truth.len(), 40 * 6);
    }

    #[test]
    fn stair_voxels_form_a_monotone_diagonal() {
        let spec = BuildingSpec {
            stairs: Some(stairs()),
            ..base(2)
        };
        let b = generate_building(&spec).unwrap();
        let mut per_column: BTreeMap<i32, BTreeSet<i32>> = BTreeMap::new();
        for (v, c) in b.truth.iter() {
            if *c == VoxelClass::Stair {
                per_column.entry(v.i).or_default().insert(v.k);
            }
        }
        let ks: Vec<i32> = per_column.values().map(|s| *s.iter().next().unwrap()).collect();
        assert!(per_column.values().all(|s| s.len() == 1));
        assert_eq!(ks, (1..=12).collect::<Vec<_>>());
        let tops: Vec<f64> = b
            .surfaces
            .iter()
            .filter(|s| matches!(s.kind, SurfaceKind::Step { .. }))
            .map(|s| s.z)
            .collect();
        let span = tops.iter().cloned().fold(f64::MIN, f64::max);
        assert!((span - 3.64).abs() < 1e-9);
    }

    #[test]
    fn five_floor_elevator_column() {
        let spec = BuildingSpec {
            elevators: vec![elevator(4)],
            ..base(5)
        };
        let b = generate_building(&spec).unwrap();
        let expected = (4.0 * 3.64 / 0.3f64).ceil() as usize;
        assert_eq!(expected, 49);
        assert_eq!(b.truth.count(VoxelClass::Elevator), expected);
        let e = &b.truth.elevators[0];
        assert_eq!((e.k_min, e.k_max), (0, 48));
    }

    #[test]
    fn disconnected_floor_fails_validation() {
        let spec = base(2);
        assert!(matches!(generate_building(&spec), Err(Error::Validation(_))));
    }

    #[test]
    fn five_floor_stairs_connect() {
        let spec = BuildingSpec {
            stairs: Some(stairs()),
            ..base(5)
        };
        let b = generate_building(&spec).unwrap();
        assert!(b.truth.count(VoxelClass::Stair) > 0);
    }
}
