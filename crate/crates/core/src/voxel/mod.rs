//! Traversability voxel set: corridor bottoms, stair voxels and elevator
//! stacks extracted from the optimised world-frame map cloud.

mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use io::{map_from_string, map_to_string, read_voxel_map, write_voxel_map};

use crate::error::{invalid, Result};
use crate::scan::ScanPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelIndex {
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    pub fn offset(&self, di: i32, dj: i32, dk: i32) -> Self {
        Self::new(self.i + di, self.j + dj, self.k + dk)
    }

    pub fn column(&self) -> (i32, i32) {
        (self.i, self.j)
    }

    pub fn chebyshev(&self, other: &VoxelIndex) -> i32 {
        (self.i - other.i)
            .abs()
            .max((self.j - other.j).abs())
            .max((self.k - other.k).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VoxelClass {
    Corridor,
    Stair,
    Elevator,
}

impl VoxelClass {
    pub fn code(&self) -> char {
        match self {
            VoxelClass::Corridor => 'C',
            VoxelClass::Stair => 'S',
            VoxelClass::Elevator => 'E',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "C" => Some(VoxelClass::Corridor),
            "S" => Some(VoxelClass::Stair),
            "E" => Some(VoxelClass::Elevator),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorInfo {
    pub id: String,
    pub column: (i32, i32),
    pub k_min: i32,
    pub k_max: i32,
    /// Height of the cab at planning time, meters.
    pub initial_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMap {
    pub resolution: f64,
    pub origin: [f64; 3],
    occupied: HashMap<VoxelIndex, VoxelClass>,
    pub elevators: Vec<ElevatorInfo>,
}

impl VoxelMap {
    pub fn new(resolution: f64, origin: [f64; 3]) -> Self {
        assert!(resolution > 0.0, "voxel resolution must be positive");
        Self {
            resolution,
            origin,
            occupied: HashMap::new(),
            elevators: Vec::new(),
        }
    }

    pub fn index_of(&self, p: [f64; 3]) -> VoxelIndex {
        let f = |a: usize| ((p[a] - self.origin[a]) / self.resolution).floor() as i32;
        VoxelIndex::new(f(0), f(1), f(2))
    }

    pub fn center(&self, idx: VoxelIndex) -> [f64; 3] {
        let r = self.resolution;
        [
            self.origin[0] + (idx.i as f64 + 0.5) * r,
            self.origin[1] + (idx.j as f64 + 0.5) * r,
            self.origin[2] + (idx.k as f64 + 0.5) * r,
        ]
    }

    /// Inserts or reclassifies a voxel.
    pub fn insert(&mut self, idx: VoxelIndex, class: VoxelClass) {
        self.occupied.insert(idx, class);
    }

    pub fn remove(&mut self, idx: &VoxelIndex) -> Option<VoxelClass> {
        self.occupied.remove(idx)
    }

    pub fn contains(&self, idx: &VoxelIndex) -> bool {
        self.occupied.contains_key(idx)
    }

    pub fn class_of(&self, idx: &VoxelIndex) -> Option<VoxelClass> {
        self.occupied.get(idx).copied()
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelIndex, &VoxelClass)> {
        self.occupied.iter()
    }

    /// Voxels in ascending index order.
    pub fn sorted(&self) -> Vec<(VoxelIndex, VoxelClass)> {
        let mut v: Vec<_> = self.occupied.iter().map(|(i, c)| (*i, *c)).collect();
        v.sort_unstable();
        v
    }

    pub fn count(&self, class: VoxelClass) -> usize {
        self.occupied.values().filter(|c| **c == class).count()
    }

    pub fn elevator(&self, id: &str) -> Option<&ElevatorInfo> {
        self.elevators.iter().find(|e| e.id == id)
    }

    pub fn elevator_at(&self, column: (i32, i32)) -> Option<&ElevatorInfo> {
        self.elevators.iter().find(|e| e.column == column)
    }

    /// Registers an elevator and fills its column with ELEVATOR voxels.
    pub fn add_elevator(&mut self, info: ElevatorInfo) -> Result<()> {
        if info.k_min >= info.k_max {
            return Err(invalid(format!("elevator {} needs k_min < k_max", info.id)));
        }
        if info.id.is_empty() || info.id.contains(char::is_whitespace) {
            return Err(invalid("elevator ids must be non-empty without whitespace"));
        }
        if self.elevator(&info.id).is_some() || self.elevator_at(info.column).is_some() {
            return Err(invalid(format!("duplicate elevator {}", info.id)));
        }
        let (i, j) = info.column;
        for k in info.k_min..=info.k_max {
            self.insert(VoxelIndex::new(i, j, k), VoxelClass::Elevator);
        }
        self.elevators.push(info);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) {
            return Err(invalid("resolution must be positive"));
        }
        for e in &self.elevators {
            if e.k_min >= e.k_max {
                return Err(invalid(format!("elevator {} needs k_min < k_max", e.id)));
            }
            let (i, j) = e.column;
            for k in e.k_min..=e.k_max {
                if self.class_of(&VoxelIndex::new(i, j, k)) != Some(VoxelClass::Elevator) {
                    return Err(invalid(format!("elevator {} column is incomplete at k={k}", e.id)));
                }
            }
        }
        for (idx, c) in &self.occupied {
            if *c == VoxelClass::Elevator && self.elevator_at(idx.column()).is_none() {
                return Err(invalid(format!("elevator voxel {idx:?} has no elevator")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelizeConfig {
    pub max_ground_channel: u8,
    /// Voxels kept per column among non-ground points.
    pub n_z: usize,
    pub resolution: f64,
    /// Corner of voxel (0, 0, 0). Slightly below the first floor so that
    /// floor returns with small negative noise stay in layer 0.
    pub origin: [f64; 3],
}

impl Default for VoxelizeConfig {
    fn default() -> Self {
        Self {
            max_ground_channel: 4,
            n_z: 5,
            resolution: 0.3,
            origin: [0.0, 0.0, -0.1],
        }
    }
}

impl VoxelizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_ground_channel > 15 || self.n_z == 0 || !(self.resolution > 0.0) {
            return Err(invalid(
                "voxelisation needs max_ground_channel <= 15, n_z >= 1 and a positive resolution",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceClass {
    Ground,
    ElevatorSynth,
    Other,
}

impl SourceClass {
    pub fn name(&self) -> &'static str {
        match self {
            SourceClass::Ground => "ground",
            SourceClass::ElevatorSynth => "elevator",
            SourceClass::Other => "other",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "ground" => Some(SourceClass::Ground),
            "elevator" => Some(SourceClass::ElevatorSynth),
            "other" => Some(SourceClass::Other),
            _ => None,
        }
    }
}

/// Points on channels up to `max_ground_channel`.
pub fn extract_ground(points: &[ScanPoint], max_ground_channel: u8) -> Vec<ScanPoint> {
    points
        .iter()
        .filter(|p| p.channel <= max_ground_channel)
        .copied()
        .collect()
}

/// Connected groups of columns under 8-neighbourhood.
fn column_components(columns: &BTreeSet<(i32, i32)>) -> Vec<Vec<(i32, i32)>> {
    let mut seen: BTreeSet<(i32, i32)> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in columns {
        if !seen.insert(start) {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some((i, j)) = stack.pop() {
            comp.push((i, j));
            for di in -1..=1 {
                for dj in -1..=1 {
                    let n = (i + di, j + dj);
                    if columns.contains(&n) && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Builds the traversable voxel set from classified world-frame points.
///
/// * ground points: in each column, the lowest voxel of every vertically
///   contiguous run becomes CORRIDOR;
/// * elevator points: each connected cluster collapses to one ELEVATOR
///   column at its centroid, spanning the cluster's vertical extent;
/// * other points: in each column the `n_z` voxels holding the most points
///   become STAIR unless already occupied.
pub fn voxelize(map_points: &[([f64; 3], SourceClass)], cfg: &VoxelizeConfig) -> Result<VoxelMap> {
    cfg.validate()?;
    if map_points.is_empty() {
        return Err(invalid("nothing to voxelize"));
    }
    let mut map = VoxelMap::new(cfg.resolution, cfg.origin);

    let mut ground: BTreeMap<(i32, i32), BTreeSet<i32>> = BTreeMap::new();
    let mut other: BTreeMap<(i32, i32), BTreeMap<i32, usize>> = BTreeMap::new();
    let mut lift_cols: BTreeMap<(i32, i32), Vec<[f64; 3]>> = BTreeMap::new();
    for (p, class) in map_points {
        let idx = map.index_of(*p);
        match class {
            SourceClass::Ground => {
                ground.entry(idx.column()).or_default().insert(idx.k);
            }
            SourceClass::Other => {
                *other.entry(idx.column()).or_default().entry(idx.k).or_default() += 1;
            }
            SourceClass::ElevatorSynth => lift_cols.entry(idx.column()).or_default().push(*p),
        }
    }

    for ((i, j), ks) in &ground {
        let mut prev: Option<i32> = None;
        for &k in ks {
            if prev != Some(k - 1) {
                map.insert(VoxelIndex::new(*i, *j, k), VoxelClass::Corridor);
            }
            prev = Some(k);
        }
    }

    let columns: BTreeSet<(i32, i32)> = lift_cols.keys().copied().collect();
    let mut stacks = Vec::new();
    for comp in column_components(&columns) {
        let pts: Vec<[f64; 3]> = comp.iter().flat_map(|c| lift_cols[c].iter().copied()).collect();
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        let col = map.index_of([cx, cy, 0.0]).column();
        let ks = pts.iter().map(|p| map.index_of(*p).k);
        let (k_min, k_max) = ks.fold((i32::MAX, i32::MIN), |(a, b), k| (a.min(k), b.max(k)));
        stacks.push((col, k_min, k_max));
    }
    stacks.sort_unstable();
    for (n, (col, k_min, k_max)) in stacks.into_iter().enumerate() {
        if k_min == k_max {
            continue;
        }
        let initial_z = map.center(VoxelIndex::new(col.0, col.1, k_min))[2];
        map.add_elevator(ElevatorInfo {
            id: format!("e{n}"),
            column: col,
            k_min,
            k_max,
            initial_z,
        })?;
    }

    for ((i, j), counts) in &other {
        let mut ranked: Vec<(i32, usize)> = counts.iter().map(|(k, c)| (*k, *c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (k, _) in ranked.into_iter().take(cfg.n_z) {
            let idx = VoxelIndex::new(*i, *j, k);
            if !map.contains(&idx) {
                map.insert(idx, VoxelClass::Stair);
            }
        }
    }
    Ok(map)
}

/// Voxel centres as classified points, the inverse view used to check that
/// voxelisation is idempotent.
pub fn map_as_points(map: &VoxelMap) -> Vec<([f64; 3], SourceClass)> {
    map.sorted()
        .into_iter()
        .map(|(idx, c)| {
            let class = match c {
                VoxelClass::Corridor => SourceClass::Ground,
                VoxelClass::Stair => SourceClass::Other,
                VoxelClass::Elevator => SourceClass::ElevatorSynth,
            };
            (map.center(idx), class)
        })
        .collect()
}
