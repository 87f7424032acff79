//! Elevator-aware A* over the traversable voxel set.
//!
//! Walking costs distance over robot speed. Riding an elevator costs the
//! cab's travel to the boarding floor once, then height over cab speed.
//! The search state carries a riding flag so the waiting time is paid in
//! `g` exactly once and dropped from `h` afterwards.

mod multi;
mod trajectory;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::f64::consts::SQRT_2;

pub use multi::{order_destinations, plan_multi, MAX_DESTINATIONS};
pub use trajectory::{read_trajectory_csv, write_trajectory_csv, MoveMode, Trajectory, Waypoint};

use crate::error::{invalid, Error, Result};
use crate::voxel::{VoxelClass, VoxelIndex, VoxelMap};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    /// Robot walking speed, m/s.
    pub v_rbt: f64,
    /// Cab speed, m/s.
    pub v_elv: f64,
    /// Current cab heights by elevator id; overrides the map's metadata.
    pub elevator_z: BTreeMap<String, f64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            v_rbt: 1.0,
            v_elv: 1.0,
            elevator_z: BTreeMap::new(),
        }
    }
}

impl PlanConfig {
    pub fn validate(&self, map: &VoxelMap) -> Result<()> {
        if !(self.v_rbt > 0.0 && self.v_rbt.is_finite()) || !(self.v_elv > 0.0 && self.v_elv.is_finite()) {
            return Err(invalid("speeds must be positive"));
        }
        for (id, z) in &self.elevator_z {
            if map.elevator(id).is_none() {
                return Err(invalid(format!("unknown elevator `{id}`")));
            }
            if !z.is_finite() {
                return Err(invalid(format!("elevator `{id}` height is not finite")));
            }
        }
        Ok(())
    }

    /// Cab heights indexed like `map.elevators`.
    pub(crate) fn cab_heights(&self, map: &VoxelMap) -> Vec<f64> {
        map.elevators
            .iter()
            .map(|e| self.elevator_z.get(&e.id).copied().unwrap_or(e.initial_z))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Walking,
    /// Inside the cab of `map.elevators[n]`.
    Riding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SearchState {
    pub voxel: VoxelIndex,
    pub mode: Mode,
}

impl SearchState {
    pub fn walking(voxel: VoxelIndex) -> Self {
        Self {
            voxel,
            mode: Mode::Walking,
        }
    }
}

/// Accumulated cost kept as move counts so that equal routes sum to equal
/// times regardless of expansion order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cost {
    /// Moves of length 1, √2 and √3 voxel edges on foot.
    pub axis: u32,
    pub face: u32,
    pub cube: u32,
    /// One-voxel cab moves.
    pub lift: u32,
    /// Waiting for cabs, seconds.
    pub wait: f64,
}

impl Cost {
    pub fn seconds(&self, resolution: f64, cfg: &PlanConfig) -> f64 {
        let walk = (self.axis as f64 + self.face as f64 * SQRT_2 + self.cube as f64 * SQRT_3) * resolution / cfg.v_rbt;
        walk + self.lift as f64 * resolution / cfg.v_elv + self.wait
    }

    /// Adds a foot move with `n` nonzero index offsets.
    pub fn step(mut self, n: usize) -> Self {
        match n {
            1 => self.axis += 1,
            2 => self.face += 1,
            3 => self.cube += 1,
            _ => unreachable!("foot moves change 1 to 3 indices"),
        }
        self
    }
}

/// Whether the robot may move from `from` to the neighbouring `to`.
pub fn accessible(map: &VoxelMap, from: VoxelIndex, to: VoxelIndex) -> Result<bool> {
    let Some(from_class) = map.class_of(&from) else {
        return Err(invalid(format!("{from:?} is not traversable")));
    };
    let Some(to_class) = map.class_of(&to) else {
        return Ok(false);
    };
    if from.chebyshev(&to) != 1 {
        return Ok(false);
    }
    let (di, dj, dk) = (to.i - from.i, to.j - from.j, to.k - from.k);
    if di == 0 && dj == 0 {
        return Ok(from_class == VoxelClass::Elevator
            && to_class == VoxelClass::Elevator
            && map.elevator_at(from.column()).is_some());
    }
    if dk != 0 && from_class != VoxelClass::Stair && to_class != VoxelClass::Stair {
        return Ok(false);
    }
    if di != 0 && dj != 0 {
        // each orthogonal intermediate column must be walkable at either level
        for (ci, cj) in [(from.i + di, from.j), (from.i, from.j + dj)] {
            let open = map.contains(&VoxelIndex::new(ci, cj, from.k)) || map.contains(&VoxelIndex::new(ci, cj, to.k));
            if !open {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn distance(map: &VoxelMap, a: VoxelIndex, b: VoxelIndex) -> f64 {
    let (p, q) = (map.center(a), map.center(b));
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn boarding_wait(map: &VoxelMap, at: VoxelIndex, cab_z: f64, cfg: &PlanConfig) -> f64 {
    (cab_z - map.center(at)[2]).abs() / cfg.v_elv
}

/// Estimated remaining time from `state` to `goal`.
pub fn heuristic(state: &SearchState, goal: VoxelIndex, map: &VoxelMap, cfg: &PlanConfig) -> f64 {
    heuristic_with(state, goal, map, cfg, &cfg.cab_heights(map))
}

fn heuristic_with(state: &SearchState, goal: VoxelIndex, map: &VoxelMap, cfg: &PlanConfig, cabs: &[f64]) -> f64 {
    let here = state.voxel;
    if map.class_of(&here) == Some(VoxelClass::Elevator) {
        if let Some(n) = map.elevators.iter().position(|e| e.column == here.column()) {
            let operate = (map.center(goal)[2] - map.center(here)[2]).abs() / cfg.v_elv;
            return match state.mode {
                Mode::Riding(_) => operate,
                // a robot that just stepped out of the cab never waits for it
                Mode::Walking => {
                    (boarding_wait(map, here, cabs[n], cfg) + operate).min(distance(map, here, goal) / cfg.v_rbt)
                }
            };
        }
    }
    distance(map, here, goal) / cfg.v_rbt
}

/// Successor states with their costs from `cost`.
pub(crate) fn successors(
    map: &VoxelMap,
    state: &SearchState,
    cost: Cost,
    cfg: &PlanConfig,
    cabs: &[f64],
) -> Vec<(SearchState, Cost)> {
    let v = state.voxel;
    let mut out = Vec::new();
    match state.mode {
        Mode::Riding(_) => {
            for dk in [-1, 1] {
                let to = v.offset(0, 0, dk);
                if map.class_of(&to) == Some(VoxelClass::Elevator) {
                    let mut c = cost;
                    c.lift += 1;
                    out.push((SearchState { voxel: to, mode: state.mode }, c));
                }
            }
            out.push((SearchState::walking(v), cost));
        }
        Mode::Walking => {
            for di in -1..=1 {
                for dj in -1..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    for dk in -1..=1 {
                        let to = v.offset(di, dj, dk);
                        if accessible(map, v, to).unwrap_or(false) {
                            let n = [di, dj, dk].iter().filter(|d| **d != 0).count();
                            out.push((SearchState::walking(to), cost.step(n)));
                        }
                    }
                }
            }
            if map.class_of(&v) == Some(VoxelClass::Elevator) {
                if let Some(n) = map.elevators.iter().position(|e| e.column == v.column()) {
                    let mut c = cost;
                    c.wait += boarding_wait(map, v, cabs[n], cfg);
                    out.push((
                        SearchState {
                            voxel: v,
                            mode: Mode::Riding(n),
                        },
                        c,
                    ));
                }
            }
        }
    }
    out
}

struct Open {
    f: f64,
    h: f64,
    state: SearchState,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    /// Reversed so that the max-heap pops the smallest (f, h, state).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.state.cmp(&self.state))
    }
}

fn check_start_goal(map: &VoxelMap, start: VoxelIndex, goal: VoxelIndex) -> Result<()> {
    for (what, v) in [("start", start), ("goal", goal)] {
        if !map.contains(&v) {
            return Err(invalid(format!("{what} {v:?} is not traversable")));
        }
    }
    Ok(())
}

fn reachable_count(map: &VoxelMap, from: VoxelIndex, cfg: &PlanConfig, cabs: &[f64]) -> usize {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([SearchState::walking(from)]);
    seen.insert(queue[0]);
    while let Some(s) = queue.pop_front() {
        for (n, _) in successors(map, &s, Cost::default(), cfg, cabs) {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.iter().map(|s| s.voxel).collect::<HashSet<_>>().len()
}

/// Time-optimal route between two traversable voxels.
pub fn astar(map: &VoxelMap, start: VoxelIndex, goal: VoxelIndex, cfg: &PlanConfig) -> Result<Trajectory> {
    cfg.validate(map)?;
    search(map, start, goal, cfg, &cfg.cab_heights(map))
}

pub(crate) fn search(
    map: &VoxelMap,
    start: VoxelIndex,
    goal: VoxelIndex,
    cfg: &PlanConfig,
    cabs: &[f64],
) -> Result<Trajectory> {
    check_start_goal(map, start, goal)?;
    let res = map.resolution;
    let first = SearchState::walking(start);
    let mut best: HashMap<SearchState, (Cost, f64, Option<SearchState>)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(first, (Cost::default(), 0.0, None));
    let h0 = heuristic_with(&first, goal, map, cfg, cabs);
    heap.push(Open {
        f: h0,
        h: h0,
        state: first,
    });

    while let Some(Open { f, h, state }) = heap.pop() {
        let (cost, g, _) = best[&state];
        if g + h != f {
            continue;
        }
        if state.voxel == goal {
            return Ok(trajectory::reconstruct(map, &best, state, cfg));
        }
        for (next, c) in successors(map, &state, cost, cfg, cabs) {
            let gn = c.seconds(res, cfg);
            if best.get(&next).is_some_and(|(_, g_old, _)| *g_old <= gn) {
                continue;
            }
            best.insert(next, (c, gn, Some(state)));
            let hn = heuristic_with(&next, goal, map, cfg, cabs);
            heap.push(Open {
                f: gn + hn,
                h: hn,
                state: next,
            });
        }
    }
    Err(Error::Unreachable(format!(
        "no route from {start:?} to {goal:?}; start component has {} voxels, goal component has {}",
        reachable_count(map, start, cfg, cabs),
        reachable_count(map, goal, cfg, cabs),
    )))
}

/// Nearest traversable voxel whose centre lies within `radius` of `p`.
pub fn snap_to_map(map: &VoxelMap, p: [f64; 3], radius: f64) -> Option<(VoxelIndex, f64)> {
    let c = map.index_of(p);
    let reach = (radius / map.resolution).ceil() as i32 + 1;
    let mut best: Option<(VoxelIndex, f64)> = None;
    for di in -reach..=reach {
        for dj in -reach..=reach {
            for dk in -reach..=reach {
                let v = c.offset(di, dj, dk);
                if !map.contains(&v) {
                    continue;
                }
                let q = map.center(v);
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                let better = match best {
                    None => true,
                    Some((bv, bd)) => d < bd || (d == bd && v < bv),
                };
                if d <= radius && better {
                    best = Some((v, d));
                }
            }
        }
    }
    best
}
