use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Cost, Mode, PlanConfig, SearchState};
use crate::error::{invalid, io_err, parse_err, Result};
use crate::voxel::{VoxelIndex, VoxelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveMode {
    Walk,
    Stair,
    /// Standing at the boarding voxel until the cab arrives.
    Wait,
    Elev,
}

impl MoveMode {
    pub fn name(&self) -> &'static str {
        match self {
            MoveMode::Walk => "WALK",
            MoveMode::Stair => "STAIR",
            MoveMode::Wait => "WAIT",
            MoveMode::Elev => "ELEV",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "WALK" => Some(MoveMode::Walk),
            "STAIR" => Some(MoveMode::Stair),
            "WAIT" => Some(MoveMode::Wait),
            "ELEV" => Some(MoveMode::Elev),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub voxel: VoxelIndex,
    pub position: [f64; 3],
    /// Cumulative time, seconds.
    pub time: f64,
    /// How this waypoint was reached.
    pub mode: MoveMode,
    pub leg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub total_time: f64,
    /// Inclusive waypoint index ranges, one per leg; consecutive legs share
    /// their junction waypoint.
    pub legs: Vec<(usize, usize)>,
    /// Elevators ridden, with the height where the robot left each cab.
    pub rides: Vec<(String, f64)>,
}

impl Trajectory {
    pub fn leg_waypoints(&self, leg: usize) -> &[Waypoint] {
        let (a, b) = self.legs[leg];
        &self.waypoints[a..=b]
    }

    pub fn leg_time(&self, leg: usize) -> f64 {
        let (a, b) = self.legs[leg];
        self.waypoints[b].time - self.waypoints[a].time
    }

    /// Whether any move of `leg` has the given mode.
    pub fn leg_uses(&self, leg: usize, mode: MoveMode) -> bool {
        self.leg_waypoints(leg)[1..].iter().any(|w| w.mode == mode)
    }

    pub fn uses(&self, mode: MoveMode) -> bool {
        (0..self.legs.len()).any(|l| self.leg_uses(l, mode))
    }

    /// Per-leg summary such as `leg 0: 12.3 s WALK,ELEV`.
    pub fn summary(&self) -> Vec<String> {
        (0..self.legs.len())
            .map(|l| {
                let mut modes: Vec<&str> = Vec::new();
                for w in &self.leg_waypoints(l)[1..] {
                    if !modes.contains(&w.mode.name()) {
                        modes.push(w.mode.name());
                    }
                }
                format!("leg {l}: {:.3} s {}", self.leg_time(l), modes.join(","))
            })
            .collect()
    }
}

pub(super) fn reconstruct(
    map: &VoxelMap,
    best: &HashMap<SearchState, (Cost, f64, Option<SearchState>)>,
    goal: SearchState,
    cfg: &PlanConfig,
) -> Trajectory {
    let mut chain = vec![goal];
    while let Some(prev) = best[chain.last().unwrap()].2 {
        chain.push(prev);
    }
    chain.reverse();

    let mut waypoints = vec![Waypoint {
        voxel: chain[0].voxel,
        position: map.center(chain[0].voxel),
        time: 0.0,
        mode: MoveMode::Walk,
        leg: 0,
    }];
    let mut rides = Vec::new();
    for pair in chain.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mode = match (a.mode, b.mode) {
            (Mode::Walking, Mode::Riding(_)) => MoveMode::Wait,
            (Mode::Riding(n), Mode::Walking) => {
                rides.push((map.elevators[n].id.clone(), map.center(b.voxel)[2]));
                continue;
            }
            (Mode::Riding(_), Mode::Riding(_)) => MoveMode::Elev,
            (Mode::Walking, Mode::Walking) if a.voxel.k != b.voxel.k => MoveMode::Stair,
            (Mode::Walking, Mode::Walking) => MoveMode::Walk,
        };
        waypoints.push(Waypoint {
            voxel: b.voxel,
            position: map.center(b.voxel),
            time: best[&b].1,
            mode,
            leg: 0,
        });
    }
    if let Mode::Riding(n) = goal.mode {
        rides.push((map.elevators[n].id.clone(), map.center(goal.voxel)[2]));
    }
    let total_time = best[&goal].0.seconds(map.resolution, cfg);
    let last = waypoints.len() - 1;
    Trajectory {
        waypoints,
        total_time,
        legs: vec![(0, last)],
        rides,
    }
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::from("t_s,x,y,z,mode,leg\n");
    for w in &traj.waypoints {
        let [x, y, z] = w.position;
        writeln!(out, "{},{x},{y},{z},{},{}", w.time, w.mode.name(), w.leg).unwrap();
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Rows of a trajectory file as `(t, position, mode, leg)`.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<(f64, [f64; 3], MoveMode, usize)>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t_s,x,y,z,mode,leg")) => {}
        _ => return Err(parse_err(&name, 1, "expected header t_s,x,y,z,mode,leg")),
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let err = |m: &str| parse_err(&name, n + 1, m);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
        let mode = MoveMode::from_name(f[4]).ok_or_else(|| err("bad mode"))?;
        let leg = f[5].parse().map_err(|_| err("bad leg"))?;
        rows.push((num(f[0])?, [num(f[1])?, num(f[2])?, num(f[3])?], mode, leg));
    }
    if rows.is_empty() {
        return Err(invalid(format!("{name}: empty trajectory")));
    }
    Ok(rows)
}
