use std::collections::HashMap;

use super::{search, PlanConfig, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::voxel::{VoxelIndex, VoxelMap};

/// Largest destination set `order_destinations` will enumerate.
pub const MAX_DESTINATIONS: usize = 8;

fn apply_rides(map: &VoxelMap, cabs: &mut [f64], traj: &Trajectory) {
    for (id, z) in &traj.rides {
        if let Some(n) = map.elevators.iter().position(|e| &e.id == id) {
            cabs[n] = *z;
        }
    }
}

fn leg_error(leg: usize, from: VoxelIndex, to: VoxelIndex, e: Error) -> Error {
    match e {
        Error::Unreachable(msg) => Error::Unreachable(format!("leg {leg} ({from:?} -> {to:?}): {msg}")),
        other => other,
    }
}

/// Chains optimal legs through `waypoints` in order, optionally returning
/// to the first one. Cabs stay where the robot left them between legs.
pub fn plan_multi(map: &VoxelMap, waypoints: &[VoxelIndex], return_to_start: bool, cfg: &PlanConfig) -> Result<Trajectory> {
    cfg.validate(map)?;
    if waypoints.len() < 2 {
        return Err(invalid("a plan needs at least two waypoints"));
    }
    let mut stops = waypoints.to_vec();
    if return_to_start {
        stops.push(waypoints[0]);
    }
    let mut cabs = cfg.cab_heights(map);
    let mut out = Trajectory {
        waypoints: Vec::new(),
        total_time: 0.0,
        legs: Vec::new(),
        rides: Vec::new(),
    };
    for (leg, pair) in stops.windows(2).enumerate() {
        let part = search(map, pair[0], pair[1], cfg, &cabs).map_err(|e| leg_error(leg, pair[0], pair[1], e))?;
        apply_rides(map, &mut cabs, &part);
        let offset = out.total_time;
        let skip = usize::from(!out.waypoints.is_empty());
        let start = out.waypoints.len().saturating_sub(1);
        for mut w in part.waypoints.into_iter().skip(skip) {
            w.time += offset;
            w.leg = leg;
            out.waypoints.push(w);
        }
        out.legs.push((start, out.waypoints.len() - 1));
        out.total_time += part.total_time;
        out.rides.extend(part.rides);
    }
    Ok(out)
}

struct OrderSearch<'a> {
    map: &'a VoxelMap,
    cfg: &'a PlanConfig,
    dests: Vec<VoxelIndex>,
    start: VoxelIndex,
    return_to_start: bool,
    cache: HashMap<(VoxelIndex, VoxelIndex, Vec<u64>), (f64, Vec<f64>)>,
    best: Option<(f64, Vec<usize>)>,
}

impl OrderSearch<'_> {
    fn leg(&mut self, from: VoxelIndex, to: VoxelIndex, cabs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let key = (from, to, cabs.iter().map(|z| z.to_bits()).collect());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let traj = search(self.map, from, to, self.cfg, cabs)?;
        let mut after = cabs.to_vec();
        apply_rides(self.map, &mut after, &traj);
        let value = (traj.total_time, after);
        self.cache.insert(key, value.clone());
        Ok(value)
    }

    fn extend(&mut self, at: VoxelIndex, cabs: Vec<f64>, elapsed: f64, order: &mut Vec<usize>, used: &mut [bool]) -> Result<()> {
        if self.best.as_ref().is_some_and(|(b, _)| elapsed >= *b) {
            return Ok(());
        }
        if order.len() == self.dests.len() {
            let total = if self.return_to_start {
                elapsed + self.leg(at, self.start, &cabs)?.0
            } else {
                elapsed
            };
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, order.clone()));
            }
            return Ok(());
        }
        for n in 0..self.dests.len() {
            if used[n] {
                continue;
            }
            let to = self.dests[n];
            let (t, after) = self.leg(at, to, &cabs)?;
            used[n] = true;
            order.push(n);
            self.extend(to, after, elapsed + t, order, used)?;
            order.pop();
            used[n] = false;
        }
        Ok(())
    }
}

/// Visiting order of `destinations` from `start` with the least total time,
/// found by exhaustive search. Among equal totals the lexicographically
/// first permutation of the input order wins.
pub fn order_destinations(
    map: &VoxelMap,
    start: VoxelIndex,
    destinations: &[VoxelIndex],
    return_to_start: bool,
    cfg: &PlanConfig,
) -> Result<Vec<VoxelIndex>> {
    cfg.validate(map)?;
    if destinations.len() > MAX_DESTINATIONS {
        return Err(Error::SizeLimit(format!(
            "{} destinations exceed the exhaustive limit of {MAX_DESTINATIONS}",
            destinations.len()
        )));
    }
    if destinations.is_empty() {
        return Ok(Vec::new());
    }
    let mut s = OrderSearch {
        map,
        cfg,
        dests: destinations.to_vec(),
        start,
        return_to_start,
        cache: HashMap::new(),
        best: None,
    };
    let cabs = cfg.cab_heights(map);
    s.extend(start, cabs, 0.0, &mut Vec::new(), &mut vec![false; destinations.len()])?;
    let (_, order) = s.best.expect("at least one permutation is evaluated");
    Ok(order.into_iter().map(|n| destinations[n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::astar;
    use crate::voxel::VoxelClass;

    fn line(n: i32) -> VoxelMap {
        let mut m = VoxelMap::new(0.3, [0.0; 3]);
        for i in 0..n {
            m.insert(VoxelIndex::new(i, 0, 0), VoxelClass::Corridor);
        }
        m
    }

    #[test]
    fn two_waypoints_match_astar() {
        let m = line(12);
        let cfg = PlanConfig::default();
        let (a, b) = (VoxelIndex::new(0, 0, 0), VoxelIndex::new(11, 0, 0));
        assert_eq!(plan_multi(&m, &[a, b], false, &cfg).unwrap(), astar(&m, a, b, &cfg).unwrap());
    }

    #[test]
    fn chain_time_is_sum_of_legs() {
        let m = line(12);
        let cfg = PlanConfig::default();
        let w = [VoxelIndex::new(0, 0, 0), VoxelIndex::new(11, 0, 0), VoxelIndex::new(4, 0, 0)];
        let t = plan_multi(&m, &w, true, &cfg).unwrap();
        assert_eq!(t.legs.len(), 3);
        let sum: f64 = (0..3).map(|l| t.leg_time(l)).sum();
        assert!((sum - t.total_time).abs() < 1e-12);
        assert_eq!(t.waypoints.last().unwrap().voxel, w[0]);
        assert!(t.waypoints.windows(2).all(|p| p[0].time <= p[1].time));
    }

    #[test]
    fn near_to_far_on_a_line() {
        let m = line(20);
        let cfg = PlanConfig::default();
        let (far, near) = (VoxelIndex::new(19, 0, 0), VoxelIndex::new(5, 0, 0));
        let order = order_destinations(&m, VoxelIndex::new(0, 0, 0), &[far, near], false, &cfg).unwrap();
        assert_eq!(order, vec![near, far]);
        let one = order_destinations(&m, VoxelIndex::new(0, 0, 0), &[far], false, &cfg).unwrap();
        assert_eq!(one, vec![far]);
    }

    #[test]
    fn too_many_destinations() {
        let m = line(20);
        let d: Vec<_> = (1..10).map(|i| VoxelIndex::new(i, 0, 0)).collect();
        let r = order_destinations(&m, VoxelIndex::new(0, 0, 0), &d, false, &PlanConfig::default());
        assert!(matches!(r, Err(Error::SizeLimit(_))));
    }
}
