//! Pose graph over SE(3) nodes with odometry, loop, elevation and prior
//! constraints, solved in batch with Levenberg–Marquardt.

mod factors;
mod io;
mod optimize;
mod pose;

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Matrix6, Vector3};

pub use factors::{
    between_jacobians, between_residual, elevation_residual, prior_jacobian, prior_residual,
};
pub use io::{graph_to_string, read_graph, write_graph};
pub use optimize::{optimize, OptimizeParams, OptimizeResult};
pub use pose::{right_jacobian_inv, skew, so3_exp, so3_log, Pose3};

use crate::error::{invalid, Result};
use crate::loopdet::{LoopCandidate, PlanarTransform};

/// Standard deviation applied to the z, roll and pitch of planar loop edges.
pub const LOOP_WEAK_SIGMA: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Odometry,
    Loop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetweenEdge {
    pub from: usize,
    pub to: usize,
    pub measurement: Pose3,
    pub information: Matrix6<f64>,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElevationConstraint {
    pub node: usize,
    /// Absolute target, the prior's z plus the measured altitude change.
    pub z_target: f64,
    pub sigma_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub node: usize,
    pub pose: Pose3,
    pub information: Matrix6<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoseGraph {
    pub nodes: BTreeMap<usize, Pose3>,
    pub edges: Vec<BetweenEdge>,
    pub elevations: Vec<ElevationConstraint>,
    pub prior: Option<Prior>,
}

/// Diagonal information from per-axis standard deviations.
pub fn diagonal_information(sigma_t: [f64; 3], sigma_r: [f64; 3]) -> Matrix6<f64> {
    let s = [sigma_t[0], sigma_t[1], sigma_t[2], sigma_r[0], sigma_r[1], sigma_r[2]];
    Matrix6::from_diagonal(&s.map(|v| 1.0 / (v * v)).into())
}

fn check_information(info: &Matrix6<f64>) -> Result<()> {
    if !info.iter().all(|v| v.is_finite()) {
        return Err(invalid("information matrix has non-finite entries"));
    }
    if (info - info.transpose()).abs().max() > 1e-9 * info.abs().max().max(1.0) {
        return Err(invalid("information matrix is not symmetric"));
    }
    if info.cholesky().is_none() {
        return Err(invalid("information matrix is not positive definite"));
    }
    Ok(())
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: usize, initial: Pose3) {
        self.nodes.insert(id, initial);
    }

    fn require_node(&self, id: usize) -> Result<()> {
        if self.nodes.contains_key(&id) {
            Ok(())
        } else {
            Err(invalid(format!("node {id} does not exist")))
        }
    }

    pub fn set_prior(&mut self, node: usize, pose: Pose3, information: Matrix6<f64>) -> Result<()> {
        self.require_node(node)?;
        check_information(&information)?;
        if self.prior.is_some() {
            return Err(invalid("graph already has a prior"));
        }
        self.prior = Some(Prior {
            node,
            pose,
            information,
        });
        Ok(())
    }

    pub fn add_odometry(
        &mut self,
        i: usize,
        j: usize,
        rel: Pose3,
        information: Matrix6<f64>,
    ) -> Result<()> {
        self.require_node(i)?;
        self.require_node(j)?;
        if j != i + 1 {
            return Err(invalid(format!("odometry must link consecutive nodes, got {i} -> {j}")));
        }
        check_information(&information)?;
        self.edges.push(BetweenEdge {
            from: i,
            to: j,
            measurement: rel,
            information,
            kind: EdgeKind::Odometry,
        });
        Ok(())
    }

    /// Pulls node `i` toward the prior's z plus `delta_z`.
    pub fn add_elevation_constraint(&mut self, i: usize, delta_z: f64, sigma_z: f64) -> Result<()> {
        self.require_node(i)?;
        if !(sigma_z > 0.0) || !delta_z.is_finite() {
            return Err(invalid(format!("elevation sigma must be positive, got {sigma_z}")));
        }
        let z0 = self
            .prior
            .as_ref()
            .ok_or_else(|| invalid("elevation constraints need the prior to be set first"))?
            .pose
            .z();
        self.elevations.push(ElevationConstraint {
            node: i,
            z_target: z0 + delta_z,
            sigma_z,
        });
        Ok(())
    }

    /// Adds a loop edge from the matched node to the query node.
    ///
    /// `info` covers (x, y, yaw); the remaining axes get weak information.
    pub fn add_loop(
        &mut self,
        candidate: &LoopCandidate,
        rel: &PlanarTransform,
        info: Matrix3<f64>,
    ) -> Result<()> {
        if candidate.query_floor != candidate.match_floor {
            return Err(invalid(format!(
                "loop {} -> {} crosses floor labels {} and {}",
                candidate.match_id, candidate.query_id, candidate.match_floor, candidate.query_floor
            )));
        }
        self.require_node(candidate.match_id)?;
        self.require_node(candidate.query_id)?;
        let weak = 1.0 / (LOOP_WEAK_SIGMA * LOOP_WEAK_SIGMA);
        let mut full = Matrix6::zeros();
        let map = [0usize, 1, 5];
        for (a, &ia) in map.iter().enumerate() {
            for (b, &ib) in map.iter().enumerate() {
                full[(ia, ib)] = info[(a, b)];
            }
        }
        for k in [2, 3, 4] {
            full[(k, k)] = weak;
        }
        check_information(&full)?;
        self.edges.push(BetweenEdge {
            from: candidate.match_id,
            to: candidate.query_id,
            measurement: Pose3::from_xyz_yaw(rel.dx, rel.dy, 0.0, rel.dyaw),
            information: full,
            kind: EdgeKind::Loop,
        });
        Ok(())
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Loop).count()
    }

    /// Sum of squared whitened residuals at `poses`.
    pub fn total_cost(&self, poses: &BTreeMap<usize, Pose3>) -> Result<f64> {
        let get = |id: usize| {
            poses
                .get(&id)
                .ok_or_else(|| invalid(format!("no pose for node {id}")))
        };
        for id in self.nodes.keys() {
            get(*id)?;
        }
        let mut cost = 0.0;
        if let Some(p) = &self.prior {
            let r = prior_residual(get(p.node)?, &p.pose);
            cost += (r.transpose() * p.information * r)[0];
        }
        for e in &self.edges {
            let r = between_residual(get(e.from)?, get(e.to)?, &e.measurement);
            cost += (r.transpose() * e.information * r)[0];
        }
        for c in &self.elevations {
            let (r, _) = elevation_residual(get(c.node)?, c.z_target, c.sigma_z);
            cost += r * r;
        }
        Ok(cost)
    }

    /// Translates every pose-valued quantity in the graph by `offset`.
    pub fn translated(&self, offset: Vector3<f64>) -> PoseGraph {
        let mut g = self.clone();
        for p in g.nodes.values_mut() {
            p.translation += offset;
        }
        if let Some(p) = &mut g.prior {
            p.pose.translation += offset;
        }
        for c in &mut g.elevations {
            c.z_target += offset.z;
        }
        g
    }
}
