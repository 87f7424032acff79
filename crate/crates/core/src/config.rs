//! Run configuration shared by the command-line tools.
//!
//! Files are line oriented, `section.key = value`, with `#` comments.
//! Keys not listed in [`KEYS`] are rejected.

use std::path::Path;

use crate::error::{io_err, parse_err, Result};
use crate::mapping::MappingConfig;
use crate::plan::PlanConfig;
use crate::voxel::VoxelizeConfig;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("generate.seed", "random seed for synthetic sessions"),
    ("map.odom_sigma_xy", "odometry translation sigma in x and y, m"),
    ("map.odom_sigma_z", "odometry translation sigma in z, m"),
    ("map.odom_sigma_rot", "odometry rotation sigma, rad"),
    ("map.cab_sigma_z", "z sigma of odometry between two in-cab poses, m"),
    ("map.prior_sigma", "sigma of the start-pose prior"),
    ("map.elevation_sigma_z", "sigma of barometric elevation constraints, m"),
    ("map.loop_sigma_xy", "loop edge translation sigma, m"),
    ("map.loop_sigma_yaw", "loop edge yaw sigma, rad"),
    ("map.use_floor_labels", "partition loop search by floor label"),
    ("map.use_elevation_constraints", "add barometric elevation constraints"),
    ("map.max_ground_channel", "highest channel written as ground in the cloud"),
    ("map.cloud_leaf", "leaf size for thinning the output cloud, 0 keeps all"),
    ("map.max_iterations", "Levenberg-Marquardt iteration cap"),
    ("map.range_sq_threshold", "mean squared range below which a scan is in a cab, m²"),
    ("map.max_ride_travel", "largest planar extent of a cab ride, m"),
    ("map.loop_gate_xy", "planar disagreement with dead reckoning allowed for a loop, m"),
    ("map.loop_gate_xy_per_node", "extra allowed disagreement per node of separation, m"),
    ("map.loop_gate_yaw", "yaw disagreement allowed for a loop, rad"),
    ("map.shell_spacing", "point spacing of the synthesized cab shell, m"),
    ("loop.n_rings", "descriptor rings"),
    ("loop.n_sectors", "descriptor sectors"),
    ("loop.l_max", "descriptor radius, m"),
    ("loop.top_k", "ring-key neighbours re-ranked per query"),
    ("loop.accept_threshold", "descriptor distance acceptance threshold"),
    ("loop.exclusion_gap", "minimum node id gap for a loop candidate"),
    ("loop.icp_max_iterations", "scan alignment iteration cap"),
    ("loop.icp_max_residual", "scan alignment RMS rejection limit, m"),
    ("voxel.max_ground_channel", "highest channel treated as ground"),
    ("voxel.n_z", "voxels kept per column for stair points"),
    ("voxel.resolution", "voxel edge length, m"),
    ("plan.v_rbt", "robot speed, m/s"),
    ("plan.v_elv", "cab speed, m/s"),
    ("plan.snap_radius", "maximum waypoint snapping distance, m"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub mapping: MappingConfig,
    pub voxelize: VoxelizeConfig,
    pub plan: PlanConfig,
    pub snap_radius: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mapping: MappingConfig::default(),
            voxelize: VoxelizeConfig::default(),
            plan: PlanConfig::default(),
            snap_radius: 1.0,
        }
    }
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

impl RunConfig {
    /// Sets one key; the error is a message without location.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let m = &mut self.mapping;
        match key {
            "generate.seed" => self.seed = num(v)?,
            "map.odom_sigma_xy" => m.odom_sigma_xy = num(v)?,
            "map.odom_sigma_z" => m.odom_sigma_z = num(v)?,
            "map.odom_sigma_rot" => m.odom_sigma_rot = num(v)?,
            "map.cab_sigma_z" => m.cab_sigma_z = num(v)?,
            "map.prior_sigma" => m.prior_sigma = num(v)?,
            "map.elevation_sigma_z" => m.elevation_sigma_z = num(v)?,
            "map.loop_sigma_xy" => m.loop_sigma_xy = num(v)?,
            "map.loop_sigma_yaw" => m.loop_sigma_yaw = num(v)?,
            "map.use_floor_labels" => m.use_floor_labels = flag(v)?,
            "map.use_elevation_constraints" => m.use_elevation_constraints = flag(v)?,
            "map.max_ground_channel" => m.max_ground_channel = num(v)?,
            "map.cloud_leaf" => m.cloud_leaf = num(v)?,
            "map.max_iterations" => m.optimize.max_iterations = num(v)?,
            "map.range_sq_threshold" => m.detect.range_sq_threshold = num(v)?,
            "map.max_ride_travel" => m.max_ride_travel = num(v)?,
            "map.loop_gate_xy" => m.loop_gate_xy = num(v)?,
            "map.loop_gate_xy_per_node" => m.loop_gate_xy_per_node = num(v)?,
            "map.loop_gate_yaw" => m.loop_gate_yaw = num(v)?,
            "map.shell_spacing" => m.detect.shell_spacing = num(v)?,
            "loop.n_rings" => m.loops.n_rings = num(v)?,
            "loop.n_sectors" => m.loops.n_sectors = num(v)?,
            "loop.l_max" => m.loops.l_max = num(v)?,
            "loop.top_k" => m.loops.top_k = num(v)?,
            "loop.accept_threshold" => m.loops.accept_threshold = num(v)?,
            "loop.exclusion_gap" => m.loops.exclusion_gap = num(v)?,
            "loop.icp_max_iterations" => m.loops.icp_max_iterations = num(v)?,
            "loop.icp_max_residual" => m.loops.icp_max_residual = num(v)?,
            "voxel.max_ground_channel" => self.voxelize.max_ground_channel = num(v)?,
            "voxel.n_z" => self.voxelize.n_z = num(v)?,
            "voxel.resolution" => self.voxelize.resolution = num(v)?,
            "plan.v_rbt" => self.plan.v_rbt = num(v)?,
            "plan.v_elv" => self.plan.v_elv = num(v)?,
            "plan.snap_radius" => self.snap_radius = num(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn apply_str(&mut self, text: &str, name: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(name, n + 1, "expected `section.key = value`"))?;
            self.set(k.trim(), v.trim()).map_err(|e| parse_err(name, n + 1, e))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        self.apply_str(&text, &path.display().to_string())
    }

    pub fn from_file(path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            cfg.apply_file(p)?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_documented_key_is_accepted() {
        let samples = ["1", "0.5", "true"];
        for (key, _) in KEYS {
            let mut cfg = RunConfig::default();
            assert!(samples.iter().any(|v| cfg.set(key, v).is_ok()), "{key}");
        }
    }

    #[test]
    fn file_values_and_rejections() {
        let mut cfg = RunConfig::default();
        cfg.apply_str("# comment\nplan.v_elv = 2.5\nmap.use_floor_labels = false # off\n", "t")
            .unwrap();
        assert_eq!(cfg.plan.v_elv, 2.5);
        assert!(!cfg.mapping.use_floor_labels);
        assert!(cfg.apply_str("plan.v_walk = 1", "t").is_err());
        assert!(cfg.apply_str("plan.v_elv 1", "t").is_err());
        assert!(cfg.apply_str("voxel.n_z = five", "t").is_err());
    }
}
