use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use munes::config::RunConfig;
use munes::graph::write_graph;
use munes::mapping::{read_cloud_csv, run_mapping, write_cloud_csv};
use munes::plan::{order_destinations, plan_multi, snap_to_map, write_trajectory_csv};
use munes::synth::{generate_session, read_session, read_session_spec, write_session};
use munes::voxel::{read_voxel_map, voxelize, write_voxel_map, VoxelClass, VoxelIndex};
use munes::Error;

/// Multifloor mapping and elevator-aware route planning.
#[derive(Parser)]
#[command(name = "munes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic session directory from a building spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Optimise a session into a pose graph and a classified map cloud.
    Map {
        #[arg(long)]
        session: PathBuf,
        /// Pose graph output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        map_cloud: PathBuf,
        #[arg(long)]
        no_floor_labels: bool,
        #[arg(long)]
        no_elevation_constraints: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Turn a classified cloud into a traversable voxel map.
    Voxelize {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Plan a route through `x,y,z;x,y,z;...` waypoints.
    Plan {
        #[arg(long)]
        voxels: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        waypoints: String,
        /// Return to the first waypoint at the end.
        #[arg(long = "return")]
        return_to_start: bool,
        /// Visit the destinations in the fastest order.
        #[arg(long)]
        optimize_order: bool,
        /// Current cab height, `id=z`; repeatable.
        #[arg(long = "elevator-z", value_parser = parse_elevator_z)]
        elevator_z: Vec<(String, f64)>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_elevator_z(s: &str) -> Result<(String, f64), String> {
    let (id, z) = s.split_once('=').ok_or("expected id=z")?;
    let z: f64 = z.trim().parse().map_err(|_| format!("bad height `{z}`"))?;
    Ok((id.trim().to_string(), z))
}

fn parse_waypoints(s: &str) -> munes::Result<Vec<[f64; 3]>> {
    let bad = |m: String| Error::InvalidInput(format!("--waypoints: {m}"));
    s.split(';')
        .filter(|w| !w.trim().is_empty())
        .map(|w| {
            let v: Vec<f64> = w
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("bad number in `{w}`"))))
                .collect::<munes::Result<_>>()?;
            match v[..] {
                [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([x, y, z]),
                _ => Err(bad(format!("`{w}` is not x,y,z"))),
            }
        })
        .collect()
}

fn load_config(path: Option<&Path>) -> munes::Result<RunConfig> {
    RunConfig::from_file(path)
}

fn generate(spec: &Path, out: &Path, seed: Option<u64>, common: &Common) -> munes::Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let seed = seed.unwrap_or(cfg.seed);
    let spec = read_session_spec(spec)?;
    let session = generate_session(&spec, seed)?;
    write_session(out, &session)?;
    println!(
        "generated {} poses, {} pressure samples, seed {seed} -> {}",
        session.manifest.poses,
        session.pressure.len(),
        out.display()
    );
    Ok(())
}

fn map(
    session: &Path,
    out: &Path,
    cloud: &Path,
    no_labels: bool,
    no_elevation: bool,
    common: &Common,
) -> munes::Result<()> {
    let mut cfg = load_config(common.config.as_deref())?;
    if no_labels {
        cfg.mapping.use_floor_labels = false;
    }
    if no_elevation {
        cfg.mapping.use_elevation_constraints = false;
    }
    let session = read_session(session)?;
    let out_map = run_mapping(&session, &cfg.mapping)?;
    let mut graph = out_map.graph.clone();
    graph.nodes = out_map.result.poses.clone();
    write_graph(out, &graph)?;
    write_cloud_csv(cloud, &out_map.cloud)?;
    let floors = out_map.floors.iter().collect::<std::collections::BTreeSet<_>>().len();
    println!(
        "mapped {} poses on {floors} floors, {} loops ({} rejected), {} rides, cost {:.6e} -> {:.6e} in {} iterations, {} cloud points",
        session.manifest.poses,
        out_map.loops.len(),
        out_map.rejected_loops,
        out_map.rides.len(),
        out_map.result.initial_cost,
        out_map.result.final_cost,
        out_map.result.iterations,
        out_map.cloud.len()
    );
    Ok(())
}

fn voxelize_cmd(cloud: &Path, out: &Path, common: &Common) -> munes::Result<()> {
    let cfg = load_config(common.config.as_deref())?;
    let points = read_cloud_csv(cloud)?;
    if points.is_empty() {
        return Err(Error::InvalidInput(format!("{}: cloud has no points", cloud.display())));
    }
    let map = voxelize(&points, &cfg.voxelize)?;
    write_voxel_map(out, &map)?;
    println!(
        "voxels: {} CORRIDOR, {} STAIR, {} ELEVATOR in {} elevators",
        map.count(VoxelClass::Corridor),
        map.count(VoxelClass::Stair),
        map.count(VoxelClass::Elevator),
        map.elevators.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan(
    voxels: &Path,
    waypoints: &str,
    return_to_start: bool,
    optimize_order: bool,
    elevator_z: &[(String, f64)],
    out: &Path,
    common: &Common,
) -> munes::Result<()> {
    let mut cfg = load_config(common.config.as_deref())?;
    let points = parse_waypoints(waypoints)?;
    if points.len() < 2 && !(return_to_start && points.len() == 1) {
        return Err(Error::InvalidInput("--waypoints needs at least two points".into()));
    }
    let map = read_voxel_map(voxels)?;
    for (id, z) in elevator_z {
        if map.elevator(id).is_none() {
            return Err(Error::InvalidInput(format!("--elevator-z: no elevator `{id}` in the map")));
        }
        cfg.plan.elevator_z.insert(id.clone(), *z);
    }
    let mut snapped: Vec<VoxelIndex> = Vec::with_capacity(points.len());
    for (n, p) in points.iter().enumerate() {
        let (v, d) = snap_to_map(&map, *p, cfg.snap_radius).ok_or_else(|| {
            Error::InvalidInput(format!(
                "waypoint {n} ({}, {}, {}) is more than {} m from any traversable voxel",
                p[0], p[1], p[2], cfg.snap_radius
            ))
        })?;
        if d > 1e-9 {
            let c = map.center(v);
            eprintln!(
                "waypoint {n} snapped {d:.3} m to ({:.3}, {:.3}, {:.3})",
                c[0], c[1], c[2]
            );
        }
        snapped.push(v);
    }
    if optimize_order {
        let order = order_destinations(&map, snapped[0], &snapped[1..], return_to_start, &cfg.plan)?;
        snapped.truncate(1);
        snapped.extend(order);
    }
    let traj = plan_multi(&map, &snapped, return_to_start, &cfg.plan)?;
    write_trajectory_csv(out, &traj)?;
    for line in traj.summary() {
        eprintln!("{line}");
    }
    println!(
        "total_time {:.3} s over {} legs: {}",
        traj.total_time,
        traj.legs.len(),
        traj.summary().join("; ")
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OptimizationFailed { .. } => 3,
        Error::Unreachable(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { spec, out, seed, common } => generate(spec, out, *seed, common),
        Command::Map {
            session,
            out,
            map_cloud,
            no_floor_labels,
            no_elevation_constraints,
            common,
        } => map(session, out, map_cloud, *no_floor_labels, *no_elevation_constraints, common),
        Command::Voxelize { cloud, out, common } => voxelize_cmd(cloud, out, common),
        Command::Plan {
            voxels,
            waypoints,
            return_to_start,
            optimize_order,
            elevator_z,
            out,
            common,
        } => plan(voxels, waypoints, *return_to_start, *optimize_order, elevator_z, out, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
