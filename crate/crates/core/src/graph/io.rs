//! Line-oriented pose-graph text format.
//!
//! ```text
//! VERTEX_SE3:QUAT id x y z qx qy qz qw
//! PRIOR_SE3:QUAT id x y z qx qy qz qw <21 info>
//! EDGE_SE3:QUAT i j dx dy dz qx qy qz qw <21 info>
//! EDGE_Z id z_target sigma_z
//! ```
//!
//! Information matrices are written as their upper triangle, row by row.
//! Between-edges linking consecutive ids are odometry, all others loops.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix6, Quaternion, UnitQuaternion, Vector3};

use super::{BetweenEdge, EdgeKind, ElevationConstraint, Pose3, PoseGraph, Prior};
use crate::error::{io_err, parse_err, Result};

fn push_pose(out: &mut String, p: &Pose3) {
    let q = p.rotation.as_ref();
    let t = p.translation;
    write!(out, " {} {} {} {} {} {} {}", t.x, t.y, t.z, q.i, q.j, q.k, q.w).unwrap();
}

fn push_info(out: &mut String, m: &Matrix6<f64>) {
    for r in 0..6 {
        for c in r..6 {
            write!(out, " {}", m[(r, c)]).unwrap();
        }
    }
}

pub fn graph_to_string(graph: &PoseGraph) -> String {
    let mut out = String::new();
    for (id, p) in &graph.nodes {
        write!(out, "VERTEX_SE3:QUAT {id}").unwrap();
        push_pose(&mut out, p);
        out.push('\n');
    }
    if let Some(p) = &graph.prior {
        write!(out, "PRIOR_SE3:QUAT {}", p.node).unwrap();
        push_pose(&mut out, &p.pose);
        push_info(&mut out, &p.information);
        out.push('\n');
    }
    for e in &graph.edges {
        write!(out, "EDGE_SE3:QUAT {} {}", e.from, e.to).unwrap();
        push_pose(&mut out, &e.measurement);
        push_info(&mut out, &e.information);
        out.push('\n');
    }
    for c in &graph.elevations {
        writeln!(out, "EDGE_Z {} {} {}", c.node, c.z_target, c.sigma_z).unwrap();
    }
    out
}

pub fn write_graph(path: &Path, graph: &PoseGraph) -> Result<()> {
    std::fs::write(path, graph_to_string(graph)).map_err(io_err(path))
}

pub fn read_graph(path: &Path) -> Result<PoseGraph> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_graph(&text, &path.display().to_string())
}

pub fn parse_graph(text: &str, name: &str) -> Result<PoseGraph> {
    let mut g = PoseGraph::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: &str| parse_err(name, line_no, msg);
        let mut tok = line.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        let nums = |from: usize| -> Result<Vec<f64>> {
            rest[from..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| err(&format!("bad number `{s}`"))))
                .collect()
        };
        let id = |k: usize| -> Result<usize> {
            rest.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("bad node id"))
        };
        let pose = |v: &[f64]| -> Result<Pose3> {
            let q = Quaternion::new(v[6], v[3], v[4], v[5]);
            if (q.norm() - 1.0).abs() > 1e-6 {
                return Err(err("quaternion is not unit length"));
            }
            Ok(Pose3::new(
                Vector3::new(v[0], v[1], v[2]),
                UnitQuaternion::new_unchecked(q),
            ))
        };
        let info = |v: &[f64]| -> Matrix6<f64> {
            let mut m = Matrix6::zeros();
            let mut k = 0;
            for r in 0..6 {
                for c in r..6 {
                    m[(r, c)] = v[k];
                    m[(c, r)] = v[k];
                    k += 1;
                }
            }
            m
        };
        match tag {
            "VERTEX_SE3:QUAT" => {
                if rest.len() != 8 {
                    return Err(err("VERTEX_SE3:QUAT needs 8 fields"));
                }
                let v = nums(1)?;
                g.nodes.insert(id(0)?, pose(&v)?);
            }
            "PRIOR_SE3:QUAT" => {
                if rest.len() != 29 {
                    return Err(err("PRIOR_SE3:QUAT needs 29 fields"));
                }
                if g.prior.is_some() {
                    return Err(err("more than one prior"));
                }
                let v = nums(1)?;
                g.prior = Some(Prior {
                    node: id(0)?,
                    pose: pose(&v[..7])?,
                    information: info(&v[7..]),
                });
            }
            "EDGE_SE3:QUAT" => {
                if rest.len() != 30 {
                    return Err(err("EDGE_SE3:QUAT needs 30 fields"));
                }
                let (from, to) = (id(0)?, id(1)?);
                let v = nums(2)?;
                g.edges.push(BetweenEdge {
                    from,
                    to,
                    measurement: pose(&v[..7])?,
                    information: info(&v[7..]),
                    kind: if to == from + 1 {
                        EdgeKind::Odometry
                    } else {
                        EdgeKind::Loop
                    },
                });
            }
            "EDGE_Z" => {
                if rest.len() != 3 {
                    return Err(err("EDGE_Z needs 3 fields"));
                }
                let v = nums(1)?;
                if !(v[1] > 0.0) {
                    return Err(err("sigma_z must be positive"));
                }
                g.elevations.push(ElevationConstraint {
                    node: id(0)?,
                    z_target: v[0],
                    sigma_z: v[1],
                });
            }
            other => return Err(err(&format!("unknown record `{other}`"))),
        }
    }
    let known = |id: usize| g.nodes.contains_key(&id);
    let dangling = g.edges.iter().any(|e| !known(e.from) || !known(e.to))
        || g.elevations.iter().any(|c| !known(c.node))
        || g.prior.as_ref().is_some_and(|p| !known(p.node));
    if dangling {
        return Err(parse_err(name, 0, "constraint references a missing vertex"));
    }
    Ok(g)
}
