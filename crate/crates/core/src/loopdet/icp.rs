//! Planar point-to-point ICP used to turn a place-recognition match into a
//! relative pose.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use super::kdtree::KdTree;
use super::LoopDbConfig;
use crate::error::{invalid, Error, Result};
use crate::scan::Scan;

/// Rigid transform in the plane: `p' = R(dyaw) p + (dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarTransform {
    pub dx: f64,
    pub dy: f64,
    pub dyaw: f64,
}

impl PlanarTransform {
    pub fn new(dx: f64, dy: f64, dyaw: f64) -> Self {
        Self { dx, dy, dyaw }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.dyaw.sin_cos();
        [c * p[0] - s * p[1] + self.dx, s * p[0] + c * p[1] + self.dy]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PlanarTransform) -> PlanarTransform {
        let [dx, dy] = self.apply([other.dx, other.dy]);
        PlanarTransform::new(dx, dy, wrap_angle(self.dyaw + other.dyaw))
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn flatten(scan: &Scan, leaf: f64, max_range: f64) -> Vec<[f64; 2]> {
    let mut cells: BTreeMap<(i64, i64), (f64, f64, usize)> = BTreeMap::new();
    for p in &scan.points {
        if p.x.hypot(p.y) > max_range {
            continue;
        }
        let key = ((p.x / leaf).floor() as i64, (p.y / leaf).floor() as i64);
        let e = cells.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += p.x;
        e.1 += p.y;
        e.2 += 1;
    }
    cells
        .values()
        .map(|&(x, y, n)| [x / n as f64, y / n as f64])
        .collect()
}

fn truncated_error(source: &[[f64; 2]], tree: &KdTree, t: &PlanarTransform, max_sq: f64) -> f64 {
    source
        .iter()
        .map(|p| {
            let moved = t.apply(*p);
            tree.nearest(&moved, 1, |_| true).first().map_or(max_sq, |(d2, _)| d2.min(max_sq))
        })
        .sum()
}

/// Relative pose of the query sensor in the match sensor's frame, so that
/// match-frame points are `T · query-frame points`, plus the RMS residual of
/// the final correspondences.
///
/// The yaw is seeded from the descriptor shift.
pub fn estimate_relative_pose(
    scan_q: &Scan,
    scan_m: &Scan,
    shift: usize,
    cfg: &LoopDbConfig,
) -> Result<(PlanarTransform, f64)> {
    scan_q.require_non_empty()?;
    scan_m.require_non_empty()?;
    let source = flatten(scan_q, cfg.icp_leaf, cfg.l_max);
    let target = flatten(scan_m, cfg.icp_leaf, cfg.l_max);
    if source.len() < 3 || target.len() < 3 {
        return Err(invalid("too few points for scan alignment"));
    }
    let mut tree = KdTree::new(2);
    for (i, p) in target.iter().enumerate() {
        tree.insert(p, i);
    }

    let mut t = PlanarTransform::new(0.0, 0.0, wrap_angle(shift as f64 * TAU / cfg.n_sectors as f64));
    let max_sq = cfg.icp_max_correspondence * cfg.icp_max_correspondence;
    let mut rms = f64::INFINITY;
    let mut prev_step: Option<[f64; 3]> = None;
    for _ in 0..cfg.icp_max_iterations {
        let mut pairs: Vec<([f64; 2], [f64; 2])> = Vec::with_capacity(source.len());
        let mut sq_sum = 0.0;
        for p in &source {
            let moved = t.apply(*p);
            if let Some(&(d2, j)) = tree.nearest(&moved, 1, |_| true).first() {
                if d2 <= max_sq {
                    pairs.push((moved, target[j]));
                    sq_sum += d2;
                }
            }
        }
        if pairs.len() < 3 || pairs.len() * 10 < source.len() * 3 {
            return Err(Error::RejectedLoop {
                residual: f64::INFINITY,
                limit: cfg.icp_max_residual,
            });
        }
        rms = (sq_sum / pairs.len() as f64).sqrt();

        // Closed-form 2-D Procrustes on the centred pairs.
        let n = pairs.len() as f64;
        let (mut ms, mut mt) = ([0.0; 2], [0.0; 2]);
        for (s, d) in &pairs {
            ms[0] += s[0] / n;
            ms[1] += s[1] / n;
            mt[0] += d[0] / n;
            mt[1] += d[1] / n;
        }
        let (mut dot, mut cross) = (0.0, 0.0);
        for (s, d) in &pairs {
            let (sx, sy) = (s[0] - ms[0], s[1] - ms[1]);
            let (dx, dy) = (d[0] - mt[0], d[1] - mt[1]);
            dot += sx * dx + sy * dy;
            cross += sx * dy - sy * dx;
        }
        let yaw = cross.atan2(dot);
        let (sn, cs) = yaw.sin_cos();
        let step = PlanarTransform::new(
            mt[0] - (cs * ms[0] - sn * ms[1]),
            mt[1] - (sn * ms[0] + cs * ms[1]),
            yaw,
        );
        let next = step.compose(&t);
        let v = [next.dx - t.dx, next.dy - t.dy, wrap_angle(next.dyaw - t.dyaw)];
        t = next;
        if step.dx.hypot(step.dy) < 1e-7 && yaw.abs() < 1e-8 {
            break;
        }
        // Sliding along long walls converges slowly; extrapolate along a
        // consistent update direction while the truncated error drops.
        if let Some(u) = prev_step {
            let dot: f64 = (0..3).map(|a| u[a] * v[a]).sum();
            let norms = (0..3).map(|a| u[a] * u[a]).sum::<f64>().sqrt() * (0..3).map(|a| v[a] * v[a]).sum::<f64>().sqrt();
            if norms > 0.0 && dot > 0.95 * norms {
                let mut best = truncated_error(&source, &tree, &t, max_sq);
                for scale in [1.0, 2.0, 4.0, 8.0] {
                    let cand = PlanarTransform::new(t.dx + scale * v[0], t.dy + scale * v[1], wrap_angle(t.dyaw + scale * v[2]));
                    let e = truncated_error(&source, &tree, &cand, max_sq);
                    if e >= best {
                        break;
                    }
                    best = e;
                    t = cand;
                }
            }
        }
        prev_step = Some(v);
    }

    // Residual at the final transform.
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for p in &source {
        let moved = t.apply(*p);
        if let Some(&(d2, _)) = tree.nearest(&moved, 1, |_| true).first() {
            if d2 <= max_sq {
                sq_sum += d2;
                count += 1;
            }
        }
    }
    if count > 0 {
        rms = (sq_sum / count as f64).sqrt();
    }
    if !(rms <= cfg.icp_max_residual) {
        return Err(Error::RejectedLoop {
            residual: rms,
            limit: cfg.icp_max_residual,
        });
    }
    Ok((t, rms))
}
