//! Batch Levenberg–Marquardt over the pose graph.
//!
//! Each iteration linearises every residual with its analytic Jacobian,
//! assembles the block-sparse normal equations `H δ = -g` with
//! `H = Σ Jᵀ Ω J`, `g = Σ Jᵀ Ω r`, adds Marquardt damping `λ diag(H)`, and
//! solves with a sparse Cholesky factorisation. A step is kept only if it
//! lowers the total cost.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DVector, Matrix6, Vector3, Vector6};
use nalgebra_sparse::factorization::{CscCholesky, CscSymbolicCholesky};
use nalgebra_sparse::{CooMatrix, CscMatrix};

use super::factors::{between_jacobians, elevation_residual, prior_jacobian};
use super::{Pose3, PoseGraph};
use crate::error::{invalid, Error, Result};

const MAX_DAMPING: f64 = 1e12;
const MIN_DAMPING: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeParams {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for OptimizeParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            relative_tolerance: 1e-9,
            initial_damping: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub poses: BTreeMap<usize, Pose3>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

struct Linearized {
    blocks: HashMap<(usize, usize), Matrix6<f64>>,
    gradient: DVector<f64>,
}

fn linearize(graph: &PoseGraph, index: &HashMap<usize, usize>, poses: &[Pose3]) -> Linearized {
    let n = poses.len();
    let mut blocks: HashMap<(usize, usize), Matrix6<f64>> = HashMap::new();
    let mut gradient = DVector::zeros(6 * n);
    let mut add_block = |a: usize, b: usize, m: Matrix6<f64>| {
        *blocks.entry((a, b)).or_insert_with(Matrix6::zeros) += m;
    };
    let add_grad = |g: &mut DVector<f64>, a: usize, v: Vector6<f64>| {
        let mut seg = g.fixed_rows_mut::<6>(6 * a);
        seg += v;
    };

    if let Some(p) = &graph.prior {
        let a = index[&p.node];
        let (r, j) = prior_jacobian(&poses[a], &p.pose);
        let jt_w = j.transpose() * p.information;
        add_block(a, a, jt_w * j);
        add_grad(&mut gradient, a, jt_w * r);
    }
    for e in &graph.edges {
        let (a, b) = (index[&e.from], index[&e.to]);
        let (r, ji, jj) = between_jacobians(&poses[a], &poses[b], &e.measurement);
        let ji_w = ji.transpose() * e.information;
        let jj_w = jj.transpose() * e.information;
        add_block(a, a, ji_w * ji);
        add_block(b, b, jj_w * jj);
        add_block(a, b, ji_w * jj);
        add_block(b, a, jj_w * ji);
        add_grad(&mut gradient, a, ji_w * r);
        add_grad(&mut gradient, b, jj_w * r);
    }
    for c in &graph.elevations {
        let a = index[&c.node];
        let (r, j) = elevation_residual(&poses[a], c.z_target, c.sigma_z);
        add_block(a, a, j * j.transpose());
        add_grad(&mut gradient, a, j * r);
    }
    Linearized { blocks, gradient }
}

/// Deterministic block order so the sparsity pattern is stable across
/// iterations.
fn block_keys(lin: &Linearized) -> Vec<(usize, usize)> {
    let mut keys: Vec<_> = lin.blocks.keys().copied().collect();
    keys.sort_unstable_by_key(|&(a, b)| (b, a));
    keys
}

fn assemble(lin: &Linearized, keys: &[(usize, usize)], n: usize, damping: f64) -> CscMatrix<f64> {
    let mut coo = CooMatrix::new(6 * n, 6 * n);
    for &(a, b) in keys {
        let m = &lin.blocks[&(a, b)];
        for r in 0..6 {
            for c in 0..6 {
                let mut v = m[(r, c)];
                if a == b && r == c {
                    v += damping * v.max(1e-9);
                }
                coo.push(6 * a + r, 6 * b + c, v);
            }
        }
    }
    CscMatrix::from(&coo)
}

fn cost_of(graph: &PoseGraph, ids: &[usize], poses: &[Pose3]) -> f64 {
    let map: BTreeMap<usize, Pose3> = ids.iter().copied().zip(poses.iter().copied()).collect();
    graph.total_cost(&map).unwrap_or(f64::NAN)
}

fn apply_step(poses: &[Pose3], delta: &DVector<f64>) -> Vec<Pose3> {
    poses
        .iter()
        .enumerate()
        .map(|(a, p)| {
            let d = delta.fixed_rows::<6>(6 * a);
            p.retract(
                &Vector3::new(d[0], d[1], d[2]),
                &Vector3::new(d[3], d[4], d[5]),
            )
        })
        .collect()
}

/// Minimises the graph's total cost starting from the nodes' current poses.
pub fn optimize(graph: &PoseGraph, params: &OptimizeParams) -> Result<OptimizeResult> {
    if graph.prior.is_none() {
        return Err(invalid("graph needs a prior before optimisation"));
    }
    if !(params.initial_damping > 0.0 && params.relative_tolerance > 0.0) || params.max_iterations == 0
    {
        return Err(invalid("optimiser parameters must be positive"));
    }
    let ids: Vec<usize> = graph.nodes.keys().copied().collect();
    let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(a, &id)| (id, a)).collect();
    let mut poses: Vec<Pose3> = graph.nodes.values().copied().collect();
    let n = poses.len();

    let as_map = |poses: &[Pose3]| -> Vec<(usize, Pose3)> {
        ids.iter().copied().zip(poses.iter().copied()).collect()
    };

    let initial_cost = cost_of(graph, &ids, &poses);
    if !initial_cost.is_finite() {
        return Err(Error::OptimizationFailed {
            reason: "initial cost is not finite".into(),
            iterations: 0,
            last: as_map(&poses),
        });
    }
    let mut cost = initial_cost;
    let mut history = vec![cost];
    let mut damping = params.initial_damping;
    let mut iterations = 0;
    let mut symbolic: Option<CscSymbolicCholesky> = None;

    'outer: while iterations < params.max_iterations && cost > 0.0 {
        let lin = linearize(graph, &index, &poses);
        let keys = block_keys(&lin);
        let rhs = -&lin.gradient;
        loop {
            if iterations >= params.max_iterations {
                break 'outer;
            }
            iterations += 1;
            let h = assemble(&lin, &keys, n, damping);
            let sym = symbolic
                .get_or_insert_with(|| CscSymbolicCholesky::factor(h.pattern().clone()))
                .clone();
            let delta = match CscCholesky::factor_numerical(sym, h.values()) {
                Ok(chol) => DVector::from_column_slice(chol.solve(&rhs).as_slice()),
                Err(_) => {
                    damping *= 10.0;
                    if damping > MAX_DAMPING {
                        break;
                    }
                    continue;
                }
            };
            // Predicted decrease of the undamped quadratic model.
            let undamped = assemble(&lin, &keys, n, 0.0);
            let h_delta = &undamped * &delta;
            let predicted = -2.0 * lin.gradient.dot(&delta) - delta.dot(&h_delta);
            if !(predicted > params.relative_tolerance * cost) {
                break 'outer;
            }
            let candidate = apply_step(&poses, &delta);
            let new_cost = cost_of(graph, &ids, &candidate);
            if new_cost.is_finite() && new_cost < cost {
                let rel = (cost - new_cost) / cost;
                poses = candidate;
                cost = new_cost;
                history.push(cost);
                damping = (damping / 10.0).max(MIN_DAMPING);
                if rel < params.relative_tolerance {
                    break 'outer;
                }
                continue 'outer;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
        }
        return Err(Error::OptimizationFailed {
            reason: format!("damping exceeded {MAX_DAMPING:e} without reducing the cost"),
            iterations,
            last: as_map(&poses),
        });
    }

    Ok(OptimizeResult {
        poses: ids.iter().copied().zip(poses).collect(),
        initial_cost,
        final_cost: cost,
        iterations,
        cost_history: history,
    })
}
