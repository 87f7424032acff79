//! Exact k-nearest-neighbour search over fixed-dimension vectors with
//! incremental insertion. No rebalancing; insertion order is assumed to be
//! roughly random with respect to the key space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    left: Option<u32>,
    right: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hit {
    dist_sq: f64,
    id: usize,
}

impl Eq for Hit {}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "kd-tree dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, node: usize) -> &[f64] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    pub fn insert(&mut self, point: &[f64], id: usize) {
        assert_eq!(point.len(), self.dim);
        let new = self.nodes.len() as u32;
        self.coords.extend_from_slice(point);
        self.nodes.push(Node {
            id,
            left: None,
            right: None,
        });
        if new == 0 {
            return;
        }
        let mut cur = 0usize;
        let mut depth = 0usize;
        loop {
            let axis = depth % self.dim;
            let go_left = point[axis] < self.point(cur)[axis];
            let slot = if go_left {
                &mut self.nodes[cur].left
            } else {
                &mut self.nodes[cur].right
            };
            match *slot {
                Some(next) => {
                    cur = next as usize;
                    depth += 1;
                }
                None => {
                    *slot = Some(new);
                    return;
                }
            }
        }
    }

    /// The `k` nearest entries accepted by `keep`, nearest first, as
    /// `(squared distance, id)`. Ties resolve to the smaller id.
    pub fn nearest<F>(&self, query: &[f64], k: usize, keep: F) -> Vec<(f64, usize)>
    where
        F: Fn(usize) -> bool,
    {
        assert_eq!(query.len(), self.dim);
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, 0, query, k, &keep, &mut heap);
        }
        let mut out: Vec<Hit> = heap.into_vec();
        out.sort();
        out.into_iter().map(|h| (h.dist_sq, h.id)).collect()
    }

    fn search<F>(
        &self,
        node: usize,
        depth: usize,
        query: &[f64],
        k: usize,
        keep: &F,
        heap: &mut BinaryHeap<Hit>,
    ) where
        F: Fn(usize) -> bool,
    {
        let p = self.point(node);
        let n = &self.nodes[node];
        if keep(n.id) {
            let dist_sq = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            let hit = Hit { dist_sq, id: n.id };
            if heap.len() < k {
                heap.push(hit);
            } else if hit < *heap.peek().unwrap() {
                heap.pop();
                heap.push(hit);
            }
        }
        let axis = depth % self.dim;
        let diff = query[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        if let Some(c) = near {
            self.search(c as usize, depth + 1, query, k, keep, heap);
        }
        if let Some(c) = far {
            let worst = heap.peek().map_or(f64::INFINITY, |h| h.dist_sq);
            if heap.len() < k || diff * diff <= worst {
                self.search(c as usize, depth + 1, query, k, keep, heap);
            }
        }
    }
}
