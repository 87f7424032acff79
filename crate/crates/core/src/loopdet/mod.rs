//! Floor-labelled place recognition.
//!
//! Each scan is summarised by a polar max-height descriptor. Its ring key is
//! indexed in one exact nearest-neighbour tree per floor label, so a query
//! only ever sees candidates recorded on the floor it believes it is on.

mod context;
mod icp;
mod kdtree;

use std::collections::{BTreeMap, HashMap};

pub use context::{descriptor_distance, make_descriptor, RingKey, ScanContext};
pub use icp::{estimate_relative_pose, wrap_angle, PlanarTransform};
pub use kdtree::KdTree;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LoopDbConfig {
    pub n_rings: usize,
    pub n_sectors: usize,
    /// Maximum descriptor radius, meters.
    pub l_max: f64,
    pub top_k: usize,
    pub accept_threshold: f64,
    /// Candidates closer than this many node ids to the query are skipped.
    pub exclusion_gap: usize,
    /// Added to point z so that floor-level returns land near zero.
    pub sensor_height: f64,
    pub icp_max_iterations: usize,
    pub icp_leaf: f64,
    pub icp_max_correspondence: f64,
    pub icp_max_residual: f64,
}

impl Default for LoopDbConfig {
    fn default() -> Self {
        Self {
            n_rings: 20,
            n_sectors: 60,
            l_max: 40.0,
            top_k: 10,
            accept_threshold: 0.20,
            exclusion_gap: 50,
            sensor_height: 0.5,
            icp_max_iterations: 30,
            icp_leaf: 0.25,
            icp_max_correspondence: 1.0,
            icp_max_residual: 0.5,
        }
    }
}

impl LoopDbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rings == 0 || self.n_sectors == 0 || self.top_k == 0 || self.exclusion_gap == 0 {
            return Err(invalid("loop detection counts must be positive"));
        }
        if !(self.l_max > 0.0) || !(self.accept_threshold > 0.0 && self.accept_threshold < 1.0) {
            return Err(invalid("l_max must be positive and accept_threshold in (0, 1)"));
        }
        if !(self.icp_leaf > 0.0 && self.icp_max_correspondence > 0.0 && self.icp_max_residual > 0.0)
        {
            return Err(invalid("ICP parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopCandidate {
    pub query_id: usize,
    pub match_id: usize,
    pub distance: f64,
    pub shift: usize,
    pub query_floor: i32,
    pub match_floor: i32,
}

/// Ring-key trees keyed by floor label, plus the full descriptors.
#[derive(Debug, Clone)]
pub struct LoopDb {
    use_floor_labels: bool,
    n_rings: usize,
    trees: BTreeMap<i32, KdTree>,
    descriptors: HashMap<usize, ScanContext>,
}

impl LoopDb {
    pub fn new(cfg: &LoopDbConfig) -> Self {
        Self::with_labels(cfg, true)
    }

    /// With `use_floor_labels == false` every descriptor shares one tree.
    pub fn with_labels(cfg: &LoopDbConfig, use_floor_labels: bool) -> Self {
        Self {
            use_floor_labels,
            n_rings: cfg.n_rings,
            trees: BTreeMap::new(),
            descriptors: HashMap::new(),
        }
    }

    pub fn uses_floor_labels(&self) -> bool {
        self.use_floor_labels
    }

    fn tree_key(&self, floor: i32) -> i32 {
        if self.use_floor_labels {
            floor
        } else {
            0
        }
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn tree_len(&self, floor: i32) -> usize {
        self.trees.get(&self.tree_key(floor)).map_or(0, KdTree::len)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn get(&self, node_id: usize) -> Option<&ScanContext> {
        self.descriptors.get(&node_id)
    }

    pub fn insert(&mut self, node_id: usize, floor: i32, mut descriptor: ScanContext) -> Result<()> {
        if self.descriptors.contains_key(&node_id) {
            return Err(invalid(format!("node {node_id} already in the loop database")));
        }
        if descriptor.n_rings() != self.n_rings {
            return Err(invalid("descriptor ring count does not match the database"));
        }
        descriptor.node_id = node_id;
        descriptor.floor = floor;
        let key = descriptor.ring_key();
        let n_rings = self.n_rings;
        let tree_key = self.tree_key(floor);
        self.trees
            .entry(tree_key)
            .or_insert_with(|| KdTree::new(n_rings))
            .insert(&key.0, node_id);
        self.descriptors.insert(node_id, descriptor);
        Ok(())
    }

    /// Best same-tree match for `descriptor` below the acceptance threshold.
    pub fn query(
        &self,
        descriptor: &ScanContext,
        floor: i32,
        cfg: &LoopDbConfig,
    ) -> Option<LoopCandidate> {
        if descriptor.is_empty() {
            return None;
        }
        let tree = self.trees.get(&self.tree_key(floor))?;
        let q = descriptor.node_id;
        let gap = cfg.exclusion_gap;
        let key = descriptor.ring_key();
        let near = tree.nearest(&key.0, cfg.top_k, |id| id.abs_diff(q) >= gap);

        let mut best: Option<LoopCandidate> = None;
        for (_, id) in near {
            let cand = &self.descriptors[&id];
            let Ok((distance, shift)) = descriptor_distance(descriptor, cand) else {
                continue;
            };
            let better = match &best {
                None => true,
                Some(b) => distance < b.distance || (distance == b.distance && id < b.match_id),
            };
            if better {
                best = Some(LoopCandidate {
                    query_id: q,
                    match_id: id,
                    distance,
                    shift,
                    query_floor: floor,
                    match_floor: cand.floor,
                });
            }
        }
        best.filter(|b| b.distance < cfg.accept_threshold)
    }
}
