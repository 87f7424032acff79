use std::f64::consts::TAU;

use super::LoopDbConfig;
use crate::error::{invalid, Result};
use crate::scan::Scan;

/// Polar max-height descriptor of one scan.
///
/// Stored column-major: the `n_rings` values of sector `s` are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanContext {
    n_rings: usize,
    n_sectors: usize,
    data: Vec<f64>,
    pub floor: i32,
    pub node_id: usize,
}

/// Rotation-invariant summary: fraction of occupied sectors in each ring.
#[derive(Debug, Clone, PartialEq)]
pub struct RingKey(pub Vec<f64>);

impl ScanContext {
    pub fn zeros(n_rings: usize, n_sectors: usize) -> Self {
        Self {
            n_rings,
            n_sectors,
            data: vec![0.0; n_rings * n_sectors],
            floor: 0,
            node_id: 0,
        }
    }

    pub fn n_rings(&self) -> usize {
        self.n_rings
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn get(&self, ring: usize, sector: usize) -> f64 {
        self.data[sector * self.n_rings + ring]
    }

    pub fn set(&mut self, ring: usize, sector: usize, value: f64) {
        self.data[sector * self.n_rings + ring] = value;
    }

    fn column(&self, sector: usize) -> &[f64] {
        &self.data[sector * self.n_rings..(sector + 1) * self.n_rings]
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Copy with columns rotated so that column `c` moves to `c + shift`.
    pub fn shifted(&self, shift: usize) -> Self {
        let mut out = self.clone();
        for s in 0..self.n_sectors {
            let dst = (s + shift) % self.n_sectors;
            out.data[dst * self.n_rings..(dst + 1) * self.n_rings].copy_from_slice(self.column(s));
        }
        out
    }

    pub fn ring_key(&self) -> RingKey {
        let n = self.n_sectors as f64;
        RingKey(
            (0..self.n_rings)
                .map(|r| (0..self.n_sectors).filter(|&s| self.get(r, s) > 0.0).count() as f64 / n)
                .collect(),
        )
    }
}

pub fn make_descriptor(scan: &Scan, cfg: &LoopDbConfig, floor: i32) -> Result<ScanContext> {
    scan.require_non_empty()?;
    let mut sc = ScanContext::zeros(cfg.n_rings, cfg.n_sectors);
    sc.floor = floor;
    sc.node_id = scan.node_id;
    for p in &scan.points {
        let r = p.x.hypot(p.y);
        if r > cfg.l_max {
            continue;
        }
        let ring = ((r / cfg.l_max * cfg.n_rings as f64) as usize).min(cfg.n_rings - 1);
        let az = p.y.atan2(p.x).rem_euclid(TAU);
        let sector = ((az / TAU * cfg.n_sectors as f64) as usize).min(cfg.n_sectors - 1);
        let value = (p.z + cfg.sensor_height).max(0.0);
        if value > sc.get(ring, sector) {
            sc.set(ring, sector, value);
        }
    }
    Ok(sc)
}

/// Minimum over cyclic column shifts of the mean column-wise cosine
/// distance, and the shift `s` at which `b[:, c + s]` best matches `a[:, c]`.
pub fn descriptor_distance(a: &ScanContext, b: &ScanContext) -> Result<(f64, usize)> {
    if a.n_rings != b.n_rings || a.n_sectors != b.n_sectors {
        return Err(invalid(format!(
            "descriptor shapes differ: {}x{} vs {}x{}",
            a.n_rings, a.n_sectors, b.n_rings, b.n_sectors
        )));
    }
    let n = a.n_sectors;
    let norm = |sc: &ScanContext| -> Vec<f64> {
        (0..n)
            .map(|s| sc.column(s).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    };
    let (na, nb) = (norm(a), norm(b));

    let mut best = (f64::INFINITY, 0usize);
    for shift in 0..n {
        let mut total = 0.0;
        let mut count = 0usize;
        for c in 0..n {
            let d = (c + shift) % n;
            let (x, y) = (na[c], nb[d]);
            if x == 0.0 && y == 0.0 {
                continue;
            }
            count += 1;
            if x == 0.0 || y == 0.0 {
                total += 1.0;
                continue;
            }
            let dot: f64 = a.column(c).iter().zip(b.column(d)).map(|(p, q)| p * q).sum();
            total += 1.0 - dot / (x * y);
        }
        let dist = if count == 0 { 0.0 } else { total / count as f64 };
        if dist < best.0 {
            best = (dist, shift);
        }
    }
    Ok((best.0.max(0.0), best.1))
}
