//! Axis-aligned boxes and ray casting.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        debug_assert!((0..3).all(|a| min[a] <= max[a]));
        Self { min, max }
    }

    /// Distance along `dir` to the first entry into the box, if ahead of
    /// `origin`. `inv` holds the componentwise reciprocal of `dir`.
    pub fn entry(&self, origin: [f64; 3], inv: [f64; 3]) -> Option<f64> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let ta = (self.min[a] - origin[a]) * inv[a];
            let tb = (self.max[a] - origin[a]) * inv[a];
            // NaN arises for rays parallel to a face through its plane
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            if lo.is_nan() || hi.is_nan() {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        (t0 <= t1 && t0 > 1e-9).then_some(t0)
    }

    /// Distance along `dir` to leave the box from an interior `origin`.
    pub fn exit(&self, origin: [f64; 3], dir: [f64; 3]) -> f64 {
        (0..3)
            .filter(|a| dir[*a] != 0.0)
            .map(|a| {
                let bound = if dir[a] > 0.0 { self.max[a] } else { self.min[a] };
                (bound - origin[a]) / dir[a]
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

pub fn reciprocal(dir: [f64; 3]) -> [f64; 3] {
    dir.map(|d| 1.0 / d)
}

/// Nearest hit among `boxes` within `max_range`.
pub fn raycast(boxes: &[Aabb], origin: [f64; 3], dir: [f64; 3], max_range: f64) -> Option<f64> {
    let inv = reciprocal(dir);
    boxes
        .iter()
        .filter_map(|b| b.entry(origin, inv))
        .filter(|t| *t <= max_range)
        .min_by(f64::total_cmp)
}
