//! Building and session description files.
//!
//! Line-oriented `key = value` text; `#` starts a comment.
//!
//! ```text
//! floors = 2
//! floor_height = 3.64
//! wall_height = 3.44
//! resolution = 0.3
//! corridor = 0 0 12 1.8          # x0 y0 x1 y1 on every floor
//! corridor.1 = 0 1.8 1.8 6        # floor 1 only
//! stairs = 3 1.8 12 0.3 0.9 1.2   # x y steps run width [landing]
//! elevator = e0 1.5 -1.8 3.3 0 0 1 0   # id x0 y0 x1 y1 first last initial
//! waypoint = 2.4 0.9 0            # ground point, in route order
//! noise.pressure_sigma = 10
//! ```

use std::path::Path;

use crate::error::{io_err, parse_err, Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn depth(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> [f64; 2] {
        [(self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 - 1e-6 && x <= self.x1 + 1e-6 && y >= self.y0 - 1e-6 && y <= self.y1 + 1e-6
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 - EPS && o.x0 < self.x1 - EPS && self.y0 < o.y1 - EPS && o.y0 < self.y1 - EPS
    }

    /// Grid cells of size `res` whose centres lie inside.
    pub fn cells(&self, res: f64) -> impl Iterator<Item = (i32, i32)> {
        let (i0, i1) = ((self.x0 / res).round() as i32, (self.x1 / res).round() as i32);
        let (j0, j1) = ((self.y0 / res).round() as i32, (self.y1 / res).round() as i32);
        (i0..i1).flat_map(move |i| (j0..j1).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StairSpec {
    /// South-west corner of the two flight lanes.
    pub x: f64,
    pub y: f64,
    pub steps: usize,
    pub run: f64,
    /// Width of one lane; the stairwell is two lanes wide.
    pub width: f64,
    /// Depth of the landings at both ends.
    pub landing: f64,
}

impl StairSpec {
    pub fn length(&self) -> f64 {
        self.steps as f64 * self.run
    }

    /// Lane used by flights leaving even floors (eastbound) and odd floors
    /// (westbound).
    pub fn lane(&self, flight: usize) -> Rect {
        let y0 = self.y + if flight % 2 == 0 { 0.0 } else { self.width };
        Rect::new(self.x, y0, self.x + self.length(), y0 + self.width)
    }

    pub fn well(&self) -> Rect {
        Rect::new(self.x, self.y, self.x + self.length(), self.y + 2.0 * self.width)
    }

    pub fn landings(&self) -> [Rect; 2] {
        let (y0, y1) = (self.y, self.y + 2.0 * self.width);
        [
            Rect::new(self.x - self.landing, y0, self.x, y1),
            Rect::new(self.x + self.length(), y0, self.x + self.length() + self.landing, y1),
        ]
    }

    /// Footprint of step `s` of `flight`, counted from the bottom.
    pub fn step_rect(&self, flight: usize, s: usize) -> Rect {
        let lane = self.lane(flight);
        let (a, b) = if flight % 2 == 0 {
            (self.x + s as f64 * self.run, self.x + (s + 1) as f64 * self.run)
        } else {
            let end = self.x + self.length();
            (end - (s + 1) as f64 * self.run, end - s as f64 * self.run)
        };
        Rect::new(a, lane.y0, b, lane.y1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElevatorSpec {
    pub id: String,
    pub footprint: Rect,
    pub first_floor: usize,
    pub last_floor: usize,
    pub initial_floor: usize,
}

impl ElevatorSpec {
    pub fn serves(&self, floor: usize) -> bool {
        (self.first_floor..=self.last_floor).contains(&floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSpec {
    pub floors: usize,
    pub floor_height: f64,
    pub wall_height: f64,
    /// Grid for corridor geometry and the ground-truth voxel map.
    pub resolution: f64,
    /// Corridor rectangles, on one floor or on every floor (`None`).
    pub corridors: Vec<(Option<usize>, Rect)>,
    pub stairs: Option<StairSpec>,
    pub elevators: Vec<ElevatorSpec>,
}

/// Slab thickness between floors, meters.
pub const SLAB: f64 = 0.2;

impl Default for BuildingSpec {
    fn default() -> Self {
        Self {
            floors: 1,
            floor_height: 3.64,
            wall_height: 3.64 - SLAB,
            resolution: 0.3,
            corridors: Vec::new(),
            stairs: None,
            elevators: Vec::new(),
        }
    }
}

impl BuildingSpec {
    pub fn floor_z(&self, floor: usize) -> f64 {
        floor as f64 * self.floor_height
    }

    pub fn corridors_on(&self, floor: usize) -> impl Iterator<Item = &Rect> {
        self.corridors
            .iter()
            .filter(move |(f, _)| f.is_none_or(|f| f == floor))
            .map(|(_, r)| r)
    }

    pub fn rise(&self) -> Option<f64> {
        self.stairs.as_ref().map(|s| self.floor_height / s.steps as f64)
    }

    /// Lists every violated invariant.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let res = self.resolution;
        let on_grid = |v: f64| ((v / res).round() * res - v).abs() < 1e-6;
        if self.floors == 0 {
            errs.push("at least one floor is required".to_string());
        }
        if !(self.floor_height > SLAB) {
            errs.push(format!("floor_height must exceed the {SLAB} m slab"));
        }
        if !(self.wall_height > 0.0 && self.wall_height <= self.floor_height - SLAB + 1e-9) {
            errs.push("wall_height must be positive and leave room for the slab above".to_string());
        }
        if !(res > 0.0) {
            errs.push("resolution must be positive".to_string());
            return Err(Error::Validation(errs));
        }
        for (f, r) in &self.corridors {
            if let Some(f) = f {
                if *f >= self.floors {
                    errs.push(format!("corridor on missing floor {f}"));
                }
            }
            if r.width().min(r.depth()) < 1.8 - 1e-9 {
                errs.push(format!("corridor {r:?} is narrower than 1.8 m"));
            }
            if ![r.x0, r.y0, r.x1, r.y1].iter().all(|v| on_grid(*v)) {
                errs.push(format!("corridor {r:?} is not aligned to the {res} m grid"));
            }
        }
        for f in 0..self.floors {
            if self.corridors_on(f).next().is_none() {
                errs.push(format!("floor {f} has no corridor"));
            }
        }
        if let Some(s) = &self.stairs {
            if s.steps == 0 {
                errs.push("stairs need at least one step".to_string());
            }
            if ![s.x, s.y, s.run, s.width, s.landing].iter().all(|v| *v > -1e-12 && on_grid(*v))
                || !(s.run > 0.0 && s.width > 0.0 && s.landing > 0.0)
            {
                errs.push("stair coordinates, run, width and landing must be positive multiples of the resolution".to_string());
            }
            if self.floors < 2 {
                errs.push("stairs need at least two floors".to_string());
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for e in &self.elevators {
            if !ids.insert(e.id.as_str()) {
                errs.push(format!("duplicate elevator id {}", e.id));
            }
            let r = &e.footprint;
            if r.width() < 1.5 - 1e-9 || r.depth() < 1.5 - 1e-9 {
                errs.push(format!("elevator {} footprint is smaller than 1.5 x 1.5 m", e.id));
            }
            if ![r.x0, r.y0, r.x1, r.y1].iter().all(|v| on_grid(*v)) {
                errs.push(format!("elevator {} is not aligned to the grid", e.id));
            }
            if e.first_floor >= e.last_floor || e.last_floor >= self.floors {
                errs.push(format!("elevator {} must serve at least two existing floors", e.id));
            }
            if !e.serves(e.initial_floor) {
                errs.push(format!("elevator {} starts on a floor it does not serve", e.id));
            }
            if let Some(s) = &self.stairs {
                let well = [s.well(), s.landings()[0], s.landings()[1]];
                if well.iter().any(|w| w.overlaps(r)) {
                    errs.push(format!("elevator {} overlaps the stairwell", e.id));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Odometry noise per meter traveled.
    pub odom_sigma_xy: f64,
    pub odom_sigma_z: f64,
    /// Radians per meter.
    pub odom_sigma_yaw: f64,
    /// Pascals.
    pub pressure_sigma: f64,
    /// Meters.
    pub range_sigma: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            odom_sigma_xy: 0.01,
            odom_sigma_z: 0.01,
            odom_sigma_yaw: 0.001,
            pressure_sigma: 10.0,
            range_sigma: 0.01,
        }
    }
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self {
            odom_sigma_xy: 0.0,
            odom_sigma_z: 0.0,
            odom_sigma_yaw: 0.0,
            pressure_sigma: 0.0,
            range_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.odom_sigma_xy,
            self.odom_sigma_z,
            self.odom_sigma_yaw,
            self.pressure_sigma,
            self.range_sigma,
        ];
        if all.iter().all(|s| *s >= 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::Validation(vec!["noise levels must be finite and non-negative".into()]))
        }
    }
}

/// Everything `generate_session` needs besides the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSpec {
    pub building: BuildingSpec,
    /// Ground points visited in order.
    pub route: Vec<[f64; 3]>,
    pub noise: NoiseSpec,
    pub p_cri: f64,
    /// Pressure samples recorded per pose.
    pub window: usize,
}

impl SessionSpec {
    pub fn new(building: BuildingSpec, route: Vec<[f64; 3]>) -> Self {
        Self {
            building,
            route,
            noise: NoiseSpec::default(),
            p_cri: 101_325.0,
            window: 100,
        }
    }
}

pub fn read_session_spec(path: &Path) -> Result<SessionSpec> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_session_spec(&text, &path.display().to_string())
}

pub fn parse_session_spec(text: &str, name: &str) -> Result<SessionSpec> {
    let mut spec = SessionSpec::new(BuildingSpec::default(), Vec::new());
    let mut wall_height = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| parse_err(name, n + 1, m);
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let tok: Vec<&str> = value.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        let count = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad count `{s}`")));
        let nums = |want: usize| -> Result<Vec<f64>> {
            if tok.len() != want {
                return Err(err(format!("`{key}` takes {want} values")));
            }
            tok.iter().map(|s| num(s)).collect()
        };
        let b = &mut spec.building;
        match key {
            "floors" => b.floors = count(value)?,
            "floor_height" => b.floor_height = num(value)?,
            "wall_height" => wall_height = Some(num(value)?),
            "resolution" => b.resolution = num(value)?,
            "corridor" => {
                let v = nums(4)?;
                b.corridors.push((None, Rect::new(v[0], v[1], v[2], v[3])));
            }
            "stairs" => {
                if tok.len() != 5 && tok.len() != 6 {
                    return Err(err("`stairs` takes x y steps run width [landing]".into()));
                }
                if b.stairs.is_some() {
                    return Err(err("only one stairwell is supported".into()));
                }
                b.stairs = Some(StairSpec {
                    x: num(tok[0])?,
                    y: num(tok[1])?,
                    steps: count(tok[2])?,
                    run: num(tok[3])?,
                    width: num(tok[4])?,
                    landing: tok.get(5).map_or(Ok(1.2), |s| num(s))?,
                });
            }
            "elevator" => {
                if tok.len() != 8 {
                    return Err(err("`elevator` takes id x0 y0 x1 y1 first last initial".into()));
                }
                b.elevators.push(ElevatorSpec {
                    id: tok[0].to_string(),
                    footprint: Rect::new(num(tok[1])?, num(tok[2])?, num(tok[3])?, num(tok[4])?),
                    first_floor: count(tok[5])?,
                    last_floor: count(tok[6])?,
                    initial_floor: count(tok[7])?,
                });
            }
            "waypoint" => {
                let v = nums(3)?;
                spec.route.push([v[0], v[1], v[2]]);
            }
            "p_cri" => spec.p_cri = num(value)?,
            "window" => spec.window = count(value)?,
            "noise.odom_sigma_xy" => spec.noise.odom_sigma_xy = num(value)?,
            "noise.odom_sigma_z" => spec.noise.odom_sigma_z = num(value)?,
            "noise.odom_sigma_yaw" => spec.noise.odom_sigma_yaw = num(value)?,
            "noise.pressure_sigma" => spec.noise.pressure_sigma = num(value)?,
            "noise.range_sigma" => spec.noise.range_sigma = num(value)?,
            _ => {
                if let Some(f) = key.strip_prefix("corridor.") {
                    let f = count(f)?;
                    let v = nums(4)?;
                    b.corridors.push((Some(f), Rect::new(v[0], v[1], v[2], v[3])));
                } else {
                    return Err(err(format!("unknown key `{key}`")));
                }
            }
        }
    }
    spec.building.wall_height = wall_height.unwrap_or(spec.building.floor_height - SLAB);
    Ok(spec)
}
