//! Voxel map text format:
//!
//! ```text
//! resolution <f>
//! origin <x> <y> <z>
//! elevator <id> <i> <j> <kmin> <kmax> <initial_z>
//! <i> <j> <k> <C|S|E>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{ElevatorInfo, VoxelClass, VoxelIndex, VoxelMap};
use crate::error::{io_err, parse_err, Result};

pub fn map_to_string(map: &VoxelMap) -> String {
    let mut out = String::new();
    writeln!(out, "resolution {}", map.resolution).unwrap();
    let [x, y, z] = map.origin;
    writeln!(out, "origin {x} {y} {z}").unwrap();
    for e in &map.elevators {
        writeln!(
            out,
            "elevator {} {} {} {} {} {}",
            e.id, e.column.0, e.column.1, e.k_min, e.k_max, e.initial_z
        )
        .unwrap();
    }
    for (idx, c) in map.sorted() {
        writeln!(out, "{} {} {} {}", idx.i, idx.j, idx.k, c.code()).unwrap();
    }
    out
}

pub fn write_voxel_map(path: &Path, map: &VoxelMap) -> Result<()> {
    std::fs::write(path, map_to_string(map)).map_err(io_err(path))
}

pub fn read_voxel_map(path: &Path) -> Result<VoxelMap> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    map_from_string(&text, &path.display().to_string())
}

pub fn map_from_string(text: &str, name: &str) -> Result<VoxelMap> {
    let mut resolution: Option<f64> = None;
    let mut origin: Option<[f64; 3]> = None;
    let mut elevators = Vec::new();
    let mut voxels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |msg: &str| parse_err(name, n + 1, msg);
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.is_empty() {
            continue;
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<i32>().map_err(|_| err(&format!("bad index `{s}`")));
        match tok[0] {
            "resolution" if tok.len() == 2 => {
                let r = f(tok[1])?;
                if !(r > 0.0) {
                    return Err(err("resolution must be positive"));
                }
                resolution = Some(r);
            }
            "origin" if tok.len() == 4 => origin = Some([f(tok[1])?, f(tok[2])?, f(tok[3])?]),
            "elevator" if tok.len() == 7 => elevators.push(ElevatorInfo {
                id: tok[1].to_string(),
                column: (int(tok[2])?, int(tok[3])?),
                k_min: int(tok[4])?,
                k_max: int(tok[5])?,
                initial_z: f(tok[6])?,
            }),
            _ if tok.len() == 4 => {
                let class = VoxelClass::from_code(tok[3]).ok_or_else(|| err("class must be C, S or E"))?;
                voxels.push((VoxelIndex::new(int(tok[0])?, int(tok[1])?, int(tok[2])?), class));
            }
            _ => return Err(err("unrecognised line")),
        }
    }
    let resolution = resolution.ok_or_else(|| parse_err(name, 0, "missing resolution"))?;
    let origin = origin.ok_or_else(|| parse_err(name, 0, "missing origin"))?;
    let mut map = VoxelMap::new(resolution, origin);
    for (idx, c) in voxels {
        if map.contains(&idx) {
            return Err(parse_err(name, 0, format!("duplicate voxel {idx:?}")));
        }
        map.insert(idx, c);
    }
    map.elevators = elevators;
    map.validate()
        .map_err(|e| parse_err(name, 0, e.to_string()))?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_identical_round_trip() {
        let mut map = VoxelMap::new(0.3, [0.0, 0.0, -0.1]);
        map.insert(VoxelIndex::new(0, 0, 0), VoxelClass::Corridor);
        map.insert(VoxelIndex::new(-1, 0, 1), VoxelClass::Stair);
        map.add_elevator(ElevatorInfo {
            id: "e0".into(),
            column: (3, 3),
            k_min: 0,
            k_max: 12,
            initial_z: 0.05,
        })
        .unwrap();
        let text = map_to_string(&map);
        let back = map_from_string(&text, "mem").unwrap();
        assert_eq!(back, map);
        assert_eq!(map_to_string(&back), text);
    }

    #[test]
    fn rejects_inconsistent_files() {
        assert!(map_from_string("origin 0 0 0\n", "m").is_err());
        let missing_stack = "resolution 0.3\norigin 0 0 0\nelevator e0 0 0 0 2 0\n0 0 0 E\n";
        assert!(map_from_string(missing_stack, "m").is_err());
        assert!(map_from_string("resolution 0.3\norigin 0 0 0\n0 0 0 X\n", "m").is_err());
    }
}
