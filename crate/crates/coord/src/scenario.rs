//! Scenario definition: map, fleet, named locations and the authored paths
//! between them, plus the control-loop knobs. Built-in "harbor" and
//! "warehouse" presets generate a crossing-chord layout that produces
//! critical sections at a steady rate.

use crate::envelope::RobotSpec;
use crate::geom::Point;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl MapBounds {
    pub fn contains(&self, p: &Point) -> bool {
        self.xmin <= p.x && p.x <= self.xmax && self.ymin <= p.y && p.y <= self.ymax
    }
}

/// Axis-aligned obstacle, layout fidelity only (paths are authored around
/// them; the simulation does not collide robots with obstacles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPath {
    pub from: String,
    pub to: String,
    /// Polyline including both endpoints.
    pub waypoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub map: MapBounds,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub robots: Vec<RobotSpec>,
    pub locations: Vec<Location>,
    pub paths: Vec<ScenarioPath>,
    /// Coordinator control period, milliseconds.
    #[serde(default = "default_t_c_ms")]
    pub t_c_ms: u64,
    /// Tracker tick, milliseconds.
    #[serde(default = "default_t_r_ms")]
    pub t_r_ms: u64,
    /// Envelope sampling step, meters.
    pub ds_m: f64,
    /// Stop-target padding before a section entry, meters.
    pub safety_margin_m: f64,
    /// Coordinator anticipation horizon, seconds; defaults to the time the
    /// safety margin buys at fleet top speed.
    #[serde(default)]
    pub anticipation_s: Option<f64>,
    /// Abort when no critical section is created for this long (virtual s).
    #[serde(default = "default_watchdog_s")]
    pub watchdog_virtual_s: f64,
}

fn default_t_c_ms() -> u64 {
    100
}
fn default_t_r_ms() -> u64 {
    10
}
fn default_watchdog_s() -> f64 {
    300.0
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario {name}: {field}: {reason}")]
    Invalid { name: String, field: String, reason: String },
}

impl Scenario {
    pub fn safety_margin_indices(&self) -> usize {
        (self.safety_margin_m / self.ds_m).ceil().max(0.0) as usize
    }

    pub fn anticipation_s(&self) -> f64 {
        self.anticipation_s.unwrap_or_else(|| {
            let v_top = self.robots.iter().map(|r| r.v_max).fold(0.0, f64::max);
            if v_top > 0.0 {
                self.safety_margin_m / v_top
            } else {
                0.0
            }
        })
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    /// Waypoints of the authored path from -> to, if any.
    pub fn path_between(&self, from: &str, to: &str) -> Option<&ScenarioPath> {
        self.paths.iter().find(|p| p.from == from && p.to == to)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |field: &str, reason: String| ScenarioError::Invalid {
            name: self.name.clone(),
            field: field.to_string(),
            reason,
        };
        if self.robots.is_empty() {
            return Err(fail("robots", "at least one robot required".into()));
        }
        for (i, spec) in self.robots.iter().enumerate() {
            if !spec.valid() {
                return Err(fail(&format!("robots[{i}]"), "all parameters must be positive".into()));
            }
            if spec.robot_id as usize != i {
                return Err(fail(
                    &format!("robots[{i}].robot_id"),
                    format!("must equal its index, got {}", spec.robot_id),
                ));
            }
        }
        if self.ds_m <= 0.0 {
            return Err(fail("ds_m", "must be positive".into()));
        }
        if self.safety_margin_m < 0.0 {
            return Err(fail("safety_margin_m", "must be nonnegative".into()));
        }
        if self.t_c_ms == 0 || self.t_r_ms == 0 {
            return Err(fail("t_c_ms/t_r_ms", "periods must be positive".into()));
        }
        if self.t_c_ms % self.t_r_ms != 0 {
            return Err(fail(
                "t_c_ms",
                format!("must be a multiple of t_r_ms ({} % {} != 0)", self.t_c_ms, self.t_r_ms),
            ));
        }
        let mut names = HashSet::new();
        for (i, loc) in self.locations.iter().enumerate() {
            if !names.insert(loc.name.as_str()) {
                return Err(fail(
                    &format!("locations[{i}].name"),
                    format!("duplicate location {:?}", loc.name),
                ));
            }
            if !self.map.contains(&Point::new(loc.x, loc.y)) {
                return Err(fail(&format!("locations[{i}]"), "outside map bounds".into()));
            }
        }
        if self.locations.len() < self.robots.len() + 1 {
            return Err(fail(
                "locations",
                format!(
                    "need at least robots+1 = {} locations, got {}",
                    self.robots.len() + 1,
                    self.locations.len()
                ),
            ));
        }
        let mut out_degree: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (i, path) in self.paths.iter().enumerate() {
            let field = format!("paths[{i}]");
            for end in [&path.from, &path.to] {
                if self.location_index(end).is_none() {
                    return Err(fail(&format!("{field}.from/to"), format!("unknown location {end:?}")));
                }
            }
            if path.from == path.to {
                return Err(fail(&field, "from and to must differ".into()));
            }
            if path.waypoints.len() < 2 {
                return Err(fail(&format!("{field}.waypoints"), "need at least 2 waypoints".into()));
            }
            for (j, &(x, y)) in path.waypoints.iter().enumerate() {
                if !self.map.contains(&Point::new(x, y)) {
                    return Err(fail(
                        &format!("{field}.waypoints[{j}]"),
                        "outside map bounds".into(),
                    ));
                }
            }
            let from = self.locations[self.location_index(&path.from).unwrap()].clone();
            let to = self.locations[self.location_index(&path.to).unwrap()].clone();
            let (first, last) = (path.waypoints[0], *path.waypoints.last().unwrap());
            if (first.0 - from.x).abs() > 1e-9 || (first.1 - from.y).abs() > 1e-9 {
                return Err(fail(
                    &format!("{field}.waypoints[0]"),
                    format!("must start at location {:?}", path.from),
                ));
            }
            if (last.0 - to.x).abs() > 1e-9 || (last.1 - to.y).abs() > 1e-9 {
                return Err(fail(&format!("{field}.waypoints"), format!("must end at {:?}", path.to)));
            }
            out_degree.entry(path.from.as_str()).or_default().insert(path.to.as_str());
        }
        // The mission generator must always find a free goal: with n robots,
        // up to n-1 goals are taken, so every location needs n onward paths.
        for loc in &self.locations {
            let degree = out_degree.get(loc.name.as_str()).map_or(0, |s| s.len());
            if degree < self.robots.len() {
                return Err(fail(
                    "paths",
                    format!(
                        "location {:?} has {} outgoing paths, needs >= {}",
                        loc.name,
                        degree,
                        self.robots.len()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Built-in preset parameters (Table-style fleet values plus our layout).
struct PresetShape {
    robots: usize,
    spec: fn(u16) -> RobotSpec,
    /// Locations per row (two facing rows, shuttle traffic between them).
    bays_per_row: usize,
    bay_spacing_m: f64,
    row_half_gap_m: f64,
    ds_m: f64,
    safety_margin_m: f64,
}

/// Resolve a built-in scenario preset. Both presets use a two-row shuttle
/// layout: all paths run between the rows, so corridors from neighboring
/// bays cross each other close to the departure points as well as in the
/// middle band, generating critical sections at a steady rate.
pub fn preset_scenario(name: &str) -> Option<Scenario> {
    let shape = match name {
        "harbor" => PresetShape {
            robots: 7,
            spec: RobotSpec::harbor,
            bays_per_row: 7,
            bay_spacing_m: 36.0,
            row_half_gap_m: 54.0,
            ds_m: 1.2,
            safety_margin_m: 1.2,
        },
        "warehouse" => PresetShape {
            robots: 7,
            spec: RobotSpec::warehouse,
            bays_per_row: 7,
            bay_spacing_m: 6.0,
            row_half_gap_m: 9.0,
            ds_m: 0.5,
            safety_margin_m: 1.0,
        },
        _ => return None,
    };

    let half_span = (shape.bays_per_row - 1) as f64 * shape.bay_spacing_m / 2.0;
    let pad = shape.bay_spacing_m;
    let mut locations = Vec::new();
    for row in 0..2 {
        let y = if row == 0 { shape.row_half_gap_m } else { -shape.row_half_gap_m };
        for i in 0..shape.bays_per_row {
            locations.push(Location {
                name: format!("{}{}", if row == 0 { "N" } else { "S" }, i),
                x: i as f64 * shape.bay_spacing_m - half_span,
                y,
            });
        }
    }

    // Straight paths between every pair of opposite-row bays.
    let mut paths = Vec::new();
    let (north, south) = locations.split_at(shape.bays_per_row);
    for a in north {
        for b in south {
            for (from, to) in [(a, b), (b, a)] {
                paths.push(ScenarioPath {
                    from: from.name.clone(),
                    to: to.name.clone(),
                    waypoints: vec![(from.x, from.y), (to.x, to.y)],
                });
            }
        }
    }

    let scenario = Scenario {
        name: name.to_string(),
        map: MapBounds {
            xmin: -(half_span + pad),
            ymin: -(shape.row_half_gap_m + pad),
            xmax: half_span + pad,
            ymax: shape.row_half_gap_m + pad,
        },
        obstacles: Vec::new(),
        robots: (0..shape.robots).map(|i| (shape.spec)(i as u16)).collect(),
        locations,
        paths,
        t_c_ms: default_t_c_ms(),
        t_r_ms: default_t_r_ms(),
        ds_m: shape.ds_m,
        safety_margin_m: shape.safety_margin_m,
        anticipation_s: None,
        watchdog_virtual_s: default_watchdog_s(),
    };
    debug_assert!(scenario.validate().is_ok(), "{:?}", scenario.validate());
    Some(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_fleet_parameters() {
        let harbor = preset_scenario("harbor").unwrap();
        harbor.validate().unwrap();
        assert_eq!(harbor.robots.len(), 7);
        for spec in &harbor.robots {
            assert_eq!((spec.length_m, spec.width_m), (14.8, 3.0));
            assert_eq!((spec.v_max, spec.a_max), (6.0, 2.0));
        }
        let wh = preset_scenario("warehouse").unwrap();
        wh.validate().unwrap();
        assert_eq!(wh.robots.len(), 7);
        for spec in &wh.robots {
            assert_eq!((spec.length_m, spec.width_m), (2.0, 0.5));
            assert_eq!((spec.v_max, spec.a_max), (2.0, 1.0));
        }
        assert!(preset_scenario("garage").is_none());
    }

    #[test]
    fn unknown_path_location_is_rejected() {
        let mut s = preset_scenario("warehouse").unwrap();
        s.paths[0].to = "nowhere".into();
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("nowhere"), "{err}");
    }

    #[test]
    fn out_of_bounds_waypoint_is_rejected() {
        let mut s = preset_scenario("warehouse").unwrap();
        s.paths[0].waypoints.insert(1, (1e6, 0.0));
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("outside map bounds"), "{err}");
    }

    #[test]
    fn period_mismatch_is_rejected() {
        let mut s = preset_scenario("warehouse").unwrap();
        s.t_c_ms = 105;
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let s = preset_scenario("warehouse").unwrap();
        let text = toml::to_string(&s).unwrap();
        let back: Scenario = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
