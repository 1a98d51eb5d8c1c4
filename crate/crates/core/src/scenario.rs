//! Scenario files: link geometry, antennas, lattice and grouping.
//!
//! Positions are given in any right-handed frame with `+z` up. The surface
//! centre, normal and up direction (defaults: origin, `+x`, `+z`) define the
//! surface-local frame every position is converted into at load time.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Antenna, AntennaPattern, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{column_groups, per_element_groups, whole_surface_group, GroupMap, SurfaceFrame, SurfaceGrid, Vec3};
use crate::io;
use crate::scalar::{db_to_ratio, dbm_to_watts};

/// Prefix selecting a bundled scenario instead of a file path.
pub const BUNDLED_PREFIX: &str = "bundled:";

macro_rules! bundled_table {
    ($($name:literal),* $(,)?) => {
        const BUNDLED: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../data/scenarios/", $name, ".json")))),*
        ];
    };
}

bundled_table!(
    "scenario1_A", "scenario1_B", "scenario1_C", "scenario1_D", "scenario1_E",
    "scenario1_F", "scenario1_G", "scenario1_H", "scenario1_I", "scenario1_J",
    "scenario2_pos1", "scenario2_pos2", "scenario2_pos3", "scenario2_pos4",
    "scenario3",
);

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

pub fn bundled_json(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub grid: GridSpec,
    #[serde(default)]
    pub grouping: GroupingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris: Option<MountSpec>,
    pub tx: AntennaSpec,
    pub rx: AntennaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellSpec>,
    pub p_t_dbm: f64,
    pub f_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub d_x_m: f64,
    pub d_y_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    PerElement,
    WholeSurface,
}

/// Either `{"cells_per_group": k}` or `{"scheme": "per-element" | "whole-surface"}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells_per_group: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountSpec {
    pub center_m: [f64; 3],
    #[serde(default = "default_normal")]
    pub normal: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
}

fn default_normal() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSpec {
    pub pos_m: [f64; 3],
    pub pattern: PatternSpec,
    /// Boresight direction; omitted means aimed at the surface centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boresight: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub pattern: PatternSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatternSpec {
    Isotropic {
        #[serde(default)]
        gain_dbi: f64,
    },
    CosinePower { q: f64, gain_dbi: f64 },
}

impl PatternSpec {
    fn build(&self, field: &str) -> Result<AntennaPattern<f64>> {
        let gain_dbi = match self {
            PatternSpec::Isotropic { gain_dbi } | PatternSpec::CosinePower { gain_dbi, .. } => *gain_dbi,
        };
        if !gain_dbi.is_finite() {
            return Err(Error::Validation(format!("{field}.gain_dbi must be finite")));
        }
        let gain = db_to_ratio(gain_dbi);
        match *self {
            PatternSpec::Isotropic { .. } => Ok(AntennaPattern {
                kind: crate::channel::PatternKind::Isotropic,
                gain,
            }),
            PatternSpec::CosinePower { q, .. } => AntennaPattern::cosine_power(q, gain)
                .map_err(|e| Error::Validation(format!("{field}: {e}"))),
        }
    }
}

/// Cell element pattern used when a file does not specify one: `cos θ`.
pub fn default_cell_pattern() -> PatternSpec {
    PatternSpec::CosinePower { q: 0.5, gain_dbi: 0.0 }
}

/// A fully resolved scenario in surface-local coordinates.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub name: String,
    pub scenario: Scenario<f64>,
    pub grid: SurfaceGrid<f64>,
    pub groups: GroupMap,
    pub file: ScenarioFile,
}

fn vec3(v: [f64; 3], field: &str) -> Result<Vec3<f64>> {
    let p = Vec3::from_array(v);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::Validation(format!("{field} must be finite")))
    }
}

impl ScenarioFile {
    pub fn resolve(&self, fallback_name: &str) -> Result<LoadedScenario> {
        let g = &self.grid;
        // periodicities of metres and carriers of hertz; catches mm / GHz slips
        for (field, d) in [("grid.d_x_m", g.d_x_m), ("grid.d_y_m", g.d_y_m)] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::Validation(format!(
                    "{field} = {d} is not a periodicity in metres (expected 0 < d ≤ 1)"
                )));
            }
        }
        if !(self.f_hz >= 1e6 && self.f_hz <= 1e13) {
            return Err(Error::Validation(format!(
                "f_hz = {} is not a carrier in hertz (expected 1e6 ≤ f ≤ 1e13)",
                self.f_hz
            )));
        }
        if !self.p_t_dbm.is_finite() {
            return Err(Error::Validation("p_t_dbm must be finite".into()));
        }
        let grid = SurfaceGrid::new(g.n_rows, g.n_cols, g.d_x_m, g.d_y_m, Vec3::zero())
            .map_err(|e| Error::Validation(format!("grid: {e}")))?;
        let groups = match (self.grouping.cells_per_group, self.grouping.scheme) {
            (Some(k), None) => column_groups(&grid, k).map_err(|e| Error::Validation(format!("grouping: {e}")))?,
            (None, Some(SchemeName::WholeSurface)) => whole_surface_group(&grid),
            (None, Some(SchemeName::PerElement)) | (None, None) => per_element_groups(&grid),
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "grouping: give either cells_per_group or scheme, not both".into(),
                ))
            }
        };
        let frame = match &self.ris {
            None => SurfaceFrame::broadside_x(Vec3::zero()),
            Some(m) => SurfaceFrame::new(
                vec3(m.center_m, "ris.center_m")?,
                vec3(m.normal, "ris.normal")?,
                vec3(m.up, "ris.up")?,
            )
            .map_err(|e| Error::Validation(format!("ris: {e}")))?,
        };
        let antenna = |spec: &AntennaSpec, field: &str| -> Result<Antenna<f64>> {
            let position = frame.point_to_local(vec3(spec.pos_m, &format!("{field}.pos_m"))?);
            let boresight = match spec.boresight {
                Some(b) => Some(frame.direction_to_local(vec3(b, &format!("{field}.boresight"))?)),
                None => None,
            };
            Ok(Antenna {
                position,
                pattern: spec.pattern.build(&format!("{field}.pattern"))?,
                boresight,
            })
        };
        let cell_spec = self.cell.as_ref().map_or_else(default_cell_pattern, |c| c.pattern.clone());
        let scenario = Scenario {
            tx: antenna(&self.tx, "tx")?,
            rx: antenna(&self.rx, "rx")?,
            cell_pattern: cell_spec.build("cell.pattern")?,
            p_t: dbm_to_watts(self.p_t_dbm),
            f: self.f_hz,
        };
        scenario.validate()?;
        // surface-plane antennas are rejected now rather than at first use
        scenario.path_geometry(&grid)?;
        Ok(LoadedScenario {
            name: self.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            scenario,
            grid,
            groups,
            file: self.clone(),
        })
    }
}

pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<LoadedScenario> {
    io::parse_json::<ScenarioFile>(text)?.resolve(fallback_name)
}

/// Loads a scenario file, or a bundled scenario given as `bundled:NAME`.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let display = path.to_string_lossy();
    if let Some(name) = display.strip_prefix(BUNDLED_PREFIX) {
        let text = bundled_json(name).ok_or_else(|| Error::NotFound(format!("bundled scenario {name}")))?;
        return parse_scenario(text, name);
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_scenario(&io::read_text(path)?, &stem)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn bundled(name: &str) -> LoadedScenario {
        parse_scenario(bundled_json(name).unwrap(), name).unwrap()
    }

    #[test]
    fn every_bundled_scenario_loads() {
        assert_eq!(bundled_names().count(), 15);
        for name in bundled_names() {
            let s = bundled(name);
            assert_eq!(s.name, name);
            assert_eq!(s.grid.len(), 2304);
            assert_eq!(s.groups.len(), 192);
            assert_relative_eq!(s.scenario.p_t, 1e-3);
            assert_relative_eq!(s.scenario.tx.pattern.gain, 10.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn corridor_position_four() {
        let s = bundled("scenario2_pos4");
        assert_eq!(s.scenario.rx.position, Vec3::new(2.0, 18.0, 0.0));
        assert_eq!(s.scenario.tx.position, Vec3::new(20.0, 0.0, 0.0));
        assert_eq!(s.scenario.f, 3.9e9);
    }

    #[test]
    fn floor_to_floor_geometry() {
        let s = bundled("scenario3");
        assert_eq!(s.file.tx.pos_m, [20.0, 20.0, 10.0]);
        assert_eq!(s.file.ris.as_ref().unwrap().center_m, [20.0, 2.0, 0.0]);
        // distances are frame independent
        assert_relative_eq!(s.scenario.tx.position.norm(), (18.0f64 * 18.0 + 100.0).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(s.scenario.rx.position.norm(), (400.0f64 + 4.0).sqrt(), epsilon = 1e-12);
        assert!(s.scenario.tx.position.x > 0.0 && s.scenario.rx.position.x > 0.0);
        assert_relative_eq!(s.scenario.tx.position.z, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_tx_position_names_the_field() {
        let text = bundled_json("scenario2_pos1").unwrap().replace("\"pos_m\": [20.0, 0.0, 0.0],", "");
        let err = parse_scenario(&text, "x").unwrap_err();
        match &err {
            Error::Parse { path, .. } => assert_eq!(path, "tx.pos_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_slips_are_validation_errors() {
        let base = bundled_json("scenario2_pos1").unwrap();
        let ghz = base.replace("\"f_hz\": 3.9e9", "\"f_hz\": 3.9");
        assert!(matches!(parse_scenario(&ghz, "x"), Err(Error::Validation(_))));
        let mm = base.replace("\"d_x_m\": 0.0225", "\"d_x_m\": 22.5");
        assert!(matches!(parse_scenario(&mm, "x"), Err(Error::Validation(_))));
        let rows = base.replace("\"cells_per_group\": 12", "\"cells_per_group\": 7");
        assert!(matches!(parse_scenario(&rows, "x"), Err(Error::Validation(_))));
        let q = base.replacen("\"q\": 4.0", "\"q\": -4.0", 1);
        assert!(matches!(parse_scenario(&q, "x"), Err(Error::Validation(_))));
    }

    #[test]
    fn antenna_in_surface_plane_is_rejected() {
        let text = bundled_json("scenario2_pos1").unwrap().replace("[2.0, 3.0, 0.0]", "[0.0, 3.0, 0.0]");
        assert!(matches!(parse_scenario(&text, "x"), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = bundled_json("scenario2_pos1").unwrap().replace("\"p_t_dbm\"", "\"p_tx_dbm\"");
        assert!(matches!(parse_scenario(&text, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn bundled_prefix_and_missing_files() {
        let s = load_scenario(Path::new("bundled:scenario3")).unwrap();
        assert_eq!(s.name, "scenario3");
        assert!(matches!(load_scenario(Path::new("bundled:nope")), Err(Error::NotFound(_))));
        assert!(load_scenario(Path::new("/nonexistent/scenario.json")).unwrap_err().is_io());
    }
}
