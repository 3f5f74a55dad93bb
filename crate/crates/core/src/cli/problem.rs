//! Problem files: TOML with `[building.a]`, `[building.b]`, optional
//! `[excitation]` and `[grid]` sections, SI units.
//!
//! ```toml
//! [building.a]
//! floors = 10
//! mass = 1.29e6
//! stiffness = 4.0e9
//! damping = 1.0e5
//!
//! [building.b]
//! mass = [1.29e6, 1.29e6, 1.29e6]
//! stiffness = [2.0e9, 2.0e9, 2.0e9]
//! damping = [1.0e5, 1.0e5, 1.0e5]
//!
//! [excitation]
//! omega_g = 15.0
//! zeta_g = 0.6
//! s0 = 4.65e-4
//!
//! [grid]
//! min = -20.0
//! max = 20.0
//! step = 0.02
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::spectral::{ExcitationSpec, FrequencyGrid};
use crate::structure::BuildingSpec;

use super::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    building: Buildings,
    excitation: Option<ExcitationSection>,
    grid: Option<GridSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Buildings {
    a: BuildingSection,
    b: BuildingSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PerFloor {
    Uniform(f64),
    Floors(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingSection {
    floors: Option<usize>,
    mass: PerFloor,
    stiffness: PerFloor,
    damping: PerFloor,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExcitationSection {
    omega_g: f64,
    zeta_g: f64,
    s0: f64,
    omega_k: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    min: f64,
    max: f64,
    step: f64,
}

/// A parsed problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefinition {
    pub a: BuildingSpec,
    pub b: BuildingSpec,
    pub excitation: ExcitationSpec,
    pub grid: Option<FrequencyGrid>,
}

fn expand(
    values: PerFloor,
    floors: Option<usize>,
    name: &str,
    what: &str,
) -> Result<Vec<f64>, String> {
    match (values, floors) {
        (PerFloor::Uniform(v), Some(n)) => Ok(vec![v; n]),
        (PerFloor::Uniform(_), None) => {
            Err(format!("building.{name}: scalar {what} needs 'floors'"))
        }
        (PerFloor::Floors(v), Some(n)) if v.len() != n => Err(format!(
            "building.{name}: {what} lists {} floors, 'floors' is {n}",
            v.len()
        )),
        (PerFloor::Floors(v), _) => Ok(v),
    }
}

fn building(section: BuildingSection, name: &str) -> Result<BuildingSpec, String> {
    let floors = section.floors;
    BuildingSpec::new(
        expand(section.mass, floors, name, "mass")?,
        expand(section.stiffness, floors, name, "stiffness")?,
        expand(section.damping, floors, name, "damping")?,
    )
    .map_err(|e| format!("building.{name}: {e}"))
}

pub fn parse_problem(text: &str) -> Result<ProblemDefinition, String> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let excitation = match file.excitation {
        Some(e) => {
            let spec = ExcitationSpec::new(e.omega_g, e.zeta_g, e.s0).map_err(|e| e.to_string())?;
            match e.omega_k {
                Some(k) => spec.with_omega_k(k),
                None => spec,
            }
        }
        None => ExcitationSpec::benchmark(),
    };
    let grid = file
        .grid
        .map(|g| FrequencyGrid::new(g.min, g.max, g.step).map_err(|e| e.to_string()))
        .transpose()?;
    Ok(ProblemDefinition {
        a: building(file.building.a, "a")?,
        b: building(file.building.b, "b")?,
        excitation,
        grid,
    })
}

pub fn load_problem(path: &Path) -> Result<ProblemDefinition, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadProblem {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text).map_err(|message| CliError::BadProblem {
        path: path.to_path_buf(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_listed_floors() {
        let p = parse_problem(
            r#"
[building.a]
floors = 4
mass = 1.0e6
stiffness = 2.0e9
damping = 1.0e5

[building.b]
mass = [1.0, 2.0]
stiffness = [3.0, 4.0]
damping = [0.0, 0.0]
"#,
        )
        .unwrap();
        assert_eq!(p.a.floors(), 4);
        assert_eq!(p.b.masses(), &[1.0, 2.0]);
        assert_eq!(p.excitation, ExcitationSpec::benchmark());
        assert!(p.grid.is_none());
    }

    #[test]
    fn excitation_and_grid_overrides() {
        let p = parse_problem(
            r#"
[building.a]
floors = 1
mass = 1.0
stiffness = 1.0
damping = 1.0
[building.b]
floors = 1
mass = 1.0
stiffness = 1.0
damping = 1.0
[excitation]
omega_g = 10.0
zeta_g = 0.5
s0 = 1e-3
[grid]
min = -5.0
max = 5.0
step = 0.5
"#,
        )
        .unwrap();
        assert_eq!(p.excitation.omega_g(), 10.0);
        assert_eq!(p.grid.unwrap().len(), 21);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let base = "[building.a]\nfloors = 2\nmass = 1.0\nstiffness = 1.0\ndamping = 1.0\n";
        for bad in [
            "".to_string(),
            base.to_string(),
            format!("{base}[building.b]\nmass = 1.0\nstiffness = 1.0\ndamping = 1.0\n"),
            format!("{base}[building.b]\nfloors = 2\nmass = [1.0]\nstiffness = 1.0\ndamping = 1.0\n"),
            format!("{base}[building.b]\nfloors = 2\nmass = -1.0\nstiffness = 1.0\ndamping = 1.0\n"),
            format!("{base}[building.b]\nfloors = 2\nmass = 1.0\nstiffness = 1.0\ndamping = 1.0\ncolour = 3\n"),
        ] {
            assert!(parse_problem(&bad).is_err(), "{bad}");
        }
    }
}
