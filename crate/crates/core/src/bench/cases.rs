use std::fmt;
use std::str::FromStr;

use crate::spectral::ExcitationSpec;
use crate::structure::{assemble_model, BuildingSpec, CoupledModel};

use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaterialSet {
    I,
    II,
    III,
}

/// Per-floor mass (kg), stiffness (N/m) and damping (N·s/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorProperties {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl MaterialSet {
    pub const ALL: [MaterialSet; 3] = [MaterialSet::I, MaterialSet::II, MaterialSet::III];

    pub fn as_str(self) -> &'static str {
        match self {
            MaterialSet::I => "I",
            MaterialSet::II => "II",
            MaterialSet::III => "III",
        }
    }

    pub fn index(self) -> usize {
        match self {
            MaterialSet::I => 1,
            MaterialSet::II => 2,
            MaterialSet::III => 3,
        }
    }

    /// Properties of building a and building b.
    pub fn properties(self) -> (FloorProperties, FloorProperties) {
        let p = |mass, stiffness, damping| FloorProperties {
            mass,
            stiffness,
            damping,
        };
        match self {
            MaterialSet::I => (p(1.29e6, 4.00e9, 1.00e5), p(1.29e6, 2.00e9, 1.00e5)),
            MaterialSet::II => (p(2.60e6, 1.20e10, 2.40e6), p(1.60e6, 1.20e10, 2.40e6)),
            MaterialSet::III => (p(4.80e6, 1.60e10, 1.20e6), p(4.00e6, 2.30e10, 1.20e6)),
        }
    }
}

impl fmt::Display for MaterialSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaterialSet {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let t = t
            .strip_prefix("set")
            .unwrap_or(&t)
            .trim_start_matches(['_', '-', ' ']);
        match t {
            "1" | "i" => Ok(MaterialSet::I),
            "2" | "ii" => Ok(MaterialSet::II),
            "3" | "iii" => Ok(MaterialSet::III),
            _ => Err(BenchError::UnknownCase(s.to_string())),
        }
    }
}

/// Floors of building a and building b for height cases 1 to 5.
pub const HEIGHTS: [(usize, usize); 5] = [(10, 10), (10, 20), (20, 10), (10, 40), (40, 10)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProblemCase {
    pub material: MaterialSet,
    /// 1 to 5.
    pub height_case: u8,
}

impl ProblemCase {
    pub fn new(material: MaterialSet, height_case: u8) -> Result<Self, BenchError> {
        if !(1..=5).contains(&height_case) {
            return Err(BenchError::UnknownCase(format!("{material}:{height_case}")));
        }
        Ok(Self {
            material,
            height_case,
        })
    }

    /// The 15 material/height combinations, material-major.
    pub fn all() -> Vec<ProblemCase> {
        MaterialSet::ALL
            .iter()
            .flat_map(|&material| {
                (1..=5).map(move |height_case| ProblemCase {
                    material,
                    height_case,
                })
            })
            .collect()
    }

    pub fn floors(&self) -> (usize, usize) {
        HEIGHTS[self.height_case as usize - 1]
    }

    pub fn buildings(&self) -> (BuildingSpec, BuildingSpec) {
        let (fa, fb) = self.floors();
        let (a, b) = self.material.properties();
        (
            BuildingSpec::uniform(fa, a.mass, a.stiffness, a.damping)
                .expect("tabulated properties are valid"),
            BuildingSpec::uniform(fb, b.mass, b.stiffness, b.damping)
                .expect("tabulated properties are valid"),
        )
    }

    pub fn model(&self) -> CoupledModel {
        let (a, b) = self.buildings();
        assemble_model(&a, &b)
    }

    pub fn excitation(&self) -> ExcitationSpec {
        ExcitationSpec::benchmark()
    }

    /// Number of floors that can carry a damper.
    pub fn max_dampers(&self) -> usize {
        let (fa, fb) = self.floors();
        fa.min(fb)
    }
}

impl fmt::Display for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "set{}:{}", self.material.index(), self.height_case)
    }
}

/// Accepts `set1:1`, `I:1`, `1:1` and similar.
impl FromStr for ProblemCase {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (set, height) = s
            .split_once([':', '/'])
            .ok_or_else(|| BenchError::UnknownCase(s.to_string()))?;
        let material: MaterialSet = set
            .parse()
            .map_err(|_| BenchError::UnknownCase(s.to_string()))?;
        let height: u8 = height
            .trim()
            .parse()
            .map_err(|_| BenchError::UnknownCase(s.to_string()))?;
        ProblemCase::new(material, height).map_err(|_| BenchError::UnknownCase(s.to_string()))
    }
}
