//! Lumped-mass shear models of two adjacent buildings and the damper coupling.
//!
//! Coordinates of a [`CoupledModel`] follow one fixed ordering: the first
//! `n + m` entries are the floors of the taller building (building 1) from the
//! ground up, the last `n` entries are the floors of the shorter building
//! (building 2). Floors are 1-based when they appear in public APIs.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("a building needs at least one floor")]
    NoFloors,
    #[error("floor {floor}: {what} must be {requirement}, got {value}")]
    InvalidProperty {
        floor: usize,
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("per-floor vectors disagree in length: masses {masses}, stiffnesses {stiffnesses}, dampings {dampings}")]
    LengthMismatch {
        masses: usize,
        stiffnesses: usize,
        dampings: usize,
    },
    #[error("damper coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("damper floor {floor} outside 1..={n}")]
    FloorOutOfRange { floor: usize, n: usize },
    #[error("damper coefficient on floor {floor} is {value}; coefficients must be finite and non-negative")]
    NegativeCoefficient { floor: usize, value: f64 },
    #[error("floor {floor} carries coefficient {value} but is not part of the layout")]
    CoefficientOffLayout { floor: usize, value: f64 },
}

/// Mechanical properties of one shear building, stored per floor.
///
/// `stiffnesses[i]` and `dampings[i]` belong to the story below floor `i + 1`
/// (the columns connecting it to the floor beneath, or to the ground).
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSpec {
    masses: Vec<f64>,
    stiffnesses: Vec<f64>,
    dampings: Vec<f64>,
}

impl BuildingSpec {
    pub fn new(
        masses: Vec<f64>,
        stiffnesses: Vec<f64>,
        dampings: Vec<f64>,
    ) -> Result<Self, StructureError> {
        if masses.len() != stiffnesses.len() || masses.len() != dampings.len() {
            return Err(StructureError::LengthMismatch {
                masses: masses.len(),
                stiffnesses: stiffnesses.len(),
                dampings: dampings.len(),
            });
        }
        if masses.is_empty() {
            return Err(StructureError::NoFloors);
        }
        let check = |values: &[f64], what, strict: bool| {
            for (i, &v) in values.iter().enumerate() {
                let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
                if !ok {
                    return Err(StructureError::InvalidProperty {
                        floor: i + 1,
                        what,
                        requirement: if strict { "positive" } else { "non-negative" },
                        value: v,
                    });
                }
            }
            Ok(())
        };
        check(&masses, "mass", true)?;
        check(&stiffnesses, "stiffness", true)?;
        check(&dampings, "damping", false)?;
        Ok(Self {
            masses,
            stiffnesses,
            dampings,
        })
    }

    /// A building whose floors all share the same properties.
    pub fn uniform(
        floors: usize,
        mass: f64,
        stiffness: f64,
        damping: f64,
    ) -> Result<Self, StructureError> {
        Self::new(
            vec![mass; floors],
            vec![stiffness; floors],
            vec![damping; floors],
        )
    }

    pub fn floors(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn stiffnesses(&self) -> &[f64] {
        &self.stiffnesses
    }

    pub fn dampings(&self) -> &[f64] {
        &self.dampings
    }
}

/// Which input building ended up as building 1 (the taller one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildingOrder {
    /// The first argument of [`assemble_model`] is building 1.
    AsGiven,
    /// The second argument was taller and became building 1.
    Swapped,
}

/// Identifies building 1 or building 2 of a [`CoupledModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Building {
    One,
    Two,
}

impl Building {
    pub fn index(self) -> usize {
        match self {
            Building::One => 1,
            Building::Two => 2,
        }
    }
}

impl fmt::Display for Building {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone)]
pub struct CoupledModel {
    n: usize,
    m: usize,
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    order: BuildingOrder,
    taller: BuildingSpec,
    shorter: BuildingSpec,
}

impl CoupledModel {
    /// Floor count of the shorter building, i.e. the number of damper slots.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Extra floors of the taller building.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Total number of degrees of freedom, `2n + m`.
    pub fn dof(&self) -> usize {
        2 * self.n + self.m
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn building_order(&self) -> BuildingOrder {
        self.order
    }

    pub fn building(&self, b: Building) -> &BuildingSpec {
        match b {
            Building::One => &self.taller,
            Building::Two => &self.shorter,
        }
    }

    pub fn floors(&self, b: Building) -> usize {
        self.building(b).floors()
    }

    /// Zero-based model coordinate of a 1-based floor.
    pub fn coordinate(&self, b: Building, floor: usize) -> usize {
        debug_assert!(floor >= 1 && floor <= self.floors(b));
        match b {
            Building::One => floor - 1,
            Building::Two => self.n + self.m + floor - 1,
        }
    }
}

/// Tridiagonal shear-building stencil: diagonal `v_i + v_{i+1}` (with nothing
/// above the roof), off-diagonal `-v_{i+1}`.
fn shear_block(values: &[f64]) -> DMatrix<f64> {
    let f = values.len();
    let mut out = DMatrix::zeros(f, f);
    for i in 0..f {
        out[(i, i)] = values[i] + values.get(i + 1).copied().unwrap_or(0.0);
        if i + 1 < f {
            out[(i, i + 1)] = -values[i + 1];
            out[(i + 1, i)] = -values[i + 1];
        }
    }
    out
}

/// Assembles M, C and K for two uncoupled shear buildings.
///
/// The taller input becomes building 1; on equal heights `b1` stays first.
pub fn assemble_model(b1: &BuildingSpec, b2: &BuildingSpec) -> CoupledModel {
    let (taller, shorter, order) = if b2.floors() > b1.floors() {
        (b2.clone(), b1.clone(), BuildingOrder::Swapped)
    } else {
        (b1.clone(), b2.clone(), BuildingOrder::AsGiven)
    };
    let n = shorter.floors();
    let m = taller.floors() - n;
    let dof = 2 * n + m;
    let split = n + m;

    let mut mass = DMatrix::zeros(dof, dof);
    for (i, &v) in taller.masses().iter().chain(shorter.masses()).enumerate() {
        mass[(i, i)] = v;
    }
    let mut stiffness = DMatrix::zeros(dof, dof);
    let mut damping = DMatrix::zeros(dof, dof);
    stiffness
        .view_mut((0, 0), (split, split))
        .copy_from(&shear_block(taller.stiffnesses()));
    stiffness
        .view_mut((split, split), (n, n))
        .copy_from(&shear_block(shorter.stiffnesses()));
    damping
        .view_mut((0, 0), (split, split))
        .copy_from(&shear_block(taller.dampings()));
    damping
        .view_mut((split, split), (n, n))
        .copy_from(&shear_block(shorter.dampings()));

    CoupledModel {
        n,
        m,
        mass,
        damping,
        stiffness,
        order,
        taller,
        shorter,
    }
}

/// Positions of the inserted dampers and their viscous coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DamperLayout {
    active: BTreeSet<usize>,
    coefficients: Vec<f64>,
}

impl DamperLayout {
    /// No dampers on any of the `n` floors.
    pub fn empty(n: usize) -> Self {
        Self {
            active: BTreeSet::new(),
            coefficients: vec![0.0; n],
        }
    }

    /// Builds a layout from a full coefficient vector (length `n`) and the set
    /// of floors that carry a damper. Active floors may hold a zero coefficient.
    pub fn new(
        active_floors: impl IntoIterator<Item = usize>,
        coefficients: Vec<f64>,
    ) -> Result<Self, StructureError> {
        let n = coefficients.len();
        let active: BTreeSet<usize> = active_floors.into_iter().collect();
        if let Some(&floor) = active.iter().find(|&&f| f == 0 || f > n) {
            return Err(StructureError::FloorOutOfRange { floor, n });
        }
        for (i, &c) in coefficients.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                return Err(StructureError::NegativeCoefficient {
                    floor: i + 1,
                    value: c,
                });
            }
            if c != 0.0 && !active.contains(&(i + 1)) {
                return Err(StructureError::CoefficientOffLayout {
                    floor: i + 1,
                    value: c,
                });
            }
        }
        Ok(Self {
            active,
            coefficients,
        })
    }

    /// Layout whose active floors are exactly the nonzero coefficients.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self, StructureError> {
        let active: Vec<usize> = coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, _)| i + 1)
            .collect();
        Self::new(active, coefficients)
    }

    /// Places `values[j]` on the j-th smallest floor of `floors`.
    pub fn from_active_values(
        n: usize,
        floors: &BTreeSet<usize>,
        values: &[f64],
    ) -> Result<Self, StructureError> {
        if values.len() != floors.len() {
            return Err(StructureError::DimensionMismatch {
                expected: floors.len(),
                got: values.len(),
            });
        }
        let mut coefficients = vec![0.0; n];
        for (&floor, &v) in floors.iter().zip(values) {
            if floor == 0 || floor > n {
                return Err(StructureError::FloorOutOfRange { floor, n });
            }
            coefficients[floor - 1] = v;
        }
        Self::new(floors.iter().copied(), coefficients)
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn active_floors(&self) -> &BTreeSet<usize> {
        &self.active
    }

    /// Number of inserted dampers.
    pub fn damper_count(&self) -> usize {
        self.active.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// The damper matrix `C_d` coupling floor `i` of building 1 with floor `i` of
/// building 2 through coefficient `c_d[i]`.
pub fn assemble_damper_matrix(
    layout: &DamperLayout,
    n: usize,
    m: usize,
) -> Result<DMatrix<f64>, StructureError> {
    if layout.n() != n {
        return Err(StructureError::DimensionMismatch {
            expected: n,
            got: layout.n(),
        });
    }
    let dof = 2 * n + m;
    let mut cd = DMatrix::zeros(dof, dof);
    for (i, &c) in layout.coefficients().iter().enumerate() {
        let j = n + m + i;
        cd[(i, i)] = c;
        cd[(j, j)] = c;
        cd[(i, j)] = -c;
        cd[(j, i)] = -c;
    }
    Ok(cd)
}
