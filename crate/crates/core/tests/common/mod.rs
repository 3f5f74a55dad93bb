#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use retrofit::spectral::{kanai_tajimi, ExcitationSpec, FrequencyGrid};
use retrofit::structure::BuildingSpec;

/// Dense response of one building on its own, independent of the coupled
/// assembly and the banded solver.
pub fn standalone_sigmas(
    spec: &BuildingSpec,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
) -> Vec<f64> {
    let f = spec.floors();
    let (m, k, c) = (spec.masses(), spec.stiffnesses(), spec.dampings());
    let stencil = |v: &[f64], r: usize, col: usize| {
        if r == col {
            v[r] + v.get(r + 1).copied().unwrap_or(0.0)
        } else if col == r + 1 {
            -v[col]
        } else if r == col + 1 {
            -v[r]
        } else {
            0.0
        }
    };
    let mut acc = vec![0.0; f];
    for j in 0..grid.len() {
        let w = grid.point(j);
        let a = DMatrix::from_fn(f, f, |r, col| {
            let mass = if r == col { m[r] } else { 0.0 };
            Complex64::new(stencil(k, r, col) - w * w * mass, w * stencil(c, r, col))
        });
        let amp = kanai_tajimi(w, exc).sqrt();
        let rhs = DVector::from_iterator(f, m.iter().map(|mi| Complex64::new(-mi * amp, 0.0)));
        let x = a.lu().solve(&rhs).expect("standalone system is regular");
        for (s, xi) in acc.iter_mut().zip(x.iter()) {
            *s += grid.weight(j) * xi.norm_sqr();
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Largest `(σ_i - σ_{i-1})²` of one building.
pub fn max_drift(sigmas: &[f64]) -> f64 {
    let mut below = 0.0;
    let mut best = 0.0f64;
    for &s in sigmas {
        best = best.max((s - below).powi(2));
        below = s;
    }
    best
}

/// Uncoupled objective: the larger of the two standalone maxima.
pub fn standalone_objective(a: &BuildingSpec, b: &BuildingSpec) -> f64 {
    let exc = ExcitationSpec::benchmark();
    let grid = FrequencyGrid::default();
    max_drift(&standalone_sigmas(a, &exc, &grid)).max(max_drift(&standalone_sigmas(b, &exc, &grid)))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
