//! Frequency-domain response of the coupled buildings and the maximum
//! inter-story drift objective.
//!
//! The ground acceleration is a Kanai-Tajimi filtered white noise. For every
//! grid frequency the complex system `(K - ω²M + iω(C + C_d)) X = -M E √S_g(ω)`
//! is solved directly, and displacement standard deviations are obtained from
//! a trapezoidal integral of `|X_i(ω)|²`.

mod banded;
mod lowrank;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::structure::{
    assemble_damper_matrix, Building, CoupledModel, DamperLayout, StructureError,
};
use banded::{cabs1, BandMatrix};
use lowrank::{LowRankCache, SmallSystem};

/// Pivot-ratio condition estimate above which a solve is reported as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid excitation: {0}")]
    InvalidExcitation(&'static str),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),
    #[error("damper matrix is {got}x{got}, model has {expected} degrees of freedom")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("response system is numerically singular at omega = {omega} (condition estimate {condition:e})")]
    Singular { omega: f64, condition: f64 },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Kanai-Tajimi ground acceleration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationSpec {
    omega_g: f64,
    zeta_g: f64,
    s0: f64,
    omega_k: Option<f64>,
}

impl ExcitationSpec {
    pub fn new(omega_g: f64, zeta_g: f64, s0: f64) -> Result<Self, SpectralError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(omega_g) {
            return Err(SpectralError::InvalidExcitation("omega_g must be positive"));
        }
        if !positive(zeta_g) {
            return Err(SpectralError::InvalidExcitation("zeta_g must be positive"));
        }
        if !positive(s0) {
            return Err(SpectralError::InvalidExcitation("S0 must be positive"));
        }
        Ok(Self {
            omega_g,
            zeta_g,
            s0,
            omega_k: None,
        })
    }

    /// Ground parameters of the benchmark study: ω_g = 15 rad/s, ζ_g = 0.6,
    /// S_0 = 4.65e-4 m²/(rad·s³). ω_k = 1.5 rad/s is kept as metadata only.
    pub fn benchmark() -> Self {
        Self {
            omega_g: 15.0,
            zeta_g: 0.6,
            s0: 4.65e-4,
            omega_k: Some(1.5),
        }
    }

    /// Attaches the (unused) ω_k parameter some ground-motion tables quote.
    pub fn with_omega_k(mut self, omega_k: f64) -> Self {
        self.omega_k = Some(omega_k);
        self
    }

    pub fn omega_g(&self) -> f64 {
        self.omega_g
    }

    pub fn zeta_g(&self) -> f64 {
        self.zeta_g
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn omega_k(&self) -> Option<f64> {
        self.omega_k
    }
}

/// Spectral density of the ground acceleration at `omega`.
pub fn kanai_tajimi(omega: f64, exc: &ExcitationSpec) -> f64 {
    let r2 = (omega / exc.omega_g).powi(2);
    let damping = 4.0 * exc.zeta_g * exc.zeta_g * r2;
    exc.s0 * (1.0 + damping) / ((1.0 - r2).powi(2) + damping)
}

/// Uniform integration grid `omega_min, omega_min + step, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    step: f64,
}

impl Default for FrequencyGrid {
    /// ±20 rad/s with a 0.02 rad/s step (2001 points).
    fn default() -> Self {
        Self {
            omega_min: -20.0,
            omega_max: 20.0,
            step: 0.02,
        }
    }
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, step: f64) -> Result<Self, SpectralError> {
        if !(omega_min.is_finite() && omega_max.is_finite() && omega_min < omega_max) {
            return Err(SpectralError::InvalidGrid(
                "omega_min must be below omega_max",
            ));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(SpectralError::InvalidGrid("step must be positive"));
        }
        if ((omega_max - omega_min) / step).round() < 1.0 {
            return Err(SpectralError::InvalidGrid("step exceeds the grid span"));
        }
        Ok(Self {
            omega_min,
            omega_max,
            step,
        })
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        ((self.omega_max - self.omega_min) / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        self.omega_min + j as f64 * self.step
    }

    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.len() {
            0.5 * self.step
        } else {
            self.step
        }
    }

    /// Trapezoidal rule over the grid, summed in index order.
    pub fn trapezoid(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        (0..self.len())
            .map(|j| self.weight(j) * f(self.point(j)))
            .sum()
    }

    /// Index of ω = 0 when the grid is symmetric about the origin.
    fn symmetric_center(&self) -> Option<usize> {
        let len = self.len();
        if len % 2 == 0 {
            return None;
        }
        let mid = len / 2;
        let symmetric = (self.omega_min + self.omega_max).abs() <= 1e-12 * self.omega_max.abs()
            && self.point(mid).abs() <= 1e-9 * self.step;
        symmetric.then_some(mid)
    }

    /// Quadrature nodes `(ω, weight)`. Symmetric grids are folded onto
    /// `ω ≥ 0` with doubled weights, which is exact for even integrands.
    pub(crate) fn nodes(&self, allow_fold: bool) -> Vec<(f64, f64)> {
        match self.symmetric_center().filter(|_| allow_fold) {
            Some(mid) => (mid..self.len())
                .map(|j| {
                    let w = if j == mid {
                        self.weight(j)
                    } else {
                        2.0 * self.weight(j)
                    };
                    (if j == mid { 0.0 } else { self.point(j) }, w)
                })
                .collect(),
            None => (0..self.len())
                .map(|j| (self.point(j), self.weight(j)))
                .collect(),
        }
    }
}

fn system_matrix(model: &CoupledModel, cd: &DMatrix<f64>, omega: f64) -> DMatrix<Complex64> {
    let dof = model.dof();
    DMatrix::from_fn(dof, dof, |r, c| {
        let real = model.stiffness()[(r, c)] - omega * omega * model.mass()[(r, c)];
        let imag = omega * (model.damping()[(r, c)] + cd[(r, c)]);
        Complex64::new(real, imag)
    })
}

fn check_cd(model: &CoupledModel, cd: &DMatrix<f64>) -> Result<(), SpectralError> {
    if cd.nrows() != model.dof() || cd.ncols() != model.dof() {
        return Err(SpectralError::DimensionMismatch {
            expected: model.dof(),
            got: cd.nrows(),
        });
    }
    Ok(())
}

/// Complex displacement amplitudes `X(ω)` by a dense LU solve.
pub fn frequency_response(
    model: &CoupledModel,
    cd: &DMatrix<f64>,
    omega: f64,
    exc: &ExcitationSpec,
) -> Result<Vec<Complex64>, SpectralError> {
    check_cd(model, cd)?;
    let lu = system_matrix(model, cd, omega).lu();
    let diag = lu.u().diagonal();
    let max = diag.iter().map(|z| cabs1(*z)).fold(0.0, f64::max);
    let min = diag.iter().map(|z| cabs1(*z)).fold(f64::INFINITY, f64::min);
    let condition = max / min;
    if !(condition <= MAX_CONDITION) {
        return Err(SpectralError::Singular { omega, condition });
    }
    let amplitude = kanai_tajimi(omega, exc).sqrt();
    let rhs = DVector::from_iterator(
        model.dof(),
        model
            .mass()
            .row_iter()
            .map(|row| Complex64::new(-row.sum() * amplitude, 0.0)),
    );
    let x = lu
        .solve(&rhs)
        .ok_or(SpectralError::Singular { omega, condition })?;
    Ok(x.iter().copied().collect())
}

/// Per-coordinate displacement standard deviations for an arbitrary damper
/// matrix, integrating the full grid with dense solves.
pub fn floor_sigmas(
    model: &CoupledModel,
    cd: &DMatrix<f64>,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>, SpectralError> {
    check_cd(model, cd)?;
    let mut acc = vec![0.0; model.dof()];
    for j in 0..grid.len() {
        let omega = grid.point(j);
        let w = grid.weight(j);
        let x = frequency_response(model, cd, omega, exc)?;
        for (a, xi) in acc.iter_mut().zip(&x) {
            *a += w * xi.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Standard deviations, inter-story drifts and the maximum drift of one
/// damper layout. Vectors are in model coordinate order.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEvaluation {
    pub sigma: Vec<f64>,
    pub drifts: Vec<f64>,
    pub objective: f64,
    pub argmax: (Building, usize),
    split: usize,
}

impl DriftEvaluation {
    fn from_sigmas(model: &CoupledModel, sigma: Vec<f64>) -> Self {
        let split = model.n() + model.m();
        let mut drifts = Vec::with_capacity(sigma.len());
        for block in [&sigma[..split], &sigma[split..]] {
            let mut below = 0.0;
            for &s in block {
                drifts.push((s - below).powi(2));
                below = s;
            }
        }
        let mut best = 0;
        for (i, &d) in drifts.iter().enumerate() {
            if d > drifts[best] {
                best = i;
            }
        }
        let argmax = if best < split {
            (Building::One, best + 1)
        } else {
            (Building::Two, best - split + 1)
        };
        Self {
            objective: drifts[best],
            sigma,
            drifts,
            argmax,
            split,
        }
    }

    pub fn sigma_of(&self, b: Building, floor: usize) -> f64 {
        self.sigma[self.index(b, floor)]
    }

    pub fn drift_of(&self, b: Building, floor: usize) -> f64 {
        self.drifts[self.index(b, floor)]
    }

    pub fn drifts_of(&self, b: Building) -> &[f64] {
        match b {
            Building::One => &self.drifts[..self.split],
            Building::Two => &self.drifts[self.split..],
        }
    }

    pub fn sigmas_of(&self, b: Building) -> &[f64] {
        match b {
            Building::One => &self.sigma[..self.split],
            Building::Two => &self.sigma[self.split..],
        }
    }

    fn index(&self, b: Building, floor: usize) -> usize {
        match b {
            Building::One => floor - 1,
            Building::Two => self.split + floor - 1,
        }
    }
}

/// Repeated evaluation of the drift objective for one model, excitation and
/// grid.
///
/// Coordinates are reordered so floor `i` of both buildings sit next to each
/// other; the system matrix then has two sub- and super-diagonals and each
/// grid point costs one band LU instead of a dense one. Symmetric grids are
/// folded onto `ω ≥ 0` since `X(-ω) = conj(X(ω))`.
#[derive(Debug, Clone)]
pub struct DriftEvaluator {
    model: CoupledModel,
    /// band position -> model coordinate
    order: Vec<usize>,
    mass: Vec<f64>,
    stiffness: Vec<(usize, usize, f64)>,
    damping: Vec<(usize, usize, f64)>,
    /// band positions of (building 1, building 2) floor i
    pairs: Vec<(usize, usize)>,
    /// (ω, trapezoid weight × S_g(ω))
    nodes: Vec<(f64, f64)>,
    /// Band storage of K - ω²M + iωC for every node, when small enough.
    static_bands: Option<Vec<Complex64>>,
    low_rank: Option<LowRankCache>,
    /// Layouts with at most this many nonzero coefficients use `low_rank`.
    low_rank_limit: usize,
}

const BAND: usize = 2;
const MAX_CACHED_ENTRIES: usize = 1 << 23;

/// Largest damper count for which the cached route is cheaper than a band
/// factorization per node (rough operation-count model, calibrated on the
/// benchmark cases).
fn default_low_rank_limit(dof: usize, floors: usize) -> usize {
    let dof = dof as f64;
    (0..=floors)
        .take_while(|&d| {
            let d = d as f64;
            2.9 * d * dof + 8.0 * d * d < 48.0 * dof
        })
        .last()
        .unwrap_or(0)
}

impl DriftEvaluator {
    pub fn new(model: &CoupledModel, exc: &ExcitationSpec, grid: &FrequencyGrid) -> Self {
        Self::with_folding(model, exc, grid, true)
    }

    /// Same as [`DriftEvaluator::new`] but integrates every grid point.
    pub fn unfolded(model: &CoupledModel, exc: &ExcitationSpec, grid: &FrequencyGrid) -> Self {
        Self::with_folding(model, exc, grid, false)
    }

    fn with_folding(
        model: &CoupledModel,
        exc: &ExcitationSpec,
        grid: &FrequencyGrid,
        fold: bool,
    ) -> Self {
        let (n, m) = (model.n(), model.m());
        let dof = model.dof();
        let mut position = vec![0; dof];
        for i in 0..n {
            position[i] = 2 * i;
            position[n + m + i] = 2 * i + 1;
        }
        for j in n..n + m {
            position[j] = n + j;
        }
        let mut order = vec![0; dof];
        for (coord, &pos) in position.iter().enumerate() {
            order[pos] = coord;
        }

        let entries = |mat: &DMatrix<f64>| {
            let mut out = Vec::new();
            for r in 0..dof {
                for c in 0..dof {
                    let v = mat[(r, c)];
                    if v != 0.0 {
                        let (pr, pc) = (position[r], position[c]);
                        assert!(pr.abs_diff(pc) <= BAND, "structural matrix outside band");
                        out.push((pr, pc, v));
                    }
                }
            }
            out
        };

        let nodes = grid
            .nodes(fold)
            .into_iter()
            .map(|(omega, w)| (omega, w * kanai_tajimi(omega, exc)))
            .collect();

        let mut evaluator = Self {
            mass: order.iter().map(|&c| model.mass()[(c, c)]).collect(),
            stiffness: entries(model.stiffness()),
            damping: entries(model.damping()),
            pairs: (0..n).map(|i| (position[i], position[n + m + i])).collect(),
            order,
            nodes,
            model: model.clone(),
            static_bands: None,
            low_rank: None,
            low_rank_limit: 0,
        };
        let mut band = BandMatrix::zeros(dof, BAND, BAND);
        let per_node = band.storage().len();
        if per_node * evaluator.nodes.len() <= MAX_CACHED_ENTRIES {
            let mut cache = Vec::with_capacity(per_node * evaluator.nodes.len());
            for &(omega, _) in &evaluator.nodes {
                evaluator.fill_static(&mut band, omega);
                cache.extend_from_slice(band.storage());
            }
            evaluator.static_bands = Some(cache);
        }
        let stride = LowRankCache::stride(dof, n);
        if stride * evaluator.nodes.len() <= MAX_CACHED_ENTRIES {
            evaluator.low_rank = evaluator.build_low_rank(&mut band);
            evaluator.low_rank_limit = default_low_rank_limit(dof, n);
        }
        evaluator
    }

    fn build_low_rank(&self, band: &mut BandMatrix) -> Option<LowRankCache> {
        let dof = self.model.dof();
        let n = self.pairs.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut cache = LowRankCache::with_capacity(dof, n, self.nodes.len());
        let mut z0 = vec![zero; dof];
        let mut w = vec![zero; n * dof];
        for &(omega, _) in &self.nodes {
            self.fill_static(band, omega);
            let original = band.storage().to_vec();
            for (r, &mass) in z0.iter_mut().zip(&self.mass) {
                *r = Complex64::new(-mass, 0.0);
            }
            band.solve_in_place(&mut z0, MAX_CONDITION).ok()?;
            for (j, &(p, q)) in self.pairs.iter().enumerate() {
                let col = &mut w[j * dof..(j + 1) * dof];
                col.fill(zero);
                col[p] = Complex64::new(1.0, 0.0);
                col[q] = Complex64::new(-1.0, 0.0);
                band.load(&original);
                band.solve_in_place(col, MAX_CONDITION).ok()?;
            }
            cache.push_node(&z0, &w, &self.pairs);
        }
        Some(cache)
    }

    /// Overrides the number of nonzero coefficients up to which the cached
    /// low-rank route is used (0 disables it for every nonempty layout).
    pub fn with_low_rank_limit(mut self, limit: usize) -> Self {
        self.low_rank_limit = limit;
        self
    }

    fn fill_static(&self, band: &mut BandMatrix, omega: f64) {
        band.clear();
        for (p, &mass) in self.mass.iter().enumerate() {
            band.add(p, p, Complex64::new(-omega * omega * mass, 0.0));
        }
        for &(r, c, v) in &self.stiffness {
            band.add(r, c, Complex64::new(v, 0.0));
        }
        for &(r, c, v) in &self.damping {
            band.add(r, c, Complex64::new(0.0, omega * v));
        }
    }

    pub fn model(&self) -> &CoupledModel {
        &self.model
    }

    /// Number of complex solves per evaluation.
    pub fn solves_per_evaluation(&self) -> usize {
        self.nodes.len()
    }

    /// Displacement standard deviations in model coordinate order.
    pub fn sigmas(&self, layout: &DamperLayout) -> Result<Vec<f64>, SpectralError> {
        if layout.n() != self.model.n() {
            return Err(StructureError::DimensionMismatch {
                expected: self.model.n(),
                got: layout.n(),
            }
            .into());
        }
        let dof = self.model.dof();
        let coeffs = layout.coefficients();
        let active: Vec<usize> = (0..coeffs.len()).filter(|&i| coeffs[i] != 0.0).collect();
        if let Some(cache) = &self.low_rank {
            if active.len() <= self.low_rank_limit {
                return self.sigmas_low_rank(cache, &active, coeffs);
            }
        }
        let mut band = BandMatrix::zeros(dof, BAND, BAND);
        let mut rhs = vec![Complex64::new(0.0, 0.0); dof];
        let mut acc = vec![0.0; dof];

        let per_node = band.storage().len();
        for (j, &(omega, weight)) in self.nodes.iter().enumerate() {
            match &self.static_bands {
                Some(cache) => band.load(&cache[j * per_node..(j + 1) * per_node]),
                None => self.fill_static(&mut band, omega),
            }
            for (&(p, q), &cd) in self.pairs.iter().zip(coeffs) {
                let z = Complex64::new(0.0, omega * cd);
                band.add(p, p, z);
                band.add(q, q, z);
                band.add(p, q, -z);
                band.add(q, p, -z);
            }
            for (r, &mass) in rhs.iter_mut().zip(&self.mass) {
                *r = Complex64::new(-mass, 0.0);
            }
            band.solve_in_place(&mut rhs, MAX_CONDITION)
                .map_err(|e| SpectralError::Singular {
                    omega,
                    condition: e.condition,
                })?;
            for (a, x) in acc.iter_mut().zip(&rhs) {
                *a += weight * x.norm_sqr();
            }
        }

        let mut sigma = vec![0.0; dof];
        for (pos, &coord) in self.order.iter().enumerate() {
            sigma[coord] = acc[pos].sqrt();
        }
        Ok(sigma)
    }

    fn sigmas_low_rank(
        &self,
        cache: &LowRankCache,
        active: &[usize],
        coeffs: &[f64],
    ) -> Result<Vec<f64>, SpectralError> {
        let dof = self.model.dof();
        let values: Vec<f64> = active.iter().map(|&i| coeffs[i]).collect();
        let mut system = SmallSystem::new(active.len());
        let mut x = vec![Complex64::new(0.0, 0.0); dof];
        let mut acc = vec![0.0; dof];
        for (j, &(omega, weight)) in self.nodes.iter().enumerate() {
            system
                .response(
                    &cache.node(j),
                    omega,
                    active,
                    &values,
                    MAX_CONDITION,
                    &mut x,
                )
                .map_err(|condition| SpectralError::Singular { omega, condition })?;
            for (a, xk) in acc.iter_mut().zip(&x) {
                *a += weight * xk.norm_sqr();
            }
        }
        let mut sigma = vec![0.0; dof];
        for (pos, &coord) in self.order.iter().enumerate() {
            sigma[coord] = acc[pos].sqrt();
        }
        Ok(sigma)
    }

    pub fn evaluate(&self, layout: &DamperLayout) -> Result<DriftEvaluation, SpectralError> {
        let sigma = self.sigmas(layout)?;
        Ok(DriftEvaluation::from_sigmas(&self.model, sigma))
    }
}

/// One evaluation of the maximum inter-story drift for a damper layout.
pub fn evaluate_objective(
    model: &CoupledModel,
    layout: &DamperLayout,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
) -> Result<DriftEvaluation, SpectralError> {
    DriftEvaluator::new(model, exc, grid).evaluate(layout)
}

/// Drift evaluation through the dense route; slower, used for cross-checks.
pub fn evaluate_objective_dense(
    model: &CoupledModel,
    layout: &DamperLayout,
    exc: &ExcitationSpec,
    grid: &FrequencyGrid,
) -> Result<DriftEvaluation, SpectralError> {
    let cd = assemble_damper_matrix(layout, model.n(), model.m())?;
    let sigma = floor_sigmas(model, &cd, exc, grid)?;
    Ok(DriftEvaluation::from_sigmas(model, sigma))
}
