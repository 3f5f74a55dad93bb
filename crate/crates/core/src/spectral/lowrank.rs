//! Damper terms as a low-rank update of the uncoupled system.
//!
//! A damper of coefficient `c` between band positions `p` and `q` adds
//! `iωc·u uᵀ` with `u = e_p - e_q`. With `A0 = K - ω²M + iωC` factored once
//! per node, the coupled response follows from the Sherman-Morrison-Woodbury
//! identity
//!
//! `X = z0 - W_S (I + D G_SS)⁻¹ D h_S`, `D = iω diag(c_S)`,
//!
//! where `z0 = A0⁻¹ b`, `W = A0⁻¹ U`, `G = Uᵀ W` and `h = Uᵀ z0` are cached.

use num_complex::Complex64;

use super::banded::BandMatrix;

#[derive(Debug, Clone)]
pub(crate) struct LowRankCache {
    dof: usize,
    floors: usize,
    stride: usize,
    data: Vec<Complex64>,
}

/// Per-node view into the cache.
pub(crate) struct NodeTerms<'a> {
    pub z0: &'a [Complex64],
    /// `W` column of floor `j` at `w[j * dof..(j + 1) * dof]`.
    pub w: &'a [Complex64],
    /// `G` row-major, `floors x floors`.
    pub g: &'a [Complex64],
    pub h: &'a [Complex64],
}

impl LowRankCache {
    pub fn stride(dof: usize, floors: usize) -> usize {
        dof + floors * dof + floors * floors + floors
    }

    pub fn with_capacity(dof: usize, floors: usize, nodes: usize) -> Self {
        let stride = Self::stride(dof, floors);
        Self {
            dof,
            floors,
            stride,
            data: Vec::with_capacity(stride * nodes),
        }
    }

    /// Appends one node given `z0` and the columns of `W`; `pairs` holds the
    /// band positions joined by each floor's damper.
    pub fn push_node(&mut self, z0: &[Complex64], w: &[Complex64], pairs: &[(usize, usize)]) {
        let (dof, floors) = (self.dof, self.floors);
        debug_assert_eq!(z0.len(), dof);
        debug_assert_eq!(w.len(), floors * dof);
        self.data.extend_from_slice(z0);
        self.data.extend_from_slice(w);
        for &(p, q) in pairs {
            for j in 0..floors {
                let col = &w[j * dof..(j + 1) * dof];
                self.data.push(col[p] - col[q]);
            }
        }
        for &(p, q) in pairs {
            self.data.push(z0[p] - z0[q]);
        }
    }

    pub fn node(&self, j: usize) -> NodeTerms<'_> {
        let (dof, floors) = (self.dof, self.floors);
        let base = &self.data[j * self.stride..(j + 1) * self.stride];
        let (z0, rest) = base.split_at(dof);
        let (w, rest) = rest.split_at(floors * dof);
        let (g, h) = rest.split_at(floors * floors);
        NodeTerms { z0, w, g, h }
    }
}

/// Scratch space for the small `|S| x |S|` system.
pub(crate) struct SmallSystem {
    matrix: BandMatrix,
    rhs: Vec<Complex64>,
}

impl SmallSystem {
    pub fn new(size: usize) -> Self {
        let band = size.saturating_sub(1);
        Self {
            matrix: BandMatrix::zeros(size, band, band),
            rhs: vec![Complex64::new(0.0, 0.0); size],
        }
    }

    /// Writes the response into `x` for the floors `active` (0-based) with
    /// coefficients `coeffs`. Returns the pivot-ratio estimate on failure.
    pub fn response(
        &mut self,
        terms: &NodeTerms<'_>,
        omega: f64,
        active: &[usize],
        coeffs: &[f64],
        max_condition: f64,
        x: &mut [Complex64],
    ) -> Result<(), f64> {
        x.copy_from_slice(terms.z0);
        let d = active.len();
        if d == 0 {
            return Ok(());
        }
        let floors = terms.h.len();
        let dof = terms.z0.len();
        self.matrix.clear();
        for (a, &fa) in active.iter().enumerate() {
            let da = Complex64::new(0.0, omega * coeffs[a]);
            for (b, &fb) in active.iter().enumerate() {
                let mut v = da * terms.g[fa * floors + fb];
                if a == b {
                    v += 1.0;
                }
                self.matrix.add(a, b, v);
            }
            self.rhs[a] = da * terms.h[fa];
        }
        self.matrix
            .solve_in_place(&mut self.rhs, max_condition)
            .map_err(|e| e.condition)?;
        for (&fa, &ya) in active.iter().zip(&self.rhs) {
            let col = &terms.w[fa * dof..(fa + 1) * dof];
            for (xk, wk) in x.iter_mut().zip(col) {
                *xk -= wk * ya;
            }
        }
        Ok(())
    }
}
