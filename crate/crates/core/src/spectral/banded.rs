//! Gaussian elimination with partial pivoting for complex band matrices.
//!
//! Storage is row-major with `kl` extra columns on the right of every row to
//! hold the fill-in caused by row interchanges (the upper bandwidth of `U` is
//! `kl + ku`).

use num_complex::Complex64;

/// |re| + |im|, the pivot magnitude used by LAPACK's complex routines.
#[inline]
pub(crate) fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

/// Outcome of a failed factorization: the pivot-ratio condition estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingularPivot {
    pub condition: f64,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    pub fn clear(&mut self) {
        self.data.fill(Complex64::new(0.0, 0.0));
    }

    /// Raw storage, `n * (2 kl + ku + 1)` entries.
    pub fn storage(&self) -> &[Complex64] {
        &self.data
    }

    pub fn load(&mut self, storage: &[Complex64]) {
        self.data.copy_from_slice(storage);
    }

    #[inline]
    fn offset(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.kl + self.ku);
        row * self.width + (col + self.kl - row)
    }

    /// Adds to an entry inside the original `(kl, ku)` band.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(col + self.kl >= row && col <= row + self.ku);
        let k = self.offset(row, col);
        self.data[k] += value;
    }

    /// Overwrites `self` with its LU factors and `rhs` with the solution of
    /// the original system. Fails if a pivot vanishes or the ratio of the
    /// largest to the smallest pivot magnitude exceeds `max_condition`.
    pub fn solve_in_place(
        &mut self,
        rhs: &mut [Complex64],
        max_condition: f64,
    ) -> Result<(), SingularPivot> {
        let n = self.n;
        let (kl, ku, width) = (self.kl, self.ku, self.width);
        assert_eq!(rhs.len(), n);
        let mut pivot_max = 0.0_f64;
        let mut pivot_min = f64::INFINITY;
        // Entry (row, col) lives at row * (width - 1) + col + kl.
        let stride = width - 1;
        let data = &mut self.data[..];

        for r in 0..n {
            let last_row = (r + kl).min(n - 1);
            let span = (r + kl + ku).min(n - 1) - r + 1;
            let diag = r * width + kl;

            let mut p = r;
            let mut best = cabs1(data[diag]);
            for row in r + 1..=last_row {
                let v = cabs1(data[row * stride + r + kl]);
                if v > best {
                    best = v;
                    p = row;
                }
            }
            pivot_max = pivot_max.max(best);
            pivot_min = pivot_min.min(best);
            if best == 0.0 {
                return Err(SingularPivot {
                    condition: f64::INFINITY,
                });
            }
            if p != r {
                let other = p * stride + r + kl;
                let (head, tail) = data.split_at_mut(other);
                head[diag..diag + span].swap_with_slice(&mut tail[..span]);
                rhs.swap(r, p);
            }

            let inv = 1.0 / data[diag];
            let pivot_rhs = rhs[r];
            for row in r + 1..=last_row {
                let start = row * stride + r + kl;
                let (head, tail) = data.split_at_mut(start);
                let pivot_row = &head[diag..diag + span];
                let target = &mut tail[..span];
                let l = target[0] * inv;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                target[0] = l;
                for (t, u) in target[1..].iter_mut().zip(&pivot_row[1..]) {
                    *t -= l * u;
                }
                rhs[row] -= l * pivot_rhs;
            }
        }

        let condition = pivot_max / pivot_min;
        if !(condition <= max_condition) {
            return Err(SingularPivot { condition });
        }

        for r in (0..n).rev() {
            let last_col = (r + kl + ku).min(n - 1);
            let base = self.offset(r, r);
            let mut acc = rhs[r];
            for off in 1..=last_col - r {
                acc -= self.data[base + off] * rhs[r + off];
            }
            rhs[r] = acc / self.data[base];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matches_dense_solve_on_random_band_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (12, 2, 2), (30, 2, 2), (9, 3, 1)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::<Complex64>::zeros(n, n);
            for r in 0..n {
                for col in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                    let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    band.add(r, col, v);
                    dense[(r, col)] = v;
                }
            }
            let b: Vec<Complex64> = (0..n)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let expected = dense
                .clone()
                .lu()
                .solve(&DVector::from_column_slice(&b))
                .unwrap();
            let mut x = b.clone();
            band.solve_in_place(&mut x, 1e14).unwrap();
            for i in 0..n {
                assert!((x[i] - expected[i]).norm() <= 1e-9 * expected[i].norm().max(1.0));
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // [[0, 1], [1, 0]] x = [2, 3]
        let mut band = BandMatrix::zeros(2, 1, 1);
        band.add(0, 1, c(1.0, 0.0));
        band.add(1, 0, c(1.0, 0.0));
        let mut x = vec![c(2.0, 0.0), c(3.0, 0.0)];
        band.solve_in_place(&mut x, 1e14).unwrap();
        assert_eq!(x, vec![c(3.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut band = BandMatrix::zeros(2, 1, 1);
        for (r, col) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            band.add(r, col, c(1.0, 0.0));
        }
        let mut x = vec![c(1.0, 0.0); 2];
        assert!(band.solve_in_place(&mut x, 1e14).is_err());

        let mut band = BandMatrix::zeros(2, 0, 0);
        band.add(0, 0, c(1.0, 0.0));
        band.add(1, 1, c(1e-20, 0.0));
        let err = band.solve_in_place(&mut x, 1e14).unwrap_err();
        assert!(err.condition > 1e14);
    }
}
