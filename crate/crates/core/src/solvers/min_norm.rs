//! Minimum-norm point of a convex hull (Wolfe's method).

use nalgebra::{DMatrix, DVector};

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Convex weights, one per input vector.
    pub weights: Vec<f64>,
}

impl MinNormPoint {
    pub fn norm(&self) -> f64 {
        dot(&self.point, &self.point).sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(vectors: &[Vec<f64>], support: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &l) in support.iter().zip(lambda) {
        for (xk, pk) in x.iter_mut().zip(&vectors[i]) {
            *xk += l * pk;
        }
    }
    x
}

/// Weights of the point of minimum norm in the affine hull of the support.
fn affine_minimizer(vectors: &[Vec<f64>], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            kkt[(a, b)] = dot(&vectors[support[a]], &vectors[support[b]]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let solution = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            kkt.svd(true, true)
                .solve(&rhs, 1e-14)
                .unwrap_or_else(|_| DVector::from_element(k + 1, 1.0 / k as f64))
        });
    solution.rows(0, k).iter().copied().collect()
}

/// Returns the element of the convex hull of `vectors` closest to the
/// origin, with its convex weights. Panics on an empty list or ragged input.
pub fn min_norm_point(vectors: &[Vec<f64>]) -> MinNormPoint {
    assert!(
        !vectors.is_empty(),
        "min_norm_point needs at least one vector"
    );
    let dim = vectors[0].len();
    assert!(
        vectors.iter().all(|v| v.len() == dim),
        "vectors differ in length"
    );

    let scale = vectors
        .iter()
        .map(|v| dot(v, v))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let start = (0..vectors.len())
        .min_by(|&a, &b| dot(&vectors[a], &vectors[a]).total_cmp(&dot(&vectors[b], &vectors[b])))
        .unwrap();
    let mut support = vec![start];
    let mut lambda = vec![1.0];
    let mut x = vectors[start].clone();

    for _ in 0..MAX_ITERATIONS {
        let xx = dot(&x, &x);
        if xx <= TOLERANCE * TOLERANCE * scale {
            break;
        }
        let (j, xpj) = (0..vectors.len())
            .map(|j| (j, dot(&x, &vectors[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xpj <= TOLERANCE * scale || support.contains(&j) {
            break;
        }
        support.push(j);
        lambda.push(0.0);

        loop {
            let mu = affine_minimizer(vectors, &support);
            if mu.iter().all(|&m| m > 1e-15) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0_f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= 1e-15 {
                    let t = l / (l - m);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            let theta = theta.clamp(0.0, 1.0);
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut kept_support = Vec::with_capacity(support.len());
            let mut kept_lambda = Vec::with_capacity(support.len());
            for (&i, &l) in support.iter().zip(&lambda) {
                if l > 1e-15 {
                    kept_support.push(i);
                    kept_lambda.push(l);
                }
            }
            if kept_support.is_empty() {
                // Numerical corner: fall back to the single best point.
                kept_support.push(*support.last().unwrap());
                kept_lambda.push(1.0);
            }
            support = kept_support;
            lambda = kept_lambda;
            if support.len() == 1 {
                lambda[0] = 1.0;
                break;
            }
        }
        let total: f64 = lambda.iter().sum();
        for l in &mut lambda {
            *l /= total;
        }
        x = combine(vectors, &support, &lambda, dim);
    }

    let mut weights = vec![0.0; vectors.len()];
    for (&i, &l) in support.iter().zip(&lambda) {
        weights[i] += l;
    }
    MinNormPoint { point: x, weights }
}
