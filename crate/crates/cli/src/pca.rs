use rayon::prelude::*;
use serde::Serialize;
use time2cluster::AugmentedCorrelationMatrix;

use crate::{CliError, Result};

pub const TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 1000;
const COLUMN_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    /// One `[pc1, pc2]` pair per row.
    pub coords: Vec<[f64; 2]>,
    /// Unit loading vectors, largest-magnitude entry positive.
    pub components: [Vec<f64>; 2],
    /// Variance of the rows along each component.
    pub variances: [f64; 2],
    pub iterations: [usize; 2],
    pub residuals: [f64; 2],
}

/// Top-2 principal components of the rows of `A`.
pub fn project_2d(aug: &AugmentedCorrelationMatrix) -> Result<Projection> {
    project_rows(aug.as_slice(), aug.size())
}

/// PCA of a row-major `rows x dim` matrix by power iteration with deflation.
/// The covariance is never formed: each step applies the centered data twice.
pub fn project_rows(data: &[f64], dim: usize) -> Result<Projection> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(CliError::invalid(format!(
            "data of length {} is not a whole number of rows of width {dim}",
            data.len()
        )));
    }
    let rows = data.len() / dim;
    if rows < 3 {
        return Err(CliError::invalid(format!(
            "projection needs at least 3 rows, got {rows}"
        )));
    }
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }

    let cov_times = |v: &[f64]| -> Vec<f64> {
        let shift = dot(&mean, v);
        let u: Vec<f64> = data
            .par_chunks_exact(dim)
            .map(|row| dot(row, v) - shift)
            .collect();
        let u_sum: f64 = u.iter().sum();
        let mut w = vec![0.0; dim];
        w.par_chunks_mut(COLUMN_CHUNK)
            .enumerate()
            .for_each(|(c, out)| {
                let lo = c * COLUMN_CHUNK;
                let hi = lo + out.len();
                for (ui, row) in u.iter().zip(data.chunks_exact(dim)) {
                    for (o, x) in out.iter_mut().zip(&row[lo..hi]) {
                        *o += ui * x;
                    }
                }
                for (o, m) in out.iter_mut().zip(&mean[lo..]) {
                    *o = (*o - m * u_sum) / rows as f64;
                }
            });
        w
    };

    let mut found: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2);
    let mut iterations = [0; 2];
    let mut residuals = [0.0; 2];
    for k in 0..2 {
        let mut v = start_vector(data, dim, &mean, &found);
        let mut lambda = 0.0;
        let mut residual = f64::INFINITY;
        let mut iters = 0;
        while iters < MAX_ITERATIONS {
            iters += 1;
            let mut w = cov_times(&v);
            for (u, l) in &found {
                let c = l * dot(u, &v);
                axpy(&mut w, -c, u);
            }
            lambda = dot(&v, &w);
            let scale = found
                .first()
                .map_or(lambda, |f| f.1)
                .abs()
                .max(f64::MIN_POSITIVE);
            residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt()
                / scale;
            let norm = dot(&w, &w).sqrt();
            if residual <= TOLERANCE || norm <= f64::MIN_POSITIVE {
                break;
            }
            v = w.into_iter().map(|x| x / norm).collect();
        }
        if residual > TOLERANCE {
            return Err(CliError::NoConvergence {
                component: k + 1,
                iterations: iters,
                residual,
            });
        }
        orient(&mut v);
        iterations[k] = iters;
        residuals[k] = residual;
        found.push((v, lambda.max(0.0)));
    }

    let shifts: Vec<f64> = found.iter().map(|(u, _)| dot(&mean, u)).collect();
    let coords = data
        .par_chunks_exact(dim)
        .map(|row| {
            [
                dot(row, &found[0].0) - shifts[0],
                dot(row, &found[1].0) - shifts[1],
            ]
        })
        .collect();
    let [(v1, l1), (v2, l2)]: [(Vec<f64>, f64); 2] = found.try_into().expect("two components");
    Ok(Projection {
        coords,
        components: [v1, v2],
        variances: [l1, l2],
        iterations,
        residuals,
    })
}

/// The centered row of largest norm after removing earlier components.
fn start_vector(data: &[f64], dim: usize, mean: &[f64], found: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let mut best = vec![0.0; dim];
    let mut best_norm = 0.0;
    for row in data.chunks_exact(dim) {
        let mut c: Vec<f64> = row.iter().zip(mean).map(|(x, m)| x - m).collect();
        for (u, _) in found {
            let p = dot(&c, u);
            axpy(&mut c, -p, u);
        }
        let norm = dot(&c, &c).sqrt();
        if norm > best_norm {
            best_norm = norm;
            best = c;
        }
    }
    if best_norm <= f64::MIN_POSITIVE {
        // No variance left: any unit vector orthogonal to earlier components.
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            for (u, _) in found {
                let p = dot(&e, u);
                axpy(&mut e, -p, u);
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-6 {
                return e.into_iter().map(|x| x / norm).collect();
            }
        }
        return best;
    }
    best.into_iter().map(|x| x / best_norm).collect()
}

fn orient(v: &mut [f64]) {
    let mut top = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[top].abs() {
            top = j;
        }
    }
    if v[top] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
