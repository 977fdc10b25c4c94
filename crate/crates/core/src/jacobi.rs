//! Cyclic Jacobi eigendecomposition of dense real symmetric matrices.
//!
//! Used for the numerically diagonalized Fock blocks, which are small
//! (dimension ≤ a few tens), so the quadratic-per-sweep cost is irrelevant
//! and the method's unconditional stability is worth more than speed.

use crate::error::{Error, Result};
use ndarray::Array2;

const MAX_SWEEPS: usize = 50;

/// Eigenvalues and eigenvectors of a symmetric matrix.
///
/// Returns `(values, vectors)` with `vectors.column(k)` the unit eigenvector
/// of `values[k]`; pairs are sorted by descending eigenvalue. The input must
/// be square and exactly symmetric (the caller symmetrizes if needed).
pub fn symmetric_eigen(m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    let mut a = m.clone();
    let mut v = Array2::eye(n);
    let mut d: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let mut sm = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                sm += a[[p, q]].abs();
            }
        }
        if sm == 0.0 {
            // Converged: sort descending and return.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
            let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
            let mut vectors = Array2::zeros((n, n));
            for (k, &i) in order.iter().enumerate() {
                vectors.column_mut(k).assign(&v.column(i));
            }
            return Ok((values, vectors));
        }
        let tresh = if sweep < 3 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = 100.0 * a[[p, q]].abs();
                // After a few sweeps, skip rotations on elements that are
                // negligible relative to both diagonal entries.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[[p, q]] = 0.0;
                    continue;
                }
                if a[[p, q]].abs() <= tresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    a[[p, q]] / h
                } else {
                    let theta = 0.5 * h / a[[p, q]];
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * a[[p, q]];
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[[p, q]] = 0.0;
                let rotate = |a: &mut Array2<f64>, i: usize, j: usize, k: usize, l: usize| {
                    let g = a[[i, j]];
                    let h = a[[k, l]];
                    a[[i, j]] = g - s * (h + g * tau);
                    a[[k, l]] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rotate(&mut a, j, p, j, q);
                }
                for j in p + 1..q {
                    rotate(&mut a, p, j, j, q);
                }
                for j in q + 1..n {
                    rotate(&mut a, p, j, q, j);
                }
                for j in 0..n {
                    rotate(&mut v, j, p, j, q);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps for a {n}x{n} matrix"
    )))
}
