//! Dense Hermitian eigenvalues via cyclic Jacobi sweeps.
//!
//! Dimensions here are tiny (at most a few hundred), so a dependency-free
//! Jacobi solver on the real-symmetric embedding of a Hermitian matrix is
//! plenty fast and accurate.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::{QndError, Result};

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// H = X + iY is embedded as the real symmetric [[X, -Y], [Y, X]], whose
/// spectrum is that of H with every eigenvalue doubled.
pub fn hermitian_eigenvalues(h: &nd::Array2<C64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(QndError::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let herm_err = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (h[[i, j]] - h[[j, i]].conj()).norm())
        .fold(0.0f64, f64::max);
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    if herm_err > 1e-9 * scale {
        return Err(QndError::InvalidInput(format!(
            "matrix is not Hermitian (deviation {herm_err:.3e})"
        )));
    }
    if n == 0 {
        return Ok(vec![]);
    }

    let mut s = vec![0.0f64; 4 * n * n];
    let dim = 2 * n;
    let idx = |i: usize, j: usize| i * dim + j;
    for i in 0..n {
        for j in 0..n {
            let z = h[[i, j]];
            s[idx(i, j)] = z.re;
            s[idx(i, j + n)] = -z.im;
            s[idx(i + n, j)] = z.im;
            s[idx(i + n, j + n)] = z.re;
        }
    }

    jacobi_symmetric(&mut s, dim);

    let mut eigs: Vec<f64> = (0..dim).map(|i| s[idx(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Every eigenvalue of H shows up twice; keep one of each pair.
    Ok(eigs.into_iter().step_by(2).collect())
}

/// Smallest eigenvalue of a Hermitian matrix; handy for positivity checks.
pub fn min_eigenvalue(h: &nd::Array2<C64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?
        .first()
        .copied()
        .unwrap_or(0.0))
}

fn jacobi_symmetric(s: &mut [f64], dim: usize) {
    let idx = |i: usize, j: usize| i * dim + j;
    let scale = s.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(s[idx(p, q)].abs());
            }
        }
        if off < tol {
            return;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = s[idx(p, q)];
                if apq.abs() < tol * 1e-2 {
                    continue;
                }
                let theta = (s[idx(q, q)] - s[idx(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..dim {
                    let skp = s[idx(k, p)];
                    let skq = s[idx(k, q)];
                    s[idx(k, p)] = c * skp - sn * skq;
                    s[idx(k, q)] = sn * skp + c * skq;
                }
                for k in 0..dim {
                    let spk = s[idx(p, k)];
                    let sqk = s[idx(q, k)];
                    s[idx(p, k)] = c * spk - sn * sqk;
                    s[idx(q, k)] = sn * spk + c * sqk;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn pauli_y_eigenvalues() {
        let h = array![
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(e[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn shifted_two_level() {
        let h = array![
            [C64::new(2.0, 0.0), C64::new(0.0, 1.0)],
            [C64::new(0.0, -1.0), C64::new(2.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn known_three_by_three() {
        // Real symmetric with spectrum {1, 1, 4}.
        let h = array![
            [C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-11);
        assert_relative_eq!(e[1], 1.0, max_relative = 1e-11);
        assert_relative_eq!(e[2], 4.0, max_relative = 1e-11);
    }

    #[test]
    fn trace_matches_eigenvalue_sum() {
        // Deterministic pseudo-random Hermitian matrix.
        let n = 12;
        let mut h = nd::Array2::<C64>::zeros((n, n));
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let z = if i == j {
                    C64::new(next(), 0.0)
                } else {
                    C64::new(next(), next())
                };
                h[[i, j]] = z;
                h[[j, i]] = z.conj();
            }
        }
        let e = hermitian_eigenvalues(&h).unwrap();
        let tr: f64 = (0..n).map(|i| h[[i, i]].re).sum();
        let sum: f64 = e.iter().sum();
        assert_relative_eq!(tr, sum, epsilon = 1e-10);
        assert!(e.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.5, 0.0), C64::new(0.0, 0.0)]
        ];
        assert!(hermitian_eigenvalues(&h).is_err());
    }
}
