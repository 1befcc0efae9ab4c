use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{dot, norm2};
use super::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_POWER_ITERS: usize = 10_000;
pub const DEFAULT_POWER_TOL: f64 = 1e-10;

/// Symmetry tolerance for the eigenvalue routines, relative to `max(1, max|m|)`.
const SYMMETRY_TOL: f64 = 1e-10;

const START_SEED: u64 = 0x005e_ed0f_90e4;

pub fn frobenius_norm(m: &Matrix) -> f64 {
    dot(m.as_slice(), m.as_slice()).sqrt()
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
///
/// The estimate is `‖M v‖` for the normalized iterate `v`, which converges
/// to `max |λ|` even when `λ` and `-λ` are both eigenvalues.
pub fn spectral_norm(m: &Matrix, iters: usize, tol: f64) -> Result<f64> {
    check_symmetric(m)?;
    if m.is_empty() {
        return Err(Error::EmptyTensor);
    }
    Ok(power_iteration(
        m,
        iters,
        tol,
        |v| m.matvec(v).expect("square"),
        Estimate::Norm,
    ))
}

pub fn spectral_norm_default(m: &Matrix) -> Result<f64> {
    spectral_norm(m, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL)
}

/// Smallest eigenvalue of a symmetric matrix, estimated by power iteration
/// on `s·I - M` with `s = ‖M‖_F`.
///
/// The estimate never undershoots the true minimum by more than rounding,
/// so a negative result is a genuine indefiniteness signal.
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    check_symmetric(m)?;
    if m.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let shift = frobenius_norm(m);
    if shift == 0.0 {
        return Ok(0.0);
    }
    let top = power_iteration(
        m,
        DEFAULT_POWER_ITERS,
        DEFAULT_POWER_TOL,
        |v| {
            let mv = m.matvec(v).expect("square");
            v.iter().zip(mv).map(|(x, y)| shift * x - y).collect()
        },
        Estimate::Rayleigh,
    );
    Ok(shift - top)
}

#[derive(Clone, Copy)]
enum Estimate {
    Norm,
    Rayleigh,
}

fn power_iteration(
    m: &Matrix,
    iters: usize,
    tol: f64,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    estimate: Estimate,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..m.rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let w = apply(&v);
        let nw = norm2(&w);
        let next = match estimate {
            Estimate::Norm => nw,
            Estimate::Rayleigh => dot(&v, &w),
        };
        if nw == 0.0 {
            return next;
        }
        v = w.into_iter().map(|x| x / nw).collect();
        let done = (next - lambda).abs() < tol * next.abs().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric {
            asymmetry: m.max_asymmetry(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norms() {
        let i3 = Matrix::identity(3);
        assert!((frobenius_norm(&i3) - 3f64.sqrt()).abs() < 1e-15);
        assert!((spectral_norm_default(&i3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_spectral() {
        let d = Matrix::from_diag(&[1.0, -5.0, 2.0]);
        assert!((spectral_norm_default(&d).unwrap() - 5.0).abs() < 1e-9);
        assert!((min_eigenvalue(&d).unwrap() + 5.0).abs() < 1e-9);
    }

    #[test]
    fn opposite_eigenvalues_converge() {
        let d = Matrix::from_diag(&[3.0, -3.0, 1.0]);
        assert!((spectral_norm_default(&d).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            spectral_norm_default(&m),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(min_eigenvalue(&m).is_err());
    }

    #[test]
    fn zero_matrix() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(spectral_norm_default(&z).unwrap(), 0.0);
        assert_eq!(min_eigenvalue(&z).unwrap(), 0.0);
    }
}
