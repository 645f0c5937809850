//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices here are small (at most a few hundred rows), so everything is
//! one-shot and dense. The SVD and Hermitian eigen-solvers are delegated to
//! `nalgebra`; this module pins the conventions the rest of the crate relies
//! on (descending singular values, Kronecker block ordering, rank cut-off).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// `true` iff `max |A - Aᴴ| <= tol`.
pub fn hermitian_check(a: &ComplexMatrix, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Thin SVD `A = U diag(s) Vᴴ` with `s` sorted in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.adjoint()
    }

    /// Number of singular values strictly above `rel_tol * s_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * smax)
            .count()
    }

    /// `V Σ⁺ Uᴴ C` with singular values at or below `rel_tol * s_max` dropped.
    pub fn pseudo_solve(&self, c: &ComplexMatrix, rel_tol: f64) -> ComplexMatrix {
        let rank = self.rank(rel_tol);
        let mut x = ComplexMatrix::zeros(self.v.nrows(), c.ncols());
        if rank == 0 {
            return x;
        }
        let u = self.u.columns(0, rank);
        let mut coeff = u.adjoint() * c;
        for (k, s) in self.singular_values[..rank].iter().enumerate() {
            coeff.row_mut(k).unscale_mut(*s);
        }
        x += self.v.columns(0, rank) * coeff;
        x
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let decomposition = a
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::NonConvergence)?;
    let u = decomposition.u.ok_or(Error::NonConvergence)?;
    let v_t = decomposition.v_t.ok_or(Error::NonConvergence)?;
    let raw = decomposition.singular_values;

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));

    let mut su = ComplexMatrix::zeros(u.nrows(), order.len());
    let mut sv = ComplexMatrix::zeros(v_t.ncols(), order.len());
    let mut s = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).adjoint());
        s.push(raw[src]);
    }
    Ok(Svd {
        u: su,
        singular_values: s,
        v: sv,
    })
}

/// Minimum-norm least-squares solution of `A x = c`.
pub fn min_norm_lstsq(a: &ComplexMatrix, c: &ComplexVector, rank_tol: f64) -> Result<ComplexVector> {
    if a.nrows() != c.len() {
        return Err(Error::shape(
            format!("rhs of length {}", a.nrows()),
            format!("length {}", c.len()),
        ));
    }
    let decomposition = svd(a)?;
    let rhs = ComplexMatrix::from_column_slice(c.len(), 1, c.as_slice());
    let x = decomposition.pseudo_solve(&rhs, rank_tol);
    Ok(ComplexVector::from_column_slice(x.as_slice()))
}

/// Kronecker product; the first operand supplies the block (outer) index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Smallest eigenvalue of the Hermitian part `(A + Aᴴ)/2`.
pub fn hermitian_min_eigenvalue(a: &ComplexMatrix) -> f64 {
    let h = (a + a.adjoint()).scale(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Column-wise vectorization.
pub fn vec_columns(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

/// Largest entry modulus.
pub fn max_abs<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius_sq(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn hermitian_check_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(hermitian_check(&ComplexMatrix::identity(4, 4), 0.0));
        let a = random_matrix(5, 5, &mut rng);
        assert!(hermitian_check(&(&a + a.adjoint()), 1e-14));
        assert!(!hermitian_check(&a, 1e-6));
    }

    #[test]
    fn svd_of_diagonal_sorts_moduli() {
        let d = [C64::new(1.0, 0.0), C64::new(0.0, -3.0), C64::new(-2.0, 0.0)];
        let a = ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(&d));
        let s = svd(&a).unwrap().singular_values;
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_of_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_matrix(6, 1, &mut rng);
        let v = random_matrix(4, 1, &mut rng);
        let s = svd(&(&u * v.adjoint())).unwrap().singular_values;
        assert!((s[0] - u.norm() * v.norm()).abs() < 1e-12);
        assert!(s[1..].iter().all(|x| *x < 1e-12));
    }

    #[test]
    fn svd_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..50 {
            let (r, c) = (3 + t % 5, 2 + t % 7);
            let a = random_matrix(r, c, &mut rng);
            let d = svd(&a).unwrap();
            assert!((d.reconstruct() - &a).norm() < 1e-10 * a.norm());
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let k = d.singular_values.len();
            assert!((d.u.adjoint() * &d.u - ComplexMatrix::identity(k, k)).norm() < 1e-10);
            assert!((d.v.adjoint() * &d.v - ComplexMatrix::identity(k, k)).norm() < 1e-10);
        }
    }

    #[test]
    fn lstsq_matches_inverse_on_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(6, 6, &mut rng) + ComplexMatrix::identity(6, 6).scale(3.0);
        let c = ComplexVector::from_fn(6, |_, _| C64::new(rng.random(), rng.random()));
        let x = min_norm_lstsq(&a, &c, 1e-10).unwrap();
        let direct = a.clone().try_inverse().unwrap() * &c;
        assert!((x - direct).norm() < 1e-8);
    }

    #[test]
    fn lstsq_of_zero_matrix_is_zero() {
        let a = ComplexMatrix::zeros(3, 4);
        let c = ComplexVector::from_element(3, C64::new(1.0, 2.0));
        let x = min_norm_lstsq(&a, &c, 1e-10).unwrap();
        assert_eq!(x.len(), 4);
        assert!(x.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn lstsq_residual_orthogonal_to_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            // rank 3 in a 7x5 system
            let a = random_matrix(7, 3, &mut rng) * random_matrix(3, 5, &mut rng);
            let c = random_matrix(7, 1, &mut rng);
            let c = ComplexVector::from_column_slice(c.as_slice());
            let x = min_norm_lstsq(&a, &c, 1e-10).unwrap();
            let residual = &c - &a * &x;
            assert!((a.adjoint() * &residual).norm() < 1e-8 * c.norm() * a.norm());
            // minimum norm: x lies in the row space of A
            let d = svd(&a).unwrap();
            let null = d.v.columns(3, 2);
            assert!((null.adjoint() * &x).norm() < 1e-8);
        }
    }

    #[test]
    fn kron_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = random_matrix(2, 3, &mut rng);
        let k = kron(&ComplexMatrix::identity(2, 2), &b);
        assert_eq!(k.view((0, 0), (2, 3)), b.view((0, 0), (2, 3)));
        assert_eq!(k.view((2, 3), (2, 3)), b.view((0, 0), (2, 3)));
        assert!(k.view((0, 3), (2, 3)).iter().all(|z| z.norm() == 0.0));

        let a = random_matrix(3, 1, &mut rng);
        let bb = random_matrix(4, 1, &mut rng);
        let ab = kron(&a, &bb);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(ab[(i * 4 + j, 0)], a[(i, 0)] * bb[(j, 0)]);
            }
        }

        let (a, b, c, d) = (
            random_matrix(2, 2, &mut rng),
            random_matrix(2, 2, &mut rng),
            random_matrix(2, 2, &mut rng),
            random_matrix(2, 2, &mut rng),
        );
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
