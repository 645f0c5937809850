//! Closed-form prior expectations behind the MMSE combiner.
//!
//! Index conventions (0-based): row `i` of `V` splits into an outer element
//! `i / L` and an inner element `i % L`; column `j` splits into an outer
//! column `j / (K+L)` and an inner column `j % (K+L)` of `A`. Columns below
//! `K` of `A` are sources, the rest are the scaled identity for noise.

use nalgebra::{DMatrix, DVector};

use crate::distributions::IntegerLookup;
use crate::error::{Error, Result};
use crate::geometry::{phase, ArrayGeometry};
use crate::numerics::{hermitian_check, kron, max_abs, ComplexMatrix, ComplexVector, C64};
use crate::simulation::SourceScene;

/// Source powers and noise power used by a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Powers {
    pub d: Vec<f64>,
    pub sigma2: f64,
}

impl Powers {
    pub fn new(d: Vec<f64>, sigma2: f64) -> Self {
        Powers { d, sigma2 }
    }

    pub fn of_scene(scene: &SourceScene) -> Self {
        Powers {
            d: scene.powers().to_vec(),
            sigma2: scene.noise_power(),
        }
    }

    pub fn num_sources(&self) -> usize {
        self.d.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Powers {
            d: self.d.iter().map(|x| x * c).collect(),
            sigma2: self.sigma2 * c,
        }
    }
}

/// `A = [S diag(√d), σ I_L]`, so that `R_y = A Aᴴ`.
pub fn factor_a(scene: &SourceScene, g: &ArrayGeometry) -> ComplexMatrix {
    let (l, k) = (g.num_elements(), scene.num_sources());
    let sigma = scene.noise_power().sqrt();
    let mut a = ComplexMatrix::zeros(l, k + l);
    let s = g.response_matrix(scene.thetas());
    for c in 0..k {
        a.set_column(c, &s.column(c).scale(scene.powers()[c].sqrt()));
    }
    for e in 0..l {
        a[(e, k + e)] = C64::new(sigma, 0.0);
    }
    a
}

/// `V = A* ⊗ A`.
pub fn build_factor_v(scene: &SourceScene, g: &ArrayGeometry) -> ComplexMatrix {
    let a = factor_a(scene, g);
    kron(&a.conjugate(), &a)
}

/// `vec(I_n)`.
pub fn identity_vec(n: usize) -> ComplexVector {
    ComplexVector::from_fn(n * n, |j, _| {
        if j / n == j % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum Column {
    Source(usize),
    Noise(usize),
}

#[inline]
fn split_column(j: usize, k: usize, width: usize) -> (Column, Column) {
    let classify = |c: usize| if c < k { Column::Source(c) } else { Column::Noise(c - k) };
    (classify(j / width), classify(j % width))
}

/// One entry of `V`, evaluated case by case instead of through the
/// Kronecker product.
pub fn factor_v_entry(scene: &SourceScene, g: &ArrayGeometry, i: usize, j: usize) -> C64 {
    let k = scene.num_sources();
    let width = k + g.num_elements();
    let (or, ir) = (g.outer_index(i), g.inner_index(i));
    let (p_or, p_ir) = (g.positions()[or] as f64, g.positions()[ir] as f64);
    let d = scene.powers();
    let th = scene.thetas();
    let sigma = scene.noise_power().sqrt();
    match split_column(j, k, width) {
        (Column::Source(a), Column::Source(b)) => {
            phase(th[a], -p_or) * phase(th[b], p_ir) * (d[a] * d[b]).sqrt()
        }
        (Column::Noise(e), Column::Source(b)) if e == or => phase(th[b], p_ir) * (sigma * d[b].sqrt()),
        (Column::Source(a), Column::Noise(e)) if e == ir => phase(th[a], -p_or) * (sigma * d[a].sqrt()),
        (Column::Noise(e1), Column::Noise(e2)) if e1 == or && e2 == ir => C64::new(sigma * sigma, 0.0),
        _ => C64::new(0.0, 0.0),
    }
}

pub fn build_factor_v_entrywise(scene: &SourceScene, g: &ArrayGeometry) -> ComplexMatrix {
    let l = g.num_elements();
    let width = scene.num_sources() + l;
    ComplexMatrix::from_fn(l * l, width * width, |i, j| factor_v_entry(scene, g, i, j))
}

/// `γ_j^(i,m) = [V]_{i,j} [V*]_{m,j}` in closed form.
pub fn gamma(scene: &SourceScene, g: &ArrayGeometry, i: usize, m: usize, j: usize) -> C64 {
    let k = scene.num_sources();
    let width = k + g.num_elements();
    let p = g.positions();
    let (or_i, ir_i, or_m, ir_m) = (g.outer_index(i), g.inner_index(i), g.outer_index(m), g.inner_index(m));
    let outer_shift = (p[or_m] - p[or_i]) as f64;
    let inner_shift = (p[ir_i] - p[ir_m]) as f64;
    let d = scene.powers();
    let th = scene.thetas();
    let s2 = scene.noise_power();
    match split_column(j, k, width) {
        (Column::Source(a), Column::Source(b)) => {
            phase(th[a], outer_shift) * phase(th[b], inner_shift) * (d[a] * d[b])
        }
        (Column::Noise(e), Column::Source(b)) if e == or_i && e == or_m => phase(th[b], inner_shift) * (s2 * d[b]),
        (Column::Source(a), Column::Noise(e)) if e == ir_i && e == ir_m => phase(th[a], outer_shift) * (s2 * d[a]),
        (Column::Noise(e1), Column::Noise(e2)) if e1 == or_i && e1 == or_m && e2 == ir_i && e2 == ir_m => {
            C64::new(s2 * s2, 0.0)
        }
        _ => C64::new(0.0, 0.0),
    }
}

/// `E_Θ{γ_j^(i,m)}` with i.i.d. directions.
#[inline]
fn expected_gamma(
    powers: &Powers,
    g: &ArrayGeometry,
    table: &IntegerLookup,
    i: usize,
    m: usize,
    j: usize,
) -> C64 {
    let k = powers.num_sources();
    let width = k + g.num_elements();
    let p = g.positions();
    let (or_i, ir_i, or_m, ir_m) = (g.outer_index(i), g.inner_index(i), g.outer_index(m), g.inner_index(m));
    let outer_shift = p[or_m] - p[or_i];
    let inner_shift = p[ir_i] - p[ir_m];
    let d = &powers.d;
    let s2 = powers.sigma2;
    match split_column(j, k, width) {
        (Column::Source(a), Column::Source(b)) if a == b => table.at(outer_shift + inner_shift) * (d[a] * d[a]),
        (Column::Source(a), Column::Source(b)) => {
            table.at(outer_shift) * table.at(inner_shift) * (d[a] * d[b])
        }
        (Column::Noise(e), Column::Source(b)) if e == or_i && e == or_m => table.at(inner_shift) * (s2 * d[b]),
        (Column::Source(a), Column::Noise(e)) if e == ir_i && e == ir_m => table.at(outer_shift) * (s2 * d[a]),
        (Column::Noise(e1), Column::Noise(e2)) if e1 == or_i && e1 == or_m && e2 == ir_i && e2 == ir_m => {
            C64::new(s2 * s2, 0.0)
        }
        _ => C64::new(0.0, 0.0),
    }
}

/// Mean and second moment of `w = (1/Q) Σ x_q* ⊗ x_q` for `x_q ~ CN(0, I_{K+L})`.
pub fn w_moments(k: usize, l: usize, q: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = k + l;
    let mean = DVector::from_fn(n * n, |j, _| if j / n == j % n { 1.0 } else { 0.0 });
    let mut second = &mean * mean.transpose();
    for d in 0..n * n {
        second[(d, d)] += 1.0 / q as f64;
    }
    (mean, second)
}

/// Integer range of arguments the builders look up in the integral table.
pub fn lookup_range(g: &ArrayGeometry) -> i64 {
    2 * g.max_position()
}

/// `H_E = E_Θ{r rᴴ}`.
pub fn build_h_e(g: &ArrayGeometry, powers: &Powers, table: &IntegerLookup) -> ComplexMatrix {
    let n2 = g.num_elements().pow(2);
    let s1: f64 = powers.d.iter().sum();
    let s2: f64 = powers.d.iter().map(|x| x * x).sum();
    let noise = powers.sigma2;
    let lags: Vec<i64> = (0..n2).map(|j| g.lag_of(j)).collect();
    let delta = |x: i64| if x == 0 { 1.0 } else { 0.0 };
    ComplexMatrix::from_fn(n2, n2, |i, m| {
        let (wi, wm) = (lags[i], lags[m]);
        table.at(wi - wm) * s2
            + C64::new(noise * noise * delta(wi) * delta(wm), 0.0)
            + table.at(wi) * table.at(-wm) * (s1 * s1 - s2)
            + (table.at(-wm) * delta(wi) + table.at(wi) * delta(wm)) * (noise * s1)
    })
}

/// `Ṽ_E = E_Θ{V Vᴴ}`, summing the per-column expectations.
pub fn build_vtilde_e(g: &ArrayGeometry, powers: &Powers, table: &IntegerLookup) -> ComplexMatrix {
    let n2 = g.num_elements().pow(2);
    let width = powers.num_sources() + g.num_elements();
    let mut out = ComplexMatrix::zeros(n2, n2);
    for m in 0..n2 {
        for i in m..n2 {
            let v: C64 = (0..width * width)
                .map(|j| expected_gamma(powers, g, table, i, m, j))
                .sum();
            out[(i, m)] = v;
            out[(m, i)] = v.conj();
        }
    }
    out
}

/// `G_E = H_E + Ṽ_E / Q`.
pub fn build_g_e(h_e: &ComplexMatrix, vtilde_e: &ComplexMatrix, q: usize) -> Result<ComplexMatrix> {
    if h_e.shape() != vtilde_e.shape() || h_e.nrows() != h_e.ncols() {
        return Err(Error::shape(
            format!("two equal square matrices, H_E is {:?}", h_e.shape()),
            format!("{:?}", vtilde_e.shape()),
        ));
    }
    if q == 0 {
        return Err(Error::config("snapshots", "sample support must be at least 1"));
    }
    Ok(h_e + vtilde_e.unscale(q as f64))
}

#[derive(Debug, Clone)]
pub struct ExpectationMatrices {
    pub h_e: ComplexMatrix,
    pub vtilde_e: ComplexMatrix,
    pub g_e: ComplexMatrix,
}

impl ExpectationMatrices {
    pub fn build(g: &ArrayGeometry, powers: &Powers, table: &IntegerLookup, q: usize) -> Result<Self> {
        let h_e = build_h_e(g, powers, table);
        let vtilde_e = build_vtilde_e(g, powers, table);
        let g_e = build_g_e(&h_e, &vtilde_e, q)?;
        debug_assert!(hermitian_check(&g_e, 1e-8 * (1.0 + max_abs(&g_e))));
        Ok(ExpectationMatrices { h_e, vtilde_e, g_e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{CharacteristicIntegralTable, DoAPriorDistribution};
    use crate::geometry::make_coprime_array;
    use crate::simulation::{complex_normal, nominal_autocorrelation, trial_rng};
    use rand::Rng;

    fn random_scene(k: usize, rng: &mut impl Rng) -> SourceScene {
        let thetas = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
        let powers = (0..k).map(|_| rng.random_range(0.5..10.0)).collect();
        SourceScene::new(thetas, powers, rng.random_range(0.2..2.0)).unwrap()
    }

    #[test]
    fn v_times_identity_is_r() {
        let g = make_coprime_array(2, 3).unwrap();
        let mut rng = trial_rng(1, 0);
        for k in 0..4 {
            let scene = random_scene(k, &mut rng);
            let v = build_factor_v(&scene, &g);
            let (_, r) = nominal_autocorrelation(&scene, &g);
            let vi = &v * identity_vec(k + g.num_elements());
            assert!(max_abs(&(vi - r)) < 1e-12);
        }
    }

    #[test]
    fn entrywise_v_matches_kronecker() {
        let g = make_coprime_array(2, 3).unwrap();
        let mut rng = trial_rng(2, 0);
        for t in 0..20 {
            let scene = random_scene(1 + t % 3, &mut rng);
            let kron_v = build_factor_v(&scene, &g);
            let table_v = build_factor_v_entrywise(&scene, &g);
            assert!(max_abs(&(kron_v - table_v)) <= 1e-12);
        }
    }

    #[test]
    fn noise_only_v_is_sigma2_on_l2_entries() {
        let g = make_coprime_array(2, 3).unwrap();
        let scene = SourceScene::new(vec![], vec![], 1.7).unwrap();
        let v = build_factor_v_entrywise(&scene, &g);
        let nz: Vec<_> = v.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 36);
        assert!(nz.iter().all(|z| (**z - C64::new(1.7, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn gamma_matches_entry_products() {
        let g = make_coprime_array(2, 3).unwrap();
        let mut rng = trial_rng(3, 0);
        for _ in 0..20 {
            let scene = random_scene(2, &mut rng);
            let v = build_factor_v(&scene, &g);
            for i in 0..36 {
                for m in 0..36 {
                    for j in 0..v.ncols() {
                        let want = v[(i, j)] * v[(m, j)].conj();
                        assert!((gamma(&scene, &g, i, m, j) - want).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn w_moment_formula() {
        let (mean, second) = w_moments(1, 1, 1);
        assert_eq!(mean.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[2.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 2.0],
        );
        assert_eq!(second, expected);
    }

    fn draw_w(n: usize, q: usize, rng: &mut impl Rng) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); n * n];
        for _ in 0..q {
            let x: Vec<C64> = (0..n).map(|_| complex_normal(rng, 1.0)).collect();
            for o in 0..n {
                for i in 0..n {
                    w[o * n + i] += x[o].conj() * x[i] / q as f64;
                }
            }
        }
        w
    }

    #[test]
    fn w_moments_match_monte_carlo() {
        use crate::stats::RunningStats;
        let n = 3;
        let q = 2;
        let (mean, second) = w_moments(1, 2, q);
        let mut rng = trial_rng(4, 0);
        let mut m1 = vec![RunningStats::default(); n * n];
        let mut m2 = vec![RunningStats::default(); n * n * n * n];
        for _ in 0..100_000 {
            let w = draw_w(n, q, &mut rng);
            for a in 0..n * n {
                m1[a].push(w[a].re);
                for b in 0..n * n {
                    m2[a * n * n + b].push((w[a] * w[b].conj()).re);
                }
            }
        }
        for a in 0..n * n {
            assert!((m1[a].mean() - mean[a]).abs() <= 5.0 * m1[a].std_error() + 1e-12);
            for b in 0..n * n {
                let s = &m2[a * n * n + b];
                assert!((s.mean() - second[(a, b)]).abs() <= 5.0 * s.std_error() + 1e-12);
            }
        }
    }

    fn lookup(dist: DoAPriorDistribution, g: &ArrayGeometry) -> IntegerLookup {
        CharacteristicIntegralTable::new(dist)
            .integer_lookup(lookup_range(g))
            .unwrap()
    }

    #[test]
    fn noise_only_h_e() {
        let g = make_coprime_array(2, 3).unwrap();
        let table = lookup(DoAPriorDistribution::full_range_uniform(), &g);
        let h = build_h_e(&g, &Powers::new(vec![], 1.5), &table);
        for i in 0..36 {
            for m in 0..36 {
                let want = if g.lag_of(i) == 0 && g.lag_of(m) == 0 { 1.5 * 1.5 } else { 0.0 };
                assert_eq!(h[(i, m)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn h_e_zero_lag_diagonal_single_source() {
        let g = make_coprime_array(2, 3).unwrap();
        let table = lookup(DoAPriorDistribution::full_range_uniform(), &g);
        let h = build_h_e(&g, &Powers::new(vec![1.0], 1.0), &table);
        // ‖d‖² I(0) + σ⁴ + 0 + σ²·1ᵀd·2 = 1 + 1 + 2
        let j0 = (0..36).find(|&j| g.lag_of(j) == 0).unwrap();
        assert!((h[(j0, j0)] - C64::new(4.0, 0.0)).norm() < 1e-14);
        assert!(hermitian_check(&h, 1e-10));
    }

    #[test]
    fn noise_only_vtilde_is_diagonal_sigma4() {
        let g = make_coprime_array(2, 3).unwrap();
        let table = lookup(DoAPriorDistribution::full_range_uniform(), &g);
        let vt = build_vtilde_e(&g, &Powers::new(vec![], 2.0), &table);
        assert!(max_abs(&(vt - ComplexMatrix::identity(36, 36).scale(4.0))) < 1e-15);
    }

    #[test]
    fn v_vh_equals_kron_of_autocorrelations() {
        let g = make_coprime_array(2, 3).unwrap();
        let mut rng = trial_rng(5, 0);
        let scene = random_scene(2, &mut rng);
        let v = build_factor_v(&scene, &g);
        let (r_y, _) = nominal_autocorrelation(&scene, &g);
        assert!(max_abs(&(&v * v.adjoint() - kron(&r_y.conjugate(), &r_y))) < 1e-10);
    }

    #[test]
    fn g_e_linearity_and_shape_check() {
        let g = make_coprime_array(2, 3).unwrap();
        let table = lookup(DoAPriorDistribution::full_range_uniform(), &g);
        let powers = Powers::new(vec![10.0, 10.0], 1.0);
        let m = ExpectationMatrices::build(&g, &powers, &table, 7).unwrap();
        let diff = (&m.g_e - &m.h_e).norm();
        assert!((diff - m.vtilde_e.norm() / 7.0).abs() < 1e-12 * diff);
        assert!(build_g_e(&m.h_e, &ComplexMatrix::zeros(3, 3), 1).is_err());
        let min_eig = crate::numerics::hermitian_min_eigenvalue(&m.g_e);
        let norm2 = crate::numerics::svd(&m.g_e).unwrap().singular_values[0];
        assert!(min_eig >= -1e-8 * norm2);
        assert!(crate::numerics::hermitian_min_eigenvalue(&m.vtilde_e) >= -1e-8 * norm2);
    }
}
