//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `J₀(z)` to roughly 1e-14 absolute accuracy.
///
/// Power series for `|z| < 8`, Miller backward recurrence for `8 <= |z| < 25`,
/// Hankel asymptotic expansion beyond.
pub fn bessel_j0(z: f64) -> f64 {
    let x = z.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn miller(x: f64) -> f64 {
    // start well above x; normalize with J0 + 2 Σ J_2k = 1
    let start = 2 * ((x + 20.0 + (40.0 * x).sqrt()) as usize / 2);
    let mut next = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * current - next;
        next = current;
        current = prev;
        if current.abs() > 1e250 {
            next *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
        }
        // `current` now holds J_{k-1}
        if k > 1 && (k - 1) % 2 == 0 {
            norm += 2.0 * current;
        }
        if k == 1 {
            j0 = current;
        }
    }
    j0 / (norm + j0)
}

fn asymptotic(x: f64) -> f64 {
    // a_k = Π_{i=1..k} (-(2i-1)²) / (k! 8^k)
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= -odd * odd / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // (-1)^{k/2} for even k into P, (-1)^{(k-1)/2} for odd k into Q
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::quadrature::integrate;
    use crate::numerics::C64;

    /// J₀(z) = (1/π) ∫_0^π cos(z sin t) dt.
    fn integral_oracle(z: f64) -> f64 {
        integrate(|t| C64::new((z * t.sin()).cos(), 0.0), 0.0, PI, 1e-14, 10_000)
            .unwrap()
            .re
            / PI
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn first_zero() {
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-13);
        assert!(integral_oracle(2.404_825_557_695_773).abs() < 1e-13);
    }

    #[test]
    fn matches_integral_representation_across_regions() {
        let mut z = 0.0;
        while z < 60.0 {
            let want = integral_oracle(z);
            assert!((bessel_j0(z) - want).abs() < 1e-12, "z = {z}");
            assert_eq!(bessel_j0(-z), bessel_j0(z));
            z += 0.37;
        }
        for z in [7.999_999, 8.0, 24.999, 25.0, 31.415_926_535_897_93, 94.2] {
            assert!((bessel_j0(z) - integral_oracle(z)).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn known_value_at_pi() {
        assert!((bessel_j0(PI) + 0.304_242_177_644_093_9).abs() < 1e-13);
    }
}
