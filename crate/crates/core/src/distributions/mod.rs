//! DoA prior distributions and the characteristic integral
//! `I(x) = E{v(θ)^x} = ∫ f(θ) exp(-jπ x sin θ) dθ`.

pub mod bessel;
pub mod quadrature;

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::RwLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::phase;
use crate::numerics::C64;

pub use bessel::bessel_j0;

/// Absolute tolerance used for every characteristic integral.
pub const INTEGRAL_TOLERANCE: f64 = 1e-10;
const MAX_SEGMENTS: usize = 2_000;

/// Prior on each source direction, supported on `(a, b)` within
/// `[-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DoAPriorDistribution {
    Uniform {
        a: f64,
        b: f64,
    },
    TruncatedNormal {
        a: f64,
        b: f64,
        mu: f64,
        sigma2: f64,
    },
}

impl DoAPriorDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = DoAPriorDistribution::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_normal(a: f64, b: f64, mu: f64, sigma2: f64) -> Result<Self> {
        let d = DoAPriorDistribution::TruncatedNormal { a, b, mu, sigma2 };
        d.validate()?;
        Ok(d)
    }

    pub fn full_range_uniform() -> Self {
        DoAPriorDistribution::Uniform {
            a: -FRAC_PI_2,
            b: FRAC_PI_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite()) || a < -FRAC_PI_2 || b > FRAC_PI_2 || a >= b {
            return Err(Error::InvalidDistribution(format!(
                "support ({a}, {b}) must satisfy -π/2 <= a < b <= π/2"
            )));
        }
        if let DoAPriorDistribution::TruncatedNormal { mu, sigma2, .. } = *self {
            if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
                return Err(Error::InvalidDistribution(format!(
                    "truncated normal needs finite mu and sigma2 > 0 (got mu = {mu}, sigma2 = {sigma2})"
                )));
            }
            if self.normalizer() <= 0.0 {
                return Err(Error::InvalidDistribution(
                    "truncated normal has no mass on its support".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            DoAPriorDistribution::Uniform { a, b } => (a, b),
            DoAPriorDistribution::TruncatedNormal { a, b, .. } => (a, b),
        }
    }

    /// Parent-normal mass on `(a, b)`.
    fn normalizer(&self) -> f64 {
        match *self {
            DoAPriorDistribution::Uniform { .. } => 1.0,
            DoAPriorDistribution::TruncatedNormal { a, b, mu, sigma2 } => {
                let s = (2.0 * sigma2).sqrt();
                0.5 * (libm::erf((b - mu) / s) - libm::erf((a - mu) / s))
            }
        }
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        let (a, b) = self.support();
        if theta <= a || theta >= b {
            return 0.0;
        }
        match *self {
            DoAPriorDistribution::Uniform { a, b } => 1.0 / (b - a),
            DoAPriorDistribution::TruncatedNormal { mu, sigma2, .. } => {
                let z = (theta - mu) * (theta - mu) / sigma2;
                (-0.5 * z).exp() / (2.0 * PI * sigma2).sqrt() / self.normalizer()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DoAPriorDistribution::Uniform { a, b } => loop {
                let t = rng.random_range(a..b);
                if t > a {
                    return t;
                }
            },
            DoAPriorDistribution::TruncatedNormal { a, b, mu, sigma2 } => loop {
                let z: f64 = rng.sample(StandardNormal);
                let t = mu + sigma2.sqrt() * z;
                if t > a && t < b {
                    return t;
                }
            },
        }
    }

    pub fn sample_doas<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        (0..k).map(|_| self.sample(rng)).collect()
    }

    /// `I(x)` by adaptive quadrature.
    pub fn characteristic_integral(&self, x: f64) -> Result<C64> {
        if x == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let (a, b) = self.support();
        quadrature::integrate(
            |t| phase(t, x) * self.pdf_unchecked(t),
            a,
            b,
            INTEGRAL_TOLERANCE,
            MAX_SEGMENTS,
        )
    }

    /// Density without the support test, for interior quadrature nodes.
    fn pdf_unchecked(&self, theta: f64) -> f64 {
        match *self {
            DoAPriorDistribution::Uniform { a, b } => 1.0 / (b - a),
            DoAPriorDistribution::TruncatedNormal { mu, sigma2, .. } => {
                let z = (theta - mu) * (theta - mu) / sigma2;
                (-0.5 * z).exp() / (2.0 * PI * sigma2).sqrt() / self.normalizer()
            }
        }
    }
}

pub fn pdf(dist: &DoAPriorDistribution, theta: f64) -> f64 {
    dist.pdf(theta)
}

pub fn sample_doas<R: Rng + ?Sized>(dist: &DoAPriorDistribution, k: usize, rng: &mut R) -> Vec<f64> {
    dist.sample_doas(k, rng)
}

pub fn characteristic_integral(dist: &DoAPriorDistribution, x: f64) -> Result<C64> {
    dist.characteristic_integral(x)
}

/// Memoized `I(x)`, keyed by `x` quantized to 1e-12.
///
/// `I(-x)` is always returned as `conj(I(x))` so conjugate symmetry holds
/// exactly.
#[derive(Debug)]
pub struct CharacteristicIntegralTable {
    dist: DoAPriorDistribution,
    cache: RwLock<HashMap<i64, C64>>,
}

impl Clone for CharacteristicIntegralTable {
    fn clone(&self) -> Self {
        CharacteristicIntegralTable {
            dist: self.dist,
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

impl CharacteristicIntegralTable {
    pub fn new(dist: DoAPriorDistribution) -> Self {
        CharacteristicIntegralTable {
            dist,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn distribution(&self) -> &DoAPriorDistribution {
        &self.dist
    }

    pub fn tolerance(&self) -> f64 {
        INTEGRAL_TOLERANCE
    }

    pub fn get(&self, x: f64) -> Result<C64> {
        if x == 0.0 {
            return Ok(C64::new(1.0, 0.0));
        }
        let key = (x.abs() * 1e12).round() as i64;
        let cached = self.cache.read().unwrap().get(&key).copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let v = self.dist.characteristic_integral(x.abs())?;
                self.cache.write().unwrap().insert(key, v);
                v
            }
        };
        Ok(if x < 0.0 { value.conj() } else { value })
    }

    /// Dense lookup for every integer argument in `[-max, max]`.
    pub fn integer_lookup(&self, max: i64) -> Result<IntegerLookup> {
        let values = (-max..=max)
            .map(|x| self.get(x as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntegerLookup { max, values })
    }
}

/// `I(x)` tabulated at integers.
#[derive(Debug, Clone)]
pub struct IntegerLookup {
    max: i64,
    values: Vec<C64>,
}

impl IntegerLookup {
    #[inline]
    pub fn at(&self, x: i64) -> C64 {
        debug_assert!(x.abs() <= self.max);
        self.values[(x + self.max) as usize]
    }
}
