//! Snapshot generation, sample autocorrelations and the nominal
//! autocorrelation of a scene.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::numerics::{vec_columns, ComplexMatrix, ComplexVector, C64};

/// Ground truth of one realization: directions, source powers (linear) and
/// noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScene {
    thetas: Vec<f64>,
    powers: Vec<f64>,
    noise_power: f64,
}

impl SourceScene {
    pub fn new(thetas: Vec<f64>, powers: Vec<f64>, noise_power: f64) -> Result<Self> {
        if thetas.len() != powers.len() {
            return Err(Error::InvalidScene(format!(
                "{} directions but {} powers",
                thetas.len(),
                powers.len()
            )));
        }
        if powers.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidScene("source powers must be positive".into()));
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidScene("noise power must be nonnegative".into()));
        }
        if thetas.iter().any(|t| !t.is_finite() || t.abs() > std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidScene("directions must lie in [-π/2, π/2]".into()));
        }
        Ok(SourceScene {
            thetas,
            powers,
            noise_power,
        })
    }

    /// `K` sources of equal power.
    pub fn equal_power(thetas: Vec<f64>, power: f64, noise_power: f64) -> Result<Self> {
        let k = thetas.len();
        SourceScene::new(thetas, vec![power; k], noise_power)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn num_sources(&self) -> usize {
        self.thetas.len()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn check_against(&self, g: &ArrayGeometry) -> Result<()> {
        if self.num_sources() >= g.num_virtual() {
            return Err(Error::InvalidScene(format!(
                "K = {} must be below L' = {}",
                self.num_sources(),
                g.num_virtual()
            )));
        }
        Ok(())
    }
}

/// `L × Q` received snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    pub y: ComplexMatrix,
    pub seed: u64,
}

impl SnapshotBatch {
    pub fn num_snapshots(&self) -> usize {
        self.y.ncols()
    }

    /// Text dump: one row per element, each snapshot as a `re,im` pair.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.y.row_iter() {
            let line: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Independent stream for trial `trial` under `master` seed.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Circular complex normal with variance `var`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `R_y = S diag(d) Sᴴ + σ² I` and `r = vec(R_y)`.
pub fn nominal_autocorrelation(scene: &SourceScene, g: &ArrayGeometry) -> (ComplexMatrix, ComplexVector) {
    let l = g.num_elements();
    let s = g.response_matrix(scene.thetas());
    let mut sd = s.clone();
    for (k, d) in scene.powers().iter().enumerate() {
        sd.column_mut(k).scale_mut(*d);
    }
    let mut r_y = sd * s.adjoint();
    for i in 0..l {
        r_y[(i, i)] += C64::new(scene.noise_power(), 0.0);
    }
    let r = vec_columns(&r_y);
    (r_y, r)
}

pub fn generate_snapshots(scene: &SourceScene, g: &ArrayGeometry, q: usize, seed: u64) -> SnapshotBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SnapshotBatch {
        y: generate_snapshots_with(scene, g, q, &mut rng),
        seed,
    }
}

/// `y_q = Σ_k s(θ_k) ξ_{q,k} + n_q`, one column per snapshot.
pub fn generate_snapshots_with<R: Rng + ?Sized>(
    scene: &SourceScene,
    g: &ArrayGeometry,
    q: usize,
    rng: &mut R,
) -> ComplexMatrix {
    let l = g.num_elements();
    let s = g.response_matrix(scene.thetas());
    let mut y = ComplexMatrix::zeros(l, q);
    let mut symbols = vec![C64::new(0.0, 0.0); scene.num_sources()];
    for col in 0..q {
        for (xi, d) in symbols.iter_mut().zip(scene.powers()) {
            *xi = complex_normal(rng, *d);
        }
        for row in 0..l {
            let mut acc = complex_normal(rng, scene.noise_power());
            for (k, xi) in symbols.iter().enumerate() {
                acc += s[(row, k)] * xi;
            }
            y[(row, col)] = acc;
        }
    }
    y
}

/// `R̂_y = (1/Q) Σ y_q y_qᴴ` and `r̂ = vec(R̂_y)`.
pub fn sample_autocorrelation(batch: &SnapshotBatch) -> (ComplexMatrix, ComplexVector) {
    sample_autocorrelation_of(&batch.y)
}

pub fn sample_autocorrelation_of(y: &ComplexMatrix) -> (ComplexMatrix, ComplexVector) {
    let q = y.ncols().max(1) as f64;
    let r_y = (y * y.adjoint()).unscale(q);
    let r = vec_columns(&r_y);
    (r_y, r)
}

/// `r̂ = (1/Q) Σ y_q* ⊗ y_q`, evaluated directly.
pub fn sample_autocorrelation_kron(batch: &SnapshotBatch) -> ComplexVector {
    let (l, q) = batch.y.shape();
    let mut r = ComplexVector::zeros(l * l);
    for col in batch.y.column_iter() {
        for outer in 0..l {
            let c = col[outer].conj();
            for inner in 0..l {
                r[outer * l + inner] += c * col[inner];
            }
        }
    }
    r.unscale(q as f64)
}
