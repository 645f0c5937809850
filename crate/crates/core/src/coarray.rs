//! Spatial smoothing onto the virtual ULA and MUSIC direction finding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{phase, virtual_steering_vector, CombinerKind};
use crate::numerics::{kron, svd, ComplexMatrix, ComplexVector, C64};
use crate::simulation::SourceScene;

/// Virtual-ULA autocorrelation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMatrix {
    pub z: ComplexMatrix,
    pub source: Option<CombinerKind>,
}

impl SmoothedMatrix {
    pub fn size(&self) -> usize {
        self.z.nrows()
    }
}

/// `Z[r, c] = r_co(lag r - c)`, where `r_co` is indexed from lag `1 - L'`.
pub fn spatial_smooth(r_co: &ComplexVector) -> Result<ComplexMatrix> {
    if r_co.len() % 2 == 0 || r_co.is_empty() {
        return Err(Error::shape("odd length 2L'-1", format!("length {}", r_co.len())));
    }
    let lv = (r_co.len() + 1) / 2;
    Ok(ComplexMatrix::from_fn(lv, lv, |r, c| r_co[lv - 1 + r - c]))
}

pub fn spatial_smooth_tagged(r_co: &ComplexVector, kind: CombinerKind) -> Result<SmoothedMatrix> {
    Ok(SmoothedMatrix {
        z: spatial_smooth(r_co)?,
        source: Some(kind),
    })
}

/// `F = [F_1, ..., F_L']` with `F_m = [0 | I_L' | 0]` picking lags `1-m ..= L'-m`.
pub fn selection_operator(l_virtual: usize) -> DMatrix<f64> {
    let width = 2 * l_virtual - 1;
    let mut f = DMatrix::zeros(l_virtual, l_virtual * width);
    for m in 0..l_virtual {
        for r in 0..l_virtual {
            f[(r, m * width + l_virtual - 1 - m + r)] = 1.0;
        }
    }
    f
}

/// `Z = F (I ⊗ r_co)`, built literally. Slower than [`spatial_smooth`].
pub fn spatial_smooth_explicit(r_co: &ComplexVector) -> Result<ComplexMatrix> {
    if r_co.len() % 2 == 0 {
        return Err(Error::shape("odd length 2L'-1", format!("length {}", r_co.len())));
    }
    let lv = (r_co.len() + 1) / 2;
    let f = selection_operator(lv).map(|x| C64::new(x, 0.0));
    let col = ComplexMatrix::from_column_slice(r_co.len(), 1, r_co.as_slice());
    Ok(f * kron(&ComplexMatrix::identity(lv, lv), &col))
}

/// `S_co diag(d) S_coᴴ + σ² I` of size `l_virtual`.
pub fn nominal_coarray_matrix(scene: &SourceScene, l_virtual: usize) -> ComplexMatrix {
    let mut z = ComplexMatrix::from_diagonal_element(l_virtual, l_virtual, C64::new(scene.noise_power(), 0.0));
    for (t, d) in scene.thetas().iter().zip(scene.powers()) {
        let v = virtual_steering_vector(l_virtual, *t);
        z += (&v * v.adjoint()) * C64::new(*d, 0.0);
    }
    z
}

/// Nominal `r_co`, lags `1-L' ..= L'-1`.
pub fn nominal_coarray_vector(scene: &SourceScene, l_virtual: usize) -> ComplexVector {
    let max = l_virtual as i64 - 1;
    ComplexVector::from_iterator(
        2 * l_virtual - 1,
        (-max..=max).map(|n| {
            let s: C64 = scene
                .thetas()
                .iter()
                .zip(scene.powers())
                .map(|(t, d)| phase(*t, n as f64) * *d)
                .sum();
            if n == 0 {
                s + scene.noise_power()
            } else {
                s
            }
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 2001;

impl AngleGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || points < 3 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config("grid", format!("need lo < hi and >= 3 points, got [{lo}, {hi}] x {points}")));
        }
        Ok(AngleGrid { lo, hi, points })
    }

    pub fn over_support((lo, hi): (f64, f64)) -> Self {
        AngleGrid {
            lo,
            hi,
            points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.theta(i)).collect()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct MusicResult {
    pub grid: Vec<f64>,
    pub spectrum: Vec<f64>,
    /// Ascending.
    pub estimates: Vec<f64>,
    /// Fewer than `K` local minima were found; `estimates` holds only those.
    pub too_few_minima: bool,
}

/// `‖(I - UUᴴ) v(θ)‖²` on the grid, `U` the `K` dominant left singular vectors of `Z`.
pub fn music_spectrum(z: &ComplexMatrix, k: usize, grid: &AngleGrid) -> Result<MusicResult> {
    let lv = z.nrows();
    if z.ncols() != lv {
        return Err(Error::shape("square Z", format!("{:?}", z.shape())));
    }
    if k >= lv {
        return Err(Error::InvalidScene(format!("K = {k} must be below L' = {lv}")));
    }
    let thetas = grid.thetas();
    let steering = ComplexMatrix::from_fn(lv, thetas.len(), |r, c| phase(thetas[c], r as f64));
    let spectrum: Vec<f64> = if k == 0 {
        steering.column_iter().map(|c| c.norm_squared()).collect()
    } else {
        let u = svd(z)?.u.columns(0, k).into_owned();
        let residual = &steering - &u * (u.adjoint() * &steering);
        residual.column_iter().map(|c| c.norm_squared()).collect()
    };

    let mut minima: Vec<usize> = (1..spectrum.len() - 1)
        .filter(|&i| spectrum[i] < spectrum[i - 1] && spectrum[i] < spectrum[i + 1])
        .collect();
    minima.sort_by(|a, b| spectrum[*a].total_cmp(&spectrum[*b]).then(a.cmp(b)));
    minima.truncate(k);
    let too_few_minima = minima.len() < k;
    let h = grid.step();
    let mut estimates: Vec<f64> = minima
        .iter()
        .map(|&i| {
            let (pm, p0, pp) = (spectrum[i - 1], spectrum[i], spectrum[i + 1]);
            let curvature = pm - 2.0 * p0 + pp;
            let shift = if curvature > 0.0 {
                (0.5 * (pm - pp) / curvature).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            thetas[i] + shift * h
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    Ok(MusicResult {
        grid: thetas,
        spectrum,
        estimates,
        too_few_minima,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Ascending, always `K` long.
    pub thetas: Vec<f64>,
    pub padded: bool,
}

/// MUSIC estimates, padded with the grid midpoint when too few minima exist.
pub fn estimate_doas(z_hat: &ComplexMatrix, k: usize, grid: &AngleGrid) -> Result<DoaEstimate> {
    let music = music_spectrum(z_hat, k, grid)?;
    let mut thetas = music.estimates;
    let padded = thetas.len() < k;
    thetas.resize(k, grid.midpoint());
    thetas.sort_by(f64::total_cmp);
    Ok(DoaEstimate { thetas, padded })
}

pub fn write_spectrum<W: std::io::Write>(music: &MusicResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta_rad,p_music")?;
    for (t, p) in music.grid.iter().zip(&music.spectrum) {
        writeln!(out, "{t},{p}")?;
    }
    Ok(())
}
