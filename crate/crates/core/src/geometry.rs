//! Coprime array construction, difference-coarray lag sets and the
//! selection / averaging combining matrices.
//!
//! Positions are stored as integers in units of half a wavelength, so the
//! phase factor for lag `n` is `exp(-jπ n sin θ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, C64};

/// `v(θ)^n = exp(-jπ n sin θ)`.
#[inline]
pub fn phase(theta: f64, n: f64) -> C64 {
    C64::from_polar(1.0, -PI * n * theta.sin())
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Physical coprime array: `N` elements spaced by `M` overlapped with
/// `2M - 1` elements spaced by `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct ArrayGeometry {
    m: usize,
    n: usize,
    positions: Vec<i64>,
}

/// Serialized form of a geometry: just the coprime pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl TryFrom<GeometrySpec> for ArrayGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        ArrayGeometry::coprime(spec.m, spec.n)
    }
}

impl From<ArrayGeometry> for GeometrySpec {
    fn from(g: ArrayGeometry) -> Self {
        GeometrySpec { m: g.m, n: g.n }
    }
}

impl ArrayGeometry {
    pub fn coprime(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 || gcd(m, n) != 1 {
            return Err(Error::NotCoprime { m, n });
        }
        if m >= n {
            return Err(Error::OrderViolation { m, n });
        }
        let (mi, ni) = (m as i64, n as i64);
        let mut positions: Vec<i64> = (0..ni)
            .map(|i| i * mi)
            .chain((1..2 * mi).map(|i| i * ni))
            .collect();
        positions.sort_unstable();
        positions.dedup();
        debug_assert_eq!(positions.len(), 2 * m + n - 1);
        Ok(ArrayGeometry { m, n, positions })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Physical element count `L`.
    pub fn num_elements(&self) -> usize {
        self.positions.len()
    }

    /// Virtual ULA length `L' = MN + M`.
    pub fn num_virtual(&self) -> usize {
        self.m * self.n + self.m
    }

    /// Number of coarray lags, `2L' - 1`.
    pub fn num_lags(&self) -> usize {
        2 * self.num_virtual() - 1
    }

    pub fn max_lag(&self) -> i64 {
        self.num_virtual() as i64 - 1
    }

    pub fn max_position(&self) -> i64 {
        *self.positions.last().unwrap()
    }

    /// Outer (block) element index of `vec` index `j`, i.e. the column of
    /// `R_y` that entry `j` came from.
    #[inline]
    pub fn outer_index(&self, j: usize) -> usize {
        j / self.num_elements()
    }

    /// Inner element index of `vec` index `j` (the row of `R_y`).
    #[inline]
    pub fn inner_index(&self, j: usize) -> usize {
        j % self.num_elements()
    }

    #[inline]
    pub fn outer_position(&self, j: usize) -> i64 {
        self.positions[self.outer_index(j)]
    }

    #[inline]
    pub fn inner_position(&self, j: usize) -> i64 {
        self.positions[self.inner_index(j)]
    }

    /// Coarray lag carried by entry `j` of `vec(R_y)`.
    #[inline]
    pub fn lag_of(&self, j: usize) -> i64 {
        self.inner_position(j) - self.outer_position(j)
    }

    /// Physical array response `s(θ)`.
    pub fn steering_vector(&self, theta: f64) -> ComplexVector {
        ComplexVector::from_iterator(
            self.positions.len(),
            self.positions.iter().map(|&p| phase(theta, p as f64)),
        )
    }

    /// Virtual ULA response `[1, v, ..., v^(L'-1)]`.
    pub fn virtual_steering_vector(&self, theta: f64) -> ComplexVector {
        virtual_steering_vector(self.num_virtual(), theta)
    }

    /// Array-response matrix `S = [s(θ_1), ..., s(θ_K)]`.
    pub fn response_matrix(&self, thetas: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.num_elements(), thetas.len(), |l, k| {
            phase(thetas[k], self.positions[l] as f64)
        })
    }
}

pub fn make_coprime_array(m: usize, n: usize) -> Result<ArrayGeometry> {
    ArrayGeometry::coprime(m, n)
}

pub fn steering_vector(g: &ArrayGeometry, theta: f64) -> ComplexVector {
    g.steering_vector(theta)
}

pub fn virtual_steering_vector(len: usize, theta: f64) -> ComplexVector {
    ComplexVector::from_fn(len, |i, _| phase(theta, i as f64))
}

/// Sign convention of the lag index.
///
/// With `a(θ) = s(θ)* ⊗ s(θ)` and the first Kronecker operand supplying the
/// outer index, entry `j` equals `v(θ)^(p_inner - p_outer)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagConvention {
    InnerMinusOuter,
}

/// The sets `J_n`: for each lag `n` in `[1-L', L'-1]`, every index of
/// `vec(R_y)` whose nominal value is `v(θ)^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagIndexMap {
    max_lag: i64,
    vec_len: usize,
    sets: Vec<Vec<usize>>,
    convention: LagConvention,
}

impl LagIndexMap {
    pub fn max_lag(&self) -> i64 {
        self.max_lag
    }

    /// Length of the vectorized autocorrelation, `L²`.
    pub fn vec_len(&self) -> usize {
        self.vec_len
    }

    pub fn num_lags(&self) -> usize {
        self.sets.len()
    }

    pub fn convention(&self) -> LagConvention {
        self.convention
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        -self.max_lag..=self.max_lag
    }

    pub fn get(&self, lag: i64) -> Result<&[usize]> {
        if lag.abs() > self.max_lag {
            return Err(Error::LagOutOfRange {
                lag,
                max: self.max_lag,
            });
        }
        Ok(&self.sets[(lag + self.max_lag) as usize])
    }

    /// Sets in lag order, `J_{1-L'}` first.
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }
}

pub fn coarray_lag_sets(g: &ArrayGeometry) -> LagIndexMap {
    let max_lag = g.max_lag();
    let l = g.num_elements();
    let mut sets = vec![Vec::new(); g.num_lags()];
    for j in 0..l * l {
        let lag = g.lag_of(j);
        if lag.abs() <= max_lag {
            sets[(lag + max_lag) as usize].push(j);
        }
    }
    LagIndexMap {
        max_lag,
        vec_len: l * l,
        sets,
        convention: LagConvention::InnerMinusOuter,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    Selection,
    Averaging,
    Mmse,
}

impl CombinerKind {
    pub fn name(self) -> &'static str {
        match self {
            CombinerKind::Selection => "selection",
            CombinerKind::Averaging => "averaging",
            CombinerKind::Mmse => "mmse",
        }
    }
}

impl std::fmt::Display for CombinerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selection" | "sel" => Ok(CombinerKind::Selection),
            "averaging" | "avg" => Ok(CombinerKind::Averaging),
            "mmse" => Ok(CombinerKind::Mmse),
            other => Err(Error::config("combiner", format!("unknown combiner `{other}`"))),
        }
    }
}

/// Tie-break used by selection combining to pick one index from `J_n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picker {
    #[default]
    Smallest,
    Largest,
}

/// An `L² × (2L'-1)` combining matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Combiner {
    matrix: ComplexMatrix,
    kind: CombinerKind,
    picks: Option<Vec<usize>>,
}

impl Combiner {
    pub fn new(matrix: ComplexMatrix, kind: CombinerKind) -> Self {
        Combiner {
            matrix,
            kind,
            picks: None,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> CombinerKind {
        self.kind
    }

    /// Indices chosen per lag by a selection combiner.
    pub fn picks(&self) -> Option<&[usize]> {
        self.picks.as_deref()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

pub fn selection_combiner(map: &LagIndexMap, picker: Picker) -> Combiner {
    let mut matrix = ComplexMatrix::zeros(map.vec_len(), map.num_lags());
    let picks: Vec<usize> = map
        .sets()
        .iter()
        .map(|set| match picker {
            Picker::Smallest => *set.iter().min().expect("lag sets are nonempty"),
            Picker::Largest => *set.iter().max().expect("lag sets are nonempty"),
        })
        .collect();
    for (col, &j) in picks.iter().enumerate() {
        matrix[(j, col)] = C64::new(1.0, 0.0);
    }
    Combiner {
        matrix,
        kind: CombinerKind::Selection,
        picks: Some(picks),
    }
}

pub fn averaging_combiner(map: &LagIndexMap) -> Combiner {
    let mut matrix = ComplexMatrix::zeros(map.vec_len(), map.num_lags());
    for (col, set) in map.sets().iter().enumerate() {
        let w = C64::new(1.0 / set.len() as f64, 0.0);
        for &j in set {
            matrix[(j, col)] = w;
        }
    }
    Combiner::new(matrix, CombinerKind::Averaging)
}
