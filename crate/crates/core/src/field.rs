//! Uniform centered grids on the torus, sampled fields and the discrete
//! realization of `F[f](ξ) = (2π)^{-d/2} ∫ f(x) e^{-i⟨x,ξ⟩} dx`.
//!
//! A grid with `n` samples per axis and spacing `dx` has positions
//! `x_j = (j − n/2)·dx`. Its frequency grid is again a centered grid, with
//! spacing `dξ = 2π/(n·dx)`; [`Grid::dual`] returns it, and a transformed
//! field lives on the dual grid. The transform is unitary for the quadrature
//! inner products `Σ f·conj(g)·dx^d` and `Σ F·conj(G)·dξ^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold above which a field is flagged as touching the box edge.
pub const BOUNDARY_MASS_FLAG: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(d: usize, n: usize, dx: f64) -> Result<Self> {
        let g = Self { d, n, dx };
        g.validate()?;
        Ok(g)
    }

    /// `d = 1`, `n = 512`, `dx = 0.125`.
    pub fn default_1d() -> Self {
        Self { d: 1, n: 512, dx: 0.125 }
    }

    /// `d = 2`, `n = 64`, `dx = 0.25`.
    pub fn default_2d() -> Self {
        Self { d: 2, n: 64, dx: 0.25 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 1 && self.d != 2 {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{1, 2}}", self.d)));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {} is not a power of two ≥ 2", self.n)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {}", self.dx)));
        }
        Ok(())
    }

    /// Total number of samples `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box side `L = n·dx`.
    pub fn box_len(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Frequency spacing `2π/(n·dx)`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx)
    }

    /// Frequency extent `Ξ = 2π/dx`.
    pub fn frequency_extent(&self) -> f64 {
        2.0 * PI / self.dx
    }

    /// The frequency grid, itself a centered grid with spacing `dξ`.
    pub fn dual(&self) -> Grid {
        Grid {
            d: self.d,
            n: self.n,
            dx: self.dxi(),
        }
    }

    /// Cell measure `dx^d`.
    pub fn cell(&self) -> f64 {
        self.dx.powi(self.d as i32)
    }

    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx
    }

    /// Per-axis indices of a linear (row-major) index.
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    #[inline]
    pub fn ravel(&self, ix: [usize; 2]) -> usize {
        if self.d == 1 {
            ix[0]
        } else {
            ix[0] * self.n + ix[1]
        }
    }

    /// Coordinates of a linear index; unused trailing entries are 0.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ix = self.unravel(idx);
        if self.d == 1 {
            [self.coord(ix[0]), 0.0]
        } else {
            [self.coord(ix[0]), self.coord(ix[1])]
        }
    }

    /// Linear index of the origin sample.
    pub fn origin_index(&self) -> usize {
        self.ravel([self.n / 2, self.n / 2])
    }

    /// Index of `x_i + s·dx` per axis, wrapping periodically.
    #[inline]
    pub fn shifted(&self, idx: usize, shift: [isize; 2]) -> usize {
        let ix = self.unravel(idx);
        let n = self.n as isize;
        let w = |i: usize, s: isize| ((i as isize + s).rem_euclid(n)) as usize;
        if self.d == 1 {
            w(ix[0], shift[0])
        } else {
            self.ravel([w(ix[0], shift[0]), w(ix[1], shift[1])])
        }
    }

    /// Same dimension and size with spacings equal to 1e-12 relative.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.d == other.d && self.n == other.n && ((self.dx - other.dx) / self.dx).abs() < 1e-12
    }

    /// Same box, twice the samples per axis.
    pub fn refined(&self) -> Grid {
        Grid {
            d: self.d,
            n: self.n * 2,
            dx: self.dx / 2.0,
        }
    }

    pub fn describe(&self) -> String {
        format!("d={} n={} dx={}", self.d, self.n, self.dx)
    }
}

/// Centered fast transform for one grid size; shared across threads.
#[derive(Clone)]
pub struct CenteredFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `(−1)^j`
    sign: Vec<f64>,
    /// `(−1)^{n/2}`
    global_sign: f64,
}

impl CenteredFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            sign: (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            global_sign: if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 },
        }
    }

    /// In-place 1d centered transform of one line; `scale` multiplies the result.
    fn line(&self, buf: &mut [Complex64], inverse: bool, scale: f64) {
        for (v, s) in buf.iter_mut().zip(&self.sign) {
            *v *= *s;
        }
        if inverse {
            self.inverse.process(buf);
        } else {
            self.forward.process(buf);
        }
        let g = scale * self.global_sign;
        for (v, s) in buf.iter_mut().zip(&self.sign) {
            *v *= *s * g;
        }
    }

    /// Forward transform of values sampled on `grid`, in place; the result is
    /// indexed by the dual grid.
    pub fn forward(&self, grid: &Grid, values: &mut [Complex64]) {
        let scale = grid.dx / (2.0 * PI).sqrt();
        self.apply(grid.d, values, false, scale);
    }

    /// Inverse transform of values on the frequency grid of `grid`, in place.
    pub fn inverse(&self, grid: &Grid, values: &mut [Complex64]) {
        let scale = grid.dxi() / (2.0 * PI).sqrt();
        self.apply(grid.d, values, true, scale);
    }

    fn apply(&self, d: usize, values: &mut [Complex64], inverse: bool, scale: f64) {
        let n = self.n;
        debug_assert_eq!(values.len(), n.pow(d as u32));
        if d == 1 {
            self.line(values, inverse, scale);
            return;
        }
        for row in values.chunks_exact_mut(n) {
            self.line(row, inverse, scale);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = values[r * n + c];
            }
            self.line(&mut col, inverse, scale);
            for r in 0..n {
                values[r * n + c] = col[r];
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    Gaussian { sigma: f64 },
    FourierOfGaussian { sigma: f64 },
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("field sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every grid point; `f` receives `[x_1, x_2]` (`x_2 = 0` when `d = 1`).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Unit-mass spike at the origin (`1/dx^d` at one sample).
    pub fn delta(grid: Grid) -> Self {
        let mut out = Self::zeros(grid);
        out.values[grid.origin_index()] = Complex64::new(1.0 / grid.cell(), 0.0);
        out
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn normalized(&self) -> Self {
        let n = self.l2_norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(Complex64::new(1.0 / n, 0.0))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Max `|f − g|` over the grid.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Quadrature transform; the result lives on `grid.dual()`.
    pub fn forward_fourier(&self) -> Self {
        let fft = CenteredFft::new(self.grid.n);
        let mut values = self.values.clone();
        fft.forward(&self.grid, &mut values);
        Self {
            grid: self.grid.dual(),
            values,
        }
    }

    /// Inverse of [`forward_fourier`](Self::forward_fourier): a field on a
    /// frequency grid maps back to the position grid whose dual it is.
    pub fn inverse_fourier(&self) -> Self {
        let position = self.grid.dual();
        let fft = CenteredFft::new(self.grid.n);
        let mut values = self.values.clone();
        fft.inverse(&position, &mut values);
        Self {
            grid: position,
            values,
        }
    }

    /// Periodic convolution `Σ_y f(x − y) g(y) dx^d`, computed spectrally.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let fft = CenteredFft::new(self.grid.n);
        let mut a = self.values.clone();
        let mut b = other.values.clone();
        fft.forward(&self.grid, &mut a);
        fft.forward(&self.grid, &mut b);
        let c = (2.0 * PI).powf(self.grid.d as f64 / 2.0);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y * c;
        }
        fft.inverse(&self.grid, &mut a);
        Ok(Self {
            grid: self.grid,
            values: a,
        })
    }

    /// Fraction of `‖f‖²` carried by the outer `n/16` samples of each axis.
    pub fn boundary_mass(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let band = (self.grid.n / 16).max(1);
        let near = |i: usize| i < band || i >= self.grid.n - band;
        let edge: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let ix = self.grid.unravel(*idx);
                near(ix[0]) || (self.grid.d == 2 && near(ix[1]))
            })
            .map(|(_, v)| v.norm_sqr())
            .sum();
        edge / total
    }

    /// Trigonometric interpolation onto [`Grid::refined`]: same box, half spacing.
    pub fn spectral_refine(&self) -> Self {
        let fine = self.grid.refined();
        let spec = self.forward_fourier();
        let n = self.grid.n;
        let off = n / 2;
        let mut out = SampledField::zeros(fine.dual());
        for (idx, v) in spec.values.iter().enumerate() {
            let ix = self.grid.unravel(idx);
            let j = fine.ravel([ix[0] + off, ix[1] + off]);
            out.values[j] = *v;
        }
        out.inverse_fourier()
    }
}

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{} vs {}", a.describe(), b.describe())))
    }
}

/// L²-normalized window on `grid`.
pub fn make_window(kind: WindowKind, grid: Grid) -> Result<SampledField> {
    grid.validate()?;
    let sigma = match kind {
        WindowKind::Gaussian { sigma } => sigma,
        WindowKind::FourierOfGaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::Domain(format!("window width {sigma}")));
            }
            // F[e^{-|x|²/2σ²}] ∝ e^{-σ²|ξ|²/2}
            1.0 / sigma
        }
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("window width {sigma}")));
    }
    let s2 = 2.0 * sigma * sigma;
    let w = SampledField::from_real_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1]) / s2).exp());
    Ok(w.normalized())
}

pub fn gaussian_window(sigma: f64, grid: Grid) -> Result<SampledField> {
    make_window(WindowKind::Gaussian { sigma }, grid)
}

/// Complex Gaussian spectrum on the central `band_fraction` of the frequency
/// grid, transformed back to positions. Deterministic per seed.
pub fn random_bandlimited(grid: Grid, band_fraction: f64, seed: u64) -> Result<SampledField> {
    grid.validate()?;
    if !(band_fraction > 0.0 && band_fraction <= 1.0) {
        return Err(Error::Domain(format!("band fraction {band_fraction}")));
    }
    let n = grid.n;
    let kept = ((band_fraction * n as f64).round() as usize).clamp(1, n);
    let lo = n / 2 - kept / 2;
    let in_band = |k: usize| k >= lo && k < lo + kept;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SampledField::zeros(grid.dual());
    for idx in 0..grid.len() {
        let ix = grid.unravel(idx);
        if in_band(ix[0]) && (grid.d == 1 || in_band(ix[1])) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            spec.values[idx] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    Ok(spec.inverse_fourier())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_forward(f: &SampledField) -> Vec<Complex64> {
        let g = f.grid;
        let dual = g.dual();
        let c = g.cell() / (2.0 * PI).powf(g.d as f64 / 2.0);
        (0..g.len())
            .map(|k| {
                let xi = dual.point(k);
                f.values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let x = g.point(j);
                        v * Complex64::from_polar(1.0, -(x[0] * xi[0] + x[1] * xi[1]))
                    })
                    .sum::<Complex64>()
                    * c
            })
            .collect()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new(1, 8, 0.5).unwrap();
        assert_eq!(g.coord(4), 0.0);
        assert_eq!(g.coord(0), -2.0);
        assert!((g.dual().dx * g.dx * 8.0 - 2.0 * PI).abs() < 1e-14);
        assert!(g.dual().dual().compatible(&g));
        assert!(Grid::new(1, 12, 0.5).is_err());
        assert!(Grid::new(3, 8, 0.5).is_err());
    }

    #[test]
    fn fast_transform_matches_direct_sum() {
        for grid in [Grid::new(1, 32, 0.3).unwrap(), Grid::new(2, 8, 0.7).unwrap()] {
            let f = random_bandlimited(grid, 1.0, 3).unwrap();
            let fast = f.forward_fourier();
            let slow = direct_forward(&f);
            let err = fast
                .values
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn gaussian_is_self_dual() {
        let grid = Grid::new(1, 256, 0.1).unwrap();
        let f = SampledField::from_real_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let fh = f.forward_fourier();
        for (k, v) in fh.values.iter().enumerate() {
            let xi = fh.grid.coord(k);
            assert!((v - Complex64::new((-xi * xi / 2.0).exp(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn spike_transforms_to_constant() {
        let grid = Grid::new(1, 64, 0.25).unwrap();
        let fh = SampledField::delta(grid).forward_fourier();
        let c = 1.0 / (2.0 * PI).sqrt();
        assert!(fh.values.iter().all(|v| (v - Complex64::new(c, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn zero_transforms_to_zero() {
        let grid = Grid::default_1d();
        assert_eq!(SampledField::zeros(grid).forward_fourier().max_abs(), 0.0);
    }

    #[test]
    fn round_trip_and_plancherel() {
        for grid in [Grid::default_1d(), Grid::new(2, 32, 0.25).unwrap()] {
            let f = random_bandlimited(grid, 0.7, 11).unwrap();
            let fh = f.forward_fourier();
            assert!((fh.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-11);
            let back = fh.inverse_fourier();
            assert!(back.grid.compatible(&grid));
            assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs());
        }
    }

    #[test]
    fn windows() {
        let grid = Grid::default_1d();
        let g = gaussian_window(1.0, grid).unwrap();
        let c = PI.powf(-0.25);
        for (j, v) in g.values.iter().enumerate() {
            let x = grid.coord(j);
            assert!((v.re - c * (-x * x / 2.0).exp()).abs() < 1e-12);
        }
        let h = make_window(WindowKind::FourierOfGaussian { sigma: 1.0 }, grid).unwrap();
        assert!(h.max_abs_diff(&g) < 1e-10);
        let g2 = gaussian_window(2.0, grid).unwrap();
        assert!((g2.l2_norm() - 1.0).abs() < 1e-12);
        assert!(gaussian_window(0.0, grid).is_err());
    }

    #[test]
    fn bandlimited_ensemble() {
        let grid = Grid::new(1, 256, 0.125).unwrap();
        let a = random_bandlimited(grid, 1.0, 5).unwrap();
        let b = random_bandlimited(grid, 1.0, 5).unwrap();
        assert_eq!(a, b);
        let c = random_bandlimited(grid, 1.0, 6).unwrap();
        assert!(a.max_abs_diff(&c) > 0.0);

        let q = random_bandlimited(grid, 0.25, 9).unwrap().forward_fourier();
        for (k, v) in q.values.iter().enumerate() {
            if !(96..160).contains(&k) {
                assert!(v.norm() <= 1e-12, "{k}: {v}");
            }
        }
    }

    #[test]
    fn convolution_identities() {
        let grid = Grid::new(1, 128, 0.125).unwrap();
        let f = random_bandlimited(grid, 0.5, 1).unwrap();
        let g = random_bandlimited(grid, 0.5, 2).unwrap();
        let id = f.convolve(&SampledField::delta(grid)).unwrap();
        assert!(id.max_abs_diff(&f) < 1e-10);
        let fg = f.convolve(&g).unwrap();
        let gf = g.convolve(&f).unwrap();
        assert!(fg.max_abs_diff(&gf) < 1e-13 * fg.max_abs().max(1.0));
        let other = Grid::new(1, 64, 0.125).unwrap();
        assert!(matches!(
            f.convolve(&SampledField::zeros(other)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn refinement_preserves_bandlimited_field() {
        let grid = Grid::new(1, 64, 0.25).unwrap();
        let f = random_bandlimited(grid, 0.5, 4).unwrap();
        let fine = f.spectral_refine();
        assert_eq!(fine.grid.n, 128);
        for j in 0..64 {
            assert!((fine.values[2 * j] - f.values[j]).norm() < 1e-12);
        }
        assert!((fine.l2_norm() - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn boundary_mass_of_centered_gaussian_is_negligible() {
        let g = gaussian_window(1.0, Grid::default_1d()).unwrap();
        assert!(g.boundary_mass() < BOUNDARY_MASS_FLAG);
        let r = random_bandlimited(Grid::default_1d(), 0.5, 1).unwrap();
        assert!(r.boundary_mass() > BOUNDARY_MASS_FLAG);
    }
}
