//! Short-time Fourier transforms on the periodic grid.
//!
//! Two conventions are provided:
//!
//! * [`stft`]: `V_φf(x,ξ) = (2π)^{-d/2} Σ_y f(y)·conj(φ(y−x))·e^{-i⟨y,ξ⟩}·dx^d`
//! * [`stft_t`]: `T_φf(x,ξ) = (2π)^{-d/2} Σ_y f(y+x)·conj(φ(y))·e^{-i⟨y,ξ⟩}·dx^d`
//!
//! They differ by the unimodular factor `e^{i⟨x,ξ⟩}`. Position shifts are
//! circular; `x` runs over the position grid of the field and `ξ` over its
//! frequency grid (optionally oversampled by zero padding).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, CenteredFft, Grid, SampledField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFrequencyField {
    pub position_grid: Grid,
    pub frequency_grid: Grid,
    /// Position-major: `values[m * frequency_grid.len() + k]`.
    pub values: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftOptions {
    /// Zero-padding factor of the windowed product; 1 keeps the field's own frequency grid.
    pub oversample: usize,
}

impl Default for StftOptions {
    fn default() -> Self {
        Self { oversample: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Convention {
    V,
    T,
}

impl TimeFrequencyField {
    pub fn new(position_grid: Grid, frequency_grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if position_grid.d != frequency_grid.d {
            return Err(Error::GridMismatch("grids of different dimension".into()));
        }
        if values.len() != position_grid.len() * frequency_grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} x {} grid points",
                values.len(),
                position_grid.len(),
                frequency_grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("time-frequency sample".into()));
        }
        Ok(Self {
            position_grid,
            frequency_grid,
            values,
        })
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> Complex64 {
        self.values[m * self.frequency_grid.len() + k]
    }

    /// Values at one position index, over all frequencies.
    pub fn position_slice(&self, m: usize) -> &[Complex64] {
        let nf = self.frequency_grid.len();
        &self.values[m * nf..(m + 1) * nf]
    }

    /// Values at one frequency index, over all positions.
    pub fn frequency_slice(&self, k: usize) -> Vec<Complex64> {
        let nf = self.frequency_grid.len();
        (0..self.position_grid.len())
            .map(|m| self.values[m * nf + k])
            .collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `‖F‖_{L²}` with cell measure `dx^d·dξ^d`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.position_grid.cell() * self.frequency_grid.cell();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

struct Plan {
    grid: Grid,
    padded: Grid,
    offset: usize,
    fft: CenteredFft,
}

impl Plan {
    fn new(grid: Grid, opts: StftOptions) -> Result<Self> {
        if opts.oversample == 0 || !opts.oversample.is_power_of_two() {
            return Err(Error::Domain(format!(
                "oversampling factor {} must be a power of two",
                opts.oversample
            )));
        }
        let padded = Grid {
            d: grid.d,
            n: grid.n * opts.oversample,
            dx: grid.dx,
        };
        Ok(Self {
            grid,
            padded,
            offset: (padded.n - grid.n) / 2,
            fft: CenteredFft::new(padded.n),
        })
    }

    /// Transform of the windowed product for one position index `m`.
    fn row(
        &self,
        f: &[Complex64],
        window: &[Complex64],
        m: usize,
        conv: Convention,
        out: &mut [Complex64],
    ) {
        let g = &self.grid;
        let half = (g.n / 2) as isize;
        let mi = g.unravel(m);
        let shift = [mi[0] as isize - half, mi[1] as isize - half];
        out.fill(Complex64::new(0.0, 0.0));
        for j in 0..g.len() {
            let v = match conv {
                // f(y_j)·conj(φ(y_j − x_m))
                Convention::V => f[j] * window[g.shifted(j, [-shift[0], -shift[1]])].conj(),
                // f(y_j + x_m)·conj(φ(y_j))
                Convention::T => f[g.shifted(j, shift)] * window[j].conj(),
            };
            let ix = g.unravel(j);
            out[self
                .padded
                .ravel([ix[0] + self.offset, ix[1] + self.offset])] = v;
        }
        self.fft.forward(&self.padded, out);
    }
}

fn check_inputs(f: &SampledField, window: &SampledField) -> Result<()> {
    ensure_same_grid(&f.grid, &window.grid)?;
    if window.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroWindow);
    }
    Ok(())
}

fn transform(
    f: &SampledField,
    window: &SampledField,
    opts: StftOptions,
    conv: Convention,
) -> Result<TimeFrequencyField> {
    check_inputs(f, window)?;
    let plan = Plan::new(f.grid, opts)?;
    let nf = plan.padded.len();
    let mut values = vec![Complex64::new(0.0, 0.0); f.grid.len() * nf];
    values
        .par_chunks_mut(nf)
        .enumerate()
        .for_each(|(m, out)| plan.row(&f.values, &window.values, m, conv, out));
    Ok(TimeFrequencyField {
        position_grid: f.grid,
        frequency_grid: plan.padded.dual(),
        values,
    })
}

/// `V_φ f` on the position × frequency grid.
pub fn stft(f: &SampledField, window: &SampledField) -> Result<TimeFrequencyField> {
    transform(f, window, StftOptions::default(), Convention::V)
}

pub fn stft_with(
    f: &SampledField,
    window: &SampledField,
    opts: StftOptions,
) -> Result<TimeFrequencyField> {
    transform(f, window, opts, Convention::V)
}

/// `T_φ f`, the phase-shifted convention.
pub fn stft_t(f: &SampledField, window: &SampledField) -> Result<TimeFrequencyField> {
    transform(f, window, StftOptions::default(), Convention::T)
}

/// `V_φ f(x_m, ·)` for a single position index.
pub fn stft_at(f: &SampledField, window: &SampledField, m: usize) -> Result<Vec<Complex64>> {
    check_inputs(f, window)?;
    if m >= f.grid.len() {
        return Err(Error::Domain(format!("position index {m}")));
    }
    let plan = Plan::new(f.grid, StftOptions::default())?;
    let mut out = vec![Complex64::new(0.0, 0.0); f.grid.len()];
    plan.row(&f.values, &window.values, m, Convention::V, &mut out);
    Ok(out)
}

/// Symmetric real `d × d` matrix; only the leading `d × d` block is used.
pub type SymMatrix = [[f64; 2]; 2];

pub(crate) fn check_symmetric(a: &SymMatrix, d: usize) -> Result<()> {
    if d == 2 && (a[0][1] - a[1][0]).abs() > 1e-14 * (1.0 + a[0][1].abs()) {
        return Err(Error::Domain("chirp matrix is not symmetric".into()));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("chirp matrix".into()));
    }
    Ok(())
}

#[inline]
pub(crate) fn quadratic_form(a: &SymMatrix, xi: [f64; 2], d: usize) -> f64 {
    if d == 1 {
        a[0][0] * xi[0] * xi[0]
    } else {
        a[0][0] * xi[0] * xi[0] + 2.0 * a[0][1] * xi[0] * xi[1] + a[1][1] * xi[1] * xi[1]
    }
}

/// `e^{i⟨AD,D⟩} f = F^{-1}[e^{i⟨Aξ,ξ⟩}·F f]`.
pub fn chirp_operator(f: &SampledField, a: &SymMatrix) -> Result<SampledField> {
    check_symmetric(a, f.grid.d)?;
    let mut spec = f.forward_fourier();
    let g = spec.grid;
    for (k, v) in spec.values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, quadratic_form(a, g.point(k), g.d));
    }
    Ok(spec.inverse_fourier())
}

/// Max over the grid of `| |V_φf(x,ξ)| − |V_{φ̂}f̂(ξ,−x)| |`.
pub fn fourier_stft_symmetry_check(f: &SampledField, window: &SampledField) -> Result<f64> {
    let direct = stft(f, window)?;
    let dual = stft(&f.forward_fourier(), &window.forward_fourier())?;
    let g = f.grid;
    let n = g.n;
    let neg = |i: usize| (n - i) % n;
    let mut dev: f64 = 0.0;
    for m in 0..g.len() {
        let mi = g.unravel(m);
        let minus_x = g.ravel([neg(mi[0]), neg(mi[1])]);
        for k in 0..g.len() {
            let a = direct.get(m, k).norm();
            let b = dual.get(k, minus_x).norm();
            dev = dev.max((a - b).abs());
        }
    }
    Ok(dev)
}
