use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CenteredFft, Grid, SampledField};
use crate::tfa::{chirp_operator, stft, SymMatrix};
use crate::Complex64;

/// Outcome of the chirp covariance fit (`d = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpFit {
    pub a: f64,
    /// Least-squares slope of the correlation-peak shifts against `ξ`.
    pub b_peak: f64,
    /// Slope minimizing the squared magnitude mismatch after alignment.
    pub b_fit: f64,
    /// Max over the grid of `| |V_φ(e^{iaD²}f)(x,ξ)| − |V_{φ_A}f(x+b_fit ξ, ξ)| |`.
    pub deviation: f64,
    /// Largest `|ξ|` among the slices used for the fit.
    pub max_xi: f64,
    pub slices_used: usize,
}

impl ChirpFit {
    /// Whether `b` predicts shifts within one grid step across the fitted band.
    pub fn within_step(&self, b: f64, dx: f64) -> bool {
        (self.b_fit - b).abs() * self.max_xi <= dx
    }
}

/// Fraction of the global peak a slice needs to enter the fit.
const SLICE_THRESHOLD: f64 = 1e-3;

struct Slices {
    grid: Grid,
    xi: Vec<f64>,
    target: Vec<Vec<f64>>,
    spectra: Vec<Vec<Complex64>>,
    zeta: Vec<f64>,
    fft: CenteredFft,
}

impl Slices {
    /// Row `i` of `V_{φ_A}f` shifted so that entry `x` holds the value at `x + bξ`,
    /// and optionally its derivative in `b`.
    fn shifted(&self, i: usize, b: f64, with_derivative: bool) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
        let t = b * self.xi[i];
        let phase: Vec<Complex64> = self.zeta.iter().map(|z| Complex64::from_polar(1.0, z * t)).collect();
        let mut row: Vec<Complex64> = self.spectra[i].iter().zip(&phase).map(|(s, p)| s * p).collect();
        let deriv = with_derivative.then(|| {
            let mut d: Vec<Complex64> = row
                .iter()
                .zip(&self.zeta)
                .map(|(v, z)| v * Complex64::new(0.0, z * self.xi[i]))
                .collect();
            self.fft.inverse(&self.grid, &mut d);
            d
        });
        self.fft.inverse(&self.grid, &mut row);
        (row, deriv)
    }

    /// `(Σ (|R_b| − L)², d/db of it)`. Per-slice terms are summed in order so the
    /// result does not depend on thread scheduling.
    fn mismatch(&self, b: f64) -> (f64, f64) {
        let terms: Vec<(f64, f64)> = (0..self.xi.len())
            .into_par_iter()
            .map(|i| {
                let (row, d) = self.shifted(i, b, true);
                let d = d.expect("derivative requested");
                let mut j = 0.0;
                let mut dj = 0.0;
                for ((r, dr), l) in row.iter().zip(&d).zip(&self.target[i]) {
                    let mag = r.norm();
                    let e = mag - l;
                    j += e * e;
                    if mag > 0.0 {
                        dj += 2.0 * e * (r.conj() * dr).re / mag;
                    }
                }
                (j, dj)
            })
            .collect();
        terms.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
}

/// Circular cross-correlation peak of `l` against `r` (shift `s` with
/// `l(x) ≈ r(x + s)`), refined by a parabola through the neighbours.
fn correlation_peak(l: &[f64], r: &[f64]) -> f64 {
    let n = l.len();
    let corr = |s: isize| -> f64 {
        (0..n)
            .map(|x| l[x] * r[(x as isize + s).rem_euclid(n as isize) as usize])
            .sum()
    };
    let half = (n / 2) as isize;
    let values: Vec<f64> = (-half..half).map(corr).collect();
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let s = imax as isize - half;
    let at = |k: isize| values[(k + half).rem_euclid(n as isize) as usize];
    let (ym, y0, yp) = (at(s - 1), at(s), at(s + 1));
    let denom = ym - 2.0 * y0 + yp;
    let frac = if denom < 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
    s as f64 + frac.clamp(-0.5, 0.5)
}

/// Fits `B` in `|V_φ(e^{iaD²}f)(x,ξ)| = |V_{φ_A}f(x+Bξ, ξ)|`, `φ_A = e^{−iaD²}φ`.
pub fn check_chirp_covariance(a: &SymMatrix, f: &SampledField, window: &SampledField) -> Result<ChirpFit> {
    let grid = f.grid;
    if grid.d != 1 {
        return Err(Error::Verify("chirp covariance fit is implemented for d = 1".into()));
    }
    let lhs = stft(&chirp_operator(f, a)?, window)?;
    let phi_a = chirp_operator(window, &[[-a[0][0], 0.0], [0.0, 0.0]])?;
    let rhs = stft(f, &phi_a)?;
    let n = grid.n;
    let freq = lhs.frequency_grid;
    let column = |t: &crate::tfa::TimeFrequencyField, k: usize| t.frequency_slice(k);
    let peak = lhs.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if peak == 0.0 {
        return Err(Error::Verify("flat slices: the transform vanishes".into()));
    }
    let selected: Vec<usize> = (0..freq.len())
        .filter(|&k| column(&lhs, k).iter().any(|v| v.norm() >= SLICE_THRESHOLD * peak))
        .collect();
    if selected.len() < 2 {
        return Err(Error::Verify("flat slices: fewer than two usable frequencies".into()));
    }

    let fft = CenteredFft::new(n);
    let build = |ks: &[usize]| -> Slices {
        let mut xi = Vec::new();
        let mut target = Vec::new();
        let mut spectra = Vec::new();
        for &k in ks {
            xi.push(freq.coord(k));
            target.push(column(&lhs, k).iter().map(|v| v.norm()).collect());
            let mut s = column(&rhs, k);
            fft.forward(&grid, &mut s);
            spectra.push(s);
        }
        Slices {
            grid,
            xi,
            target,
            spectra,
            zeta: (0..n).map(|q| grid.dual().coord(q)).collect(),
            fft: fft.clone(),
        }
    };
    let fit = build(&selected);

    let shifts: Vec<f64> = selected
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let r: Vec<f64> = column(&rhs, k).iter().map(|v| v.norm()).collect();
            correlation_peak(&fit.target[i], &r) * grid.dx
        })
        .collect();
    let sxx: f64 = fit.xi.iter().map(|x| x * x).sum();
    let b_peak = if sxx > 0.0 {
        fit.xi.iter().zip(&shifts).map(|(x, s)| x * s).sum::<f64>() / sxx
    } else {
        0.0
    };
    let max_xi = fit.xi.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    // root of the mismatch derivative, bracketed around the peak estimate
    let h = 2.0 * grid.dx / max_xi.max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (b_peak - h, b_peak + h);
    let (mut g_lo, mut g_hi) = (fit.mismatch(lo).1, fit.mismatch(hi).1);
    let mut widen = 0;
    while !(g_lo < 0.0 && g_hi > 0.0) && widen < 8 {
        lo -= h;
        hi += h;
        g_lo = fit.mismatch(lo).1;
        g_hi = fit.mismatch(hi).1;
        widen += 1;
    }
    let b_fit = if g_lo < 0.0 && g_hi > 0.0 {
        for _ in 0..200 {
            if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let g = fit.mismatch(mid).1;
            if g == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    } else {
        log::warn!("chirp fit: no sign change of the mismatch slope, keeping the peak estimate");
        b_peak
    };

    let all: Vec<usize> = (0..freq.len()).collect();
    let every = build(&all);
    let deviation = (0..all.len())
        .into_par_iter()
        .map(|i| {
            let (row, _) = every.shifted(i, b_fit, false);
            row.iter()
                .zip(&every.target[i])
                .map(|(r, l)| (r.norm() - l).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    Ok(ChirpFit {
        a: a[0][0],
        b_peak,
        b_fit,
        deviation,
        max_xi,
        slices_used: selected.len(),
    })
}
