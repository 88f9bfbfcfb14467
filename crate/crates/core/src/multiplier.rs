//! Fourier multipliers `m(D) = F^{-1}∘(m·)∘F`, the Mihlin and Hörmander
//! condition functionals, and the cutoff / dyadic / Taylor constructions used
//! to split homogeneous chirps `e^{i c|ξ|^α}` into a compactly supported part
//! and a part vanishing near the origin.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, Grid, SampledField};
use crate::tfa::{check_symmetric, quadratic_form, SymMatrix};
use crate::young::parse_real_param;

/// Multi-index `(α₁, α₂)`; the second entry is 0 when `d = 1`.
pub type MultiIndex = [usize; 2];

/// Builtin symbols that can be evaluated anywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "symbol", rename_all = "snake_case")]
pub enum ParametricSymbol {
    /// `m ≡ 1`
    Identity,
    /// `e^{i c |ξ|^α}`
    HomogeneousChirp { c: f64, alpha: f64 },
    /// `e^{i⟨Aξ,ξ⟩}`
    QuadraticChirp { a: SymMatrix },
    /// `ξ_j² / (1 + |ξ|²)`
    RationalMihlin {
        #[serde(default)]
        axis: usize,
    },
    /// `ξ_j / |ξ|`
    SignType {
        #[serde(default)]
        axis: usize,
    },
    /// `e^{−|ξ|²/(2σ²)}`
    GaussianBump { sigma: f64 },
    /// `e^{i c|ξ|^α} χ(ξ)`
    CutoffLow { c: f64, alpha: f64 },
    /// `e^{i c|ξ|^α} (1 − χ(ξ))`
    CutoffHigh { c: f64, alpha: f64 },
}

/// Symbol values on the frequency grid `grid.dual()` of a position grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSymbol {
    /// Frequency grid the values live on.
    pub frequencies: Grid,
    pub values: Vec<Complex64>,
    pub singular_at_origin: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MultiplierSymbol {
    Parametric(ParametricSymbol),
    Tabulated(TabulatedSymbol),
}

/// Smooth radial cutoff: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cutoff;

fn smooth_step_kernel(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl Cutoff {
    /// `χ` as a function of `s = |ξ|`.
    pub fn radial(&self, s: f64) -> f64 {
        if s <= 1.0 {
            1.0
        } else if s >= 2.0 {
            0.0
        } else {
            let a = smooth_step_kernel(2.0 - s);
            let b = smooth_step_kernel(s - 1.0);
            a / (a + b)
        }
    }

    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        self.radial(xi[0].hypot(xi[1]))
    }

    /// Dyadic piece `ψ(η) = χ(η/2) − χ(η)`.
    pub fn psi(&self, xi: [f64; 2]) -> f64 {
        self.eval([xi[0] / 2.0, xi[1] / 2.0]) - self.eval(xi)
    }
}

#[inline]
fn norm(xi: [f64; 2]) -> f64 {
    xi[0].hypot(xi[1])
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Axis list of a multi-index, e.g. `(1,1)` → `[0, 1]`, `(2,0)` → `[0, 0]`.
fn axes(alpha: MultiIndex) -> Vec<usize> {
    let mut v = vec![0; alpha[0]];
    v.extend(std::iter::repeat_n(1, alpha[1]));
    v
}

/// All multi-indices with `|α| ≤ max_order` in dimension `d`, ordered by `|α|`.
pub fn multi_indices(d: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        if d == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// `⌊d/2⌋ + 1`
pub fn default_max_order(d: usize) -> usize {
    d / 2 + 1
}

/// Derivatives of `e^{iμ}` from those of the phase.
fn phase_partial(m: Complex64, dmu: [f64; 2], d2mu: [[f64; 2]; 2], ax: &[usize]) -> Complex64 {
    let i = Complex64::i();
    match ax {
        [] => m,
        [j] => i * dmu[*j] * m,
        [j, k] => (i * d2mu[*j][*k] - dmu[*j] * dmu[*k]) * m,
        _ => unreachable!(),
    }
}

impl ParametricSymbol {
    /// Parses `identity`, `homogeneous_chirp:c,alpha`, `quadratic_chirp:a`
    /// (`a11,a12,a22` in 2d), `rational_mihlin[:axis]`, `sign[:axis]`,
    /// `gaussian_bump:sigma`, or a JSON object with a `symbol` tag.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()));
        }
        let (name, args) = text.split_once(':').unwrap_or((text, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|s| parse_real_param(s.trim())).collect::<Result<_>>()?
        };
        let need = |k: &[usize]| -> Result<()> {
            if k.contains(&nums.len()) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "symbol `{name}` expects {k:?} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        let axis = |nums: &[f64]| nums.first().map(|v| *v as usize).unwrap_or(0);
        let sym = match name.to_ascii_lowercase().as_str() {
            "identity" | "one" => {
                need(&[0])?;
                Self::Identity
            }
            "homogeneous_chirp" | "chirp" => {
                need(&[2])?;
                Self::HomogeneousChirp {
                    c: nums[0],
                    alpha: nums[1],
                }
            }
            "quadratic_chirp" => {
                need(&[1, 3])?;
                let a = if nums.len() == 1 {
                    [[nums[0], 0.0], [0.0, 0.0]]
                } else {
                    [[nums[0], nums[1]], [nums[1], nums[2]]]
                };
                Self::QuadraticChirp { a }
            }
            "rational_mihlin" => {
                need(&[0, 1])?;
                Self::RationalMihlin { axis: axis(&nums) }
            }
            "sign" | "sign_type" => {
                need(&[0, 1])?;
                Self::SignType { axis: axis(&nums) }
            }
            "gaussian_bump" | "gaussian" => {
                need(&[1])?;
                Self::GaussianBump { sigma: nums[0] }
            }
            "cutoff_low" => {
                need(&[2])?;
                Self::CutoffLow { c: nums[0], alpha: nums[1] }
            }
            "cutoff_high" => {
                need(&[2])?;
                Self::CutoffHigh { c: nums[0], alpha: nums[1] }
            }
            other => return Err(Error::Config(format!("unknown symbol `{other}`"))),
        };
        sym.validate(2)?;
        Ok(sym)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Symbol(m));
        match self {
            Self::HomogeneousChirp { c, alpha }
            | Self::CutoffLow { c, alpha }
            | Self::CutoffHigh { c, alpha }
                if !(c.is_finite() && *alpha > 0.0 && alpha.is_finite()) =>
            {
                bad(format!("chirp parameters c = {c}, alpha = {alpha}"))
            }
            Self::QuadraticChirp { a } => check_symmetric(a, d),
            Self::RationalMihlin { axis } | Self::SignType { axis } if *axis >= d => {
                bad(format!("axis {axis} out of range for d = {d}"))
            }
            Self::GaussianBump { sigma } if !(*sigma > 0.0) => bad(format!("sigma = {sigma}")),
            _ => Ok(()),
        }
    }

    pub fn singular_at_origin(&self) -> bool {
        matches!(self, Self::SignType { .. })
    }

    pub fn is_unimodular(&self) -> bool {
        matches!(
            self,
            Self::Identity | Self::HomogeneousChirp { .. } | Self::QuadraticChirp { .. }
        )
    }

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::HomogeneousChirp { c, alpha } => format!("homogeneous_chirp({c},{alpha})"),
            Self::QuadraticChirp { a } => format!("quadratic_chirp({:?})", a),
            Self::RationalMihlin { axis } => format!("rational_mihlin({axis})"),
            Self::SignType { axis } => format!("sign({axis})"),
            Self::GaussianBump { sigma } => format!("gaussian_bump({sigma})"),
            Self::CutoffLow { c, alpha } => format!("cutoff_low({c},{alpha})"),
            Self::CutoffHigh { c, alpha } => format!("cutoff_high({c},{alpha})"),
        }
    }

    /// `m(ξ)`; `NaN` where the symbol is undefined (sign-type at the origin).
    pub fn eval(&self, xi: [f64; 2], d: usize) -> Complex64 {
        let s = norm(xi);
        match self {
            Self::Identity => Complex64::new(1.0, 0.0),
            Self::HomogeneousChirp { c, alpha } => Complex64::from_polar(1.0, c * s.powf(*alpha)),
            Self::QuadraticChirp { a } => Complex64::from_polar(1.0, quadratic_form(a, xi, d)),
            Self::RationalMihlin { axis } => {
                Complex64::new(xi[*axis] * xi[*axis] / (1.0 + s * s), 0.0)
            }
            Self::SignType { axis } => {
                if s == 0.0 {
                    Complex64::new(f64::NAN, 0.0)
                } else {
                    Complex64::new(xi[*axis] / s, 0.0)
                }
            }
            Self::GaussianBump { sigma } => {
                Complex64::new((-s * s / (2.0 * sigma * sigma)).exp(), 0.0)
            }
            Self::CutoffLow { c, alpha } => {
                Complex64::from_polar(1.0, c * s.powf(*alpha)) * Cutoff.radial(s)
            }
            Self::CutoffHigh { c, alpha } => {
                Complex64::from_polar(1.0, c * s.powf(*alpha)) * (1.0 - Cutoff.radial(s))
            }
        }
    }

    /// Analytic `∂^α m(ξ)` for `|α| ≤ 2`, `ξ ≠ 0` where the symbol is singular.
    pub fn partial(&self, xi: [f64; 2], alpha: MultiIndex, d: usize) -> Result<Complex64> {
        let ax = axes(alpha);
        if ax.len() > 2 {
            return Err(Error::Symbol("analytic partials are provided up to order 2".into()));
        }
        if d == 1 && alpha[1] != 0 {
            return Err(Error::Symbol("second axis requested in d = 1".into()));
        }
        let s = norm(xi);
        let zero = Complex64::new(0.0, 0.0);
        let real = |v: f64| Complex64::new(v, 0.0);
        Ok(match self {
            Self::Identity => {
                if ax.is_empty() {
                    real(1.0)
                } else {
                    zero
                }
            }
            Self::HomogeneousChirp { c, alpha: a } => {
                let m = self.eval(xi, d);
                if ax.is_empty() {
                    m
                } else {
                    let p1 = c * a * s.powf(a - 2.0);
                    let p2 = c * a * (a - 2.0) * s.powf(a - 4.0);
                    let dmu = [p1 * xi[0], p1 * xi[1]];
                    let mut d2mu = [[0.0; 2]; 2];
                    for (j, row) in d2mu.iter_mut().enumerate() {
                        for (k, v) in row.iter_mut().enumerate() {
                            *v = p2 * xi[j] * xi[k] + p1 * delta(j, k);
                        }
                    }
                    phase_partial(m, dmu, d2mu, &ax)
                }
            }
            Self::QuadraticChirp { a } => {
                let m = self.eval(xi, d);
                let ax_xi = [
                    a[0][0] * xi[0] + a[0][1] * xi[1],
                    a[1][0] * xi[0] + a[1][1] * xi[1],
                ];
                let dmu = [2.0 * ax_xi[0], 2.0 * ax_xi[1]];
                let d2mu = [[2.0 * a[0][0], 2.0 * a[0][1]], [2.0 * a[1][0], 2.0 * a[1][1]]];
                phase_partial(m, dmu, d2mu, &ax)
            }
            Self::RationalMihlin { axis } => {
                let j = *axis;
                let q = 1.0 + s * s;
                let u = xi[j] * xi[j];
                let du = |k: usize| 2.0 * xi[j] * delta(j, k);
                let dv = |k: usize| -2.0 * xi[k] / (q * q);
                real(match ax.as_slice() {
                    [] => u / q,
                    [k] => du(*k) / q + u * dv(*k),
                    [k, l] => {
                        let (k, l) = (*k, *l);
                        let duu = 2.0 * delta(j, k) * delta(j, l);
                        let dvv = -2.0 * delta(k, l) / (q * q) + 8.0 * xi[k] * xi[l] / (q * q * q);
                        duu / q + du(k) * dv(l) + du(l) * dv(k) + u * dvv
                    }
                    _ => unreachable!(),
                })
            }
            Self::SignType { axis } => {
                let j = *axis;
                let w = 1.0 / s;
                let dw = |k: usize| -xi[k] * w * w * w;
                real(match ax.as_slice() {
                    [] => xi[j] * w,
                    [k] => delta(j, *k) * w + xi[j] * dw(*k),
                    [k, l] => {
                        let (k, l) = (*k, *l);
                        let dww = -delta(k, l) * w.powi(3) + 3.0 * xi[k] * xi[l] * w.powi(5);
                        delta(j, k) * dw(l) + delta(j, l) * dw(k) + xi[j] * dww
                    }
                    _ => unreachable!(),
                })
            }
            Self::GaussianBump { sigma } => {
                let s2 = sigma * sigma;
                let g = (-s * s / (2.0 * s2)).exp();
                real(match ax.as_slice() {
                    [] => g,
                    [k] => -xi[*k] / s2 * g,
                    [k, l] => (xi[*k] * xi[*l] / (s2 * s2) - delta(*k, *l) / s2) * g,
                    _ => unreachable!(),
                })
            }
            Self::CutoffLow { .. } | Self::CutoffHigh { .. } => {
                return Err(Error::Symbol(format!(
                    "no analytic partials for {}",
                    self.label()
                )))
            }
        })
    }

    /// Values on the frequency grid of `grid` (a position grid). The origin
    /// sample of a singular symbol is set to 0.
    pub fn tabulate(&self, grid: &Grid) -> Result<TabulatedSymbol> {
        self.validate(grid.d)?;
        let freq = grid.dual();
        let origin = freq.origin_index();
        let singular = self.singular_at_origin();
        let mut values = Vec::with_capacity(freq.len());
        for k in 0..freq.len() {
            let v = if singular && k == origin {
                Complex64::new(0.0, 0.0)
            } else {
                self.eval(freq.point(k), grid.d)
            };
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Symbol(format!(
                    "{} is not finite at ξ = {:?}",
                    self.label(),
                    freq.point(k)
                )));
            }
            values.push(v);
        }
        Ok(TabulatedSymbol {
            frequencies: freq,
            values,
            singular_at_origin: singular,
        })
    }
}

impl TabulatedSymbol {
    /// Checks the values are finite except possibly at the origin, whose sample
    /// is then zeroed.
    pub fn new(frequencies: Grid, mut values: Vec<Complex64>, singular_at_origin: bool) -> Result<Self> {
        if values.len() != frequencies.len() {
            return Err(Error::Symbol("values do not match the frequency grid".into()));
        }
        let origin = frequencies.origin_index();
        for (k, v) in values.iter_mut().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                if k == origin && singular_at_origin {
                    *v = Complex64::new(0.0, 0.0);
                } else {
                    return Err(Error::Symbol(format!("non-finite symbol value at index {k}")));
                }
            }
        }
        if singular_at_origin {
            values[origin] = Complex64::new(0.0, 0.0);
        }
        Ok(Self {
            frequencies,
            values,
            singular_at_origin,
        })
    }

    /// A symbol sampled from a field that already lives on a frequency grid.
    pub fn from_field(field: &SampledField) -> Self {
        Self {
            frequencies: field.grid,
            values: field.values.clone(),
            singular_at_origin: false,
        }
    }

    pub fn as_field(&self) -> SampledField {
        SampledField {
            grid: self.frequencies,
            values: self.values.clone(),
        }
    }
}

impl MultiplierSymbol {
    pub fn parametric(p: ParametricSymbol) -> Self {
        Self::Parametric(p)
    }

    pub fn parse(text: &str) -> Result<Self> {
        ParametricSymbol::parse(text).map(Self::Parametric)
    }

    pub fn singular_at_origin(&self) -> bool {
        match self {
            Self::Parametric(p) => p.singular_at_origin(),
            Self::Tabulated(t) => t.singular_at_origin,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Parametric(p) => p.label(),
            Self::Tabulated(t) => format!("tabulated[{}]", t.frequencies.describe()),
        }
    }

    /// Symbol values on the frequency grid of the position grid `grid`.
    pub fn on_grid(&self, grid: &Grid) -> Result<TabulatedSymbol> {
        match self {
            Self::Parametric(p) => p.tabulate(grid),
            Self::Tabulated(t) => {
                ensure_same_grid(&t.frequencies, &grid.dual())?;
                Ok(t.clone())
            }
        }
    }
}

/// `m(D) f = F^{-1}[m·F f]`.
pub fn apply_multiplier(m: &MultiplierSymbol, f: &SampledField) -> Result<SampledField> {
    let table = m.on_grid(&f.grid)?;
    apply_table(&table, f)
}

pub(crate) fn apply_table(table: &TabulatedSymbol, f: &SampledField) -> Result<SampledField> {
    let mut spec = f.forward_fourier();
    ensure_same_grid(&spec.grid, &table.frequencies)?;
    for (v, m) in spec.values.iter_mut().zip(&table.values) {
        *v *= m;
    }
    Ok(spec.inverse_fourier())
}

/// One row of a condition-functional table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub alpha: MultiIndex,
    pub value: f64,
}

/// Central first derivative along `axis` with one Richardson level; entries
/// whose stencil leaves the grid are `None`.
fn richardson_derivative(
    grid: &Grid,
    values: &[Option<Complex64>],
    axis: usize,
) -> Vec<Option<Complex64>> {
    let h = grid.dx;
    let n = grid.n as isize;
    (0..grid.len())
        .map(|k| {
            let ix = grid.unravel(k);
            let at = |s: isize| -> Option<Complex64> {
                let p = ix[axis] as isize + s;
                if p < 0 || p >= n {
                    return None;
                }
                let mut jx = ix;
                jx[axis] = p as usize;
                values[grid.ravel(jx)]
            };
            let d1 = (at(1)? - at(-1)?) / (2.0 * h);
            let d2 = (at(2)? - at(-2)?) / (4.0 * h);
            Some((4.0 * d1 - d2) / 3.0)
        })
        .collect()
}

/// `∂^α m` on the frequency grid by repeated Richardson-extrapolated central
/// differences; `None` near the edges and, for singular symbols, near the origin.
pub fn numeric_partial(table: &TabulatedSymbol, alpha: MultiIndex) -> Vec<Option<Complex64>> {
    let g = table.frequencies;
    let mut cur: Vec<Option<Complex64>> = table.values.iter().map(|v| Some(*v)).collect();
    let order = alpha[0] + alpha[1];
    for ax in axes(alpha) {
        cur = richardson_derivative(&g, &cur, ax);
    }
    if table.singular_at_origin {
        let reach = 2 * order;
        let o = g.n / 2;
        for (k, v) in cur.iter_mut().enumerate() {
            let ix = g.unravel(k);
            let dist = ix[0].abs_diff(o).max(if g.d == 2 { ix[1].abs_diff(o) } else { 0 });
            if dist <= reach {
                *v = None;
            }
        }
    }
    cur
}

/// `∂^α m` at every frequency of `grid`'s frequency grid (`None` where unavailable).
fn partial_on_grid(
    m: &MultiplierSymbol,
    grid: &Grid,
    alpha: MultiIndex,
) -> Result<Vec<Option<Complex64>>> {
    if let MultiplierSymbol::Parametric(p) = m {
        let freq = grid.dual();
        let analytic: Result<Vec<Option<Complex64>>> = (0..freq.len())
            .map(|k| {
                let xi = freq.point(k);
                if xi == [0.0, 0.0] {
                    return Ok(None);
                }
                p.partial(xi, alpha, grid.d).map(Some)
            })
            .collect();
        if let Ok(v) = analytic {
            return Ok(v);
        }
    }
    Ok(numeric_partial(&m.on_grid(grid)?, alpha))
}

/// `sup_{ξ≠0} |ξ|^{|α|} |∂^α m(ξ)|` over the frequency grid of `grid`, for
/// every `|α| ≤ max_order`.
pub fn mihlin_functional(
    m: &MultiplierSymbol,
    grid: &Grid,
    max_order: usize,
) -> Result<Vec<ConditionEntry>> {
    let freq = grid.dual();
    let origin = freq.origin_index();
    multi_indices(grid.d, max_order)
        .into_iter()
        .map(|alpha| {
            let order = (alpha[0] + alpha[1]) as i32;
            let partial = partial_on_grid(m, grid, alpha)?;
            let value = partial
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != origin)
                .filter_map(|(k, v)| v.map(|v| norm(freq.point(k)).powi(order) * v.norm()))
                .fold(0.0, f64::max);
            Ok(ConditionEntry { alpha, value })
        })
        .collect()
}

/// Measure of `[c − h/2, c + h/2] ∩ {R < |t| < 2R}` on the line.
fn interval_overlap(c: f64, h: f64, r: f64) -> f64 {
    let seg = |lo: f64, hi: f64| {
        let a = (c - h / 2.0).max(lo);
        let b = (c + h / 2.0).min(hi);
        (b - a).max(0.0)
    };
    seg(r, 2.0 * r) + seg(-2.0 * r, -r)
}

const ANNULUS_SUBSAMPLES: usize = 8;

fn square_overlap(c: [f64; 2], h: f64, r: f64) -> f64 {
    let s = ANNULUS_SUBSAMPLES;
    let mut hits = 0;
    for a in 0..s {
        for b in 0..s {
            let p = [
                c[0] + h * ((a as f64 + 0.5) / s as f64 - 0.5),
                c[1] + h * ((b as f64 + 0.5) / s as f64 - 0.5),
            ];
            let t = norm(p);
            if t > r && t < 2.0 * r {
                hits += 1;
            }
        }
    }
    h * h * hits as f64 / (s * s) as f64
}

/// Hörmander functional per `α` and `R`: `R^{−d+2|α|} ∫_{R<|ξ|<2R} |∂^α m|² dξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HormanderTable {
    pub r_values: Vec<f64>,
    /// `rows[i]` pairs `alpha` with one value per `R`.
    pub rows: Vec<(MultiIndex, Vec<f64>)>,
}

impl HormanderTable {
    /// Maximum over `R` per multi-index.
    pub fn sup_over_r(&self) -> Vec<ConditionEntry> {
        self.rows
            .iter()
            .map(|(alpha, v)| ConditionEntry {
                alpha: *alpha,
                value: v.iter().cloned().fold(0.0, f64::max),
            })
            .collect()
    }
}

pub fn hormander_table(
    m: &MultiplierSymbol,
    grid: &Grid,
    r_values: &[f64],
    max_order: usize,
) -> Result<HormanderTable> {
    let freq = grid.dual();
    let h = freq.dx;
    let extent = grid.frequency_extent();
    for &r in r_values {
        if !(r >= 2.0 * h - 1e-12 && r <= extent / 4.0 + 1e-12) {
            return Err(Error::EmptyAnnulus(r));
        }
    }
    let d = grid.d as i32;
    let origin = freq.origin_index();
    let mut rows = Vec::new();
    for alpha in multi_indices(grid.d, max_order) {
        let order = (alpha[0] + alpha[1]) as i32;
        let partial = partial_on_grid(m, grid, alpha)?;
        let mut per_r = Vec::with_capacity(r_values.len());
        for &r in r_values {
            let mut integral = 0.0;
            let mut measure = 0.0;
            for (k, v) in partial.iter().enumerate() {
                if k == origin {
                    continue;
                }
                let xi = freq.point(k);
                let t = norm(xi);
                let reach = h * std::f64::consts::SQRT_2;
                if t + reach < r || t - reach > 2.0 * r {
                    continue;
                }
                let w = if grid.d == 1 {
                    interval_overlap(xi[0], h, r)
                } else {
                    square_overlap(xi, h, r)
                };
                if w == 0.0 {
                    continue;
                }
                measure += w;
                if let Some(v) = v {
                    integral += w * v.norm_sqr();
                }
            }
            if measure == 0.0 {
                return Err(Error::EmptyAnnulus(r));
            }
            per_r.push(r.powi(-d + 2 * order) * integral);
        }
        rows.push((alpha, per_r));
    }
    Ok(HormanderTable {
        r_values: r_values.to_vec(),
        rows,
    })
}

/// `sup_R R^{−d+2|α|} ∫_{A_R} |∂^α m|²` per multi-index.
pub fn hormander_functional(
    m: &MultiplierSymbol,
    grid: &Grid,
    r_values: &[f64],
    max_order: usize,
) -> Result<Vec<ConditionEntry>> {
    Ok(hormander_table(m, grid, r_values, max_order)?.sup_over_r())
}

/// Geometric `R` values from `2dξ` up to the largest `R` whose annulus lies
/// inside the sampled cells.
pub fn default_r_values(grid: &Grid, count: usize) -> Vec<f64> {
    let lo = 2.0 * grid.dxi();
    let hi = (grid.frequency_extent() - grid.dxi()) / 4.0;
    let count = count.max(2);
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    Divergent,
    Inconclusive,
}

/// Growth rule over successive doublings: two consecutive increases of more
/// than 25 % are divergent; a final relative change under 10 % is bounded.
pub fn classify(values: &[f64]) -> Classification {
    let rel = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            (b - a) / a.abs()
        }
    };
    let growth: Vec<f64> = values.windows(2).map(|w| rel(w[0], w[1])).collect();
    if growth.windows(2).any(|g| g[0] > 0.25 && g[1] > 0.25) {
        return Classification::Divergent;
    }
    match growth.last() {
        Some(g) if g.abs() < 0.10 => Classification::Bounded,
        _ => Classification::Inconclusive,
    }
}

/// Mihlin values across frequency-extent doublings (`dξ` fixed, `n` doubled).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionStudy {
    pub functional: String,
    pub symbol: String,
    pub extents: Vec<f64>,
    pub rows: Vec<(MultiIndex, Vec<f64>, Classification)>,
}

fn doubled_grids(base: &Grid, doublings: usize) -> Vec<Grid> {
    (0..=doublings)
        .map(|i| Grid {
            d: base.d,
            n: base.n << i,
            dx: base.dx / (1u64 << i) as f64,
        })
        .collect()
}

pub fn mihlin_study(
    m: &ParametricSymbol,
    base: &Grid,
    doublings: usize,
    max_order: usize,
) -> Result<ConditionStudy> {
    let sym = MultiplierSymbol::Parametric(m.clone());
    let grids = doubled_grids(base, doublings);
    let tables: Vec<Vec<ConditionEntry>> = grids
        .iter()
        .map(|g| mihlin_functional(&sym, g, max_order))
        .collect::<Result<_>>()?;
    Ok(assemble_study("mihlin", m, &grids, tables))
}

/// Hörmander values across doublings; the `R` list spans each grid's band.
pub fn hormander_study(
    m: &ParametricSymbol,
    base: &Grid,
    doublings: usize,
    max_order: usize,
    r_count: usize,
) -> Result<ConditionStudy> {
    let sym = MultiplierSymbol::Parametric(m.clone());
    let grids = doubled_grids(base, doublings);
    let tables: Vec<Vec<ConditionEntry>> = grids
        .iter()
        .map(|g| hormander_functional(&sym, g, &default_r_values(g, r_count), max_order))
        .collect::<Result<_>>()?;
    Ok(assemble_study("hormander", m, &grids, tables))
}

fn assemble_study(
    name: &str,
    m: &ParametricSymbol,
    grids: &[Grid],
    tables: Vec<Vec<ConditionEntry>>,
) -> ConditionStudy {
    let rows = tables[0]
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let vals: Vec<f64> = tables.iter().map(|t| t[i].value).collect();
            let class = classify(&vals);
            (e.alpha, vals, class)
        })
        .collect();
    ConditionStudy {
        functional: name.to_string(),
        symbol: m.label(),
        extents: grids.iter().map(|g| g.frequency_extent()).collect(),
        rows,
    }
}

/// `(m₁, m₂, χ)` with `m₁ = e^{iμ}χ`, `m₂ = e^{iμ}(1−χ)`, `μ = c|ξ|^α`.
pub fn build_cutoff_pieces(c: f64, alpha: f64) -> Result<(ParametricSymbol, ParametricSymbol, Cutoff)> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::Symbol(format!("homogeneity order {alpha} outside (0, 2]")));
    }
    let m1 = ParametricSymbol::CutoffLow { c, alpha };
    let m2 = ParametricSymbol::CutoffHigh { c, alpha };
    m1.validate(1)?;
    Ok((m1, m2, Cutoff))
}

/// `ψ(2^j ξ)` on the frequency grid of `grid`, for `j = 1..=levels`.
pub fn dyadic_pieces(cutoff: &Cutoff, levels: usize, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    if levels == 0 {
        return Err(Error::Domain("at least one dyadic level is required".into()));
    }
    let freq = grid.dual();
    Ok((1..=levels)
        .map(|j| {
            let s = (1u64 << j) as f64;
            (0..freq.len())
                .map(|k| {
                    let xi = freq.point(k);
                    cutoff.psi([s * xi[0], s * xi[1]])
                })
                .collect()
        })
        .collect())
}

/// `φ_k = μ^k χ` with `μ = c|ξ|^α`, `k = 0..=order`, on the frequency grid of `grid`.
pub fn taylor_terms(c: f64, alpha: f64, cutoff: &Cutoff, order: usize, grid: &Grid) -> Vec<Vec<f64>> {
    let freq = grid.dual();
    let mu: Vec<f64> = (0..freq.len())
        .map(|k| c * norm(freq.point(k)).powf(alpha))
        .collect();
    let chi: Vec<f64> = (0..freq.len()).map(|k| cutoff.eval(freq.point(k))).collect();
    (0..=order)
        .map(|k| {
            mu.iter()
                .zip(&chi)
                .map(|(m, x)| if *x == 0.0 { 0.0 } else { m.powi(k as i32) * x })
                .collect()
        })
        .collect()
}

/// `Σ_k i^k/k! φ_k`.
pub fn taylor_partial_sum(terms: &[Vec<f64>]) -> Vec<Complex64> {
    let len = terms.first().map_or(0, Vec::len);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut coef = Complex64::new(1.0, 0.0);
    for (k, term) in terms.iter().enumerate() {
        if k > 0 {
            coef *= Complex64::i() / k as f64;
        }
        for (o, t) in out.iter_mut().zip(term) {
            *o += coef * t;
        }
    }
    out
}

/// `s^{K+1}/(K+1)!`, the exponential-series remainder bound for `|μχ| ≤ s`.
pub fn taylor_remainder_bound(sup: f64, order: usize) -> f64 {
    (1..=order + 1).fold(1.0, |acc, j| acc * sup / j as f64)
}

/// `G(y) = 1 / max(max_n |y_n|^N, 1)` on the position grid.
pub fn envelope_g(power: u32, grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let y = grid.point(i);
            let m = (0..grid.d)
                .map(|n| y[n].abs().powi(power as i32))
                .fold(1.0, f64::max);
            1.0 / m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_window, random_bandlimited};

    fn fd_partial(p: &ParametricSymbol, xi: [f64; 2], alpha: MultiIndex, d: usize) -> Complex64 {
        let h = 1e-4;
        let e = |v: [f64; 2]| p.eval(v, d);
        let shift = |v: [f64; 2], ax: usize, s: f64| {
            let mut w = v;
            w[ax] += s;
            w
        };
        match axes(alpha).as_slice() {
            [] => e(xi),
            [j] => (e(shift(xi, *j, h)) - e(shift(xi, *j, -h))) / (2.0 * h),
            [j, k] => {
                let f = |a: f64, b: f64| e(shift(shift(xi, *j, a), *k, b));
                (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let syms = [
            ParametricSymbol::HomogeneousChirp { c: 0.7, alpha: 1.5 },
            ParametricSymbol::QuadraticChirp { a: [[0.3, -0.2], [-0.2, 0.5]] },
            ParametricSymbol::RationalMihlin { axis: 1 },
            ParametricSymbol::SignType { axis: 0 },
            ParametricSymbol::GaussianBump { sigma: 1.3 },
            ParametricSymbol::Identity,
        ];
        let pts = [[0.4, -1.1], [1.7, 0.9], [-0.6, 0.2]];
        for s in &syms {
            for xi in pts {
                for alpha in multi_indices(2, 2) {
                    let a = s.partial(xi, alpha, 2).unwrap();
                    let b = fd_partial(s, xi, alpha, 2);
                    assert!((a - b).norm() < 1e-5 * (1.0 + a.norm()), "{} {alpha:?}: {a} vs {b}", s.label());
                }
            }
        }
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let grid = Grid::default_1d();
        let f = random_bandlimited(grid, 0.5, 1).unwrap();
        let out = apply_multiplier(&MultiplierSymbol::Parametric(ParametricSymbol::Identity), &f).unwrap();
        assert!(out.max_abs_diff(&f) < 1e-13);
    }

    #[test]
    fn unimodular_symbols_are_isometries() {
        let grid = Grid::default_1d();
        let f = random_bandlimited(grid, 0.5, 2).unwrap();
        for p in [
            ParametricSymbol::HomogeneousChirp { c: 1.0, alpha: 1.5 },
            ParametricSymbol::HomogeneousChirp { c: -0.4, alpha: 2.0 },
            ParametricSymbol::QuadraticChirp { a: [[0.2, 0.0], [0.0, 0.0]] },
        ] {
            let out = apply_multiplier(&MultiplierSymbol::Parametric(p), &f).unwrap();
            assert!((out.l2_norm() - f.l2_norm()).abs() < 1e-11 * f.l2_norm());
        }
    }

    #[test]
    fn fresnel_propagated_gaussian() {
        // e^{iaD²} e^{-x²/2} = (1 − 2ia)^{-1/2} e^{-x²/(2(1−2ia))}
        let grid = Grid::default_1d();
        let f = SampledField::from_real_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
        let a = 0.3;
        let sym = MultiplierSymbol::Parametric(ParametricSymbol::QuadraticChirp { a: [[a, 0.0], [0.0, 0.0]] });
        let out = apply_multiplier(&sym, &f).unwrap();
        let z = Complex64::new(1.0, -2.0 * a);
        for (j, v) in out.values.iter().enumerate() {
            let x = grid.coord(j);
            let closed = z.powf(-0.5) * (-(x * x) / (2.0 * z)).exp();
            assert!((v - closed).norm() < 1e-7);
        }
    }

    #[test]
    fn sign_symbol_zeroes_origin() {
        let grid = Grid::new(1, 64, 0.25).unwrap();
        let t = ParametricSymbol::SignType { axis: 0 }.tabulate(&grid).unwrap();
        assert_eq!(t.values[grid.dual().origin_index()], Complex64::new(0.0, 0.0));
        assert!(t.singular_at_origin);
        let bad = TabulatedSymbol::new(
            grid.dual(),
            {
                let mut v = vec![Complex64::new(1.0, 0.0); 64];
                v[3] = Complex64::new(f64::INFINITY, 0.0);
                v
            },
            true,
        );
        assert!(matches!(bad, Err(Error::Symbol(_))));
    }

    #[test]
    fn multiplier_is_linear() {
        let grid = Grid::new(1, 128, 0.125).unwrap();
        let f = random_bandlimited(grid, 0.5, 3).unwrap();
        let g = gaussian_window(1.3, grid).unwrap();
        let sym = MultiplierSymbol::Parametric(ParametricSymbol::RationalMihlin { axis: 0 });
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let lhs = apply_multiplier(&sym, &f.scaled(a).add(&g.scaled(b)).unwrap()).unwrap();
        let rhs = apply_multiplier(&sym, &f)
            .unwrap()
            .scaled(a)
            .add(&apply_multiplier(&sym, &g).unwrap().scaled(b))
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn mihlin_of_rational_symbol_matches_dense_scan() {
        // 1d, |α| = 1: sup_ξ 2ξ²/(1+ξ²)², from a dense scan
        let dense = (1..200_000)
            .map(|i| {
                let x = i as f64 * 1e-4;
                2.0 * x * x / (1.0 + x * x).powi(2)
            })
            .fold(0.0, f64::max);
        assert!((dense - 0.5).abs() < 1e-9);
        let grid = Grid::default_1d();
        let sym = MultiplierSymbol::Parametric(ParametricSymbol::RationalMihlin { axis: 0 });
        let t = mihlin_functional(&sym, &grid, 1).unwrap();
        assert_eq!(t[1].alpha, [1, 0]);
        // grid spacing 2π/64 ≈ 0.098 around the maximum at |ξ| = 1
        assert!((t[1].value - dense).abs() < 5e-3);
        assert!(t[1].value <= dense + 1e-12);
    }

    #[test]
    fn mihlin_dichotomy() {
        let base = Grid::new(1, 256, 0.25).unwrap();
        let chirp = ParametricSymbol::HomogeneousChirp { c: 1.0, alpha: 2.0 };
        let s = mihlin_study(&chirp, &base, 2, 1).unwrap();
        let (_, vals, class) = &s.rows[1];
        assert_eq!(*class, Classification::Divergent);
        assert!(vals[1] / vals[0] > 3.0 && vals[2] / vals[1] > 3.0);
        let rat = ParametricSymbol::RationalMihlin { axis: 0 };
        let s = mihlin_study(&rat, &base, 2, 1).unwrap();
        assert!(s.rows.iter().all(|r| r.2 == Classification::Bounded));
        let id = mihlin_study(&ParametricSymbol::Identity, &base, 1, 2).unwrap();
        assert!(id.rows.iter().skip(1).all(|r| r.1.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn tabulated_derivatives_match_analytic() {
        let grid = Grid::new(1, 512, 0.125).unwrap();
        let p = ParametricSymbol::RationalMihlin { axis: 0 };
        let t = p.tabulate(&grid).unwrap();
        let analytic = mihlin_functional(&MultiplierSymbol::Parametric(p), &grid, 1).unwrap();
        let numeric = mihlin_functional(&MultiplierSymbol::Tabulated(t), &grid, 1).unwrap();
        assert!((analytic[1].value - numeric[1].value).abs() < 1e-3);

        let g2 = Grid::new(2, 64, 0.25).unwrap();
        let p = ParametricSymbol::GaussianBump { sigma: 2.0 };
        let t = p.tabulate(&g2).unwrap();
        let a = mihlin_functional(&MultiplierSymbol::Parametric(p), &g2, 2).unwrap();
        let n = mihlin_functional(&MultiplierSymbol::Tabulated(t), &g2, 2).unwrap();
        for (x, y) in a.iter().zip(&n) {
            assert_eq!(x.alpha, y.alpha);
            assert!((x.value - y.value).abs() < 2e-3 * (1.0 + x.value), "{:?}", x.alpha);
        }
    }

    #[test]
    fn hormander_examples() {
        let grid = Grid::default_1d();
        let rs = default_r_values(&grid, 6);
        let one = MultiplierSymbol::Parametric(ParametricSymbol::Identity);
        let t = hormander_table(&one, &grid, &rs, 1).unwrap();
        for v in &t.rows[0].1 {
            assert!((v - 2.0).abs() < 1e-12, "{v}");
        }
        assert!(t.rows[1].1.iter().all(|v| *v == 0.0));
        let sign = MultiplierSymbol::Parametric(ParametricSymbol::SignType { axis: 0 });
        let t = hormander_table(&sign, &grid, &rs, 0).unwrap();
        for v in &t.rows[0].1 {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert!(matches!(
            hormander_functional(&one, &grid, &[grid.dxi()], 0),
            Err(Error::EmptyAnnulus(_))
        ));
    }

    #[test]
    fn hormander_2d_annulus_area() {
        let grid = Grid::new(2, 64, 0.25).unwrap();
        let rs = default_r_values(&grid, 4);
        let one = MultiplierSymbol::Parametric(ParametricSymbol::Identity);
        let t = hormander_table(&one, &grid, &rs, 0).unwrap();
        // R^{-2}·π(4R² − R²) = 3π, up to the sub-sampled cell overlap
        for v in &t.rows[0].1 {
            assert!((v / (3.0 * std::f64::consts::PI) - 1.0).abs() < 0.02, "{v}");
        }
    }

    #[test]
    fn cutoff_pieces() {
        let (m1, m2, chi) = build_cutoff_pieces(1.0, 1.5).unwrap();
        let mu = |s: f64| s.powf(1.5);
        let at = |s: f64| [s * 0.6, s * 0.8];
        let e = |s: f64| Complex64::from_polar(1.0, mu(s));
        assert!((m1.eval(at(0.5), 2) - e(0.5)).norm() < 1e-15);
        assert_eq!(m2.eval(at(0.5), 2), Complex64::new(0.0, 0.0));
        assert_eq!(m1.eval(at(3.0), 2), Complex64::new(0.0, 0.0));
        assert!((m2.eval(at(3.0), 2) - e(3.0)).norm() < 1e-15);
        let grid = Grid::new(2, 64, 0.25).unwrap();
        let freq = grid.dual();
        for k in 0..freq.len() {
            let xi = freq.point(k);
            let s = norm(xi);
            let sum = m1.eval(xi, 2) + m2.eval(xi, 2);
            assert!((sum - e(s)).norm() <= 1e-14);
            if s > 2.0 {
                assert_eq!(m1.eval(xi, 2).norm(), 0.0);
            }
            if s <= 1.0 {
                assert_eq!(m2.eval(xi, 2).norm(), 0.0);
            }
        }
        assert_eq!(chi.radial(1.0), 1.0);
        assert_eq!(chi.radial(2.0), 0.0);
        assert!((chi.radial(1.5) - 0.5).abs() < 1e-15);
        assert!(build_cutoff_pieces(1.0, 2.5).is_err());
    }

    #[test]
    fn dyadic_telescoping() {
        let grid = Grid::default_1d();
        let freq = grid.dual();
        let chi = Cutoff;
        let levels = 10;
        let pieces = dyadic_pieces(&chi, levels, &grid).unwrap();
        for k in 0..freq.len() {
            let xi = freq.point(k);
            let sum: f64 = pieces.iter().map(|p| p[k]).sum();
            let tail = chi.eval([xi[0] * 1024.0, 0.0]);
            if xi[0] == 0.0 {
                assert_eq!(sum, 0.0);
            } else {
                assert!((sum - (chi.eval(xi) - tail)).abs() <= 1e-14);
            }
        }
        // |ξ| = 1 directly
        let unit: f64 = (1..=levels).map(|j| chi.psi([(1u64 << j) as f64, 0.0])).sum();
        assert!((unit - 1.0).abs() < 1e-14);
        for (j, p) in pieces.iter().enumerate() {
            let s = (1u64 << (j + 1)) as f64;
            for (k, v) in p.iter().enumerate() {
                let t = freq.coord(k).abs();
                if t < 1.0 / s || t > 4.0 / s {
                    assert!(v.abs() <= 1e-14);
                }
            }
        }
        assert!(dyadic_pieces(&chi, 0, &grid).is_err());
    }

    #[test]
    fn taylor_series_of_low_piece() {
        let grid = Grid::default_1d();
        let freq = grid.dual();
        let terms = taylor_terms(1.0, 1.5, &Cutoff, 30, &grid);
        for k in 0..freq.len() {
            assert_eq!(terms[0][k], Cutoff.eval(freq.point(k)));
            if freq.coord(k).abs() >= 2.0 {
                assert!(terms.iter().all(|t| t[k] == 0.0));
            }
        }
        let bound = taylor_remainder_bound(2f64.powf(1.5), 30);
        assert!(bound < 1e-12, "{bound}");
        let sum = taylor_partial_sum(&terms);
        let m1 = ParametricSymbol::CutoffLow { c: 1.0, alpha: 1.5 };
        let dev = (0..freq.len())
            .map(|k| (sum[k] - m1.eval(freq.point(k), 1)).norm())
            .fold(0.0, f64::max);
        assert!(dev <= bound.max(1e-14) + 1e-13, "{dev}");
    }

    #[test]
    fn envelope_values() {
        let g = Grid::new(1, 16, 0.5).unwrap();
        let e = envelope_g(3, &g);
        assert_eq!(e[g.origin_index()], 1.0);
        assert_eq!(e[12], 1.0 / 8.0); // y = 2
        let g2 = Grid::new(2, 8, 1.0).unwrap();
        let e2 = envelope_g(2, &g2);
        // y = (−2, 3): max(4, 9, 1) = 9
        assert!((e2[g2.ravel([2, 7])] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn parse_symbols() {
        assert_eq!(
            ParametricSymbol::parse("homogeneous_chirp:1,2").unwrap(),
            ParametricSymbol::HomogeneousChirp { c: 1.0, alpha: 2.0 }
        );
        assert_eq!(
            ParametricSymbol::parse(r#"{"symbol":"homogeneous_chirp","c":1.0,"alpha":1.5}"#).unwrap(),
            ParametricSymbol::HomogeneousChirp { c: 1.0, alpha: 1.5 }
        );
        assert_eq!(ParametricSymbol::parse("identity").unwrap(), ParametricSymbol::Identity);
        assert!(ParametricSymbol::parse("homogeneous_chirp").is_err());
        assert!(ParametricSymbol::parse("nope").is_err());
    }
}
