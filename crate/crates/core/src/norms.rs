//! Luxemburg quasi-norms, mixed Orlicz norms in both axis orders, Wiener
//! amalgam norms over unit cubes, and the modulation / Wiener-type space
//! quasi-norms built on top of the short-time Fourier transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, SampledField};
use crate::tfa::{stft, TimeFrequencyField};
use crate::young::QuasiYoungFunction;

/// Relative bracket width at which the Luxemburg root search stops.
pub const LUXEMBURG_RTOL: f64 = 1e-12;
/// Upward doublings allowed while looking for `ρ(λ) ≤ 1`.
pub const MAX_BRACKET_DOUBLINGS: usize = 200;

/// Cell measures of the samples handed to a Luxemburg norm.
#[derive(Clone, Copy, Debug)]
pub enum Weights<'a> {
    /// Every sample has the same measure (`1` for counting measure).
    Uniform(f64),
    PerSample(&'a [f64]),
}

impl Weights<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerSample(w) => w[i],
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        let ok = |w: f64| w > 0.0 && w.is_finite();
        match self {
            Weights::Uniform(w) if ok(*w) => Ok(()),
            Weights::PerSample(w) if w.len() == len && w.iter().all(|v| ok(*v)) => Ok(()),
            _ => Err(Error::Domain("weights must be positive and match the samples".into())),
        }
    }
}

/// `inf{λ > 0 : Σ w·Φ(|f|/λ) ≤ 1}` with explicit per-sample weights.
pub fn luxemburg_norm(samples: &[f64], weights: &[f64], phi: &QuasiYoungFunction) -> Result<f64> {
    luxemburg(samples, Weights::PerSample(weights), phi)
}

/// Luxemburg norm for arbitrary [`Weights`].
///
/// The root of `ρ(λ) = 1` is bracketed by doubling from `Σ w|f| + 1`, then
/// located by regula falsi on `(ln λ, ln ρ)` with the Illinois correction,
/// falling back to geometric bisection whenever `ρ` is `0` or `+∞` at a trial
/// point. `ρ` is non-increasing in `λ`, so the bracket always contains the
/// answer; the search ends when it is narrower than [`LUXEMBURG_RTOL`].
pub fn luxemburg(samples: &[f64], weights: Weights<'_>, phi: &QuasiYoungFunction) -> Result<f64> {
    weights.validate(samples.len())?;
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Luxemburg norm sample".into()));
    }
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    if phi.is_sup_norm() {
        return Ok(scale);
    }
    // normalized nonzero samples with their weights
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (v.abs() / scale, weights.at(i)))
        .collect();
    let rho = |lambda: f64| -> f64 {
        let inv = 1.0 / lambda;
        let mut acc = 0.0;
        for &(s, w) in &pts {
            acc += w * phi.eval_unchecked(s * inv);
            if acc.is_infinite() {
                break;
            }
        }
        acc
    };

    let mut hi = pts.iter().map(|(s, w)| s * w).sum::<f64>() + 1.0;
    let mut rho_hi = rho(hi);
    let mut doublings = 0;
    while !(rho_hi <= 1.0) {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::BracketExpansion(MAX_BRACKET_DOUBLINGS));
        }
        hi *= 2.0;
        rho_hi = rho(hi);
    }
    let mut lo = hi;
    let mut rho_lo = rho_hi;
    while rho_lo <= 1.0 {
        if rho_lo == 1.0 {
            return Ok(lo * scale);
        }
        hi = lo;
        rho_hi = rho_lo;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::BracketExpansion(MAX_BRACKET_DOUBLINGS));
        }
        rho_lo = rho(lo);
    }

    // invariant: rho(lo) > 1 >= rho(hi)
    let (mut x_lo, mut x_hi) = (lo.ln(), hi.ln());
    let mut y_lo = rho_lo.ln();
    let mut y_hi = rho_hi.ln();
    let mut last_side = 0i8;
    for _ in 0..400 {
        if x_hi - x_lo <= LUXEMBURG_RTOL {
            break;
        }
        let width = x_hi - x_lo;
        let mut x = if y_lo.is_finite() && y_hi.is_finite() && y_lo != y_hi {
            x_lo + width * y_lo / (y_lo - y_hi)
        } else {
            0.5 * (x_lo + x_hi)
        };
        let guard = 1e-3 * width;
        if !(x > x_lo + guard && x < x_hi - guard) {
            x = x.clamp(x_lo + guard, x_hi - guard);
        }
        let r = rho(x.exp());
        if r == 1.0 {
            return Ok(x.exp() * scale);
        }
        let y = r.ln();
        if y.is_finite() && y.abs() <= 1e-15 {
            return Ok(x.exp() * scale);
        }
        if r > 1.0 {
            x_lo = x;
            y_lo = y;
            if last_side == -1 {
                y_hi *= 0.5;
            }
            last_side = -1;
        } else {
            x_hi = x;
            y_hi = y;
            if last_side == 1 {
                y_lo *= 0.5;
            }
            last_side = 1;
        }
    }
    Ok(x_hi.exp() * scale)
}

/// `(Σ w|f|^r)^{1/r}` for finite `r`, `max |f|` for `r = ∞`.
pub fn lr_quasinorm(samples: &[f64], weights: Weights<'_>, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("exponent r = {r}")));
    }
    weights.validate(samples.len())?;
    let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.is_infinite() || scale == 0.0 {
        return Ok(scale);
    }
    let sum: f64 = samples
        .iter()
        .enumerate()
        .map(|(i, v)| weights.at(i) * (v.abs() / scale).powf(r))
        .sum();
    Ok(scale * sum.powf(1.0 / r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderFlag {
    /// `L^{Φ,Ψ}`: Φ-norm over the first variable, then Ψ over the second.
    #[default]
    InnerFirst,
    /// `L_*^{Φ,Ψ}`: Ψ-norm over the second variable, then Φ over the first.
    OuterFirst,
}

/// Mixed norm descriptor. `inner` (Φ) always acts on the first variable
/// (position for an STFT) and `outer` (Ψ) on the second; `order` selects
/// which of the two is applied first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub inner: QuasiYoungFunction,
    pub outer: QuasiYoungFunction,
    #[serde(default)]
    pub order: OrderFlag,
}

impl NormSpec {
    pub fn new(inner: QuasiYoungFunction, outer: QuasiYoungFunction, order: OrderFlag) -> Self {
        Self { inner, outer, order }
    }

    /// `L^{Φ,Ψ}`, the modulation-space order.
    pub fn modulation(inner: QuasiYoungFunction, outer: QuasiYoungFunction) -> Self {
        Self::new(inner, outer, OrderFlag::InnerFirst)
    }

    /// `L^{p,q}` through power families.
    pub fn lebesgue(p: f64, q: f64) -> Self {
        Self::modulation(QuasiYoungFunction::power(p), QuasiYoungFunction::power(q))
    }

    /// `L_*^{p,q}`: `L^p` over the first variable of `L^q` over the second.
    pub fn lebesgue_star(p: f64, q: f64) -> Self {
        Self::new(
            QuasiYoungFunction::power(p),
            QuasiYoungFunction::power(q),
            OrderFlag::OuterFirst,
        )
    }

    pub fn label(&self) -> String {
        let star = match self.order {
            OrderFlag::InnerFirst => "",
            OrderFlag::OuterFirst => "*",
        };
        format!("L{star}[{},{}]", self.inner.label(), self.outer.label())
    }
}

/// Non-negative samples on a product of two grids, first-variable-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseField {
    pub first: Grid,
    pub second: Grid,
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn new(first: Grid, second: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != first.len() * second.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} x {} points",
                values.len(),
                first.len(),
                second.len()
            )));
        }
        Ok(Self { first, second, values })
    }

    pub fn from_fn(first: Grid, second: Grid, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(first.len() * second.len());
        for a in 0..first.len() {
            let x = first.point(a);
            for b in 0..second.len() {
                values.push(f(x, second.point(b)));
            }
        }
        Self { first, second, values }
    }
}

impl From<&TimeFrequencyField> for PhaseField {
    fn from(v: &TimeFrequencyField) -> Self {
        Self {
            first: v.position_grid,
            second: v.frequency_grid,
            values: v.abs(),
        }
    }
}

fn luxemburg_or_sup(samples: &[f64], w: f64, phi: &QuasiYoungFunction) -> Result<f64> {
    luxemburg(samples, Weights::Uniform(w), phi)
}

/// Two-stage Luxemburg norm of a `rows × cols` array (first variable major)
/// with uniform cell measures per axis.
pub(crate) fn mixed_core(
    values: &[f64],
    rows: usize,
    cols: usize,
    w_first: f64,
    w_second: f64,
    spec: &NormSpec,
) -> Result<f64> {
    debug_assert_eq!(values.len(), rows * cols);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mixed norm sample".into()));
    }
    match spec.order {
        OrderFlag::InnerFirst => {
            let profile: Vec<f64> = (0..cols)
                .into_par_iter()
                .map(|b| {
                    let column: Vec<f64> = (0..rows).map(|a| values[a * cols + b]).collect();
                    luxemburg_or_sup(&column, w_first, &spec.inner)
                })
                .collect::<Result<_>>()?;
            luxemburg_or_sup(&profile, w_second, &spec.outer)
        }
        OrderFlag::OuterFirst => {
            let profile: Vec<f64> = values
                .par_chunks(cols)
                .map(|row| luxemburg_or_sup(row, w_second, &spec.outer))
                .collect::<Result<_>>()?;
            luxemburg_or_sup(&profile, w_first, &spec.inner)
        }
    }
}

/// Mixed Orlicz norm `L^{Φ,Ψ}` or `L_*^{Φ,Ψ}` of a phase-space field, with
/// cell measures `dx^d` on the first variable and `dξ^d` on the second.
pub fn mixed_norm(field: &PhaseField, spec: &NormSpec) -> Result<f64> {
    mixed_core(
        &field.values,
        field.first.len(),
        field.second.len(),
        field.first.cell(),
        field.second.cell(),
        spec,
    )
}

/// Finitely supported sequence on `Z^k`, stored row-major over `shape`
/// starting at the lattice point `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeSequence {
    pub shape: Vec<usize>,
    pub origin: Vec<i64>,
    pub values: Vec<f64>,
}

impl CubeSequence {
    pub fn new(shape: Vec<usize>, origin: Vec<i64>, values: Vec<f64>) -> Result<Self> {
        if shape.len() != origin.len() || shape.is_empty() {
            return Err(Error::Domain("shape and origin must have equal, nonzero rank".into()));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::Domain("values do not fill the shape".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("cube sequences are finite and non-negative".into()));
        }
        Ok(Self { shape, origin, values })
    }

    /// One-dimensional sequence starting at `origin`.
    pub fn from_1d(origin: i64, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], vec![origin], values)
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for (o, s) in out.iter_mut().zip(&self.shape).rev() {
            *o = idx % s;
            idx /= s;
        }
        out
    }

    /// Lattice convolution `(a*b)(j) = Σ_k a(j−k) b(k)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.rank() != other.rank() {
            return Err(Error::Domain("convolution of sequences of different rank".into()));
        }
        let shape: Vec<usize> = self
            .shape
            .iter()
            .zip(&other.shape)
            .map(|(a, b)| a + b - 1)
            .collect();
        let origin: Vec<i64> = self.origin.iter().zip(&other.origin).map(|(a, b)| a + b).collect();
        let mut values = vec![0.0; shape.iter().product()];
        for (i, &a) in self.values.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ia = self.unravel(i);
            for (j, &b) in other.values.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let ib = other.unravel(j);
                let mut flat = 0;
                for ((x, y), s) in ia.iter().zip(&ib).zip(&shape) {
                    flat = flat * s + x + y;
                }
                values[flat] += a * b;
            }
        }
        Ok(Self { shape, origin, values })
    }
}

/// Outer lattice norm of an amalgam: a mixed `ℓ^{Φ,Ψ}` / `ℓ_*^{Φ,Ψ}` over the
/// (first cube, second cube) split, or a single `ℓ^p` over all cubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeNorm {
    Mixed(NormSpec),
    Lr(f64),
}

fn cube_partition(grid: &Grid) -> Result<(i64, usize, Vec<usize>)> {
    let per_unit = (1.0 / grid.dx).round();
    if per_unit < 1.0 || ((per_unit * grid.dx) - 1.0).abs() > 1e-9 {
        return Err(Error::MisalignedCubes(format!(
            "spacing {} is not 1/integer",
            grid.dx
        )));
    }
    let s = per_unit as i64;
    let half = (grid.n / 2) as i64;
    let cube = |j: usize| (j as i64 - half).div_euclid(s);
    let first = cube(0);
    let count = (cube(grid.n - 1) - first + 1) as usize;
    let map = (0..grid.n).map(|j| (cube(j) - first) as usize).collect();
    Ok((first, count, map))
}

/// Local quasi-norms `a(j,k) = ‖F‖_{L^r(Q_{j,k})}` on unit cubes anchored at
/// lattice points. Shape is `[c₁; d] ++ [c₂; d]`.
pub fn cube_sequence(field: &PhaseField, r: f64) -> Result<CubeSequence> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("exponent r = {r}")));
    }
    let (o1, c1, m1) = cube_partition(&field.first)?;
    let (o2, c2, m2) = cube_partition(&field.second)?;
    let d1 = field.first.d;
    let d2 = field.second.d;
    let n1 = c1.pow(d1 as u32);
    let n2 = c2.pow(d2 as u32);
    let cube_of = |grid: &Grid, map: &[usize], c: usize, idx: usize| {
        let ix = grid.unravel(idx);
        if grid.d == 1 {
            map[ix[0]]
        } else {
            map[ix[0]] * c + map[ix[1]]
        }
    };
    let w = field.first.cell() * field.second.cell();
    let mut acc = vec![0.0f64; n1 * n2];
    let ns = field.second.len();
    for a in 0..field.first.len() {
        let ca = cube_of(&field.first, &m1, c1, a);
        for b in 0..ns {
            let v = field.values[a * ns + b].abs();
            let slot = &mut acc[ca * n2 + cube_of(&field.second, &m2, c2, b)];
            if r.is_infinite() {
                *slot = slot.max(v);
            } else {
                *slot += w * v.powf(r);
            }
        }
    }
    if r.is_finite() {
        for v in &mut acc {
            *v = v.powf(1.0 / r);
        }
    }
    let mut shape = vec![c1; d1];
    shape.extend(std::iter::repeat_n(c2, d2));
    let mut origin = vec![o1; d1];
    origin.extend(std::iter::repeat_n(o2, d2));
    CubeSequence::new(shape, origin, acc)
}

/// `‖F‖_{W^r(B)}`: the lattice norm `B` of the local `L^r` cube norms.
pub fn amalgam_norm(field: &PhaseField, r: f64, outer: &LatticeNorm) -> Result<f64> {
    let seq = cube_sequence(field, r)?;
    match outer {
        LatticeNorm::Lr(p) => lr_quasinorm(&seq.values, Weights::Uniform(1.0), *p),
        LatticeNorm::Mixed(spec) => {
            let n1: usize = seq.shape[..field.first.d].iter().product();
            let n2: usize = seq.shape[field.first.d..].iter().product();
            mixed_core(&seq.values, n1, n2, 1.0, 1.0, spec)
        }
    }
}

/// Position-space amalgam `W^r(ℓ^Φ)` of a field: local `L^r` norms on unit
/// cubes, then the Luxemburg norm of that sequence under counting measure.
pub fn field_amalgam_norm(f: &SampledField, r: f64, phi: &QuasiYoungFunction) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("exponent r = {r}")));
    }
    let (_, c, map) = cube_partition(&f.grid)?;
    let cubes = c.pow(f.grid.d as u32);
    let w = f.grid.cell();
    let mut acc = vec![0.0f64; cubes];
    for (idx, v) in f.values.iter().enumerate() {
        let ix = f.grid.unravel(idx);
        let k = if f.grid.d == 1 { map[ix[0]] } else { map[ix[0]] * c + map[ix[1]] };
        if r.is_infinite() {
            acc[k] = acc[k].max(v.norm());
        } else {
            acc[k] += w * v.norm().powf(r);
        }
    }
    if r.is_finite() {
        acc.iter_mut().for_each(|v| *v = v.powf(1.0 / r));
    }
    luxemburg_or_sup(&acc, 1.0, phi)
}

/// `‖f‖_{M^{Φ,Ψ}} = ‖V_φ f‖_{L^{Φ,Ψ}}` (or the starred order if `spec` asks for it).
pub fn modulation_norm(f: &SampledField, window: &SampledField, spec: &NormSpec) -> Result<f64> {
    let v = stft(f, window)?;
    mixed_norm(&PhaseField::from(&v), spec)
}

/// `‖f‖_{W^{p,q}} = ‖V_φ f‖_{L_*^{p,q}}`.
pub fn wiener_space_norm(f: &SampledField, window: &SampledField, p: f64, q: f64) -> Result<f64> {
    modulation_norm(f, window, &NormSpec::lebesgue_star(p, q))
}

/// Both sides of `‖a*b‖_{ℓ^Φ} ≤ C‖a‖_{ℓ^r}‖b‖_{ℓ^Φ}` under counting measure.
pub fn sequence_convolution_bound(
    a: &CubeSequence,
    b: &CubeSequence,
    phi: &QuasiYoungFunction,
    r: f64,
) -> Result<(f64, f64)> {
    let ab = a.convolve(b)?;
    let lhs = luxemburg(&ab.values, Weights::Uniform(1.0), phi)?;
    let rhs = lr_quasinorm(&a.values, Weights::Uniform(1.0), r)?
        * luxemburg(&b.values, Weights::Uniform(1.0), phi)?;
    Ok((lhs, rhs))
}

/// One computed norm, as written by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub norm_name: String,
    pub spec: String,
    pub value: f64,
    pub grid: String,
    pub boundary_mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_window, random_bandlimited};

    fn power(p: f64) -> QuasiYoungFunction {
        QuasiYoungFunction::power(p)
    }

    #[test]
    fn luxemburg_matches_lp() {
        let s: [f64; 5] = [0.3, 1.7, 0.0, 2.2, 0.05];
        let w = [0.5, 1.0, 2.0, 0.25, 3.0];
        for p in [0.5, 1.0, 2.0, 4.0, 7.5] {
            let exact = s
                .iter()
                .zip(&w)
                .map(|(v, w)| w * v.powf(p))
                .sum::<f64>()
                .powf(1.0 / p);
            let got = luxemburg_norm(&s, &w, &power(p)).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-10, "p={p}: {got} vs {exact}");
        }
    }

    #[test]
    fn luxemburg_zero_and_sup() {
        assert_eq!(luxemburg_norm(&[0.0; 4], &[1.0; 4], &power(2.0)).unwrap(), 0.0);
        assert_eq!(
            luxemburg_norm(&[1.0, 7.0, 2.0], &[1.0; 3], &power(f64::INFINITY)).unwrap(),
            7.0
        );
    }

    #[test]
    fn luxemburg_of_indicator_inverts_phi() {
        // ρ = μ Φ(1/λ) = 1  ⇒  λ = 1/Φ^{-1}(1/μ); Φ^{-1} by scalar bisection
        let cases = [
            QuasiYoungFunction::exp_minus_one(),
            QuasiYoungFunction::power_log(1.0, 1.0),
            QuasiYoungFunction::power_log(2.0, 0.5),
            power(3.0),
        ];
        let w = [0.3, 0.2, 0.7];
        let mu: f64 = w.iter().sum();
        for phi in cases {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            while phi.evaluate(hi).unwrap() < 1.0 / mu {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if phi.evaluate(mid).unwrap() < 1.0 / mu {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let expected = 1.0 / (0.5 * (lo + hi));
            let got = luxemburg_norm(&[1.0, 1.0, 1.0], &w, &phi).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-9, "{}: {got} vs {expected}", phi.label());
        }
    }

    #[test]
    fn luxemburg_with_jump_function() {
        // Φ = 0 on [0, 2], ∞ beyond: the norm is max|f|/2
        let phi = QuasiYoungFunction::indicator_jump(2.0);
        let got = luxemburg_norm(&[1.0, 3.0, 0.5], &[1.0; 3], &phi).unwrap();
        assert!((got - 1.5).abs() < 1e-11);
    }

    #[test]
    fn luxemburg_rejects_bad_input() {
        assert!(matches!(
            luxemburg_norm(&[f64::NAN], &[1.0], &power(2.0)),
            Err(Error::NonFinite(_))
        ));
        assert!(luxemburg_norm(&[1.0], &[0.0], &power(2.0)).is_err());
        assert!(luxemburg_norm(&[1.0, 2.0], &[1.0], &power(2.0)).is_err());
    }

    #[test]
    fn luxemburg_defining_property() {
        let s = [0.1, 4.0, 2.5, 0.9, 1e-3];
        for phi in [
            QuasiYoungFunction::exp_minus_one(),
            QuasiYoungFunction::power_log(1.0, 2.0),
            power(0.5),
        ] {
            let lam = luxemburg(&s, Weights::Uniform(0.1), &phi).unwrap();
            let rho: f64 = s.iter().map(|v| 0.1 * phi.evaluate(v / lam).unwrap()).sum();
            assert!((rho - 1.0).abs() <= 1e-9, "{}: rho = {rho}", phi.label());
        }
    }

    #[test]
    fn lr_examples() {
        let u = Weights::Uniform(1.0);
        assert!((lr_quasinorm(&[3.0, 4.0], u, 2.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(lr_quasinorm(&[1.0, 7.0, 2.0], u, f64::INFINITY).unwrap(), 7.0);
        assert!((lr_quasinorm(&[1.0, 1.0], u, 0.5).unwrap() - 4.0).abs() < 1e-14);
        assert!(lr_quasinorm(&[1.0], u, 0.0).is_err());
    }

    #[test]
    fn mixed_norm_reduces_to_power_sums() {
        let g1 = Grid::new(1, 8, 0.5).unwrap();
        let g2 = Grid::new(1, 16, 0.25).unwrap();
        let f = PhaseField::from_fn(g1, g2, |x, y| (x[0] * 1.3 + y[0]).sin().abs() + 0.1);
        let (p, q) = (3.0, 1.5);
        // L^{p,q}: inner p over first variable
        let mut prof = [0.0; 16];
        for (b, pr) in prof.iter_mut().enumerate() {
            *pr = (0..8)
                .map(|a| 0.5 * f.values[a * 16 + b].powf(p))
                .sum::<f64>()
                .powf(1.0 / p);
        }
        let expect = prof.iter().map(|v| 0.25 * v.powf(q)).sum::<f64>().powf(1.0 / q);
        let got = mixed_norm(&f, &NormSpec::lebesgue(p, q)).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-9);
        // L_*^{p,q}: q over the second variable first
        let prof: Vec<f64> = (0..8)
            .map(|a| {
                (0..16)
                    .map(|b| 0.25 * f.values[a * 16 + b].powf(q))
                    .sum::<f64>()
                    .powf(1.0 / q)
            })
            .collect();
        let expect = prof.iter().map(|v| 0.5 * v.powf(p)).sum::<f64>().powf(1.0 / p);
        let got = mixed_norm(&f, &NormSpec::lebesgue_star(p, q)).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_norm_of_product_factors() {
        let g1 = Grid::new(1, 32, 0.25).unwrap();
        let g2 = Grid::new(1, 16, 0.5).unwrap();
        let u = |x: f64| (-x * x).exp() + 0.01;
        let v = |y: f64| 1.0 / (1.0 + y * y);
        let f = PhaseField::from_fn(g1, g2, |x, y| u(x[0]) * v(y[0]));
        let us: Vec<f64> = (0..32).map(|j| u(g1.coord(j))).collect();
        let vs: Vec<f64> = (0..16).map(|j| v(g2.coord(j))).collect();
        let phi = QuasiYoungFunction::power_log(1.0, 1.0);
        let psi = QuasiYoungFunction::exp_minus_one();
        for order in [OrderFlag::InnerFirst, OrderFlag::OuterFirst] {
            let spec = NormSpec::new(phi.clone(), psi.clone(), order);
            let got = mixed_norm(&f, &spec).unwrap();
            let expect = luxemburg(&us, Weights::Uniform(0.25), &phi).unwrap()
                * luxemburg(&vs, Weights::Uniform(0.5), &psi).unwrap();
            assert!((got / expect - 1.0).abs() < 1e-8);
        }
        let zero = PhaseField::new(g1, g2, vec![0.0; 512]).unwrap();
        assert_eq!(mixed_norm(&zero, &NormSpec::lebesgue(2.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn amalgam_examples() {
        // spacing 1/4; box [-2, 2) per axis → 4 unit cubes per axis
        let g = Grid::new(1, 16, 0.25).unwrap();
        let c = 1.7;
        let f = PhaseField::from_fn(g, g, |_, _| c);
        let k = 16.0;
        let v = amalgam_norm(&f, f64::INFINITY, &LatticeNorm::Lr(1.0)).unwrap();
        assert!((v - c * k).abs() < 1e-12);

        let f = PhaseField::from_fn(g, g, |x, y| (x[0] - 0.3).cos().abs() * (1.0 + y[0] * y[0]));
        let sup = f.values.iter().cloned().fold(0.0, f64::max);
        let v = amalgam_norm(&f, f64::INFINITY, &LatticeNorm::Lr(f64::INFINITY)).unwrap();
        assert_eq!(v, sup);

        // support inside the cube [0,1)×[-1,0)
        let f = PhaseField::from_fn(g, g, |x, y| {
            if (0.0..1.0).contains(&x[0]) && (-1.0..0.0).contains(&y[0]) {
                1.0 + x[0] + y[0] * y[0]
            } else {
                0.0
            }
        });
        for r in [0.5, 1.0, 3.0] {
            let local = lr_quasinorm(&f.values, Weights::Uniform(g.cell() * g.cell()), r).unwrap();
            for p in [0.5, 1.0, 2.0, f64::INFINITY] {
                let v = amalgam_norm(&f, r, &LatticeNorm::Lr(p)).unwrap();
                assert!((v - local).abs() < 1e-12 * local);
                let v = amalgam_norm(&f, r, &LatticeNorm::Mixed(NormSpec::lebesgue(p, 2.0))).unwrap();
                assert!((v - local).abs() < 1e-11 * local);
            }
        }
    }

    #[test]
    fn amalgam_rejects_misaligned_grid() {
        let g = Grid::new(1, 16, 0.3).unwrap();
        let f = PhaseField::from_fn(g, g, |_, _| 1.0);
        assert!(matches!(
            amalgam_norm(&f, 1.0, &LatticeNorm::Lr(1.0)),
            Err(Error::MisalignedCubes(_))
        ));
    }

    #[test]
    fn field_amalgam_of_cube_steps() {
        // constant c_k on the k-th unit cube: local L² norm is |c_k|
        let g = Grid::new(1, 16, 0.5).unwrap();
        let f = SampledField::from_real_fn(g, |x| x[0].floor() + 0.5);
        let steps: Vec<f64> = (-4..4).map(|k| (k as f64 + 0.5).abs()).collect();
        let expect = steps.iter().map(|v| v.powi(3)).sum::<f64>().cbrt();
        let got = field_amalgam_norm(&f, 2.0, &power(3.0)).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-10, "{got} vs {expect}");
        let sup = field_amalgam_norm(&f, 2.0, &power(f64::INFINITY)).unwrap();
        assert!((sup - 3.5).abs() < 1e-12, "{sup}");
        let bad = Grid::new(1, 16, 0.3).unwrap();
        assert!(field_amalgam_norm(&SampledField::zeros(bad), 1.0, &power(1.0)).is_err());
    }

    #[test]
    fn cube_sequence_layout_2d() {
        let g = Grid::new(2, 8, 0.5).unwrap();
        let h = Grid::new(1, 4, 1.0).unwrap();
        let f = PhaseField::from_fn(g, h, |_, _| 1.0);
        let seq = cube_sequence(&f, 1.0).unwrap();
        assert_eq!(seq.shape, vec![4, 4, 4]);
        assert_eq!(seq.origin, vec![-2, -2, -2]);
        // each cube holds 4 cells of measure 0.25·1
        assert!(seq.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn modulation_norm_examples() {
        let grid = Grid::new(1, 256, 0.125).unwrap();
        let w = gaussian_window(1.0, grid).unwrap();
        let f = random_bandlimited(grid, 0.5, 7).unwrap();
        let m = modulation_norm(&f, &w, &NormSpec::lebesgue(2.0, 2.0)).unwrap();
        assert!((m / f.l2_norm() - 1.0).abs() < 1e-8);
        let z = SampledField::zeros(grid);
        assert_eq!(modulation_norm(&z, &w, &NormSpec::lebesgue(2.0, 1.0)).unwrap(), 0.0);
        let spec = NormSpec::modulation(QuasiYoungFunction::power_log(1.0, 1.0), power(2.0));
        let a = modulation_norm(&f, &w, &spec).unwrap();
        let b = modulation_norm(&f.scaled(num_complex::Complex64::new(3.5, 0.0)), &w, &spec).unwrap();
        assert!((b / a - 3.5).abs() < 1e-10 * 3.5);
        let wn = wiener_space_norm(&f, &w, 2.0, 2.0).unwrap();
        assert!((wn / m - 1.0).abs() < 1e-10);
        assert_eq!(wiener_space_norm(&z, &w, 1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn sequence_convolution_examples() {
        let b = CubeSequence::from_1d(-2, vec![0.5, 1.0, 0.0, 2.0, 0.25]).unwrap();
        let spike = CubeSequence::from_1d(0, vec![1.0]).unwrap();
        let phi = QuasiYoungFunction::power_log(1.0, 1.0);
        let (lhs, rhs) = sequence_convolution_bound(&spike, &b, &phi, 0.5).unwrap();
        let nb = luxemburg(&b.values, Weights::Uniform(1.0), &phi).unwrap();
        assert_eq!(lhs, nb);
        assert_eq!(rhs, nb);
        let zero = CubeSequence::from_1d(0, vec![0.0; 3]).unwrap();
        assert_eq!(sequence_convolution_bound(&b, &zero, &phi, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn lattice_convolution_matches_direct_sum() {
        let a = CubeSequence::new(vec![2, 3], vec![-1, 0], vec![1.0, 2.0, 0.0, 0.5, 1.5, 3.0]).unwrap();
        let b = CubeSequence::new(vec![2, 2], vec![0, -1], vec![1.0, 0.25, 2.0, 4.0]).unwrap();
        let c = a.convolve(&b).unwrap();
        assert_eq!(c.shape, vec![3, 4]);
        assert_eq!(c.origin, vec![-1, -1]);
        let get = |s: &CubeSequence, i: i64, j: i64| -> f64 {
            let (ii, jj) = (i - s.origin[0], j - s.origin[1]);
            if ii < 0 || jj < 0 || ii >= s.shape[0] as i64 || jj >= s.shape[1] as i64 {
                0.0
            } else {
                s.values[ii as usize * s.shape[1] + jj as usize]
            }
        };
        for i in -3..4 {
            for j in -3..5 {
                let mut direct = 0.0;
                for k in -5..6 {
                    for l in -5..6 {
                        direct += get(&a, i - k, j - l) * get(&b, k, l);
                    }
                }
                assert!((get(&c, i, j) - direct).abs() < 1e-14);
            }
        }
    }
}
