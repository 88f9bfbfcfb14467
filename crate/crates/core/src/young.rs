//! Quasi-Young functions: evaluation, right derivatives, Lebesgue exponents,
//! the Δ₂ test and order estimation.
//!
//! A quasi-Young function of order `r ∈ (0, 1]` is a non-decreasing
//! `Φ: [0, ∞) → [0, ∞]` with `Φ(0) = 0` such that `t ↦ Φ(t^{1/r})` is convex.
//! Values may be `+∞` (see [`YoungFamily::IndicatorJump`]); callers receive
//! `f64::INFINITY` in that case and every consumer in this crate propagates it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of log-spaced points used by the midpoint-convexity test.
pub const CONVEXITY_POINTS: usize = 64;
/// Default range and density for Lebesgue exponent estimation.
pub const DEFAULT_T_MIN: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 1e3;
pub const DEFAULT_EXPONENT_POINTS: usize = 200;
/// Sampled ratios above this value are treated as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
/// Factor by which each end of the grid is pushed out when probing divergence.
const EXTENSION_FACTOR: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum YoungFamily {
    /// `t^p`; `p = ∞` is the jump at 1 (0 below, 1 at 1, ∞ above).
    Power { p: f64 },
    /// `t^p · log(1 + t)^a`
    PowerLog { p: f64, a: f64 },
    /// `e^t − 1`
    #[serde(alias = "expm1")]
    ExpMinusOne,
    /// 0 on `[0, t0]`, `+∞` beyond.
    IndicatorJump { t0: f64 },
    /// Piecewise-linear through `(t, Φ(t))` knots with linear extrapolation.
    Tabulated { knots: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiYoungFunction {
    pub family: YoungFamily,
    pub declared_order: f64,
}

/// Serialized form: the family tag plus an optional explicit order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct YoungSpec {
    #[serde(flatten)]
    pub family: YoungFamily,
    #[serde(default)]
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    /// Outermost range probed for divergence of the upper exponent.
    pub probed_min: f64,
    pub probed_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LebesgueExponents {
    pub q_lower: f64,
    pub p_upper: f64,
    pub grid_used: ExponentGrid,
}

fn log_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t_min];
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl QuasiYoungFunction {
    /// Builds a descriptor and checks the quasi-Young invariants at the given order.
    pub fn new(family: YoungFamily, declared_order: f64) -> Result<Self> {
        let family = normalize_family(family)?;
        if !(declared_order > 0.0 && declared_order <= 1.0) {
            return Err(Error::InvalidYoung(format!(
                "order {declared_order} outside (0, 1]"
            )));
        }
        let phi = Self {
            family,
            declared_order,
        };
        if !phi.passes_midpoint_convexity(declared_order) {
            return Err(Error::InvalidYoung(format!(
                "t ↦ Φ(t^(1/{declared_order})) fails the midpoint convexity test"
            )));
        }
        Ok(phi)
    }

    /// Builds a descriptor with the family's natural order.
    pub fn with_default_order(family: YoungFamily) -> Result<Self> {
        let order = match &family {
            YoungFamily::Power { p } => p.min(1.0),
            _ => 1.0,
        };
        Self::new(family, order)
    }

    pub fn power(p: f64) -> Self {
        Self::with_default_order(YoungFamily::Power { p }).expect("valid power family")
    }

    pub fn power_log(p: f64, a: f64) -> Self {
        Self::with_default_order(YoungFamily::PowerLog { p, a }).expect("valid power-log family")
    }

    pub fn exp_minus_one() -> Self {
        Self::with_default_order(YoungFamily::ExpMinusOne).expect("valid exponential family")
    }

    pub fn indicator_jump(t0: f64) -> Self {
        Self::with_default_order(YoungFamily::IndicatorJump { t0 }).expect("valid jump family")
    }

    pub fn tabulated(knots: Vec<(f64, f64)>, order: f64) -> Result<Self> {
        Self::new(YoungFamily::Tabulated { knots }, order)
    }

    pub fn from_spec(spec: YoungSpec) -> Result<Self> {
        match spec.order {
            Some(r) => Self::new(spec.family, r),
            None => Self::with_default_order(spec.family),
        }
    }

    /// Parses the short command-line form, e.g. `power:2`, `powerlog:1,1`,
    /// `expm1`, `indicator:1`, or a JSON object such as `{"family":"power","p":2.0}`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            let spec: YoungSpec =
                serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            return Self::from_spec(spec);
        }
        let (name, args) = text.split_once(':').unwrap_or((text, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|s| parse_real(s.trim()))
                .collect::<Result<_>>()?
        };
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "family `{name}` expects {k} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        let family = match name.to_ascii_lowercase().as_str() {
            "power" | "lp" => {
                want(1)?;
                YoungFamily::Power { p: nums[0] }
            }
            "powerlog" | "power_log" => {
                want(2)?;
                YoungFamily::PowerLog {
                    p: nums[0],
                    a: nums[1],
                }
            }
            "expm1" | "exp_minus_one" | "exp" => {
                want(0)?;
                YoungFamily::ExpMinusOne
            }
            "indicator" | "indicator_jump" | "jump" => {
                want(1)?;
                YoungFamily::IndicatorJump { t0: nums[0] }
            }
            other => {
                return Err(Error::Config(format!("unknown quasi-Young family `{other}`")));
            }
        };
        Self::with_default_order(family)
    }

    /// `Φ(t)`, possibly `+∞`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("Φ evaluated at t = {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `Φ(t)` for `t ≥ 0`; no domain check.
    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match &self.family {
            YoungFamily::Power { p } => {
                if p.is_infinite() {
                    if t < 1.0 {
                        0.0
                    } else if t == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else if *p == 1.0 {
                    t
                } else if *p == 2.0 {
                    t * t
                } else {
                    t.powf(*p)
                }
            }
            YoungFamily::PowerLog { p, a } => {
                let lg = t.ln_1p();
                let base = if *p == 1.0 { t } else { t.powf(*p) };
                if *a == 0.0 {
                    base
                } else if *a == 1.0 {
                    base * lg
                } else {
                    base * lg.powf(*a)
                }
            }
            YoungFamily::ExpMinusOne => t.exp_m1(),
            YoungFamily::IndicatorJump { t0 } => {
                if t <= *t0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            YoungFamily::Tabulated { knots } => tabulated_eval(knots, t),
        }
    }

    /// Right derivative `Φ'_+(t)`.
    pub fn right_derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("right derivative at t = {t}")));
        }
        match &self.family {
            YoungFamily::Power { p } => {
                if p.is_infinite() {
                    if t < 1.0 {
                        Ok(0.0)
                    } else {
                        Err(Error::InfiniteSlope(t))
                    }
                } else {
                    Ok(p * t.powf(p - 1.0))
                }
            }
            YoungFamily::PowerLog { p, a } => {
                let lg = t.ln_1p();
                let mut d = p * t.powf(p - 1.0) * lg.powf(*a);
                if *a != 0.0 {
                    d += a * t.powf(*p) * lg.powf(a - 1.0) / (1.0 + t);
                }
                Ok(d)
            }
            YoungFamily::ExpMinusOne => Ok(t.exp()),
            YoungFamily::IndicatorJump { t0 } => {
                if t < *t0 {
                    Ok(0.0)
                } else {
                    Err(Error::InfiniteSlope(t))
                }
            }
            YoungFamily::Tabulated { knots } => {
                let h = t.max(1.0) * 1e-6;
                Ok((tabulated_eval(knots, t + h) - tabulated_eval(knots, t)) / h)
            }
        }
    }

    /// Whether `0 < Φ(t) < ∞`.
    pub fn in_finiteness_set(&self, t: f64) -> bool {
        let v = self.eval_unchecked(t);
        v > 0.0 && v.is_finite()
    }

    /// Whether `{t > 0 : 0 < Φ(t) < ∞}` is all of `(0, ∞)`.
    pub fn finiteness_set_is_full(&self) -> bool {
        match &self.family {
            YoungFamily::Power { p } => p.is_finite(),
            YoungFamily::PowerLog { .. } | YoungFamily::ExpMinusOne => true,
            YoungFamily::IndicatorJump { .. } => false,
            // first knot is (0, 0), so Φ > 0 on (0, t₁] iff Φ(t₁) > 0
            YoungFamily::Tabulated { knots } => knots.get(1).is_some_and(|k| k.1 > 0.0),
        }
    }

    fn finiteness_set_is_empty(&self) -> bool {
        matches!(self.family, YoungFamily::IndicatorJump { .. })
    }

    /// `t Φ'_+(t) / Φ(t)` at a point of the finiteness set.
    pub fn elasticity(&self, t: f64) -> Result<f64> {
        match &self.family {
            YoungFamily::Power { p } if p.is_finite() => Ok(*p),
            YoungFamily::PowerLog { p, a } => {
                let lg = t.ln_1p();
                Ok(p + a * t / ((1.0 + t) * lg))
            }
            YoungFamily::ExpMinusOne => Ok(t / -(-t).exp_m1()),
            _ => {
                let v = self.evaluate(t)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("t = {t} outside the finiteness set")));
                }
                Ok(t * self.right_derivative(t)? / v)
            }
        }
    }

    fn sampled_ratio_range(&self, grid: &[f64]) -> Result<Option<(f64, f64)>> {
        let mut range: Option<(f64, f64)> = None;
        // a full finiteness set is known analytically; sampling Φ would overflow
        let full = self.finiteness_set_is_full();
        for &t in grid {
            if !full && !self.in_finiteness_set(t) {
                continue;
            }
            let e = self.elasticity(t)?;
            range = Some(match range {
                None => (e, e),
                Some((lo, hi)) => (lo.min(e), hi.max(e)),
            });
        }
        Ok(range)
    }

    /// Lebesgue exponents `(q_Φ, p_Φ)` sampled on a log-spaced grid.
    ///
    /// `p_upper` is `+∞` when the finiteness set is not `(0, ∞)`, when a
    /// sampled ratio exceeds [`DIVERGENCE_THRESHOLD`], or when pushing both
    /// grid ends out by a factor 10³ at least doubles the sampled supremum
    /// twice in a row.
    pub fn lebesgue_exponents(&self, t_min: f64, t_max: f64, n: usize) -> Result<LebesgueExponents> {
        if n < 2 || !(t_min > 0.0) || !(t_max > t_min) || !t_max.is_finite() {
            return Err(Error::Domain(format!(
                "exponent grid [{t_min}, {t_max}] with {n} points"
            )));
        }
        let mut grid_used = ExponentGrid {
            t_min,
            t_max,
            n,
            probed_min: t_min,
            probed_max: t_max,
        };
        if matches!(self.family, YoungFamily::Power { p } if p.is_infinite())
            || self.finiteness_set_is_empty()
        {
            return Ok(LebesgueExponents {
                q_lower: f64::INFINITY,
                p_upper: f64::INFINITY,
                grid_used,
            });
        }
        let base = log_grid(t_min, t_max, n);
        let (q_lower, p0) = self
            .sampled_ratio_range(&base)?
            .ok_or(Error::GridOutsideFiniteSet { t_min, t_max })?;

        if !self.finiteness_set_is_full() {
            return Ok(LebesgueExponents {
                q_lower,
                p_upper: f64::INFINITY,
                grid_used,
            });
        }

        let per_decade = (n - 1) as f64 / (t_max / t_min).log10();
        let mut sups = vec![p0];
        let (mut lo, mut hi) = (t_min, t_max);
        for _ in 0..2 {
            lo /= EXTENSION_FACTOR;
            hi *= EXTENSION_FACTOR;
            let m = ((hi / lo).log10() * per_decade).ceil() as usize + 1;
            let (_, s) = self
                .sampled_ratio_range(&log_grid(lo, hi, m.min(20_000)))?
                .expect("extended grid contains the base grid");
            sups.push(s);
        }
        grid_used.probed_min = lo;
        grid_used.probed_max = hi;

        let diverges = sups.iter().any(|&s| s > DIVERGENCE_THRESHOLD)
            || (sups[1] >= 2.0 * sups[0] && sups[2] >= 2.0 * sups[1]);
        Ok(LebesgueExponents {
            q_lower,
            p_upper: if diverges { f64::INFINITY } else { p0 },
            grid_used,
        })
    }

    pub fn default_exponents(&self) -> Result<LebesgueExponents> {
        self.lebesgue_exponents(DEFAULT_T_MIN, DEFAULT_T_MAX, DEFAULT_EXPONENT_POINTS)
    }

    /// Δ₂ condition, decided through finiteness of `p_Φ`.
    pub fn is_delta2(&self) -> bool {
        self.default_exponents()
            .map(|e| e.p_upper.is_finite())
            .unwrap_or(false)
    }

    /// Sampled midpoint convexity of `s ↦ Φ(s^{1/r})` on a 64-point log grid.
    pub fn passes_midpoint_convexity(&self, r: f64) -> bool {
        let s = log_grid(DEFAULT_T_MIN, DEFAULT_T_MAX, CONVEXITY_POINTS);
        let g = |x: f64| self.eval_unchecked(x.powf(1.0 / r));
        let vals: Vec<f64> = s.iter().map(|&x| g(x)).collect();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let rhs = 0.5 * (vals[i] + vals[j]);
                if rhs.is_infinite() {
                    continue;
                }
                let mid = g(0.5 * (s[i] + s[j]));
                let tol = 1e-9 * (1.0 + mid.abs() + rhs.abs());
                if !(mid <= rhs + tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest candidate order that passes the convexity test.
    pub fn estimate_order(&self, candidates: &[f64]) -> f64 {
        let mut sorted: Vec<f64> = candidates
            .iter()
            .copied()
            .filter(|r| *r > 0.0 && *r <= 1.0)
            .collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        match sorted.into_iter().find(|&r| self.passes_midpoint_convexity(r)) {
            Some(r) => r,
            None => {
                log::warn!(
                    "no candidate order passed the convexity test; using declared order {}",
                    self.declared_order
                );
                self.declared_order
            }
        }
    }

    /// `q < q_Φ` and `p_Φ < p`.
    pub fn check_exponent_window(&self, q: f64, p: f64) -> bool {
        match self.default_exponents() {
            Ok(e) => q < e.q_lower && e.p_upper < p,
            Err(_) => false,
        }
    }

    /// Short label used in reports, e.g. `power(2)`.
    pub fn label(&self) -> String {
        match &self.family {
            YoungFamily::Power { p } => format!("power({p})"),
            YoungFamily::PowerLog { p, a } => format!("powerlog({p},{a})"),
            YoungFamily::ExpMinusOne => "expm1".to_string(),
            YoungFamily::IndicatorJump { t0 } => format!("indicator({t0})"),
            YoungFamily::Tabulated { knots } => format!("tabulated[{}]", knots.len()),
        }
    }

    /// The `L^∞` case, where Luxemburg norms reduce to a supremum.
    pub fn is_sup_norm(&self) -> bool {
        matches!(self.family, YoungFamily::Power { p } if p.is_infinite())
    }

    /// Exponent `p` when this is the plain power family.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.family {
            YoungFamily::Power { p } => Some(p),
            _ => None,
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => {
            if let Some((n, d)) = other.split_once('/') {
                let n: f64 = n.trim().parse().map_err(|_| bad_real(s))?;
                let d: f64 = d.trim().parse().map_err(|_| bad_real(s))?;
                return Ok(n / d);
            }
            other.parse().map_err(|_| bad_real(s))
        }
    }
}

pub(crate) fn parse_real_param(s: &str) -> Result<f64> {
    parse_real(s)
}

fn bad_real(s: &str) -> Error {
    Error::Config(format!("cannot parse `{s}` as a number"))
}

fn normalize_family(family: YoungFamily) -> Result<YoungFamily> {
    let bad = |m: String| Err(Error::InvalidYoung(m));
    match family {
        YoungFamily::Power { p } if !(p > 0.0) => bad(format!("power exponent {p} must be > 0")),
        YoungFamily::PowerLog { p, a } if !(p >= 1.0 && a >= 0.0 && p.is_finite() && a.is_finite()) => {
            bad(format!("power-log parameters p = {p}, a = {a}"))
        }
        YoungFamily::IndicatorJump { t0 } if !(t0 > 0.0 && t0.is_finite()) => {
            bad(format!("jump point {t0} must be finite and > 0"))
        }
        YoungFamily::Tabulated { mut knots } => {
            if knots.is_empty() {
                return bad("no knots".into());
            }
            if knots[0].0 != 0.0 {
                knots.insert(0, (0.0, 0.0));
            }
            if knots[0].1 != 0.0 {
                return bad("Φ(0) must be 0".into());
            }
            if knots.len() < 2 {
                return bad("need at least one knot with t > 0".into());
            }
            for w in knots.windows(2) {
                let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                if !(t1 > t0) || !(v1 >= v0) || !v1.is_finite() {
                    return bad("knots must be strictly increasing in t, non-decreasing in Φ".into());
                }
            }
            let (ta, va) = knots[knots.len() - 2];
            let (tb, vb) = knots[knots.len() - 1];
            if !((vb - va) / (tb - ta) > 0.0) {
                return bad("last segment must have positive slope so that Φ(t) → ∞".into());
            }
            Ok(YoungFamily::Tabulated { knots })
        }
        f => Ok(f),
    }
}

fn tabulated_eval(knots: &[(f64, f64)], t: f64) -> f64 {
    let idx = knots.partition_point(|k| k.0 <= t);
    let (a, b) = if idx >= knots.len() {
        (knots[knots.len() - 2], knots[knots.len() - 1])
    } else {
        (knots[idx - 1], knots[idx])
    };
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(QuasiYoungFunction::power(2.0).evaluate(3.0).unwrap(), 9.0);
        let e = QuasiYoungFunction::exp_minus_one().evaluate(1.0).unwrap();
        assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        for phi in [
            QuasiYoungFunction::power(0.5),
            QuasiYoungFunction::power_log(1.0, 1.0),
            QuasiYoungFunction::exp_minus_one(),
            QuasiYoungFunction::indicator_jump(1.0),
            QuasiYoungFunction::power(f64::INFINITY),
        ] {
            assert_eq!(phi.evaluate(0.0).unwrap(), 0.0);
        }
        assert!(QuasiYoungFunction::indicator_jump(1.0)
            .evaluate(1.5)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn negative_argument_is_domain_error() {
        assert!(matches!(
            QuasiYoungFunction::power(2.0).evaluate(-1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn right_derivative_examples() {
        assert_eq!(QuasiYoungFunction::power(2.0).right_derivative(3.0).unwrap(), 6.0);
        let d = QuasiYoungFunction::exp_minus_one().right_derivative(0.5).unwrap();
        assert!((d - 0.5f64.exp()).abs() < 1e-15);
        let d = QuasiYoungFunction::power_log(1.0, 1.0).right_derivative(1.0).unwrap();
        assert!((d - (2f64.ln() + 0.5)).abs() < 1e-15);
        assert!(matches!(
            QuasiYoungFunction::indicator_jump(1.0).right_derivative(1.0),
            Err(Error::InfiniteSlope(_))
        ));
    }

    #[test]
    fn tabulated_right_derivative_is_forward_difference() {
        let phi = QuasiYoungFunction::tabulated(vec![(1.0, 1.0), (2.0, 3.0), (4.0, 9.0)], 1.0)
            .unwrap();
        assert!((phi.right_derivative(1.5).unwrap() - 2.0).abs() < 1e-9);
        // at a knot the right slope is the slope of the next segment
        assert!((phi.right_derivative(2.0).unwrap() - 3.0).abs() < 1e-6);
        // linear extrapolation past the last knot
        assert!((phi.evaluate(6.0).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_non_convex_at_order_one() {
        // concave knots: slopes 3 then 1
        let r = QuasiYoungFunction::tabulated(vec![(1.0, 3.0), (2.0, 4.0)], 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn exponents_of_power() {
        let e = QuasiYoungFunction::power(3.0)
            .lebesgue_exponents(1e-3, 1e3, 200)
            .unwrap();
        assert_eq!((e.q_lower, e.p_upper), (3.0, 3.0));
    }

    #[test]
    fn exponents_of_exp_minus_one() {
        let e = QuasiYoungFunction::exp_minus_one()
            .lebesgue_exponents(1e-3, 1e2, 200)
            .unwrap();
        assert!((e.q_lower - 1.0).abs() < 1e-3, "{}", e.q_lower);
        assert!(e.p_upper.is_infinite());
    }

    #[test]
    fn exponents_of_jump() {
        let e = QuasiYoungFunction::indicator_jump(1.0)
            .default_exponents()
            .unwrap();
        assert!(e.p_upper.is_infinite());
    }

    #[test]
    fn tabulated_with_zero_plateau_has_infinite_upper_exponent() {
        let phi = QuasiYoungFunction::tabulated(vec![(1.0, 0.0), (2.0, 1.0)], 1.0).unwrap();
        let e = phi.default_exponents().unwrap();
        assert!(e.p_upper.is_infinite());
        assert!(e.q_lower.is_finite());
    }

    #[test]
    fn grid_outside_finite_set_errors() {
        // Φ vanishes on [0, 10], so [1e-3, 1] misses the finiteness set
        let phi = QuasiYoungFunction::tabulated(vec![(10.0, 0.0), (20.0, 1.0)], 1.0).unwrap();
        assert!(matches!(
            phi.lebesgue_exponents(1e-3, 1.0, 10),
            Err(Error::GridOutsideFiniteSet { .. })
        ));
    }

    #[test]
    fn delta2_examples() {
        assert!(QuasiYoungFunction::power(2.0).is_delta2());
        assert!(!QuasiYoungFunction::exp_minus_one().is_delta2());
        assert!(QuasiYoungFunction::power_log(1.0, 1.0).is_delta2());
        assert!(!QuasiYoungFunction::indicator_jump(1.0).is_delta2());
    }

    #[test]
    fn order_estimates() {
        assert_eq!(
            QuasiYoungFunction::power(0.5).estimate_order(&[1.0, 0.75, 0.5]),
            0.5
        );
        assert_eq!(QuasiYoungFunction::power(2.0).estimate_order(&[1.0, 0.5]), 1.0);
        assert_eq!(
            QuasiYoungFunction::power_log(1.0, 1.0).estimate_order(&[1.0, 0.5]),
            1.0
        );
        // unsorted candidates still return the largest passing one
        assert_eq!(
            QuasiYoungFunction::power(0.75).estimate_order(&[0.5, 1.0, 0.75]),
            0.75
        );
    }

    #[test]
    fn order_falls_back_to_declared() {
        let phi = QuasiYoungFunction::power(0.25);
        assert_eq!(phi.estimate_order(&[1.0, 0.5]), 0.25);
    }

    #[test]
    fn exponent_window_gate() {
        assert!(QuasiYoungFunction::power(2.0).check_exponent_window(1.0, f64::INFINITY));
        assert!(!QuasiYoungFunction::power(1.0).check_exponent_window(1.0, f64::INFINITY));
        assert!(!QuasiYoungFunction::exp_minus_one().check_exponent_window(1.0, f64::INFINITY));
        assert!(!QuasiYoungFunction::power(4.0).check_exponent_window(1.0, 4.0));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(
            QuasiYoungFunction::parse("power:2").unwrap(),
            QuasiYoungFunction::power(2.0)
        );
        assert_eq!(
            QuasiYoungFunction::parse(r#"{"family":"power","p":2.0}"#).unwrap(),
            QuasiYoungFunction::power(2.0)
        );
        assert_eq!(
            QuasiYoungFunction::parse("power:1/2").unwrap(),
            QuasiYoungFunction::power(0.5)
        );
        assert!(QuasiYoungFunction::parse("power:inf").unwrap().is_sup_norm());
        assert!(QuasiYoungFunction::parse("powerlog:1,1").is_ok());
        assert!(QuasiYoungFunction::parse("expm1").is_ok());
        assert!(matches!(
            QuasiYoungFunction::parse("bogus:1"),
            Err(Error::Config(_))
        ));
        assert!(QuasiYoungFunction::parse("power").is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(QuasiYoungFunction::with_default_order(YoungFamily::Power { p: -1.0 }).is_err());
        assert!(QuasiYoungFunction::new(YoungFamily::Power { p: 0.5 }, 1.0).is_err());
        assert!(
            QuasiYoungFunction::with_default_order(YoungFamily::PowerLog { p: 0.5, a: 1.0 })
                .is_err()
        );
    }
}
