//! Scalar nonlinearities: normalized monotone concave units and their convex
//! mirrors.
//!
//! Every unit satisfies φ(0) = 0 (sigmoid- and soft-min-style units are
//! shifted to enforce this) and is monotone non-decreasing on the nonnegative
//! reals. Units report supergradient intervals, the last linear point α_φ
//! (largest x with φ exactly linear on [0, x]), and the saturation point
//! (first x after which φ is constant), which the analysis layer uses.

use crate::error::{DsfError, Result};
use crate::Real;

/// Curvature class of a unit, derived from its kind and parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curvature {
    /// Exactly linear (compatible with both model families).
    Linear,
    /// Concave (deep submodular models).
    Concave,
    /// Convex (deep supermodular models).
    Convex,
}

/// The named unit kinds. All are normalized and monotone non-decreasing on R+.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitKind<S> {
    /// φ(x) = x.
    Identity,
    /// φ(x) = √x.
    Sqrt,
    /// φ(x) = x^p; concave for p ∈ (0,1), linear for p = 1, convex for p > 1.
    Power {
        /// The exponent p.
        exponent: S,
    },
    /// φ(x) = γ·log(1 + x/γ), γ > 0.
    LogGamma {
        /// Scale γ.
        gamma: S,
    },
    /// φ(x) = min(x, γ), γ ≥ 0.
    Truncate {
        /// Truncation level γ.
        gamma: S,
    },
    /// φ(x) = 1 − e^{−x}.
    OneMinusExp,
    /// φ(x) = 1/(1+e^{−x}) − 1/2 (logistic shifted so φ(0) = 0).
    ShiftedSigmoid,
    /// Soft minimum ((x^{−a} + c^{−a})/2)^{−1/a} with a ∈ [−1, 0) ∪ (0, ∞),
    /// c > 0, shifted so φ(0) = 0 (a no-op for a > 0).
    SoftMin {
        /// Sharpness a.
        a: S,
        /// The constant operand c.
        c: S,
    },
    /// φ(x) = min(√(x/γ), x/γ), γ > 0: linear up to γ, then square-root.
    LinThenSqrt {
        /// Crossover point γ.
        gamma: S,
    },
    /// Continuous piecewise-linear function through the origin.
    ///
    /// `breakpoints` are the strictly increasing interior kinks x₁ < x₂ < …;
    /// `slopes` has one more entry than `breakpoints` and gives the slope on
    /// each segment, starting with [0, x₁). Non-increasing slopes give a
    /// concave unit, non-decreasing a convex one; all slopes must be ≥ 0.
    PiecewiseLinear {
        /// Interior kink locations.
        breakpoints: Vec<S>,
        /// Per-segment slopes (len = breakpoints.len() + 1).
        slopes: Vec<S>,
    },
}

/// Closed supergradient (or subgradient, for convex units) interval at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupergradientInterval<S> {
    /// Smallest element (the right derivative for concave units).
    pub d_min: S,
    /// Largest element (the left derivative for concave units; may be +∞ at 0).
    pub d_max: S,
}

impl<S: Real> SupergradientInterval<S> {
    /// Midpoint, the deterministic kink selection used by learners.
    pub fn midpoint(&self) -> S {
        if self.d_max.is_infinite() {
            S::infinity()
        } else {
            (self.d_min + self.d_max) / S::of(2.0)
        }
    }
}

/// A validated scalar unit: kind plus derived curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcaveUnit<S> {
    kind: UnitKind<S>,
    curvature: Curvature,
}

impl<S: Real> ConcaveUnit<S> {
    /// Validates parameters and derives the curvature class.
    pub fn new(kind: UnitKind<S>) -> Result<Self> {
        let bad = |msg: String| Err(DsfError::InvalidArgument(msg));
        let curvature = match &kind {
            UnitKind::Identity => Curvature::Linear,
            UnitKind::Sqrt => Curvature::Concave,
            UnitKind::Power { exponent } => {
                let p = *exponent;
                if !p.is_finite() || p <= S::zero() {
                    return bad(format!("power exponent must be positive, got {p}"));
                }
                if p < S::one() {
                    Curvature::Concave
                } else if p == S::one() {
                    Curvature::Linear
                } else {
                    Curvature::Convex
                }
            }
            UnitKind::LogGamma { gamma } => {
                if !gamma.is_finite() || *gamma <= S::zero() {
                    return bad(format!("log_gamma requires gamma > 0, got {gamma}"));
                }
                Curvature::Concave
            }
            UnitKind::Truncate { gamma } => {
                if !gamma.is_finite() || *gamma < S::zero() {
                    return bad(format!("truncate requires gamma >= 0, got {gamma}"));
                }
                Curvature::Concave
            }
            UnitKind::OneMinusExp | UnitKind::ShiftedSigmoid => Curvature::Concave,
            UnitKind::SoftMin { a, c } => {
                if !a.is_finite() || *a < -S::one() || *a == S::zero() {
                    return bad(format!("soft_min requires a in [-1,0) or a > 0, got {a}"));
                }
                if !c.is_finite() || *c <= S::zero() {
                    return bad(format!("soft_min requires c > 0, got {c}"));
                }
                if *a == -S::one() {
                    Curvature::Linear
                } else {
                    Curvature::Concave
                }
            }
            UnitKind::LinThenSqrt { gamma } => {
                if !gamma.is_finite() || *gamma <= S::zero() {
                    return bad(format!("lin_then_sqrt requires gamma > 0, got {gamma}"));
                }
                Curvature::Concave
            }
            UnitKind::PiecewiseLinear { breakpoints, slopes } => {
                if slopes.len() != breakpoints.len() + 1 {
                    return bad("piecewise_linear needs one more slope than breakpoints".into());
                }
                let mut prev = S::zero();
                for &b in breakpoints {
                    if !b.is_finite() || b <= prev {
                        return bad("piecewise_linear breakpoints must be strictly increasing and positive".into());
                    }
                    prev = b;
                }
                if slopes.iter().any(|s| !s.is_finite() || *s < S::zero()) {
                    return bad("piecewise_linear slopes must be finite and >= 0".into());
                }
                let non_inc = slopes.windows(2).all(|w| w[0] >= w[1]);
                let non_dec = slopes.windows(2).all(|w| w[0] <= w[1]);
                if non_inc && non_dec {
                    Curvature::Linear
                } else if non_inc {
                    Curvature::Concave
                } else if non_dec {
                    Curvature::Convex
                } else {
                    return bad("piecewise_linear slopes must be monotone (concave or convex)".into());
                }
            }
        };
        Ok(ConcaveUnit { kind, curvature })
    }

    /// Convenience constructors for the common kinds.
    pub fn identity() -> Self {
        Self::new(UnitKind::Identity).expect("identity is always valid")
    }
    /// √x unit.
    pub fn sqrt() -> Self {
        Self::new(UnitKind::Sqrt).expect("sqrt is always valid")
    }
    /// min(x, γ) unit.
    pub fn truncate(gamma: S) -> Result<Self> {
        Self::new(UnitKind::Truncate { gamma })
    }
    /// x^p unit.
    pub fn power(exponent: S) -> Result<Self> {
        Self::new(UnitKind::Power { exponent })
    }
    /// γ·log(1 + x/γ) unit.
    pub fn log_gamma(gamma: S) -> Result<Self> {
        Self::new(UnitKind::LogGamma { gamma })
    }
    /// 1 − e^{−x} unit.
    pub fn one_minus_exp() -> Self {
        Self::new(UnitKind::OneMinusExp).expect("one_minus_exp is always valid")
    }

    /// The kind of this unit.
    pub fn kind(&self) -> &UnitKind<S> {
        &self.kind
    }

    /// Curvature class.
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    fn soft_min_raw(a: S, c: S, x: S) -> S {
        // ((x^{-a} + c^{-a})/2)^{-1/a}; for a > 0 the x = 0 limit is 0.
        if x == S::zero() && a > S::zero() {
            return S::zero();
        }
        let t = (x.powf(-a) + c.powf(-a)) / S::of(2.0);
        t.powf(-a.recip())
    }

    fn soft_min_shift(a: S, c: S) -> S {
        if a > S::zero() {
            S::zero()
        } else {
            // a in [-1, 0): raw(0) = (c^{-a}/2)^{-1/a}.
            (c.powf(-a) / S::of(2.0)).powf(-a.recip())
        }
    }

    /// Evaluates φ(x) for x ≥ 0.
    pub fn value(&self, x: S) -> Result<S> {
        if !(x >= S::zero()) {
            return Err(DsfError::InvalidArgument(format!("unit input must be >= 0, got {x}")));
        }
        Ok(self.value_unchecked(x))
    }

    /// Evaluates φ(x) without the domain check (hot loops).
    pub fn value_unchecked(&self, x: S) -> S {
        match &self.kind {
            UnitKind::Identity => x,
            UnitKind::Sqrt => x.sqrt(),
            UnitKind::Power { exponent } => x.powf(*exponent),
            UnitKind::LogGamma { gamma } => *gamma * (x / *gamma).ln_1p(),
            UnitKind::Truncate { gamma } => x.min(*gamma),
            UnitKind::OneMinusExp => -(-x).exp_m1(),
            UnitKind::ShiftedSigmoid => (S::one() + (-x).exp()).recip() - S::of(0.5),
            UnitKind::SoftMin { a, c } => Self::soft_min_raw(*a, *c, x) - Self::soft_min_shift(*a, *c),
            UnitKind::LinThenSqrt { gamma } => {
                let t = x / *gamma;
                t.sqrt().min(t)
            }
            UnitKind::PiecewiseLinear { breakpoints, slopes } => {
                let mut val = S::zero();
                let mut prev = S::zero();
                for (i, &b) in breakpoints.iter().enumerate() {
                    if x <= b {
                        return val + slopes[i] * (x - prev);
                    }
                    val = val + slopes[i] * (b - prev);
                    prev = b;
                }
                val + *slopes.last().unwrap() * (x - prev)
            }
        }
    }

    /// Supergradient interval ∂φ(x); at smooth points d_min = d_max = φ′(x),
    /// at kinks [right derivative, left derivative]. For kinds with infinite
    /// slope at 0 (√, fractional powers) both ends are +∞ at x = 0.
    pub fn supergradient(&self, x: S) -> Result<SupergradientInterval<S>> {
        if !(x >= S::zero()) {
            return Err(DsfError::InvalidArgument(format!("unit input must be >= 0, got {x}")));
        }
        let point = |d: S| SupergradientInterval { d_min: d, d_max: d };
        Ok(match &self.kind {
            UnitKind::Identity => point(S::one()),
            UnitKind::Sqrt => {
                if x == S::zero() {
                    point(S::infinity())
                } else {
                    point((S::of(2.0) * x.sqrt()).recip())
                }
            }
            UnitKind::Power { exponent } => {
                let p = *exponent;
                if x == S::zero() {
                    if p < S::one() {
                        point(S::infinity())
                    } else if p == S::one() {
                        point(S::one())
                    } else {
                        point(S::zero())
                    }
                } else {
                    point(p * x.powf(p - S::one()))
                }
            }
            UnitKind::LogGamma { gamma } => point((S::one() + x / *gamma).recip()),
            UnitKind::Truncate { gamma } => {
                if x < *gamma {
                    point(S::one())
                } else if x == *gamma {
                    SupergradientInterval { d_min: S::zero(), d_max: S::one() }
                } else {
                    point(S::zero())
                }
            }
            UnitKind::OneMinusExp => point((-x).exp()),
            UnitKind::ShiftedSigmoid => {
                let s = (S::one() + (-x).exp()).recip();
                point(s * (S::one() - s))
            }
            UnitKind::SoftMin { a, c } => {
                let a = *a;
                let c = *c;
                if x == S::zero() {
                    if a > S::zero() {
                        // limit slope 2^{1/a}
                        point(S::of(2.0).powf(a.recip()))
                    } else if a == -S::one() {
                        point(S::of(0.5))
                    } else {
                        point(S::infinity())
                    }
                } else {
                    let t = (x.powf(-a) + c.powf(-a)) / S::of(2.0);
                    point(t.powf(-a.recip() - S::one()) * x.powf(-a - S::one()) / S::of(2.0))
                }
            }
            UnitKind::LinThenSqrt { gamma } => {
                let g = *gamma;
                if x < g {
                    point(g.recip())
                } else if x == g {
                    SupergradientInterval { d_min: (S::of(2.0) * g).recip(), d_max: g.recip() }
                } else {
                    point((S::of(2.0) * (x * g).sqrt()).recip())
                }
            }
            UnitKind::PiecewiseLinear { breakpoints, slopes } => {
                for (i, &b) in breakpoints.iter().enumerate() {
                    if x < b {
                        return Ok(point(slopes[i]));
                    }
                    if x == b {
                        let lo = slopes[i].min(slopes[i + 1]);
                        let hi = slopes[i].max(slopes[i + 1]);
                        return Ok(SupergradientInterval { d_min: lo, d_max: hi });
                    }
                }
                point(*slopes.last().unwrap())
            }
        })
    }

    /// α_φ: largest x such that φ is exactly linear on [0, x] (+∞ for linear kinds).
    pub fn last_linear_point(&self) -> S {
        match &self.kind {
            UnitKind::Identity => S::infinity(),
            UnitKind::Sqrt | UnitKind::LogGamma { .. } | UnitKind::OneMinusExp | UnitKind::ShiftedSigmoid => {
                S::zero()
            }
            UnitKind::Power { exponent } => {
                if *exponent == S::one() {
                    S::infinity()
                } else {
                    S::zero()
                }
            }
            UnitKind::Truncate { gamma } => *gamma,
            UnitKind::SoftMin { a, .. } => {
                if *a == -S::one() {
                    S::infinity()
                } else {
                    S::zero()
                }
            }
            UnitKind::LinThenSqrt { gamma } => *gamma,
            UnitKind::PiecewiseLinear { breakpoints, slopes } => {
                for (i, w) in slopes.windows(2).enumerate() {
                    if w[0] != w[1] {
                        return breakpoints[i];
                    }
                }
                S::infinity()
            }
        }
    }

    /// First x after which φ is constant (+∞ when φ never saturates).
    pub fn saturation_point(&self) -> S {
        match &self.kind {
            UnitKind::Truncate { gamma } => *gamma,
            UnitKind::PiecewiseLinear { breakpoints, slopes } => {
                // Saturated from the first breakpoint after which every slope is 0.
                let mut sat = S::infinity();
                for i in (0..breakpoints.len()).rev() {
                    if slopes[i + 1] == S::zero() {
                        sat = breakpoints[i];
                    } else {
                        break;
                    }
                }
                sat
            }
            _ => S::infinity(),
        }
    }

    /// Interior kink locations (points where the supergradient interval is non-degenerate
    /// or the derivative blows up); used by the numeric gradient checker.
    pub fn kinks(&self) -> Vec<S> {
        match &self.kind {
            UnitKind::Sqrt => vec![S::zero()],
            UnitKind::Power { exponent } if *exponent < S::one() => vec![S::zero()],
            UnitKind::SoftMin { a, .. } if *a < S::zero() && *a > -S::one() => vec![S::zero()],
            UnitKind::Truncate { gamma } | UnitKind::LinThenSqrt { gamma } => vec![*gamma],
            UnitKind::PiecewiseLinear { breakpoints, .. } => breakpoints.clone(),
            _ => vec![],
        }
    }

    /// Names of learnable parameters, in the order used by `param_values`,
    /// `param_gradients`, and `set_params`. Kinds whose parameters are
    /// structural (soft_min, piecewise_linear) expose none.
    pub fn param_names(&self) -> &'static [&'static str] {
        match &self.kind {
            UnitKind::Power { .. } => &["exponent"],
            UnitKind::LogGamma { .. } => &["gamma"],
            UnitKind::Truncate { .. } => &["gamma"],
            UnitKind::LinThenSqrt { .. } => &["gamma"],
            _ => &[],
        }
    }

    /// Current learnable parameter values.
    pub fn param_values(&self) -> Vec<S> {
        match &self.kind {
            UnitKind::Power { exponent } => vec![*exponent],
            UnitKind::LogGamma { gamma } | UnitKind::Truncate { gamma } | UnitKind::LinThenSqrt { gamma } => {
                vec![*gamma]
            }
            _ => vec![],
        }
    }

    /// ∂φ/∂θ at x for each learnable parameter θ (midpoint rule at kinks).
    pub fn param_gradients(&self, x: S) -> Vec<S> {
        match &self.kind {
            UnitKind::Power { exponent } => {
                if x > S::zero() {
                    vec![x.powf(*exponent) * x.ln()]
                } else {
                    vec![S::zero()]
                }
            }
            UnitKind::LogGamma { gamma } => {
                let g = *gamma;
                vec![(x / g).ln_1p() - x / (g + x)]
            }
            UnitKind::Truncate { gamma } => {
                let g = *gamma;
                if x > g {
                    vec![S::one()]
                } else if x == g {
                    vec![S::of(0.5)]
                } else {
                    vec![S::zero()]
                }
            }
            UnitKind::LinThenSqrt { gamma } => {
                let g = *gamma;
                if x < g {
                    vec![-x / (g * g)]
                } else if x == g {
                    // midpoint of the left (-1/γ) and right (-1/(2γ)) parameter derivatives
                    vec![-S::of(0.75) / g]
                } else {
                    vec![-x.sqrt() / (S::of(2.0) * g.powf(S::of(1.5)))]
                }
            }
            _ => vec![],
        }
    }

    /// Replaces learnable parameters (projection clamps them into the valid domain first).
    pub fn set_params(&mut self, params: &[S]) -> Result<()> {
        let expected = self.param_names().len();
        if params.len() != expected {
            return Err(DsfError::InvalidArgument(format!(
                "expected {expected} unit parameters, got {}",
                params.len()
            )));
        }
        let new_kind = match &self.kind {
            UnitKind::Power { .. } => UnitKind::Power { exponent: params[0] },
            UnitKind::LogGamma { .. } => UnitKind::LogGamma { gamma: params[0] },
            UnitKind::Truncate { .. } => UnitKind::Truncate { gamma: params[0] },
            UnitKind::LinThenSqrt { .. } => UnitKind::LinThenSqrt { gamma: params[0] },
            other => other.clone(),
        };
        *self = Self::new(new_kind)?;
        Ok(())
    }

    /// Clamps a parameter vector into this kind's validity domain, preserving curvature.
    pub fn clamp_params(&self, params: &mut [S]) {
        let eps = S::of(1e-9);
        match &self.kind {
            UnitKind::Power { exponent } => {
                // keep the curvature class fixed during training
                if *exponent < S::one() {
                    params[0] = params[0].max(eps).min(S::one() - eps);
                } else if *exponent > S::one() {
                    params[0] = params[0].max(S::one() + eps);
                }
            }
            UnitKind::LogGamma { .. } | UnitKind::LinThenSqrt { .. } => {
                params[0] = params[0].max(eps);
            }
            UnitKind::Truncate { .. } => {
                params[0] = params[0].max(S::zero());
            }
            _ => {}
        }
    }
}

/// Sampled sanity check of the unit invariants: normalization, monotonicity,
/// slope monotonicity matching the curvature class, and metadata consistency.
/// Samples 1000 points on [0, 10·max(1, saturation point)].
pub fn check_unit<S: Real>(u: &ConcaveUnit<S>) -> Result<()> {
    let fail = |msg: String| Err(DsfError::InvalidArgument(msg));
    let v0 = u.value(S::zero())?;
    if v0.abs() > S::of(1e-9) {
        return fail(format!("unit not normalized: phi(0) = {v0}"));
    }
    let sat = u.saturation_point();
    let hi = S::of(10.0) * if sat.is_finite() { sat.max(S::one()) } else { S::one() };
    let n = 1000usize;
    let mut prev_x = S::zero();
    let mut prev_v = v0;
    let mut prev_slope: Option<S> = None;
    let tol = S::of(1e-9);
    for i in 1..=n {
        let x = hi * S::from_usize(i).unwrap() / S::from_usize(n).unwrap();
        let v = u.value(x)?;
        if v < prev_v - tol {
            return fail(format!("unit not monotone: phi({prev_x}) = {prev_v} > phi({x}) = {v}"));
        }
        let slope = (v - prev_v) / (x - prev_x);
        if let Some(ps) = prev_slope {
            match u.curvature() {
                Curvature::Concave | Curvature::Linear => {
                    if slope > ps + S::of(1e-7) {
                        return fail(format!("sampled slopes increase at {x} for a concave unit"));
                    }
                }
                Curvature::Convex => {
                    if slope < ps - S::of(1e-7) {
                        return fail(format!("sampled slopes decrease at {x} for a convex unit"));
                    }
                }
            }
        }
        prev_slope = Some(slope);
        prev_x = x;
        prev_v = v;
    }
    // metadata: α_φ must sit at or before the saturation point
    let llp = u.last_linear_point();
    if llp.is_finite() && sat.is_finite() && llp > sat {
        return fail("last linear point beyond saturation point".into());
    }
    Ok(())
}
