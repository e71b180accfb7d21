//! European payoffs `f(S_T)` that are either convex or concave on `(0, ∞)`.
//!
//! Piecewise-linear payoffs are the canonical representation. Calls and puts
//! are kept as their own variants so the pricing kernel can use closed forms
//! for them, and power payoffs `c·s^p` cover the smooth, strictly convex or
//! concave case.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    Concave,
}

impl Convexity {
    /// `+1` for convex payoffs and `-1` for concave ones.
    pub fn sign(self) -> f64 {
        match self {
            Convexity::Convex => 1.0,
            Convexity::Concave => -1.0,
        }
    }
}

/// Continuous piecewise-linear function given by its knots and the slopes
/// of the two unbounded end segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
    left_slope: f64,
    right_slope: f64,
    /// `slopes[k]` is the slope on the segment left of `knots[k]`;
    /// `slopes[knots.len()]` is the right end slope.
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() {
            return Err(invalid("piecewise-linear payoff needs at least one knot"));
        }
        if !left_slope.is_finite() || !right_slope.is_finite() {
            return Err(invalid("end slopes must be finite"));
        }
        for (s, v) in &knots {
            if !(s.is_finite() && *s > 0.0 && v.is_finite()) {
                return Err(invalid(format!("knot ({s}, {v}) must have s > 0 and finite value")));
            }
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("knot abscissae must be strictly increasing"));
        }
        let mut slopes = Vec::with_capacity(knots.len() + 1);
        slopes.push(left_slope);
        for w in knots.windows(2) {
            slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        slopes.push(right_slope);
        Ok(Self {
            knots,
            left_slope,
            right_slope,
            slopes,
        })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    /// Slopes of all segments from left to right.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn eval(&self, s: f64) -> f64 {
        // index of the first knot strictly right of s
        let k = self.knots.partition_point(|&(x, _)| x <= s);
        if k == 0 {
            let (x0, y0) = self.knots[0];
            y0 + self.left_slope * (s - x0)
        } else {
            let (x, y) = self.knots[k - 1];
            y + self.slopes[k] * (s - x)
        }
    }

    fn one_sided(&self, s: f64) -> (f64, f64) {
        match self.knots.binary_search_by(|(x, _)| x.total_cmp(&s)) {
            Ok(k) => (self.slopes[k], self.slopes[k + 1]),
            Err(k) => (self.slopes[k], self.slopes[k]),
        }
    }

    /// `Some(convexity)` when the slopes are monotone; a linear function
    /// reports convex. `None` if the function is neither.
    fn convexity(&self) -> Option<Convexity> {
        let up = self.slopes.windows(2).all(|w| w[1] >= w[0]);
        let down = self.slopes.windows(2).all(|w| w[1] <= w[0]);
        match (up, down) {
            (true, _) => Some(Convexity::Convex),
            (false, true) => Some(Convexity::Concave),
            _ => None,
        }
    }

    fn has_kink(&self) -> bool {
        self.slopes.windows(2).any(|w| w[1] != w[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffKind {
    Call { strike: f64 },
    Put { strike: f64 },
    PiecewiseLinear(PiecewiseLinear),
    /// `coefficient · s^exponent`
    Power { coefficient: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Payoff {
    kind: PayoffKind,
    convexity: Convexity,
    growth_exponent: f64,
}

impl Payoff {
    pub fn call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Self {
            kind: PayoffKind::Call { strike },
            convexity: Convexity::Convex,
            growth_exponent: 1.0,
        })
    }

    pub fn put(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Self {
            kind: PayoffKind::Put { strike },
            convexity: Convexity::Convex,
            growth_exponent: 1.0,
        })
    }

    /// Builds a piecewise-linear payoff. The convexity is read off the slopes;
    /// a payoff that is neither convex nor concave is rejected.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        let pl = PiecewiseLinear::new(knots, left_slope, right_slope)?;
        let convexity = pl
            .convexity()
            .ok_or_else(|| invalid("piecewise-linear payoff is neither convex nor concave"))?;
        Ok(Self {
            kind: PayoffKind::PiecewiseLinear(pl),
            convexity,
            growth_exponent: 1.0,
        })
    }

    /// `coefficient · s^exponent`; convex when `coefficient·p(p-1) ≥ 0`.
    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        if !coefficient.is_finite() || !exponent.is_finite() {
            return Err(invalid("power payoff parameters must be finite"));
        }
        let curvature = coefficient * exponent * (exponent - 1.0);
        let convexity = if curvature >= 0.0 {
            Convexity::Convex
        } else {
            Convexity::Concave
        };
        Ok(Self {
            kind: PayoffKind::Power {
                coefficient,
                exponent,
            },
            convexity,
            growth_exponent: exponent.abs().max((exponent - 1.0).abs()).max(1.0),
        })
    }

    /// The identity payoff `f(s) = s`, i.e. one unit of the underlying.
    pub fn underlying() -> Self {
        Self::piecewise_linear(vec![(1.0, 1.0)], 1.0, 1.0).expect("identity payoff is valid")
    }

    /// Checks a declared convexity against the payoff. Linear payoffs accept
    /// either declaration.
    pub fn with_declared_convexity(mut self, declared: Convexity) -> Result<Self> {
        if declared != self.convexity {
            if self.is_linear() {
                self.convexity = declared;
            } else {
                return Err(invalid(format!(
                    "payoff declared {declared:?} but its shape is {:?}",
                    self.convexity
                )));
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    /// Witness `p` for `|f'±(s)| ≤ C(s^p + s^-p)`.
    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        check_spot(s)?;
        Ok(self.eval_unchecked(s))
    }

    /// `f(s)` without the `s > 0` check, for hot loops that already hold a
    /// positive spot.
    pub fn eval_unchecked(&self, s: f64) -> f64 {
        match &self.kind {
            PayoffKind::Call { strike } => (s - strike).max(0.0),
            PayoffKind::Put { strike } => (strike - s).max(0.0),
            PayoffKind::PiecewiseLinear(pl) => pl.eval(s),
            PayoffKind::Power {
                coefficient,
                exponent,
            } => coefficient * s.powf(*exponent),
        }
    }

    /// Left and right derivatives `(f'₋(s), f'₊(s))`.
    pub fn one_sided_derivatives(&self, s: f64) -> Result<(f64, f64)> {
        check_spot(s)?;
        Ok(self.one_sided_unchecked(s))
    }

    pub(crate) fn one_sided_unchecked(&self, s: f64) -> (f64, f64) {
        match &self.kind {
            PayoffKind::Call { strike } => {
                if s < *strike {
                    (0.0, 0.0)
                } else if s > *strike {
                    (1.0, 1.0)
                } else {
                    (0.0, 1.0)
                }
            }
            PayoffKind::Put { strike } => {
                if s < *strike {
                    (-1.0, -1.0)
                } else if s > *strike {
                    (0.0, 0.0)
                } else {
                    (-1.0, 0.0)
                }
            }
            PayoffKind::PiecewiseLinear(pl) => pl.one_sided(s),
            PayoffKind::Power {
                coefficient,
                exponent,
            } => {
                let d = coefficient * exponent * s.powf(exponent - 1.0);
                (d, d)
            }
        }
    }

    /// Buy-and-hold pair `(a, b)` used from the variance-exhaustion time on:
    /// `a` is the midpoint of the subdifferential at `s` and `b = f(s) - a·s`,
    /// so the line `a·x + b` supports `f` at `s`.
    pub fn kink_selection(&self, s: f64) -> Result<(f64, f64)> {
        check_spot(s)?;
        Ok(self.kink_selection_unchecked(s))
    }

    pub(crate) fn kink_selection_unchecked(&self, s: f64) -> (f64, f64) {
        let (dm, dp) = self.one_sided_unchecked(s);
        let a = 0.5 * (dm + dp);
        (a, self.eval_unchecked(s) - a * s)
    }

    /// Abscissae where `f` has a kink; the quadrature splits the real line at
    /// their images.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            PayoffKind::Call { strike } | PayoffKind::Put { strike } => vec![*strike],
            PayoffKind::PiecewiseLinear(pl) => pl
                .knots
                .iter()
                .zip(pl.slopes.windows(2))
                .filter(|(_, w)| w[0] != w[1])
                .map(|((x, _), _)| *x)
                .collect(),
            PayoffKind::Power { .. } => Vec::new(),
        }
    }

    pub fn is_linear(&self) -> bool {
        match &self.kind {
            PayoffKind::Call { .. } | PayoffKind::Put { .. } => false,
            PayoffKind::PiecewiseLinear(pl) => !pl.has_kink(),
            PayoffKind::Power {
                coefficient,
                exponent,
            } => *coefficient == 0.0 || *exponent == 0.0 || *exponent == 1.0,
        }
    }

    /// Gamma of the Black-Scholes price is nonzero for every `(S, Σ)` with
    /// `Σ > 0` exactly when the payoff is not affine.
    pub fn check_nonvanishing_gamma(&self) -> Result<()> {
        if self.is_linear() {
            Err(Error::VanishingGamma(
                "affine payoff has gamma identically zero".into(),
            ))
        } else {
            Ok(())
        }
    }
}

fn check_strike(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("strike must be positive and finite, got {k}")))
    }
}

fn check_spot(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("spot must be positive and finite, got {s}")))
    }
}
