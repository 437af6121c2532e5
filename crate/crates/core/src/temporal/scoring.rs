//! Symbolic temporal relevance: constraint classes and their scoring curves.
//!
//! Each constraint is reduced to one of six classes (first/last ×
//! before/after/between) anchored at fractional years. A class defines a
//! curve over document dates:
//!
//! * proximity side: `1 / (1 + (d/h)^2)`, peaking at the anchor;
//! * plateau side: constant 1;
//! * violation side: `max(eps_v, exp(-d/sigma_v))`, clamped to `eps_v` once
//!   `d >= 5 * sigma_v`;
//! * between: linear from 1 at the favored edge to `tau` at the far edge,
//!   violation decay outside, never above the nearest edge value.
//!
//! A sentence with several dates takes the best of its per-date scores; a
//! sentence without dates scores `delta`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::{TemporalConstraint, TemporalError, TemporalRelation, TimePoint};

/// Half-width, in years, of the window used for `in` / `on`.
pub const IN_ON_HALF_WIDTH: f64 = 0.5;
/// Half-width, in years, of the window used for `around`.
pub const AROUND_HALF_WIDTH: f64 = 1.0;
/// Violation-side cutoff in units of `sigma_v`.
pub const VIOLATION_CUTOFF: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplineParams {
    /// Proximity decay scale (years).
    pub h: f64,
    /// Violation grace scale (years).
    pub sigma_v: f64,
    /// Violation floor.
    pub eps_v: f64,
    /// Score for sentences with no date.
    pub delta: f64,
    /// Between-window value at the far edge.
    pub tau: f64,
}

impl Default for SplineParams {
    fn default() -> Self {
        Self { h: 30.0, sigma_v: 1.0, eps_v: 0.01, delta: 0.3, tau: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid spline parameters: {0}")]
pub struct InvalidSplineParams(pub String);

impl SplineParams {
    pub fn validate(&self) -> Result<(), InvalidSplineParams> {
        let fail = |m: String| Err(InvalidSplineParams(m));
        if !(self.h.is_finite() && self.h > 0.0) {
            return fail(format!("h must be > 0, got {}", self.h));
        }
        if !(self.sigma_v.is_finite() && self.sigma_v > 0.0) {
            return fail(format!("sigma_v must be > 0, got {}", self.sigma_v));
        }
        if !(0.0..1.0).contains(&self.eps_v) {
            return fail(format!("eps_v must be in [0,1), got {}", self.eps_v));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return fail(format!("delta must be in [0,1), got {}", self.delta));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must be in (0,1], got {}", self.tau));
        }
        if self.eps_v >= self.tau {
            return fail(format!("eps_v ({}) must be below tau ({})", self.eps_v, self.tau));
        }
        Ok(())
    }

    fn proximity(&self, d: f64) -> f64 {
        let x = d / self.h;
        1.0 / (1.0 + x * x)
    }

    fn violation(&self, d: f64) -> f64 {
        if d >= VIOLATION_CUTOFF * self.sigma_v {
            self.eps_v
        } else {
            self.eps_v.max((-d / self.sigma_v).exp())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    FirstBefore,
    FirstAfter,
    FirstBetween,
    LastBefore,
    LastAfter,
    LastBetween,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 6] =
        [Self::FirstBefore, Self::FirstAfter, Self::FirstBetween, Self::LastBefore, Self::LastAfter, Self::LastBetween];

    pub fn is_between(self) -> bool {
        matches!(self, Self::FirstBetween | Self::LastBetween)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FirstBefore => "first-before",
            Self::FirstAfter => "first-after",
            Self::FirstBetween => "first-between",
            Self::LastBefore => "last-before",
            Self::LastAfter => "last-after",
            Self::LastBetween => "last-between",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintKind {
    type Err = TemporalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace(['_', ' '], "-");
        Self::ALL.into_iter().find(|k| k.as_str() == norm).ok_or_else(|| TemporalError::Unknown(s.to_string()))
    }
}

/// A scoring template instantiated with anchor(s) in fractional years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintClass {
    pub kind: ConstraintKind,
    pub a1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
}

impl ConstraintClass {
    pub fn point(kind: ConstraintKind, anchor: f64) -> Result<Self, TemporalError> {
        if kind.is_between() {
            return Err(TemporalError::MissingEndpoint(TemporalRelation::Between));
        }
        Ok(Self { kind, a1: anchor, a2: None })
    }

    pub fn window(kind: ConstraintKind, start: f64, end: f64) -> Result<Self, TemporalError> {
        if !kind.is_between() {
            return Err(TemporalError::UnexpectedEndpoint(TemporalRelation::Between));
        }
        if end < start {
            return Err(TemporalError::ReversedRange);
        }
        Ok(Self { kind, a1: start, a2: Some(end) })
    }

    /// Score of a single document date (fractional year).
    pub fn score_at(&self, params: &SplineParams, t: f64) -> f64 {
        let a = self.a1;
        let s = match self.kind {
            ConstraintKind::LastBefore if t <= a => params.proximity(a - t),
            ConstraintKind::LastBefore => params.violation(t - a),
            ConstraintKind::FirstAfter if t >= a => params.proximity(t - a),
            ConstraintKind::FirstAfter => params.violation(a - t),
            ConstraintKind::FirstBefore if t <= a => 1.0,
            ConstraintKind::FirstBefore => params.violation(t - a),
            ConstraintKind::LastAfter if t >= a => 1.0,
            ConstraintKind::LastAfter => params.violation(a - t),
            ConstraintKind::FirstBetween | ConstraintKind::LastBetween => {
                let b = self.a2.unwrap_or(a);
                let favor_end = self.kind == ConstraintKind::LastBetween;
                let edge = |at_end: bool| if at_end == favor_end { 1.0 } else { params.tau };
                if t < a {
                    edge(false).min(params.violation(a - t))
                } else if t > b {
                    edge(true).min(params.violation(t - b))
                } else if b > a {
                    let frac = (t - a) / (b - a);
                    let toward_favored = if favor_end { frac } else { 1.0 - frac };
                    params.tau + (1.0 - params.tau) * toward_favored
                } else {
                    1.0
                }
            }
        };
        s.clamp(0.0, 1.0)
    }
}

/// Maps a parsed constraint onto its scoring class.
///
/// | condition          | relation                         | class           |
/// |--------------------|----------------------------------|-----------------|
/// | none / last/latest | as of, before, until, by         | last-before     |
/// | none / last/latest | after, since                     | last-after      |
/// | none / last/latest | between, from-to, in, on, around | last-between    |
/// | first / earliest   | as of, before, until, by         | first-before    |
/// | first / earliest   | after, since                     | first-after     |
/// | first / earliest   | between, from-to, in, on, around | first-between   |
///
/// `in`/`on` use a window of ±0.5 year around the date, `around` ±1 year.
pub fn classify_constraint(c: &TemporalConstraint) -> ConstraintClass {
    use TemporalRelation as R;
    let first = c.condition.seeks_first();
    let a1 = c.t1.to_fractional_year();
    let pick = |if_first, if_last| if first { if_first } else { if_last };
    let between = pick(ConstraintKind::FirstBetween, ConstraintKind::LastBetween);
    match c.relation {
        R::AsOf | R::Before | R::Until | R::By => {
            ConstraintClass { kind: pick(ConstraintKind::FirstBefore, ConstraintKind::LastBefore), a1, a2: None }
        }
        R::After | R::Since => {
            ConstraintClass { kind: pick(ConstraintKind::FirstAfter, ConstraintKind::LastAfter), a1, a2: None }
        }
        R::Between | R::FromTo => {
            let a2 = c.t2.map_or(a1, |t| t.to_fractional_year());
            ConstraintClass { kind: between, a1, a2: Some(a2) }
        }
        R::In | R::On | R::Around => {
            let w = if c.relation == R::Around { AROUND_HALF_WIDTH } else { IN_ON_HALF_WIDTH };
            ConstraintClass { kind: between, a1: a1 - w, a2: Some(a1 + w) }
        }
    }
}

/// Temporal relevance of a sentence whose extracted dates are `points`.
pub fn temporal_score(class: &ConstraintClass, params: &SplineParams, points: &[TimePoint]) -> f64 {
    points
        .iter()
        .map(|p| class.score_at(params, p.to_fractional_year()))
        .fold(None, |best: Option<f64>, s| Some(best.map_or(s, |b| b.max(s))))
        .unwrap_or(params.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::types::ImplicitCondition;

    fn y(year: i32) -> TimePoint {
        TimePoint::year(year).unwrap()
    }

    fn constraint(cond: ImplicitCondition, rel: TemporalRelation, t1: i32, t2: Option<i32>) -> TemporalConstraint {
        TemporalConstraint::new(cond, rel, y(t1), t2.map(y), "").unwrap()
    }

    #[test]
    fn last_as_of_maps_to_last_before() {
        let c = classify_constraint(&constraint(ImplicitCondition::Last, TemporalRelation::AsOf, 1981, None));
        assert_eq!(c.kind, ConstraintKind::LastBefore);
        assert_eq!(c.a1, 1981.5);
    }

    #[test]
    fn mapping_table() {
        use ConstraintKind as K;
        use ImplicitCondition as C;
        use TemporalRelation as R;
        let c = classify_constraint(&constraint(C::None, R::Between, 2012, Some(2018)));
        assert_eq!((c.kind, c.a1, c.a2), (K::LastBetween, 2012.5, Some(2018.5)));
        let c = classify_constraint(&constraint(C::First, R::After, 1700, None));
        assert_eq!((c.kind, c.a1), (K::FirstAfter, 1700.5));
        let rows = [
            (C::None, R::By, K::LastBefore),
            (C::Latest, R::Until, K::LastBefore),
            (C::None, R::Since, K::LastAfter),
            (C::Earliest, R::Before, K::FirstBefore),
            (C::First, R::AsOf, K::FirstBefore),
            (C::Earliest, R::Since, K::FirstAfter),
            (C::None, R::In, K::LastBetween),
            (C::First, R::On, K::FirstBetween),
            (C::Last, R::Around, K::LastBetween),
        ];
        for (cond, rel, kind) in rows {
            assert_eq!(classify_constraint(&constraint(cond, rel, 2000, None)).kind, kind, "{cond:?} {rel:?}");
        }
        let around = classify_constraint(&constraint(C::None, R::Around, 2000, None));
        assert_eq!((around.a1, around.a2), (1999.5, Some(2001.5)));
        let inside = classify_constraint(&constraint(C::None, R::In, 2000, None));
        assert_eq!((inside.a1, inside.a2), (2000.0, Some(2001.0)));
    }

    #[test]
    fn calibration_point() {
        let class = ConstraintClass::point(ConstraintKind::LastBefore, 1981.5).unwrap();
        let s = temporal_score(&class, &SplineParams::default(), &[y(1970)]);
        let expected = 1.0 / (1.0 + ((1981.5f64 - 1970.5) / 30.0).powi(2));
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.882).abs() < 1e-3);
    }

    #[test]
    fn anchor_and_plateau() {
        let p = SplineParams::default();
        let lb = ConstraintClass::point(ConstraintKind::LastBefore, 1981.5).unwrap();
        assert_eq!(lb.score_at(&p, 1981.5), 1.0);
        let la = ConstraintClass::point(ConstraintKind::LastAfter, 1960.5).unwrap();
        assert_eq!(temporal_score(&la, &p, &[y(1970)]), 1.0);
        assert_eq!(la.score_at(&p, 1960.5), 1.0);
    }

    #[test]
    fn dateless_gets_delta() {
        let lb = ConstraintClass::point(ConstraintKind::LastBefore, 2000.5).unwrap();
        assert_eq!(temporal_score(&lb, &SplineParams::default(), &[]), 0.3);
    }

    #[test]
    fn violation_floor_and_grace() {
        let p = SplineParams::default();
        let lb = ConstraintClass::point(ConstraintKind::LastBefore, 2000.0).unwrap();
        assert!((lb.score_at(&p, 2000.5) - (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(lb.score_at(&p, 2010.0), p.eps_v);
    }

    #[test]
    fn between_shape() {
        let p = SplineParams::default();
        let lb = ConstraintClass::window(ConstraintKind::LastBetween, 2000.0, 2010.0).unwrap();
        assert_eq!(lb.score_at(&p, 2010.0), 1.0);
        assert!((lb.score_at(&p, 2000.0) - p.tau).abs() < 1e-12);
        assert!((lb.score_at(&p, 2005.0) - (p.tau + (1.0 - p.tau) * 0.5)).abs() < 1e-12);
        assert!(lb.score_at(&p, 1999.5) <= p.tau);
        assert!(lb.score_at(&p, 2010.5) < 1.0);
        let fb = ConstraintClass::window(ConstraintKind::FirstBetween, 2000.0, 2010.0).unwrap();
        assert_eq!(fb.score_at(&p, 2000.0), 1.0);
        assert!((fb.score_at(&p, 2010.0) - p.tau).abs() < 1e-12);
        let pt = ConstraintClass::window(ConstraintKind::LastBetween, 2000.0, 2000.0).unwrap();
        assert_eq!(pt.score_at(&p, 2000.0), 1.0);
        assert!(pt.score_at(&p, 2001.0) < 1.0);
    }

    #[test]
    fn params_validation() {
        assert!(SplineParams::default().validate().is_ok());
        for bad in [
            SplineParams { h: 0.0, ..Default::default() },
            SplineParams { sigma_v: -1.0, ..Default::default() },
            SplineParams { eps_v: 1.0, ..Default::default() },
            SplineParams { delta: 1.0, ..Default::default() },
            SplineParams { tau: 0.0, ..Default::default() },
            SplineParams { eps_v: 0.5, tau: 0.4, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ConstraintKind::ALL {
            assert_eq!(k.as_str().parse::<ConstraintKind>().unwrap(), k);
        }
        assert_eq!("Last_Before".parse::<ConstraintKind>().unwrap(), ConstraintKind::LastBefore);
    }
}
