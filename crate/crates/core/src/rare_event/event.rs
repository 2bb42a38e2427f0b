//! Rare events over the scaled process and its jump vector, with the
//! analytic rate bounds the extended LDP predicts for them.

use serde::{Deserialize, Serialize};

use crate::cadlag::{rate_phi, RateValue};
use crate::error::{invalid, Result};
use crate::jump_sim::{JumpVector, LevySample};

/// A closed interval `[lo, hi]`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Interval {
    pub fn at_least(lo: f64) -> Self {
        Self { lo, hi: None }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi: Some(hi) }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && self.hi.is_none_or(|h| x <= h)
    }

    pub fn upper(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Always,
    Never,
    /// `X_n(1) > x`.
    TerminalAbove { x: f64 },
    /// `sup X_n >= level` with every jump at most `max_jump`.
    BoundaryCrossing { level: f64, max_jump: f64 },
    /// The k-th largest jump (1-based) is at least `x`.
    KthJumpAtLeast { k: usize, x: f64 },
    /// The i-th largest jump lies in `intervals[i]`.
    JumpRectangle { intervals: Vec<Interval> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: EventKind,
    /// `inf` of the rate over the interior.
    #[serde(default)]
    pub analytic_inner_rate: Option<RateValue>,
    /// `lim inf` of the rate over the closed fattenings.
    #[serde(default)]
    pub analytic_outer_rate: Option<RateValue>,
}

impl EventSpec {
    pub fn new(name: impl Into<String>, kind: EventKind) -> Result<Self> {
        let (inner, outer) = analytic_rates(&kind)?;
        Self::with_rates(name, kind, inner, outer)
    }

    pub fn with_rates(
        name: impl Into<String>,
        kind: EventKind,
        inner: Option<RateValue>,
        outer: Option<RateValue>,
    ) -> Result<Self> {
        let spec = Self { name: name.into(), kind, analytic_inner_rate: inner, analytic_outer_rate: outer };
        spec.validate()?;
        Ok(spec)
    }

    /// Fills whichever analytic rate is absent, e.g. after deserialising a
    /// hand-written event; rates already present are kept.
    pub fn complete(self) -> Result<Self> {
        if self.analytic_inner_rate.is_some() && self.analytic_outer_rate.is_some() {
            self.validate()?;
            return Ok(self);
        }
        let (inner, outer) = analytic_rates(&self.kind)?;
        Self::with_rates(
            self.name,
            self.kind,
            self.analytic_inner_rate.or(inner),
            self.analytic_outer_rate.or(outer),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EventKind::TerminalAbove { x } if !x.is_finite() => return Err(invalid("x", "must be finite")),
            EventKind::BoundaryCrossing { level, max_jump } => {
                if !level.is_finite() || !(*max_jump > 0.0) || !max_jump.is_finite() {
                    return Err(invalid("max_jump", "need a finite level and a positive finite jump cap"));
                }
            }
            EventKind::KthJumpAtLeast { k, x } => {
                if *k == 0 || !x.is_finite() {
                    return Err(invalid("k", "k must be at least 1 and x finite"));
                }
            }
            EventKind::JumpRectangle { intervals } => {
                if intervals.is_empty() {
                    return Err(invalid("intervals", "need at least one coordinate"));
                }
                if intervals.iter().any(|i| !i.lo.is_finite() || i.hi.is_some_and(|h| !(h >= i.lo))) {
                    return Err(invalid("intervals", "each interval needs finite lo <= hi"));
                }
            }
            _ => {}
        }
        if let (Some(i), Some(o)) = (self.analytic_inner_rate, self.analytic_outer_rate) {
            if i < o {
                return Err(invalid("analytic_inner_rate", "must be at least the outer rate"));
            }
        }
        Ok(())
    }

    /// Number of ranked arrivals the sampler must provide.
    pub fn required_k(&self) -> usize {
        match &self.kind {
            EventKind::KthJumpAtLeast { k, .. } => *k,
            EventKind::JumpRectangle { intervals } => intervals.len(),
            _ => 0,
        }
    }

    pub fn holds(&self, s: &LevySample) -> bool {
        match &self.kind {
            EventKind::Always => true,
            EventKind::Never => false,
            EventKind::TerminalAbove { x } => s.terminal() > *x,
            EventKind::BoundaryCrossing { level, max_jump } => {
                let (sup, jump) = s.phi();
                sup >= *level && jump <= *max_jump
            }
            EventKind::KthJumpAtLeast { k, x } => s.draw.size(k - 1) >= *x,
            EventKind::JumpRectangle { intervals } => {
                intervals.iter().enumerate().all(|(i, iv)| iv.contains(s.draw.size(i)))
            }
        }
    }

    /// Evaluates jump-vector events; `None` for path events.
    pub fn holds_for_jumps(&self, j: &JumpVector) -> Option<bool> {
        let size = |i: usize| j.sizes.get(i).copied();
        match &self.kind {
            EventKind::Always => Some(true),
            EventKind::Never => Some(false),
            EventKind::KthJumpAtLeast { k, x } => size(k - 1).map(|s| s >= *x),
            EventKind::JumpRectangle { intervals } => {
                if j.k < intervals.len() {
                    return None;
                }
                Some(intervals.iter().enumerate().all(|(i, iv)| iv.contains(j.sizes[i])))
            }
            _ => None,
        }
    }

    /// Per-coordinate intervals when the event only constrains the ranked
    /// jump sizes.
    pub fn rectangle(&self) -> Option<Vec<Interval>> {
        match &self.kind {
            EventKind::KthJumpAtLeast { k, x } => {
                let mut r = vec![Interval::at_least(f64::NEG_INFINITY); *k];
                r[k - 1] = Interval::at_least(*x);
                Some(r)
            }
            EventKind::JumpRectangle { intervals } => Some(intervals.clone()),
            _ => None,
        }
    }

    /// Size threshold used when conditioning on the j-th arrival.
    pub fn conditioning_threshold(&self, j: usize) -> Option<f64> {
        match &self.kind {
            EventKind::BoundaryCrossing { max_jump, .. } => Some(max_jump * (1.0 - CONDITIONING_MARGIN)),
            EventKind::KthJumpAtLeast { k, x } if j <= *k && *x > 0.0 => Some(*x),
            EventKind::JumpRectangle { intervals } => {
                let lo = intervals.get(j.checked_sub(1)?)?.lo;
                (lo > 0.0).then_some(lo)
            }
            _ => None,
        }
    }
}

/// Relative margin below the jump cap for boundary-crossing conditioning.
pub const CONDITIONING_MARGIN: f64 = 0.1;

fn analytic_rates(kind: &EventKind) -> Result<(Option<RateValue>, Option<RateValue>)> {
    Ok(match kind {
        EventKind::Always => (Some(RateValue::Finite(0)), Some(RateValue::Finite(0))),
        EventKind::Never => (Some(RateValue::Infinite), Some(RateValue::Infinite)),
        EventKind::TerminalAbove { x } if *x >= 0.0 => (Some(RateValue::Finite(1)), Some(RateValue::Finite(1))),
        EventKind::TerminalAbove { .. } => (Some(RateValue::Finite(0)), Some(RateValue::Finite(0))),
        EventKind::BoundaryCrossing { level, max_jump } => {
            if *level <= 0.0 {
                (Some(RateValue::Finite(0)), Some(RateValue::Finite(0)))
            } else {
                let ratio = level / max_jump;
                let outer = rate_phi(*level, *max_jump)?;
                // On the interior the level is exceeded strictly and the cap
                // is strict, which costs one more jump when b/c is an integer.
                let inner = if ratio.fract() == 0.0 { RateValue::Finite(ratio as u64 + 1) } else { outer };
                (Some(inner), Some(outer))
            }
        }
        EventKind::KthJumpAtLeast { k, x } => {
            let r = if *x > 0.0 { RateValue::Finite(*k as u64) } else { RateValue::Finite(0) };
            (Some(r), Some(r))
        }
        EventKind::JumpRectangle { intervals } => {
            let count = intervals.iter().filter(|i| i.lo > 0.0).count() as u64;
            let empty = intervals.iter().any(|i| i.upper() < 0.0);
            if empty {
                (Some(RateValue::Infinite), Some(RateValue::Infinite))
            } else {
                (Some(RateValue::Finite(count)), Some(RateValue::Finite(count)))
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_rates() {
        let e = EventSpec::new("bc", EventKind::BoundaryCrossing { level: 1.5, max_jump: 1.0 }).unwrap();
        assert_eq!(e.analytic_inner_rate, Some(RateValue::Finite(2)));
        assert_eq!(e.analytic_outer_rate, Some(RateValue::Finite(2)));
        let e = EventSpec::new("bc", EventKind::BoundaryCrossing { level: 2.0, max_jump: 1.0 }).unwrap();
        assert_eq!(e.analytic_inner_rate, Some(RateValue::Finite(3)));
        assert_eq!(e.analytic_outer_rate, Some(RateValue::Finite(2)));
        assert!((e.conditioning_threshold(2).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn inner_below_outer_rejected() {
        let r = EventSpec::with_rates("x", EventKind::Always, Some(RateValue::Finite(1)), Some(RateValue::Finite(2)));
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let e = EventSpec::new(
            "rect",
            EventKind::JumpRectangle { intervals: vec![Interval::at_least(0.5), Interval::new(0.1, 0.4)] },
        )
        .unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"kind\":\"jump_rectangle\""));
        let back: EventSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        let bare: EventSpec =
            serde_json::from_str(r#"{"name":"rect","kind":"jump_rectangle","intervals":[{"lo":0.5},{"lo":0.1,"hi":0.4}]}"#)
                .unwrap();
        assert_eq!(bare.analytic_inner_rate, None);
        assert_eq!(bare.complete().unwrap(), e);
    }

    #[test]
    fn rectangle_of_kth_jump() {
        let e = EventSpec::new("k2", EventKind::KthJumpAtLeast { k: 2, x: 0.3 }).unwrap();
        let r = e.rectangle().unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0].contains(-1.0));
        assert!(!r[1].contains(0.29));
    }
}
