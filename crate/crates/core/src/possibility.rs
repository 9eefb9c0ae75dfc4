//! Imprecise, uncertain evaluations of quantitative criteria.
//!
//! Experts state nested intervals with a confidence each, the confidence
//! being the necessity `N(I)` that the true value lies in `I`. The stack is
//! turned into a possibility distribution whose levels are
//! `π = 1` on the innermost interval and `π = 1 − c_i` on the ring between
//! interval `i` and interval `i + 1`. The outermost interval must therefore
//! carry confidence 1 (it bounds the support).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PossibilityError {
    #[error("interval [{lo}, {hi}] is invalid (bounds must be finite with lo <= hi)")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("distribution has no entries")]
    Empty,
    #[error("level {level} at entry {index} is outside (0, 1]")]
    BadLevel { index: usize, level: f64 },
    #[error("levels must strictly decrease; entry {index} does not")]
    NotDecreasing { index: usize },
    #[error("interval at entry {index} does not contain the previous one")]
    NotNested { index: usize },
    #[error("distribution is not normalized (top level {top} < 1)")]
    Unnormalized { top: f64 },
    #[error("confidence {confidence} at entry {index} is outside (0, 1]")]
    BadConfidence { index: usize, confidence: f64 },
    #[error("two stacked intervals share confidence {0}")]
    DuplicateConfidence(f64),
    #[error("the outermost interval must have confidence 1, found {0}")]
    OpenSupport(f64),
}

/// Closed interval on a criterion axis; `lo == hi` is a point value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericInterval {
    pub lo: f64,
    pub hi: f64,
}

impl NumericInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PossibilityError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(PossibilityError::InvalidInterval { lo, hi });
        }
        Ok(NumericInterval { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        NumericInterval { lo: x, hi: x }
    }

    /// The whole real axis, for queries only.
    pub fn axis() -> Self {
        NumericInterval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, other: &NumericInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &NumericInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Whether `self` meets the complement `(-∞, a.lo) ∪ (a.hi, ∞)` of `a`.
    fn meets_complement_of(&self, a: &NumericInterval) -> bool {
        self.lo < a.lo || self.hi > a.hi
    }

    pub fn shifted(&self, offset: f64) -> Self {
        NumericInterval { lo: self.lo + offset, hi: self.hi + offset }
    }
}

/// One expert statement: "the value lies in [lo, hi] with confidence c".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
}

/// Stacked nested intervals with strictly decreasing possibility levels.
#[derive(Clone, Debug, PartialEq)]
pub struct PossibilityDistribution {
    entries: Vec<(NumericInterval, f64)>,
}

impl PossibilityDistribution {
    pub fn new(entries: Vec<(NumericInterval, f64)>) -> Result<Self, PossibilityError> {
        if entries.is_empty() {
            return Err(PossibilityError::Empty);
        }
        for (index, (interval, level)) in entries.iter().enumerate() {
            NumericInterval::new(interval.lo, interval.hi)?;
            if !(*level > 0.0 && *level <= 1.0) {
                return Err(PossibilityError::BadLevel { index, level: *level });
            }
            if index > 0 {
                let (prev_interval, prev_level) = entries[index - 1];
                if *level >= prev_level {
                    return Err(PossibilityError::NotDecreasing { index });
                }
                if !interval.contains(&prev_interval) {
                    return Err(PossibilityError::NotNested { index });
                }
            }
        }
        Ok(PossibilityDistribution { entries })
    }

    /// Builds the distribution from expert confidence statements (necessity
    /// of each stated interval). Statements are ordered by confidence.
    pub fn from_confidence_intervals(stack: &[ConfidenceInterval]) -> Result<Self, PossibilityError> {
        if stack.is_empty() {
            return Err(PossibilityError::Empty);
        }
        for (index, s) in stack.iter().enumerate() {
            if !(s.confidence > 0.0 && s.confidence <= 1.0) {
                return Err(PossibilityError::BadConfidence { index, confidence: s.confidence });
            }
        }
        let mut sorted = stack.to_vec();
        sorted.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
        if let Some(w) = sorted.windows(2).find(|w| w[0].confidence == w[1].confidence) {
            return Err(PossibilityError::DuplicateConfidence(w[0].confidence));
        }
        let outer = sorted.last().unwrap().confidence;
        if outer != 1.0 {
            return Err(PossibilityError::OpenSupport(outer));
        }
        let mut entries = Vec::with_capacity(sorted.len());
        let mut level = 1.0;
        for s in &sorted {
            entries.push((NumericInterval::new(s.lo, s.hi)?, level));
            level = 1.0 - s.confidence;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(NumericInterval, f64)] {
        &self.entries
    }

    pub fn is_normalized(&self) -> bool {
        self.entries[0].1 == 1.0
    }

    /// Π(A): the highest level among intervals meeting `a`.
    pub fn possibility_of(&self, a: &NumericInterval) -> f64 {
        self.entries.iter().filter(|(i, _)| i.intersects(a)).map(|(_, l)| *l).fold(0.0, f64::max)
    }

    /// N(A) = 1 − Π(Aᶜ).
    pub fn necessity_of(&self, a: &NumericInterval) -> f64 {
        let outside = self
            .entries
            .iter()
            .filter(|(i, _)| i.meets_complement_of(a))
            .map(|(_, l)| *l)
            .fold(0.0, f64::max);
        1.0 - outside
    }

    /// α-cut decomposition: `m(I_i) = λ_i − λ_{i+1}` with `λ_{k+1} = 0`.
    pub fn to_interval_mass(&self) -> Result<IntervalMass, PossibilityError> {
        if !self.is_normalized() {
            return Err(PossibilityError::Unnormalized { top: self.entries[0].1 });
        }
        let focal = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, (interval, level))| {
                let next = self.entries.get(i + 1).map_or(0.0, |e| e.1);
                (*interval, level - next)
            })
            .collect();
        Ok(IntervalMass { focal })
    }
}

/// Consonant mass function over nested intervals of the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMass {
    focal: Vec<(NumericInterval, f64)>,
}

impl IntervalMass {
    pub fn certain(interval: NumericInterval) -> Self {
        IntervalMass { focal: vec![(interval, 1.0)] }
    }

    pub fn focal(&self) -> &[(NumericInterval, f64)] {
        &self.focal
    }

    pub fn total(&self) -> f64 {
        self.focal.iter().map(|(_, m)| m).sum()
    }

    pub fn belief(&self, a: &NumericInterval) -> f64 {
        self.focal.iter().filter(|(i, _)| a.contains(i)).fold(0.0, |acc, (_, m)| acc + m)
    }

    pub fn plausibility(&self, a: &NumericInterval) -> f64 {
        self.focal.iter().filter(|(i, _)| i.intersects(a)).fold(0.0, |acc, (_, m)| acc + m)
    }
}
