//! Mapping models: fuzzy decision classes over a criterion axis.
//!
//! An interval evaluation is mapped onto the decision frame by the ratio of
//! the membership surfaces each class covers over the interval. All
//! memberships are piecewise linear, so every integral here is exact: the
//! interval is cut at breakpoints (and at crossing points for `min`) and each
//! linear piece contributes `length × value at its midpoint`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FocalElement, Frame, Mode};
use crate::fusion::{self, FusionError};
use crate::mass::{MassError, MassFunction};
use crate::possibility::{IntervalMass, NumericInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("invalid trapezoid ({a}, {b}, {c}, {d}): {reason}")]
    Trapezoid { a: f64, b: f64, c: f64, d: f64, reason: &'static str },
    #[error("mapping model has {got} classes but the frame has {expected} atoms")]
    ClassCount { expected: usize, got: usize },
    #[error("classes must be listed once per atom in severity order; position {position} holds atom {atom}")]
    ClassOrder { position: usize, atom: usize },
    #[error("unknown atom {0}")]
    UnknownAtom(usize),
    #[error("plateaus of classes {0} and {1} overlap or are out of order")]
    PlateauOverlap(usize, usize),
    #[error("dead zone between classes {0} and {1}: no class has positive membership there")]
    DeadZone(usize, usize),
    #[error("classes {0} and {1} overlap but are not adjacent")]
    NonAdjacentOverlap(usize, usize),
    #[error("interval [{lo}, {hi}] extends beyond the model domain [{domain_lo}, {domain_hi}]")]
    OutOfDomain { lo: f64, hi: f64, domain_lo: f64, domain_hi: f64 },
    #[error("interval [{lo}, {hi}] has zero membership in every class")]
    ZeroMass { lo: f64, hi: f64 },
    #[error("intersection overlap handling requires a DSmT frame")]
    OverlapNeedsDsmt,
    #[error("interval {index}: {source}")]
    Component { index: usize, source: Box<MappingError> },
    #[error("unknown qualitative label `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

/// Membership 0 outside `[a, d]`, 1 on `[b, c]`, linear on the edges.
/// `a = b = -∞` opens the class to the left, `c = d = +∞` to the right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MappingError> {
        let bad = |reason| Err(MappingError::Trapezoid { a, b, c, d, reason });
        if [a, b, c, d].iter().any(|v| v.is_nan()) {
            return bad("NaN bound");
        }
        if !(a <= b && b <= c && c <= d) {
            return bad("bounds must satisfy a <= b <= c <= d");
        }
        if a == f64::NEG_INFINITY && b != f64::NEG_INFINITY {
            return bad("a left-open class needs b = -inf as well");
        }
        if d == f64::INFINITY && c != f64::INFINITY {
            return bad("a right-open class needs c = +inf as well");
        }
        if a == f64::INFINITY || d == f64::NEG_INFINITY {
            return bad("empty class");
        }
        Ok(Trapezoid { a, b, c, d })
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }

    fn breakpoints(&self) -> impl Iterator<Item = f64> {
        [self.a, self.b, self.c, self.d].into_iter().filter(|v| v.is_finite())
    }

    fn positive_at_left_end(&self) -> bool {
        self.a == self.b
    }

    fn positive_at_right_end(&self) -> bool {
        self.c == self.d
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Trapezoid { a: self.a + offset, b: self.b + offset, c: self.c + offset, d: self.d + offset }
    }

    /// Exact ∫ membership over `[lo, hi]`.
    pub fn area(&self, lo: f64, hi: f64) -> f64 {
        piecewise_integral(self.breakpoints(), lo, hi, |x| self.membership(x))
    }
}

/// Exact ∫ min(μ_p, μ_q) over `[lo, hi]`.
pub fn overlap_area(p: &Trapezoid, q: &Trapezoid, lo: f64, hi: f64) -> f64 {
    let cuts = cut_points(p.breakpoints().chain(q.breakpoints()), lo, hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        // p − q is linear on the open piece; locate a sign change from two
        // interior samples.
        let (s, t) = (x0 + 0.25 * (x1 - x0), x0 + 0.75 * (x1 - x0));
        let (gs, gt) = (p.membership(s) - q.membership(s), p.membership(t) - q.membership(t));
        let mut pieces = vec![x0, x1];
        if gs != gt {
            let root = s - gs * (t - s) / (gt - gs);
            if root > x0 && root < x1 {
                pieces = vec![x0, root, x1];
            }
        }
        for seg in pieces.windows(2) {
            let mid = 0.5 * (seg[0] + seg[1]);
            total += (seg[1] - seg[0]) * p.membership(mid).min(q.membership(mid));
        }
    }
    total
}

fn cut_points(points: impl Iterator<Item = f64>, lo: f64, hi: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = std::iter::once(lo)
        .chain(points.filter(|x| *x > lo && *x < hi))
        .chain(std::iter::once(hi))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

fn piecewise_integral(points: impl Iterator<Item = f64>, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    cut_points(points, lo, hi)
        .windows(2)
        .map(|w| (w[1] - w[0]) * f(0.5 * (w[0] + w[1])))
        .sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapPolicy {
    /// Overlapping surface counts for both adjacent singletons.
    #[default]
    Singletons,
    /// Shared surface `∫ min(μ_k, μ_k+1)` goes to `θ_k ∩ θ_k+1` (DSmT only).
    Intersection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingOptions {
    pub overlap: OverlapPolicy,
    /// Route the part of an interval lying outside the model domain to Θ
    /// instead of failing.
    pub slack_to_ignorance: bool,
}

impl MappingOptions {
    /// Intersections for DSmT frames, singletons otherwise.
    pub fn for_mode(mode: Mode) -> Self {
        let overlap = match mode {
            Mode::Dst => OverlapPolicy::Singletons,
            Mode::Dsmt => OverlapPolicy::Intersection,
        };
        MappingOptions { overlap, slack_to_ignorance: false }
    }
}

/// One trapezoid per frame atom, in severity order.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingModel {
    criterion: String,
    classes: Vec<(usize, Trapezoid)>,
}

impl MappingModel {
    pub fn new(criterion: &str, classes: Vec<(usize, Trapezoid)>, frame: &Frame) -> Result<Self, MappingError> {
        let n = frame.len_atoms();
        if classes.len() != n {
            return Err(MappingError::ClassCount { expected: n, got: classes.len() });
        }
        let mut by_severity: Vec<usize> = (0..n).collect();
        by_severity.sort_by_key(|&i| frame.atoms()[i].severity_rank);
        for (position, ((atom, _), expected)) in classes.iter().zip(&by_severity).enumerate() {
            if atom != expected {
                return Err(MappingError::ClassOrder { position, atom: *atom });
            }
        }
        for k in 0..n.saturating_sub(1) {
            let (p, q) = (&classes[k].1, &classes[k + 1].1);
            let crisp_edge = p.c == p.d && q.a == q.b;
            if p.c > q.b || (p.c == q.b && !crisp_edge) {
                return Err(MappingError::PlateauOverlap(k, k + 1));
            }
            let covered = q.a < p.d || (q.a == p.d && (p.positive_at_right_end() || q.positive_at_left_end()));
            if !covered {
                return Err(MappingError::DeadZone(k, k + 1));
            }
            if let Some((_, r)) = classes.get(k + 2) {
                if r.a < p.d || (r.a == p.d && p.positive_at_right_end() && r.positive_at_left_end()) {
                    return Err(MappingError::NonAdjacentOverlap(k, k + 2));
                }
            }
        }
        Ok(MappingModel { criterion: criterion.to_string(), classes })
    }

    pub fn criterion(&self) -> &str {
        &self.criterion
    }

    pub fn classes(&self) -> &[(usize, Trapezoid)] {
        &self.classes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.classes[0].1.a, self.classes[self.classes.len() - 1].1.d)
    }

    pub fn class_membership(&self, atom: usize, x: f64) -> Result<f64, MappingError> {
        self.classes
            .iter()
            .find(|(a, _)| *a == atom)
            .map(|(_, t)| t.membership(x))
            .ok_or(MappingError::UnknownAtom(atom))
    }

    pub fn shifted(&self, offset: f64) -> Self {
        MappingModel {
            criterion: self.criterion.clone(),
            classes: self.classes.iter().map(|(a, t)| (*a, t.shifted(offset))).collect(),
        }
    }

    /// Maps one interval to a bba on `frame` by surface ratios.
    pub fn map_interval(
        &self,
        interval: &NumericInterval,
        frame: &Arc<Frame>,
        options: MappingOptions,
    ) -> Result<MassFunction, MappingError> {
        if self.classes.len() != frame.len_atoms() {
            return Err(MappingError::ClassCount { expected: frame.len_atoms(), got: self.classes.len() });
        }
        let intersections = match options.overlap {
            OverlapPolicy::Singletons => false,
            OverlapPolicy::Intersection if frame.mode() == Mode::Dsmt => true,
            OverlapPolicy::Intersection => return Err(MappingError::OverlapNeedsDsmt),
        };
        let (lo, hi) = (interval.lo, interval.hi);
        let (domain_lo, domain_hi) = self.domain();
        let out_of_domain = lo < domain_lo || hi > domain_hi;
        if out_of_domain && !options.slack_to_ignorance {
            return Err(MappingError::OutOfDomain { lo, hi, domain_lo, domain_hi });
        }

        let n = self.classes.len();
        let mut raw = vec![0.0; n];
        let mut shared = vec![0.0; n.saturating_sub(1)];
        let slack;
        if interval.is_point() {
            for (k, (_, t)) in self.classes.iter().enumerate() {
                raw[k] = t.membership(lo);
            }
            if intersections {
                for k in 0..n - 1 {
                    shared[k] = raw[k].min(raw[k + 1]);
                }
            }
            slack = if out_of_domain { 1.0 } else { 0.0 };
        } else {
            let (clo, chi) = (lo.max(domain_lo), hi.min(domain_hi));
            if clo < chi {
                for (k, (_, t)) in self.classes.iter().enumerate() {
                    raw[k] = t.area(clo, chi);
                }
                if intersections {
                    for k in 0..n - 1 {
                        shared[k] = overlap_area(&self.classes[k].1, &self.classes[k + 1].1, clo, chi);
                    }
                }
            }
            slack = (hi - lo) - (chi - clo).max(0.0);
        }

        let mut masses: BTreeMap<FocalElement, f64> = BTreeMap::new();
        for k in 0..n {
            let own = raw[k] - if k > 0 { shared[k - 1] } else { 0.0 } - shared.get(k).copied().unwrap_or(0.0);
            *masses.entry(frame.singleton(self.classes[k].0)).or_insert(0.0) += own.max(0.0);
        }
        for (k, s) in shared.iter().enumerate() {
            if *s > 0.0 {
                let both = frame.meet(&frame.singleton(self.classes[k].0), &frame.singleton(self.classes[k + 1].0));
                *masses.entry(both).or_insert(0.0) += s;
            }
        }
        if slack > 0.0 {
            *masses.entry(frame.total()).or_insert(0.0) += slack;
        }
        let total: f64 = masses.values().sum();
        if total <= 0.0 {
            return Err(MappingError::ZeroMass { lo, hi });
        }
        masses.values_mut().for_each(|m| *m /= total);
        Ok(MassFunction::from_accumulated(frame, masses, 0.0))
    }

    /// Mass-weighted mixture of the mappings of each focal interval.
    pub fn map_interval_mass(
        &self,
        evaluation: &IntervalMass,
        frame: &Arc<Frame>,
        options: MappingOptions,
    ) -> Result<MassFunction, MappingError> {
        let mut acc: BTreeMap<FocalElement, f64> = BTreeMap::new();
        for (index, (interval, weight)) in evaluation.focal().iter().enumerate() {
            let mapped = self
                .map_interval(interval, frame, options)
                .map_err(|e| MappingError::Component { index, source: Box::new(e) })?;
            for (e, m) in mapped.iter() {
                *acc.entry(*e).or_insert(0.0) += weight * m;
            }
        }
        Ok(MassFunction::from_accumulated(frame, acc, 0.0))
    }
}

/// Label → bba table for a qualitative criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct QualitativeMapping {
    criterion: String,
    table: BTreeMap<String, MassFunction>,
}

impl QualitativeMapping {
    pub fn new(criterion: &str, table: BTreeMap<String, MassFunction>) -> Self {
        QualitativeMapping { criterion: criterion.to_string(), table }
    }

    pub fn criterion(&self) -> &str {
        &self.criterion
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    /// The label's bba discounted by the expert's confidence.
    pub fn map_qualitative(&self, label: &str, confidence: f64) -> Result<MassFunction, MappingError> {
        let m = self.table.get(label).ok_or_else(|| MappingError::UnknownLabel(label.to_string()))?;
        Ok(fusion::discount(m, confidence)?)
    }
}
