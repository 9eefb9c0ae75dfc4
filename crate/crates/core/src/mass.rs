//! Basic belief assignments over a decision frame.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FocalElement, Frame, FrameError};

/// Masses below this are dropped after combination.
pub const PRUNE_EPSILON: f64 = 1e-12;
pub const TOTAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("mass {mass} on `{element}` is not a finite value in [0, 1]")]
    InvalidMass { element: String, mass: f64 },
    #[error("masses sum to {total}, expected 1")]
    NotNormalized { total: f64 },
    #[error("mass functions are defined on different frames")]
    MixedFrames,
}

/// Sparse bba: only positive masses are stored; `conflict` holds m(∅) for
/// unnormalized (conjunctive) results.
#[derive(Clone, Debug)]
pub struct MassFunction {
    frame: Arc<Frame>,
    masses: BTreeMap<FocalElement, f64>,
    conflict: f64,
}

impl PartialEq for MassFunction {
    fn eq(&self, other: &Self) -> bool {
        self.same_frame(other) && self.masses == other.masses && self.conflict == other.conflict
    }
}

impl MassFunction {
    pub fn vacuous(frame: &Arc<Frame>) -> Self {
        Self::categorical(frame, frame.total())
    }

    pub fn categorical(frame: &Arc<Frame>, e: FocalElement) -> Self {
        assert!(frame.contains(&e) && !e.is_empty(), "categorical element must be a non-empty frame element");
        MassFunction { frame: frame.clone(), masses: BTreeMap::from([(e, 1.0)]), conflict: 0.0 }
    }

    /// Validated construction; repeated elements accumulate and mass on the
    /// empty element becomes conflict.
    pub fn new(frame: &Arc<Frame>, entries: impl IntoIterator<Item = (FocalElement, f64)>) -> Result<Self, MassError> {
        let mut masses = BTreeMap::new();
        let mut conflict = 0.0;
        for (e, m) in entries {
            if !frame.contains(&e) {
                return Err(FrameError::ForeignElement.into());
            }
            if !(m.is_finite() && (0.0..=1.0).contains(&m)) {
                return Err(MassError::InvalidMass { element: frame.label(&e), mass: m });
            }
            if m == 0.0 {
                continue;
            }
            if e.is_empty() {
                conflict += m;
            } else {
                *masses.entry(e).or_insert(0.0) += m;
            }
        }
        let total = conflict + masses.values().sum::<f64>();
        if (total - 1.0).abs() > TOTAL_TOLERANCE {
            return Err(MassError::NotNormalized { total });
        }
        Ok(MassFunction { frame: frame.clone(), masses, conflict })
    }

    /// Builds from label expressions such as `("HD2+HD3", 0.4)`.
    pub fn from_labels<S: AsRef<str>>(frame: &Arc<Frame>, entries: &[(S, f64)]) -> Result<Self, MassError> {
        let parsed = entries
            .iter()
            .map(|(l, m)| frame.parse(l.as_ref()).map(|e| (e, *m)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(frame, parsed)
    }

    /// Prunes tiny masses and rescales so the total (incl. conflict) is 1.
    pub(crate) fn from_accumulated(frame: &Arc<Frame>, raw: BTreeMap<FocalElement, f64>, conflict: f64) -> Self {
        let masses: BTreeMap<FocalElement, f64> = raw.into_iter().filter(|(_, m)| *m >= PRUNE_EPSILON).collect();
        let conflict = if conflict >= PRUNE_EPSILON { conflict } else { 0.0 };
        let total = conflict + masses.values().sum::<f64>();
        if total == 1.0 || total == 0.0 {
            return MassFunction { frame: frame.clone(), masses, conflict };
        }
        MassFunction {
            frame: frame.clone(),
            masses: masses.into_iter().map(|(e, m)| (e, m / total)).collect(),
            conflict: conflict / total,
        }
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn same_frame(&self, other: &MassFunction) -> bool {
        Arc::ptr_eq(&self.frame, &other.frame) || *self.frame == *other.frame
    }

    pub fn mass(&self, e: &FocalElement) -> f64 {
        if e.is_empty() {
            return self.conflict;
        }
        self.masses.get(e).copied().unwrap_or(0.0)
    }

    pub fn conflict(&self) -> f64 {
        self.conflict
    }

    pub fn is_normalized(&self) -> bool {
        self.conflict == 0.0
    }

    pub fn is_vacuous(&self) -> bool {
        self.conflict == 0.0 && self.masses.len() == 1 && self.masses.contains_key(&self.frame.total())
    }

    pub fn total(&self) -> f64 {
        self.conflict + self.masses.values().sum::<f64>()
    }

    /// Focal elements (positive mass, excluding ∅) in canonical frame order.
    pub fn focal(&self) -> Vec<(FocalElement, f64)> {
        let mut out: Vec<(FocalElement, f64)> = self.masses.iter().map(|(e, m)| (*e, *m)).collect();
        out.sort_by_key(|(e, _)| self.frame.index_of(e));
        out
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (&FocalElement, &f64)> {
        self.masses.iter()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Largest absolute per-element difference (including ∅).
    pub fn max_abs_diff(&self, other: &MassFunction) -> f64 {
        let mut d = (self.conflict - other.conflict).abs();
        for e in self.masses.keys().chain(other.masses.keys()) {
            d = d.max((self.mass(e) - other.mass(e)).abs());
        }
        d
    }

    pub fn to_doc(&self) -> BbaDoc {
        BbaDoc {
            masses: self
                .focal()
                .into_iter()
                .map(|(e, mass)| ElementMass { element: self.frame.label(&e), mass })
                .collect(),
            conflict: (self.conflict > 0.0).then_some(self.conflict),
        }
    }

    pub fn from_doc(frame: &Arc<Frame>, doc: &BbaDoc) -> Result<Self, MassError> {
        let mut entries = doc
            .masses
            .iter()
            .map(|em| frame.parse(&em.element).map(|e| (e, em.mass)))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(k) = doc.conflict {
            entries.push((FocalElement::EMPTY, k));
        }
        Self::new(frame, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementMass {
    pub element: String,
    pub mass: f64,
}

/// Serialized bba: focal elements in frame order, plus m(∅) when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbaDoc {
    pub masses: Vec<ElementMass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conflict: Option<f64>,
}
