//! Credibility, plausibility and pignistic measures, and the decision
//! extracted from a final bba under a declared strategy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FocalElement, Frame, FrameError};
use crate::mass::MassFunction;

/// Values closer than this are an exact tie.
pub const TIE_EPSILON: f64 = 1e-12;
/// Top-two gap below which a decision is flagged as fragile.
pub const NEAR_TIE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("bba carries conflict mass {0}; normalize before computing pignistic probabilities")]
    Unnormalized(f64),
    #[error("{strategy} is tied between {candidates:?}")]
    Tie { strategy: Strategy, candidates: Vec<String> },
    #[error("unknown strategy `{0}` (expected max-bba, max-bel, max-pl or max-betp)")]
    UnknownStrategy(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    MaxBba,
    MaxBel,
    MaxPl,
    #[default]
    MaxBetp,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::MaxBba, Strategy::MaxBel, Strategy::MaxPl, Strategy::MaxBetp];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::MaxBba => "max-bba",
            Strategy::MaxBel => "max-bel",
            Strategy::MaxPl => "max-pl",
            Strategy::MaxBetp => "max-betp",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = DecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| DecisionError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Prefer the more severe class.
    #[default]
    HigherSeverity,
    LowerSeverity,
    Error,
}

/// Bel(a): mass of every element below `a` in the frame order.
pub fn belief(m: &MassFunction, a: &FocalElement) -> Result<f64, DecisionError> {
    let frame = m.frame();
    if !frame.contains(a) {
        return Err(FrameError::ForeignElement.into());
    }
    Ok(m.focal().iter().filter(|(b, _)| frame.le(b, a)).fold(0.0, |acc, (_, v)| acc + v))
}

/// Pl(a): mass of every element meeting `a`.
pub fn plausibility(m: &MassFunction, a: &FocalElement) -> Result<f64, DecisionError> {
    let frame = m.frame();
    if !frame.contains(a) {
        return Err(FrameError::ForeignElement.into());
    }
    Ok(m.focal().iter().filter(|(b, _)| !frame.meet(a, b).is_empty()).fold(0.0, |acc, (_, v)| acc + v))
}

/// BetP(θ): each m(A) is spread evenly over the Venn regions of A, and each
/// region evenly over the atoms it lies in. In DST the regions are the atoms
/// themselves, giving the classical Σ_{A∋θ} m(A)/|A|.
pub fn pignistic(m: &MassFunction) -> Result<Vec<f64>, DecisionError> {
    if !m.is_normalized() {
        return Err(DecisionError::Unnormalized(m.conflict()));
    }
    let frame = m.frame();
    let mut betp = vec![0.0; frame.len_atoms()];
    for (a, v) in m.focal() {
        let regions = frame.regions(&a);
        let share = v / regions.len() as f64;
        for r in regions {
            let per_atom = share / r.count_ones() as f64;
            for (atom, p) in betp.iter_mut().enumerate() {
                if r & (1 << atom) != 0 {
                    *p += per_atom;
                }
            }
        }
    }
    Ok(betp)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub strategy: Strategy,
    /// Atom label, or element expression for `max-bba`.
    pub choice: String,
    pub value: f64,
    #[serde(default)]
    pub tie: bool,
    #[serde(default)]
    pub near_tie: bool,
}

struct Candidate {
    element: FocalElement,
    value: f64,
    severity: usize,
    card: usize,
}

fn pick(
    frame: &Frame,
    strategy: Strategy,
    mut cands: Vec<Candidate>,
    tie_break: TieBreak,
) -> Result<(Decision, Vec<String>), DecisionError> {
    let mut warnings = Vec::new();
    let best = cands.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let (top, rest): (Vec<Candidate>, Vec<Candidate>) =
        cands.drain(..).partition(|c| best - c.value <= TIE_EPSILON);
    let tie = top.len() > 1;
    let runner_up = rest.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let near_tie = !tie && best - runner_up < NEAR_TIE_THRESHOLD;
    if tie && tie_break == TieBreak::Error {
        return Err(DecisionError::Tie { strategy, candidates: top.iter().map(|c| frame.label(&c.element)).collect() });
    }
    let chosen = top
        .iter()
        .max_by(|x, y| {
            let sev = match tie_break {
                TieBreak::LowerSeverity => y.severity.cmp(&x.severity),
                _ => x.severity.cmp(&y.severity),
            };
            sev.then(y.card.cmp(&x.card))
        })
        .expect("at least one candidate");
    let choice = frame.label(&chosen.element);
    if tie {
        let names: Vec<String> = top.iter().map(|c| frame.label(&c.element)).collect();
        warnings.push(format!("{strategy}: tie between {} broken toward {choice}", names.join(", ")));
    } else if near_tie {
        warnings.push(format!("{strategy}: {choice} leads the runner-up by less than {NEAR_TIE_THRESHOLD}"));
    }
    Ok((Decision { strategy, choice, value: chosen.value, tie, near_tie }, warnings))
}

fn severity_of(frame: &Frame, e: &FocalElement) -> usize {
    let mask = e.atom_mask();
    frame.atoms().iter().filter(|a| mask & (1 << a.id) != 0).map(|a| a.severity_rank).max().unwrap_or(0)
}

fn measures(m: &MassFunction, strategy: Strategy) -> Result<Vec<Candidate>, DecisionError> {
    let frame = m.frame();
    if strategy == Strategy::MaxBba {
        return frame
            .elements()
            .iter()
            .map(|e| {
                Ok(Candidate { element: *e, value: m.mass(e), severity: severity_of(frame, e), card: frame.dsm_cardinality(e)? })
            })
            .collect();
    }
    let betp = if strategy == Strategy::MaxBetp { pignistic(m)? } else { vec![] };
    (0..frame.len_atoms())
        .map(|atom| {
            let e = frame.singleton(atom);
            let value = match strategy {
                Strategy::MaxBel => belief(m, &e)?,
                Strategy::MaxPl => plausibility(m, &e)?,
                _ => betp[atom],
            };
            Ok(Candidate { element: e, value, severity: frame.atoms()[atom].severity_rank, card: 1 })
        })
        .collect()
}

/// Argmax of the strategy's measure (atoms, or all elements for `max-bba`).
pub fn decide(m: &MassFunction, strategy: Strategy, tie_break: TieBreak) -> Result<Decision, DecisionError> {
    let cands = measures(m, strategy)?;
    pick(m.frame(), strategy, cands, tie_break).map(|(d, _)| d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRow {
    pub element: String,
    pub mass: f64,
    pub bel: f64,
    pub pl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub atom: String,
    pub bel: f64,
    pub betp: f64,
    pub pl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionProfile {
    pub elements: Vec<ElementRow>,
    pub atoms: Vec<AtomRow>,
    pub decisions: Vec<Decision>,
    pub strategy: Strategy,
    pub chosen: String,
    pub warnings: Vec<String>,
}

impl DecisionProfile {
    pub fn decision(&self, strategy: Strategy) -> &Decision {
        self.decisions.iter().find(|d| d.strategy == strategy).expect("profile covers every strategy")
    }
}

/// Full comparative profile: m/Bel/Pl for every frame element, BetP per atom
/// and the decision under each strategy.
///
/// Conflict mass (conjunctive results) is normalized away for BetP only,
/// with a warning.
pub fn build_profile(m: &MassFunction, strategy: Strategy, tie_break: TieBreak) -> Result<DecisionProfile, DecisionError> {
    let frame = m.frame();
    let mut warnings = Vec::new();
    let k = m.conflict();
    let normalized = if k > 0.0 {
        warnings.push(format!("bba carries conflict mass {k:.6}; pignistic values use the normalized bba"));
        if k < 1.0 {
            let rescaled = m.focal().into_iter().map(|(e, v)| (e, v / (1.0 - k)));
            Some(MassFunction::new(frame, rescaled).expect("rescaled masses sum to 1"))
        } else {
            warnings.push("total conflict: pignistic values are undefined and reported as 0".into());
            None
        }
    } else {
        Some(m.clone())
    };
    if m.is_vacuous() {
        warnings.push("maximal ignorance: all mass is on Θ, every decision is arbitrary".into());
    }

    let elements = frame
        .elements()
        .iter()
        .map(|e| Ok(ElementRow { element: frame.label(e), mass: m.mass(e), bel: belief(m, e)?, pl: plausibility(m, e)? }))
        .collect::<Result<Vec<_>, DecisionError>>()?;
    let betp = match &normalized {
        Some(n) => pignistic(n)?,
        None => vec![0.0; frame.len_atoms()],
    };
    let atoms = frame
        .atoms()
        .iter()
        .map(|a| {
            let e = frame.singleton(a.id);
            Ok(AtomRow { atom: a.label.clone(), bel: belief(m, &e)?, betp: betp[a.id], pl: plausibility(m, &e)? })
        })
        .collect::<Result<Vec<_>, DecisionError>>()?;

    let mut decisions = Vec::with_capacity(Strategy::ALL.len());
    for s in Strategy::ALL {
        let cands = match (s, &normalized) {
            (Strategy::MaxBetp, Some(n)) => measures(n, s)?,
            (Strategy::MaxBetp, None) => (0..frame.len_atoms())
                .map(|atom| Candidate { element: frame.singleton(atom), value: 0.0, severity: frame.atoms()[atom].severity_rank, card: 1 })
                .collect(),
            _ => measures(m, s)?,
        };
        let (d, w) = pick(frame, s, cands, tie_break)?;
        warnings.extend(w);
        decisions.push(d);
    }
    let chosen = decisions.iter().find(|d| d.strategy == strategy).map(|d| d.choice.clone()).unwrap_or_default();
    Ok(DecisionProfile { elements, atoms, decisions, strategy, chosen, warnings })
}
