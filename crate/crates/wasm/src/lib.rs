//! JSON-in, JSON-out entry points for the browser demo. The same
//! functions are exported to JavaScript on wasm32 and tested natively.

use std::collections::BTreeMap;
use std::sync::Arc;

use ermcda_core::ahp::{self, PairwiseMatrix};
use ermcda_core::decision::{self, DecisionProfile, Strategy, TieBreak};
use ermcda_core::frame::{Atom, Frame, Mode};
use ermcda_core::fusion::{self, Rule};
use ermcda_core::mapping::{MappingModel, MappingOptions};
use ermcda_core::mass::{ElementMass, MassFunction};
use ermcda_core::pipeline::ClassDoc;
use ermcda_core::possibility::{ConfidenceInterval, NumericInterval, PossibilityDistribution};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[cfg(target_arch = "wasm32")]
mod bindings;

fn parse<T: DeserializeOwned>(input: &str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad input: {e}"))
}

fn emit<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn masses(m: &MassFunction) -> Vec<ElementMass> {
    m.to_doc().masses
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AhpInput {
    Matrix { matrix: Vec<Vec<f64>> },
    Upper { n: usize, judgments: Vec<f64> },
}

#[derive(Serialize)]
struct AhpOutput {
    weights: Vec<f64>,
    lambda_max: f64,
    ci: f64,
    cr: f64,
    acceptable: bool,
    notes: Vec<String>,
}

/// Priority vector and consistency of a pairwise comparison matrix, given
/// as `{"matrix": [[..]]}` or `{"n": 3, "judgments": [upper triangle]}`.
pub fn ahp_priorities(input: &str) -> Result<String, String> {
    let m = match parse::<AhpInput>(input)? {
        AhpInput::Matrix { matrix } => PairwiseMatrix::new(matrix),
        AhpInput::Upper { n, judgments } => PairwiseMatrix::from_upper(n, &judgments),
    }
    .map_err(|e| e.to_string())?;
    let weights = ahp::derive_weights(&m).map_err(|e| e.to_string())?;
    let c = ahp::consistency_ratio(&m).map_err(|e| e.to_string())?;
    emit(&AhpOutput {
        weights,
        lambda_max: c.lambda_max,
        ci: c.ci,
        cr: c.cr,
        acceptable: c.is_acceptable(),
        notes: m.off_grid_notes(),
    })
}

#[derive(Deserialize)]
struct StaircaseInput {
    intervals: Vec<ConfidenceInterval>,
    query: Option<Span>,
    #[serde(default)]
    classes: Vec<ClassDoc>,
    #[serde(default = "dst")]
    mode: Mode,
}

#[derive(Deserialize)]
struct Span {
    lo: f64,
    hi: f64,
}

fn dst() -> Mode {
    Mode::Dst
}

#[derive(Serialize)]
struct Level {
    lo: f64,
    hi: f64,
    level: f64,
}

#[derive(Serialize)]
struct Focal {
    lo: f64,
    hi: f64,
    mass: f64,
}

#[derive(Serialize)]
struct Query {
    lo: f64,
    hi: f64,
    necessity: f64,
    possibility: f64,
    belief: f64,
    plausibility: f64,
}

#[derive(Serialize)]
struct StaircaseOutput {
    levels: Vec<Level>,
    focal: Vec<Focal>,
    query: Option<Query>,
    mapped: Option<Vec<ElementMass>>,
}

/// Turns stacked confidence intervals into a possibility staircase and its
/// consonant interval masses; with `classes`, also maps them onto the frame.
pub fn staircase(input: &str) -> Result<String, String> {
    let req: StaircaseInput = parse(input)?;
    let d = PossibilityDistribution::from_confidence_intervals(&req.intervals).map_err(|e| e.to_string())?;
    let im = d.to_interval_mass().map_err(|e| e.to_string())?;
    let query = req.query.map(|q| NumericInterval::new(q.lo, q.hi)).transpose().map_err(|e| e.to_string())?;
    let query = query.map(|q| Query {
        lo: q.lo,
        hi: q.hi,
        necessity: d.necessity_of(&q),
        possibility: d.possibility_of(&q),
        belief: im.belief(&q),
        plausibility: im.plausibility(&q),
    });
    let mapped = if req.classes.is_empty() {
        None
    } else {
        let labels: Vec<&str> = req.classes.iter().map(|c| c.atom.as_str()).collect();
        let frame = Frame::build(Atom::from_labels(&labels), req.mode).map_err(|e| e.to_string())?;
        let classes = req
            .classes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let [a, b, cc, dd] = c.trapezoid.map(|x| x.0);
                ermcda_core::mapping::Trapezoid::new(a, b, cc, dd).map(|t| (k, t))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let model = MappingModel::new("demo", classes, &frame).map_err(|e| e.to_string())?;
        let frame = Arc::new(frame);
        let m = model
            .map_interval_mass(&im, &frame, MappingOptions::for_mode(req.mode))
            .map_err(|e| e.to_string())?;
        Some(masses(&m))
    };
    emit(&StaircaseOutput {
        levels: d.entries().iter().map(|(i, l)| Level { lo: i.lo, hi: i.hi, level: *l }).collect(),
        focal: im.focal().iter().map(|(i, m)| Focal { lo: i.lo, hi: i.hi, mass: *m }).collect(),
        query,
        mapped,
    })
}

#[derive(Deserialize)]
struct SourceInput {
    #[serde(default = "one")]
    reliability: f64,
    masses: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct CompareInput {
    #[serde(default = "dst")]
    mode: Mode,
    atoms: Vec<String>,
    sources: Vec<SourceInput>,
    rules: Vec<Rule>,
    #[serde(default)]
    strategy: Strategy,
}

#[derive(Serialize)]
struct RuleResult {
    rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    masses: Option<Vec<ElementMass>>,
    /// Mass left on the empty set (unnormalized rules only).
    #[serde(skip_serializing_if = "Option::is_none")]
    empty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<DecisionProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareOutput {
    conflict: f64,
    results: Vec<RuleResult>,
    divergent: bool,
}

/// Discounts each source by its reliability and combines them under each
/// requested rule. Per-rule failures are reported in place.
pub fn compare_rules(input: &str) -> Result<String, String> {
    let req: CompareInput = parse(input)?;
    let labels: Vec<&str> = req.atoms.iter().map(String::as_str).collect();
    let frame = Arc::new(Frame::build(Atom::from_labels(&labels), req.mode).map_err(|e| e.to_string())?);
    let sources = req
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let entries: Vec<(&String, f64)> = s.masses.iter().map(|(k, v)| (k, *v)).collect();
            let m = MassFunction::from_labels(&frame, &entries).map_err(|e| format!("source {}: {e}", i + 1))?;
            fusion::discount(&m, s.reliability).map_err(|e| format!("source {}: {e}", i + 1))
        })
        .collect::<Result<Vec<_>, String>>()?;
    if sources.is_empty() {
        return Err("at least one source is needed".into());
    }
    let conflict = fusion::conjunctive(&sources).map_err(|e| e.to_string())?.conflict();
    let results: Vec<RuleResult> = req
        .rules
        .iter()
        .map(|rule| {
            let outcome = fusion::combine(*rule, &sources).map_err(|e| e.to_string()).and_then(|m| {
                let p = decision::build_profile(&m, req.strategy, TieBreak::HigherSeverity).map_err(|e| e.to_string())?;
                Ok((m, p))
            });
            match outcome {
                Ok((m, p)) => RuleResult {
                    rule: *rule,
                    masses: Some(masses(&m)),
                    empty: Some(m.conflict()),
                    profile: Some(p),
                    error: None,
                },
                Err(e) => RuleResult { rule: *rule, masses: None, empty: None, profile: None, error: Some(e) },
            }
        })
        .collect();
    let mut chosen = results.iter().filter_map(|r| r.profile.as_ref().map(|p| &p.chosen));
    let first = chosen.next();
    let divergent = chosen.any(|c| Some(c) != first);
    emit(&CompareOutput { conflict, results, divergent })
}
