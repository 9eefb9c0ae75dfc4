use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ahp::{CriterionKind, CriterionNode, Hierarchy, PairwiseMatrix};
use crate::decision::{Strategy, TieBreak};
use crate::frame::{Atom, Frame, Mode};
use crate::fusion::{FusionConfig, SourceSpec};
use crate::mapping::{MappingModel, MappingOptions, OverlapPolicy, QualitativeMapping, Trapezoid};
use crate::mass::MassFunction;
use crate::possibility::{ConfidenceInterval, NumericInterval, PossibilityDistribution};

pub const SCHEMA_VERSION: &str = "ermcda/1";

/// Published JSON schema of the scenario document.
pub const SCENARIO_SCHEMA: &str = include_str!("../../schema/scenario.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub frame: FrameDoc,
    pub hierarchy: NodeDoc,
    pub mappings: BTreeMap<String, MappingDoc>,
    pub sources: Vec<SourceDoc>,
    pub evaluations: Vec<EvaluationDoc>,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub decision: DecisionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping_options: Option<MappingOptions>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    pub mode: Mode,
    /// Listed from least to most severe.
    pub atoms: Vec<AtomDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub label: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    /// Leaves only; nodes with children are branches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CriterionKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeDoc>,
    /// Row-major upper triangle a_12, a_13, …, a_(n-1)n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgments: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassDoc>>,
    /// label → (element expression → mass)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub atom: String,
    pub trapezoid: [Bound; 4],
}

/// A real number that may be written as `"inf"` / `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound(pub f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BoundVisitor;
        impl Visitor<'_> for BoundVisitor {
            type Value = Bound;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Bound, E> {
                Ok(Bound(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Bound, E> {
                match v {
                    "inf" | "+inf" => Ok(Bound(f64::INFINITY)),
                    "-inf" => Ok(Bound(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(BoundVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub reliability: f64,
}

/// One (source, criterion) evaluation. Exactly one of `intervals`,
/// `distribution` or `label` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationDoc {
    pub source: String,
    pub criterion: String,
    /// Stacked intervals, each with the expert's confidence that the value
    /// lies inside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<ConfidenceInterval>>,
    /// Possibility levels given directly, innermost first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<LevelDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub tie_break: TieBreak,
}

/// One validation finding, located by JSON pointer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.path.is_empty() { "/" } else { &self.path }, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{}", self.issues.iter().map(Issue::to_string).collect::<Vec<_>>().join("\n"))]
pub struct LoadError {
    pub issues: Vec<Issue>,
}

impl LoadError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError { issues: vec![Issue { path: path.into(), message: message.into() }] }
    }
}

#[derive(Clone, Debug)]
pub enum LeafModel {
    Quantitative(MappingModel),
    Qualitative(QualitativeMapping),
}

#[derive(Clone, Debug)]
pub enum EvaluationInput {
    Possibility(PossibilityDistribution),
    Label { label: String, confidence: f64 },
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub source: String,
    pub criterion: String,
    pub input: EvaluationInput,
}

/// A fully validated scenario. Lists without semantic order (sources,
/// evaluations, interval stacks, classes) are held in canonical order.
#[derive(Clone, Debug)]
pub struct Scenario {
    doc: ScenarioDoc,
    frame: Arc<Frame>,
    hierarchy: Hierarchy,
    models: BTreeMap<String, LeafModel>,
    sources: BTreeMap<String, SourceSpec>,
    evaluations: Vec<Evaluation>,
    mapping_options: MappingOptions,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Scenario {
    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn model(&self, leaf: &str) -> Option<&LeafModel> {
        self.models.get(leaf)
    }

    pub fn source(&self, id: &str) -> Option<&SourceSpec> {
        self.sources.get(id)
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evaluations
    }

    pub fn fusion(&self) -> FusionConfig {
        self.doc.fusion
    }

    pub fn decision(&self) -> DecisionConfig {
        self.doc.decision
    }

    pub fn mapping_options(&self) -> MappingOptions {
        self.mapping_options
    }

    /// Leaf ids in canonical (sorted) order.
    pub fn leaf_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.hierarchy.leaves().iter().map(|l| l.id.clone()).collect();
        ids.sort();
        ids
    }

    pub fn to_json(&self) -> String {
        to_json(&self.doc)
    }
}

pub fn to_json(doc: &ScenarioDoc) -> String {
    serde_json::to_string_pretty(doc).expect("scenario documents always serialize")
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = pointer_from_path(e.path());
        LoadError::single(path, e.into_inner().to_string())
    })?;
    Scenario::from_doc(doc)
}

pub fn load_value(value: serde_json::Value) -> Result<Scenario, LoadError> {
    let doc: ScenarioDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = pointer_from_path(e.path());
        LoadError::single(path, e.into_inner().to_string())
    })?;
    Scenario::from_doc(doc)
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

struct Checker {
    issues: Vec<Issue>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.issues.push(Issue { path: path.into(), message: message.to_string() });
    }
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Scenario, LoadError> {
        let mut ck = Checker { issues: vec![] };
        if doc.schema != SCHEMA_VERSION {
            ck.push("/schema", format!("unsupported schema `{}`, expected `{SCHEMA_VERSION}`", doc.schema));
        }
        let frame = match Frame::build(
            Atom::from_labels(&doc.frame.atoms.iter().map(|a| a.label.as_str()).collect::<Vec<_>>()),
            doc.frame.mode,
        ) {
            Ok(f) => Arc::new(f),
            Err(e) => {
                ck.push("/frame", e);
                return Err(LoadError { issues: ck.issues });
            }
        };

        let root = build_node(&doc.hierarchy, "/hierarchy", &mut ck);
        let hierarchy = root.and_then(|r| match Hierarchy::new(r) {
            Ok(h) => Some(h),
            Err(e) => {
                ck.push("/hierarchy", e);
                None
            }
        });

        let mapping_options = doc.mapping_options.unwrap_or_else(|| MappingOptions::for_mode(frame.mode()));
        if mapping_options.overlap == OverlapPolicy::Intersection && frame.mode() == Mode::Dst {
            ck.push("/mapping_options/overlap", "intersection overlap requires a dsmt frame");
        }
        if let Err(e) = doc.fusion.rule.check_mode(frame.mode()) {
            ck.push("/fusion/rule", e);
        }

        // Cross-references are checked against the document's leaves so that
        // a bad matrix does not hide unrelated problems.
        let mut leaves = BTreeMap::new();
        doc_leaves(&doc.hierarchy, &mut leaves);

        let mut models = BTreeMap::new();
        for (id, m) in &doc.mappings {
            let path = format!("/mappings/{}", id.replace('~', "~0").replace('/', "~1"));
            let Some(kind) = leaves.get(id) else {
                ck.push(&path, format!("mapping for `{id}`, which is not a leaf criterion"));
                continue;
            };
            if let Some(model) = build_mapping(id, *kind, m, &frame, &path, &mut ck) {
                models.insert(id.clone(), model);
            }
        }
        for id in leaves.keys().filter(|id| !doc.mappings.contains_key(*id)) {
            ck.push("/mappings", format!("leaf `{id}` has no mapping"));
        }

        let mut sources = BTreeMap::new();
        for (i, s) in doc.sources.iter().enumerate() {
            let path = format!("/sources/{i}");
            if s.id.is_empty() {
                ck.push(format!("{path}/id"), "source id is empty");
            }
            if !(0.0..=1.0).contains(&s.reliability) {
                ck.push(format!("{path}/reliability"), format!("reliability {} is outside [0, 1]", s.reliability));
            }
            if sources.insert(s.id.clone(), SourceSpec { id: s.id.clone(), reliability: s.reliability }).is_some() {
                ck.push(format!("{path}/id"), format!("duplicate source `{}`", s.id));
            }
        }

        let mut evaluations = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, e) in doc.evaluations.iter().enumerate() {
            let path = format!("/evaluations/{i}");
            if !sources.contains_key(&e.source) {
                ck.push(format!("{path}/source"), format!("undeclared source `{}`", e.source));
            }
            if !seen.insert((e.criterion.clone(), e.source.clone())) {
                ck.push(&path, format!("source `{}` evaluates `{}` more than once", e.source, e.criterion));
            }
            let Some(kind) = leaves.get(&e.criterion) else {
                ck.push(format!("{path}/criterion"), format!("`{}` is not a leaf criterion", e.criterion));
                continue;
            };
            if let Some(input) = build_evaluation(e, *kind, models.get(&e.criterion), mapping_options, &path, &mut ck) {
                evaluations.push(Evaluation { source: e.source.clone(), criterion: e.criterion.clone(), input });
            }
        }
        for id in leaves.keys().filter(|id| !doc.evaluations.iter().any(|e| &e.criterion == *id)) {
            ck.push("/evaluations", format!("leaf `{id}` has no evaluation"));
        }

        if !ck.issues.is_empty() {
            return Err(LoadError { issues: ck.issues });
        }
        evaluations.sort_by(|a, b| (&a.criterion, &a.source).cmp(&(&b.criterion, &b.source)));
        Ok(Scenario {
            doc: canonical(doc),
            frame,
            hierarchy: hierarchy.expect("no issues implies a hierarchy"),
            models,
            sources,
            evaluations,
            mapping_options,
        })
    }
}

fn canonical(mut doc: ScenarioDoc) -> ScenarioDoc {
    doc.sources.sort_by(|a, b| a.id.cmp(&b.id));
    doc.evaluations.sort_by(|a, b| (&a.criterion, &a.source).cmp(&(&b.criterion, &b.source)));
    for e in &mut doc.evaluations {
        if let Some(iv) = &mut e.intervals {
            iv.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
        }
        if let Some(d) = &mut e.distribution {
            d.sort_by(|a, b| b.level.total_cmp(&a.level));
        }
    }
    let order: Vec<&str> = doc.frame.atoms.iter().map(|a| a.label.as_str()).collect();
    let rank = |label: &str| order.iter().position(|l| *l == label).unwrap_or(usize::MAX);
    let mut mappings = doc.mappings.clone();
    for m in mappings.values_mut() {
        if let Some(c) = &mut m.classes {
            c.sort_by_key(|c| rank(&c.atom));
        }
    }
    doc.mappings = mappings;
    doc
}

fn doc_leaves(n: &NodeDoc, out: &mut BTreeMap<String, CriterionKind>) {
    if n.children.is_empty() {
        if let Some(kind) = n.kind.filter(|k| *k != CriterionKind::Branch) {
            out.insert(n.id.clone(), kind);
        }
    }
    n.children.iter().for_each(|c| doc_leaves(c, out));
}

fn build_node(n: &NodeDoc, path: &str, ck: &mut Checker) -> Option<CriterionNode> {
    let label = if n.label.is_empty() { n.id.clone() } else { n.label.clone() };
    if n.children.is_empty() {
        let Some(kind) = n.kind.filter(|k| *k != CriterionKind::Branch) else {
            ck.push(format!("{path}/kind"), format!("leaf `{}` needs kind quantitative or qualitative", n.id));
            return None;
        };
        if n.judgments.is_some() || n.matrix.is_some() {
            ck.push(path, format!("leaf `{}` cannot carry judgments", n.id));
        }
        return Some(CriterionNode::leaf(&n.id, &label, kind));
    }
    if matches!(n.kind, Some(k) if k != CriterionKind::Branch) {
        ck.push(format!("{path}/kind"), format!("`{}` has children so it must be a branch", n.id));
    }
    let dim = n.children.len();
    let matrix = match (&n.judgments, &n.matrix) {
        (Some(j), None) => PairwiseMatrix::from_upper(dim, j).map_err(|e| (format!("{path}/judgments"), e)),
        (None, Some(m)) => PairwiseMatrix::new(m.clone()).map_err(|e| (format!("{path}/matrix"), e)),
        (None, None) if dim == 1 => Ok(PairwiseMatrix::identity(1)),
        _ => {
            ck.push(path, format!("branch `{}` needs exactly one of `judgments` or `matrix`", n.id));
            return None;
        }
    };
    let matrix = match matrix {
        Ok(m) if m.dim() == dim => Some(m),
        Ok(m) => {
            ck.push(path, format!("matrix of `{}` is {}x{} but it has {dim} children", n.id, m.dim(), m.dim()));
            None
        }
        Err((p, e)) => {
            ck.push(p, format!("matrix of `{}`: {e}", n.id));
            None
        }
    };
    let children: Vec<Option<CriterionNode>> = n
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| build_node(c, &format!("{path}/children/{i}"), ck))
        .collect();
    let children: Option<Vec<CriterionNode>> = children.into_iter().collect();
    Some(CriterionNode::branch(&n.id, &label, children?, matrix?))
}

fn build_mapping(
    id: &str,
    kind: CriterionKind,
    m: &MappingDoc,
    frame: &Arc<Frame>,
    path: &str,
    ck: &mut Checker,
) -> Option<LeafModel> {
    match (kind, &m.classes, &m.labels) {
        (CriterionKind::Quantitative, Some(classes), None) => {
            let mut parsed = Vec::with_capacity(classes.len());
            for (i, c) in classes.iter().enumerate() {
                let Some(atom) = frame.atoms().iter().find(|a| a.label == c.atom) else {
                    ck.push(format!("{path}/classes/{i}/atom"), format!("unknown atom `{}`", c.atom));
                    return None;
                };
                let [a, b, cc, d] = c.trapezoid.map(|x| x.0);
                match Trapezoid::new(a, b, cc, d) {
                    Ok(t) => parsed.push((atom.id, t)),
                    Err(e) => {
                        ck.push(format!("{path}/classes/{i}/trapezoid"), e);
                        return None;
                    }
                }
            }
            parsed.sort_by_key(|(atom, _)| frame.atoms()[*atom].severity_rank);
            match MappingModel::new(id, parsed, frame) {
                Ok(model) => Some(LeafModel::Quantitative(model)),
                Err(e) => {
                    ck.push(format!("{path}/classes"), e);
                    None
                }
            }
        }
        (CriterionKind::Qualitative, None, Some(labels)) => {
            let mut table = BTreeMap::new();
            for (label, masses) in labels {
                let entries: Vec<(&str, f64)> = masses.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                match MassFunction::from_labels(frame, &entries) {
                    Ok(m) => {
                        table.insert(label.clone(), m);
                    }
                    Err(e) => ck.push(format!("{path}/labels/{label}"), e),
                }
            }
            if table.is_empty() {
                ck.push(format!("{path}/labels"), "qualitative table has no labels");
                return None;
            }
            Some(LeafModel::Qualitative(QualitativeMapping::new(id, table)))
        }
        (CriterionKind::Quantitative, _, _) => {
            ck.push(path, format!("quantitative leaf `{id}` needs `classes` (and no `labels`)"));
            None
        }
        _ => {
            ck.push(path, format!("qualitative leaf `{id}` needs `labels` (and no `classes`)"));
            None
        }
    }
}

fn build_evaluation(
    e: &EvaluationDoc,
    kind: CriterionKind,
    model: Option<&LeafModel>,
    options: MappingOptions,
    path: &str,
    ck: &mut Checker,
) -> Option<EvaluationInput> {
    let given = [e.intervals.is_some(), e.distribution.is_some(), e.label.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        ck.push(path, "give exactly one of `intervals`, `distribution` or `label`");
        return None;
    }
    if let Some(label) = &e.label {
        if kind != CriterionKind::Qualitative {
            ck.push(format!("{path}/label"), format!("`{}` is quantitative; give intervals", e.criterion));
            return None;
        }
        let confidence = e.confidence.unwrap_or(1.0);
        if !(confidence > 0.0 && confidence <= 1.0) {
            ck.push(format!("{path}/confidence"), format!("confidence {confidence} is outside (0, 1]"));
            return None;
        }
        if let Some(LeafModel::Qualitative(q)) = model {
            if !q.labels().any(|l| l == label) {
                let known: Vec<&str> = q.labels().collect();
                ck.push(format!("{path}/label"), format!("unknown label `{label}` (known: {})", known.join(", ")));
                return None;
            }
        }
        return Some(EvaluationInput::Label { label: label.clone(), confidence });
    }
    if kind != CriterionKind::Quantitative {
        ck.push(path, format!("`{}` is qualitative; give a label", e.criterion));
        return None;
    }
    if e.confidence.is_some() {
        ck.push(format!("{path}/confidence"), "confidence belongs inside each interval");
    }
    let dist = if let Some(iv) = &e.intervals {
        PossibilityDistribution::from_confidence_intervals(iv).map_err(|err| (format!("{path}/intervals"), err))
    } else {
        let mut levels = e.distribution.clone().unwrap_or_default();
        levels.sort_by(|a, b| b.level.total_cmp(&a.level));
        levels
            .iter()
            .map(|l| NumericInterval::new(l.lo, l.hi).map(|i| (i, l.level)))
            .collect::<Result<Vec<_>, _>>()
            .and_then(PossibilityDistribution::new)
            .and_then(|d| d.to_interval_mass().map(|_| d))
            .map_err(|err| (format!("{path}/distribution"), err))
    };
    let dist = match dist {
        Ok(d) => d,
        Err((p, err)) => {
            ck.push(p, format!("evaluation of `{}` by `{}`: {err}", e.criterion, e.source));
            return None;
        }
    };
    if let Some(LeafModel::Quantitative(m)) = model {
        let (lo, hi) = m.domain();
        let outer = dist.entries().last().expect("non-empty distribution").0;
        if !options.slack_to_ignorance && (outer.lo < lo || outer.hi > hi) {
            ck.push(path, format!("interval [{}, {}] leaves the mapping domain [{lo}, {hi}]", outer.lo, outer.hi));
            return None;
        }
    }
    Some(EvaluationInput::Possibility(dist))
}
