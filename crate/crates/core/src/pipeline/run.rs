use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::{self, AhpError, NodeConsistency, NodeWeight, Prioritization, Synthesis};
use crate::decision::{self, DecisionError, DecisionProfile, Strategy, TieBreak};
use crate::frame::{Atom, Frame};
use crate::fusion::{self, FusionError, FusionTrace, ImportanceStrategy, Rule, SourceSpec};
use crate::mapping::{MappingError, MappingOptions};
use crate::mass::{BbaDoc, MassError, MassFunction};
use crate::possibility::PossibilityError;

use super::scenario::{EvaluationInput, FrameDoc, LeafModel, Scenario};

pub const REPORT_SCHEMA: &str = "ermcda-report/1";

/// Tolerance for replaying the audit log.
pub const REPLAY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Weights,
    Mapping,
    SourceFusion,
    CriteriaFusion,
    Decision,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Weights, Stage::Mapping, Stage::SourceFusion, Stage::CriteriaFusion, Stage::Decision];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Weights => "weights",
            Stage::Mapping => "mapping",
            Stage::SourceFusion => "source-fusion",
            Stage::CriteriaFusion => "criteria-fusion",
            Stage::Decision => "decision",
        }
    }

    fn downstream(&self) -> &'static [Stage] {
        match self {
            Stage::Weights => &[Stage::CriteriaFusion],
            Stage::Mapping => &[Stage::SourceFusion],
            Stage::SourceFusion => &[Stage::CriteriaFusion],
            Stage::CriteriaFusion => &[Stage::Decision],
            Stage::Decision => &[],
        }
    }
}

/// Set of stages to recompute, closed under the dependency graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageSet(u8);

impl StageSet {
    pub fn all() -> Self {
        StageSet(0b11111)
    }

    pub fn contains(&self, s: Stage) -> bool {
        self.0 & (1 << s as u8) != 0
    }

    pub fn insert(&mut self, s: Stage) {
        if self.contains(s) {
            return;
        }
        self.0 |= 1 << s as u8;
        for d in s.downstream() {
            self.insert(*d);
        }
    }

    pub fn union(mut self, other: StageSet) -> Self {
        for s in Stage::ALL.into_iter().filter(|s| other.contains(*s)) {
            self.insert(s);
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn stages(&self) -> Vec<Stage> {
        Stage::ALL.into_iter().filter(|s| self.contains(*s)).collect()
    }
}

impl From<Stage> for StageSet {
    fn from(s: Stage) -> Self {
        let mut set = StageSet::default();
        set.insert(s);
        set
    }
}

/// Stages invalidated by a change at `pointer` (a JSON pointer into the
/// scenario document).
pub fn stages_touched(pointer: &str) -> StageSet {
    let parts: Vec<&str> = pointer.split('/').skip(1).collect();
    let stage = match parts.first().copied() {
        Some("hierarchy") => match parts.last().copied() {
            Some("label") => return StageSet::default(),
            _ if parts.iter().any(|p| *p == "judgments" || *p == "matrix") => Stage::Weights,
            _ => return StageSet::all(),
        },
        Some("mappings" | "evaluations" | "mapping_options") => Stage::Mapping,
        Some("sources") => Stage::SourceFusion,
        Some("fusion") => match parts.get(1).copied() {
            Some("importance") => Stage::CriteriaFusion,
            _ => Stage::SourceFusion,
        },
        Some("decision") => Stage::Decision,
        Some("name" | "description" | "schema") => return StageSet::default(),
        _ => return StageSet::all(),
    };
    stage.into()
}

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Ahp(#[from] AhpError),
    #[error(transparent)]
    Possibility(#[from] PossibilityError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Mass(#[from] MassError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("rule `{rule}` cannot be used on a {mode} frame")]
    RuleMode { rule: Rule, mode: crate::frame::Mode },
    #[error("{stage} stage, {entity}: {source}")]
    Stage { stage: &'static str, entity: String, source: StageFailure },
    #[error("comparison needs at least two distinct rules")]
    TooFewRules,
    #[error("report cannot be replayed: {0}")]
    Replay(String),
}

fn at<E: Into<StageFailure>>(stage: Stage, entity: impl Into<String>) -> impl FnOnce(E) -> PipelineError {
    let entity = entity.into();
    move |e| PipelineError::Stage { stage: stage.name(), entity, source: e.into() }
}

/// Per-run overrides of the scenario's configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Drop per-source artifacts and the audit trail from the report.
    #[serde(default)]
    pub lean: bool,
}

/// Configuration actually in effect for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub rule: Rule,
    pub importance: ImportanceStrategy,
    pub strategy: Strategy,
    pub tie_break: TieBreak,
    pub mapping: MappingOptions,
}

impl EffectiveConfig {
    pub fn resolve(s: &Scenario, opts: &RunOptions) -> Self {
        EffectiveConfig {
            rule: opts.rule.unwrap_or(s.fusion().rule),
            importance: s.fusion().importance,
            strategy: opts.strategy.unwrap_or(s.decision().strategy),
            tie_break: s.decision().tie_break,
            mapping: s.mapping_options(),
        }
    }

    fn changed_stages(&self, other: &EffectiveConfig) -> StageSet {
        let mut set = StageSet::default();
        if self.mapping != other.mapping {
            set.insert(Stage::Mapping);
        }
        if self.rule != other.rule {
            set.insert(Stage::SourceFusion);
        }
        if self.importance != other.importance {
            set.insert(Stage::CriteriaFusion);
        }
        if self.strategy != other.strategy || self.tie_break != other.tie_break {
            set.insert(Stage::Decision);
        }
        set
    }
}

#[derive(Clone, Debug)]
pub struct MappedEvaluation {
    pub source: String,
    pub criterion: String,
    pub detail: String,
    pub bba: MassFunction,
}

#[derive(Clone, Debug)]
pub struct SourceFusion {
    pub criterion: String,
    pub sources: Vec<SourceSpec>,
    pub trace: FusionTrace,
}

#[derive(Clone, Debug)]
pub struct CriteriaFusion {
    pub criteria: Vec<(String, f64)>,
    pub trace: FusionTrace,
}

/// Typed artifacts of every stage; reusable for incremental re-runs.
#[derive(Clone, Debug)]
pub struct RunState {
    pub config: EffectiveConfig,
    pub synthesis: Synthesis,
    pub mapped: Vec<MappedEvaluation>,
    pub step1: Vec<SourceFusion>,
    pub step2: CriteriaFusion,
    pub profile: DecisionProfile,
}

impl RunState {
    pub fn final_bba(&self) -> &MassFunction {
        &self.step2.trace.result
    }
}

/// Runs every stage from scratch.
pub fn execute(s: &Scenario, opts: &RunOptions) -> Result<RunState, PipelineError> {
    execute_incremental(s, opts, None)
}

/// Runs the stages in `dirty` (plus any whose effective configuration
/// changed), reusing everything else from `previous`. The previous state
/// must come from a scenario that differs only in fields mapped to `dirty`.
pub fn execute_incremental(
    s: &Scenario,
    opts: &RunOptions,
    previous: Option<(&RunState, StageSet)>,
) -> Result<RunState, PipelineError> {
    let config = EffectiveConfig::resolve(s, opts);
    let mode = s.frame().mode();
    if !config.rule.supports(mode) {
        return Err(PipelineError::RuleMode { rule: config.rule, mode });
    }
    let (prev, dirty) = match previous {
        Some((p, d)) => (Some(p), d.union(config.changed_stages(&p.config))),
        None => (None, StageSet::all()),
    };
    let redo = |stage: Stage| prev.is_none() || dirty.contains(stage);

    let synthesis = match prev {
        Some(p) if !redo(Stage::Weights) => p.synthesis.clone(),
        _ => ahp::synthesize(s.hierarchy(), Prioritization::Eigenvector).map_err(at(Stage::Weights, "hierarchy"))?,
    };
    let mapped = match prev {
        Some(p) if !redo(Stage::Mapping) => p.mapped.clone(),
        _ => map_all(s, config.mapping)?,
    };
    let step1 = match prev {
        Some(p) if !redo(Stage::SourceFusion) => p.step1.clone(),
        _ => fuse_per_leaf(s, &mapped, config.rule)?,
    };
    let step2 = match prev {
        Some(p) if !redo(Stage::CriteriaFusion) => p.step2.clone(),
        _ => fuse_across(&synthesis, &step1, &config)?,
    };
    let profile = match prev {
        Some(p) if !redo(Stage::Decision) => p.profile.clone(),
        _ => decision::build_profile(&step2.trace.result, config.strategy, config.tie_break)
            .map_err(at(Stage::Decision, "final bba"))?,
    };
    Ok(RunState { config, synthesis, mapped, step1, step2, profile })
}

fn map_all(s: &Scenario, options: MappingOptions) -> Result<Vec<MappedEvaluation>, PipelineError> {
    s.evaluations()
        .iter()
        .map(|e| {
            let entity = format!("evaluation of `{}` by `{}`", e.criterion, e.source);
            let model = s.model(&e.criterion).expect("validated scenario has a model per leaf");
            let (bba, detail) = match (&e.input, model) {
                (EvaluationInput::Possibility(d), LeafModel::Quantitative(m)) => {
                    let im = d.to_interval_mass().map_err(at(Stage::Mapping, entity.clone()))?;
                    let bba = m.map_interval_mass(&im, s.frame(), options).map_err(at(Stage::Mapping, entity.clone()))?;
                    let cuts: Vec<String> = im.focal().iter().map(|(i, w)| format!("[{}, {}]:{}", i.lo, i.hi, w)).collect();
                    (bba, format!("surface ratios of {}", cuts.join(" ")))
                }
                (EvaluationInput::Label { label, confidence }, LeafModel::Qualitative(q)) => {
                    let bba = q.map_qualitative(label, *confidence).map_err(at(Stage::Mapping, entity.clone()))?;
                    (bba, format!("label `{label}` with confidence {confidence}"))
                }
                _ => unreachable!("evaluation kind is checked against the leaf kind at load"),
            };
            Ok(MappedEvaluation { source: e.source.clone(), criterion: e.criterion.clone(), detail, bba })
        })
        .collect()
}

fn fuse_per_leaf(s: &Scenario, mapped: &[MappedEvaluation], rule: Rule) -> Result<Vec<SourceFusion>, PipelineError> {
    let cfg = fusion::FusionConfig { rule, ..Default::default() };
    s.leaf_ids()
        .into_iter()
        .map(|leaf| {
            let inputs: Vec<(SourceSpec, MassFunction)> = mapped
                .iter()
                .filter(|m| m.criterion == leaf)
                .map(|m| (s.source(&m.source).expect("validated source").clone(), m.bba.clone()))
                .collect();
            let trace = fusion::fuse_sources_traced(&leaf, &inputs, &cfg).map_err(at(Stage::SourceFusion, format!("criterion `{leaf}`")))?;
            Ok(SourceFusion { criterion: leaf, sources: inputs.into_iter().map(|(spec, _)| spec).collect(), trace })
        })
        .collect()
}

fn fuse_across(synthesis: &Synthesis, step1: &[SourceFusion], config: &EffectiveConfig) -> Result<CriteriaFusion, PipelineError> {
    let inputs: Vec<(String, f64, MassFunction)> = step1
        .iter()
        .map(|f| {
            let w = synthesis.global_weight(&f.criterion).expect("every leaf is weighted");
            (f.criterion.clone(), w, f.trace.result.clone())
        })
        .collect();
    let trace = fusion::fuse_criteria_traced(&inputs, config.rule, &config.importance)
        .map_err(at(Stage::CriteriaFusion, "all criteria"))?;
    Ok(CriteriaFusion { criteria: inputs.into_iter().map(|(id, w, _)| (id, w)).collect(), trace })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedReport {
    pub source: String,
    pub criterion: String,
    pub detail: String,
    pub bba: BbaDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceFusionReport {
    pub criterion: String,
    pub sources: Vec<String>,
    pub reliabilities: Vec<f64>,
    pub bba: BbaDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaFusionReport {
    pub criteria: Vec<String>,
    pub weights: Vec<f64>,
    pub importance_factors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum AuditEntry {
    /// An evaluation mapped onto the frame; its output is a replay input.
    Map { output: String, source: String, criterion: String, detail: String },
    Discount { input: String, factor: f64, reason: String, output: String },
    Combine { rule: Rule, inputs: Vec<String>, output: String },
    Decide { input: String, strategy: Strategy, choice: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditLog {
    pub entries: Vec<AuditEntry>,
    /// Every named bba referenced by the entries.
    pub artifacts: BTreeMap<String, BbaDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub scenario: String,
    pub frame: FrameDoc,
    pub config: EffectiveConfig,
    pub weights: Vec<NodeWeight>,
    pub consistency: Vec<NodeConsistency>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mapped: Vec<MappedReport>,
    pub source_fusion: Vec<SourceFusionReport>,
    pub criteria_fusion: CriteriaFusionReport,
    #[serde(rename = "final")]
    pub final_bba: BbaDoc,
    pub profile: DecisionProfile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditLog>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

fn mapped_name(m: &MappedEvaluation) -> String {
    format!("mapped/{}/{}", m.criterion, m.source)
}

fn audit(state: &RunState) -> AuditLog {
    let mut entries = Vec::new();
    let mut artifacts = BTreeMap::new();
    for m in &state.mapped {
        let output = mapped_name(m);
        artifacts.insert(output.clone(), m.bba.to_doc());
        entries.push(AuditEntry::Map {
            output,
            source: m.source.clone(),
            criterion: m.criterion.clone(),
            detail: m.detail.clone(),
        });
    }
    let mut level = |inputs: Vec<(String, String)>, trace: &FusionTrace, reason: &str, output: String| {
        let mut discounted = Vec::with_capacity(inputs.len());
        for (((input, tag), factor), bba) in inputs.into_iter().zip(&trace.factors).zip(&trace.discounted) {
            let name = format!("discounted/{tag}");
            entries.push(AuditEntry::Discount { input, factor: *factor, reason: reason.into(), output: name.clone() });
            artifacts.insert(name.clone(), bba.to_doc());
            discounted.push(name);
        }
        entries.push(AuditEntry::Combine { rule: state.config.rule, inputs: discounted, output: output.clone() });
        artifacts.insert(output, trace.result.to_doc());
    };
    for f in &state.step1 {
        let inputs = f
            .sources
            .iter()
            .map(|s| (format!("mapped/{}/{}", f.criterion, s.id), format!("{}/{}", f.criterion, s.id)))
            .collect();
        level(inputs, &f.trace, "reliability", format!("criterion/{}", f.criterion));
    }
    let inputs = state.step2.criteria.iter().map(|(c, _)| (format!("criterion/{c}"), format!("importance/{c}"))).collect();
    level(inputs, &state.step2.trace, "importance", "final".into());
    entries.push(AuditEntry::Decide {
        input: "final".into(),
        strategy: state.profile.strategy,
        choice: state.profile.chosen.clone(),
    });
    AuditLog { entries, artifacts }
}

pub fn report(s: &Scenario, state: &RunState, opts: &RunOptions) -> RunReport {
    let frame = s.doc().frame.clone();
    let mut warnings = state.synthesis.warnings();
    warnings.extend(state.profile.warnings.iter().cloned());
    RunReport {
        schema: REPORT_SCHEMA.into(),
        scenario: s.name().into(),
        frame,
        config: state.config,
        weights: state.synthesis.nodes.clone(),
        consistency: state.synthesis.consistency.clone(),
        mapped: if opts.lean {
            vec![]
        } else {
            state
                .mapped
                .iter()
                .map(|m| MappedReport {
                    source: m.source.clone(),
                    criterion: m.criterion.clone(),
                    detail: m.detail.clone(),
                    bba: m.bba.to_doc(),
                })
                .collect()
        },
        source_fusion: state
            .step1
            .iter()
            .map(|f| SourceFusionReport {
                criterion: f.criterion.clone(),
                sources: f.sources.iter().map(|s| s.id.clone()).collect(),
                reliabilities: f.sources.iter().map(|s| s.reliability).collect(),
                bba: f.trace.result.to_doc(),
            })
            .collect(),
        criteria_fusion: CriteriaFusionReport {
            criteria: state.step2.criteria.iter().map(|(c, _)| c.clone()).collect(),
            weights: state.step2.criteria.iter().map(|(_, w)| *w).collect(),
            importance_factors: state.step2.trace.factors.clone(),
        },
        final_bba: state.final_bba().to_doc(),
        profile: state.profile.clone(),
        warnings,
        audit: (!opts.lean).then(|| audit(state)),
    }
}

/// Validated scenario → full report.
pub fn run(s: &Scenario) -> Result<RunReport, PipelineError> {
    run_with(s, &RunOptions::default())
}

pub fn run_with(s: &Scenario, opts: &RunOptions) -> Result<RunReport, PipelineError> {
    let state = execute(s, opts)?;
    Ok(report(s, &state, opts))
}

/// Rebuilds the frame a report was computed on.
pub fn report_frame(report: &RunReport) -> Result<Arc<Frame>, PipelineError> {
    let labels: Vec<&str> = report.frame.atoms.iter().map(|a| a.label.as_str()).collect();
    Frame::build(Atom::from_labels(&labels), report.frame.mode)
        .map(Arc::new)
        .map_err(|e| PipelineError::Replay(e.to_string()))
}

/// Re-executes every logged discount and combination from the mapped
/// evaluations and checks each against the recorded artifact. Returns the
/// recomputed final bba.
pub fn replay(report: &RunReport) -> Result<MassFunction, PipelineError> {
    let log = report.audit.as_ref().ok_or_else(|| PipelineError::Replay("lean report has no audit log".into()))?;
    let frame = report_frame(report)?;
    let recorded = |name: &str| -> Result<MassFunction, PipelineError> {
        let doc = log.artifacts.get(name).ok_or_else(|| PipelineError::Replay(format!("missing artifact `{name}`")))?;
        MassFunction::from_doc(&frame, doc).map_err(|e| PipelineError::Replay(format!("artifact `{name}`: {e}")))
    };
    let mut store: BTreeMap<String, MassFunction> = BTreeMap::new();
    let fetch = |store: &BTreeMap<String, MassFunction>, name: &str| {
        store.get(name).cloned().ok_or_else(|| PipelineError::Replay(format!("`{name}` is used before it is produced")))
    };
    for entry in &log.entries {
        let (output, value) = match entry {
            AuditEntry::Map { output, .. } => (output, recorded(output)?),
            AuditEntry::Discount { input, factor, output, .. } => {
                let m = fusion::discount(&fetch(&store, input)?, *factor).map_err(|e| PipelineError::Replay(e.to_string()))?;
                (output, m)
            }
            AuditEntry::Combine { rule, inputs, output } => {
                let ms = inputs.iter().map(|i| fetch(&store, i)).collect::<Result<Vec<_>, _>>()?;
                let m = if ms.len() == 1 {
                    ms[0].clone()
                } else {
                    fusion::combine(*rule, &ms).map_err(|e| PipelineError::Replay(e.to_string()))?
                };
                (output, m)
            }
            AuditEntry::Decide { .. } => continue,
        };
        let diff = value.max_abs_diff(&recorded(output)?);
        if diff > REPLAY_TOLERANCE {
            return Err(PipelineError::Replay(format!("`{output}` differs from its record by {diff:e}")));
        }
        store.insert(output.clone(), value);
    }
    fetch(&store, "final")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleDecision {
    pub rule: Rule,
    pub choice: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub decisions: Vec<RuleDecision>,
    pub diverges: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rules: Vec<Rule>,
    pub table: Vec<ComparisonRow>,
    pub divergent: bool,
    pub warnings: Vec<String>,
    pub reports: Vec<RunReport>,
}

/// One run per rule, sharing weights and mapped evaluations.
pub fn compare_rules(s: &Scenario, rules: &[Rule], opts: &RunOptions) -> Result<ComparisonReport, PipelineError> {
    let mut distinct: Vec<Rule> = Vec::new();
    for r in rules {
        if !distinct.contains(r) {
            distinct.push(*r);
        }
    }
    if distinct.len() < 2 {
        return Err(PipelineError::TooFewRules);
    }
    let mode = s.frame().mode();
    if let Some(r) = distinct.iter().find(|r| !r.supports(mode)) {
        return Err(PipelineError::RuleMode { rule: *r, mode });
    }
    let mut states: Vec<RunState> = Vec::with_capacity(distinct.len());
    for rule in &distinct {
        let o = RunOptions { rule: Some(*rule), ..*opts };
        let state = match states.first() {
            Some(first) => execute_incremental(s, &o, Some((first, StageSet::default())))?,
            None => execute(s, &o)?,
        };
        states.push(state);
    }
    let table: Vec<ComparisonRow> = Strategy::ALL
        .into_iter()
        .map(|strategy| {
            let decisions: Vec<RuleDecision> = states
                .iter()
                .map(|st| {
                    let d = st.profile.decision(strategy);
                    RuleDecision { rule: st.config.rule, choice: d.choice.clone(), value: d.value }
                })
                .collect();
            let diverges = decisions.iter().any(|d| d.choice != decisions[0].choice);
            ComparisonRow { strategy, decisions, diverges }
        })
        .collect();
    let warnings = table
        .iter()
        .filter(|r| r.diverges)
        .map(|r| {
            let parts: Vec<String> = r.decisions.iter().map(|d| format!("{} → {}", d.rule, d.choice)).collect();
            format!("{}: rules disagree ({})", r.strategy, parts.join(", "))
        })
        .collect::<Vec<_>>();
    let reports = states
        .iter()
        .zip(&distinct)
        .map(|(st, rule)| report(s, st, &RunOptions { rule: Some(*rule), ..*opts }))
        .collect();
    Ok(ComparisonReport { rules: distinct, divergent: !warnings.is_empty(), table, warnings, reports })
}
