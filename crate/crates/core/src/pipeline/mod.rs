//! Scenario documents, validation and the end-to-end run: weights, mapping,
//! per-criterion source fusion, fusion across criteria, decision.

mod export;
mod patch;
mod run;
mod scenario;

pub use export::{comparison_csv, comparison_text, report_csv, report_text, CSV_HEADER};
pub use patch::{apply_patch, whatif, PatchOp, WhatIfError};
pub use run::{
    compare_rules, execute, execute_incremental, replay, report, report_frame, run, run_with, stages_touched, AuditEntry,
    AuditLog, ComparisonReport, ComparisonRow, CriteriaFusion, CriteriaFusionReport, EffectiveConfig, MappedEvaluation,
    MappedReport, PipelineError, RuleDecision, RunOptions, RunReport, RunState, SourceFusion, SourceFusionReport, Stage,
    StageFailure, StageSet, REPLAY_TOLERANCE, REPORT_SCHEMA,
};
pub use scenario::{
    load_scenario, load_value, to_json, AtomDoc, Bound, ClassDoc, DecisionConfig, Evaluation, EvaluationDoc, EvaluationInput,
    FrameDoc, Issue, LeafModel, LevelDoc, LoadError, MappingDoc, NodeDoc, Scenario, ScenarioDoc, SourceDoc, SCENARIO_SCHEMA,
    SCHEMA_VERSION,
};
