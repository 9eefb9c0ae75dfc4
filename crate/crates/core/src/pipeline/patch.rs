//! Sparse JSON-pointer patches and incremental what-if runs.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::run::{execute_incremental, stages_touched, PipelineError, RunOptions, RunState, StageSet};
use super::scenario::{load_value, LoadError, Scenario};

/// Replace the value at `path`, or add a new member to an existing object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchOp {
    pub path: String,
    pub value: Value,
}

#[derive(Debug, Error)]
pub enum WhatIfError {
    #[error("patch path `{0}` does not exist")]
    BadPath(String),
    #[error(transparent)]
    Invalid(#[from] LoadError),
    #[error(transparent)]
    Run(#[from] PipelineError),
}

fn unescape(token: &str) -> String {
    token.replace("~1", "/").replace("~0", "~")
}

pub fn apply_patch(doc: &Value, ops: &[PatchOp]) -> Result<Value, WhatIfError> {
    let mut out = doc.clone();
    for op in ops {
        if op.path.is_empty() {
            out = op.value.clone();
            continue;
        }
        if let Some(target) = out.pointer_mut(&op.path) {
            *target = op.value.clone();
            continue;
        }
        let (parent, last) = op.path.rsplit_once('/').ok_or_else(|| WhatIfError::BadPath(op.path.clone()))?;
        match out.pointer_mut(parent) {
            Some(Value::Object(map)) => {
                map.insert(unescape(last), op.value.clone());
            }
            _ => return Err(WhatIfError::BadPath(op.path.clone())),
        }
    }
    Ok(out)
}

/// Applies `ops` to a copy of `base` and runs it, recomputing only the
/// stages downstream of the patched paths when `previous` (the state of
/// `base` under the same options) is available.
pub fn whatif(
    base: &Scenario,
    previous: Option<&RunState>,
    ops: &[PatchOp],
    opts: &RunOptions,
) -> Result<(Scenario, RunState), WhatIfError> {
    let doc = serde_json::to_value(base.doc()).expect("scenario documents always serialize");
    let patched = load_value(apply_patch(&doc, ops)?)?;
    let dirty = ops.iter().fold(StageSet::default(), |acc, op| acc.union(stages_touched(&op.path)));
    let state = execute_incremental(&patched, opts, previous.map(|p| (p, dirty)))?;
    Ok((patched, state))
}
