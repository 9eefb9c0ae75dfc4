#![allow(dead_code)]

use std::path::PathBuf;

use ermcda_core::pipeline::{apply_patch, load_value, PatchOp};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn scenario_doc(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

const CHOICES: &[(&str, &[&str])] = &[
    ("/fusion/rule", &["dempster", "conjunctive", "pcr5", "pcr6"]),
    ("/fusion/importance", &["shafer-discount", "none"]),
    ("/decision/strategy", &["max-bba", "max-bel", "max-pl", "max-betp"]),
    ("/decision/tie_break", &["higher-severity", "lower-severity"]),
];

fn leaves(v: &Value, path: String, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| leaves(x, format!("{path}/{k}"), out)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| leaves(x, format!("{path}/{i}"), out)),
        _ => out.push((path, v.clone())),
    }
}

fn labels_for(doc: &Value, eval: &str) -> Vec<String> {
    let crit = doc.pointer(&format!("{eval}/criterion")).and_then(Value::as_str).unwrap_or_default();
    doc.pointer(&format!("/mappings/{crit}/labels"))
        .and_then(Value::as_object)
        .map(|m| m.keys().cloned().collect())
        .unwrap_or_default()
}

fn tweak<R: Rng>(rng: &mut R, doc: &Value, path: &str, old: &Value) -> Option<Value> {
    if let Some((_, opts)) = CHOICES.iter().find(|(p, _)| *p == path) {
        return Some(Value::from(*opts.choose(rng)?));
    }
    if let Some(eval) = path.strip_suffix("/label").filter(|p| p.starts_with("/evaluations/")) {
        return Some(Value::from(labels_for(doc, eval).choose(rng)?.clone()));
    }
    let x = old.as_f64()?;
    let y = if (0.0..=1.0).contains(&x) && !path.contains("/trapezoid/") && !path.contains("/intervals/") {
        rng.gen_range(0.0..=1.0)
    } else if rng.gen_bool(0.5) {
        x * rng.gen_range(0.5..1.5)
    } else {
        x + rng.gen_range(-2.0..2.0)
    };
    Some(Value::from((y * 1e4).round() / 1e4))
}

/// A random single-field patch that keeps `doc` valid.
pub fn random_patch<R: Rng>(rng: &mut R, doc: &Value) -> PatchOp {
    let mut fields = Vec::new();
    leaves(doc, String::new(), &mut fields);
    fields.retain(|(p, v)| v.is_number() || CHOICES.iter().any(|(c, _)| c == p) || p.ends_with("/label") && p.starts_with("/evaluations/"));
    loop {
        let (path, old) = fields.choose(rng).unwrap();
        let Some(value) = tweak(rng, doc, path, old) else { continue };
        if value == *old {
            continue;
        }
        let op = PatchOp { path: path.clone(), value };
        let ok = apply_patch(doc, std::slice::from_ref(&op)).ok().and_then(|d| load_value(d).ok()).is_some();
        if ok {
            return op;
        }
    }
}
