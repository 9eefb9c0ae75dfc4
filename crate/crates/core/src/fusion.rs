//! Combination rules, discounting and the two fusion levels.
//!
//! Level one fuses, per criterion, the evaluations of every source after
//! discounting each by its reliability. Level two treats every criterion as a
//! source discounted by its importance and fuses across criteria.
//!
//! PCR rules are evaluated in one pass over all n-tuples of focal elements;
//! they are not associative and must never be chained pairwise.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{FocalElement, Frame, Mode};
use crate::mass::MassFunction;

/// Dempster refuses to normalize when conflict reaches `1 − this`.
pub const TOTAL_CONFLICT_MARGIN: f64 = 1e-12;
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("discount factor {0} is outside [0, 1]")]
    FactorOutOfRange(f64),
    #[error("nothing to combine")]
    Empty,
    #[error("mass functions are defined on different frames")]
    MixedFrames,
    #[error("total conflict (K = {k}); Dempster's rule is undefined")]
    TotalConflict { k: f64 },
    #[error("rule `{rule}` cannot be used on a {mode} frame")]
    RuleModeMismatch { rule: Rule, mode: Mode },
    #[error("rule `{0}` expects normalized inputs (no mass on the empty set)")]
    UnnormalizedInput(Rule),
    #[error("criterion weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("unknown rule `{0}` (expected dempster, conjunctive, pcr5, pcr6 or dsm)")]
    UnknownRule(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "dempster")]
    Dempster,
    #[serde(rename = "conjunctive")]
    Conjunctive,
    #[serde(rename = "pcr5")]
    Pcr5,
    #[serde(rename = "pcr6")]
    Pcr6,
    #[serde(rename = "dsm")]
    DsmClassic,
}

impl Rule {
    pub const ALL: [Rule; 5] = [Rule::Dempster, Rule::Conjunctive, Rule::Pcr5, Rule::Pcr6, Rule::DsmClassic];

    pub fn name(&self) -> &'static str {
        match self {
            Rule::Dempster => "dempster",
            Rule::Conjunctive => "conjunctive",
            Rule::Pcr5 => "pcr5",
            Rule::Pcr6 => "pcr6",
            Rule::DsmClassic => "dsm",
        }
    }

    pub fn supports(&self, mode: Mode) -> bool {
        !matches!((self, mode), (Rule::Dempster, Mode::Dsmt) | (Rule::DsmClassic, Mode::Dst))
    }

    pub fn check_mode(&self, mode: Mode) -> Result<(), FusionError> {
        if self.supports(mode) {
            Ok(())
        } else {
            Err(FusionError::RuleModeMismatch { rule: *self, mode })
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| FusionError::UnknownRule(s.to_string()))
    }
}

/// Turns normalized criterion weights into importance discount factors.
pub trait ImportanceDiscounting {
    fn factors(&self, weights: &[f64]) -> Vec<f64>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportanceStrategy {
    /// Shafer discounting with β = w / max(w).
    #[default]
    ShaferDiscount,
    None,
}

impl ImportanceDiscounting for ImportanceStrategy {
    fn factors(&self, weights: &[f64]) -> Vec<f64> {
        match self {
            ImportanceStrategy::ShaferDiscount => {
                let max = weights.iter().copied().fold(0.0, f64::max);
                weights.iter().map(|w| if max > 0.0 { w / max } else { 0.0 }).collect()
            }
            ImportanceStrategy::None => vec![1.0; weights.len()],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub rule: Rule,
    #[serde(default)]
    pub importance: ImportanceStrategy,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { rule: Rule::Pcr6, importance: ImportanceStrategy::ShaferDiscount }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: String,
    pub reliability: f64,
}

/// Classical discounting: scales every mass by `alpha` and moves `1 − alpha`
/// to total ignorance.
pub fn discount(m: &MassFunction, alpha: f64) -> Result<MassFunction, FusionError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(FusionError::FactorOutOfRange(alpha));
    }
    if alpha == 1.0 {
        return Ok(m.clone());
    }
    let frame = m.frame();
    let total = frame.total();
    let mut out: BTreeMap<FocalElement, f64> = m.iter().map(|(e, v)| (*e, alpha * v)).collect();
    *out.entry(total).or_insert(0.0) += 1.0 - alpha;
    Ok(MassFunction::from_accumulated(frame, out, alpha * m.conflict()))
}

fn common_frame(ms: &[MassFunction]) -> Result<&Arc<Frame>, FusionError> {
    let first = ms.first().ok_or(FusionError::Empty)?;
    if ms.iter().any(|m| !m.same_frame(first)) {
        return Err(FusionError::MixedFrames);
    }
    Ok(first.frame())
}

fn require_normalized(rule: Rule, ms: &[MassFunction]) -> Result<(), FusionError> {
    if ms.iter().all(MassFunction::is_normalized) {
        Ok(())
    } else {
        Err(FusionError::UnnormalizedInput(rule))
    }
}

/// Unnormalized conjunctive raw accumulation; returns (masses, m(∅)).
fn conjunctive_raw(frame: &Frame, ms: &[MassFunction]) -> (BTreeMap<FocalElement, f64>, f64) {
    let mut acc: BTreeMap<FocalElement, f64> = ms[0].iter().map(|(e, v)| (*e, *v)).collect();
    let mut conflict = ms[0].conflict();
    for m in &ms[1..] {
        let mut next = BTreeMap::new();
        let mut next_conflict = conflict * m.total();
        for (a, va) in &acc {
            next_conflict += va * m.conflict();
            for (b, vb) in m.iter() {
                let c = frame.meet(a, b);
                if c.is_empty() {
                    next_conflict += va * vb;
                } else {
                    *next.entry(c).or_insert(0.0) += va * vb;
                }
            }
        }
        acc = next;
        conflict = next_conflict;
    }
    (acc, conflict)
}

/// Unnormalized conjunctive rule; conflict stays on ∅.
pub fn conjunctive(ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    let frame = common_frame(ms)?;
    if ms.len() == 1 {
        return Ok(ms[0].clone());
    }
    let (acc, conflict) = conjunctive_raw(frame, ms);
    Ok(MassFunction::from_accumulated(frame, acc, conflict))
}

pub fn dempster(ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    let frame = common_frame(ms)?;
    Rule::Dempster.check_mode(frame.mode())?;
    let (acc, k) = if ms.len() == 1 {
        (ms[0].iter().map(|(e, v)| (*e, *v)).collect(), ms[0].conflict())
    } else {
        conjunctive_raw(frame, ms)
    };
    if k >= 1.0 - TOTAL_CONFLICT_MARGIN {
        return Err(FusionError::TotalConflict { k });
    }
    let norm = 1.0 - k;
    let normalized = acc.into_iter().map(|(e, v)| (e, v / norm)).collect();
    Ok(MassFunction::from_accumulated(frame, normalized, 0.0))
}

/// Classic DSm rule: conjunctive combination on the free hyper-power set.
pub fn dsm_classic(ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    let frame = common_frame(ms)?;
    Rule::DsmClassic.check_mode(frame.mode())?;
    require_normalized(Rule::DsmClassic, ms)?;
    conjunctive(ms)
}

#[derive(Clone, Copy)]
enum PcrWeighting {
    /// PCR6: each involved element weighted by the sum of its masses.
    Sum,
    /// PCR5: each involved element weighted by the product of its masses.
    Product,
}

pub fn pcr5(ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    require_normalized(Rule::Pcr5, ms)?;
    pcr(ms, PcrWeighting::Product)
}

pub fn pcr6(ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    require_normalized(Rule::Pcr6, ms)?;
    pcr(ms, PcrWeighting::Sum)
}

fn pcr(ms: &[MassFunction], weighting: PcrWeighting) -> Result<MassFunction, FusionError> {
    let frame = common_frame(ms)?;
    if ms.len() == 1 {
        return Ok(ms[0].clone());
    }
    let focal: Vec<Vec<(FocalElement, f64)>> = ms.iter().map(|m| m.iter().map(|(e, v)| (*e, *v)).collect()).collect();
    let mut acc: BTreeMap<FocalElement, f64> = BTreeMap::new();
    let mut idx = vec![0usize; focal.len()];
    // Distinct elements of a conflicting tuple with their aggregated weight.
    let mut groups: Vec<(FocalElement, f64)> = Vec::with_capacity(focal.len());
    'tuples: loop {
        let (mut meet, mut product) = focal[0][idx[0]];
        for (s, &i) in idx.iter().enumerate().skip(1) {
            let (e, v) = focal[s][i];
            meet = frame.meet(&meet, &e);
            product *= v;
        }
        if !meet.is_empty() {
            *acc.entry(meet).or_insert(0.0) += product;
        } else {
            groups.clear();
            for (s, &i) in idx.iter().enumerate() {
                let (e, v) = focal[s][i];
                match groups.iter_mut().find(|(g, _)| *g == e) {
                    Some((_, w)) => match weighting {
                        PcrWeighting::Sum => *w += v,
                        PcrWeighting::Product => *w *= v,
                    },
                    None => groups.push((e, v)),
                }
            }
            let denom: f64 = groups.iter().map(|(_, w)| w).sum();
            for (e, w) in &groups {
                *acc.entry(*e).or_insert(0.0) += product * w / denom;
            }
        }
        // Odometer over the cartesian product of focal sets.
        for s in (0..idx.len()).rev() {
            idx[s] += 1;
            if idx[s] < focal[s].len() {
                continue 'tuples;
            }
            idx[s] = 0;
        }
        break;
    }
    Ok(MassFunction::from_accumulated(frame, acc, 0.0))
}

pub fn combine(rule: Rule, ms: &[MassFunction]) -> Result<MassFunction, FusionError> {
    let frame = common_frame(ms)?;
    rule.check_mode(frame.mode())?;
    match rule {
        Rule::Dempster => dempster(ms),
        Rule::Conjunctive => conjunctive(ms),
        Rule::Pcr5 => pcr5(ms),
        Rule::Pcr6 => pcr6(ms),
        Rule::DsmClassic => dsm_classic(ms),
    }
}

/// Intermediate values of one fusion level, kept for audit trails.
#[derive(Clone, Debug)]
pub struct FusionTrace {
    pub factors: Vec<f64>,
    pub discounted: Vec<MassFunction>,
    pub result: MassFunction,
}

/// Level one: reliability discounting then combination of all sources that
/// evaluated one criterion.
pub fn fuse_sources(
    criterion: &str,
    evaluations: &[(SourceSpec, MassFunction)],
    cfg: &FusionConfig,
) -> Result<MassFunction, FusionError> {
    fuse_sources_traced(criterion, evaluations, cfg).map(|t| t.result)
}

pub fn fuse_sources_traced(
    _criterion: &str,
    evaluations: &[(SourceSpec, MassFunction)],
    cfg: &FusionConfig,
) -> Result<FusionTrace, FusionError> {
    let factors: Vec<f64> = evaluations.iter().map(|(s, _)| s.reliability).collect();
    let bbas: Vec<MassFunction> = evaluations.iter().map(|(_, m)| m.clone()).collect();
    discount_and_combine(cfg.rule, factors, &bbas)
}

/// Level two: every criterion acts as a source discounted by importance.
pub fn fuse_criteria(criteria: &[(String, f64, MassFunction)], cfg: &FusionConfig) -> Result<MassFunction, FusionError> {
    fuse_criteria_traced(criteria, cfg.rule, &cfg.importance).map(|t| t.result)
}

pub fn fuse_criteria_traced(
    criteria: &[(String, f64, MassFunction)],
    rule: Rule,
    importance: &dyn ImportanceDiscounting,
) -> Result<FusionTrace, FusionError> {
    if criteria.is_empty() {
        return Err(FusionError::Empty);
    }
    let weights: Vec<f64> = criteria.iter().map(|(_, w, _)| *w).collect();
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(FusionError::WeightSum { sum });
    }
    let factors = importance.factors(&weights);
    let bbas: Vec<MassFunction> = criteria.iter().map(|(_, _, m)| m.clone()).collect();
    discount_and_combine(rule, factors, &bbas)
}

fn discount_and_combine(rule: Rule, factors: Vec<f64>, bbas: &[MassFunction]) -> Result<FusionTrace, FusionError> {
    let frame = common_frame(bbas)?;
    rule.check_mode(frame.mode())?;
    let discounted = bbas
        .iter()
        .zip(&factors)
        .map(|(m, f)| discount(m, *f))
        .collect::<Result<Vec<_>, _>>()?;
    let result = if discounted.len() == 1 { discounted[0].clone() } else { combine(rule, &discounted)? };
    Ok(FusionTrace { factors, discounted, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Atom;

    fn dst(n: usize) -> Arc<Frame> {
        let labels: Vec<String> = ["A", "B", "C", "D"][..n].iter().map(|s| s.to_string()).collect();
        Arc::new(Frame::build(Atom::from_labels(&labels), Mode::Dst).unwrap())
    }

    fn bba(f: &Arc<Frame>, entries: &[(&str, f64)]) -> MassFunction {
        MassFunction::from_labels(f, entries).unwrap()
    }

    fn assert_masses(m: &MassFunction, expected: &[(&str, f64)], tol: f64) {
        let f = m.frame();
        for (label, v) in expected {
            let e = f.parse(label).unwrap();
            assert!((m.mass(&e) - v).abs() <= tol, "{label}: got {}, want {v}", m.mass(&e));
        }
    }

    #[test]
    fn discount_examples() {
        let f = dst(4);
        let m = bba(&f, &[("D", 1.0)]);
        assert_eq!(discount(&m, 1.0).unwrap(), m);
        assert!(discount(&m, 0.0).unwrap().is_vacuous());
        assert_masses(&discount(&m, 0.8).unwrap(), &[("D", 0.8), ("A+B+C+D", 0.2)], 1e-15);
        assert_eq!(discount(&m, 1.2), Err(FusionError::FactorOutOfRange(1.2)));
    }

    #[test]
    fn conjunctive_examples() {
        let f = dst(2);
        let m = bba(&f, &[("A", 0.6), ("B", 0.4)]);
        assert_eq!(conjunctive(&[MassFunction::vacuous(&f), m.clone()]).unwrap(), m);
        let total = conjunctive(&[bba(&f, &[("A", 1.0)]), bba(&f, &[("B", 1.0)])]).unwrap();
        assert_eq!(total.conflict(), 1.0);
        let c = conjunctive(&[m, bba(&f, &[("A", 0.2), ("B", 0.8)])]).unwrap();
        assert_masses(&c, &[("A", 0.12), ("B", 0.32)], 1e-15);
        assert!((c.conflict() - 0.56).abs() < 1e-15);
    }

    #[test]
    fn dempster_examples() {
        let f = dst(2);
        let d = dempster(&[bba(&f, &[("A", 0.6), ("B", 0.4)]), bba(&f, &[("A", 0.2), ("B", 0.8)])]).unwrap();
        assert_masses(&d, &[("A", 0.12 / 0.44), ("B", 0.32 / 0.44)], 1e-12);
        let v = MassFunction::vacuous(&f);
        assert_eq!(dempster(&[v.clone(), v.clone()]).unwrap(), v);
        assert!(matches!(
            dempster(&[bba(&f, &[("A", 1.0)]), bba(&f, &[("B", 1.0)])]),
            Err(FusionError::TotalConflict { .. })
        ));
    }

    #[test]
    fn pcr6_hand_redistribution() {
        let f = dst(2);
        let r = pcr6(&[bba(&f, &[("A", 0.6), ("B", 0.4)]), bba(&f, &[("A", 0.2), ("B", 0.8)])]).unwrap();
        let a = 0.12 + 0.48 * 0.6 / 1.4 + 0.08 * 0.2 / 0.6;
        let b = 0.32 + 0.48 * 0.8 / 1.4 + 0.08 * 0.4 / 0.6;
        assert_masses(&r, &[("A", a), ("B", b)], 1e-12);
        assert!((r.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pcr5_weights_repeated_elements_by_product() {
        // Three sources, two of which back A: the conflicting product
        // 0.5·0.5·1.0 is split 0.25 : 1.0 under PCR5 and 1.0 : 1.0 under PCR6.
        let f = dst(2);
        let ms = [bba(&f, &[("A", 0.5), ("A+B", 0.5)]), bba(&f, &[("A", 0.5), ("A+B", 0.5)]), bba(&f, &[("B", 1.0)])];
        let r5 = pcr5(&ms).unwrap();
        let r6 = pcr6(&ms).unwrap();
        // (A,A,B) conflicts with product .25; (A,AB,B) and (AB,A,B) conflict
        // with product .25 over three distinct elements; (AB,AB,B) lands on B.
        assert_masses(&r5, &[("A", 0.25 * 0.25 / 1.25 + 0.125), ("A+B", 0.125), ("B", 0.2 + 0.25 + 0.25)], 1e-12);
        assert_masses(&r6, &[("A", 0.125 + 0.125), ("A+B", 0.125), ("B", 0.125 + 0.25 + 0.25)], 1e-12);
    }

    #[test]
    fn dsm_classic_examples() {
        let f = Arc::new(Frame::build(Atom::from_labels(&["A", "B"]), Mode::Dsmt).unwrap());
        let r = dsm_classic(&[bba(&f, &[("A", 1.0)]), bba(&f, &[("B", 1.0)])]).unwrap();
        assert_masses(&r, &[("A.B", 1.0)], 0.0);
        let m = bba(&f, &[("A", 0.3), ("A+B", 0.7)]);
        assert_eq!(dsm_classic(&[MassFunction::vacuous(&f), m.clone()]).unwrap(), m);
        let d = dst(2);
        assert!(matches!(
            dsm_classic(&[MassFunction::vacuous(&d), MassFunction::vacuous(&d)]),
            Err(FusionError::RuleModeMismatch { .. })
        ));
        assert!(matches!(dempster(&[m.clone(), m]), Err(FusionError::RuleModeMismatch { .. })));
    }

    #[test]
    fn mixed_frames_rejected() {
        let (a, b) = (dst(2), dst(3));
        let r = conjunctive(&[MassFunction::vacuous(&a), MassFunction::vacuous(&b)]);
        assert_eq!(r, Err(FusionError::MixedFrames));
        assert_eq!(conjunctive(&[]), Err(FusionError::Empty));
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.name()));
        }
        assert!("yager".parse::<Rule>().is_err());
    }

    #[test]
    fn fuse_sources_examples() {
        let f = dst(4);
        let cfg = FusionConfig { rule: Rule::Dempster, ..Default::default() };
        let m = bba(&f, &[("A", 0.3), ("B+C", 0.7)]);
        let one = fuse_sources("c", &[(SourceSpec { id: "s".into(), reliability: 1.0 }, m.clone())], &cfg).unwrap();
        assert_eq!(one, m);
        let hd4 = bba(&f, &[("D", 1.0)]);
        let src = |id: &str| SourceSpec { id: id.into(), reliability: 1.0 };
        let two = fuse_sources("c", &[(src("a"), hd4.clone()), (src("b"), hd4.clone())], &cfg).unwrap();
        assert_eq!(two, hd4);
        assert_eq!(fuse_sources("c", &[], &cfg), Err(FusionError::Empty));
    }

    #[test]
    fn fuse_criteria_examples() {
        let f = dst(3);
        let cfg = FusionConfig { rule: Rule::Pcr6, importance: ImportanceStrategy::ShaferDiscount };
        let m = bba(&f, &[("A", 0.6), ("B+C", 0.4)]);
        assert_eq!(fuse_criteria(&[("x".into(), 1.0, m.clone())], &cfg).unwrap(), m);

        let equal = fuse_criteria(&[("x".into(), 0.5, m.clone()), ("y".into(), 0.5, m.clone())], &cfg).unwrap();
        assert_eq!(equal, pcr6(&[m.clone(), m.clone()]).unwrap());

        let trace = fuse_criteria_traced(&[("x".into(), 0.75, m.clone()), ("y".into(), 0.25, m.clone())], cfg.rule, &cfg.importance)
            .unwrap();
        assert_eq!(trace.factors, vec![1.0, 1.0 / 3.0]);
        assert!((trace.discounted[1].mass(&f.total()) - 2.0 / 3.0).abs() < 1e-12);

        assert!(matches!(
            fuse_criteria(&[("x".into(), 0.5, m.clone())], &cfg),
            Err(FusionError::WeightSum { .. })
        ));
    }
}
