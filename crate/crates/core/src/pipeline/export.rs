//! Tabular renderings of decision profiles.

use std::fmt::Write as _;

use crate::decision::DecisionProfile;
use crate::fusion::Rule;

use super::run::{ComparisonReport, RunReport};

pub const CSV_HEADER: [&str; 6] = ["rule", "element", "mass", "bel", "pl", "betp"];

fn profile_rows(rule: Rule, p: &DecisionProfile) -> Vec<[String; 6]> {
    p.elements
        .iter()
        .map(|e| {
            let betp = p.atoms.iter().find(|a| a.atom == e.element).map(|a| a.betp.to_string()).unwrap_or_default();
            [rule.to_string(), e.element.clone(), e.mass.to_string(), e.bel.to_string(), e.pl.to_string(), betp]
        })
        .collect()
}

fn write_csv<'a>(reports: impl IntoIterator<Item = &'a RunReport>) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        for row in profile_rows(r.config.rule, &r.profile) {
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// One row per frame element; `betp` is filled on atoms only.
pub fn report_csv(r: &RunReport) -> String {
    write_csv([r])
}

pub fn comparison_csv(c: &ComparisonReport) -> String {
    write_csv(&c.reports)
}

fn profile_table(out: &mut String, p: &DecisionProfile) {
    let width = p.elements.iter().map(|e| e.element.chars().count()).max().unwrap_or(7).max(7);
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}", "element", "m", "Bel", "Pl", "BetP");
    for e in &p.elements {
        let betp = p.atoms.iter().find(|a| a.atom == e.element).map(|a| format!("{:.4}", a.betp)).unwrap_or_default();
        let _ = writeln!(out, "{:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8}", e.element, e.mass, e.bel, e.pl, betp);
    }
    out.push('\n');
    for d in &p.decisions {
        let marker = if d.strategy == p.strategy { "*" } else { " " };
        let flag = if d.tie { " (tie)" } else if d.near_tie { " (near tie)" } else { "" };
        let _ = writeln!(out, "{marker} {:<9} {} ({:.4}){flag}", d.strategy.to_string(), d.choice, d.value);
    }
}

pub fn report_text(r: &RunReport) -> String {
    let mut out = String::new();
    if !r.scenario.is_empty() {
        let _ = writeln!(out, "scenario: {}", r.scenario);
    }
    let _ = writeln!(out, "rule: {}   strategy: {}", r.config.rule, r.config.strategy);
    let _ = writeln!(out, "\ncriterion weights");
    for w in r.weights.iter().filter(|w| w.leaf) {
        let _ = writeln!(out, "  {:<12} {:.4}", w.id, w.global_weight);
    }
    for c in &r.consistency {
        let _ = writeln!(out, "  CR({}) = {:.4}", c.id, c.consistency.cr);
    }
    out.push('\n');
    profile_table(&mut out, &r.profile);
    let _ = writeln!(out, "\ndecision: {}", r.profile.chosen);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn comparison_text(c: &ComparisonReport) -> String {
    let mut out = String::new();
    for r in &c.reports {
        let _ = writeln!(out, "== {} ==", r.config.rule);
        profile_table(&mut out, &r.profile);
        out.push('\n');
    }
    let _ = write!(out, "{:<9}", "strategy");
    for rule in &c.rules {
        let _ = write!(out, "  {:<12}", rule.to_string());
    }
    out.push('\n');
    for row in &c.table {
        let _ = write!(out, "{:<9}", row.strategy.to_string());
        for d in &row.decisions {
            let _ = write!(out, "  {:<12}", d.choice);
        }
        out.push_str(if row.diverges { "  ← differs\n" } else { "\n" });
    }
    for w in &c.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

