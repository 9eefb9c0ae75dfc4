//! Decision frames of discernment and their set algebra.
//!
//! A [`FocalElement`] is stored in canonical disjunctive normal form: a sorted
//! antichain of intersection terms, each term a bitmask of atom ids. Under
//! [`Mode::Dst`] the atoms are exclusive so only single-atom terms survive;
//! under [`Mode::Dsmt`] (free model) multi-atom terms are genuine non-empty
//! intersections and the frame enumerates the whole hyper-power set.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_DST_ATOMS: usize = 6;
pub const MAX_DSMT_ATOMS: usize = 4;

/// Largest antichain width reachable within the atom bounds above
/// (6 singletons in DST, C(4,2) = 6 pair terms in DSmT).
const MAX_TERMS: usize = 6;

const RESERVED: [char; 4] = ['+', '.', '(', ')'];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame needs at least one atom")]
    NoAtoms,
    #[error("{count} atoms exceed the {mode} bound of {max}")]
    TooManyAtoms { count: usize, mode: Mode, max: usize },
    #[error("duplicate atom label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid atom label `{0}` (must be non-empty and free of `+ . ( )`)")]
    InvalidLabel(String),
    #[error("atom ids must be 0..n-1 in order; found {found} at position {position}")]
    BadAtomId { position: usize, found: usize },
    #[error("severity ranks must be a permutation of 0..n-1")]
    BadSeverityRanks,
    #[error("expression references unknown atom {0}")]
    UnknownAtom(String),
    #[error("`{0}` is an intersection of exclusive hypotheses and is not representable in a DST frame")]
    NotDstRepresentable(String),
    #[error("element does not belong to this frame")]
    ForeignElement,
    #[error("the empty element has no DSm cardinality")]
    EmptyElement,
    #[error("cannot parse element expression `{expr}`: {reason}")]
    Parse { expr: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dst,
    Dsmt,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Dst => f.write_str("dst"),
            Mode::Dsmt => f.write_str("dsmt"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub label: String,
    /// Ordinal position of the decision class; only used to break ties.
    pub severity_rank: usize,
}

impl Atom {
    /// Builds atoms from labels listed in increasing severity.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Vec<Atom> {
        labels
            .iter()
            .enumerate()
            .map(|(id, l)| Atom { id, label: l.as_ref().to_string(), severity_rank: id })
            .collect()
    }
}

/// Canonical union-of-intersections form.
///
/// Terms are non-zero atom bitmasks kept sorted ascending, with no term a
/// superset of another. The empty element has no terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FocalElement {
    terms: [u8; MAX_TERMS],
    len: u8,
}

impl FocalElement {
    pub const EMPTY: FocalElement = FocalElement { terms: [0; MAX_TERMS], len: 0 };

    pub fn terms(&self) -> &[u8] {
        &self.terms[..self.len as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Union of all atoms appearing in any term.
    pub fn atom_mask(&self) -> u8 {
        self.terms().iter().fold(0, |acc, t| acc | t)
    }

    /// Builds the canonical form from arbitrary terms (absorption + dedup).
    fn from_terms(raw: &[u8]) -> FocalElement {
        let mut kept: Vec<u8> = Vec::with_capacity(raw.len());
        for &t in raw {
            debug_assert!(t != 0);
            // t is absorbed if some kept term is a subset of it.
            if kept.iter().any(|&k| k & !t == 0) {
                continue;
            }
            kept.retain(|&k| t & !k != 0);
            kept.push(t);
        }
        kept.sort_unstable();
        assert!(kept.len() <= MAX_TERMS, "antichain wider than frame bounds allow");
        let mut terms = [0u8; MAX_TERMS];
        terms[..kept.len()].copy_from_slice(&kept);
        FocalElement { terms, len: kept.len() as u8 }
    }
}

impl fmt::Debug for FocalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self
            .terms()
            .iter()
            .map(|t| {
                (0..8)
                    .filter(|i| t & (1 << i) != 0)
                    .map(|i| format!("θ{}", i + 1))
                    .collect::<Vec<_>>()
                    .join("∩")
            })
            .collect();
        f.write_str(&parts.join("∪"))
    }
}

/// Union/intersection expression over atom ids, prior to canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Atom(usize),
    Union(Vec<Expr>),
    Inter(Vec<Expr>),
}

impl Expr {
    pub fn union(a: Expr, b: Expr) -> Expr {
        Expr::Union(vec![a, b])
    }

    pub fn inter(a: Expr, b: Expr) -> Expr {
        Expr::Inter(vec![a, b])
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    atoms: Vec<Atom>,
    mode: Mode,
    elements: Vec<FocalElement>,
    index: HashMap<FocalElement, usize>,
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.atoms == other.atoms
    }
}

impl Frame {
    pub fn build(atoms: Vec<Atom>, mode: Mode) -> Result<Frame, FrameError> {
        let n = atoms.len();
        if n == 0 {
            return Err(FrameError::NoAtoms);
        }
        let max = match mode {
            Mode::Dst => MAX_DST_ATOMS,
            Mode::Dsmt => MAX_DSMT_ATOMS,
        };
        if n > max {
            return Err(FrameError::TooManyAtoms { count: n, mode, max });
        }
        let mut ranks = vec![false; n];
        for (pos, atom) in atoms.iter().enumerate() {
            if atom.id != pos {
                return Err(FrameError::BadAtomId { position: pos, found: atom.id });
            }
            let label = atom.label.trim();
            if label.is_empty() || label != atom.label || atom.label.contains(RESERVED) || label == "Θ" {
                return Err(FrameError::InvalidLabel(atom.label.clone()));
            }
            if atoms[..pos].iter().any(|a| a.label == atom.label) {
                return Err(FrameError::DuplicateLabel(atom.label.clone()));
            }
            match ranks.get_mut(atom.severity_rank) {
                Some(seen @ false) => *seen = true,
                _ => return Err(FrameError::BadSeverityRanks),
            }
        }

        let mut elements = match mode {
            Mode::Dst => (1u8..(1u8 << n))
                .map(|set| {
                    let singles: Vec<u8> = (0..n).filter(|i| set & (1 << i) != 0).map(|i| 1u8 << i).collect();
                    FocalElement::from_terms(&singles)
                })
                .collect::<Vec<_>>(),
            Mode::Dsmt => enumerate_antichains(n),
        };
        let card = |e: &FocalElement| region_count(n, mode, e);
        elements.sort_by(|a, b| card(a).cmp(&card(b)).then_with(|| a.cmp(b)));
        let index = elements.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Ok(Frame { atoms, mode, elements, index })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// All non-empty elements in canonical order (DSm cardinality, then form).
    pub fn elements(&self) -> &[FocalElement] {
        &self.elements
    }

    pub fn index_of(&self, e: &FocalElement) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn contains(&self, e: &FocalElement) -> bool {
        e.is_empty() || self.index.contains_key(e)
    }

    fn check(&self, e: &FocalElement) -> Result<(), FrameError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(FrameError::ForeignElement)
        }
    }

    pub fn singleton(&self, atom: usize) -> FocalElement {
        assert!(atom < self.atoms.len(), "atom {atom} out of range");
        FocalElement::from_terms(&[1 << atom])
    }

    /// Total ignorance Θ: the union of every atom.
    pub fn total(&self) -> FocalElement {
        let singles: Vec<u8> = (0..self.atoms.len()).map(|i| 1u8 << i).collect();
        FocalElement::from_terms(&singles)
    }

    pub fn is_total(&self, e: &FocalElement) -> bool {
        *e == self.total()
    }

    /// Returns the atom id when `e` is a single atom.
    pub fn as_atom(&self, e: &FocalElement) -> Option<usize> {
        match e.terms() {
            [t] if t.count_ones() == 1 => Some(t.trailing_zeros() as usize),
            _ => None,
        }
    }

    pub fn canonicalize(&self, expr: &Expr) -> Result<FocalElement, FrameError> {
        let terms = self.expand(expr)?;
        if self.mode == Mode::Dst && terms.iter().any(|t| t.count_ones() > 1) {
            return Err(FrameError::NotDstRepresentable(self.label_terms(&terms)));
        }
        Ok(FocalElement::from_terms(&terms))
    }

    /// Expands to (absorbed) DNF terms without the DST exclusivity check.
    fn expand(&self, expr: &Expr) -> Result<Vec<u8>, FrameError> {
        match expr {
            Expr::Atom(id) => {
                if *id >= self.atoms.len() {
                    return Err(FrameError::UnknownAtom(format!("#{id}")));
                }
                Ok(vec![1 << id])
            }
            Expr::Union(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(self.expand(p)?);
                }
                Ok(absorb(out))
            }
            Expr::Inter(parts) => {
                let mut acc: Option<Vec<u8>> = None;
                for p in parts {
                    let rhs = self.expand(p)?;
                    acc = Some(match acc {
                        None => rhs,
                        Some(lhs) => absorb(lhs.iter().flat_map(|a| rhs.iter().map(move |b| a | b)).collect()),
                    });
                }
                Ok(acc.unwrap_or_default())
            }
        }
    }

    /// Lattice order: true when `b ≤ a`.
    pub fn includes(&self, a: &FocalElement, b: &FocalElement) -> Result<bool, FrameError> {
        self.check(a)?;
        self.check(b)?;
        Ok(le(b, a))
    }

    pub fn intersect(&self, a: &FocalElement, b: &FocalElement) -> Result<FocalElement, FrameError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.meet(a, b))
    }

    pub fn union(&self, a: &FocalElement, b: &FocalElement) -> Result<FocalElement, FrameError> {
        self.check(a)?;
        self.check(b)?;
        Ok(join(a, b))
    }

    /// Unchecked meet for elements already known to belong to this frame.
    pub(crate) fn meet(&self, a: &FocalElement, b: &FocalElement) -> FocalElement {
        let mut raw = [0u8; MAX_TERMS * MAX_TERMS];
        let mut n = 0;
        for &x in a.terms() {
            for &y in b.terms() {
                let t = x | y;
                if self.mode == Mode::Dst && t.count_ones() > 1 {
                    continue;
                }
                raw[n] = t;
                n += 1;
            }
        }
        FocalElement::from_terms(&raw[..n])
    }

    pub(crate) fn le(&self, b: &FocalElement, a: &FocalElement) -> bool {
        le(b, a)
    }

    pub fn dsm_cardinality(&self, e: &FocalElement) -> Result<usize, FrameError> {
        self.check(e)?;
        if e.is_empty() {
            return Err(FrameError::EmptyElement);
        }
        Ok(region_count(self.atoms.len(), self.mode, e))
    }

    /// Label expression, e.g. `HD2+HD3` (union) or `HD2.HD3` (intersection).
    pub(crate) fn regions(&self, e: &FocalElement) -> Vec<u8> {
        regions(self.atoms.len(), self.mode, e)
    }

    pub fn label(&self, e: &FocalElement) -> String {
        self.label_terms(e.terms())
    }

    fn label_terms(&self, terms: &[u8]) -> String {
        if terms.is_empty() {
            return "∅".to_string();
        }
        terms
            .iter()
            .map(|t| {
                (0..self.atoms.len())
                    .filter(|i| t & (1 << i) != 0)
                    .map(|i| self.atoms[i].label.as_str())
                    .collect::<Vec<_>>()
                    .join(".")
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Parses a label expression: `+` for union, `.` for intersection
    /// (binding tighter), parentheses, and `Θ` for total ignorance.
    pub fn parse_expr(&self, text: &str) -> Result<Expr, FrameError> {
        let mut p = ExprParser { frame: self, src: text, pos: 0 };
        let expr = p.union()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("trailing input"));
        }
        Ok(expr)
    }

    pub fn parse(&self, text: &str) -> Result<FocalElement, FrameError> {
        self.canonicalize(&self.parse_expr(text)?)
    }
}

fn absorb(raw: Vec<u8>) -> Vec<u8> {
    let mut kept: Vec<u8> = Vec::with_capacity(raw.len());
    for t in raw {
        if kept.iter().any(|&k| k & !t == 0) {
            continue;
        }
        kept.retain(|&k| t & !k != 0);
        kept.push(t);
    }
    kept
}

fn le(b: &FocalElement, a: &FocalElement) -> bool {
    b.terms().iter().all(|&tb| a.terms().iter().any(|&ta| ta & !tb == 0))
}

fn join(a: &FocalElement, b: &FocalElement) -> FocalElement {
    let mut raw = [0u8; 2 * MAX_TERMS];
    let (la, lb) = (a.terms().len(), b.terms().len());
    raw[..la].copy_from_slice(a.terms());
    raw[la..la + lb].copy_from_slice(b.terms());
    FocalElement::from_terms(&raw[..la + lb])
}

/// Number of Venn regions of the free model covered by `e` (atoms in DST).
fn region_count(n: usize, mode: Mode, e: &FocalElement) -> usize {
    regions(n, mode, e).len()
}

/// Venn regions covered by `e`, each given as the mask of atoms it lies in.
fn regions(n: usize, mode: Mode, e: &FocalElement) -> Vec<u8> {
    match mode {
        Mode::Dst => e.terms().to_vec(),
        Mode::Dsmt => (1u8..(1u8 << n))
            .filter(|&region| e.terms().iter().any(|&t| t & !region == 0))
            .collect(),
    }
}

fn enumerate_antichains(n: usize) -> Vec<FocalElement> {
    let masks: Vec<u8> = (1u8..(1u8 << n)).collect();
    let mut out = Vec::new();
    for pick in 1u32..(1u32 << masks.len()) {
        let chosen: Vec<u8> = (0..masks.len()).filter(|i| pick & (1 << i) != 0).map(|i| masks[i]).collect();
        let antichain = chosen
            .iter()
            .enumerate()
            .all(|(i, &x)| chosen[i + 1..].iter().all(|&y| x & !y != 0 && y & !x != 0));
        if antichain {
            out.push(FocalElement::from_terms(&chosen));
        }
    }
    out
}

struct ExprParser<'a> {
    frame: &'a Frame,
    src: &'a str,
    pos: usize,
}

impl ExprParser<'_> {
    fn err(&self, reason: &str) -> FrameError {
        FrameError::Parse { expr: self.src.to_string(), reason: format!("{reason} at byte {}", self.pos) }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn union(&mut self) -> Result<Expr, FrameError> {
        let mut parts = vec![self.inter()?];
        while self.peek() == Some('+') {
            self.pos += 1;
            parts.push(self.inter()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Union(parts) })
    }

    fn inter(&mut self) -> Result<Expr, FrameError> {
        let mut parts = vec![self.factor()?];
        while self.peek() == Some('.') {
            self.pos += 1;
            parts.push(self.factor()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Inter(parts) })
    }

    fn factor(&mut self) -> Result<Expr, FrameError> {
        match self.peek() {
            None => Err(self.err("unexpected end")),
            Some('(') => {
                self.pos += 1;
                let e = self.union()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(_) => {
                let rest = &self.src[self.pos..];
                let end = rest.find(|c: char| RESERVED.contains(&c)).unwrap_or(rest.len());
                let word = rest[..end].trim();
                if word.is_empty() {
                    return Err(self.err("expected atom label"));
                }
                self.pos += end;
                if word == "Θ" {
                    return Ok(Expr::Union((0..self.frame.atoms.len()).map(Expr::Atom).collect()));
                }
                self.frame
                    .atoms
                    .iter()
                    .find(|a| a.label == word)
                    .map(|a| Expr::Atom(a.id))
                    .ok_or_else(|| FrameError::UnknownAtom(word.to_string()))
            }
        }
    }
}
