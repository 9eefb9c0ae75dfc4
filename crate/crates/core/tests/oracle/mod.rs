//! Brute-force reference implementations, written from the textbook
//! definitions and sharing no code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use ermcda_core::frame::{Atom, Frame, Mode};
use ermcda_core::mass::MassFunction;
use rand::Rng;

pub const LABELS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

pub fn frame(n: usize, mode: Mode) -> Arc<Frame> {
    Arc::new(Frame::build(Atom::from_labels(&LABELS[..n]), mode).unwrap())
}

/// DST bba as (atom bitmask, mass) pairs.
pub type Bba = Vec<(u8, f64)>;

pub fn random_bba<R: Rng>(rng: &mut R, atoms: usize) -> Bba {
    let full = (1u8 << atoms) - 1;
    let count = rng.gen_range(1..=4.min(full as usize));
    let mut picked: Vec<u8> = Vec::new();
    while picked.len() < count {
        let s = rng.gen_range(1..=full);
        if !picked.contains(&s) {
            picked.push(s);
        }
    }
    let raw: Vec<f64> = picked.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    picked.into_iter().zip(raw).map(|(s, m)| (s, m / total)).collect()
}

pub fn mask_label(mask: u8) -> String {
    (0..8).filter(|i| mask & (1 << i) != 0).map(|i| LABELS[i]).collect::<Vec<_>>().join("+")
}

pub fn to_mass(frame: &Arc<Frame>, bba: &Bba) -> MassFunction {
    let entries: Vec<(String, f64)> = bba.iter().map(|(s, m)| (mask_label(*s), *m)).collect();
    let total: f64 = bba.iter().map(|(_, m)| m).sum();
    // Renormalize exactly in case of rounding in the generator.
    let entries: Vec<(String, f64)> = entries.into_iter().map(|(l, m)| (l, m / total)).collect();
    MassFunction::from_labels(frame, &entries).unwrap()
}

/// Every tuple of focal elements, one per source, with its product mass.
fn tuples(sources: &[Bba]) -> Vec<(Vec<(u8, f64)>, f64)> {
    let mut out = vec![(vec![], 1.0)];
    for s in sources {
        let mut next = Vec::new();
        for (prefix, p) in &out {
            for (e, m) in s {
                let mut t = prefix.clone();
                t.push((*e, *m));
                next.push((t, p * m));
            }
        }
        out = next;
    }
    out
}

fn meet_all(t: &[(u8, f64)]) -> u8 {
    t.iter().fold(u8::MAX, |acc, (e, _)| acc & e)
}

/// Returns (masses on non-empty sets, conflict).
pub fn conjunctive(sources: &[Bba]) -> (BTreeMap<u8, f64>, f64) {
    let mut out = BTreeMap::new();
    let mut k = 0.0;
    for (t, p) in tuples(sources) {
        match meet_all(&t) {
            0 => k += p,
            x => *out.entry(x).or_insert(0.0) += p,
        }
    }
    (out, k)
}

pub fn dempster(sources: &[Bba]) -> Option<BTreeMap<u8, f64>> {
    let (m, k) = conjunctive(sources);
    if 1.0 - k < 1e-12 {
        return None;
    }
    Some(m.into_iter().map(|(e, v)| (e, v / (1.0 - k))).collect())
}

/// PCR6: each source's share of a conflicting product is proportional to
/// the mass it gave to its own element.
pub fn pcr6(sources: &[Bba]) -> BTreeMap<u8, f64> {
    let (mut out, _) = conjunctive(sources);
    for (t, p) in tuples(sources) {
        if meet_all(&t) != 0 {
            continue;
        }
        let denom: f64 = t.iter().map(|(_, m)| m).sum();
        for (e, m) in &t {
            *out.entry(*e).or_insert(0.0) += p * m / denom;
        }
    }
    out
}

/// PCR5 (general form): sources naming the same element are grouped and
/// each distinct element weighs the product of its sources' masses.
pub fn pcr5(sources: &[Bba]) -> BTreeMap<u8, f64> {
    let (mut out, _) = conjunctive(sources);
    for (t, p) in tuples(sources) {
        if meet_all(&t) != 0 {
            continue;
        }
        let mut groups: BTreeMap<u8, f64> = BTreeMap::new();
        for (e, m) in &t {
            *groups.entry(*e).or_insert(1.0) *= m;
        }
        let denom: f64 = groups.values().sum();
        for (e, w) in groups {
            *out.entry(e).or_insert(0.0) += p * w / denom;
        }
    }
    out
}

/// Largest per-element gap between the library result and an oracle map.
pub fn gap(frame: &Arc<Frame>, m: &MassFunction, oracle: &BTreeMap<u8, f64>, conflict: f64) -> f64 {
    let mut worst = (m.conflict() - conflict).abs();
    let full = (1u8 << frame.len_atoms()) - 1;
    for s in 1..=full {
        let e = frame.parse(&mask_label(s)).unwrap();
        let want = oracle.get(&s).copied().unwrap_or(0.0);
        worst = worst.max((m.mass(&e) - want).abs());
    }
    let covered: f64 = m.focal().iter().map(|(_, v)| v).sum::<f64>() + m.conflict();
    worst.max((covered - (oracle.values().sum::<f64>() + conflict)).abs())
}

/// Hyper-power set elements as monotone Boolean functions: each element is
/// the up-closed set of Venn regions (non-empty atom subsets) it covers,
/// encoded as a bitset over regions 1..2^n.
pub mod lattice {
    pub fn regions(n: usize) -> Vec<u8> {
        (1u8..(1u8 << n)).collect()
    }

    /// Non-empty up-sets of the region poset (excludes constants 0 and 1).
    pub fn free_elements(n: usize) -> Vec<u32> {
        let rs = regions(n);
        let count = rs.len();
        (1u32..(1u32 << count))
            .filter(|set| {
                (0..count).all(|i| {
                    set & (1 << i) == 0
                        || (0..count).all(|j| rs[i] & !rs[j] != 0 || set & (1 << j) != 0)
                })
            })
            .collect()
    }

    /// Region bitset of an element given in disjunctive form.
    pub fn of_terms(n: usize, terms: &[u8]) -> u32 {
        let rs = regions(n);
        rs.iter()
            .enumerate()
            .filter(|(_, r)| terms.iter().any(|t| t & !**r == 0))
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    /// DST elements are unions of atoms: only single-atom regions exist.
    pub fn of_terms_dst(terms: &[u8]) -> u32 {
        terms.iter().fold(0, |acc, t| acc | *t as u32)
    }
}

/// Midpoint-rule integration of piecewise-linear memberships.
pub mod integrate {
    use rand::Rng;

    pub const STEP: f64 = 1e-6;

    #[derive(Clone, Copy, Debug)]
    pub struct Trap(pub f64, pub f64, pub f64, pub f64);

    impl Trap {
        pub fn mu(&self, x: f64) -> f64 {
            let Trap(a, b, c, d) = *self;
            if x < a || x > d {
                0.0
            } else if x < b {
                (x - a) / (b - a)
            } else if x <= c {
                1.0
            } else {
                (d - x) / (d - c)
            }
        }
    }

    /// Per-class surface and per-adjacent-pair min-overlap surface on [lo, hi].
    pub fn surfaces(classes: &[Trap], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let steps = ((hi - lo) / STEP).ceil().max(1.0) as usize;
        let h = (hi - lo) / steps as f64;
        let mut own = vec![0.0; classes.len()];
        let mut shared = vec![0.0; classes.len().saturating_sub(1)];
        let mut mu = vec![0.0; classes.len()];
        for i in 0..steps {
            let x = lo + (i as f64 + 0.5) * h;
            for (k, c) in classes.iter().enumerate() {
                mu[k] = c.mu(x);
                own[k] += mu[k];
            }
            for k in 0..shared.len() {
                shared[k] += mu[k].min(mu[k + 1]);
            }
        }
        own.iter_mut().chain(shared.iter_mut()).for_each(|v| *v *= h);
        (own, shared)
    }

    /// Random fuzzy partition of [0, 1]: four increasing cut points per
    /// boundary give p.c < q.a < p.d < q.b.
    pub fn random_partition<R: Rng>(rng: &mut R, classes: usize) -> Vec<Trap> {
        let gaps = classes - 1;
        let mut cuts = Vec::new();
        for k in 0..gaps {
            let (lo, hi) = (k as f64 / gaps as f64, (k + 1) as f64 / gaps as f64);
            let mut s: Vec<f64> = (0..4).map(|_| rng.gen_range(lo + 0.01..hi - 0.01)).collect();
            s.sort_by(f64::total_cmp);
            cuts.push(s);
        }
        let inf = f64::INFINITY;
        (0..classes)
            .map(|k| {
                let (a, b) = if k == 0 { (-inf, -inf) } else { (cuts[k - 1][1], cuts[k - 1][3]) };
                let (c, d) = if k == gaps { (inf, inf) } else { (cuts[k][0], cuts[k][2]) };
                Trap(a, b, c, d)
            })
            .collect()
    }
}

/// Dense eigen-solver reference for λ_max.
pub mod eigen {
    use nalgebra::DMatrix;

    pub fn lambda_max(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}
