mod oracle;

use std::collections::BTreeMap;

use ermcda_core::ahp::{self, CriterionKind, CriterionNode, Hierarchy, PairwiseMatrix, Prioritization};
use ermcda_core::frame::{FocalElement, Mode};
use ermcda_core::fusion::{self, Rule};
use ermcda_core::mapping::{MappingModel, MappingOptions, OverlapPolicy, Trapezoid};
use ermcda_core::possibility::{NumericInterval, PossibilityDistribution};
use oracle::integrate::{surfaces, Trap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn fusion_rules_match_term_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let atoms = rng.gen_range(1..=4);
        let n_src = rng.gen_range(2..=4);
        let f = oracle::frame(atoms, Mode::Dst);
        let raw: Vec<oracle::Bba> = (0..n_src).map(|_| oracle::random_bba(&mut rng, atoms)).collect();
        let ms: Vec<_> = raw.iter().map(|b| oracle::to_mass(&f, b)).collect();
        // Oracle runs on exactly the masses the library sees.
        let raw: Vec<oracle::Bba> = ms
            .iter()
            .map(|m| m.focal().iter().map(|(e, v)| (e.atom_mask(), *v)).collect())
            .collect();

        let (conj, k) = oracle::conjunctive(&raw);
        let g = oracle::gap(&f, &fusion::conjunctive(&ms).unwrap(), &conj, k);
        assert!(g < 1e-9, "case {case}: conjunctive gap {g}");
        worst = worst.max(g);

        match (oracle::dempster(&raw), fusion::dempster(&ms)) {
            (Some(o), Ok(m)) => {
                let g = oracle::gap(&f, &m, &o, 0.0);
                assert!(g < 1e-9, "case {case}: dempster gap {g}");
                worst = worst.max(g);
            }
            (None, Err(_)) => {}
            (o, m) => panic!("case {case}: oracle {o:?} vs library {m:?}"),
        }
        let p6 = fusion::pcr6(&ms).unwrap();
        let g = oracle::gap(&f, &p6, &oracle::pcr6(&raw), 0.0);
        assert!(g < 1e-9, "case {case}: pcr6 gap {g}");
        let p5 = fusion::pcr5(&ms).unwrap();
        let g5 = oracle::gap(&f, &p5, &oracle::pcr5(&raw), 0.0);
        assert!(g5 < 1e-9, "case {case}: pcr5 gap {g5}");
        worst = worst.max(g).max(g5);
        if n_src == 2 {
            assert_eq!(p5, p6, "case {case}: pcr5 and pcr6 differ on two sources");
        }
    }
    println!("worst oracle gap {worst:e}");
}

#[test]
fn hand_computed_conflict_pair() {
    let f = oracle::frame(2, Mode::Dst);
    let m1 = oracle::to_mass(&f, &vec![(1, 0.6), (2, 0.4)]);
    let m2 = oracle::to_mass(&f, &vec![(1, 0.2), (2, 0.8)]);
    let a = f.singleton(0);
    let d = fusion::dempster(&[m1.clone(), m2.clone()]).unwrap();
    assert!((d.mass(&a) - 0.12 / 0.44).abs() < 1e-12);
    let p = fusion::pcr6(&[m1, m2]).unwrap();
    let expected_a = 0.12 + 0.48 * 0.6 / 1.4 + 0.08 * 0.2 / 0.6;
    assert!((p.mass(&a) - expected_a).abs() < 1e-12);
    assert!((p.mass(&a) - 0.3524).abs() < 1e-4);
}

#[test]
fn hyper_power_set_matches_monotone_functions() {
    for n in 1..=4 {
        let f = oracle::frame(n, Mode::Dsmt);
        let mut ours: Vec<u32> = f.elements().iter().map(|e| oracle::lattice::of_terms(n, e.terms())).collect();
        ours.sort();
        let mut theirs = oracle::lattice::free_elements(n);
        theirs.sort();
        assert_eq!(ours, theirs, "n = {n}");
    }
    assert_eq!(oracle::lattice::free_elements(2).len(), 4);
    assert_eq!(oracle::lattice::free_elements(3).len(), 18);
}

fn check_lattice(mode: Mode, n: usize, enc: impl Fn(&FocalElement) -> u32) {
    let f = oracle::frame(n, mode);
    let els = f.elements();
    let empty = enc(&FocalElement::EMPTY);
    assert_eq!(empty, 0);
    for a in els {
        let ea = enc(a);
        assert_eq!(f.dsm_cardinality(a).unwrap(), ea.count_ones() as usize, "{a:?}");
        for b in els {
            let eb = enc(b);
            let i = f.intersect(a, b).unwrap();
            let u = f.union(a, b).unwrap();
            assert_eq!(enc(&i), ea & eb, "{a:?} ∩ {b:?}");
            assert_eq!(enc(&u), ea | eb, "{a:?} ∪ {b:?}");
            assert_eq!(f.includes(a, b).unwrap(), eb & !ea == 0, "{b:?} ≤ {a:?}");
            assert_eq!(f.intersect(b, a).unwrap(), i);
            assert_eq!(f.union(b, a).unwrap(), u);
            // Absorption.
            assert_eq!(f.union(a, &i).unwrap(), *a);
            assert_eq!(f.intersect(a, &u).unwrap(), *a);
            for c in els {
                assert_eq!(f.intersect(&i, c).unwrap(), f.intersect(a, &f.intersect(b, c).unwrap()).unwrap());
                assert_eq!(f.union(&u, c).unwrap(), f.union(a, &f.union(b, c).unwrap()).unwrap());
            }
        }
    }
}

#[test]
fn lattice_operations_match_oracle_exhaustively() {
    for n in 1..=3 {
        check_lattice(Mode::Dsmt, n, |e| oracle::lattice::of_terms(n, e.terms()));
        check_lattice(Mode::Dst, n, |e| oracle::lattice::of_terms_dst(e.terms()));
    }
}

#[test]
fn dst_frames_are_plain_bitsets() {
    for n in 1..=6 {
        let f = oracle::frame(n, Mode::Dst);
        assert_eq!(f.elements().len(), (1 << n) - 1);
        let mut masks: Vec<u8> = f.elements().iter().map(|e| e.atom_mask()).collect();
        masks.sort();
        assert_eq!(masks, (1..(1u8 << n)).collect::<Vec<_>>());
    }
}

#[test]
fn surface_ratios_match_numeric_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases: Vec<(Vec<Trap>, f64, f64, Mode)> = (0..500)
        .map(|i| {
            let classes = rng.gen_range(2..=4);
            let parts = oracle::integrate::random_partition(&mut rng, classes);
            let mut x: f64 = rng.gen_range(-0.1..1.1);
            let mut y: f64 = rng.gen_range(-0.1..1.1);
            if x > y {
                std::mem::swap(&mut x, &mut y);
            }
            let y = y.max(x + 1e-3);
            (parts, x, y, if i % 2 == 0 { Mode::Dst } else { Mode::Dsmt })
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|(parts, lo, hi, mode)| {
            let f = oracle::frame(parts.len(), *mode);
            let classes = parts.iter().enumerate().map(|(k, t)| (k, Trapezoid::new(t.0, t.1, t.2, t.3).unwrap())).collect();
            let model = MappingModel::new("x", classes, &f).unwrap();
            let opts = MappingOptions::for_mode(*mode);
            let m = model.map_interval(&NumericInterval::new(*lo, *hi).unwrap(), &f, opts).unwrap();
            let (own, shared) = surfaces(parts, *lo, *hi);
            let mut expected: BTreeMap<FocalElement, f64> = BTreeMap::new();
            if opts.overlap == OverlapPolicy::Intersection {
                let total: f64 = own.iter().sum::<f64>() - shared.iter().sum::<f64>();
                for k in 0..own.len() {
                    let left = if k > 0 { shared[k - 1] } else { 0.0 };
                    let right = shared.get(k).copied().unwrap_or(0.0);
                    expected.insert(f.singleton(k), (own[k] - left - right) / total);
                }
                for (k, s) in shared.iter().enumerate() {
                    let e = f.intersect(&f.singleton(k), &f.singleton(k + 1)).unwrap();
                    expected.insert(e, s / total);
                }
            } else {
                let total: f64 = own.iter().sum();
                for (k, a) in own.iter().enumerate() {
                    expected.insert(f.singleton(k), a / total);
                }
            }
            let gap = expected.iter().map(|(e, v)| (m.mass(e) - v).abs()).fold(0.0, f64::max);
            let covered: f64 = expected.keys().map(|e| m.mass(e)).sum();
            assert!((covered - 1.0).abs() < 1e-12, "mass outside the expected elements");
            gap
        })
        .reduce(|| 0.0, f64::max);
    assert!(worst < 1e-5, "worst gap {worst}");
    println!("worst integration gap {worst:e}");
}

#[test]
fn reference_occupant_mixture_matches_integration() {
    let f = oracle::frame(4, Mode::Dst);
    let inf = f64::INFINITY;
    let parts = [Trap(-inf, -inf, 0.0, 2.0), Trap(0.0, 2.0, 6.0, 10.0), Trap(6.0, 10.0, 14.0, 18.0), Trap(14.0, 18.0, inf, inf)];
    let classes = parts.iter().enumerate().map(|(k, t)| (k, Trapezoid::new(t.0, t.1, t.2, t.3).unwrap())).collect();
    let model = MappingModel::new("C111", classes, &f).unwrap();
    let d = PossibilityDistribution::new(vec![
        (NumericInterval::new(8.0, 15.0).unwrap(), 1.0),
        (NumericInterval::new(5.0, 20.0).unwrap(), 0.25),
    ])
    .unwrap();
    let im = d.to_interval_mass().unwrap();
    let m = model.map_interval_mass(&im, &f, MappingOptions::default()).unwrap();
    let part = |lo: f64, hi: f64| {
        let (own, _) = surfaces(&parts, lo, hi);
        let t: f64 = own.iter().sum();
        own.into_iter().map(move |a| a / t)
    };
    let expected: Vec<f64> = part(8.0, 15.0).zip(part(5.0, 20.0)).map(|(x, y)| 0.75 * x + 0.25 * y).collect();
    for (k, v) in expected.iter().enumerate() {
        assert!((m.mass(&f.singleton(k)) - v).abs() < 1e-5, "class {k}");
    }
}

#[test]
fn consistency_ratio_matches_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let n = rng.gen_range(3..=8);
        let m = ahp::random_saaty_matrix(n, &mut rng);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
        let lambda = oracle::eigen::lambda_max(&rows);
        let c = ahp::consistency_ratio(&m).unwrap();
        assert!((c.lambda_max - lambda).abs() < 1e-6, "λ {} vs {lambda}", c.lambda_max);
        let cr = (lambda - n as f64) / (n as f64 - 1.0) / ahp::random_index(n).unwrap();
        assert!((c.cr - cr).abs() < 1e-6);
    }
}

#[test]
fn consistent_matrices_recover_their_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=6);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let m = PairwiseMatrix::from_weights(&w).unwrap();
        let got = ahp::derive_weights(&m).unwrap();
        for (a, b) in got.iter().zip(&w) {
            assert!((a - b).abs() < 1e-8, "{got:?} vs {w:?}");
        }
        assert!(ahp::consistency_ratio(&m).unwrap().cr.abs() < 1e-9);
    }
}

#[test]
fn two_by_two_closed_form() {
    let m = PairwiseMatrix::new(vec![vec![1.0, 3.0], vec![1.0 / 3.0, 1.0]]).unwrap();
    assert_eq!(ahp::derive_weights(&m).unwrap(), vec![0.75, 0.25]);
}

#[test]
fn sample_tree_weights_by_hand() {
    // 2×2 closed form: w = (a/(1+a), 1/(1+a)); globals are products.
    let root_a = 0.5;
    let vuln_a = 3.0;
    let (w_vuln, w_hazard) = (root_a / (1.0 + root_a), 1.0 / (1.0 + root_a));
    let (w_occ, w_inf) = (vuln_a / (1.0 + vuln_a), 1.0 / (1.0 + vuln_a));
    let h = Hierarchy::new(CriterionNode::branch(
        "C1",
        "sensitivity",
        vec![
            CriterionNode::branch(
                "C11",
                "vulnerability",
                vec![
                    CriterionNode::leaf("C111", "occupants", CriterionKind::Quantitative),
                    CriterionNode::leaf("C112", "infrastructures", CriterionKind::Qualitative),
                ],
                PairwiseMatrix::from_upper(2, &[vuln_a]).unwrap(),
            ),
            CriterionNode::leaf("C12", "hazard", CriterionKind::Quantitative),
        ],
        PairwiseMatrix::from_upper(2, &[root_a]).unwrap(),
    ))
    .unwrap();
    let s = ahp::synthesize(&h, Prioritization::Eigenvector).unwrap();
    let expect = [("C111", w_vuln * w_occ), ("C112", w_vuln * w_inf), ("C12", w_hazard)];
    for (id, w) in expect {
        assert!((s.global_weight(id).unwrap() - w).abs() < 1e-12, "{id}");
    }
}

#[test]
fn possibility_example_values() {
    let d = PossibilityDistribution::new(vec![
        (NumericInterval::new(8.0, 15.0).unwrap(), 1.0),
        (NumericInterval::new(5.0, 20.0).unwrap(), 0.25),
    ])
    .unwrap();
    let a = NumericInterval::new(8.0, 15.0).unwrap();
    assert_eq!(d.necessity_of(&a), 0.75);
    assert_eq!(d.to_interval_mass().unwrap().belief(&a), 0.75);
    assert_eq!(d.possibility_of(&NumericInterval::new(16.0, 18.0).unwrap()), 0.25);
}

#[test]
fn possibility_round_trip_on_random_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let levels = rng.gen_range(1..=5);
        let mut lo = rng.gen_range(0.0..10.0);
        let mut hi = lo + rng.gen_range(0.0..5.0);
        let mut level = 1.0;
        let mut entries = Vec::new();
        for _ in 0..levels {
            entries.push((NumericInterval::new(lo, hi).unwrap(), level));
            lo -= rng.gen_range(0.0..3.0);
            hi += rng.gen_range(0.0..3.0);
            level *= rng.gen_range(0.1..0.95);
        }
        let d = PossibilityDistribution::new(entries).unwrap();
        let im = d.to_interval_mass().unwrap();
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-10.0..30.0);
            let q = NumericInterval::new(x, x + rng.gen_range(0.0..10.0)).unwrap();
            assert!((im.belief(&q) - d.necessity_of(&q)).abs() < 1e-12, "{q:?}");
            assert!((im.plausibility(&q) - d.possibility_of(&q)).abs() < 1e-12, "{q:?}");
        }
    }
}

#[test]
fn zadeh_example_shows_the_aberration() {
    let f = oracle::frame(3, Mode::Dst);
    let m1 = oracle::to_mass(&f, &vec![(0b001, 0.9), (0b100, 0.1)]);
    let m2 = oracle::to_mass(&f, &vec![(0b010, 0.9), (0b100, 0.1)]);
    let d = fusion::combine(Rule::Dempster, &[m1.clone(), m2.clone()]).unwrap();
    let p = fusion::combine(Rule::Pcr6, &[m1, m2]).unwrap();
    let (a, b, c) = (f.singleton(0), f.singleton(1), f.singleton(2));
    assert!((d.mass(&c) - 1.0).abs() < 1e-12);
    assert!(p.mass(&a) > p.mass(&c) && p.mass(&b) > p.mass(&c));
    assert!(p.mass(&a) > d.mass(&a) && p.mass(&b) > d.mass(&b));
}
