//! Cross-module invariants on randomized instances: algebraic identities
//! between the two irrepresentable-criterion forms, orientation invariance,
//! exact-vs-lower-bound dominance for compatibility constants at the
//! enumeration cap, local optimality of the solver, and ordering between
//! the oracle-bound displays.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;
use tvtree::compatibility::{kappa_exact, kappa_lower_branched, kappa_lower_path, kappa_lower_weighted};
use tvtree::estimator::{fit, objective};
use tvtree::graph::{decompose, ActiveSet, TreeGraph};
use tvtree::irrep::{irrep_lhs, orientation_invariance_check, SignPattern};
use tvtree::oracle::{bound_path, bound_general, bound_master};
use tvtree::projection::weight_vectors;

fn random_tree(rng: &mut ChaCha12Rng, n: usize) -> TreeGraph {
    let mut parents = BTreeMap::new();
    for v in 2..=n {
        parents.insert(v, rng.gen_range(1..v));
    }
    TreeGraph::build_tree(&parents).unwrap()
}

fn random_active(rng: &mut ChaCha12Rng, n: usize, s_max: usize) -> ActiveSet {
    let s = rng.gen_range(1..=s_max.min(n - 2));
    let mut verts: Vec<usize> = (2..=n).collect();
    verts.shuffle(rng);
    ActiveSet::new(n, verts.into_iter().take(s)).unwrap()
}

#[test]
fn irrep_forms_agree_on_200_random_trees() {
    // irrep_lhs internally cross-checks the centered form against the
    // unpenalized-column form to 1e-10 and errors on disagreement, so a
    // clean pass over 200 random instances certifies the identity.
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    for trial in 0..200 {
        let n = rng.gen_range(5..=50);
        let g = random_tree(&mut rng, n);
        let s0 = random_active(&mut rng, n, 6);
        let signs: Vec<i8> =
            (0..s0.s()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let z0 = SignPattern::new(&s0, &signs).unwrap();
        let lhs = irrep_lhs(&g, &s0, &z0)
            .unwrap_or_else(|e| panic!("trial {trial} n={n}: {e}"));
        assert!(lhs.is_finite() && lhs >= 0.0);
    }
}

#[test]
fn orientation_flips_never_change_the_verdict() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    for _ in 0..40 {
        let n = rng.gen_range(5..=24);
        let g = random_tree(&mut rng, n);
        let s0 = random_active(&mut rng, n, 4);
        let signs: Vec<i8> =
            (0..s0.s()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let z0 = SignPattern::new(&s0, &signs).unwrap();
        let mut flips = vec![vec![1i8; n], vec![-1i8; n]];
        for _ in 0..3 {
            flips.push((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect());
        }
        assert!(orientation_invariance_check(&g, &s0, &z0, &flips).unwrap());
    }
}

#[test]
fn exact_kappa_dominates_lower_bounds_at_cap_scale() {
    // Random path configurations at the largest n the exact enumeration
    // accepts, with end gaps >= 2 and interior gaps >= 4.
    let mut rng = ChaCha12Rng::seed_from_u64(5150);
    for n in [13usize, 14] {
        let g = TreeGraph::path(n).unwrap();
        for _ in 0..6 {
            let (d1, d2) = loop {
                let d2 = rng.gen_range(4..=n - 4);
                let d1 = rng.gen_range(2..=n - d2 - 2);
                if n - d1 - d2 >= 2 {
                    break (d1, d2);
                }
            };
            let s0 = ActiveSet::new(n, [d1 + 1, d1 + d2 + 1]).unwrap();
            let dec = decompose(&g, &s0, None).unwrap();
            let (_, lb) = kappa_lower_path(&dec).unwrap();
            let exact = kappa_exact(&g, &s0, None).unwrap();
            assert!(
                exact >= lb - 1e-9,
                "n={n} S={:?}: exact {exact} < bound {lb}",
                s0.vertices()
            );
            for gamma in [1.5, 3.0] {
                let wv = weight_vectors(&g, &s0, gamma).unwrap();
                let wlb = kappa_lower_weighted(&g, &dec, &wv, &dec.cut_edges).unwrap();
                let exact_w = kappa_exact(&g, &s0, Some(&wv)).unwrap();
                assert!(
                    exact_w >= wlb.bound - 1e-9,
                    "gamma={gamma}: exact_w {exact_w} < weighted bound {}",
                    wlb.bound
                );
                assert!(exact_w >= wlb.bound_quadratic - 1e-9);
            }
        }
    }
}

#[test]
fn exact_kappa_dominates_branched_bound_at_cap_scale() {
    // Single ramification, n = 14: inbound path of 6 with a jump, two arms
    // of 4 with one jump each.
    let g = TreeGraph::star_of_paths(6, &[4, 4]).unwrap();
    let n = 14;
    let s0 = ActiveSet::new(n, [3, 9, 13]).unwrap();
    let dec = decompose(&g, &s0, None).unwrap();
    assert_eq!(dec.g(), 3);
    let (_, lb) = kappa_lower_branched(&dec).unwrap();
    let exact = kappa_exact(&g, &s0, None).unwrap();
    assert!(exact >= lb - 1e-9, "exact {exact} < branched bound {lb}");
    let wv = weight_vectors(&g, &s0, 2.0).unwrap();
    let wlb = kappa_lower_weighted(&g, &dec, &wv, &dec.cut_edges).unwrap();
    let exact_w = kappa_exact(&g, &s0, Some(&wv)).unwrap();
    assert!(exact_w >= wlb.bound - 1e-9);
}

#[test]
fn solver_output_is_locally_optimal() {
    // Convexity makes local optimality global: the fitted objective must
    // not exceed the objective at random perturbations of the fit.
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    for _ in 0..10 {
        let n = rng.gen_range(6..=16);
        let g = random_tree(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lambda = rng.gen_range(0.001..0.3);
        let res = fit(&g, &y, lambda).unwrap();
        let base = objective(&g, &y, &res.f_hat, lambda).unwrap();
        for scale in [1e-3, 1e-6] {
            for _ in 0..25 {
                let probe: Vec<f64> = res
                    .f_hat
                    .iter()
                    .map(|&v| v + scale * rng.gen_range(-1.0..1.0))
                    .collect();
                let probed = objective(&g, &y, &probe, lambda).unwrap();
                assert!(
                    probed >= base - 1e-12,
                    "perturbation improved the objective: {probed} < {base}"
                );
            }
        }
    }
}

#[test]
fn master_bound_with_computed_kappa_never_exceeds_path_display() {
    // The path-specific display is the master bound with the weighted
    // compatibility constant replaced by its closed-form lower bound, so
    // the master bound evaluated at that computed value must come out no larger.
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    let (delta, gamma, sigma) = (0.1, 1.05, 1.0);
    for _ in 0..30 {
        let n = rng.gen_range(24..=60);
        let g = TreeGraph::path(n).unwrap();
        let (d1, d2) = loop {
            let d2 = rng.gen_range(4..=n - 8);
            let d1 = rng.gen_range(4..=n - d2 - 4);
            if n - d1 - d2 >= 4 {
                break (d1, d2);
            }
        };
        let s0 = ActiveSet::new(n, [d1 + 1, d1 + d2 + 1]).unwrap();
        let f0: Vec<f64> = (1..=n)
            .map(|v| {
                if v <= d1 {
                    0.0
                } else if v <= d1 + d2 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let dec = decompose(&g, &s0, None).unwrap();
        let wv = weight_vectors(&g, &s0, gamma).unwrap();
        let wlb = kappa_lower_weighted(&g, &dec, &wv, &dec.cut_edges).unwrap();
        let thm =
            bound_master(&f0, &f0, &g, &s0, delta, gamma, sigma, wlb.bound_quadratic)
                .unwrap();
        let cor = bound_path(&f0, &f0, &g, &s0, delta, gamma, sigma).unwrap();
        assert!(
            thm.total <= cor.total + 1e-12,
            "n={n} S={:?}: master {} > path display {}",
            s0.vertices(),
            thm.total,
            cor.total
        );
        let gen = bound_general(&f0, &f0, &g, &s0, delta, gamma, sigma).unwrap();
        assert!((gen.total - cor.total).abs() <= 1e-12 * cor.total.abs().max(1.0));
    }
}
