use std::collections::HashSet;

use proptest::prelude::*;
use uict::boundary_chain::{strip_kernel_rational, Move, RandomMoves};
use uict::exact::Rational;
use uict::rng::StreamSeed;
use uict::triangulation::{
    build_from_moves, defect_free_moves, enumerate_stopped, grow_strips, moves_from_causal,
    remove_defects, to_forest, validate_causal, CausalTriangulation,
};

#[test]
fn two_strips_from_one_are_a_bijection() {
    let seqs = enumerate_stopped(1, 2, 12);
    let mut images = HashSet::new();
    for s in &seqs {
        let act = build_from_moves(1, s).unwrap();
        let ct = remove_defects(&act).unwrap();
        assert_eq!(ct.slice_sizes, act.slice_sizes[..3]);
        assert_eq!(moves_from_causal(&ct).unwrap(), *s);
        let clean = defect_free_moves(&act).unwrap();
        assert_eq!(
            clean.probability_exact(1).unwrap(),
            s.probability_exact(1).unwrap()
        );
        assert!(images.insert(ct));
    }
    assert!(seqs
        .iter()
        .any(|s| s.0.windows(2).any(|w| w == [Move::Minus, Move::Minus])));
}

#[test]
fn one_strip_law_matches_kernel() {
    for m0 in 1..=3u64 {
        let cap = 12;
        let mut law = vec![Rational::from_integer(0.into()); cap + 2];
        for s in enumerate_stopped(m0, 1, cap) {
            let act = build_from_moves(m0, &s).unwrap();
            law[act.slice_sizes[1] as usize] += s.probability_exact(m0).unwrap();
        }
        for m1 in 1..=(cap as i64 - m0 as i64) {
            let k = m1 - m0 as i64;
            assert_eq!(
                law[m1 as usize],
                strip_kernel_rational(m0, k).unwrap(),
                "m0 = {m0}, k = {k}"
            );
        }
    }
}

#[test]
fn random_grown_triangulations_are_valid() {
    let seed = StreamSeed::new(77).domain("grown");
    for i in 0..1000u64 {
        let m0 = 1 + i % 4;
        let act = grow_strips(m0, 3, RandomMoves::new(seed.stream(i))).unwrap();
        act.validate().unwrap();
        assert!(act.boundary.iter().all(|v| v.slice == 4));
        for t in 1..=3 {
            let n = act.strip_triangles(t).len() as u64;
            assert_eq!(n, act.slice_sizes[t - 1] + act.slice_sizes[t]);
        }
        let ct = remove_defects(&act).unwrap();
        validate_causal(&ct.slice_sizes, &ct.triangles()).unwrap();
        let forest = to_forest(&ct);
        assert_eq!(forest.roots.len() as u64, m0);
        assert_eq!(forest.generation_sizes(), ct.slice_sizes);
        let back = CausalTriangulation::from_json(&ct.to_json()).unwrap();
        assert_eq!(back, ct);
    }
}

#[test]
fn single_strip_forest() {
    let act = build_from_moves(1, &"+-".parse().unwrap()).unwrap();
    let forest = to_forest(&remove_defects(&act).unwrap());
    assert_eq!(forest.generation_sizes(), vec![1, 1]);
    assert_eq!(forest.children(forest.roots[0]).len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn remove_defects_inverts(m0 in 1u64..=5, strips in 1usize..=4, seed in any::<u64>()) {
        let act = grow_strips(m0, strips, RandomMoves::new(StreamSeed::new(seed).stream(0))).unwrap();
        let ct = remove_defects(&act).unwrap();
        let moves = moves_from_causal(&ct).unwrap();
        prop_assert_eq!(build_from_moves(m0, &moves).unwrap(), act);
    }
}
