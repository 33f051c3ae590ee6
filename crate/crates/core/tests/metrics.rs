mod common;

use common::*;
use semid::alloc::CandidateProvider;
use semid::assign::*;
use semid::io::gen_synthetic;
use semid::metrics::*;
use semid::quantizer::{reconstruct, train_rq, TrainParams};
use semid::{EmbeddingSet, UsedIdRegistry};

#[test]
fn smaller_codebooks_conflict_more() {
    let set = gen_synthetic(10_000, 32, 64, 2e-8, 1).unwrap();
    let mut props = Vec::new();
    for m in [512, 256, 192] {
        let params = TrainParams {
            seed: 1,
            max_iters: 30,
            ..Default::default()
        };
        let stack = train_rq(&set, 3, m, &params).unwrap();
        let r = assign_greedy(&set, CandidateProvider::Rq(&stack)).unwrap();
        props.push(conflict_stats(&r).proportion);
    }
    assert!(props[0] < props[1] && props[1] < props[2], "{props:?}");
}

#[test]
fn conflict_free_corpus_has_unit_overhead() {
    let mut r = rng(4);
    let stack = random_stack(&mut r, &[32, 32], 4);
    let rows = stack_rows(&stack);
    // One vector per distinct greedy id.
    let mut seen = std::collections::HashSet::new();
    let mut vs = Vec::new();
    while vs.len() < 40 {
        let e: Vec<f32> = (0..4).map(|_| gauss(&mut r, 1.0)).collect();
        if seen.insert(greedy_oracle(&e, &rows).0) {
            vs.push(e);
        }
    }
    let set = EmbeddingSet::from_vectors(4, vs).unwrap();
    let p = CandidateProvider::Rq(&stack);
    let ecm = assign_ecm(&set, p, &AssignConfig::new(Strategy::Ecm, vec![3, 3])).unwrap();
    let rrs = assign_rrs(&set, p, &AssignConfig::new(Strategy::Rrs, vec![3, 3])).unwrap();
    let d = distortion_report(&set, p, &[&ecm, &rrs], None).unwrap();
    assert_eq!(d.get("ecm").unwrap().overhead_ratio, 1.0);
    assert_eq!(d.get("rrs").unwrap().overhead_ratio, 1.0);
    for h in [rank_displacement(&ecm), rank_displacement(&rrs)] {
        assert_eq!(h.rank1_share(), vec![1.0, 1.0]);
    }
}

#[test]
fn distortion_is_reconstruction_error() {
    let set = gen_synthetic(400, 8, 8, 0.01, 5).unwrap();
    let stack = train_rq(
        &set,
        3,
        8,
        &TrainParams {
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let p = CandidateProvider::Rq(&stack);
    let cfg =
        AssignConfig::new(Strategy::Ecm, vec![3, 3, 3]).with_on_exhausted(OnExhausted::WidenK);
    let ecm = assign(&set, p, &cfg, &mut UsedIdRegistry::new()).unwrap();
    let per = per_embedding_distortion(&set, p, &ecm).unwrap();
    let mut total = 0.0;
    for (i, (_, e)) in set.iter().enumerate() {
        let want = dist(e, &reconstruct(ecm.id(i).unwrap(), &stack).unwrap());
        assert!((per[i].unwrap() - want).abs() < 1e-9);
        total += want;
    }
    let d = distortion_report(&set, p, &[&ecm], Some(&["mine".to_string()])).unwrap();
    let row = d.get("mine").unwrap();
    assert!((row.total - total).abs() < 1e-6);
    assert!(row.overhead_ratio >= 1.0);
    assert!(d
        .to_tsv()
        .starts_with("strategy\tcount\ttotal\tmean\toverhead_ratio\ngreedy-baseline\t400\t"));
}

#[test]
fn suffix_search_space_counts_conflict_token() {
    let set = gen_synthetic(3000, 8, 8, 0.05, 2).unwrap();
    let stack = train_rq(&set, 2, 8, &TrainParams::default()).unwrap();
    let p = CandidateProvider::Rq(&stack);
    let suffix = assign_suffix(&set, p).unwrap();
    let max = suffix
        .assignments
        .iter()
        .flatten()
        .filter_map(|a| a.suffix)
        .max()
        .unwrap();
    assert_eq!(search_space(&[8, 8], &suffix), 64 * (max as u128 + 1));
    let greedy = assign_greedy(&set, p).unwrap();
    assert_eq!(search_space(&[8, 8, 8], &greedy), 512);
}

#[test]
fn timing_for_empty_corpus_is_near_zero() {
    let stack = semid::CodebookStack::from_rows(&[vec![vec![0.0], vec![1.0]]]).unwrap();
    let empty = EmbeddingSet::new(Vec::new(), Vec::new(), 1).unwrap();
    let r = assign_rrs(
        &empty,
        CandidateProvider::Rq(&stack),
        &AssignConfig::new(Strategy::Rrs, vec![1]),
    )
    .unwrap();
    let t = timing_report([("assign:rrs", r.duration)]);
    assert!(t.seconds("assign:rrs").unwrap() < 0.01);
    assert!(t.to_tsv().starts_with("phase\tseconds\nassign:rrs\t"));
}
