mod common;

use std::collections::BTreeMap;

use emdtest::budget;
use emdtest::cluster::{
    assign_to_centers, emd_test_clustered_known, emd_test_clustered_unknown, find_representatives, Alternating,
    ClusterModel, ClusterTestConfig, Representatives,
};
use emdtest::harness::gen_clustered;
use emdtest::{emd_exact, DiscreteDistribution, Error, Point, SampleSource, Sampler, SamplesUsed};
use rand::Rng;
use rayon::prelude::*;

use common::{consistent_with_rate, l1, rng};

const TRIALS: u64 = 200;

fn pt(c: &[f64]) -> Point {
    Point::new(c.to_vec())
}

fn lg(x: f64) -> f64 {
    x.log2().max(1.0)
}

fn sources(p: &DiscreteDistribution, q: &DiscreteDistribution, seed: u64) -> (SampleSource<Point>, SampleSource<Point>) {
    (SampleSource::from_distribution(p, seed).on_stream(0), SampleSource::from_distribution(q, seed).on_stream(1))
}

#[test]
fn assign_point_on_a_center() {
    let centers = vec![pt(&[0.1, 0.1]), pt(&[0.9, 0.2]), pt(&[0.5, 0.8])];
    for (i, c) in centers.iter().enumerate() {
        assert_eq!(assign_to_centers(c, &centers), i);
        assert_eq!(assign_to_centers(c, &centers), assign_to_centers(&centers[i], &centers));
    }
}

#[test]
fn assign_tie_goes_low() {
    let centers = vec![pt(&[0.0]), pt(&[1.0])];
    assert_eq!(assign_to_centers(&pt(&[0.5]), &centers), 0);
    let centers = vec![pt(&[1.0]), pt(&[0.0])];
    assert_eq!(assign_to_centers(&pt(&[0.5]), &centers), 0);
}

#[test]
fn assign_random_points_by_exhaustion() {
    let mut r = rng(60);
    for _ in 0..500 {
        let centers: Vec<Point> = (0..5).map(|_| pt(&[r.gen(), r.gen(), r.gen()])).collect();
        let x = pt(&[r.gen(), r.gen(), r.gen()]);
        let dists: Vec<f64> = centers.iter().map(|c| l1(&x, c)).collect();
        let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let want = dists.iter().position(|&d| d == best).unwrap();
        assert_eq!(assign_to_centers(&x, &centers), want);
    }
}

#[test]
fn cluster_model_validation() {
    let ok = ClusterModel { centers: vec![pt(&[0.0]), pt(&[1.0])], diameter: 0.1, unclustered_mass: 0.05 };
    assert!(ok.validate().is_ok());
    let dup = ClusterModel { centers: vec![pt(&[0.0]), pt(&[0.0])], ..ok.clone() };
    assert!(dup.validate().is_err());
    let empty = ClusterModel { centers: vec![], ..ok.clone() };
    assert!(matches!(empty.validate(), Err(Error::EmptyInput)));
    let heavy = ClusterModel { unclustered_mass: 1.5, ..ok };
    assert!(heavy.validate().is_err());
}

fn known_battery(imbalance: f64, seed: u64) -> (usize, f64) {
    let inst = gen_clustered(4, 0.1, 2, 1.0, imbalance).unwrap();
    let cfg = ClusterTestConfig::new(2, 1.0, 0.3);
    let accepts = (0..TRIALS)
        .into_par_iter()
        .filter(|t| {
            let (mut sp, mut sq) = sources(&inst.p, &inst.q, seed + t);
            emd_test_clustered_known(&mut sp, &mut sq, &inst.centers, &cfg).unwrap().accepted()
        })
        .count();
    (accepts, emd_exact(&inst.p, &inst.q).unwrap())
}

#[test]
fn known_centers_accept_equal_inputs() {
    let (acc, emd) = known_battery(0.0, 60_000);
    assert_eq!(emd, 0.0);
    assert!(consistent_with_rate(acc, TRIALS as usize, 2.0 / 3.0), "accepted {acc}/{TRIALS}");
}

#[test]
fn known_centers_reject_imbalance() {
    let (acc, emd) = known_battery(0.2, 61_000);
    assert!(emd > 0.3, "oracle EMD {emd}");
    let rej = TRIALS as usize - acc;
    assert!(consistent_with_rate(rej, TRIALS as usize, 2.0 / 3.0), "rejected {rej}/{TRIALS}");
}

#[test]
fn known_centers_budget() {
    let inst = gen_clustered(4, 0.1, 2, 1.0, 0.0).unwrap();
    for (dim, span, eps, c) in [(2, 1.0, 0.3, 1.0), (2, 1.0, 0.5, 0.5), (2, 1.0, 0.6, 2.0)] {
        let cfg = ClusterTestConfig::new(dim, span, eps).with_c(c);
        let e = eps / (dim as f64 * span);
        let want = (c * 4f64.powf(2.0 / 3.0) / e.powi(4) * lg(4.0) * lg(3.0)).ceil() as u64;
        assert_eq!(cfg.known_centers_budget(4), want);
        let (mut sp, mut sq) = sources(&inst.p, &inst.q, 3);
        let v = emd_test_clustered_known(&mut sp, &mut sq, &inst.centers, &cfg).unwrap();
        assert_eq!(v.samples_used, SamplesUsed { p: want, q: want });
    }
}

#[test]
fn known_centers_input_errors() {
    let inst = gen_clustered(2, 0.1, 1, 1.0, 0.0).unwrap();
    let cfg = ClusterTestConfig::new(1, 1.0, 0.3);
    let (mut sp, mut sq) = sources(&inst.p, &inst.q, 1);
    assert!(matches!(emd_test_clustered_known(&mut sp, &mut sq, &[], &cfg), Err(Error::EmptyInput)));
    assert!(emd_test_clustered_known(&mut sp, &mut sq, &[pt(&[2.0])], &cfg).is_err());
    let bad = ClusterTestConfig::new(1, 1.0, 5.0);
    assert!(matches!(emd_test_clustered_known(&mut sp, &mut sq, &inst.centers, &bad), Err(Error::Config(_))));
}

#[test]
fn induced_centers_bound_emd() {
    let eps = 0.3;
    let mut r = rng(61);
    for _ in 0..40 {
        let k = r.gen_range(2..=4);
        let imbalance = r.gen_range(0.0..=1.0 / k as f64);
        let inst = gen_clustered(k, eps / 2.0, 2, 1.0, imbalance).unwrap();
        let induced = |d: &DiscreteDistribution| {
            let mut m = BTreeMap::new();
            for (x, w) in d.support() {
                *m.entry(assign_to_centers(x, &inst.centers)).or_insert(0.0) += w;
            }
            m
        };
        let (pp, qq) = (induced(&inst.p), induced(&inst.q));
        let l1_centers: f64 = (0..k).map(|i| (pp.get(&i).unwrap_or(&0.0) - qq.get(&i).unwrap_or(&0.0)).abs()).sum();
        let diameter = 2.0;
        let bound = l1_centers / 2.0 * diameter + eps / 2.0;
        assert!(emd_exact(&inst.p, &inst.q).unwrap() <= bound + 1e-12);
    }
}

#[test]
fn representative_of_point_mass() {
    let p = DiscreteDistribution::new([(pt(&[0.4, 0.6]), 1.0)], 2, 1.0).unwrap();
    let mut s = SampleSource::from_distribution(&p, 2);
    let r = find_representatives(&mut s, 1, 0.05, 0.2, 1.0).unwrap();
    assert_eq!(r, Representatives::Found(vec![pt(&[0.4, 0.6])]));
}

#[test]
fn representatives_budget_formula() {
    let want = (3.0 * 3f64.log2() / 0.1).ceil() as u64;
    assert_eq!(budget::representatives(3, 0.1, 1.0), want);
    let p = DiscreteDistribution::new([(pt(&[0.5]), 1.0)], 1, 1.0).unwrap();
    let mut s = SampleSource::from_distribution(&p, 2);
    find_representatives(&mut s, 3, 0.05, 0.1, 1.0).unwrap();
    assert_eq!(s.draws_taken(), want);
    assert!(find_representatives(&mut s, 0, 0.05, 0.1, 1.0).is_err());
    assert!(find_representatives(&mut s, 3, 0.0, 0.1, 1.0).is_err());
    assert!(find_representatives(&mut s, 3, 0.05, 1.0, 1.0).is_err());
}

#[test]
fn spread_points_are_rejected() {
    // Four points pairwise 0.3 apart with b = 0.1, searched for k = 3.
    let p = DiscreteDistribution::new((0..4).map(|i| (pt(&[i as f64 * 0.3]), 0.25)), 1, 1.0).unwrap();
    let rej = (0..TRIALS)
        .filter(|&t| {
            let mut s = SampleSource::from_distribution(&p, 62_000 + t);
            find_representatives(&mut s, 3, 0.1, 0.1, 1.0).unwrap() == Representatives::Reject
        })
        .count();
    assert!(consistent_with_rate(rej, TRIALS as usize, 2.0 / 3.0), "rejected {rej}/{TRIALS}");
}

#[test]
fn tight_clusters_are_found() {
    let b = 0.05;
    let inst = gen_clustered(3, b, 2, 1.0, 0.0).unwrap();
    let ok = (0..TRIALS)
        .filter(|&t| {
            let mut s = SampleSource::from_distribution(&inst.p, 63_000 + t);
            match find_representatives(&mut s, 3, b, 0.1, 1.0).unwrap() {
                Representatives::Found(reps) => {
                    reps.len() <= 3 && reps.iter().all(|r| inst.centers.iter().any(|c| l1(r, c) <= b))
                }
                Representatives::Reject => false,
            }
        })
        .count();
    assert!(consistent_with_rate(ok, TRIALS as usize, 2.0 / 3.0), "found {ok}/{TRIALS}");
}

#[test]
fn representatives_stay_apart() {
    let mut r = rng(64);
    for t in 0..50 {
        let pts: Vec<(Point, f64)> = (0..30).map(|_| (pt(&[r.gen(), r.gen()]), 1.0 / 30.0)).collect();
        let p = DiscreteDistribution::new(pts, 2, 1.0).unwrap();
        let b = r.gen_range(0.02..0.3);
        let mut s = SampleSource::from_distribution(&p, t);
        if let Representatives::Found(reps) = find_representatives(&mut s, 30, b, 0.2, 1.0).unwrap() {
            for (i, x) in reps.iter().enumerate() {
                assert!(reps[i + 1..].iter().all(|y| l1(x, y) > 2.0 * b));
            }
        }
    }
}

#[test]
fn alternating_stream_starts_with_p() {
    let mut a = SampleSource::from_stream(vec![1, 3, 5]);
    let mut b = SampleSource::from_stream(vec![2, 4]);
    let mut m = Alternating::new(&mut a, &mut b);
    let got: Vec<i32> = (0..5).map(|_| m.draw().unwrap()).collect();
    assert_eq!(got, vec![1, 2, 3, 4, 5]);
}

fn unknown_battery(imbalance: f64, seed: u64) -> (usize, f64) {
    let cfg = ClusterTestConfig::new(2, 1.0, 0.3);
    let inst = gen_clustered(4, cfg.search_radius(), 2, 1.0, imbalance).unwrap();
    let accepts = (0..TRIALS)
        .into_par_iter()
        .filter(|t| {
            let (mut sp, mut sq) = sources(&inst.p, &inst.q, seed + t);
            emd_test_clustered_unknown(&mut sp, &mut sq, 4, &cfg).unwrap().accepted()
        })
        .count();
    (accepts, emd_exact(&inst.p, &inst.q).unwrap())
}

#[test]
fn unknown_centers_accept_equal_inputs() {
    let (acc, _) = unknown_battery(0.0, 64_000);
    assert!(consistent_with_rate(acc, TRIALS as usize, 2.0 / 3.0), "accepted {acc}/{TRIALS}");
}

#[test]
fn unknown_centers_reject_imbalance() {
    let (acc, emd) = unknown_battery(0.2, 65_000);
    assert!(emd > 0.3, "oracle EMD {emd}");
    let rej = TRIALS as usize - acc;
    assert!(consistent_with_rate(rej, TRIALS as usize, 2.0 / 3.0), "rejected {rej}/{TRIALS}");
}

#[test]
fn unknown_centers_budget_composition() {
    let cfg = ClusterTestConfig::new(2, 1.0, 0.3);
    let m = (4.0f64 * 2.0 / (0.3 / 8.0)).ceil() as u64;
    assert_eq!(cfg.representatives_budget(4), m);
    let known = cfg.known_centers_budget(4);

    let inst = gen_clustered(4, cfg.search_radius(), 2, 1.0, 0.0).unwrap();
    let (mut sp, mut sq) = sources(&inst.p, &inst.q, 7);
    let v = emd_test_clustered_unknown(&mut sp, &mut sq, 4, &cfg).unwrap();
    assert_eq!(v.samples_used, SamplesUsed { p: m.div_ceil(2) + known, q: m / 2 + known });

    let spread = DiscreteDistribution::new((0..5).map(|i| (pt(&[i as f64 * 0.25, 0.0]), 0.2)), 2, 1.0).unwrap();
    let (mut sp, mut sq) = sources(&spread, &spread, 7);
    let v = emd_test_clustered_unknown(&mut sp, &mut sq, 4, &cfg).unwrap();
    assert!(!v.accepted());
    assert_eq!(v.samples_used, SamplesUsed { p: m.div_ceil(2), q: m / 2 });
}
