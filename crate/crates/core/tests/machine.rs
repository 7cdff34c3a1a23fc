use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sam_core::machine::{
    apply_operator, build_matrix, classify_chain, column_sum_report, projection_matrix_pi,
    renorm_check, sample_step, simulate, transition_row, write_coordinate, write_trajectory_csv,
    ChainClass,
};
use sam_core::numeration::{q_product, BaseSeq, ProbSeq};
use sam_core::Error;

fn b3() -> BaseSeq {
    BaseSeq::constant(3).unwrap()
}

fn any_base() -> impl Strategy<Value = BaseSeq> {
    prop_oneof![
        (2u64..6).prop_map(|d| BaseSeq::constant(d).unwrap()),
        prop::collection::vec(2u64..5, 1..4).prop_map(|ds| BaseSeq::periodic(ds).unwrap()),
        (prop::collection::vec(2u64..5, 1..4), 2u64..5)
            .prop_map(|(ds, t)| BaseSeq::prefix(ds, t).unwrap()),
        Just(BaseSeq::even()),
        Just(BaseSeq::fibonacci()),
    ]
}

fn any_probs() -> impl Strategy<Value = ProbSeq> {
    prop_oneof![
        (0.05f64..=1.0).prop_map(|p| ProbSeq::constant(p).unwrap()),
        (prop::collection::vec(0.05f64..=1.0, 1..6), 0.05f64..=1.0)
            .prop_map(|(ps, t)| ProbSeq::prefix(ps, t).unwrap()),
        (0.0f64..2.0, 0.0f64..0.45).prop_map(|(c, g)| ProbSeq::geometric(c, g).unwrap()),
    ]
}

#[test]
fn row_zero_and_deterministic_examples() {
    let p = ProbSeq::constant(0.7).unwrap();
    let row = transition_row(0, &b3(), &p);
    assert_eq!(row.entries.len(), 2);
    assert_eq!(row.entries[0].0, 0);
    assert!((row.entries[0].1 - 0.3).abs() < 1e-15);
    assert_eq!(row.entries[1], (1, 0.7));

    let m = build_matrix(3, &b3(), &ProbSeq::one()).unwrap();
    assert_eq!(m.row(0).entries, vec![(1, 1.0)]);
    assert_eq!(m.row(1).entries, vec![(2, 1.0)]);
    assert!(m.row(2).entries.is_empty());
    assert_eq!(m.clipped_rows(), vec![2]);
    assert!(matches!(build_matrix(1, &b3(), &p), Err(Error::InvalidParameter(_))));
}

#[test]
fn list_base_rows_sum_to_one() {
    let base: BaseSeq = "list:2,3;tail=3".parse().unwrap();
    let p = ProbSeq::prefix(vec![0.6, 0.8, 0.5], 0.9).unwrap();
    let m = build_matrix(9, &base, &p).unwrap();
    for n in 0..8 {
        assert!(!m.is_clipped(n));
        assert!((m.row(n).sum() - 1.0).abs() < 1e-15, "row {n}");
    }
    assert!(m.is_clipped(8));
}

#[test]
fn operator_examples() {
    let b2 = BaseSeq::constant(2).unwrap();
    let m = build_matrix(2, &b2, &ProbSeq::constant(0.5).unwrap()).unwrap();
    let v = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
    let sv = apply_operator(&m, &v).unwrap();
    assert_eq!(sv[0], Some(Complex64::new(0.0, 0.0)));
    assert_eq!(sv[1], None);
    assert!(matches!(
        apply_operator(&m, &v[..1]),
        Err(Error::DimensionMismatch { expected: 2, actual: 1 })
    ));
}

#[test]
fn column_zero_telescopes() {
    let configs = [
        (b3(), ProbSeq::constant(0.7).unwrap()),
        ("periodic:3,5".parse().unwrap(), ProbSeq::prefix(vec![0.55, 0.9], 0.8).unwrap()),
        (BaseSeq::even(), ProbSeq::geometric(0.25, 0.5).unwrap()),
    ];
    for (base, probs) in configs {
        let n = q_product(&base, 5).unwrap() as usize + 1;
        let m = build_matrix(n, &base, &probs).unwrap();
        for t in 1..=5 {
            let qt = q_product(&base, t).unwrap() as usize;
            let expect = 1.0 - probs.partial_product(t + 1);
            assert!((m.column_partial_sum(0, qt) - expect).abs() < 1e-12, "{base} {probs} t={t}");
        }
    }
    let m = build_matrix(30, &b3(), &ProbSeq::one()).unwrap();
    assert_eq!(column_sum_report(&m)[0].sum, 0.0);
}

#[test]
fn row_identity_telescopes_to_depth_forty() {
    // A state with counter t + 1 exercises every fallback term up to depth t.
    let base = BaseSeq::constant(2).unwrap();
    let probs = ProbSeq::prefix((1..=41).map(|r| 1.0 - 0.5 / r as f64).collect(), 0.5).unwrap();
    for t in 1..=40u64 {
        let n = (1u64 << t) - 1;
        let row = transition_row(n, &base, &probs);
        assert_eq!(row.entries.len() as u64, t + 2);
        assert!((row.sum() - 1.0).abs() < 1e-12, "t={t}");
        let forward = row.prob(n + 1);
        assert!((forward - probs.partial_product(t + 1)).abs() < 1e-15);
    }
}

#[test]
fn one_step_frequencies_within_three_sigma() {
    let base = BaseSeq::constant(2).unwrap();
    let probs = ProbSeq::constant(0.5).unwrap();
    let traj = simulate(&base, &probs, 0, 100_000, 2024);
    let stays = traj.states.windows(2).filter(|w| w[0] == w[1]).count() as f64 / 1e5;
    assert!((stays - 0.5).abs() < 0.01, "{stays}");

    let probs = ProbSeq::prefix(vec![0.6, 0.7, 0.8], 0.9).unwrap();
    let row = transition_row(8, &b3(), &probs);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut counts = vec![0usize; row.entries.len()];
    for _ in 0..n {
        let m = sample_step(8, &b3(), &probs, &mut rng);
        counts[row.entries.iter().position(|e| e.0 == m).unwrap()] += 1;
    }
    for (&(_, p), &c) in row.entries.iter().zip(&counts) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() < 3.0 * sigma, "p={p} c={c}");
    }
}

#[test]
fn chain_classes() {
    let c = |s: &str| classify_chain(&s.parse().unwrap(), 50);
    assert_eq!(c("pconst:0.7"), ChainClass::NullRecurrentLike);
    assert_eq!(c("pconst:1"), ChainClass::TransientLike);
    assert_eq!(c("pgeo:c=0.25,gamma=0.5"), ChainClass::TransientLike);
    assert_eq!(c("plist:0.8,0.8,0.8;tail=1"), ChainClass::TransientLike);
    assert_eq!(c("plist:1;tail=0.55"), ChainClass::NullRecurrentLike);
}

#[test]
fn renormalization_examples() {
    let rep = renorm_check(1, 16, &BaseSeq::constant(2).unwrap(), &ProbSeq::constant(0.5).unwrap())
        .unwrap();
    assert!(rep.max_diff() < 1e-12);
    let rep = renorm_check(1, 9, &b3(), &ProbSeq::one()).unwrap();
    assert_eq!(rep.max_diff(), 0.0);
    let rep = renorm_check(2, 12, &"periodic:3,5".parse().unwrap(), &"plist:0.55,0.9;tail=0.55".parse().unwrap())
        .unwrap();
    assert!(rep.max_diff() < 1e-12);
    assert!(matches!(
        renorm_check(1, 2, &b3(), &ProbSeq::one()),
        Err(Error::EmptyInterior { .. })
    ));
}

#[test]
fn projection_layout() {
    let pi = projection_matrix_pi(2, 1, 12, 4, &b3()).unwrap();
    for col in 0..4 {
        let ones: Vec<usize> = (0..12).filter(|&l| pi.get(l, col) == 1.0).collect();
        assert_eq!(ones, vec![2 + 3 * col]);
    }
    assert!(projection_matrix_pi(3, 1, 12, 4, &b3()).is_err());
}

#[test]
fn exports() {
    let m = build_matrix(3, &b3(), &ProbSeq::one()).unwrap();
    let mut buf = Vec::new();
    write_coordinate(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('%')).collect();
    assert_eq!(lines[0], "3 3 2");
    assert_eq!(lines[1], "1 2 1.0000000000000000e0");
    assert!(text.contains("% clipped_rows=3"));

    let traj = simulate(&b3(), &ProbSeq::one(), 4, 0, 1);
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "step,state\n0,4\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unclipped_rows_are_stochastic(base in any_base(), probs in any_probs(), t in 1u64..=5) {
        let n = q_product(&base, t).unwrap().min(20_000) as usize;
        prop_assume!(n >= 2);
        let m = build_matrix(n, &base, &probs).unwrap();
        prop_assert!(m.max_row_sum_error() < 1e-12);
        for (i, row) in m.rows().iter().enumerate() {
            prop_assert_eq!(m.is_clipped(i), i + 1 >= n);
            prop_assert!(row.entries.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(row.entries.iter().all(|e| e.1 > 0.0 && (e.0 as usize) < n));
        }
    }

    #[test]
    fn complete_columns_sum_to_one(base in any_base(), probs in any_probs()) {
        let n = q_product(&base, 4).unwrap().min(5_000) as usize;
        let m = build_matrix(n, &base, &probs).unwrap();
        for c in column_sum_report(&m) {
            if c.complete {
                prop_assert!((c.sum - 1.0).abs() < 1e-12, "column {}", c.column);
            }
        }
    }

    #[test]
    fn trajectories_follow_support(base in any_base(), probs in any_probs(), seed in any::<u64>()) {
        let t = simulate(&base, &probs, 0, 300, seed);
        prop_assert_eq!(t.states.len(), 301);
        for w in t.states.windows(2) {
            prop_assert!(transition_row(w[0], &base, &probs).prob(w[1]) > 0.0);
        }
        prop_assert_eq!(t, simulate(&base, &probs, 0, 300, seed));
    }

    #[test]
    fn renorm_vanishes(d in 2u64..4, p in 0.1f64..=1.0, n2 in 6usize..20, r in 1u64..3) {
        let rep = renorm_check(r, n2, &BaseSeq::constant(d).unwrap(), &ProbSeq::constant(p).unwrap());
        if let Ok(rep) = rep {
            prop_assert!(rep.max_diff() < 1e-12);
        }
    }
}
