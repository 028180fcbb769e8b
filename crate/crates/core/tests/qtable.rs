mod common;

use std::collections::BTreeSet;

use fraglearn_chem::parse_smiles;
use fraglearn_core::qtable::decomposition_keys;
use fraglearn_core::{apply_cuts, cuttable_bonds, ConnectionKey, CoreError, Fragment, QParams, QTable, UpdateMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn half() -> QTable {
    QTable::new(QParams { epsilon: 0.1, alpha: 0.5, ..QParams::default() })
}

fn key() -> ConnectionKey {
    ConnectionKey::new("[*:1]CO", 0, "[*:1]C", 0)
}

#[test]
fn worked_update_sequence() {
    let mut q = half();
    assert!((q.update(&key(), 1.0) - 0.55).abs() < 1e-12);
    assert!((q.update(&key(), 1.0) - 0.775).abs() < 1e-12);
    let mut q = half();
    q.update(&key(), 1.0);
    assert!((q.update(&key(), 0.0) - 0.275).abs() < 1e-12);
    let fixed = q.get(&key()).unwrap().q;
    assert_eq!(q.update(&key(), fixed), fixed);
    assert_eq!(q.get(&key()).unwrap().visits, 3);
}

#[test]
fn reconstruction_on_shared_connection() {
    let m = parse_smiles("CCO").unwrap();
    let d = apply_cuts(&m, &BTreeSet::from([m.bond_between(0, 1).unwrap()])).unwrap();
    let mut q = half();
    q.reward_reconstruction(&d, 1.0);
    let k = &decomposition_keys(&d)[0];
    assert!((q.get(k).unwrap().q - 0.55).abs() < 1e-12);
    q.reward_reconstruction(&d, 1.0);
    assert!((q.get(k).unwrap().q - 0.775).abs() < 1e-12);
    let identity = apply_cuts(&m, &BTreeSet::new()).unwrap();
    let before = q.clone();
    q.reward_reconstruction(&identity, 1.0);
    assert_eq!(q.to_json(), before.to_json());
}

#[test]
fn lazy_registration() {
    let mut q = QTable::new(QParams::default());
    let frags = [Fragment::from_key("[*:1]C").unwrap(), Fragment::from_key("[*:1]O").unwrap()];
    assert_eq!(q.insert_fragments(&frags), 2);
    assert!(q.is_empty());
    assert!(q.is_known("[*:1]C") && q.is_known("[*:1]O"));
    assert_eq!(q.insert_fragments(&frags), 0);
    let k = ConnectionKey::new("[*:1]C", 0, "[*:1]O", 0);
    assert_eq!(q.q_or_prior(&k), 0.1);
    q.update(&k, 1.0);
    assert_eq!(q.len(), 1);
    assert_eq!(q.get(&k).unwrap().visits, 1);
}

#[test]
fn distributing_rewards() {
    let mut q = QTable::new(QParams { alpha: 1.0, ..QParams::default() });
    let a = ConnectionKey::new("[*:1]C", 0, "[*:1]CC[*:2]", 0);
    let b = ConnectionKey::new("[*:1]O", 0, "[*:1]CC[*:2]", 1);
    let both = [a.clone(), b.clone()];
    q.distribute_rewards(&[(&both, 0.6)], &[0.2]).unwrap();
    assert!((q.get(&a).unwrap().q - 0.8).abs() < 1e-12);
    assert!((q.get(&b).unwrap().q - 0.8).abs() < 1e-12);

    let mut q = half();
    let only_a = [a.clone()];
    q.distribute_rewards(&[(&only_a, 1.0), (&only_a, 0.0)], &[0.0, 0.0]).unwrap();
    assert_eq!(q.get(&a).unwrap().visits, 2);
    assert!((q.get(&a).unwrap().q - 0.275).abs() < 1e-12);

    let before = q.to_json();
    q.distribute_rewards(&[], &[]).unwrap();
    assert_eq!(q.to_json(), before);
    assert!(q.distribute_rewards(&[(&only_a, 1.0)], &[]).is_err());
}

#[test]
fn sum_mode_accumulates() {
    let mut q = QTable::new(QParams { mode: UpdateMode::Sum, ..QParams::default() });
    q.update(&key(), 1.0);
    assert!((q.update(&key(), 0.5) - 1.6).abs() < 1e-12);
}

#[test]
fn ten_thousand_keys_are_orientation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut q = half();
    for _ in 0..10_000 {
        let k = common::oracle::random_key(&mut rng);
        let s = k.swapped();
        assert_eq!(ConnectionKey::new(s.a.clone(), s.site_a, s.b.clone(), s.site_b), k);
        assert!(k.is_normalized());
        let r = rng.gen_range(0.0..1.0);
        let via_key = q.update(&k, r);
        assert_eq!(q.get(&s).unwrap().q, via_key);
        let visits = q.get(&k).unwrap().visits;
        q.update(&s, r);
        assert_eq!(q.get(&k).unwrap().visits, visits + 1);
    }
    assert!(q.entries().all(|(k, _)| k.is_normalized()));
}

#[test]
fn persistence_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qtable.json");
    let mut q = QTable::new(QParams { epsilon: 0.05, alpha: 0.3, ..QParams::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        q.update(&common::oracle::random_key(&mut rng), rng.gen_range(0.0..1.0));
    }
    q.persist(&path).unwrap();
    let back = QTable::restore(&path).unwrap();
    assert_eq!(back.to_json(), q.to_json());
    assert!(back.entries().zip(q.entries()).all(|(a, b)| a.0 == b.0 && a.1.q.to_bits() == b.1.q.to_bits() && a.1.visits == b.1.visits));

    let empty = QTable::new(QParams { epsilon: 0.2, alpha: 0.7, ..QParams::default() });
    empty.persist(&path).unwrap();
    let back = QTable::restore(&path).unwrap();
    assert!(back.is_empty());
    assert_eq!((back.params().epsilon, back.params().alpha), (0.2, 0.7));
}

#[test]
fn version_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qtable.json");
    let text = half().to_json().replace("\"version\": 1", "\"version\": 7");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(QTable::restore(&path), Err(CoreError::FormatVersionMismatch { expected: 1, found: 7 })));
    assert!(matches!(QTable::restore(&dir.path().join("missing.json")), Err(CoreError::Io { .. })));
}

#[test]
fn warm_start_lifts_every_training_connection() {
    let mut q = QTable::new(QParams::default());
    let decomps: Vec<_> = common::dataset("acrylates").iter().map(|m| apply_cuts(m, &cuttable_bonds(m)).unwrap()).collect();
    for d in &decomps {
        q.reward_reconstruction(d, 1.0);
    }
    for d in &decomps {
        for k in decomposition_keys(d) {
            assert!(q.get(&k).unwrap().q > q.epsilon());
        }
    }
}

proptest! {
    #[test]
    fn scores_stay_within_reward_bounds(
        epsilon in 0.0f64..1.0,
        alpha in 0.01f64..=1.0,
        bound in 0.0f64..=1.0,
        rewards in proptest::collection::vec(0.0f64..=1.0, 1..60),
    ) {
        let mut q = QTable::new(QParams { epsilon, alpha, ..QParams::default() });
        for r in rewards {
            let v = q.update(&key(), r * bound);
            prop_assert!(v.is_finite());
            prop_assert!(v >= epsilon.min(0.0) - 1e-12 && v <= epsilon.max(bound) + 1e-12);
        }
    }

    #[test]
    fn larger_rewards_give_larger_scores(
        alpha in 0.01f64..=1.0,
        steps in proptest::collection::vec((0.0f64..0.9, 0.001f64..0.1), 1..40),
    ) {
        let mut q = QTable::new(QParams { alpha, ..QParams::default() });
        let low = ConnectionKey::new("[*:1]C", 0, "[*:1]O", 0);
        let high = ConnectionKey::new("[*:1]C", 0, "[*:1]N", 0);
        for (r, gap) in steps {
            q.update(&low, r);
            q.update(&high, r + gap);
        }
        prop_assert!(q.get(&high).unwrap().q > q.get(&low).unwrap().q);
    }

    #[test]
    fn normalization_is_symmetric(a in "[A-Za-z*:\\[\\]1-3]{1,8}", sa in 0usize..4, b in "[A-Za-z*:\\[\\]1-3]{1,8}", sb in 0usize..4) {
        let k = ConnectionKey::new(a.clone(), sa, b.clone(), sb);
        prop_assert_eq!(k.clone(), ConnectionKey::new(b, sb, a, sa));
        prop_assert!((k.a.as_str(), k.site_a) <= (k.b.as_str(), k.site_b));
    }
}
