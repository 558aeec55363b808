use std::collections::BTreeSet;

use attrfilter::attackkit::{asv_trials, auprc, uar};
use attrfilter::datakit::*;
use attrfilter::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_records(n: usize, seed: u64) -> Vec<EmbeddingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| EmbeddingRecord {
            speaker_id: format!("s{}", i % 17),
            utterance_id: format!("u{i}"),
            vector: (0..5).map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>()).collect(),
            sex: match i % 3 {
                0 => None,
                1 => Some(Sex::Male),
                _ => Some(Sex::Female),
            },
            age: (i % 2 == 0).then(|| rng.gen_range(18.0..90.0)),
        })
        .collect()
}

#[test]
fn embeddings_round_trip_exactly() {
    let records = random_records(1000, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    write_embeddings(&records, &path).unwrap();
    assert_eq!(read_embeddings(&path).unwrap(), records);
}

#[test]
fn missing_age_is_absent_not_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    std::fs::write(&path, "{\"speaker_id\":\"a\",\"utterance_id\":\"u\",\"vector\":[1,2],\"sex\":\"f\"}\n").unwrap();
    let r = read_embeddings(&path).unwrap();
    assert_eq!(r[0].age, None);
    assert_eq!(r[0].sex, Some(Sex::Female));
}

#[test]
fn malformed_files_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let good = "{\"speaker_id\":\"a\",\"utterance_id\":\"u1\",\"vector\":[1,2]}";
    for (body, line) in [
        (format!("{good}\n{{\"speaker_id\":\"a\",\"utterance_id\":\"u1\",\"vector\":[3,4]}}\n"), 2),
        (format!("{good}\nnot json\n"), 2),
        (format!("\n{good}\n{{\"speaker_id\":\"a\",\"utterance_id\":\"u2\",\"vector\":[1]}}\n"), 3),
    ] {
        std::fs::write(&path, body).unwrap();
        match read_embeddings(&path) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line),
            other => panic!("{other:?}"),
        }
    }
    let mut dup = random_records(3, 2);
    dup[2].utterance_id = dup[0].utterance_id.clone();
    assert!(write_embeddings(&dup, &path).is_err());
    let mut nan = random_records(3, 2);
    nan[1].vector[0] = f64::NAN;
    assert!(validate_records(&nan).is_err());
}

fn small_synth(c: f64, seed: u64) -> SynthConfig {
    SynthConfig { num_speakers: 60, utterances_per_speaker: 10, attr_strength: c, seed, ..SynthConfig::default() }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let a = generate_synthetic(&small_synth(0.8, 3)).unwrap();
    let b = generate_synthetic(&small_synth(0.8, 3)).unwrap();
    let c = generate_synthetic(&small_synth(0.8, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn ground_truth_has_orthogonal_means_and_unit_direction() {
    let (_, truth) = generate_synthetic(&small_synth(0.8, 1)).unwrap();
    let u = &truth.direction;
    assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    for m in &truth.speaker_means {
        let dot: f64 = m.iter().zip(u).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
    }
}

/// Sex predicted by the sign of the projection on the planted direction.
fn oracle_uar(records: &[EmbeddingRecord], u: &[f64]) -> f64 {
    let (preds, labels): (Vec<usize>, Vec<usize>) = records
        .iter()
        .map(|r| {
            let p: f64 = r.vector.iter().zip(u).map(|(a, b)| a * b).sum();
            (usize::from(p > 0.0), r.sex.unwrap().index())
        })
        .unzip();
    let u1 = uar(&preds, &labels).unwrap();
    u1.max(100.0 - u1)
}

#[test]
fn planted_attribute_is_linearly_recoverable() {
    let (records, truth) = generate_synthetic(&SynthConfig::default()).unwrap();
    assert!(oracle_uar(&records, &truth.direction) >= 95.0);
    let (records, truth) = generate_synthetic(&SynthConfig { attr_strength: 0.0, ..SynthConfig::default() }).unwrap();
    let u = oracle_uar(&records, &truth.direction);
    assert!((47.0..=53.0).contains(&u), "{u}");
}

#[test]
fn continuous_ages_follow_the_planted_offset() {
    let cfg = SynthConfig { attribute: AttributeKind::Continuous, ..small_synth(1.0, 2) };
    let (records, truth) = generate_synthetic(&cfg).unwrap();
    for r in &records {
        let age = r.age.unwrap();
        assert!((20.0..=80.0).contains(&age));
        let p: f64 = r.vector.iter().zip(&truth.direction).map(|(a, b)| a * b).sum();
        assert!((p - (age - 50.0) / 50.0).abs() < 5.0 * cfg.sigma_utt);
    }
}

#[test]
fn same_speaker_trials_outscore_different_speaker_trials() {
    let (records, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let parts = make_partitions(&records, PartitionRatios { train_vq: 100.0, train_att: 50.0, test_att: 50.0 }, 1000, 0).unwrap();
    let te = Dataset::from_records(parts.select(&records, Role::TestAtt), AttributeKind::Discrete).unwrap();
    let scores = asv_trials(&te.x, &te.utterance_ids, &parts.trials).unwrap();
    // AUPRC of 99% or more on balanced trials implies a ROC AUC at least as high here
    assert!(auprc(&scores).unwrap() >= 99.0);
}

#[test]
fn partitions_are_disjoint_and_sized() {
    let (records, _) = generate_synthetic(&small_synth(0.8, 5)).unwrap();
    let p = make_partitions(&records, PartitionRatios { train_vq: 30.0, train_att: 20.0, test_att: 10.0 }, 200, 1).unwrap();
    assert_eq!((p.train_vq.len(), p.train_att.len(), p.test_att.len()), (30, 20, 10));
    let sets: Vec<BTreeSet<&String>> = [&p.train_vq, &p.train_att, &p.test_att].iter().map(|s| s.iter().collect()).collect();
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(sets[i].is_disjoint(&sets[j]));
        }
    }
    let t = p.trials.iter().filter(|t| t.target).count();
    assert!((t as i64 - (p.trials.len() - t) as i64).abs() <= 1);
    p.validate(Some(&records)).unwrap();

    let f = make_partitions(&records, PartitionRatios { train_vq: 0.5, train_att: 0.3, test_att: 0.2 }, 10, 1).unwrap();
    assert!((f.train_vq.len() as i64 - 30).abs() <= 1);
    assert!((f.test_att.len() as i64 - 12).abs() <= 1);

    assert!(make_partitions(&records, PartitionRatios { train_vq: 50.0, train_att: 20.0, test_att: 10.0 }, 10, 1).is_err());

    let mut leaky = p.clone();
    leaky.test_att.push(leaky.train_vq[0].clone());
    assert!(leaky.validate(None).is_err());
}

#[test]
fn trials_round_trip_and_report_bad_lines() {
    let trials = vec![
        TrialPair { target: true, enroll: "a".into(), test: "b".into() },
        TrialPair { target: false, enroll: "a".into(), test: "c".into() },
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    let mut buf = Vec::new();
    write_trials_to(&trials, &mut buf).unwrap();
    std::fs::write(&path, &buf).unwrap();
    assert_eq!(read_trials(&path).unwrap(), trials);
    std::fs::write(&path, "1 a b\n2 a c\n").unwrap();
    assert!(matches!(read_trials(&path), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn batches_are_balanced() {
    let labels: Vec<usize> = (0..1000).map(|i| usize::from(i % 3 == 0)).collect();
    let attr = AttributeValues::Discrete(labels.clone());
    let batches = balanced_batches(&attr, 128, 7).unwrap();
    assert!(!batches.is_empty());
    for b in &batches {
        assert_eq!(b.len(), 128);
        assert_eq!(b.iter().filter(|&&i| labels[i] == 1).count(), 64);
    }
    assert!(balanced_batches(&AttributeValues::Discrete(vec![1; 300]), 128, 0).is_err());
}

#[test]
fn batch_order_depends_on_seed_but_not_the_multiset() {
    let attr = AttributeValues::Discrete((0..512).map(|i| i % 2).collect());
    let a = balanced_batches(&attr, 128, 1).unwrap();
    let b = balanced_batches(&attr, 128, 2).unwrap();
    assert_ne!(a, b);
    let flat = |v: &Vec<Vec<usize>>| {
        let mut f: Vec<usize> = v.concat();
        f.sort();
        f
    };
    assert_eq!(flat(&a), flat(&b));
    let cont = AttributeValues::Continuous((0..300).map(f64::from).collect());
    let c = balanced_batches(&cont, 128, 1).unwrap();
    assert_eq!(c.len(), 2);
}

#[test]
fn conditioning_strategies() {
    let prior = LogitPrior { mean: vec![1.0, -2.0], std: vec![0.5, 2.0] };
    let m1 = sample_conditioning(&prior, ConditioningStrategy::Mean, 1, 4).unwrap();
    let m2 = sample_conditioning(&prior, ConditioningStrategy::Mean, 9, 4).unwrap();
    assert_eq!(m1, m2);
    assert!(m1.iter_rows().all(|r| r == [1.0, -2.0]));

    let n = 100_000;
    let g = sample_conditioning(&prior, ConditioningStrategy::Gaussian, 3, n).unwrap();
    for d in 0..2 {
        let mean = g.iter_rows().map(|r| r[d]).sum::<f64>() / n as f64;
        assert!((mean - prior.mean[d]).abs() <= 3.0 * prior.std[d] / (n as f64).sqrt());
    }
    let flat = LogitPrior { mean: vec![0.3], std: vec![0.0] };
    assert_eq!(
        sample_conditioning(&flat, ConditioningStrategy::Gaussian, 1, 5).unwrap(),
        sample_conditioning(&flat, ConditioningStrategy::Mean, 1, 5).unwrap()
    );
    assert!(sample_conditioning(&prior, ConditioningStrategy::True, 1, 5).is_err());

    let fitted = fit_logit_prior(&g).unwrap();
    assert!((fitted.std[1] - 2.0).abs() < 0.05);
}

#[test]
fn dataset_requires_the_chosen_label() {
    let records = random_records(30, 4);
    assert!(Dataset::from_records(&records, AttributeKind::Discrete).is_err());
    let labelled: Vec<_> = records.iter().filter(|r| r.sex.is_some()).collect();
    let d = Dataset::from_records(labelled, AttributeKind::Discrete).unwrap();
    assert_eq!(d.dim(), 5);
    assert!(d.num_speakers() <= 17);
}

proptest! {
    #[test]
    fn partitions_stay_disjoint(seed in 0u64..1000, a in 5usize..16, b in 5usize..16, c in 3usize..8) {
        let (records, _) = generate_synthetic(&SynthConfig { num_speakers: 40, utterances_per_speaker: 3, dim: 4, ..SynthConfig::default() }).unwrap();
        let p = make_partitions(&records, PartitionRatios { train_vq: a as f64, train_att: b as f64, test_att: c as f64 }, 20, seed).unwrap();
        prop_assert!(p.validate(Some(&records)).is_ok());
        let test: BTreeSet<&String> = p.test_att.iter().collect();
        for t in &p.trials {
            let spk = |u: &str| records.iter().find(|r| r.utterance_id == u).unwrap().speaker_id.clone();
            prop_assert!(test.contains(&spk(&t.enroll)) && test.contains(&spk(&t.test)));
            prop_assert_eq!(t.target, spk(&t.enroll) == spk(&t.test));
        }
    }
}
