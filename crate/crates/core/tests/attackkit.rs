use attrfilter::attackkit::*;
use attrfilter::datakit::{AttributeKind, AttributeValues, TrialPair};
use attrfilter::diffcore::Tensor;
use attrfilter::filtermodel::ClassifierSchedule;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(P_miss, P_fa)` at every candidate threshold, ascending, counted directly:
/// each distinct score, then one threshold above all of them.
fn brute_points(s: &ScoreSet) -> Vec<(f64, f64)> {
    let mut thresholds = s.scores.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let nt = s.labels.iter().filter(|&&l| l).count() as f64;
    let nn = s.labels.len() as f64 - nt;
    thresholds
        .iter()
        .map(|&t| {
            let miss = s.scores.iter().zip(&s.labels).filter(|(&x, &l)| l && x < t).count() as f64;
            let fa = s.scores.iter().zip(&s.labels).filter(|(&x, &l)| !l && x >= t).count() as f64;
            (miss / nt, fa / nn)
        })
        .collect()
}

fn brute_eer(s: &ScoreSet) -> f64 {
    let pts = brute_points(s);
    for i in 0..pts.len() - 1 {
        let (m1, f1) = pts[i];
        let (m2, f2) = pts[i + 1];
        if m1 <= f1 && m2 >= f2 {
            // intersection of the segment with m = f
            let denom = (m2 - m1) - (f2 - f1);
            let a = if denom == 0.0 { 0.0 } else { (f1 - m1) / denom };
            return 100.0 * (m1 + a * (m2 - m1));
        }
    }
    panic!("no crossing");
}

fn brute_min_dcf(s: &ScoreSet, p: f64, cm: f64, cf: f64) -> f64 {
    brute_points(s).iter().map(|&(m, f)| cm * p * m + cf * (1.0 - p) * f).fold(f64::INFINITY, f64::min) / (cm * p).min(cf * (1.0 - p))
}

fn brute_auprc(s: &ScoreSet) -> f64 {
    let mut thresholds = s.scores.clone();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let npos = s.labels.iter().filter(|&&l| l).count() as f64;
    let mut prev_r = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = s.scores.iter().zip(&s.labels).filter(|(&x, &l)| l && x >= t).count() as f64;
        let all = s.scores.iter().filter(|&&x| x >= t).count() as f64;
        let r = tp / npos;
        ap += (r - prev_r) * tp / all;
        prev_r = r;
    }
    100.0 * ap
}

fn random_set(rng: &mut ChaCha8Rng) -> ScoreSet {
    let n = rng.gen_range(4..60);
    // coarse rounding creates ties
    let coarse = rng.gen_bool(0.5);
    loop {
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let scores = labels
            .iter()
            .map(|&l| {
                let v: f64 = rng.gen_range(-1.0..1.0) + if l { 0.5 } else { 0.0 };
                if coarse {
                    (v * 4.0).round() / 4.0
                } else {
                    v
                }
            })
            .collect();
        return ScoreSet::new(scores, labels).unwrap();
    }
}

#[test]
fn detection_metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let s = random_set(&mut rng);
        let e = eer(&s).unwrap();
        assert!((e - brute_eer(&s)).abs() <= 1e-10, "eer {e} vs {}", brute_eer(&s));
        for (p, cm, cf) in [(0.01, 1.0, 1.0), (0.05, 1.0, 1.0), (0.5, 2.0, 1.0)] {
            let d = min_dcf(&s, DcfParams { p_target: p, c_miss: cm, c_fa: cf }).unwrap();
            assert!((d - brute_min_dcf(&s, p, cm, cf)).abs() <= 1e-10);
        }
        assert!((auprc(&s).unwrap() - brute_auprc(&s)).abs() <= 1e-10);
    }
}

#[test]
fn eer_examples() {
    let sep = ScoreSet::from_classes(&[1.0; 5], &[0.0; 5]).unwrap();
    assert_eq!(eer(&sep).unwrap(), 0.0);
    let same = ScoreSet::from_classes(&[0.3; 4], &[0.3; 6]).unwrap();
    assert_eq!(eer(&same).unwrap(), 50.0);
    // thresholds 0.8 → (1/3, 1/3)
    let hand = ScoreSet::from_classes(&[0.9, 0.7, 0.3], &[0.8, 0.2, 0.1]).unwrap();
    assert!((eer(&hand).unwrap() - 100.0 / 3.0).abs() < 1e-12);
    assert!((eer(&hand).unwrap() - brute_eer(&hand)).abs() < 1e-12);
}

#[test]
fn min_dcf_examples() {
    let p = DcfParams::default();
    let sep = ScoreSet::from_classes(&[2.0, 3.0, 4.0], &[-1.0, 0.0, 1.0]).unwrap();
    assert_eq!(min_dcf(&sep, p).unwrap(), 0.0);
    let hand = ScoreSet::from_classes(&[0.9, 0.7, 0.3], &[0.8, 0.2, 0.1]).unwrap();
    // best threshold accepts only 0.9: P_miss 2/3, P_fa 0 → (0.01·2/3)/0.01
    assert!((min_dcf(&hand, p).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        assert!(min_dcf(&random_set(&mut rng), p).unwrap() <= 1.0 + 1e-12);
    }
    assert!(min_dcf(&hand, DcfParams { p_target: 0.0, ..p }).is_err());
}

#[test]
fn auprc_examples() {
    let sep = ScoreSet::from_classes(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
    assert!((auprc(&sep).unwrap() - 100.0).abs() < 1e-12);
    let same = ScoreSet::new(vec![0.5; 6], vec![true, false, true, false, true, false]).unwrap();
    assert!((auprc(&same).unwrap() - 50.0).abs() < 1e-12);
    // recall steps at 0.9 (P=1) and 0.7 (P=2/3)
    let hand = ScoreSet::new(vec![0.9, 0.8, 0.7, 0.6], vec![true, false, true, false]).unwrap();
    assert!((auprc(&hand).unwrap() - 100.0 * (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn uar_examples() {
    assert_eq!(uar(&[0, 1, 1, 1], &[0, 0, 1, 1]).unwrap(), 75.0);
    assert_eq!(uar(&[1, 0, 1], &[1, 0, 1]).unwrap(), 100.0);
    assert_eq!(uar(&[1, 1, 1, 1], &[0, 1, 0, 1]).unwrap(), 50.0);
    assert!(uar(&[1], &[1, 0]).is_err());
}

#[test]
fn correlation_examples() {
    let t = [1.0, -2.0, 0.5, 3.0, -2.5];
    assert!((ccc(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    assert!((pcc(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    let zm: Vec<f64> = {
        let m = t.iter().sum::<f64>() / 5.0;
        t.iter().map(|v| v - m).collect()
    };
    let neg: Vec<f64> = zm.iter().map(|v| -v).collect();
    assert!((ccc(&neg, &zm).unwrap() + 1.0).abs() < 1e-12);
    assert!((pcc(&neg, &zm).unwrap() + 1.0).abs() < 1e-12);
    let c = 1.7;
    let shifted: Vec<f64> = t.iter().map(|v| v + c).collect();
    let var = {
        let m = t.iter().sum::<f64>() / 5.0;
        t.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 5.0
    };
    assert!((pcc(&shifted, &t).unwrap() - 1.0).abs() < 1e-12);
    assert!((ccc(&shifted, &t).unwrap() - 2.0 * var / (2.0 * var + c * c)).abs() < 1e-12);
}

#[test]
fn zebra_all_equal_scores_disclose_nothing() {
    for (nt, nn) in [(5, 5), (3, 9)] {
        let s = ScoreSet::from_classes(&vec![0.4; nt], &vec![0.4; nn]).unwrap();
        assert!(calibrate(&s).unwrap().iter().all(|&l| l == 0.0));
        assert_eq!(zebra(&s).unwrap(), Zebra { d_ece: 0.0, llr_max: 0.0 });
    }
}

#[test]
fn zebra_perfect_separation_hits_the_pav_boundary() {
    // 100 non-targets pool with one pseudo pair below: 1/102; the targets
    // pool with the pair above: 101/102; LLR = ln 101
    let tar: Vec<f64> = (0..100).map(|i| 10.0 + i as f64).collect();
    let non: Vec<f64> = (0..100).map(|i| -(i as f64)).collect();
    let z = zebra(&ScoreSet::from_classes(&tar, &non).unwrap()).unwrap();
    assert!((z.llr_max - 101f64.log2()).abs() < 1e-12, "{}", z.llr_max);
    assert!(z.d_ece > 0.0);
}

#[test]
fn zebra_shuffled_labels_disclose_less() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scores: Vec<f64> = (0..200).map(|i| i as f64 + rng.gen_range(0.0..0.5)).collect();
    let labels: Vec<bool> = (0..200).map(|i| i >= 100).collect();
    let base = zebra(&ScoreSet::new(scores.clone(), labels.clone()).unwrap()).unwrap().d_ece;
    for _ in 0..20 {
        let mut l = labels.clone();
        l.shuffle(&mut rng);
        assert!(zebra(&ScoreSet::new(scores.clone(), l).unwrap()).unwrap().d_ece <= base);
    }
}

#[test]
fn zebra_rejects_single_class() {
    assert!(zebra(&ScoreSet::new(vec![0.1, 0.2], vec![true, true]).unwrap()).is_err());
}

#[test]
fn score_sets_reject_bad_input() {
    assert!(ScoreSet::new(vec![0.1, f64::NAN], vec![true, false]).is_err());
    assert!(ScoreSet::new(vec![0.1], vec![true, false]).is_err());
    assert!(eer(&ScoreSet::new(vec![0.1, 0.2], vec![false, false]).unwrap()).is_err());
}

proptest! {
    #[test]
    fn pav_is_monotone_and_preserves_the_weighted_mean(
        pairs in prop::collection::vec((-5.0f64..5.0, 0.1f64..3.0), 1..40)
    ) {
        let (v, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let fit = pav(&v, &w);
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        let m0: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let m1: f64 = fit.iter().zip(&w).map(|(a, b)| a * b).sum();
        prop_assert!((m0 - m1).abs() < 1e-9 * (1.0 + m0.abs()));
    }

    #[test]
    fn detection_metrics_are_invariant_to_monotone_maps(
        raw in prop::collection::vec((-3.0f64..3.0, any::<bool>()), 4..50)
    ) {
        let (scores, labels): (Vec<f64>, Vec<bool>) = raw.into_iter().unzip();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let a = ScoreSet::new(scores.clone(), labels.clone()).unwrap();
        let b = ScoreSet::new(scores.iter().map(|s| 3.0 * s + 1.0).collect(), labels).unwrap();
        prop_assert!((eer(&a).unwrap() - eer(&b).unwrap()).abs() < 1e-9);
        prop_assert!((auprc(&a).unwrap() - auprc(&b).unwrap()).abs() < 1e-9);
        let p = DcfParams::default();
        prop_assert!((min_dcf(&a, p).unwrap() - min_dcf(&b, p).unwrap()).abs() < 1e-9);
        prop_assert!((zebra(&a).unwrap().d_ece - zebra(&b).unwrap().d_ece).abs() < 1e-9);
        let e = eer(&a).unwrap();
        prop_assert!((0.0..=100.0).contains(&e));
    }

    #[test]
    fn uar_stays_in_range(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..40)) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let u = uar(&p, &l).unwrap();
        prop_assert!((0.0..=100.0).contains(&u));
    }
}

#[test]
fn cosine_examples() {
    assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
}

#[test]
fn asv_trials_score_named_utterances() {
    let x = Tensor::from_rows(&[[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]).unwrap();
    let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let trials = vec![
        TrialPair { target: true, enroll: "a".into(), test: "b".into() },
        TrialPair { target: false, enroll: "a".into(), test: "c".into() },
    ];
    let s = asv_trials(&x, &ids, &trials).unwrap();
    assert_eq!(s.scores, vec![1.0, 0.0]);
    assert_eq!(eer(&s).unwrap(), 0.0);
    let missing = vec![TrialPair { target: true, enroll: "a".into(), test: "zz".into() }];
    assert!(asv_trials(&x, &ids, &missing).is_err());
}

fn separable(n: usize, seed: u64, strength: f64) -> (Tensor<f64>, AttributeValues) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let l = i % 2;
        for d in 0..6 {
            let shift = if d == 0 { if l == 1 { strength } else { -strength } } else { 0.0 };
            data.push(rng.gen_range(-1.0..1.0) + shift);
        }
        labels.push(l);
    }
    (Tensor::new(&[n, 6], data).unwrap(), AttributeValues::Discrete(labels))
}

fn small_attack() -> AttackerConfig {
    AttackerConfig {
        hidden: vec![16, 16],
        num_repeats: 3,
        schedule: ClassifierSchedule { epochs: 30, batch_size: 32, start_lr: 1e-3, max_lr: 1e-2 },
        ..AttackerConfig::default()
    }
}

#[test]
fn attacker_learns_a_planted_attribute_and_chance_without_one() {
    let (x, y) = separable(400, 1, 2.0);
    let (xt, yt) = separable(200, 2, 2.0);
    let m = train_attacker(&small_attack(), &x, &y, 3).unwrap();
    let metrics = evaluate_attacker(&m, &xt, &yt).unwrap();
    assert!(metrics["uar"] >= 95.0, "{metrics:?}");
    let (x0, y0) = separable(400, 4, 0.0);
    let (xt0, yt0) = separable(400, 5, 0.0);
    let m0 = train_attacker(&small_attack(), &x0, &y0, 3).unwrap();
    let u0 = evaluate_attacker(&m0, &xt0, &yt0).unwrap()["uar"];
    assert!((35.0..=65.0).contains(&u0), "{u0}");
}

#[test]
fn attacker_checkpoint_round_trip() {
    let (x, y) = separable(100, 1, 1.0);
    let m = train_attacker(&small_attack(), &x, &y, 7).unwrap();
    let mut buf = Vec::new();
    m.write(&mut buf).unwrap();
    let back = AttributeClassifier::read(&mut buf.as_slice()).unwrap();
    assert_eq!(back.outputs(&x).unwrap().data(), m.outputs(&x).unwrap().data());
    buf[0] = b'Z';
    assert!(AttributeClassifier::read(&mut buf.as_slice()).is_err());
}

#[test]
fn suite_is_reproducible_and_summarises_repeats() {
    let (x, y) = separable(200, 1, 2.0);
    let (xt, yt) = separable(100, 2, 2.0);
    let none = Tensor::zeros(&[0, 0]);
    let data = SuiteData {
        train_x: &x,
        train_labels: &y,
        train_conditioning: &none,
        informed_train_labels: None,
        test_x: &xt,
        test_labels: &yt,
        test_conditioning: &none,
    };
    let opts = SuiteOptions { config: small_attack(), attackers: vec![AttackerKind::Ignorant], conditioning: None, seed: 4 };
    let a = run_attack_suite(None, &data, &opts).unwrap();
    let b = run_attack_suite(None, &data, &opts).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let u = a.metric(AttackerKind::Ignorant, "uar").unwrap();
    assert_eq!(u.values.len(), 3);
    let mean = u.values.iter().sum::<f64>() / 3.0;
    assert!((u.mean - mean).abs() < 1e-12);
    assert!(a.metric(AttackerKind::Ignorant, "d_ece").is_some());
    assert!(a.metric(AttackerKind::Ignorant, "llr_max").is_some());
}

#[test]
fn continuous_attacker_reports_correlations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 300;
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = Tensor::new(&[n, 3], v.iter().flat_map(|&a| [a, rng.gen_range(-0.1..0.1), 0.3]).collect()).unwrap();
    let cfg = AttackerConfig { attribute: AttributeKind::Continuous, ..small_attack() };
    let y = AttributeValues::Continuous(v);
    let m = train_attacker(&cfg, &x, &y, 1).unwrap();
    let metrics = evaluate_attacker(&m, &x, &y).unwrap();
    assert!(metrics["pcc"] > 0.9, "{metrics:?}");
    assert!(metrics.contains_key("ccc"));
}

#[test]
fn metric_summary_statistics() {
    let s = MetricSummary::from_values(vec![1.0, 2.0, 4.0]);
    assert!((s.mean - 7.0 / 3.0).abs() < 1e-12);
    assert!((s.std - (((1.0f64 - 7.0 / 3.0).powi(2) + (2.0f64 - 7.0 / 3.0).powi(2) + (4.0f64 - 7.0 / 3.0).powi(2)) / 2.0).sqrt()).abs() < 1e-12);
    assert_eq!(s.median(), 2.0);
    assert_eq!(MetricSummary::from_values(vec![1.0, 3.0, 2.0, 10.0]).median(), 2.5);
}
