use proptest::prelude::*;
use qrobust::attacks::{attack_success_rate, fgsm, label_flip, pgd, quid_poison, quid_similarity_table, QuidTarget};
use qrobust::data::{synth_blobs, Dataset};
use qrobust::defend::{anneal_mask, defended_train, mask_energy, QDetectConfig};
use qrobust::encode::{EncodingSpec, FeatureBounds};
use qrobust::model::{Cmlp, CmlpConfig, ExecMode, Model, Qmlp, QmlpConfig};
use qrobust::qcore::state_fidelity;
use qrobust::rng::{stream, Rng as ChaRng, Stream};
use qrobust::train::{cross_entropy, one_hot, TrainConfig, Trainer};
use rand::Rng;
use std::f64::consts::PI;

fn scaled_blobs(seed: u64, classes: usize, dim: usize, per_class: usize, spread: f64, range: (f64, f64)) -> Dataset {
    let ds = synth_blobs(classes, dim, per_class, spread, &mut stream(seed, Stream::Data)).unwrap();
    let bounds = FeatureBounds::fit(&ds.features).unwrap();
    ds.map_features(|x| bounds.apply(x, range))
}

#[test]
fn quid_matches_brute_force_fidelity_table() {
    let enc = EncodingSpec::dense_angle(4);
    let ds = scaled_blobs(21, 4, 8, 12, 0.4, (-PI, PI));
    // Tr(ρ_c |ψ><ψ|) = mean over class members of |<φ|ψ>|²
    let states: Vec<_> = ds.features.iter().map(|x| enc.prepare_state(x).unwrap()).collect();
    let oracle: Vec<Vec<f64>> = states
        .iter()
        .map(|s| {
            (0..4)
                .map(|c| {
                    let members: Vec<_> = states.iter().zip(&ds.labels).filter(|(_, &l)| l == c).collect();
                    members.iter().map(|(m, _)| state_fidelity(s, m).unwrap()).sum::<f64>() / members.len() as f64
                })
                .collect()
        })
        .collect();
    let table = quid_similarity_table(&ds, &enc).unwrap();
    for (row, want) in table.iter().zip(&oracle) {
        for (a, b) in row.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    let (poisoned, records) =
        quid_poison(&ds, &enc, 0.5, QuidTarget::LeastSimilar, &mut stream(2, Stream::Attack)).unwrap();
    assert_eq!(records.len(), 24);
    assert_eq!(poisoned.features, ds.features);
    for r in &records {
        let row = &oracle[r.index];
        let want = (0..4)
            .filter(|&c| c != r.original)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if row[b] <= row[c] => Some(b),
                _ => Some(c),
            })
            .unwrap();
        assert_eq!(r.poisoned, want, "sample {}", r.index);
        assert_eq!(poisoned.labels[r.index], want);
    }
    let touched: Vec<usize> = records.iter().map(|r| r.index).collect();
    for i in 0..ds.len() {
        if !touched.contains(&i) {
            assert_eq!(poisoned.labels[i], ds.labels[i]);
        }
    }
}

#[test]
fn poisoning_never_touches_features() {
    let ds = scaled_blobs(3, 3, 4, 10, 0.3, (0.0, PI));
    let (p, _) = label_flip(&ds, 0.7, &mut stream(1, Stream::Attack)).unwrap();
    let bits = |d: &Dataset| d.features.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&p), bits(&ds));
    let (q, _) = quid_poison(
        &ds,
        &EncodingSpec::angle(4),
        0.7,
        QuidTarget::MostSimilar,
        &mut stream(1, Stream::Attack),
    )
    .unwrap();
    assert_eq!(bits(&q), bits(&ds));
}

#[test]
fn binary_quid_swaps_selected() {
    let ds = scaled_blobs(4, 2, 4, 10, 0.3, (0.0, PI));
    let (p, recs) = quid_poison(
        &ds,
        &EncodingSpec::angle(4),
        0.4,
        QuidTarget::LeastSimilar,
        &mut stream(5, Stream::Attack),
    )
    .unwrap();
    assert_eq!(recs.len(), 8);
    for r in recs {
        assert_eq!(p.labels[r.index], 1 - ds.labels[r.index]);
    }
}

fn random_quantum(rng: &mut ChaRng) -> Qmlp {
    let n = rng.random_range(1..=3);
    Qmlp::new(QmlpConfig::angle(n, rng.random_range(1..=2), 3), rng).unwrap()
}

#[test]
fn one_step_pgd_is_fgsm_bitwise() {
    let mut rng = stream(31, Stream::Attack);
    for _ in 0..100 {
        let m = random_quantum(&mut rng);
        let x: Vec<f64> = (0..m.input_dim()).map(|_| rng.random_range(0.0..PI)).collect();
        let y = rng.random_range(0..3);
        let eps = rng.random_range(0.0..0.5);
        let f = fgsm(&m, &x, y, eps, (0.0, PI)).unwrap();
        let p = pgd::<_, ChaRng>(&m, &x, y, eps, eps, 1, (0.0, PI), None).unwrap();
        let fb: Vec<u64> = f.iter().map(|v| v.to_bits()).collect();
        let pb: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        assert_eq!(fb, pb);
    }
}

#[test]
fn fgsm_does_not_decrease_loss_of_linear_model() {
    let mut rng = stream(41, Stream::Init);
    for _ in 0..50 {
        let cfg = CmlpConfig {
            input_dim: 3,
            hidden_dim: 1,
            n_classes: 2,
        };
        let mut m = Cmlp::new(cfg, &mut rng).unwrap();
        // a positive hidden bias large enough keeps ReLU in its linear region
        m.weights.b1 = vec![50.0];
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = rng.random_range(0..2);
        let adv = fgsm(&m, &x, y, 0.2, (-10.0, 10.0)).unwrap();
        let l = |v: &[f64]| cross_entropy(&m.forward(v, &ExecMode::Pure).unwrap(), &one_hot(y, 2));
        assert!(l(&adv) >= l(&x) - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pgd_respects_ball_and_bounds(
        seed in any::<u64>(),
        eps in 0.0f64..1.0,
        step in 0.001f64..0.5,
        iters in 1usize..6,
        random_start in any::<bool>(),
    ) {
        let mut rng = stream(seed, Stream::Attack);
        let m = random_quantum(&mut rng);
        let x: Vec<f64> = (0..m.input_dim()).map(|_| rng.random_range(0.0..=PI)).collect();
        let y = rng.random_range(0..3);
        let start = stream(seed ^ 1, Stream::Attack);
        let adv = if random_start {
            let mut r = start;
            pgd(&m, &x, y, eps, step, iters, (0.0, PI), Some(&mut r)).unwrap()
        } else {
            pgd::<_, ChaRng>(&m, &x, y, eps, step, iters, (0.0, PI), None).unwrap()
        };
        for (a, x0) in adv.iter().zip(&x) {
            prop_assert!((a - x0).abs() <= eps + 1e-12);
            prop_assert!((0.0..=PI).contains(a));
        }
    }
}

#[test]
fn attack_success_counts_misclassified() {
    let m = Qmlp::new(QmlpConfig::angle(2, 1, 2), &mut stream(1, Stream::Init)).unwrap();
    let xs = vec![vec![0.1, 0.2], vec![2.0, 3.0], vec![1.0, 1.0]];
    let pred: Vec<usize> = xs.iter().map(|x| m.predict(x, &ExecMode::Pure).unwrap()).collect();
    let wrong: Vec<usize> = pred.iter().map(|p| 1 - p).collect();
    assert_eq!(attack_success_rate(&m, &xs, &pred, &ExecMode::Pure).unwrap(), 0.0);
    assert_eq!(attack_success_rate(&m, &xs, &wrong, &ExecMode::Pure).unwrap(), 100.0);
    assert!(attack_success_rate(&m, &[], &[], &ExecMode::Pure).is_err());
}

fn exhaustive_min(losses: &[f64], cfg: &QDetectConfig) -> f64 {
    let n = losses.len();
    (0u32..1 << n)
        .map(|bits| {
            let m: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            mask_energy(&m, losses, cfg.anneal_coeff, cfg.keep_fraction)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn annealer_near_optimal_on_small_problems() {
    let cfg = QDetectConfig::default();
    let mut data_rng = stream(100, Stream::Data);
    let mut hits = 0;
    for seed in 0..100 {
        let n = 8 + (seed as usize % 5);
        let losses: Vec<f64> = (0..n).map(|_| data_rng.random_range(0.0..3.0)).collect();
        let best = exhaustive_min(&losses, &cfg);
        let (mask, e) = anneal_mask(&losses, &cfg, &mut stream(seed, Stream::Defense)).unwrap();
        assert!((mask_energy(&mask, &losses, 1.0, 0.7) - e).abs() < 1e-9);
        assert!(e <= mask_energy(&vec![true; n], &losses, 1.0, 0.7) + 1e-12);
        // a random mask of size round(κN)
        let k = (0.7 * n as f64).round() as usize;
        let idx = rand::seq::index::sample(&mut data_rng, n, k).into_vec();
        let random: Vec<bool> = (0..n).map(|i| idx.contains(&i)).collect();
        assert!(e <= mask_energy(&random, &losses, 1.0, 0.7) + 1e-12);
        if e <= 1.05 * best + 1e-12 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits}/100 within 5%");
}

#[test]
fn defended_training_downweights_flipped_samples() {
    for seed in 0..3u64 {
        let ds = scaled_blobs(seed, 4, 4, 40, 0.15, (0.0, PI));
        let (poisoned, records) = label_flip(&ds, 0.3, &mut stream(seed, Stream::Attack)).unwrap();
        let mut model = Qmlp::new(QmlpConfig::angle(4, 2, 4), &mut stream(seed, Stream::Init)).unwrap();
        let mut trainer = Trainer::new(TrainConfig {
            epochs: 10,
            lr: 0.01,
            batch_size: 16,
            seed,
            ..Default::default()
        })
        .unwrap();
        let q = QDetectConfig {
            seed,
            ..Default::default()
        };
        let run = defended_train(&mut model, &poisoned, None, &mut trainer, &q, &ExecMode::Pure).unwrap();
        assert_eq!(run.weight_history.len(), 10);
        let w = &run.weight_history[9].0;
        assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        let flipped: Vec<usize> = records.iter().map(|r| r.index).collect();
        let (mut pw, mut cw) = (Vec::new(), Vec::new());
        for (i, v) in w.iter().enumerate() {
            if flipped.contains(&i) {
                pw.push(*v)
            } else {
                cw.push(*v)
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&pw) < mean(&cw),
            "seed {seed}: poisoned {} vs clean {}",
            mean(&pw),
            mean(&cw)
        );
    }
}

#[test]
fn zero_epoch_defense_leaves_model() {
    let ds = scaled_blobs(1, 2, 2, 5, 0.2, (0.0, PI));
    let mut model = Qmlp::new(QmlpConfig::angle(2, 1, 2), &mut stream(1, Stream::Init)).unwrap();
    let before = model.params();
    let mut trainer = Trainer::new(TrainConfig {
        epochs: 0,
        ..Default::default()
    })
    .unwrap();
    let run = defended_train(
        &mut model,
        &ds,
        None,
        &mut trainer,
        &QDetectConfig::default(),
        &ExecMode::Pure,
    )
    .unwrap();
    assert!(run.weight_history.is_empty());
    assert_eq!(model.params(), before);
}

#[test]
fn clean_full_keep_weights_stay_near_one() {
    let ds = scaled_blobs(2, 2, 2, 10, 0.2, (0.0, PI));
    let mut model = Qmlp::new(QmlpConfig::angle(2, 1, 2), &mut stream(2, Stream::Init)).unwrap();
    let mut trainer = Trainer::new(TrainConfig {
        epochs: 5,
        lr: 0.01,
        ..Default::default()
    })
    .unwrap();
    let q = QDetectConfig {
        keep_fraction: 1.0,
        ..Default::default()
    };
    let run = defended_train(&mut model, &ds, None, &mut trainer, &q, &ExecMode::Pure).unwrap();
    let last = &run.weight_history.last().unwrap().0;
    let mean = last.iter().sum::<f64>() / last.len() as f64;
    assert!(mean > 0.95, "mean weight {mean}");
}
