//! Executes an experiment config: data, training, attacks, defenses and
//! evaluation for every sweep cell and seed.

use std::time::Instant;

use qrobust::attacks::{fgsm_dataset, label_flip, pgd_dataset, quid_poison, success_rate};
use qrobust::data::{load_csv_features, load_mnist_idx, pca_fit, stratified_sample, synth_blobs, Dataset};
use qrobust::defend::defended_train;
use qrobust::encode::FeatureBounds;
use qrobust::model::{Classifier, ExecMode};
use qrobust::rng::{stream, Stream};
use qrobust::train::{predict_all, Metrics, Trainer};
use rayon::prelude::*;

use crate::config::{AttackSpec, DataSpec, DefenseSpec, ExperimentConfig, ModelSpec};
use crate::error::{BenchError, Result};
use crate::report::{relative_accuracy, Condition, EvalMode, ExperimentReport, Row};

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let external = match &config.data {
        DataSpec::Blobs { .. } => None,
        DataSpec::Mnist { images, labels } => Some(load_mnist_idx(images, labels)?),
        DataSpec::Csv { path } => Some(load_csv_features(path)?),
    };
    let jobs: Vec<(String, ExperimentConfig, u64)> = config
        .cells()
        .into_iter()
        .flat_map(|c| {
            config
                .seeds
                .iter()
                .map(move |&s| (c.label.clone(), c.config.clone(), s))
        })
        .collect();
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|(cell, cfg, seed)| run_seed(cell, cfg, *seed, external.as_ref()))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        name: config.name.clone(),
        config_hash: config.hash(),
        config_echo: config.to_toml(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rows: rows.into_iter().flatten().collect(),
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Train and test splits after PCA, before per-model rescaling.
struct Splits {
    train: Dataset,
    test: Dataset,
    bounds: FeatureBounds,
}

impl Splits {
    fn prepare(ds: &Dataset, bounds: &FeatureBounds, range: (f64, f64)) -> Dataset {
        ds.map_features(|x| {
            bounds
                .apply(x, range)
                .into_iter()
                .map(|v| v.clamp(range.0, range.1))
                .collect()
        })
    }

    fn for_model(&self, spec: &ModelSpec) -> (Dataset, Dataset) {
        let r = spec.input_range();
        (
            Self::prepare(&self.train, &self.bounds, r),
            Self::prepare(&self.test, &self.bounds, r),
        )
    }
}

fn load_splits(cfg: &ExperimentConfig, seed: u64, external: Option<&Dataset>) -> Result<Splits> {
    let raw = match (&cfg.data, external) {
        (
            &DataSpec::Blobs {
                classes,
                dim,
                per_class,
                spread,
            },
            _,
        ) => synth_blobs(classes, dim, per_class, spread, &mut stream(seed, Stream::Data))?,
        (_, Some(ds)) => ds.clone(),
        (_, None) => return Err(BenchError::Config("dataset was not loaded".into())),
    };
    let raw = match cfg.split.classes {
        Some(c) => raw.first_classes(c),
        None => raw,
    };
    let (mut train, mut test) = stratified_sample(
        &raw,
        cfg.split.train_per_class,
        cfg.split.test_per_class,
        &mut stream(seed, Stream::Split),
    )?;
    if let Some(k) = cfg.split.pca {
        let pca = pca_fit(&train.features, k)?;
        train = train.map_features(|x| pca.transform_one(x));
        test = test.map_features(|x| pca.transform_one(x));
    }
    let bounds = FeatureBounds::fit(&train.features)?;
    Ok(Splits { train, test, bounds })
}

/// Training set with poisoned labels, for the label-changing attacks.
fn poison(cfg: &ExperimentConfig, splits: &Splits, seed: u64) -> Result<Option<Dataset>> {
    let mut rng = stream(seed, Stream::Attack);
    let labels = match cfg.attack {
        Some(AttackSpec::LabelFlip { ratio }) => label_flip(&splits.train, ratio, &mut rng)?.0.labels,
        Some(AttackSpec::Quid { ratio, target }) => {
            // similarity is measured in the first quantum model's encoding
            let (spec, enc) = cfg
                .models
                .iter()
                .find_map(|m| m.encoder().map(|e| (m, e)))
                .ok_or_else(|| BenchError::Config("QUID needs at least one quantum model".into()))?;
            let (train, _) = splits.for_model(spec);
            quid_poison(&train, &enc, ratio, target.into(), &mut rng)?.0.labels
        }
        _ => return Ok(None),
    };
    Ok(Some(Dataset::new(
        splits.train.features.clone(),
        labels,
        splits.train.n_classes,
    )?))
}

fn evaluate(model: &Classifier, ds: &Dataset, mode: &ExecMode) -> Result<(Metrics, f64)> {
    let predicted = predict_all(model, &ds.features, mode)?;
    let metrics = Metrics::from_predictions(&ds.labels, &predicted, ds.n_classes)?;
    let wrong: Vec<bool> = predicted.iter().zip(&ds.labels).map(|(p, y)| p != y).collect();
    Ok((metrics, success_rate(&wrong)))
}

fn run_seed(cell: &str, cfg: &ExperimentConfig, seed: u64, external: Option<&Dataset>) -> Result<Vec<Row>> {
    let splits = load_splits(cfg, seed, external)?;
    let poisoned = poison(cfg, &splits, seed)?;
    let mut modes = vec![(EvalMode::Pure, ExecMode::Pure)];
    let mut train_mode = ExecMode::Pure;
    if let Some(n) = &cfg.noise {
        let noisy = n.exec_mode()?;
        if n.train {
            train_mode = noisy.clone();
        }
        modes.push((EvalMode::Noisy, noisy));
    }
    let mut rows = Vec::new();
    for spec in &cfg.models {
        let (train, test) = splits.for_model(spec);
        let init = spec.build(train.dim(), train.n_classes, &mut stream(seed, Stream::Init))?;
        let fit = |data: &Dataset, smoothing: f64| -> Result<Classifier> {
            let mut model = init.clone();
            let mut tc = cfg.train.to_config(seed);
            tc.label_smoothing = smoothing;
            Trainer::new(tc)?.fit(&mut model, data, None, &train_mode)?;
            Ok(model)
        };
        let baseline = fit(&train, cfg.train.label_smoothing)?;
        let mut base_acc = Vec::new();
        let mut push = |condition, mode, metrics: Metrics, base: f64, asr| -> Result<()> {
            rows.push(Row {
                cell: cell.to_string(),
                seed,
                model: spec.label(),
                condition,
                mode,
                relative_accuracy: relative_accuracy(metrics.accuracy, base)?,
                metrics,
                asr,
            });
            Ok(())
        };
        for (tag, mode) in &modes {
            let (m, _) = evaluate(&baseline, &test, mode)?;
            base_acc.push(m.accuracy);
            push(Condition::Baseline, *tag, m, m.accuracy, None)?;
        }

        let poisoned_train = poisoned
            .as_ref()
            .map(|p| Splits::prepare(p, &splits.bounds, spec.input_range()));
        match cfg.attack {
            Some(AttackSpec::Fgsm { epsilon }) => {
                let adv = fgsm_dataset(&baseline, &test.features, &test.labels, epsilon, spec.input_range())?;
                let (m, asr) = evaluate(
                    &baseline,
                    &Dataset {
                        features: adv,
                        ..test.clone()
                    },
                    &ExecMode::Pure,
                )?;
                push(Condition::Attacked, EvalMode::Pure, m, base_acc[0], Some(asr))?;
            }
            Some(AttackSpec::Pgd {
                epsilon,
                step,
                iters,
                random_start,
            }) => {
                let adv = pgd_dataset(
                    &baseline,
                    &test.features,
                    &test.labels,
                    epsilon,
                    step,
                    iters,
                    spec.input_range(),
                    random_start.then_some(seed),
                )?;
                let (m, asr) = evaluate(
                    &baseline,
                    &Dataset {
                        features: adv,
                        ..test.clone()
                    },
                    &ExecMode::Pure,
                )?;
                push(Condition::Attacked, EvalMode::Pure, m, base_acc[0], Some(asr))?;
            }
            Some(_) => {
                let data = poisoned_train.as_ref().expect("poisoning attack");
                let attacked = fit(data, cfg.train.label_smoothing)?;
                for ((tag, mode), &base) in modes.iter().zip(&base_acc) {
                    let (m, asr) = evaluate(&attacked, &test, mode)?;
                    push(Condition::Attacked, *tag, m, base, Some(asr))?;
                }
            }
            None => {}
        }

        if let Some(defense) = &cfg.defense {
            let data = poisoned_train.as_ref().unwrap_or(&train);
            let defended = match *defense {
                DefenseSpec::LabelSmoothing { alpha } => fit(data, alpha)?,
                DefenseSpec::Qdetect { .. } => {
                    let q = defense.qdetect(seed).expect("qdetect");
                    let mut model = init.clone();
                    let mut trainer = Trainer::new(cfg.train.to_config(seed))?;
                    defended_train(&mut model, data, None, &mut trainer, &q, &train_mode)?;
                    model
                }
            };
            let attacked = cfg.attack.is_some();
            for ((tag, mode), &base) in modes.iter().zip(&base_acc) {
                let (m, asr) = evaluate(&defended, &test, mode)?;
                push(Condition::Defended, *tag, m, base, attacked.then_some(asr))?;
            }
        }
    }
    Ok(rows)
}
