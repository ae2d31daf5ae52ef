use std::process::Command;

use qrobust_bench::config::{AttackSpec, ExperimentConfig};
use qrobust_bench::report::{Condition, EvalMode, TABLE_FILE};
use qrobust_bench::run_experiment;

const SMALL: &str = r#"
name = "small"
seeds = [0, 1]

[data]
source = "blobs"
classes = 4
dim = 4
per_class = 20
spread = 0.3

[split]
train_per_class = 12
test_per_class = 8

[[models]]
kind = "qmlp"
encoding = "angle"
qubits = 4
layers = 1

[[models]]
kind = "cmlp"
hidden = 8

[train]
lr = 0.01
epochs = 2
batch_size = 16
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL).unwrap()
}

fn with(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!("{SMALL}\n{extra}")).unwrap()
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    for bad in [
        format!("{SMALL}\nbogus = 1\n"),
        SMALL.replace("spread = 0.3", "spread = 0.3\nwidth = 2"),
        SMALL.replace("hidden = 8", "hidden = 8\ndepth = 2"),
        SMALL.replace("seeds = [0, 1]", "seeds = []"),
        SMALL.replace("epochs = 2", "epochs = 2\nmomentum = 0.9"),
        format!("{SMALL}\n[attack]\nkind = \"label_flip\"\nratio = 1.5\n"),
        format!("{SMALL}\n[attack]\nkind = \"fgsm\"\nepsilon = 0.1\n[noise]\nchannel = \"depolarizing\"\np = 0.01\n"),
        format!("{SMALL}\n[sweep]\nlayers = [3]\n"),
        format!("{SMALL}\n[sweep]\np = [0.01]\n"),
        format!("{SMALL}\n[noise]\nchannel = \"depolarizing\"\np = 1.5\n"),
    ] {
        assert!(ExperimentConfig::from_toml(&bad).is_err(), "accepted:\n{bad}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn hash_ignores_output_dir_and_tracks_content() {
    let a = small();
    let mut b = a.clone();
    b.out = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.seeds = vec![7];
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 16);
}

#[test]
fn sweep_expands_to_cells() {
    let cfg = with("[noise]\nchannel = \"depolarizing\"\np = 0.01\n[sweep]\nlayers = [2, 10]\np = [0.0, 0.01]\n");
    let cells = cfg.cells();
    let labels: Vec<&str> = cells.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(
        labels,
        ["layers=2,p=0", "layers=2,p=0.01", "layers=10,p=0", "layers=10,p=0.01"]
    );
    assert_eq!(cells[2].config.models[0].label(), "qmlp-angle-L10");
    assert_eq!(cells[2].config.models[1].label(), "cmlp-h8");
    assert_eq!(cells[1].config.noise.unwrap().p, 0.01);
}

#[test]
fn no_attack_gives_baseline_rows_only() {
    let r = run_experiment(&small()).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r
        .rows
        .iter()
        .all(|x| x.condition == Condition::Baseline && x.relative_accuracy == 1.0));
    assert!(r.rows.iter().all(|x| x.asr.is_none()));
}

#[test]
fn zero_epsilon_fgsm_leaves_accuracy() {
    let r = run_experiment(&with("[attack]\nkind = \"fgsm\"\nepsilon = 0.0\n")).unwrap();
    for pair in r.rows.chunks(2) {
        assert_eq!(pair[0].condition, Condition::Baseline);
        assert_eq!(pair[1].condition, Condition::Attacked);
        assert_eq!(pair[0].metrics, pair[1].metrics);
        assert_eq!(pair[1].relative_accuracy, 1.0);
    }
}

#[test]
fn label_flip_reports_both_models() {
    let mut cfg = small();
    cfg.attack = Some(AttackSpec::LabelFlip { ratio: 0.5 });
    let r = run_experiment(&cfg).unwrap();
    for model in ["qmlp-angle-L1", "cmlp-h8"] {
        let attacked: Vec<_> = r
            .rows
            .iter()
            .filter(|x| x.model == model && x.condition == Condition::Attacked)
            .collect();
        assert_eq!(attacked.len(), 2, "{model}");
        for a in attacked {
            let base = r
                .rows
                .iter()
                .find(|x| x.model == model && x.seed == a.seed && x.condition == Condition::Baseline)
                .unwrap();
            assert_eq!(a.relative_accuracy, a.metrics.accuracy / base.metrics.accuracy);
            assert_eq!(a.asr, Some(100.0 - a.metrics.accuracy));
        }
    }
}

#[test]
fn noise_adds_noisy_rows_relative_to_noisy_baseline() {
    let cfg = with(
        "[noise]\nchannel = \"depolarizing\"\np = 0.05\nbasis = \"native\"\n[attack]\nkind = \"label_flip\"\nratio = 0.25\n",
    );
    let r = run_experiment(&cfg).unwrap();
    // cmlp rows: no circuit, noise is a no-op
    let cmlp: Vec<_> = r.rows.iter().filter(|x| x.model == "cmlp-h8" && x.seed == 0).collect();
    assert_eq!(cmlp.len(), 4);
    assert_eq!(cmlp[0].metrics, cmlp[1].metrics);
    let q: Vec<_> = r
        .rows
        .iter()
        .filter(|x| x.model == "qmlp-angle-L1" && x.seed == 1)
        .collect();
    let (base_noisy, att_noisy) = (q[1], q[3]);
    assert_eq!(base_noisy.mode, EvalMode::Noisy);
    assert_eq!(att_noisy.mode, EvalMode::Noisy);
    assert_eq!(
        att_noisy.relative_accuracy,
        att_noisy.metrics.accuracy / base_noisy.metrics.accuracy
    );
}

#[test]
fn defenses_run() {
    for d in [
        "kind = \"qdetect\"\nkeep_fraction = 0.8",
        "kind = \"label_smoothing\"\nalpha = 0.2",
    ] {
        let cfg = with(&format!("[attack]\nkind = \"quid\"\nratio = 0.5\n[defense]\n{d}\n"));
        let r = run_experiment(&cfg).unwrap();
        let defended = r.rows.iter().filter(|x| x.condition == Condition::Defended).count();
        assert_eq!(defended, 4);
    }
}

#[test]
fn quid_needs_a_quantum_model() {
    let mut cfg = with("[attack]\nkind = \"quid\"\nratio = 0.5\n");
    cfg.models.remove(0);
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn mismatched_feature_count_is_an_error() {
    let cfg = ExperimentConfig::from_toml(&SMALL.replace("qubits = 4", "qubits = 3")).unwrap();
    assert!(run_experiment(&cfg).is_err());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrobust"))
}

#[test]
fn cli_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("run");
    let status = cli()
        .args(["baseline", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--format", "table", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let table = std::fs::read_to_string(out.join(TABLE_FILE)).unwrap();
    assert!(table.lines().skip(1).all(|l| l.split('\t').nth(2) == Some("5")));
    assert!(!out.join("summary.txt").exists());

    let rep = cli()
        .args(["report", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(rep.status.success());
    assert!(String::from_utf8_lossy(&rep.stdout).contains("qmlp-angle-L1\tbaseline\tpure\t1\t"));
    assert!(out.join("summary.txt").exists());
}

#[test]
fn cli_fails_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    for args in [
        vec!["attack".to_string(), "--config".into(), cfg.display().to_string()],
        vec!["sweep".into(), "--config".into(), cfg.display().to_string()],
        vec![
            "baseline".into(),
            "--config".into(),
            dir.path().join("missing.toml").display().to_string(),
        ],
    ] {
        let o = cli().args(&args).output().unwrap();
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("qrobust: "));
    }
}
