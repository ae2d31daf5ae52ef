use qrobust::train::Metrics;
use qrobust_bench::report::{
    format_summary, format_table, median, parse_table, Condition, EvalMode, Row, SUMMARY_FILE, TABLE_FILE,
};
use qrobust_bench::{emit_report, relative_accuracy, ExperimentReport, OutputFormat};

fn row(seed: u64, model: &str, condition: Condition, mode: EvalMode, acc: f64, rel: f64, asr: Option<f64>) -> Row {
    Row {
        cell: "-".into(),
        seed,
        model: model.into(),
        condition,
        mode,
        metrics: Metrics {
            accuracy: acc,
            macro_f1: acc - 0.5,
            fpr: (100.0 - acc) / 4.0,
            fnr: 100.0 - acc,
        },
        relative_accuracy: rel,
        asr,
    }
}

fn fixture() -> ExperimentReport {
    use Condition::*;
    use EvalMode::*;
    ExperimentReport {
        name: "fixture".into(),
        config_hash: "0123456789abcdef".into(),
        config_echo: "name = \"fixture\"\n".into(),
        tool_version: "0.1.0".into(),
        rows: vec![
            row(0, "qmlp-angle-L2", Baseline, Pure, 90.0, 1.0, None),
            row(0, "qmlp-angle-L2", Attacked, Pure, 81.0, 0.9, Some(19.0)),
            row(1, "qmlp-angle-L2", Baseline, Pure, 80.0, 1.0, None),
            row(1, "qmlp-angle-L2", Attacked, Pure, 76.0, 0.95, Some(24.0)),
            row(2, "qmlp-angle-L2", Baseline, Pure, 50.0, 1.0, None),
            row(2, "qmlp-angle-L2", Attacked, Pure, 40.0, 0.8, Some(60.0)),
            row(0, "cmlp-h16", Baseline, Noisy, 97.5, 1.0, None),
        ],
        runtime_secs: 12.34,
    }
}

#[test]
fn relative_accuracy_examples() {
    // 46.42 attacked against a 49.77 baseline reports as 0.93
    let r = relative_accuracy(46.42, 49.77).unwrap();
    assert_eq!(format!("{r:.2}"), "0.93");
    assert_eq!(relative_accuracy(71.3, 71.3).unwrap(), 1.0);
    assert_eq!(relative_accuracy(0.0, 40.0).unwrap(), 0.0);
    assert!(relative_accuracy(10.0, 0.0).is_err());
}

#[test]
fn medians() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
}

#[test]
fn golden_files() {
    let dir = tempfile::tempdir().unwrap();
    emit_report(&fixture(), dir.path(), OutputFormat::Both).unwrap();
    let table = std::fs::read_to_string(dir.path().join(TABLE_FILE)).unwrap();
    let summary = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(table, include_str!("golden/results.tsv"));
    assert_eq!(summary, include_str!("golden/summary.txt"));
}

#[test]
fn emitting_twice_is_byte_identical() {
    let r = fixture();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit_report(&r, a.path(), OutputFormat::Both).unwrap();
    emit_report(&r, b.path(), OutputFormat::Both).unwrap();
    for f in [TABLE_FILE, SUMMARY_FILE, "config.toml"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn format_selects_files() {
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&fixture(), dir.path(), OutputFormat::Table).unwrap();
    assert!(written.iter().any(|p| p.ends_with(TABLE_FILE)));
    assert!(!dir.path().join(SUMMARY_FILE).exists());
}

#[test]
fn table_round_trips() {
    let r = fixture();
    let text = format_table(&r.config_hash, &r.rows);
    let (hash, rows) = parse_table(&text).unwrap();
    assert_eq!(hash, r.config_hash);
    assert_eq!(rows, r.rows);
    assert!(parse_table("nope\n").is_err());
    let broken = text.replace("\t19.000000", "\tx");
    assert!(parse_table(&broken).is_err());
}

#[test]
fn every_row_carries_the_hash() {
    let r = fixture();
    let text = format_table(&r.config_hash, &r.rows);
    assert!(text.lines().skip(1).all(|l| l.starts_with("0123456789abcdef\t")));
    assert!(format_summary(&r).contains("config hash: 0123456789abcdef"));
}
