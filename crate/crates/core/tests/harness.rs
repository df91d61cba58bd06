use std::fs;

use protoset::harness::config::{Clock, DatasetSpec, ExperimentConfig, Jl};
use protoset::harness::experiment::{run_experiment, DATASET_FILE, META_FILE, METRICS_FILE, PROTOTYPES_FILE};
use protoset::harness::metrics::read_csv;
use protoset::{io, Metric};

fn config(dataset: DatasetSpec, seed: u64, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(dataset, seed);
    cfg.output = dir.to_path_buf();
    cfg
}

#[test]
fn identical_patterns_give_unit_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(DatasetSpec::Identical { n: 30, items: 40, k: 4 }, 5, dir.path());
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.rows.len(), 5);
    for row in &out.rows {
        assert_eq!(row.objective, 0.0);
        assert_eq!(row.normalized_objective, 1.0);
        assert_eq!(row.ground_truth_metric, 0.0);
    }
}

#[test]
fn baseline_row_is_normalized_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(DatasetSpec::Gaussian { n: 60, k: 3, d: 4, spread: 8.0, noise: 1.0 }, 9, dir.path());
    cfg.fractions = vec![0.2, 0.1];
    let out = run_experiment(&cfg).unwrap();
    let base = &out.rows[0];
    assert_eq!(base.run_label, "full");
    assert_eq!((base.fraction, base.normalized_objective, base.normalized_time), (1.0, 1.0, 1.0));
    assert_eq!(out.rows.iter().map(|r| r.fraction).collect::<Vec<_>>(), vec![1.0, 0.1, 0.2]);
    for row in &out.rows {
        assert!(row.wall_time_s > 0.0);
        assert!(row.objective >= base.objective * (1.0 - 1e-9) || row.normalized_objective < 1.0);
    }
    assert_eq!(out.runs[1].size, 6);
    assert_eq!(out.runs[2].size, 12);
}

#[test]
fn artifacts_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(DatasetSpec::Ensemble { items: 60, k: 3, dims: 3, solutions: 25, separation: 2.5 }, 2, dir.path());
    cfg.fractions = vec![0.2];
    cfg.write_dataset = true;
    let out = run_experiment(&cfg).unwrap();

    let rows = read_csv(fs::File::open(dir.path().join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(rows, out.rows);
    let data = io::load_patterns(&dir.path().join(DATASET_FILE)).unwrap();
    assert_eq!(data.fingerprint(), out.fingerprint);
    assert!(dir.path().join("labels.json").exists());
    let cs = io::load_coreset(&dir.path().join("coreset-00.jsonl")).unwrap();
    cs.check_source(&data).unwrap();
    assert_eq!(cs.entries.len(), 5);
    let protos = fs::read_to_string(dir.path().join(PROTOTYPES_FILE)).unwrap();
    // Header line plus one prototype per run.
    assert_eq!(protos.lines().count(), 3);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(META_FILE)).unwrap()).unwrap();
    assert_eq!(meta["fingerprint"], io::fingerprint_hex(out.fingerprint));
}

#[test]
fn work_clock_is_reproducible() {
    let run = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(DatasetSpec::Gaussian { n: 50, k: 3, d: 12, spread: 6.0, noise: 1.0 }, 21, dir.path());
        cfg.clock = Clock::Work;
        cfg.jl = Jl::Dim(6);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&cfg).unwrap());
        fs::read(dir.path().join(METRICS_FILE)).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(3));
}

#[test]
fn weighted_images_report_x_over_ave() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(
        DatasetSpec::Images { count: 20, k: 6, side: 12, total_weight: 60, noise_fraction: 0.1, glyph: 2 },
        4,
        dir.path(),
    );
    cfg.metric = Metric::Emd2;
    cfg.fractions = vec![0.5];
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.rows[0].ground_truth_metric, 0.0);
    assert!(out.rows[1].ground_truth_metric >= 0.0 && out.rows[1].ground_truth_metric.is_finite());
}

#[test]
fn mismatched_metric_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(DatasetSpec::Gaussian { n: 10, k: 2, d: 2, spread: 1.0, noise: 1.0 }, 0, dir.path());
    cfg.metric = Metric::Emd1;
    assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 2);
}
