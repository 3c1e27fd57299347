use std::fs;
use std::sync::OnceLock;

use impact_subtype::clustering::{kmeans_fit, KMeansConfig, StandardScaler};
use impact_subtype::dataset::{dataset_hash, extract_table, ExtractionOptions, FeatureTable};
use impact_subtype::evaluation::{mixed_test, stratified_split, EvalConfig, MethodSpec};
use impact_subtype::features::{FeatureExtractor, FeatureSchema};
use impact_subtype::regression::{mlp_fit, Method, MlpConfig, TrainConfig};
use impact_subtype::signal::load_dataset;
use impact_subtype::synth::{generate, oracle_best_two_segment, write_dataset, SynthConfig};
use impact_subtype::{Execution, Matrix};

const ANG_ACC_RES: usize = 11;

fn table_for(cfg: &SynthConfig) -> (FeatureTable, Vec<u8>) {
    let ds = generate(cfg, Execution::Parallel).unwrap();
    let t = extract_table(&ds.recordings(), &FeatureExtractor::default(), &ExtractionOptions::default(), Execution::Parallel).unwrap();
    (t, ds.regimes())
}

fn default_table() -> &'static (FeatureTable, Vec<u8>) {
    static T: OnceLock<(FeatureTable, Vec<u8>)> = OnceLock::new();
    T.get_or_init(|| table_for(&SynthConfig::default()))
}

fn splits(table: &FeatureTable, n: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..n).map(|k| stratified_split(&table.sources, 0.8, k)).collect()
}

#[test]
fn one_dimensional_kmeans_recovers_regimes() {
    let (table, regimes) = default_table();
    assert_eq!(table.len(), 400);
    let col: Vec<f64> = table.x.column(ANG_ACC_RES).collect();
    let fit = kmeans_fit(&Matrix::from_column(&col), &KMeansConfig::default()).unwrap();
    let agree = fit.labels.iter().zip(regimes).filter(|(l, r)| **l == **r as usize).count();
    let purity = agree.max(regimes.len() - agree) as f64 / regimes.len() as f64;
    assert!(purity >= 0.95, "purity {purity}");
}

#[test]
fn regime_column_never_reaches_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SynthConfig::default();
    cfg.sources.iter_mut().for_each(|s| s.count = 8);
    let ds = generate(&cfg, Execution::Parallel).unwrap();
    let manifest = write_dataset(&ds, dir.path()).unwrap();
    let original = load_dataset(&manifest).unwrap();

    // flip every regime tag, then drop the column altogether
    let text = fs::read_to_string(&manifest).unwrap();
    let flipped: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 { format!("{l}\n") } else { format!("{}{}\n", &l[..l.len() - 1], if l.ends_with('1') { '2' } else { '1' }) })
        .collect();
    fs::write(&manifest, flipped).unwrap();
    let after_flip = load_dataset(&manifest).unwrap();
    let dropped: String = text.lines().map(|l| format!("{}\n", &l[..l.rfind(',').unwrap()])).collect();
    fs::write(&manifest, dropped).unwrap();
    let after_drop = load_dataset(&manifest).unwrap();

    assert_eq!(original, ds.recordings());
    assert_eq!(after_flip, original);
    assert_eq!(after_drop, original);
    assert_eq!(dataset_hash(&after_flip), dataset_hash(&original));
}

#[test]
fn noiseless_oracle_is_near_perfect_at_true_threshold() {
    let cfg = SynthConfig { sigma: 0.0, ..SynthConfig::default() };
    let (table, _) = table_for(&cfg);
    let tc = TrainConfig::default();
    let r = oracle_best_two_segment(&table, ANG_ACC_RES, &[cfg.theta], &splits(&table, 3), &tc).unwrap();
    assert!(r.best_r2 > 0.999, "{}", r.best_r2);
}

#[test]
fn oracle_ablation_and_null_case() {
    let (table, _) = default_table();
    let tc = TrainConfig::default();
    let sp = splits(table, 4);
    let truth = oracle_best_two_segment(table, ANG_ACC_RES, &[4500.0], &sp, &tc).unwrap();
    let off = oracle_best_two_segment(table, ANG_ACC_RES, &[500.0, 20000.0], &sp, &tc).unwrap();
    assert!(off.best_r2 < truth.best_r2, "{} vs {}", off.best_r2, truth.best_r2);

    let single = SynthConfig::default().negative_control();
    let (null_table, _) = table_for(&single);
    let sp = splits(&null_table, 4);
    let two = oracle_best_two_segment(&null_table, ANG_ACC_RES, &[4500.0], &sp, &tc).unwrap();
    let ec = EvalConfig { partitions: 4, ..EvalConfig::default() };
    let base = mixed_test(&null_table, &[MethodSpec::new("Baseline", Method::Baseline)], &ec).unwrap();
    let one = base.methods[0].mean_avg_r2.unwrap();
    assert!((two.best_r2 - one).abs() < 0.01, "{} vs {one}", two.best_r2);
}

#[test]
fn source_classifier_generalizes() {
    let (table, _) = default_table();
    let classes = table.distinct_sources();
    let y: Vec<usize> = table.sources.iter().map(|s| classes.iter().position(|c| c == s).unwrap()).collect();
    let (train, test) = stratified_split(&table.sources, 0.8, 0);
    let subset = FeatureSchema::v1().temporal_spectral_indices();
    let ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let clf = mlp_fit(&table.x.select_rows(&train), &subset, &ytr, &MlpConfig::default()).unwrap();
    let pred = clf.predict(&table.x.select_rows(&test));
    let acc = pred.iter().zip(&test).filter(|(p, &i)| **p == y[i]).count() as f64 / test.len() as f64;
    assert!(acc > 0.8, "held-out accuracy {acc}");
}

#[test]
fn strict_scaler_accepts_peak_features() {
    let (table, _) = default_table();
    let names: Vec<String> = FeatureSchema::v1().names().take(16).map(String::from).collect();
    assert!(StandardScaler::fit(&table.x, &(0..16).collect::<Vec<_>>(), &names).is_ok());
}
