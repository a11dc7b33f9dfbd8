//! Generates a seeded synthetic dataset, writes it as NDJSON and as a feature
//! CSV, and reads both back.
//!
//! Usage: synthetic_dataset [OUT_DIR] [SEED]

use std::path::PathBuf;

use walkerpose::features::table::{label_columns, read_feature_csv, write_feature_csv};
use walkerpose::features::{batch_extract, FeatureSpec};
use walkerpose::pose::io::{read_dataset, write_dataset};
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| std::env::temp_dir().join("walkerpose-demo").display().to_string()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    std::fs::create_dir_all(&dir)?;

    let spec = GeneratorSpec {
        participants: 6,
        frames_per_class: 20,
        upper_body_fraction: 0.3,
        ..GeneratorSpec::default()
    };
    let dataset = generate_dataset(&spec, &NoiseModel::default(), seed)?;
    println!(
        "{} samples, {} participants, {} classes",
        dataset.len(),
        dataset.participants().len(),
        dataset.vocabulary.len()
    );

    let ndjson = dir.join("dataset.ndjson");
    write_dataset(&dataset, &ndjson)?;
    assert_eq!(read_dataset(&ndjson)?, dataset);

    let x = batch_extract(&dataset, &FeatureSpec::default())?;
    let labels = label_columns(&dataset);
    let csv = dir.join("features.csv");
    write_feature_csv(&csv, &x, &labels)?;
    let (x_back, labels_back) = read_feature_csv(&csv)?;
    assert_eq!(x_back, x);
    assert_eq!(labels_back.posture, labels.posture);

    let missing = (0..x.n_rows())
        .flat_map(|i| x.row_valid(i).iter())
        .filter(|v| !**v)
        .count();
    println!("missing feature cells (upper-body view): {missing}");
    println!("wrote {} and {}", ndjson.display(), csv.display());
    Ok(())
}
