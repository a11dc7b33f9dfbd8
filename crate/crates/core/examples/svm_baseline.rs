//! Linear one-vs-rest SVM next to the boosted model on the posture task.

use walkerpose::eval::{evaluate, split_dataset, SplitSpec};
use walkerpose::features::table::label_columns;
use walkerpose::features::{batch_extract, FeatureSpec};
use walkerpose::gbt::{train_gbt, GBTParams, Objective};
use walkerpose::svm::{train_svm, SVMParams};
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GeneratorSpec {
        participants: 8,
        frames_per_class: 20,
        ..GeneratorSpec::default()
    };
    let dataset = generate_dataset(&spec, &NoiseModel::default(), 3)?;
    let split = split_dataset(&dataset, &SplitSpec::default())?;
    let x = batch_extract(&dataset, &FeatureSpec::default())?;
    let labels = label_columns(&dataset);
    let k = dataset.vocabulary.len();
    let (train_x, test_x) = (x.select_rows(&split.train), x.select_rows(&split.test));
    let (train_y, test_y) = (labels.select(&split.train).posture, labels.select(&split.test).posture);

    let svm = train_svm(&train_x, &train_y, k, &SVMParams::default())?;
    let last = svm.objective_history.iter().map(|h| h[h.len() - 1]);
    println!("final per-class objectives: {:?}", last.map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());

    let gbt = train_gbt(
        &train_x,
        &train_y,
        &GBTParams {
            n_rounds: 20,
            objective: Objective::Softmax { classes: k },
            ..GBTParams::default()
        },
    )?;

    let svm_eval = evaluate(&test_y, &svm.predict_matrix(&test_x)?, k)?;
    let gbt_eval = evaluate(&test_y, &gbt.predict_matrix(&test_x)?, k)?;
    println!("pooled test posture accuracy: SVM {:.3}, GBT {:.3}", svm_eval.accuracy, gbt_eval.accuracy);
    println!("pooled test posture macro F1: SVM {:.3}, GBT {:.3}", svm_eval.macro_avg.f1, gbt_eval.macro_avg.f1);
    Ok(())
}
