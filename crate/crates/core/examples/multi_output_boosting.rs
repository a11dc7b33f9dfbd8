//! Trains the three-output boosted model (walker choice, initial position,
//! posture type) and evaluates it on pooled test samples and on participants
//! never seen in training.
//!
//! Usage: multi_output_boosting [ROUNDS]

use walkerpose::eval::{evaluate, split_dataset, SplitSpec};
use walkerpose::features::table::label_columns;
use walkerpose::features::{batch_extract, FeatureSpec};
use walkerpose::gbt::{train_multi_output, GBTParams, MultiOutputGBT, OutputName};
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rounds: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let spec = GeneratorSpec {
        participants: 10,
        frames_per_class: 24,
        ..GeneratorSpec::default()
    };
    let dataset = generate_dataset(&spec, &NoiseModel::default(), 7)?;
    let split = split_dataset(&dataset, &SplitSpec::default())?;
    let x = batch_extract(&dataset, &FeatureSpec::default())?;
    let labels = label_columns(&dataset);

    let params = GBTParams {
        n_rounds: rounds,
        ..GBTParams::default()
    };
    let train_x = x.select_rows(&split.train);
    let (model, train_acc) = train_multi_output(&train_x, &labels.select(&split.train), &params, dataset.vocabulary.len())?;
    println!("training accuracy: {train_acc:?}");

    for (title, idx) in [("pooled test", &split.test), ("held-out participants", &split.holdout)] {
        let part = x.select_rows(idx);
        let truth = labels.select(idx);
        println!("{title} ({} samples)", idx.len());
        for output in OutputName::ALL {
            let m = model.model(output);
            let predicted = m.predict_matrix(&part)?;
            let r = evaluate(output.labels(&truth), &predicted, m.n_classes())?;
            println!(
                "  {:<17} accuracy {:.3}  macro F1 {:.3}",
                output.name(),
                r.accuracy,
                r.macro_avg.f1
            );
        }
    }

    let restored = MultiOutputGBT::from_json(&model.to_json())?;
    assert_eq!(restored, model);
    println!("posture model: {} trees", model.posture_type.trees.len());
    Ok(())
}
