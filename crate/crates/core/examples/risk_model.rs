//! Single three-way risk model (standing / sitting / bad posture) with its
//! confusion matrix on held-out participants.

use walkerpose::eval::{confusion, metrics, split_dataset, SplitSpec};
use walkerpose::features::{batch_extract, FeatureSpec};
use walkerpose::gbt::{train_single_risk, GBTParams};
use walkerpose::pose::RiskLabel;
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};
use walkerpose::workflow::dataset_table;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GeneratorSpec {
        participants: 10,
        frames_per_class: 24,
        ..GeneratorSpec::default()
    };
    let dataset = generate_dataset(&spec, &NoiseModel::default(), 11)?;
    let table = dataset_table(&dataset, walkerpose::features::FeatureMode::Features, &FeatureSpec::default())?;
    let split = split_dataset(&dataset, &SplitSpec::default())?;
    let x = batch_extract(&dataset, &FeatureSpec::default())?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| table.risk[i]).collect::<Vec<_>>();

    let params = GBTParams {
        n_rounds: 30,
        ..GBTParams::default()
    };
    let train_x = x.select_rows(&split.train);
    let model = train_single_risk(&train_x, &pick(&split.train), &params)?;
    println!("training accuracy {:.4}", model.accuracy(&train_x, &pick(&split.train))?);

    let holdout_x = x.select_rows(&split.holdout);
    let predicted = model.predict_matrix(&holdout_x)?;
    let names: Vec<String> = RiskLabel::ALL.iter().map(|r| r.name().to_string()).collect();
    let cm = confusion(&pick(&split.holdout), &predicted, 3)?.with_names(&names);
    println!("held-out participants {:?}", split.holdout_ids);
    println!("{:>12} {:>9} {:>9} {:>12}", "truth", names[0], names[1], names[2]);
    for (name, row) in names.iter().zip(cm.rows()) {
        println!("{name:>12} {:>9} {:>9} {:>12}", row[0], row[1], row[2]);
    }
    let r = metrics(&cm)?;
    println!("accuracy {:.3}, macro sensitivity {:.3}, macro specificity {:.3}", r.accuracy, r.macro_avg.sensitivity, r.macro_avg.specificity);
    Ok(())
}
