//! Full run: synthetic dataset, split, boosted multi-output and risk models,
//! SVM baseline, and the two-section report tables with the F1 comparison.
//!
//! Usage: evaluation_report [PARTICIPANTS] [FRAMES_PER_CLASS] [ROUNDS] [OUT_DIR]

use std::path::PathBuf;

use walkerpose::gbt::GBTParams;
use walkerpose::synth::{generate_dataset, GeneratorSpec, NoiseModel};
use walkerpose::workflow::{run_pipeline, PipelineConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GeneratorSpec {
        participants: arg(1, 10),
        frames_per_class: arg(2, 20),
        ..GeneratorSpec::default()
    };
    let dataset = generate_dataset(&spec, &NoiseModel::default(), 7)?;
    let config = PipelineConfig {
        gbt: GBTParams {
            n_rounds: arg(3, 20),
            ..GBTParams::default()
        },
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&dataset, &config)?;
    print!("{}", run.report.to_text());
    println!("F1 comparison\n{}", run.report.f1_comparison_csv());
    println!("training accuracy (walker, init, posture) {:?}", run.train_accuracy);
    println!("stage seconds {:?}", run.timings);
    if let Some(dir) = std::env::args().nth(4).map(PathBuf::from) {
        for p in run.write_outputs(&dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}
