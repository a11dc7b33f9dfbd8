//! Calibrates on the first second of a scripted session and classifies every
//! frame with the threshold rules, printing the debounced pose changes and
//! the per-pose frame accuracy.
//!
//! Usage: geometric_session [SCRIPT] [SEED], SCRIPT like `standing_still:5,sitting:5`

use walkerpose::geometric::{calibrate, classify_stream_geometric, transitions, GeometricConfig, GeometricPose};
use walkerpose::synth::{generate_session, parse_script, standard_script, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let script = match args.next() {
        Some(s) => parse_script(&s)?,
        None => standard_script(),
    };
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let session = generate_session(&script, 10.0, &NoiseModel::default(), seed)?;

    let config = GeometricConfig::default();
    let baseline = calibrate(&session.frames[..config.n_cal_min], &config)?;
    println!("baseline torso length {:.4}", baseline.torso_length);
    let decisions = classify_stream_geometric(&session.frames, Some(&baseline), &config)?;

    for (ts, pose) in transitions(&decisions) {
        println!("{:>7.1} s  {}", ts as f64 / 1000.0, pose.name());
    }
    println!();
    for pose in GeometricPose::ALL {
        let frames: Vec<usize> = (0..decisions.len()).filter(|&i| session.truth[i] == pose).collect();
        if frames.is_empty() {
            continue;
        }
        let hits = frames.iter().filter(|&&i| decisions[i].pose == pose).count();
        println!("{:<20} {:.3}", pose.name(), hits as f64 / frames.len() as f64);
    }
    let hits = decisions.iter().zip(&session.truth).filter(|(d, t)| d.pose == **t).count();
    println!("overall {:.3}", hits as f64 / decisions.len() as f64);
    Ok(())
}
