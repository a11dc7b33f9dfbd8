//! Extracts the 48 features from a rendered posture and shows that they do not
//! change when the whole figure is shifted or rescaled in the image.

use walkerpose::features::{extract_features, FeatureSpec, CATALOGUE};
use walkerpose::geom::Vec3;
use walkerpose::pose::{LandmarkFrame, View};
use walkerpose::synth::templates::{default_pose, PostureTemplate};

fn frame_of(class: &str) -> LandmarkFrame {
    let pose = default_pose(class).expect("known class");
    let t = PostureTemplate::render(class, &pose, true);
    LandmarkFrame {
        timestamp_ms: 0,
        participant_id: "demo".into(),
        view: View::FullBody,
        landmarks: t.landmarks,
        fsr: t.fsr,
    }
}

fn main() {
    let class = std::env::args().nth(1).unwrap_or_else(|| "lean_forward".into());
    let spec = FeatureSpec::default();
    let frame = frame_of(&class);
    let fv = extract_features(&frame, &spec).expect("template frames are valid");

    println!("{class}: {} of {} features valid", fv.valid_count(), CATALOGUE.len());
    for (entry, (v, ok)) in CATALOGUE.iter().zip(fv.values.iter().zip(fv.valid)) {
        if ok {
            println!("  {:<40} {v:>10.4}", entry.name);
        } else {
            println!("  {:<40} {:>10}", entry.name, "missing");
        }
    }

    let moved = frame.translated(Vec3::new(0.1, -0.05, 0.02));
    let center = frame.position(0).expect("nose");
    let scaled = frame.scaled_about(center, 1.7);
    let max_diff = |other: &LandmarkFrame| {
        let g = extract_features(other, &spec).expect("valid");
        fv.values
            .iter()
            .zip(g.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    println!("max change after translation: {:.3e}", max_diff(&moved));
    println!("max change after scaling:     {:.3e}", max_diff(&scaled));
}
