//! Seeded synthetic landmark data.
//!
//! Each generated frame is a class template plus a per-participant
//! systematic offset (drawn once per participant and landmark) plus
//! per-frame isotropic jitter. Generation is a pure function of its inputs:
//! participant `i` draws from its own ChaCha stream, so output does not
//! depend on generation order.

pub mod skeleton;
pub mod templates;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;
use thiserror::Error;

use crate::geom::Vec3;
use crate::geometric::GeometricPose;
use crate::pose::topology::LEG_LANDMARKS;
use crate::pose::{
    Dataset, LabelRecord, LabelVocabulary, Landmark, LandmarkFrame, RiskLabel, Sample, View,
    LANDMARK_COUNT,
};
pub use templates::{
    default_classes, geometric_template, t_pose, PostureClass, PostureTemplate, WalkerRule,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("script: {0}")]
    Script(String),
    #[error("generator spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub const DROPPED_VISIBILITY: f64 = 0.05;

/// Noise levels in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Per-frame, per-coordinate jitter.
    pub jitter: f64,
    /// Per-participant, per-landmark, per-coordinate systematic offset.
    pub participant_offset: f64,
    /// Probability that a leg landmark drops out in the upper-body view.
    pub leg_dropout: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            jitter: 0.01,
            participant_offset: 0.02,
            leg_dropout: 1.0,
        }
    }
}

impl NoiseModel {
    pub fn zero() -> Self {
        NoiseModel {
            jitter: 0.0,
            participant_offset: 0.0,
            leg_dropout: 1.0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.jitter >= 0.0 && self.participant_offset >= 0.0) {
            return Err(SynthError::Spec("noise levels must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.leg_dropout) {
            return Err(SynthError::Spec("leg dropout must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub participants: usize,
    /// Frames recorded per class per participant.
    pub frames_per_class: usize,
    pub fps: f64,
    pub classes: Vec<PostureClass>,
    /// Share of participants recorded with the upper-body camera view.
    pub upper_body_fraction: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            participants: 21,
            frames_per_class: 120,
            fps: 10.0,
            classes: default_classes(),
            upper_body_fraction: 0.0,
        }
    }
}

impl GeneratorSpec {
    pub fn vocabulary(&self) -> Result<LabelVocabulary, SynthError> {
        let names: Vec<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        LabelVocabulary::new(&names).map_err(|e| SynthError::Spec(e.to_string()))
    }

    pub fn expected_samples(&self) -> usize {
        self.participants * self.classes.len() * self.frames_per_class
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.participants == 0 || self.frames_per_class == 0 || self.classes.is_empty() {
            return Err(SynthError::Spec("counts must be at least 1".into()));
        }
        if !(self.fps > 0.0) {
            return Err(SynthError::Spec("fps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.upper_body_fraction) {
            return Err(SynthError::Spec("upper-body fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn participant_id(index: usize) -> String {
    format!("p{:02}", index + 1)
}

fn normal3(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    let mut draw = || -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * sigma
    };
    let (x, y, z) = (draw(), draw(), draw());
    Vec3::new(x, y, z)
}

fn participant_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn participant_offsets(rng: &mut ChaCha8Rng, sigma: f64) -> [Vec3; LANDMARK_COUNT] {
    let mut out = [Vec3::ZERO; LANDMARK_COUNT];
    if sigma > 0.0 {
        for o in &mut out {
            *o = normal3(rng, sigma);
        }
    }
    out
}

/// Template + offset + jitter for one frame.
fn noisy_landmarks(
    base: &[Vec3; LANDMARK_COUNT],
    offsets: &[Vec3; LANDMARK_COUNT],
    view: View,
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Vec<Landmark> {
    let mut out = Vec::with_capacity(LANDMARK_COUNT);
    for i in 0..LANDMARK_COUNT {
        let mut p = base[i] + offsets[i];
        if noise.jitter > 0.0 {
            p = p + normal3(rng, noise.jitter);
        }
        out.push(Landmark::new(p.x, p.y, p.z, templates::TEMPLATE_VISIBILITY));
    }
    if view == View::UpperBody && noise.leg_dropout > 0.0 {
        for &i in &LEG_LANDMARKS {
            let drop = noise.leg_dropout >= 1.0 || rand::Rng::random::<f64>(rng) < noise.leg_dropout;
            if drop {
                out[i].visibility = DROPPED_VISIBILITY;
            }
        }
    }
    out
}

/// Generates `participants × classes × frames_per_class` labelled samples,
/// ordered by participant, then class, then frame.
pub fn generate_dataset(
    spec: &GeneratorSpec,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset, SynthError> {
    spec.validate()?;
    noise.validate()?;
    let vocabulary = spec.vocabulary()?;
    let frame_ms = 1000.0 / spec.fps;

    // both walker variants of every class, rendered once
    let rendered: Vec<[PostureTemplate; 2]> = spec
        .classes
        .iter()
        .map(|c| {
            [
                PostureTemplate::render(&c.name, &c.pose, true),
                PostureTemplate::render(&c.name, &c.pose, false),
            ]
        })
        .collect();
    let positions: Vec<[[Vec3; LANDMARK_COUNT]; 2]> = rendered
        .iter()
        .map(|[a, b]| [templates::template_positions(a), templates::template_positions(b)])
        .collect();

    let mut samples = Vec::with_capacity(spec.expected_samples());
    for p in 0..spec.participants {
        let mut rng = participant_rng(seed, p);
        let view = if spec.upper_body_fraction > 0.0
            && rand::Rng::random::<f64>(&mut rng) < spec.upper_body_fraction
        {
            View::UpperBody
        } else {
            View::FullBody
        };
        let offsets = participant_offsets(&mut rng, noise.participant_offset);
        let pid = participant_id(p);
        let mut tick: u64 = 0;
        for (class_id, class) in spec.classes.iter().enumerate() {
            for f in 0..spec.frames_per_class {
                let with_walker = match class.walker {
                    WalkerRule::Always => true,
                    WalkerRule::Never => false,
                    WalkerRule::Alternate => f < spec.frames_per_class.div_ceil(2),
                };
                let variant = usize::from(!with_walker);
                let landmarks =
                    noisy_landmarks(&positions[class_id][variant], &offsets, view, noise, &mut rng);
                let frame = LandmarkFrame {
                    timestamp_ms: (tick as f64 * frame_ms).round() as i64,
                    participant_id: pid.clone(),
                    view,
                    landmarks,
                    fsr: rendered[class_id][variant].fsr,
                };
                tick += 1;
                samples.push(Sample {
                    frame,
                    labels: LabelRecord {
                        walker_choice: with_walker,
                        initial_position: class.initial_position,
                        posture_type: class_id,
                        risk_label: Some(RiskLabel::from_posture_name(&class.name)),
                    },
                });
            }
        }
    }

    let mut dataset = Dataset::new(vocabulary);
    dataset.samples = samples;
    dataset.provenance.insert("source".into(), json!("synthgen"));
    dataset.provenance.insert("seed".into(), json!(seed));
    dataset
        .provenance
        .insert("participants".into(), json!(spec.participants));
    dataset
        .provenance
        .insert("frames_per_class".into(), json!(spec.frames_per_class));
    dataset.provenance.insert("jitter".into(), json!(noise.jitter));
    dataset
        .provenance
        .insert("participant_offset".into(), json!(noise.participant_offset));
    dataset
        .provenance
        .insert("schema_version".into(), json!(crate::pose::io::SCHEMA_VERSION));
    Ok(dataset)
}

/// One scripted segment: a pose held for `seconds`.
pub type ScriptStep = (GeometricPose, f64);

/// The eight geometric poses, 15 s each.
pub fn standard_script() -> Vec<ScriptStep> {
    GeometricPose::ALL.iter().map(|&p| (p, 15.0)).collect()
}

/// Parses `pose:seconds` pairs separated by commas, e.g. `standing_still:15,sitting:5`.
pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, SynthError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (name, secs) = item
                .split_once(':')
                .ok_or_else(|| SynthError::Script(format!("`{item}` is not pose:seconds")))?;
            let pose = GeometricPose::from_name(name.trim())
                .ok_or_else(|| SynthError::Script(format!("unknown pose `{}`", name.trim())))?;
            let secs: f64 = secs
                .trim()
                .parse()
                .map_err(|_| SynthError::Script(format!("bad duration in `{item}`")))?;
            Ok((pose, secs))
        })
        .collect()
}

/// A scripted stream of frames with the true pose of every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub frames: Vec<LandmarkFrame>,
    pub truth: Vec<GeometricPose>,
    pub fps: f64,
}

impl Session {
    /// Frame indices that fall inside the interpolated lead-in of a segment.
    pub fn transition_mask(&self, window_seconds: f64) -> Vec<bool> {
        let window = (window_seconds * self.fps).round() as usize;
        let mut out = vec![false; self.truth.len()];
        let mut since_change = usize::MAX;
        for (i, flag) in out.iter_mut().enumerate() {
            if i > 0 && self.truth[i] != self.truth[i - 1] {
                since_change = 0;
            }
            *flag = since_change < window;
            since_change = since_change.saturating_add(1);
        }
        out
    }

    /// Labelled dataset view of the session (walker in use throughout).
    pub fn to_dataset(&self) -> Dataset {
        let classes = default_classes();
        let vocabulary = LabelVocabulary::default_postures();
        let mut ds = Dataset::new(vocabulary.clone());
        for (frame, pose) in self.frames.iter().zip(&self.truth) {
            let class_name = pose.template_class();
            let id = vocabulary.id(class_name).expect("template classes are in the vocabulary");
            ds.samples.push(Sample {
                frame: frame.clone(),
                labels: LabelRecord {
                    walker_choice: true,
                    initial_position: classes[id].initial_position,
                    posture_type: id,
                    risk_label: Some(RiskLabel::from_posture_name(class_name)),
                },
            });
        }
        ds.provenance.insert("source".into(), json!("synthgen-session"));
        ds
    }

    /// Ground truth as CSV with a `frame,pose` header.
    pub fn write_truth_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "frame,pose")?;
        for (i, p) in self.truth.iter().enumerate() {
            writeln!(w, "{i},{}", p.name())?;
        }
        w.flush()
    }
}

/// Renders a pose script at `fps`. Each segment after the first starts with
/// a 0.5 s linear blend from the previous template; blended frames carry the
/// destination label. Grip sensors follow the destination template, so a
/// lifting segment reports that hand released throughout.
pub fn generate_session(
    script: &[ScriptStep],
    fps: f64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Session, SynthError> {
    if !(fps > 0.0) {
        return Err(SynthError::Script("fps must be positive".into()));
    }
    if script.is_empty() {
        return Err(SynthError::Script("empty script".into()));
    }
    if let Some((p, s)) = script.iter().find(|(_, s)| !(*s > 0.0)) {
        return Err(SynthError::Script(format!("{}: duration {s} must be positive", p.name())));
    }
    noise.validate()?;
    let mut rng = participant_rng(seed, 0);
    let offsets = participant_offsets(&mut rng, noise.participant_offset);
    let blend_frames = (0.5 * fps).round() as usize;
    let frame_ms = 1000.0 / fps;

    let mut frames = Vec::new();
    let mut truth = Vec::new();
    let mut previous: Option<[Vec3; LANDMARK_COUNT]> = None;
    for &(pose, seconds) in script {
        let template = geometric_template(pose);
        let target = templates::template_positions(&template);
        let n = (seconds * fps).round() as usize;
        for j in 0..n {
            let base = match previous {
                Some(prev) if j < blend_frames && prev != target => {
                    let t = (j + 1) as f64 / blend_frames as f64;
                    let mut b = [Vec3::ZERO; LANDMARK_COUNT];
                    for i in 0..LANDMARK_COUNT {
                        b[i] = prev[i].lerp(target[i], t);
                    }
                    b
                }
                _ => target,
            };
            let landmarks = noisy_landmarks(&base, &offsets, View::FullBody, noise, &mut rng);
            frames.push(LandmarkFrame {
                timestamp_ms: (frames.len() as f64 * frame_ms).round() as i64,
                participant_id: "session".into(),
                view: View::FullBody,
                landmarks,
                fsr: template.fsr,
            });
            truth.push(pose);
        }
        previous = Some(target);
    }
    Ok(Session { frames, truth, fps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::validate_frame;

    fn small_spec() -> GeneratorSpec {
        GeneratorSpec {
            participants: 3,
            frames_per_class: 4,
            ..GeneratorSpec::default()
        }
    }

    #[test]
    fn zero_noise_frames_equal_templates() {
        let ds = generate_dataset(&small_spec(), &NoiseModel::zero(), 1).unwrap();
        let classes = default_classes();
        for s in &ds.samples {
            let class = &classes[s.labels.posture_type];
            let t = PostureTemplate::render(&class.name, &class.pose, s.labels.walker_choice);
            assert_eq!(s.frame.landmarks, t.landmarks);
            assert_eq!(s.frame.fsr, t.fsr);
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate_dataset(&small_spec(), &NoiseModel::default(), 9).unwrap();
        let b = generate_dataset(&small_spec(), &NoiseModel::default(), 9).unwrap();
        let c = generate_dataset(&small_spec(), &NoiseModel::default(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_spec_counts() {
        let spec = GeneratorSpec::default();
        assert_eq!(spec.expected_samples(), 21 * 17 * 120);
        assert_eq!(spec.expected_samples(), 42_840);
    }

    #[test]
    fn generated_frames_are_valid_and_labelled() {
        let spec = GeneratorSpec {
            upper_body_fraction: 0.5,
            ..small_spec()
        };
        let ds = generate_dataset(&spec, &NoiseModel::default(), 3).unwrap();
        assert_eq!(ds.len(), spec.expected_samples());
        ds.validate().unwrap();
        for s in &ds.samples {
            assert!(validate_frame(&s.frame).is_empty());
            let name = ds.vocabulary.name(s.labels.posture_type).unwrap();
            assert_eq!(s.labels.risk_label, Some(RiskLabel::from_posture_name(name)));
            assert_eq!(s.frame.fsr.is_some(), s.labels.walker_choice);
        }
    }

    #[test]
    fn session_lengths_and_grip_release() {
        let s = generate_session(&standard_script(), 10.0, &NoiseModel::default(), 4).unwrap();
        assert_eq!(s.frames.len(), 1200);
        let single =
            generate_session(&[(GeometricPose::StandingStill, 3.0)], 10.0, &NoiseModel::zero(), 1)
                .unwrap();
        let t = geometric_template(GeometricPose::StandingStill);
        assert!(single.frames.iter().all(|f| f.landmarks == t.landmarks));
        for (f, p) in s.frames.iter().zip(&s.truth) {
            if *p == GeometricPose::LiftingLeftHand {
                assert_eq!(f.fsr.unwrap().left, 0.0);
            }
        }
    }

    #[test]
    fn script_errors() {
        assert!(parse_script("standing_still:15,flying:3").is_err());
        assert!(parse_script("standing_still").is_err());
        let ok = parse_script("standing_still:15, sitting:2.5").unwrap();
        assert_eq!(ok, vec![(GeometricPose::StandingStill, 15.0), (GeometricPose::Sitting, 2.5)]);
        assert!(generate_session(&[(GeometricPose::Sitting, 0.0)], 10.0, &NoiseModel::zero(), 1).is_err());
    }

    #[test]
    fn transition_mask_covers_lead_in() {
        let s = generate_session(
            &[(GeometricPose::StandingStill, 1.0), (GeometricPose::Sitting, 1.0)],
            10.0,
            &NoiseModel::zero(),
            1,
        )
        .unwrap();
        let mask = s.transition_mask(0.5);
        assert_eq!(mask.iter().filter(|m| **m).count(), 5);
        assert!(mask[10..15].iter().all(|m| *m));
    }
}
