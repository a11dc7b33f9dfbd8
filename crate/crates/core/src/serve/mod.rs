//! Line-oriented classification service over stdio or TCP.
//!
//! Every connection owns a [`Session`] (baseline, debouncer, alert state);
//! loaded models are shared read-only through [`ServiceModels`].

pub mod protocol;

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::features::{frame_row, FeatureMode, FeatureSpec};
use crate::gbt::{GBTModel, MultiOutputGBT};
use crate::geometric::{GeometricConfig, GeometricPose, GeometricTracker, StreamDecision};
use crate::pose::io::FrameRecord;
use crate::pose::{validate_frame, LabelVocabulary, LandmarkFrame, RiskLabel};

pub use protocol::{
    parse_message, ClassifyResponse, ConfigureRequest, GeometricStatus, ModelOutputs, OutputPrediction,
    Response, RiskSource, WireMessage,
};

pub const DEFAULT_PORT: u16 = 7420;
pub const DEFAULT_ALERT_FRAMES: usize = 5;
/// Environment variable naming the default geometric configuration file.
pub const CONFIG_ENV: &str = "WALKERPOSE_CONFIG";

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("model: {0}")]
    Model(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    Tcp,
    Stdio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub listen: String,
    pub multi_model: Option<PathBuf>,
    pub risk_model: Option<PathBuf>,
    /// Falls back to `$WALKERPOSE_CONFIG`, then the built-in configuration.
    pub geometric_config: Option<PathBuf>,
    pub alert_frames: usize,
    pub mode: InputMode,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: format!("127.0.0.1:{DEFAULT_PORT}"),
            multi_model: None,
            risk_model: None,
            geometric_config: None,
            alert_frames: DEFAULT_ALERT_FRAMES,
            mode: InputMode::Stdio,
        }
    }
}

/// Geometric configuration from an explicit path, `$WALKERPOSE_CONFIG`, or the default.
pub fn resolve_geometric_config(path: Option<&PathBuf>) -> Result<GeometricConfig, ServeError> {
    let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.cloned().or(from_env) {
        Some(p) => GeometricConfig::load(&p).map_err(|e| ServeError::Config(e.to_string())),
        None => Ok(GeometricConfig::default()),
    }
}

fn mode_for(n_features: usize) -> Result<FeatureMode, ServeError> {
    [FeatureMode::Features, FeatureMode::RawLandmarks]
        .into_iter()
        .find(|m| m.n_cols() == n_features)
        .ok_or_else(|| ServeError::Model(format!("no feature mode has {n_features} columns")))
}

/// Immutable state shared by every connection.
#[derive(Debug, Clone)]
pub struct ServiceModels {
    pub multi: Option<MultiOutputGBT>,
    pub risk: Option<GBTModel>,
    pub geometric: GeometricConfig,
    pub feature_mode: FeatureMode,
    pub feature_spec: FeatureSpec,
    pub posture_names: Option<Vec<String>>,
    pub alert_frames: usize,
}

impl ServiceModels {
    pub fn new(
        multi: Option<MultiOutputGBT>,
        risk: Option<GBTModel>,
        geometric: GeometricConfig,
        alert_frames: usize,
    ) -> Result<Self, ServeError> {
        if alert_frames == 0 {
            return Err(ServeError::Config("alert_frames must be at least 1".into()));
        }
        geometric.validate().map_err(|e| ServeError::Config(e.to_string()))?;
        let widths: Vec<usize> = multi
            .iter()
            .map(|m| m.n_features())
            .chain(risk.iter().map(|m| m.n_features))
            .collect();
        if widths.windows(2).any(|w| w[0] != w[1]) {
            return Err(ServeError::Model(format!("models disagree on feature width: {widths:?}")));
        }
        if let Some(r) = &risk {
            if r.n_classes() != RiskLabel::ALL.len() {
                return Err(ServeError::Model(format!("risk model has {} classes", r.n_classes())));
            }
        }
        let feature_mode = match widths.first() {
            Some(&w) => mode_for(w)?,
            None => FeatureMode::Features,
        };
        let vocab = LabelVocabulary::default_postures();
        let posture_names = multi
            .as_ref()
            .filter(|m| m.posture_type.n_classes() == vocab.len())
            .map(|_| vocab.names().to_vec());
        Ok(ServiceModels {
            multi,
            risk,
            geometric,
            feature_mode,
            feature_spec: FeatureSpec::default(),
            posture_names,
            alert_frames,
        })
    }

    pub fn geometric_only(geometric: GeometricConfig, alert_frames: usize) -> Result<Self, ServeError> {
        Self::new(None, None, geometric, alert_frames)
    }

    pub fn load(config: &ServerConfig) -> Result<Self, ServeError> {
        let multi = config
            .multi_model
            .as_ref()
            .map(MultiOutputGBT::load)
            .transpose()
            .map_err(|e| ServeError::Model(e.to_string()))?;
        let risk = config
            .risk_model
            .as_ref()
            .map(GBTModel::load)
            .transpose()
            .map_err(|e| ServeError::Model(e.to_string()))?;
        let geometric = resolve_geometric_config(config.geometric_config.as_ref())?;
        Self::new(multi, risk, geometric, config.alert_frames)
    }
}

/// Raises after `k` consecutive bad frames, clears after `k` consecutive others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlertState {
    k: usize,
    active: bool,
    bad_run: usize,
    good_run: usize,
}

impl AlertState {
    pub fn new(k: usize) -> Self {
        AlertState {
            k: k.max(1),
            active: false,
            bad_run: 0,
            good_run: 0,
        }
    }

    pub fn push(&mut self, bad: bool) -> bool {
        if bad {
            self.bad_run += 1;
            self.good_run = 0;
            if self.bad_run >= self.k {
                self.active = true;
            }
        } else {
            self.good_run += 1;
            self.bad_run = 0;
            if self.good_run >= self.k {
                self.active = false;
            }
        }
        self.active
    }

    pub fn active(&self) -> bool {
        self.active
    }
}

#[derive(Debug, Clone)]
struct PendingCalibration {
    needed: usize,
    frames: Vec<LandmarkFrame>,
}

/// Per-connection state.
#[derive(Debug, Clone)]
pub struct Session<'a> {
    shared: &'a ServiceModels,
    tracker: GeometricTracker,
    calibration: Option<PendingCalibration>,
    alert: AlertState,
    use_models: bool,
}

fn geometric_risk(pose: GeometricPose) -> RiskLabel {
    match pose {
        GeometricPose::StandingStill => RiskLabel::Standing,
        GeometricPose::Sitting => RiskLabel::Sitting,
        _ => RiskLabel::BadPosture,
    }
}

fn prediction(model: &GBTModel, values: &[f64], valid: &[bool], names: Option<&[String]>) -> Result<OutputPrediction, String> {
    let probabilities = model.predict_proba(values, valid).map_err(|e| e.to_string())?;
    let class = crate::gbt::argmax(&probabilities);
    Ok(OutputPrediction {
        class,
        name: names.and_then(|n| n.get(class).cloned()),
        probabilities,
    })
}

impl<'a> Session<'a> {
    pub fn new(shared: &'a ServiceModels) -> Self {
        Session {
            shared,
            tracker: GeometricTracker::new(shared.geometric.clone()),
            calibration: None,
            alert: AlertState::new(shared.alert_frames),
            use_models: true,
        }
    }

    pub fn is_calibrated(&self) -> bool {
        self.tracker.baseline().is_some()
    }

    /// Response to one input line; `None` for blank lines.
    pub fn handle_line(&mut self, line: &str) -> Option<Response> {
        let line = line.trim();
        if line.is_empty() {
            return None;
        }
        Some(match parse_message(line) {
            Ok(msg) => self.handle(msg),
            Err(e) => Response::error("parse", e.to_string()),
        })
    }

    pub fn handle(&mut self, msg: WireMessage) -> Response {
        match msg {
            WireMessage::Frame(rec) => self.classify(rec),
            WireMessage::Calibrate { frames } => {
                if frames == 0 {
                    return Response::error("calibrate", "frames must be at least 1");
                }
                self.calibration = Some(PendingCalibration {
                    needed: frames,
                    frames: Vec::with_capacity(frames),
                });
                Response::Ack {
                    request: "calibrate".into(),
                }
            }
            WireMessage::Reset => {
                self.tracker.reset();
                self.calibration = None;
                self.alert = AlertState::new(self.alert.k);
                Response::Ack {
                    request: "reset".into(),
                }
            }
            WireMessage::Configure(req) => match self.configure(req) {
                Ok(()) => Response::Ack {
                    request: "configure".into(),
                },
                Err(m) => Response::error("configure", m),
            },
        }
    }

    fn configure(&mut self, req: ConfigureRequest) -> Result<(), String> {
        let mut config = self.tracker.config().clone();
        for (name, &value) in &req.thresholds {
            let pose = GeometricPose::from_name(name).ok_or_else(|| format!("unknown pose {name}"))?;
            config
                .rule_mut(pose)
                .ok_or_else(|| format!("{name} has no threshold"))?
                .threshold = value;
        }
        if let Some(k) = req.debounce_frames {
            config.debounce_frames = k;
        }
        config.validate().map_err(|e| e.to_string())?;
        if req.alert_frames == Some(0) {
            return Err("alert_frames must be at least 1".into());
        }
        let baseline = self.tracker.baseline().cloned();
        self.tracker = GeometricTracker::new(config);
        if let Some(b) = baseline {
            self.tracker.set_baseline(b);
        }
        if let Some(k) = req.alert_frames {
            self.alert = AlertState::new(k);
        }
        if let Some(u) = req.use_models {
            self.use_models = u;
        }
        Ok(())
    }

    fn geometric_step(&mut self, frame: &LandmarkFrame) -> GeometricStatus {
        if let Some(pending) = &mut self.calibration {
            pending.frames.push(frame.clone());
            let (collected, needed) = (pending.frames.len(), pending.needed);
            if collected < needed {
                return GeometricStatus::Calibrating { collected, needed };
            }
            let frames = std::mem::take(&mut pending.frames);
            self.calibration = None;
            return match self.tracker.calibrate(&frames) {
                Ok(_) => GeometricStatus::Calibrated { frames: collected },
                Err(e) => GeometricStatus::Error { message: e.to_string() },
            };
        }
        if !self.is_calibrated() {
            return GeometricStatus::NotCalibrated;
        }
        match self.tracker.push(frame) {
            Ok(StreamDecision { pose, raw, scores, .. }) => GeometricStatus::Ok {
                pose,
                raw,
                scores: GeometricPose::ALL
                    .iter()
                    .map(|p| (p.name().to_string(), scores[p.index()]))
                    .collect::<BTreeMap<_, _>>(),
            },
            Err(e) => GeometricStatus::Error { message: e.to_string() },
        }
    }

    fn model_step(&self, frame: &LandmarkFrame) -> Result<Option<ModelOutputs>, String> {
        let Some(multi) = self.shared.multi.as_ref().filter(|_| self.use_models) else {
            return Ok(None);
        };
        let (values, valid) =
            frame_row(frame, self.shared.feature_mode, &self.shared.feature_spec).map_err(|e| e.to_string())?;
        let risk_names: Vec<String> = RiskLabel::ALL.iter().map(|r| r.name().to_string()).collect();
        Ok(Some(ModelOutputs {
            walker_choice: prediction(&multi.walker_choice, &values, &valid, None)?,
            initial_position: prediction(&multi.initial_position, &values, &valid, None)?,
            posture_type: prediction(&multi.posture_type, &values, &valid, self.shared.posture_names.as_deref())?,
            risk: self
                .shared
                .risk
                .as_ref()
                .map(|r| prediction(r, &values, &valid, Some(&risk_names)))
                .transpose()?,
        }))
    }

    fn classify(&mut self, rec: FrameRecord) -> Response {
        let start = Instant::now();
        let ts = rec.ts;
        let frame = LandmarkFrame::from(rec);
        let violations = validate_frame(&frame);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Response::error("invalid_frame", text.join("; "));
        }
        let geometric = self.geometric_step(&frame);
        let (models, model_error) = match self.model_step(&frame) {
            Ok(m) => (m, None),
            Err(e) => (None, Some(e)),
        };
        let (risk_label, risk_source) = if let Some(r) = models.as_ref().and_then(|m| m.risk.as_ref()) {
            (RiskLabel::from_class(r.class), Some(RiskSource::RiskModel))
        } else if let Some(name) = models.as_ref().and_then(|m| m.posture_type.name.as_deref()) {
            (Some(RiskLabel::from_posture_name(name)), Some(RiskSource::PostureModel))
        } else if let Some(pose) = geometric.pose() {
            (Some(geometric_risk(pose)), Some(RiskSource::Geometric))
        } else {
            (None, None)
        };
        let alert = self.alert.push(risk_label == Some(RiskLabel::BadPosture));
        Response::Result(ClassifyResponse {
            ts,
            geometric,
            models,
            model_error,
            risk_label,
            risk_source,
            alert,
            latency_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub lines: usize,
    pub responses: usize,
}

/// Runs one session over a line stream, answering each non-blank line in order.
pub fn serve_lines<R: BufRead, W: Write>(
    shared: &ServiceModels,
    reader: R,
    mut writer: W,
) -> io::Result<ServeStats> {
    let mut session = Session::new(shared);
    let mut stats = ServeStats::default();
    for line in reader.lines() {
        let line = line?;
        stats.lines += 1;
        if let Some(resp) = session.handle_line(&line) {
            writeln!(writer, "{}", resp.to_line())?;
            writer.flush()?;
            stats.responses += 1;
        }
    }
    Ok(stats)
}

pub fn serve_stdio(shared: &ServiceModels) -> io::Result<ServeStats> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_lines(shared, stdin.lock(), BufWriter::new(stdout.lock()))
}

fn handle_connection(shared: &ServiceModels, stream: TcpStream) -> io::Result<ServeStats> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(shared, reader, BufWriter::new(stream))
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp(listener: TcpListener, shared: Arc<ServiceModels>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let shared = Arc::clone(&shared);
        std::thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            match handle_connection(&shared, stream) {
                Ok(stats) => log::info!("{peer}: closed after {} responses", stats.responses),
                Err(e) => log::warn!("{peer}: {e}"),
            }
        });
    }
    Ok(())
}

pub fn serve(config: &ServerConfig) -> Result<(), ServeError> {
    let shared = ServiceModels::load(config)?;
    match config.mode {
        InputMode::Stdio => {
            serve_stdio(&shared)?;
        }
        InputMode::Tcp => {
            let listener = TcpListener::bind(&config.listen)?;
            log::info!("listening on {}", listener.local_addr()?);
            serve_tcp(listener, Arc::new(shared))?;
        }
    }
    Ok(())
}

/// Replays a recorded stream through one session: the first `calibrate`
/// frames build the baseline (none when 0), then every frame is answered.
/// Returns one response per frame, in order.
pub fn classify_recorded(shared: &ServiceModels, frames: &[LandmarkFrame], calibrate: usize) -> Vec<Response> {
    let mut session = Session::new(shared);
    if calibrate > 0 {
        session.handle(WireMessage::Calibrate { frames: calibrate });
    }
    frames
        .iter()
        .map(|f| session.handle(WireMessage::Frame(FrameRecord::from(f))))
        .collect()
}
