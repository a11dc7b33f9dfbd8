//! Starts the TCP service on a free local port, streams a scripted session to
//! it as a client would, and prints the pose and alert changes it answers with.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use walkerpose::geometric::{GeometricConfig, GeometricPose as P};
use walkerpose::pose::io::FrameRecord;
use walkerpose::serve::{serve_tcp, Response, ServiceModels, WireMessage};
use walkerpose::synth::{generate_session, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shared = Arc::new(ServiceModels::geometric_only(GeometricConfig::default(), 5)?);
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    std::thread::spawn(move || serve_tcp(listener, shared));
    println!("service on {addr}");

    let script = [(P::StandingStill, 3.0), (P::FallForward, 3.0), (P::StandingStill, 2.0), (P::LiftingRightHand, 2.0)];
    let session = generate_session(&script, 10.0, &NoiseModel::default(), 5)?;

    let stream = TcpStream::connect(addr)?;
    let mut writer = stream.try_clone()?;
    let mut lines = BufReader::new(stream).lines();
    let mut send = |msg: &WireMessage| -> std::io::Result<Response> {
        writeln!(writer, "{}", serde_json::to_string(msg)?)?;
        let line = lines.next().expect("service answers every line")?;
        Ok(serde_json::from_str(&line)?)
    };

    println!("{:?}", send(&WireMessage::Calibrate { frames: 10 })?);
    let (mut last_pose, mut last_alert) = (None, false);
    for frame in &session.frames {
        if let Response::Result(r) = send(&WireMessage::Frame(FrameRecord::from(frame)))? {
            let pose = r.geometric.pose();
            if pose.is_some() && pose != last_pose {
                println!("{:>6} ms  pose {}", r.ts, pose.map_or("-", |p| p.name()));
                last_pose = pose;
            }
            if r.alert != last_alert {
                println!("{:>6} ms  alert {}", r.ts, if r.alert { "raised" } else { "cleared" });
                last_alert = r.alert;
            }
        }
    }
    Ok(())
}
