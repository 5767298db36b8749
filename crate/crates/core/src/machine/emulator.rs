//! Step-accurate stand-in for the machine firmware.
//!
//! [`EmulatorCore`] is the synchronous state machine; [`EmulatorServer`]
//! serves it over any number of links (in-process or TCP), executing one
//! command at a time with optional real-time pacing so that `STOP` can cut a
//! motion short between pulses.

use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::profile::MachineProfile;
use super::protocol::{ErrorCode, HostCommand, Reply};
use super::steps::{MotorCommand, PegSide};
use super::transport::{self, Link, RecvError};
use crate::geometry::{rotate_about, Vec3};

/// Absolute step counters. `bend` is the arm position relative to its zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPositions {
    pub feed: i64,
    pub bend: i64,
    pub rotate: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EmulatorEvent {
    Command(String),
    LimitSwitch,
    Rejected { command: String, code: u8 },
    Halted,
}

/// Firmware state machine.
#[derive(Debug, Clone)]
pub struct EmulatorCore {
    feed_res: f64,
    bend_res: f64,
    rotate_res: f64,
    bend_limit: i64,
    rotate_limit: i64,
    homed: bool,
    halted: bool,
    retracted: bool,
    peg: PegSide,
    axes: AxisPositions,
    /// Outward bend steps only, the counterpart of the planner's bend total.
    bend_swept: i64,
    events: Vec<EmulatorEvent>,
    position: Vec3,
    heading: Vec3,
    normal: Vec3,
    points: Vec<Vec3>,
    /// Whether the last wire motion was a feed, so a further feed extends the
    /// current segment instead of starting a new one.
    feeding: bool,
}

impl EmulatorCore {
    pub fn new(profile: &MachineProfile) -> Self {
        let bend_res = profile.bend_resolution();
        let rotate_res = profile.rotate_resolution();
        Self {
            feed_res: profile.feed_resolution(),
            bend_res,
            rotate_res,
            // One step of slack for the planner's residual carrying.
            bend_limit: (profile.bend.hard_stop_deg / bend_res).round() as i64 + 1,
            rotate_limit: (profile.rotate.max_cumulative_deg / rotate_res).round() as i64,
            homed: false,
            halted: false,
            retracted: false,
            peg: PegSide::Positive,
            axes: AxisPositions::default(),
            bend_swept: 0,
            events: Vec::new(),
            position: Vec3::zeros(),
            heading: Vec3::x(),
            normal: Vec3::z(),
            points: vec![Vec3::zeros()],
            feeding: false,
        }
    }

    pub fn axes(&self) -> AxisPositions {
        self.axes
    }

    pub fn is_homed(&self) -> bool {
        self.homed
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn is_retracted(&self) -> bool {
        self.retracted
    }

    pub fn peg(&self) -> PegSide {
        self.peg
    }

    /// Total outward bend steps swept since power-up.
    pub fn bend_swept(&self) -> i64 {
        self.bend_swept
    }

    pub fn events(&self) -> &[EmulatorEvent] {
        &self.events
    }

    /// Wire shape produced so far: a corner per bend, a point per feed run.
    pub fn wire_points(&self) -> &[Vec3] {
        &self.points
    }

    /// Clears the traced wire, as when a finished part is cut off.
    pub fn reset_wire(&mut self) {
        self.position = Vec3::zeros();
        self.heading = Vec3::x();
        self.normal = Vec3::z();
        self.points = vec![Vec3::zeros()];
        self.feeding = false;
    }

    /// Comparable machine state, excluding the event log and wire trace.
    pub fn state(&self) -> (bool, bool, bool, PegSide, AxisPositions) {
        (self.homed, self.halted, self.retracted, self.peg, self.axes)
    }

    /// Latches the halt; motion is refused until the next `HOME`.
    pub fn halt(&mut self) {
        self.halted = true;
        self.events.push(EmulatorEvent::Halted);
    }

    /// Seconds the motion would take at the profile speeds.
    pub fn motion_seconds(&self, cmd: &MotorCommand, profile: &MachineProfile) -> f64 {
        match *cmd {
            MotorCommand::Feed(n) => n.unsigned_abs() as f64 * self.feed_res / profile.speeds.feed_mm_s,
            MotorCommand::Bend(n) => n.unsigned_abs() as f64 * self.bend_res / profile.speeds.bend_deg_s,
            MotorCommand::Rotate(n) => {
                n.unsigned_abs() as f64 * self.rotate_res / profile.speeds.rotate_deg_s
            }
            MotorCommand::Retract(_) => profile.overheads.peg_retract_s / 2.0,
            MotorCommand::Home => profile.overheads.homing_s,
        }
    }

    /// Checks whether `cmd` may start in the current state.
    pub fn check(&self, cmd: &MotorCommand) -> Result<(), ErrorCode> {
        if self.halted && *cmd != MotorCommand::Home {
            return Err(ErrorCode::Stopped);
        }
        match *cmd {
            MotorCommand::Feed(_) | MotorCommand::Rotate(_) if self.axes.bend != 0 => {
                Err(ErrorCode::PegNotClear)
            }
            MotorCommand::Rotate(n) if (self.axes.rotate + n).abs() > self.rotate_limit => {
                Err(ErrorCode::RotateLimit)
            }
            MotorCommand::Bend(_) if !self.homed => Err(ErrorCode::NotHomed),
            MotorCommand::Bend(n) => {
                let target = self.axes.bend + n;
                if target.abs() > self.bend_limit {
                    Err(ErrorCode::BendLimit)
                } else if !self.retracted && target != 0 && target.signum() != self.peg.sign() {
                    Err(ErrorCode::WrongPegSide)
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Applies the first `done` steps of an already checked motion.
    fn apply_steps(&mut self, cmd: &MotorCommand, done: i64) {
        match *cmd {
            MotorCommand::Feed(_) => {
                self.axes.feed += done;
                let mm = done as f64 * self.feed_res;
                if mm != 0.0 {
                    self.position += self.heading * mm;
                    if self.feeding {
                        *self.points.last_mut().expect("trace starts with a point") = self.position;
                    } else {
                        self.points.push(self.position);
                    }
                    self.feeding = true;
                }
            }
            MotorCommand::Bend(_) => {
                let before = self.axes.bend;
                let after = before + done;
                self.axes.bend = after;
                let outward = after.abs() - before.abs();
                if outward > 0 {
                    self.bend_swept += outward;
                    if !self.retracted {
                        let deg = (outward * after.signum()) as f64 * self.bend_res;
                        self.heading = rotate_about(&self.heading, &self.normal, deg).normalize();
                        self.feeding = false;
                    }
                }
            }
            MotorCommand::Rotate(_) => {
                self.axes.rotate += done;
                let deg = done as f64 * self.rotate_res;
                self.normal = rotate_about(&self.normal, &self.heading, deg).normalize();
            }
            MotorCommand::Retract(true) => self.retracted = true,
            MotorCommand::Retract(false) => {
                if self.retracted {
                    self.retracted = false;
                    self.peg = self.peg.flipped();
                }
            }
            MotorCommand::Home => {
                self.homed = true;
                self.halted = false;
                self.retracted = false;
                self.peg = PegSide::Positive;
                self.axes.bend = 0;
                self.events.push(EmulatorEvent::LimitSwitch);
            }
        }
    }

    fn step_count(cmd: &MotorCommand) -> i64 {
        match *cmd {
            MotorCommand::Feed(n) | MotorCommand::Bend(n) | MotorCommand::Rotate(n) => n,
            _ => 0,
        }
    }

    /// Executes a command to completion and returns the replies it produces.
    pub fn execute(&mut self, cmd: &MotorCommand) -> Vec<Reply> {
        self.events.push(EmulatorEvent::Command(cmd.to_line()));
        if let Err(code) = self.check(cmd) {
            self.events.push(EmulatorEvent::Rejected {
                command: cmd.to_line(),
                code: code.code(),
            });
            return vec![Reply::Err(code)];
        }
        self.apply_steps(cmd, Self::step_count(cmd));
        match cmd {
            MotorCommand::Home => vec![Reply::Hit, Reply::Ok],
            _ => vec![Reply::Ok],
        }
    }

    /// Parses and executes one protocol line. `STOP` latches the halt.
    pub fn execute_line(&mut self, line: &str) -> Vec<Reply> {
        match line.parse::<HostCommand>() {
            Ok(HostCommand::Motor(cmd)) => self.execute(&cmd),
            Ok(HostCommand::Stop) => {
                self.halt();
                vec![Reply::Ok]
            }
            Err(code) => vec![Reply::Err(code)],
        }
    }
}

/// Real-time pacing of emulated motions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Motions complete instantly.
    Instant,
    /// Motions take their profile duration multiplied by this factor.
    Scaled(f64),
}

struct Shared {
    core: Mutex<EmulatorCore>,
    /// Set by the reader the moment a `STOP` line arrives.
    stop: AtomicBool,
    profile: MachineProfile,
    pacing: Pacing,
}

/// Emulated machine serving protocol links. All links drive the same
/// machine state, so a `STOP` on one interrupts a motion started on another.
#[derive(Clone)]
pub struct EmulatorServer {
    shared: Arc<Shared>,
}

const PULSE_CHUNK: Duration = Duration::from_millis(2);

enum Job {
    Motion(MotorCommand),
    Stop,
    Invalid(ErrorCode),
}

impl EmulatorServer {
    pub fn new(profile: &MachineProfile, pacing: Pacing) -> Self {
        Self {
            shared: Arc::new(Shared {
                core: Mutex::new(EmulatorCore::new(profile)),
                stop: AtomicBool::new(false),
                profile: profile.clone(),
                pacing,
            }),
        }
    }

    /// Snapshot of the machine state.
    pub fn core(&self) -> EmulatorCore {
        self.lock().clone()
    }

    pub fn with_core<T>(&self, f: impl FnOnce(&mut EmulatorCore) -> T) -> T {
        f(&mut self.lock())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, EmulatorCore> {
        self.shared.core.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Returns the host end of a new in-process link to this machine.
    pub fn connect(&self) -> Link {
        let (host, machine) = transport::channel_pair();
        self.attach(machine);
        host
    }

    /// Serves one link until it closes.
    pub fn attach(&self, link: Link) {
        let Link { sink, mut source } = link;
        let (tx, rx) = mpsc::channel::<Job>();
        let shared = Arc::clone(&self.shared);
        thread::spawn(move || loop {
            let line = match source.recv_line(Duration::from_secs(3600)) {
                Ok(line) => line,
                Err(RecvError::Timeout) => continue,
                Err(RecvError::Closed) => break,
            };
            let job = match line.parse::<HostCommand>() {
                Ok(HostCommand::Stop) => {
                    shared.stop.store(true, Ordering::SeqCst);
                    Job::Stop
                }
                Ok(HostCommand::Motor(cmd)) => Job::Motion(cmd),
                Err(code) => Job::Invalid(code),
            };
            if tx.send(job).is_err() {
                break;
            }
        });
        let server = self.clone();
        thread::spawn(move || {
            let mut sink = sink;
            for job in rx {
                let replies = match job {
                    Job::Stop => {
                        server.lock().halt();
                        vec![Reply::Ok]
                    }
                    Job::Invalid(code) => vec![Reply::Err(code)],
                    Job::Motion(cmd) => server.run_motion(&cmd),
                };
                for r in replies {
                    if sink.send_line(&r.to_line()).is_err() {
                        return;
                    }
                }
            }
        });
    }

    fn run_motion(&self, cmd: &MotorCommand) -> Vec<Reply> {
        let shared = &self.shared;
        if *cmd == MotorCommand::Home {
            shared.stop.store(false, Ordering::SeqCst);
        } else if shared.stop.load(Ordering::SeqCst) {
            let mut core = self.lock();
            core.events.push(EmulatorEvent::Command(cmd.to_line()));
            return vec![Reply::Err(ErrorCode::Stopped)];
        }
        let duration = {
            let core = self.lock();
            if core.check(cmd).is_err() {
                drop(core);
                return self.lock().execute(cmd);
            }
            match shared.pacing {
                Pacing::Instant => Duration::ZERO,
                Pacing::Scaled(k) => {
                    Duration::from_secs_f64((core.motion_seconds(cmd, &shared.profile) * k).max(0.0))
                }
            }
        };
        let total = EmulatorCore::step_count(cmd);
        let start = Instant::now();
        while start.elapsed() < duration {
            if *cmd != MotorCommand::Home && shared.stop.load(Ordering::SeqCst) {
                let fraction = start.elapsed().as_secs_f64() / duration.as_secs_f64();
                let done = (total as f64 * fraction.min(1.0)).trunc() as i64;
                let mut core = self.lock();
                core.events.push(EmulatorEvent::Command(cmd.to_line()));
                core.apply_steps(cmd, done);
                return vec![Reply::Err(ErrorCode::Stopped)];
            }
            thread::sleep(PULSE_CHUNK.min(duration.saturating_sub(start.elapsed())));
        }
        self.lock().execute(cmd)
    }

    /// Listens on `addr` and serves every accepted connection. Returns the
    /// bound address.
    pub fn serve_tcp(&self, addr: &str) -> std::io::Result<SocketAddr> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let server = self.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                if let Ok(link) = transport::tcp_link(stream) {
                    server.attach(link);
                }
            }
        });
        Ok(local)
    }
}
