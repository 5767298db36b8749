//! Host side of a machine session: homing, jogging, program runs and STOP.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::profile::MachineProfile;
use super::protocol::{ErrorCode, Reply};
use super::steps::{AxisTotals, MotorCommand, StepPlanner};
use super::transport::{LineSink, LineSource, Link, RecvError};
use super::MachineError;
use crate::instructions::{Instruction, InstructionProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub outcome: RunOutcome,
    /// Instructions fully executed.
    pub instructions_done: usize,
    pub commands_sent: usize,
    pub steps: AxisTotals,
    pub elapsed_s: f64,
}

type SharedSink = Arc<Mutex<Box<dyn LineSink>>>;

/// Sends `STOP` from any thread while a run is in progress.
#[derive(Clone)]
pub struct StopHandle {
    sink: SharedSink,
    flag: Arc<AtomicBool>,
}

impl StopHandle {
    pub fn stop(&self) -> Result<(), MachineError> {
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        if self.flag.swap(true, Ordering::SeqCst) {
            return Ok(());
        }
        sink.send_line("STOP").map_err(MachineError::from)
    }
}

/// One exclusive session over a link.
pub struct Controller {
    sink: SharedSink,
    source: Box<dyn LineSource>,
    profile: MachineProfile,
    planner: StepPlanner,
    stop: Arc<AtomicBool>,
    homed: bool,
    limit_switch_hits: usize,
    session: Vec<Instruction>,
}

/// How a single command ended.
enum Ack {
    Done,
    Stopped,
}

impl Controller {
    pub fn new(link: Link, profile: &MachineProfile) -> Self {
        Self {
            sink: Arc::new(Mutex::new(link.sink)),
            source: link.source,
            profile: profile.clone(),
            planner: StepPlanner::new(profile),
            stop: Arc::new(AtomicBool::new(false)),
            homed: false,
            limit_switch_hits: 0,
            session: Vec::new(),
        }
    }

    pub fn stop_handle(&self) -> StopHandle {
        StopHandle {
            sink: Arc::clone(&self.sink),
            flag: Arc::clone(&self.stop),
        }
    }

    pub fn is_homed(&self) -> bool {
        self.homed
    }

    /// Limit-switch closures reported during homing.
    pub fn limit_switch_hits(&self) -> usize {
        self.limit_switch_hits
    }

    /// Steps sent so far this session.
    pub fn totals(&self) -> AxisTotals {
        self.planner.totals()
    }

    fn timeout_for(&self, cmd: &MotorCommand) -> Duration {
        let p = &self.profile;
        let motion = match *cmd {
            MotorCommand::Feed(n) => n.unsigned_abs() as f64 * p.feed_resolution() / p.speeds.feed_mm_s,
            MotorCommand::Bend(n) => n.unsigned_abs() as f64 * p.bend_resolution() / p.speeds.bend_deg_s,
            MotorCommand::Rotate(n) => {
                n.unsigned_abs() as f64 * p.rotate_resolution() / p.speeds.rotate_deg_s
            }
            MotorCommand::Retract(_) => p.overheads.peg_retract_s,
            MotorCommand::Home => p.overheads.homing_s,
        };
        Duration::from_secs_f64(p.protocol.command_timeout_s + motion)
    }

    fn recv(&mut self, command: &str, timeout: Duration) -> Result<Reply, MachineError> {
        let line = self.source.recv_line(timeout).map_err(|e| match e {
            RecvError::Timeout => MachineError::Timeout {
                command: command.to_string(),
                seconds: timeout.as_secs_f64(),
            },
            RecvError::Closed => MachineError::Disconnected,
        })?;
        Reply::parse(&line).ok_or(MachineError::Protocol(line))
    }

    /// Consumes the `OK` that answers our own `STOP`.
    fn drain_stop_ack(&mut self) -> Result<(), MachineError> {
        let timeout = Duration::from_secs_f64(self.profile.protocol.command_timeout_s);
        loop {
            match self.recv("STOP", timeout)? {
                Reply::Ok => return Ok(()),
                Reply::Hit | Reply::Err(_) => continue,
            }
        }
    }

    fn send(&mut self, cmd: MotorCommand) -> Result<Ack, MachineError> {
        let line = cmd.to_line();
        {
            let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
            if self.stop.load(Ordering::SeqCst) {
                drop(sink);
                self.drain_stop_ack()?;
                return Ok(Ack::Stopped);
            }
            sink.send_line(&line)?;
        }
        let timeout = self.timeout_for(&cmd);
        let result = loop {
            match self.recv(&line, timeout)? {
                Reply::Hit => self.limit_switch_hits += 1,
                Reply::Ok => break Ok(Ack::Done),
                Reply::Err(ErrorCode::Stopped) => break Ok(Ack::Stopped),
                Reply::Err(code) => {
                    break Err(MachineError::Rejected {
                        command: line.clone(),
                        code,
                    })
                }
            }
        };
        if self.stop.load(Ordering::SeqCst) {
            self.drain_stop_ack()?;
            return Ok(Ack::Stopped);
        }
        result
    }

    fn finish_stop(&mut self) {
        self.stop.store(false, Ordering::SeqCst);
        self.homed = false;
    }

    /// Homes the bend axis. Clears a latched stop, including one requested
    /// while idle.
    pub fn home(&mut self) -> Result<(), MachineError> {
        if self.stop.swap(false, Ordering::SeqCst) {
            self.drain_stop_ack()?;
        }
        self.home_pending_stop()
    }

    /// Homes unless a stop is pending, in which case the stop wins.
    fn home_pending_stop(&mut self) -> Result<(), MachineError> {
        match self.send(MotorCommand::Home)? {
            Ack::Done => {
                self.homed = true;
                self.planner.reset_peg();
                Ok(())
            }
            Ack::Stopped => {
                self.finish_stop();
                Err(MachineError::Stopped)
            }
        }
    }

    /// Executes one instruction and appends it to the session log.
    pub fn jog(&mut self, ins: Instruction) -> Result<(), MachineError> {
        let mut trial = self.planner.clone();
        let cmds = trial.plan(&ins)?;
        for cmd in cmds {
            if let Ack::Stopped = self.send(cmd)? {
                self.finish_stop();
                return Err(MachineError::Stopped);
            }
        }
        self.planner = trial;
        self.session.push(ins);
        Ok(())
    }

    /// Jogged instructions so far, replayable as a program.
    pub fn session_log(&self) -> InstructionProgram {
        InstructionProgram::new(self.session.clone())
    }

    /// Homes, then streams the program with one acknowledged command at a
    /// time. A STOP ends the run early with [`RunOutcome::Stopped`].
    pub fn run_program(&mut self, program: &InstructionProgram) -> Result<RunReport, MachineError> {
        let start = Instant::now();
        let before = self.planner.totals();
        let mut commands_sent = 0;
        let report = |outcome, done, sent, ctl: &Self| {
            let after = ctl.planner.totals();
            RunReport {
                outcome,
                instructions_done: done,
                commands_sent: sent,
                steps: AxisTotals {
                    feed: after.feed - before.feed,
                    bend: after.bend - before.bend,
                    rotate: after.rotate - before.rotate,
                },
                elapsed_s: start.elapsed().as_secs_f64(),
            }
        };
        // A stop requested before the run began still ends it.
        match self.home_pending_stop() {
            Ok(()) => {}
            Err(MachineError::Stopped) => return Ok(report(RunOutcome::Stopped, 0, 0, self)),
            Err(e) => return Err(e),
        }
        commands_sent += 1;
        for (k, ins) in program.iter().enumerate() {
            let cmds = self
                .planner
                .plan(ins)
                .map_err(|e| MachineError::AtInstruction(k, Box::new(e)))?;
            for cmd in cmds {
                let ack = self
                    .send(cmd)
                    .map_err(|e| MachineError::AtInstruction(k, Box::new(e)))?;
                commands_sent += 1;
                if let Ack::Stopped = ack {
                    self.finish_stop();
                    return Ok(report(RunOutcome::Stopped, k, commands_sent, self));
                }
            }
        }
        Ok(report(RunOutcome::Completed, program.len(), commands_sent, self))
    }
}
