//! Machine profile, motor step planning, torque feasibility, the host/machine
//! line protocol, a conformant emulator and the host-side controller.

mod controller;
mod emulator;
mod material;
mod profile;
mod protocol;
mod steps;
pub mod transport;

use thiserror::Error;

pub use controller::{Controller, RunOutcome, RunReport, StopHandle};
pub use emulator::{AxisPositions, EmulatorCore, EmulatorEvent, EmulatorServer, Pacing};
pub use material::{feasibility, required_bend_torque, Feasibility, MaterialSpec};
pub use profile::{
    BendAxis, Cost, FeedAxis, Limits, MachineProfile, Overheads, Protocol, RotateAxis, Speeds, Torque,
};
pub use protocol::{ErrorCode, HostCommand, Reply};
pub use steps::{step_totals, to_steps, AxisTotals, MotorCommand, PegSide, StepPlanner};

#[derive(Debug, Error)]
pub enum MachineError {
    #[error("invalid machine profile: {0}")]
    Profile(String),
    #[error("command outside machine limits: {0}")]
    Limit(String),
    #[error("instruction {0}: {1}")]
    AtInstruction(usize, Box<MachineError>),
    #[error("machine rejected `{command}`: error {code}")]
    Rejected { command: String, code: ErrorCode },
    #[error("no reply to `{command}` within {seconds:.1} s")]
    Timeout { command: String, seconds: f64 },
    #[error("unexpected reply `{0}`")]
    Protocol(String),
    #[error("transport closed")]
    Disconnected,
    #[error("stopped")]
    Stopped,
    #[error("transport i/o: {0}")]
    Io(#[from] std::io::Error),
}
