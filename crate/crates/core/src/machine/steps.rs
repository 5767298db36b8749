//! Translation of instructions into motor steps.
//!
//! Each axis keeps the exact commanded total in physical units and emits the
//! step count that brings the rounded total up to date, so quantization
//! error never exceeds half a step per axis no matter how long the program.

use serde::{Deserialize, Serialize};

use super::profile::MachineProfile;
use super::MachineError;
use crate::instructions::{Instruction, InstructionProgram};

/// Low-level command as understood by the firmware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotorCommand {
    /// Both feed motors, lock-step.
    Feed(i64),
    /// Bend arm, signed steps relative to its current position.
    Bend(i64),
    Rotate(i64),
    /// `true` lifts the peg clear of the wire, `false` lowers it on the far
    /// side from where it was.
    Retract(bool),
    Home,
}

impl MotorCommand {
    /// Protocol line, without terminator.
    pub fn to_line(&self) -> String {
        match self {
            MotorCommand::Feed(n) => format!("F {n}"),
            MotorCommand::Bend(n) => format!("B {n}"),
            MotorCommand::Rotate(n) => format!("R {n}"),
            MotorCommand::Retract(up) => format!("RETRACT {}", u8::from(*up)),
            MotorCommand::Home => "HOME".to_string(),
        }
    }
}

/// Which side of the wire the bending peg sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PegSide {
    Positive,
    Negative,
}

impl PegSide {
    pub fn flipped(self) -> Self {
        match self {
            PegSide::Positive => PegSide::Negative,
            PegSide::Negative => PegSide::Positive,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            PegSide::Positive => 1,
            PegSide::Negative => -1,
        }
    }
}

/// Stateful planner; one per machine session so residuals carry across
/// jogs as well as across a program.
#[derive(Debug, Clone)]
pub struct StepPlanner {
    feed_res: f64,
    bend_res: f64,
    rotate_res: f64,
    hard_stop_deg: f64,
    max_rotate_deg: f64,
    feed_total: f64,
    feed_steps: i64,
    bend_total: f64,
    bend_steps: i64,
    rotate_total: f64,
    rotate_steps: i64,
    peg: PegSide,
}

/// Steps emitted per axis; bend counts outward sweeps only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisTotals {
    pub feed: i64,
    pub bend: i64,
    pub rotate: i64,
}

impl StepPlanner {
    pub fn new(profile: &MachineProfile) -> Self {
        Self {
            feed_res: profile.feed_resolution(),
            bend_res: profile.bend_resolution(),
            rotate_res: profile.rotate_resolution(),
            hard_stop_deg: profile.bend.hard_stop_deg,
            max_rotate_deg: profile.rotate.max_cumulative_deg,
            feed_total: 0.0,
            feed_steps: 0,
            bend_total: 0.0,
            bend_steps: 0,
            rotate_total: 0.0,
            rotate_steps: 0,
            peg: PegSide::Positive,
        }
    }

    /// Homing puts the peg back on the positive side.
    pub fn reset_peg(&mut self) {
        self.peg = PegSide::Positive;
    }

    pub fn peg(&self) -> PegSide {
        self.peg
    }

    pub fn totals(&self) -> AxisTotals {
        AxisTotals {
            feed: self.feed_steps,
            bend: self.bend_steps,
            rotate: self.rotate_steps,
        }
    }

    /// Net commanded rotation so far, degrees.
    pub fn rotation_deg(&self) -> f64 {
        self.rotate_total
    }

    /// Motor commands for one instruction. The planner is left unchanged on
    /// error.
    pub fn plan(&mut self, ins: &Instruction) -> Result<Vec<MotorCommand>, MachineError> {
        ins.validate().map_err(|e| MachineError::Limit(e.to_string()))?;
        let mut out = Vec::new();
        match *ins {
            Instruction::Feed(d) => {
                let total = self.feed_total + d;
                let target = (total / self.feed_res).round() as i64;
                let n = target - self.feed_steps;
                self.feed_total = total;
                self.feed_steps = target;
                if n != 0 {
                    out.push(MotorCommand::Feed(n));
                }
            }
            Instruction::Bend(theta) => {
                if theta.abs() > self.hard_stop_deg {
                    return Err(MachineError::Limit(format!(
                        "bend {theta} deg exceeds hard stop {} deg",
                        self.hard_stop_deg
                    )));
                }
                if theta == 0.0 {
                    return Ok(out);
                }
                let side = if theta > 0.0 {
                    PegSide::Positive
                } else {
                    PegSide::Negative
                };
                // Odometric carrying over the magnitudes actually swept.
                let total = self.bend_total + theta.abs();
                let target = (total / self.bend_res).round() as i64;
                let n = target - self.bend_steps;
                if side != self.peg {
                    out.push(MotorCommand::Retract(true));
                    out.push(MotorCommand::Retract(false));
                    self.peg = side;
                }
                self.bend_total = total;
                self.bend_steps = target;
                if n != 0 {
                    let signed = n * side.sign();
                    out.push(MotorCommand::Bend(signed));
                    out.push(MotorCommand::Bend(-signed));
                }
            }
            Instruction::Rotate(phi) => {
                let total = self.rotate_total + phi;
                if total.abs() > self.max_rotate_deg {
                    return Err(MachineError::Limit(format!(
                        "net rotation {total} deg exceeds +/-{} deg",
                        self.max_rotate_deg
                    )));
                }
                let target = (total / self.rotate_res).round() as i64;
                let n = target - self.rotate_steps;
                self.rotate_total = total;
                self.rotate_steps = target;
                if n != 0 {
                    out.push(MotorCommand::Rotate(n));
                }
            }
        }
        Ok(out)
    }
}

/// Motor commands for a whole program from a freshly homed state.
pub fn to_steps(
    program: &InstructionProgram,
    profile: &MachineProfile,
) -> Result<Vec<MotorCommand>, MachineError> {
    let mut planner = StepPlanner::new(profile);
    let mut out = Vec::new();
    for (k, ins) in program.iter().enumerate() {
        let cmds = planner
            .plan(ins)
            .map_err(|e| MachineError::AtInstruction(k, Box::new(e)))?;
        out.extend(cmds);
    }
    Ok(out)
}

/// Per-axis step totals of a command list (bend: outward sweeps, i.e. the
/// positive-magnitude half of each sweep pair).
pub fn step_totals(cmds: &[MotorCommand]) -> AxisTotals {
    let mut t = AxisTotals::default();
    let mut bend_pos = 0i64;
    for c in cmds {
        match *c {
            MotorCommand::Feed(n) => t.feed += n,
            MotorCommand::Rotate(n) => t.rotate += n,
            MotorCommand::Bend(n) => {
                let next = bend_pos + n;
                if next.abs() > bend_pos.abs() {
                    t.bend += next.abs() - bend_pos.abs();
                }
                bend_pos = next;
            }
            _ => {}
        }
    }
    t
}
