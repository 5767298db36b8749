use serde::{Deserialize, Serialize};

use super::{SimError, SimState};
use crate::instructions::{Instruction, InstructionProgram};
use crate::machine::MachineProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Homing,
    PegRetract,
    Feed,
    Bend,
    Rotate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    /// Instruction the event belongs to; absent for homing.
    pub index: Option<usize>,
    pub kind: EventKind,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub events: Vec<TimelineEvent>,
    pub total_s: f64,
}

/// Time-stamped execution of `p` at the profile speeds.
///
/// Feeds take `d / v_feed`, rotates `|phi| / v_rotate`, bends `2 |theta| /
/// v_bend` because the peg sweeps out and back. A peg retract precedes every
/// bend whose direction differs from the peg's side (the peg starts on the
/// positive side after homing), and homing opens the job.
pub fn timeline(p: &InstructionProgram, profile: &MachineProfile) -> Timeline {
    let speeds = &profile.speeds;
    let mut events = Vec::with_capacity(p.len() + 1);
    let mut t = 0.0;
    let mut push = |index, kind, duration: f64, t: &mut f64| {
        let start = *t;
        *t += duration;
        events.push(TimelineEvent {
            index,
            kind,
            start_s: start,
            end_s: *t,
        });
    };
    push(None, EventKind::Homing, profile.overheads.homing_s, &mut t);
    let mut positive_side = true;
    for (k, ins) in p.iter().enumerate() {
        match *ins {
            Instruction::Feed(d) => push(Some(k), EventKind::Feed, d.abs() / speeds.feed_mm_s, &mut t),
            Instruction::Rotate(phi) => {
                push(Some(k), EventKind::Rotate, phi.abs() / speeds.rotate_deg_s, &mut t)
            }
            Instruction::Bend(theta) => {
                if theta != 0.0 && (theta > 0.0) != positive_side {
                    positive_side = theta > 0.0;
                    push(Some(k), EventKind::PegRetract, profile.overheads.peg_retract_s, &mut t);
                }
                push(Some(k), EventKind::Bend, 2.0 * theta.abs() / speeds.bend_deg_s, &mut t);
            }
        }
    }
    Timeline { events, total_s: t }
}

/// Time-driven replay of a program for animation. One consumer per
/// session.
#[derive(Debug, Clone)]
pub struct Playback {
    program: InstructionProgram,
    timeline: Timeline,
    elapsed: f64,
}

impl Playback {
    pub fn new(program: InstructionProgram, profile: &MachineProfile) -> Self {
        let timeline = timeline(&program, profile);
        Self {
            program,
            timeline,
            elapsed: 0.0,
        }
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Fraction of the job done, in `[0, 1]`.
    pub fn progress(&self) -> f64 {
        if self.timeline.total_s > 0.0 {
            (self.elapsed / self.timeline.total_s).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    pub fn is_finished(&self) -> bool {
        self.elapsed >= self.timeline.total_s
    }

    pub fn reset(&mut self) {
        self.elapsed = 0.0;
    }

    /// Moves the clock forward by `dt` seconds, clamped to the job length.
    pub fn advance(&mut self, dt: f64) {
        self.elapsed = (self.elapsed + dt.max(0.0)).min(self.timeline.total_s);
    }

    pub fn seek(&mut self, t: f64) {
        self.elapsed = t.clamp(0.0, self.timeline.total_s);
    }

    /// Wire state at the current time. Within a bend the wire turns during
    /// the outward half of the sweep and holds during the return.
    pub fn state(&self) -> Result<SimState, SimError> {
        let mut s = SimState::default();
        for ev in &self.timeline.events {
            let Some(k) = ev.index else { continue };
            if ev.kind == EventKind::PegRetract || ev.start_s > self.elapsed {
                continue;
            }
            let span = ev.end_s - ev.start_s;
            let mut fraction = if span > 0.0 {
                ((self.elapsed - ev.start_s) / span).min(1.0)
            } else {
                1.0
            };
            if ev.kind == EventKind::Bend {
                fraction = (2.0 * fraction).min(1.0);
            }
            s.apply(k, &self.program.instructions[k], fraction)?;
            if fraction < 1.0 {
                break;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabsim::simulate;
    use Instruction::*;

    fn no_overheads() -> MachineProfile {
        let mut p = MachineProfile::default();
        p.overheads.homing_s = 0.0;
        p.overheads.peg_retract_s = 0.0;
        p
    }

    #[test]
    fn feed_at_speed_takes_one_second() {
        let t = timeline(&InstructionProgram::new(vec![Feed(110.2)]), &no_overheads());
        assert_eq!(t.total_s, 1.0);
    }

    #[test]
    fn bend_includes_return_sweep() {
        let t = timeline(&InstructionProgram::new(vec![Bend(90.0)]), &no_overheads());
        assert!((t.total_s - 2.0 * 90.0 / 15.1).abs() < 1e-12);
        assert!((t.total_s - 11.92).abs() < 5e-3);
    }

    #[test]
    fn overheads_and_contiguity() {
        let profile = MachineProfile::default();
        let p = InstructionProgram::new(vec![Feed(30.0), Bend(45.0), Feed(30.0), Bend(-45.0), Feed(30.0)]);
        let t = timeline(&p, &profile);
        let retracts = t.events.iter().filter(|e| e.kind == EventKind::PegRetract).count();
        assert_eq!(retracts, 1);
        for w in t.events.windows(2) {
            assert_eq!(w[0].end_s, w[1].start_s);
        }
        let closed = 10.0 + 90.0 / 110.2 + 4.0 * 45.0 / 15.1 + 1.5;
        assert!((t.total_s - closed).abs() < 1e-12);
    }

    #[test]
    fn playback_ends_at_simulated_shape() {
        let p = InstructionProgram::new(vec![Feed(35.0), Bend(90.0), Feed(35.0), Rotate(30.0), Bend(90.0), Feed(35.0)]);
        let mut pb = Playback::new(p.clone(), &MachineProfile::default());
        let mut steps = 0;
        while !pb.is_finished() {
            pb.advance(0.37);
            pb.state().unwrap();
            steps += 1;
        }
        assert!(steps > 10);
        assert_eq!(pb.progress(), 1.0);
        assert_eq!(pb.state().unwrap().polyline(), simulate(&p).unwrap());

        pb.seek(10.0 + 17.5 / 110.2);
        let s = pb.state().unwrap();
        assert!((s.position.x - 17.5).abs() < 1e-9);
        assert_eq!(s.points.len(), 1);
    }
}
