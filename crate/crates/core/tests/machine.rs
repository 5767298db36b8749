use std::thread;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wirebend_core::fabsim::simulate;
use wirebend_core::instructions::{Instruction, InstructionProgram};
use wirebend_core::machine::transport::tcp_connect;
use wirebend_core::machine::{
    feasibility, required_bend_torque, step_totals, to_steps, Controller, EmulatorCore, EmulatorServer, ErrorCode,
    MachineProfile, MaterialSpec, MotorCommand, Pacing, Reply, RunOutcome, StepPlanner,
};

fn homed_core() -> EmulatorCore {
    let mut core = EmulatorCore::new(&MachineProfile::default());
    assert_eq!(core.execute_line("HOME"), vec![Reply::Hit, Reply::Ok]);
    core
}

fn err(code: ErrorCode) -> Vec<Reply> {
    vec![Reply::Err(code)]
}

/// Alternating feeds and bends with occasional rotates; every bend is well
/// above the step size so no corner vanishes.
fn random_program(rng: &mut StdRng) -> InstructionProgram {
    let mut ins = vec![Instruction::Feed(rng.gen_range(25.0..90.0))];
    for _ in 0..rng.gen_range(0..8) {
        if rng.gen_bool(0.5) {
            ins.push(Instruction::Rotate(rng.gen_range(-80.0..80.0)));
        }
        let b: f64 = rng.gen_range(5.0..150.0);
        ins.push(Instruction::Bend(if rng.gen_bool(0.3) { -b } else { b }));
        ins.push(Instruction::Feed(rng.gen_range(25.0..90.0)));
    }
    InstructionProgram::new(ins)
}

#[test]
fn firmware_error_codes() {
    let mut core = EmulatorCore::new(&MachineProfile::default());
    assert_eq!(core.execute_line("B 10"), err(ErrorCode::NotHomed));
    assert_eq!(core.execute_line("JUMP 3"), err(ErrorCode::UnknownCommand));
    assert_eq!(core.execute_line("F ten"), err(ErrorCode::BadArgument));
    assert_eq!(core.execute_line("RETRACT 2"), err(ErrorCode::BadArgument));

    let mut core = homed_core();
    let limit = (165.0 / MachineProfile::default().bend_resolution()).round() as i64 + 1;
    assert_eq!(core.execute_line(&format!("B {}", limit + 1)), err(ErrorCode::BendLimit));
    assert_eq!(core.execute_line("B -10"), err(ErrorCode::WrongPegSide));
    assert_eq!(core.execute_line("B 10"), vec![Reply::Ok]);
    assert_eq!(core.execute_line("F 10"), err(ErrorCode::PegNotClear));
    assert_eq!(core.execute_line("R 10"), err(ErrorCode::PegNotClear));
    assert_eq!(core.execute_line("B -10"), vec![Reply::Ok]);

    let rot_limit = (360.0 / MachineProfile::default().rotate_resolution()).round() as i64;
    assert_eq!(core.execute_line(&format!("R {rot_limit}")), vec![Reply::Ok]);
    assert_eq!(core.execute_line("R 1"), err(ErrorCode::RotateLimit));

    assert_eq!(core.execute_line("RETRACT 1"), vec![Reply::Ok]);
    assert_eq!(core.execute_line("RETRACT 0"), vec![Reply::Ok]);
    assert_eq!(core.execute_line("B -10"), vec![Reply::Ok]);
    assert_eq!(core.execute_line("B 10"), vec![Reply::Ok]);

    assert_eq!(core.execute_line("STOP"), vec![Reply::Ok]);
    assert_eq!(core.execute_line("F 10"), err(ErrorCode::Stopped));
    assert_eq!(core.execute_line("HOME"), vec![Reply::Hit, Reply::Ok]);
    assert_eq!(core.execute_line("F 10"), vec![Reply::Ok]);
}

#[test]
fn homing_is_idempotent() {
    let mut core = homed_core();
    core.execute_line("F 500");
    core.execute_line("B 300");
    core.execute_line("HOME");
    let once = core.state();
    core.execute_line("HOME");
    assert_eq!(core.state(), once);
}

#[test]
fn emulator_matches_planner_and_simulator() {
    let profile = MachineProfile::default();
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..50 {
        let program = random_program(&mut rng);
        let cmds = to_steps(&program, &profile).unwrap();
        let totals = step_totals(&cmds);
        let mut core = homed_core();
        for c in &cmds {
            assert_eq!(core.execute(c), vec![Reply::Ok], "{c:?}");
        }
        let axes = core.axes();
        assert_eq!((axes.feed, axes.rotate, axes.bend), (totals.feed, totals.rotate, 0));
        assert_eq!(core.bend_swept(), totals.bend);

        let sim = simulate(&program).unwrap();
        let traced = core.wire_points();
        assert_eq!(traced.len(), sim.points.len());
        // Bound on the drift from step rounding: every feed off by at most a
        // step, and every angle error swinging the whole wire.
        let n = program.len() as f64;
        let angle = n * (profile.bend_resolution() + profile.rotate_resolution()).to_radians();
        let tol = n * profile.feed_resolution() + program.total_feed() * angle;
        for (a, b) in traced.iter().zip(&sim.points) {
            let b = nalgebra::Vector3::from(*b);
            assert!((a - b).norm() <= tol, "{a} vs {b}, tol {tol}");
        }
    }
}

#[test]
fn controller_over_tcp() {
    let profile = MachineProfile::default();
    let server = EmulatorServer::new(&profile, Pacing::Instant);
    let addr = server.serve_tcp("127.0.0.1:0").unwrap();
    let mut ctl = Controller::new(tcp_connect(addr).unwrap(), &profile);
    let program = random_program(&mut StdRng::seed_from_u64(5));
    let report = ctl.run_program(&program).unwrap();
    assert_eq!(report.outcome, RunOutcome::Completed);
    assert_eq!(report.instructions_done, program.len());
    assert_eq!(ctl.limit_switch_hits(), 1);
    let totals = step_totals(&to_steps(&program, &profile).unwrap());
    assert_eq!(report.steps, totals);
    let axes = server.core().axes();
    assert_eq!((axes.feed, axes.rotate), (totals.feed, totals.rotate));
}

#[test]
fn jog_session_replays() {
    let profile = MachineProfile::default();
    let server = EmulatorServer::new(&profile, Pacing::Instant);
    let mut ctl = Controller::new(server.connect(), &profile);
    assert!(matches!(
        ctl.jog(Instruction::Bend(30.0)),
        Err(wirebend_core::machine::MachineError::Rejected { code: ErrorCode::NotHomed, .. })
    ));
    ctl.home().unwrap();
    for ins in [Instruction::Feed(40.0), Instruction::Bend(-90.0), Instruction::Feed(40.0)] {
        ctl.jog(ins).unwrap();
    }
    let log = ctl.session_log();
    assert_eq!(log.instructions, vec![Instruction::Feed(40.0), Instruction::Bend(-90.0), Instruction::Feed(40.0)]);
    assert_eq!(ctl.totals(), step_totals(&to_steps(&log, &profile).unwrap()));
}

#[test]
fn stop_interrupts_within_100_ms() {
    let mut profile = MachineProfile::default();
    profile.overheads.homing_s = 0.05;
    let server = EmulatorServer::new(&profile, Pacing::Scaled(1.0));
    let mut ctl = Controller::new(server.connect(), &profile);
    let stop = ctl.stop_handle();
    // About 4.5 s of feeding.
    let program = InstructionProgram::new(vec![Instruction::Feed(500.0)]);
    let runner = thread::spawn(move || {
        let report = ctl.run_program(&program);
        (report, Instant::now(), ctl)
    });
    thread::sleep(Duration::from_millis(400));
    let sent = Instant::now();
    stop.stop().unwrap();
    let (report, finished, mut ctl) = runner.join().unwrap();
    let report = report.unwrap();
    assert_eq!(report.outcome, RunOutcome::Stopped);
    let latency = finished.duration_since(sent);
    assert!(latency < Duration::from_millis(100), "{latency:?}");

    let core = server.core();
    assert!(core.is_halted());
    let fed = core.axes().feed as f64 * profile.feed_resolution();
    assert!(fed > 10.0 && fed < 500.0, "{fed}");

    // Homing clears the latch and the session carries on.
    ctl.home().unwrap();
    assert!(!server.core().is_halted());
    ctl.jog(Instruction::Feed(1.0)).unwrap();
}

#[test]
fn stop_before_the_run_still_stops_it() {
    let profile = MachineProfile::default();
    let server = EmulatorServer::new(&profile, Pacing::Instant);
    let mut ctl = Controller::new(server.connect(), &profile);
    ctl.stop_handle().stop().unwrap();
    let report = ctl.run_program(&InstructionProgram::new(vec![Instruction::Feed(50.0)])).unwrap();
    assert_eq!(report.outcome, RunOutcome::Stopped);
    assert_eq!(report.instructions_done, 0);
    assert_eq!(server.core().axes().feed, 0);

    // The next run homes normally.
    let report = ctl.run_program(&InstructionProgram::new(vec![Instruction::Feed(50.0)])).unwrap();
    assert_eq!(report.outcome, RunOutcome::Completed);
}

#[test]
fn torque_requirement() {
    let profile = MachineProfile::default();
    let f = feasibility(&MaterialSpec::aluminium_6061_t6(), &profile);
    assert!((f.required_nm - 1.63).abs() / 1.63 < 0.005);
    assert!((f.margin - 23.2).abs() / 23.2 < 0.01);
    assert!(f.fabricable);
    let thick = feasibility(&MaterialSpec::aluminium_6061_t6().with_diameter(6.8), &profile);
    assert!((thick.margin - 2.0).abs() / 2.0 < 0.05);
}

#[test]
fn default_resolutions() {
    let p = MachineProfile::default();
    assert!((p.feed_resolution() - 0.0184).abs() / 0.0184 < 0.01);
    assert!((p.bend_resolution() - 0.017).abs() / 0.017 < 0.02);
    assert!((p.rotate_resolution() - 0.022).abs() / 0.022 < 0.02);
}

proptest! {
    #[test]
    fn torque_is_strictly_monotone(d in 0.5f64..10.0, uts in 50.0f64..1000.0, k in 1.0001f64..2.0) {
        let m = MaterialSpec { diameter_mm: d, uts_mpa: uts, ..MaterialSpec::default() };
        let base = required_bend_torque(&m);
        let thicker = MaterialSpec { diameter_mm: d * k, ..m.clone() };
        let stronger = MaterialSpec { uts_mpa: uts * k, ..m };
        prop_assert!(required_bend_torque(&thicker) > base);
        prop_assert!(required_bend_torque(&stronger) > base);
    }

    #[test]
    fn steps_reproduce_magnitudes(ops in prop::collection::vec((0u8..3, -150.0f64..150.0), 1..40)) {
        let profile = MachineProfile::default();
        let (fr, br, rr) = (profile.feed_resolution(), profile.bend_resolution(), profile.rotate_resolution());
        let mut planner = StepPlanner::new(&profile);
        let (mut feed, mut bend, mut rot) = (0.0, 0.0, 0.0);
        for (k, x) in ops {
            let ins = match k {
                0 => Instruction::Feed(x.abs()),
                1 => Instruction::Bend(x),
                _ => Instruction::Rotate(x / 4.0),
            };
            let Ok(cmds) = planner.plan(&ins) else { continue };
            let t = step_totals(&cmds);
            match ins {
                Instruction::Feed(d) => {
                    feed += d;
                    prop_assert!((t.feed as f64 * fr - d).abs() <= fr);
                }
                Instruction::Bend(b) => {
                    bend += b.abs();
                    prop_assert!((t.bend as f64 * br - b.abs()).abs() <= br);
                    let outward = cmds.iter().find_map(|c| match c { MotorCommand::Bend(n) => Some(*n), _ => None });
                    if let Some(n) = outward {
                        prop_assert_eq!(n.signum() as f64, b.signum());
                    }
                }
                Instruction::Rotate(r) => {
                    rot += r;
                    prop_assert!((t.rotate as f64 * rr - r).abs() <= rr);
                }
            }
        }
        let total = planner.totals();
        prop_assert!((total.feed as f64 * fr - feed).abs() <= fr);
        prop_assert!((total.bend as f64 * br - bend).abs() <= br);
        prop_assert!((total.rotate as f64 * rr - rot).abs() <= rr);
    }
}
