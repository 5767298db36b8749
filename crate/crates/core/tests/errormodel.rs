use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wirebend_core::errormodel::{
    adjust_feeds, apply_corrections, combined_commanded, invert_corrections, setback_commanded, springback_target,
    CompensationError, CompensationParams,
};
use wirebend_core::instructions::{Instruction, InstructionProgram};

fn params(r: f64, s: f64, rr: f64, rn: f64, spring: f64) -> CompensationParams {
    CompensationParams {
        peg_arc_radius: r,
        setback_distance: s,
        bend_rod_radius: rr,
        nozzle_rod_radius: rn,
        springback_deg: spring,
        ..CompensationParams::default()
    }
}

/// Setback evaluated directly from the geometry, in radians throughout.
fn setback_by_hand(theta_deg: f64, p: &CompensationParams) -> f64 {
    let t = theta_deg.to_radians();
    let arg = p.peg_arc_radius * t.sin() / (p.setback_distance - p.bend_rod_radius / t.sin() - p.nozzle_rod_radius * t.tan());
    (t + arg.asin()).to_degrees()
}

#[test]
fn setback_spot_value() {
    let p = params(5.0, 50.0, 1.0, 1.0, 0.0);
    let got = setback_commanded(30.0, &p).unwrap();
    assert!((got - 33.022).abs() < 5e-4, "{got}");
    assert!((got - setback_by_hand(30.0, &p)).abs() < 1e-9);
}

#[test]
fn springback_spot_value() {
    let p = CompensationParams::default();
    assert_eq!(springback_target(90.0, &p), 100.23);
    assert_eq!(springback_target(-90.0, &p), -100.23);
    assert_eq!(springback_target(0.0, &p), 0.0);
}

#[test]
fn random_inputs_agree_with_hand_evaluation_and_compose_exactly() {
    let mut rng = StdRng::seed_from_u64(3);
    let mut evaluated = 0;
    while evaluated < 1000 {
        let p = params(
            rng.gen_range(0.5..10.0),
            rng.gen_range(30.0..80.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.0..15.0),
        );
        let theta: f64 = rng.gen_range(-150.0..150.0);
        match combined_commanded(theta, &p) {
            Ok(c) => {
                assert_eq!(c.to_bits(), setback_commanded(springback_target(theta, &p), &p).unwrap().to_bits());
                assert_eq!((-c).to_bits(), combined_commanded(-theta, &p).unwrap().to_bits());
                evaluated += 1;
            }
            Err(CompensationError::Domain { argument, .. }) => assert!(argument.abs() > 1.0),
            Err(e) => panic!("{e}"),
        }
        if let Ok(sb) = setback_commanded(theta, &p) {
            assert!((sb - setback_by_hand(theta.abs(), &p).copysign(theta)).abs() < 1e-9);
        }
    }
}

#[test]
fn default_parameters_report_domain_errors() {
    let p = CompensationParams::default();
    let err = combined_commanded(90.0, &p).unwrap_err();
    let CompensationError::Domain { argument, .. } = err else { panic!("{err}") };
    assert!(argument.abs() > 1.0);
}

#[test]
fn feed_adjustment_matches_hand_evaluation() {
    let p = CompensationParams::default();
    let program = InstructionProgram::new(vec![Instruction::Feed(60.0), Instruction::Bend(90.0), Instruction::Feed(50.0)]);
    let out = adjust_feeds(&program, &p, 0.0).unwrap();
    let d = p.wire_diameter;
    let lost = (45f64).to_radians().tan() * (p.inner_bend_radius + d);
    let arc = std::f64::consts::FRAC_PI_2 * (p.inner_bend_radius + p.k_factor * d);
    let offset = 2.0 * (d / 2.0 - p.k_factor * d);
    let Instruction::Feed(a) = out.instructions[0] else { panic!() };
    let Instruction::Feed(b) = out.instructions[2] else { panic!() };
    assert!((a - (60.0 - lost + arc - offset)).abs() < 1e-12);
    assert!((b - (50.0 - lost - offset)).abs() < 1e-12);
}

#[test]
fn short_feeds_are_refused() {
    let p = CompensationParams::default();
    let program = InstructionProgram::new(vec![Instruction::Feed(5.0), Instruction::Bend(90.0), Instruction::Feed(5.0)]);
    assert!(matches!(adjust_feeds(&program, &p, 25.0), Err(CompensationError::ShortFeed { .. })));
}

proptest! {
    #[test]
    fn angle_maps_are_odd(theta in 0.0f64..=180.0, r in 0.5f64..10.0, s in 30.0f64..80.0, spring in 0.0f64..15.0) {
        let p = params(r, s, 1.0, 1.0, spring);
        prop_assert_eq!(springback_target(-theta, &p), -springback_target(theta, &p));
        match (setback_commanded(theta, &p), setback_commanded(-theta, &p)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, -b),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric domain {other:?}"),
        }
        match (combined_commanded(theta, &p), combined_commanded(-theta, &p)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, -b),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric domain {other:?}"),
        }
    }

    #[test]
    fn vanishing_springback_and_arc_is_identity(theta in -180.0f64..=180.0, s in 30.0f64..80.0) {
        let p = params(1e-12, s, 1.0, 1.0, 0.0);
        if let Ok(c) = combined_commanded(theta, &p) {
            prop_assert!((c - theta).abs() < 1e-9);
        }
    }

    #[test]
    fn bend_free_programs_keep_their_feeds(feeds in prop::collection::vec(25.0f64..200.0, 1..6), rot in -90.0f64..90.0) {
        let mut ins = Vec::new();
        for f in &feeds {
            ins.push(Instruction::Feed(*f));
            ins.push(Instruction::Rotate(rot));
        }
        let program = InstructionProgram::new(ins);
        prop_assert_eq!(adjust_feeds(&program, &CompensationParams::default(), 25.0).unwrap().instructions, program.instructions);
    }

    #[test]
    fn corrections_invert(bends in prop::collection::vec(10.0f64..80.0, 1..5)) {
        let p = params(2.0, 60.0, 1.0, 1.0, 5.0);
        let mut ins = vec![Instruction::Feed(80.0)];
        for b in &bends {
            ins.push(Instruction::Bend(*b));
            ins.push(Instruction::Feed(80.0));
        }
        let program = InstructionProgram::new(ins);
        let corrected = apply_corrections(&program, &p, 25.0).unwrap();
        prop_assert!(corrected.error_corrected);
        let back = invert_corrections(&corrected, &p).unwrap();
        for (a, b) in program.iter().zip(back.iter()) {
            prop_assert!((a.magnitude() - b.magnitude()).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }
}
