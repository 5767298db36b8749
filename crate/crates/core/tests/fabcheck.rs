mod common;

use common::{random_fabricable, random_walk, V};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use wirebend_core::fabcheck::{check_all, check_program, ProgramCheck, Status, VertexCheck};
use wirebend_core::instructions::{compile_path, Instruction, InstructionProgram};
use wirebend_core::machine::MachineProfile;
use wirebend_core::wiregraph::{EdgeId, WireframeGraph};

fn corner(bend_deg: f64, leg: f64) -> WireframeGraph {
    let b = bend_deg.to_radians();
    let pts = vec![V::zeros(), V::new(leg, 0.0, 0.0), V::new(leg + leg * b.cos(), leg * b.sin(), 0.0)];
    WireframeGraph::new(pts, &[(0, 1), (1, 2)]).unwrap()
}

fn bend_status(g: &WireframeGraph) -> Status {
    check_all(g, &MachineProfile::default())
        .vertex_findings
        .iter()
        .find(|f| f.vertex == 1 && f.check == VertexCheck::BendAngle)
        .unwrap()
        .status
}

#[test]
fn bend_limit_boundary() {
    assert_eq!(bend_status(&corner(155.0, 40.0)), Status::Pass);
    assert_eq!(bend_status(&corner(155.0001, 40.0)), Status::Fail);
}

#[test]
fn edge_length_boundary() {
    let profile = MachineProfile::default();
    for (len, ok) in [(20.4, true), (20.3999, false)] {
        let g = WireframeGraph::new(vec![V::zeros(), V::new(len, 0.0, 0.0)], &[(0, 1)]).unwrap();
        let d = check_all(&g, &profile);
        assert_eq!(d.edge_findings[0].status == Status::Pass, ok, "{len}");
        assert_eq!(d.overall_fabricable, ok);
    }
}

#[test]
fn feed_and_rotation_boundaries() {
    let profile = MachineProfile::default();
    let status_of = |p: Vec<Instruction>, check: ProgramCheck| {
        let d = check_program(&InstructionProgram::new(p), &profile);
        d.findings.iter().filter(|f| f.check == check).all(|f| f.status == Status::Pass)
    };
    assert!(status_of(vec![Instruction::Feed(25.0)], ProgramCheck::MinFeed));
    assert!(!status_of(vec![Instruction::Feed(24.9)], ProgramCheck::MinFeed));
    let rot = |last| vec![Instruction::Feed(30.0), Instruction::Rotate(180.0), Instruction::Rotate(last)];
    assert!(status_of(rot(180.0), ProgramCheck::Rotation));
    assert!(!status_of(rot(180.1), ProgramCheck::Rotation));
}

#[test]
fn fabricable_graphs_compile_to_passing_bends() {
    let profile = MachineProfile::default();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..100 {
        let (g, path) = random_fabricable(&mut rng, 12);
        let d = check_program(&compile_path(&g, &path).unwrap(), &profile);
        assert!(d.findings.iter().filter(|f| f.check == ProgramCheck::BendAngle).all(|f| f.status == Status::Pass));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn removing_a_short_edge_adds_no_short_edges(seed in any::<u64>(), n in 3usize..10) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut pts = random_walk(&mut rng, n);
        // Shrink a segment below the limit.
        let k = (seed as usize) % (n - 1) + 1;
        let shift = (pts[k] - pts[k - 1]) * 0.9;
        for p in &mut pts[k..] {
            *p -= shift;
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = WireframeGraph::new(pts, &edges).unwrap();
        let profile = MachineProfile::default();
        let before = check_all(&g, &profile);
        let failing: Vec<_> = before.failed_edges().map(|f| f.edge).collect();
        prop_assume!(!failing.is_empty());
        let drop = g.find_edge(failing[0][0], failing[0][1]).unwrap().id;
        let after = check_all(&g.without_edges(&[drop]), &profile);
        for f in after.failed_edges() {
            prop_assert!(failing.contains(&f.edge));
        }
    }

    #[test]
    fn removing_a_sharp_vertex_adds_no_sharp_vertices(seed in any::<u64>(), n in 4usize..10) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut pts = random_walk(&mut rng, n);
        // Fold the wire back on itself at one vertex.
        let k = (seed as usize) % (n - 2) + 1;
        let back = (pts[k] - pts[k - 1]).normalize() * 30.0;
        let shift = pts[k + 1] - (pts[k] - back);
        for p in &mut pts[k + 1..] {
            *p -= shift;
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = WireframeGraph::new(pts, &edges).unwrap();
        let profile = MachineProfile::default();
        let sharp = |d: &wirebend_core::fabcheck::Diagnostics| -> Vec<usize> {
            d.failures().filter(|f| f.check == VertexCheck::BendAngle).map(|f| f.vertex).collect()
        };
        let before = sharp(&check_all(&g, &profile));
        prop_assert!(before.contains(&k));
        let incident: Vec<EdgeId> = g.edges().iter().filter(|e| e.a == k || e.b == k).map(|e| e.id).collect();
        let after = sharp(&check_all(&g.without_edges(&incident), &profile));
        for v in after {
            prop_assert!(before.contains(&v));
        }
    }
}
