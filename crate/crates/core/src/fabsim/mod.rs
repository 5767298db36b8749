//! Forward kinematics of the bending process: wire shape, timing and
//! self-intersection.
//!
//! The wire leaves the nozzle along `heading`; bends turn the heading about
//! the bend-plane normal and rotates turn the normal about the heading. The
//! initial frame is heading +X, normal +Z, at the origin. Bends are sharp
//! corners.

mod intersect;
mod svg;
mod timeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use intersect::{self_intersections, SegmentPair};
pub use svg::{render_svg, Projection};
pub use timeline::{timeline, EventKind, Playback, Timeline, TimelineEvent};

use crate::errormodel::{invert_corrections, CompensationError, CompensationParams};
use crate::geometry::{rotate_about, Vec3};
use crate::instructions::{Instruction, InstructionProgram};

/// Orthonormality tolerance for the simulation frame.
pub const FRAME_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation frame degenerated at instruction {0}")]
    Degenerate(usize),
    #[error(transparent)]
    Compensation(#[from] CompensationError),
}

/// Simulated wire: points in mm and, for each segment, the index of the
/// feed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePolyline {
    pub points: Vec<[f64; 3]>,
    pub provenance: Vec<usize>,
}

impl WirePolyline {
    pub fn vectors(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| Vec3::from(*p)).collect()
    }

    pub fn length(&self) -> f64 {
        self.vectors().windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Kinematic state between instructions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub position: Vec3,
    pub heading: Vec3,
    pub plane_normal: Vec3,
    pub points: Vec<Vec3>,
    pub provenance: Vec<usize>,
}

impl Default for SimState {
    fn default() -> Self {
        Self {
            position: Vec3::zeros(),
            heading: Vec3::x(),
            plane_normal: Vec3::z(),
            points: vec![Vec3::zeros()],
            provenance: Vec::new(),
        }
    }
}

impl SimState {
    /// Applies the first `fraction` of instruction `index`. Partial feeds
    /// move the tip without recording a point; the polyline only holds
    /// completed feeds.
    pub fn apply(&mut self, index: usize, ins: &Instruction, fraction: f64) -> Result<(), SimError> {
        match *ins {
            Instruction::Feed(d) => {
                self.position += self.heading * (d * fraction);
                if fraction >= 1.0 && d != 0.0 {
                    self.points.push(self.position);
                    self.provenance.push(index);
                }
            }
            Instruction::Rotate(phi) => {
                self.plane_normal = rotate_about(&self.plane_normal, &self.heading, phi * fraction);
            }
            Instruction::Bend(theta) => {
                self.heading = rotate_about(&self.heading, &self.plane_normal, theta * fraction);
            }
        }
        self.renormalize(index)
    }

    fn renormalize(&mut self, index: usize) -> Result<(), SimError> {
        let h = self.heading.normalize();
        let n = self.plane_normal - h * h.dot(&self.plane_normal);
        let n_norm = n.norm();
        if !(h.iter().all(|c| c.is_finite()) && n_norm > 0.5) {
            return Err(SimError::Degenerate(index));
        }
        self.heading = h;
        self.plane_normal = n / n_norm;
        Ok(())
    }

    pub fn polyline(&self) -> WirePolyline {
        WirePolyline {
            points: self.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Wire shape produced by executing `p` literally.
pub fn simulate(p: &InstructionProgram) -> Result<WirePolyline, SimError> {
    let mut s = SimState::default();
    for (k, ins) in p.iter().enumerate() {
        s.apply(k, ins, 1.0)?;
    }
    Ok(s.polyline())
}

/// Wire shape the program is meant to produce: corrected programs are
/// mapped back to design feeds and angles first.
pub fn simulate_intended(
    p: &InstructionProgram,
    params: &CompensationParams,
) -> Result<WirePolyline, SimError> {
    simulate(&invert_corrections(p, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Instruction::*;

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        (Vec3::from(a) - Vec3::from(b)).norm() < 1e-9
    }

    #[test]
    fn single_feed() {
        let w = simulate(&InstructionProgram::new(vec![Feed(30.0)])).unwrap();
        assert_eq!(w.points, vec![[0.0, 0.0, 0.0], [30.0, 0.0, 0.0]]);
        assert_eq!(w.provenance, vec![0]);
    }

    #[test]
    fn u_shape_in_xy_plane() {
        let p = InstructionProgram::new(vec![Feed(35.0), Bend(90.0), Feed(35.0), Bend(90.0), Feed(35.0)]);
        let w = simulate(&p).unwrap();
        let expect = [[0.0, 0.0, 0.0], [35.0, 0.0, 0.0], [35.0, 35.0, 0.0], [0.0, 35.0, 0.0]];
        assert_eq!(w.points.len(), 4);
        for (a, b) in w.points.iter().zip(expect) {
            assert!(close(*a, b), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rotate_changes_bend_plane() {
        let p = InstructionProgram::new(vec![Feed(30.0), Rotate(90.0), Bend(90.0), Feed(30.0)]);
        let w = simulate(&p).unwrap();
        // normal +Z turned about +X by 90 is -Y; +X turned about -Y by 90 is +Z
        assert!(close(w.points[2], [30.0, 0.0, 30.0]), "{:?}", w.points[2]);
    }

    #[test]
    fn frame_stays_orthonormal() {
        let mut s = SimState::default();
        for k in 0..500 {
            let ins = [Rotate(37.1), Bend(123.4), Feed(1.0)][k % 3];
            s.apply(k, &ins, 1.0).unwrap();
            assert!((s.heading.norm() - 1.0).abs() < FRAME_EPS);
            assert!((s.plane_normal.norm() - 1.0).abs() < FRAME_EPS);
            assert!(s.heading.dot(&s.plane_normal).abs() < FRAME_EPS);
        }
    }
}
