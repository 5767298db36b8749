use crate::geometry::{angle_between_deg, signed_angle_deg, Vec3};
use crate::wiregraph::WireframeGraph;

use super::{Instruction, InstructionError, InstructionProgram};

/// Bends below this angle are treated as straight continuation.
pub const BEND_EPS_DEG: f64 = 1e-6;
/// Cross products shorter than this (on unit vectors) have no usable normal.
pub const NORMAL_EPS: f64 = 1e-9;
/// Plane changes smaller than this are not emitted.
pub const ROTATE_EPS_DEG: f64 = 1e-6;

/// Compiles a vertex walk over `g` into feed / rotate / bend instructions.
///
/// Each interior vertex becomes an unsigned bend in `[0, 180]`; changes of
/// bend plane are carried entirely by the rotate preceding the bend, measured
/// as the signed angle (right-hand rule about the incoming wire direction)
/// from the previous bend plane normal to the new one. Collinear vertices
/// produce no bend and their feeds are merged.
///
/// The previous normal is the last well-defined bend plane. At a full
/// reversal (180 degree bend) the plane is undefined; the rotate is zero
/// and the previous plane is kept for the next bend.
pub fn compile_path(
    g: &WireframeGraph,
    path: &[usize],
) -> Result<InstructionProgram, InstructionError> {
    if path.len() < 2 {
        return Err(InstructionError::PathTooShort(path.len()));
    }
    let n = g.vertices().len();
    if let Some(&v) = path.iter().find(|&&v| v >= n) {
        return Err(InstructionError::VertexOutOfRange(v));
    }
    for w in path.windows(2) {
        if g.find_edge(w[0], w[1]).is_none() {
            return Err(InstructionError::NotAnEdge(w[0], w[1]));
        }
    }
    let points: Vec<Vec3> = path.iter().map(|&v| g.vertex(v)).collect();
    let mut program = compile_points(&points).map_err(|e| match e {
        InstructionError::ZeroLengthEdge(a, b) => InstructionError::ZeroLengthEdge(path[a], path[b]),
        other => other,
    })?;
    program.source_hash = Some(g.content_hash());
    Ok(program)
}

/// Compiles a raw point sequence. Errors refer to positions in `points`.
pub(crate) fn compile_points(points: &[Vec3]) -> Result<InstructionProgram, InstructionError> {
    if points.len() < 2 {
        return Err(InstructionError::PathTooShort(points.len()));
    }
    let mut dirs = Vec::with_capacity(points.len() - 1);
    let mut lengths = Vec::with_capacity(points.len() - 1);
    for (k, w) in points.windows(2).enumerate() {
        let d = w[1] - w[0];
        let len = d.norm();
        if len == 0.0 {
            return Err(InstructionError::ZeroLengthEdge(k, k + 1));
        }
        dirs.push(d / len);
        lengths.push(len);
    }

    let mut out = Vec::new();
    let mut feed = lengths[0];
    let mut plane: Option<Vec3> = None;
    let mut cumulative_rotate = 0.0;

    for k in 1..dirs.len() {
        let (din, dout) = (dirs[k - 1], dirs[k]);
        let bend = angle_between_deg(&din, &dout);
        if bend < BEND_EPS_DEG {
            feed += lengths[k];
            continue;
        }
        out.push(Instruction::Feed(feed));
        feed = lengths[k];

        let cross = din.cross(&dout);
        let normal = (cross.norm() >= NORMAL_EPS).then(|| cross.normalize());
        match (plane, normal) {
            (Some(prev), Some(next)) => {
                let mut r = signed_angle_deg(&prev, &next, &din);
                // A half-turn has two equal representations; keep the cable
                // wrap near zero.
                if (r.abs() - 180.0).abs() < ROTATE_EPS_DEG {
                    r = if cumulative_rotate > 0.0 { -180.0 } else { 180.0 };
                }
                if r.abs() >= ROTATE_EPS_DEG {
                    out.push(Instruction::Rotate(r));
                    cumulative_rotate += r;
                }
                plane = Some(next);
            }
            (None, Some(next)) => plane = Some(next),
            (_, None) => {}
        }
        out.push(Instruction::Bend(bend));
    }
    out.push(Instruction::Feed(feed));
    Ok(InstructionProgram::new(out))
}
