//! Material and kinematic error compensation.
//!
//! Two corrections are applied to a compiled program before it is sent to
//! the machine:
//!
//! * feed lengths are shortened by the bend deduction of the bends bounding
//!   each segment (lost tangent length, minus the neutral-axis arc, minus the
//!   offset between wire centre and neutral axis);
//! * bend angles are mapped from the desired wire angle to the commanded peg
//!   angle: springback adds a constant `S` in the bending direction, and the
//!   setback model converts a wire angle to the angle the peg must sweep
//!   around its own centre of rotation.
//!
//! All angles are degrees at the API and radians internally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instructions::{Instruction, InstructionProgram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompensationError {
    #[error("setback model undefined at {theta_deg} deg: asin argument {argument} outside [-1, 1]")]
    Domain { theta_deg: f64, argument: f64 },
    #[error("angle {0} deg outside [-180, 180]")]
    AngleRange(f64),
    #[error("invalid compensation parameter: {0}")]
    InvalidParams(String),
    #[error("feed {index} adjusted from {original} mm to {adjusted} mm, below the minimum {minimum} mm")]
    ShortFeed {
        index: usize,
        original: f64,
        adjusted: f64,
        minimum: f64,
    },
    #[error("program is already error-corrected")]
    AlreadyCorrected,
    #[error("no design angle maps to commanded angle {0} deg")]
    NoInverse(f64),
}

/// Geometry and material constants of the compensation model, in mm and
/// degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompensationParams {
    /// Radius of the arc traced by the bending peg centre (`R`).
    pub peg_arc_radius: f64,
    /// Bending rod radius (`r_r`).
    pub bend_rod_radius: f64,
    /// Nozzle rod radius (`r_n`).
    pub nozzle_rod_radius: f64,
    /// Distance from nozzle exit to the bending centre of rotation (`s`).
    pub setback_distance: f64,
    /// Constant springback (`S`), degrees.
    pub springback_deg: f64,
    /// Neutral-axis K-factor.
    pub k_factor: f64,
    pub wire_diameter: f64,
    /// Inner bend radius at the nozzle rod.
    pub inner_bend_radius: f64,
}

impl Default for CompensationParams {
    fn default() -> Self {
        Self {
            peg_arc_radius: 20.4,
            bend_rod_radius: 3.175,
            nozzle_rod_radius: 1.5,
            setback_distance: 12.0,
            springback_deg: 10.23,
            k_factor: 0.3,
            wire_diameter: 3.0,
            inner_bend_radius: 1.5,
        }
    }
}

impl CompensationParams {
    pub fn wire_radius(&self) -> f64 {
        self.wire_diameter / 2.0
    }

    /// Neutral-axis offset from the inner wire surface, `c = K * d`.
    pub fn neutral_offset(&self) -> f64 {
        self.k_factor * self.wire_diameter
    }

    pub fn validate(&self) -> Result<(), CompensationError> {
        let lengths = [
            ("peg_arc_radius", self.peg_arc_radius),
            ("bend_rod_radius", self.bend_rod_radius),
            ("nozzle_rod_radius", self.nozzle_rod_radius),
            ("setback_distance", self.setback_distance),
            ("wire_diameter", self.wire_diameter),
            ("inner_bend_radius", self.inner_bend_radius),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(CompensationError::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.k_factor > 0.0 && self.k_factor < 1.0) {
            return Err(CompensationError::InvalidParams(format!(
                "k_factor must be in (0, 1), got {}",
                self.k_factor
            )));
        }
        if !(self.springback_deg.is_finite() && self.springback_deg >= 0.0) {
            return Err(CompensationError::InvalidParams(format!(
                "springback_deg must be >= 0, got {}",
                self.springback_deg
            )));
        }
        Ok(())
    }
}

fn check_angle(theta: f64) -> Result<(), CompensationError> {
    if theta.is_finite() && theta.abs() <= 180.0 {
        Ok(())
    } else {
        Err(CompensationError::AngleRange(theta))
    }
}

/// Peg angle that yields wire angle `theta_des` under the setback geometry.
///
/// `theta + asin(R sin(theta) / (s - r_r / sin(theta) - r_n tan(theta)))`,
/// evaluated on `|theta|` and re-signed so the map is exactly odd. At 0 and
/// 180 the `1 / sin` term diverges and at 90 the `tan` term diverges; in
/// each case the asin term vanishes and `theta` is returned.
pub fn setback_commanded(theta_des: f64, p: &CompensationParams) -> Result<f64, CompensationError> {
    check_angle(theta_des)?;
    let mag = theta_des.abs();
    if mag == 0.0 || mag == 90.0 || mag == 180.0 {
        return Ok(theta_des);
    }
    let t = mag.to_radians();
    let sin = t.sin();
    let denom = p.setback_distance - p.bend_rod_radius / sin - p.nozzle_rod_radius * t.tan();
    let argument = p.peg_arc_radius * sin / denom;
    if !(-1.0..=1.0).contains(&argument) {
        return Err(CompensationError::Domain {
            theta_deg: theta_des,
            argument,
        });
    }
    let out = mag + argument.asin().to_degrees();
    Ok(out.copysign(theta_des))
}

/// Wire angle to bend to so that `theta_des` remains after springback.
pub fn springback_target(theta_des: f64, p: &CompensationParams) -> f64 {
    if theta_des == 0.0 {
        return theta_des;
    }
    theta_des + p.springback_deg.copysign(theta_des)
}

/// Commanded peg angle for a desired final wire angle: setback applied to the
/// springback target.
pub fn combined_commanded(theta_des: f64, p: &CompensationParams) -> Result<f64, CompensationError> {
    check_angle(theta_des)?;
    setback_commanded(springback_target(theta_des, p), p)
}

/// Inverse of [`combined_commanded`] over design angles in `[0, 180]`
/// (re-signed for negative commands).
///
/// The forward map need not be monotone or defined everywhere, so the
/// design range is scanned for sign changes and each bracket bisected.
/// Roots where setback adds angle (the peg reaches the wire on the near
/// side of the pole in the setback denominator) are preferred; among
/// those the one nearest `|commanded| - S` wins.
pub fn invert_combined(commanded: f64, p: &CompensationParams) -> Result<f64, CompensationError> {
    if commanded == 0.0 {
        return Ok(commanded);
    }
    let target = commanded.abs();
    let f = |t: f64| combined_commanded(t, p).ok().map(|c| c - target);
    const STEPS: usize = 720;
    let mut best: Option<f64> = None;
    let mut prev: Option<(f64, f64)> = None;
    let guess = target - p.springback_deg;
    // Lower rank is better: (wrong branch, distance to the guess).
    let rank = |r: f64| {
        let overbend = target - springback_target(r, p);
        (overbend < 0.0, (r - guess).abs())
    };
    for k in 0..=STEPS {
        let t = 180.0 * k as f64 / STEPS as f64;
        let Some(ft) = f(t) else {
            prev = None;
            continue;
        };
        let root = if ft == 0.0 {
            Some(t)
        } else if let Some((t0, f0)) = prev.filter(|&(_, f0)| f0.signum() != ft.signum()) {
            bisect(&f, t0, f0, t)
        } else {
            None
        };
        if let Some(r) = root {
            if best.is_none_or(|b| rank(r) < rank(b)) {
                best = Some(r);
            }
        }
        prev = Some((t, ft));
    }
    best.map(|b| b.copysign(commanded))
        .ok_or(CompensationError::NoInverse(commanded))
}

fn bisect(f: &impl Fn(f64) -> Option<f64>, mut lo: f64, mut flo: f64, mut hi: f64) -> Option<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Length terms of the feed correction for a single bend.
pub trait BendDeduction {
    /// Straight length lost to the bend on one adjoining segment.
    fn lost_length(&self, theta_deg: f64) -> f64;
    /// Arc length of wire consumed by the bend itself.
    fn arc_length(&self, theta_deg: f64) -> f64;
    /// Constant per-segment term applied once to any segment touching a bend.
    fn offset(&self) -> f64;
}

/// Sheet-metal style deduction: outside setback tangent for the lost length
/// and the neutral-axis arc at radius `r_bend + K d`.
#[derive(Debug, Clone, Copy)]
pub struct StandardDeduction<'a>(pub &'a CompensationParams);

impl BendDeduction for StandardDeduction<'_> {
    fn lost_length(&self, theta_deg: f64) -> f64 {
        let p = self.0;
        (theta_deg.abs().to_radians() / 2.0).tan() * (p.inner_bend_radius + p.wire_diameter)
    }

    fn arc_length(&self, theta_deg: f64) -> f64 {
        let p = self.0;
        theta_deg.abs().to_radians() * (p.inner_bend_radius + p.neutral_offset())
    }

    fn offset(&self) -> f64 {
        2.0 * (self.0.wire_radius() - self.0.neutral_offset())
    }
}

/// Bends bounding each feed: `(previous, next)` design angles, skipping
/// rotates. Zero-angle bends count as absent.
fn bounding_bends(ins: &[Instruction]) -> Vec<Option<(Option<f64>, Option<f64>)>> {
    let bend_at = |k: usize| match ins[k] {
        Instruction::Bend(b) if b != 0.0 => Some(b),
        _ => None,
    };
    ins.iter()
        .enumerate()
        .map(|(k, i)| {
            if !matches!(i, Instruction::Feed(_)) {
                return None;
            }
            let before = ins[..k]
                .iter()
                .rposition(|i| !matches!(i, Instruction::Rotate(_)))
                .and_then(bend_at);
            let after = ins[k + 1..]
                .iter()
                .position(|i| !matches!(i, Instruction::Rotate(_)))
                .and_then(|off| bend_at(k + 1 + off));
            Some((before, after))
        })
        .collect()
}

/// Applies the feed correction with the standard deduction.
pub fn adjust_feeds(
    program: &InstructionProgram,
    p: &CompensationParams,
    min_feed: f64,
) -> Result<InstructionProgram, CompensationError> {
    adjust_feeds_with(program, &StandardDeduction(p), min_feed)
}

/// `F_adj = F - sum(lost(bounding bends)) + arc(next bend) - offset` for
/// every feed touching at least one bend; other feeds pass through.
pub fn adjust_feeds_with(
    program: &InstructionProgram,
    deduction: &dyn BendDeduction,
    min_feed: f64,
) -> Result<InstructionProgram, CompensationError> {
    if program.error_corrected {
        return Err(CompensationError::AlreadyCorrected);
    }
    let bounds = bounding_bends(&program.instructions);
    let mut out = program.clone();
    for (k, (ins, bound)) in out.instructions.iter_mut().zip(bounds).enumerate() {
        let (Instruction::Feed(f), Some((before, after))) = (*ins, bound) else {
            continue;
        };
        if before.is_none() && after.is_none() {
            continue;
        }
        let lost: f64 = before.iter().chain(after.iter()).map(|&b| deduction.lost_length(b)).sum();
        let arc = after.map_or(0.0, |b| deduction.arc_length(b));
        let adjusted = f - lost + arc - deduction.offset();
        if !(adjusted > 0.0 && adjusted >= min_feed) {
            return Err(CompensationError::ShortFeed {
                index: k,
                original: f,
                adjusted,
                minimum: min_feed,
            });
        }
        *ins = Instruction::Feed(adjusted);
    }
    Ok(out)
}

/// Full correction pass: feeds adjusted, bends mapped to commanded angles,
/// rotates untouched, flag set.
pub fn apply_corrections(
    program: &InstructionProgram,
    p: &CompensationParams,
    min_feed: f64,
) -> Result<InstructionProgram, CompensationError> {
    p.validate()?;
    let mut out = adjust_feeds(program, p, min_feed)?;
    for ins in &mut out.instructions {
        if let Instruction::Bend(b) = *ins {
            *ins = Instruction::Bend(combined_commanded(b, p)?);
        }
    }
    out.error_corrected = true;
    Ok(out)
}

/// Recovers the design program from a corrected one: bends through
/// [`invert_combined`], then feeds by adding back the deduction.
pub fn invert_corrections(
    program: &InstructionProgram,
    p: &CompensationParams,
) -> Result<InstructionProgram, CompensationError> {
    if !program.error_corrected {
        return Ok(program.clone());
    }
    let mut out = program.clone();
    for ins in &mut out.instructions {
        if let Instruction::Bend(b) = *ins {
            *ins = Instruction::Bend(invert_combined(b, p)?);
        }
    }
    let deduction = StandardDeduction(p);
    let bounds = bounding_bends(&out.instructions);
    for (ins, bound) in out.instructions.iter_mut().zip(bounds) {
        let (Instruction::Feed(f), Some((before, after))) = (*ins, bound) else {
            continue;
        };
        if before.is_none() && after.is_none() {
            continue;
        }
        let lost: f64 = before.iter().chain(after.iter()).map(|&b| deduction.lost_length(b)).sum();
        let arc = after.map_or(0.0, |b| deduction.arc_length(b));
        *ins = Instruction::Feed(f + lost - arc + deduction.offset());
    }
    out.error_corrected = false;
    Ok(out)
}
