use std::path::Path;

use serde::{Deserialize, Serialize};

use super::material::MaterialSpec;
use super::MachineError;
use crate::errormodel::CompensationParams;

/// Everything the toolchain knows about one machine build.
///
/// Serialized as JSON; every section has defaults so a profile file only
/// needs the fields it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MachineProfile {
    pub feed: FeedAxis,
    pub bend: BendAxis,
    pub rotate: RotateAxis,
    pub speeds: Speeds,
    pub overheads: Overheads,
    pub limits: Limits,
    pub torque: Torque,
    pub material: MaterialSpec,
    pub cost: Cost,
    pub protocol: Protocol,
    pub compensation: CompensationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedAxis {
    pub wheel_diameter_mm: f64,
    pub steps_per_rev: u32,
    pub microstep: u32,
}

impl Default for FeedAxis {
    fn default() -> Self {
        Self {
            wheel_diameter_mm: 37.3,
            steps_per_rev: 200,
            microstep: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BendAxis {
    pub motor_step_deg: f64,
    pub gearbox_ratio: f64,
    pub external_ratio: f64,
    pub microstep: u32,
    /// Largest design bend accepted by the checks.
    pub max_bend_deg: f64,
    /// Physical limit before the wire meets the rotation shaft.
    pub hard_stop_deg: f64,
}

impl Default for BendAxis {
    fn default() -> Self {
        Self {
            motor_step_deg: 1.8,
            gearbox_ratio: 26.85,
            external_ratio: 4.0,
            microstep: 1,
            max_bend_deg: 155.0,
            hard_stop_deg: 165.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RotateAxis {
    pub motor_step_deg: f64,
    pub microstep: u32,
    pub transmission_ratio: f64,
    /// Net rotation allowed in either direction before the cabling winds up.
    pub max_cumulative_deg: f64,
}

impl Default for RotateAxis {
    fn default() -> Self {
        Self {
            motor_step_deg: 1.8,
            microstep: 32,
            transmission_ratio: 2.5568,
            max_cumulative_deg: 360.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Speeds {
    pub feed_mm_s: f64,
    pub bend_deg_s: f64,
    pub rotate_deg_s: f64,
}

impl Default for Speeds {
    fn default() -> Self {
        Self {
            feed_mm_s: 110.2,
            bend_deg_s: 15.1,
            rotate_deg_s: 131.3,
        }
    }
}

/// Fixed time costs outside the per-instruction motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overheads {
    /// Once per job.
    pub homing_s: f64,
    /// Each time the peg has to change side for a bend in the other direction.
    pub peg_retract_s: f64,
}

impl Default for Overheads {
    fn default() -> Self {
        Self {
            homing_s: 10.0,
            peg_retract_s: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub min_feed_mm: f64,
    /// Stock that cannot be fed because it sits between feeder and nozzle.
    pub tail_reserve_mm: f64,
    pub min_edge_mm: f64,
    pub stock_length_mm: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            min_feed_mm: 25.0,
            tail_reserve_mm: 400.0,
            min_edge_mm: 20.4,
            stock_length_mm: 1000.0,
        }
    }
}

impl Limits {
    pub fn feed_budget_mm(&self) -> f64 {
        self.stock_length_mm - self.tail_reserve_mm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Torque {
    /// Output torque at the bending peg after transmission and losses.
    pub available_bend_nm: f64,
    /// Minimum torque margin for a material to count as bendable.
    pub safety_factor: f64,
}

impl Default for Torque {
    fn default() -> Self {
        Self {
            available_bend_nm: 37.9,
            safety_factor: 1.14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Cost {
    pub usd_per_foot: f64,
}

impl Default for Cost {
    fn default() -> Self {
        Self { usd_per_foot: 0.6 }
    }
}

impl Cost {
    pub fn usd_per_mm(&self) -> f64 {
        self.usd_per_foot / 304.8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    /// Reply timeout per command, on top of the expected motion time.
    pub command_timeout_s: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            command_timeout_s: 5.0,
        }
    }
}

impl MachineProfile {
    /// Wire advance per feed motor microstep, mm.
    pub fn feed_resolution(&self) -> f64 {
        std::f64::consts::PI * self.feed.wheel_diameter_mm
            / (self.feed.steps_per_rev as f64 * self.feed.microstep as f64)
    }

    /// Peg rotation per bend motor step, degrees.
    pub fn bend_resolution(&self) -> f64 {
        self.bend.motor_step_deg
            / (self.bend.gearbox_ratio * self.bend.external_ratio * self.bend.microstep as f64)
    }

    /// Bending head rotation per rotate motor microstep, degrees.
    pub fn rotate_resolution(&self) -> f64 {
        self.rotate.motor_step_deg / (self.rotate.microstep as f64 * self.rotate.transmission_ratio)
    }

    pub fn from_json(text: &str) -> Result<Self, MachineError> {
        let p: Self = serde_json::from_str(text).map_err(|e| MachineError::Profile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, MachineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MachineError::Profile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let positive = [
            ("feed.wheel_diameter_mm", self.feed.wheel_diameter_mm),
            ("feed.steps_per_rev", self.feed.steps_per_rev as f64),
            ("feed.microstep", self.feed.microstep as f64),
            ("bend.motor_step_deg", self.bend.motor_step_deg),
            ("bend.gearbox_ratio", self.bend.gearbox_ratio),
            ("bend.external_ratio", self.bend.external_ratio),
            ("bend.microstep", self.bend.microstep as f64),
            ("bend.max_bend_deg", self.bend.max_bend_deg),
            ("bend.hard_stop_deg", self.bend.hard_stop_deg),
            ("rotate.motor_step_deg", self.rotate.motor_step_deg),
            ("rotate.microstep", self.rotate.microstep as f64),
            ("rotate.transmission_ratio", self.rotate.transmission_ratio),
            ("rotate.max_cumulative_deg", self.rotate.max_cumulative_deg),
            ("speeds.feed_mm_s", self.speeds.feed_mm_s),
            ("speeds.bend_deg_s", self.speeds.bend_deg_s),
            ("speeds.rotate_deg_s", self.speeds.rotate_deg_s),
            ("protocol.command_timeout_s", self.protocol.command_timeout_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MachineError::Profile(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("overheads.homing_s", self.overheads.homing_s),
            ("overheads.peg_retract_s", self.overheads.peg_retract_s),
            ("limits.min_feed_mm", self.limits.min_feed_mm),
            ("limits.tail_reserve_mm", self.limits.tail_reserve_mm),
            ("limits.min_edge_mm", self.limits.min_edge_mm),
            ("limits.stock_length_mm", self.limits.stock_length_mm),
            ("torque.available_bend_nm", self.torque.available_bend_nm),
            ("torque.safety_factor", self.torque.safety_factor),
            ("cost.usd_per_foot", self.cost.usd_per_foot),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MachineError::Profile(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.material.validate()?;
        self.compensation
            .validate()
            .map_err(|e| MachineError::Profile(e.to_string()))
    }
}
