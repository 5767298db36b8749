use serde::{Deserialize, Serialize};

use super::profile::MachineProfile;
use super::MachineError;

/// Mechanical properties of a round wire stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    pub diameter_mm: f64,
    pub yield_stress_mpa: f64,
    pub uts_mpa: f64,
    pub elastic_modulus_gpa: f64,
    pub fracture_strain: f64,
}

impl MaterialSpec {
    /// 3 mm aluminium 6061-T6 from tensile testing of the stock.
    pub fn aluminium_6061_t6() -> Self {
        Self {
            name: "Al 6061-T6".to_string(),
            diameter_mm: 3.0,
            yield_stress_mpa: 268.47,
            uts_mpa: 362.14,
            elastic_modulus_gpa: 68.03,
            fracture_strain: 0.0541,
        }
    }

    pub fn with_diameter(mut self, diameter_mm: f64) -> Self {
        self.diameter_mm = diameter_mm;
        self
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let fields = [
            ("diameter_mm", self.diameter_mm),
            ("yield_stress_mpa", self.yield_stress_mpa),
            ("uts_mpa", self.uts_mpa),
            ("elastic_modulus_gpa", self.elastic_modulus_gpa),
            ("fracture_strain", self.fracture_strain),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(MachineError::Profile(format!(
                    "material.{name} must be > 0, got {v}"
                )));
            }
        }
        if self.yield_stress_mpa > self.uts_mpa {
            return Err(MachineError::Profile(
                "material yield stress exceeds ultimate tensile strength".into(),
            ));
        }
        Ok(())
    }
}

impl Default for MaterialSpec {
    fn default() -> Self {
        Self::aluminium_6061_t6()
    }
}

/// Fully plastic bending moment of a solid round section at the UTS, N*m.
///
/// `Z_p = d^3 / 6` (mm^3) times UTS (N/mm^2) gives N*mm.
pub fn required_bend_torque(m: &MaterialSpec) -> f64 {
    let plastic_modulus = m.diameter_mm.powi(3) / 6.0;
    plastic_modulus * m.uts_mpa / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub required_nm: f64,
    pub available_nm: f64,
    pub margin: f64,
    pub safety_factor: f64,
    pub fabricable: bool,
}

/// Torque margin of the bending axis for `m`.
pub fn feasibility(m: &MaterialSpec, profile: &MachineProfile) -> Feasibility {
    let required = required_bend_torque(m);
    let available = profile.torque.available_bend_nm;
    let margin = if required > 0.0 {
        available / required
    } else if available > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Feasibility {
        required_nm: required,
        available_nm: available,
        margin,
        safety_factor: profile.torque.safety_factor,
        fabricable: margin >= profile.torque.safety_factor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torque_for_stock() {
        let t = required_bend_torque(&MaterialSpec::aluminium_6061_t6());
        assert!((t - 1.63).abs() / 1.63 < 0.005, "{t}");
        assert_eq!(required_bend_torque(&MaterialSpec::default().with_diameter(0.0)), 0.0);
    }

    #[test]
    fn margins() {
        let profile = MachineProfile::default();
        let f = feasibility(&MaterialSpec::aluminium_6061_t6(), &profile);
        assert!((f.margin - 23.2).abs() / 23.2 < 0.01);
        assert!(f.fabricable);

        let thick = feasibility(&MaterialSpec::default().with_diameter(6.8), &profile);
        assert!((thick.required_nm - 18.97).abs() < 0.02);
        assert!((thick.margin - 2.0).abs() / 2.0 < 0.05);

        let mut weak = profile.clone();
        weak.torque.available_bend_nm = 1.86;
        let f = feasibility(&MaterialSpec::aluminium_6061_t6(), &weak);
        assert!((f.margin - 1.14).abs() < 0.005);

        weak.torque.available_bend_nm = 0.0;
        let f = feasibility(&MaterialSpec::aluminium_6061_t6(), &weak);
        assert_eq!(f.margin, 0.0);
        assert!(!f.fabricable);
    }
}
