//! Small vector helpers shared across the crate.

use nalgebra::Vector3;

/// 3D vector / point in millimetres.
pub type Vec3 = Vector3<f64>;

/// Rotates `v` about the unit `axis` by `angle_deg` (right-hand rule), Rodrigues form.
pub fn rotate_about(v: &Vec3, axis: &Vec3, angle_deg: f64) -> Vec3 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Unsigned angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_between_deg(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

/// Signed angle from `from` to `to` about `axis`, in degrees, in `(-180, 180]`.
///
/// Both vectors are assumed perpendicular to `axis`.
pub fn signed_angle_deg(from: &Vec3, to: &Vec3, axis: &Vec3) -> f64 {
    let sin = from.cross(to).dot(axis);
    let cos = from.dot(to);
    sin.atan2(cos).to_degrees()
}

/// Minimum distance between segments `[p0, p1]` and `[q0, q1]`.
///
/// Clamped closest-point parameters on both segments, handling degenerate
/// (point-like) and parallel segments.
pub fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-18;

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let cp = p0 + d1 * s;
    let cq = q0 + d2 * t;
    (cp - cq).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate_z_about_y_gives_x() {
        let v = rotate_about(&Vec3::z(), &Vec3::y(), 90.0);
        assert!((v - Vec3::x()).norm() < 1e-12);
    }

    #[test]
    fn signed_angle_follows_right_hand_rule() {
        let a = signed_angle_deg(&Vec3::x(), &Vec3::y(), &Vec3::z());
        assert!((a - 90.0).abs() < 1e-12);
        let b = signed_angle_deg(&Vec3::y(), &Vec3::x(), &Vec3::z());
        assert!((b + 90.0).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        let o = Vec3::zeros();
        // crossing
        let d = segment_distance(
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, -1.0, 0.0),
            &Vec3::new(0.0, 1.0, 0.0),
        );
        assert!(d.abs() < 1e-12);
        // skew, offset in z
        let d = segment_distance(
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, -1.0, 2.0),
            &Vec3::new(0.0, 1.0, 2.0),
        );
        assert!((d - 2.0).abs() < 1e-12);
        // parallel, disjoint along the line
        let d = segment_distance(&o, &Vec3::x(), &Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0));
        assert!((d - 1.0).abs() < 1e-12);
        // point vs segment
        let p = Vec3::new(0.5, 3.0, 0.0);
        let d = segment_distance(&p, &p, &o, &Vec3::x());
        assert!((d - 3.0).abs() < 1e-12);
    }
}
