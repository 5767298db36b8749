use serde::{Deserialize, Serialize};

use super::WirePolyline;
use crate::geometry::{segment_distance, Vec3};

/// Two non-adjacent segments closer than the wire diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
}

/// All pairs `(i, j)`, `j > i + 1`, of segments whose minimum distance is
/// below `wire_diameter`. Segments sharing a corner are exempt. Candidate
/// pairs are pruned with bounding boxes inflated by the diameter.
pub fn self_intersections(w: &WirePolyline, wire_diameter: f64) -> Vec<SegmentPair> {
    let pts = w.vectors();
    let boxes: Vec<(Vec3, Vec3)> = pts
        .windows(2)
        .map(|s| (s[0].inf(&s[1]), s[0].sup(&s[1])))
        .collect();
    let mut out = Vec::new();
    for i in 0..boxes.len() {
        for j in i + 2..boxes.len() {
            let (lo_a, hi_a) = boxes[i];
            let (lo_b, hi_b) = boxes[j];
            let apart = (0..3).any(|k| lo_a[k] - hi_b[k] >= wire_diameter || lo_b[k] - hi_a[k] >= wire_diameter);
            if apart {
                continue;
            }
            let distance = segment_distance(&pts[i], &pts[i + 1], &pts[j], &pts[j + 1]);
            if distance < wire_diameter {
                out.push(SegmentPair {
                    first: i,
                    second: j,
                    distance,
                });
            }
        }
    }
    out
}
