//! Fabricability checks on designs and on instruction programs.
//!
//! Problems are reported as findings rather than errors so a caller can
//! annotate every offending vertex and edge at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::angle_between_deg;
use crate::instructions::{Instruction, InstructionProgram};
use crate::machine::MachineProfile;
use crate::wiregraph::{euler_path, euler_status, EulerStatus, WireframeGraph};

/// Slack on every limit comparison, far below any machine resolution.
pub const LIMIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexCheck {
    Eulericity,
    BendAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFinding {
    pub vertex: usize,
    pub check: VertexCheck,
    pub status: Status,
    pub detail: String,
    /// Degree for eulericity, bend angle in degrees for bend_angle.
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFinding {
    pub edge: [usize; 2],
    pub edge_id: usize,
    /// Always `"min_length"`.
    pub check: String,
    pub status: Status,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    #[serde(flatten)]
    pub status: EulerStatus,
    pub pass: bool,
    /// The traversal bend angles were measured along, when one exists.
    pub path: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub euler: EulerCheck,
    pub vertex_findings: Vec<VertexFinding>,
    pub edge_findings: Vec<EdgeFinding>,
    pub warnings: Vec<String>,
    pub overall_fabricable: bool,
}

impl Diagnostics {
    pub fn failures(&self) -> impl Iterator<Item = &VertexFinding> {
        self.vertex_findings.iter().filter(|f| f.status == Status::Fail)
    }

    pub fn failed_edges(&self) -> impl Iterator<Item = &EdgeFinding> {
        self.edge_findings.iter().filter(|f| f.status == Status::Fail)
    }
}

/// Vertices outside the largest connected component (ignoring isolated ones).
fn stray_vertices(g: &WireframeGraph) -> Vec<usize> {
    let adj = g.adjacency();
    let mut component = vec![usize::MAX; adj.len()];
    let mut sizes = Vec::new();
    for s in 0..adj.len() {
        if component[s] != usize::MAX || adj[s].is_empty() {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        component[s] = id;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &(w, _) in &adj[v] {
                if component[w] == usize::MAX {
                    component[w] = id;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    let Some(main) = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))) else {
        return Vec::new();
    };
    (0..adj.len())
        .filter(|&v| !adj[v].is_empty() && component[v] != main)
        .collect()
}

/// Largest bend at each vertex passed through by `path`.
fn bends_along(g: &WireframeGraph, path: &[usize]) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for w in path.windows(3) {
        let din = g.vertex(w[1]) - g.vertex(w[0]);
        let dout = g.vertex(w[2]) - g.vertex(w[1]);
        if din.norm() == 0.0 || dout.norm() == 0.0 {
            continue;
        }
        let theta = angle_between_deg(&din, &dout);
        let e = out.entry(w[1]).or_insert(0.0_f64);
        *e = e.max(theta);
    }
    out
}

/// Checks a design against Eulerian continuity, the bend limit and the
/// minimum edge length.
///
/// Bends are measured as direction changes (180 minus the interior angle)
/// along the Euler path the compiler would use. Without an Euler path, only
/// degree-2 vertices have a determined bend and only those are checked.
pub fn check_all(g: &WireframeGraph, profile: &MachineProfile) -> Diagnostics {
    let status = euler_status(g);
    let pass = status.is_fabricable();
    let degrees = g.degrees();
    let mut vertex_findings = Vec::new();
    let mut warnings = Vec::new();

    for v in g.isolated_vertices() {
        warnings.push(format!("vertex {v} has no edges and is ignored"));
    }

    if !pass {
        let odd_ok = status.odd_vertices.is_empty() || status.odd_vertices.len() == 2;
        if !odd_ok {
            for &v in &status.odd_vertices {
                vertex_findings.push(VertexFinding {
                    vertex: v,
                    check: VertexCheck::Eulericity,
                    status: Status::Fail,
                    detail: format!("odd degree {}", degrees[v]),
                    measured: degrees[v] as f64,
                });
            }
        }
        if !status.connected {
            for v in stray_vertices(g) {
                if odd_ok || degrees[v].is_multiple_of(2) {
                    vertex_findings.push(VertexFinding {
                        vertex: v,
                        check: VertexCheck::Eulericity,
                        status: Status::Fail,
                        detail: "not connected to the main component".into(),
                        measured: degrees[v] as f64,
                    });
                }
            }
        }
    }

    let path = if pass { euler_path(g).ok() } else { None };
    let max_bend = profile.bend.max_bend_deg;
    let bend_finding = |v: usize, theta: f64, detail: String| VertexFinding {
        vertex: v,
        check: VertexCheck::BendAngle,
        status: Status::from_ok(theta <= max_bend + LIMIT_EPS),
        detail,
        measured: theta,
    };
    match &path {
        Some(path) => {
            let bends = bends_along(g, path);
            for (v, &d) in degrees.iter().enumerate() {
                if d < 2 {
                    continue;
                }
                let finding = match bends.get(&v) {
                    Some(&theta) => bend_finding(v, theta, format!("bend {theta:.4} deg, limit {max_bend}")),
                    None => bend_finding(v, 0.0, "path endpoint, no bend".into()),
                };
                vertex_findings.push(finding);
            }
        }
        None => {
            let adj = g.adjacency();
            for (v, nbrs) in adj.iter().enumerate() {
                if nbrs.len() != 2 {
                    continue;
                }
                let path = [nbrs[0].0, v, nbrs[1].0];
                if let Some(&theta) = bends_along(g, &path).get(&v) {
                    vertex_findings.push(bend_finding(v, theta, format!("bend {theta:.4} deg, limit {max_bend}")));
                }
            }
        }
    }

    let min_edge = profile.limits.min_edge_mm;
    let edge_findings: Vec<EdgeFinding> = g
        .edges()
        .iter()
        .map(|e| {
            let len = g.edge_length(e);
            EdgeFinding {
                edge: [e.a, e.b],
                edge_id: e.id.0,
                check: "min_length".into(),
                status: Status::from_ok(len + LIMIT_EPS >= min_edge),
                measured: len,
            }
        })
        .collect();

    if g.edges().is_empty() {
        warnings.push("graph has no edges".into());
    }

    let overall_fabricable = pass
        && vertex_findings.iter().all(|f| f.status == Status::Pass)
        && edge_findings.iter().all(|f| f.status == Status::Pass);
    Diagnostics {
        euler: EulerCheck { status, pass, path },
        vertex_findings,
        edge_findings,
        warnings,
        overall_fabricable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramCheck {
    /// A program must advance the wire before anything else.
    Sequence,
    MinFeed,
    /// Cumulative feed against stock length minus the unfeedable tail.
    FeedBudget,
    /// Design bend against the configured bend limit.
    BendAngle,
    /// Compensated bend command against the physical hard stop.
    HardStop,
    /// Running signed rotation against the cable-wrap limit.
    Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFinding {
    /// Instruction index, absent for whole-program checks.
    pub index: Option<usize>,
    pub check: ProgramCheck,
    pub status: Status,
    pub measured: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDiagnostics {
    pub findings: Vec<ProgramFinding>,
    pub total_feed_mm: f64,
    pub feed_budget_mm: f64,
    pub peak_rotation_deg: f64,
    pub fabricable: bool,
}

impl ProgramDiagnostics {
    pub fn failures(&self) -> impl Iterator<Item = &ProgramFinding> {
        self.findings.iter().filter(|f| f.status == Status::Fail)
    }
}

/// Checks a program against the machine's operating intervals. One finding
/// per instruction plus the feed-budget total.
///
/// Bends of uncorrected programs are design angles and are held to the bend
/// limit; bends of corrected programs are commands and are held to the hard
/// stop.
pub fn check_program(p: &InstructionProgram, profile: &MachineProfile) -> ProgramDiagnostics {
    let mut findings = Vec::new();
    if !p.starts_with_feed() {
        findings.push(ProgramFinding {
            index: Some(0),
            check: ProgramCheck::Sequence,
            status: Status::Fail,
            measured: 0.0,
            limit: 0.0,
        });
    }
    let min_feed = profile.limits.min_feed_mm;
    let (bend_check, bend_limit) = if p.error_corrected {
        (ProgramCheck::HardStop, profile.bend.hard_stop_deg)
    } else {
        (ProgramCheck::BendAngle, profile.bend.max_bend_deg)
    };
    let rotate_limit = profile.rotate.max_cumulative_deg;
    let mut rotation = 0.0_f64;
    let mut peak = 0.0_f64;
    for (k, ins) in p.iter().enumerate() {
        let (check, measured, limit, ok) = match *ins {
            Instruction::Feed(d) => (ProgramCheck::MinFeed, d, min_feed, d + LIMIT_EPS >= min_feed),
            Instruction::Bend(b) => (bend_check, b, bend_limit, b.abs() <= bend_limit + LIMIT_EPS),
            Instruction::Rotate(r) => {
                rotation += r;
                peak = peak.max(rotation.abs());
                (
                    ProgramCheck::Rotation,
                    rotation,
                    rotate_limit,
                    rotation.abs() <= rotate_limit + LIMIT_EPS,
                )
            }
        };
        findings.push(ProgramFinding {
            index: Some(k),
            check,
            status: Status::from_ok(ok),
            measured,
            limit,
        });
    }
    let total = p.total_feed();
    let budget = profile.limits.feed_budget_mm();
    findings.push(ProgramFinding {
        index: None,
        check: ProgramCheck::FeedBudget,
        status: Status::from_ok(total <= budget + LIMIT_EPS),
        measured: total,
        limit: budget,
    });
    let fabricable = findings.iter().all(|f| f.status == Status::Pass);
    ProgramDiagnostics {
        findings,
        total_feed_mm: total,
        feed_budget_mm: budget,
        peak_rotation_deg: peak,
        fabricable,
    }
}
