//! The core calls shared by the CLI and the HTTP API, so both produce
//! identical results for identical inputs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use wirebend_core::errormodel::apply_corrections;
use wirebend_core::fabcheck::{check_all, check_program, Diagnostics, ProgramDiagnostics};
use wirebend_core::fabsim::{self, self_intersections, timeline, SegmentPair, Timeline, WirePolyline};
use wirebend_core::instructions::{compile_path, emit_text, parse_text, InstructionProgram};
use wirebend_core::machine::MachineProfile;
use wirebend_core::wiregraph::{euler_path, ingest, Ingested, WireframeGraph};

pub const PROFILE_ENV: &str = "WIREBEND_PROFILE";

/// Profile from `path`, else from `$WIREBEND_PROFILE`, else the defaults.
pub fn load_profile(path: Option<&Path>) -> Result<MachineProfile> {
    let env = std::env::var_os(PROFILE_ENV);
    let chosen = path.or(env.as_deref().map(Path::new));
    match chosen {
        Some(p) => MachineProfile::load(p).with_context(|| format!("loading profile {}", p.display())),
        None => Ok(MachineProfile::default()),
    }
}

pub fn read_graph(path: &Path) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ingest(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_program(path: &Path) -> Result<InstructionProgram> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_text(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn validate(g: &WireframeGraph, profile: &MachineProfile) -> Diagnostics {
    check_all(g, profile)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Compiled {
    pub path: Vec<usize>,
    pub program: InstructionProgram,
    /// Exact bytes of the instruction file.
    pub text: String,
}

/// Euler path, instruction compilation and, if requested, compensation.
pub fn compile_graph(g: &WireframeGraph, profile: &MachineProfile, correct: bool) -> Result<Compiled> {
    let path = euler_path(g).context("no single-wire traversal")?;
    let mut program = compile_path(g, &path).context("compiling path")?;
    if correct {
        program = apply_corrections(&program, &profile.compensation, profile.limits.min_feed_mm)
            .context("error correction failed (use --no-correct or adjust the profile's compensation section)")?;
    }
    let text = String::from_utf8(emit_text(&program)).expect("instruction text is ASCII");
    Ok(Compiled { path, program, text })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub total_time_s: f64,
    pub material_mm: f64,
    pub cost_usd: f64,
}

pub fn estimate(program: &InstructionProgram, profile: &MachineProfile) -> Estimate {
    let material_mm = program.total_feed();
    Estimate {
        total_time_s: timeline(program, profile).total_s,
        material_mm,
        cost_usd: material_mm * profile.cost.usd_per_mm(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Simulation {
    pub polyline: WirePolyline,
    pub timeline: Timeline,
    pub intersections: Vec<SegmentPair>,
    pub program_check: ProgramDiagnostics,
    pub estimate: Estimate,
}

/// Shape and timing of a program, with collision and limit checks. With
/// `intended`, corrected programs are shown as the shape they aim for.
pub fn simulate(program: &InstructionProgram, profile: &MachineProfile, intended: bool) -> Result<Simulation> {
    let polyline = if intended {
        fabsim::simulate_intended(program, &profile.compensation)
    } else {
        fabsim::simulate(program)
    }
    .context("simulation failed")?;
    let intersections = self_intersections(&polyline, profile.material.diameter_mm);
    Ok(Simulation {
        intersections,
        timeline: timeline(program, profile),
        program_check: check_program(program, profile),
        estimate: estimate(program, profile),
        polyline,
    })
}
