use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wirebend_core::fabsim::{render_svg, Projection};
use wirebend_core::instructions::{emit_text, Instruction, Kind};
use wirebend_core::machine::transport::{tcp_connect, Link};
use wirebend_core::machine::{Controller, EmulatorServer, MachineProfile, Pacing, RunOutcome};

use crate::pipeline;

#[derive(Debug, Parser)]
#[command(name = "wirebend", version, about = "Design-to-fabrication toolkit for 3D wirebending")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Machine profile JSON (falls back to $WIREBEND_PROFILE, then defaults).
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
    /// Machine-readable JSON output, including errors.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum View {
    Top,
    Front,
    Side,
}

impl From<View> for Projection {
    fn from(v: View) -> Self {
        match v {
            View::Top => Projection::Top,
            View::Front => Projection::Front,
            View::Side => Projection::Side,
        }
    }
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    /// TCP address of the machine (host:port).
    #[arg(long, conflicts_with = "emulate")]
    pub port: Option<String>,
    /// Use an in-process emulator instead of a machine.
    #[arg(long)]
    pub emulate: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a wireframe for fabricability; exits 0 only if it passes.
    Check { graph: PathBuf },
    /// Compile a wireframe into an instruction file.
    Compile {
        graph: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Skip feed and bend compensation.
        #[arg(long)]
        no_correct: bool,
    },
    /// Reconstruct the wire shape and its timeline, flagging self-intersections.
    Simulate {
        program: PathBuf,
        /// Write an SVG projection to stdout instead of a report.
        #[arg(long, conflicts_with = "plot")]
        svg: bool,
        /// Write an SVG projection to this file.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "top")]
        view: View,
        /// Execute corrected programs literally instead of showing the
        /// intended design shape.
        #[arg(long)]
        literal: bool,
    },
    /// Fabrication time, material length and material cost.
    Estimate { program: PathBuf },
    /// Home the machine and run an instruction file.
    Run {
        program: PathBuf,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Execute instructions one at a time, e.g. `jog F 10 B 90`.
    Jog {
        #[arg(required = true, num_args = 1.., allow_negative_numbers = true)]
        instructions: Vec<String>,
        /// Save the jogged instructions as a replayable file.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Home before jogging.
        #[arg(long)]
        home: bool,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Home the bend axis.
    Home {
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Send STOP to a machine.
    Stop {
        #[arg(long)]
        port: String,
    },
    /// Serve an emulated machine over TCP.
    Emulate {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Real-time factor for motions; 0 completes them instantly.
        #[arg(long, default_value_t = 0.0)]
        pace: f64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// Directory for instruction files written by jobs.
        #[arg(long, default_value = "wirebend-data")]
        data_dir: PathBuf,
        /// Machine address; an emulator is used when omitted.
        #[arg(long)]
        port: Option<String>,
        /// Real-time factor for the built-in emulator.
        #[arg(long, default_value_t = 0.0)]
        pace: f64,
    },
}

fn pacing(pace: f64) -> Pacing {
    if pace > 0.0 {
        Pacing::Scaled(pace)
    } else {
        Pacing::Instant
    }
}

fn connect(m: &MachineArgs, profile: &MachineProfile) -> Result<(Link, Option<EmulatorServer>)> {
    match (&m.port, m.emulate) {
        (Some(addr), _) => Ok((tcp_connect(addr.as_str()).with_context(|| format!("connecting to {addr}"))?, None)),
        (None, true) => {
            let emu = EmulatorServer::new(profile, Pacing::Instant);
            Ok((emu.connect(), Some(emu)))
        }
        (None, false) => bail!("no machine given: pass --port <addr> or --emulate"),
    }
}

/// Parses `F 10 B 90` or `"F 10" "B 90"` into instructions.
pub fn parse_jog_args(args: &[String]) -> Result<Vec<Instruction>> {
    let tokens: Vec<&str> = args.iter().flat_map(|a| a.split_whitespace()).collect();
    if !tokens.len().is_multiple_of(2) {
        bail!("expected pairs of command letter and magnitude");
    }
    tokens
        .chunks(2)
        .map(|pair| {
            let kind = Kind::from_letter(pair[0]).ok_or_else(|| anyhow!("unknown command `{}`", pair[0]))?;
            let mag: f64 = pair[1].parse().with_context(|| format!("bad magnitude `{}`", pair[1]))?;
            Ok(Instruction::new(kind, mag)?)
        })
        .collect()
}

fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Runs one command, writing its report to `out`. Returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let json = cli.global.json;
    let profile = pipeline::load_profile(cli.global.profile.as_deref())?;
    match cli.command {
        Command::Check { graph } => {
            let ingested = pipeline::read_graph(&graph)?;
            let mut d = pipeline::validate(&ingested.graph, &profile);
            d.warnings.extend(ingested.warnings.iter().map(|w| w.to_string()));
            if json {
                write_json(out, &d)?;
            } else {
                let e = &d.euler;
                writeln!(
                    out,
                    "euler: {:?} ({} odd vertices, connected: {}) {}",
                    e.status.classification,
                    e.status.odd_vertices.len(),
                    e.status.connected,
                    if e.pass { "PASS" } else { "FAIL" }
                )?;
                for f in d.failures() {
                    writeln!(out, "FAIL vertex {} {:?}: {}", f.vertex, f.check, f.detail)?;
                }
                for f in d.failed_edges() {
                    writeln!(
                        out,
                        "FAIL edge ({}, {}) length {:.4} mm < {} mm",
                        f.edge[0], f.edge[1], f.measured, profile.limits.min_edge_mm
                    )?;
                }
                for w in &d.warnings {
                    writeln!(out, "warning: {w}")?;
                }
                writeln!(out, "{}", if d.overall_fabricable { "fabricable" } else { "not fabricable" })?;
            }
            Ok(if d.overall_fabricable { 0 } else { 1 })
        }
        Command::Compile { graph, output, no_correct } => {
            let ingested = pipeline::read_graph(&graph)?;
            let compiled = pipeline::compile_graph(&ingested.graph, &profile, !no_correct)?;
            match &output {
                Some(path) => {
                    std::fs::write(path, &compiled.text).with_context(|| format!("writing {}", path.display()))?
                }
                None if !json => out.write_all(compiled.text.as_bytes())?,
                None => {}
            }
            if json {
                write_json(out, &compiled)?;
            }
            Ok(0)
        }
        Command::Simulate { program, svg, plot, view, literal } => {
            let p = pipeline::read_program(&program)?;
            let sim = pipeline::simulate(&p, &profile, !literal)?;
            let diameter = profile.material.diameter_mm;
            if let Some(path) = &plot {
                std::fs::write(path, render_svg(&sim.polyline, view.into(), diameter))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if svg {
                out.write_all(render_svg(&sim.polyline, view.into(), diameter).as_bytes())?;
            } else if json {
                write_json(out, &sim)?;
            } else {
                for (k, pt) in sim.polyline.points.iter().enumerate() {
                    writeln!(out, "point {k}: {:.4} {:.4} {:.4}", pt[0], pt[1], pt[2])?;
                }
                writeln!(out, "total time: {:.2} s", sim.timeline.total_s)?;
                writeln!(out, "self-intersections: {}", sim.intersections.len())?;
                for pair in &sim.intersections {
                    writeln!(
                        out,
                        "  segments {} and {} at {:.4} mm",
                        pair.first, pair.second, pair.distance
                    )?;
                }
                for f in sim.program_check.failures() {
                    writeln!(
                        out,
                        "FAIL {:?} at {:?}: {:.4} (limit {})",
                        f.check, f.index, f.measured, f.limit
                    )?;
                }
            }
            Ok(if sim.intersections.is_empty() && sim.program_check.fabricable { 0 } else { 1 })
        }
        Command::Estimate { program } => {
            let p = pipeline::read_program(&program)?;
            let e = pipeline::estimate(&p, &profile);
            if json {
                write_json(out, &e)?;
            } else {
                writeln!(out, "time: {:.1} s", e.total_time_s)?;
                writeln!(out, "material: {:.1} mm", e.material_mm)?;
                writeln!(out, "cost: ${:.2}", e.cost_usd)?;
            }
            Ok(0)
        }
        Command::Run { program, machine } => {
            let p = pipeline::read_program(&program)?;
            let (link, emu) = connect(&machine, &profile)?;
            let mut ctl = Controller::new(link, &profile);
            let report = ctl.run_program(&p)?;
            if json {
                let axes = emu.map(|e| e.core().axes());
                write_json(out, &json!({ "report": report, "emulator_axes": axes }))?;
            } else {
                writeln!(
                    out,
                    "{:?}: {} of {} instructions, {} commands, {:.2} s",
                    report.outcome,
                    report.instructions_done,
                    p.len(),
                    report.commands_sent,
                    report.elapsed_s
                )?;
            }
            Ok(if report.outcome == RunOutcome::Completed { 0 } else { 1 })
        }
        Command::Jog { instructions, save, home, machine } => {
            let list = parse_jog_args(&instructions)?;
            let (link, _emu) = connect(&machine, &profile)?;
            let mut ctl = Controller::new(link, &profile);
            if home || machine.emulate {
                ctl.home()?;
            }
            for ins in list {
                ctl.jog(ins)?;
                if !json {
                    writeln!(out, "{ins}: OK")?;
                }
            }
            let log = ctl.session_log();
            if let Some(path) = &save {
                std::fs::write(path, emit_text(&log)).with_context(|| format!("writing {}", path.display()))?;
            }
            if json {
                write_json(out, &log)?;
            }
            Ok(0)
        }
        Command::Home { machine } => {
            let (link, _emu) = connect(&machine, &profile)?;
            let mut ctl = Controller::new(link, &profile);
            ctl.home()?;
            if json {
                write_json(out, &json!({ "homed": true, "limit_switch_hits": ctl.limit_switch_hits() }))?;
            } else {
                writeln!(out, "homed")?;
            }
            Ok(0)
        }
        Command::Stop { port } => {
            let mut link = tcp_connect(port.as_str()).with_context(|| format!("connecting to {port}"))?;
            link.sink.send_line("STOP")?;
            let timeout = std::time::Duration::from_secs_f64(profile.protocol.command_timeout_s);
            let reply = link
                .source
                .recv_line(timeout)
                .map_err(|e| anyhow!("no reply to STOP: {e:?}"))?;
            if json {
                write_json(out, &json!({ "reply": reply }))?;
            } else {
                writeln!(out, "{reply}")?;
            }
            Ok(if reply == "OK" { 0 } else { 1 })
        }
        Command::Emulate { listen, pace } => {
            let emu = EmulatorServer::new(&profile, pacing(pace));
            let addr = emu.serve_tcp(&listen)?;
            writeln!(out, "emulator listening on {addr}")?;
            out.flush()?;
            loop {
                std::thread::park();
            }
        }
        Command::Serve { listen, data_dir, port, pace } => {
            let target = match port {
                Some(addr) => crate::api::MachineTarget::Tcp(addr),
                None => crate::api::MachineTarget::Emulated(EmulatorServer::new(&profile, pacing(pace))),
            };
            let state = crate::api::AppState::new(profile, data_dir, target)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&listen).await?;
                writeln!(out, "listening on http://{}", listener.local_addr()?)?;
                out.flush()?;
                axum::serve(listener, crate::api::router(state)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(0)
        }
    }
}

/// Error object printed under `--json`.
pub fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    json!({ "error": { "message": format!("{err:#}"), "causes": chain } })
}
