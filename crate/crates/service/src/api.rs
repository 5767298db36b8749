//! HTTP/JSON API under `/v1`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use wirebend_core::fabcheck::{Diagnostics, ProgramDiagnostics};
use wirebend_core::fabsim::Timeline;
use wirebend_core::instructions::{emit_text, parse_text, Instruction, InstructionProgram};
use wirebend_core::machine::transport::{tcp_connect, Link};
use wirebend_core::machine::{Controller, EmulatorServer, MachineProfile, RunOutcome, RunReport, StopHandle};
use wirebend_core::wiregraph::{ingest, GraphDocument, WireframeGraph};

use crate::pipeline;

/// Where machine sessions connect.
#[derive(Clone)]
pub enum MachineTarget {
    Emulated(EmulatorServer),
    Tcp(String),
}

impl MachineTarget {
    fn connect(&self) -> anyhow::Result<Link> {
        match self {
            MachineTarget::Emulated(e) => Ok(e.connect()),
            MachineTarget::Tcp(addr) => tcp_connect(addr.as_str()).with_context(|| format!("connecting to {addr}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Validated,
    Compiled,
    Simulated,
    Running,
    Done,
    Stopped,
    Failed,
}

impl JobStatus {
    fn rank(self) -> u8 {
        match self {
            JobStatus::Validated => 0,
            JobStatus::Compiled => 1,
            JobStatus::Simulated => 2,
            JobStatus::Running => 3,
            JobStatus::Done | JobStatus::Stopped | JobStatus::Failed => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: u64,
    pub graph_hash: Option<String>,
    pub status: JobStatus,
    pub program: Option<InstructionProgram>,
    pub program_text: Option<String>,
    pub diagnostics: Option<Diagnostics>,
    pub program_check: Option<ProgramDiagnostics>,
    pub timeline: Option<Timeline>,
    pub instruction_file: Option<PathBuf>,
    pub run: Option<RunReport>,
    pub error: Option<String>,
    pub created_at: f64,
    pub updated_at: f64,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl JobRecord {
    /// Moves the status forward; backward moves are ignored.
    fn advance(&mut self, to: JobStatus) {
        if to.rank() > self.status.rank() {
            self.status = to;
            self.updated_at = now();
        }
    }
}

/// The single machine session. The controller is lent out for each
/// operation; `busy` marks it as lent.
struct Session {
    controller: Option<Controller>,
    busy: bool,
    /// Job currently running and the handle that stops it.
    active: Option<(u64, StopHandle)>,
}

struct Inner {
    profile: RwLock<MachineProfile>,
    jobs: Mutex<BTreeMap<u64, JobRecord>>,
    data_dir: PathBuf,
    target: MachineTarget,
    session: Mutex<Session>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(profile: MachineProfile, data_dir: PathBuf, target: MachineTarget) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&data_dir).with_context(|| format!("creating {}", data_dir.display()))?;
        Ok(Self(Arc::new(Inner {
            profile: RwLock::new(profile),
            jobs: Mutex::new(BTreeMap::new()),
            data_dir,
            target,
            session: Mutex::new(Session {
                controller: None,
                busy: false,
                active: None,
            }),
        })))
    }

    fn profile(&self) -> MachineProfile {
        self.0.profile.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn jobs(&self) -> std::sync::MutexGuard<'_, BTreeMap<u64, JobRecord>> {
        self.0.jobs.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn session(&self) -> std::sync::MutexGuard<'_, Session> {
        self.0.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Lends out the machine controller, connecting on first use. Fails
    /// with a conflict while another operation holds it. With `job`, the
    /// run's stop handle is registered under the same lock.
    fn claim(&self, job: Option<u64>) -> Result<Controller, ApiError> {
        let mut s = self.session();
        if s.busy {
            return Err(ApiError::conflict("the machine is busy with another operation"));
        }
        let ctl = match s.controller.take() {
            Some(c) => c,
            None => {
                let link = self.0.target.connect().map_err(ApiError::unavailable)?;
                Controller::new(link, &self.profile())
            }
        };
        s.busy = true;
        s.active = job.map(|id| (id, ctl.stop_handle()));
        Ok(ctl)
    }

    fn release(&self, c: Controller) {
        let mut s = self.session();
        s.controller = Some(c);
        s.busy = false;
        s.active = None;
    }

    /// Runs a blocking machine operation on the lent controller.
    async fn with_machine<T: Send + 'static>(
        &self,
        f: impl FnOnce(&mut Controller) -> T + Send + 'static,
    ) -> Result<T, ApiError> {
        let mut ctl = self.claim(None)?;
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let out = f(&mut ctl);
            state.release(ctl);
            out
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.to_string())
    }

    fn unprocessable(e: &anyhow::Error) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{e:#}"))
    }

    fn conflict(msg: &str) -> Self {
        Self::new(StatusCode::CONFLICT, msg)
    }

    fn unavailable(e: anyhow::Error) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, format!("{e:#}"))
    }

    fn not_found(id: u64) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no job {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": { "message": self.message } }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(r.status(), r.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// JSON request body whose rejections use the API error shape.
#[derive(FromRequest)]
#[from_request(via(Json), rejection(ApiError))]
struct Body<T>(T);

/// A graph given either as the JSON document itself or as a text document
/// (JSON or OBJ) in `document`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GraphInput {
    Graph(GraphDocument),
    Text { document: String },
}

impl GraphInput {
    fn graph(self) -> Result<(WireframeGraph, Vec<String>), ApiError> {
        match self {
            GraphInput::Graph(doc) => WireframeGraph::try_from(doc)
                .map(|g| (g, Vec::new()))
                .map_err(ApiError::bad_request),
            GraphInput::Text { document } => {
                let ing = ingest(&document).map_err(ApiError::bad_request)?;
                Ok((ing.graph, ing.warnings.iter().map(|w| w.to_string()).collect()))
            }
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
pub struct CompileRequest {
    pub graph: GraphInput,
    #[serde(default = "default_true")]
    pub correct: bool,
}

#[derive(Debug, Serialize)]
pub struct CompileResponse {
    pub path: Vec<usize>,
    pub program_text: String,
    pub program: InstructionProgram,
}

/// A program given as instruction text or as structured JSON.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ProgramInput {
    Text { program_text: String },
    Json { program: InstructionProgram },
}

impl ProgramInput {
    fn program(self) -> Result<InstructionProgram, ApiError> {
        match self {
            ProgramInput::Text { program_text } => parse_text(program_text.as_bytes()).map_err(ApiError::bad_request),
            ProgramInput::Json { program } => {
                for ins in program.iter() {
                    ins.validate().map_err(ApiError::bad_request)?;
                }
                Ok(program)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub program: ProgramInput,
    /// Show corrected programs as their design shape.
    #[serde(default = "default_true")]
    pub intended: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum JobRequest {
    Graph {
        graph: GraphInput,
        #[serde(default = "default_true")]
        correct: bool,
    },
    Program(ProgramInput),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum JogRequest {
    Text { instruction: String },
    Json(Instruction),
}

async fn validate(State(st): State<AppState>, Body(input): Body<GraphInput>) -> ApiResult<Diagnostics> {
    let (g, warnings) = input.graph()?;
    let mut d = pipeline::validate(&g, &st.profile());
    d.warnings.extend(warnings);
    Ok(Json(d))
}

async fn compile(State(st): State<AppState>, Body(req): Body<CompileRequest>) -> ApiResult<CompileResponse> {
    let (g, _) = req.graph.graph()?;
    let c = pipeline::compile_graph(&g, &st.profile(), req.correct).map_err(|e| ApiError::unprocessable(&e))?;
    Ok(Json(CompileResponse {
        path: c.path,
        program_text: c.text,
        program: c.program,
    }))
}

async fn simulate(State(st): State<AppState>, Body(req): Body<SimulateRequest>) -> ApiResult<pipeline::Simulation> {
    let p = req.program.program()?;
    pipeline::simulate(&p, &st.profile(), req.intended)
        .map(Json)
        .map_err(|e| ApiError::unprocessable(&e))
}

async fn create_job(State(st): State<AppState>, Body(req): Body<JobRequest>) -> Result<(StatusCode, Json<JobRecord>), ApiError> {
    let profile = st.profile();
    let t = now();
    let mut rec = JobRecord {
        id: 0,
        graph_hash: None,
        status: JobStatus::Validated,
        program: None,
        program_text: None,
        diagnostics: None,
        program_check: None,
        timeline: None,
        instruction_file: None,
        run: None,
        error: None,
        created_at: t,
        updated_at: t,
    };
    let program = match req {
        JobRequest::Graph { graph, correct } => {
            let (g, warnings) = graph.graph()?;
            rec.graph_hash = Some(g.content_hash());
            let mut d = pipeline::validate(&g, &profile);
            d.warnings.extend(warnings);
            let ok = d.overall_fabricable;
            rec.diagnostics = Some(d);
            if ok {
                match pipeline::compile_graph(&g, &profile, correct) {
                    Ok(c) => Some(c.program),
                    Err(e) => {
                        rec.error = Some(format!("{e:#}"));
                        None
                    }
                }
            } else {
                rec.error = Some("design is not fabricable".into());
                None
            }
        }
        JobRequest::Program(p) => Some(p.program()?),
    };
    let mut jobs = st.jobs();
    rec.id = jobs.keys().next_back().map_or(1, |k| k + 1);
    match program {
        None => rec.advance(JobStatus::Failed),
        Some(p) => {
            let text = emit_text(&p);
            let file = st.0.data_dir.join(format!("job-{}.txt", rec.id));
            std::fs::write(&file, &text).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            rec.instruction_file = Some(file);
            rec.program_text = Some(String::from_utf8_lossy(&text).into_owned());
            rec.advance(JobStatus::Compiled);
            match pipeline::simulate(&p, &profile, true) {
                Ok(sim) => {
                    rec.timeline = Some(sim.timeline);
                    rec.program_check = Some(sim.program_check);
                    rec.advance(JobStatus::Simulated);
                }
                Err(e) => {
                    rec.error = Some(format!("{e:#}"));
                    rec.advance(JobStatus::Failed);
                }
            }
            rec.program = Some(p);
        }
    }
    jobs.insert(rec.id, rec.clone());
    Ok((StatusCode::CREATED, Json(rec)))
}

async fn get_job(State(st): State<AppState>, Path(id): Path<u64>) -> ApiResult<JobRecord> {
    st.jobs().get(&id).cloned().map(Json).ok_or(ApiError::not_found(id))
}

async fn start_job(State(st): State<AppState>, Path(id): Path<u64>) -> Result<(StatusCode, Json<JobRecord>), ApiError> {
    let program = {
        let jobs = st.jobs();
        let rec = jobs.get(&id).ok_or(ApiError::not_found(id))?;
        if rec.status != JobStatus::Simulated {
            return Err(ApiError::conflict("job is not ready to run"));
        }
        rec.program.clone().expect("simulated jobs have a program")
    };
    let mut ctl = st.claim(Some(id))?;
    let rec = {
        let mut jobs = st.jobs();
        let rec = jobs.get_mut(&id).expect("checked above");
        rec.advance(JobStatus::Running);
        rec.clone()
    };
    let worker_state = st.clone();
    tokio::task::spawn_blocking(move || {
        let result = ctl.run_program(&program);
        let mut jobs = worker_state.jobs();
        if let Some(rec) = jobs.get_mut(&id) {
            match result {
                Ok(report) => {
                    rec.advance(match report.outcome {
                        RunOutcome::Completed => JobStatus::Done,
                        RunOutcome::Stopped => JobStatus::Stopped,
                    });
                    rec.run = Some(report);
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    rec.advance(JobStatus::Failed);
                }
            }
        }
        drop(jobs);
        worker_state.release(ctl);
    });
    Ok((StatusCode::ACCEPTED, Json(rec)))
}

async fn stop_job(State(st): State<AppState>, Path(id): Path<u64>) -> Result<(StatusCode, Json<JobRecord>), ApiError> {
    let handle = {
        let s = st.session();
        match &s.active {
            Some((active, h)) if *active == id => h.clone(),
            _ => return Err(ApiError::conflict("job is not running")),
        }
    };
    handle
        .stop()
        .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    let rec = st.jobs().get(&id).cloned().ok_or(ApiError::not_found(id))?;
    Ok((StatusCode::ACCEPTED, Json(rec)))
}

fn machine_error(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::BAD_GATEWAY, e.to_string())
}

async fn jog(State(st): State<AppState>, Body(req): Body<JogRequest>) -> ApiResult<serde_json::Value> {
    let ins = match req {
        JogRequest::Text { instruction } => {
            let p = parse_text(instruction.as_bytes()).map_err(ApiError::bad_request)?;
            match p.instructions.as_slice() {
                [one] => *one,
                _ => return Err(ApiError::bad_request("expected exactly one instruction")),
            }
        }
        JogRequest::Json(ins) => {
            ins.validate().map_err(ApiError::bad_request)?;
            ins
        }
    };
    let log = st
        .with_machine(move |c| c.jog(ins).map(|_| c.session_log()))
        .await?
        .map_err(machine_error)?;
    Ok(Json(json!({
        "executed": ins,
        "session_text": String::from_utf8_lossy(&emit_text(&log)),
    })))
}

async fn home(State(st): State<AppState>) -> ApiResult<serde_json::Value> {
    let hits = st
        .with_machine(|c| c.home().map(|_| c.limit_switch_hits()))
        .await?
        .map_err(machine_error)?;
    Ok(Json(json!({ "homed": true, "limit_switch_hits": hits })))
}

async fn session_log(State(st): State<AppState>) -> ApiResult<serde_json::Value> {
    let s = st.session();
    let log = s.controller.as_ref().map(|c| c.session_log()).unwrap_or_default();
    Ok(Json(json!({
        "program": log,
        "session_text": String::from_utf8_lossy(&emit_text(&log)),
    })))
}

async fn get_profile(State(st): State<AppState>) -> Json<MachineProfile> {
    Json(st.profile())
}

async fn put_profile(State(st): State<AppState>, Body(p): Body<MachineProfile>) -> ApiResult<MachineProfile> {
    p.validate().map_err(ApiError::bad_request)?;
    *st.0.profile.write().unwrap_or_else(|e| e.into_inner()) = p.clone();
    Ok(Json(p))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/validate", post(validate))
        .route("/v1/compile", post(compile))
        .route("/v1/simulate", post(simulate))
        .route("/v1/jobs", post(create_job))
        .route("/v1/jobs/{id}", get(get_job))
        .route("/v1/jobs/{id}/start", post(start_job))
        .route("/v1/jobs/{id}/stop", post(stop_job))
        .route("/v1/machine/jog", post(jog))
        .route("/v1/machine/home", post(home))
        .route("/v1/machine/session", get(session_log))
        .route("/v1/profile", get(get_profile).put(put_profile))
        .with_state(state)
}
