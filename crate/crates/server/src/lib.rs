//! HTTP service over a snapscript [`Session`]: REST endpoints for states,
//! programs, attachments, frames and logs, plus a server-sent event stream.
//!
//! Frames come either from clients (`POST /api/frames`, live mode) or from a
//! recorded trace pumped in real time scaled by a speed factor.

mod error;
pub mod hub;
mod routes;

use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use serde::Serialize;
use snapscript::detector::FormatError;
use snapscript::ids::IdGenerator;
use snapscript::wire::ConsoleLevel;
use snapscript::{load_trace_file, EventMsg, Frame, SceneTrace, Session, SessionError, Store};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

pub use error::ApiError;
pub use hub::EventHub;
pub use routes::router;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Live,
    Trace,
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
    pub store_dir: PathBuf,
    /// Replay this trace instead of accepting frames over HTTP.
    pub trace: Option<PathBuf>,
    /// Playback rate for the trace; 2.0 plays twice as fast.
    pub speed: f64,
    /// Derive record ids from this seed instead of random UUIDs.
    pub id_seed: Option<u64>,
    /// Events kept for clients resuming with `since` or `Last-Event-ID`.
    pub history: usize,
}

impl ServeConfig {
    pub fn new(store_dir: impl Into<PathBuf>) -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            store_dir: store_dir.into(),
            trace: None,
            speed: 1.0,
            id_seed: None,
            history: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error("bad trace: {0}")]
    Format(#[from] FormatError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Shared {
    session: Mutex<Session>,
    hub: EventHub,
    mode: Mode,
    frames_ingested: AtomicU64,
    trace_done: AtomicBool,
    shutdown: watch::Receiver<bool>,
}

/// Handle shared by all request handlers.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(session: Session, mode: Mode, history: usize, shutdown: watch::Receiver<bool>) -> Self {
        Self {
            shared: Arc::new(Shared {
                session: Mutex::new(session),
                hub: EventHub::new(history),
                mode,
                frames_ingested: AtomicU64::new(0),
                trace_done: AtomicBool::new(mode == Mode::Live),
                shutdown,
            }),
        }
    }

    pub fn session(&self) -> MutexGuard<'_, Session> {
        self.shared.session.lock().unwrap()
    }

    pub fn hub(&self) -> &EventHub {
        &self.shared.hub
    }

    pub fn mode(&self) -> Mode {
        self.shared.mode
    }

    pub fn frames_ingested(&self) -> u64 {
        self.shared.frames_ingested.load(Ordering::SeqCst)
    }

    pub fn trace_done(&self) -> bool {
        self.shared.trace_done.load(Ordering::SeqCst)
    }

    pub fn shutdown_signal(&self) -> watch::Receiver<bool> {
        self.shared.shutdown.clone()
    }

    /// Runs one session operation and publishes its events before the
    /// session lock is released, so stream order matches mutation order.
    pub fn mutate<R>(
        &self,
        op: impl FnOnce(&mut Session) -> Result<(R, Vec<EventMsg>), SessionError>,
    ) -> Result<R, ApiError> {
        let mut session = self.session();
        let (out, events) = op(&mut session)?;
        self.hub().publish(events);
        Ok(out)
    }

    /// Ingests a frame; returns how many lifecycle events it produced.
    pub fn ingest(&self, frame: &Frame) -> Result<usize, ApiError> {
        let mut session = self.session();
        let out = session.ingest(frame)?;
        let n = out.events.len();
        self.hub().publish(std::iter::once(out.overlay).chain(out.events));
        self.shared.frames_ingested.fetch_add(1, Ordering::SeqCst);
        Ok(n)
    }
}

pub struct RunningServer {
    addr: SocketAddr,
    app: AppState,
    stop: watch::Sender<bool>,
    server: JoinHandle<io::Result<()>>,
    pump: Option<JoinHandle<()>>,
}

impl RunningServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> &AppState {
        &self.app
    }

    /// Ends event streams, stops the trace pump and waits for the listener.
    pub async fn shutdown(self) -> io::Result<()> {
        let _ = self.stop.send(true);
        if let Some(p) = self.pump {
            p.abort();
        }
        self.server.await.map_err(io::Error::other)?
    }

    /// Serves until `signal` resolves.
    pub async fn run_until(self, signal: impl std::future::Future<Output = ()>) -> io::Result<()> {
        signal.await;
        self.shutdown().await
    }
}

/// Opens the store, loads the trace if any, binds and starts serving.
pub async fn start(config: ServeConfig) -> Result<RunningServer, ServeError> {
    if !(config.speed.is_finite() && config.speed > 0.0) {
        return Err(ServeError::Config(format!("speed must be positive, got {}", config.speed)));
    }
    let trace = config.trace.as_ref().map(load_trace_file).transpose()?;
    let mut store = Store::open(&config.store_dir).map_err(SessionError::from)?;
    if let Some(seed) = config.id_seed {
        store = store.with_ids(IdGenerator::seeded(seed));
    }
    let session = Session::new(store)?;
    let addr = SocketAddr::new(config.host, config.port);
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    let addr = listener.local_addr()?;

    let (stop, stop_rx) = watch::channel(false);
    let mode = if trace.is_some() { Mode::Trace } else { Mode::Live };
    let app = AppState::new(session, mode, config.history, stop_rx.clone());
    let mut on_stop = stop_rx.clone();
    let routes = router(app.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, routes)
            .with_graceful_shutdown(async move {
                let _ = on_stop.changed().await;
            })
            .await
    });
    let pump = trace.map(|t| tokio::spawn(pump(app.clone(), t, config.speed)));
    Ok(RunningServer {
        addr,
        app,
        stop,
        server,
        pump,
    })
}

/// Feeds trace frames to the session, each at its offset from the first
/// frame divided by `speed`.
async fn pump(app: AppState, trace: SceneTrace, speed: f64) {
    let start = tokio::time::Instant::now();
    let t0 = trace.frames.first().map_or(0, |f| f.t_ms);
    for frame in trace.frames() {
        let offset = Duration::from_secs_f64((frame.t_ms - t0) as f64 / 1000.0 / speed);
        tokio::time::sleep_until(start + offset).await;
        if let Err(e) = app.ingest(&frame) {
            app.hub().publish([EventMsg::Console {
                t_ms: frame.t_ms,
                level: ConsoleLevel::Error,
                attachment_id: None,
                text: format!("frame {}: {}", frame.frame_id, e.message),
                line: None,
                col: None,
            }]);
        }
    }
    app.shared.trace_done.store(true, Ordering::SeqCst);
}
