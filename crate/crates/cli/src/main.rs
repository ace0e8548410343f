//! `snapscript` command-line tool.
//!
//! Exit codes: 0 ok, 2 input format error, 3 script error, 4 runtime error.

mod text;

use std::io::{self, Read, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snapscript::replay::{replay, Anchor, ReplayError, ReplayOptions};
use snapscript::script::{check, parse_source, serialize, StateLookup, SyntaxError};
use snapscript::wire::to_jsonl;
use snapscript::{load_trace_file, Store};
use snapscript_server::{start, ServeConfig, ServeError};

#[derive(Parser)]
#[command(name = "snapscript", version, about = "Object-triggered snippets: serve, replay, check, fmt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP and event-stream service.
    Serve(ServeArgs),
    /// Replay a scene trace against one program offline and print the event log.
    Replay(ReplayArgs),
    /// Parse a script and report static diagnostics.
    Check(CheckArgs),
    /// Print a script in canonical form or with state labels.
    Fmt(FmtArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Store directory, created if missing.
    #[arg(long, default_value = "snapscript-store")]
    store: PathBuf,
    /// Replay this trace instead of accepting frames over HTTP.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Trace playback rate (2 plays twice as fast).
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Derive record ids from a seed for reproducible runs.
    #[arg(long)]
    id_seed: Option<u64>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("anchor").required(true))]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Program source file.
    #[arg(long)]
    program: PathBuf,
    /// Anchor the attachment to the first state with this category.
    #[arg(long, group = "anchor")]
    anchor_category: Option<String>,
    /// Anchor the attachment to this state id.
    #[arg(long, group = "anchor")]
    anchor_state: Option<String>,
    #[arg(long, default_value_t = 60.0)]
    lifespan_min: f64,
    #[arg(long, default_value_t = 1)]
    max_executions: u32,
    /// Attachment name.
    #[arg(long, default_value = "replay")]
    name: String,
    /// Resolve descriptors against this store's states instead of one
    /// synthetic state per trace category (id = category).
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    id_seed: u64,
    /// Write the log here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Script file, or `-` for stdin.
    file: PathBuf,
    /// Resolve state descriptors against this store.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FmtMode {
    Canonical,
    TextView,
}

#[derive(Args)]
struct FmtArgs {
    /// Script file, or `-` for stdin.
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = FmtMode::Canonical)]
    mode: FmtMode,
    /// Store used to label descriptors in text-view mode.
    #[arg(long)]
    store: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn format(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
    fn script(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
    fn runtime(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => serve(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Check(a) => cmd_check(a),
        Command::Fmt(a) => cmd_fmt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn read_source(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::format(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
    }
}

fn open_store(path: &Path) -> Result<Store, Failure> {
    if !path.is_dir() {
        return Err(Failure::format(format!("{}: no such store directory", path.display())));
    }
    Store::open(path).map_err(|e| Failure::format(format!("{}: {e}", path.display())))
}

fn syntax_failure(path: &Path, e: &SyntaxError) -> Failure {
    let (line, col) = e.position();
    Failure::script(format!("{}:{line}:{col}: {}", path.display(), e.message()))
}

fn write_out(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::runtime(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::runtime(format!("stdout: {e}"))),
    }
}

fn serve(a: ServeArgs) -> CmdResult {
    let cfg = ServeConfig {
        host: a.host,
        port: a.port,
        store_dir: a.store,
        trace: a.trace,
        speed: a.speed,
        id_seed: a.id_seed,
        ..ServeConfig::new("")
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::runtime(e.to_string()))?;
    rt.block_on(async {
        let server = start(cfg).await.map_err(|e| match e {
            ServeError::Format(_) | ServeError::Config(_) => Failure::format(e.to_string()),
            other => Failure::runtime(other.to_string()),
        })?;
        println!("listening on http://{}", server.local_addr());
        let _ = io::stdout().flush();
        server
            .run_until(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::runtime(e.to_string()))
    })
}

fn cmd_replay(a: ReplayArgs) -> CmdResult {
    let trace = load_trace_file(&a.trace).map_err(|e| Failure::format(format!("{}: {e}", a.trace.display())))?;
    let source = read_source(&a.program)?;
    let anchor = match (a.anchor_category, a.anchor_state) {
        (Some(c), _) => Anchor::Category(c),
        (None, Some(s)) => Anchor::StateId(s),
        (None, None) => unreachable!("clap requires one anchor"),
    };
    let mut opts = ReplayOptions::new(anchor, a.lifespan_min, a.max_executions);
    opts.name = a.name;
    opts.id_seed = a.id_seed;
    if let Some(dir) = &a.store {
        opts.registry = Some(open_store(dir)?.list_states());
    }
    let events = replay(&trace, &source, &opts).map_err(|e| match e {
        ReplayError::Syntax(s) => syntax_failure(&a.program, &s),
        ReplayError::Runtime(m) => Failure::runtime(m),
    })?;
    write_out(a.out.as_deref(), &to_jsonl(&events))
}

fn cmd_check(a: CheckArgs) -> CmdResult {
    let source = read_source(&a.file)?;
    let module = parse_source(&source).map_err(|e| syntax_failure(&a.file, &e))?;
    let store = a.store.as_deref().map(open_store).transpose()?;
    let diags = check(&module, store.as_ref().map(|s| s as &dyn StateLookup));
    if diags.is_empty() {
        return Ok(());
    }
    let report: Vec<String> = diags.iter().map(|d| format!("{}:{d}", a.file.display())).collect();
    Err(Failure::script(report.join("\n")))
}

fn cmd_fmt(a: FmtArgs) -> CmdResult {
    let source = read_source(&a.file)?;
    let module = parse_source(&source).map_err(|e| syntax_failure(&a.file, &e))?;
    let out = match a.mode {
        FmtMode::Canonical => serialize(&module),
        FmtMode::TextView => {
            let store = a.store.as_deref().map(open_store).transpose()?;
            text::text_view(&module, store.as_ref().map(|s| s as &dyn StateLookup))
                .map_err(|e| Failure::script(format!("{}:{e}", a.file.display())))?
        }
    };
    write_out(None, &out)
}
