//! `settle`: validate scenarios, value views, solve the transect flow, or
//! run the HTTP service.
//!
//! Compute commands are clients of the service. Without `--server` an
//! embedded one is started on a loopback port for the duration of the call.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage error.

use std::io::ErrorKind;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use settle_client::{Client, ClientError, FlowRequest, Px, ViewRequest};
use settle_core::report::to_canonical_json;
use settle_core::scenario::{load_scenario, Scenario};
use settle_service::{AppState, Config};

#[derive(Parser)]
#[command(name = "settle", version, about = "Flow and view evaluation of settlement layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the schema and the layout rules.
    Validate { scenario: PathBuf },
    /// Render one camera and compute its view value.
    View(ViewArgs),
    /// Direction-weighted view value around a point.
    View360(View360Args),
    /// Solve the Stokes flow along the transect and trace streamlines.
    Flow(FlowArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct Target {
    /// Scenario file; not needed with --server.
    #[arg(required_unless_present = "server")]
    scenario: Option<PathBuf>,
    /// Use a running service and its current scenario.
    #[arg(long, conflicts_with = "scenario")]
    server: Option<String>,
}

#[derive(Args)]
struct ViewArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long)]
    camera: String,
    /// Image width and height in pixels.
    #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [320, 240])]
    px: Vec<usize>,
    /// Category image (PPM).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct View360Args {
    #[command(flatten)]
    target: Target,
    #[arg(long, value_name = "X,Y,Z", value_parser = parse_point)]
    point: [f64; 3],
    /// Number of images around the horizon.
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Camera-to-image distance.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Pixel columns per image.
    #[arg(long, default_value_t = 32)]
    px: usize,
    /// Panorama of the category images (PPM).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    target: Target,
    /// Background mesh size (m).
    #[arg(long)]
    h: f64,
    /// Number of streamline seeds along the inlet.
    #[arg(long, default_value_t = 16)]
    seeds: usize,
    /// Velocity and pressure fields (legacy VTK).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Streamline polylines (JSON).
    #[arg(long)]
    streamlines: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory with the UI bundle, served under `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y, z] = parts[..] else {
        return Err(format!("expected x,y,z, got {s:?}"));
    };
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([f(x)?, f(y)?, f(z)?])
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn failure(msg: impl ToString) -> Failure {
    Failure {
        code: 1,
        msg: msg.to_string(),
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match &e {
            ClientError::Api { status, .. } if status.as_u16() == 400 || status.as_u16() == 404 => usage(e.to_string()),
            _ => failure(e),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// A missing file is a usage error, a bad one a failure.
fn load(path: &Path) -> Outcome<Scenario> {
    load_scenario(path).map_err(|e| match e {
        settle_core::Error::Io(io) if io.kind() == ErrorKind::NotFound => usage(format!("{}: no such file", path.display())),
        e => failure(format!("{}: {e}", path.display())),
    })
}

fn threads() -> Outcome<usize> {
    match std::env::var("SETTLE_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!("SETTLE_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Client for `--server`, or for an embedded server on a loopback port.
async fn connect(target: &Target, workers: usize) -> Outcome<Client> {
    if let Some(url) = &target.server {
        return Ok(Client::new(url.clone()));
    }
    let path = target.scenario.as_ref().expect("clap requires a scenario without --server");
    let scenario = load(path)?;
    let config = Config {
        workers,
        ui_dir: None,
        scenario_path: Some(path.clone()),
    };
    let state = AppState::new(scenario, config).map_err(failure)?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(failure)?;
    let addr = listener.local_addr().map_err(failure)?;
    tokio::spawn(settle_service::serve(listener, state));
    Ok(Client::new(format!("http://{addr}")))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome {
    std::fs::write(path, bytes).map_err(|e| failure(format!("{}: {e}", path.display())))
}

/// Canonical report to a file or stdout. The image URL names a server
/// artifact and is left out so reports stay reproducible.
fn emit_report(mut report: Value, path: Option<&Path>) -> Outcome {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("image_url");
    }
    let text = to_canonical_json(&report).map_err(failure)?;
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

async fn fetch_image(client: &Client, report: &Value, out: Option<&Path>) -> Outcome {
    if let (Some(out), Some(url)) = (out, report["image_url"].as_str()) {
        write(out, client.artifact(url).await?)?;
    }
    Ok(())
}

async fn view(a: ViewArgs, workers: usize) -> Outcome {
    let client = connect(&a.target, workers).await?;
    let req = ViewRequest {
        camera: Some(a.camera),
        px: Some(Px::Size([a.px[0], a.px[1]])),
        ..Default::default()
    };
    let report = client.view(&req).await?;
    fetch_image(&client, &report, a.out.as_deref()).await?;
    emit_report(report, a.report.as_deref())
}

async fn view360(a: View360Args, workers: usize) -> Outcome {
    if a.n < 3 {
        return Err(usage("n must be ≥ 3"));
    }
    let client = connect(&a.target, workers).await?;
    let req = ViewRequest {
        point: Some(a.point),
        px: Some(Px::Width(a.px)),
        n: Some(a.n),
        d: Some(a.d),
        ..Default::default()
    };
    let report = client.view(&req).await?;
    fetch_image(&client, &report, a.out.as_deref()).await?;
    emit_report(report, a.report.as_deref())
}

async fn flow(a: FlowArgs, workers: usize) -> Outcome {
    let client = connect(&a.target, workers).await?;
    let job = client.start_flow(&FlowRequest { h: a.h, seeds: Some(a.seeds) }).await?;
    let done = client.wait(&job.id, Duration::from_millis(100)).await?;
    let result = done.result.ok_or_else(|| failure(format!("job {} finished without a result", job.id)))?;
    if let Some(out) = &a.out {
        write(out, client.artifact(&result.field_url).await?)?;
    }
    if let Some(path) = &a.streamlines {
        write(path, to_canonical_json(&result.streamlines).map_err(failure)?)?;
    }
    emit_report(result.report, a.report.as_deref())
}

async fn serve(a: ServeArgs, workers: usize) -> Outcome {
    let scenario = load(&a.scenario)?;
    if let Some(dir) = &a.ui {
        if !dir.is_dir() {
            return Err(usage(format!("{}: not a directory", dir.display())));
        }
    }
    let config = Config {
        workers,
        ui_dir: a.ui,
        scenario_path: Some(a.scenario),
    };
    let state = AppState::new(scenario, config).map_err(failure)?;
    let listener = tokio::net::TcpListener::bind(SocketAddr::new(a.host, a.port)).await.map_err(failure)?;
    println!("listening on http://{}", listener.local_addr().map_err(failure)?);
    tokio::select! {
        r = settle_service::serve(listener, state) => r.map_err(failure),
        _ = tokio::signal::ctrl_c() => Ok(()),
    }
}

fn validate(path: &Path) -> Outcome {
    let s = load(path)?;
    println!("{}: ok ({} houses, {} cameras)", path.display(), s.houses.len(), s.cameras.len());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let workers = threads()?;
    if workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().map_err(failure)?;
    }
    if let Command::Validate { scenario } = &cli.command {
        return validate(scenario);
    }
    let mut rt = tokio::runtime::Builder::new_multi_thread();
    if workers > 0 {
        rt.worker_threads(workers);
    }
    let rt = rt.enable_all().build().map_err(failure)?;
    rt.block_on(async move {
        match cli.command {
            Command::View(a) => view(a, workers).await,
            Command::View360(a) => view360(a, workers).await,
            Command::Flow(a) => flow(a, workers).await,
            Command::Serve(a) => serve(a, workers).await,
            Command::Validate { .. } => unreachable!("handled above"),
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            if f.code == 2 {
                eprintln!("run `settle --help` for usage");
            }
            ExitCode::from(f.code)
        }
    }
}
