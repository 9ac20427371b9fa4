//! `plateforge`: plan implants, inspect inputs, or host the planning service.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use plateforge::baseline::DEFAULT_STEP_MM;
use plateforge::catalog::load_catalog;
use plateforge::implant::ImplantError;
use plateforge::pipeline::{plan, PlanError};
use plateforge::stl::{load_stl, save_stl, StlFormat};
use plateforge::{Anatomy, Catalog, PlanRequest, Vec3};
use plateforge_service::{router, AppState};

const CATALOG_ENV: &str = "PLATEFORGE_CATALOG";

/// Exit statuses.
mod exit {
    pub const MALFORMED_INPUT: u8 = 1;
    pub const BASELINE_TOO_SHORT: u8 = 2;
    pub const UNKNOWN_MODEL: u8 = 3;
    pub const PLANNING_FAILED: u8 = 4;
    pub const USAGE: u8 = 64;
}

#[derive(Parser)]
#[command(name = "plateforge", version, about = "Surface-conforming miniplate planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one implant and write it as STL.
    Plan(PlanArgs),
    /// Print catalog or mesh information as JSON.
    Info(InfoArgs),
    /// Serve the planning API on localhost.
    Serve(ServeArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Seed point `x,y,z` in mm.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    seed: Vec3,
    /// Wheel angle in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    angle: f64,
    #[arg(long)]
    model: String,
    /// Marker spacing in mm.
    #[arg(long, default_value_t = DEFAULT_STEP_MM)]
    step: f64,
    #[arg(long, default_value = "implant.stl")]
    out: PathBuf,
    /// Print a JSON summary on stdout.
    #[arg(long)]
    report: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InfoArgs {
    #[arg(long)]
    catalog: bool,
    #[arg(long)]
    mesh: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load_mesh(path: &Path) -> Result<plateforge::stl::StlImport<f64>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::new(exit::MALFORMED_INPUT, format!("{}: {e}", path.display())))?;
    let import = load_stl::<f64>(&bytes).map_err(|e| Failure::new(exit::MALFORMED_INPUT, format!("{}: {e}", path.display())))?;
    if import.dropped_degenerate > 0 {
        eprintln!("warning: dropped {} degenerate facets", import.dropped_degenerate);
    }
    Ok(import)
}

fn load_anatomy(path: &Path) -> Result<Anatomy, Failure> {
    let import = load_mesh(path)?;
    Anatomy::new(import.mesh).map_err(|e| Failure::new(exit::MALFORMED_INPUT, e.to_string()))
}

fn catalog() -> Result<Catalog, Failure> {
    let Some(path) = std::env::var_os(CATALOG_ENV) else {
        return Ok(Catalog::default());
    };
    let path = PathBuf::from(path);
    let bytes = std::fs::read(&path).map_err(|e| Failure::new(exit::UNKNOWN_MODEL, format!("{}: {e}", path.display())))?;
    load_catalog(&bytes).map_err(|e| Failure::new(exit::UNKNOWN_MODEL, format!("{}: {e}", path.display())))
}

fn cmd_plan(args: PlanArgs) -> Outcome {
    let catalog = catalog()?;
    catalog
        .find(&args.model)
        .map_err(|e| Failure::new(exit::UNKNOWN_MODEL, e.to_string()))?;
    let anatomy = load_anatomy(&args.mesh)?;
    let req = PlanRequest {
        click: args.seed,
        wheel_angle: args.angle.to_radians(),
        model_id: args.model,
        step: args.step,
    };
    let result = plan(&anatomy, &catalog, &req).map_err(|e| {
        let code = match e {
            PlanError::Implant(ImplantError::BaselineTooShort { .. }) => exit::BASELINE_TOO_SHORT,
            PlanError::Catalog(_) => exit::UNKNOWN_MODEL,
            _ => exit::PLANNING_FAILED,
        };
        Failure::new(code, e.to_string())
    })?;
    std::fs::write(&args.out, save_stl(&result.implant.mesh, StlFormat::Binary))
        .map_err(|e| Failure::new(exit::PLANNING_FAILED, format!("{}: {e}", args.out.display())))?;
    if args.report {
        println!("{}", serde_json::to_string(&result.report()).expect("report serializes"));
    }
    Ok(())
}

fn cmd_info(args: InfoArgs) -> Outcome {
    if args.catalog {
        println!("{}", catalog()?.to_json());
        return Ok(());
    }
    let path = args.mesh.expect("clap enforces one of the flags");
    let import = load_mesh(&path)?;
    let bb = import.mesh.bounding_box();
    let doc = json!({
        "faces": import.mesh.face_count(),
        "vertices": import.mesh.vertices().len(),
        "bbox": { "min": bb.min, "max": bb.max },
        "bbox_diagonal_mm": bb.diagonal(),
        "dropped_degenerate": import.dropped_degenerate,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("info serializes"));
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Outcome {
    let catalog = catalog()?;
    let anatomy = load_anatomy(&args.mesh)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(exit::MALFORMED_INPUT, e.to_string()))?;
    rt.block_on(async move {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::new(exit::MALFORMED_INPUT, format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map(|a| a.to_string()).unwrap_or(addr);
        eprintln!("listening on http://{local}");
        let state = AppState::new(Some(anatomy), catalog, &args.mesh.display().to_string());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        plateforge_service::run(listener, router(state), shutdown)
            .await
            .map_err(|e| Failure::new(exit::MALFORMED_INPUT, e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Info(a) => cmd_info(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
