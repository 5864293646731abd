//! `heave`: run simulations, apply the DtN map, evaluate extensions, dump
//! kernels and run the verification suite.
//!
//! Exit codes: 0 success, 1 failed check or solver failure, 2 usage or
//! configuration error. `HEAVE_THREADS` caps the worker threads used for
//! assembly and field evaluation.

use clap::{Parser, Subcommand};
use heave::cli_io::{self, RouteName, SimConfig};
use heave::coupling::{self, heave_kernel, Record, Snapshot};
use heave::grid_space::SurfaceFunction;
use heave::omega_dtn::{default_line, dirichlet_extend_omega, lambda_omega_direct, lambda_omega_reflect};
use heave::verify::{self, Level, SuiteConfig};
use heave::Error;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "heave", version, about = "Linear water waves coupled to a heaving half-cylinder")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-step a configuration; writes trajectory, snapshots and manifest.
    Simulate { config: PathBuf },
    /// Run the verification suite.
    Verify {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.jsonl and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply Λ_Ω to nodal values read from a CSV.
    Dtn {
        config: PathBuf,
        #[arg(long)]
        apply: PathBuf,
    },
    /// Evaluate D_Ω v₀ at field points read from a CSV (x,y).
    Extend {
        config: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
    /// Write the heave kernel K and the assembled DtN matrix.
    Kernel { config: PathBuf },
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::Divergence { .. } => Failure::Check(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.cmd {
        Cmd::Simulate { config } => simulate(&config),
        Cmd::Verify { full, seed, out, .. } => run_verify(if full { Level::Full } else { Level::Quick }, seed, out),
        Cmd::Dtn { config, apply } => dtn(&config, &apply),
        Cmd::Extend { config, points } => extend(&config, &points),
        Cmd::Kernel { config } => kernel(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(s) = std::env::var("HEAVE_THREADS") else { return Ok(()) };
    let n: usize = s.trim().parse().map_err(|_| format!("HEAVE_THREADS must be a positive integer (got `{s}`)"))?;
    if n == 0 {
        return Err("HEAVE_THREADS must be a positive integer (got 0)".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn load(path: &Path) -> Result<SimConfig, Failure> {
    Ok(cli_io::parse_config(path)?)
}

fn out_dir(cfg: &SimConfig) -> Result<&Path, Failure> {
    std::fs::create_dir_all(&cfg.output.dir).map_err(Error::from)?;
    Ok(&cfg.output.dir)
}

fn manifest(command: &str, cfg: &SimConfig, extra: serde_json::Value, started: Instant) -> serde_json::Value {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "threads": rayon::current_num_threads(),
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    if let (Some(m), serde_json::Value::Object(extra)) = (m.as_object_mut(), extra) {
        m.extend(extra);
    }
    m
}

fn simulate(path: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = load(path)?;
    let dir = out_dir(&cfg)?;
    let tr = coupling::simulate(&cfg)?;
    cli_io::write_csv(&dir.join("trajectory.csv"), &Record::HEADER, tr.records.iter().map(Record::row))?;
    let mut snaps = vec![];
    for (k, s) in tr.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        cli_io::write_csv(&dir.join(&name), &Snapshot::HEADER, s.rows())?;
        snaps.push(json!({ "file": name, "t": s.t }));
    }
    let mut m = tr.manifest.clone();
    m["command"] = json!("simulate");
    m["threads"] = json!(rayon::current_num_threads());
    m["snapshots"] = json!(snaps);
    m["elapsed_seconds"] = json!(started.elapsed().as_secs_f64());
    cli_io::write_json(&dir.join("manifest.json"), &m)?;
    println!("wrote {} records to {}", tr.records.len(), dir.join("trajectory.csv").display());
    Ok(())
}

fn run_verify(level: Level, seed: Option<u64>, out: Option<PathBuf>) -> Outcome {
    let started = Instant::now();
    let mut cfg = SuiteConfig::new(level);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let reports = verify::run_suite(&cfg)?;
    let lines: Vec<String> = reports.iter().map(|r| r.json_line()).collect();
    for l in &lines {
        println!("{l}");
    }
    print!("{}", verify::summary_table(&reports));
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(Error::from)?;
        std::fs::write(dir.join("report.jsonl"), lines.join("\n") + "\n").map_err(Error::from)?;
        let m = json!({
            "command": "verify",
            "version": env!("CARGO_PKG_VERSION"),
            "suite": cfg,
            "tolerance_table_version": verify::TOLERANCE_TABLE_VERSION,
            "tolerances": verify::TOLERANCES,
            "checks": reports.len(),
            "failed": reports.iter().filter(|r| !r.passed).count(),
            "threads": rayon::current_num_threads(),
            "elapsed_seconds": started.elapsed().as_secs_f64(),
        });
        cli_io::write_json(&dir.join("manifest.json"), &m)?;
    }
    match reports.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        k => Err(Failure::Check(format!("{k} check(s) failed"))),
    }
}

fn dtn(path: &Path, apply: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = load(path)?;
    let grid = std::sync::Arc::new(heave::grid_space::build_surface_grid(cfg.l, cfg.n)?);
    let vals = cli_io::read_vector_csv(apply)?;
    if vals.len() != grid.len() {
        return Err(Failure::Usage(format!(
            "{} has {} values but the grid (L = {}, n = {}) has {} nodes",
            apply.display(),
            vals.len(),
            cfg.l,
            cfg.n,
            grid.len()
        )));
    }
    let v = SurfaceFunction::new(grid.clone(), vals)?;
    let lam = match cfg.route {
        RouteName::Variational => {
            let op = heave::omega_dtn::assemble_dtn(&grid, &heave::omega_dtn::DtnRoute::Variational, false)?;
            op.apply_fn(&v)?
        }
        RouteName::Reflect => lambda_omega_reflect(&v, &default_line(&grid)),
        RouteName::Direct => lambda_omega_direct(&v)?.lambda,
    };
    let dir = out_dir(&cfg)?;
    let x = grid.nodes();
    cli_io::write_csv(
        &dir.join("dtn.csv"),
        &["x", "v", "lambda_v"],
        (0..x.len()).map(|i| vec![x[i], v.values()[i], lam.values()[i]]),
    )?;
    let m = manifest("dtn", &cfg, json!({ "input": apply, "output": "dtn.csv" }), started);
    cli_io::write_json(&dir.join("manifest.json"), &m)?;
    println!("wrote {}", dir.join("dtn.csv").display());
    Ok(())
}

fn extend(path: &Path, points: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = load(path)?;
    let grid = std::sync::Arc::new(heave::grid_space::build_surface_grid(cfg.l, cfg.n)?);
    let v = SurfaceFunction::new(grid.clone(), cfg.initial.v0.sample(&grid)?)?;
    let pts = cli_io::read_points_csv(points)?;
    let vals = dirichlet_extend_omega(&v, &pts)?;
    let dir = out_dir(&cfg)?;
    cli_io::write_csv(
        &dir.join("extension.csv"),
        &["x", "y", "value"],
        pts.iter().zip(&vals).map(|(p, d)| vec![p.x, p.y, *d]),
    )?;
    let m = manifest("extend", &cfg, json!({ "points": points, "output": "extension.csv" }), started);
    cli_io::write_json(&dir.join("manifest.json"), &m)?;
    println!("wrote {}", dir.join("extension.csv").display());
    Ok(())
}

fn kernel(path: &Path) -> Outcome {
    let started = Instant::now();
    let cfg = load(path)?;
    let mut op = coupling::build_operator_with(&cfg, false)?;
    op.factorize();
    let k = heave_kernel(op.grid());
    let dir = out_dir(&cfg)?;
    let x = op.grid().nodes();
    cli_io::write_csv(&dir.join("kernel.csv"), &["x", "K"], (0..x.len()).map(|i| vec![x[i], k.values()[i]]))?;
    let matrix = cfg.output.dtn_matrix.clone().unwrap_or_else(|| dir.join("dtn_matrix.csv"));
    op.dump(&matrix)?;
    let p = cfg.physics();
    let m = manifest(
        "kernel",
        &cfg,
        json!({
            "kernel": "kernel.csv",
            "dtn_matrix": matrix,
            "operator": op.diagnostics(),
            "p_norm": coupling::p_norm(&p, &op, &k),
            "q_norm": coupling::q_norm(&p, &op).ok(),
        }),
        started,
    );
    cli_io::write_json(&dir.join("manifest.json"), &m)?;
    println!("wrote {} and {}", dir.join("kernel.csv").display(), matrix.display());
    Ok(())
}
