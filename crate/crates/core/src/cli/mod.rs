//! The `kl` command line: case files in, JSON reports and CSV fields out.

pub mod config;
pub mod run;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, parse_str, CaseConfig};
pub use run::{build_model, run_case, CaseOutcome, CaseReport, Command, Model, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "kl", version, about = "Kirchhoff-Love plate and shell solver with duality certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Minimize the energy.
    Solve(CaseArgs),
    /// Minimize, then build and check the dual certificate.
    Certify(CaseArgs),
    /// Least-norm load tensor.
    #[command(name = "build-t0")]
    BuildT0(CaseArgs),
    /// Sample the reduced functional along random rays.
    #[command(name = "probe-coercivity")]
    ProbeCoercivity(CaseArgs),
    /// Metric and curvature diagnostics of the middle surface.
    #[command(name = "geometry-check")]
    GeometryCheck(CaseArgs),
}

#[derive(Args, Debug)]
pub struct CaseArgs {
    /// Case files.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Output directory. With several cases each gets a subdirectory named
    /// after its file.
    #[arg(long, default_value = "kl-out")]
    pub out: PathBuf,
    /// Write CSV field dumps next to the report.
    #[arg(long)]
    pub dump_fields: bool,
    /// Cases run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn init_logging() {
    let level = match std::env::var("KL_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Error,
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") | Err(_) => log::LevelFilter::Info,
        Ok(other) => {
            eprintln!("KL_LOG={other} not recognized (quiet, info, debug); using info");
            log::LevelFilter::Info
        }
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn run_one(cmd: Command, path: &PathBuf, out: PathBuf, dump: bool) -> (i32, String) {
    let cfg = match parse_config(path) {
        Ok(c) => c,
        Err(e) => return (1, format!("{}: error[{}]: {e}", path.display(), e.code())),
    };
    let start = std::time::Instant::now();
    match run_case(cmd, &cfg, &out, dump) {
        Ok(o) => {
            log::info!("{}: finished in {:.2?}", path.display(), start.elapsed());
            let status = match (&o.error, &o.report.verdict) {
                (Some(e), _) => format!("error[{}]: {e}", e.code()),
                (None, Some(v)) => v.clone(),
                (None, None) => "ok".to_string(),
            };
            (o.exit, format!("{}: {status} ({})", path.display(), o.report_path.display()))
        }
        Err(e) => (1, format!("{}: error[{}]: {e}", path.display(), e.code())),
    }
}

/// Runs the parsed command line and returns the exit status: 0 on success,
/// 2 when a certificate was refused, 1 on errors.
pub fn run(cli: Cli) -> i32 {
    init_logging();
    let (cmd, args) = match cli.command {
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Certify(a) => (Command::Certify, a),
        Sub::BuildT0(a) => (Command::BuildT0, a),
        Sub::ProbeCoercivity(a) => (Command::ProbeCoercivity, a),
        Sub::GeometryCheck(a) => (Command::GeometryCheck, a),
    };
    let n = args.configs.len();
    let out_for = |p: &PathBuf| {
        if n == 1 {
            args.out.clone()
        } else {
            args.out.join(p.file_stem().unwrap_or_default())
        }
    };
    let results: Mutex<Vec<Option<(i32, String)>>> = Mutex::new(vec![None; n]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.clamp(1, n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let p = &args.configs[i];
                let r = run_one(cmd, p, out_for(p), args.dump_fields);
                results.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    let mut code = 0;
    for (c, line) in results.into_inner().expect("result lock").into_iter().flatten() {
        if c == 0 {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
        code = match (code, c) {
            (1, _) | (_, 1) => 1,
            (a, b) => a.max(b),
        };
    }
    code
}
