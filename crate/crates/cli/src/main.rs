use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use clap::{Parser, Subcommand, ValueEnum};
use fractile::analysis::{analyze_full, ExampleRecord};
use fractile::export::{export_outcome_dot, export_record};
use fractile::field::euclid_triples;
use fractile::ifs::IfsSpec;
use fractile::neighbor::{BuildOutcome, Limits};
use fractile::render::{render, Coloring, Depth, RenderRequest, Window};
use fractile::search::{run_search_with, SearchConfig};
use fractile_service::ServiceConfig;

/// Exit status for invalid input of any kind.
const EXIT_INVALID: u8 = 1;
const EXIT_TOO_COMPLEX: u8 = 2;
const EXIT_OSC: u8 = 3;

#[derive(Parser)]
#[command(name = "fractile", version, about = "Neighbor graphs, topology and dimension of planar self-similar sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Caps {
    #[arg(long, default_value_t = Limits::default().max_types)]
    max_types: usize,
    #[arg(long, default_value_t = Limits::default().max_candidates)]
    max_candidates: usize,
}

impl Caps {
    fn limits(&self) -> Limits {
        Limits {
            max_types: self.max_types,
            max_candidates: self.max_candidates,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ColoringArg {
    Mono,
    First,
    Second,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one IFS spec (`-` reads stdin).
    Analyze {
        spec: PathBuf,
        #[command(flatten)]
        caps: Caps,
        /// Print the full record (default).
        #[arg(long, conflicts_with = "summary")]
        json: bool,
        /// Print a one-line summary instead.
        #[arg(long)]
        summary: bool,
    },
    /// Run a search and write accepted records as JSON lines.
    Search {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rasterise the attractor to PPM, or PNG when `--out` ends in `.png`.
    Render {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `cx,cy,half_width` in standard coordinates.
        #[arg(long, value_parser = parse_window)]
        window: Option<Window>,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long)]
        height: Option<u32>,
        #[arg(long, value_enum, default_value_t = ColoringArg::Mono)]
        coloring: ColoringArg,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Print the neighbor graph in DOT.
    ExportDot {
        spec: PathBuf,
        #[command(flatten)]
        caps: Caps,
    },
    /// Primitive solutions of u² + d·v² = w² with w ≤ bound.
    Triples {
        #[arg(short = 'd')]
        d: u64,
        #[arg(long)]
        bound: u64,
    },
    /// Serve the HTTP API.
    Serve {
        /// Overrides BIND_ADDR.
        #[arg(long)]
        bind: Option<std::net::SocketAddr>,
        /// Overrides COLLECTION_PATH.
        #[arg(long)]
        collection: Option<PathBuf>,
        /// Overrides MAX_WORKERS.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn parse_window(s: &str) -> Result<Window, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [cx, cy, half_width] if half_width > 0.0 => Ok(Window::Explicit { cx, cy, half_width }),
        [_, _, _] => Err("half_width must be positive".into()),
        _ => Err("expected cx,cy,half_width".into()),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }
}

impl From<fractile::Error> for Failure {
    fn from(e: fractile::Error) -> Self {
        match e {
            fractile::Error::Invalid(violations) => Failure::invalid(
                violations
                    .iter()
                    .map(|v| format!("invalid IFS: {v}"))
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            other => Failure::invalid(other),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::invalid(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
    }
}

fn read_spec(path: &Path) -> Result<IfsSpec, Failure> {
    Ok(IfsSpec::from_json(&read_input(path)?)?)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Exit status for outcomes that carry no usable graph.
fn outcome_failure(outcome: &BuildOutcome, record: &ExampleRecord) -> Option<Failure> {
    match outcome {
        BuildOutcome::TooComplex(s) => Some(Failure {
            code: EXIT_TOO_COMPLEX,
            message: format!("too complex: {} candidates explored", s.candidates),
        }),
        BuildOutcome::OscViolation { w, v } => Some(Failure {
            code: EXIT_OSC,
            message: format!("open set condition fails: f_{w:?} = f_{v:?} ({})", record.id),
        }),
        _ => None,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut emit = |text: &str| {
        let _ = writeln!(out, "{text}");
    };
    match cli.command {
        Command::Analyze {
            spec,
            caps,
            json: _,
            summary,
        } => {
            let spec = read_spec(&spec)?;
            let (record, outcome) = analyze_full(&spec, caps.limits())?;
            if summary {
                emit(&record.summary_line());
            } else {
                emit(&export_record(&record));
            }
            if let Some(f) = outcome_failure(&outcome, &record) {
                return Err(f);
            }
        }
        Command::Search { config, out, workers } => {
            let config = SearchConfig::from_json(&read_input(&config)?)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .map_err(Failure::invalid)?;
            let report = pool.install(|| {
                run_search_with(&config, &AtomicBool::new(false), |p| {
                    eprintln!("tried {} found {}", p.tried, p.found);
                })
            })?;
            let mut text = String::new();
            for r in &report.records {
                text.push_str(&export_record(r));
                text.push('\n');
            }
            write_output(&out, text.as_bytes())?;
            let s = &report.stats;
            eprintln!(
                "tried={} found={} distinct={} stuck={} elapsed={:.2}s candidates/s={:.1} prune_ratio={:.3} rng={}",
                s.tried, s.found, s.distinct, s.stuck, s.elapsed_secs, s.candidates_per_sec, s.prune_ratio, report.rng
            );
        }
        Command::Render {
            spec,
            out,
            window,
            width,
            height,
            coloring,
            depth,
        } => {
            let spec = read_spec(&spec)?;
            let req = RenderRequest {
                window: window.unwrap_or_default(),
                width,
                height: height.unwrap_or(width),
                coloring: match coloring {
                    ColoringArg::Mono => Coloring::Mono,
                    ColoringArg::First => Coloring::FirstIndex,
                    ColoringArg::Second => Coloring::SecondIndex,
                },
                depth: depth.map(Depth::Fixed).unwrap_or_default(),
            };
            let raster = render(&spec, &req)?;
            let png = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
            let bytes = if png { raster.to_png()? } else { raster.to_ppm() };
            write_output(&out, &bytes)?;
            if raster.capped {
                eprintln!("depth capped at {}", raster.depth);
            }
        }
        Command::ExportDot { spec, caps } => {
            let spec = read_spec(&spec)?;
            let (record, outcome) = analyze_full(&spec, caps.limits())?;
            if let Some(f) = outcome_failure(&outcome, &record) {
                return Err(f);
            }
            if let Some(dot) = export_outcome_dot(&outcome) {
                emit(dot.trim_end());
            }
        }
        Command::Triples { d, bound } => {
            for (u, v, w) in euclid_triples(d, bound)? {
                emit(&format!("{u} {v} {w}"));
            }
        }
        Command::Serve {
            bind,
            collection,
            workers,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(io::stderr)
                .init();
            let mut config = ServiceConfig::from_env().map_err(Failure::invalid)?;
            if let Some(b) = bind {
                config.bind = b;
            }
            if let Some(c) = collection {
                config.collection_path = c;
            }
            if let Some(w) = workers {
                config.max_workers = w;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(Failure::invalid)?;
            runtime
                .block_on(fractile_service::serve(config))
                .map_err(Failure::invalid)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
