use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bernstein_koopman::data_driven::Route;
use bernstein_koopman::error::{Error, Result};
use bernstein_koopman::experiments::{
    cmd_approximate, cmd_bounds, cmd_datadriven, cmd_gen_data, cmd_predict, cmd_table2, EdmdTolerance,
    ExperimentConfig, Frame, PredictRoute, Table,
};

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  2  configuration error (bad flags, files, expressions, unknown system)
  3  numerical failure (escape from the box, point outside the data hull,
     assignment failure, degenerate simplex, rank-zero pseudoinverse)

Environment:
  KB_THREADS  maximum number of worker threads

Systems: van_der_pol, scalar_logistic, product_decay_2d, lotka_volterra,
identity, or the path of a JSON system file.";

#[derive(Parser)]
#[command(name = "kb", version, about = "Bernstein approximation of Koopman operators", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare B_n K f with K f on a dense grid.
    Approximate(Common),
    /// Predict a trajectory by iterating the Koopman matrix.
    Predict(Common),
    /// Error bounds over a sweep of degrees, with measured errors.
    Bounds(Common),
    /// Bernstein versus EDMD trajectories from snapshot data.
    Datadriven(Common),
    /// One-step prediction error under noise, averaged over seeds.
    Table2(Common),
    /// Write snapshot pairs on a jittered lattice.
    GenData(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Native,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Linear,
    Relift,
    Bernstein,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataRouteArg {
    Bernstein,
    Monomial,
}

#[derive(Args)]
struct Common {
    /// Built-in system name or JSON system file.
    #[arg(long)]
    system: Option<String>,
    /// Degree per axis, e.g. 20 or 15,15.
    #[arg(long)]
    degree: Option<String>,
    /// Observable as an expression in x1..xm.
    #[arg(long)]
    observable: Option<String>,
    /// Number of steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot data CSV (x1..xm, y1..ym).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pairing of lattice vertices with data rows, one index per line.
    #[arg(long)]
    perm: Option<PathBuf>,
    /// Comma-separated bound tags (T1..T5, T6a, T6b, T6c, AppA, MeasNoise,
    /// DataFull, DataPartial).
    #[arg(long)]
    bounds: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial state, comma separated.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, value_enum)]
    x0_frame: Option<FrameArg>,
    /// Degrees to sweep, comma separated.
    #[arg(long)]
    sweep: Option<String>,
    /// Noise levels for table2, comma separated.
    #[arg(long)]
    sigmas: Option<String>,
    /// Noise realisations for table2.
    #[arg(long)]
    seeds: Option<usize>,
    /// Grid resolution for moduli of continuity.
    #[arg(long)]
    resolution: Option<usize>,
    /// Dense evaluation grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Model-based prediction scheme.
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// Data-driven prediction scheme.
    #[arg(long, value_enum)]
    data_route: Option<DataRouteArg>,
    /// EDMD singular-value cut-off: a relative tolerance or `standard`.
    #[arg(long)]
    edmd_tol: Option<String>,
    /// Jitter of generated data, in lattice cells.
    #[arg(long)]
    jitter: Option<f64>,
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split([',', ';'])
        .map(|v| v.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} `{v}`"))))
        .collect()
}

fn config(command: &str, c: &Common) -> Result<ExperimentConfig> {
    let default_system = match command {
        "datadriven" | "gen-data" => "lotka_volterra",
        _ => "van_der_pol",
    };
    let mut cfg = ExperimentConfig::new(command, c.system.as_deref().unwrap_or(default_system));
    if command == "datadriven" || command == "gen-data" {
        cfg.degree = vec![15];
        cfg.steps = 10;
    }
    if let Some(d) = &c.degree {
        cfg.degree = list(d, "degree")?;
    }
    cfg.observable = c.observable.clone();
    if let Some(b) = &c.bounds {
        cfg.bounds = b.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(s) = c.steps {
        cfg.steps = s;
    }
    if let Some(s) = c.sigma {
        cfg.sigma = s;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.data = c.data.clone();
    cfg.perm = c.perm.clone();
    cfg.out = c.out.clone();
    if let Some(x) = &c.x0 {
        cfg.x0 = Some(list(x, "coordinate")?);
    }
    if let Some(f) = c.x0_frame {
        cfg.x0_frame = match f {
            FrameArg::Native => Frame::Native,
            FrameArg::Unit => Frame::Unit,
        };
    }
    if let Some(s) = &c.sweep {
        cfg.sweep = Some(list(s, "degree")?);
    }
    if let Some(s) = &c.sigmas {
        cfg.sigmas = Some(list(s, "noise level")?);
    }
    if let Some(s) = c.seeds {
        cfg.seeds = s;
    }
    cfg.resolution = c.resolution;
    cfg.grid = c.grid;
    if let Some(r) = c.route {
        cfg.route = match r {
            RouteArg::Linear => PredictRoute::Linear,
            RouteArg::Relift => PredictRoute::Relift,
            RouteArg::Bernstein => PredictRoute::Bernstein,
        };
    }
    if let Some(r) = c.data_route {
        cfg.data_route = match r {
            DataRouteArg::Bernstein => Route::Bernstein,
            DataRouteArg::Monomial => Route::Monomial,
        };
    }
    if let Some(t) = &c.edmd_tol {
        cfg.edmd_tol = t.parse::<EdmdTolerance>()?;
    }
    if let Some(j) = c.jitter {
        cfg.jitter = j;
    }
    for p in [&cfg.data, &cfg.perm].into_iter().flatten() {
        if !p.exists() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn emit_table(cfg: &ExperimentConfig, table: &Table) -> Result<()> {
    emit(cfg, |w| table.write(cfg, w))
}

fn run(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::Approximate(c) => ("approximate", c),
        Command::Predict(c) => ("predict", c),
        Command::Bounds(c) => ("bounds", c),
        Command::Datadriven(c) => ("datadriven", c),
        Command::Table2(c) => ("table2", c),
        Command::GenData(c) => ("gen-data", c),
    };
    let cfg = config(name, common)?;
    match name {
        "approximate" => {
            let r = cmd_approximate(&cfg)?;
            emit_table(&cfg, &r.table)?;
            eprintln!("sup_error: {:.6e}", r.sup_error);
        }
        "predict" => {
            let r = cmd_predict(&cfg)?;
            emit_table(&cfg, &r.table)?;
            for (k, e) in r.errors.iter().enumerate() {
                eprintln!("step {}: error {:.4e}", k + 1, e);
            }
        }
        "bounds" => {
            let r = cmd_bounds(&cfg)?;
            emit_table(&cfg, &r.table)?;
            eprintln!("{} bound rows, {} measured rows", r.reports.len(), r.measured.len());
        }
        "datadriven" => {
            let r = cmd_datadriven(&cfg)?;
            emit_table(&cfg, &r.table)?;
            for t in &r.trajectories {
                eprintln!(
                    "{} ({}): max error {:.4e}",
                    t.method,
                    if t.noisy { "noisy" } else { "clean" },
                    t.max_error()
                );
            }
        }
        "table2" => {
            let r = cmd_table2(&cfg)?;
            emit_table(&cfg, &r.table)?;
            for c in &r.cells {
                eprintln!("n={} sigma={}: {:.4e}", c.n, c.sigma, c.mean_error);
            }
        }
        "gen-data" => {
            let d = cmd_gen_data(&cfg)?;
            emit(&cfg, |w| {
                writeln!(w, "# config: {}", cfg.to_json())?;
                d.write_csv(w)
            })?;
            eprintln!("{} pairs", d.len());
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("KB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
