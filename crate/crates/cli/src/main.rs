use std::path::PathBuf;
use std::process::ExitCode;

use brownian_lab::harness::{run, selftest, ExperimentConfig, ExperimentKind, Shape};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "brownian-lab", version, about = "Monte Carlo experiments on the complement of a Brownian path")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated path durations.
    #[arg(long, value_delimiter = ',')]
    s: Vec<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Ball,
    Segment,
    Path,
}

#[derive(Subcommand)]
enum Command {
    /// Expected heat content E(s, t) over s x t grids.
    HeatContent {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        /// Fixed voxel size (requires --dt).
        #[arg(long)]
        grid_h: Option<f64>,
        /// Voxel size relative to sqrt(min(s, t)).
        #[arg(long)]
        h_rel: Option<f64>,
    },
    /// Mean inradius of the torus cut by a path.
    Inradius {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Cover times against inradius exceedances.
    CoverTime {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Simulated time as a multiple of the largest s.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Newtonian capacity in R^3 by walk-on-spheres.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        shape: Option<ShapeArg>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        delta_list: Vec<f64>,
        #[arg(long)]
        walkers: Option<usize>,
        /// Ball radius or segment length.
        #[arg(long)]
        size: Option<f64>,
    },
    /// Smallest Dirichlet eigenvalue off a small ball or a Brownian path.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Inradius/eigenvalue probes of conjectured large-s laws (not gated).
    ProbeConjectures {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Fast sanity checks against exact oracles.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn base(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if cfg.kind != kind {
                return Err(format!("{} describes a {:?} experiment", path.display(), cfg.kind));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(v) = common.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = common.replicas {
        cfg.replicas = v;
    }
    if let Some(v) = &common.out {
        cfg.output = v.clone();
    }
    if let Some(v) = common.m {
        cfg.m = v;
    }
    if !common.s.is_empty() {
        cfg.s_list = common.s.clone();
    }
    if let Some(v) = common.dt {
        cfg.dt = Some(v);
    }
    Ok(cfg)
}

fn set_threads(threads: Option<usize>) -> Result<(), String> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn build(command: Command) -> Result<Option<ExperimentConfig>, String> {
    let cfg = match command {
        Command::HeatContent { common, t, grid_h, h_rel } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::HeatContent, &common)?;
            if !t.is_empty() {
                cfg.t_list = t;
            }
            cfg.h = grid_h.or(cfg.h);
            cfg.h_rel = h_rel.or(cfg.h_rel);
            cfg
        }
        Command::Inradius { common, grid } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::Inradius, &common)?;
            cfg.g = grid.or(cfg.g);
            cfg
        }
        Command::CoverTime { common, grid, eps, horizon } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::CoverTime, &common)?;
            cfg.g = grid.or(cfg.g);
            if !eps.is_empty() {
                cfg.eps_list = eps;
            }
            cfg.horizon_factor = horizon.or(cfg.horizon_factor);
            cfg
        }
        Command::Capacity {
            common,
            shape,
            delta,
            delta_list,
            walkers,
            size,
        } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::Capacity, &common)?;
            if let Some(shape) = shape {
                cfg.shape = Some(match shape {
                    ShapeArg::Ball => Shape::Ball,
                    ShapeArg::Segment => Shape::Segment,
                    ShapeArg::Path => Shape::Path,
                });
            }
            cfg.delta = delta.or(cfg.delta);
            if !delta_list.is_empty() {
                cfg.delta_list = delta_list;
            }
            if let Some(w) = walkers {
                cfg.walkers = w;
            }
            cfg.size = size.or(cfg.size);
            cfg
        }
        Command::Spectrum { common, grid, eps, tol } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::Spectrum, &common)?;
            cfg.g = grid.or(cfg.g);
            if !eps.is_empty() {
                cfg.eps_list = eps;
            }
            if let Some(t) = tol {
                cfg.tol = t;
            }
            cfg
        }
        Command::ProbeConjectures { common, grid, tol } => {
            set_threads(common.threads)?;
            let mut cfg = base(ExperimentKind::ConjectureProbe, &common)?;
            cfg.g = grid.or(cfg.g);
            if let Some(t) = tol {
                cfg.tol = t;
            }
            cfg
        }
        Command::Selftest { threads } => {
            set_threads(threads)?;
            return Ok(None);
        }
    };
    Ok(Some(cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build(cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(cfg) = cfg else {
        let results = selftest();
        let mut ok = true;
        for r in &results {
            println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            ok &= r.passed;
        }
        return if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    };
    match run(&cfg) {
        Ok(out) => {
            println!("{}", out.csv.display());
            println!("{}", out.summary.display());
            for p in &out.plots {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
