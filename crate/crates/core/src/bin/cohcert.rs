use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use coherence_cert::bounds::VertexCase;
use coherence_cert::optim::OptimizationConfig;
use coherence_cert::report::{self, CsvTable, Document, PatternSource, StateSpec};
use coherence_cert::thresholds::Projection;
use coherence_cert::Result;

#[derive(Parser)]
#[command(name = "cohcert", version, about = "Certify multilevel coherence from interference patterns")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Random restarts per optimization.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Convergence tolerance of the simplex search.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProjectionArg {
    Fixed,
    Optimized,
}

#[derive(Subcommand)]
enum Command {
    /// Certified coherence level from the R_3 ratio of a pattern.
    Certify {
        /// State spec (W:k, PSI:k, werner:k:lambda, vec:a0,...) or a `t,p` CSV file.
        input: String,
        /// Level count used to fit CSV samples.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Moments M_1..M_5 and ratios R_2..R_5 of a pattern.
    Moments {
        input: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Recompute every reference table.
    Tables {
        /// Largest level count of the growth scan.
        #[arg(long, default_value_t = 10)]
        k_max: usize,
    },
    /// Maximize R_n over k-level coherent states.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Vertex tables with constraint and convexity checks.
    VertexCheck {
        /// k3d3, k3_general_generic, k3_general_ratio12 or k4d4; all when omitted.
        #[arg(long)]
        case: Option<String>,
    },
    /// R_n of Werner-like states against the mixing parameter.
    WernerSweep {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ProjectionArg::Optimized)]
        projection: ProjectionArg,
        /// Detection threshold; defaults to R_n of the uniform (k-1)-level state.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Robustness of the optimal R_3 state under random Hermitian drift.
    GueSweep {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Best approximation of a pattern by q-level coherent mixtures.
    Approx {
        /// State spec of the target.
        target: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 3)]
        components: usize,
    },
}

fn config(cli: &Cli, base: OptimizationConfig) -> Result<OptimizationConfig> {
    let mut cfg = base.with_seed(cli.seed);
    if let Some(r) = cli.restarts {
        cfg = cfg.with_restarts(r);
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pattern_source(input: &str, dim: usize) -> Result<PatternSource> {
    let path = Path::new(input);
    if path.exists() {
        let samples = report::read_samples_csv(File::open(path)?)?;
        return Ok(PatternSource::Samples { label: input.to_string(), samples, dim });
    }
    Ok(PatternSource::State(input.parse()?))
}

fn render<P: Serialize, D: Serialize + CsvTable>(cli: &Cli, doc: &Document<P, D>) -> Result<bool> {
    let text = match cli.format {
        Format::Json => doc.to_json()?,
        Format::Csv => doc.to_csv()?,
    };
    match &cli.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    Ok(!doc.warnings.is_empty())
}

fn run(cli: &Cli) -> Result<bool> {
    let defaults = OptimizationConfig::default();
    let seed = cli.seed;
    match &cli.command {
        Command::Certify { input, dim } => {
            let cfg = config(cli, defaults)?;
            let (data, w) = report::certify(&pattern_source(input, *dim)?, &cfg)?;
            let params = json!({"input": input, "dim": dim, "restarts": cfg.restarts, "tol": cfg.tol});
            render(cli, &Document::new("certify", seed, params, w, data))
        }
        Command::Moments { input, dim } => {
            let cfg = config(cli, defaults)?;
            let (data, w) = report::moments_report(&pattern_source(input, *dim)?, &cfg)?;
            let params = json!({"input": input, "dim": dim, "restarts": cfg.restarts, "tol": cfg.tol});
            render(cli, &Document::new("moments", seed, params, w, data))
        }
        Command::Tables { k_max } => {
            let cfg = config(cli, defaults)?;
            let (data, w) = report::tables(&cfg, *k_max)?;
            let params = json!({"k_max": k_max, "restarts": cfg.restarts, "tol": cfg.tol, "max_iters": cfg.max_iters});
            render(cli, &Document::new("tables", seed, params, w, data))
        }
        Command::Optimize { n, k } => {
            let cfg = config(cli, defaults)?;
            let (data, w) = report::optimize(*n, *k, &cfg)?;
            let params = json!({"n": n, "k": k, "restarts": cfg.restarts, "tol": cfg.tol, "max_iters": cfg.max_iters});
            render(cli, &Document::new("optimize", seed, params, w, data))
        }
        Command::VertexCheck { case } => {
            let cases = match case {
                Some(c) => vec![VertexCase::parse(c)?],
                None => VertexCase::ALL.to_vec(),
            };
            let data = report::vertex_check(&cases, seed)?;
            let params = json!({"cases": cases.iter().map(|c| c.to_string()).collect::<Vec<_>>(), "hessian_samples": 200});
            render(cli, &Document::new("vertex-check", seed, params, vec![], data))
        }
        Command::WernerSweep { k, n, points, projection, threshold } => {
            let cfg = config(cli, defaults.with_restarts(4))?;
            let proj = match projection {
                ProjectionArg::Fixed => Projection::FixedW,
                ProjectionArg::Optimized => Projection::Optimized,
            };
            let (data, w) = report::werner_sweep(*n, *k, *points, proj, *threshold, &cfg)?;
            let params = json!({
                "k": k, "n": n, "points": points, "projection": proj.describe(*k),
                "threshold": data.threshold_record.threshold, "restarts": cfg.restarts, "tol": cfg.tol,
            });
            render(cli, &Document::new("werner-sweep", seed, params, w, data))
        }
        Command::GueSweep { k, samples } => {
            let cfg = config(cli, defaults)?;
            let (data, w) = report::gue_sweep(*k, *samples, &cfg)?;
            let params = json!({"k": k, "samples": samples, "restarts": cfg.restarts, "tol": cfg.tol});
            render(cli, &Document::new("gue-sweep", seed, params, w, data))
        }
        Command::Approx { target, q, components } => {
            let cfg = config(cli, coherence_cert::approx::default_approx_config())?;
            let spec: StateSpec = target.parse()?;
            let (data, w) = report::approx(&spec, *q, *components, &cfg)?;
            let params = json!({
                "target": target, "q": q, "components": components,
                "restarts": cfg.restarts, "tol": cfg.tol, "max_iters": cfg.max_iters,
            });
            render(cli, &Document::new("approx", seed, params, w, data))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
