use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};
use itx::measures::CostKind;
use itx::neural_it::TrainConfig;
use itx_cli::{run, CliError, ExitCode, ExperimentSpec, Mode};

#[derive(Parser)]
#[command(name = "itx", version, about = "Incomplete transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete problem exactly for one weight.
    SolveDiscrete {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1.0)]
        w: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact cost for each weight in an increasing grid.
    CostCurve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        ws: Vec<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train map and potential networks over a weight and seed grid.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        ws: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// JSON training config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        ramp: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        k_t: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long, default_value_t = 4000)]
        test_samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate a saved map (and optionally potential) on a scene.
    Eval {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        w: f64,
        #[arg(long, default_value_t = 4000)]
        test_samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render a coupling or a trained map as SVG.
    Plot {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        coupling: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write samples of a single scene to a point-cloud CSV.
    Sample {
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a JSON experiment spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Override the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Scene pair: wifi, swiss2ball, accept, ball2annulus, triangle.
    #[arg(long)]
    scene: Option<String>,
    /// Source point-cloud CSV.
    #[arg(long)]
    p: Option<PathBuf>,
    /// Target point-cloud CSV.
    #[arg(long)]
    q: Option<PathBuf>,
    /// Atoms per side when sampling a scene.
    #[arg(long, default_value_t = 2000)]
    atoms: usize,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value = "sq", value_parser = parse_cost)]
    cost: CostKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_cost(s: &str) -> Result<CostKind, String> {
    s.parse().map_err(|e: itx::Error| e.to_string())
}

fn base(mode: Mode, data: DataArgs, common: CommonArgs) -> ExperimentSpec {
    ExperimentSpec {
        scene: data.scene,
        p: data.p,
        q: data.q,
        atoms: data.atoms,
        cost: common.cost,
        seeds: vec![common.seed],
        ..ExperimentSpec::new(mode, common.out)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::from_lib(field, e.into()))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(field, e.to_string()))
}

fn build(cmd: Command) -> Result<ExperimentSpec, CliError> {
    Ok(match cmd {
        Command::SolveDiscrete { data, w, common } => {
            ExperimentSpec { ws: vec![w], ..base(Mode::SolveDiscrete, data, common) }
        }
        Command::CostCurve { data, ws, common } => ExperimentSpec { ws, ..base(Mode::CostCurve, data, common) },
        Command::Train { data, ws, seeds, config, iters, ramp, lr, batch, k_t, hidden, test_samples, common } => {
            let mut train: TrainConfig = match config {
                Some(path) => read_json(&path, "config")?,
                None => TrainConfig::default(),
            };
            if let Some(n) = iters {
                train.total_f_iters = n;
                train.ramp_iters = train.ramp_iters.min(n);
            }
            if let Some(r) = ramp {
                train.ramp_iters = r;
            }
            if let Some(v) = lr {
                train.lr = v;
            }
            if let Some(b) = batch {
                train.batch_size = b;
            }
            if let Some(k) = k_t {
                train.k_t = k;
            }
            if let Some(h) = hidden {
                train.hidden = h;
            }
            ExperimentSpec { ws, seeds, train, test_samples, ..base(Mode::Train, data, common) }
        }
        Command::Eval { scene, checkpoint, potential, w, test_samples, common } => ExperimentSpec {
            scene: Some(scene),
            checkpoint: Some(checkpoint),
            potential,
            ws: vec![w],
            test_samples,
            cost: common.cost,
            seeds: vec![common.seed],
            ..ExperimentSpec::new(Mode::Eval, common.out)
        },
        Command::Plot { data, coupling, checkpoint, common } => {
            ExperimentSpec { coupling, checkpoint, ..base(Mode::Plot, data, common) }
        }
        Command::Sample { scene, n, seed, out } => {
            ExperimentSpec { scene: Some(scene), atoms: n, seeds: vec![seed], ..ExperimentSpec::new(Mode::Sample, out) }
        }
        Command::Run { spec, out } => {
            let mut s: ExperimentSpec = read_json(&spec, "spec")?;
            if let Some(o) = out {
                s.out = o;
            }
            s
        }
    })
}

fn main() {
    let cli = Cli::parse();
    let result = build(cli.command).and_then(|spec| run(&spec));
    match result {
        Ok(summary) => {
            for m in &summary.metrics {
                println!("{} = {}", m.name, m.value);
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            process::exit(ExitCode::Ok as i32);
        }
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(e.exit_code() as i32);
        }
    }
}
