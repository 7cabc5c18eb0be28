use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use rayon::prelude::*;

use itx::autodiff::Mlp;
use itx::discrete_it::{cost_curve, duality_gap, solve_it, vanishing_fraction, ItInstance};
use itx::et_oracle::extremal_cost;
use itx::io;
use itx::measures::DiscreteMeasure;
use itx::neural_it::{
    eval_map_array, lagrangian, train_it, EmpiricalSampler, Sampler, SceneSampler, TrainConfig, Trained,
};
use itx::plot::{render_scatter, Layer, Style};
use itx::toyscenes::{swiss2ball_et_map, Scene, ScenePair};

use crate::error::{CliError, Context};
use crate::spec::{ExperimentSpec, Mode};

/// Relative threshold on `|f|` below which the potential counts as zero.
const ZERO_REL_TOL: f64 = 0.05;
const SLACK_TOL: f64 = 1e-12;
const PLOT_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

fn metric(name: impl Into<String>, value: f64) -> Metric {
    Metric { name: name.into(), value }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub metrics: Vec<Metric>,
    pub files: Vec<PathBuf>,
}

/// Independent stream for each purpose derived from one user seed.
fn stream(seed: u64, purpose: u64) -> u64 {
    seed.wrapping_mul(8).wrapping_add(purpose)
}

const SOURCE_CLOUD: u64 = 0;
const TARGET_CLOUD: u64 = 1;
const TRAIN_P: u64 = 2;
const TRAIN_Q: u64 = 3;
const TEST_P: u64 = 4;
const TEST_Q: u64 = 5;

fn io_err(field: &str, e: std::io::Error) -> CliError {
    CliError::from_lib(field, itx::Error::Io(e))
}

fn write_metrics(path: &Path, metrics: &[Metric]) -> Result<(), CliError> {
    let mut s = String::from("metric,value\n");
    for m in metrics {
        let _ = writeln!(s, "{},{}", m.name, m.value);
    }
    fs::write(path, s).map_err(|e| io_err("out", e))
}

pub fn run(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    spec.validate()?;
    fs::create_dir_all(&spec.out).map_err(|e| io_err("out", e))?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let summary = match spec.mode {
        Mode::SolveDiscrete => solve_discrete(spec),
        Mode::CostCurve => curve(spec),
        Mode::Train => train(spec),
        Mode::Eval => eval(spec),
        Mode::Plot => plot(spec),
        Mode::Sample => sample(spec),
    }?;
    write_log(spec, started, clock.elapsed().as_secs_f64())?;
    Ok(summary)
}

/// Sidecar log: the only artifact carrying wall-clock information.
fn write_log(spec: &ExperimentSpec, started: SystemTime, elapsed: f64) -> Result<(), CliError> {
    let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let spec_json = serde_json::to_string(spec).map_err(|e| CliError::from_lib("out", e.into()))?;
    let log = format!("started_unix={unix}\nelapsed_s={elapsed:.3}\nspec={spec_json}\n");
    fs::write(spec.out.join("run.log"), log).map_err(|e| io_err("out", e))
}

fn pair(spec: &ExperimentSpec) -> Result<ScenePair, CliError> {
    let name = spec.scene.as_deref().ok_or_else(|| CliError::config("scene", "missing"))?;
    ScenePair::by_name(name).field("scene")
}

/// Source and target clouds from files or sampled from the scene pair.
fn clouds(spec: &ExperimentSpec, seed: u64) -> Result<(DiscreteMeasure, DiscreteMeasure), CliError> {
    if let (Some(p), Some(q)) = (&spec.p, &spec.q) {
        let pm = io::load_point_cloud(p).field("p")?.normalized();
        let qm = io::load_point_cloud(q).field("q")?.normalized();
        if pm.dim() != qm.dim() {
            return Err(CliError::from_lib("q", itx::Error::DimensionMismatch { expected: pm.dim(), found: qm.dim() }));
        }
        return Ok((pm, qm));
    }
    let pair = pair(spec)?;
    let xs = pair.source.sample(spec.atoms, stream(seed, SOURCE_CLOUD)).field("scene")?;
    let ys = pair.target.sample(spec.atoms, stream(seed, TARGET_CLOUD)).field("scene")?;
    Ok((DiscreteMeasure::uniform(&xs, 1.0).field("scene")?, DiscreteMeasure::uniform(&ys, 1.0).field("scene")?))
}

fn solve_discrete(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let w = spec.ws[0];
    let (p, q) = clouds(spec, spec.seeds[0])?;
    let inst = ItInstance::from_measures(p.clone(), q.clone(), w, spec.cost).field("ws")?;
    let sol = solve_it(&inst).field("solve-discrete")?;
    let mut metrics = vec![
        metric("primal_cost", sol.primal_cost),
        metric("dual_objective", sol.dual.objective),
        metric("duality_gap", duality_gap(sol.primal_cost, &sol.dual)),
        metric("pivots", sol.pivots as f64),
        metric("slack_columns", sol.coupling.slack_columns(SLACK_TOL).count() as f64),
        metric("vanishing_fraction", vanishing_fraction(&sol.dual, &sol.coupling, SLACK_TOL)),
    ];
    metrics.push(metric("extremal_cost", extremal_cost(&p, &q, spec.cost).field("p")?));
    let files = vec![spec.out.join("coupling.csv"), spec.out.join("dual.csv"), spec.out.join("metrics.csv")];
    io::save_coupling(&sol.coupling, &files[0]).field("out")?;
    io::save_dual(&sol.dual, &files[1]).field("out")?;
    write_metrics(&files[2], &metrics)?;
    Ok(RunSummary { metrics, files })
}

fn curve(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let (p, q) = clouds(spec, spec.seeds[0])?;
    let costs = cost_curve(&p, &q, spec.cost, &spec.ws).field("cost-curve")?;
    let mut csv = String::from("w,cost\n");
    let mut metrics = Vec::new();
    for &(w, c) in &costs {
        let _ = writeln!(csv, "{w},{c}");
        metrics.push(metric(format!("cost_w{w}"), c));
    }
    let path = spec.out.join("cost_curve.csv");
    fs::write(&path, csv).map_err(|e| io_err("out", e))?;
    Ok(RunSummary { metrics, files: vec![path] })
}

fn sample(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let name = spec.scene.as_deref().unwrap_or_default();
    let scene = Scene::by_name(name).field("scene")?;
    let pts = scene.sample(spec.atoms, spec.seeds[0]).field("scene")?;
    let m = DiscreteMeasure::uniform(&pts, 1.0).field("scene")?;
    let path = spec.out.join("samples.csv");
    io::save_point_cloud(&m, &path).field("out")?;
    Ok(RunSummary { metrics: vec![metric("samples", pts.len() as f64)], files: vec![path] })
}

type BoxedSampler = Box<dyn Sampler + Send>;

fn samplers(spec: &ExperimentSpec, seed: u64) -> Result<(BoxedSampler, BoxedSampler), CliError> {
    if spec.p.is_some() {
        let (p, q) = clouds(spec, seed)?;
        return Ok((
            Box::new(EmpiricalSampler::new(&p, stream(seed, TRAIN_P)).field("p")?),
            Box::new(EmpiricalSampler::new(&q, stream(seed, TRAIN_Q)).field("q")?),
        ));
    }
    let pair = pair(spec)?;
    Ok((
        Box::new(SceneSampler::new(pair.source, stream(seed, TRAIN_P)).field("scene")?),
        Box::new(SceneSampler::new(pair.target, stream(seed, TRAIN_Q)).field("scene")?),
    ))
}

/// Held-out source and target batches for evaluation.
fn test_batches(spec: &ExperimentSpec, seed: u64) -> Result<(Array2<f64>, Array2<f64>), CliError> {
    if spec.p.is_some() {
        let (p, q) = clouds(spec, seed)?;
        return Ok((p.support_array(), q.support_array()));
    }
    let pair = pair(spec)?;
    let mut ps = SceneSampler::new(pair.source, stream(seed, TEST_P)).field("scene")?;
    let mut qs = SceneSampler::new(pair.target, stream(seed, TEST_Q)).field("scene")?;
    Ok((ps.sample(spec.test_samples).field("scene")?, qs.sample(spec.test_samples).field("scene")?))
}

fn cell_name(spec: &ExperimentSpec, w: f64, seed: u64) -> String {
    let scene = spec.scene.as_deref().unwrap_or("files");
    format!("{scene}_w{w}_s{seed}")
}

fn train(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let cells: Vec<(f64, u64)> = spec.ws.iter().flat_map(|&w| spec.seeds.iter().map(move |&s| (w, s))).collect();
    let pool = crate::thread_pool()?;
    let results: Vec<Result<RunSummary, CliError>> =
        pool.install(|| cells.par_iter().map(|&(w, seed)| train_cell(spec, w, seed)).collect());

    let mut summary = RunSummary::default();
    let mut table = String::from("cell,metric,value\n");
    for (&(w, seed), res) in cells.iter().zip(results) {
        let cell = res?;
        let name = cell_name(spec, w, seed);
        for m in &cell.metrics {
            let _ = writeln!(table, "{name},{},{}", m.name, m.value);
            summary.metrics.push(metric(format!("{name}/{}", m.name), m.value));
        }
        summary.files.extend(cell.files);
    }
    let path = spec.out.join("summary.csv");
    fs::write(&path, table).map_err(|e| io_err("out", e))?;
    summary.files.push(path);
    Ok(summary)
}

fn train_cell(spec: &ExperimentSpec, w: f64, seed: u64) -> Result<RunSummary, CliError> {
    let dir = spec.out.join(cell_name(spec, w, seed));
    fs::create_dir_all(&dir).map_err(|e| io_err("out", e))?;
    let cfg = TrainConfig { w_target: w, seed, ..spec.train.clone() };
    let (mut p, mut q) = samplers(spec, seed)?;
    let Trained { t_net, f_net, history } = train_it(p.as_mut(), q.as_mut(), spec.cost, &cfg).field("train")?;

    let files = vec![dir.join("t_net.json"), dir.join("f_net.json"), dir.join("history.csv"), dir.join("metrics.csv")];
    t_net.save(&files[0]).field("out")?;
    f_net.save(&files[1]).field("out")?;
    history.save_csv(&files[2]).field("out")?;

    let (x, y) = test_batches(spec, seed)?;
    let mut metrics = evaluate(spec, &t_net, Some(&f_net), &x, &y, w)?;
    if spec.scene.is_some() || spec.p.is_some() {
        let (pm, qm) = clouds(spec, seed)?;
        let inst = ItInstance::from_measures(pm, qm, w, spec.cost).field("ws")?;
        let exact = solve_it(&inst).field("solve-discrete")?.primal_cost;
        let test_cost = metrics[0].value;
        metrics.push(metric("discrete_cost", exact));
        metrics.push(metric("relative_gap", (test_cost - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)));
    }
    write_metrics(&files[3], &metrics)?;
    let svg = dir.join("map.svg");
    map_plot(&t_net, &x, &y, &svg)?;
    let mut files = files;
    files.push(svg);
    Ok(RunSummary { metrics, files })
}

/// Test cost plus scene-specific diagnostics. `test_cost` always comes first.
fn evaluate(
    spec: &ExperimentSpec,
    t_net: &Mlp,
    f_net: Option<&Mlp>,
    x: &Array2<f64>,
    y: &Array2<f64>,
    w: f64,
) -> Result<Vec<Metric>, CliError> {
    let (tx, test_cost) = eval_map_array(t_net, x, spec.cost).field("checkpoint")?;
    let mut out = vec![metric("test_cost", test_cost)];
    let pair = match &spec.scene {
        Some(name) => Some(ScenePair::by_name(name).field("scene")?),
        None => None,
    };
    if let Some(f) = f_net {
        out.push(metric("lagrangian", lagrangian(t_net, f, x, y, w, spec.cost).field("potential")?));
    }
    match pair.as_ref().map(|p| &p.target) {
        Some(Scene::WifiArcs(arcs)) => {
            let mut counts = [0usize; 4];
            for r in tx.rows() {
                let k = arcs.membership([r[0], r[1]], arcs.half_width).field("scene")?;
                counts[k.unwrap_or(3)] += 1;
            }
            let n = tx.nrows() as f64;
            for (k, c) in counts.iter().enumerate().take(3) {
                out.push(metric(format!("arc{k}_fraction"), *c as f64 / n));
            }
            out.push(metric("off_arc_fraction", counts[3] as f64 / n));
            if let Some(f) = f_net {
                let fy = f.forward(y).field("potential")?;
                let max = fy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mut hits = [0usize; 3];
                let mut totals = [0usize; 3];
                for (r, v) in y.rows().into_iter().zip(fy.iter()) {
                    if let Some(k) = arcs.membership([r[0], r[1]], arcs.half_width + 1e-9).field("scene")? {
                        totals[k] += 1;
                        if v.abs() <= ZERO_REL_TOL * max {
                            hits[k] += 1;
                        }
                    }
                }
                for k in 0..3 {
                    out.push(metric(format!("arc{k}_zero_potential"), hits[k] as f64 / totals[k].max(1) as f64));
                }
            }
        }
        Some(Scene::Ball { radius }) if matches!(pair.as_ref().map(|p| &p.source), Some(Scene::SwissRoll { .. })) => {
            let mut mse = 0.0;
            for (a, b) in x.rows().into_iter().zip(tx.rows()) {
                let r = swiss2ball_et_map([a[0], a[1]], *radius);
                mse += (b[0] - r[0]).powi(2) + (b[1] - r[1]).powi(2);
            }
            out.push(metric("mse_to_et_map", mse / x.nrows() as f64));
        }
        _ => {}
    }
    Ok(out)
}

fn eval(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let ck = spec.checkpoint.as_ref().expect("validated");
    let t_net = Mlp::load(ck).field("checkpoint")?;
    let f_net = match &spec.potential {
        Some(path) => Some(Mlp::load(path).field("potential")?),
        None => None,
    };
    let (x, y) = test_batches(spec, spec.seeds[0])?;
    let metrics = evaluate(spec, &t_net, f_net.as_ref(), &x, &y, spec.ws[0])?;
    let path = spec.out.join("metrics.csv");
    write_metrics(&path, &metrics)?;
    Ok(RunSummary { metrics, files: vec![path] })
}

fn head(a: &Array2<f64>) -> Vec<[f64; 2]> {
    a.rows().into_iter().take(PLOT_POINTS).map(|r| [r[0], r.get(1).copied().unwrap_or(0.0)]).collect()
}

fn map_plot(t_net: &Mlp, x: &Array2<f64>, y: &Array2<f64>, out: &Path) -> Result<(), CliError> {
    let tx = t_net.forward(x).field("checkpoint")?;
    let layers = [
        Layer::points("target", head(y), Style::new("#1f77b4", 1.5, 0.5)),
        Layer::points("source", head(x), Style::new("#7f7f7f", 1.5, 0.5)),
        Layer::points("mapped", head(&tx), Style::new("#d62728", 1.5, 0.8)),
    ];
    render_scatter(&layers, out).field("out")
}

fn plot(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    let mut files = Vec::new();
    if let Some(path) = &spec.coupling {
        let entries = io::load_coupling(path).field("coupling")?;
        if entries.is_empty() {
            return Err(CliError::config("coupling", format!("{} has no entries", path.display())));
        }
        let (p, q) = clouds(spec, spec.seeds[0])?;
        let mut segs = Vec::new();
        for &(i, j, _) in &entries {
            if i >= p.len() || j >= q.len() {
                return Err(CliError::from_lib(
                    "coupling",
                    itx::Error::Format(format!("entry ({i}, {j}) outside {}x{} clouds", p.len(), q.len())),
                ));
            }
            let (a, b) = (p.point(i), q.point(j));
            segs.push(([a[0], a.get(1).copied().unwrap_or(0.0)], [b[0], b.get(1).copied().unwrap_or(0.0)]));
        }
        let layers = [
            Layer::segments("coupling", segs, Style::new("#bcbd22", 0.5, 0.4)),
            Layer::points("target", head(&q.support_array()), Style::new("#1f77b4", 1.5, 0.7)),
            Layer::points("source", head(&p.support_array()), Style::new("#7f7f7f", 1.5, 0.7)),
        ];
        let out = spec.out.join("coupling.svg");
        render_scatter(&layers, &out).field("out")?;
        files.push(out);
    }
    if let Some(ck) = &spec.checkpoint {
        let t_net = Mlp::load(ck).field("checkpoint")?;
        let (x, y) = test_batches(spec, spec.seeds[0])?;
        let out = spec.out.join("map.svg");
        map_plot(&t_net, &x, &y, &out)?;
        files.push(out);
    }
    Ok(RunSummary { metrics: vec![metric("plots", files.len() as f64)], files })
}
