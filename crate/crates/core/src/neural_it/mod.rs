//! Saddle-point training of incomplete transport maps.
//!
//! A map network `T` and a non-positive potential `f` play
//! `max_f min_T  mean_X[c(x, T(x)) - f(T(x))] + w mean_Y f(y)`.
//! Each outer iteration takes one ascent step on `f` followed by `k_t`
//! descent steps on `T`; `w` ramps linearly from 1 to its target.

mod sampler;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Adam, Mlp, MultiStepLr, Tape, Var};
use crate::error::{Error, Result};
use crate::measures::{array_to_points, points_to_array, CostKind, Point};

pub use sampler::{EmpiricalSampler, Sampler, SceneSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub w_target: f64,
    pub lr: f64,
    pub batch_size: usize,
    /// Map updates per potential update.
    pub k_t: usize,
    pub total_f_iters: usize,
    /// Outer iterations over which `w` ramps from 1 to `w_target`.
    pub ramp_iters: usize,
    pub seed: u64,
    /// Outer iterations at which both learning rates are multiplied by `lr_decay`.
    pub lr_milestones: Vec<usize>,
    pub lr_decay: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// History is recorded every `log_every` outer iterations and at the end.
    pub log_every: usize,
    /// Size of the held-out source batch used for `eval_cost`.
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            w_target: 1.0,
            lr: 1e-4,
            batch_size: 256,
            k_t: 10,
            total_f_iters: 10_000,
            ramp_iters: 3_000,
            seed: 0,
            lr_milestones: Vec::new(),
            lr_decay: 0.5,
            hidden: vec![128, 128, 128],
            activation: Activation::default(),
            log_every: 100,
            eval_batch: 1024,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadParams(msg));
        if !(self.w_target >= 1.0 && self.w_target.is_finite()) {
            return Err(Error::InvalidWeight(self.w_target));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return bad(format!("lr_decay must be positive, got {}", self.lr_decay));
        }
        if self.batch_size == 0 || self.eval_batch == 0 {
            return bad("batch sizes must be positive".into());
        }
        if self.k_t == 0 {
            return bad("k_t must be at least 1".into());
        }
        if self.total_f_iters == 0 {
            return bad("total_f_iters must be at least 1".into());
        }
        if self.ramp_iters > self.total_f_iters {
            return bad(format!("ramp_iters ({}) exceeds total_f_iters ({})", self.ramp_iters, self.total_f_iters));
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }

    /// Live weight at outer iteration `iter`.
    pub fn w_at(&self, iter: usize) -> f64 {
        if self.ramp_iters == 0 || iter >= self.ramp_iters {
            return self.w_target;
        }
        1.0 + (self.w_target - 1.0) * iter as f64 / self.ramp_iters as f64
    }

    fn schedule(&self) -> MultiStepLr {
        MultiStepLr { base: self.lr, milestones: self.lr_milestones.clone(), gamma: self.lr_decay }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub loss_f: f64,
    #[serde(rename = "loss_T")]
    pub loss_t: f64,
    pub w: f64,
    pub eval_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub rows: Vec<HistoryRow>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&HistoryRow> {
        self.rows.last()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["iter", "loss_f", "loss_T", "w", "eval_cost"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub t_net: Mlp,
    pub f_net: Mlp,
    pub history: TrainHistory,
}

/// Mean cost of a batch of pairs, recorded on the tape.
fn record_cost(tape: &mut Tape, x: Var, y: Var, kind: CostKind) -> Var {
    let d = tape.sub(x, y);
    let per = match kind {
        CostKind::SqEuclideanNormalized => tape.square(d),
        CostKind::L1Normalized => tape.abs(d),
    };
    // Mean over all entries equals the mean of the dimension-normalized cost.
    tape.mean(per)
}

fn batch_cost(x: &Array2<f64>, y: &Array2<f64>, kind: CostKind) -> f64 {
    let d = x - y;
    let s: f64 = match kind {
        CostKind::SqEuclideanNormalized => d.iter().map(|v| v * v).sum(),
        CostKind::L1Normalized => d.iter().map(|v| v.abs()).sum(),
    };
    s / d.len() as f64
}

fn check_finite(which: &'static str, iter: usize, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss { which, iter, value })
    }
}

fn check_params(which: &'static str, iter: usize, net: &Mlp) -> Result<()> {
    for p in net.params() {
        if let Some(&v) = p.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { which, iter, value: v });
        }
    }
    Ok(())
}

/// Train a map and potential by alternating ascent on `f` and descent on `T`.
pub fn train_it<P: Sampler + ?Sized, Q: Sampler + ?Sized>(
    p: &mut P,
    q: &mut Q,
    kind: CostKind,
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    let dim = p.dim();
    if q.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: q.dim() });
    }
    let mut t_net = Mlp::map(dim, &cfg.hidden, cfg.activation, cfg.seed.wrapping_mul(2))?;
    let mut f_net = Mlp::potential(dim, &cfg.hidden, cfg.activation, cfg.seed.wrapping_mul(2) + 1)?;
    let mut t_opt = Adam::new(t_net.params(), cfg.lr);
    let mut f_opt = Adam::new(f_net.params(), cfg.lr);
    let schedule = cfg.schedule();

    let held_out = p.sample(cfg.eval_batch)?;
    let mut history = TrainHistory::default();

    for iter in 0..cfg.total_f_iters {
        let w = cfg.w_at(iter);
        let lr = schedule.at(iter);
        t_opt.lr = lr;
        f_opt.lr = lr;

        // Potential step: maximize w mean f(Y) - mean f(T(X)).
        let x = p.sample(cfg.batch_size)?;
        let y = q.sample(cfg.batch_size)?;
        let tx = t_net.forward(&x)?;
        let mut tape = Tape::new();
        let fp = f_net.register(&mut tape);
        let yv = tape.leaf(y);
        let txv = tape.leaf(tx);
        let fy = f_net.record(&mut tape, &fp, yv)?;
        let ftx = f_net.record(&mut tape, &fp, txv)?;
        let mean_fy = tape.mean(fy);
        let mean_ftx = tape.mean(ftx);
        let scaled = tape.scale(mean_fy, w);
        // Descend on the negated objective.
        let neg_loss = tape.sub(mean_ftx, scaled);
        let loss_f = -tape.scalar(neg_loss);
        check_finite("f", iter, loss_f)?;
        let mut grads = tape.backward(neg_loss)?;
        let gf: Vec<Array2<f64>> = fp.iter().map(|&v| grads.take(v)).collect();
        f_opt.step(f_net.params_mut(), &gf)?;
        check_params("f parameter", iter, &f_net)?;

        // Map steps: minimize mean[c(x, T(x)) - f(T(x))].
        let mut loss_t = f64::NAN;
        for _ in 0..cfg.k_t {
            let x = p.sample(cfg.batch_size)?;
            let mut tape = Tape::new();
            let tp = t_net.register(&mut tape);
            let fp = f_net.register(&mut tape);
            let xv = tape.leaf(x);
            let txv = t_net.record(&mut tape, &tp, xv)?;
            let cost = record_cost(&mut tape, xv, txv, kind);
            let ftx = f_net.record(&mut tape, &fp, txv)?;
            let mean_ftx = tape.mean(ftx);
            let loss = tape.sub(cost, mean_ftx);
            loss_t = tape.scalar(loss);
            check_finite("T", iter, loss_t)?;
            let mut grads = tape.backward(loss)?;
            let gt: Vec<Array2<f64>> = tp.iter().map(|&v| grads.take(v)).collect();
            t_opt.step(t_net.params_mut(), &gt)?;
            check_params("T parameter", iter, &t_net)?;
        }

        if iter % cfg.log_every == 0 || iter + 1 == cfg.total_f_iters {
            let eval_cost = batch_cost(&held_out, &t_net.forward(&held_out)?, kind);
            check_finite("eval", iter, eval_cost)?;
            history.rows.push(HistoryRow { iter, loss_f, loss_t, w, eval_cost });
        }
    }
    Ok(Trained { t_net, f_net, history })
}

/// Map `x_test` through `t_net`; returns the images and their mean cost.
pub fn eval_map(t_net: &Mlp, x_test: &[Point], kind: CostKind) -> Result<(Vec<Point>, f64)> {
    let x = points_to_array(x_test)?;
    let (tx, cost) = eval_map_array(t_net, &x, kind)?;
    Ok((array_to_points(&tx)?, cost))
}

pub fn eval_map_array(t_net: &Mlp, x: &Array2<f64>, kind: CostKind) -> Result<(Array2<f64>, f64)> {
    if t_net.output_dim() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), found: t_net.output_dim() });
    }
    let tx = t_net.forward(x)?;
    let cost = batch_cost(x, &tx, kind);
    Ok((tx, cost))
}

/// Mean unnormalized squared Euclidean distance between `T(x)` and `reference(x)`.
pub fn mse_to_reference<F>(t_net: &Mlp, reference: F, x_test: &[Point]) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let x = points_to_array(x_test)?;
    let tx = t_net.forward(&x)?;
    let mut total = 0.0;
    for (xi, ti) in x.rows().into_iter().zip(tx.rows()) {
        let r = reference(xi.as_slice().expect("standard layout"));
        if r.len() != ti.len() {
            return Err(Error::DimensionMismatch { expected: ti.len(), found: r.len() });
        }
        total += ti.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / x.nrows() as f64)
}

/// Fraction of `y` with `|f(y)| <= tol`.
pub fn potential_zero_fraction(f_net: &Mlp, y: &[Point], tol: f64) -> Result<f64> {
    let fy = f_net.forward(&points_to_array(y)?)?;
    let hits = fy.iter().filter(|v| v.abs() <= tol).count();
    Ok(hits as f64 / fy.len() as f64)
}

/// `mean c(x, T(x)) - mean f(T(x)) + w mean f(y)`.
pub fn lagrangian(t_net: &Mlp, f_net: &Mlp, x: &Array2<f64>, y: &Array2<f64>, w: f64, kind: CostKind) -> Result<f64> {
    let tx = t_net.forward(x)?;
    let cost = batch_cost(x, &tx, kind);
    let ftx = f_net.forward(&tx)?.mean().expect("non-empty batch");
    let fy = f_net.forward(y)?.mean().expect("non-empty batch");
    Ok(cost - ftx + w * fy)
}
