//! Linear classifiers trained from scratch.
//!
//! Both models minimize mean logistic loss plus `(l2 / 2) * |w|^2` by
//! mini-batch gradient descent over a seeded shuffle. NBSVM trains on
//! features scaled by naive-Bayes log-count ratios and then pulls its
//! weights toward their mean magnitude:
//! `w' = (1 - beta) * mean(|w|) + beta * w`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{nb_ratios, scale, LogCountRatio, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logit,
    Nbsvm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logit => "logit",
            ModelKind::Nbsvm => "nbsvm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(ModelKind::Logit),
            "nbsvm" => Ok(ModelKind::Nbsvm),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?}; expected logit or nbsvm"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// NBSVM interpolation weight.
    pub beta: f64,
    /// NB count smoothing.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            learning_rate: 0.5,
            l2_lambda: 1e-5,
            epochs: 30,
            batch_size: 64,
            beta: 0.25,
            alpha: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: Hyper,
    /// Feature scaling applied before the dot product (NBSVM only).
    pub ratios: Option<LogCountRatio>,
    /// Full-data objective before training and after each epoch.
    pub loss_trace: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `(l2 / 2) * |w|^2`; the bias is not penalized.
pub fn objective(x: &[SparseVector], y: &[u8], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.len().max(1) as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let z = xi.dot(w) + b;
            // -[y log s(z) + (1-y) log(1 - s(z))] = softplus(z) - y z
            softplus(z) - f64::from(yi) * z
        })
        .sum();
    data / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`objective`] with respect to `(w, b)`.
pub fn gradient(x: &[SparseVector], y: &[u8], w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.len().max(1) as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let err = sigmoid(xi.dot(w) + b) - f64::from(yi);
        for &(j, v) in xi.entries() {
            gw[j] += err * v;
        }
        gb += err;
    }
    for (g, wj) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    (gw, gb / n)
}

fn check_inputs(x: &[SparseVector], y: &[u8], dim: usize, hyper: &Hyper) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    if !(hyper.learning_rate > 0.0 && hyper.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    if hyper.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    if x.iter().any(|xi| xi.dim_hint() > dim) {
        return Err(Error::InvalidArgument("feature index out of range".into()));
    }
    Ok(())
}

/// Mini-batch gradient descent on the logistic objective. Returns weights,
/// bias and the objective trace.
fn descend(x: &[SparseVector], y: &[u8], dim: usize, hyper: &Hyper) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut trace = vec![objective(x, y, &w, b, hyper.l2_lambda)];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let lr = hyper.learning_rate;
    let mut grad = vec![0.0; dim];
    let mut touched: Vec<usize> = Vec::new();

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            let m = batch.len() as f64;
            let mut gb = 0.0;
            touched.clear();
            for &i in batch {
                let err = sigmoid(x[i].dot(&w) + b) - f64::from(y[i]);
                for &(j, v) in x[i].entries() {
                    if grad[j] == 0.0 {
                        touched.push(j);
                    }
                    grad[j] += err * v;
                }
                gb += err;
            }
            if hyper.l2_lambda != 0.0 {
                let shrink = 1.0 - lr * hyper.l2_lambda;
                w.iter_mut().for_each(|wj| *wj *= shrink);
            }
            for &j in &touched {
                w[j] -= lr * grad[j] / m;
                grad[j] = 0.0;
            }
            b -= lr * gb / m;
        }
        let loss = objective(x, y, &w, b, hyper.l2_lambda);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        trace.push(loss);
    }
    Ok((w, b, trace))
}

pub fn train_logit(x: &[SparseVector], y: &[u8], dim: usize, hyper: &Hyper) -> Result<LinearModel> {
    check_inputs(x, y, dim, hyper)?;
    let (weights, bias, loss_trace) = descend(x, y, dim, hyper)?;
    Ok(LinearModel {
        kind: ModelKind::Logit,
        weights,
        bias,
        hyper: *hyper,
        ratios: None,
        loss_trace,
    })
}

/// Interpolates weights toward their mean magnitude.
pub fn interpolate(w: &[f64], beta: f64) -> Vec<f64> {
    if w.is_empty() {
        return Vec::new();
    }
    let mean_abs = w.iter().map(|v| v.abs()).sum::<f64>() / w.len() as f64;
    w.iter().map(|&v| (1.0 - beta) * mean_abs + beta * v).collect()
}

pub fn train_nbsvm(x: &[SparseVector], y: &[u8], dim: usize, hyper: &Hyper) -> Result<LinearModel> {
    check_inputs(x, y, dim, hyper)?;
    let ratios = nb_ratios(x, y, dim, hyper.alpha)?;
    let scaled: Vec<SparseVector> = x.iter().map(|xi| scale(xi, &ratios)).collect();
    let (w, bias, loss_trace) = descend(&scaled, y, dim, hyper)?;
    Ok(LinearModel {
        kind: ModelKind::Nbsvm,
        weights: interpolate(&w, hyper.beta),
        bias,
        hyper: *hyper,
        ratios: Some(ratios),
        loss_trace,
    })
}

pub fn train(kind: ModelKind, x: &[SparseVector], y: &[u8], dim: usize, hyper: &Hyper) -> Result<LinearModel> {
    match kind {
        ModelKind::Logit => train_logit(x, y, dim, hyper),
        ModelKind::Nbsvm => train_nbsvm(x, y, dim, hyper),
    }
}

impl LinearModel {
    pub fn score(&self, x: &SparseVector) -> f64 {
        match &self.ratios {
            Some(r) => scale(x, r).dot(&self.weights) + self.bias,
            None => x.dot(&self.weights) + self.bias,
        }
    }

    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        sigmoid(self.score(x))
    }

    /// Plain-text dump with every float at full round-trip precision.
    pub fn dump(&self) -> String {
        let h = &self.hyper;
        let mut out = String::new();
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "learning_rate {:?}", h.learning_rate);
        let _ = writeln!(out, "l2_lambda {:?}", h.l2_lambda);
        let _ = writeln!(out, "epochs {}", h.epochs);
        let _ = writeln!(out, "batch_size {}", h.batch_size);
        let _ = writeln!(out, "beta {:?}", h.beta);
        let _ = writeln!(out, "alpha {:?}", h.alpha);
        let _ = writeln!(out, "seed {}", h.seed);
        let _ = writeln!(out, "bias {:?}", self.bias);
        let _ = writeln!(out, "weights {}", self.weights.len());
        for w in &self.weights {
            let _ = writeln!(out, "{w:?}");
        }
        if let Some(r) = &self.ratios {
            let _ = writeln!(out, "ratios {}", r.r.len());
            for v in &r.r {
                let _ = writeln!(out, "{v:?}");
            }
        }
        out
    }

    /// Reads a [`LinearModel::dump`]. The loss trace is not stored.
    pub fn load(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Serde(format!("model dump: {m}"));
        let mut lines = text.lines();
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {name}")))?;
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(line))?;
            if k != name {
                return Err(bad(&format!("expected {name}, got {k}")));
            }
            Ok(v.to_string())
        };
        fn num<T: FromStr>(s: String) -> Result<T> {
            s.parse().map_err(|_| Error::Serde(format!("model dump: bad number {s:?}")))
        }
        let kind: ModelKind = field("kind")?.parse()?;
        let hyper = Hyper {
            learning_rate: num(field("learning_rate")?)?,
            l2_lambda: num(field("l2_lambda")?)?,
            epochs: num(field("epochs")?)?,
            batch_size: num(field("batch_size")?)?,
            beta: num(field("beta")?)?,
            alpha: num(field("alpha")?)?,
            seed: num(field("seed")?)?,
        };
        let bias: f64 = num(field("bias")?)?;
        let n: usize = num(field("weights")?)?;
        drop(field);
        let rest: Vec<&str> = text.lines().skip(10).collect();
        let parse_vec = |lines: &[&str]| -> Result<Vec<f64>> { lines.iter().map(|l| num(l.to_string())).collect() };
        if rest.len() < n {
            return Err(bad("truncated weights"));
        }
        let weights = parse_vec(&rest[..n])?;
        let ratios = match rest.get(n) {
            None => None,
            Some(header) => {
                let m: usize = num(header.strip_prefix("ratios ").ok_or_else(|| bad(header))?.to_string())?;
                if rest.len() != n + 1 + m {
                    return Err(bad("ratio count mismatch"));
                }
                Some(LogCountRatio {
                    r: parse_vec(&rest[n + 1..])?,
                    alpha: hyper.alpha,
                })
            }
        };
        Ok(LinearModel {
            kind,
            weights,
            bias,
            hyper,
            ratios,
            loss_trace: Vec::new(),
        })
    }
}

/// Any trained binary classifier the evaluation harness can score.
pub trait Classifier: Send + Sync {
    fn predict_proba(&self, x: &SparseVector) -> f64;
}

impl Classifier for LinearModel {
    fn predict_proba(&self, x: &SparseVector) -> f64 {
        LinearModel::predict_proba(self, x)
    }
}

/// A model family the harness can fit on one training fold. Additional
/// model families plug into the grid by implementing this trait.
pub trait Trainer: Send + Sync {
    fn name(&self) -> String;
    fn fit(&self, x: &[SparseVector], y: &[u8], dim: usize) -> Result<Box<dyn Classifier>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTrainer {
    pub kind: ModelKind,
    pub hyper: Hyper,
}

impl Trainer for LinearTrainer {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], dim: usize) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(train(self.kind, x, y, dim, &self.hyper)?))
    }
}

/// Largest relative difference between the analytic gradient and central
/// finite differences, at a seeded random point. For NBSVM the loss is
/// taken over r-scaled features.
pub fn gradient_check(
    kind: ModelKind,
    x: &[SparseVector],
    y: &[u8],
    dim: usize,
    hyper: &Hyper,
    epsilon: f64,
) -> Result<f64> {
    let xs: Vec<SparseVector> = match kind {
        ModelKind::Logit => x.to_vec(),
        ModelKind::Nbsvm => {
            let r = nb_ratios(x, y, dim, hyper.alpha)?;
            x.iter().map(|xi| scale(xi, &r)).collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: f64 = rng.gen_range(-1.0..1.0);
    let l2 = hyper.l2_lambda;
    let (gw, gb) = gradient(&xs, y, &w, b, l2);

    let rel = |a: f64, n: f64| {
        let denom = a.abs().max(n.abs());
        if denom < 1e-10 {
            0.0
        } else {
            (a - n).abs() / denom
        }
    };
    let mut worst: f64 = 0.0;
    let mut wp = w.clone();
    for j in 0..dim {
        wp[j] = w[j] + epsilon;
        let up = objective(&xs, y, &wp, b, l2);
        wp[j] = w[j] - epsilon;
        let down = objective(&xs, y, &wp, b, l2);
        wp[j] = w[j];
        worst = worst.max(rel(gw[j], (up - down) / (2.0 * epsilon)));
    }
    let numeric_b = (objective(&xs, y, &w, b + epsilon, l2) - objective(&xs, y, &w, b - epsilon, l2)) / (2.0 * epsilon);
    Ok(worst.max(rel(gb, numeric_b)))
}
