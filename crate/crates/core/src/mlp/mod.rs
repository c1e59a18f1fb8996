//! Single-hidden-layer perceptron for binary targets, trained by full-batch
//! backpropagation followed by nonlinear conjugate gradient, both minimizing
//! mean squared error.
//!
//! Both layers use the logistic sigmoid. The output unit's value is clamped
//! into the open interval (0, 1) — `[f64::MIN_POSITIVE, 1 − 2⁻⁵³]` — so
//! downstream log/odds arithmetic can rely on strict bounds even at extreme
//! saturation.
//!
//! Training is a pure function of the data and a [`TrainSchedule`]: the seed
//! fixes initialization, and both phases are deterministic from there.

pub mod cg;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cg::{minimize, CgParams, Objective};

#[derive(Debug, thiserror::Error)]
pub enum MlpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("target at row {index} is {value}, expected 0 or 1")]
    NonBinaryTarget { index: usize, value: f64 },
    #[error("feature at row {row} is not finite")]
    NonFiniteFeature { row: usize },
    #[error("invalid training schedule: {0}")]
    BadSchedule(String),
    #[error("loss became non-finite during {phase} at epoch {epoch}")]
    NonFiniteLoss { phase: &'static str, epoch: usize },
    #[error("unreadable model text: {0}")]
    ParseModel(String),
}

/// Logistic sigmoid via tanh: `σ(z) = ½(1 + tanh(z/2))`.
///
/// The tanh form is stable for any finite `z` and symmetric under `z → −z`
/// up to rounding, which keeps label-flipped training runs numerically
/// mirrored.
fn sigmoid(z: f64) -> f64 {
    0.5 * (1.0 + (0.5 * z).tanh())
}

/// Smallest and largest output values: the sigmoid saturates to exactly 0.0
/// or 1.0 in floating point around |z| ≈ 37, so the output unit clamps back
/// into the open interval.
const OUTPUT_FLOOR: f64 = f64::MIN_POSITIVE;
const OUTPUT_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

fn output_sigmoid(z: f64) -> f64 {
    sigmoid(z).clamp(OUTPUT_FLOOR, OUTPUT_CEIL)
}

/// Weights of a 1-hidden-layer sigmoid network with a single output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Hidden layer, `H × D` (one row per hidden unit).
    pub w1: Array2<f64>,
    /// Hidden biases, length `H`.
    pub b1: Array1<f64>,
    /// Output layer, length `H`.
    pub w2: Array1<f64>,
    /// Output bias.
    pub b2: f64,
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    /// Total parameter count `H·D + H + H + 1`.
    pub fn n_params(&self) -> usize {
        flat_len(self.input_dim(), self.hidden_dim())
    }

    fn check_shapes(&self) -> Result<(), MlpError> {
        let h = self.hidden_dim();
        if self.b1.len() != h || self.w2.len() != h {
            return Err(MlpError::DimensionMismatch(format!(
                "hidden dim {h} but b1 has {} and w2 has {}",
                self.b1.len(),
                self.w2.len()
            )));
        }
        Ok(())
    }

    /// Flattens to `[w1 row-major, b1, w2, b2]` — the layout every gradient
    /// and the text format use.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        flat.extend(self.w1.iter());
        flat.extend(self.b1.iter());
        flat.extend(self.w2.iter());
        flat.push(self.b2);
        flat
    }

    /// Rebuilds a model from [`MlpModel::to_flat`] layout.
    pub fn from_flat(input_dim: usize, hidden_dim: usize, flat: &[f64]) -> Result<MlpModel, MlpError> {
        let expect = flat_len(input_dim, hidden_dim);
        if flat.len() != expect {
            return Err(MlpError::DimensionMismatch(format!(
                "flat vector has {} values, expected {expect} for D={input_dim} H={hidden_dim}",
                flat.len()
            )));
        }
        let (w1, rest) = flat.split_at(hidden_dim * input_dim);
        let (b1, rest) = rest.split_at(hidden_dim);
        let (w2, b2) = rest.split_at(hidden_dim);
        Ok(MlpModel {
            w1: Array2::from_shape_vec((hidden_dim, input_dim), w1.to_vec())
                .expect("shape matches split"),
            b1: Array1::from_vec(b1.to_vec()),
            w2: Array1::from_vec(w2.to_vec()),
            b2: b2[0],
        })
    }

    /// Network output `σ(w₂·σ(W₁x + b₁) + b₂)` for one example.
    pub fn forward(&self, x: &[f64]) -> Result<f64, MlpError> {
        self.check_shapes()?;
        if x.len() != self.input_dim() {
            return Err(MlpError::DimensionMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut z2 = self.b2;
        for i in 0..self.hidden_dim() {
            let mut z1 = self.b1[i];
            for (j, &xj) in x.iter().enumerate() {
                z1 += self.w1[(i, j)] * xj;
            }
            z2 += self.w2[i] * sigmoid(z1);
        }
        Ok(output_sigmoid(z2))
    }
}

fn flat_len(input_dim: usize, hidden_dim: usize) -> usize {
    hidden_dim * input_dim + hidden_dim + hidden_dim + 1
}

/// Thresholded class decision: 1 iff `forward(x) ≥ threshold`.
pub fn predict_binary(model: &MlpModel, x: &[f64], threshold: f64) -> Result<usize, MlpError> {
    Ok(usize::from(model.forward(x)? >= threshold))
}

/// Random initialization: each layer's weights drawn uniformly from
/// `±1/√fan_in` (fan-in D for the hidden layer, H for the output layer),
/// biases zero. Draw order is w1 row-major then w2, so a seed pins every
/// weight.
pub fn init_weights(input_dim: usize, hidden_dim: usize, seed: u64) -> MlpModel {
    assert!(input_dim >= 1 && hidden_dim >= 1, "degenerate dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound1 = 1.0 / (input_dim as f64).sqrt();
    let w1 = Array2::from_shape_fn((hidden_dim, input_dim), |_| {
        rng.random_range(-bound1..bound1)
    });
    let bound2 = 1.0 / (hidden_dim as f64).sqrt();
    let w2 = Array1::from_shape_fn(hidden_dim, |_| rng.random_range(-bound2..bound2));
    MlpModel {
        w1,
        b1: Array1::zeros(hidden_dim),
        w2,
        b2: 0.0,
    }
}

/// Phase lengths and seed for the two-stage optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub bp_epochs: usize,
    pub bp_learning_rate: f64,
    pub cg_epochs: usize,
    /// Fixes weight initialization (training itself is deterministic).
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> TrainSchedule {
        TrainSchedule {
            bp_epochs: 100,
            bp_learning_rate: 0.01,
            cg_epochs: 500,
            seed: 42,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), MlpError> {
        if !(self.bp_learning_rate.is_finite() && self.bp_learning_rate > 0.0) {
            return Err(MlpError::BadSchedule(format!(
                "learning rate must be positive and finite, got {}",
                self.bp_learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-epoch MSE of both phases; `bp.len()` and `cg.len()` always equal the
/// scheduled epoch counts (a CG run that stops early repeats its final value
/// for the remaining zero-step epochs).
#[derive(Debug, Clone, PartialEq)]
pub struct LossTrace {
    pub bp: Vec<f64>,
    pub cg: Vec<f64>,
}

/// A fully trained model plus its optimization history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMlp {
    pub model: MlpModel,
    pub trace: LossTrace,
    /// CG stopped before its epoch budget (zero gradient or ten consecutive
    /// stalled line searches).
    pub cg_converged_early: bool,
}

fn validate_xy(input_dim: usize, x: ArrayView2<f64>, y: &[f64]) -> Result<(), MlpError> {
    if x.nrows() == 0 {
        return Err(MlpError::EmptyDataset);
    }
    if x.ncols() != input_dim {
        return Err(MlpError::DimensionMismatch(format!(
            "data has {} features, model expects {input_dim}",
            x.ncols()
        )));
    }
    if y.len() != x.nrows() {
        return Err(MlpError::DimensionMismatch(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    for (index, &value) in y.iter().enumerate() {
        if value != 0.0 && value != 1.0 {
            return Err(MlpError::NonBinaryTarget { index, value });
        }
    }
    for (row, r) in x.outer_iter().enumerate() {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(MlpError::NonFiniteFeature { row });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Batched forward/backward over a flat parameter vector. All heavy work is
// three GEMMs per pass (X·W₁ᵀ forward, Hᵀδ₂ and Δ₁ᵀX backward).
// ---------------------------------------------------------------------

struct FlatViews<'a> {
    w1: ArrayView2<'a, f64>,
    b1: ArrayView1<'a, f64>,
    w2: ArrayView1<'a, f64>,
    b2: f64,
}

fn flat_views(theta: &[f64], input_dim: usize, hidden_dim: usize) -> FlatViews<'_> {
    debug_assert_eq!(theta.len(), flat_len(input_dim, hidden_dim));
    let (w1, rest) = theta.split_at(hidden_dim * input_dim);
    let (b1, rest) = rest.split_at(hidden_dim);
    let (w2, b2) = rest.split_at(hidden_dim);
    FlatViews {
        w1: ArrayView2::from_shape((hidden_dim, input_dim), w1).expect("contiguous"),
        b1: ArrayView1::from_shape(hidden_dim, b1).expect("contiguous"),
        w2: ArrayView1::from_shape(hidden_dim, w2).expect("contiguous"),
        b2: b2[0],
    }
}

/// Hidden activations (N×H) and clamped outputs (N) for a batch.
fn batch_forward(v: &FlatViews, x: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut hidden = x.dot(&v.w1.t());
    hidden += &v.b1;
    hidden.mapv_inplace(sigmoid);
    let mut z2 = hidden.dot(&v.w2);
    z2.mapv_inplace(|z| output_sigmoid(z + v.b2));
    (hidden, z2)
}

fn batch_loss(outputs: &Array1<f64>, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    outputs
        .iter()
        .zip(y)
        .map(|(&o, &t)| (o - t) * (o - t))
        .sum::<f64>()
        / n
}

/// MSE and its analytic gradient in the flat layout, one fused pass.
fn batch_value_grad(
    theta: &[f64],
    input_dim: usize,
    hidden_dim: usize,
    x: ArrayView2<f64>,
    y: &[f64],
    grad: &mut [f64],
) -> f64 {
    let v = flat_views(theta, input_dim, hidden_dim);
    let (hidden, outputs) = batch_forward(&v, x);
    let loss = batch_loss(&outputs, y);

    let n = y.len() as f64;
    // δ₂ᵢ = ∂L/∂z₂ᵢ = (2/N)(oᵢ − yᵢ)·oᵢ(1 − oᵢ)
    let delta2 = Array1::from_shape_fn(y.len(), |i| {
        let o = outputs[i];
        2.0 / n * (o - y[i]) * o * (1.0 - o)
    });

    let (g_w1, rest) = grad.split_at_mut(hidden_dim * input_dim);
    let (g_b1, rest) = rest.split_at_mut(hidden_dim);
    let (g_w2, g_b2) = rest.split_at_mut(hidden_dim);

    // output layer first, while `hidden` still holds the activations
    let grad_w2 = hidden.t().dot(&delta2);
    for (g, s) in g_w2.iter_mut().zip(grad_w2) {
        *g = s;
    }
    g_b2[0] = delta2.sum();

    // Δ₁ᵢⱼ = δ₂ᵢ · w₂ⱼ · hᵢⱼ(1 − hᵢⱼ), overwriting the activations in place
    let mut delta1 = hidden;
    for (i, mut row) in delta1.outer_iter_mut().enumerate() {
        for (j, hij) in row.iter_mut().enumerate() {
            *hij = delta2[i] * v.w2[j] * *hij * (1.0 - *hij);
        }
    }
    let grad_w1 = delta1.t().dot(&x);
    g_w1.copy_from_slice(grad_w1.as_slice().expect("contiguous"));
    for (g, s) in g_b1.iter_mut().zip(delta1.sum_axis(Axis(0))) {
        *g = s;
    }
    loss
}

struct MseObjective<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    input_dim: usize,
    hidden_dim: usize,
}

impl Objective for MseObjective<'_> {
    fn dim(&self) -> usize {
        flat_len(self.input_dim, self.hidden_dim)
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let v = flat_views(theta, self.input_dim, self.hidden_dim);
        let (_, outputs) = batch_forward(&v, self.x);
        batch_loss(&outputs, self.y)
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        batch_value_grad(theta, self.input_dim, self.hidden_dim, self.x, self.y, grad)
    }
}

/// Mean squared error of the model on binary targets.
pub fn mse<'a>(model: &MlpModel, x: ArrayView2<'a, f64>, y: &'a [f64]) -> Result<f64, MlpError> {
    model.check_shapes()?;
    validate_xy(model.input_dim(), x, y)?;
    let theta = model.to_flat();
    let obj = MseObjective {
        x,
        y,
        input_dim: model.input_dim(),
        hidden_dim: model.hidden_dim(),
    };
    Ok(obj.value(&theta))
}

/// Analytic gradient of [`mse`] in the flat layout `[w1 row-major, b1, w2,
/// b2]`.
pub fn gradient(model: &MlpModel, x: ArrayView2<f64>, y: &[f64]) -> Result<Vec<f64>, MlpError> {
    model.check_shapes()?;
    validate_xy(model.input_dim(), x, y)?;
    let theta = model.to_flat();
    let mut grad = vec![0.0; theta.len()];
    batch_value_grad(
        &theta,
        model.input_dim(),
        model.hidden_dim(),
        x,
        y,
        &mut grad,
    );
    Ok(grad)
}

/// Full-batch gradient descent (`θ ← θ − lr·∇mse`), recording the MSE after
/// each epoch.
pub fn train_bp<'a>(
    model: &MlpModel,
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    schedule: &TrainSchedule,
) -> Result<(MlpModel, Vec<f64>), MlpError> {
    model.check_shapes()?;
    validate_xy(model.input_dim(), x, y)?;
    schedule.validate()?;
    let (d, h) = (model.input_dim(), model.hidden_dim());
    let obj = MseObjective {
        x,
        y,
        input_dim: d,
        hidden_dim: h,
    };
    let mut theta = model.to_flat();
    let mut grad = vec![0.0; theta.len()];
    let mut trace = Vec::with_capacity(schedule.bp_epochs);
    for epoch in 0..schedule.bp_epochs {
        // the value at the pre-step point is the post-step value of the
        // previous epoch, so one fused pass per epoch records the trace
        let value_before = obj.value_grad(&theta, &mut grad);
        if !value_before.is_finite() {
            return Err(MlpError::NonFiniteLoss { phase: "bp", epoch });
        }
        if epoch > 0 {
            trace.push(value_before);
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= schedule.bp_learning_rate * *g;
        }
    }
    if schedule.bp_epochs > 0 {
        let final_value = obj.value(&theta);
        if !final_value.is_finite() {
            return Err(MlpError::NonFiniteLoss {
                phase: "bp",
                epoch: schedule.bp_epochs - 1,
            });
        }
        trace.push(final_value);
    }
    Ok((MlpModel::from_flat(d, h, &theta)?, trace))
}

/// Conjugate-gradient refinement; one line search per epoch. Returns the
/// refined model, the per-epoch MSE (always `cg_epochs` long — early stops
/// repeat the final value), and whether the run stopped early.
pub fn train_cg<'a>(
    model: &MlpModel,
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    schedule: &TrainSchedule,
) -> Result<(MlpModel, Vec<f64>, bool), MlpError> {
    model.check_shapes()?;
    validate_xy(model.input_dim(), x, y)?;
    schedule.validate()?;
    let (d, h) = (model.input_dim(), model.hidden_dim());
    let obj = MseObjective {
        x,
        y,
        input_dim: d,
        hidden_dim: h,
    };
    let theta = model.to_flat();
    if schedule.cg_epochs == 0 {
        return Ok((model.clone(), Vec::new(), false));
    }
    let initial = obj.value(&theta);
    let result = minimize(
        &obj,
        &theta,
        &CgParams {
            max_iters: schedule.cg_epochs,
            ..CgParams::default()
        },
    );
    let mut trace = result.values;
    let pad = trace.last().copied().unwrap_or(initial);
    trace.resize(schedule.cg_epochs, pad);
    Ok((
        MlpModel::from_flat(d, h, &result.theta)?,
        trace,
        result.converged,
    ))
}

/// The full training recipe: seeded initialization, `bp_epochs` of gradient
/// descent, then `cg_epochs` of conjugate gradient.
pub fn train_full<'a>(
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    hidden_dim: usize,
    schedule: &TrainSchedule,
) -> Result<TrainedMlp, MlpError> {
    if x.ncols() == 0 {
        return Err(MlpError::DimensionMismatch(
            "training data has zero feature columns".to_string(),
        ));
    }
    let model = init_weights(x.ncols(), hidden_dim, schedule.seed);
    let (model, bp) = train_bp(&model, x, y, schedule)?;
    let (model, cg, cg_converged_early) = train_cg(&model, x, y, schedule)?;
    Ok(TrainedMlp {
        model,
        trace: LossTrace { bp, cg },
        cg_converged_early,
    })
}

// ---------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------

/// Serializes a model with 17-significant-digit decimals (lossless for f64).
pub fn model_to_text(model: &MlpModel) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    s.push_str("mlp v1\n");
    let _ = writeln!(s, "dims {} {}", model.input_dim(), model.hidden_dim());
    for (i, row) in model.w1.outer_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "w1 {i} {}", cells.join(" "));
    }
    let cells: Vec<String> = model.b1.iter().map(|v| format!("{v:.16e}")).collect();
    let _ = writeln!(s, "b1 {}", cells.join(" "));
    let cells: Vec<String> = model.w2.iter().map(|v| format!("{v:.16e}")).collect();
    let _ = writeln!(s, "w2 {}", cells.join(" "));
    let _ = writeln!(s, "b2 {:.16e}", model.b2);
    s.push_str("end\n");
    s
}

/// Parses [`model_to_text`] output, validating shape and finiteness.
pub fn model_from_text(text: &str) -> Result<MlpModel, MlpError> {
    let fail = |line_no: usize, msg: &str| MlpError::ParseModel(format!("line {line_no}: {msg}"));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| MlpError::ParseModel(format!("unexpected end of input, expected {what}")))
    };

    let (no, header) = next("header")?;
    if header.trim() != "mlp v1" {
        return Err(fail(no, "expected header `mlp v1`"));
    }
    let (no, dims_line) = next("dims")?;
    let tokens: Vec<&str> = dims_line.split_whitespace().collect();
    if tokens.len() != 3 || tokens[0] != "dims" {
        return Err(fail(no, "expected `dims <D> <H>`"));
    }
    let d: usize = tokens[1].parse().map_err(|_| fail(no, "bad input dim"))?;
    let h: usize = tokens[2].parse().map_err(|_| fail(no, "bad hidden dim"))?;
    if d == 0 || h == 0 {
        return Err(fail(no, "dims must be positive"));
    }

    let parse_floats = |no: usize, tokens: &[&str], expect: usize| -> Result<Vec<f64>, MlpError> {
        if tokens.len() != expect {
            return Err(fail(
                no,
                &format!("expected {expect} values, found {}", tokens.len()),
            ));
        }
        tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| fail(no, &format!("bad weight `{t}`")))
            })
            .collect()
    };

    let mut w1 = Vec::with_capacity(h * d);
    for expect_row in 0..h {
        let (no, line) = next("w1 row")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 || tokens[0] != "w1" || tokens[1] != expect_row.to_string() {
            return Err(fail(no, &format!("expected `w1 {expect_row} ...`")));
        }
        w1.extend(parse_floats(no, &tokens[2..], d)?);
    }
    let (no, line) = next("b1")?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&"b1") {
        return Err(fail(no, "expected `b1 ...`"));
    }
    let b1 = parse_floats(no, &tokens[1..], h)?;
    let (no, line) = next("w2")?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&"w2") {
        return Err(fail(no, "expected `w2 ...`"));
    }
    let w2 = parse_floats(no, &tokens[1..], h)?;
    let (no, line) = next("b2")?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&"b2") {
        return Err(fail(no, "expected `b2 ...`"));
    }
    let b2 = parse_floats(no, &tokens[1..], 1)?[0];
    let (no, line) = next("end")?;
    if line.trim() != "end" {
        return Err(fail(no, "expected `end`"));
    }

    Ok(MlpModel {
        w1: Array2::from_shape_vec((h, d), w1).expect("counted"),
        b1: Array1::from_vec(b1),
        w2: Array1::from_vec(w2),
        b2,
    })
}
