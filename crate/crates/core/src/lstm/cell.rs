use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::LstmError;
use crate::{Phase, NUM_PHASES};

/// Gate blocks are stacked as input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H x D`
    pub w_x: Array2<f64>,
    /// `4H x H`
    pub w_h: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    /// `8 x H`
    pub w_y: Array2<f64>,
    pub b_y: Array1<f64>,
}

/// Recurrent layer plus softmax head. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub lstm: LstmParams,
    pub head: ClassifierHead,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl LstmModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmModel {
            lstm: LstmParams {
                w_x: Array2::zeros((4 * hidden, input_dim)),
                w_h: Array2::zeros((4 * hidden, hidden)),
                b: Array1::zeros(4 * hidden),
            },
            head: ClassifierHead {
                w_y: Array2::zeros((NUM_PHASES, hidden)),
                b_y: Array1::zeros(NUM_PHASES),
            },
        }
    }

    /// Fan-based uniform weights, zero biases except a forget bias of one.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = LstmModel::zeros(input_dim, hidden);
        m.lstm.w_x = glorot(4 * hidden, input_dim, rng);
        m.lstm.w_h = glorot(4 * hidden, hidden, rng);
        m.head.w_y = glorot(NUM_PHASES, hidden, rng);
        m.lstm.b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        m
    }

    pub fn input_dim(&self) -> usize {
        self.lstm.w_x.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.lstm.w_h.ncols()
    }

    /// Tensors in file order: `W_x, W_h, b, W_y, b_y`.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.lstm.w_x.as_slice().expect("parameters are contiguous"),
            self.lstm.w_h.as_slice().expect("parameters are contiguous"),
            self.lstm.b.as_slice().expect("parameters are contiguous"),
            self.head.w_y.as_slice().expect("parameters are contiguous"),
            self.head.b_y.as_slice().expect("parameters are contiguous"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.lstm.w_x.as_slice_mut().expect("parameters are contiguous"),
            self.lstm.w_h.as_slice_mut().expect("parameters are contiguous"),
            self.lstm.b.as_slice_mut().expect("parameters are contiguous"),
            self.head.w_y.as_slice_mut().expect("parameters are contiguous"),
            self.head.b_y.as_slice_mut().expect("parameters are contiguous"),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row-wise softmax with max subtraction.
fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Activations kept for the backward pass. Index 0 of `h`/`c` is the zero state.
struct Trace {
    h: Vec<Array2<f64>>,
    c: Vec<Array2<f64>>,
    /// Activated gates `[i f g o]`, `B x 4H` per step.
    gates: Vec<Array2<f64>>,
    logits: Array2<f64>,
    probs: Array2<f64>,
}

/// `xs[t]` is the `B x D` input of step `t`.
fn forward_batch(model: &LstmModel, xs: &[Array2<f64>]) -> Trace {
    let hd = model.hidden();
    let batch = xs[0].nrows();
    let mut h = vec![Array2::zeros((batch, hd))];
    let mut c = vec![Array2::zeros((batch, hd))];
    let mut gates = Vec::with_capacity(xs.len());
    for x in xs {
        let mut z = x.dot(&model.lstm.w_x.t()) + h.last().unwrap().dot(&model.lstm.w_h.t()) + &model.lstm.b;
        z.slice_mut(s![.., 0..2 * hd]).mapv_inplace(sigmoid);
        z.slice_mut(s![.., 2 * hd..3 * hd]).mapv_inplace(f64::tanh);
        z.slice_mut(s![.., 3 * hd..]).mapv_inplace(sigmoid);
        let mut c_next = Array2::zeros((batch, hd));
        let mut h_next = Array2::zeros((batch, hd));
        Zip::from(&mut c_next)
            .and(&mut h_next)
            .and(c.last().unwrap())
            .and(z.slice(s![.., 0..hd]))
            .and(z.slice(s![.., hd..2 * hd]))
            .and(z.slice(s![.., 2 * hd..3 * hd]))
            .for_each(|cn: &mut f64, hn: &mut f64, &cp, &i, &f, &g| {
                *cn = f * cp + i * g;
                *hn = cn.tanh();
            });
        h_next *= &z.slice(s![.., 3 * hd..]);
        gates.push(z);
        c.push(c_next);
        h.push(h_next);
    }
    let logits = h.last().unwrap().dot(&model.head.w_y.t()) + &model.head.b_y;
    let probs = softmax_rows(&logits);
    Trace {
        h,
        c,
        gates,
        logits,
        probs,
    }
}

/// Stacks step `t` of every sequence into a `B x D` matrix.
fn batch_inputs(sequences: &[ArrayView2<f64>], input_dim: usize) -> Result<Vec<Array2<f64>>, LstmError> {
    let first = sequences
        .first()
        .ok_or_else(|| LstmError::InvalidBatch("batch is empty".into()))?;
    let steps = first.nrows();
    if steps == 0 {
        return Err(LstmError::EmptySequence);
    }
    for seq in sequences {
        if seq.ncols() != input_dim {
            return Err(LstmError::DimensionMismatch {
                got: seq.ncols(),
                want: input_dim,
            });
        }
        if seq.nrows() != steps {
            return Err(LstmError::InvalidBatch(format!(
                "sequences in a batch must share a length ({} vs {steps})",
                seq.nrows()
            )));
        }
    }
    Ok((0..steps)
        .map(|t| {
            let mut x = Array2::zeros((sequences.len(), input_dim));
            for (mut row, seq) in x.rows_mut().into_iter().zip(sequences) {
                row.assign(&seq.row(t));
            }
            x
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmOutput {
    /// `T x H`
    pub hidden: Array2<f64>,
    pub logits: [f64; NUM_PHASES],
    pub probabilities: [f64; NUM_PHASES],
}

/// Runs one `T x D` sequence from a zero state.
pub fn lstm_forward(model: &LstmModel, sequence: ArrayView2<f64>) -> Result<LstmOutput, LstmError> {
    let xs = batch_inputs(&[sequence], model.input_dim())?;
    let trace = forward_batch(model, &xs);
    let mut hidden = Array2::zeros((xs.len(), model.hidden()));
    for (mut row, h) in hidden.rows_mut().into_iter().zip(&trace.h[1..]) {
        row.assign(&h.row(0));
    }
    let mut logits = [0.0; NUM_PHASES];
    let mut probabilities = [0.0; NUM_PHASES];
    for k in 0..NUM_PHASES {
        logits[k] = trace.logits[[0, k]];
        probabilities[k] = trace.probs[[0, k]];
    }
    Ok(LstmOutput {
        hidden,
        logits,
        probabilities,
    })
}

/// Probabilities and the most likely phase. Ties go to the earlier phase.
pub fn predict(model: &LstmModel, sequence: ArrayView2<f64>) -> Result<([f64; NUM_PHASES], Phase), LstmError> {
    let out = lstm_forward(model, sequence)?;
    let mut best = 0;
    for k in 1..NUM_PHASES {
        if out.probabilities[k] > out.probabilities[best] {
            best = k;
        }
    }
    Ok((out.probabilities, Phase::from_index(best).expect("index below NUM_PHASES")))
}

/// Mean final-step cross-entropy of the batch and its gradient.
///
/// Non-finite losses are reported with zeroed cycle/epoch/batch fields; the
/// training loop fills those in.
pub fn lstm_backward(
    model: &LstmModel,
    sequences: &[ArrayView2<f64>],
    labels: &[Phase],
) -> Result<(LstmModel, f64), LstmError> {
    if sequences.len() != labels.len() {
        return Err(LstmError::InvalidBatch(format!(
            "{} sequences but {} labels",
            sequences.len(),
            labels.len()
        )));
    }
    let xs = batch_inputs(sequences, model.input_dim())?;
    let trace = forward_batch(model, &xs);
    let batch = labels.len();
    let scale = 1.0 / batch as f64;
    let hd = model.hidden();

    let mut loss = 0.0;
    let mut dlogits = trace.probs.clone();
    for (b, label) in labels.iter().enumerate() {
        let k = label.index();
        // log-softmax directly from logits keeps tiny probabilities finite.
        let row = trace.logits.row(b);
        let max = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = max + row.mapv(|v| (v - max).exp()).sum().ln();
        loss += (lse - row[k]) * scale;
        dlogits[[b, k]] -= 1.0;
    }
    if !loss.is_finite() {
        return Err(LstmError::NonFiniteLoss {
            cycle: 0,
            epoch: 0,
            batch: 0,
            loss,
        });
    }
    dlogits *= scale;

    let mut grad = LstmModel::zeros(model.input_dim(), hd);
    let h_last = trace.h.last().unwrap();
    grad.head.w_y = dlogits.t().dot(h_last);
    grad.head.b_y = dlogits.sum_axis(Axis(0));

    let mut dh = dlogits.dot(&model.head.w_y);
    let mut dc: Array2<f64> = Array2::zeros((batch, hd));
    for t in (0..xs.len()).rev() {
        let z = &trace.gates[t];
        let (c_prev, c_next) = (&trace.c[t], &trace.c[t + 1]);
        let mut dz = Array2::zeros((batch, 4 * hd));
        for b in 0..batch {
            for j in 0..hd {
                let (i, f, g, o) = (z[[b, j]], z[[b, hd + j]], z[[b, 2 * hd + j]], z[[b, 3 * hd + j]]);
                let tc = c_next[[b, j]].tanh();
                let dhj = dh[[b, j]];
                let dcj = dc[[b, j]] + dhj * o * (1.0 - tc * tc);
                dz[[b, j]] = dcj * g * i * (1.0 - i);
                dz[[b, hd + j]] = dcj * c_prev[[b, j]] * f * (1.0 - f);
                dz[[b, 2 * hd + j]] = dcj * i * (1.0 - g * g);
                dz[[b, 3 * hd + j]] = dhj * tc * o * (1.0 - o);
                dc[[b, j]] = dcj * f;
            }
        }
        grad.lstm.w_x += &dz.t().dot(&xs[t]);
        grad.lstm.w_h += &dz.t().dot(&trace.h[t]);
        grad.lstm.b += &dz.sum_axis(Axis(0));
        dh = dz.dot(&model.lstm.w_h);
    }
    Ok((grad, loss))
}

/// Mean final-step cross-entropy without gradients.
pub(crate) fn batch_loss(model: &LstmModel, sequences: &[ArrayView2<f64>], labels: &[Phase]) -> Result<f64, LstmError> {
    let xs = batch_inputs(sequences, model.input_dim())?;
    let trace = forward_batch(model, &xs);
    let mut loss = 0.0;
    for (b, label) in labels.iter().enumerate() {
        let row = trace.logits.row(b);
        let max = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = max + row.mapv(|v| (v - max).exp()).sum().ln();
        loss += lse - row[label.index()];
    }
    Ok(loss / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(d: usize, h: usize, rng: &mut ChaCha8Rng) -> LstmModel {
        let mut m = LstmModel::zeros(d, h);
        for t in m.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.random_range(-0.8..0.8);
            }
        }
        m
    }

    fn random_seq(t: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((t, d), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LstmModel::zeros(3, 4);
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        let out = lstm_forward(&m, x.view()).unwrap();
        assert!(out.hidden.iter().all(|&v| v == 0.0));
        assert!(out.probabilities.iter().all(|&p| p == 0.125));
        let (_, phase) = predict(&m, x.view()).unwrap();
        assert_eq!(phase, Phase::P1);
        let (grad, loss) = lstm_backward(&m, &[x.view()], &[Phase::P3]).unwrap();
        assert!((loss - 8f64.ln()).abs() < 1e-15);
        let mut want = Array1::from_elem(8, 0.125);
        want[2] -= 1.0;
        assert_eq!(grad.head.b_y, want);
    }

    #[test]
    fn scalar_model_matches_hand_calculation() {
        let mut m = LstmModel::zeros(1, 1);
        m.lstm.w_x = array![[0.5], [-0.3], [0.8], [0.2]];
        m.lstm.w_h = array![[0.1], [0.4], [-0.6], [0.7]];
        m.lstm.b = array![0.05, 1.0, -0.1, 0.0];
        let x = array![[1.0], [-2.0]];
        let out = lstm_forward(&m, x.view()).unwrap();

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for xt in [1.0, -2.0] {
            let i = sig(0.5 * xt + 0.1 * h + 0.05);
            let f = sig(-0.3 * xt + 0.4 * h + 1.0);
            let g = (0.8 * xt - 0.6 * h - 0.1).tanh();
            let o = sig(0.2 * xt + 0.7 * h);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        assert!((out.hidden[[1, 0]] - h).abs() < 1e-12);
    }

    #[test]
    fn hidden_is_bounded_and_probabilities_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = random_model(5, 6, &mut rng);
        m.lstm.w_x.mapv_inplace(|v| v * 50.0);
        let x = random_seq(7, 5, &mut rng);
        let out = lstm_forward(&m, x.view()).unwrap();
        assert!(out.hidden.iter().all(|v| v.abs() <= 1.0));
        assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_ignores_constant_shift() {
        let l = array![[1.0, 2.0, -3.0, 0.5, 0.0, 0.1, 7.0, -1.0]];
        let p = softmax_rows(&l);
        let q = softmax_rows(&(&l + 123.0));
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let m = LstmModel::zeros(3, 2);
        let x = Array2::zeros((2, 4));
        assert!(matches!(
            lstm_forward(&m, x.view()),
            Err(LstmError::DimensionMismatch { got: 4, want: 3 })
        ));
        assert!(matches!(lstm_forward(&m, Array2::zeros((0, 3)).view()), Err(LstmError::EmptySequence)));
    }

    #[test]
    fn duplicated_sequence_has_single_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_model(4, 3, &mut rng);
        let x = random_seq(3, 4, &mut rng);
        let (g1, l1) = lstm_backward(&m, &[x.view()], &[Phase::P4]).unwrap();
        let (g2, l2) = lstm_backward(&m, &[x.view(), x.view()], &[Phase::P4, Phase::P4]).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, h, t, b) = (7, 5, 4, 3);
        let m = random_model(d, h, &mut rng);
        let seqs: Vec<Array2<f64>> = (0..b).map(|_| random_seq(t, d, &mut rng)).collect();
        let views: Vec<_> = seqs.iter().map(|s| s.view()).collect();
        let labels = [Phase::P2, Phase::P8, Phase::P5];
        let (grad, _) = lstm_backward(&m, &views, &labels).unwrap();
        let step = 1e-6;
        for (k, g) in grad.tensors().iter().enumerate() {
            for idx in 0..g.len() {
                let mut plus = m.clone();
                plus.tensors_mut()[k][idx] += step;
                let mut minus = m.clone();
                minus.tensors_mut()[k][idx] -= step;
                let num = (batch_loss(&plus, &views, &labels).unwrap() - batch_loss(&minus, &views, &labels).unwrap())
                    / (2.0 * step);
                let err = (num - g[idx]).abs() / num.abs().max(g[idx].abs()).max(1e-4);
                assert!(err < 1e-5, "tensor {k}[{idx}]: analytic {} numeric {num}", g[idx]);
            }
        }
    }

    #[test]
    fn init_sets_forget_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = LstmModel::init(10, 3, &mut rng);
        assert_eq!(m.lstm.b.to_vec(), vec![0., 0., 0., 1., 1., 1., 0., 0., 0., 0., 0., 0.]);
        let limit = (6.0f64 / 22.0).sqrt();
        assert!(m.lstm.w_x.iter().all(|v| v.abs() <= limit));
        assert!(m.lstm.w_x.iter().any(|v| v.abs() > 0.5 * limit));
        assert!(m.head.b_y.iter().all(|&v| v == 0.0));
    }
}
