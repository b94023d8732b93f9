use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cells::{gru_backward, gru_forward, lstm_backward, lstm_forward, CellGrads};
use super::cells::{GruTrace, LstmTrace};
use super::params::{DENSE_B, DENSE_W, EMBEDDING, GRU_BWD, GRU_FWD, LSTM_BWD, LSTM_FWD};
use super::{ModelError, ModelParameters};
use crate::corpus::PAD_INDEX;
use crate::linalg::{gemv_add, gemv_t_add, log_sum_exp, outer_add, softmax};
use crate::{parallel, seed};

/// Examples per gradient-accumulation chunk. Chunks are summed in order, so
/// the reduction does not depend on the thread count.
const CHUNK: usize = 8;

/// Everything the backward pass needs for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Non-padding token indices, in order.
    tokens: Vec<u32>,
    /// Embedded inputs after spatial dropout, `(len, emb_dim)`.
    xs: Vec<f64>,
    spatial_mask: Option<Vec<f64>>,
    lstm: [LstmTrace; 2],
    /// BiLSTM output after dropout, `(len, 2·lstm_units)`.
    a1: Vec<f64>,
    mask1: Option<Vec<f64>>,
    gru: [GruTrace; 2],
    mask2: Option<Vec<f64>>,
    /// Winning position per pooled feature; `None` for an empty sequence.
    argmax: Option<Vec<usize>>,
    features: Vec<f64>,
    pub probabilities: Vec<f64>,
    logits: Vec<f64>,
}

impl ForwardTrace {
    /// Number of non-padding steps that were run.
    pub fn steps(&self) -> usize {
        self.tokens.len()
    }

    /// The concatenated pooled features fed to the dense layer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

pub struct ForwardOutput {
    pub probabilities: Vec<Vec<f64>>,
    /// One trace per sequence in training mode, `None` in inference mode.
    pub traces: Option<Vec<ForwardTrace>>,
}

fn dropout_mask(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> Option<Vec<f64>> {
    (rate > 0.0).then(|| {
        let keep = 1.0 / (1.0 - rate);
        (0..len)
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect()
    })
}

fn apply_mask(values: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        values.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
    }
}

/// Interleaves forward and backward direction outputs per position.
fn concat_directions(fwd: &[f64], bwd: &[f64], len: usize, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len * 2 * h);
    for t in 0..len {
        out.extend_from_slice(&fwd[t * h..(t + 1) * h]);
        out.extend_from_slice(&bwd[t * h..(t + 1) * h]);
    }
    out
}

fn split_directions(both: &[f64], len: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut fwd = Vec::with_capacity(len * h);
    let mut bwd = Vec::with_capacity(len * h);
    for row in both.chunks_exact(2 * h).take(len) {
        fwd.extend_from_slice(&row[..h]);
        bwd.extend_from_slice(&row[h..]);
    }
    (fwd, bwd)
}

/// Column-wise max over `len` rows; zeros and no argmax for an empty input.
fn max_pool(values: &[f64], len: usize, width: usize) -> (Vec<f64>, Option<Vec<usize>>) {
    if len == 0 {
        return (vec![0.0; width], None);
    }
    let mut best = values[..width].to_vec();
    let mut arg = vec![0usize; width];
    for t in 1..len {
        for (j, &v) in values[t * width..(t + 1) * width].iter().enumerate() {
            if v > best[j] {
                best[j] = v;
                arg[j] = t;
            }
        }
    }
    (best, Some(arg))
}

fn check_indices(seq: &[u32], rows: usize) -> Result<(), ModelError> {
    match seq.iter().find(|&&i| i as usize >= rows) {
        Some(&index) => Err(ModelError::IndexOutOfRange { index, rows }),
        None => Ok(()),
    }
}

fn forward_one(
    params: &ModelParameters,
    seq: &[u32],
    training: bool,
    rng: &mut ChaCha8Rng,
) -> ForwardTrace {
    let cfg = params.config();
    let (d, h1, h2) = (cfg.emb_dim, cfg.lstm_units, cfg.gru_units);
    let tokens: Vec<u32> = seq.iter().copied().filter(|&i| i != PAD_INDEX).collect();
    let len = tokens.len();

    let embedding = params.embedding();
    let mut xs = Vec::with_capacity(len * d);
    for &tok in &tokens {
        let i = tok as usize;
        xs.extend_from_slice(&embedding[i * d..(i + 1) * d]);
    }
    let rate = |r: f64| if training { r } else { 0.0 };
    let spatial_mask = dropout_mask(rng, d, rate(cfg.spatial_dropout_rate));
    if let Some(m) = &spatial_mask {
        for row in xs.chunks_exact_mut(d) {
            row.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
        }
    }

    let lstm = [
        lstm_forward(&params.lstm(LSTM_FWD), &xs, len, false),
        lstm_forward(&params.lstm(LSTM_BWD), &xs, len, true),
    ];
    let mut a1 = concat_directions(&lstm[0].h, &lstm[1].h, len, h1);
    let mask1 = dropout_mask(rng, a1.len(), rate(cfg.dropout_rate));
    apply_mask(&mut a1, &mask1);

    let gru = [
        gru_forward(&params.gru(GRU_FWD), &a1, len, false),
        gru_forward(&params.gru(GRU_BWD), &a1, len, true),
    ];
    let mut a2 = concat_directions(&gru[0].h, &gru[1].h, len, h2);
    let mask2 = dropout_mask(rng, a2.len(), rate(cfg.dropout_rate));
    apply_mask(&mut a2, &mask2);

    let (pool1, arg1) = max_pool(&a1, len, 2 * h1);
    let (pool2, arg2) = max_pool(&a2, len, 2 * h2);
    let argmax = arg1.zip(arg2).map(|(mut a, b)| {
        a.extend(b);
        a
    });
    let mut features = pool1;
    features.extend(pool2);

    let mut logits = params.slice(DENSE_B).to_vec();
    gemv_add(
        &mut logits,
        params.slice(DENSE_W),
        features.len(),
        &features,
    );
    let probabilities = softmax(&logits);

    ForwardTrace {
        tokens,
        xs,
        spatial_mask,
        lstm,
        a1,
        mask1,
        gru,
        mask2,
        argmax,
        features,
        probabilities,
        logits,
    }
}

/// Adds `scale · ∂(−log p[label])/∂θ` for one traced sequence into `grad`
/// (laid out like the trainable prefix).
fn backward_one(
    params: &ModelParameters,
    trace: &ForwardTrace,
    label: usize,
    scale: f64,
    grad: &mut [f64],
) {
    let cfg = params.config();
    let (d, h1, h2) = (cfg.emb_dim, cfg.lstm_units, cfg.gru_units);
    let len = trace.steps();
    let blocks = params.blocks();

    let mut dlogits: Vec<f64> = trace.probabilities.iter().map(|p| p * scale).collect();
    dlogits[label] -= scale;

    let width = trace.features.len();
    outer_add(
        &mut grad[blocks[DENSE_W].range()],
        &dlogits,
        &trace.features,
    );
    for (g, dl) in grad[blocks[DENSE_B].range()].iter_mut().zip(&dlogits) {
        *g += dl;
    }
    let Some(argmax) = &trace.argmax else {
        return;
    };
    let mut dfeat = vec![0.0; width];
    gemv_t_add(&mut dfeat, params.slice(DENSE_W), width, &dlogits);

    let mut da1 = vec![0.0; len * 2 * h1];
    let mut da2 = vec![0.0; len * 2 * h2];
    for (j, (&t, &g)) in argmax.iter().zip(&dfeat).enumerate() {
        if j < 2 * h1 {
            da1[t * 2 * h1 + j] += g;
        } else {
            let j = j - 2 * h1;
            da2[t * 2 * h2 + j] += g;
        }
    }

    apply_mask(&mut da2, &trace.mask2);
    let (dh_f, dh_b) = split_directions(&da2, len, h2);
    for (dir, first, reverse, dh) in [(0, GRU_FWD, false, &dh_f), (1, GRU_BWD, true, &dh_b)] {
        let grads = cell_grads(params, grad, first);
        gru_backward(
            &params.gru(first),
            &trace.a1,
            &trace.gru[dir],
            len,
            reverse,
            dh,
            grads,
            &mut da1,
        );
    }

    apply_mask(&mut da1, &trace.mask1);
    let (dh_f, dh_b) = split_directions(&da1, len, h1);
    let mut dxs = vec![0.0; len * d];
    for (dir, first, reverse, dh) in [(0, LSTM_FWD, false, &dh_f), (1, LSTM_BWD, true, &dh_b)] {
        let grads = cell_grads(params, grad, first);
        lstm_backward(
            &params.lstm(first),
            &trace.xs,
            &trace.lstm[dir],
            len,
            reverse,
            dh,
            grads,
            &mut dxs,
        );
    }

    if cfg.train_embeddings {
        let emb = blocks[EMBEDDING].offset;
        for (t, &tok) in trace.tokens.iter().enumerate() {
            let row = &mut grad[emb + tok as usize * d..emb + (tok as usize + 1) * d];
            let dx = &dxs[t * d..(t + 1) * d];
            match &trace.spatial_mask {
                Some(m) => row
                    .iter_mut()
                    .zip(dx.iter().zip(m))
                    .for_each(|(r, (g, k))| *r += g * k),
                None => row.iter_mut().zip(dx).for_each(|(r, g)| *r += g),
            }
        }
    }
}

fn cell_grads<'a>(params: &ModelParameters, grad: &'a mut [f64], first: usize) -> CellGrads<'a> {
    let blocks = params.blocks();
    let (w, u, b) = (&blocks[first], &blocks[first + 1], &blocks[first + 2]);
    debug_assert!(w.offset + w.len() == u.offset && u.offset + u.len() == b.offset);
    let region = &mut grad[w.offset..b.offset + b.len()];
    let (gw, rest) = region.split_at_mut(w.len());
    let (gu, gb) = rest.split_at_mut(u.len());
    CellGrads {
        w: gw,
        u: gu,
        b: gb,
    }
}

fn example_rng(base: u64, i: usize) -> ChaCha8Rng {
    seed::rng(base, &[seed::stream::DROPOUT, i as u64])
}

/// Runs the network over a batch.
///
/// In training mode dropout is active and a trace is kept per sequence.
/// Each sequence draws its dropout masks from its own stream derived from
/// one number taken from `rng`.
pub fn forward<S: AsRef<[u32]> + Sync>(
    batch: &[S],
    params: &ModelParameters,
    training: bool,
    rng: &mut impl Rng,
) -> Result<ForwardOutput, ModelError> {
    let rows = params.vocab_size();
    for seq in batch {
        check_indices(seq.as_ref(), rows)?;
    }
    let base: u64 = rng.gen();
    let run = |(i, seq): (usize, &S)| {
        forward_one(params, seq.as_ref(), training, &mut example_rng(base, i))
    };
    let traces: Vec<ForwardTrace> = if parallel::deterministic() {
        batch.iter().enumerate().map(run).collect()
    } else {
        batch.par_iter().enumerate().map(run).collect()
    };
    let probabilities = traces.iter().map(|t| t.probabilities.clone()).collect();
    Ok(ForwardOutput {
        probabilities,
        traces: training.then_some(traces),
    })
}

/// Mean cross-entropy of a batch and its gradient w.r.t. the trainable
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Examples whose argmax matched the label.
    pub correct: usize,
}

/// Training-mode forward and backward pass over a batch.
pub fn loss_and_grad<S: AsRef<[u32]> + Sync>(
    batch: &[S],
    labels: &[usize],
    params: &ModelParameters,
    rng: &mut impl Rng,
) -> Result<BatchLoss, ModelError> {
    if batch.len() != labels.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} sequences but {} labels",
            batch.len(),
            labels.len()
        )));
    }
    if batch.is_empty() {
        return Err(ModelError::ShapeMismatch("empty batch".into()));
    }
    let classes = params.config().num_classes;
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(ModelError::BadLabel(bad));
    }
    let rows = params.vocab_size();
    for seq in batch {
        check_indices(seq.as_ref(), rows)?;
    }

    let base: u64 = rng.gen();
    let scale = 1.0 / batch.len() as f64;
    let n = params.trainable_len();
    let chunk = |c: usize| -> (f64, usize, Vec<f64>) {
        let mut grad = vec![0.0; n];
        let mut loss = 0.0;
        let mut correct = 0;
        let end = (c * CHUNK + CHUNK).min(batch.len());
        for i in c * CHUNK..end {
            let trace = forward_one(params, batch[i].as_ref(), true, &mut example_rng(base, i));
            loss += log_sum_exp(&trace.logits) - trace.logits[labels[i]];
            if argmax(&trace.probabilities) == labels[i] {
                correct += 1;
            }
            backward_one(params, &trace, labels[i], scale, &mut grad);
        }
        (loss, correct, grad)
    };
    let chunks = batch.len().div_ceil(CHUNK);
    let parts: Vec<(f64, usize, Vec<f64>)> = if parallel::deterministic() || chunks == 1 {
        (0..chunks).map(chunk).collect()
    } else {
        (0..chunks).into_par_iter().map(chunk).collect()
    };

    let mut parts = parts.into_iter();
    let (mut loss, mut correct, mut grad) = parts.next().expect("non-empty batch");
    for (l, c, g) in parts {
        loss += l;
        correct += c;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok(BatchLoss {
        loss: loss * scale,
        grad,
        correct,
    })
}

/// Index of the largest probability; ties go to the lowest index.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Mean cross-entropy against the given labels.
    pub loss: f64,
}

/// Inference-mode predictions, accuracy, loss and confusion matrix.
pub fn predict<S: AsRef<[u32]> + Sync>(
    batch: &[S],
    labels: &[usize],
    params: &ModelParameters,
) -> Result<Prediction, ModelError> {
    let classes = params.config().num_classes;
    if batch.len() != labels.len() {
        return Err(ModelError::ShapeMismatch(
            "sequence and label counts differ".into(),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(ModelError::BadLabel(bad));
    }
    let mut rng = seed::rng(0, &[]);
    let out = forward(batch, params, false, &mut rng)?;
    Ok(score(&out.probabilities, labels, classes))
}

pub(crate) fn score(probabilities: &[Vec<f64>], labels: &[usize], classes: usize) -> Prediction {
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut predicted = Vec::with_capacity(labels.len());
    let mut loss = 0.0;
    for (p, &l) in probabilities.iter().zip(labels) {
        let k = argmax(p);
        confusion[l][k] += 1;
        predicted.push(k);
        loss -= p[l].max(f64::MIN_POSITIVE).ln();
    }
    let n = labels.len();
    let correct = (0..classes).map(|c| confusion[c][c]).sum::<usize>();
    Prediction {
        labels: predicted,
        accuracy: if n == 0 {
            0.0
        } else {
            correct as f64 / n as f64
        },
        confusion,
        loss: if n == 0 { 0.0 } else { loss / n as f64 },
    }
}
