//! Independent reference implementations and instance generators shared by
//! the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use embfuse::{CorpusDictionaries, EmbeddingTable};
use rand::seq::SliceRandom;
use rand::Rng;

pub const BASE_WORDS: [&str; 16] = [
    "hotel", "room", "staff", "clean", "dirty", "view", "pool", "bed", "noise", "walk", "beach",
    "price", "food", "night", "door", "rooms",
];

fn variants(word: &str) -> [String; 3] {
    let mut cap = word.to_string();
    cap[..1].make_ascii_uppercase();
    [word.to_string(), cap, word.to_ascii_uppercase()]
}

/// A random fusion problem: dictionary of at most 50 words, tables of at
/// most 20 words, dimension at most 8.
pub struct FusionCase {
    pub dicts: CorpusDictionaries,
    pub emb1: EmbeddingTable,
    pub emb2: EmbeddingTable,
    pub dim: usize,
}

pub fn random_table(
    rng: &mut impl Rng,
    name: &str,
    pool: &[String],
    n: usize,
    dim: usize,
    dyadic: bool,
) -> EmbeddingTable {
    let mut words = pool.to_vec();
    words.shuffle(rng);
    words.truncate(n);
    let rows = words.into_iter().map(|w| {
        let row: Vec<f64> = (0..dim)
            .map(|_| {
                if dyadic {
                    rng.gen_range(-64i32..64) as f64 / 16.0
                } else {
                    rng.gen_range(-2.0..2.0)
                }
            })
            .collect();
        (w, row)
    });
    EmbeddingTable::from_rows(name, dim, rows).unwrap()
}

pub fn random_dicts(rng: &mut impl Rng, pool: &[String], n: usize) -> CorpusDictionaries {
    let mut words = pool.to_vec();
    words.extend((0..10).map(|i| format!("zz{i}")));
    words.shuffle(rng);
    words.truncate(n);
    CorpusDictionaries::from_entries(words.into_iter().map(|w| {
        let lemma = if rng.gen_bool(0.5) {
            BASE_WORDS.choose(rng).unwrap().to_string()
        } else {
            w.to_ascii_lowercase()
        };
        (w, lemma)
    }))
}

pub fn pool() -> Vec<String> {
    BASE_WORDS.iter().flat_map(|w| variants(w)).collect()
}

pub fn random_case(rng: &mut impl Rng, dyadic: bool) -> FusionCase {
    let pool = pool();
    let dim = rng.gen_range(1..=8);
    let n1 = rng.gen_range(1..=20);
    let n2 = rng.gen_range(1..=20);
    let n_dict = rng.gen_range(1..=50);
    FusionCase {
        dicts: random_dicts(rng, &pool, n_dict),
        emb1: random_table(rng, "e1", &pool, n1, dim, dyadic),
        emb2: random_table(rng, "e2", &pool, n2, dim, dyadic),
        dim,
    }
}

/// Dyadic entries and table sizes in {1, 2, 4, 8, 16}, so means and
/// shifts by multiples of 1/8 are exact in binary floating point.
pub fn power_of_two_case(rng: &mut impl Rng) -> FusionCase {
    let pool = pool();
    let dim = rng.gen_range(1..=8);
    let n1 = 1 << rng.gen_range(0..=4);
    let n2 = 1 << rng.gen_range(0..=4);
    let n_dict = rng.gen_range(1..=50);
    FusionCase {
        dicts: random_dicts(rng, &pool, n_dict),
        emb1: random_table(rng, "e1", &pool, n1, dim, true),
        emb2: random_table(rng, "e2", &pool, n2, dim, true),
        dim,
    }
}

/// Row-order column sum divided by the row count.
pub fn oracle_mean(table: &EmbeddingTable) -> Vec<f64> {
    let mut m = vec![0.0; table.dim()];
    for t in table.tokens() {
        for (a, b) in m.iter_mut().zip(table.get(t).unwrap()) {
            *a += *b;
        }
    }
    m.iter().map(|s| s / table.len() as f64).collect()
}

/// Straight-line reading of the fusion rules, one word at a time.
pub fn oracle_fuse(case: &FusionCase, unknown_fill: f64) -> Vec<f64> {
    let d = case.dim;
    let m1 = oracle_mean(&case.emb1);
    let m2 = oracle_mean(&case.emb2);
    let t1: HashMap<&str, &[f64]> = case
        .emb1
        .tokens()
        .iter()
        .map(|t| (t.as_str(), case.emb1.get(t).unwrap()))
        .collect();
    let t2: HashMap<&str, &[f64]> = case
        .emb2
        .tokens()
        .iter()
        .map(|t| (t.as_str(), case.emb2.get(t).unwrap()))
        .collect();

    let mut out = vec![0.0; d];
    out.extend(std::iter::repeat_n(unknown_fill, d));
    for word in case.dicts.tokens() {
        let mut capitalized = String::new();
        for (i, ch) in word.chars().enumerate() {
            if i == 0 {
                capitalized.extend(ch.to_uppercase());
            } else {
                capitalized.extend(ch.to_lowercase());
            }
        }
        let keys = [
            Some(word.clone()),
            Some(word.to_lowercase()),
            Some(capitalized),
            case.dicts.lemma_of(word).map(str::to_string),
        ];
        let mut row = None;
        for key in keys.into_iter().flatten() {
            let a = t1.get(key.as_str());
            let b = t2.get(key.as_str());
            row = match (a, b) {
                (Some(v1), Some(v2)) => Some(
                    (0..d)
                        .map(|k| (v1[k] + (v2[k] + (m1[k] - m2[k]))) / 2.0)
                        .collect::<Vec<_>>(),
                ),
                (Some(v1), None) => Some(v1.to_vec()),
                (None, Some(v2)) => Some((0..d).map(|k| v2[k] + (m1[k] - m2[k])).collect()),
                (None, None) => None,
            };
            if row.is_some() {
                break;
            }
        }
        out.extend(row.unwrap_or_else(|| vec![unknown_fill; d]));
    }
    out
}

pub fn shifted(table: &EmbeddingTable, c: f64) -> EmbeddingTable {
    let rows = table.tokens().iter().map(|t| {
        (
            t.clone(),
            table
                .get(t)
                .unwrap()
                .iter()
                .map(|v| v + c)
                .collect::<Vec<_>>(),
        )
    });
    EmbeddingTable::from_rows(table.name(), table.dim(), rows).unwrap()
}

// Scalar-loop reference cells, written out gate by gate.

pub fn scalar_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn scalar_lstm(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: &[f64],
    u: &[f64],
    b: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (n_in, n_h) = (x.len(), h_prev.len());
    let pre = |gate: usize, k: usize| {
        let row = gate * n_h + k;
        let mut s = b[row];
        for j in 0..n_in {
            s += w[row * n_in + j] * x[j];
        }
        for j in 0..n_h {
            s += u[row * n_h + j] * h_prev[j];
        }
        s
    };
    let mut h = vec![0.0; n_h];
    let mut c = vec![0.0; n_h];
    for k in 0..n_h {
        let i = scalar_sigmoid(pre(0, k));
        let f = scalar_sigmoid(pre(1, k));
        let g = pre(2, k).tanh();
        let o = scalar_sigmoid(pre(3, k));
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * c[k].tanh();
    }
    (h, c)
}

pub fn scalar_gru(x: &[f64], h_prev: &[f64], w: &[f64], u: &[f64], b: &[f64]) -> Vec<f64> {
    let (n_in, n_h) = (x.len(), h_prev.len());
    let wx = |gate: usize, k: usize| {
        let row = gate * n_h + k;
        (0..n_in).map(|j| w[row * n_in + j] * x[j]).sum::<f64>()
    };
    let uh = |gate: usize, k: usize| {
        let row = gate * n_h + k;
        (0..n_h).map(|j| u[row * n_h + j] * h_prev[j]).sum::<f64>()
    };
    (0..n_h)
        .map(|k| {
            let z = scalar_sigmoid(wx(0, k) + uh(0, k) + b[k]);
            let r = scalar_sigmoid(wx(1, k) + uh(1, k) + b[n_h + k]);
            let n = (wx(2, k) + r * uh(2, k) + b[2 * n_h + k]).tanh();
            (1.0 - z) * n + z * h_prev[k]
        })
        .collect()
}

pub fn uniform(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Largest deviation of the vectorized cells from the scalar loops over
/// `instances` random cases of each kind.
pub fn cell_oracle_max_error(seed: u64, instances: usize) -> f64 {
    use embfuse::model::{gru_cell_step, lstm_cell_step, GruParams, LstmParams};
    let mut rng = embfuse::seed::rng(seed, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n_in = rng.gen_range(1..7);
        let n_h = rng.gen_range(1..6);
        let (w, u, b) = (
            uniform(&mut rng, 4 * n_h * n_in),
            uniform(&mut rng, 4 * n_h * n_h),
            uniform(&mut rng, 4 * n_h),
        );
        let (x, h0, c0) = (
            uniform(&mut rng, n_in),
            uniform(&mut rng, n_h),
            uniform(&mut rng, n_h),
        );
        let p = LstmParams {
            w: &w,
            u: &u,
            b: &b,
            input: n_in,
            hidden: n_h,
        };
        let (h, c) = lstm_cell_step(&x, &h0, &c0, &p).unwrap();
        let (h_ref, c_ref) = scalar_lstm(&x, &h0, &c0, &w, &u, &b);
        for k in 0..n_h {
            worst = worst
                .max((h[k] - h_ref[k]).abs())
                .max((c[k] - c_ref[k]).abs());
        }

        let (w, u, b) = (
            uniform(&mut rng, 3 * n_h * n_in),
            uniform(&mut rng, 3 * n_h * n_h),
            uniform(&mut rng, 3 * n_h),
        );
        let p = GruParams {
            w: &w,
            u: &u,
            b: &b,
            input: n_in,
            hidden: n_h,
        };
        let h = gru_cell_step(&x, &h0, &p).unwrap();
        let h_ref = scalar_gru(&x, &h0, &w, &u, &b);
        for k in 0..n_h {
            worst = worst.max((h[k] - h_ref[k]).abs());
        }
    }
    worst
}

/// Steps each optimizer on ½‖w − 1‖² from w = 0 until ‖w − 1‖ < 1e-3;
/// returns the step count or `None` after `max_steps`.
pub fn steps_to_converge(
    kind: embfuse::OptimizerKind,
    lr: f64,
    dim: usize,
    max_steps: usize,
) -> Option<usize> {
    use embfuse::optim::{OptimizerSpec, OptimizerState};
    let spec = OptimizerSpec::new(kind, lr).unwrap();
    let mut state = OptimizerState::zeros(kind, dim);
    let mut w = vec![0.0; dim];
    for step in 1..=max_steps {
        let g: Vec<f64> = w.iter().map(|v| v - 1.0).collect();
        spec.step(&mut w, &g, &mut state).unwrap();
        let dist = w.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>().sqrt();
        if dist < 1e-3 {
            return Some(step);
        }
    }
    None
}

/// The default synthetic corpus with its own random embedding.
pub fn synthetic_data(seed: u64) -> embfuse::TrainData {
    let spec = embfuse::synthetic::SyntheticSpec {
        seed,
        ..Default::default()
    };
    let (dataset, fused) = embfuse::synthetic::token_corpus(&spec).unwrap();
    embfuse::TrainData::new(&dataset, &fused).unwrap()
}

/// Two fused pairs over the synthetic corpus: a full-coverage table fused
/// with two partial ones of different vocabulary.
pub fn synthetic_pairs(seed: u64) -> Vec<embfuse::optim::EmbeddingPair> {
    use embfuse::optim::EmbeddingPair;
    let spec = embfuse::synthetic::SyntheticSpec {
        seed,
        ..Default::default()
    };
    let (dataset, _) = embfuse::synthetic::token_corpus(&spec).unwrap();
    let words: Vec<String> = dataset.dicts.tokens().to_vec();
    let dim = spec.emb_dim;
    let mut rng = embfuse::seed::rng(seed, &[99]);
    let a = random_table(&mut rng, "a", &words, words.len(), dim, false);
    let b = random_table(&mut rng, "b", &words, words.len() / 2, dim, false);
    let c = random_table(&mut rng, "c", &words, words.len() * 3 / 4, dim, false);
    [("a+b", &b), ("a+c", &c)]
        .into_iter()
        .map(|(id, second)| {
            let fused = embfuse::build_fused_matrix(
                &dataset.dicts,
                &a,
                second,
                dim,
                &embfuse::FusionOptions::default(),
            )
            .unwrap();
            EmbeddingPair {
                id: id.to_string(),
                data: embfuse::TrainData::new(&dataset, &fused).unwrap(),
            }
        })
        .collect()
}

/// Tiny-model parameters with random embeddings (row 0 zero) and non-zero
/// biases so every bias gradient is exercised.
pub fn random_params(
    cfg: &embfuse::ModelConfig,
    vocab: usize,
    seed: u64,
) -> embfuse::ModelParameters {
    let mut rng = embfuse::seed::rng(seed, &[77]);
    let emb: Vec<f64> = (0..vocab * cfg.emb_dim)
        .map(|i| {
            if i < cfg.emb_dim {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    let mut p = embfuse::ModelParameters::init(cfg, &emb, vocab).unwrap();
    for name in [
        "lstm_fwd.b",
        "lstm_bwd.b",
        "gru_fwd.b",
        "gru_bwd.b",
        "dense_b",
    ] {
        for v in p.block_mut(name).unwrap() {
            *v += rng.gen_range(-0.5..0.5);
        }
    }
    p
}

/// Three length-7 sequences over a 12-word vocabulary, with padding.
pub fn tiny_batch() -> (Vec<Vec<u32>>, Vec<usize>) {
    (
        vec![
            vec![0, 0, 3, 7, 2, 9, 4],
            vec![5, 1, 8, 8, 2, 6, 3],
            vec![0, 0, 0, 0, 11, 10, 2],
        ],
        vec![2, 0, 1],
    )
}
