use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{
    train, EpochRecord, OptimError, OptimizerKind, OptimizerSpec, RunKey, TrainData, TrainOptions,
    TrainingHistory,
};
use crate::chart::{emit_svg_linechart, Axes, Series};
use crate::model::ModelConfig;
use crate::parallel;

pub const HISTORY_CSV: &str = "history.csv";

const COLUMNS: [&str; 10] = [
    "pair",
    "optimizer",
    "learning_rate",
    "seed",
    "epoch",
    "train_loss",
    "train_accuracy",
    "test_loss",
    "test_accuracy",
    "diverged",
];

/// A fused embedding pair ready for training.
#[derive(Debug, Clone)]
pub struct EmbeddingPair {
    pub id: String,
    pub data: TrainData,
}

/// Trains every (pair, optimizer) cell at one learning rate.
///
/// Histories come back pair-major in the order of `pairs` and `kinds`.
/// `opts.pair` is ignored; each run is keyed by its pair id. The model
/// config is refitted to each pair's embedding width and sequence length.
pub fn optimizer_sweep(
    pairs: &[EmbeddingPair],
    config: &ModelConfig,
    kinds: &[OptimizerKind],
    learning_rate: f64,
    opts: &TrainOptions,
) -> Result<Vec<TrainingHistory>, OptimError> {
    let cells: Vec<(&EmbeddingPair, OptimizerKind)> = pairs
        .iter()
        .flat_map(|p| kinds.iter().map(move |&k| (p, k)))
        .collect();
    let run =
        |&(pair, kind): &(&EmbeddingPair, OptimizerKind)| -> Result<TrainingHistory, OptimError> {
            let spec = OptimizerSpec::new(kind, learning_rate)?;
            let opts = TrainOptions {
                pair: pair.id.clone(),
                ..opts.clone()
            };
            Ok(train(&pair.data, &pair.data.fit_config(config), &spec, &opts)?.history)
        };
    if parallel::deterministic() {
        cells.iter().map(run).collect()
    } else {
        cells.par_iter().map(run).collect()
    }
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format CSV, one row per (run, epoch). A run that diverged before
/// finishing any epoch still gets one row with empty metric fields.
pub fn write_history_csv<W: Write>(histories: &[TrainingHistory], w: W) -> Result<(), OptimError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for h in histories {
        let key = [
            h.key.pair.clone(),
            h.key.optimizer.to_string(),
            h.key.learning_rate.to_string(),
            h.key.seed.to_string(),
        ];
        if h.epochs.is_empty() {
            let mut row: Vec<String> = key.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.push(h.diverged.to_string());
            out.write_record(&row)?;
        }
        for e in &h.epochs {
            let mut row: Vec<String> = key.to_vec();
            row.extend([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.train_accuracy.to_string(),
                opt_to_string(e.test_loss),
                opt_to_string(e.test_accuracy),
                h.diverged.to_string(),
            ]);
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads histories written by [`write_history_csv`]. Consecutive rows with
/// the same run key form one history; wall-clock times come back as zero.
pub fn read_history_csv<R: Read>(r: R) -> Result<Vec<TrainingHistory>, OptimError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(OptimError::BadHistory(format!(
            "expected columns {}",
            COLUMNS.join(",")
        )));
    }
    let mut out: Vec<TrainingHistory> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let bad = |what: &str| OptimError::BadHistory(format!("line {line}: bad {what}"));
        let f = |k: usize| record.get(k).unwrap_or("");
        let num = |k: usize, what: &str| f(k).parse::<f64>().map_err(|_| bad(what));
        let opt = |k: usize, what: &str| -> Result<Option<f64>, OptimError> {
            if f(k).is_empty() {
                Ok(None)
            } else {
                num(k, what).map(Some)
            }
        };
        let key = RunKey {
            pair: f(0).to_string(),
            optimizer: f(1).parse()?,
            learning_rate: num(2, "learning_rate")?,
            seed: f(3).parse().map_err(|_| bad("seed"))?,
        };
        let diverged: bool = f(9).parse().map_err(|_| bad("diverged"))?;
        let same_run = out.last().is_some_and(|h: &TrainingHistory| {
            h.key.pair == key.pair
                && h.key.optimizer == key.optimizer
                && h.key.learning_rate.to_bits() == key.learning_rate.to_bits()
                && h.key.seed == key.seed
        });
        if !same_run {
            out.push(TrainingHistory {
                key,
                epochs: Vec::new(),
                diverged,
            });
        }
        if f(4).is_empty() {
            continue;
        }
        let history = out.last_mut().expect("pushed above");
        let epoch: usize = f(4).parse().map_err(|_| bad("epoch"))?;
        if epoch != history.epochs.len() + 1 {
            return Err(bad("epoch sequence"));
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: num(5, "train_loss")?,
            train_accuracy: num(6, "train_accuracy")?,
            test_loss: opt(7, "test_loss")?,
            test_accuracy: opt(8, "test_accuracy")?,
            wall_seconds: 0.0,
        });
    }
    Ok(out)
}

/// Pair ids in first-seen order.
pub fn pair_ids(histories: &[TrainingHistory]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for h in histories {
        if !ids.contains(&h.key.pair) {
            ids.push(h.key.pair.clone());
        }
    }
    ids
}

/// Training-loss curves for one pair, one series per optimizer. Runs with
/// fewer than two epochs cannot be drawn and are left out.
pub fn pair_loss_series(histories: &[TrainingHistory], pair: &str) -> Vec<Series> {
    histories
        .iter()
        .filter(|h| h.key.pair == pair && h.epochs.len() >= 2)
        .map(|h| {
            let label = if h.diverged {
                format!("{} (diverged)", h.key.optimizer)
            } else {
                h.key.optimizer.to_string()
            };
            let points = h
                .epochs
                .iter()
                .map(|e| (e.epoch as f64, e.train_loss))
                .collect();
            Series::new(label, points)
        })
        .collect()
}

pub fn pair_chart(histories: &[TrainingHistory], pair: &str) -> Result<Option<String>, OptimError> {
    let series = pair_loss_series(histories, pair);
    if series.is_empty() {
        return Ok(None);
    }
    let axes = Axes::new(
        format!("Optimizer comparison: {pair}"),
        "epoch",
        "training loss",
    );
    Ok(Some(emit_svg_linechart(&series, &axes)?))
}

/// File name for a pair's chart with anything outside `[A-Za-z0-9_-]`
/// replaced by `_`.
pub fn chart_file_name(pair: &str) -> String {
    let safe: String = pair
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("loss_{safe}.svg")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFiles {
    pub csv: PathBuf,
    pub charts: Vec<PathBuf>,
}

/// Writes `history.csv` and one chart per pair that has a drawable run.
pub fn write_sweep_outputs(
    histories: &[TrainingHistory],
    dir: &Path,
) -> Result<SweepFiles, OptimError> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(HISTORY_CSV);
    let mut buf = Vec::new();
    write_history_csv(histories, &mut buf)?;
    fs::write(&csv, buf)?;
    let mut charts = Vec::new();
    for pair in pair_ids(histories) {
        if let Some(svg) = pair_chart(histories, &pair)? {
            let path = dir.join(chart_file_name(&pair));
            fs::write(&path, svg)?;
            charts.push(path);
        }
    }
    Ok(SweepFiles { csv, charts })
}
