use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use super::config::*;
use super::{Cli, CliError, Command};
use crate::chart::{emit_svg_linechart, Axes, Series};
use crate::corpus::{
    prepare, Dataset, LemmaTable, PrepareOptions, SentimentLabel, StarBuckets, SuffixStripper,
};
use crate::embedding_io::{split_path_format, write_word2vec_binary, EmbeddingFormat};
use crate::fusion::{build_fused_matrix, fusion_report, CandidateKey, FusedMatrix, FusionOptions};
use crate::model::{predict, read_checkpoint, write_checkpoint, ModelConfig};
use crate::optim::{
    chart_file_name, lr_range_search, optimizer_sweep, pair_chart, pair_ids, parse_lr_grid,
    read_history_csv, write_history_csv, write_sweep_outputs, EmbeddingPair, OptimizerKind,
    OptimizerSpec, TrainData, TrainOptions, TrainingHistory, DEFAULT_BATCH_SIZE, DEFAULT_GRID,
    DEFAULT_SEARCH_EPOCHS, MAX_EPOCHS,
};

type Out<'a> = &'a mut dyn Write;

pub(super) fn execute(cli: Cli, out: Out, err: Out) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let model = cli.model.overlay(file.model);
    match cli.command {
        Command::Inspect(a) => inspect(a.overlay(file.inspect), out, err),
        Command::Prepare(a) => prepare_cmd(a.overlay(file.prepare), seed, out),
        Command::Fuse(a) => fuse(a.overlay(file.fuse), out, err),
        Command::LrFind(a) => lr_find(a.overlay(file.lr_find), &model, seed, out, err),
        Command::Train(a) => train_cmd(a.overlay(file.train), &model, seed, out, err),
        Command::Sweep(a) => sweep(a.overlay(file.sweep), &model, seed, out),
        Command::Eval(a) => eval(a.overlay(file.eval), out),
        Command::Report(a) => report(a.overlay(file.report), out),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::invalid("missing-argument", format!("--{flag} is required")))
}

fn existing(path: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    let path = required(path, flag)?;
    if !path.is_file() {
        return Err(CliError::invalid(
            "missing-file",
            format!("--{flag} {} does not exist", path.display()),
        ));
    }
    Ok(path)
}

fn optimizer(name: Option<String>) -> Result<OptimizerKind, CliError> {
    Ok(name.as_deref().unwrap_or("sgd").parse::<OptimizerKind>()?)
}

fn epochs(v: Option<usize>, default: usize) -> Result<usize, CliError> {
    let e = v.unwrap_or(default);
    if e == 0 || e > MAX_EPOCHS {
        return Err(CliError::invalid(
            "invalid-argument",
            format!("--epochs must lie in 1..={MAX_EPOCHS}"),
        ));
    }
    Ok(e)
}

fn batch(v: Option<usize>) -> Result<usize, CliError> {
    match v.unwrap_or(DEFAULT_BATCH_SIZE) {
        0 => Err(CliError::invalid(
            "invalid-argument",
            "--batch must be positive",
        )),
        b => Ok(b),
    }
}

/// Model config from the preset and overrides; sizes that depend on the
/// data are filled in later by [`TrainData::fit_config`].
fn model_config(m: &ModelArgs, seed: u64) -> Result<ModelConfig, CliError> {
    let mut cfg = match m.preset.unwrap_or(ModelPreset::Full) {
        ModelPreset::Full => ModelConfig::full_scale(seed),
        ModelPreset::Tiny => ModelConfig::tiny(1, seed),
    };
    if let Some(v) = m.lstm_units {
        cfg.lstm_units = v;
    }
    if let Some(v) = m.gru_units {
        cfg.gru_units = v;
    }
    if let Some(v) = m.dropout {
        cfg.dropout_rate = v;
    }
    if let Some(v) = m.spatial_dropout {
        cfg.spatial_dropout_rate = v;
    }
    cfg.train_embeddings |= m.train_embeddings;
    cfg.validate()?;
    Ok(cfg)
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    Ok(Dataset::read(BufReader::new(File::open(path)?))?)
}

fn load_fused(path: &Path, dataset: &Dataset) -> Result<FusedMatrix, CliError> {
    let table = EmbeddingFormat::Word2VecBinary.load(path)?.table;
    Ok(FusedMatrix::from_table(&table, &dataset.dicts)?)
}

fn load_data(dataset: &Path, fused: &Path) -> Result<TrainData, CliError> {
    let ds = load_dataset(dataset)?;
    let fm = load_fused(fused, &ds)?;
    Ok(TrainData::new(&ds, &fm)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn inspect(a: InspectArgs, out: Out, err: Out) -> Result<(), CliError> {
    let arg = required(a.file, "file")?;
    let (path, format) = match a.format {
        Some(f) => (
            arg.as_str(),
            f.parse::<EmbeddingFormat>()
                .map_err(|e| CliError::invalid("format", e.to_string()))?,
        ),
        None => split_path_format(&arg).map_err(|_| {
            CliError::invalid(
                "format",
                "give --format or a FILE:FORMAT argument (glove, w2v-bin, fasttext)",
            )
        })?,
    };
    let path = existing(Some(PathBuf::from(path)), "file")?;
    let parsed = format.load(&path)?;
    let t = &parsed.table;
    let norm = t.mean().iter().map(|v| v * v).sum::<f64>().sqrt();
    writeln!(out, "file {}", path.display())?;
    writeln!(out, "format {format}")?;
    writeln!(out, "dim {}", t.dim())?;
    writeln!(out, "vocab {}", t.len())?;
    writeln!(out, "mean_norm {norm:.6}")?;
    writeln!(out, "duplicates {}", parsed.duplicate_count())?;
    for w in &parsed.warnings {
        if !matches!(w, crate::embedding_io::ParseWarning::DuplicateToken { .. }) {
            writeln!(err, "warning: {w:?}")?;
        }
    }
    Ok(())
}

fn prepare_cmd(a: PrepareArgs, seed: u64, out: Out) -> Result<(), CliError> {
    let csv = existing(a.csv, "csv")?;
    let dest = required(a.out, "out")?;
    let buckets: StarBuckets = match a.buckets {
        Some(b) => b
            .parse()
            .map_err(|e: crate::corpus::CorpusError| CliError::invalid("buckets", e.to_string()))?,
        None => StarBuckets::default(),
    };
    let train_fraction = a.train_fraction.unwrap_or(0.9);
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CliError::invalid(
            "invalid-argument",
            "--train-fraction must lie in (0, 1)",
        ));
    }
    let max_len = a.max_len.unwrap_or(crate::corpus::DEFAULT_MAX_LEN);
    if max_len == 0 {
        return Err(CliError::invalid(
            "invalid-argument",
            "--max-len must be positive",
        ));
    }
    let lemmas = a.lemmas.map(|p| existing(Some(p), "lemmas")).transpose()?;
    let options = PrepareOptions {
        buckets,
        with_title: !a.no_title,
        max_len,
        train_fraction,
        seed,
    };

    let reader = BufReader::new(File::open(&csv)?);
    let (dataset, report) = match lemmas {
        Some(p) => {
            let table = LemmaTable::from_reader(BufReader::new(File::open(p)?))?;
            prepare(reader, &options, &table)?
        }
        None => prepare(reader, &options, &SuffixStripper)?,
    };
    let mut buf = Vec::new();
    dataset.write(&mut buf)?;
    write_file(&dest, &buf)?;

    writeln!(
        out,
        "loaded {} reviews, dropped {} malformed rows",
        report.loaded, report.dropped
    )?;
    writeln!(
        out,
        "place {:?}: {} of {} reviews ({:.1}%)",
        report.place.place,
        report.place.kept,
        report.place.total,
        100.0 * report.place.share
    )?;
    if report.place.is_tie() {
        writeln!(out, "tied with {:?}", report.place.tied_with)?;
    }
    for label in SentimentLabel::ALL {
        writeln!(
            out,
            "label {} {}",
            label.name(),
            report.label_counts[label.code()]
        )?;
    }
    writeln!(
        out,
        "train {} test {} vocab {}",
        report.train, report.test, report.vocab_size
    )?;
    writeln!(out, "wrote {}", dest.display())?;
    Ok(())
}

fn fuse(a: FuseArgs, out: Out, err: Out) -> Result<(), CliError> {
    let table_arg =
        |v: Option<String>, flag: &str| -> Result<(PathBuf, EmbeddingFormat), CliError> {
            let v = required(v, flag)?;
            let (p, f) = split_path_format(&v).map_err(|_| {
                CliError::invalid(
                    "format",
                    format!("--{flag} must look like PATH:FORMAT (glove, w2v-bin, fasttext)"),
                )
            })?;
            Ok((existing(Some(PathBuf::from(p)), flag)?, f))
        };
    let (p1, f1) = table_arg(a.emb1, "emb1")?;
    let (p2, f2) = table_arg(a.emb2, "emb2")?;
    let dataset_path = existing(a.dataset, "dataset")?;
    let dest = required(a.out, "out")?;
    let mut options = FusionOptions::default();
    if let Some(fill) = a.unknown_fill {
        if !fill.is_finite() {
            return Err(CliError::invalid(
                "invalid-argument",
                "--unknown-fill must be finite",
            ));
        }
        options.unknown_fill = fill;
    }
    if let Some(chain) = a.chain {
        options.chain = chain
            .split(',')
            .map(|k| k.trim().parse::<CandidateKey>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::invalid("chain", e.to_string()))?;
    }

    let dataset = load_dataset(&dataset_path)?;
    let e1 = f1.load(&p1)?;
    let e2 = f2.load(&p2)?;
    for (p, parsed) in [(&p1, &e1), (&p2, &e2)] {
        if parsed.duplicate_count() > 0 {
            writeln!(
                err,
                "warning: {} repeats {} tokens; first occurrences kept",
                p.display(),
                parsed.duplicate_count()
            )?;
        }
    }
    let (t1, t2) = (&e1.table, &e2.table);
    if t2.len() > t1.len() {
        writeln!(
            err,
            "warning: the second table has the larger vocabulary ({} > {}); the first table is normally the larger one",
            t2.len(),
            t1.len()
        )?;
    }
    let fused = build_fused_matrix(&dataset.dicts, t1, t2, t1.dim(), &options)?;
    let mut buf = Vec::new();
    write_word2vec_binary(&fused.to_table(&dataset.dicts)?, &mut buf)?;
    write_file(&dest, &buf)?;
    let rep = fusion_report(&fused);
    if let Some(path) = a.report {
        let mut csv = Vec::new();
        rep.write_csv(&mut csv)?;
        write_file(&path, &csv)?;
    }
    writeln!(out, "{rep}")?;
    writeln!(
        out,
        "wrote {} ({} x {})",
        dest.display(),
        fused.rows(),
        fused.dim()
    )?;
    Ok(())
}

fn lr_find(a: LrFindArgs, m: &ModelArgs, seed: u64, out: Out, err: Out) -> Result<(), CliError> {
    let dataset = existing(a.dataset, "dataset")?;
    let fused = existing(a.fused, "fused")?;
    let kind = optimizer(a.optimizer)?;
    let grid = parse_lr_grid(a.grid.as_deref().unwrap_or(DEFAULT_GRID))?;
    let opts = TrainOptions {
        epochs: epochs(a.epochs, DEFAULT_SEARCH_EPOCHS)?,
        batch_size: batch(a.batch)?,
        seed,
        pair: "lr-find".into(),
    };
    let base = model_config(m, seed)?;

    let data = load_data(&dataset, &fused)?;
    let search = lr_range_search(&data, &data.fit_config(&base), kind, &grid, &opts)?;
    writeln!(out, "learning_rate,final_train_loss")?;
    for p in &search.table {
        match p.final_loss {
            Some(l) => writeln!(out, "{},{l}", p.learning_rate)?,
            None => writeln!(out, "{},diverged", p.learning_rate)?,
        }
    }
    writeln!(out, "best {} loss {}", search.best_lr, search.best_loss)?;
    if let Some(path) = a.out {
        let mut buf = Vec::new();
        search.write_csv(&mut buf)?;
        write_file(&path, &buf)?;
    }
    if let Some(path) = a.chart {
        let points: Vec<(f64, f64)> = search
            .table
            .iter()
            .filter_map(|p| p.final_loss.map(|l| (p.learning_rate, l)))
            .collect();
        if points.len() < 2 {
            writeln!(
                err,
                "warning: fewer than two finite losses, no chart written"
            )?;
        } else {
            let axes = Axes::new(
                format!("Learning-rate search ({kind})"),
                "learning rate",
                "final training loss",
            )
            .log_x();
            let svg = emit_svg_linechart(&[Series::new(kind.name(), points)], &axes)?;
            write_file(&path, svg.as_bytes())?;
        }
    }
    Ok(())
}

fn history_bytes(h: &[TrainingHistory]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_history_csv(h, &mut buf)?;
    Ok(buf)
}

fn train_cmd(a: TrainArgs, m: &ModelArgs, seed: u64, out: Out, err: Out) -> Result<(), CliError> {
    let dataset = existing(a.dataset, "dataset")?;
    let fused = existing(a.fused, "fused")?;
    let kind = optimizer(a.optimizer)?;
    let spec = OptimizerSpec::new(kind, required(a.lr, "lr")?)?;
    let opts = TrainOptions {
        epochs: epochs(a.epochs, MAX_EPOCHS)?,
        batch_size: batch(a.batch)?,
        seed,
        pair: fused
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "fused".into()),
    };
    let base = model_config(m, seed)?;

    let data = load_data(&dataset, &fused)?;
    let outcome = crate::optim::train(&data, &data.fit_config(&base), &spec, &opts)?;
    let h = &outcome.history;
    for e in &h.epochs {
        write!(
            out,
            "epoch {} train_loss {:.6} train_acc {:.4}",
            e.epoch, e.train_loss, e.train_accuracy
        )?;
        if let (Some(l), Some(acc)) = (e.test_loss, e.test_accuracy) {
            write!(out, " test_loss {l:.6} test_acc {acc:.4}")?;
        }
        writeln!(out)?;
    }
    if h.diverged {
        writeln!(
            err,
            "warning: training diverged after {} epochs",
            h.epochs.len()
        )?;
    }
    if let Some(path) = a.out {
        let mut buf = Vec::new();
        write_checkpoint(&outcome.params, &mut buf)?;
        write_file(&path, &buf)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(path) = a.history {
        write_file(&path, &history_bytes(std::slice::from_ref(h))?)?;
    }
    if let Some(path) = a.chart {
        if h.epochs.len() < 2 {
            writeln!(err, "warning: fewer than two epochs, no chart written")?;
        } else {
            let mut series = vec![Series::new(
                "train",
                h.epochs
                    .iter()
                    .map(|e| (e.epoch as f64, e.train_loss))
                    .collect(),
            )];
            let test: Vec<(f64, f64)> = h
                .epochs
                .iter()
                .filter_map(|e| e.test_loss.map(|l| (e.epoch as f64, l)))
                .collect();
            if test.len() >= 2 {
                series.push(Series::new("test", test));
            }
            let axes = Axes::new(
                format!("{} lr {}", kind, spec.learning_rate),
                "epoch",
                "loss",
            );
            write_file(&path, emit_svg_linechart(&series, &axes)?.as_bytes())?;
        }
    }
    Ok(())
}

/// Reads `pair,fused` rows; relative paths resolve against the manifest.
fn read_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let bad = |m: String| CliError::invalid("manifest", m);
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let (ci, cf) = (col("pair")?, col("fused")?);
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rows = Vec::new();
    for r in reader.records() {
        let r = r.map_err(|e| bad(e.to_string()))?;
        let id = r.get(ci).unwrap_or("").trim().to_string();
        let fused = base.join(r.get(cf).unwrap_or("").trim());
        if id.is_empty() {
            return Err(bad("empty pair id".into()));
        }
        if rows.iter().any(|(p, _)| p == &id) {
            return Err(bad(format!("pair {id:?} listed twice")));
        }
        rows.push((id, existing(Some(fused), "pairs")?));
    }
    if rows.is_empty() {
        return Err(bad("no pairs listed".into()));
    }
    Ok(rows)
}

fn sweep(a: SweepArgs, m: &ModelArgs, seed: u64, out: Out) -> Result<(), CliError> {
    let dataset_path = existing(a.dataset, "dataset")?;
    let manifest = read_manifest(&existing(a.pairs, "pairs")?)?;
    let kinds: Vec<OptimizerKind> = match a.optimizers {
        Some(list) => list
            .split(',')
            .map(|k| k.parse())
            .collect::<Result<_, _>>()?,
        None => OptimizerKind::ALL.to_vec(),
    };
    if let Some(lr) = a.lr {
        OptimizerSpec::new(OptimizerKind::Sgd, lr)?;
    }
    let opts = TrainOptions {
        epochs: epochs(a.epochs, MAX_EPOCHS)?,
        batch_size: batch(a.batch)?,
        seed,
        pair: String::new(),
    };
    let out_dir = required(a.out_dir, "out-dir")?;
    let base = model_config(m, seed)?;

    let dataset = load_dataset(&dataset_path)?;
    let pairs = manifest
        .iter()
        .map(|(id, p)| {
            Ok(EmbeddingPair {
                id: id.clone(),
                data: TrainData::new(&dataset, &load_fused(p, &dataset)?)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let lr = match a.lr {
        Some(lr) => lr,
        None => {
            let first = &pairs[0].data;
            let grid = parse_lr_grid(DEFAULT_GRID)?;
            let search_opts = TrainOptions {
                epochs: DEFAULT_SEARCH_EPOCHS,
                pair: pairs[0].id.clone(),
                ..opts.clone()
            };
            let s = lr_range_search(
                first,
                &first.fit_config(&base),
                OptimizerKind::Sgd,
                &grid,
                &search_opts,
            )?;
            writeln!(out, "lr-find (sgd, {}) selected {}", pairs[0].id, s.best_lr)?;
            s.best_lr
        }
    };
    let histories = optimizer_sweep(&pairs, &base, &kinds, lr, &opts)?;
    let files = write_sweep_outputs(&histories, &out_dir)?;
    summarize(&histories, out)?;
    writeln!(out, "wrote {}", files.csv.display())?;
    for c in &files.charts {
        writeln!(out, "wrote {}", c.display())?;
    }
    Ok(())
}

fn summarize(histories: &[TrainingHistory], out: Out) -> Result<(), CliError> {
    for h in histories {
        match h.final_record() {
            Some(e) => writeln!(
                out,
                "{} {} lr {}: {} epochs, final train_loss {:.6}{}",
                h.key.pair,
                h.key.optimizer,
                h.key.learning_rate,
                e.epoch,
                e.train_loss,
                if h.diverged { " (diverged)" } else { "" }
            )?,
            None => writeln!(
                out,
                "{} {} lr {}: diverged in the first epoch",
                h.key.pair, h.key.optimizer, h.key.learning_rate
            )?,
        }
    }
    Ok(())
}

fn eval(a: EvalArgs, out: Out) -> Result<(), CliError> {
    let dataset_path = existing(a.dataset, "dataset")?;
    let ckpt = existing(a.checkpoint, "checkpoint")?;
    let split = a.split.unwrap_or_else(|| "test".into());
    if split != "test" && split != "train" {
        return Err(CliError::invalid(
            "invalid-argument",
            "--split must be train or test",
        ));
    }

    let dataset = load_dataset(&dataset_path)?;
    let params = read_checkpoint(BufReader::new(File::open(&ckpt)?))?;
    if params.vocab_size() != dataset.vocab_size() {
        return Err(CliError::runtime(
            "mismatch",
            format!(
                "checkpoint has {} embedding rows but the dataset vocabulary has {}",
                params.vocab_size(),
                dataset.vocab_size()
            ),
        ));
    }
    let examples = if split == "test" {
        &dataset.test
    } else {
        &dataset.train
    };
    let seqs: Vec<&[u32]> = examples.iter().map(|e| e.indices.as_slice()).collect();
    let labels: Vec<usize> = examples.iter().map(|e| e.label.code()).collect();
    let p = predict(&seqs, &labels, &params)?;
    writeln!(out, "split {split} examples {}", labels.len())?;
    writeln!(out, "accuracy {:.6}", p.accuracy)?;
    writeln!(out, "loss {:.6}", p.loss)?;
    writeln!(
        out,
        "confusion (rows true, columns predicted: bad neutral good)"
    )?;
    for (label, row) in SentimentLabel::ALL.iter().zip(&p.confusion) {
        writeln!(
            out,
            "  {:<8} {:>6} {:>6} {:>6}",
            label.name(),
            row[0],
            row[1],
            row[2]
        )?;
    }
    if let Some(path) = a.out {
        let mut buf = Vec::new();
        writeln!(buf, "split,examples,accuracy,loss")?;
        writeln!(buf, "{split},{},{},{}", labels.len(), p.accuracy, p.loss)?;
        write_file(&path, &buf)?;
    }
    Ok(())
}

fn report(a: ReportArgs, out: Out) -> Result<(), CliError> {
    let history = existing(a.history, "history")?;
    let out_dir = required(a.out_dir, "out-dir")?;
    let histories = read_history_csv(BufReader::new(File::open(&history)?))
        .map_err(|e| CliError::invalid("history", e.to_string()))?;
    fs::create_dir_all(&out_dir)?;
    summarize(&histories, out)?;
    for pair in pair_ids(&histories) {
        match pair_chart(&histories, &pair)? {
            Some(svg) => {
                let path = out_dir.join(chart_file_name(&pair));
                write_file(&path, svg.as_bytes())?;
                writeln!(out, "wrote {}", path.display())?;
            }
            None => writeln!(out, "{pair}: no run with two or more epochs, no chart")?,
        }
    }
    Ok(())
}
