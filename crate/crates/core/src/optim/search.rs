use rayon::prelude::*;

use super::{train, OptimError, OptimizerKind, OptimizerSpec, TrainData, TrainOptions};
use crate::model::ModelConfig;
use crate::parallel;

/// Epochs per grid point in the range search.
pub const DEFAULT_SEARCH_EPOCHS: usize = 3;
pub const DEFAULT_GRID: &str = "1e-8:1e-2:log7";

/// Parses a learning-rate grid.
///
/// Accepted forms:
///
/// - `lo:hi:logN`: `N` points spaced evenly in log10 from `lo` to `hi`,
///   endpoints included. `1e-8:1e-2:log7` is one point per decade.
/// - `lo:hi:linN`: `N` evenly spaced points.
/// - `a,b,c`: an explicit list.
///
/// The result must be non-empty, positive and strictly increasing.
pub fn parse_lr_grid(text: &str) -> Result<Vec<f64>, OptimError> {
    let bad = |m: String| OptimError::InvalidGrid(m);
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{s:?} is not a number")))
    };
    let grid = match text.split(':').collect::<Vec<_>>().as_slice() {
        [lo, hi, spacing] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let spacing = spacing.trim();
            let (log, n) = if let Some(n) = spacing.strip_prefix("log") {
                (true, n)
            } else if let Some(n) = spacing.strip_prefix("lin") {
                (false, n)
            } else {
                return Err(bad(format!("spacing {spacing:?} is neither logN nor linN")));
            };
            let n: usize = n
                .parse()
                .map_err(|_| bad(format!("bad point count in {spacing:?}")))?;
            if n == 0 {
                return Err(bad("point count must be positive".into()));
            }
            if log && !(lo > 0.0 && hi > 0.0) {
                return Err(bad("log spacing needs positive bounds".into()));
            }
            if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|i| grid_point(lo, hi, i, n, log)).collect()
            }
        }
        [single] if !single.contains(',') => vec![num(single)?],
        _ if text.contains(',') && !text.contains(':') => {
            text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        }
        _ => return Err(bad(format!("cannot read grid {text:?}"))),
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn grid_point(lo: f64, hi: f64, i: usize, n: usize, log: bool) -> f64 {
    if i == 0 {
        return lo;
    }
    if i == n - 1 {
        return hi;
    }
    let t = i as f64 / (n - 1) as f64;
    if !log {
        return lo + t * (hi - lo);
    }
    let e = lo.log10() + t * (hi.log10() - lo.log10());
    if (e - e.round()).abs() < 1e-9 {
        // Exact decades read back as their literal values.
        format!("1e{}", e.round() as i64)
            .parse()
            .expect("valid literal")
    } else {
        10f64.powf(e)
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<(), OptimError> {
    if grid.is_empty() {
        return Err(OptimError::InvalidGrid("grid is empty".into()));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(OptimError::InvalidGrid(format!(
            "{v} is not a positive learning rate"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OptimError::InvalidGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One grid point's outcome; `final_loss` is `None` when the run diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct LrPoint {
    pub learning_rate: f64,
    pub final_loss: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrSearch {
    pub best_lr: f64,
    pub best_loss: f64,
    pub table: Vec<LrPoint>,
}

impl LrSearch {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), OptimError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["learning_rate", "final_train_loss", "diverged"])?;
        for p in &self.table {
            out.write_record([
                p.learning_rate.to_string(),
                p.final_loss.map(|l| l.to_string()).unwrap_or_default(),
                p.diverged.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Lowest finite loss in the table; ties go to the earlier (smaller) rate.
pub fn select_best_lr(table: &[LrPoint]) -> Result<(f64, f64), OptimError> {
    let mut best: Option<(f64, f64)> = None;
    for p in table {
        let Some(loss) = p.final_loss.filter(|l| l.is_finite() && !p.diverged) else {
            continue;
        };
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((p.learning_rate, loss));
        }
    }
    best.ok_or(OptimError::AllDiverged)
}

/// Trains briefly from the same seeded initialization at every rate in
/// `grid` and keeps the one with the lowest final-epoch training loss.
pub fn lr_range_search(
    data: &TrainData,
    config: &ModelConfig,
    kind: OptimizerKind,
    grid: &[f64],
    opts: &TrainOptions,
) -> Result<LrSearch, OptimError> {
    validate_grid(grid)?;
    let run = |&lr: &f64| -> Result<LrPoint, OptimError> {
        let spec = OptimizerSpec::new(kind, lr)?;
        let history = train(data, config, &spec, opts)?.history;
        let final_loss = if history.diverged {
            None
        } else {
            history.final_train_loss()
        };
        Ok(LrPoint {
            learning_rate: lr,
            final_loss,
            diverged: history.diverged,
        })
    };
    let table: Vec<LrPoint> = if parallel::deterministic() {
        grid.iter().map(run).collect::<Result<_, _>>()?
    } else {
        grid.par_iter().map(run).collect::<Result<_, _>>()?
    };
    let (best_lr, best_loss) = select_best_lr(&table)?;
    Ok(LrSearch {
        best_lr,
        best_loss,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(lr: f64, loss: Option<f64>) -> LrPoint {
        LrPoint {
            learning_rate: lr,
            final_loss: loss,
            diverged: loss.is_none(),
        }
    }

    #[test]
    fn default_grid_is_one_point_per_decade() {
        let g = parse_lr_grid(DEFAULT_GRID).unwrap();
        assert_eq!(g, [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2]);
    }

    #[test]
    fn other_grid_forms() {
        assert_eq!(parse_lr_grid("0.1:0.5:lin5").unwrap().len(), 5);
        assert_eq!(parse_lr_grid("1e-3,1e-2,0.1").unwrap(), [1e-3, 1e-2, 0.1]);
        assert_eq!(parse_lr_grid("0.01").unwrap(), [0.01]);
        let g = parse_lr_grid("1e-4:1e-2:log5").unwrap();
        assert!((g[1] - 10f64.powf(-3.5)).abs() < 1e-15);
        assert_eq!(g[2], 1e-3);
        for bad in [
            "",
            "1e-2:1e-8:log7",
            "0:1:log3",
            "a,b",
            "1:2:cubic4",
            "1e-3,1e-3",
        ] {
            assert!(parse_lr_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn argmin_skips_diverged_and_prefers_smaller_on_ties() {
        let table = [
            point(1e-3, Some(1.0)),
            point(1e-2, Some(0.5)),
            point(1e-1, Some(0.5)),
            point(1.0, None),
        ];
        assert_eq!(select_best_lr(&table).unwrap(), (1e-2, 0.5));
        assert!(matches!(
            select_best_lr(&[point(1.0, None)]),
            Err(OptimError::AllDiverged)
        ));
    }
}
