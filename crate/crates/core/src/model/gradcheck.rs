use super::{loss_and_grad, ModelError, ModelParameters};
use crate::seed;

/// Relative errors are taken as `|a − n| / max(|a|, |n|, REL_FLOOR)`, so
/// entries whose true gradient is numerically zero are judged on absolute
/// error.
pub const REL_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: &'static str,
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.blocks.iter().all(|b| b.max_rel_error < tolerance)
    }
}

/// Compares the analytic gradient against central differences with the
/// given `step`, block by block.
///
/// Every evaluation reuses the stream seeded by `seed`, so dropout masks are
/// identical across the perturbed passes. `stride` checks every n-th entry
/// of each block (1 checks all of them).
pub fn gradient_check<S: AsRef<[u32]> + Sync>(
    params: &ModelParameters,
    batch: &[S],
    labels: &[usize],
    step: f64,
    seed: u64,
    stride: usize,
) -> Result<GradCheckReport, ModelError> {
    let rng = || seed::rng(seed, &[]);
    let analytic = loss_and_grad(batch, labels, params, &mut rng())?.grad;
    let mut probe = params.clone();
    let mut blocks = Vec::new();

    for block in params.trainable_blocks() {
        let mut check = BlockCheck {
            name: block.name,
            checked: 0,
            max_rel_error: 0.0,
            max_abs_error: 0.0,
        };
        for i in block.range().step_by(stride.max(1)) {
            let original = probe.trainable()[i];
            probe.trainable_mut()[i] = original + step;
            let plus = loss_and_grad(batch, labels, &probe, &mut rng())?.loss;
            probe.trainable_mut()[i] = original - step;
            let minus = loss_and_grad(batch, labels, &probe, &mut rng())?.loss;
            probe.trainable_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[i];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(REL_FLOOR);
            check.checked += 1;
            check.max_abs_error = check.max_abs_error.max(abs);
            check.max_rel_error = check.max_rel_error.max(rel);
        }
        blocks.push(check);
    }
    Ok(GradCheckReport { blocks })
}
