use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum,
    Adagrad,
    Adadelta,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Sgd,
        OptimizerKind::SgdMomentum,
        OptimizerKind::Adagrad,
        OptimizerKind::Adadelta,
        OptimizerKind::Adam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::SgdMomentum => "sgd_momentum",
            OptimizerKind::Adagrad => "adagrad",
            OptimizerKind::Adadelta => "adadelta",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "sgd_momentum" | "momentum" => Ok(OptimizerKind::SgdMomentum),
            "adagrad" => Ok(OptimizerKind::Adagrad),
            "adadelta" => Ok(OptimizerKind::Adadelta),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(OptimError::InvalidSpec(format!("unknown optimizer {s:?}"))),
        }
    }
}

/// Optimizer kind, learning rate and the per-kind hyperparameters.
///
/// Adadelta's update is multiplied by `learning_rate` like every other
/// rule, so `learning_rate = 1.0` gives the textbook method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub momentum: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub adagrad_eps: f64,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
}

impl OptimizerSpec {
    /// Default hyperparameters; fails if `learning_rate` is not positive.
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self, OptimError> {
        let spec = Self {
            kind,
            learning_rate,
            momentum: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            adagrad_eps: 1e-10,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: String| Err(OptimError::InvalidSpec(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        for (name, v) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
            ("adadelta_rho", self.adadelta_rho),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        for (name, v) in [
            ("adam_eps", self.adam_eps),
            ("adagrad_eps", self.adagrad_eps),
            ("adadelta_eps", self.adadelta_eps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Result<Self, OptimError> {
        self.learning_rate = lr;
        self.validate()?;
        Ok(self)
    }

    /// Applies one update to `w` in place.
    ///
    /// Nothing is modified when the gradient holds a non-finite entry.
    pub fn step(
        &self,
        w: &mut [f64],
        g: &[f64],
        state: &mut OptimizerState,
    ) -> Result<(), OptimError> {
        if w.len() != g.len() || state.len() != w.len() {
            return Err(OptimError::ShapeMismatch {
                expected: w.len(),
                actual: if w.len() != g.len() {
                    g.len()
                } else {
                    state.len()
                },
            });
        }
        if state.kind() != self.kind {
            return Err(OptimError::InvalidSpec(format!(
                "state was built for {} but the spec is {}",
                state.kind(),
                self.kind
            )));
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(OptimError::NonFiniteGradient(i));
        }
        let lr = self.learning_rate;
        match state {
            OptimizerState::Sgd { .. } => {
                for (w, g) in w.iter_mut().zip(g) {
                    *w -= lr * g;
                }
            }
            OptimizerState::SgdMomentum { velocity } => {
                let mu = self.momentum;
                for ((w, g), v) in w.iter_mut().zip(g).zip(velocity.iter_mut()) {
                    *v = mu * *v + g;
                    *w -= lr * *v;
                }
            }
            OptimizerState::Adagrad { sum_sq } => {
                let eps = self.adagrad_eps;
                for ((w, g), s) in w.iter_mut().zip(g).zip(sum_sq.iter_mut()) {
                    *s += g * g;
                    *w -= lr * g / (*s + eps).sqrt();
                }
            }
            OptimizerState::Adadelta {
                avg_sq_grad,
                avg_sq_update,
            } => {
                let (rho, eps) = (self.adadelta_rho, self.adadelta_eps);
                for (i, (w, g)) in w.iter_mut().zip(g).enumerate() {
                    let eg = &mut avg_sq_grad[i];
                    let ed = &mut avg_sq_update[i];
                    *eg = rho * *eg + (1.0 - rho) * g * g;
                    let delta = -((*ed + eps).sqrt() / (*eg + eps).sqrt()) * g;
                    *ed = rho * *ed + (1.0 - rho) * delta * delta;
                    *w += lr * delta;
                }
            }
            OptimizerState::Adam { m, v, t } => {
                *t += 1;
                let (b1, b2, eps) = (self.adam_beta1, self.adam_beta2, self.adam_eps);
                let exp = i32::try_from(*t).unwrap_or(i32::MAX);
                let (c1, c2) = (1.0 - b1.powi(exp), 1.0 - b2.powi(exp));
                for (i, (w, g)) in w.iter_mut().zip(g).enumerate() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

/// Per-parameter accumulators, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Sgd {
        len: usize,
    },
    SgdMomentum {
        velocity: Vec<f64>,
    },
    Adagrad {
        sum_sq: Vec<f64>,
    },
    Adadelta {
        avg_sq_grad: Vec<f64>,
        avg_sq_update: Vec<f64>,
    },
    Adam {
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
}

impl OptimizerState {
    pub fn zeros(kind: OptimizerKind, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd { len },
            OptimizerKind::SgdMomentum => OptimizerState::SgdMomentum {
                velocity: vec![0.0; len],
            },
            OptimizerKind::Adagrad => OptimizerState::Adagrad {
                sum_sq: vec![0.0; len],
            },
            OptimizerKind::Adadelta => OptimizerState::Adadelta {
                avg_sq_grad: vec![0.0; len],
                avg_sq_update: vec![0.0; len],
            },
            OptimizerKind::Adam => OptimizerState::Adam {
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            },
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            OptimizerState::Sgd { .. } => OptimizerKind::Sgd,
            OptimizerState::SgdMomentum { .. } => OptimizerKind::SgdMomentum,
            OptimizerState::Adagrad { .. } => OptimizerKind::Adagrad,
            OptimizerState::Adadelta { .. } => OptimizerKind::Adadelta,
            OptimizerState::Adam { .. } => OptimizerKind::Adam,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            OptimizerState::Sgd { len } => *len,
            OptimizerState::SgdMomentum { velocity } => velocity.len(),
            OptimizerState::Adagrad { sum_sq } => sum_sq.len(),
            OptimizerState::Adadelta { avg_sq_grad, .. } => avg_sq_grad.len(),
            OptimizerState::Adam { m, .. } => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adam's step counter; zero for the other kinds.
    pub fn steps(&self) -> u64 {
        match self {
            OptimizerState::Adam { t, .. } => *t,
            _ => 0,
        }
    }
}
