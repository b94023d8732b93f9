//! LSTM and GRU cells, unrolled over a sequence in either direction, with
//! their backward passes.
//!
//! LSTM gates are stacked `i, f, g, o`:
//!
//! ```text
//! i, f, o = σ(W x + U h + b)    g = tanh(W x + U h + b)
//! c = f ⊙ c_prev + i ⊙ g        h = o ⊙ tanh(c)
//! ```
//!
//! GRU gates are stacked `z, r, n`, with the reset gate applied to the
//! recurrent term of the candidate:
//!
//! ```text
//! z, r = σ(W x + U h_prev + b)
//! n = tanh(W_n x + r ⊙ (U_n h_prev) + b_n)
//! h = (1 - z) ⊙ n + z ⊙ h_prev
//! ```

use super::ModelError;
use crate::linalg::{gemv_add, gemv_t_add, outer_add, sigmoid};

/// Borrowed LSTM weights: `w` is `(4H, input)`, `u` is `(4H, H)`, `b` is `4H`.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

/// Borrowed GRU weights: `w` is `(3H, input)`, `u` is `(3H, H)`, `b` is `3H`.
#[derive(Debug, Clone, Copy)]
pub struct GruParams<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

fn check(what: &str, actual: usize, expected: usize) -> Result<(), ModelError> {
    if actual == expected {
        Ok(())
    } else {
        Err(ModelError::ShapeMismatch(format!(
            "{what}: expected {expected} values, got {actual}"
        )))
    }
}

impl LstmParams<'_> {
    fn validate(&self) -> Result<(), ModelError> {
        let g = 4 * self.hidden;
        check("lstm w", self.w.len(), g * self.input)?;
        check("lstm u", self.u.len(), g * self.hidden)?;
        check("lstm b", self.b.len(), g)
    }

    /// Post-activation gates `[i, f, g, o]` for one step.
    fn gates(&self, x: &[f64], h_prev: &[f64], out: &mut [f64]) {
        let h = self.hidden;
        out.copy_from_slice(self.b);
        gemv_add(out, self.w, self.input, x);
        gemv_add(out, self.u, h, h_prev);
        for (k, v) in out.iter_mut().enumerate() {
            *v = if (2 * h..3 * h).contains(&k) {
                v.tanh()
            } else {
                sigmoid(*v)
            };
        }
    }
}

impl GruParams<'_> {
    fn validate(&self) -> Result<(), ModelError> {
        let g = 3 * self.hidden;
        check("gru w", self.w.len(), g * self.input)?;
        check("gru u", self.u.len(), g * self.hidden)?;
        check("gru b", self.b.len(), g)
    }

    /// Fills `gates` with `[z, r, n]` and `un` with `U_n h_prev`; returns h.
    fn step(
        &self,
        x: &[f64],
        h_prev: &[f64],
        gates: &mut [f64],
        un: &mut [f64],
        h_out: &mut [f64],
    ) {
        let h = self.hidden;
        let mut wx = self.b.to_vec();
        gemv_add(&mut wx, self.w, self.input, x);
        let mut uh = vec![0.0; 3 * h];
        gemv_add(&mut uh, self.u, h, h_prev);
        for k in 0..h {
            let z = sigmoid(wx[k] + uh[k]);
            let r = sigmoid(wx[h + k] + uh[h + k]);
            let n = (wx[2 * h + k] + r * uh[2 * h + k]).tanh();
            gates[k] = z;
            gates[h + k] = r;
            gates[2 * h + k] = n;
            un[k] = uh[2 * h + k];
            h_out[k] = (1.0 - z) * n + z * h_prev[k];
        }
    }
}

/// One LSTM step. Returns `(h, c)`.
pub fn lstm_cell_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmParams<'_>,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    params.validate()?;
    check("lstm x", x.len(), params.input)?;
    check("lstm h_prev", h_prev.len(), params.hidden)?;
    check("lstm c_prev", c_prev.len(), params.hidden)?;
    let h = params.hidden;
    let mut gates = vec![0.0; 4 * h];
    params.gates(x, h_prev, &mut gates);
    let mut h_out = vec![0.0; h];
    let mut c_out = vec![0.0; h];
    for k in 0..h {
        let c = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
        c_out[k] = c;
        h_out[k] = gates[3 * h + k] * c.tanh();
    }
    Ok((h_out, c_out))
}

/// One GRU step. Returns `h`.
pub fn gru_cell_step(
    x: &[f64],
    h_prev: &[f64],
    params: &GruParams<'_>,
) -> Result<Vec<f64>, ModelError> {
    params.validate()?;
    check("gru x", x.len(), params.input)?;
    check("gru h_prev", h_prev.len(), params.hidden)?;
    let h = params.hidden;
    let mut gates = vec![0.0; 3 * h];
    let mut un = vec![0.0; h];
    let mut out = vec![0.0; h];
    params.step(x, h_prev, &mut gates, &mut un, &mut out);
    Ok(out)
}

/// Step order over `len` positions.
fn order(len: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    }
}

/// Position whose state feeds step `t`, if any.
fn prev_of(t: usize, len: usize, reverse: bool) -> Option<usize> {
    if reverse {
        (t + 1 < len).then_some(t + 1)
    } else {
        t.checked_sub(1)
    }
}

/// Activations of one LSTM direction, stored by sequence position.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LstmTrace {
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn lstm_forward(p: &LstmParams<'_>, xs: &[f64], len: usize, reverse: bool) -> LstmTrace {
    let h = p.hidden;
    let mut tr = LstmTrace {
        gates: vec![0.0; len * 4 * h],
        c: vec![0.0; len * h],
        h: vec![0.0; len * h],
    };
    let zeros = vec![0.0; h];
    for t in order(len, reverse) {
        let prev = prev_of(t, len, reverse);
        let x = &xs[t * p.input..(t + 1) * p.input];
        let (h_prev, c_prev) = match prev {
            Some(s) => (
                tr.h[s * h..(s + 1) * h].to_vec(),
                tr.c[s * h..(s + 1) * h].to_vec(),
            ),
            None => (zeros.clone(), zeros.clone()),
        };
        let gates = &mut tr.gates[t * 4 * h..(t + 1) * 4 * h];
        p.gates(x, &h_prev, gates);
        for k in 0..h {
            let c = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
            tr.c[t * h + k] = c;
            tr.h[t * h + k] = gates[3 * h + k] * c.tanh();
        }
    }
    tr
}

/// Mutable gradient slices for one recurrent direction.
pub(crate) struct CellGrads<'a> {
    pub w: &'a mut [f64],
    pub u: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// Backpropagates `dh` (gradient w.r.t. each position's output) through one
/// LSTM direction, accumulating weight gradients and adding input gradients
/// into `dxs`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_backward(
    p: &LstmParams<'_>,
    xs: &[f64],
    tr: &LstmTrace,
    len: usize,
    reverse: bool,
    dh_out: &[f64],
    grads: CellGrads<'_>,
    dxs: &mut [f64],
) {
    let h = p.hidden;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];
    for t in order(len, !reverse) {
        let prev = prev_of(t, len, reverse);
        let g = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_prev = prev.map_or(&zeros[..], |s| &tr.c[s * h..(s + 1) * h]);
        let h_prev = prev.map_or(&zeros[..], |s| &tr.h[s * h..(s + 1) * h]);
        for k in 0..h {
            let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
            let tc = tr.c[t * h + k].tanh();
            let dh = dh_out[t * h + k] + dh_next[k];
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            da[k] = dc * gg * i * (1.0 - i);
            da[h + k] = dc * c_prev[k] * f * (1.0 - f);
            da[2 * h + k] = dc * i * (1.0 - gg * gg);
            da[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        let x = &xs[t * p.input..(t + 1) * p.input];
        outer_add(grads.w, &da, x);
        outer_add(grads.u, &da, h_prev);
        for (b, d) in grads.b.iter_mut().zip(&da) {
            *b += d;
        }
        gemv_t_add(&mut dxs[t * p.input..(t + 1) * p.input], p.w, p.input, &da);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        gemv_t_add(&mut dh_next, p.u, h, &da);
    }
}

/// Activations of one GRU direction, stored by sequence position.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GruTrace {
    pub gates: Vec<f64>,
    /// `U_n h_prev` per position.
    pub un: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn gru_forward(p: &GruParams<'_>, xs: &[f64], len: usize, reverse: bool) -> GruTrace {
    let h = p.hidden;
    let mut tr = GruTrace {
        gates: vec![0.0; len * 3 * h],
        un: vec![0.0; len * h],
        h: vec![0.0; len * h],
    };
    let zeros = vec![0.0; h];
    let mut h_out = vec![0.0; h];
    for t in order(len, reverse) {
        let prev = prev_of(t, len, reverse);
        let h_prev = match prev {
            Some(s) => tr.h[s * h..(s + 1) * h].to_vec(),
            None => zeros.clone(),
        };
        let x = &xs[t * p.input..(t + 1) * p.input];
        p.step(
            x,
            &h_prev,
            &mut tr.gates[t * 3 * h..(t + 1) * 3 * h],
            &mut tr.un[t * h..(t + 1) * h],
            &mut h_out,
        );
        tr.h[t * h..(t + 1) * h].copy_from_slice(&h_out);
    }
    tr
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn gru_backward(
    p: &GruParams<'_>,
    xs: &[f64],
    tr: &GruTrace,
    len: usize,
    reverse: bool,
    dh_out: &[f64],
    grads: CellGrads<'_>,
    dxs: &mut [f64],
) {
    let h = p.hidden;
    let mut dh_next = vec![0.0; h];
    let mut da = vec![0.0; 3 * h];
    let mut dun = vec![0.0; h];
    let zeros = vec![0.0; h];
    for t in order(len, !reverse) {
        let prev = prev_of(t, len, reverse);
        let g = &tr.gates[t * 3 * h..(t + 1) * 3 * h];
        let h_prev = prev.map_or(&zeros[..], |s| &tr.h[s * h..(s + 1) * h]);
        let mut dh_prev = vec![0.0; h];
        for k in 0..h {
            let (z, r, n) = (g[k], g[h + k], g[2 * h + k]);
            let dh = dh_out[t * h + k] + dh_next[k];
            let dn = dh * (1.0 - z);
            let dz = dh * (h_prev[k] - n);
            dh_prev[k] = dh * z;
            let dan = dn * (1.0 - n * n);
            let dr = dan * tr.un[t * h + k];
            da[k] = dz * z * (1.0 - z);
            da[h + k] = dr * r * (1.0 - r);
            da[2 * h + k] = dan;
            dun[k] = dan * r;
        }
        let x = &xs[t * p.input..(t + 1) * p.input];
        outer_add(grads.w, &da, x);
        for (b, d) in grads.b.iter_mut().zip(&da) {
            *b += d;
        }
        // Recurrent gradients: z and r rows see da, the n rows see dun.
        let (u_zr, u_n) = p.u.split_at(2 * h * h);
        let (gu_zr, gu_n) = grads.u.split_at_mut(2 * h * h);
        outer_add(gu_zr, &da[..2 * h], h_prev);
        outer_add(gu_n, &dun, h_prev);
        gemv_t_add(&mut dxs[t * p.input..(t + 1) * p.input], p.w, p.input, &da);
        gemv_t_add(&mut dh_prev, u_zr, h, &da[..2 * h]);
        gemv_t_add(&mut dh_prev, u_n, h, &dun);
        dh_next = dh_prev;
    }
}
