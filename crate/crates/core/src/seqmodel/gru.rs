//! Single GRU cell, forward and backward.
//!
//! ```text
//! z  = sigmoid(W_z x + U_z h + b_z)
//! r  = sigmoid(W_r x + U_r h + b_r)
//! n  = tanh(W_n x + U_n (r * h) + b_n)
//! h' = (1 - z) * h + z * n
//! ```
//!
//! Gate matrices are stacked row-wise in the order z, r, n.

use crate::error::{Error, Result};

/// Borrowed parameters of one GRU layer.
#[derive(Debug, Clone, Copy)]
pub struct GruLayer<'a> {
    /// `3H x input`, row-major.
    pub w_x: &'a [f64],
    /// `3H x H`, row-major.
    pub w_h: &'a [f64],
    /// `3H`
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

/// Mutable gradient buffers laid out like [`GruLayer`].
pub struct GruLayerGrad<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub b: &'a mut [f64],
}

/// Gate activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct GruStep {
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub n: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `y += W x` for row-major `W` (`y.len() x x.len()`).
#[inline]
pub(crate) fn gemv_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    for (yi, row) in y.iter_mut().zip(w.chunks_exact(cols)) {
        *yi += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `x += W^T y`.
#[inline]
pub(crate) fn gemv_t_acc(w: &[f64], y: &[f64], x: &mut [f64]) {
    let cols = x.len();
    for (yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if *yi == 0.0 {
            continue;
        }
        for (xj, wij) in x.iter_mut().zip(row) {
            *xj += yi * wij;
        }
    }
}

/// `G += y x^T`.
#[inline]
pub(crate) fn outer_acc(g: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (yi, row) in y.iter().zip(g.chunks_exact_mut(cols)) {
        if *yi == 0.0 {
            continue;
        }
        for (gij, xj) in row.iter_mut().zip(x) {
            *gij += yi * xj;
        }
    }
}

impl<'a> GruLayer<'a> {
    pub fn check(&self) -> Result<()> {
        let h3 = 3 * self.hidden;
        if self.w_x.len() != h3 * self.input || self.w_h.len() != h3 * self.hidden || self.b.len() != h3 {
            return Err(Error::domain("GRU parameter shapes are inconsistent"));
        }
        Ok(())
    }

    /// One step. Writes the new state into `h_out` and the gate values into `cache`.
    pub fn step(&self, x: &[f64], h_prev: &[f64], h_out: &mut [f64], cache: &mut GruStep) {
        let h = self.hidden;
        let mut a = self.b.to_vec();
        gemv_acc(self.w_x, x, &mut a);
        // recurrent part for z and r
        gemv_acc(&self.w_h[..2 * h * h], h_prev, &mut a[..2 * h]);
        cache.z.clear();
        cache.r.clear();
        cache.z.extend(a[..h].iter().map(|v| sigmoid(*v)));
        cache.r.extend(a[h..2 * h].iter().map(|v| sigmoid(*v)));
        let rh: Vec<f64> = cache.r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        gemv_acc(&self.w_h[2 * h * h..], &rh, &mut a[2 * h..]);
        cache.n.clear();
        cache.n.extend(a[2 * h..].iter().map(|v| v.tanh()));
        for i in 0..h {
            h_out[i] = (1.0 - cache.z[i]) * h_prev[i] + cache.z[i] * cache.n[i];
        }
    }

    /// Backward through one step.
    ///
    /// `dh` is the gradient w.r.t. the step output. Accumulates parameter
    /// gradients into `grad`, the input gradient into `dx` and the
    /// previous-state gradient into `dh_prev`.
    pub fn step_backward(
        &self,
        x: &[f64],
        h_prev: &[f64],
        cache: &GruStep,
        dh: &[f64],
        grad: &mut GruLayerGrad<'_>,
        dx: &mut [f64],
        dh_prev: &mut [f64],
    ) {
        let h = self.hidden;
        let GruStep { z, r, n } = cache;
        let mut da = vec![0.0; 3 * h];
        for i in 0..h {
            dh_prev[i] += dh[i] * (1.0 - z[i]);
            da[i] = dh[i] * (n[i] - h_prev[i]) * z[i] * (1.0 - z[i]);
            da[2 * h + i] = dh[i] * z[i] * (1.0 - n[i] * n[i]);
        }
        // candidate: a_n = W_n x + U_n (r*h) + b_n
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        let u_n = &self.w_h[2 * h * h..];
        let mut drh = vec![0.0; h];
        gemv_t_acc(u_n, &da[2 * h..], &mut drh);
        outer_acc(&mut grad.w_h[2 * h * h..], &da[2 * h..], &rh);
        for i in 0..h {
            dh_prev[i] += drh[i] * r[i];
            da[h + i] = drh[i] * h_prev[i] * r[i] * (1.0 - r[i]);
        }
        // z and r recurrent terms
        gemv_t_acc(&self.w_h[..2 * h * h], &da[..2 * h], dh_prev);
        outer_acc(&mut grad.w_h[..2 * h * h], &da[..2 * h], h_prev);
        // input terms
        outer_acc(grad.w_x, &da, x);
        for (g, d) in grad.b.iter_mut().zip(&da) {
            *g += d;
        }
        gemv_t_acc(self.w_x, &da, dx);
    }
}

/// One GRU step with explicit shape checking.
pub fn gru_cell(layer: &GruLayer<'_>, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    layer.check()?;
    if x.len() != layer.input || h_prev.len() != layer.hidden {
        return Err(Error::domain(format!(
            "GRU cell expects input {} and state {}, got {} and {}",
            layer.input,
            layer.hidden,
            x.len(),
            h_prev.len()
        )));
    }
    let mut out = vec![0.0; layer.hidden];
    layer.step(x, h_prev, &mut out, &mut GruStep::default());
    Ok(out)
}
