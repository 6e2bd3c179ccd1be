//! Bidirectional LSTM over embedded tokens with a logistic head.
//!
//! Gates are laid out in row blocks `[input, forget, output, candidate]`:
//!
//! ```text
//! i, f, o = sigmoid(W·x_t + U·h_{t-1} + b)    g = tanh(W·x_t + U·h_{t-1} + b)
//! c_t = f ⊙ c_{t-1} + i ⊙ g                   h_t = o ⊙ tanh(c_t)
//! ```
//!
//! One cell reads the sequence left to right, the other right to left. The
//! message representation is the forward state after the last non-pad token
//! concatenated with the backward state after the first token.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingTable, Vocab};
use crate::tensor::{dot, sigmoid, softplus, Matrix};

/// One input position.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Token(usize),
    /// Weighted sum of embedding rows; synthetic oversampled examples are a
    /// single such step.
    Mix(Vec<(usize, f64)>),
}

/// Steps for an id sequence: everything up to the last non-pad id.
pub fn steps_from_ids(ids: &[usize]) -> Vec<Step> {
    let len = ids.iter().rposition(|&id| id != Vocab::PAD).map_or(0, |p| p + 1);
    ids[..len].iter().map(|&id| Step::Token(id)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    /// `4H × E`
    pub w: Matrix,
    /// `4H × H`
    pub u: Matrix,
    /// `4H`
    pub b: Vec<f64>,
}

impl LstmCell {
    fn new<R: Rng>(hidden: usize, input: usize, rng: &mut R) -> Self {
        let scale = 1.0 / (hidden as f64).sqrt();
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        LstmCell {
            w: Matrix::uniform(4 * hidden, input, scale, rng),
            u: Matrix::uniform(4 * hidden, hidden, scale, rng),
            b,
        }
    }

    fn zeros_like(&self) -> Self {
        LstmCell {
            w: Matrix::zeros(self.w.rows(), self.w.cols()),
            u: Matrix::zeros(self.u.rows(), self.u.cols()),
            b: vec![0.0; self.b.len()],
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input(&self) -> usize {
        self.w.cols()
    }

    fn run(&self, xs: &[&[f64]]) -> Vec<StepCache> {
        let h = self.hidden();
        let mut caches: Vec<StepCache> = Vec::with_capacity(xs.len());
        let zeros = vec![0.0; h];
        for x in xs {
            let (h_prev, c_prev) = match caches.last() {
                Some(prev) => (prev.h.as_slice(), prev.c.as_slice()),
                None => (zeros.as_slice(), zeros.as_slice()),
            };
            let mut z = self.b.clone();
            self.w.mul_vec_add(x, &mut z);
            self.u.mul_vec_add(h_prev, &mut z);
            z[..3 * h].iter_mut().for_each(|v| *v = sigmoid(*v));
            z[3 * h..].iter_mut().for_each(|v| *v = v.tanh());
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut hs = vec![0.0; h];
            for j in 0..h {
                c[j] = z[h + j] * c_prev[j] + z[j] * z[3 * h + j];
                tanh_c[j] = c[j].tanh();
                hs[j] = z[2 * h + j] * tanh_c[j];
            }
            caches.push(StepCache { gates: z, c, tanh_c, h: hs });
        }
        caches
    }

    /// Back-propagation through time. Returns the input gradient for each
    /// processed step.
    fn backprop(&self, xs: &[&[f64]], caches: &[StepCache], dh_last: &[f64], grad: &mut LstmCell) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let zeros = vec![0.0; h];
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; h];
        let mut dxs = vec![Vec::new(); xs.len()];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..caches.len()).rev() {
            let cache = &caches[t];
            let (h_prev, c_prev) = if t > 0 {
                (caches[t - 1].h.as_slice(), caches[t - 1].c.as_slice())
            } else {
                (zeros.as_slice(), zeros.as_slice())
            };
            let g = &cache.gates;
            for j in 0..h {
                let (i, f, o, cand) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = cache.tanh_c[j];
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                let d_o = dh[j] * tc;
                let d_i = dc[j] * cand;
                let d_g = dc[j] * i;
                let d_f = dc[j] * c_prev[j];
                dz[j] = d_i * i * (1.0 - i);
                dz[h + j] = d_f * f * (1.0 - f);
                dz[2 * h + j] = d_o * o * (1.0 - o);
                dz[3 * h + j] = d_g * (1.0 - cand * cand);
                dc[j] *= f;
            }
            grad.w.add_outer(&dz, xs[t]);
            grad.u.add_outer(&dz, h_prev);
            for (gb, d) in grad.b.iter_mut().zip(&dz) {
                *gb += d;
            }
            let mut dx = vec![0.0; self.input()];
            self.w.mul_t_vec_add(&dz, &mut dx);
            dxs[t] = dx;
            let mut dh_prev = vec![0.0; h];
            self.u.mul_t_vec_add(&dz, &mut dh_prev);
            dh = dh_prev;
        }
        dxs
    }
}

struct StepCache {
    /// Activated gates `[i, f, o, g]`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Network parameters. The same struct doubles as the gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub embedding: EmbeddingTable,
    pub forward: LstmCell,
    pub backward: LstmCell,
    /// `2H`
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

pub struct ForwardPass {
    xs: Vec<Vec<f64>>,
    fwd: Vec<StepCache>,
    bwd: Vec<StepCache>,
    rep: Vec<f64>,
    pub logit: f64,
}

impl BiLstm {
    pub fn new<R: Rng>(vocab_size: usize, embedding_dim: usize, hidden: usize, embed_scale: f64, rng: &mut R) -> Self {
        let embedding = EmbeddingTable::new_uniform(vocab_size, embedding_dim, embed_scale, rng);
        let forward = LstmCell::new(hidden, embedding_dim, rng);
        let backward = LstmCell::new(hidden, embedding_dim, rng);
        let scale = 1.0 / (2.0 * hidden as f64).sqrt();
        let head_w = (0..2 * hidden).map(|_| rng.gen_range(-scale..=scale)).collect();
        BiLstm { embedding, forward, backward, head_w, head_b: 0.0 }
    }

    pub fn zeros_like(&self) -> Self {
        BiLstm {
            embedding: EmbeddingTable::from_matrix(Matrix::zeros(
                self.embedding.vocab_size(),
                self.embedding_dim(),
            )),
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
            head_w: vec![0.0; self.head_w.len()],
            head_b: 0.0,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.matrix().cols()
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    /// Checks that every tensor agrees on V, E and H.
    pub fn check_shapes(&self) -> Result<(), String> {
        let (e, h) = (self.embedding_dim(), self.hidden());
        for (name, cell) in [("forward", &self.forward), ("backward", &self.backward)] {
            if cell.w.rows() != 4 * h || cell.w.cols() != e || cell.u.rows() != 4 * h || cell.u.cols() != h || cell.b.len() != 4 * h {
                return Err(format!("{name} cell shapes inconsistent with E={e}, H={h}"));
            }
        }
        if self.head_w.len() != 2 * h {
            return Err(format!("head has {} weights, expected {}", self.head_w.len(), 2 * h));
        }
        Ok(())
    }

    fn input_vector(&self, step: &Step) -> Vec<f64> {
        match step {
            Step::Token(id) => self.embedding.row(*id).to_vec(),
            Step::Mix(parts) => {
                let mut x = vec![0.0; self.embedding_dim()];
                for &(id, weight) in parts {
                    for (xi, e) in x.iter_mut().zip(self.embedding.row(id)) {
                        *xi += weight * e;
                    }
                }
                x
            }
        }
    }

    pub fn forward_pass(&self, steps: &[Step]) -> ForwardPass {
        let h = self.hidden();
        let xs: Vec<Vec<f64>> = steps.iter().map(|s| self.input_vector(s)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let fwd = self.forward.run(&refs);
        let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
        let bwd = self.backward.run(&rev);
        let mut rep = vec![0.0; 2 * h];
        if let Some(last) = fwd.last() {
            rep[..h].copy_from_slice(&last.h);
        }
        if let Some(last) = bwd.last() {
            rep[h..].copy_from_slice(&last.h);
        }
        let logit = dot(&self.head_w, &rep) + self.head_b;
        ForwardPass { xs, fwd, bwd, rep, logit }
    }

    pub fn logit(&self, steps: &[Step]) -> f64 {
        self.forward_pass(steps).logit
    }

    pub fn probability(&self, steps: &[Step]) -> f64 {
        sigmoid(self.logit(steps))
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d logit`.
    pub fn backward_pass(&self, steps: &[Step], pass: &ForwardPass, d_logit: f64, grad: &mut BiLstm) {
        let h = self.hidden();
        for (g, r) in grad.head_w.iter_mut().zip(&pass.rep) {
            *g += d_logit * r;
        }
        grad.head_b += d_logit;
        if steps.is_empty() {
            return;
        }
        let dh_f: Vec<f64> = self.head_w[..h].iter().map(|w| w * d_logit).collect();
        let dh_b: Vec<f64> = self.head_w[h..].iter().map(|w| w * d_logit).collect();
        let refs: Vec<&[f64]> = pass.xs.iter().map(Vec::as_slice).collect();
        let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
        let dx_f = self.forward.backprop(&refs, &pass.fwd, &dh_f, &mut grad.forward);
        let dx_b = self.backward.backprop(&rev, &pass.bwd, &dh_b, &mut grad.backward);
        let n = steps.len();
        let emb = grad.embedding.matrix_mut();
        for (t, step) in steps.iter().enumerate() {
            let dx: Vec<f64> = dx_f[t].iter().zip(&dx_b[n - 1 - t]).map(|(a, b)| a + b).collect();
            let mut route = |id: usize, weight: f64| {
                if id == Vocab::PAD {
                    return;
                }
                for (g, d) in emb.row_mut(id).iter_mut().zip(&dx) {
                    *g += weight * d;
                }
            };
            match step {
                Step::Token(id) => route(*id, 1.0),
                Step::Mix(parts) => parts.iter().for_each(|&(id, w)| route(id, w)),
            }
        }
    }

    /// Mean binary cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, batch: &[(&[Step], f64)]) -> (f64, BiLstm) {
        let mut grad = self.zeros_like();
        let loss = self.accumulate(batch, &mut grad);
        (loss, grad)
    }

    pub(crate) fn accumulate(&self, batch: &[(&[Step], f64)], grad: &mut BiLstm) -> f64 {
        let n = batch.len().max(1) as f64;
        let mut loss = 0.0;
        for (steps, y) in batch {
            let pass = self.forward_pass(steps);
            loss += softplus(pass.logit) - y * pass.logit;
            let d_logit = (sigmoid(pass.logit) - y) / n;
            self.backward_pass(steps, &pass, d_logit, grad);
        }
        loss / n
    }

    pub fn loss(&self, batch: &[(&[Step], f64)]) -> f64 {
        let n = batch.len().max(1) as f64;
        batch
            .iter()
            .map(|(steps, y)| {
                let z = self.logit(steps);
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n
    }

    /// Parameter groups in a fixed order, paired with [`Self::param_slices_mut`].
    pub fn param_slices(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("embedding", self.embedding.matrix().as_slice()),
            ("forward.w", self.forward.w.as_slice()),
            ("forward.u", self.forward.u.as_slice()),
            ("forward.b", &self.forward.b),
            ("backward.w", self.backward.w.as_slice()),
            ("backward.u", self.backward.u.as_slice()),
            ("backward.b", &self.backward.b),
            ("head.w", &self.head_w),
            ("head.b", std::slice::from_ref(&self.head_b)),
        ]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.embedding.matrix_mut().as_mut_slice(),
            self.forward.w.as_mut_slice(),
            self.forward.u.as_mut_slice(),
            &mut self.forward.b,
            self.backward.w.as_mut_slice(),
            self.backward.u.as_mut_slice(),
            &mut self.backward.b,
            &mut self.head_w,
            std::slice::from_mut(&mut self.head_b),
        ]
    }

    /// Number of leading entries of each group that never receive updates
    /// (the `<pad>` embedding row).
    pub fn frozen_prefixes(&self) -> Vec<usize> {
        let mut v = vec![0; 9];
        v[0] = self.embedding_dim();
        v
    }
}
