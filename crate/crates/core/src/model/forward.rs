//! Forward pass and hand-written backpropagation.
//!
//! Examples in a batch are processed one at a time; every intermediate the
//! backward pass needs is kept in an [`ExampleTrace`]. Dropout masks are
//! drawn in a fixed order (embeddings, then per layer: attention
//! probabilities, attention output, feed-forward output) so a seeded stream
//! always reproduces the same masks.

use rand::Rng as _;

use super::loss::softmax_xent;
use super::state::{EncoderLayer, LayerNorm, Linear};
use super::tensor::{add_bias, dot, matmul, matmul_a_bt, matmul_at_b_acc, sum_rows_acc};
use super::{Batch, EncoderState, LossValue, ModelError, Tensor};
use crate::rng::Rng;
use crate::scalar::{gelu, gelu_grad};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, drawn from the supplied stream.
    Train,
    /// Dropout is the identity; output is deterministic.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    /// `[batch, seq, vocab]`
    pub mlm_logits: Tensor<T>,
    /// `[batch, 2]`
    pub nsp_logits: Tensor<T>,
}

struct Norm<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

struct LayerTrace<T> {
    x: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    /// `[heads, seq, seq]`, before dropout
    probs: Vec<T>,
    probs_drop: Option<Vec<T>>,
    ctx: Vec<T>,
    attn_drop: Option<Vec<T>>,
    norm1: Norm<T>,
    y: Vec<T>,
    u: Vec<T>,
    g: Vec<T>,
    ffn_drop: Option<Vec<T>>,
    norm2: Norm<T>,
}

struct ExampleTrace<T> {
    emb_norm: Norm<T>,
    emb_drop: Option<Vec<T>>,
    layers: Vec<LayerTrace<T>>,
    /// Final hidden states `[seq, hidden]`.
    hidden: Vec<T>,
}

struct HeadTrace<T> {
    input: Vec<T>,
    m: Vec<T>,
    norm: Norm<T>,
    n: Vec<T>,
}

fn layer_norm_forward<T: Scalar>(x: &[T], ln: &LayerNorm<T>, eps: T) -> (Vec<T>, Norm<T>) {
    let h = ln.gamma.len();
    let rows = x.len() / h;
    let inv_h = T::one() / T::of(h as f64);
    let mut out = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut rstd = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &x[r * h..(r + 1) * h];
        let mean = row.iter().copied().sum::<T>() * inv_h;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_h;
        let rs = T::one() / (var + eps).sqrt();
        rstd.push(rs);
        for i in 0..h {
            let xh = (row[i] - mean) * rs;
            xhat[r * h + i] = xh;
            out[r * h + i] = ln.gamma.data()[i] * xh + ln.beta.data()[i];
        }
    }
    (out, Norm { xhat, rstd })
}

fn layer_norm_backward<T: Scalar>(
    dy: &[T],
    cache: &Norm<T>,
    ln: &LayerNorm<T>,
    grad: &mut LayerNorm<T>,
) -> Vec<T> {
    let h = ln.gamma.len();
    let inv_h = T::one() / T::of(h as f64);
    let gamma = ln.gamma.data();
    let mut dx = vec![T::zero(); dy.len()];
    let LayerNorm {
        gamma: dgamma,
        beta: dbeta,
    } = grad;
    let (dgamma, dbeta) = (dgamma.data_mut(), dbeta.data_mut());
    for (r, &rs) in cache.rstd.iter().enumerate() {
        let dy_r = &dy[r * h..(r + 1) * h];
        let xh = &cache.xhat[r * h..(r + 1) * h];
        let mut mean_d = T::zero();
        let mut mean_dx = T::zero();
        for i in 0..h {
            dgamma[i] += dy_r[i] * xh[i];
            dbeta[i] += dy_r[i];
            let d = dy_r[i] * gamma[i];
            mean_d += d;
            mean_dx += d * xh[i];
        }
        mean_d *= inv_h;
        mean_dx *= inv_h;
        for i in 0..h {
            let d = dy_r[i] * gamma[i];
            dx[r * h + i] = rs * (d - mean_d - xh[i] * mean_dx);
        }
    }
    dx
}

fn linear_forward<T: Scalar>(x: &[T], rows: usize, lin: &Linear<T>) -> Vec<T> {
    let (i, o) = (lin.weight.shape()[0], lin.weight.shape()[1]);
    let mut out = vec![T::zero(); rows * o];
    matmul(x, lin.weight.data(), rows, i, o, &mut out);
    add_bias(&mut out, lin.bias.data());
    out
}

fn linear_backward<T: Scalar>(
    x: &[T],
    dy: &[T],
    rows: usize,
    lin: &Linear<T>,
    grad: &mut Linear<T>,
) -> Vec<T> {
    let (i, o) = (lin.weight.shape()[0], lin.weight.shape()[1]);
    matmul_at_b_acc(x, dy, rows, i, o, grad.weight.data_mut());
    sum_rows_acc(dy, grad.bias.data_mut());
    let mut dx = vec![T::zero(); rows * i];
    matmul_a_bt(dy, lin.weight.data(), rows, o, i, &mut dx);
    dx
}

fn dropout_mask<T: Scalar>(len: usize, rate: f64, rng: &mut Option<&mut Rng>) -> Option<Vec<T>> {
    let rng = rng.as_deref_mut()?;
    if rate == 0.0 {
        return None;
    }
    let keep = T::of(1.0 / (1.0 - rate));
    Some(
        (0..len)
            .map(|_| {
                if rng.random::<f64>() < rate {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect(),
    )
}

fn apply_mask<T: Scalar>(x: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(mask) = mask {
        for (v, &m) in x.iter_mut().zip(mask) {
            *v *= m;
        }
    }
}

fn add_into<T: Scalar>(acc: &mut [T], x: &[T]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}

impl<T: Scalar> EncoderState<T> {
    fn eps(&self) -> T {
        T::of(self.config.layer_norm_eps)
    }

    fn encode(
        &self,
        tokens: &[u32],
        segments: &[u32],
        mask: &[u32],
        mut rng: Option<&mut Rng>,
    ) -> ExampleTrace<T> {
        let h = self.config.hidden_size;
        let s = tokens.len();
        let emb = &self.embeddings;
        let mut e = vec![T::zero(); s * h];
        for t in 0..s {
            let row = &mut e[t * h..(t + 1) * h];
            let w = emb.word.row(tokens[t] as usize);
            let p = emb.position.row(t);
            let g = emb.segment.row(segments[t] as usize);
            for i in 0..h {
                row[i] = w[i] + p[i] + g[i];
            }
        }
        let (mut x, emb_norm) = layer_norm_forward(&e, &emb.norm, self.eps());
        let emb_drop = dropout_mask(s * h, self.config.dropout_rate, &mut rng);
        apply_mask(&mut x, &emb_drop);
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (trace, out) = self.layer_forward(layer, x, mask, &mut rng);
            layers.push(trace);
            x = out;
        }
        ExampleTrace {
            emb_norm,
            emb_drop,
            layers,
            hidden: x,
        }
    }

    fn layer_forward(
        &self,
        layer: &EncoderLayer<T>,
        x: Vec<T>,
        mask: &[u32],
        rng: &mut Option<&mut Rng>,
    ) -> (LayerTrace<T>, Vec<T>) {
        let h = self.config.hidden_size;
        let heads = self.config.num_heads;
        let dh = self.config.head_size();
        let s = mask.len();
        let rate = self.config.dropout_rate;
        let scale = T::one() / T::of(dh as f64).sqrt();

        let q = linear_forward(&x, s, &layer.query);
        let k = linear_forward(&x, s, &layer.key);
        let v = linear_forward(&x, s, &layer.value);

        let mut probs = vec![T::zero(); heads * s * s];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..s {
                if mask[i] == 0 {
                    // padded queries feed nothing downstream
                    continue;
                }
                let row = &mut probs[(hd * s + i) * s..(hd * s + i + 1) * s];
                let qi = &q[i * h + off..i * h + off + dh];
                let mut max = T::neg_infinity();
                for j in 0..s {
                    row[j] = if mask[j] == 0 {
                        T::neg_infinity()
                    } else {
                        dot(qi, &k[j * h + off..j * h + off + dh]) * scale
                    };
                    if row[j] > max {
                        max = row[j];
                    }
                }
                if max == T::neg_infinity() {
                    row.fill(T::zero());
                    continue;
                }
                let mut sum = T::zero();
                for r in row.iter_mut() {
                    *r = (*r - max).exp();
                    sum += *r;
                }
                for r in row.iter_mut() {
                    *r /= sum;
                }
            }
        }
        let probs_drop = dropout_mask(heads * s * s, rate, rng);

        let mut ctx = vec![T::zero(); s * h];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..s {
                let base = (hd * s + i) * s;
                for j in 0..s {
                    let mut p = probs[base + j];
                    if let Some(m) = &probs_drop {
                        p *= m[base + j];
                    }
                    if p == T::zero() {
                        continue;
                    }
                    for c in 0..dh {
                        ctx[i * h + off + c] += p * v[j * h + off + c];
                    }
                }
            }
        }

        let mut a = linear_forward(&ctx, s, &layer.attention_output);
        let attn_drop = dropout_mask(s * h, rate, rng);
        apply_mask(&mut a, &attn_drop);
        add_into(&mut a, &x);
        let (y, norm1) = layer_norm_forward(&a, &layer.attention_norm, self.eps());

        let u = linear_forward(&y, s, &layer.intermediate);
        let g: Vec<T> = u.iter().map(|&z| gelu(z)).collect();
        let mut f = linear_forward(&g, s, &layer.output);
        let ffn_drop = dropout_mask(s * h, rate, rng);
        apply_mask(&mut f, &ffn_drop);
        add_into(&mut f, &y);
        let (z, norm2) = layer_norm_forward(&f, &layer.output_norm, self.eps());

        let trace = LayerTrace {
            x,
            q,
            k,
            v,
            probs,
            probs_drop,
            ctx,
            attn_drop,
            norm1,
            y,
            u,
            g,
            ffn_drop,
            norm2,
        };
        (trace, z)
    }

    fn layer_backward(
        &self,
        layer: &EncoderLayer<T>,
        tr: &LayerTrace<T>,
        mask: &[u32],
        dz: &[T],
        grad: &mut EncoderLayer<T>,
    ) -> Vec<T> {
        let h = self.config.hidden_size;
        let heads = self.config.num_heads;
        let dh = self.config.head_size();
        let s = mask.len();
        let scale = T::one() / T::of(dh as f64).sqrt();

        let dr2 = layer_norm_backward(dz, &tr.norm2, &layer.output_norm, &mut grad.output_norm);
        let mut df = dr2.clone();
        apply_mask(&mut df, &tr.ffn_drop);
        let mut du = linear_backward(&tr.g, &df, s, &layer.output, &mut grad.output);
        for (d, &z) in du.iter_mut().zip(&tr.u) {
            *d *= gelu_grad(z);
        }
        let mut dy = linear_backward(&tr.y, &du, s, &layer.intermediate, &mut grad.intermediate);
        add_into(&mut dy, &dr2);

        let dr1 = layer_norm_backward(&dy, &tr.norm1, &layer.attention_norm, &mut grad.attention_norm);
        let mut da = dr1.clone();
        apply_mask(&mut da, &tr.attn_drop);
        let dctx = linear_backward(
            &tr.ctx,
            &da,
            s,
            &layer.attention_output,
            &mut grad.attention_output,
        );

        let mut dq = vec![T::zero(); s * h];
        let mut dk = vec![T::zero(); s * h];
        let mut dv = vec![T::zero(); s * h];
        let mut dp = vec![T::zero(); s];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..s {
                if mask[i] == 0 {
                    continue;
                }
                let base = (hd * s + i) * s;
                let dctx_i = &dctx[i * h + off..i * h + off + dh];
                let mut weighted = T::zero();
                for j in 0..s {
                    if mask[j] == 0 {
                        dp[j] = T::zero();
                        continue;
                    }
                    let keep = tr.probs_drop.as_ref().map_or(T::one(), |m| m[base + j]);
                    let p = tr.probs[base + j];
                    let vj = &tr.v[j * h + off..j * h + off + dh];
                    dp[j] = dot(dctx_i, vj) * keep;
                    weighted += p * dp[j];
                    let pd = p * keep;
                    if pd != T::zero() {
                        for c in 0..dh {
                            dv[j * h + off + c] += pd * dctx_i[c];
                        }
                    }
                }
                for j in 0..s {
                    if mask[j] == 0 {
                        continue;
                    }
                    let ds = tr.probs[base + j] * (dp[j] - weighted) * scale;
                    if ds == T::zero() {
                        continue;
                    }
                    for c in 0..dh {
                        dq[i * h + off + c] += ds * tr.k[j * h + off + c];
                        dk[j * h + off + c] += ds * tr.q[i * h + off + c];
                    }
                }
            }
        }

        let mut dx = dr1;
        add_into(
            &mut dx,
            &linear_backward(&tr.x, &dq, s, &layer.query, &mut grad.query),
        );
        add_into(
            &mut dx,
            &linear_backward(&tr.x, &dk, s, &layer.key, &mut grad.key),
        );
        add_into(
            &mut dx,
            &linear_backward(&tr.x, &dv, s, &layer.value, &mut grad.value),
        );
        dx
    }

    fn encode_backward(
        &self,
        trace: &ExampleTrace<T>,
        tokens: &[u32],
        segments: &[u32],
        mask: &[u32],
        mut dx: Vec<T>,
        grads: &mut EncoderState<T>,
    ) {
        let h = self.config.hidden_size;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            dx = self.layer_backward(layer, &trace.layers[l], mask, &dx, &mut grads.layers[l]);
        }
        apply_mask(&mut dx, &trace.emb_drop);
        let de = layer_norm_backward(
            &dx,
            &trace.emb_norm,
            &self.embeddings.norm,
            &mut grads.embeddings.norm,
        );
        let emb = &mut grads.embeddings;
        for t in 0..tokens.len() {
            let d = &de[t * h..(t + 1) * h];
            add_into(emb.word.row_mut(tokens[t] as usize), d);
            add_into(emb.position.row_mut(t), d);
            add_into(emb.segment.row_mut(segments[t] as usize), d);
        }
    }

    /// MLM head on `rows` hidden vectors; returns the trace and `[rows, vocab]` logits.
    fn mlm_forward(&self, input: Vec<T>, rows: usize) -> (HeadTrace<T>, Vec<T>) {
        let vocab = self.config.vocab_size;
        let h = self.config.hidden_size;
        let m = linear_forward(&input, rows, &self.mlm.transform);
        let gm: Vec<T> = m.iter().map(|&z| gelu(z)).collect();
        let (n, norm) = layer_norm_forward(&gm, &self.mlm.norm, self.eps());
        let mut logits = vec![T::zero(); rows * vocab];
        matmul_a_bt(&n, self.embeddings.word.data(), rows, h, vocab, &mut logits);
        add_bias(&mut logits, self.mlm.bias.data());
        (HeadTrace { input, m, norm, n }, logits)
    }

    fn mlm_backward(
        &self,
        tr: &HeadTrace<T>,
        dlogits: &[T],
        rows: usize,
        grads: &mut EncoderState<T>,
    ) -> Vec<T> {
        let vocab = self.config.vocab_size;
        let h = self.config.hidden_size;
        sum_rows_acc(dlogits, grads.mlm.bias.data_mut());
        matmul_at_b_acc(dlogits, &tr.n, rows, vocab, h, grads.embeddings.word.data_mut());
        let mut dn = vec![T::zero(); rows * h];
        matmul(dlogits, self.embeddings.word.data(), rows, vocab, h, &mut dn);
        let mut dm = layer_norm_backward(&dn, &tr.norm, &self.mlm.norm, &mut grads.mlm.norm);
        for (d, &z) in dm.iter_mut().zip(&tr.m) {
            *d *= gelu_grad(z);
        }
        linear_backward(
            &tr.input,
            &dm,
            rows,
            &self.mlm.transform,
            &mut grads.mlm.transform,
        )
    }

    fn nsp_forward(&self, cls: &[T]) -> (Vec<T>, Vec<T>) {
        let mut pooled = linear_forward(cls, 1, &self.pooler);
        pooled.iter_mut().for_each(|p| *p = p.tanh());
        let logits = linear_forward(&pooled, 1, &self.nsp);
        (pooled, logits)
    }

    fn nsp_backward(&self, cls: &[T], pooled: &[T], dlogits: &[T], grads: &mut EncoderState<T>) -> Vec<T> {
        let mut dz = linear_backward(pooled, dlogits, 1, &self.nsp, &mut grads.nsp);
        for (d, &p) in dz.iter_mut().zip(pooled) {
            *d *= T::one() - p * p;
        }
        linear_backward(cls, &dz, 1, &self.pooler, &mut grads.pooler)
    }

    /// Logits for every position and example.
    pub fn forward(&self, batch: &Batch, mode: Mode, rng: &mut Rng) -> Result<ForwardOutput<T>, ModelError> {
        batch.validate(&self.config)?;
        let (b, s, vocab) = (batch.batch_size, batch.seq_len, self.config.vocab_size);
        let mut mlm_logits = Tensor::zeros(&[b, s, vocab]);
        let mut nsp_logits = Tensor::zeros(&[b, 2]);
        for e in 0..b {
            let rng = (mode == Mode::Train).then_some(&mut *rng);
            let trace = self.encode(batch.tokens(e), batch.segments(e), batch.mask(e), rng);
            let (_, logits) = self.mlm_forward(trace.hidden.clone(), s);
            mlm_logits.row_mut(e).copy_from_slice(&logits);
            let (_, nsp) = self.nsp_forward(&trace.hidden[..self.config.hidden_size]);
            nsp_logits.row_mut(e).copy_from_slice(&nsp);
        }
        Ok(ForwardOutput {
            mlm_logits,
            nsp_logits,
        })
    }

    fn run(
        &self,
        batch: &Batch,
        mut rng: Option<&mut Rng>,
        mut grads: Option<&mut EncoderState<T>>,
    ) -> Result<LossValue, ModelError> {
        batch.validate(&self.config)?;
        let n_mlm = batch.num_mlm_labels();
        let n_nsp = batch.num_nsp_labels();
        if n_mlm == 0 && n_nsp == 0 {
            return Err(ModelError::NoLabels);
        }
        let h = self.config.hidden_size;
        let vocab = self.config.vocab_size;
        let s = batch.seq_len;
        let mut value = LossValue {
            mlm_count: n_mlm,
            nsp_count: n_nsp,
            ..LossValue::default()
        };
        let mut mlm_sum = T::zero();
        let mut nsp_sum = T::zero();
        let mlm_scale = T::one() / T::of(n_mlm.max(1) as f64);
        let nsp_scale = T::one() / T::of(n_nsp.max(1) as f64);
        for e in 0..batch.batch_size {
            let (tokens, segments, mask) = (batch.tokens(e), batch.segments(e), batch.mask(e));
            let trace = self.encode(tokens, segments, mask, rng.as_deref_mut());
            let mut dh = grads.is_some().then(|| vec![T::zero(); s * h]);

            let labeled: Vec<(usize, u32)> = batch
                .labels(e)
                .iter()
                .enumerate()
                .filter_map(|(t, l)| l.map(|l| (t, l)))
                .collect();
            if !labeled.is_empty() {
                let rows = labeled.len();
                let mut input = Vec::with_capacity(rows * h);
                for &(t, _) in &labeled {
                    input.extend_from_slice(&trace.hidden[t * h..(t + 1) * h]);
                }
                let (head, logits) = self.mlm_forward(input, rows);
                let mut dlogits = vec![T::zero(); rows * vocab];
                for (r, &(_, gold)) in labeled.iter().enumerate() {
                    let span = r * vocab..(r + 1) * vocab;
                    let want = grads.is_some().then(|| &mut dlogits[span.clone()]);
                    let (l, argmax) = softmax_xent(&logits[span], gold as usize, want);
                    mlm_sum += l;
                    value.mlm_correct += usize::from(argmax == gold as usize);
                }
                if let (Some(g), Some(dh)) = (grads.as_deref_mut(), dh.as_mut()) {
                    dlogits.iter_mut().for_each(|d| *d *= mlm_scale);
                    let dinput = self.mlm_backward(&head, &dlogits, rows, g);
                    for (r, &(t, _)) in labeled.iter().enumerate() {
                        add_into(&mut dh[t * h..(t + 1) * h], &dinput[r * h..(r + 1) * h]);
                    }
                }
            }

            if let Some(gold) = batch.nsp_labels[e] {
                let cls = &trace.hidden[..h];
                let (pooled, logits) = self.nsp_forward(cls);
                let mut dlogits = vec![T::zero(); 2];
                let (l, argmax) = softmax_xent(&logits, gold as usize, Some(&mut dlogits));
                nsp_sum += l;
                value.nsp_correct += usize::from(argmax == gold as usize);
                if let (Some(g), Some(dh)) = (grads.as_deref_mut(), dh.as_mut()) {
                    dlogits.iter_mut().for_each(|d| *d *= nsp_scale);
                    let dcls = self.nsp_backward(cls, &pooled, &dlogits, g);
                    add_into(&mut dh[..h], &dcls);
                }
            }

            if let (Some(g), Some(dh)) = (grads.as_deref_mut(), dh) {
                self.encode_backward(&trace, tokens, segments, mask, dh, g);
            }
        }
        if n_mlm > 0 {
            value.mlm = (mlm_sum * mlm_scale).as_f64();
        }
        if n_nsp > 0 {
            value.nsp = (nsp_sum * nsp_scale).as_f64();
        }
        value.total = value.mlm + value.nsp;
        Ok(value)
    }

    /// Loss over labeled positions and its gradient for every tensor.
    pub fn loss_and_gradients(
        &self,
        batch: &Batch,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(LossValue, EncoderState<T>), ModelError> {
        let mut grads = self.zeros_like();
        let rng = (mode == Mode::Train).then_some(rng);
        let value = self.run(batch, rng, Some(&mut grads))?;
        Ok((value, grads))
    }

    /// Eval-mode loss without gradients; only labeled positions are decoded.
    pub fn eval_loss(&self, batch: &Batch) -> Result<LossValue, ModelError> {
        self.run(batch, None, None)
    }

    /// Eval-mode MLM logits at selected `(example, position)` pairs.
    pub fn mlm_logits_at(
        &self,
        batch: &Batch,
        positions: &[(usize, usize)],
    ) -> Result<Vec<Vec<T>>, ModelError> {
        batch.validate(&self.config)?;
        let h = self.config.hidden_size;
        let vocab = self.config.vocab_size;
        let mut out = vec![Vec::new(); positions.len()];
        for e in 0..batch.batch_size {
            let wanted: Vec<usize> = (0..positions.len()).filter(|&i| positions[i].0 == e).collect();
            if wanted.is_empty() {
                continue;
            }
            let trace = self.encode(batch.tokens(e), batch.segments(e), batch.mask(e), None);
            let mut input = Vec::with_capacity(wanted.len() * h);
            for &i in &wanted {
                let t = positions[i].1;
                input.extend_from_slice(&trace.hidden[t * h..(t + 1) * h]);
            }
            let (_, logits) = self.mlm_forward(input, wanted.len());
            for (r, &i) in wanted.iter().enumerate() {
                out[i] = logits[r * vocab..(r + 1) * vocab].to_vec();
            }
        }
        Ok(out)
    }

    /// Eval-mode attention probabilities, one `[batch, heads, seq, seq]`
    /// tensor per layer.
    pub fn attention_probabilities(&self, batch: &Batch) -> Result<Vec<Tensor<T>>, ModelError> {
        batch.validate(&self.config)?;
        let (b, s, heads) = (batch.batch_size, batch.seq_len, self.config.num_heads);
        let mut out: Vec<Tensor<T>> = (0..self.layers.len())
            .map(|_| Tensor::zeros(&[b, heads, s, s]))
            .collect();
        for e in 0..b {
            let trace = self.encode(batch.tokens(e), batch.segments(e), batch.mask(e), None);
            for (l, tr) in trace.layers.iter().enumerate() {
                out[l].row_mut(e).copy_from_slice(&tr.probs);
            }
        }
        Ok(out)
    }
}
