//! Tiny decoder-only transformer with exact reverse-mode gradients.
//!
//! Pre-norm blocks (RMSNorm), learned positional embeddings, squared-ReLU
//! MLP, tied input/output embedding. Everything is f64 so gradients can be
//! validated against central finite differences.
//!
//! Batches are packed "ragged": lane runs are laid out back to back with no
//! padding, so batched forward/backward cost is proportional to the real
//! token count. Within the flat position axis `n`, lane `l` occupies
//! `offsets[l] .. offsets[l] + lens[l]`.

use crate::engine::kernels::{add_assign, mm_acc, mm_outer_acc, mm_t_acc};
use crate::engine::pool;
use crate::engine::tokenizer::TokenId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const RMS_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("sequence length {len} exceeds model context {context}")]
    ContextOverflow { len: usize, context: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("checkpoint file error: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context: usize,
    pub vocab_size: usize,
}

impl ModelConfig {
    /// Default desk-scale configuration for the synthetic task.
    pub fn toy(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            context: 512,
            vocab_size,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Named view into the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

fn layout(cfg: &ModelConfig) -> Vec<ParamEntry> {
    let (v, d, c, f) = (cfg.vocab_size, cfg.d_model, cfg.context, cfg.d_ff);
    let mut entries = Vec::new();
    let mut off = 0;
    let mut push = |name: String, shape: Vec<usize>, off: &mut usize| {
        let len: usize = shape.iter().product();
        entries.push(ParamEntry {
            name,
            shape,
            offset: *off,
            len,
        });
        *off += len;
    };
    push("wte".into(), vec![v, d], &mut off);
    push("wpe".into(), vec![c, d], &mut off);
    for l in 0..cfg.n_layers {
        push(format!("l{l}.ln1"), vec![d], &mut off);
        push(format!("l{l}.wq"), vec![d, d], &mut off);
        push(format!("l{l}.wk"), vec![d, d], &mut off);
        push(format!("l{l}.wv"), vec![d, d], &mut off);
        push(format!("l{l}.wo"), vec![d, d], &mut off);
        push(format!("l{l}.ln2"), vec![d], &mut off);
        push(format!("l{l}.fc1"), vec![f, d], &mut off);
        push(format!("l{l}.fc2"), vec![d, f], &mut off);
    }
    push("lnf".into(), vec![d], &mut off);
    entries
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub params: Vec<f64>,
}

impl Model {
    /// Random init: N(0, 0.02) weights, zero attention/MLP output
    /// projections, unit norm gains.
    pub fn init(cfg: ModelConfig, seed: u64) -> Model {
        assert_eq!(cfg.d_model % cfg.n_heads, 0, "d_model must divide into heads");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = layout(&cfg);
        let total: usize = entries.iter().map(|e| e.len).sum();
        let mut params = vec![0.0; total];
        for e in &entries {
            let base = e.name.rsplit('.').next().unwrap_or(&e.name);
            let slice = &mut params[e.offset..e.offset + e.len];
            match base {
                "ln1" | "ln2" | "lnf" => slice.fill(1.0),
                "wo" | "fc2" => slice.fill(0.0),
                _ => {
                    for p in slice.iter_mut() {
                        *p = gauss(&mut rng) * 0.02;
                    }
                }
            }
        }
        Model { cfg, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layout(&self) -> Vec<ParamEntry> {
        layout(&self.cfg)
    }

    pub fn param(&self, name: &str) -> &[f64] {
        let e = self
            .layout()
            .into_iter()
            .find(|e| e.name == name)
            .unwrap_or_else(|| panic!("no parameter named {name}"));
        &self.params[e.offset..e.offset + e.len]
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A batch of sequences packed without padding. Flat position
/// `n = offsets[lane] + ti`.
#[derive(Debug, Clone)]
pub struct PackedBatch {
    pub b: usize,
    pub tokens: Vec<TokenId>,
    pub lens: Vec<usize>,
    /// `b + 1` entries; `offsets[b]` is the total position count
    pub offsets: Vec<usize>,
}

impl PackedBatch {
    pub fn pack(seqs: &[Vec<TokenId>]) -> PackedBatch {
        let b = seqs.len();
        let mut offsets = Vec::with_capacity(b + 1);
        let mut tokens = Vec::new();
        let mut off = 0;
        for seq in seqs {
            offsets.push(off);
            tokens.extend_from_slice(seq);
            off += seq.len();
        }
        offsets.push(off);
        PackedBatch {
            b,
            tokens,
            lens: seqs.iter().map(Vec::len).collect(),
            offsets,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets[self.b]
    }

    pub fn t_max(&self) -> usize {
        self.lens.iter().copied().max().unwrap_or(0)
    }

    /// Flat position of (lane, ti).
    pub fn idx(&self, lane: usize, ti: usize) -> usize {
        debug_assert!(ti < self.lens[lane]);
        self.offsets[lane] + ti
    }
}

pub(crate) struct LayerActs {
    pub rms1: Vec<f64>,
    pub xn1: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// attention weights per lane: `[head][ti][tj]`, ragged over lanes
    pub att: Vec<Vec<f64>>,
    pub ho: Vec<f64>,
    pub x_mid: Vec<f64>,
    pub rms2: Vec<f64>,
    pub xn2: Vec<f64>,
    pub h1: Vec<f64>,
    pub h1a: Vec<f64>,
    pub x_out: Vec<f64>,
}

/// Cached activations of a training forward pass.
pub struct Acts {
    pub(crate) x0: Vec<f64>,
    pub(crate) layers: Vec<LayerActs>,
    pub(crate) rmsf: Vec<f64>,
    pub(crate) xnf: Vec<f64>,
    /// position-major logits `[n][V]`
    pub logits: Vec<f64>,
    /// per-position log(Σ exp(logits)), `[n]`
    pub logsumexp: Vec<f64>,
}

impl Acts {
    /// log p(token=target | prefix at position n)
    pub fn logprob(&self, vocab: usize, n: usize, target: TokenId) -> f64 {
        self.logits[n * vocab + target as usize] - self.logsumexp[n]
    }
}

impl Drop for Acts {
    // activations are large and allocated every step; retire them for reuse
    fn drop(&mut self) {
        for la in self.layers.drain(..) {
            for v in [
                la.xn1, la.q, la.k, la.v, la.ho, la.x_mid, la.xn2, la.h1, la.h1a, la.x_out,
            ] {
                pool::recycle(v);
            }
            for a in la.att {
                pool::recycle(a);
            }
        }
        pool::recycle(std::mem::take(&mut self.x0));
        pool::recycle(std::mem::take(&mut self.xnf));
        pool::recycle(std::mem::take(&mut self.logits));
    }
}

impl Model {
    /// Full forward over a packed batch, keeping every activation needed by
    /// [`Model::backward`].
    pub fn forward(&self, batch: &PackedBatch) -> Result<Acts, EngineError> {
        if batch.t_max() > self.cfg.context {
            return Err(EngineError::ContextOverflow {
                len: batch.t_max(),
                context: self.cfg.context,
            });
        }
        let cfg = &self.cfg;
        let (d, n) = (cfg.d_model, batch.n());
        let wte = self.param("wte");
        let wpe = self.param("wpe");

        // embeddings
        let mut x0 = pool::take_zeroed(d * n);
        for lane in 0..batch.b {
            let off = batch.offsets[lane];
            for ti in 0..batch.lens[lane] {
                let nidx = off + ti;
                let tok = batch.tokens[nidx] as usize;
                for j in 0..d {
                    x0[j * n + nidx] = wte[tok * d + j] + wpe[ti * d + j];
                }
            }
        }

        let mut layers: Vec<LayerActs> = Vec::with_capacity(cfg.n_layers);
        for l in 0..cfg.n_layers {
            let x_in = if l == 0 { &x0 } else { &layers[l - 1].x_out };
            let acts = self.layer_forward(l, x_in, batch);
            layers.push(acts);
        }
        let last_x = layers.last().map(|la| &la.x_out).unwrap_or(&x0);

        let (rmsf, xnf) = rmsnorm_fwd(last_x, self.param("lnf"), d, n);

        // logits via tied embedding, then transpose to position-major
        let mut logits_fm = pool::take_zeroed(cfg.vocab_size * n);
        mm_acc(&mut logits_fm, wte, &xnf, cfg.vocab_size, d, n);
        let mut logits = pool::take_zeroed(n * cfg.vocab_size);
        for vi in 0..cfg.vocab_size {
            for ni in 0..n {
                logits[ni * cfg.vocab_size + vi] = logits_fm[vi * n + ni];
            }
        }
        pool::recycle(logits_fm);
        let mut logsumexp = vec![0.0; n];
        for ni in 0..n {
            let row = &logits[ni * cfg.vocab_size..(ni + 1) * cfg.vocab_size];
            logsumexp[ni] = lse(row);
        }

        Ok(Acts {
            x0,
            layers,
            rmsf,
            xnf,
            logits,
            logsumexp,
        })
    }

    fn layer_forward(&self, l: usize, x: &[f64], batch: &PackedBatch) -> LayerActs {
        let cfg = &self.cfg;
        let (d, f, n) = (cfg.d_model, cfg.d_ff, batch.n());
        let (h, dh) = (cfg.n_heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();

        let (rms1, xn1) = rmsnorm_fwd(x, self.param(&format!("l{l}.ln1")), d, n);
        let mut q = pool::take_zeroed(d * n);
        let mut k = pool::take_zeroed(d * n);
        let mut v = pool::take_zeroed(d * n);
        mm_acc(&mut q, self.param(&format!("l{l}.wq")), &xn1, d, d, n);
        mm_acc(&mut k, self.param(&format!("l{l}.wk")), &xn1, d, d, n);
        mm_acc(&mut v, self.param(&format!("l{l}.wv")), &xn1, d, d, n);

        // causal attention, per lane on repacked [t][d] views
        let mut att: Vec<Vec<f64>> = Vec::with_capacity(batch.b);
        let mut ho = pool::take_zeroed(d * n);
        let t_cap = batch.t_max();
        let mut ql = vec![0.0; t_cap * d];
        let mut kl = vec![0.0; t_cap * d];
        let mut vl = vec![0.0; t_cap * d];
        let mut hol = vec![0.0; t_cap * d];
        for lane in 0..batch.b {
            let off = batch.offsets[lane];
            let t = batch.lens[lane];
            repack_lane(&q, &mut ql, off, t, d, n);
            repack_lane(&k, &mut kl, off, t, d, n);
            repack_lane(&v, &mut vl, off, t, d, n);
            hol[..t * d].fill(0.0);
            let mut att_l = pool::take_zeroed(h * t * t);
            for hi in 0..h {
                let hoff = hi * dh;
                for ti in 0..t {
                    let arow = &mut att_l[(hi * t + ti) * t..(hi * t + ti + 1) * t];
                    let qrow = &ql[ti * d + hoff..ti * d + hoff + dh];
                    let mut maxs = f64::NEG_INFINITY;
                    for tj in 0..=ti {
                        let krow = &kl[tj * d + hoff..tj * d + hoff + dh];
                        let s = crate::engine::kernels::dot(qrow, krow) * scale;
                        arow[tj] = s;
                        if s > maxs {
                            maxs = s;
                        }
                    }
                    let mut denom = 0.0;
                    for a in arow[..=ti].iter_mut() {
                        *a = (*a - maxs).exp();
                        denom += *a;
                    }
                    for a in arow[..=ti].iter_mut() {
                        *a /= denom;
                    }
                    let horow = &mut hol[ti * d + hoff..ti * d + hoff + dh];
                    for tj in 0..=ti {
                        let w = arow[tj];
                        let vrow = &vl[tj * d + hoff..tj * d + hoff + dh];
                        for (o, vv) in horow.iter_mut().zip(vrow) {
                            *o += w * *vv;
                        }
                    }
                }
            }
            att.push(att_l);
            scatter_lane(&hol, &mut ho, off, t, d, n);
        }

        let mut attn_out = pool::take_zeroed(d * n);
        mm_acc(&mut attn_out, self.param(&format!("l{l}.wo")), &ho, d, d, n);
        let mut x_mid = pool::take_zeroed(d * n);
        for ((m, xv), a) in x_mid.iter_mut().zip(x).zip(&attn_out) {
            *m = *xv + *a;
        }
        pool::recycle(attn_out);

        let (rms2, xn2) = rmsnorm_fwd(&x_mid, self.param(&format!("l{l}.ln2")), d, n);
        let mut h1 = pool::take_zeroed(f * n);
        mm_acc(&mut h1, self.param(&format!("l{l}.fc1")), &xn2, f, d, n);
        let mut h1a = pool::take_zeroed(f * n);
        for (o, &a) in h1a.iter_mut().zip(&h1) {
            *o = if a > 0.0 { a * a } else { 0.0 };
        }
        let mut mlp_out = pool::take_zeroed(d * n);
        mm_acc(&mut mlp_out, self.param(&format!("l{l}.fc2")), &h1a, d, f, n);
        let mut x_out = pool::take_zeroed(d * n);
        for ((o, m), a) in x_out.iter_mut().zip(&x_mid).zip(&mlp_out) {
            *o = *m + *a;
        }
        pool::recycle(mlp_out);

        LayerActs {
            rms1,
            xn1,
            q,
            k,
            v,
            att,
            ho,
            x_mid,
            rms2,
            xn2,
            h1,
            h1a,
            x_out,
        }
    }

    /// Reverse pass. `d_logits` is position-major `[n][V]`; gradients are
    /// accumulated into `grads` (same layout as `params`).
    pub fn backward(
        &self,
        batch: &PackedBatch,
        acts: &Acts,
        d_logits: &[f64],
        grads: &mut [f64],
    ) {
        let cfg = &self.cfg;
        let (d, vsz, n) = (cfg.d_model, cfg.vocab_size, batch.n());
        assert_eq!(d_logits.len(), n * vsz);
        assert_eq!(grads.len(), self.params.len());
        let entries = layout(cfg);
        let find = |name: &str| {
            let e = entries
                .iter()
                .find(|e| e.name == name)
                .unwrap_or_else(|| panic!("no parameter named {name}"));
            (e.offset, e.len)
        };

        // transpose d_logits to feature-major for the matmul kernels
        let mut dl_fm = pool::take_zeroed(vsz * n);
        for ni in 0..n {
            for vi in 0..vsz {
                dl_fm[vi * n + ni] = d_logits[ni * vsz + vi];
            }
        }

        let wte = self.param("wte");
        let (wte_off, wte_len) = find("wte");
        // head: logits = wteᵀ-projected xnf
        mm_outer_acc(&mut grads[wte_off..wte_off + wte_len], &dl_fm, &acts.xnf, vsz, d, n);
        let mut d_xnf = pool::take_zeroed(d * n);
        mm_t_acc(&mut d_xnf, wte, &dl_fm, vsz, d, n);
        pool::recycle(dl_fm);

        let last_x = acts
            .layers
            .last()
            .map(|la| la.x_out.as_slice())
            .unwrap_or(acts.x0.as_slice());
        let (lnf_off, lnf_len) = find("lnf");
        let mut dx = pool::take_zeroed(d * n);
        rmsnorm_bwd(
            &d_xnf,
            last_x,
            &acts.rmsf,
            self.param("lnf"),
            &mut dx,
            &mut grads[lnf_off..lnf_off + lnf_len],
            d,
            n,
        );
        pool::recycle(d_xnf);

        for l in (0..cfg.n_layers).rev() {
            let x_in = if l == 0 {
                acts.x0.as_slice()
            } else {
                acts.layers[l - 1].x_out.as_slice()
            };
            let new_dx =
                self.layer_backward(l, &dx, x_in, &acts.layers[l], batch, grads, &find);
            pool::recycle(std::mem::replace(&mut dx, new_dx));
        }

        // embedding gradients
        let (wpe_off, _) = find("wpe");
        for lane in 0..batch.b {
            let off = batch.offsets[lane];
            for ti in 0..batch.lens[lane] {
                let nidx = off + ti;
                let tok = batch.tokens[nidx] as usize;
                for j in 0..d {
                    let g = dx[j * n + nidx];
                    grads[wte_off + tok * d + j] += g;
                    grads[wpe_off + ti * d + j] += g;
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn layer_backward(
        &self,
        l: usize,
        d_out: &[f64],
        x_in: &[f64],
        la: &LayerActs,
        batch: &PackedBatch,
        grads: &mut [f64],
        find: &dyn Fn(&str) -> (usize, usize),
    ) -> Vec<f64> {
        let cfg = &self.cfg;
        let (d, f, n) = (cfg.d_model, cfg.d_ff, batch.n());
        let (h, dh) = (cfg.n_heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();

        // ---- MLP branch ----
        // x_out = x_mid + fc2(relu2(fc1(norm2(x_mid))))
        let mut d_h1a = pool::take_zeroed(f * n);
        {
            let (fc2_off, fc2_len) = find(&format!("l{l}.fc2"));
            mm_outer_acc(&mut grads[fc2_off..fc2_off + fc2_len], d_out, &la.h1a, d, f, n);
            mm_t_acc(&mut d_h1a, self.param(&format!("l{l}.fc2")), d_out, d, f, n);
        }
        let mut d_h1 = d_h1a;
        for (g, &pre) in d_h1.iter_mut().zip(&la.h1) {
            *g = if pre > 0.0 { *g * 2.0 * pre } else { 0.0 };
        }
        let mut d_xn2 = pool::take_zeroed(d * n);
        {
            let (fc1_off, fc1_len) = find(&format!("l{l}.fc1"));
            mm_outer_acc(&mut grads[fc1_off..fc1_off + fc1_len], &d_h1, &la.xn2, f, d, n);
            mm_t_acc(&mut d_xn2, self.param(&format!("l{l}.fc1")), &d_h1, f, d, n);
        }
        pool::recycle(d_h1);
        let mut d_xmid = pool::take_zeroed(d * n);
        d_xmid.copy_from_slice(d_out);
        {
            let (ln2_off, ln2_len) = find(&format!("l{l}.ln2"));
            let mut d_norm_in = pool::take_zeroed(d * n);
            rmsnorm_bwd(
                &d_xn2,
                &la.x_mid,
                &la.rms2,
                self.param(&format!("l{l}.ln2")),
                &mut d_norm_in,
                &mut grads[ln2_off..ln2_off + ln2_len],
                d,
                n,
            );
            add_assign(&mut d_xmid, &d_norm_in);
            pool::recycle(d_norm_in);
        }
        pool::recycle(d_xn2);

        // ---- attention branch ----
        // x_mid = x_in + wo(attend(norm1(x_in)))
        let mut d_ho = pool::take_zeroed(d * n);
        {
            let (wo_off, wo_len) = find(&format!("l{l}.wo"));
            mm_outer_acc(&mut grads[wo_off..wo_off + wo_len], &d_xmid, &la.ho, d, d, n);
            mm_t_acc(&mut d_ho, self.param(&format!("l{l}.wo")), &d_xmid, d, d, n);
        }

        let mut d_q = pool::take_zeroed(d * n);
        let mut d_k = pool::take_zeroed(d * n);
        let mut d_v = pool::take_zeroed(d * n);
        {
            let t_cap = batch.t_max();
            let mut ql = vec![0.0; t_cap * d];
            let mut kl = vec![0.0; t_cap * d];
            let mut vl = vec![0.0; t_cap * d];
            let mut dhol = vec![0.0; t_cap * d];
            let mut dql = vec![0.0; t_cap * d];
            let mut dkl = vec![0.0; t_cap * d];
            let mut dvl = vec![0.0; t_cap * d];
            let mut d_att = vec![0.0; t_cap];
            for lane in 0..batch.b {
                let off = batch.offsets[lane];
                let t = batch.lens[lane];
                repack_lane(&la.q, &mut ql, off, t, d, n);
                repack_lane(&la.k, &mut kl, off, t, d, n);
                repack_lane(&la.v, &mut vl, off, t, d, n);
                repack_lane(&d_ho, &mut dhol, off, t, d, n);
                dql[..t * d].fill(0.0);
                dkl[..t * d].fill(0.0);
                dvl[..t * d].fill(0.0);
                let att_l = &la.att[lane];
                for hi in 0..h {
                    let hoff = hi * dh;
                    for ti in 0..t {
                        let arow = &att_l[(hi * t + ti) * t..(hi * t + ti + 1) * t];
                        let dhorow = &dhol[ti * d + hoff..ti * d + hoff + dh];
                        for (tj, da) in d_att[..=ti].iter_mut().enumerate() {
                            let vrow = &vl[tj * d + hoff..tj * d + hoff + dh];
                            *da = crate::engine::kernels::dot(dhorow, vrow);
                        }
                        let pdot: f64 =
                            arow[..=ti].iter().zip(&d_att[..=ti]).map(|(a, g)| a * g).sum();
                        for tj in 0..=ti {
                            let ds = arow[tj] * (d_att[tj] - pdot) * scale;
                            let qrow = &ql[ti * d + hoff..ti * d + hoff + dh];
                            let krow = &kl[tj * d + hoff..tj * d + hoff + dh];
                            let dqrow = &mut dql[ti * d + hoff..ti * d + hoff + dh];
                            for (dq, kk) in dqrow.iter_mut().zip(krow) {
                                *dq += ds * *kk;
                            }
                            let dkrow = &mut dkl[tj * d + hoff..tj * d + hoff + dh];
                            for (dk, qq) in dkrow.iter_mut().zip(qrow) {
                                *dk += ds * *qq;
                            }
                            let dvrow = &mut dvl[tj * d + hoff..tj * d + hoff + dh];
                            for (dv, dho_) in dvrow.iter_mut().zip(dhorow) {
                                *dv += arow[tj] * *dho_;
                            }
                        }
                    }
                }
                scatter_lane(&dql, &mut d_q, off, t, d, n);
                scatter_lane(&dkl, &mut d_k, off, t, d, n);
                scatter_lane(&dvl, &mut d_v, off, t, d, n);
            }
        }

        pool::recycle(d_ho);
        let mut d_xn1 = pool::take_zeroed(d * n);
        for (mat, dmat) in [("wq", &d_q), ("wk", &d_k), ("wv", &d_v)] {
            let (off, len) = find(&format!("l{l}.{mat}"));
            mm_outer_acc(&mut grads[off..off + len], dmat, &la.xn1, d, d, n);
            mm_t_acc(&mut d_xn1, self.param(&format!("l{l}.{mat}")), dmat, d, d, n);
        }
        for v in [d_q, d_k, d_v] {
            pool::recycle(v);
        }

        let mut d_x_in = d_xmid;
        {
            let (ln1_off, ln1_len) = find(&format!("l{l}.ln1"));
            let mut d_norm_in = pool::take_zeroed(d * n);
            rmsnorm_bwd(
                &d_xn1,
                x_in,
                &la.rms1,
                self.param(&format!("l{l}.ln1")),
                &mut d_norm_in,
                &mut grads[ln1_off..ln1_off + ln1_len],
                d,
                n,
            );
            add_assign(&mut d_x_in, &d_norm_in);
            pool::recycle(d_norm_in);
        }
        pool::recycle(d_xn1);
        d_x_in
    }
}

/// RMSNorm with gain over the feature axis: y = g ⊙ x / rms(x).
/// Returns (1/rms per position, y).
fn rmsnorm_fwd(x: &[f64], gain: &[f64], d: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ms = vec![0.0; n];
    for j in 0..d {
        let row = &x[j * n..(j + 1) * n];
        for (m, xv) in ms.iter_mut().zip(row) {
            *m += xv * xv;
        }
    }
    let rinv: Vec<f64> = ms.iter().map(|m| 1.0 / (m / d as f64 + RMS_EPS).sqrt()).collect();
    let mut y = vec![0.0; d * n];
    for j in 0..d {
        let g = gain[j];
        let xrow = &x[j * n..(j + 1) * n];
        let yrow = &mut y[j * n..(j + 1) * n];
        for ((yv, xv), r) in yrow.iter_mut().zip(xrow).zip(&rinv) {
            *yv = g * *xv * *r;
        }
    }
    (rinv, y)
}

#[allow(clippy::too_many_arguments)]
fn rmsnorm_bwd(
    dy: &[f64],
    x: &[f64],
    rinv: &[f64],
    gain: &[f64],
    dx: &mut [f64],
    dgain: &mut [f64],
    d: usize,
    n: usize,
) {
    // dot[n] = Σ_j dy_j g_j x_j
    let mut dot = vec![0.0; n];
    for j in 0..d {
        let g = gain[j];
        let dyrow = &dy[j * n..(j + 1) * n];
        let xrow = &x[j * n..(j + 1) * n];
        for ((acc, dyv), xv) in dot.iter_mut().zip(dyrow).zip(xrow) {
            *acc += *dyv * g * *xv;
        }
        let mut gsum = 0.0;
        for ((dyv, xv), r) in dyrow.iter().zip(xrow).zip(rinv) {
            gsum += *dyv * *xv * *r;
        }
        dgain[j] += gsum;
    }
    let dn = d as f64;
    for j in 0..d {
        let g = gain[j];
        let dyrow = &dy[j * n..(j + 1) * n];
        let xrow = &x[j * n..(j + 1) * n];
        let dxrow = &mut dx[j * n..(j + 1) * n];
        for (((dxv, dyv), xv), (r, dt)) in dxrow
            .iter_mut()
            .zip(dyrow)
            .zip(xrow)
            .zip(rinv.iter().zip(&dot))
        {
            *dxv = g * *r * *dyv - xv * r * r * r / dn * dt;
        }
    }
}

fn repack_lane(src: &[f64], dst: &mut [f64], off: usize, t: usize, d: usize, n: usize) {
    for ti in 0..t {
        let nidx = off + ti;
        for j in 0..d {
            dst[ti * d + j] = src[j * n + nidx];
        }
    }
}

fn scatter_lane(src: &[f64], dst: &mut [f64], off: usize, t: usize, d: usize, n: usize) {
    for ti in 0..t {
        let nidx = off + ti;
        for j in 0..d {
            dst[j * n + nidx] += src[ti * d + j];
        }
    }
}

/// Numerically stable log(Σ exp).
pub fn lse(row: &[f64]) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}
