use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, BOS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            emb_dim: 32,
            hidden_dim: 64,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

/// Offsets of each parameter block in the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Layout {
    v: usize,
    e: usize,
    h: usize,
    emb: usize,
    enc: Gru,
    dec: Gru,
    att_s: usize,
    att_h: usize,
    att_v: usize,
    out_w: usize,
    out_b: usize,
    total: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Gru {
    input: usize,
    wx: usize,
    wh: usize,
    bx: usize,
    bh: usize,
}

impl Layout {
    fn new(v: usize, e: usize, h: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let emb = take(v * e);
        let mut gru = |input: usize| Gru {
            input,
            wx: take(3 * h * input),
            wh: take(3 * h * h),
            bx: take(3 * h),
            bh: take(3 * h),
        };
        let enc = gru(e);
        let dec = gru(e + h);
        let att_s = take(h * h);
        let att_h = take(h * h);
        let att_v = take(h);
        let out_w = take(v * 2 * h);
        let out_b = take(v);
        Layout {
            v,
            e,
            h,
            emb,
            enc,
            dec,
            att_s,
            att_h,
            att_v,
            out_w,
            out_b,
            total: at,
        }
    }

    fn is_bias(&self, i: usize) -> bool {
        let in_block = |o: usize, n: usize| i >= o && i < o + n;
        let h3 = 3 * self.h;
        [self.enc, self.dec]
            .iter()
            .any(|g| in_block(g.bx, h3) || in_block(g.bh, h3))
            || in_block(self.out_b, self.v)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `out = W x (+ b)` for a row-major `out.len() x x.len()` matrix.
fn matvec(w: &[f64], x: &[f64], bias: Option<&[f64]>, out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x) + bias.map_or(0.0, |b| b[r]);
    }
}

/// `out += W^T g`.
fn matvec_t_acc(w: &[f64], g: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr != 0.0 {
            axpy(gr, &w[r * cols..(r + 1) * cols], out);
        }
    }
}

/// `dW += g x^T`.
fn outer_acc(dw: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr != 0.0 {
            axpy(gr, x, &mut dw[r * cols..(r + 1) * cols]);
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    crate::judge::sigmoid(x)
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

#[derive(Clone, Debug, Default)]
struct GruCache {
    gx: Vec<f64>,
    gh: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct DecStep {
    s_prev: Vec<f64>,
    /// `tanh(Wa_s s_prev + Wa_h h_j)` for every source position, flattened.
    u: Vec<f64>,
    alpha: Vec<f64>,
    c: Vec<f64>,
    x: Vec<f64>,
    gru: GruCache,
    q: Vec<f64>,
    p: Vec<f64>,
}

/// Encoder outputs for one source sentence.
#[derive(Clone, Debug)]
pub struct Encoding {
    src: Vec<u32>,
    /// Hidden states, `S x H` flattened.
    hs: Vec<f64>,
    /// Attention keys `Wa_h h_j`, `S x H` flattened.
    keys: Vec<f64>,
    caches: Vec<GruCache>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    fn h(&self, j: usize, h: usize) -> &[f64] {
        &self.hs[j * h..(j + 1) * h]
    }
}

/// Output of one decoder step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: Vec<f64>,
    pub probs: Vec<f64>,
    pub attention: Vec<f64>,
}

/// All intermediate values of a teacher-forced pass, kept for backprop.
pub struct Forward {
    enc: Encoding,
    steps: Vec<DecStep>,
    inputs: Vec<u32>,
}

impl Forward {
    pub fn probs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.p.clone()).collect()
    }
}

/// GRU encoder-decoder with additive attention over encoder states.
#[derive(Clone, Debug, PartialEq)]
pub struct Seq2SeqModel {
    vocab: Vocab,
    cfg: ModelConfig,
    params: Vec<f64>,
    layout: Layout,
}

impl Seq2SeqModel {
    pub fn new(vocab: Vocab, cfg: ModelConfig) -> Result<Self> {
        if cfg.emb_dim == 0 || cfg.hidden_dim == 0 {
            return Err(Error::config("model dimensions must be positive"));
        }
        if !(cfg.init_scale.is_finite() && cfg.init_scale > 0.0) {
            return Err(Error::config("init_scale must be positive"));
        }
        let layout = Layout::new(vocab.len(), cfg.emb_dim, cfg.hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = (0..layout.total)
            .map(|i| {
                let x = rng.gen_range(-cfg.init_scale..cfg.init_scale);
                if layout.is_bias(i) {
                    0.0
                } else {
                    x
                }
            })
            .collect();
        Ok(Seq2SeqModel {
            vocab,
            cfg,
            params,
            layout,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn block(&self, off: usize, n: usize) -> &[f64] {
        &self.params[off..off + n]
    }

    fn emb(&self, id: u32) -> &[f64] {
        let e = self.layout.e;
        self.block(self.layout.emb + id as usize * e, e)
    }

    fn gru_forward(&self, g: &Gru, x: &[f64], h: &[f64], cache: &mut GruCache) -> Vec<f64> {
        let hd = self.layout.h;
        cache.gx.resize(3 * hd, 0.0);
        cache.gh.resize(3 * hd, 0.0);
        matvec(self.block(g.wx, 3 * hd * g.input), x, Some(self.block(g.bx, 3 * hd)), &mut cache.gx);
        matvec(self.block(g.wh, 3 * hd * hd), h, Some(self.block(g.bh, 3 * hd)), &mut cache.gh);
        cache.r.resize(hd, 0.0);
        cache.z.resize(hd, 0.0);
        cache.n.resize(hd, 0.0);
        let mut out = vec![0.0; hd];
        for i in 0..hd {
            let r = sigmoid(cache.gx[i] + cache.gh[i]);
            let z = sigmoid(cache.gx[hd + i] + cache.gh[hd + i]);
            let n = (cache.gx[2 * hd + i] + r * cache.gh[2 * hd + i]).tanh();
            cache.r[i] = r;
            cache.z[i] = z;
            cache.n[i] = n;
            out[i] = (1.0 - z) * n + z * h[i];
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn gru_backward(
        &self,
        g: &Gru,
        x: &[f64],
        h: &[f64],
        cache: &GruCache,
        dh_new: &[f64],
        grad: &mut [f64],
        dx: &mut [f64],
        dh_prev: &mut [f64],
    ) {
        let hd = self.layout.h;
        let mut gxv = vec![0.0; 3 * hd];
        let mut ghv = vec![0.0; 3 * hd];
        for i in 0..hd {
            let (r, z, n) = (cache.r[i], cache.z[i], cache.n[i]);
            let d = dh_new[i];
            dh_prev[i] += d * z;
            let dn_pre = d * (1.0 - z) * (1.0 - n * n);
            let dz_pre = d * (h[i] - n) * z * (1.0 - z);
            let dr_pre = dn_pre * cache.gh[2 * hd + i] * r * (1.0 - r);
            gxv[i] = dr_pre;
            gxv[hd + i] = dz_pre;
            gxv[2 * hd + i] = dn_pre;
            ghv[i] = dr_pre;
            ghv[hd + i] = dz_pre;
            ghv[2 * hd + i] = dn_pre * r;
        }
        outer_acc(&mut grad[g.wx..g.wx + 3 * hd * g.input], &gxv, x);
        axpy(1.0, &gxv, &mut grad[g.bx..g.bx + 3 * hd]);
        matvec_t_acc(self.block(g.wx, 3 * hd * g.input), &gxv, dx);
        outer_acc(&mut grad[g.wh..g.wh + 3 * hd * hd], &ghv, h);
        axpy(1.0, &ghv, &mut grad[g.bh..g.bh + 3 * hd]);
        matvec_t_acc(self.block(g.wh, 3 * hd * hd), &ghv, dh_prev);
    }

    /// Runs the encoder over `src` (which should end in EOS).
    pub fn encode(&self, src: &[u32]) -> Encoding {
        let hd = self.layout.h;
        let mut h = vec![0.0; hd];
        let mut hs = Vec::with_capacity(src.len() * hd);
        let mut caches = Vec::with_capacity(src.len());
        for &id in src {
            let mut cache = GruCache::default();
            h = self.gru_forward(&self.layout.enc, self.emb(id), &h, &mut cache);
            hs.extend_from_slice(&h);
            caches.push(cache);
        }
        let mut keys = vec![0.0; hs.len()];
        let wa_h = self.block(self.layout.att_h, hd * hd);
        for j in 0..src.len() {
            matvec(wa_h, &hs[j * hd..(j + 1) * hd], None, &mut keys[j * hd..(j + 1) * hd]);
        }
        Encoding {
            src: src.to_vec(),
            hs,
            keys,
            caches,
        }
    }

    /// Decoder state before the first step.
    pub fn initial_state(&self, enc: &Encoding) -> Vec<f64> {
        let hd = self.layout.h;
        if enc.is_empty() {
            vec![0.0; hd]
        } else {
            enc.h(enc.len() - 1, hd).to_vec()
        }
    }

    fn dec_step(&self, enc: &Encoding, s_prev: &[f64], y_prev: u32, st: &mut DecStep) -> Vec<f64> {
        let l = &self.layout;
        let hd = l.h;
        let n_src = enc.len();
        st.s_prev = s_prev.to_vec();
        let mut ws = vec![0.0; hd];
        matvec(self.block(l.att_s, hd * hd), s_prev, None, &mut ws);
        let va = self.block(l.att_v, hd);
        st.u.resize(n_src * hd, 0.0);
        st.alpha.resize(n_src, 0.0);
        for j in 0..n_src {
            let key = &enc.keys[j * hd..(j + 1) * hd];
            let u = &mut st.u[j * hd..(j + 1) * hd];
            for i in 0..hd {
                u[i] = (ws[i] + key[i]).tanh();
            }
            st.alpha[j] = dot(va, u);
        }
        softmax_in_place(&mut st.alpha);
        st.c = vec![0.0; hd];
        for j in 0..n_src {
            axpy(st.alpha[j], enc.h(j, hd), &mut st.c);
        }
        st.x.clear();
        st.x.extend_from_slice(self.emb(y_prev));
        st.x.extend_from_slice(&st.c);
        let s = self.gru_forward(&l.dec, &st.x.clone(), s_prev, &mut st.gru);
        st.q.clear();
        st.q.extend_from_slice(&s);
        st.q.extend_from_slice(&st.c);
        st.p.resize(l.v, 0.0);
        matvec(self.block(l.out_w, l.v * 2 * hd), &st.q, Some(self.block(l.out_b, l.v)), &mut st.p);
        softmax_in_place(&mut st.p);
        s
    }

    /// One decoding step from `state` after emitting `y_prev`.
    pub fn step(&self, enc: &Encoding, state: &[f64], y_prev: u32) -> StepOutput {
        let mut st = DecStep::default();
        let s = self.dec_step(enc, state, y_prev, &mut st);
        StepOutput {
            state: s,
            probs: st.p,
            attention: st.alpha,
        }
    }

    /// Teacher-forced pass: step `t` is fed `tgt[t-1]` (BOS first) and
    /// predicts `tgt[t]`.
    pub fn forward(&self, src: &[u32], tgt: &[u32]) -> Forward {
        let enc = self.encode(src);
        let mut s = self.initial_state(&enc);
        let mut steps = Vec::with_capacity(tgt.len());
        let mut inputs = Vec::with_capacity(tgt.len());
        for t in 0..tgt.len() {
            let y_prev = if t == 0 { BOS } else { tgt[t - 1] };
            let mut st = DecStep::default();
            s = self.dec_step(&enc, &s, y_prev, &mut st);
            steps.push(st);
            inputs.push(y_prev);
        }
        Forward { enc, steps, inputs }
    }

    /// Accumulates into `grad` the parameter gradient implied by the given
    /// per-step logit gradients.
    pub fn backward(&self, fwd: &Forward, grad_logits: &[Vec<f64>], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let l = self.layout;
        let hd = l.h;
        let e = l.e;
        let n_src = fwd.enc.len();
        let mut dhs = vec![0.0; n_src * hd];
        let mut dkeys = vec![0.0; n_src * hd];
        let mut ds_carry = vec![0.0; hd];
        let wo = self.block(l.out_w, l.v * 2 * hd);
        let va = self.block(l.att_v, hd);

        for (t, st) in fwd.steps.iter().enumerate().rev() {
            let dlogits = &grad_logits[t];
            outer_acc(&mut grad[l.out_w..l.out_w + l.v * 2 * hd], dlogits, &st.q);
            axpy(1.0, dlogits, &mut grad[l.out_b..l.out_b + l.v]);
            let mut dq = vec![0.0; 2 * hd];
            matvec_t_acc(wo, dlogits, &mut dq);
            let mut ds = ds_carry.clone();
            axpy(1.0, &dq[..hd], &mut ds);
            let mut dc = dq[hd..].to_vec();

            let mut dx = vec![0.0; e + hd];
            let mut dsp = vec![0.0; hd];
            self.gru_backward(&l.dec, &st.x, &st.s_prev, &st.gru, &ds, grad, &mut dx, &mut dsp);
            let y = fwd.inputs[t] as usize;
            axpy(1.0, &dx[..e], &mut grad[l.emb + y * e..l.emb + (y + 1) * e]);
            axpy(1.0, &dx[e..], &mut dc);

            let mut dalpha = vec![0.0; n_src];
            for j in 0..n_src {
                dalpha[j] = dot(&dc, fwd.enc.h(j, hd));
                axpy(st.alpha[j], &dc, &mut dhs[j * hd..(j + 1) * hd]);
            }
            let mean = dot(&st.alpha, &dalpha);
            let mut dpre_sum = vec![0.0; hd];
            for j in 0..n_src {
                let de = st.alpha[j] * (dalpha[j] - mean);
                if de == 0.0 {
                    continue;
                }
                let u = &st.u[j * hd..(j + 1) * hd];
                axpy(de, u, &mut grad[l.att_v..l.att_v + hd]);
                let dk = &mut dkeys[j * hd..(j + 1) * hd];
                for i in 0..hd {
                    let d = de * va[i] * (1.0 - u[i] * u[i]);
                    dpre_sum[i] += d;
                    dk[i] += d;
                }
            }
            outer_acc(&mut grad[l.att_s..l.att_s + hd * hd], &dpre_sum, &st.s_prev);
            matvec_t_acc(self.block(l.att_s, hd * hd), &dpre_sum, &mut dsp);
            ds_carry = dsp;
        }

        if n_src > 0 {
            axpy(1.0, &ds_carry, &mut dhs[(n_src - 1) * hd..]);
        }
        let wa_h = self.block(l.att_h, hd * hd);
        for j in 0..n_src {
            let dk = &dkeys[j * hd..(j + 1) * hd];
            outer_acc(&mut grad[l.att_h..l.att_h + hd * hd], dk, fwd.enc.h(j, hd));
            matvec_t_acc(wa_h, dk, &mut dhs[j * hd..(j + 1) * hd]);
        }

        let zeros = vec![0.0; hd];
        let mut dh_carry = vec![0.0; hd];
        for j in (0..n_src).rev() {
            let mut dh = dhs[j * hd..(j + 1) * hd].to_vec();
            axpy(1.0, &dh_carry, &mut dh);
            let h_prev = if j == 0 { &zeros[..] } else { fwd.enc.h(j - 1, hd) };
            let id = fwd.enc.src[j] as usize;
            let mut dx = vec![0.0; e];
            let mut dhp = vec![0.0; hd];
            self.gru_backward(&l.enc, self.emb(id as u32), h_prev, &fwd.enc.caches[j], &dh, grad, &mut dx, &mut dhp);
            axpy(1.0, &dx, &mut grad[l.emb + id * e..l.emb + (id + 1) * e]);
            dh_carry = dhp;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.cfg.clone(),
            vocab: self.vocab.clone(),
            params: self.params.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::format(e.line(), format!("gec model: {e}")))?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(Error::config(format!(
                "unsupported gec model format {} v{}",
                f.format, f.version
            )));
        }
        let mut m = Seq2SeqModel::new(f.vocab, f.config)?;
        if f.params.len() != m.params.len() {
            return Err(Error::config(format!(
                "gec model has {} parameters, its shape needs {}",
                f.params.len(),
                m.params.len()
            )));
        }
        m.params = f.params;
        Ok(m)
    }
}

const MODEL_FORMAT: &str = "colagec-seq2seq";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: ModelConfig,
    vocab: Vocab,
    params: Vec<f64>,
}
