use std::collections::HashMap;

use super::state::{PendingUpdate, TgnState};
use super::{Aggregator, EmbeddingMode, ModelConfig};
use crate::autograd::{Trace, Var};
use crate::features::time_encode_traced;
use crate::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

/// One GRU step: z, r gates, candidate h̃, s' = (1−z)⊙s + z⊙h̃.
fn gru_traced(tr: &mut Trace, params: &ParamSet, s: Var, m: Var) -> Result<Var> {
    let gate = |tr: &mut Trace, g: &str, hidden: Var| -> Result<Var> {
        let w = tr.param(params, &format!("gru.w_{g}"))?;
        let u = tr.param(params, &format!("gru.u_{g}"))?;
        let b = tr.param(params, &format!("gru.b_{g}"))?;
        let wm = tr.matmul(m, w)?;
        let uh = tr.matmul(hidden, u)?;
        let sum = tr.add(wm, uh)?;
        tr.add(sum, b)
    };
    let z = gate(tr, "z", s)?;
    let z = tr.sigmoid(z);
    let r = gate(tr, "r", s)?;
    let r = tr.sigmoid(r);
    let rs = tr.mul(r, s)?;
    let h = gate(tr, "h", rs)?;
    let h = tr.tanh(h);
    // s + z ⊙ (h̃ − s)
    let diff = tr.sub(h, s)?;
    let step = tr.mul(z, diff)?;
    tr.add(s, step)
}

/// Plain GRU update of memory `s` with message `m`.
pub fn gru_update(s: &[f64], m: &[f64], params: &ParamSet) -> Result<Vec<f64>> {
    let mut tr = Trace::new();
    let s = tr.constant_row(s);
    let m = tr.constant_row(m);
    let out = gru_traced(&mut tr, params, s, m)?;
    Ok(tr.value(out).data().to_vec())
}

/// Aggregate a node's raw messages and apply the GRU, on `tr`.
pub(crate) fn memory_update_traced(
    tr: &mut Trace,
    cfg: &ModelConfig,
    params: &ParamSet,
    update: &PendingUpdate,
) -> Result<Var> {
    if update.messages.is_empty() {
        return Err(Error::Invariant("memory update without messages".into()));
    }
    let tw = tr.param(params, "time.w")?;
    let tb = tr.param(params, "time.b")?;
    let s_prev = tr.constant_row(&update.s_prev);
    let chosen: Vec<_> = match cfg.aggregator {
        Aggregator::Mean => update.messages.iter().collect(),
        Aggregator::Last => {
            // max t; ties go to the latest in stream order
            let mut best = &update.messages[0];
            for m in &update.messages[1..] {
                if m.t >= best.t {
                    best = m;
                }
            }
            vec![best]
        }
    };
    let mut rows = Vec::with_capacity(chosen.len());
    for msg in chosen {
        let other = tr.constant_row(&msg.s_other);
        let phi = time_encode_traced(tr, tw, tb, msg.delta_t)?;
        let feat = tr.constant_row(&msg.feat);
        rows.push(tr.concat_rows(&[s_prev, other, phi, feat])?);
    }
    let m = if rows.len() == 1 {
        rows[0]
    } else {
        tr.mean_of(&rows)?
    };
    gru_traced(tr, params, s_prev, m)
}

fn mlp(tr: &mut Trace, params: &ParamSet, prefix: &str, x: Var) -> Result<Var> {
    let w1 = tr.param(params, &format!("{prefix}.w1"))?;
    let b1 = tr.param(params, &format!("{prefix}.b1"))?;
    let w2 = tr.param(params, &format!("{prefix}.w2"))?;
    let b2 = tr.param(params, &format!("{prefix}.b2"))?;
    let h = tr.matmul(x, w1)?;
    let h = tr.add(h, b1)?;
    let h = tr.relu(h);
    let o = tr.matmul(h, w2)?;
    tr.add(o, b2)
}

/// Link logit from the concatenated endpoint embeddings.
pub fn decode_link(tr: &mut Trace, params: &ParamSet, z_src: Var, z_dst: Var) -> Result<Var> {
    let x = tr.concat_rows(&[z_src, z_dst])?;
    mlp(tr, params, "link", x)
}

/// Next-speaker logit from one node embedding.
pub fn decode_speaker(tr: &mut Trace, params: &ParamSet, z: Var) -> Result<Var> {
    mlp(tr, params, "speaker", z)
}

type EmbedKey = (usize, u64, usize);

/// Computes node embeddings against a fixed pre-batch state, caching per
/// `(node, time, layer)`.
pub struct Embedder<'a> {
    cfg: &'a ModelConfig,
    params: &'a ParamSet,
    state: &'a TgnState,
    base: Vec<Var>,
    replayed: Vec<(usize, Var)>,
    cache: HashMap<EmbedKey, Var>,
    /// Attention weights per head for each attn embedding computed.
    pub attention: HashMap<EmbedKey, Vec<Vec<f64>>>,
}

impl<'a> Embedder<'a> {
    /// Places every node's memory on `tr`; nodes with a pending update have
    /// it replayed through the GRU so gradients reach the memory updater.
    pub fn new(
        cfg: &'a ModelConfig,
        params: &'a ParamSet,
        state: &'a TgnState,
        tr: &mut Trace,
    ) -> Result<Self> {
        let mut base = Vec::with_capacity(state.slots());
        let mut replayed = Vec::new();
        for slot in 0..state.slots() {
            let v = match (cfg.memory, &state.pending[slot]) {
                (true, Some(update)) if slot != 0 => {
                    let v = memory_update_traced(tr, cfg, params, update)?;
                    replayed.push((slot, v));
                    v
                }
                _ => tr.constant_row(&state.memory[slot]),
            };
            base.push(v);
        }
        Ok(Embedder {
            cfg,
            params,
            state,
            base,
            replayed,
            cache: HashMap::new(),
            attention: HashMap::new(),
        })
    }

    /// Memory as seen by this batch (after replaying pending updates).
    pub fn memory_var(&self, slot: usize) -> Var {
        self.base[slot]
    }

    pub fn replayed(&self) -> &[(usize, Var)] {
        &self.replayed
    }

    pub fn embed(&mut self, tr: &mut Trace, slot: usize, t: f64) -> Result<Var> {
        let top = match self.cfg.embedding {
            EmbeddingMode::Attn => self.cfg.layers,
            _ => 1,
        };
        self.embed_layer(tr, slot, t, top)
    }

    fn time_enc(&self, tr: &mut Trace, delta_t: f64) -> Result<Var> {
        let w = tr.param(self.params, "time.w")?;
        let b = tr.param(self.params, "time.b")?;
        time_encode_traced(tr, w, b, delta_t)
    }

    fn embed_layer(&mut self, tr: &mut Trace, slot: usize, t: f64, layer: usize) -> Result<Var> {
        if layer == 0 || self.cfg.embedding == EmbeddingMode::Id {
            return Ok(self.base[slot]);
        }
        let key = (slot, t.to_bits(), layer);
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let s = self.base[slot];
        let neighbors = self.state.neighbors.get(slot);
        let z = match self.cfg.embedding {
            EmbeddingMode::Id => unreachable!(),
            EmbeddingMode::Time => {
                let dt = t - self.state.last_update[slot];
                let phi = self.time_enc(tr, dt)?;
                let w = tr.param(self.params, "emb_time.w")?;
                let b = tr.param(self.params, "emb_time.b")?;
                let p = tr.matmul(phi, w)?;
                let p = tr.add(p, b)?;
                let scaled = tr.mul(s, p)?;
                tr.add(s, scaled)?
            }
            EmbeddingMode::Sum if neighbors.is_empty() => s,
            EmbeddingMode::Sum => {
                let mut rows = Vec::with_capacity(neighbors.len());
                for nb in neighbors {
                    let f = tr.constant_row(&nb.feat);
                    rows.push(tr.concat_rows(&[self.base[nb.slot], f])?);
                }
                let x = tr.stack_rows(&rows)?;
                let w = tr.param(self.params, "emb_sum.w")?;
                let b = tr.param(self.params, "emb_sum.b")?;
                let h = tr.matmul(x, w)?;
                let h = tr.add(h, b)?;
                let ones = tr.constant(Tensor::new(vec![1, rows.len()], vec![1.0; rows.len()])?);
                let agg = tr.matmul(ones, h)?;
                tr.add(s, agg)?
            }
            EmbeddingMode::Attn if neighbors.is_empty() => {
                self.embed_layer(tr, slot, t, layer - 1)?
            }
            EmbeddingMode::Attn => {
                let entries: Vec<(usize, f64, Vec<f64>)> = neighbors
                    .iter()
                    .map(|n| (n.slot, n.t, n.feat.clone()))
                    .collect();
                let h_self = self.embed_layer(tr, slot, t, layer - 1)?;
                let phi0 = self.time_enc(tr, 0.0)?;
                let q_in = tr.concat_rows(&[h_self, phi0])?;
                let mut rows = Vec::with_capacity(entries.len());
                for (nb_slot, nb_t, feat) in &entries {
                    let h = self.embed_layer(tr, *nb_slot, t, layer - 1)?;
                    let phi = self.time_enc(tr, t - nb_t)?;
                    let f = tr.constant_row(feat);
                    rows.push(tr.concat_rows(&[h, phi, f])?);
                }
                let x = tr.stack_rows(&rows)?;
                let scale = 1.0 / (self.cfg.head_dim as f64).sqrt();
                let mut parts = Vec::with_capacity(self.cfg.heads + 1);
                let mut weights = Vec::with_capacity(self.cfg.heads);
                for head in 0..self.cfg.heads {
                    let p = format!("attn{layer}.head{head}");
                    let wq = tr.param(self.params, &format!("{p}.w_q"))?;
                    let wk = tr.param(self.params, &format!("{p}.w_k"))?;
                    let wv = tr.param(self.params, &format!("{p}.w_v"))?;
                    let q = tr.matmul(q_in, wq)?;
                    let k = tr.matmul(x, wk)?;
                    let v = tr.matmul(x, wv)?;
                    let kt = tr.transpose(k);
                    let scores = tr.matmul(q, kt)?;
                    let scores = tr.scale(scores, scale);
                    let alpha = tr.softmax_rows(scores);
                    weights.push(tr.value(alpha).data().to_vec());
                    parts.push(tr.matmul(alpha, v)?);
                }
                parts.push(h_self);
                let merged = tr.concat_rows(&parts)?;
                let wo = tr.param(self.params, &format!("attn{layer}.w_o"))?;
                let bo = tr.param(self.params, &format!("attn{layer}.b_o"))?;
                let z = tr.matmul(merged, wo)?;
                self.attention.insert(key, weights);
                tr.add(z, bo)?
            }
        };
        self.cache.insert(key, z);
        Ok(z)
    }
}

/// Logits of one batch, computed from the pre-batch state only.
#[derive(Debug)]
pub struct BatchForward {
    pub link: Vec<Var>,
    pub speaker: Vec<Var>,
    /// Memory values used for nodes whose pending update was replayed.
    pub replayed: Vec<(usize, Var)>,
}

pub fn forward_batch(
    cfg: &ModelConfig,
    params: &ParamSet,
    state: &TgnState,
    link_queries: &[super::LinkQuery],
    speaker_queries: &[super::SpeakerQuery],
    tr: &mut Trace,
) -> Result<BatchForward> {
    if let Some(clock) = state.clock {
        let earliest = link_queries
            .iter()
            .map(|q| q.t)
            .chain(speaker_queries.iter().map(|q| q.t))
            .fold(f64::INFINITY, f64::min);
        if earliest < clock {
            return Err(Error::Invariant(format!(
                "query at t={earliest} precedes state clock {clock}"
            )));
        }
    }
    let mut emb = Embedder::new(cfg, params, state, tr)?;
    let mut link = Vec::with_capacity(link_queries.len());
    for q in link_queries {
        let zs = emb.embed(tr, q.src, q.t)?;
        let zd = emb.embed(tr, q.dst, q.t)?;
        link.push(decode_link(tr, params, zs, zd)?);
    }
    let mut speaker = Vec::with_capacity(speaker_queries.len());
    for q in speaker_queries {
        let z = emb.embed(tr, q.node, q.t)?;
        speaker.push(decode_speaker(tr, params, z)?);
    }
    Ok(BatchForward {
        link,
        speaker,
        replayed: emb.replayed().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::sigmoid;
    use crate::rng::rng_from_seed;

    fn gru_params(d_in: usize, d_s: usize, seed: u64) -> ParamSet {
        let mut rng = rng_from_seed(seed);
        let mut ps = ParamSet::new();
        for g in ["z", "r", "h"] {
            ps.insert(format!("gru.w_{g}"), Tensor::xavier(d_in, d_s, &mut rng)).unwrap();
            ps.insert(format!("gru.u_{g}"), Tensor::xavier(d_s, d_s, &mut rng)).unwrap();
            ps.insert(format!("gru.b_{g}"), Tensor::xavier(1, d_s, &mut rng)).unwrap();
        }
        ps
    }

    fn zeroed(mut ps: ParamSet) -> ParamSet {
        for (_, t) in ps.iter_mut() {
            t.data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
        ps
    }

    #[test]
    fn gru_zero_params_halves_memory() {
        let ps = zeroed(gru_params(3, 2, 0));
        let out = gru_update(&[0.8, -0.4], &[1.0, 2.0, 3.0], &ps).unwrap();
        assert_eq!(out, vec![0.4, -0.2]);
        let out = gru_update(&[0.0, 0.0], &[1.0, 2.0, 3.0], &ps).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    /// Scalar loop evaluation of the three gate formulas.
    #[test]
    fn gru_matches_scalar_oracle() {
        let (d_in, d_s) = (5, 3);
        let ps = gru_params(d_in, d_s, 11);
        let s = [0.3, -0.7, 0.1];
        let m = [0.5, -0.2, 0.9, 0.0, -1.1];
        let w = |g: &str, i: usize, j: usize| ps.get(&format!("gru.w_{g}")).unwrap().at(i, j);
        let u = |g: &str, i: usize, j: usize| ps.get(&format!("gru.u_{g}")).unwrap().at(i, j);
        let b = |g: &str, j: usize| ps.get(&format!("gru.b_{g}")).unwrap().at(0, j);
        let lin = |g: &str, j: usize, h: &[f64]| {
            let mut acc = b(g, j);
            for i in 0..d_in {
                acc += m[i] * w(g, i, j);
            }
            for i in 0..d_s {
                acc += h[i] * u(g, i, j);
            }
            acc
        };
        let z: Vec<f64> = (0..d_s).map(|j| sigmoid(lin("z", j, &s))).collect();
        let r: Vec<f64> = (0..d_s).map(|j| sigmoid(lin("r", j, &s))).collect();
        let rs: Vec<f64> = (0..d_s).map(|j| r[j] * s[j]).collect();
        let h: Vec<f64> = (0..d_s).map(|j| lin("h", j, &rs).tanh()).collect();
        let expect: Vec<f64> = (0..d_s).map(|j| (1.0 - z[j]) * s[j] + z[j] * h[j]).collect();
        let got = gru_update(&s, &m, &ps).unwrap();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-14, "{got:?} vs {expect:?}");
        }
    }

    #[test]
    fn zero_decoders_give_zero_logits() {
        let cfg = ModelConfig::default();
        let mut ps = cfg.init_params(&mut rng_from_seed(1)).unwrap();
        super::super::zero_decoder(&mut ps, "link");
        super::super::zero_decoder(&mut ps, "speaker");
        let mut tr = Trace::new();
        let a = tr.constant_row(&[0.3; 32]);
        let b = tr.constant_row(&[-0.2; 32]);
        let l = decode_link(&mut tr, &ps, a, b).unwrap();
        let s = decode_speaker(&mut tr, &ps, a).unwrap();
        assert_eq!(tr.value(l).item(), 0.0);
        assert_eq!(sigmoid(tr.value(s).item()), 0.5);
    }
}
