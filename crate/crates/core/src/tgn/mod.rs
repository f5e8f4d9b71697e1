//! Temporal graph network: per-node memory updated by a GRU from identity
//! messages, an embedding module over recent neighbors, and two MLP decoders
//! (gaze link and next speaker).
//!
//! Memory semantics follow the usual TGN batch procedure. Predictions for a
//! batch read the state as it was before the batch. After predicting, each
//! node touched by a positive event gets one GRU update from its aggregated
//! messages. The update is stored eagerly in [`TgnState`] and replayed on the
//! next batch's trace so the GRU and time encoder receive gradients; the
//! replay uses the parameters current at that point.

mod batch;
mod forward;
mod state;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::features::{TimeEncoderParams, MESSAGE_DIM};
use crate::tensor::{ParamSet, Tensor};
use crate::{Error, Result};

pub use batch::{
    batch_ranges, build_link_queries, build_speaker_queries, commit_batch, process_batch,
    BatchOutput, LinkQuery, PreparedSession, SpeakerQuery,
};
pub use forward::{decode_link, decode_speaker, forward_batch, gru_update, BatchForward, Embedder};
pub use state::{NeighborEntry, NeighborStore, PendingMessage, PendingUpdate, TgnState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    Id,
    Time,
    Sum,
    Attn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Mean,
    Last,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub d_memory: usize,
    pub d_time: usize,
    pub d_embed: usize,
    /// Edge feature width; 14 for one-hot messages.
    pub d_feat: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub neighbors: usize,
    pub d_hidden: usize,
    pub memory: bool,
    pub embedding: EmbeddingMode,
    pub aggregator: Aggregator,
    pub layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_memory: 32,
            d_time: 32,
            d_embed: 32,
            d_feat: MESSAGE_DIM,
            heads: 2,
            head_dim: 16,
            neighbors: 10,
            d_hidden: 32,
            memory: true,
            embedding: EmbeddingMode::Attn,
            aggregator: Aggregator::Mean,
            layers: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if [
            self.d_memory,
            self.d_time,
            self.d_embed,
            self.d_feat,
            self.heads,
            self.head_dim,
            self.neighbors,
            self.d_hidden,
        ]
        .contains(&0)
        {
            return bad("model dimensions must be positive");
        }
        if self.embedding != EmbeddingMode::Attn && self.d_embed != self.d_memory {
            return bad("d_embed must equal d_memory unless embedding is attn");
        }
        if !(1..=2).contains(&self.layers) {
            return bad("layers must be 1 or 2");
        }
        if self.layers == 2 && self.embedding != EmbeddingMode::Attn {
            return bad("two layers are only defined for attn embedding");
        }
        Ok(())
    }

    /// Raw message width: two memories, time encoding, edge features.
    pub fn d_message(&self) -> usize {
        2 * self.d_memory + self.d_time + self.d_feat
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 1 {
            self.d_memory
        } else {
            self.d_embed
        }
    }

    pub fn uses_time_encoder(&self) -> bool {
        self.memory || matches!(self.embedding, EmbeddingMode::Attn | EmbeddingMode::Time)
    }

    /// Parameter names of everything except the two decoders.
    pub fn is_encoder_param(name: &str) -> bool {
        !name.starts_with("link.") && !name.starts_with("speaker.")
    }

    /// Xavier-uniform weights, zero biases; the time encoder starts at
    /// geometric frequencies.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParamSet> {
        self.validate()?;
        let mut ps = ParamSet::new();
        let bias = |n: usize| Tensor::zeros(1, n);

        if self.uses_time_encoder() {
            let te = TimeEncoderParams::geometric(self.d_time);
            ps.insert("time.w", Tensor::row(te.w))?;
            ps.insert("time.b", Tensor::row(te.b))?;
        }
        if self.memory {
            let (dm, ds) = (self.d_message(), self.d_memory);
            for gate in ["z", "r", "h"] {
                ps.insert(format!("gru.w_{gate}"), Tensor::xavier(dm, ds, rng))?;
                ps.insert(format!("gru.u_{gate}"), Tensor::xavier(ds, ds, rng))?;
                ps.insert(format!("gru.b_{gate}"), bias(ds))?;
            }
        }
        match self.embedding {
            EmbeddingMode::Id => {}
            EmbeddingMode::Time => {
                ps.insert("emb_time.w", Tensor::xavier(self.d_time, self.d_embed, rng))?;
                ps.insert("emb_time.b", bias(self.d_embed))?;
            }
            EmbeddingMode::Sum => {
                let d_in = self.d_memory + self.d_feat;
                ps.insert("emb_sum.w", Tensor::xavier(d_in, self.d_embed, rng))?;
                ps.insert("emb_sum.b", bias(self.d_embed))?;
            }
            EmbeddingMode::Attn => {
                for layer in 1..=self.layers {
                    let d_in = self.layer_input(layer);
                    let q_in = d_in + self.d_time;
                    let kv_in = d_in + self.d_time + self.d_feat;
                    for h in 0..self.heads {
                        let p = format!("attn{layer}.head{h}");
                        ps.insert(format!("{p}.w_q"), Tensor::xavier(q_in, self.head_dim, rng))?;
                        ps.insert(format!("{p}.w_k"), Tensor::xavier(kv_in, self.head_dim, rng))?;
                        ps.insert(format!("{p}.w_v"), Tensor::xavier(kv_in, self.head_dim, rng))?;
                    }
                    let merge_in = self.heads * self.head_dim + d_in;
                    ps.insert(
                        format!("attn{layer}.w_o"),
                        Tensor::xavier(merge_in, self.d_embed, rng),
                    )?;
                    ps.insert(format!("attn{layer}.b_o"), bias(self.d_embed))?;
                }
            }
        }
        let dz = self.d_embed;
        ps.insert("link.w1", Tensor::xavier(2 * dz, self.d_hidden, rng))?;
        ps.insert("link.b1", bias(self.d_hidden))?;
        ps.insert("link.w2", Tensor::xavier(self.d_hidden, 1, rng))?;
        ps.insert("link.b2", bias(1))?;
        ps.insert("speaker.w1", Tensor::xavier(dz, self.d_hidden, rng))?;
        ps.insert("speaker.b1", bias(self.d_hidden))?;
        ps.insert("speaker.w2", Tensor::xavier(self.d_hidden, 1, rng))?;
        ps.insert("speaker.b2", bias(1))?;
        Ok(ps)
    }
}

/// Set every parameter of one decoder (`"link"` or `"speaker"`) to zero.
pub fn zero_decoder(params: &mut ParamSet, prefix: &str) {
    let prefix = format!("{prefix}.");
    for (name, t) in params.iter_mut() {
        if name.starts_with(&prefix) {
            t.data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
    }
}
