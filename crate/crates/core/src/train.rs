//! Two-phase training: link prediction (phase 1), then next-speaker
//! prediction on top of the phase-1 encoder (phase 2).

use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autograd::Trace;
use crate::eval::{accuracy, evaluate_model, f1, Confusion, EvalOptions, THRESHOLD};
use crate::features::MessageSource;
use crate::optim::{Adam, AdamConfig};
use crate::rng::{derive_rng, derive_seed, rng_from_seed};
use crate::session::Session;
use crate::tensor::ParamSet;
use crate::tgn::{
    build_link_queries, build_speaker_queries, commit_batch, decode_speaker, forward_batch,
    Embedder, ModelConfig, PreparedSession,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub patience: usize,
    pub max_epochs: usize,
    /// Phase-2 epoch cap; `None` reuses `max_epochs`.
    pub phase2_max_epochs: Option<usize>,
    /// Seconds per batch; a batch holds `batch_window × n_subjects` events.
    pub batch_window: usize,
    pub validation_fraction: f64,
    /// Phase 2 trains only the speaker decoder when set.
    pub freeze_encoder: bool,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            weight_decay: 1e-4,
            patience: 10,
            max_epochs: 100,
            phase2_max_epochs: None,
            batch_window: 10,
            validation_fraction: 0.15,
            freeze_encoder: true,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.batch_window == 0 {
            return Err(Error::Config("batch_window must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must be in (0, 1)".into()));
        }
        self.model.validate()
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

/// A training session with its validation tail.
#[derive(Clone, Debug)]
pub struct TrainSession {
    pub prep: PreparedSession,
    /// First event of the held-out tail.
    pub validation_start: usize,
}

impl TrainSession {
    pub fn new(session: &Session, source: &MessageSource, validation_fraction: f64) -> Result<Self> {
        Ok(TrainSession {
            prep: PreparedSession::new(session, source)?,
            validation_start: session.stream.validation_start(validation_fraction),
        })
    }

    fn train_range(&self) -> Range<usize> {
        0..self.validation_start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: u8,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
    pub val_acc: f64,
    /// Wall time; excluded from reproducibility comparisons.
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    /// Parameters of the best validation epoch (initial ones if no epoch ran).
    pub params: ParamSet,
    pub log: Vec<EpochLog>,
    pub best_epoch: Option<usize>,
}

impl PhaseOutcome {
    pub fn best_val_f1(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.log[e - 1].val_f1)
    }
}

/// Parameters plus the model configuration that shapes them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub phase: u8,
    pub model: ModelConfig,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "phase": self.phase,
            "config": self.model,
            "params": self.params.to_json_value(),
        });
        let mut s = serde_json::to_string(&v).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            phase: u8,
            config: ModelConfig,
            params: serde_json::Value,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| Error::parse("checkpoint", e.to_string()))?;
        raw.config.validate()?;
        let params = ParamSet::from_json_value(raw.params)?;
        let expected = raw.config.init_params(&mut rng_from_seed(0))?;
        let mismatch = expected.len() != params.len()
            || expected
                .iter()
                .any(|(n, t)| params.get(n).map(|p| p.shape()) != Some(t.shape()));
        if mismatch {
            return Err(Error::parse("checkpoint", "parameters do not match the config"));
        }
        Ok(Checkpoint {
            phase: raw.phase,
            model: raw.config,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn validation_options(cfg: &TrainConfig, seed: u64) -> EvalOptions {
    EvalOptions {
        batch_window: cfg.batch_window,
        seed: derive_seed(seed, "validation", 0),
    }
}

fn validation_counts(
    cfg: &TrainConfig,
    params: &ParamSet,
    sessions: &[TrainSession],
    seed: u64,
) -> Result<(Confusion, Confusion)> {
    let pairs: Vec<_> = sessions.iter().map(|s| (&s.prep, s.validation_start)).collect();
    let counts = evaluate_model(&cfg.model, params, &pairs, &validation_options(cfg, seed))?;
    Ok(crate::eval::total(&counts))
}

/// Tracks the best epoch and decides when to stop.
struct EarlyStop {
    patience: usize,
    best: Option<(usize, f64, ParamSet)>,
}

impl EarlyStop {
    /// Returns true when training should stop.
    fn observe(&mut self, epoch: usize, val_f1: f64, params: &ParamSet) -> bool {
        let improved = match &self.best {
            None => true,
            Some((_, best, _)) => val_f1 > *best,
        };
        if improved {
            self.best = Some((epoch, val_f1, params.clone()));
        }
        let best_epoch = self.best.as_ref().map_or(epoch, |b| b.0);
        epoch - best_epoch >= self.patience
    }

    fn finish(self, initial: ParamSet, log: Vec<EpochLog>) -> PhaseOutcome {
        match self.best {
            Some((epoch, _, params)) => PhaseOutcome {
                params,
                log,
                best_epoch: Some(epoch),
            },
            None => PhaseOutcome {
                params: initial,
                log,
                best_epoch: None,
            },
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Self-supervised link prediction on the training part of each session,
/// memory reset per session and epoch, early stopping on validation F1.
pub fn train_phase1(
    sessions: &[TrainSession],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<PhaseOutcome> {
    cfg.validate()?;
    if sessions.is_empty() {
        return Err(Error::Config("no training sessions".into()));
    }
    let model = &cfg.model;
    let mut params = model.init_params(&mut derive_rng(seed, "init", 0))?;
    let initial = params.clone();
    let mut adam = Adam::new(cfg.adam(), &params);
    let mut stop = EarlyStop {
        patience: cfg.patience,
        best: None,
    };
    let mut log = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut rng = derive_rng(seed, "train-negatives", epoch as u64);
        let mut losses = Vec::new();
        for s in sessions {
            let prep = &s.prep;
            let size = cfg.batch_window * prep.n_subjects();
            let mut state = prep.new_state(model);
            debug_assert!(state.is_zero_memory());
            for r in prep.batches(s.train_range(), size) {
                let queries = build_link_queries(prep, r.clone(), &mut rng);
                let mut tr = Trace::new();
                let fw = forward_batch(model, &params, &state, &queries, &[], &mut tr)?;
                let mut terms = Vec::with_capacity(queries.len());
                for (q, &logit) in queries.iter().zip(&fw.link) {
                    terms.push(tr.bce_with_logits(logit, q.label)?);
                }
                let loss = tr.mean_of(&terms)?;
                losses.push(tr.value(loss).item());
                params.zero_grad();
                tr.backward(loss, &mut params)?;
                adam.step(&mut params, |n| !n.starts_with("speaker."));
                commit_batch(model, &params, &mut state, prep, r)?;
            }
        }
        let (link, _) = validation_counts(cfg, &params, sessions, seed)?;
        let entry = EpochLog {
            phase: 1,
            epoch,
            train_loss: mean(&losses),
            val_f1: f1(&link),
            val_acc: accuracy(&link).unwrap_or(0.0),
            seconds: started.elapsed().as_secs_f64(),
        };
        let halt = stop.observe(epoch, entry.val_f1, &params);
        log.push(entry);
        if halt {
            break;
        }
    }
    Ok(stop.finish(initial, log))
}

/// Speaker-query embeddings of one session computed by a single replay of
/// a fixed encoder, grouped by batch.
struct CachedBatch {
    embeddings: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

struct CachedSession {
    train: Vec<CachedBatch>,
    validation: Vec<CachedBatch>,
}

fn cache_embeddings(
    model: &ModelConfig,
    params: &ParamSet,
    s: &TrainSession,
    batch_window: usize,
) -> Result<CachedSession> {
    let prep = &s.prep;
    let size = batch_window * prep.n_subjects();
    let mut state = prep.new_state(model);
    debug_assert!(state.is_zero_memory());
    let mut out = CachedSession {
        train: Vec::new(),
        validation: Vec::new(),
    };
    let ranges = prep
        .batches(0..s.validation_start, size)
        .into_iter()
        .chain(prep.batches(s.validation_start..prep.len(), size));
    for r in ranges {
        let queries = build_speaker_queries(prep, r.clone());
        let mut tr = Trace::new();
        let mut emb = Embedder::new(model, params, &state, &mut tr)?;
        let mut batch = CachedBatch {
            embeddings: Vec::with_capacity(queries.len()),
            labels: Vec::with_capacity(queries.len()),
        };
        for q in &queries {
            let z = emb.embed(&mut tr, q.node, q.t)?;
            batch.embeddings.push(tr.value(z).data().to_vec());
            batch.labels.push(q.label);
        }
        if r.start < s.validation_start {
            out.train.push(batch);
        } else {
            out.validation.push(batch);
        }
        commit_batch(model, params, &mut state, prep, r)?;
    }
    Ok(out)
}

/// Batch loss on cached embeddings; `None` for a batch without queries.
fn speaker_batch_loss(
    tr: &mut Trace,
    params: &ParamSet,
    batch: &CachedBatch,
) -> Result<Option<(crate::autograd::Var, Vec<f64>)>> {
    if batch.labels.is_empty() {
        return Ok(None);
    }
    let mut terms = Vec::with_capacity(batch.labels.len());
    let mut logits = Vec::with_capacity(batch.labels.len());
    for (z, &y) in batch.embeddings.iter().zip(&batch.labels) {
        let z = tr.constant_row(z);
        let logit = decode_speaker(tr, params, z)?;
        logits.push(tr.value(logit).item());
        terms.push(tr.bce_with_logits(logit, y)?);
    }
    Ok(Some((tr.mean_of(&terms)?, logits)))
}

fn cached_validation(params: &ParamSet, cache: &[CachedSession]) -> Result<Confusion> {
    let mut c = Confusion::default();
    for s in cache {
        for b in &s.validation {
            let mut tr = Trace::new();
            if let Some((_, logits)) = speaker_batch_loss(&mut tr, params, b)? {
                for (l, y) in logits.iter().zip(&b.labels) {
                    c.record(crate::autograd::sigmoid(*l) > THRESHOLD, *y == 1.0);
                }
            }
        }
    }
    Ok(c)
}

/// Next-speaker training on top of phase-1 parameters. With a frozen
/// encoder the embeddings cannot change, so one replay per session is cached
/// and reused by every epoch; otherwise each epoch replays from t = 0.
pub fn train_phase2(
    sessions: &[TrainSession],
    phase1: &ParamSet,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<PhaseOutcome> {
    cfg.validate()?;
    if sessions.is_empty() {
        return Err(Error::Config("no training sessions".into()));
    }
    let model = &cfg.model;
    let mut params = phase1.clone();
    let initial = params.clone();
    let mut adam = Adam::new(cfg.adam(), &params);
    let mut stop = EarlyStop {
        patience: cfg.patience,
        best: None,
    };
    let max_epochs = cfg.phase2_max_epochs.unwrap_or(cfg.max_epochs);
    let cache = if cfg.freeze_encoder && max_epochs > 0 {
        sessions
            .iter()
            .map(|s| cache_embeddings(model, &params, s, cfg.batch_window))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let trainable: fn(&str) -> bool = if cfg.freeze_encoder {
        |n| n.starts_with("speaker.")
    } else {
        |n| !n.starts_with("link.")
    };
    let mut log = Vec::new();
    for epoch in 1..=max_epochs {
        let started = Instant::now();
        let mut losses = Vec::new();
        if cfg.freeze_encoder {
            for s in &cache {
                for b in &s.train {
                    let mut tr = Trace::new();
                    let Some((loss, _)) = speaker_batch_loss(&mut tr, &params, b)? else {
                        continue;
                    };
                    losses.push(tr.value(loss).item());
                    params.zero_grad();
                    tr.backward(loss, &mut params)?;
                    adam.step(&mut params, trainable);
                }
            }
        } else {
            for s in sessions {
                let prep = &s.prep;
                let size = cfg.batch_window * prep.n_subjects();
                let mut state = prep.new_state(model);
                debug_assert!(state.is_zero_memory());
                for r in prep.batches(s.train_range(), size) {
                    let queries = build_speaker_queries(prep, r.clone());
                    if !queries.is_empty() {
                        let mut tr = Trace::new();
                        let fw = forward_batch(model, &params, &state, &[], &queries, &mut tr)?;
                        let mut terms = Vec::with_capacity(queries.len());
                        for (q, &logit) in queries.iter().zip(&fw.speaker) {
                            terms.push(tr.bce_with_logits(logit, q.label)?);
                        }
                        let loss = tr.mean_of(&terms)?;
                        losses.push(tr.value(loss).item());
                        params.zero_grad();
                        tr.backward(loss, &mut params)?;
                        adam.step(&mut params, trainable);
                    }
                    commit_batch(model, &params, &mut state, prep, r)?;
                }
            }
        }
        let speaker = if cfg.freeze_encoder {
            cached_validation(&params, &cache)?
        } else {
            validation_counts(cfg, &params, sessions, seed)?.1
        };
        let entry = EpochLog {
            phase: 2,
            epoch,
            train_loss: mean(&losses),
            val_f1: f1(&speaker),
            val_acc: accuracy(&speaker).unwrap_or(0.0),
            seconds: started.elapsed().as_secs_f64(),
        };
        let halt = stop.observe(epoch, entry.val_f1, &params);
        log.push(entry);
        if halt {
            break;
        }
    }
    Ok(stop.finish(initial, log))
}

/// One JSON object per line.
pub fn log_to_jsonl(log: &[EpochLog]) -> String {
    log.iter()
        .map(|e| serde_json::to_string(e).expect("log entry serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stop_keeps_first_best() {
        let ps = ParamSet::new();
        let mut s = EarlyStop {
            patience: 2,
            best: None,
        };
        assert!(!s.observe(1, 0.5, &ps));
        assert!(!s.observe(2, 0.5, &ps));
        assert!(s.observe(3, 0.4, &ps));
        assert_eq!(s.best.as_ref().unwrap().0, 1);
    }

    #[test]
    fn invalid_configs() {
        for c in [
            TrainConfig { lr: 0.0, ..TrainConfig::default() },
            TrainConfig { patience: 0, ..TrainConfig::default() },
            TrainConfig { validation_fraction: 1.0, ..TrainConfig::default() },
        ] {
            assert!(matches!(c.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = ModelConfig::default();
        let params = model.init_params(&mut rng_from_seed(2)).unwrap();
        let ck = Checkpoint {
            phase: 1,
            model,
            params,
        };
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        let other = ModelConfig {
            layers: 2,
            ..ModelConfig::default()
        };
        let bad = Checkpoint { model: other, ..ck };
        assert!(Checkpoint::from_json(&bad.to_json()).is_err());
    }
}
