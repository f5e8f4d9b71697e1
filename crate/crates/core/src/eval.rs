//! Metrics, the model-vs-history evaluation protocol, and report types.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::HistoryState;
use crate::rng::{derive_rng, derive_seed};
use crate::tensor::ParamSet;
use crate::tgn::{
    build_link_queries, build_speaker_queries, commit_batch, process_batch, LinkQuery,
    ModelConfig, PreparedSession, SpeakerQuery,
};
use crate::{Error, Result};

/// Environment variable capping evaluation threads.
pub const THREADS_ENV: &str = "TGN_SOCIAL_THREADS";

/// Probabilities strictly above this are positive predictions.
pub const THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (p, a) in pairs {
            c.record(p, a);
        }
        c
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// F1 of the positive class; 0 when there are no positives at all.
pub fn f1(c: &Confusion) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

pub fn accuracy(c: &Confusion) -> Result<f64> {
    match c.total() {
        0 => Err(Error::Invariant("accuracy of an empty confusion".into())),
        n => Ok((c.tp + c.tn) as f64 / n as f64),
    }
}

/// F1, accuracy (0 for an empty query set) and the underlying counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl From<Confusion> for TaskMetrics {
    fn from(c: Confusion) -> Self {
        TaskMetrics {
            f1: f1(&c),
            accuracy: accuracy(&c).unwrap_or(0.0),
            confusion: c,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model: TaskMetrics,
    pub baseline: TaskMetrics,
    /// `model − baseline`.
    pub delta: Delta,
}

impl Comparison {
    pub fn new(model: Confusion, baseline: Confusion) -> Self {
        let (model, baseline) = (TaskMetrics::from(model), TaskMetrics::from(baseline));
        Comparison {
            model,
            baseline,
            delta: Delta {
                f1: model.f1 - baseline.f1,
                accuracy: model.accuracy - baseline.accuracy,
            },
        }
    }
}

/// Raw counts of one replayed session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionCounts {
    pub session_id: String,
    pub link: Confusion,
    pub speaker: Confusion,
    /// Hash of the link and speaker query lists, in order.
    pub query_hash: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub next_gaze: Comparison,
    pub next_speaker: Comparison,
}

/// Contents of `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub next_gaze: Comparison,
    pub next_speaker: Comparison,
    /// How next-speaker labels are aligned.
    pub speaker_horizon: String,
    /// Whether empty-target rows are part of the gaze query set.
    pub gaze_queries_include_empty_targets: bool,
    pub sessions: Vec<SessionReport>,
}

pub const SPEAKER_HORIZON: &str = "speaking status at the next sampled timestamp (+1 s)";

/// How a session is replayed for evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    /// Batch size in seconds; a batch holds `batch_window × n` events.
    pub batch_window: usize,
    /// Root seed of the negative sampler.
    pub seed: u64,
}

fn hash_queries(h: &mut DefaultHasher, link: &[LinkQuery], speaker: &[SpeakerQuery]) {
    for q in link {
        (q.src, q.dst, q.t.to_bits(), q.label.to_bits()).hash(h);
    }
    for q in speaker {
        (q.node, q.t.to_bits(), q.label.to_bits()).hash(h);
    }
}

fn session_rng(opts: &EvalOptions, prep: &PreparedSession) -> crate::rng::RunRng {
    let index = derive_seed(0, &prep.session_id, 0);
    derive_rng(opts.seed, "eval-negatives", index)
}

fn batch_events(prep: &PreparedSession, opts: &EvalOptions) -> usize {
    opts.batch_window.max(1) * prep.n_subjects()
}

/// Replay a session through the model. Events before `predict_from` only
/// update the state; later batches are predicted, then committed.
pub fn replay_model(
    cfg: &ModelConfig,
    params: &ParamSet,
    prep: &PreparedSession,
    predict_from: usize,
    opts: &EvalOptions,
) -> Result<SessionCounts> {
    let size = batch_events(prep, opts);
    let mut state = prep.new_state(cfg);
    for r in prep.batches(0..predict_from, size) {
        commit_batch(cfg, params, &mut state, prep, r)?;
    }
    let mut rng = session_rng(opts, prep);
    let mut out = SessionCounts {
        session_id: prep.session_id.clone(),
        ..SessionCounts::default()
    };
    let mut h = DefaultHasher::new();
    for r in prep.batches(predict_from..prep.len(), size) {
        let b = process_batch(cfg, params, &mut state, prep, r, &mut rng)?;
        hash_queries(&mut h, &b.link_queries, &b.speaker_queries);
        for (q, p) in b.link_queries.iter().zip(&b.link_probs) {
            out.link.record(*p > THRESHOLD, q.label == 1.0);
        }
        for (q, p) in b.speaker_queries.iter().zip(&b.speaker_probs) {
            out.speaker.record(*p > THRESHOLD, q.label == 1.0);
        }
    }
    out.query_hash = h.finish();
    Ok(out)
}

fn observe(history: &mut HistoryState, prep: &PreparedSession, r: Range<usize>) -> Result<()> {
    for i in r {
        let (src, dst) = prep.slots[i];
        let speaking = &prep.speaking[prep.time_index[i]];
        history.update(prep.events[i].t, src, dst, speaking)?;
    }
    Ok(())
}

/// Replay a session through the history model with the same batches and
/// the same sampled queries as [`replay_model`].
pub fn replay_history(
    prep: &PreparedSession,
    predict_from: usize,
    opts: &EvalOptions,
) -> Result<SessionCounts> {
    let size = batch_events(prep, opts);
    let mut history = HistoryState::new(prep.n_subjects());
    observe(&mut history, prep, 0..predict_from)?;
    let mut rng = session_rng(opts, prep);
    let mut out = SessionCounts {
        session_id: prep.session_id.clone(),
        ..SessionCounts::default()
    };
    let mut h = DefaultHasher::new();
    for r in prep.batches(predict_from..prep.len(), size) {
        let link = build_link_queries(prep, r.clone(), &mut rng);
        let speaker = build_speaker_queries(prep, r.clone());
        hash_queries(&mut h, &link, &speaker);
        for q in &link {
            out.link.record(history.predict_gaze(q.src, q.dst), q.label == 1.0);
        }
        for q in &speaker {
            out.speaker.record(history.predict_speaker(q.node), q.label == 1.0);
        }
        observe(&mut history, prep, r)?;
    }
    out.query_hash = h.finish();
    Ok(out)
}

/// Thread pool sized by [`THREADS_ENV`] when set, else rayon's default.
pub fn eval_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))
}

/// Model counts per session, sessions evaluated in parallel. Each entry
/// of `sessions` is `(session, predict_from)`.
pub fn evaluate_model(
    cfg: &ModelConfig,
    params: &ParamSet,
    sessions: &[(&PreparedSession, usize)],
    opts: &EvalOptions,
) -> Result<Vec<SessionCounts>> {
    eval_pool()?.install(|| {
        sessions
            .par_iter()
            .map(|(p, from)| replay_model(cfg, params, p, *from, opts))
            .collect()
    })
}

pub fn total(counts: &[SessionCounts]) -> (Confusion, Confusion) {
    let (mut link, mut speaker) = (Confusion::default(), Confusion::default());
    for c in counts {
        link.merge(&c.link);
        speaker.merge(&c.speaker);
    }
    (link, speaker)
}

/// Both tasks, model against history, on whole test sessions.
pub fn evaluate(
    cfg: &ModelConfig,
    params: &ParamSet,
    sessions: &[PreparedSession],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let pairs: Vec<(&PreparedSession, usize)> = sessions.iter().map(|p| (p, 0)).collect();
    let model = evaluate_model(cfg, params, &pairs, opts)?;
    let history: Vec<SessionCounts> = eval_pool()?.install(|| {
        sessions
            .par_iter()
            .map(|p| replay_history(p, 0, opts))
            .collect::<Result<_>>()
    })?;
    let mut reports = Vec::with_capacity(sessions.len());
    for (m, b) in model.iter().zip(&history) {
        if m.query_hash != b.query_hash {
            return Err(Error::Invariant(format!(
                "{}: model and baseline query sets differ",
                m.session_id
            )));
        }
        reports.push(SessionReport {
            session_id: m.session_id.clone(),
            next_gaze: Comparison::new(m.link, b.link),
            next_speaker: Comparison::new(m.speaker, b.speaker),
        });
    }
    let (ml, ms) = total(&model);
    let (bl, bs) = total(&history);
    Ok(EvalReport {
        next_gaze: Comparison::new(ml, bl),
        next_speaker: Comparison::new(ms, bs),
        speaker_horizon: SPEAKER_HORIZON.to_string(),
        gaze_queries_include_empty_targets: true,
        sessions: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_examples() {
        let c = Confusion { tp: 2, fp: 1, fn_: 1, tn: 0 };
        assert!((f1(&c) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1(&Confusion { tp: 5, tn: 3, ..Default::default() }), 1.0);
        assert_eq!(f1(&Confusion::default()), 0.0);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&Confusion { tp: 3, tn: 1, ..Default::default() }).unwrap(), 1.0);
        assert_eq!(accuracy(&Confusion { fp: 3, fn_: 1, ..Default::default() }).unwrap(), 0.0);
        let c = Confusion { tp: 1, fp: 1, fn_: 1, tn: 1 };
        assert_eq!(accuracy(&c).unwrap(), 0.5);
        assert!(accuracy(&Confusion::default()).is_err());
    }

    #[test]
    fn confusion_serializes_fn_key() {
        let v = serde_json::to_value(Confusion { fn_: 2, ..Default::default() }).unwrap();
        assert_eq!(v["fn"], 2);
    }

    #[test]
    fn comparison_delta_is_exact_difference() {
        let m = Confusion { tp: 3, fp: 1, fn_: 2, tn: 7 };
        let b = Confusion { tp: 1, fp: 4, fn_: 4, tn: 4 };
        let c = Comparison::new(m, b);
        assert_eq!(c.delta.f1, f1(&m) - f1(&b));
        assert_eq!(c.delta.accuracy, c.model.accuracy - c.baseline.accuracy);
    }
}
