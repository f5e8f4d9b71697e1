use std::ops::Range;

use rand::Rng;

use super::forward::{forward_batch, memory_update_traced};
use super::state::{NeighborEntry, PendingMessage, PendingUpdate, TgnState};
use super::ModelConfig;
use crate::autograd::{sigmoid, Trace};
use crate::features::MessageSource;
use crate::negatives::sample_negatives;
use crate::session::{InteractionEvent, NodeId, Session, EMPTY_NODE};
use crate::tensor::ParamSet;
use crate::{Error, Result};

/// A session with slots resolved, edge features computed and the speaking
/// timeline indexed by distinct timestamp.
#[derive(Clone, Debug)]
pub struct PreparedSession {
    pub session_id: String,
    pub subjects: Vec<NodeId>,
    pub events: Vec<InteractionEvent>,
    /// `(src slot, dst slot)` per event.
    pub slots: Vec<(usize, usize)>,
    pub feats: Vec<Vec<f64>>,
    /// Distinct timestamps, ascending.
    pub timestamps: Vec<f64>,
    /// Index into `timestamps` per event.
    pub time_index: Vec<usize>,
    /// `speaking[i][slot]` at `timestamps[i]`; slot 0 is always false.
    pub speaking: Vec<Vec<bool>>,
}

impl PreparedSession {
    pub fn new(session: &Session, source: &MessageSource) -> Result<Self> {
        let spec = &session.spec;
        let events = session.stream.events().to_vec();
        let feats = source.features(session)?;
        let slot = |id: NodeId| {
            spec.slot_of(id)
                .ok_or_else(|| Error::Session(format!("{}: unknown node {id}", spec.session_id)))
        };
        let mut slots = Vec::with_capacity(events.len());
        let mut timestamps: Vec<f64> = Vec::new();
        let mut time_index = Vec::with_capacity(events.len());
        let mut speaking: Vec<Vec<bool>> = Vec::new();
        for e in &events {
            slots.push((slot(e.src)?, slot(e.dst)?));
            if timestamps.last() != Some(&e.t) {
                timestamps.push(e.t);
                speaking.push(vec![false; spec.n() + 1]);
            }
            time_index.push(timestamps.len() - 1);
            let row = speaking.last_mut().expect("pushed above");
            for &s in &e.speaking {
                row[slot(s)?] = true;
            }
        }
        Ok(PreparedSession {
            session_id: spec.session_id.clone(),
            subjects: spec.node_ids().collect(),
            events,
            slots,
            feats,
            timestamps,
            time_index,
            speaking,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn new_state(&self, cfg: &ModelConfig) -> TgnState {
        TgnState::new(self.n_subjects(), cfg.d_memory, cfg.neighbors)
    }

    /// Batches over `range` (see [`batch_ranges`]).
    pub fn batches(&self, range: Range<usize>, batch_events: usize) -> Vec<Range<usize>> {
        let times: Vec<f64> = self.events.iter().map(|e| e.t).collect();
        batch_ranges(&times, range, batch_events)
    }
}

/// Split `range` of a time-sorted stream into batches of whole timestamps,
/// each closed once it holds at least `batch_events` events.
pub fn batch_ranges(times: &[f64], range: Range<usize>, batch_events: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = range.start;
    let mut i = range.start;
    while i < range.end {
        let t = times[i];
        while i < range.end && times[i] == t {
            i += 1;
        }
        if i - start >= batch_events.max(1) {
            out.push(start..i);
            start = i;
        }
    }
    if start < range.end {
        out.push(start..range.end);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkQuery {
    pub src: usize,
    pub dst: usize,
    pub t: f64,
    pub label: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeakerQuery {
    pub node: usize,
    pub t: f64,
    pub label: f64,
}

/// Observed events of the batch (label 1 for subject targets, 0 for the
/// empty node) followed by one sampled negative per positive.
pub fn build_link_queries<R: Rng + ?Sized>(
    prep: &PreparedSession,
    range: Range<usize>,
    rng: &mut R,
) -> Vec<LinkQuery> {
    let batch = &prep.events[range.clone()];
    let mut out: Vec<LinkQuery> = range
        .clone()
        .map(|i| {
            let (src, dst) = prep.slots[i];
            LinkQuery {
                src,
                dst,
                t: prep.events[i].t,
                label: if dst == 0 { 0.0 } else { 1.0 },
            }
        })
        .collect();
    let sample = sample_negatives(batch, &prep.subjects, rng);
    for n in sample.negatives {
        let (src, _) = prep.slots[range.start + n.positive];
        let dst = if n.dst == EMPTY_NODE {
            0
        } else {
            1 + prep.subjects.iter().position(|&s| s == n.dst).expect("sampled from subjects")
        };
        out.push(LinkQuery {
            src,
            dst,
            t: n.t,
            label: 0.0,
        });
    }
    out
}

/// For each distinct timestamp of the batch that has a successor in the
/// session, one query per subject: will it be speaking at the next timestamp?
pub fn build_speaker_queries(prep: &PreparedSession, range: Range<usize>) -> Vec<SpeakerQuery> {
    let mut out = Vec::new();
    if range.is_empty() {
        return out;
    }
    let first = prep.time_index[range.start];
    let last = prep.time_index[range.end - 1];
    for ti in first..=last {
        let Some(next) = prep.speaking.get(ti + 1) else {
            break;
        };
        for slot in 1..=prep.n_subjects() {
            out.push(SpeakerQuery {
                node: slot,
                t: prep.timestamps[ti],
                label: if next[slot] { 1.0 } else { 0.0 },
            });
        }
    }
    out
}

fn check_batch(state: &TgnState, prep: &PreparedSession, range: &Range<usize>) -> Result<()> {
    if state.slots() != prep.n_subjects() + 1 {
        return Err(Error::Session(format!(
            "{}: state has {} slots, session needs {}",
            prep.session_id,
            state.slots(),
            prep.n_subjects() + 1
        )));
    }
    if range.end > prep.len() || range.start > range.end {
        return Err(Error::Invariant(format!(
            "batch {range:?} outside {} events",
            prep.len()
        )));
    }
    if let (Some(clock), Some(first)) = (state.clock, prep.events.get(range.start)) {
        if !range.is_empty() && first.t < clock {
            return Err(Error::Invariant(format!(
                "{}: event at t={} precedes state clock {clock}",
                prep.session_id, first.t
            )));
        }
    }
    Ok(())
}

/// Fold a batch's events into the state: settle last batch's pending
/// updates, build raw messages from positives, update memory once per touched
/// node, then extend the neighbor store.
pub fn commit_batch(
    cfg: &ModelConfig,
    params: &ParamSet,
    state: &mut TgnState,
    prep: &PreparedSession,
    range: Range<usize>,
) -> Result<()> {
    check_batch(state, prep, &range)?;
    if range.is_empty() {
        return Ok(());
    }
    let slots = state.slots();
    if cfg.memory {
        for slot in 1..slots {
            if let Some(update) = state.pending[slot].take() {
                let mut tr = Trace::new();
                let v = memory_update_traced(&mut tr, cfg, params, &update)?;
                state.memory[slot] = tr.value(v).data().to_vec();
            }
        }
    }
    let mut inbox: Vec<Vec<PendingMessage>> = vec![Vec::new(); slots];
    let mut touched_t = vec![f64::NEG_INFINITY; slots];
    for i in range.clone() {
        let (src, dst) = prep.slots[i];
        if dst == 0 {
            continue;
        }
        let t = prep.events[i].t;
        let feat = &prep.feats[i];
        for (me, other) in [(src, dst), (dst, src)] {
            if cfg.memory {
                inbox[me].push(PendingMessage {
                    t,
                    s_other: state.memory[other].clone(),
                    delta_t: t - state.last_update[me],
                    feat: feat.clone(),
                });
            }
            touched_t[me] = touched_t[me].max(t);
        }
    }
    for (slot, messages) in inbox.into_iter().enumerate() {
        if messages.is_empty() {
            continue;
        }
        let update = PendingUpdate {
            s_prev: state.memory[slot].clone(),
            messages,
        };
        let mut tr = Trace::new();
        let v = memory_update_traced(&mut tr, cfg, params, &update)?;
        state.memory[slot] = tr.value(v).data().to_vec();
        state.pending[slot] = Some(update);
    }
    for (slot, &t) in touched_t.iter().enumerate() {
        if t.is_finite() {
            state.last_update[slot] = t;
        }
    }
    for i in range.clone() {
        let (src, dst) = prep.slots[i];
        if dst == 0 {
            continue;
        }
        let t = prep.events[i].t;
        let feat = &prep.feats[i];
        state.neighbors.push(src, NeighborEntry { slot: dst, t, feat: feat.clone() });
        state.neighbors.push(dst, NeighborEntry { slot: src, t, feat: feat.clone() });
    }
    state.clock = Some(prep.events[range.end - 1].t);
    Ok(())
}

/// Queries and predicted probabilities of one batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchOutput {
    pub link_queries: Vec<LinkQuery>,
    pub link_probs: Vec<f64>,
    pub speaker_queries: Vec<SpeakerQuery>,
    pub speaker_probs: Vec<f64>,
}

/// Predict every query of the batch from the pre-batch state, then commit
/// the batch.
pub fn process_batch<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    params: &ParamSet,
    state: &mut TgnState,
    prep: &PreparedSession,
    range: Range<usize>,
    rng: &mut R,
) -> Result<BatchOutput> {
    check_batch(state, prep, &range)?;
    let link_queries = build_link_queries(prep, range.clone(), rng);
    let speaker_queries = build_speaker_queries(prep, range.clone());
    let mut tr = Trace::new();
    let fw = forward_batch(cfg, params, state, &link_queries, &speaker_queries, &mut tr)?;
    let prob = |v| sigmoid(tr.value(v).item());
    let out = BatchOutput {
        link_probs: fw.link.iter().map(|&v| prob(v)).collect(),
        speaker_probs: fw.speaker.iter().map(|&v| prob(v)).collect(),
        link_queries,
        speaker_queries,
    };
    commit_batch(cfg, params, state, prep, range)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::session::SessionSpec;
    use crate::tgn::{zero_decoder, Aggregator, EmbeddingMode};

    fn spec2() -> SessionSpec {
        SessionSpec::parse(
            r#"{"session_id":"T","session_type":"x","facilitator_type":"none",
            "subjects":[{"node_id":1,"role":"student","seat_index":0},
                        {"node_id":2,"role":"student","seat_index":1}]}"#,
        )
        .unwrap()
    }

    fn ev(t: f64, src: NodeId, dst: NodeId, speaking: &[NodeId]) -> InteractionEvent {
        InteractionEvent {
            t,
            src,
            dst,
            speaking: speaking.to_vec(),
        }
    }

    fn prep(events: Vec<InteractionEvent>) -> PreparedSession {
        let s = Session::new(spec2(), events).unwrap();
        PreparedSession::new(&s, &MessageSource::OneHot).unwrap()
    }

    #[test]
    fn batches_keep_timestamps_whole() {
        let times = [0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        assert_eq!(batch_ranges(&times, 0..7, 3), vec![0..5, 5..7]);
        assert_eq!(batch_ranges(&times, 0..7, 1), vec![0..2, 2..5, 5..6, 6..7]);
        assert_eq!(batch_ranges(&times, 2..2, 4), Vec::<Range<usize>>::new());
    }

    #[test]
    fn speaker_labels_look_one_timestamp_ahead() {
        let p = prep(vec![
            ev(0.0, 1, 2, &[1]),
            ev(0.0, 2, 1, &[1]),
            ev(1.0, 1, 2, &[2]),
            ev(1.0, 2, 0, &[2]),
        ]);
        let q = build_speaker_queries(&p, 0..4);
        assert_eq!(q.len(), 2);
        assert_eq!((q[0].node, q[0].label), (1, 0.0));
        assert_eq!((q[1].node, q[1].label), (2, 1.0));
    }

    #[test]
    fn link_queries_label_empty_targets_negative() {
        let p = prep(vec![ev(0.0, 1, 2, &[]), ev(0.0, 2, 0, &[])]);
        let q = build_link_queries(&p, 0..2, &mut rng_from_seed(0));
        assert_eq!(q[0].label, 1.0);
        assert_eq!((q[1].dst, q[1].label), (0, 0.0));
        // negative for (1,2): only the empty node is left
        assert_eq!(q.len(), 3);
        assert_eq!((q[2].src, q[2].dst, q[2].label), (1, 0, 0.0));
    }

    #[test]
    fn one_positive_updates_both_endpoints() {
        let cfg = ModelConfig::default();
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 2, &[1])]);
        let mut state = p.new_state(&cfg);
        commit_batch(&cfg, &params, &mut state, &p, 0..1).unwrap();
        assert!(state.memory(1).iter().any(|&x| x != 0.0));
        assert!(state.memory(2).iter().any(|&x| x != 0.0));
        assert!(state.memory(0).iter().all(|&x| x == 0.0));
        assert_eq!(state.neighbors().get(1)[0].slot, 2);
        assert_eq!(state.clock(), Some(0.0));
    }

    #[test]
    fn empty_batch_leaves_state_unchanged() {
        let cfg = ModelConfig::default();
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 2, &[1])]);
        let mut state = p.new_state(&cfg);
        let before = state.clone();
        commit_batch(&cfg, &params, &mut state, &p, 0..0).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn empty_gaze_touches_no_memory() {
        let cfg = ModelConfig::default();
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 0, &[])]);
        let mut state = p.new_state(&cfg);
        commit_batch(&cfg, &params, &mut state, &p, 0..1).unwrap();
        assert!(state.is_zero_memory());
    }

    #[test]
    fn out_of_order_batch_is_rejected() {
        let cfg = ModelConfig::default();
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 2, &[]), ev(1.0, 2, 1, &[])]);
        let mut state = p.new_state(&cfg);
        commit_batch(&cfg, &params, &mut state, &p, 1..2).unwrap();
        assert!(commit_batch(&cfg, &params, &mut state, &p, 0..1).is_err());
    }

    #[test]
    fn state_from_other_session_is_rejected() {
        let cfg = ModelConfig::default();
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 2, &[])]);
        let mut state = TgnState::new(4, cfg.d_memory, cfg.neighbors);
        assert!(commit_batch(&cfg, &params, &mut state, &p, 0..1).is_err());
    }

    #[test]
    fn zero_decoders_predict_half() {
        let cfg = ModelConfig::default();
        let mut params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        zero_decoder(&mut params, "link");
        zero_decoder(&mut params, "speaker");
        let p = prep(vec![ev(0.0, 1, 2, &[1]), ev(1.0, 2, 1, &[2]), ev(2.0, 1, 2, &[])]);
        let mut state = p.new_state(&cfg);
        let mut rng = rng_from_seed(0);
        for r in p.batches(0..3, 1) {
            let out = process_batch(&cfg, &params, &mut state, &p, r, &mut rng).unwrap();
            assert!(out.link_probs.iter().chain(&out.speaker_probs).all(|&x| x == 0.5));
        }
    }

    /// Mean aggregation of two messages equals the GRU fed their average.
    #[test]
    fn mean_and_last_aggregation() {
        let feat = vec![0.0; 14];
        let msg = |t: f64, v: f64| PendingMessage {
            t,
            s_other: vec![v; 32],
            delta_t: 0.0,
            feat: feat.clone(),
        };
        let update = PendingUpdate {
            s_prev: vec![0.0; 32],
            messages: vec![msg(1.0, 1.0), msg(2.0, 3.0)],
        };
        for (agg, expect) in [(Aggregator::Mean, 2.0), (Aggregator::Last, 3.0)] {
            let cfg = ModelConfig {
                aggregator: agg,
                ..ModelConfig::default()
            };
            let params = cfg.init_params(&mut rng_from_seed(5)).unwrap();
            let mut tr = Trace::new();
            let got = memory_update_traced(&mut tr, &cfg, &params, &update).unwrap();
            let single = PendingUpdate {
                s_prev: vec![0.0; 32],
                messages: vec![msg(2.0, expect)],
            };
            let want = memory_update_traced(&mut tr, &cfg, &params, &single).unwrap();
            let (g, w) = (tr.value(got).data(), tr.value(want).data());
            for (a, b) in g.iter().zip(w) {
                assert!((a - b).abs() < 1e-12, "{agg:?}");
            }
        }
    }

    #[test]
    fn no_memory_variant_keeps_zero_memory() {
        let cfg = ModelConfig {
            memory: false,
            embedding: EmbeddingMode::Attn,
            ..ModelConfig::default()
        };
        let params = cfg.init_params(&mut rng_from_seed(3)).unwrap();
        let p = prep(vec![ev(0.0, 1, 2, &[1]), ev(1.0, 2, 1, &[])]);
        let mut state = p.new_state(&cfg);
        let mut rng = rng_from_seed(0);
        for r in p.batches(0..2, 1) {
            process_batch(&cfg, &params, &mut state, &p, r, &mut rng).unwrap();
        }
        assert!(state.is_zero_memory());
        assert_eq!(state.neighbors().get(2).len(), 2);
    }
}
