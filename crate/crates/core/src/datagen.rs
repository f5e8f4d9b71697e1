//! Seeded generator of desk-scale multiparty sessions.
//!
//! Process, per second `t = 0 .. duration_s`:
//! 1. Turn taking. At `t = 0` and at every turn boundary the next speaker is
//!    drawn with weight `facilitator_speak_bias` for the facilitator and 1 for
//!    everyone else (the current speaker may be drawn again). After `t = 0` a
//!    boundary happens each second with probability `1 / speaker_hold`.
//! 2. Gaze, in ascending node id. A listener looks at the speaker with
//!    `p_gaze_speaker`, at nobody with `p_gaze_empty`, otherwise uniformly at
//!    one of the other listeners. The speaker looks uniformly at a listener or
//!    at nobody.
//!
//! All draws come from one `Pcg64` seeded with `seed`, in the order above, so
//! equal configs produce byte-identical sessions.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{rng_from_seed, RunRng};
use crate::session::{
    CorpusManifest, EventStream, FacilitatorType, InteractionEvent, ManifestEntry, NodeId, Role,
    Session, SessionSpec, Subject, EMPTY_NODE,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub session_id: String,
    pub session_type: String,
    pub n_subjects: usize,
    pub facilitator_type: FacilitatorType,
    pub duration_s: u32,
    pub seed: u64,
    pub p_gaze_speaker: f64,
    pub p_gaze_empty: f64,
    pub speaker_hold: f64,
    pub facilitator_speak_bias: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            session_id: "S01".into(),
            session_type: "D1".into(),
            n_subjects: 4,
            facilitator_type: FacilitatorType::None,
            duration_s: 1200,
            seed: 0,
            p_gaze_speaker: 0.7,
            p_gaze_empty: 0.1,
            speaker_hold: 2.0,
            facilitator_speak_bias: 10.0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(3..=6).contains(&self.n_subjects) {
            return bad(format!("n_subjects {} not in 3..=6", self.n_subjects));
        }
        if self.duration_s < 20 {
            return bad(format!("duration_s {} < 20", self.duration_s));
        }
        for (name, p) in [
            ("p_gaze_speaker", self.p_gaze_speaker),
            ("p_gaze_empty", self.p_gaze_empty),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} not in [0, 1]"));
            }
        }
        if self.p_gaze_speaker + self.p_gaze_empty > 1.0 {
            return bad("p_gaze_speaker + p_gaze_empty > 1".into());
        }
        if !(self.speaker_hold >= 1.0) {
            return bad(format!("speaker_hold {} < 1", self.speaker_hold));
        }
        if !(self.facilitator_speak_bias >= 1.0 && self.facilitator_speak_bias.is_finite()) {
            return bad(format!(
                "facilitator_speak_bias {} < 1",
                self.facilitator_speak_bias
            ));
        }
        if self.session_id.is_empty() || self.session_type.is_empty() {
            return bad("session_id and session_type must be non-empty".into());
        }
        Ok(())
    }
}

fn build_spec(cfg: &GenConfig, rng: &mut RunRng) -> SessionSpec {
    let n = cfg.n_subjects;
    let mut seats: Vec<usize> = (0..n).collect();
    seats.shuffle(rng);
    let facilitator_role = cfg.facilitator_type.role();
    let subjects = (0..n)
        .map(|i| Subject {
            node_id: i as NodeId + 1,
            role: match facilitator_role {
                Some(r) if i == n - 1 => r,
                _ => Role::Student,
            },
            seat_index: seats[i],
        })
        .collect();
    SessionSpec {
        session_id: cfg.session_id.clone(),
        session_type: cfg.session_type.clone(),
        facilitator_type: cfg.facilitator_type,
        subjects,
    }
}

fn draw_speaker(weights: &[f64], rng: &mut RunRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

pub fn generate_session(cfg: &GenConfig) -> Result<Session> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let spec = build_spec(cfg, &mut rng);
    let n = cfg.n_subjects;
    let ids: Vec<NodeId> = spec.node_ids().collect();
    let weights: Vec<f64> = spec
        .subjects
        .iter()
        .map(|s| {
            if cfg.facilitator_type.role() == Some(s.role) {
                cfg.facilitator_speak_bias
            } else {
                1.0
            }
        })
        .collect();
    let p_switch = if cfg.speaker_hold.is_finite() {
        1.0 / cfg.speaker_hold
    } else {
        0.0
    };

    let mut events = Vec::with_capacity(n * cfg.duration_s as usize);
    let mut speaker = draw_speaker(&weights, &mut rng);
    for t in 0..cfg.duration_s {
        if t > 0 && rng.gen::<f64>() < p_switch {
            speaker = draw_speaker(&weights, &mut rng);
        }
        let speaker_id = ids[speaker];
        for (i, &src) in ids.iter().enumerate() {
            let dst = if i == speaker {
                let k = rng.gen_range(0..n);
                // k == speaker stands for the empty node
                if k == speaker {
                    EMPTY_NODE
                } else {
                    ids[k]
                }
            } else {
                let u = rng.gen::<f64>();
                if u < cfg.p_gaze_speaker {
                    speaker_id
                } else if u < cfg.p_gaze_speaker + cfg.p_gaze_empty {
                    EMPTY_NODE
                } else {
                    let others: Vec<NodeId> = ids
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i && j != speaker)
                        .map(|(_, &id)| id)
                        .collect();
                    if others.is_empty() {
                        speaker_id
                    } else {
                        others[rng.gen_range(0..others.len())]
                    }
                }
            };
            events.push(InteractionEvent {
                t: t as f64,
                src,
                dst,
                speaking: vec![speaker_id],
            });
        }
    }
    let stream = EventStream::new(&spec, events)?;
    Ok(Session { spec, stream })
}

/// Session types and group shapes of the 24-session, 8-type reference corpus.
pub fn reference_templates() -> Vec<GenConfig> {
    use FacilitatorType::*;
    [
        ("D1", 5, None),
        ("D2", 3, None),
        ("D3", 4, Musician),
        ("D4", 5, Musician),
        ("D5", 6, MusicTeacher),
        ("D6", 4, MusicTeacher),
        ("D7", 4, Teacher),
        ("D8", 6, Teacher),
    ]
    .into_iter()
    .map(|(ty, n, f)| GenConfig {
        session_type: ty.into(),
        n_subjects: n,
        facilitator_type: f,
        ..GenConfig::default()
    })
    .collect()
}

pub fn session_file_names(id: &str) -> (String, String) {
    (format!("{id}.session.json"), format!("{id}.events.jsonl"))
}

/// Sessions for `count` copies of each template. Ids are `S01`, `S02`, ...
/// (template-major); session `i` uses seed `base_seed + i`.
pub fn generate_corpus_sessions(
    templates: &[GenConfig],
    count: usize,
    base_seed: u64,
) -> Result<(CorpusManifest, Vec<Session>)> {
    let total = templates.len() * count;
    let width = total.to_string().len().max(2);
    let configs: Vec<GenConfig> = templates
        .iter()
        .flat_map(|t| std::iter::repeat(t).take(count))
        .enumerate()
        .map(|(i, t)| GenConfig {
            session_id: format!("S{:0width$}", i + 1),
            seed: base_seed.wrapping_add(i as u64),
            ..t.clone()
        })
        .collect();
    let sessions: Vec<Session> = configs
        .par_iter()
        .map(generate_session)
        .collect::<Result<_>>()?;
    let manifest = CorpusManifest {
        base_seed: Some(base_seed),
        sessions: configs
            .iter()
            .map(|c| {
                let (spec_file, events_file) = session_file_names(&c.session_id);
                ManifestEntry {
                    session_id: c.session_id.clone(),
                    session_type: c.session_type.clone(),
                    seed: Some(c.seed),
                    spec_file,
                    events_file,
                }
            })
            .collect(),
    };
    Ok((manifest, sessions))
}

pub fn write_corpus(dir: &Path, manifest: &CorpusManifest, sessions: &[Session]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (entry, s) in manifest.sessions.iter().zip(sessions) {
        let p = dir.join(&entry.spec_file);
        fs::write(&p, s.spec.to_json()).map_err(|e| Error::io(&p, e))?;
        let p = dir.join(&entry.events_file);
        fs::write(&p, s.stream.to_jsonl()).map_err(|e| Error::io(&p, e))?;
    }
    let p = dir.join(CorpusManifest::FILE_NAME);
    fs::write(&p, manifest.to_json()).map_err(|e| Error::io(&p, e))
}

pub fn generate_corpus(
    templates: &[GenConfig],
    count: usize,
    base_seed: u64,
    dir: &Path,
) -> Result<CorpusManifest> {
    let (manifest, sessions) = generate_corpus_sessions(templates, count, base_seed)?;
    write_corpus(dir, &manifest, &sessions)?;
    Ok(manifest)
}
