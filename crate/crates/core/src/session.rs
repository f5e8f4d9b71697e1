//! Sessions, subjects and the 1 Hz interaction event stream.
//!
//! File formats:
//! - session spec: one JSON object (see [`SessionSpec`]).
//! - event log: JSONL, one `{"t", "src", "dst", "speaking"}` object per line.
//! - corpus manifest: `manifest.json` listing the spec/log files of each session.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type NodeId = u32;

/// Reserved destination meaning "gazing at no one".
pub const EMPTY_NODE: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Musician,
    Teacher,
    MusicTeacher,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilitatorType {
    None,
    Musician,
    MusicTeacher,
    Teacher,
}

impl FacilitatorType {
    pub const ALL: [FacilitatorType; 4] = [
        FacilitatorType::None,
        FacilitatorType::Teacher,
        FacilitatorType::MusicTeacher,
        FacilitatorType::Musician,
    ];

    /// Role carried by the facilitator subject, if any.
    pub fn role(self) -> Option<Role> {
        match self {
            FacilitatorType::None => None,
            FacilitatorType::Musician => Some(Role::Musician),
            FacilitatorType::MusicTeacher => Some(Role::MusicTeacher),
            FacilitatorType::Teacher => Some(Role::Teacher),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FacilitatorType::None => "none",
            FacilitatorType::Musician => "musician",
            FacilitatorType::MusicTeacher => "music_teacher",
            FacilitatorType::Teacher => "teacher",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subject {
    pub node_id: NodeId,
    pub role: Role,
    pub seat_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub session_id: String,
    pub session_type: String,
    pub facilitator_type: FacilitatorType,
    pub subjects: Vec<Subject>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubject {
    node_id: i64,
    role: Role,
    seat_index: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSessionSpec {
    session_id: String,
    session_type: String,
    facilitator_type: FacilitatorType,
    subjects: Vec<RawSubject>,
}

impl SessionSpec {
    pub fn parse(json: &str) -> Result<Self> {
        let raw: RawSessionSpec =
            serde_json::from_str(json).map_err(|e| Error::parse("session spec", e))?;
        let mut subjects = Vec::with_capacity(raw.subjects.len());
        for s in raw.subjects {
            if s.node_id == 0 {
                return Err(Error::Session("node_id 0 reserved for the empty node".into()));
            }
            let node_id = NodeId::try_from(s.node_id)
                .map_err(|_| Error::Session(format!("node_id {} out of range", s.node_id)))?;
            let seat_index = usize::try_from(s.seat_index).map_err(|_| {
                Error::Session(format!("seat_index {} must be non-negative", s.seat_index))
            })?;
            subjects.push(Subject {
                node_id,
                role: s.role,
                seat_index,
            });
        }
        let spec = SessionSpec {
            session_id: raw.session_id,
            session_type: raw.session_type,
            facilitator_type: raw.facilitator_type,
            subjects,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.session_id.is_empty() {
            return Err(Error::Session("session_id is empty".into()));
        }
        if self.subjects.len() < 2 {
            return Err(Error::Session(format!(
                "subjects: need at least 2, got {}",
                self.subjects.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for s in &self.subjects {
            if s.node_id == EMPTY_NODE {
                return Err(Error::Session("node_id 0 reserved for the empty node".into()));
            }
            if !ids.insert(s.node_id) {
                return Err(Error::Session(format!("duplicate node_id {}", s.node_id)));
            }
        }
        let n = self.subjects.len();
        let seats: BTreeSet<usize> = self.subjects.iter().map(|s| s.seat_index).collect();
        if seats.len() != n || seats.iter().any(|&s| s >= n) {
            return Err(Error::Session(format!(
                "seat_index not a permutation of 0..{n}"
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    pub fn subject(&self, id: NodeId) -> Option<&Subject> {
        self.subjects.iter().find(|s| s.node_id == id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.subject(id).is_some()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.subjects.iter().map(|s| s.node_id)
    }

    /// Dense index: 0 for the empty node, 1..=n in subject-list order.
    pub fn slot_of(&self, id: NodeId) -> Option<usize> {
        if id == EMPTY_NODE {
            return Some(0);
        }
        self.subjects.iter().position(|s| s.node_id == id).map(|p| p + 1)
    }

    /// Inverse of [`slot_of`](Self::slot_of).
    pub fn node_at(&self, slot: usize) -> NodeId {
        if slot == 0 {
            EMPTY_NODE
        } else {
            self.subjects[slot - 1].node_id
        }
    }
}

/// One subject's gaze sample at time `t`, with the speaking snapshot at `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionEvent {
    pub t: f64,
    pub src: NodeId,
    pub dst: NodeId,
    pub speaking: Vec<NodeId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    t: f64,
    src: i64,
    dst: i64,
    speaking: Vec<i64>,
}

impl InteractionEvent {
    pub fn is_empty_gaze(&self) -> bool {
        self.dst == EMPTY_NODE
    }

    pub fn is_speaking(&self, id: NodeId) -> bool {
        self.speaking.contains(&id)
    }

    fn check(&self, spec: &SessionSpec) -> std::result::Result<(), String> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(format!("t must be finite and non-negative, got {}", self.t));
        }
        if !spec.contains(self.src) {
            return Err(format!("unknown src node_id {}", self.src));
        }
        if self.dst != EMPTY_NODE && !spec.contains(self.dst) {
            return Err(format!("unknown dst node_id {}", self.dst));
        }
        if self.src == self.dst {
            return Err(format!("src == dst ({})", self.src));
        }
        if let Some(&s) = self.speaking.iter().find(|&&s| !spec.contains(s)) {
            return Err(format!("unknown speaking node_id {s}"));
        }
        Ok(())
    }
}

/// Validated, (t, src)-sorted events of one session.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    session_id: String,
    events: Vec<InteractionEvent>,
}

impl EventStream {
    /// Validate and sort. Errors carry the 1-based position in `events`.
    pub fn new(spec: &SessionSpec, events: Vec<InteractionEvent>) -> Result<Self> {
        Self::from_numbered(spec, events.into_iter().enumerate().map(|(i, e)| (i + 1, e)).collect())
    }

    fn from_numbered(spec: &SessionSpec, mut events: Vec<(usize, InteractionEvent)>) -> Result<Self> {
        for (line, e) in &mut events {
            e.check(spec).map_err(|message| Error::EventLine {
                line: *line,
                message,
            })?;
            e.speaking.sort_unstable();
            e.speaking.dedup();
        }
        events.sort_by(|(la, a), (lb, b)| {
            a.t.total_cmp(&b.t).then(a.src.cmp(&b.src)).then(la.cmp(lb))
        });
        for w in events.windows(2) {
            let ((_, a), (line, b)) = (&w[0], &w[1]);
            if b.t < a.t {
                return Err(Error::EventLine {
                    line: *line,
                    message: "decreasing timestamp".into(),
                });
            }
            if a.t == b.t && a.src == b.src {
                return Err(Error::EventLine {
                    line: *line,
                    message: format!("second event for src {} at t={}", b.src, b.t),
                });
            }
        }
        Ok(EventStream {
            session_id: spec.session_id.clone(),
            events: events.into_iter().map(|(_, e)| e).collect(),
        })
    }

    pub fn parse(jsonl: &str, spec: &SessionSpec) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in jsonl.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawEvent = serde_json::from_str(line).map_err(|e| Error::EventLine {
                line: i + 1,
                message: e.to_string(),
            })?;
            let id = |v: i64, field: &str| {
                NodeId::try_from(v).map_err(|_| Error::EventLine {
                    line: i + 1,
                    message: format!("{field} node_id {v} out of range"),
                })
            };
            let event = InteractionEvent {
                t: raw.t,
                src: id(raw.src, "src")?,
                dst: id(raw.dst, "dst")?,
                speaking: raw
                    .speaking
                    .into_iter()
                    .map(|s| id(s, "speaking"))
                    .collect::<Result<_>>()?,
            };
            events.push((i + 1, event));
        }
        Self::from_numbered(spec, events)
    }

    pub fn load(path: impl AsRef<Path>, spec: &SessionSpec) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, spec)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Index of the first held-out event: the final `fraction` of events,
    /// moved forward to a timestamp boundary so no timestamp is split.
    pub fn validation_start(&self, fraction: f64) -> usize {
        let n = self.events.len();
        let mut cut = ((n as f64) * (1.0 - fraction)).ceil() as usize;
        cut = cut.min(n);
        while cut > 0 && cut < n && self.events[cut].t == self.events[cut - 1].t {
            cut += 1;
        }
        cut
    }
}

/// A session spec together with its validated stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub spec: SessionSpec,
    pub stream: EventStream,
}

impl Session {
    pub fn new(spec: SessionSpec, events: Vec<InteractionEvent>) -> Result<Self> {
        let stream = EventStream::new(&spec, events)?;
        Ok(Session { spec, stream })
    }

    pub fn id(&self) -> &str {
        &self.spec.session_id
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub session_id: String,
    pub session_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub spec_file: String,
    pub events_file: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    pub sessions: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn parse(json: &str) -> Result<Self> {
        let m: CorpusManifest =
            serde_json::from_str(json).map_err(|e| Error::parse("corpus manifest", e))?;
        let mut seen = BTreeSet::new();
        for s in &m.sessions {
            if !seen.insert(&s.session_id) {
                return Err(Error::Session(format!(
                    "duplicate session_id {} in manifest",
                    s.session_id
                )));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// All sessions of a corpus directory, sorted by session id.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub sessions: Vec<Session>,
}

impl Corpus {
    pub fn new(mut sessions: Vec<Session>) -> Result<Self> {
        sessions.sort_by(|a, b| a.id().cmp(b.id()));
        if sessions.windows(2).any(|w| w[0].id() == w[1].id()) {
            return Err(Error::Session("duplicate session_id in corpus".into()));
        }
        Ok(Corpus { sessions })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(CorpusManifest::FILE_NAME);
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest = CorpusManifest::parse(&text)?;
        let mut sessions = Vec::with_capacity(manifest.sessions.len());
        for entry in &manifest.sessions {
            let spec = SessionSpec::load(dir.join(&entry.spec_file))?;
            if spec.session_id != entry.session_id || spec.session_type != entry.session_type {
                return Err(Error::Session(format!(
                    "manifest entry {} does not match {}",
                    entry.session_id, entry.spec_file
                )));
            }
            let events_path: PathBuf = dir.join(&entry.events_file);
            let stream = EventStream::load(&events_path, &spec).map_err(|e| match e {
                Error::EventLine { line, message } => Error::Session(format!(
                    "{}: line {line}: {message}",
                    events_path.display()
                )),
                other => other,
            })?;
            sessions.push(Session { spec, stream });
        }
        Corpus::new(sessions)
    }

    pub fn get(&self, id: &str) -> Option<&Session> {
        self.sessions.iter().find(|s| s.id() == id)
    }

    /// Sessions whose ids are listed, in id order.
    pub fn select<'a>(&'a self, ids: &[String]) -> Result<Vec<&'a Session>> {
        let mut out: Vec<&Session> = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| Error::Session(format!("unknown session {id}")))
            })
            .collect::<Result<_>>()?;
        out.sort_by(|a, b| a.id().cmp(b.id()));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub validation_fraction: f64,
}

/// Lexicographically first session of each session type goes to test, the
/// rest to train. Input pairs are `(session_id, session_type)`.
pub fn split_sessions<'a, I>(sessions: I, validation_fraction: f64) -> Result<SplitPlan>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction {validation_fraction} not in (0, 1)"
        )));
    }
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut seen = HashMap::new();
    for (id, ty) in sessions {
        if seen.insert(id, ty).is_some() {
            return Err(Error::Session(format!("duplicate session_id {id}")));
        }
        by_type.entry(ty).or_default().push(id);
    }
    if by_type.is_empty() {
        return Err(Error::Session("no sessions to split".into()));
    }
    let mut plan = SplitPlan {
        train: Vec::new(),
        test: Vec::new(),
        validation_fraction,
    };
    for (ty, mut ids) in by_type {
        if ids.len() < 2 {
            return Err(Error::Session(format!(
                "session type {ty} has a single session; need at least 2 to split"
            )));
        }
        ids.sort_unstable();
        plan.test.push(ids[0].to_string());
        plan.train.extend(ids[1..].iter().map(|s| s.to_string()));
    }
    plan.train.sort();
    plan.test.sort();
    Ok(plan)
}

impl Corpus {
    pub fn split(&self, validation_fraction: f64) -> Result<SplitPlan> {
        split_sessions(
            self.sessions
                .iter()
                .map(|s| (s.spec.session_id.as_str(), s.spec.session_type.as_str())),
            validation_fraction,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SPEC3: &str = r#"{"session_id": "S01", "session_type": "D1", "facilitator_type": "none",
        "subjects": [{"node_id": 1, "role": "student", "seat_index": 0},
                     {"node_id": 2, "role": "student", "seat_index": 1},
                     {"node_id": 3, "role": "teacher", "seat_index": 2}]}"#;

    fn spec3() -> SessionSpec {
        SessionSpec::parse(SPEC3).unwrap()
    }

    #[test]
    fn minimal_spec_parses() {
        let s = spec3();
        assert_eq!(s.n(), 3);
        assert_eq!(s.slot_of(3), Some(3));
        assert_eq!(s.slot_of(0), Some(0));
        assert_eq!(s.node_at(2), 2);
        assert_eq!(SessionSpec::parse(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn spec_errors_name_the_field() {
        let bad_seat = SPEC3.replace(r#""seat_index": 2"#, r#""seat_index": 0"#);
        let e = SessionSpec::parse(&bad_seat).unwrap_err().to_string();
        assert!(e.contains("seat_index not a permutation"), "{e}");

        let zero = SPEC3.replace(r#""node_id": 3"#, r#""node_id": 0"#);
        let e = SessionSpec::parse(&zero).unwrap_err().to_string();
        assert!(e.contains("node_id 0 reserved"), "{e}");

        let dup = SPEC3.replace(r#""node_id": 3"#, r#""node_id": 2"#);
        let e = SessionSpec::parse(&dup).unwrap_err().to_string();
        assert!(e.contains("duplicate node_id 2"), "{e}");

        let e = SessionSpec::parse("{").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));

        let extra = SPEC3.replace(r#""session_type""#, r#""bogus": 1, "session_type""#);
        assert!(matches!(SessionSpec::parse(&extra).unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn event_log_examples() {
        let spec = spec3();
        let s = EventStream::parse(
            "{\"t\": 0, \"src\": 1, \"dst\": 2, \"speaking\": [2]}\n{\"t\": 1, \"src\": 1, \"dst\": 0, \"speaking\": []}\n",
            &spec,
        )
        .unwrap();
        assert_eq!(s.len(), 2);

        let e = EventStream::parse(
            "{\"t\": 0, \"src\": 1, \"dst\": 2, \"speaking\": []}\n{\"t\": 1, \"src\": 2, \"dst\": 2, \"speaking\": []}\n",
            &spec,
        )
        .unwrap_err();
        assert!(matches!(e, Error::EventLine { line: 2, .. }), "{e}");

        let unsorted = "{\"t\": 2, \"src\": 1, \"dst\": 2, \"speaking\": []}\n\
                        {\"t\": 1, \"src\": 3, \"dst\": 2, \"speaking\": []}\n\
                        {\"t\": 1, \"src\": 2, \"dst\": 1, \"speaking\": []}\n";
        let s = EventStream::parse(unsorted, &spec).unwrap();
        let order: Vec<(f64, NodeId)> = s.events().iter().map(|e| (e.t, e.src)).collect();
        assert_eq!(order, vec![(1.0, 2), (1.0, 3), (2.0, 1)]);
    }

    #[test]
    fn event_log_rejections() {
        let spec = spec3();
        let cases = [
            r#"{"t": 0, "src": 9, "dst": 2, "speaking": []}"#,
            r#"{"t": 0, "src": 1, "dst": 9, "speaking": []}"#,
            r#"{"t": 0, "src": 1, "dst": 2, "speaking": [7]}"#,
            r#"{"t": -1, "src": 1, "dst": 2, "speaking": []}"#,
            r#"{"t": 0, "src": -1, "dst": 2, "speaking": []}"#,
            r#"{"t": 0, "src": 1, "dst": 2}"#,
            r#"{"t": 0, "src": 1, "dst": 2, "speaking": [], "x": 1}"#,
        ];
        for c in cases {
            assert!(EventStream::parse(c, &spec).is_err(), "{c}");
        }
        let dup = "{\"t\": 0, \"src\": 1, \"dst\": 2, \"speaking\": []}\n{\"t\": 0, \"src\": 1, \"dst\": 3, \"speaking\": []}";
        assert!(matches!(
            EventStream::parse(dup, &spec).unwrap_err(),
            Error::EventLine { line: 2, .. }
        ));
    }

    #[test]
    fn split_examples() {
        let plan = split_sessions(
            [("S01", "D1"), ("S02", "D1"), ("S03", "D1")],
            0.15,
        )
        .unwrap();
        assert_eq!(plan.test, vec!["S01"]);
        assert_eq!(plan.train, vec!["S02", "S03"]);

        let plan = split_sessions([("B", "X"), ("A", "X")], 0.15).unwrap();
        assert_eq!(plan.test, vec!["A"]);
        assert_eq!(plan.train, vec!["B"]);

        assert!(split_sessions([("A", "X"), ("B", "X"), ("C", "Y")], 0.15).is_err());
        assert!(split_sessions([("A", "X"), ("B", "X")], 0.0).is_err());
    }

    #[test]
    fn validation_start_respects_timestamps() {
        let spec = spec3();
        let events: Vec<InteractionEvent> = (0..10)
            .flat_map(|t| {
                (1..=3).map(move |src| InteractionEvent {
                    t: t as f64,
                    src,
                    dst: if src == 1 { 2 } else { 1 },
                    speaking: vec![],
                })
            })
            .collect();
        let s = EventStream::new(&spec, events).unwrap();
        let cut = s.validation_start(0.15);
        // ceil(30 * 0.85) = 26 lands mid-timestamp 8; pushed to 27
        assert_eq!(cut, 27);
        assert_eq!(s.events()[cut].t, 9.0);
        assert_ne!(s.events()[cut - 1].t, s.events()[cut].t);
    }

    fn arb_event() -> impl Strategy<Value = InteractionEvent> {
        (0u32..40, 0u32..5, 0u32..5, prop::collection::vec(0u32..5, 0..3)).prop_map(
            |(t, src, dst, speaking)| InteractionEvent {
                t: t as f64 * 0.5,
                src,
                dst,
                speaking,
            },
        )
    }

    proptest! {
        #[test]
        fn validated_streams_satisfy_invariants(events in prop::collection::vec(arb_event(), 0..40)) {
            let spec = spec3();
            if let Ok(stream) = EventStream::new(&spec, events) {
                for e in stream.events() {
                    prop_assert!(spec.contains(e.src));
                    prop_assert!(e.dst == EMPTY_NODE || spec.contains(e.dst));
                    prop_assert!(e.src != e.dst);
                    prop_assert!(e.speaking.iter().all(|s| spec.contains(*s)));
                }
                for w in stream.events().windows(2) {
                    prop_assert!((w[0].t, w[0].src) < (w[1].t, w[1].src));
                }
                let back = EventStream::parse(&stream.to_jsonl(), &spec).unwrap();
                prop_assert_eq!(back, stream);
            }
        }

        #[test]
        fn split_is_disjoint(n_types in 1usize..6, per_type in 2usize..5) {
            let ids: Vec<(String, String)> = (0..n_types)
                .flat_map(|t| (0..per_type).map(move |i| (format!("S{t}{i}"), format!("D{t}"))))
                .collect();
            let plan = split_sessions(ids.iter().map(|(a, b)| (a.as_str(), b.as_str())), 0.15).unwrap();
            prop_assert_eq!(plan.test.len(), n_types);
            prop_assert!(plan.test.iter().all(|t| !plan.train.contains(t)));
            prop_assert_eq!(plan.test.len() + plan.train.len(), ids.len());
        }
    }
}
