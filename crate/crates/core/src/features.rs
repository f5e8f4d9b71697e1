//! Edge features: the 14-element one-hot message and the cosine time encoding.
//!
//! Layout of a [`MessageVector`]:
//!
//! | index  | meaning                                            |
//! |--------|----------------------------------------------------|
//! | 0..3   | speaking: gazing subject, gazed subject, any other |
//! | 3..6   | seat of gazed relative to gazing: opposite, nearby, away |
//! | 6..10  | role of gazing subject                             |
//! | 10..14 | role of gazed subject                              |
//!
//! Roles are one-hot in the order student, musician, teacher, music teacher;
//! `unknown` and the empty node encode as all zeros.

use crate::autograd::{Trace, Var};
use crate::session::{InteractionEvent, NodeId, Role, Session, SessionSpec, EMPTY_NODE};
use crate::{Error, Result};

pub const MESSAGE_DIM: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeatRelation {
    Opposite,
    Nearby,
    Away,
}

impl SeatRelation {
    fn one_hot(self) -> [f64; 3] {
        match self {
            SeatRelation::Opposite => [1.0, 0.0, 0.0],
            SeatRelation::Nearby => [0.0, 1.0, 0.0],
            SeatRelation::Away => [0.0, 0.0, 1.0],
        }
    }
}

/// Ring distance d = min(|a−b|, n−|a−b|): nearby iff d = 1, opposite iff n is
/// even and d = n/2, away otherwise.
pub fn seat_relation(spec: &SessionSpec, src: NodeId, dst: NodeId) -> Result<SeatRelation> {
    let seat = |id: NodeId| {
        spec.subject(id)
            .map(|s| s.seat_index)
            .ok_or_else(|| Error::Session(format!("unknown subject {id}")))
    };
    let (a, b) = (seat(src)?, seat(dst)?);
    if src == dst {
        return Err(Error::Session(format!("seat relation of {src} with itself")));
    }
    let n = spec.n();
    let diff = a.abs_diff(b);
    let d = diff.min(n - diff);
    Ok(if d == 1 {
        SeatRelation::Nearby
    } else if n % 2 == 0 && d == n / 2 {
        SeatRelation::Opposite
    } else {
        SeatRelation::Away
    })
}

/// `[src speaking, dst speaking, some other subject speaking]`.
pub fn encode_speaking(
    src: NodeId,
    dst: NodeId,
    speaking: &[NodeId],
    subjects: impl IntoIterator<Item = NodeId>,
) -> [f64; 3] {
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    let dst_speaking = dst != EMPTY_NODE && speaking.contains(&dst);
    let others = subjects
        .into_iter()
        .filter(|&s| s != src && s != dst)
        .any(|s| speaking.contains(&s));
    [bit(speaking.contains(&src)), bit(dst_speaking), bit(others)]
}

fn role_one_hot(role: Option<Role>) -> [f64; 4] {
    let idx = match role {
        Some(Role::Student) => 0,
        Some(Role::Musician) => 1,
        Some(Role::Teacher) => 2,
        Some(Role::MusicTeacher) => 3,
        Some(Role::Unknown) | None => return [0.0; 4],
    };
    let mut out = [0.0; 4];
    out[idx] = 1.0;
    out
}

/// Roles of gazing and gazed subject; `None` stands for the empty node.
pub fn encode_roles(role_src: Role, role_dst: Option<Role>) -> [f64; 8] {
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&role_one_hot(Some(role_src)));
    out[4..].copy_from_slice(&role_one_hot(role_dst));
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MessageVector(pub [f64; MESSAGE_DIM]);

impl MessageVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn encode_message(event: &InteractionEvent, spec: &SessionSpec) -> Result<MessageVector> {
    let src = spec
        .subject(event.src)
        .ok_or_else(|| Error::Session(format!("unknown subject {}", event.src)))?;
    let speaking = encode_speaking(event.src, event.dst, &event.speaking, spec.node_ids());
    let (seat, dst_role) = if event.dst == EMPTY_NODE {
        (SeatRelation::Away, None)
    } else {
        let dst = spec
            .subject(event.dst)
            .ok_or_else(|| Error::Session(format!("unknown subject {}", event.dst)))?;
        (seat_relation(spec, event.src, event.dst)?, Some(dst.role))
    };
    let mut out = [0.0; MESSAGE_DIM];
    out[0..3].copy_from_slice(&speaking);
    out[3..6].copy_from_slice(&seat.one_hot());
    out[6..14].copy_from_slice(&encode_roles(src.role, dst_role));
    Ok(MessageVector(out))
}

/// Per-event edge features of a session.
#[derive(Clone, Debug, Default)]
pub enum MessageSource {
    #[default]
    OneHot,
    /// Externally computed vectors, one per event in stream order.
    External(Vec<Vec<f64>>),
}

impl MessageSource {
    pub fn features(&self, session: &Session) -> Result<Vec<Vec<f64>>> {
        match self {
            MessageSource::OneHot => session
                .stream
                .events()
                .iter()
                .map(|e| encode_message(e, &session.spec).map(|m| m.0.to_vec()))
                .collect(),
            MessageSource::External(rows) => {
                if rows.len() != session.stream.len() {
                    return Err(Error::Session(format!(
                        "{}: {} message rows for {} events",
                        session.id(),
                        rows.len(),
                        session.stream.len()
                    )));
                }
                Ok(rows.clone())
            }
        }
    }
}

/// Parse header-less CSV of equal-width finite float rows.
pub fn parse_message_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::EventLine {
                        line: i + 1,
                        message: format!("bad message value {c:?}"),
                    })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::EventLine {
                    line: i + 1,
                    message: format!("width {} differs from {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One CSV row per event, in stream order; readable by [`parse_message_rows`].
pub fn dump_messages(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeEncoderParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl TimeEncoderParams {
    /// Geometrically spaced frequencies 10^(−9k/(d−1)), zero phase.
    pub fn geometric(d: usize) -> Self {
        let w = (0..d)
            .map(|k| {
                if d == 1 {
                    1.0
                } else {
                    10f64.powf(-9.0 * k as f64 / (d - 1) as f64)
                }
            })
            .collect();
        TimeEncoderParams { w, b: vec![0.0; d] }
    }
}

/// cos(Δt·w_k + b_k) for each k.
pub fn time_encode(delta_t: f64, params: &TimeEncoderParams) -> Result<Vec<f64>> {
    if !(delta_t >= 0.0) {
        return Err(Error::Invariant(format!("negative time delta {delta_t}")));
    }
    Ok(params
        .w
        .iter()
        .zip(&params.b)
        .map(|(w, b)| (delta_t * w + b).cos())
        .collect())
}

/// Differentiable form of [`time_encode`] over trace parameters `w`, `b` (1×d).
pub fn time_encode_traced(tr: &mut Trace, w: Var, b: Var, delta_t: f64) -> Result<Var> {
    if !(delta_t >= 0.0) {
        return Err(Error::Invariant(format!("negative time delta {delta_t}")));
    }
    let scaled = tr.scale(w, delta_t);
    let shifted = tr.add(scaled, b)?;
    Ok(tr.cos(shifted))
}
