use std::collections::VecDeque;

/// A stored gaze interaction touching a node.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborEntry {
    /// Slot of the other endpoint.
    pub slot: usize,
    pub t: f64,
    pub feat: Vec<f64>,
}

/// Per-node capped list of the most recent interactions, newest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborStore {
    cap: usize,
    lists: Vec<VecDeque<NeighborEntry>>,
}

impl NeighborStore {
    pub fn new(slots: usize, cap: usize) -> Self {
        NeighborStore {
            cap,
            lists: vec![VecDeque::new(); slots],
        }
    }

    pub fn get(&self, slot: usize) -> &VecDeque<NeighborEntry> {
        &self.lists[slot]
    }

    pub fn push(&mut self, slot: usize, entry: NeighborEntry) {
        let list = &mut self.lists[slot];
        list.push_front(entry);
        list.truncate(self.cap);
    }

    pub fn cap(&self) -> usize {
        self.cap
    }
}

/// Raw message for one receiving node, kept from the batch that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingMessage {
    pub t: f64,
    /// Memory of the other endpoint when the message was built.
    pub s_other: Vec<f64>,
    /// `t − last_update(receiver)` at build time.
    pub delta_t: f64,
    pub feat: Vec<f64>,
}

/// Last batch's memory update of one node: the memory it started from and
/// the messages it aggregated. Replayed on the next trace for gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingUpdate {
    pub s_prev: Vec<f64>,
    pub messages: Vec<PendingMessage>,
}

/// Memory, neighbor store and clock of one session replay.
///
/// Slot 0 is the empty node; its memory is the zero vector and it never
/// receives messages or neighbors.
#[derive(Clone, Debug, PartialEq)]
pub struct TgnState {
    pub(crate) memory: Vec<Vec<f64>>,
    pub(crate) last_update: Vec<f64>,
    pub(crate) neighbors: NeighborStore,
    pub(crate) pending: Vec<Option<PendingUpdate>>,
    pub(crate) clock: Option<f64>,
}

impl TgnState {
    /// Fresh state for `n_subjects` plus the empty node: zero memory,
    /// `last_update = 0`.
    pub fn new(n_subjects: usize, d_memory: usize, neighbor_cap: usize) -> Self {
        let slots = n_subjects + 1;
        TgnState {
            memory: vec![vec![0.0; d_memory]; slots],
            last_update: vec![0.0; slots],
            neighbors: NeighborStore::new(slots, neighbor_cap),
            pending: vec![None; slots],
            clock: None,
        }
    }

    pub fn slots(&self) -> usize {
        self.memory.len()
    }

    pub fn memory(&self, slot: usize) -> &[f64] {
        &self.memory[slot]
    }

    pub fn last_update(&self, slot: usize) -> f64 {
        self.last_update[slot]
    }

    pub fn neighbors(&self) -> &NeighborStore {
        &self.neighbors
    }

    pub fn pending(&self, slot: usize) -> Option<&PendingUpdate> {
        self.pending[slot].as_ref()
    }

    /// Timestamp of the latest event folded into the state.
    pub fn clock(&self) -> Option<f64> {
        self.clock
    }

    pub fn is_zero_memory(&self) -> bool {
        self.memory.iter().all(|m| m.iter().all(|&x| x == 0.0))
    }
}
