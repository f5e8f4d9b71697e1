//! History model: predicts that the last observed gaze target and speaking
//! status persist. Not learned.

use crate::{Error, Result};

/// Last observation per slot (slot 0 is the empty node and never a source).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryState {
    last_gaze: Vec<Option<usize>>,
    last_speaking: Vec<Option<bool>>,
    clock: Option<f64>,
}

impl HistoryState {
    pub fn new(n_subjects: usize) -> Self {
        HistoryState {
            last_gaze: vec![None; n_subjects + 1],
            last_speaking: vec![None; n_subjects + 1],
            clock: None,
        }
    }

    /// Record `src → dst` and the speaking flags of every subject at `t`.
    /// `speaking[slot]` must cover all slots.
    pub fn update(&mut self, t: f64, src: usize, dst: usize, speaking: &[bool]) -> Result<()> {
        if let Some(clock) = self.clock {
            if t < clock {
                return Err(Error::Invariant(format!(
                    "history update at t={t} after t={clock}"
                )));
            }
        }
        if src == 0 || src >= self.last_gaze.len() || dst >= self.last_gaze.len() {
            return Err(Error::Invariant(format!("history update {src}->{dst} out of range")));
        }
        if speaking.len() != self.last_speaking.len() {
            return Err(Error::Invariant("speaking flags do not cover all subjects".into()));
        }
        self.clock = Some(t);
        self.last_gaze[src] = Some(dst);
        for (slot, &s) in speaking.iter().enumerate().skip(1) {
            self.last_speaking[slot] = Some(s);
        }
        Ok(())
    }

    pub fn last_gaze(&self, src: usize) -> Option<usize> {
        self.last_gaze.get(src).copied().flatten()
    }

    pub fn last_speaking(&self, slot: usize) -> Option<bool> {
        self.last_speaking.get(slot).copied().flatten()
    }

    /// Positive iff `dst` is the last gaze target seen for `src`. The empty
    /// node (slot 0) is never a positive target.
    pub fn predict_gaze(&self, src: usize, dst: usize) -> bool {
        dst != 0 && self.last_gaze(src) == Some(dst)
    }

    /// Unseen subjects are predicted silent.
    pub fn predict_speaker(&self, slot: usize) -> bool {
        self.last_speaking(slot).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(n: usize, on: &[usize]) -> Vec<bool> {
        (0..=n).map(|s| on.contains(&s)).collect()
    }

    #[test]
    fn gaze_persistence() {
        let mut h = HistoryState::new(3);
        assert!(!h.predict_gaze(1, 2));
        h.update(0.0, 1, 2, &flags(3, &[])).unwrap();
        assert!(h.predict_gaze(1, 2));
        assert!(!h.predict_gaze(1, 3));
        assert!(!h.predict_gaze(2, 1));
        h.update(1.0, 1, 3, &flags(3, &[])).unwrap();
        assert_eq!(h.last_gaze(1), Some(3));
    }

    #[test]
    fn speaking_persistence() {
        let mut h = HistoryState::new(3);
        assert!(!h.predict_speaker(3));
        h.update(0.0, 1, 2, &flags(3, &[3])).unwrap();
        assert!(h.predict_speaker(3));
        assert!(!h.predict_speaker(1));
        assert_eq!(h.last_speaking(2), Some(false));
    }

    #[test]
    fn out_of_order_is_rejected() {
        let mut h = HistoryState::new(2);
        h.update(2.0, 1, 2, &flags(2, &[])).unwrap();
        assert!(h.update(1.0, 2, 1, &flags(2, &[])).is_err());
    }

    #[test]
    fn constant_gaze_is_always_right_after_first_sight() {
        let mut h = HistoryState::new(2);
        let mut correct = 0;
        for t in 0..20 {
            if t > 0 {
                correct += h.predict_gaze(1, 2) as usize;
            }
            h.update(t as f64, 1, 2, &flags(2, &[])).unwrap();
        }
        assert_eq!(correct, 19);
    }

    #[test]
    fn empty_target_is_never_predicted() {
        let mut h = HistoryState::new(2);
        h.update(0.0, 1, 0, &flags(2, &[])).unwrap();
        assert_eq!(h.last_gaze(1), Some(0));
        assert!(!h.predict_gaze(1, 0));
        assert!(!h.predict_gaze(1, 2));
    }
}
