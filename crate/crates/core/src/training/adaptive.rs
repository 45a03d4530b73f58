use std::collections::{BTreeSet, VecDeque};

/// Losses kept per step index for the gating mean.
pub const HISTORY_LEN: usize = 5;
/// Default count of low-noise steps that may receive the traversability loss.
pub const DEFAULT_GATED_STEPS: usize = 10;

/// Step-gating state for the traversability loss.
///
/// Step indices are 0-based (`t` in `0..N`, diffusion step `t + 1`). After
/// recording the diffusion loss for `t`, index `t - 1` joins the buffer when
/// training is past the first epoch, `t - 1 < gated_steps`, and the mean of
/// the last [`HISTORY_LEN`] losses recorded at `t - 1` is below the threshold.
/// A sample is gated when its own `t` is in the buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveState {
    buffer: BTreeSet<usize>,
    history: Vec<VecDeque<f64>>,
    threshold: f64,
    gated_steps: usize,
}

impl AdaptiveState {
    pub fn new(steps: usize, threshold: f64, gated_steps: usize) -> Self {
        Self {
            buffer: BTreeSet::new(),
            history: vec![VecDeque::with_capacity(HISTORY_LEN); steps],
            threshold,
            gated_steps,
        }
    }

    pub fn buffer(&self) -> &BTreeSet<usize> {
        &self.buffer
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set_threshold(&mut self, h: f64) {
        self.threshold = h;
    }

    pub fn gated_steps(&self) -> usize {
        self.gated_steps
    }

    /// Mean of the recorded losses at `t`, once its ring is full.
    pub fn history_mean(&self, t: usize) -> Option<f64> {
        let h = self.history.get(t)?;
        (h.len() == HISTORY_LEN).then(|| h.iter().sum::<f64>() / HISTORY_LEN as f64)
    }

    pub fn history(&self, t: usize) -> &VecDeque<f64> {
        &self.history[t]
    }

    /// Record `loss` at step index `t` during `epoch` and return whether the
    /// traversability term applies to this sample.
    pub fn update(&mut self, epoch: usize, t: usize, loss: f64) -> bool {
        let ring = &mut self.history[t];
        if ring.len() == HISTORY_LEN {
            ring.pop_front();
        }
        ring.push_back(loss);
        if epoch >= 1 && t >= 1 && t - 1 < self.gated_steps {
            if let Some(mean) = self.history_mean(t - 1) {
                if mean < self.threshold {
                    self.buffer.insert(t - 1);
                }
            }
        }
        !self.buffer.is_empty() && self.buffer.contains(&t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_threshold_never_gates() {
        let mut s = AdaptiveState::new(32, 0.0, 10);
        for epoch in 0..4 {
            for t in 0..32 {
                for _ in 0..6 {
                    assert!(!s.update(epoch, t, 1e-9));
                }
            }
        }
        assert!(s.buffer().is_empty());
    }

    #[test]
    fn infinite_threshold_fills_the_low_steps() {
        let mut s = AdaptiveState::new(32, f64::INFINITY, 10);
        for t in 0..32 {
            for _ in 0..5 {
                s.update(0, t, 1.0);
            }
        }
        assert!(s.buffer().is_empty(), "nothing joins during epoch 0");
        for t in 1..=10 {
            s.update(1, t, 1.0);
        }
        assert_eq!(
            s.buffer().iter().copied().collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
        assert!(s.update(1, 9, 1.0));
        assert!(!s.update(1, 10, 1.0));
    }

    #[test]
    fn partial_rings_do_not_count() {
        let mut s = AdaptiveState::new(8, f64::INFINITY, 10);
        for _ in 0..4 {
            s.update(1, 2, 0.1);
        }
        s.update(1, 3, 0.1);
        assert!(s.buffer().is_empty());
        s.update(1, 2, 0.1);
        s.update(1, 3, 0.1);
        assert!(s.buffer().contains(&2));
    }

    proptest! {
        #[test]
        fn buffer_only_grows_and_stays_in_range(
            events in prop::collection::vec((0usize..3, 0usize..16, 0.0f64..2.0), 0..400),
            h in 0.0f64..2.0,
        ) {
            let mut s = AdaptiveState::new(16, h, 10);
            let mut prev = s.buffer().clone();
            let mut epoch = 0;
            for (de, t, l) in events {
                epoch += de / 2;
                let gate = s.update(epoch, t, l);
                prop_assert!(s.buffer().is_superset(&prev));
                prop_assert!(s.buffer().iter().all(|&b| b < 10));
                prop_assert_eq!(gate, s.buffer().contains(&t));
                prop_assert!((0..16).all(|k| s.history(k).len() <= HISTORY_LEN));
                prev = s.buffer().clone();
            }
        }
    }
}
