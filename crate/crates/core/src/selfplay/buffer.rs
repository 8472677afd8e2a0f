//! FIFO replay buffer with uniform batch sampling.

use super::ReplayEntry;
use crate::neural::{TrainBatch, TrainRow};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Ring of the most recent replay entries; eviction is strictly
/// oldest-first.
pub struct ReplayBuffer {
    entries: VecDeque<ReplayEntry>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0);
        ReplayBuffer { entries: VecDeque::with_capacity(capacity.min(1 << 20)), capacity }
    }

    pub fn push(&mut self, entry: ReplayEntry) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplayEntry> {
        self.entries.iter()
    }

    /// Uniform sample of `batch_size` distinct entries (all of them when
    /// the buffer is smaller than the batch).
    pub fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> TrainBatch {
        let take = batch_size.min(self.entries.len());
        let picks = rand::seq::index::sample(rng, self.entries.len(), take);
        let rows = picks
            .into_iter()
            .map(|i| {
                let e = &self.entries[i];
                TrainRow {
                    encoding: e.encoding.planes.clone(),
                    mask: e.mask.clone(),
                    pi: e.pi_target.clone(),
                    z: e.z_target,
                }
            })
            .collect();
        TrainBatch { rows }
    }
}
