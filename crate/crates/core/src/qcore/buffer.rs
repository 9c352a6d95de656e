//! Experience replay extended with behavior-time action values.

use super::Transition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BufferError {
    #[error("buffer not ready: holds {have} transitions, sampling needs {need}")]
    NotReady { have: usize, need: usize },
}

/// Bounded FIFO ring of transitions with a seeded generator for minibatch
/// sampling. The oldest entry is evicted first once capacity is reached.
#[derive(Debug, Clone)]
pub struct HindsightBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
    rng_seed: u64,
    rng: ChaCha8Rng,
}

impl HindsightBuffer {
    pub fn new(capacity: usize, rng_seed: u64) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
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

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(t);
    }

    /// `n` transitions drawn uniformly with replacement from the buffer's
    /// seeded generator. Errors while fewer than `n` transitions are stored.
    pub fn sample(&mut self, n: usize) -> Result<Vec<Transition>, BufferError> {
        if self.entries.len() < n {
            return Err(BufferError::NotReady { have: self.entries.len(), need: n });
        }
        let len = self.entries.len();
        Ok((0..n).map(|_| self.entries[self.rng.gen_range(0..len)].clone()).collect())
    }

    /// Rewinds the sampling generator to its seeded initial state.
    pub fn reset_generator(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }
}

/// Appends `t` as the newest entry, evicting the oldest at capacity.
pub fn buffer_push(buffer: &mut HindsightBuffer, t: Transition) {
    buffer.push(t);
}

/// Draws `n` transitions uniformly with replacement.
pub fn buffer_sample(
    buffer: &mut HindsightBuffer,
    n: usize,
) -> Result<Vec<Transition>, BufferError> {
    buffer.sample(n)
}
