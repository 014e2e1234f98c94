//! Fixed-capacity ring replay buffer.

use rand::Rng;

use super::RlError;

/// One stored interaction. Actions are kept in both raw (pre-squash) and
/// bounded form; the critic consumes the normalized tanh of the raw values.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action_raw: Vec<f64>,
    pub action_bounded: Vec<f64>,
    pub reward: f64,
    pub next_observation: Option<Vec<f64>>,
}

impl Transition {
    pub fn is_terminal(&self) -> bool {
        self.next_observation.is_none()
    }

    /// Normalized action in [-1, 1] per dimension: tanh of the raw values.
    pub fn action_normalized(&self) -> Vec<f64> {
        self.action_raw.iter().map(|r| r.tanh()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    pushed: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: Vec::with_capacity(capacity.min(4096)), next: 0, pushed: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total pushes ever, used by eviction tests.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    pub fn push(&mut self, t: Transition) {
        self.pushed += 1;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(
        &'a self,
        batch: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<&'a Transition>, RlError> {
        if self.items.len() < batch {
            return Err(RlError::InsufficientReplay { have: self.items.len(), need: batch });
        }
        Ok((0..batch).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(tag: f64) -> Transition {
        Transition {
            observation: vec![tag],
            action_raw: vec![0.0],
            action_bounded: vec![0.0],
            reward: tag,
            next_observation: None,
        }
    }

    #[test]
    fn ring_evicts_oldest() {
        let capacity = 8;
        let extra = 5;
        let mut buf = ReplayBuffer::new(capacity);
        for i in 0..capacity + extra {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.len(), capacity);
        let rewards: Vec<f64> = (0..buf.len()).map(|i| buf.get(i).reward).collect();
        for i in 0..extra {
            assert!(!rewards.contains(&(i as f64)), "oldest item {i} still present");
        }
        for i in extra..capacity + extra {
            assert!(rewards.contains(&(i as f64)), "item {i} missing");
        }
    }

    #[test]
    fn sample_requires_enough_items() {
        let mut buf = ReplayBuffer::new(16);
        buf.push(t(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            buf.sample(2, &mut rng),
            Err(RlError::InsufficientReplay { have: 1, need: 2 })
        ));
        buf.push(t(2.0));
        assert_eq!(buf.sample(2, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn normalized_action_is_tanh_of_raw() {
        let tr = Transition {
            observation: vec![],
            action_raw: vec![0.0, 100.0, -0.5],
            action_bounded: vec![],
            reward: 0.0,
            next_observation: Some(vec![]),
        };
        let n = tr.action_normalized();
        assert_eq!(n[0], 0.0);
        assert!((n[1] - 1.0).abs() < 1e-12);
        assert!((n[2] - (-0.5f64).tanh()).abs() < 1e-15);
        assert!(!tr.is_terminal());
    }
}
