use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How mini-batches are drawn from `{0, …, n−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Independent uniform draws, with replacement.
    #[default]
    WithReplacement,
    /// Consecutive slices of a reshuffled permutation.
    EpochShuffle,
}

/// Seeded mini-batch generator. A request for `n` indices always yields the
/// full index set `0..n` in order, so full-batch runs reduce to exact
/// deterministic methods.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    rng: ChaCha8Rng,
    n: usize,
    mode: SamplingMode,
    perm: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub fn new(n: usize, seed: u64, mode: SamplingMode) -> Self {
        BatchSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            mode,
            perm: (0..n).collect(),
            cursor: n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&mut self) -> usize {
        self.rng.random_range(0..self.n)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn fill(&mut self, size: usize, out: &mut Vec<usize>) {
        out.clear();
        if size >= self.n {
            out.extend(0..self.n);
            return;
        }
        match self.mode {
            SamplingMode::WithReplacement => {
                for _ in 0..size {
                    let i = self.rng.random_range(0..self.n);
                    out.push(i);
                }
            }
            SamplingMode::EpochShuffle => {
                while out.len() < size {
                    if self.cursor == self.n {
                        self.perm.shuffle(&mut self.rng);
                        self.cursor = 0;
                    }
                    out.push(self.perm[self.cursor]);
                    self.cursor += 1;
                }
            }
        }
    }

    pub fn batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size.min(self.n));
        self.fill(size, &mut out);
        out
    }
}
