//! Deterministic Brownian increments.
//!
//! Every `(master seed, trajectory id, step)` triple addresses its own block
//! of a ChaCha8 keystream: the master seed keys the cipher, the trajectory id
//! selects the 64-bit stream and the step index positions the word counter at
//! `step * 2^32`. Draws for one step are therefore reproducible in isolation,
//! independent of how many steps were generated before, and trajectories can
//! be advanced on different threads without coordination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const WORDS_PER_STEP: u128 = 1 << 32;

/// Independent Brownian increments `(dbeta_j^+, dbeta_j^-)` for one step,
/// interleaved as `[+1, -1, +2, -2, ...]`; each component has variance `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraws(Vec<f64>);

impl NoiseDraws {
    pub fn zeros(modes: usize) -> Self {
        NoiseDraws(vec![0.0; 2 * modes])
    }

    pub fn from_interleaved(values: Vec<f64>) -> Self {
        debug_assert!(values.len() % 2 == 0);
        NoiseDraws(values)
    }

    pub fn modes(&self) -> usize {
        self.0.len() / 2
    }

    /// Increment of `beta_j^+` (1-based `j`).
    pub fn plus(&self, j: usize) -> f64 {
        self.0[2 * (j - 1)]
    }

    /// Increment of `beta_j^-` (1-based `j`).
    pub fn minus(&self, j: usize) -> f64 {
        self.0[2 * (j - 1) + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Counter-addressed source of increments for one trajectory.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    seed: u64,
    trajectory: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        NoiseStream {
            rng,
            seed,
            trajectory,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory(&self) -> u64 {
        self.trajectory
    }

    /// Increments for step `step`, scaled by `sqrt(dt)`.
    pub fn draw(&mut self, step: u64, dt: f64, modes: usize) -> NoiseDraws {
        let mut out = vec![0.0; 2 * modes];
        self.fill(step, dt, &mut out);
        NoiseDraws(out)
    }

    pub(crate) fn fill(&mut self, step: u64, dt: f64, out: &mut [f64]) {
        self.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        let scale = dt.max(0.0).sqrt();
        for v in out.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = scale * z;
        }
    }

    /// `n` standard normals from the block of `step` (for scalar test paths).
    pub fn normals(&mut self, step: u64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill(step, 1.0, &mut out);
        out
    }
}

/// Increments for one step drawn through a fresh stream.
pub fn draw_increments(seed: u64, trajectory: u64, step: u64, dt: f64, modes: usize) -> NoiseDraws {
    NoiseStream::new(seed, trajectory).draw(step, dt, modes)
}
