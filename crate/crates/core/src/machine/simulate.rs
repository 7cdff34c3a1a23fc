use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeration::{BaseSeq, ProbSeq};

use super::transition_row;

/// Identifier of the generator driving [`simulate`].
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    /// `steps + 1` states, starting with the initial one.
    pub states: Vec<u64>,
    pub seed: u64,
    pub steps: u64,
    pub rng: &'static str,
}

/// One transition from `x`.
pub fn sample_step<R: Rng + ?Sized>(x: u64, base: &BaseSeq, probs: &ProbSeq, rng: &mut R) -> u64 {
    let row = transition_row(x, base, probs);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(m, p) in &row.entries {
        acc += p;
        if u < acc {
            return m;
        }
    }
    // Rounding left the cumulative sum just below u.
    row.entries.last().map_or(x, |e| e.0)
}

pub fn simulate(base: &BaseSeq, probs: &ProbSeq, start: u64, steps: u64, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(steps as usize + 1);
    let mut x = start;
    states.push(x);
    for _ in 0..steps {
        x = sample_step(x, base, probs, &mut rng);
        states.push(x);
    }
    Trajectory {
        states,
        seed,
        steps,
        rng: RNG_ALGORITHM,
    }
}
