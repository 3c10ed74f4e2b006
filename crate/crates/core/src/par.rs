//! Data-parallel execution with a sequential fallback.
//!
//! Work is split into fixed-size chunks, each with its own ChaCha stream, so
//! results depend only on the seed and never on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Runs on the rayon pool; without the `parallel` feature this is the
    /// same as `Sequential`.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive sub-seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ p))
}

/// Sizes the global thread pool. Must run before any parallel work; a
/// no-op without the `parallel` feature.
pub fn set_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::Error::InvalidParameter("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::InvalidParameter(e.to_string()))?;
    Ok(())
}

impl Exec {
    /// `f(i)` for every `i < n`, in order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Runs `shots` trials in chunks of [`CHUNK`]; `trial(rng)` is called once
    /// per shot and the per-chunk results are reduced with `+`.
    pub fn sum_shots<T, F>(self, shots: u64, seed: u64, trial: F) -> T
    where
        T: Send + Default + std::ops::Add<Output = T>,
        F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
    {
        let chunks = shots.div_ceil(CHUNK) as usize;
        let partial = self.map(chunks, |c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(shots - c as u64 * CHUNK);
            (0..len).fold(T::default(), |acc, _| acc + trial(&mut rng))
        });
        partial.into_iter().fold(T::default(), |a, b| a + b)
    }

    /// Number of shots for which `trial` returns true.
    pub fn count_shots<F>(self, shots: u64, seed: u64, trial: F) -> u64
    where
        F: Fn(&mut ChaCha8Rng) -> bool + Sync + Send,
    {
        self.sum_shots(shots, seed, |rng| u64::from(trial(rng)))
    }
}
