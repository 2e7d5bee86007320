//! Seeded random streams and deterministic parallel reductions.
//!
//! Every stochastic routine derives its generator from a master seed and a
//! stream index, so work split into fixed chunks reproduces bit-for-bit
//! regardless of how many threads execute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::group::CVec;

/// Generator for substream `stream` of `seed`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform point on the unit sphere of R^dim.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    loop {
        let v: CVec = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm > 1e-300 {
            return v.into_iter().map(|a| a / nrm).collect();
        }
    }
}

/// Uniform point in the unit ball of R^dim.
pub fn unit_ball_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let dir = unit_vector(rng, dim);
    let rad = rng.random::<f64>().powf(1.0 / dim as f64);
    dir.into_iter().map(|a| a * rad).collect()
}

/// Volume of the unit ball in R^dim.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

/// Pairwise sum in fixed tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Evaluates `f` on chunks `0..n_chunks` in parallel and returns the results
/// in chunk order. Combined with [`pairwise_sum`] this gives reductions whose
/// value does not depend on the thread count.
pub fn map_chunks<T, F>(n_chunks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n_chunks).into_par_iter().map(f).collect()
}

/// Splits `total` items into chunks of at most `chunk` items: `(start, len)`.
pub fn chunk_ranges(total: usize, chunk: usize) -> Vec<(usize, usize)> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk))
        .map(|c| {
            let start = c * chunk;
            (start, chunk.min(total - start))
        })
        .collect()
}
