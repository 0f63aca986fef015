//! Reproducible random streams for parallel Monte Carlo.
//!
//! Every random draw in the crate comes from an [`RngStream`], a `(seed,
//! stream_index)` pair that maps onto one ChaCha8 keystream. ChaCha is
//! counter based, so a stream can be opened anywhere without touching any
//! other stream. Work is split into fixed-size blocks, each with its own
//! substream, and block results are reduced in index order; the output is
//! therefore bit-identical for any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Identifies one independent random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Derives a child stream. Distinct `(parent, index)` pairs give distinct
    /// children with overwhelming probability.
    pub fn substream(&self, index: u64) -> Self {
        let mixed = splitmix64(splitmix64(self.stream_index ^ 0x5851_f42d_4c95_7f2d) ^ index);
        Self { seed: self.seed, stream_index: mixed }
    }

    /// Opens the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_049e_b5a4_4f1b);
    z ^ (z >> 31)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Number of trials evaluated per substream block.
pub const BLOCK_TRIALS: usize = 1024;

/// Running first and second moments of a collection of observables.
#[derive(Debug, Clone)]
pub struct Moments {
    pub count: usize,
    pub sum: Vec<KahanSum>,
    pub sum_sq: Vec<KahanSum>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Self { count: 0, sum: vec![KahanSum::default(); width], sum_sq: vec![KahanSum::default(); width] }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.count += 1;
        for (i, &v) in values.iter().enumerate() {
            self.sum[i].add(v);
            self.sum_sq[i].add(v * v);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for i in 0..self.sum.len() {
            self.sum[i].add(other.sum[i].value());
            self.sum_sq[i].add(other.sum_sq[i].value());
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i].value() / self.count as f64
    }

    /// Standard error of the mean of observable `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return 0.0;
        }
        let mean = self.mean(i);
        let var = (self.sum_sq[i].value() / n - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Evaluates `trials` draws of a `width`-component observable in parallel.
///
/// Trials are grouped into blocks of [`BLOCK_TRIALS`]; block `b` draws from
/// `stream.substream(b)`. Block moments are merged in block order.
pub fn parallel_moments<F>(trials: usize, width: usize, stream: RngStream, sample: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut rng = stream.substream(b as u64).rng();
            let mut m = Moments::new(width);
            let mut buf = vec![0.0; width];
            for _ in 0..n {
                sample(&mut rng, &mut buf);
                m.push(&buf);
            }
            m
        })
        .collect();
    let mut total = Moments::new(width);
    for m in &partial {
        total.merge(m);
    }
    total
}
