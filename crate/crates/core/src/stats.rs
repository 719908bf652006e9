//! Numeric support: seeded random streams, the normal CDF, histograms, and
//! reference oracles used to cross-check the tracker.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::tracking::TrackStatus;

/// Deterministic random stream.
///
/// Backed by ChaCha8 seeded through `seed_from_u64`, so a given seed yields
/// the same sequence on every platform. Trial `i` of an evaluation seeded
/// with `base` uses `RngStream::for_trial(base, i)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_trial(base_seed: u64, index: u64) -> Self {
        Self::new(base_seed.wrapping_add(index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` when the interval is empty.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    // Normal::standard() cannot fail.
    Normal::standard().cdf(x)
}

/// Fixed-width histogram over `[lo, hi]`. The upper edge belongs to the last
/// bin; samples outside the range are counted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> crate::Result<Self> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(crate::Error::domain(format!(
                "histogram needs lo < hi and at least one bin (lo={lo}, hi={hi}, bins={bins})"
            )));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            outside: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + self.width() * i as f64)
            .collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.lo + self.width() * (i as f64 + 0.5))
            .collect()
    }

    /// Returns `false` when the sample fell outside the range.
    pub fn add(&mut self, x: f64) -> bool {
        if !(x >= self.lo && x <= self.hi) {
            self.outside += 1;
            return false;
        }
        let idx = (((x - self.lo) / self.width()) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
        true
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin probabilities (counts / in-range total). All zeros when empty.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

/// L1 distance between two discrete distributions of equal length.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have the same support");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Reference status sequence for the (H, R) track lifecycle.
///
/// Each status is derived directly from the prefix of the hit/miss sequence:
/// a track exists at frame `t` iff some hit occurred after the last run of
/// `R` consecutive misses, and it is confirmed iff that surviving stretch
/// contains `H` consecutive hits. This is quadratic on purpose; it is an
/// oracle for [`crate::tracking::update`], not a tracker.
pub fn lifecycle_oracle(hits: &[bool], h: usize, r: usize) -> Vec<TrackStatus> {
    assert!(h >= 1 && r >= 1, "H and R must be at least 1");
    (0..hits.len())
        .map(|t| {
            let prefix = &hits[..=t];
            // Start of the stretch after the most recent run of R misses.
            let start = (0..prefix.len())
                .rev()
                .find(|&j| j + 1 >= r && prefix[j + 1 - r..=j].iter().all(|&x| !x))
                .map_or(0, |j| j + 1);
            let window = &prefix[start..];
            if !window.iter().any(|&x| x) {
                return TrackStatus::Empty;
            }
            let confirmed = window.windows(h).any(|w| w.iter().all(|&x| x));
            if confirmed {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            }
        })
        .collect()
}

/// Probability that a live track is deleted within `frames` frames when each
/// frame is detected independently with probability `rate` and deletion
/// happens after `misses_to_delete` consecutive misses.
///
/// Exact absorbing Markov chain over the current miss-run length.
pub fn deletion_probability(rate: f64, misses_to_delete: usize, frames: usize) -> f64 {
    assert!(misses_to_delete >= 1);
    let miss = 1.0 - rate;
    // state[k] = probability of a current miss run of length k (k < R)
    let mut state = vec![0.0; misses_to_delete];
    state[0] = 1.0;
    let mut absorbed = 0.0;
    for _ in 0..frames {
        let mut next = vec![0.0; misses_to_delete];
        for (k, &p) in state.iter().enumerate() {
            next[0] += p * rate;
            if k + 1 == misses_to_delete {
                absorbed += p * miss;
            } else {
                next[k + 1] += p * miss;
            }
        }
        state = next;
    }
    absorbed
}
