//! Deterministic random numbers for data synthesis and seeded tests.
//!
//! The generator is SplitMix64 driven by an explicit 64-bit counter: draw
//! `i` of a stream is `mix(seed + (i+1)·γ)` with the usual golden-ratio
//! increment, so a stream is a pure function of `(seed, i)` and logs are
//! reproducible across runs and platforms. Gaussian variates use the
//! Box–Muller transform, consuming two uniforms per sample.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based SplitMix64 stream.
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Derives an independent stream for a named purpose. Streams from
    /// distinct tags never overlap draws from each other or the parent.
    pub fn substream(&self, tag: u64) -> CounterRng {
        CounterRng::new(mix(self.seed ^ mix(tag.wrapping_add(GAMMA))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal variate via Box–Muller (cosine branch).
    pub fn normal(&mut self) -> f64 {
        // Shift u1 into (0, 1] so the logarithm is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Normal variate with the given standard deviation.
    pub fn normal_scaled(&mut self, std_dev: f64) -> f64 {
        if std_dev == 0.0 {
            return 0.0;
        }
        std_dev * self.normal()
    }
}
