//! Seed expansion and the stream generator used for every stochastic draw.
//!
//! Seeds are expanded with the splitmix64 finalizer and streams run on
//! xoshiro256**. Both are fixed algorithms, so a seed reproduces the same
//! draws on any host.

use core::f64::consts::PI;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 step applied to `x`: advance by the golden gamma and mix.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from `seed`, mixing with `multiplier`.
///
/// `splitmix64(seed ^ (multiplier * (index + 1)))`, all arithmetic wrapping.
#[inline]
pub fn derive_stream_seed(seed: u64, multiplier: u64, index: u64) -> u64 {
    splitmix64(seed ^ multiplier.wrapping_mul(index.wrapping_add(1)))
}

/// xoshiro256** generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    /// Fills the 256-bit state from successive splitmix64 outputs of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut state = seed;
        let mut s = [0u64; 4];
        for word in s.iter_mut() {
            *word = splitmix64(state);
            state = state.wrapping_add(GOLDEN_GAMMA);
        }
        // all-zero state is a fixed point; splitmix64 never yields four zeros
        // in a row but guard anyway
        if s == [0; 4] {
            s[0] = GOLDEN_GAMMA;
        }
        Self { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` (Lemire's multiply-and-reject).
    ///
    /// Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform in `[lo, hi]` for `lo <= hi`; never leaves the closed interval.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        let v = lo + self.next_f64() * (hi - lo);
        v.clamp(lo, hi)
    }

    /// Standard normal draw via Box-Muller (cosine branch only).
    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u keeps the log argument in (0, 1]
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
    }

    /// Poisson draw with the given mean.
    ///
    /// Knuth's product method on chunks of mean at most 30; a sum of
    /// independent Poisson variables is Poisson with the summed mean, so
    /// chunking keeps `exp(-mean)` away from underflow without changing the
    /// distribution.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        const CHUNK: f64 = 30.0;
        if !(mean > 0.0) {
            return 0;
        }
        let mut remaining = mean;
        let mut total = 0u64;
        while remaining > 0.0 {
            let lambda = if remaining > CHUNK { CHUNK } else { remaining };
            remaining -= lambda;
            let limit = libm::exp(-lambda);
            let mut product = self.next_f64();
            while product > limit {
                total += 1;
                product *= self.next_f64();
            }
        }
        total
    }
}
