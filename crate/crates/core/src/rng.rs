//! Counter-based random numbers.
//!
//! Every draw is a pure function of a tuple of 64-bit words, so a matrix
//! entry or a noise sample depends only on its coordinates and never on the
//! order in which values were generated. The mixer is the SplitMix64
//! finaliser; it is not cryptographic.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags keep independent streams from colliding on equal coordinates.
pub mod domain {
    pub const SENSING: u64 = 0x5345_4E53;
    pub const NOISE: u64 = 0x4E4F_4953;
    pub const POWER: u64 = 0x504F_5752;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a coordinate tuple into a 64-bit word.
pub fn hash(words: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &w in words {
        h = mix(h ^ mix(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Uniform draw in the open interval (0, 1).
pub fn uniform(words: &[u64], lane: u64) -> f64 {
    let bits = mix(hash(words) ^ mix(lane.wrapping_mul(GOLDEN).wrapping_add(1)));
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw (Box-Muller, cosine branch).
pub fn normal(words: &[u64]) -> f64 {
    let u1 = uniform(words, 0);
    let u2 = uniform(words, 1);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
