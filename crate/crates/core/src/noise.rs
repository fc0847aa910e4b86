//! Counter-based noise: every sample is a pure function of
//! `(seed, stream, index)`, so images can be rendered in any order or on any
//! number of threads and still come out bit-identical.

/// Noise streams used by the renderer. Each stream draws independent values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    SensorNoise = 1,
    Speckle = 2,
    Baseline = 3,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    // SplitMix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Raw 64-bit hash of a counter triple.
#[inline]
pub fn hash(seed: u64, stream: u64, index: u64) -> u64 {
    let a = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let b = mix64(a ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix64(
        b ^ index
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(0x632b_e59b_d9b4_e019),
    )
}

/// Uniform in the open interval (0, 1).
#[inline]
pub fn uniform(seed: u64, stream: u64, index: u64) -> f64 {
    let bits = hash(seed, stream, index) >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller on two hashed uniforms.
#[inline]
pub fn gaussian(seed: u64, stream: u64, index: u64) -> f64 {
    let u1 = uniform(seed, stream, index.wrapping_mul(2));
    let u2 = uniform(seed, stream, index.wrapping_mul(2).wrapping_add(1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Derives a child seed, e.g. one per sample of a dataset.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    hash(seed, tag ^ 0x5eed_0000_0000_0000, index)
}
