//! Counter-based random streams.
//!
//! Every tile owns an independent stream derived from
//! `(master_seed, hash(slide_id), ordinal, purpose)`, so draws never depend on
//! evaluation order or thread count. The generator is SplitMix64: the state is
//! a Weyl sequence and each output is the SplitMix64 finalizer of the state.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// What a stream is used for. Different purposes of the same tile never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Group assignment followed by the σ draw.
    BlurAssignment,
    /// Synthetic tile texture.
    Texture,
    /// Predictor noise, keyed by a hash of the model id.
    Predictor(u64),
    /// Shuffles and subsampling keyed by a caller-chosen tag.
    Shuffle(u64),
}

impl Purpose {
    fn salt(self) -> u64 {
        match self {
            Purpose::BlurAssignment => 0x0B1A_5EED,
            Purpose::Texture => 0x7E47_A5ED,
            Purpose::Predictor(h) => mix64(h ^ 0x9BED_1C70),
            Purpose::Shuffle(tag) => mix64(tag ^ 0x5AFF_1E00),
        }
    }
}

/// Master seed from which all streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Stream for one tile. `ordinal` is the tile's position within its slide.
    pub fn tile_stream(&self, slide_id: &str, ordinal: u64, purpose: Purpose) -> Stream {
        let mut s = mix64(self.master_seed ^ GOLDEN);
        s = mix64(s ^ hash_str(slide_id));
        s = mix64(s ^ ordinal.wrapping_mul(GOLDEN));
        Stream::from_state(mix64(s ^ purpose.salt()))
    }

    /// Stream that is not tied to a tile (e.g. corpus-level shuffles).
    pub fn stream(&self, purpose: Purpose) -> Stream {
        Stream::from_state(mix64(mix64(self.master_seed ^ GOLDEN) ^ purpose.salt()))
    }
}

/// A SplitMix64 random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn from_state(state: u64) -> Self {
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`; `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-40 for the sizes used here.
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let spec = RngSpec::new(42);
        let a: Vec<u64> = {
            let mut s = spec.tile_stream("slide-1", 3, Purpose::BlurAssignment);
            (0..4).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = spec.tile_stream("slide-1", 3, Purpose::BlurAssignment);
            (0..4).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut other = spec.tile_stream("slide-1", 4, Purpose::BlurAssignment);
        assert_ne!(a[0], other.next_u64());
        let mut other = spec.tile_stream("slide-2", 3, Purpose::BlurAssignment);
        assert_ne!(a[0], other.next_u64());
        let mut other = spec.tile_stream("slide-1", 3, Purpose::Texture);
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn uniform_moments() {
        let mut s = RngSpec::new(7).stream(Purpose::Shuffle(1));
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_f64()).collect();
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005);
    }

    #[test]
    fn normal_moments() {
        let mut s = RngSpec::new(9).stream(Purpose::Shuffle(2));
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut s = RngSpec::new(1).stream(Purpose::Shuffle(0));
        let mut v: Vec<usize> = (0..50).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
