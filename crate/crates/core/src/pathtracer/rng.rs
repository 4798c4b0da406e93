use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of keys into one well-mixed 64-bit value.
pub fn hash_keys(keys: &[u64]) -> u64 {
    keys.iter().fold(0x243F_6A88_85A3_08D3, |h, &k| splitmix64(h ^ splitmix64(k)))
}

/// Counter-based stream for one pixel sample. Each `(seed, frame, x, y,
/// sample)` tuple gets an independent stream, so results do not depend on
/// how pixels are scheduled across threads.
pub fn sample_rng(seed: u64, frame: u32, x: u32, y: u32, sample: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(hash_keys(&[seed, frame as u64, x as u64, y as u64]));
    rng.set_stream(sample as u64);
    rng
}
