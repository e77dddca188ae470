use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams, one per purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    BlobShape = 1,
    Drop = 2,
    Jitter = 3,
    Score = 4,
    SpuriousBirth = 5,
    SpuriousShape = 6,
}

/// Generator addressed by `(seed, purpose, frame, index)`. Every draw comes
/// from its own stream, so the output does not depend on iteration order.
pub(crate) fn stream(seed: u64, purpose: Purpose, frame: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | ((frame & 0xFFFF_FFFF) << 20) | (index & 0xF_FFFF));
    rng
}
