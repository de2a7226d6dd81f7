use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Named pseudo-random stream.
///
/// The seed is a hash of `(name, run_seed)`, so streams are reproducible and
/// adding a component never perturbs the draws of any other.
#[derive(Debug, Clone)]
pub struct RngStream {
    name: String,
    run_seed: u64,
    inner: ChaCha8Rng,
}

/// Derives the stream for component `name` in the run seeded with `run_seed`.
///
/// # Panics
///
/// If `name` is empty.
pub fn derive_stream(name: &str, run_seed: u64) -> RngStream {
    assert!(!name.is_empty(), "stream name must not be empty");
    let mut h = Sha256::new();
    h.update(b"ecrbed/stream/v1\0");
    h.update((name.len() as u64).to_le_bytes());
    h.update(name.as_bytes());
    h.update(run_seed.to_le_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    RngStream { name: name.to_owned(), run_seed, inner: ChaCha8Rng::from_seed(seed) }
}

impl RngStream {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
