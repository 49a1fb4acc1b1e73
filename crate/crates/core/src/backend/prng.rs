// SPDX-License-Identifier: Apache-2.0

//! Random sources: a seeded SHA-256 stream generator and the system entropy source.

use rand::RngCore;
use sha2::{Digest, Sha256};
use zeroize::Zeroize;

use crate::error::{Error, Result};

pub trait RandomSource: Send {
    fn fill(&mut self, out: &mut [u8]) -> Result<()>;
}

/// Deterministic generator. Output block `i` is `SHA-256(seed || i as u64 big-endian)`;
/// the byte stream is the concatenation of blocks, consumed without overlap.
pub struct DeterministicPrng {
    seed: Option<[u8; 32]>,
    counter: u64,
    block: [u8; 32],
    /// Bytes of `block` already handed out; 32 means the block is exhausted.
    used: usize,
}

impl DeterministicPrng {
    pub fn unseeded() -> Self {
        DeterministicPrng {
            seed: None,
            counter: 0,
            block: [0; 32],
            used: 32,
        }
    }

    pub fn new(seed: [u8; 32]) -> Self {
        let mut prng = Self::unseeded();
        prng.reseed(seed);
        prng
    }

    /// Restarts the stream from `seed`.
    pub fn reseed(&mut self, seed: [u8; 32]) {
        self.seed = Some(seed);
        self.counter = 0;
        self.block.zeroize();
        self.used = 32;
    }

    pub fn is_seeded(&self) -> bool {
        self.seed.is_some()
    }

    pub fn generate(&mut self, out: &mut [u8]) -> Result<()> {
        let seed = self.seed.ok_or(Error::BadState)?;
        let mut written = 0;
        while written < out.len() {
            if self.used == 32 {
                let mut h = Sha256::new();
                h.update(seed);
                h.update(self.counter.to_be_bytes());
                self.block = h.finalize().into();
                self.counter = self.counter.wrapping_add(1);
                self.used = 0;
            }
            let n = (32 - self.used).min(out.len() - written);
            out[written..written + n].copy_from_slice(&self.block[self.used..self.used + n]);
            self.used += n;
            written += n;
        }
        Ok(())
    }
}

impl Drop for DeterministicPrng {
    fn drop(&mut self) {
        self.block.zeroize();
        if let Some(s) = self.seed.as_mut() {
            s.zeroize();
        }
    }
}

impl RandomSource for DeterministicPrng {
    fn fill(&mut self, out: &mut [u8]) -> Result<()> {
        self.generate(out)
    }
}

/// Operating-system entropy.
#[derive(Default)]
pub struct SystemRng;

impl RandomSource for SystemRng {
    fn fill(&mut self, out: &mut [u8]) -> Result<()> {
        rand::rngs::OsRng
            .try_fill_bytes(out)
            .map_err(|_| Error::HardwareFailure)
    }
}
