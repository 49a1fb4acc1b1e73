// SPDX-License-Identifier: Apache-2.0

//! Transparent backends: drivers that receive plain key material.
//!
//! Every backend implements a subset of the algorithm-specific APIs. Any two backends
//! implementing the same [`AlgoApi`] are interchangeable: deterministic operations return
//! identical bytes, signatures verify under either.

pub mod accel;
pub mod alt;
pub mod prng;
pub mod soft;

use zeroize::Zeroizing;

use crate::dispatch::AlgoApi;
use crate::error::{Error, Result};

pub use prng::{DeterministicPrng, RandomSource, SystemRng};

/// Label of the reference software backend.
pub const SOFTWARE: &str = "software";
/// Label of the independent second software backend.
pub const SOFTWARE_ALT: &str = "software-alt";
/// Label of the on-chip accelerator model.
pub const ACCELERATOR: &str = "accelerator";

/// A freshly generated secp256r1 key pair.
pub struct EccKeyPair {
    pub private: Zeroizing<[u8; crate::ECC_PRIVATE_KEY_LEN]>,
    pub public: [u8; crate::ECC_PUBLIC_KEY_LEN],
}

/// Algorithm-specific entry points of a transparent driver.
///
/// Methods that a backend does not implement keep the default body and return
/// [`Error::NotSupported`]; [`TransparentBackend::implements`] must agree with that.
pub trait TransparentBackend: Send + Sync {
    fn label(&self) -> &str;

    fn implements(&self, api: AlgoApi) -> bool;

    /// CBC encryption of whole blocks; `out.len()` must equal `input.len()`.
    fn cipher_cbc_encrypt(
        &self,
        _key: &[u8],
        _iv: &[u8; 16],
        _input: &[u8],
        _out: &mut [u8],
    ) -> Result<()> {
        Err(Error::NotSupported)
    }

    fn cipher_cbc_decrypt(
        &self,
        _key: &[u8],
        _iv: &[u8; 16],
        _input: &[u8],
        _out: &mut [u8],
    ) -> Result<()> {
        Err(Error::NotSupported)
    }

    fn hmac_sha256(&self, _key: &[u8], _message: &[u8]) -> Result<[u8; 32]> {
        Err(Error::NotSupported)
    }

    fn sha256(&self, _message: &[u8]) -> Result<[u8; 32]> {
        Err(Error::NotSupported)
    }

    fn ecc_p256_generate(&self, _rng: &mut dyn RandomSource) -> Result<EccKeyPair> {
        Err(Error::NotSupported)
    }

    /// Signs SHA-256(message); 64-byte r || s.
    fn ecdsa_p256_sign(&self, _private: &[u8], _message: &[u8]) -> Result<[u8; 64]> {
        Err(Error::NotSupported)
    }

    fn ecdsa_p256_verify(&self, _public: &[u8], _message: &[u8], _signature: &[u8]) -> Result<()> {
        Err(Error::NotSupported)
    }
}

/// The backends compiled into the crate. The accelerator is present only when the
/// platform declares at least one capability.
pub fn builtin_backends(
    accelerator_apis: &std::collections::BTreeSet<AlgoApi>,
) -> Vec<std::sync::Arc<dyn TransparentBackend>> {
    let mut v: Vec<std::sync::Arc<dyn TransparentBackend>> = vec![
        std::sync::Arc::new(soft::SoftwareBackend),
        std::sync::Arc::new(alt::AltBackend),
    ];
    if !accelerator_apis.is_empty() {
        v.push(std::sync::Arc::new(accel::AcceleratorBackend::new(
            accelerator_apis.iter().copied(),
        )));
    }
    v
}
