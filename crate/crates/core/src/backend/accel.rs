// SPDX-License-Identifier: Apache-2.0

//! Model of an on-chip crypto peripheral. There is no hardware here: the entry points run
//! the reference primitives, but under their own label so that routing and configuration
//! can tell the peripheral path apart from plain software. The set of entry points it
//! serves comes from the platform's capability symbols.

use std::collections::BTreeSet;

use super::{soft, EccKeyPair, RandomSource, TransparentBackend, ACCELERATOR};
use crate::dispatch::AlgoApi;
use crate::error::Result;

#[derive(Debug, Clone, Default)]
pub struct AcceleratorBackend {
    apis: BTreeSet<AlgoApi>,
}

impl AcceleratorBackend {
    /// A peripheral serving `apis`. AES-256 entry points are never served.
    pub fn new(apis: impl IntoIterator<Item = AlgoApi>) -> Self {
        AcceleratorBackend {
            apis: apis
                .into_iter()
                .filter(|a| {
                    !matches!(
                        a,
                        AlgoApi::CipherCbcAes256Encrypt | AlgoApi::CipherCbcAes256Decrypt
                    )
                })
                .collect(),
        }
    }

    /// A peripheral with every capability this model knows.
    pub fn full() -> Self {
        Self::new(AlgoApi::ALL)
    }
}

impl TransparentBackend for AcceleratorBackend {
    fn label(&self) -> &str {
        ACCELERATOR
    }

    fn implements(&self, api: AlgoApi) -> bool {
        self.apis.contains(&api)
    }

    fn cipher_cbc_encrypt(&self, key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
        soft::aes128_cbc_encrypt(key, iv, input, out)
    }

    fn cipher_cbc_decrypt(&self, key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
        soft::aes128_cbc_decrypt(key, iv, input, out)
    }

    fn hmac_sha256(&self, key: &[u8], message: &[u8]) -> Result<[u8; 32]> {
        Ok(soft::hmac_sha256(key, message))
    }

    fn sha256(&self, message: &[u8]) -> Result<[u8; 32]> {
        Ok(soft::sha256(message))
    }

    fn ecc_p256_generate(&self, rng: &mut dyn RandomSource) -> Result<EccKeyPair> {
        soft::ecc_p256_generate(rng)
    }

    fn ecdsa_p256_sign(&self, private: &[u8], message: &[u8]) -> Result<[u8; 64]> {
        soft::ecdsa_p256_sign(private, message)
    }

    fn ecdsa_p256_verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> Result<()> {
        soft::ecdsa_p256_verify(public, message, signature)
    }
}
