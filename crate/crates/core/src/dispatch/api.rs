// SPDX-License-Identifier: Apache-2.0

//! Algorithm-specific API names and the (key type, size, algorithm, direction) mapping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Algorithm, KeyType};

/// One fully resolved algorithm-specific entry point. This is the unit of backend mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgoApi {
    #[serde(rename = "CIPHER_CBC_AES_128_ENCRYPT")]
    CipherCbcAes128Encrypt,
    #[serde(rename = "CIPHER_CBC_AES_128_DECRYPT")]
    CipherCbcAes128Decrypt,
    #[serde(rename = "CIPHER_CBC_AES_256_ENCRYPT")]
    CipherCbcAes256Encrypt,
    #[serde(rename = "CIPHER_CBC_AES_256_DECRYPT")]
    CipherCbcAes256Decrypt,
    #[serde(rename = "HMAC_SHA256_COMPUTE")]
    HmacSha256Compute,
    #[serde(rename = "HMAC_SHA256_VERIFY")]
    HmacSha256Verify,
    #[serde(rename = "SHA256_COMPUTE")]
    Sha256Compute,
    #[serde(rename = "ECC_P256_GENERATE")]
    EccP256Generate,
    #[serde(rename = "ECDSA_P256_SIGN")]
    EcdsaP256Sign,
    #[serde(rename = "ECDSA_P256_VERIFY")]
    EcdsaP256Verify,
}

/// What an operation does with its key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Encrypt,
    Decrypt,
    Compute,
    Verify,
    Sign,
    Generate,
}

impl AlgoApi {
    pub const ALL: [AlgoApi; 10] = [
        AlgoApi::CipherCbcAes128Encrypt,
        AlgoApi::CipherCbcAes128Decrypt,
        AlgoApi::CipherCbcAes256Encrypt,
        AlgoApi::CipherCbcAes256Decrypt,
        AlgoApi::HmacSha256Compute,
        AlgoApi::HmacSha256Verify,
        AlgoApi::Sha256Compute,
        AlgoApi::EccP256Generate,
        AlgoApi::EcdsaP256Sign,
        AlgoApi::EcdsaP256Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgoApi::CipherCbcAes128Encrypt => "CIPHER_CBC_AES_128_ENCRYPT",
            AlgoApi::CipherCbcAes128Decrypt => "CIPHER_CBC_AES_128_DECRYPT",
            AlgoApi::CipherCbcAes256Encrypt => "CIPHER_CBC_AES_256_ENCRYPT",
            AlgoApi::CipherCbcAes256Decrypt => "CIPHER_CBC_AES_256_DECRYPT",
            AlgoApi::HmacSha256Compute => "HMAC_SHA256_COMPUTE",
            AlgoApi::HmacSha256Verify => "HMAC_SHA256_VERIFY",
            AlgoApi::Sha256Compute => "SHA256_COMPUTE",
            AlgoApi::EccP256Generate => "ECC_P256_GENERATE",
            AlgoApi::EcdsaP256Sign => "ECDSA_P256_SIGN",
            AlgoApi::EcdsaP256Verify => "ECDSA_P256_VERIFY",
        }
    }

    /// Size in bytes of a key used through this entry point when it sits in a single-key
    /// slot, or `None` if the key lives in a key-pair slot or the API takes no key.
    pub fn single_key_size(self) -> Option<usize> {
        match self {
            AlgoApi::CipherCbcAes128Encrypt | AlgoApi::CipherCbcAes128Decrypt => Some(16),
            AlgoApi::CipherCbcAes256Encrypt | AlgoApi::CipherCbcAes256Decrypt => Some(32),
            AlgoApi::HmacSha256Compute | AlgoApi::HmacSha256Verify => Some(32),
            AlgoApi::EcdsaP256Verify => Some(crate::ECC_PUBLIC_KEY_LEN),
            AlgoApi::Sha256Compute | AlgoApi::EccP256Generate | AlgoApi::EcdsaP256Sign => None,
        }
    }

    /// Whether the API needs key-pair slots when used with local keys.
    pub fn uses_key_pairs(self) -> bool {
        matches!(self, AlgoApi::EccP256Generate | AlgoApi::EcdsaP256Sign)
    }
}

impl fmt::Display for AlgoApi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgoApi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgoApi::ALL
            .into_iter()
            .find(|api| api.name() == s)
            .ok_or(Error::InvalidArgument)
    }
}

/// Map a key type, key size and algorithm onto the algorithm-specific API.
///
/// Pure and constant-time in the number of stored keys: a single match, no lookups.
pub fn resolve_algo_api(
    key_type: KeyType,
    bits: usize,
    alg: Algorithm,
    direction: Direction,
) -> Result<AlgoApi> {
    use AlgoApi::*;
    use Direction::*;
    let api = match (key_type, bits, alg, direction) {
        (KeyType::Aes, 128, Algorithm::CbcNoPadding, Encrypt) => CipherCbcAes128Encrypt,
        (KeyType::Aes, 128, Algorithm::CbcNoPadding, Decrypt) => CipherCbcAes128Decrypt,
        (KeyType::Aes, 256, Algorithm::CbcNoPadding, Encrypt) => CipherCbcAes256Encrypt,
        (KeyType::Aes, 256, Algorithm::CbcNoPadding, Decrypt) => CipherCbcAes256Decrypt,
        (KeyType::Hmac, 256, Algorithm::HmacSha256, Compute) => HmacSha256Compute,
        (KeyType::Hmac, 256, Algorithm::HmacSha256, Verify) => HmacSha256Verify,
        (KeyType::EccKeyPair, 256, Algorithm::EcdsaP256Sha256, Generate) => EccP256Generate,
        (KeyType::EccKeyPair, 256, Algorithm::EcdsaP256Sha256, Sign) => EcdsaP256Sign,
        (KeyType::EccKeyPair | KeyType::EccPublicKey, 256, Algorithm::EcdsaP256Sha256, Verify) => {
            EcdsaP256Verify
        }
        _ => return Err(Error::NotSupported),
    };
    Ok(api)
}

/// Hash entry points take no key.
pub fn resolve_hash_api(alg: Algorithm) -> Result<AlgoApi> {
    match alg {
        Algorithm::Sha256 => Ok(AlgoApi::Sha256Compute),
        _ => Err(Error::NotSupported),
    }
}

/// All entry points a key with these properties could be used through.
pub fn apis_for_key(key_type: KeyType, bits: usize, alg: Algorithm) -> Vec<AlgoApi> {
    use Direction::*;
    [Encrypt, Decrypt, Compute, Verify, Sign, Generate]
        .into_iter()
        .filter_map(|d| resolve_algo_api(key_type, bits, alg, d).ok())
        .collect()
}
