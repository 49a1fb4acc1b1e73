// SPDX-License-Identifier: Apache-2.0

//! Portable crypto middleware with one identifier-based API over interchangeable backends.
//!
//! Keys are created through [`Crypto`] and referenced by [`KeyId`] afterwards. Where a key
//! lives is part of its attributes: local keys are served by a transparent backend chosen
//! per algorithm-specific entry point, secure-element keys by the opaque driver registered
//! for their location.
//!
//! ```
//! use unikrypt::{config, Algorithm, Crypto, KeyAttributes, Usage};
//!
//! let cfg = config::ConfigFile::default().resolve().unwrap();
//! let crypto = Crypto::init(cfg).unwrap();
//! let key = crypto
//!     .import_key(&KeyAttributes::aes_128(Usage::ENCRYPT | Usage::DECRYPT), &[7; 16])
//!     .unwrap();
//! let mut ct = [0u8; unikrypt::cipher_output_size(Algorithm::CbcNoPadding, 32)];
//! let n = crypto.cipher_encrypt(key, Algorithm::CbcNoPadding, &[1; 32], &mut ct).unwrap();
//! let mut pt = [0u8; 32];
//! crypto.cipher_decrypt(key, Algorithm::CbcNoPadding, &ct[..n], &mut pt).unwrap();
//! assert_eq!(pt, [1; 32]);
//! ```

pub mod api;
pub mod backend;
pub mod config;
pub mod dispatch;
pub mod error;
pub mod instrument;
pub mod keystore;
pub mod se_sim;
pub mod types;

pub use api::{cipher_decrypt_output_size, cipher_output_size, Crypto, CryptoBuilder, KeyClaim};
pub use error::{Error, Result, Status};
pub use types::{Algorithm, KeyAttributes, KeyId, KeyType, Location, Usage};

pub const AES_BLOCK_LEN: usize = 16;
pub const CBC_IV_LEN: usize = 16;
pub const HMAC_SHA256_TAG_LEN: usize = 32;
pub const SHA256_DIGEST_LEN: usize = 32;
pub const ECC_PRIVATE_KEY_LEN: usize = 32;
/// Uncompressed SEC1 point.
pub const ECC_PUBLIC_KEY_LEN: usize = 65;
pub const ECDSA_SIGNATURE_LEN: usize = 64;
