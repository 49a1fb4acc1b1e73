// SPDX-License-Identifier: Apache-2.0

//! Key identifiers, attributes and the closed enumerations that drive dispatch.

use std::fmt;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Caller-visible handle of a stored key. Zero is the null key and never valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeyId(u32);

impl KeyId {
    pub const NULL: KeyId = KeyId(0);
    /// Identifiers a caller may choose.
    pub const USER_MIN: u32 = 1;
    pub const USER_MAX: u32 = 0x3FFF_FFFF;
    /// Identifiers handed out for volatile keys.
    pub const VOLATILE_MIN: u32 = 0x7FFF_0000;
    pub const VOLATILE_MAX: u32 = 0x7FFF_FFFF;

    pub const fn new(value: u32) -> Self {
        KeyId(value)
    }

    /// A caller-chosen identifier; rejects values outside the user range.
    pub fn user(value: u32) -> Result<Self> {
        if (Self::USER_MIN..=Self::USER_MAX).contains(&value) {
            Ok(KeyId(value))
        } else {
            Err(Error::InvalidArgument)
        }
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub fn is_null(self) -> bool {
        self.0 == 0
    }

    pub fn is_user(self) -> bool {
        (Self::USER_MIN..=Self::USER_MAX).contains(&self.0)
    }

    pub fn is_volatile(self) -> bool {
        (Self::VOLATILE_MIN..=Self::VOLATILE_MAX).contains(&self.0)
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#010x}", self.0)
    }
}

/// Key types. Elliptic-curve keys are always secp256r1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeyType {
    Aes,
    Hmac,
    EccKeyPair,
    EccPublicKey,
    RawData,
}

impl KeyType {
    pub const ALL: [KeyType; 5] = [
        KeyType::Aes,
        KeyType::Hmac,
        KeyType::EccKeyPair,
        KeyType::EccPublicKey,
        KeyType::RawData,
    ];

    pub fn is_ecc(self) -> bool {
        matches!(self, KeyType::EccKeyPair | KeyType::EccPublicKey)
    }
}

/// Permitted/requested algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// AES in CBC mode without padding.
    CbcNoPadding,
    HmacSha256,
    Sha256,
    /// ECDSA over secp256r1 with SHA-256.
    EcdsaP256Sha256,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::CbcNoPadding,
        Algorithm::HmacSha256,
        Algorithm::Sha256,
        Algorithm::EcdsaP256Sha256,
    ];
}

bitflags! {
    /// Usage policy of a key.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
    pub struct Usage: u32 {
        const ENCRYPT = 1 << 0;
        const DECRYPT = 1 << 1;
        const SIGN_MESSAGE = 1 << 2;
        const VERIFY_MESSAGE = 1 << 3;
        const SIGN_HASH = 1 << 4;
        const VERIFY_HASH = 1 << 5;
        const EXPORT = 1 << 6;
        const COPY = 1 << 7;
    }
}

/// Where a key lives, and therefore which dispatcher path serves it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location(u32);

impl Location {
    /// Volatile local memory.
    pub const LOCAL: Location = Location(0);
    /// On-chip accelerator. Key material is held in local slots, operations go to the
    /// accelerator backend.
    pub const ACCELERATOR: Location = Location(0x80_0000);
    /// Highest value usable for an external secure element.
    pub const SE_MAX: u32 = 0x7F_FFFF;

    pub const fn new(value: u32) -> Self {
        Location(value)
    }

    /// Location of the n-th secure element (n >= 1).
    pub fn secure_element(n: u32) -> Result<Self> {
        if (1..=Self::SE_MAX).contains(&n) {
            Ok(Location(n))
        } else {
            Err(Error::InvalidArgument)
        }
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    pub fn is_secure_element(self) -> bool {
        (1..=Self::SE_MAX).contains(&self.0)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Location::LOCAL => f.write_str("local"),
            Location::ACCELERATOR => f.write_str("accelerator"),
            Location(n) => write!(f, "se:{n}"),
        }
    }
}

/// Immutable creation-time metadata of a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyAttributes {
    pub key_type: KeyType,
    pub bits: usize,
    pub location: Location,
    pub usage: Usage,
    pub algorithm: Algorithm,
    /// Caller-chosen identifier. `None` requests a generated volatile identifier.
    pub id: Option<KeyId>,
}

impl KeyAttributes {
    pub fn new(key_type: KeyType, bits: usize, algorithm: Algorithm, usage: Usage) -> Self {
        KeyAttributes {
            key_type,
            bits,
            location: Location::LOCAL,
            usage,
            algorithm,
            id: None,
        }
    }

    pub fn aes_128(usage: Usage) -> Self {
        Self::new(KeyType::Aes, 128, Algorithm::CbcNoPadding, usage)
    }

    pub fn hmac_sha256(usage: Usage) -> Self {
        Self::new(KeyType::Hmac, 256, Algorithm::HmacSha256, usage)
    }

    pub fn ecc_key_pair(usage: Usage) -> Self {
        Self::new(KeyType::EccKeyPair, 256, Algorithm::EcdsaP256Sha256, usage)
    }

    pub fn ecc_public_key(usage: Usage) -> Self {
        Self::new(KeyType::EccPublicKey, 256, Algorithm::EcdsaP256Sha256, usage)
    }

    pub fn at(mut self, location: Location) -> Self {
        self.location = location;
        self
    }

    pub fn with_id(mut self, id: KeyId) -> Self {
        self.id = Some(id);
        self
    }

    /// Expected length in bytes of imported material for these attributes.
    pub fn material_len(&self) -> Result<usize> {
        match self.key_type {
            KeyType::Aes | KeyType::Hmac | KeyType::RawData => {
                if self.bits == 0 || !self.bits.is_multiple_of(8) {
                    return Err(Error::InvalidArgument);
                }
                Ok(self.bits / 8)
            }
            KeyType::EccKeyPair => {
                if self.bits != 256 {
                    return Err(Error::NotSupported);
                }
                Ok(crate::ECC_PRIVATE_KEY_LEN)
            }
            KeyType::EccPublicKey => {
                if self.bits != 256 {
                    return Err(Error::NotSupported);
                }
                Ok(crate::ECC_PUBLIC_KEY_LEN)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_ranges_are_disjoint() {
        const { assert!(KeyId::USER_MAX < KeyId::VOLATILE_MIN) };
        assert!(KeyId::user(0).is_err());
        assert!(KeyId::user(KeyId::VOLATILE_MIN).is_err());
        assert!(KeyId::user(1).unwrap().is_user());
        assert!(KeyId::NULL.is_null());
    }

    #[test]
    fn material_lengths() {
        let aes = KeyAttributes::aes_128(Usage::ENCRYPT);
        assert_eq!(aes.material_len(), Ok(16));
        assert_eq!(KeyAttributes::hmac_sha256(Usage::empty()).material_len(), Ok(32));
        assert_eq!(KeyAttributes::ecc_key_pair(Usage::empty()).material_len(), Ok(32));
        assert_eq!(KeyAttributes::ecc_public_key(Usage::empty()).material_len(), Ok(65));
    }

    #[test]
    fn location_classes() {
        assert!(!Location::LOCAL.is_secure_element());
        assert!(!Location::ACCELERATOR.is_secure_element());
        assert!(Location::secure_element(1).unwrap().is_secure_element());
        assert!(Location::secure_element(0).is_err());
        assert_eq!(Location::new(2).to_string(), "se:2");
    }
}
