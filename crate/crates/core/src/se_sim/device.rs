// SPDX-License-Identifier: Apache-2.0

//! Software model of an ATECC608A-like secure element.
//!
//! The device has sixteen key slots and a TempKey register. Key bytes in slots never leave
//! the device through any command; only operation results do. Cryptography is delegated
//! to the reference primitives so device results can be compared byte-for-byte with the
//! transparent backends.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use zeroize::Zeroizing;

use crate::backend::{soft, DeterministicPrng};
use crate::error::{Error, Result};
use crate::{ECC_PRIVATE_KEY_LEN, ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN};

pub const DEVICE_SLOT_COUNT: usize = 16;

/// Device commands. Each has its own latency entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeCommand {
    /// Load host data into TempKey.
    LoadTempKey,
    /// Fill TempKey from the device RNG.
    RandomTempKey,
    /// Move TempKey into a key slot.
    StoreTempKey,
    GenKey,
    PrivWrite,
    WritePublic,
    GetPublic,
    Sign,
    Verify,
    Mac,
    Cipher,
    Erase,
}

impl SeCommand {
    pub const ALL: [SeCommand; 12] = [
        SeCommand::LoadTempKey,
        SeCommand::RandomTempKey,
        SeCommand::StoreTempKey,
        SeCommand::GenKey,
        SeCommand::PrivWrite,
        SeCommand::WritePublic,
        SeCommand::GetPublic,
        SeCommand::Sign,
        SeCommand::Verify,
        SeCommand::Mac,
        SeCommand::Cipher,
        SeCommand::Erase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeCommand::LoadTempKey => "load_tempkey",
            SeCommand::RandomTempKey => "random_tempkey",
            SeCommand::StoreTempKey => "store_tempkey",
            SeCommand::GenKey => "genkey",
            SeCommand::PrivWrite => "priv_write",
            SeCommand::WritePublic => "write_public",
            SeCommand::GetPublic => "get_public",
            SeCommand::Sign => "sign",
            SeCommand::Verify => "verify",
            SeCommand::Mac => "mac",
            SeCommand::Cipher => "cipher",
            SeCommand::Erase => "erase",
        }
    }
}

impl fmt::Display for SeCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeCommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeCommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or(Error::InvalidArgument)
    }
}

/// Per-command injected delay in microseconds. An empty table disables the model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyTable {
    pub micros: BTreeMap<SeCommand, u64>,
}

impl LatencyTable {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.micros.values().any(|&v| v > 0)
    }

    pub fn with(mut self, command: SeCommand, micros: u64) -> Self {
        self.micros.insert(command, micros);
        self
    }

    /// Configured delay for `command`; zero when the model is off.
    pub fn latency(&self, command: SeCommand) -> Duration {
        Duration::from_micros(self.micros.get(&command).copied().unwrap_or(0))
    }
}

/// One executed command. Key bytes are never recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandRecord {
    pub command: SeCommand,
    pub slot: Option<u8>,
    pub input_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricKind {
    Aes128,
    Hmac,
}

/// Where a symmetric operation takes its key from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySource {
    Slot(u8),
    TempKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CipherDirection {
    Encrypt,
    Decrypt,
}

enum DeviceSlot {
    Empty,
    Symmetric {
        kind: SymmetricKind,
        data: Zeroizing<[u8; 32]>,
    },
    EccPrivate {
        scalar: Zeroizing<[u8; ECC_PRIVATE_KEY_LEN]>,
        public: [u8; ECC_PUBLIC_KEY_LEN],
    },
    EccPublic {
        point: [u8; ECC_PUBLIC_KEY_LEN],
    },
}

pub struct SimulatedSe {
    id: u32,
    slots: [DeviceSlot; DEVICE_SLOT_COUNT],
    temp_key: Option<Zeroizing<Vec<u8>>>,
    latency: LatencyTable,
    log: Vec<CommandRecord>,
    rng: DeterministicPrng,
}

impl SimulatedSe {
    pub fn new(id: u32, rng_seed: [u8; 32], latency: LatencyTable) -> Self {
        SimulatedSe {
            id,
            slots: std::array::from_fn(|_| DeviceSlot::Empty),
            temp_key: None,
            latency,
            log: Vec::new(),
            rng: DeterministicPrng::new(rng_seed),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn latency_table(&self) -> &LatencyTable {
        &self.latency
    }

    fn begin(&mut self, command: SeCommand, slot: Option<u8>, input_len: usize) {
        self.log.push(CommandRecord {
            command,
            slot,
            input_len,
        });
        let d = self.latency.latency(command);
        if !d.is_zero() {
            std::thread::sleep(d);
        }
    }

    fn slot_index(slot: u8) -> Result<usize> {
        let i = slot as usize;
        if i < DEVICE_SLOT_COUNT {
            Ok(i)
        } else {
            Err(Error::InvalidArgument)
        }
    }

    fn free_slot(&self, slot: u8) -> Result<usize> {
        let i = Self::slot_index(slot)?;
        match self.slots[i] {
            DeviceSlot::Empty => Ok(i),
            _ => Err(Error::AlreadyExists),
        }
    }

    fn take_temp_key(&mut self) -> Result<Zeroizing<Vec<u8>>> {
        self.temp_key.take().ok_or(Error::BadState)
    }

    /// Loads TempKey. Only 32 or 64 bytes are accepted.
    pub fn load_tempkey(&mut self, data: &[u8]) -> Result<()> {
        self.begin(SeCommand::LoadTempKey, None, data.len());
        if data.len() != 32 && data.len() != 64 {
            return Err(Error::InvalidArgument);
        }
        self.temp_key = Some(Zeroizing::new(data.to_vec()));
        Ok(())
    }

    /// Fills TempKey with 32 bytes from the device RNG.
    pub fn random_tempkey(&mut self) -> Result<()> {
        self.begin(SeCommand::RandomTempKey, None, 0);
        let mut buf = Zeroizing::new(vec![0u8; 32]);
        self.rng.generate(&mut buf)?;
        self.temp_key = Some(buf);
        Ok(())
    }

    /// Moves a 32-byte TempKey into an empty slot as a symmetric key.
    pub fn store_tempkey(&mut self, slot: u8, kind: SymmetricKind) -> Result<()> {
        self.begin(SeCommand::StoreTempKey, Some(slot), 0);
        let tk = self.take_temp_key()?;
        let i = self.free_slot(slot)?;
        let data: [u8; 32] = tk.as_slice().try_into().map_err(|_| Error::InvalidArgument)?;
        self.slots[i] = DeviceSlot::Symmetric {
            kind,
            data: Zeroizing::new(data),
        };
        Ok(())
    }

    /// Generates a P-256 pair in an empty slot and returns the public point.
    pub fn genkey(&mut self, slot: u8) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
        self.begin(SeCommand::GenKey, Some(slot), 0);
        let i = self.free_slot(slot)?;
        let pair = soft::ecc_p256_generate(&mut self.rng)?;
        let mut scalar = Zeroizing::new([0u8; ECC_PRIVATE_KEY_LEN]);
        scalar.copy_from_slice(pair.private.as_ref());
        self.slots[i] = DeviceSlot::EccPrivate {
            scalar,
            public: pair.public,
        };
        Ok(pair.public)
    }

    pub fn priv_write(&mut self, slot: u8, private: &[u8]) -> Result<()> {
        self.begin(SeCommand::PrivWrite, Some(slot), private.len());
        let i = self.free_slot(slot)?;
        let public = soft::ecc_p256_public_from_private(private)?;
        let mut scalar = Zeroizing::new([0u8; ECC_PRIVATE_KEY_LEN]);
        scalar.copy_from_slice(private);
        self.slots[i] = DeviceSlot::EccPrivate { scalar, public };
        Ok(())
    }

    pub fn write_public(&mut self, slot: u8, point: &[u8]) -> Result<()> {
        self.begin(SeCommand::WritePublic, Some(slot), point.len());
        let i = self.free_slot(slot)?;
        soft::ecc_p256_validate_public(point)?;
        let mut p = [0u8; ECC_PUBLIC_KEY_LEN];
        p.copy_from_slice(point);
        self.slots[i] = DeviceSlot::EccPublic { point: p };
        Ok(())
    }

    pub fn get_public(&mut self, slot: u8) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
        self.begin(SeCommand::GetPublic, Some(slot), 0);
        match &self.slots[Self::slot_index(slot)?] {
            DeviceSlot::EccPrivate { public, .. } => Ok(*public),
            DeviceSlot::EccPublic { point } => Ok(*point),
            DeviceSlot::Empty => Err(Error::BadState),
            DeviceSlot::Symmetric { .. } => Err(Error::InvalidArgument),
        }
    }

    /// ECDSA over a 32-byte digest with the slot's private key.
    pub fn sign(&mut self, slot: u8, digest: &[u8; 32]) -> Result<[u8; ECDSA_SIGNATURE_LEN]> {
        self.begin(SeCommand::Sign, Some(slot), digest.len());
        match &self.slots[Self::slot_index(slot)?] {
            DeviceSlot::EccPrivate { scalar, .. } => soft::ecdsa_p256_sign_digest(scalar.as_ref(), digest),
            DeviceSlot::Empty => Err(Error::BadState),
            _ => Err(Error::InvalidArgument),
        }
    }

    pub fn verify(&mut self, slot: u8, digest: &[u8; 32], signature: &[u8]) -> Result<()> {
        self.begin(SeCommand::Verify, Some(slot), digest.len() + signature.len());
        let public = match &self.slots[Self::slot_index(slot)?] {
            DeviceSlot::EccPrivate { public, .. } => *public,
            DeviceSlot::EccPublic { point } => *point,
            DeviceSlot::Empty => return Err(Error::BadState),
            DeviceSlot::Symmetric { .. } => return Err(Error::InvalidArgument),
        };
        soft::ecdsa_p256_verify_digest(&public, digest, signature)
    }

    fn symmetric_key(&mut self, source: KeySource, want: SymmetricKind) -> Result<Zeroizing<Vec<u8>>> {
        match source {
            KeySource::TempKey => self.take_temp_key(),
            KeySource::Slot(slot) => match &self.slots[Self::slot_index(slot)?] {
                DeviceSlot::Symmetric { kind, data } if *kind == want => {
                    Ok(Zeroizing::new(data.to_vec()))
                }
                DeviceSlot::Empty => Err(Error::BadState),
                _ => Err(Error::InvalidArgument),
            },
        }
    }

    fn source_slot(source: KeySource) -> Option<u8> {
        match source {
            KeySource::Slot(s) => Some(s),
            KeySource::TempKey => None,
        }
    }

    /// HMAC-SHA-256 keyed by the full 32 (or 64) key bytes of the source.
    pub fn mac(&mut self, source: KeySource, message: &[u8]) -> Result<[u8; 32]> {
        self.begin(SeCommand::Mac, Self::source_slot(source), message.len());
        let key = self.symmetric_key(source, SymmetricKind::Hmac)?;
        Ok(soft::hmac_sha256(&key, message))
    }

    /// AES-128-CBC keyed by the first 16 bytes of the source.
    pub fn cipher(
        &mut self,
        source: KeySource,
        direction: CipherDirection,
        iv: &[u8; 16],
        input: &[u8],
        out: &mut [u8],
    ) -> Result<()> {
        self.begin(SeCommand::Cipher, Self::source_slot(source), input.len());
        let key = self.symmetric_key(source, SymmetricKind::Aes128)?;
        match direction {
            CipherDirection::Encrypt => soft::aes128_cbc_encrypt(&key[..16], iv, input, out),
            CipherDirection::Decrypt => soft::aes128_cbc_decrypt(&key[..16], iv, input, out),
        }
    }

    pub fn erase(&mut self, slot: u8) -> Result<()> {
        self.begin(SeCommand::Erase, Some(slot), 0);
        let i = Self::slot_index(slot)?;
        if matches!(self.slots[i], DeviceSlot::Empty) {
            return Err(Error::BadState);
        }
        self.slots[i] = DeviceSlot::Empty;
        Ok(())
    }

    pub fn log(&self) -> &[CommandRecord] {
        &self.log
    }

    pub fn clear_log(&mut self) {
        self.log.clear();
    }

    pub fn tempkey_valid(&self) -> bool {
        self.temp_key.is_some()
    }

    pub fn is_slot_occupied(&self, slot: u8) -> bool {
        Self::slot_index(slot).is_ok_and(|i| !matches!(self.slots[i], DeviceSlot::Empty))
    }

    /// Test-harness view of a slot's secret bytes. Not reachable through any command.
    pub fn peek_secret(&self, slot: u8) -> Option<Vec<u8>> {
        match &self.slots[Self::slot_index(slot).ok()?] {
            DeviceSlot::Symmetric { data, .. } => Some(data.to_vec()),
            DeviceSlot::EccPrivate { scalar, .. } => Some(scalar.to_vec()),
            _ => None,
        }
    }

    /// Secret bytes of every occupied slot.
    pub fn peek_all_secrets(&self) -> Vec<Vec<u8>> {
        (0..DEVICE_SLOT_COUNT as u8)
            .filter_map(|s| self.peek_secret(s))
            .collect()
    }
}
