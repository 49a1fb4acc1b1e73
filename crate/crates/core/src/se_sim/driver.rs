// SPDX-License-Identifier: Apache-2.0

//! Host-side driver for [`SimulatedSe`]: maps the generic SE interface onto device commands.

use std::sync::{Arc, Mutex, MutexGuard};

use zeroize::Zeroizing;

use super::device::{CipherDirection, KeySource, SimulatedSe, SymmetricKind, DEVICE_SLOT_COUNT};
use crate::backend::soft;
use crate::dispatch::{SeDriver, SeMethods, SeSlotRef};
use crate::error::{Error, Result};
use crate::instrument::measure_backend;
use crate::types::{Algorithm, KeyAttributes, KeyType};
use crate::{ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN};

/// TempKey transfer size used for imported symmetric keys.
pub const TEMPKEY_IMPORT_LEN: usize = 32;

/// Shared handle to a simulated device. Drivers and test harnesses hold clones.
pub type SharedDevice = Arc<Mutex<SimulatedSe>>;

pub struct SimSeDriver {
    device: SharedDevice,
    allocated: [bool; DEVICE_SLOT_COUNT],
}

impl SimSeDriver {
    pub fn new(device: SharedDevice) -> Self {
        SimSeDriver {
            device,
            allocated: [false; DEVICE_SLOT_COUNT],
        }
    }

    pub fn device(&self) -> &SharedDevice {
        &self.device
    }

    fn dev(&self) -> MutexGuard<'_, SimulatedSe> {
        self.device.lock().expect("device lock poisoned")
    }

    fn slot(slot: SeSlotRef) -> Result<u8> {
        if (slot.0 as usize) < DEVICE_SLOT_COUNT {
            Ok(slot.0 as u8)
        } else {
            Err(Error::InvalidArgument)
        }
    }

    fn release(&mut self, slot: SeSlotRef) {
        if let Some(a) = self.allocated.get_mut(slot.0 as usize) {
            *a = false;
        }
    }

    fn import_inner(&mut self, s: u8, attributes: &KeyAttributes, material: &[u8]) -> Result<()> {
        match attributes.key_type {
            KeyType::Aes | KeyType::Hmac => {
                let kind = if attributes.key_type == KeyType::Aes {
                    SymmetricKind::Aes128
                } else {
                    SymmetricKind::Hmac
                };
                if material.len() > TEMPKEY_IMPORT_LEN {
                    return Err(Error::NotSupported);
                }
                // TempKey accepts 32 or 64 bytes only
                let mut padded = Zeroizing::new([0u8; TEMPKEY_IMPORT_LEN]);
                padded[..material.len()].copy_from_slice(material);
                let mut dev = self.dev();
                measure_backend(|| dev.load_tempkey(padded.as_ref()))?;
                measure_backend(|| dev.store_tempkey(s, kind))
            }
            KeyType::EccKeyPair => {
                let mut dev = self.dev();
                measure_backend(|| dev.priv_write(s, material))
            }
            KeyType::EccPublicKey => {
                let mut dev = self.dev();
                measure_backend(|| dev.write_public(s, material))
            }
            KeyType::RawData => Err(Error::NotSupported),
        }
    }
}

fn check_alg(alg: Algorithm, want: Algorithm) -> Result<()> {
    if alg == want {
        Ok(())
    } else {
        Err(Error::NotSupported)
    }
}

impl SeDriver for SimSeDriver {
    fn methods(&self) -> SeMethods {
        SeMethods::all()
    }

    /// Lowest free device slot.
    fn allocate(&mut self, _attributes: &KeyAttributes) -> Result<SeSlotRef> {
        let i = self
            .allocated
            .iter()
            .position(|a| !a)
            .ok_or(Error::InsufficientStorage)?;
        self.allocated[i] = true;
        Ok(SeSlotRef(i as u32))
    }

    fn import_key(&mut self, slot: SeSlotRef, attributes: &KeyAttributes, material: &[u8]) -> Result<()> {
        let s = Self::slot(slot)?;
        let r = self.import_inner(s, attributes, material);
        if r.is_err() {
            self.release(slot);
        }
        r
    }

    fn generate_key(
        &mut self,
        slot: SeSlotRef,
        attributes: &KeyAttributes,
    ) -> Result<Option<[u8; ECC_PUBLIC_KEY_LEN]>> {
        let s = Self::slot(slot)?;
        let r = match attributes.key_type {
            KeyType::EccKeyPair => {
                let mut dev = self.dev();
                measure_backend(|| dev.genkey(s)).map(Some)
            }
            KeyType::Aes | KeyType::Hmac => {
                let kind = if attributes.key_type == KeyType::Aes {
                    SymmetricKind::Aes128
                } else {
                    SymmetricKind::Hmac
                };
                let mut dev = self.dev();
                measure_backend(|| dev.random_tempkey())
                    .and_then(|()| measure_backend(|| dev.store_tempkey(s, kind)))
                    .map(|()| None)
            }
            _ => Err(Error::NotSupported),
        };
        if r.is_err() {
            self.release(slot);
        }
        r
    }

    fn export_public_key(&mut self, slot: SeSlotRef) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
        let s = Self::slot(slot)?;
        let mut dev = self.dev();
        measure_backend(|| dev.get_public(s))
    }

    fn destroy_key(&mut self, slot: SeSlotRef) -> Result<()> {
        let s = Self::slot(slot)?;
        let r = {
            let mut dev = self.dev();
            measure_backend(|| dev.erase(s))
        };
        self.release(slot);
        r
    }

    fn sign_message(&mut self, slot: SeSlotRef, alg: Algorithm, message: &[u8]) -> Result<[u8; ECDSA_SIGNATURE_LEN]> {
        check_alg(alg, Algorithm::EcdsaP256Sha256)?;
        let s = Self::slot(slot)?;
        let digest = soft::sha256(message);
        let mut dev = self.dev();
        measure_backend(|| dev.sign(s, &digest))
    }

    fn verify_message(&mut self, slot: SeSlotRef, alg: Algorithm, message: &[u8], signature: &[u8]) -> Result<()> {
        check_alg(alg, Algorithm::EcdsaP256Sha256)?;
        let s = Self::slot(slot)?;
        if signature.len() != ECDSA_SIGNATURE_LEN {
            return Err(Error::InvalidArgument);
        }
        let digest = soft::sha256(message);
        let mut dev = self.dev();
        measure_backend(|| dev.verify(s, &digest, signature))
    }

    fn mac_compute(&mut self, slot: SeSlotRef, alg: Algorithm, message: &[u8]) -> Result<[u8; 32]> {
        check_alg(alg, Algorithm::HmacSha256)?;
        let s = Self::slot(slot)?;
        let mut dev = self.dev();
        measure_backend(|| dev.mac(KeySource::Slot(s), message))
    }

    fn cipher_encrypt(
        &mut self,
        slot: SeSlotRef,
        alg: Algorithm,
        iv: &[u8; 16],
        input: &[u8],
        out: &mut [u8],
    ) -> Result<()> {
        check_alg(alg, Algorithm::CbcNoPadding)?;
        let s = Self::slot(slot)?;
        let mut dev = self.dev();
        measure_backend(|| dev.cipher(KeySource::Slot(s), CipherDirection::Encrypt, iv, input, out))
    }

    fn cipher_decrypt(
        &mut self,
        slot: SeSlotRef,
        alg: Algorithm,
        iv: &[u8; 16],
        input: &[u8],
        out: &mut [u8],
    ) -> Result<()> {
        check_alg(alg, Algorithm::CbcNoPadding)?;
        let s = Self::slot(slot)?;
        let mut dev = self.dev();
        measure_backend(|| dev.cipher(KeySource::Slot(s), CipherDirection::Decrypt, iv, input, out))
    }
}
