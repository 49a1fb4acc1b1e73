// SPDX-License-Identifier: Apache-2.0

//! Generic secure-element interface and the driver registry.

use std::sync::{Mutex, MutexGuard};

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::types::{Algorithm, KeyAttributes, Location};
use crate::{ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN};

/// Reference to a key slot inside a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeSlotRef(pub u32);

bitflags! {
    /// Methods of the generic interface a driver provides. Calling an absent one yields
    /// `NOT_SUPPORTED` without reaching the driver.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct SeMethods: u32 {
        const ALLOCATE = 1 << 0;
        const IMPORT = 1 << 1;
        const GENERATE = 1 << 2;
        const EXPORT_PUBLIC = 1 << 3;
        const DESTROY = 1 << 4;
        const SIGN = 1 << 5;
        const VERIFY = 1 << 6;
        const MAC = 1 << 7;
        const CIPHER = 1 << 8;
    }
}

/// Opaque driver contract. Keys are addressed only through [`SeSlotRef`]; no method returns
/// private key material.
pub trait SeDriver: Send {
    fn methods(&self) -> SeMethods;

    /// Called once at registration.
    fn init(&mut self) -> Result<()> {
        Ok(())
    }

    /// Picks a free device slot suitable for a key with `attributes`.
    fn allocate(&mut self, _attributes: &KeyAttributes) -> Result<SeSlotRef> {
        Err(Error::NotSupported)
    }

    /// Provisions plain material into a device slot.
    fn import_key(&mut self, _slot: SeSlotRef, _attributes: &KeyAttributes, _material: &[u8]) -> Result<()> {
        Err(Error::NotSupported)
    }

    /// Generates a key inside the device. Key pairs return their public half.
    fn generate_key(
        &mut self,
        _slot: SeSlotRef,
        _attributes: &KeyAttributes,
    ) -> Result<Option<[u8; ECC_PUBLIC_KEY_LEN]>> {
        Err(Error::NotSupported)
    }

    fn export_public_key(&mut self, _slot: SeSlotRef) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
        Err(Error::NotSupported)
    }

    fn destroy_key(&mut self, _slot: SeSlotRef) -> Result<()> {
        Err(Error::NotSupported)
    }

    fn sign_message(&mut self, _slot: SeSlotRef, _alg: Algorithm, _message: &[u8]) -> Result<[u8; ECDSA_SIGNATURE_LEN]> {
        Err(Error::NotSupported)
    }

    fn verify_message(&mut self, _slot: SeSlotRef, _alg: Algorithm, _message: &[u8], _signature: &[u8]) -> Result<()> {
        Err(Error::NotSupported)
    }

    fn mac_compute(&mut self, _slot: SeSlotRef, _alg: Algorithm, _message: &[u8]) -> Result<[u8; 32]> {
        Err(Error::NotSupported)
    }

    fn cipher_encrypt(
        &mut self,
        _slot: SeSlotRef,
        _alg: Algorithm,
        _iv: &[u8; 16],
        _input: &[u8],
        _out: &mut [u8],
    ) -> Result<()> {
        Err(Error::NotSupported)
    }

    fn cipher_decrypt(
        &mut self,
        _slot: SeSlotRef,
        _alg: Algorithm,
        _iv: &[u8; 16],
        _input: &[u8],
        _out: &mut [u8],
    ) -> Result<()> {
        Err(Error::NotSupported)
    }
}

/// One registered device: its location, declared methods and driver context.
pub struct SeDriverEntry {
    location: Location,
    methods: SeMethods,
    route: String,
    driver: Mutex<Box<dyn SeDriver>>,
}

impl SeDriverEntry {
    pub fn location(&self) -> Location {
        self.location
    }

    pub fn methods(&self) -> SeMethods {
        self.methods
    }

    pub(crate) fn route(&self) -> &str {
        &self.route
    }

    /// Exclusive access to the driver; one command in flight per device.
    pub(crate) fn driver(&self, needed: SeMethods) -> Result<MutexGuard<'_, Box<dyn SeDriver>>> {
        if !self.methods.contains(needed) {
            return Err(Error::NotSupported);
        }
        Ok(self.driver.lock().expect("driver lock poisoned"))
    }
}

/// Global driver list. Filled during initialization, read-only afterwards.
pub struct SeRegistry {
    entries: Vec<SeDriverEntry>,
    capacity: usize,
}

impl SeRegistry {
    pub const DEFAULT_CAPACITY: usize = 4;

    pub fn new(capacity: usize) -> Self {
        SeRegistry {
            entries: Vec::with_capacity(capacity),
            capacity,
        }
    }

    /// Adds a driver and runs its `init` method. A driver whose init fails is not
    /// registered and the failure is returned.
    pub fn register(&mut self, location: Location, mut driver: Box<dyn SeDriver>) -> Result<()> {
        if !location.is_secure_element() {
            return Err(Error::InvalidArgument);
        }
        if self.entries.iter().any(|e| e.location == location) {
            return Err(Error::AlreadyExists);
        }
        if self.entries.len() >= self.capacity {
            return Err(Error::InsufficientStorage);
        }
        driver.init()?;
        self.entries.push(SeDriverEntry {
            location,
            methods: driver.methods(),
            route: crate::instrument::se_route(location),
            driver: Mutex::new(driver),
        });
        Ok(())
    }

    /// Driver registered at `location`, found by walking the list.
    pub fn get(&self, location: Location) -> Result<&SeDriverEntry> {
        self.entries
            .iter()
            .find(|e| e.location == location)
            .ok_or(Error::DoesNotExist)
    }

    pub fn locations(&self) -> impl Iterator<Item = Location> + '_ {
        self.entries.iter().map(|e| e.location)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
