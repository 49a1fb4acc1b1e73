// SPDX-License-Identifier: Apache-2.0

//! Routing of operations to backends.
//!
//! The location dispatcher looks at where a key lives. Secure-element keys go to the
//! driver registered for that location together with the device slot reference. All
//! other keys go through the algorithm dispatcher, which resolves the algorithm-specific
//! API and hands the plain key material to the backend configured for it.

mod api;
mod se;

use std::collections::BTreeMap;
use std::sync::Arc;

use subtle::ConstantTimeEq;

pub use api::{apis_for_key, resolve_algo_api, resolve_hash_api, AlgoApi, Direction};
pub use se::{SeDriver, SeDriverEntry, SeMethods, SeRegistry, SeSlotRef};

use crate::backend::{EccKeyPair, RandomSource, TransparentBackend, ACCELERATOR};
use crate::error::{Error, Result};
use crate::instrument::{measure_backend, CallCounters};
use crate::keystore::{SlotMaterial, SlotView};
use crate::types::{KeyAttributes, Location};
use crate::{ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN};

/// A keyed single-part operation and its buffers.
pub enum Operation<'a> {
    Encrypt {
        iv: &'a [u8; 16],
        input: &'a [u8],
        output: &'a mut [u8],
    },
    Decrypt {
        iv: &'a [u8; 16],
        input: &'a [u8],
        output: &'a mut [u8],
    },
    MacCompute {
        message: &'a [u8],
        tag: &'a mut [u8; 32],
    },
    MacVerify {
        message: &'a [u8],
        tag: &'a [u8; 32],
    },
    Sign {
        message: &'a [u8],
        signature: &'a mut [u8; ECDSA_SIGNATURE_LEN],
    },
    Verify {
        message: &'a [u8],
        signature: &'a [u8],
    },
}

impl Operation<'_> {
    pub fn direction(&self) -> Direction {
        match self {
            Operation::Encrypt { .. } => Direction::Encrypt,
            Operation::Decrypt { .. } => Direction::Decrypt,
            Operation::MacCompute { .. } => Direction::Compute,
            Operation::MacVerify { .. } => Direction::Verify,
            Operation::Sign { .. } => Direction::Sign,
            Operation::Verify { .. } => Direction::Verify,
        }
    }
}

fn tags_match(a: &[u8; 32], b: &[u8; 32]) -> Result<()> {
    if bool::from(a.ct_eq(b)) {
        Ok(())
    } else {
        Err(Error::InvalidSignature)
    }
}

pub struct Dispatcher {
    backends: BTreeMap<String, Arc<dyn TransparentBackend>>,
    assignment: BTreeMap<AlgoApi, String>,
    registry: SeRegistry,
    counters: CallCounters,
}

impl Dispatcher {
    /// `assignment` lists the enabled entry points and the backend label serving each.
    pub fn new(
        backends: Vec<Arc<dyn TransparentBackend>>,
        assignment: BTreeMap<AlgoApi, String>,
        registry: SeRegistry,
    ) -> Result<Self> {
        let backends: BTreeMap<String, Arc<dyn TransparentBackend>> = backends
            .into_iter()
            .map(|b| (b.label().to_string(), b))
            .collect();
        for (api, label) in &assignment {
            let b = backends.get(label).ok_or(Error::InvalidArgument)?;
            if !b.implements(*api) {
                return Err(Error::InvalidArgument);
            }
        }
        let routes = backends
            .keys()
            .cloned()
            .chain(registry.locations().map(crate::instrument::se_route));
        let counters = CallCounters::new(routes.collect::<Vec<_>>());
        Ok(Dispatcher {
            backends,
            assignment,
            registry,
            counters,
        })
    }

    pub fn counters(&self) -> &CallCounters {
        &self.counters
    }

    pub fn registry(&self) -> &SeRegistry {
        &self.registry
    }

    pub fn is_enabled(&self, api: AlgoApi) -> bool {
        self.assignment.contains_key(&api)
    }

    pub fn assignment(&self) -> &BTreeMap<AlgoApi, String> {
        &self.assignment
    }

    pub fn backends(&self) -> impl Iterator<Item = &Arc<dyn TransparentBackend>> {
        self.backends.values()
    }

    /// Backend serving `api` for keys at a non-SE `location`.
    pub fn backend_for(&self, api: AlgoApi, location: Location) -> Result<&dyn TransparentBackend> {
        let assigned = self.assignment.get(&api).ok_or(Error::NotSupported)?;
        let label = if location == Location::ACCELERATOR {
            ACCELERATOR
        } else if location == Location::LOCAL {
            assigned.as_str()
        } else {
            return Err(Error::DoesNotExist);
        };
        let backend = self.backends.get(label).ok_or(Error::NotSupported)?;
        if !backend.implements(api) {
            return Err(Error::NotSupported);
        }
        Ok(backend.as_ref())
    }

    /// Driver entry registered at an SE location.
    pub fn se_entry(&self, location: Location) -> Result<&SeDriverEntry> {
        self.registry.get(location)
    }

    /// Routes a keyed operation. The caller holds a read claim on the slot `key` was
    /// copied from and has already checked the usage policy.
    pub fn dispatch(&self, op: Operation<'_>, key: &SlotView) -> Result<()> {
        let attrs = &key.attributes;
        let api = resolve_algo_api(attrs.key_type, attrs.bits, attrs.algorithm, op.direction())?;
        if !self.is_enabled(api) {
            return Err(Error::NotSupported);
        }
        if attrs.location.is_secure_element() {
            return self.dispatch_se(op, key);
        }
        let backend = self.backend_for(api, attrs.location)?;
        self.counters.hit(backend.label());
        match (&key.material, op) {
            (SlotMaterial::Plain(k), Operation::Encrypt { iv, input, output }) => {
                measure_backend(|| backend.cipher_cbc_encrypt(k, iv, input, output))
            }
            (SlotMaterial::Plain(k), Operation::Decrypt { iv, input, output }) => {
                measure_backend(|| backend.cipher_cbc_decrypt(k, iv, input, output))
            }
            (SlotMaterial::Plain(k), Operation::MacCompute { message, tag }) => {
                *tag = measure_backend(|| backend.hmac_sha256(k, message))?;
                Ok(())
            }
            (SlotMaterial::Plain(k), Operation::MacVerify { message, tag }) => {
                let expected = measure_backend(|| backend.hmac_sha256(k, message))?;
                tags_match(&expected, tag)
            }
            (SlotMaterial::Pair { private, .. }, Operation::Sign { message, signature }) => {
                *signature = measure_backend(|| backend.ecdsa_p256_sign(private, message))?;
                Ok(())
            }
            (SlotMaterial::Pair { public, .. }, Operation::Verify { message, signature }) => {
                measure_backend(|| backend.ecdsa_p256_verify(public, message, signature))
            }
            (SlotMaterial::Plain(public), Operation::Verify { message, signature }) => {
                measure_backend(|| backend.ecdsa_p256_verify(public, message, signature))
            }
            _ => Err(Error::InvalidArgument),
        }
    }

    fn dispatch_se(&self, op: Operation<'_>, key: &SlotView) -> Result<()> {
        let SlotMaterial::Protected { key_ref, .. } = key.material else {
            return Err(Error::CorruptionDetected);
        };
        let entry = self.registry.get(key.attributes.location)?;
        let alg = key.attributes.algorithm;
        let needed = match &op {
            Operation::Encrypt { .. } | Operation::Decrypt { .. } => SeMethods::CIPHER,
            Operation::MacCompute { .. } | Operation::MacVerify { .. } => SeMethods::MAC,
            Operation::Sign { .. } => SeMethods::SIGN,
            Operation::Verify { .. } => SeMethods::VERIFY,
        };
        let mut driver = entry.driver(needed)?;
        self.counters.hit(entry.route());
        match op {
            Operation::Encrypt { iv, input, output } => driver.cipher_encrypt(key_ref, alg, iv, input, output),
            Operation::Decrypt { iv, input, output } => driver.cipher_decrypt(key_ref, alg, iv, input, output),
            Operation::MacCompute { message, tag } => {
                *tag = driver.mac_compute(key_ref, alg, message)?;
                Ok(())
            }
            Operation::MacVerify { message, tag } => {
                let expected = driver.mac_compute(key_ref, alg, message)?;
                tags_match(&expected, tag)
            }
            Operation::Sign { message, signature } => {
                *signature = driver.sign_message(key_ref, alg, message)?;
                Ok(())
            }
            Operation::Verify { message, signature } => driver.verify_message(key_ref, alg, message, signature),
        }
    }

    /// Unkeyed hash through the algorithm dispatcher.
    pub fn hash(&self, api: AlgoApi, message: &[u8]) -> Result<[u8; 32]> {
        let backend = self.backend_for(api, Location::LOCAL)?;
        self.counters.hit(backend.label());
        measure_backend(|| backend.sha256(message))
    }

    /// Local or accelerator key-pair generation.
    pub fn generate_pair(&self, location: Location, rng: &mut dyn RandomSource) -> Result<EccKeyPair> {
        let backend = self.backend_for(AlgoApi::EccP256Generate, location)?;
        self.counters.hit(backend.label());
        measure_backend(|| backend.ecc_p256_generate(rng))
    }

    pub fn se_allocate(&self, attrs: &KeyAttributes) -> Result<SeSlotRef> {
        let entry = self.registry.get(attrs.location)?;
        let mut driver = entry.driver(SeMethods::ALLOCATE)?;
        driver.allocate(attrs)
    }

    pub fn se_import(&self, slot: SeSlotRef, attrs: &KeyAttributes, material: &[u8]) -> Result<()> {
        let entry = self.registry.get(attrs.location)?;
        let mut driver = entry.driver(SeMethods::IMPORT)?;
        self.counters.hit(entry.route());
        driver.import_key(slot, attrs, material)
    }

    pub fn se_generate(&self, slot: SeSlotRef, attrs: &KeyAttributes) -> Result<Option<[u8; ECC_PUBLIC_KEY_LEN]>> {
        let entry = self.registry.get(attrs.location)?;
        let mut driver = entry.driver(SeMethods::GENERATE)?;
        self.counters.hit(entry.route());
        driver.generate_key(slot, attrs)
    }

    pub fn se_export_public(&self, location: Location, slot: SeSlotRef) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
        let entry = self.registry.get(location)?;
        let mut driver = entry.driver(SeMethods::EXPORT_PUBLIC)?;
        self.counters.hit(entry.route());
        driver.export_public_key(slot)
    }

    pub fn se_destroy(&self, location: Location, slot: SeSlotRef) -> Result<()> {
        let entry = self.registry.get(location)?;
        let mut driver = entry.driver(SeMethods::DESTROY)?;
        self.counters.hit(entry.route());
        driver.destroy_key(slot)
    }
}
