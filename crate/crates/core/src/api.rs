// SPDX-License-Identifier: Apache-2.0

//! The identifier-based crypto API.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use zeroize::Zeroizing;

use crate::backend::{builtin_backends, soft, DeterministicPrng, RandomSource, SystemRng, TransparentBackend};
use crate::config::{BuildConfig, RngSource};
use crate::dispatch::{apis_for_key, resolve_hash_api, Dispatcher, Operation, SeDriver, SeRegistry, SeSlotRef};
use crate::error::{Error, Result};
use crate::instrument::CallCounters;
use crate::keystore::{KeyStore, SlotFill, SlotHandle, SlotMaterial, SlotRef, SlotVariant, SlotView};
use crate::se_sim::{shared_device, SharedDevice, SimSeDriver};
use crate::types::{Algorithm, KeyAttributes, KeyId, KeyType, Location, Usage};
use crate::{AES_BLOCK_LEN, CBC_IV_LEN, ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN, HMAC_SHA256_TAG_LEN, SHA256_DIGEST_LEN};

/// Output buffer size needed by the single-part operation using `alg` on `input_len`
/// bytes. For CBC this is the encryption size, IV prefix included.
pub const fn cipher_output_size(alg: Algorithm, input_len: usize) -> usize {
    match alg {
        Algorithm::CbcNoPadding => input_len + CBC_IV_LEN,
        Algorithm::HmacSha256 => HMAC_SHA256_TAG_LEN,
        Algorithm::Sha256 => SHA256_DIGEST_LEN,
        Algorithm::EcdsaP256Sha256 => ECDSA_SIGNATURE_LEN,
    }
}

/// Plaintext size recovered from `input_len` bytes of IV-prefixed CBC ciphertext.
pub const fn cipher_decrypt_output_size(input_len: usize) -> usize {
    input_len.saturating_sub(CBC_IV_LEN)
}

fn not_found_is_invalid(e: Error) -> Error {
    match e {
        Error::DoesNotExist => Error::InvalidHandle,
        e => e,
    }
}

fn zero_on_err<T>(out: &mut [u8], f: impl FnOnce(&mut [u8]) -> Result<T>) -> Result<T> {
    let r = f(out);
    if r.is_err() {
        out.fill(0);
    }
    r
}

fn check_policy(attrs: &KeyAttributes, required: Usage, alg: Algorithm) -> Result<()> {
    if !attrs.usage.contains(required) || attrs.algorithm != alg {
        return Err(Error::NotPermitted);
    }
    Ok(())
}

/// A read claim on a key. The key cannot be destroyed while a claim is held.
pub struct KeyClaim<'a> {
    store: &'a KeyStore,
    handle: Option<SlotHandle>,
}

impl KeyClaim<'_> {
    pub fn id(&self) -> KeyId {
        self.handle.expect("claim is live").id
    }

    fn view(&self) -> Result<SlotView> {
        self.store.read(self.handle.as_ref().expect("claim is live"))
    }

    /// Releases the claim, reporting a failed release.
    pub fn release(mut self) -> Result<()> {
        match self.handle.take() {
            Some(h) => self.store.release_slot(h),
            None => Ok(()),
        }
    }
}

impl Drop for KeyClaim<'_> {
    fn drop(&mut self) {
        if let Some(h) = self.handle.take() {
            let _ = self.store.release_slot(h);
        }
    }
}

pub struct CryptoBuilder {
    config: BuildConfig,
    backends: Vec<Arc<dyn TransparentBackend>>,
    drivers: Vec<(Location, Box<dyn SeDriver>)>,
    rng: Option<Box<dyn RandomSource>>,
}

impl CryptoBuilder {
    /// Adds a transparent backend next to the built-in ones. Assignments in the
    /// configuration may name it.
    pub fn with_backend(mut self, backend: Arc<dyn TransparentBackend>) -> Self {
        self.backends.push(backend);
        self
    }

    /// Registers an extra opaque driver at init.
    pub fn with_driver(mut self, location: Location, driver: Box<dyn SeDriver>) -> Self {
        self.drivers.push((location, driver));
        self
    }

    /// Replaces the configured random source.
    pub fn with_rng(mut self, rng: Box<dyn RandomSource>) -> Self {
        self.rng = Some(rng);
        self
    }

    /// Initializes the library: sizes the key store and registers every driver.
    pub fn init(self) -> Result<Crypto> {
        self.config.validate().map_err(|e| e.status())?;
        let mut backends = builtin_backends(&self.config.accelerator_apis);
        backends.extend(self.backends);

        let mut registry = SeRegistry::new(self.config.max_se_devices);
        let mut devices = BTreeMap::new();
        for dev in &self.config.se_devices {
            let shared = shared_device(dev.location.value(), &self.config.prng_seed, dev.latency.clone());
            registry.register(dev.location, Box::new(SimSeDriver::new(shared.clone())))?;
            devices.insert(dev.location, shared);
        }
        for (location, driver) in self.drivers {
            registry.register(location, driver)?;
        }

        let dispatcher = Dispatcher::new(backends, self.config.assignment.clone(), registry)?;
        let rng: Box<dyn RandomSource> = match self.rng {
            Some(r) => r,
            None => match self.config.rng {
                RngSource::Deterministic => Box::new(DeterministicPrng::new(self.config.prng_seed)),
                RngSource::System => Box::new(SystemRng),
            },
        };
        Ok(Crypto {
            store: KeyStore::new(self.config.layout()),
            config: self.config,
            dispatcher,
            rng: Mutex::new(rng),
            devices,
        })
    }
}

pub struct Crypto {
    config: BuildConfig,
    store: KeyStore,
    dispatcher: Dispatcher,
    rng: Mutex<Box<dyn RandomSource>>,
    devices: BTreeMap<Location, SharedDevice>,
}

impl Crypto {
    pub fn builder(config: BuildConfig) -> CryptoBuilder {
        CryptoBuilder {
            config,
            backends: Vec::new(),
            drivers: Vec::new(),
            rng: None,
        }
    }

    pub fn init(config: BuildConfig) -> Result<Self> {
        Self::builder(config).init()
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn key_store(&self) -> &KeyStore {
        &self.store
    }

    pub fn dispatcher(&self) -> &Dispatcher {
        &self.dispatcher
    }

    pub fn counters(&self) -> &CallCounters {
        self.dispatcher.counters()
    }

    /// Simulated device registered from the configuration at `location`.
    pub fn device(&self, location: Location) -> Option<&SharedDevice> {
        self.devices.get(&location)
    }

    /// Drivers are registered during init only.
    pub fn register_se_driver(&self, _location: Location, _driver: Box<dyn SeDriver>) -> Result<()> {
        Err(Error::BadState)
    }

    fn random(&self, out: &mut [u8]) -> Result<()> {
        self.rng.lock().expect("rng lock poisoned").fill(out)
    }

    /// Takes a read claim on `id`.
    pub fn claim(&self, id: KeyId) -> Result<KeyClaim<'_>> {
        let handle = self.store.find_slot(id).map_err(not_found_is_invalid)?;
        Ok(KeyClaim {
            store: &self.store,
            handle: Some(handle),
        })
    }

    fn with_key<T>(&self, id: KeyId, f: impl FnOnce(&SlotView) -> Result<T>) -> Result<T> {
        let claim = self.claim(id)?;
        let view = claim.view()?;
        let r = f(&view);
        claim.release()?;
        r
    }

    pub fn get_attributes(&self, id: KeyId) -> Result<KeyAttributes> {
        self.with_key(id, |v| Ok(v.attributes))
    }

    /// Checks that some enabled entry point can use a key with `attrs`.
    fn check_supported(&self, attrs: &KeyAttributes) -> Result<()> {
        if attrs.key_type == KeyType::RawData {
            return Ok(());
        }
        let apis = apis_for_key(attrs.key_type, attrs.bits, attrs.algorithm);
        if apis.iter().any(|a| self.dispatcher.is_enabled(*a)) {
            Ok(())
        } else {
            Err(Error::NotSupported)
        }
    }

    fn local_variant(&self, attrs: &KeyAttributes, len: usize) -> Result<SlotVariant> {
        if attrs.key_type == KeyType::EccKeyPair {
            return Ok(SlotVariant::KeyPair);
        }
        if len > self.store.layout().single_key_size {
            return Err(Error::NotSupported);
        }
        Ok(SlotVariant::Single)
    }

    fn check_location(&self, location: Location) -> Result<()> {
        if location == Location::LOCAL || location == Location::ACCELERATOR {
            Ok(())
        } else if location.is_secure_element() {
            self.dispatcher.se_entry(location).map(|_| ())
        } else {
            Err(Error::InvalidArgument)
        }
    }

    /// Imports plain key material.
    pub fn import_key(&self, attributes: &KeyAttributes, material: &[u8]) -> Result<KeyId> {
        let len = attributes.material_len()?;
        if material.len() != len {
            return Err(Error::InvalidArgument);
        }
        self.check_supported(attributes)?;
        self.check_location(attributes.location)?;
        let public = match attributes.key_type {
            KeyType::EccKeyPair => Some(soft::ecc_p256_public_from_private(material)?),
            KeyType::EccPublicKey => {
                soft::ecc_p256_validate_public(material)?;
                None
            }
            _ => None,
        };
        if attributes.location.is_secure_element() {
            return self.import_protected(attributes, material, public);
        }
        let variant = self.local_variant(attributes, len)?;
        let (r, id) = self.store.allocate_slot(variant, attributes)?;
        let fill = match &public {
            Some(p) => SlotFill::Pair {
                private: material,
                public: p,
            },
            None => SlotFill::Single(material),
        };
        self.commit_or_abort(r, fill)?;
        Ok(id)
    }

    fn commit_or_abort(&self, r: SlotRef, fill: SlotFill<'_>) -> Result<()> {
        self.store.commit_slot(r, fill).inspect_err(|_| self.store.abort_slot(r))
    }

    fn import_protected(
        &self,
        attributes: &KeyAttributes,
        material: &[u8],
        pair_public: Option<[u8; ECC_PUBLIC_KEY_LEN]>,
    ) -> Result<KeyId> {
        let (r, id) = self.store.allocate_slot(SlotVariant::Protected, attributes)?;
        let provisioned = self
            .dispatcher
            .se_allocate(attributes)
            .and_then(|key_ref| {
                self.dispatcher
                    .se_import(key_ref, attributes, material)
                    .map(|()| key_ref)
            });
        let key_ref = provisioned.inspect_err(|_| self.store.abort_slot(r))?;
        let public = match attributes.key_type {
            KeyType::EccKeyPair => pair_public.as_ref().map(|p| p.as_slice()),
            KeyType::EccPublicKey => Some(material),
            _ => None,
        };
        self.finish_protected(r, attributes.location, key_ref, public)?;
        Ok(id)
    }

    fn finish_protected(&self, r: SlotRef, location: Location, key_ref: SeSlotRef, public: Option<&[u8]>) -> Result<()> {
        self.commit_or_abort(r, SlotFill::Protected { key_ref, public })
            .inspect_err(|_| {
                let _ = self.dispatcher.se_destroy(location, key_ref);
            })
    }

    /// Generates a new key where its attributes say it lives.
    pub fn generate_key(&self, attributes: &KeyAttributes) -> Result<KeyId> {
        if !matches!(attributes.key_type, KeyType::Aes | KeyType::Hmac | KeyType::EccKeyPair) {
            return Err(Error::NotSupported);
        }
        let len = attributes.material_len()?;
        self.check_supported(attributes)?;
        self.check_location(attributes.location)?;

        if attributes.location.is_secure_element() {
            let (r, id) = self.store.allocate_slot(SlotVariant::Protected, attributes)?;
            let generated = self.dispatcher.se_allocate(attributes).and_then(|key_ref| {
                self.dispatcher
                    .se_generate(key_ref, attributes)
                    .map(|public| (key_ref, public))
            });
            let (key_ref, public) = generated.inspect_err(|_| self.store.abort_slot(r))?;
            self.finish_protected(r, attributes.location, key_ref, public.as_ref().map(|p| p.as_slice()))?;
            return Ok(id);
        }

        let variant = self.local_variant(attributes, len)?;
        let (r, id) = self.store.allocate_slot(variant, attributes)?;
        let result = if attributes.key_type == KeyType::EccKeyPair {
            let mut rng = self.rng.lock().expect("rng lock poisoned");
            self.dispatcher
                .generate_pair(attributes.location, rng.as_mut())
                .and_then(|pair| {
                    self.store.commit_slot(
                        r,
                        SlotFill::Pair {
                            private: pair.private.as_ref(),
                            public: &pair.public,
                        },
                    )
                })
        } else {
            let mut key = Zeroizing::new(vec![0u8; len]);
            self.random(&mut key)
                .and_then(|()| self.store.commit_slot(r, SlotFill::Single(&key)))
        };
        result.inspect_err(|_| self.store.abort_slot(r))?;
        Ok(id)
    }

    /// Duplicates a local key under new attributes. The new usage is the intersection of
    /// both policies.
    pub fn copy_key(&self, source: KeyId, new_attributes: &KeyAttributes) -> Result<KeyId> {
        let (attrs, material) = self.with_key(source, |v| {
            if !v.attributes.usage.contains(Usage::COPY) {
                return Err(Error::NotPermitted);
            }
            if v.attributes.location.is_secure_element() {
                return Err(Error::NotSupported);
            }
            let a = &v.attributes;
            let n = new_attributes;
            if n.key_type != a.key_type || n.bits != a.bits || n.algorithm != a.algorithm {
                return Err(Error::InvalidArgument);
            }
            let material = match &v.material {
                SlotMaterial::Plain(k) => Zeroizing::new(k.to_vec()),
                SlotMaterial::Pair { private, .. } => Zeroizing::new(private.to_vec()),
                SlotMaterial::Protected { .. } => return Err(Error::CorruptionDetected),
            };
            let attrs = KeyAttributes {
                usage: a.usage & n.usage,
                ..*n
            };
            Ok((attrs, material))
        })?;
        self.import_key(&attrs, &material)
    }

    /// Exports plain key material. Key pairs export their private scalar.
    pub fn export_key(&self, id: KeyId, out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                if v.attributes.location.is_secure_element() || !v.attributes.usage.contains(Usage::EXPORT) {
                    return Err(Error::NotPermitted);
                }
                let bytes: &[u8] = match &v.material {
                    SlotMaterial::Plain(k) => k,
                    SlotMaterial::Pair { private, .. } => private,
                    SlotMaterial::Protected { .. } => return Err(Error::NotPermitted),
                };
                let dst = out.get_mut(..bytes.len()).ok_or(Error::BufferTooSmall)?;
                dst.copy_from_slice(bytes);
                Ok(bytes.len())
            })
        })
    }

    /// Writes the uncompressed public point of an ECC key. No usage flag is needed.
    pub fn export_public_key(&self, id: KeyId, out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                if !v.attributes.key_type.is_ecc() {
                    return Err(Error::InvalidArgument);
                }
                let dst = out.get_mut(..ECC_PUBLIC_KEY_LEN).ok_or(Error::BufferTooSmall)?;
                match &v.material {
                    SlotMaterial::Plain(p) => dst.copy_from_slice(p),
                    SlotMaterial::Pair { public, .. } => dst.copy_from_slice(public),
                    SlotMaterial::Protected { public: Some(p), .. } => dst.copy_from_slice(p),
                    SlotMaterial::Protected { key_ref, public: None } => {
                        let p = self.dispatcher.se_export_public(v.attributes.location, *key_ref)?;
                        dst.copy_from_slice(&p);
                    }
                }
                Ok(ECC_PUBLIC_KEY_LEN)
            })
        })
    }

    /// Wipes the key and frees its slot. Fails with `BAD_STATE` while a claim is held.
    pub fn destroy_key(&self, id: KeyId) -> Result<()> {
        let view = self.store.remove(id).map_err(not_found_is_invalid)?;
        if let SlotMaterial::Protected { key_ref, .. } = view.material {
            self.dispatcher.se_destroy(view.attributes.location, key_ref)?;
        }
        Ok(())
    }

    /// CBC encryption. `out` receives a fresh IV followed by the ciphertext.
    pub fn cipher_encrypt(&self, id: KeyId, alg: Algorithm, plaintext: &[u8], out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                check_policy(&v.attributes, Usage::ENCRYPT, alg)?;
                if alg != Algorithm::CbcNoPadding || !plaintext.len().is_multiple_of(AES_BLOCK_LEN) {
                    return Err(Error::InvalidArgument);
                }
                let total = cipher_output_size(alg, plaintext.len());
                let out = out.get_mut(..total).ok_or(Error::BufferTooSmall)?;
                let (iv_out, ct) = out.split_at_mut(CBC_IV_LEN);
                let mut iv = [0u8; CBC_IV_LEN];
                self.random(&mut iv)?;
                iv_out.copy_from_slice(&iv);
                self.dispatcher.dispatch(
                    Operation::Encrypt {
                        iv: &iv,
                        input: plaintext,
                        output: ct,
                    },
                    v,
                )?;
                Ok(total)
            })
        })
    }

    /// CBC decryption of IV-prefixed input.
    pub fn cipher_decrypt(&self, id: KeyId, alg: Algorithm, input: &[u8], out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                check_policy(&v.attributes, Usage::DECRYPT, alg)?;
                if alg != Algorithm::CbcNoPadding
                    || input.len() < CBC_IV_LEN
                    || !(input.len() - CBC_IV_LEN).is_multiple_of(AES_BLOCK_LEN)
                {
                    return Err(Error::InvalidArgument);
                }
                let (iv, ct) = input.split_at(CBC_IV_LEN);
                let iv: &[u8; CBC_IV_LEN] = iv.try_into().expect("split at IV length");
                let pt = out.get_mut(..ct.len()).ok_or(Error::BufferTooSmall)?;
                self.dispatcher.dispatch(
                    Operation::Decrypt {
                        iv,
                        input: ct,
                        output: pt,
                    },
                    v,
                )?;
                Ok(ct.len())
            })
        })
    }

    pub fn mac_compute(&self, id: KeyId, alg: Algorithm, message: &[u8], out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                check_policy(&v.attributes, Usage::SIGN_MESSAGE, alg)?;
                let dst = out.get_mut(..HMAC_SHA256_TAG_LEN).ok_or(Error::BufferTooSmall)?;
                let mut tag = [0u8; HMAC_SHA256_TAG_LEN];
                self.dispatcher.dispatch(Operation::MacCompute { message, tag: &mut tag }, v)?;
                dst.copy_from_slice(&tag);
                Ok(HMAC_SHA256_TAG_LEN)
            })
        })
    }

    /// Recomputes the tag and compares in constant time. Only full-length tags are
    /// accepted.
    pub fn mac_verify(&self, id: KeyId, alg: Algorithm, message: &[u8], tag: &[u8]) -> Result<()> {
        self.with_key(id, |v| {
            check_policy(&v.attributes, Usage::VERIFY_MESSAGE, alg)?;
            let tag: &[u8; HMAC_SHA256_TAG_LEN] = tag.try_into().map_err(|_| Error::InvalidArgument)?;
            self.dispatcher.dispatch(Operation::MacVerify { message, tag }, v)
        })
    }

    pub fn hash_compute(&self, alg: Algorithm, message: &[u8], out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            let api = resolve_hash_api(alg)?;
            if !self.dispatcher.is_enabled(api) {
                return Err(Error::NotSupported);
            }
            let dst = out.get_mut(..SHA256_DIGEST_LEN).ok_or(Error::BufferTooSmall)?;
            let digest = self.dispatcher.hash(api, message)?;
            dst.copy_from_slice(&digest);
            Ok(SHA256_DIGEST_LEN)
        })
    }

    /// ECDSA over SHA-256(message); 64-byte r || s.
    pub fn sign_message(&self, id: KeyId, alg: Algorithm, message: &[u8], out: &mut [u8]) -> Result<usize> {
        zero_on_err(out, |out| {
            self.with_key(id, |v| {
                check_policy(&v.attributes, Usage::SIGN_MESSAGE, alg)?;
                if v.attributes.key_type != KeyType::EccKeyPair {
                    return Err(Error::InvalidArgument);
                }
                let dst = out.get_mut(..ECDSA_SIGNATURE_LEN).ok_or(Error::BufferTooSmall)?;
                let mut sig = [0u8; ECDSA_SIGNATURE_LEN];
                self.dispatcher.dispatch(
                    Operation::Sign {
                        message,
                        signature: &mut sig,
                    },
                    v,
                )?;
                dst.copy_from_slice(&sig);
                Ok(ECDSA_SIGNATURE_LEN)
            })
        })
    }

    pub fn verify_message(&self, id: KeyId, alg: Algorithm, message: &[u8], signature: &[u8]) -> Result<()> {
        self.with_key(id, |v| {
            check_policy(&v.attributes, Usage::VERIFY_MESSAGE, alg)?;
            if !v.attributes.key_type.is_ecc() || signature.len() != ECDSA_SIGNATURE_LEN {
                return Err(Error::InvalidArgument);
            }
            self.dispatcher.dispatch(Operation::Verify { message, signature }, v)
        })
    }
}
