// SPDX-License-Identifier: Apache-2.0

//! Configuration resolution.
//!
//! A platform profile declares hardware capability symbols, an application request names
//! the entry points it needs and optional slot counts, and user overrides pin individual
//! entry points to a backend. [`resolve`] turns these into a [`BuildConfig`]:
//!
//! * an override wins,
//! * otherwise a declared hardware capability selects the accelerator,
//! * otherwise the software backend is used.
//!
//! Entry points the application does not request are absent from the result and cannot
//! be dispatched.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

pub use parse::parse_seed;

use crate::backend::{builtin_backends, TransparentBackend, ACCELERATOR, SOFTWARE};
use crate::dispatch::{AlgoApi, SeRegistry};
use crate::error::Error;
use crate::keystore::KeyStoreLayout;
use crate::se_sim::LatencyTable;
use crate::types::Location;

/// Capability symbols understood by the resolver and the entry points each one covers.
pub const CAPABILITY_SYMBOLS: [(&str, &[AlgoApi]); 4] = [
    (
        "HAS_PERIPH_CIPHER_AES_128_CBC",
        &[AlgoApi::CipherCbcAes128Encrypt, AlgoApi::CipherCbcAes128Decrypt],
    ),
    (
        "HAS_PERIPH_HMAC_SHA_256",
        &[AlgoApi::HmacSha256Compute, AlgoApi::HmacSha256Verify],
    ),
    ("HAS_PERIPH_HASH_SHA_256", &[AlgoApi::Sha256Compute]),
    (
        "HAS_PERIPH_ECC_P256",
        &[AlgoApi::EccP256Generate, AlgoApi::EcdsaP256Sign, AlgoApi::EcdsaP256Verify],
    ),
];

/// Slot counts used when the application does not give one and the slot type is needed.
pub const DEFAULT_SINGLE_COUNT: usize = 5;
pub const DEFAULT_KEYPAIR_COUNT: usize = 2;
pub const DEFAULT_PROTECTED_COUNT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("override for {api} names unavailable backend `{label}`")]
    UnavailableBackend { api: AlgoApi, label: String },
    #[error("no backend implements {0}")]
    NoBackend(AlgoApi),
    #[error("invalid configuration: {0}")]
    Violation(String),
}

impl ConfigError {
    pub fn status(&self) -> Error {
        match self {
            ConfigError::NoBackend(_) => Error::NotSupported,
            _ => Error::InvalidArgument,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlatformProfile {
    pub capabilities: BTreeSet<String>,
}

impl PlatformProfile {
    pub fn with(mut self, symbol: &str) -> Self {
        self.capabilities.insert(symbol.to_string());
        self
    }

    pub fn is_known_symbol(symbol: &str) -> bool {
        CAPABILITY_SYMBOLS.iter().any(|(s, _)| *s == symbol)
    }

    /// Entry points covered by the declared capabilities.
    pub fn accelerated_apis(&self) -> BTreeSet<AlgoApi> {
        CAPABILITY_SYMBOLS
            .iter()
            .filter(|(s, _)| self.capabilities.contains(*s))
            .flat_map(|(_, apis)| apis.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RngSource {
    #[default]
    Deterministic,
    System,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotRequest {
    pub single_count: Option<usize>,
    pub keypair_count: Option<usize>,
    pub protected_count: Option<usize>,
    pub cache_public_keys: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplicationRequest {
    /// Requested entry points. Empty requests every entry point some backend can serve.
    pub features: BTreeSet<AlgoApi>,
    pub slots: SlotRequest,
    pub rng: RngSource,
    pub prng_seed: [u8; 32],
    pub max_se_devices: Option<usize>,
}

impl ApplicationRequest {
    pub fn with_features(features: impl IntoIterator<Item = AlgoApi>) -> Self {
        ApplicationRequest {
            features: features.into_iter().collect(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserOverrides {
    pub backends: BTreeMap<AlgoApi, String>,
}

impl UserOverrides {
    pub fn with(mut self, api: AlgoApi, label: &str) -> Self {
        self.backends.insert(api, label.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeDeviceConfig {
    pub location: Location,
    pub latency: LatencyTable,
}

/// Parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub platform: PlatformProfile,
    pub application: ApplicationRequest,
    pub overrides: UserOverrides,
    pub se_devices: Vec<SeDeviceConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        parse::parse(text)
    }

    pub fn resolve(&self) -> Result<BuildConfig, ConfigError> {
        resolve_with(
            &self.platform,
            &self.application,
            &self.overrides,
            &self.se_devices,
            &[],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    pub single_count: usize,
    pub keypair_count: usize,
    pub protected_count: usize,
    pub single_key_size: usize,
    pub cache_public_keys: bool,
}

fn hex_seed<S: Serializer>(seed: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(seed))
}

/// Resolved configuration. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildConfig {
    pub features: BTreeSet<AlgoApi>,
    pub assignment: BTreeMap<AlgoApi, String>,
    /// Entry points the accelerator serves on this platform.
    pub accelerator_apis: BTreeSet<AlgoApi>,
    pub slots: SlotCounts,
    pub rng: RngSource,
    #[serde(serialize_with = "hex_seed")]
    pub prng_seed: [u8; 32],
    pub se_devices: Vec<SeDeviceConfig>,
    pub max_se_devices: usize,
}

impl BuildConfig {
    pub fn layout(&self) -> KeyStoreLayout {
        KeyStoreLayout {
            single_count: self.slots.single_count,
            keypair_count: self.slots.keypair_count,
            protected_count: self.slots.protected_count,
            single_key_size: self.slots.single_key_size,
            cache_public_keys: self.slots.cache_public_keys,
        }
    }

    /// Canonical serialized form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks the structural invariants and reports the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = |m: String| Err(ConfigError::Violation(m));
        for api in &self.features {
            if !self.assignment.contains_key(api) {
                return v(format!("{api} is enabled but has no backend"));
            }
        }
        for api in self.assignment.keys() {
            if !self.features.contains(api) {
                return v(format!("{api} has a backend but is not enabled"));
            }
        }
        let needs_pairs = self.features.iter().any(|a| a.uses_key_pairs());
        if needs_pairs && self.slots.keypair_count == 0 {
            return v("key-pair features are enabled but there are no key-pair slots".into());
        }
        let single_size = required_single_key_size(&self.features);
        if single_size > 0 && self.slots.single_count == 0 {
            return v("single-key features are enabled but there are no single-key slots".into());
        }
        if self.slots.single_key_size < single_size {
            return v(format!(
                "single-key slots hold {} bytes, enabled features need {single_size}",
                self.slots.single_key_size
            ));
        }
        let mut seen = BTreeSet::new();
        for dev in &self.se_devices {
            if !dev.location.is_secure_element() {
                return v(format!("{} is not a secure element location", dev.location));
            }
            if !seen.insert(dev.location) {
                return v(format!("two secure elements share location {}", dev.location.value()));
            }
        }
        if self.se_devices.len() > self.max_se_devices {
            return v(format!(
                "{} secure elements configured, driver list holds {}",
                self.se_devices.len(),
                self.max_se_devices
            ));
        }
        if !self.se_devices.is_empty() && self.slots.protected_count == 0 {
            return v("secure elements are configured but there are no protected slots".into());
        }
        Ok(())
    }
}

/// Largest key a single-key slot must hold for `features`.
pub fn required_single_key_size(features: &BTreeSet<AlgoApi>) -> usize {
    features
        .iter()
        .filter_map(|a| a.single_key_size())
        .max()
        .unwrap_or(0)
}

/// Resolves with the built-in backends only.
pub fn resolve(
    platform: &PlatformProfile,
    request: &ApplicationRequest,
    overrides: &UserOverrides,
) -> Result<BuildConfig, ConfigError> {
    resolve_with(platform, request, overrides, &[], &[])
}

/// Resolves with additional backends available for selection.
pub fn resolve_with(
    platform: &PlatformProfile,
    request: &ApplicationRequest,
    overrides: &UserOverrides,
    se_devices: &[SeDeviceConfig],
    extra_backends: &[Arc<dyn TransparentBackend>],
) -> Result<BuildConfig, ConfigError> {
    let accelerator_apis: BTreeSet<AlgoApi> = platform
        .accelerated_apis()
        .into_iter()
        .filter(|a| {
            !matches!(
                a,
                AlgoApi::CipherCbcAes256Encrypt | AlgoApi::CipherCbcAes256Decrypt
            )
        })
        .collect();
    let mut backends = builtin_backends(&accelerator_apis);
    backends.extend(extra_backends.iter().cloned());
    let find = |label: &str| backends.iter().find(|b| b.label() == label);

    let features: BTreeSet<AlgoApi> = if request.features.is_empty() {
        AlgoApi::ALL
            .into_iter()
            .filter(|a| backends.iter().any(|b| b.implements(*a)))
            .collect()
    } else {
        request.features.clone()
    };

    for (api, label) in &overrides.backends {
        if !features.contains(api) {
            continue;
        }
        match find(label) {
            Some(b) if b.implements(*api) => {}
            _ => {
                return Err(ConfigError::UnavailableBackend {
                    api: *api,
                    label: label.clone(),
                })
            }
        }
    }

    let mut assignment = BTreeMap::new();
    for api in &features {
        let label = if let Some(l) = overrides.backends.get(api) {
            l.clone()
        } else if accelerator_apis.contains(api) {
            ACCELERATOR.to_string()
        } else if find(SOFTWARE).is_some_and(|b| b.implements(*api)) {
            SOFTWARE.to_string()
        } else {
            let mut candidates: Vec<&str> = backends
                .iter()
                .filter(|b| b.label() != ACCELERATOR && b.implements(*api))
                .map(|b| b.label())
                .collect();
            candidates.sort_unstable();
            candidates
                .first()
                .ok_or(ConfigError::NoBackend(*api))?
                .to_string()
        };
        assignment.insert(*api, label);
    }

    let single_key_size = required_single_key_size(&features);
    let needs_pairs = features.iter().any(|a| a.uses_key_pairs());
    let slots = SlotCounts {
        single_count: request.slots.single_count.unwrap_or(if single_key_size > 0 {
            DEFAULT_SINGLE_COUNT
        } else {
            0
        }),
        keypair_count: request.slots.keypair_count.unwrap_or(if needs_pairs {
            DEFAULT_KEYPAIR_COUNT
        } else {
            0
        }),
        protected_count: request.slots.protected_count.unwrap_or(if se_devices.is_empty() {
            0
        } else {
            DEFAULT_PROTECTED_COUNT
        }),
        single_key_size,
        cache_public_keys: request.slots.cache_public_keys.unwrap_or(true),
    };

    Ok(BuildConfig {
        features,
        assignment,
        accelerator_apis,
        slots,
        rng: request.rng,
        prng_seed: request.prng_seed,
        se_devices: se_devices.to_vec(),
        max_se_devices: request.max_se_devices.unwrap_or(SeRegistry::DEFAULT_CAPACITY),
    })
}
