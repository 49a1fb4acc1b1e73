// SPDX-License-Identifier: Apache-2.0

//! Line-oriented configuration file reader.
//!
//! ```text
//! # comment
//! [platform]
//! HAS_PERIPH_CIPHER_AES_128_CBC = true
//! [application]
//! CIPHER_CBC_AES_128_ENCRYPT = true
//! prng_seed = 000102...1f
//! [overrides]
//! CIPHER_CBC_AES_128_ENCRYPT = software
//! [slots]
//! single_count = 1
//! [se.1]
//! mac = 13000
//! ```

use std::collections::BTreeSet;

use super::{
    ApplicationRequest, ConfigError, ConfigFile, PlatformProfile, RngSource, SeDeviceConfig,
    SlotRequest, UserOverrides,
};
use crate::dispatch::AlgoApi;
use crate::se_sim::{LatencyTable, SeCommand};
use crate::types::Location;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Section {
    Platform,
    Application,
    Overrides,
    Slots,
    Se(usize),
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_bool(line: usize, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "y" | "yes" | "1" => Ok(true),
        "false" | "n" | "no" | "0" => Ok(false),
        _ => Err(err(line, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_count(line: usize, v: &str) -> Result<usize, ConfigError> {
    if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(line, format!("expected a decimal number, got `{v}`")));
    }
    v.parse().map_err(|_| err(line, format!("number out of range: `{v}`")))
}

/// 64 hex characters.
pub fn parse_seed(v: &str) -> Option<[u8; 32]> {
    if v.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    hex::decode_to_slice(v, &mut out).ok()?;
    Some(out)
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(err(line, format!("duplicate key `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

fn slot_key(
    slots: &mut SlotRequest,
    key: &str,
    value: &str,
    line: usize,
) -> Result<bool, ConfigError> {
    let target = match key {
        "single_count" | "PSA_SINGLE_KEY_COUNT" => &mut slots.single_count,
        "keypair_count" | "PSA_ASYMMETRIC_KEYPAIR_COUNT" => &mut slots.keypair_count,
        "protected_count" | "PSA_PROTECTED_KEY_COUNT" => &mut slots.protected_count,
        "cache_public_keys" | "PSA_PROTECTED_KEY_PUBLIC_CACHE" => {
            set_once(&mut slots.cache_public_keys, parse_bool(line, value)?, line, key)?;
            return Ok(true);
        }
        _ => return Ok(false),
    };
    set_once(target, parse_count(line, value)?, line, key)?;
    Ok(true)
}

pub(super) fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut platform = PlatformProfile::default();
    let mut seen_caps = BTreeSet::new();
    let mut app = ApplicationRequest::default();
    let mut seen_features = BTreeSet::new();
    let mut overrides = UserOverrides::default();
    let mut se_devices: Vec<SeDeviceConfig> = Vec::new();
    let mut section: Option<Section> = None;
    let mut rng = None;
    let mut seed = None;
    let mut max_se = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            section = Some(match name {
                "platform" => Section::Platform,
                "application" => Section::Application,
                "overrides" => Section::Overrides,
                "slots" => Section::Slots,
                _ => {
                    let loc = name
                        .strip_prefix("se.")
                        .ok_or_else(|| err(line, format!("unknown section `{name}`")))?;
                    let loc = parse_count(line, loc)?;
                    let location = u32::try_from(loc)
                        .ok()
                        .and_then(|l| Location::secure_element(l).ok())
                        .ok_or_else(|| err(line, format!("invalid secure element location {loc}")))?;
                    se_devices.push(SeDeviceConfig {
                        location,
                        latency: LatencyTable::disabled(),
                    });
                    Section::Se(se_devices.len() - 1)
                }
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = &section else {
            return Err(err(line, "key outside of any section"));
        };
        match sec {
            Section::Platform => {
                if !PlatformProfile::is_known_symbol(key) {
                    return Err(err(line, format!("unknown capability symbol `{key}`")));
                }
                if !seen_caps.insert(key.to_string()) {
                    return Err(err(line, format!("duplicate key `{key}`")));
                }
                if parse_bool(line, value)? {
                    platform.capabilities.insert(key.to_string());
                }
            }
            Section::Application => {
                if let Ok(api) = key.parse::<AlgoApi>() {
                    if !seen_features.insert(api) {
                        return Err(err(line, format!("duplicate key `{key}`")));
                    }
                    if parse_bool(line, value)? {
                        app.features.insert(api);
                    }
                    continue;
                }
                match key {
                    "prng_seed" => {
                        let s = parse_seed(value)
                            .ok_or_else(|| err(line, "prng_seed must be 64 hex characters"))?;
                        set_once(&mut seed, s, line, key)?;
                    }
                    "rng" => {
                        let r = match value {
                            "deterministic" => RngSource::Deterministic,
                            "system" => RngSource::System,
                            _ => return Err(err(line, format!("unknown rng source `{value}`"))),
                        };
                        set_once(&mut rng, r, line, key)?;
                    }
                    "max_se_devices" => set_once(&mut max_se, parse_count(line, value)?, line, key)?,
                    _ => {
                        if !slot_key(&mut app.slots, key, value, line)? {
                            return Err(err(line, format!("unknown application key `{key}`")));
                        }
                    }
                }
            }
            Section::Overrides => {
                let api = key
                    .parse::<AlgoApi>()
                    .map_err(|_| err(line, format!("unknown feature `{key}`")))?;
                if value.is_empty() {
                    return Err(err(line, "empty backend label"));
                }
                if overrides.backends.insert(api, value.to_string()).is_some() {
                    return Err(err(line, format!("duplicate key `{key}`")));
                }
            }
            Section::Slots => {
                if !slot_key(&mut app.slots, key, value, line)? {
                    return Err(err(line, format!("unknown slots key `{key}`")));
                }
            }
            Section::Se(i) => {
                let cmd = key
                    .parse::<SeCommand>()
                    .map_err(|_| err(line, format!("unknown device command `{key}`")))?;
                let micros = parse_count(line, value)? as u64;
                let table = &mut se_devices[*i].latency;
                if table.micros.insert(cmd, micros).is_some() {
                    return Err(err(line, format!("duplicate key `{key}`")));
                }
            }
        }
    }

    if let Some(r) = rng {
        app.rng = r;
    }
    if let Some(s) = seed {
        app.prng_seed = s;
    }
    app.max_se_devices = max_se;
    Ok(ConfigFile {
        platform,
        application: app,
        overrides,
        se_devices,
    })
}
