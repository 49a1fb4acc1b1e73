// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use unikrypt::config::{BuildConfig, ConfigFile};
use unikrypt::{Crypto, KeyAttributes, Location, Usage};

/// Seed bytes 0x00..=0x1f.
pub const SEED_HEX: &str = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";

pub fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("valid hex")
}

pub fn config(text: &str) -> BuildConfig {
    let file = ConfigFile::parse(text).expect("config parses");
    let cfg = file.resolve().expect("config resolves");
    cfg.validate().expect("config is valid");
    cfg
}

pub fn crypto(text: &str) -> Crypto {
    Crypto::init(config(text)).expect("init")
}

/// Every feature, generous slot counts, and `devices` simulated secure elements at
/// locations 1..=devices.
pub fn full(devices: u32) -> Crypto {
    let mut text = format!(
        "[application]\nprng_seed = {SEED_HEX}\n[slots]\nsingle_count = 32\nkeypair_count = 16\nprotected_count = 32\n"
    );
    for loc in 1..=devices {
        text.push_str(&format!("[se.{loc}]\n"));
    }
    crypto(&text)
}

pub const ALL_USAGE: Usage = Usage::all();

pub fn aes(usage: Usage, location: Location) -> KeyAttributes {
    KeyAttributes::aes_128(usage).at(location)
}

pub fn hmac(usage: Usage, location: Location) -> KeyAttributes {
    KeyAttributes::hmac_sha256(usage).at(location)
}

pub fn pair(usage: Usage, location: Location) -> KeyAttributes {
    KeyAttributes::ecc_key_pair(usage).at(location)
}

pub fn public(usage: Usage, location: Location) -> KeyAttributes {
    KeyAttributes::ecc_public_key(usage).at(location)
}

pub fn se(n: u32) -> Location {
    Location::secure_element(n).unwrap()
}
