// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use unikrypt::backend::{ACCELERATOR, SOFTWARE, SOFTWARE_ALT};
use unikrypt::config::{
    resolve, ApplicationRequest, ConfigError, ConfigFile, PlatformProfile, SeDeviceConfig, UserOverrides,
};
use unikrypt::dispatch::AlgoApi;
use unikrypt::keystore::SlotVariant;
use unikrypt::se_sim::LatencyTable;
use unikrypt::{Algorithm, Error, Location, Usage};

const BUILTIN: [AlgoApi; 8] = [
    AlgoApi::CipherCbcAes128Encrypt,
    AlgoApi::CipherCbcAes128Decrypt,
    AlgoApi::HmacSha256Compute,
    AlgoApi::HmacSha256Verify,
    AlgoApi::Sha256Compute,
    AlgoApi::EccP256Generate,
    AlgoApi::EcdsaP256Sign,
    AlgoApi::EcdsaP256Verify,
];

fn aes_platform() -> PlatformProfile {
    PlatformProfile::default().with("HAS_PERIPH_CIPHER_AES_128_CBC")
}

#[test]
fn capability_symbol_makes_accelerator_the_default() {
    let req = ApplicationRequest::with_features([AlgoApi::CipherCbcAes128Encrypt]);
    let cfg = resolve(&aes_platform(), &req, &UserOverrides::default()).unwrap();
    assert_eq!(cfg.assignment[&AlgoApi::CipherCbcAes128Encrypt], ACCELERATOR);
    assert_eq!(cfg.assignment.len(), 1);
}

#[test]
fn user_override_selects_software() {
    let req = ApplicationRequest::with_features([AlgoApi::CipherCbcAes128Encrypt]);
    let o = UserOverrides::default().with(AlgoApi::CipherCbcAes128Encrypt, SOFTWARE);
    let cfg = resolve(&aes_platform(), &req, &o).unwrap();
    assert_eq!(cfg.assignment[&AlgoApi::CipherCbcAes128Encrypt], SOFTWARE);
}

#[test]
fn keypair_count_twelve_sizes_the_pair_array() {
    let cfg = config("[application]\nECDSA_P256_SIGN = true\nPSA_ASYMMETRIC_KEYPAIR_COUNT = 12\n");
    assert_eq!(cfg.slots.keypair_count, 12);
    assert_eq!(cfg.layout().keypair_count, 12);
    let c = unikrypt::Crypto::init(cfg).unwrap();
    assert_eq!(c.key_store().stats(SlotVariant::KeyPair).total, 12);
}

#[test]
fn the_three_scenarios_from_files() {
    let a = config("[platform]\nHAS_PERIPH_CIPHER_AES_128_CBC = true\n[application]\nCIPHER_CBC_AES_128_ENCRYPT = true\n");
    assert_eq!(a.assignment[&AlgoApi::CipherCbcAes128Encrypt], ACCELERATOR);
    let b = config("[platform]\nHAS_PERIPH_CIPHER_AES_128_CBC = y\n[application]\nCIPHER_CBC_AES_128_ENCRYPT = y\n[overrides]\nCIPHER_CBC_AES_128_ENCRYPT = software\n");
    assert_eq!(b.assignment[&AlgoApi::CipherCbcAes128Encrypt], SOFTWARE);
    let c = config("[slots]\nPSA_ASYMMETRIC_KEYPAIR_COUNT = 12\n");
    assert_eq!(c.slots.keypair_count, 12);
}

#[test]
fn capability_beats_alternative_software_backend() {
    let req = ApplicationRequest::with_features([AlgoApi::HmacSha256Compute]);
    let p = PlatformProfile::default().with("HAS_PERIPH_HMAC_SHA_256");
    let cfg = resolve(&p, &req, &UserOverrides::default()).unwrap();
    assert_eq!(cfg.assignment[&AlgoApi::HmacSha256Compute], ACCELERATOR);
    let o = UserOverrides::default().with(AlgoApi::HmacSha256Compute, SOFTWARE_ALT);
    assert_eq!(resolve(&p, &req, &o).unwrap().assignment[&AlgoApi::HmacSha256Compute], SOFTWARE_ALT);
}

#[test]
fn resolution_is_byte_deterministic() {
    let text = format!(
        "[platform]\nHAS_PERIPH_ECC_P256 = true\n[application]\nprng_seed = {SEED_HEX}\n[overrides]\nSHA256_COMPUTE = software-alt\n[se.1]\nmac = 13000\n[se.2]\n"
    );
    let first = ConfigFile::parse(&text).unwrap().resolve().unwrap().to_json();
    for _ in 0..10 {
        assert_eq!(ConfigFile::parse(&text).unwrap().resolve().unwrap().to_json(), first);
    }
    assert!(first.contains("\"accelerator\""));
}

#[test]
fn unavailable_override_is_invalid_argument() {
    let req = ApplicationRequest::with_features([AlgoApi::EcdsaP256Sign]);
    let o = UserOverrides::default().with(AlgoApi::EcdsaP256Sign, SOFTWARE_ALT);
    let err = resolve(&PlatformProfile::default(), &req, &o).unwrap_err();
    assert!(matches!(err, ConfigError::UnavailableBackend { .. }));
    assert_eq!(err.status(), Error::InvalidArgument);
    let o = UserOverrides::default().with(AlgoApi::EcdsaP256Sign, "nonexistent");
    assert_eq!(resolve(&PlatformProfile::default(), &req, &o).unwrap_err().status(), Error::InvalidArgument);
}

#[test]
fn feature_without_backend_is_not_supported() {
    let req = ApplicationRequest::with_features([AlgoApi::CipherCbcAes256Encrypt]);
    let err = resolve(&PlatformProfile::default(), &req, &UserOverrides::default()).unwrap_err();
    assert_eq!(err, ConfigError::NoBackend(AlgoApi::CipherCbcAes256Encrypt));
    assert_eq!(err.status(), Error::NotSupported);
}

#[test]
fn gated_features_are_absent_and_undispatchable() {
    let cfg = config("[application]\nHMAC_SHA256_COMPUTE = true\n");
    assert_eq!(cfg.features.len(), 1);
    assert_eq!(cfg.assignment.keys().copied().collect::<Vec<_>>(), [AlgoApi::HmacSha256Compute]);
    let c = unikrypt::Crypto::init(cfg).unwrap();
    let k = c.import_key(&hmac(Usage::all(), Location::LOCAL), &[3; 32]).unwrap();
    c.mac_compute(k, Algorithm::HmacSha256, b"m", &mut [0; 32]).unwrap();
    assert_eq!(c.mac_verify(k, Algorithm::HmacSha256, b"m", &[0; 32]), Err(Error::NotSupported));
    assert_eq!(c.hash_compute(Algorithm::Sha256, b"m", &mut [0; 32]), Err(Error::NotSupported));
    assert_eq!(c.generate_key(&pair(Usage::all(), Location::LOCAL)), Err(Error::NotSupported));
}

#[test]
fn enabling_a_feature_never_shrinks_slots() {
    let resolve_set = |mask: u32| {
        let feats = BUILTIN.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| *a);
        let cfg = resolve(&PlatformProfile::default(), &ApplicationRequest::with_features(feats), &UserOverrides::default())
            .unwrap();
        cfg.slots
    };
    for mask in 1u32..(1 << BUILTIN.len()) {
        let base = resolve_set(mask);
        for bit in 0..BUILTIN.len() {
            if mask & (1 << bit) != 0 {
                continue;
            }
            let more = resolve_set(mask | (1 << bit));
            assert!(more.single_count >= base.single_count);
            assert!(more.keypair_count >= base.keypair_count);
            assert!(more.protected_count >= base.protected_count);
            assert!(more.single_key_size >= base.single_key_size, "{mask:#x} + {bit}");
        }
    }
}

#[test]
fn aes_only_config_sizes_single_slots_to_sixteen() {
    let cfg = config("[application]\nCIPHER_CBC_AES_128_ENCRYPT = true\nCIPHER_CBC_AES_128_DECRYPT = true\n");
    assert_eq!(cfg.validate(), Ok(()));
    assert_eq!(cfg.slots.single_key_size, 16);
    assert_eq!(cfg.slots.keypair_count, 0);
}

#[test]
fn pair_features_without_pair_slots_fail_validation() {
    let mut cfg = config("[application]\nECDSA_P256_SIGN = true\n");
    cfg.slots.keypair_count = 0;
    assert!(matches!(cfg.validate(), Err(ConfigError::Violation(_))));
    let file = ConfigFile::parse("[application]\nECDSA_P256_SIGN = true\n[slots]\nkeypair_count = 0\n").unwrap();
    assert!(file.resolve().unwrap().validate().is_err());
    assert_eq!(
        unikrypt::Crypto::init(file.resolve().unwrap()).err(),
        Some(Error::InvalidArgument)
    );
}

#[test]
fn duplicate_device_location_fails_validation() {
    let mut cfg = config("[se.1]\n");
    cfg.se_devices.push(SeDeviceConfig { location: cfg.se_devices[0].location, latency: LatencyTable::disabled() });
    match cfg.validate() {
        Err(ConfigError::Violation(msg)) => assert!(msg.contains("share")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unspecified_counts_take_defaults() {
    use unikrypt::config::{DEFAULT_KEYPAIR_COUNT, DEFAULT_PROTECTED_COUNT, DEFAULT_SINGLE_COUNT};
    let cfg = config("[se.3]\n");
    assert_eq!(cfg.slots.single_count, DEFAULT_SINGLE_COUNT);
    assert_eq!(cfg.slots.keypair_count, DEFAULT_KEYPAIR_COUNT);
    assert_eq!(cfg.slots.protected_count, DEFAULT_PROTECTED_COUNT);
    assert!(cfg.slots.cache_public_keys);
}

#[test]
fn malformed_files_report_the_line() {
    for (text, line) in [
        ("[platform]\nHAS_PERIPH_BOGUS = true\n", 2),
        ("[application]\n\n# c\nsingle_count = x\n", 4),
        ("[nowhere]\n", 1),
        ("prng_seed = 00\n", 1),
        ("[slots]\nsingle_count = 1\nsingle_count = 2\n", 3),
        ("[se.0]\n", 1),
    ] {
        match ConfigFile::parse(text) {
            Err(ConfigError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}
