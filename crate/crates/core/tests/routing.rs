// SPDX-License-Identifier: Apache-2.0

mod common;

use std::sync::Arc;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use unikrypt::backend::{soft, TransparentBackend, SOFTWARE, SOFTWARE_ALT};
use unikrypt::config::{resolve_with, ApplicationRequest, PlatformProfile, UserOverrides};
use unikrypt::dispatch::{resolve_algo_api, AlgoApi, Direction};
use unikrypt::{Algorithm, Crypto, Error, KeyId, KeyType, Location, Usage};

/// Runs one keyed operation suited to the key's algorithm and returns whether it
/// succeeded.
fn op(c: &Crypto, key: KeyId, alg: Algorithm, rng: &mut StdRng) -> bool {
    let mut out = [0u8; 96];
    let msg: Vec<u8> = (0..32).map(|_| rng.gen()).collect();
    match (alg, rng.gen_range(0..2)) {
        (Algorithm::CbcNoPadding, 0) => c.cipher_encrypt(key, alg, &msg, &mut out).is_ok(),
        (Algorithm::CbcNoPadding, _) => c.cipher_decrypt(key, alg, &out[..48], &mut [0; 32]).is_ok(),
        (Algorithm::HmacSha256, 0) => c.mac_compute(key, alg, &msg, &mut out).is_ok(),
        (Algorithm::HmacSha256, _) => c.mac_verify(key, alg, &msg, &[0; 32]) == Err(Error::InvalidSignature),
        (Algorithm::EcdsaP256Sha256, 0) => c.sign_message(key, alg, &msg, &mut out).is_ok(),
        (Algorithm::EcdsaP256Sha256, _) => c.verify_message(key, alg, &msg, &[1; 64]) == Err(Error::InvalidSignature),
        (Algorithm::Sha256, _) => unreachable!(),
    }
}

#[test]
fn local_key_reaches_assigned_software_backend() {
    let c = full(1);
    let k = c.import_key(&aes(Usage::ENCRYPT, Location::LOCAL), &[1; 16]).unwrap();
    let mut out = [0u8; 48];
    c.cipher_encrypt(k, Algorithm::CbcNoPadding, &[0; 32], &mut out).unwrap();
    assert_eq!(c.counters().get(SOFTWARE), 1);
    assert_eq!(c.counters().get("se:1"), 0);
    assert_eq!(c.counters().total(), 1);
}

#[test]
fn se_key_reaches_only_its_device() {
    let c = full(1);
    let k = c.import_key(&aes(Usage::ENCRYPT, se(1)), &[1; 16]).unwrap();
    c.counters().reset();
    c.device(se(1)).unwrap().lock().unwrap().clear_log();
    let mut out = [0u8; 48];
    c.cipher_encrypt(k, Algorithm::CbcNoPadding, &[0; 32], &mut out).unwrap();
    assert_eq!(c.counters().get("se:1"), 1);
    assert_eq!(c.counters().get(SOFTWARE), 0);
    assert_eq!(c.counters().total(), 1);
    let log = c.device(se(1)).unwrap().lock().unwrap().log().to_vec();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].command, unikrypt::se_sim::SeCommand::Cipher);
}

#[test]
fn one_backend_invocation_per_call() {
    let c = full(2);
    let mut rng = StdRng::seed_from_u64(1);
    let mut keys = Vec::new();
    for loc in [Location::LOCAL, se(1), se(2)] {
        keys.push((c.generate_key(&aes(Usage::all(), loc)).unwrap(), Algorithm::CbcNoPadding));
        keys.push((c.generate_key(&hmac(Usage::all(), loc)).unwrap(), Algorithm::HmacSha256));
        keys.push((c.generate_key(&pair(Usage::all(), loc)).unwrap(), Algorithm::EcdsaP256Sha256));
    }
    for _ in 0..300 {
        let (k, alg) = keys[rng.gen_range(0..keys.len())];
        let before = c.counters().total();
        op(&c, k, alg, &mut rng);
        assert_eq!(c.counters().total(), before + 1);
    }
    let before = c.counters().total();
    c.hash_compute(Algorithm::Sha256, b"x", &mut [0; 32]).unwrap();
    assert_eq!(c.counters().total(), before + 1);
}

#[test]
fn two_devices_never_cross() {
    let c = full(2);
    let mut rng = StdRng::seed_from_u64(2);
    let mut keys = Vec::new();
    for loc in [se(1), se(2)] {
        keys.push((c.generate_key(&aes(Usage::all(), loc)).unwrap(), loc, Algorithm::CbcNoPadding));
        keys.push((c.generate_key(&hmac(Usage::all(), loc)).unwrap(), loc, Algorithm::HmacSha256));
        keys.push((c.generate_key(&pair(Usage::all(), loc)).unwrap(), loc, Algorithm::EcdsaP256Sha256));
    }
    let dev = |l: Location| c.device(l).unwrap().lock().unwrap().log().len();
    for _ in 0..1000 {
        let (k, loc, alg) = keys[rng.gen_range(0..keys.len())];
        let other = if loc == se(1) { se(2) } else { se(1) };
        let (mine, theirs) = (dev(loc), dev(other));
        let route_other = c.counters().get(&format!("se:{}", other.value()));
        op(&c, k, alg, &mut rng);
        assert_eq!(dev(other), theirs, "cross-device command");
        assert_eq!(c.counters().get(&format!("se:{}", other.value())), route_other);
        assert!(dev(loc) > mine);
    }
}

#[test]
fn unregistered_location_does_not_exist() {
    let c = full(1);
    assert_eq!(c.generate_key(&aes(Usage::ENCRYPT, se(9))), Err(Error::DoesNotExist));
    assert_eq!(
        c.import_key(&aes(Usage::ENCRYPT, Location::new(0x90_0000)), &[0; 16]),
        Err(Error::InvalidArgument)
    );
}

/// AES-256 is served by a test backend while AES-128 keeps the software backend.
struct Aes256Only;

impl TransparentBackend for Aes256Only {
    fn label(&self) -> &str {
        "aes256-test"
    }

    fn implements(&self, api: AlgoApi) -> bool {
        matches!(api, AlgoApi::CipherCbcAes256Encrypt | AlgoApi::CipherCbcAes256Decrypt)
    }

    fn cipher_cbc_encrypt(&self, key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> unikrypt::Result<()> {
        use aes::cipher::{BlockEncryptMut, KeyIvInit};
        if key.len() != 32 {
            return Err(Error::InvalidArgument);
        }
        cbc::Encryptor::<aes::Aes256>::new(key.into(), iv.into())
            .encrypt_padded_b2b_mut::<aes::cipher::block_padding::NoPadding>(input, out)
            .map(drop)
            .map_err(|_| Error::InvalidArgument)
    }
}

#[test]
fn key_size_selects_entry_point_and_backend() {
    assert_eq!(
        resolve_algo_api(KeyType::Aes, 128, Algorithm::CbcNoPadding, Direction::Encrypt),
        Ok(AlgoApi::CipherCbcAes128Encrypt)
    );
    assert_eq!(
        resolve_algo_api(KeyType::Aes, 256, Algorithm::CbcNoPadding, Direction::Encrypt),
        Ok(AlgoApi::CipherCbcAes256Encrypt)
    );
    let extra: Arc<dyn TransparentBackend> = Arc::new(Aes256Only);
    let req = ApplicationRequest::with_features([AlgoApi::CipherCbcAes128Encrypt, AlgoApi::CipherCbcAes256Encrypt]);
    let cfg = resolve_with(&PlatformProfile::default(), &req, &UserOverrides::default(), &[], std::slice::from_ref(&extra)).unwrap();
    assert_eq!(cfg.assignment[&AlgoApi::CipherCbcAes128Encrypt], SOFTWARE);
    assert_eq!(cfg.assignment[&AlgoApi::CipherCbcAes256Encrypt], "aes256-test");
    let c = Crypto::builder(cfg).with_backend(extra).init().unwrap();
    let k128 = c.import_key(&aes(Usage::ENCRYPT, Location::LOCAL), &[1; 16]).unwrap();
    let a256 = unikrypt::KeyAttributes::new(KeyType::Aes, 256, Algorithm::CbcNoPadding, Usage::ENCRYPT);
    let k256 = c.import_key(&a256, &[1; 32]).unwrap();
    let mut out = [0u8; 48];
    c.cipher_encrypt(k128, Algorithm::CbcNoPadding, &[0; 32], &mut out).unwrap();
    c.cipher_encrypt(k256, Algorithm::CbcNoPadding, &[0; 32], &mut out).unwrap();
    assert_eq!(c.counters().get(SOFTWARE), 1);
    assert_eq!(c.counters().get("aes256-test"), 1);
}

#[test]
fn backend_output_passes_through_unmodified() {
    let c = crypto("[overrides]\nHMAC_SHA256_COMPUTE = software-alt\n");
    let k = c.import_key(&hmac(Usage::SIGN_MESSAGE, Location::LOCAL), &[9; 32]).unwrap();
    let mut tag = [0u8; 32];
    c.mac_compute(k, Algorithm::HmacSha256, b"abc", &mut tag).unwrap();
    assert_eq!(c.counters().get(SOFTWARE_ALT), 1);
    assert_eq!(tag, soft::hmac_sha256(&[9; 32], b"abc"));
}

#[test]
fn disabled_feature_is_not_dispatchable() {
    let c = crypto("[application]\nCIPHER_CBC_AES_128_ENCRYPT = true\n");
    let k = c.import_key(&aes(Usage::ENCRYPT | Usage::DECRYPT, Location::LOCAL), &[1; 16]).unwrap();
    let mut out = [0u8; 48];
    assert!(c.cipher_encrypt(k, Algorithm::CbcNoPadding, &[0; 32], &mut out).is_ok());
    let mut pt = [0u8; 32];
    assert_eq!(c.cipher_decrypt(k, Algorithm::CbcNoPadding, &out, &mut pt), Err(Error::NotSupported));
    assert_eq!(c.hash_compute(Algorithm::Sha256, b"", &mut [0; 32]), Err(Error::NotSupported));
    assert_eq!(c.import_key(&hmac(Usage::SIGN_MESSAGE, Location::LOCAL), &[1; 32]), Err(Error::NotSupported));
}

#[test]
fn disabled_feature_is_gated_on_secure_elements_too() {
    let c = crypto("[application]\nCIPHER_CBC_AES_128_ENCRYPT = true\n[se.1]\n");
    let k = c.import_key(&aes(Usage::ENCRYPT | Usage::DECRYPT, se(1)), &[1; 16]).unwrap();
    let mut out = [0u8; 48];
    c.cipher_encrypt(k, Algorithm::CbcNoPadding, &[0; 32], &mut out).unwrap();
    assert_eq!(c.cipher_decrypt(k, Algorithm::CbcNoPadding, &out, &mut [0; 32]), Err(Error::NotSupported));
}
