// SPDX-License-Identifier: Apache-2.0

//! The software, alternative software and simulated secure-element paths agree byte for
//! byte on MAC and ciphertext output, and device signatures verify in software.

mod common;

use std::time::Instant;

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use unikrypt::backend::alt::AltBackend;
use unikrypt::backend::soft::{self, SoftwareBackend};
use unikrypt::backend::{TransparentBackend, SOFTWARE, SOFTWARE_ALT};
use unikrypt::{Algorithm, Crypto, Location, Usage};

const PAIRS: usize = 1000;

fn alt_api() -> Crypto {
    crypto(&format!(
        "[application]\nprng_seed = {SEED_HEX}\n[overrides]\nCIPHER_CBC_AES_128_ENCRYPT = software-alt\nHMAC_SHA256_COMPUTE = software-alt\n"
    ))
}

#[test]
fn random_pairs_agree_across_backends() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xe9);
    let soft_api = full(1);
    let alt_api = alt_api();
    for _ in 0..PAIRS {
        let aes_key: [u8; 16] = rng.gen();
        let hmac_key: [u8; 32] = rng.gen();
        let iv: [u8; 16] = rng.gen();
        let msg: Vec<u8> = (0..rng.gen_range(0..8) * 16).map(|_| rng.gen()).collect();

        let mut a = vec![0u8; msg.len()];
        let mut b = vec![0u8; msg.len()];
        SoftwareBackend.cipher_cbc_encrypt(&aes_key, &iv, &msg, &mut a).unwrap();
        AltBackend.cipher_cbc_encrypt(&aes_key, &iv, &msg, &mut b).unwrap();
        assert_eq!(a, b);
        let tag = SoftwareBackend.hmac_sha256(&hmac_key, &msg).unwrap();
        assert_eq!(AltBackend.hmac_sha256(&hmac_key, &msg).unwrap(), tag);

        let keyed = [
            (&soft_api, Location::LOCAL),
            (&alt_api, Location::LOCAL),
            (&soft_api, se(1)),
        ];
        for (c, loc) in keyed {
            let k = c.import_key(&aes(Usage::ENCRYPT, loc), &aes_key).unwrap();
            let mut out = vec![0u8; msg.len() + 16];
            let n = c.cipher_encrypt(k, Algorithm::CbcNoPadding, &msg, &mut out).unwrap();
            let api_iv: [u8; 16] = out[..16].try_into().unwrap();
            let mut want = vec![0u8; msg.len()];
            soft::aes128_cbc_encrypt(&aes_key, &api_iv, &msg, &mut want).unwrap();
            assert_eq!(&out[16..n], &want[..], "{loc}");
            c.destroy_key(k).unwrap();

            let k = c.import_key(&hmac(Usage::SIGN_MESSAGE, loc), &hmac_key).unwrap();
            let mut t = [0u8; 32];
            c.mac_compute(k, Algorithm::HmacSha256, &msg, &mut t).unwrap();
            assert_eq!(t, tag, "{loc}");
            c.destroy_key(k).unwrap();
        }
    }
    assert_eq!(alt_api.counters().get(SOFTWARE_ALT), 2 * PAIRS as u64);
    assert_eq!(soft_api.counters().get(SOFTWARE), 2 * PAIRS as u64);
    // import, operation and destroy for each of the two device keys
    assert_eq!(soft_api.counters().get("se:1"), 6 * PAIRS as u64);
    assert!(start.elapsed().as_secs_f64() < 30.0, "{:?}", start.elapsed());
}

#[test]
fn device_signatures_verify_in_software() {
    let mut rng = StdRng::seed_from_u64(0x516);
    let c = full(1);
    let key = c.generate_key(&pair(Usage::SIGN_MESSAGE, se(1))).unwrap();
    let mut public = [0u8; 65];
    c.export_public_key(key, &mut public).unwrap();
    let verifier = c.import_key(&public_attrs(), &public).unwrap();
    for _ in 0..PAIRS {
        let msg: Vec<u8> = (0..rng.gen_range(0..100)).map(|_| rng.gen()).collect();
        let mut sig = [0u8; 64];
        c.sign_message(key, Algorithm::EcdsaP256Sha256, &msg, &mut sig).unwrap();
        assert_eq!(SoftwareBackend.ecdsa_p256_verify(&public, &msg, &sig), Ok(()));
        assert_eq!(c.verify_message(verifier, Algorithm::EcdsaP256Sha256, &msg, &sig), Ok(()));
    }
}

#[test]
fn imported_private_key_signs_identically_on_device_and_host() {
    let c = full(1);
    let private = [0x42u8; 32];
    let host = c.import_key(&pair(Usage::SIGN_MESSAGE, Location::LOCAL), &private).unwrap();
    let dev = c.import_key(&pair(Usage::SIGN_MESSAGE, se(1)), &private).unwrap();
    let mut a = [0u8; 64];
    let mut b = [0u8; 64];
    c.sign_message(host, Algorithm::EcdsaP256Sha256, b"same", &mut a).unwrap();
    c.sign_message(dev, Algorithm::EcdsaP256Sha256, b"same", &mut b).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, soft::ecdsa_p256_sign(&private, b"same").unwrap());
}

fn public_attrs() -> unikrypt::KeyAttributes {
    public(Usage::VERIFY_MESSAGE, Location::LOCAL)
}
