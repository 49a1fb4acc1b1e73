// SPDX-License-Identifier: Apache-2.0

//! Reference software primitives and the backend that exposes them.

use aes::cipher::{block_padding::NoPadding, BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use hmac::{Hmac, Mac};
use p256::ecdsa::signature::hazmat::{PrehashSigner, PrehashVerifier};
use p256::ecdsa::{Signature, SigningKey, VerifyingKey};
use sha2::{Digest, Sha256};
use zeroize::Zeroizing;

use super::{EccKeyPair, RandomSource, TransparentBackend, SOFTWARE};
use crate::dispatch::AlgoApi;
use crate::error::{Error, Result};
use crate::{AES_BLOCK_LEN, ECC_PRIVATE_KEY_LEN, ECC_PUBLIC_KEY_LEN, ECDSA_SIGNATURE_LEN};

type Aes128CbcEnc = cbc::Encryptor<aes::Aes128>;
type Aes128CbcDec = cbc::Decryptor<aes::Aes128>;

fn check_cbc_args(key: &[u8], input: &[u8], out: &[u8]) -> Result<()> {
    if key.len() != 16 || !input.len().is_multiple_of(AES_BLOCK_LEN) || out.len() != input.len() {
        return Err(Error::InvalidArgument);
    }
    Ok(())
}

pub fn aes128_cbc_encrypt(key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
    check_cbc_args(key, input, out)?;
    let enc = Aes128CbcEnc::new_from_slices(key, iv).map_err(|_| Error::InvalidArgument)?;
    enc.encrypt_padded_b2b_mut::<NoPadding>(input, out)
        .map_err(|_| Error::InvalidArgument)?;
    Ok(())
}

pub fn aes128_cbc_decrypt(key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
    check_cbc_args(key, input, out)?;
    let dec = Aes128CbcDec::new_from_slices(key, iv).map_err(|_| Error::InvalidArgument)?;
    dec.decrypt_padded_b2b_mut::<NoPadding>(input, out)
        .map_err(|_| Error::InvalidArgument)?;
    Ok(())
}

pub fn hmac_sha256(key: &[u8], message: &[u8]) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(message);
    mac.finalize().into_bytes().into()
}

pub fn sha256(message: &[u8]) -> [u8; 32] {
    Sha256::digest(message).into()
}

fn signing_key(private: &[u8]) -> Result<SigningKey> {
    if private.len() != ECC_PRIVATE_KEY_LEN {
        return Err(Error::InvalidArgument);
    }
    SigningKey::from_slice(private).map_err(|_| Error::InvalidArgument)
}

fn verifying_key(public: &[u8]) -> Result<VerifyingKey> {
    if public.len() != ECC_PUBLIC_KEY_LEN || public[0] != 0x04 {
        return Err(Error::InvalidArgument);
    }
    VerifyingKey::from_sec1_bytes(public).map_err(|_| Error::InvalidArgument)
}

fn encode_public(vk: &VerifyingKey) -> [u8; ECC_PUBLIC_KEY_LEN] {
    let point = vk.to_encoded_point(false);
    let mut out = [0; ECC_PUBLIC_KEY_LEN];
    out.copy_from_slice(point.as_bytes());
    out
}

/// Uncompressed SEC1 public point for a private scalar in `[1, n-1]`.
pub fn ecc_p256_public_from_private(private: &[u8]) -> Result<[u8; ECC_PUBLIC_KEY_LEN]> {
    Ok(encode_public(signing_key(private)?.verifying_key()))
}

/// Checks that `public` is an uncompressed point on the curve.
pub fn ecc_p256_validate_public(public: &[u8]) -> Result<()> {
    verifying_key(public).map(|_| ())
}

/// Draws scalars from `rng` until one lands in `[1, n-1]`.
pub fn ecc_p256_generate(rng: &mut dyn RandomSource) -> Result<EccKeyPair> {
    let mut candidate = Zeroizing::new([0u8; ECC_PRIVATE_KEY_LEN]);
    for _ in 0..64 {
        rng.fill(candidate.as_mut())?;
        if let Ok(sk) = SigningKey::from_slice(candidate.as_ref()) {
            return Ok(EccKeyPair {
                public: encode_public(sk.verifying_key()),
                private: candidate,
            });
        }
    }
    Err(Error::HardwareFailure)
}

/// ECDSA over a precomputed SHA-256 digest. The nonce is derived deterministically from
/// the key and digest (RFC 6979), so signatures are reproducible.
pub fn ecdsa_p256_sign_digest(private: &[u8], digest: &[u8; 32]) -> Result<[u8; ECDSA_SIGNATURE_LEN]> {
    let sk = signing_key(private)?;
    let sig: Signature = sk.sign_prehash(digest).map_err(|_| Error::HardwareFailure)?;
    let mut out = [0; ECDSA_SIGNATURE_LEN];
    out.copy_from_slice(&sig.to_bytes());
    Ok(out)
}

pub fn ecdsa_p256_sign(private: &[u8], message: &[u8]) -> Result<[u8; ECDSA_SIGNATURE_LEN]> {
    ecdsa_p256_sign_digest(private, &sha256(message))
}

pub fn ecdsa_p256_verify_digest(public: &[u8], digest: &[u8; 32], signature: &[u8]) -> Result<()> {
    if signature.len() != ECDSA_SIGNATURE_LEN {
        return Err(Error::InvalidArgument);
    }
    let vk = verifying_key(public)?;
    let sig = Signature::from_slice(signature).map_err(|_| Error::InvalidSignature)?;
    vk.verify_prehash(digest, &sig)
        .map_err(|_| Error::InvalidSignature)
}

pub fn ecdsa_p256_verify(public: &[u8], message: &[u8], signature: &[u8]) -> Result<()> {
    ecdsa_p256_verify_digest(public, &sha256(message), signature)
}

/// Reference transparent backend.
#[derive(Debug, Default, Clone, Copy)]
pub struct SoftwareBackend;

impl TransparentBackend for SoftwareBackend {
    fn label(&self) -> &str {
        SOFTWARE
    }

    fn implements(&self, api: AlgoApi) -> bool {
        !matches!(
            api,
            AlgoApi::CipherCbcAes256Encrypt | AlgoApi::CipherCbcAes256Decrypt
        )
    }

    fn cipher_cbc_encrypt(&self, key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
        aes128_cbc_encrypt(key, iv, input, out)
    }

    fn cipher_cbc_decrypt(&self, key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
        aes128_cbc_decrypt(key, iv, input, out)
    }

    fn hmac_sha256(&self, key: &[u8], message: &[u8]) -> Result<[u8; 32]> {
        Ok(hmac_sha256(key, message))
    }

    fn sha256(&self, message: &[u8]) -> Result<[u8; 32]> {
        Ok(sha256(message))
    }

    fn ecc_p256_generate(&self, rng: &mut dyn RandomSource) -> Result<EccKeyPair> {
        ecc_p256_generate(rng)
    }

    fn ecdsa_p256_sign(&self, private: &[u8], message: &[u8]) -> Result<[u8; 64]> {
        ecdsa_p256_sign(private, message)
    }

    fn ecdsa_p256_verify(&self, public: &[u8], message: &[u8], signature: &[u8]) -> Result<()> {
        ecdsa_p256_verify(public, message, signature)
    }
}
