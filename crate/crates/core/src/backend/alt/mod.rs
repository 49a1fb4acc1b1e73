// SPDX-License-Identifier: Apache-2.0

//! Second transparent backend with its own AES-128 and SHA-256 code, sharing nothing with
//! the reference implementation. Used to check substitutability and to mix backends per
//! entry point.

mod aes;
mod sha256;

pub use self::aes::Aes128;
pub use self::sha256::{hmac_sha256, Sha256};

use super::{TransparentBackend, SOFTWARE_ALT};
use crate::dispatch::AlgoApi;
use crate::error::{Error, Result};
use crate::AES_BLOCK_LEN;

fn schedule(key: &[u8]) -> Result<Aes128> {
    let key: &[u8; 16] = key.try_into().map_err(|_| Error::InvalidArgument)?;
    Ok(Aes128::new(key))
}

fn check_lengths(input: &[u8], out: &[u8]) -> Result<()> {
    if !input.len().is_multiple_of(AES_BLOCK_LEN) || out.len() != input.len() {
        return Err(Error::InvalidArgument);
    }
    Ok(())
}

pub fn aes128_cbc_encrypt(key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
    check_lengths(input, out)?;
    let aes = schedule(key)?;
    let mut chain = *iv;
    for (src, dst) in input.chunks_exact(16).zip(out.chunks_exact_mut(16)) {
        for (c, p) in chain.iter_mut().zip(src) {
            *c ^= p;
        }
        aes.encrypt_block(&mut chain);
        dst.copy_from_slice(&chain);
    }
    Ok(())
}

pub fn aes128_cbc_decrypt(key: &[u8], iv: &[u8; 16], input: &[u8], out: &mut [u8]) -> Result<()> {
    check_lengths(input, out)?;
    let aes = schedule(key)?;
    let mut prev = *iv;
    for (src, dst) in input.chunks_exact(16).zip(out.chunks_exact_mut(16)) {
        let mut block: [u8; 16] = src.try_into().expect("exact chunk");
        aes.decrypt_block(&mut block);
        for (b, p) in block.iter_mut().zip(&prev) {
            *b ^= p;
        }
        dst.copy_from_slice(&block);
        prev.copy_from_slice(src);
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AltBackend;

impl TransparentBackend for AltBackend {
    fn label(&self) -> &str {
        SOFTWARE_ALT
    }

    fn implements(&self, api: AlgoApi) -> bool {
        matches!(
            api,
            AlgoApi::CipherCbcAes128Encrypt
                | AlgoApi::CipherCbcAes128Decrypt
                | AlgoApi::HmacSha256Compute
                | AlgoApi::HmacSha256Verify
                | AlgoApi::Sha256Compute
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
        Ok(Sha256::digest(message))
    }
}
