// SPDX-License-Identifier: Apache-2.0

use std::time::Instant;

use unikrypt::backend::soft;
use unikrypt::se_sim::{KeySource, LatencyTable, SimulatedSe, SymmetricKind};
use unikrypt::Error;

fn device() -> SimulatedSe {
    SimulatedSe::new(1, [7; 32], LatencyTable::disabled())
}

#[test]
fn only_32_and_64_byte_loads_are_accepted() {
    let start = Instant::now();
    let mut se = device();
    for len in 0..=128usize {
        let data: Vec<u8> = (0..len).map(|i| i as u8).collect();
        let r = se.load_tempkey(&data);
        if len == 32 || len == 64 {
            assert_eq!(r, Ok(()), "len {len}");
            assert!(se.tempkey_valid());
            assert_eq!(se.mac(KeySource::TempKey, b"m"), Ok(soft::hmac_sha256(&data, b"m")));
        } else {
            assert_eq!(r, Err(Error::InvalidArgument), "len {len}");
        }
        assert!(!se.tempkey_valid(), "len {len}");
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn tempkey_is_single_use() {
    let mut se = device();
    se.load_tempkey(&[1; 32]).unwrap();
    se.mac(KeySource::TempKey, b"a").unwrap();
    assert_eq!(se.mac(KeySource::TempKey, b"a"), Err(Error::BadState));

    se.load_tempkey(&[2; 32]).unwrap();
    se.store_tempkey(3, SymmetricKind::Hmac).unwrap();
    assert!(!se.tempkey_valid());
    assert_eq!(se.store_tempkey(4, SymmetricKind::Hmac), Err(Error::BadState));
    assert_eq!(se.mac(KeySource::Slot(3), b"a"), Ok(soft::hmac_sha256(&[2; 32], b"a")));

    se.load_tempkey(&[3; 32]).unwrap();
    let mut out = [0u8; 16];
    se.cipher(KeySource::TempKey, unikrypt::se_sim::CipherDirection::Encrypt, &[0; 16], &[0; 16], &mut out)
        .unwrap();
    assert_eq!(
        se.cipher(KeySource::TempKey, unikrypt::se_sim::CipherDirection::Encrypt, &[0; 16], &[0; 16], &mut out),
        Err(Error::BadState)
    );
}

#[test]
fn rejected_load_does_not_replace_a_loaded_key() {
    let mut se = device();
    se.load_tempkey(&[5; 32]).unwrap();
    assert_eq!(se.load_tempkey(&[6; 16]), Err(Error::InvalidArgument));
    assert_eq!(se.mac(KeySource::TempKey, b"x"), Ok(soft::hmac_sha256(&[5; 32], b"x")));
}

#[test]
fn only_32_byte_tempkey_can_be_stored() {
    let mut se = device();
    se.load_tempkey(&[1; 64]).unwrap();
    assert_eq!(se.store_tempkey(0, SymmetricKind::Aes128), Err(Error::InvalidArgument));
    assert!(!se.tempkey_valid());
    assert!(!se.is_slot_occupied(0));
}

#[test]
fn random_tempkey_is_32_bytes_and_single_use() {
    let mut se = device();
    se.random_tempkey().unwrap();
    se.store_tempkey(0, SymmetricKind::Aes128).unwrap();
    assert_eq!(se.peek_secret(0).unwrap().len(), 32);
    assert_eq!(se.store_tempkey(1, SymmetricKind::Aes128), Err(Error::BadState));
}
