// SPDX-License-Identifier: Apache-2.0

//! Simulated secure element and its opaque driver.

mod device;
mod driver;

use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

pub use device::{
    CipherDirection, CommandRecord, KeySource, LatencyTable, SeCommand, SimulatedSe, SymmetricKind,
    DEVICE_SLOT_COUNT,
};
pub use driver::{SharedDevice, SimSeDriver, TEMPKEY_IMPORT_LEN};

/// Device RNG seed derived from the host seed and the device location.
pub fn device_seed(host_seed: &[u8; 32], location: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(host_seed);
    h.update(location.to_be_bytes());
    h.finalize().into()
}

/// A new device wrapped for sharing between its driver and a test harness.
pub fn shared_device(location: u32, host_seed: &[u8; 32], latency: LatencyTable) -> SharedDevice {
    Arc::new(Mutex::new(SimulatedSe::new(
        location,
        device_seed(host_seed, location),
        latency,
    )))
}
