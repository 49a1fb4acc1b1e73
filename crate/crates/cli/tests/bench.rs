// SPDX-License-Identifier: Apache-2.0

use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

use unikrypt::backend::{ACCELERATOR, SOFTWARE};
use unikrypt::config::{BuildConfig, ConfigFile};
use unikrypt::se_sim::SeCommand;
use unikrypt::{Crypto, Error};
use unikrypt_cli::bench::{self, routes, BenchOp};

fn config(text: &str) -> BuildConfig {
    let cfg = ConfigFile::parse(text).unwrap().resolve().unwrap();
    cfg.validate().unwrap();
    cfg
}

/// Timing tests share one CPU budget; running them one at a time keeps them from
/// preempting each other inside measured windows.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

const DEFAULT_CONF: &str = include_str!("../configs/default.conf");
const ACCELERATED_CONF: &str = include_str!("../configs/accelerated.conf");
const SINGLE_SLOT_CONF: &str = include_str!("../configs/cipher-single-slot.conf");

#[test]
fn every_phase_has_a_row_per_route() {
    let _serial = serial();
    let r = bench::run(&config(DEFAULT_CONF), BenchOp::All, 10).unwrap();
    assert!(r.is_clean());
    for backend in [SOFTWARE, "se:1", "se:2"] {
        for op in [
            "hmac_import",
            "hmac_compute",
            "cipher_import",
            "cipher_encrypt",
            "ecdsa_generate",
            "ecdsa_sign",
            "ecdsa_import_public",
            "ecdsa_verify",
        ] {
            let row = r.row(op, backend).unwrap_or_else(|| panic!("{op} {backend}"));
            assert_eq!(row.iterations, 10);
            assert!(row.internal_ns <= row.total_ns);
        }
    }
    let verify = r.checks.iter().find(|c| c.name == "ecdsa_verify_all").unwrap();
    assert!(verify.passed);
    assert_eq!(verify.detail, "45 verified, 0 rejected");
}

#[test]
fn zero_iterations_is_invalid() {
    let _serial = serial();
    let cfg = config(DEFAULT_CONF);
    assert_eq!(bench::run(&cfg, BenchOp::Hmac, 0).err(), Some(Error::InvalidArgument));
    let c = Crypto::init(cfg).unwrap();
    for op in [BenchOp::Hmac, BenchOp::Cipher, BenchOp::Ecdsa, BenchOp::All] {
        assert_eq!(bench::run_on(&c, op, 0).err(), Some(Error::InvalidArgument));
    }
}

#[test]
fn accelerator_route_follows_capabilities() {
    let _serial = serial();
    let cfg = config(ACCELERATED_CONF);
    let labels = |op| routes(&cfg, op).into_iter().map(|r| r.label).collect::<Vec<_>>();
    assert_eq!(labels(BenchOp::Cipher), [ACCELERATOR, ACCELERATOR, "se:1"]);
    assert_eq!(labels(BenchOp::Hmac), ["software-alt", ACCELERATOR, "se:1"]);
    let r = bench::run(&cfg, BenchOp::All, 5).unwrap();
    assert!(r.is_clean(), "{:?} {:?}", r.failures, r.checks);
    assert!(r.row("hmac_compute", "software-alt").is_some());
}

#[test]
fn single_slot_application_holds_one_key() {
    let _serial = serial();
    let r = bench::run(&config(SINGLE_SLOT_CONF), BenchOp::Cipher, 5).unwrap();
    assert!(r.is_clean());
    let check = r.checks.iter().find(|c| c.name == "single_slot").unwrap();
    assert_eq!(check.detail, "second import: INSUFFICIENT_STORAGE");
    let eq = r.checks.iter().find(|c| c.name == "ciphertext_equal").unwrap();
    assert!(eq.passed);
}

#[test]
fn disabled_operation_is_reported() {
    let _serial = serial();
    let r = bench::run(&config(SINGLE_SLOT_CONF), BenchOp::Ecdsa, 5).unwrap();
    assert!(!r.is_clean());
    assert!(r.rows.is_empty());
    assert_eq!(r.failures[0].error, Error::NotSupported);
}

#[test]
fn ciphertext_matches_across_routes() {
    let _serial = serial();
    let r = bench::run(&config(DEFAULT_CONF), BenchOp::Cipher, 3).unwrap();
    let eq = r.checks.iter().find(|c| c.name == "ciphertext_equal").unwrap();
    assert!(eq.passed);
    let outputs: Vec<&str> = eq.detail.split(' ').map(|kv| kv.split_once('=').unwrap().1).collect();
    assert_eq!(outputs.len(), 3);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn device_time_covers_configured_latency() {
    let _serial = serial();
    let cfg = config("[application]\nCIPHER_CBC_AES_128_ENCRYPT = true\nHMAC_SHA256_COMPUTE = true\n[se.1]\ncipher = 1500\nmac = 900\nload_tempkey = 300\nstore_tempkey = 200\n");
    let lat = cfg.se_devices[0].latency.clone();
    let r = bench::run(&cfg, BenchOp::All, 4).unwrap();
    let at_least = |op: &str, want: Duration| {
        let row = r.row(op, "se:1").unwrap();
        assert!(Duration::from_nanos(row.internal_ns) >= want, "{op}: {} ns", row.internal_ns);
        assert_eq!(r.row(op, SOFTWARE).map(|s| s.internal_ns < 1_000_000), Some(true));
    };
    at_least("cipher_encrypt", lat.latency(SeCommand::Cipher));
    at_least("hmac_compute", lat.latency(SeCommand::Mac));
    at_least("cipher_import", lat.latency(SeCommand::LoadTempKey) + lat.latency(SeCommand::StoreTempKey));
}

/// Per-phase ECDSA overhead should be a stable property of the build. Across three runs the
/// spread of each phase's mean stays under half of that mean. Runs use the harness default
/// of 1000 iterations.
#[test]
fn ecdsa_overhead_is_repeatable() {
    let _serial = serial();
    let cfg = config(DEFAULT_CONF);
    let runs: Vec<_> = (0..3).map(|_| bench::run(&cfg, BenchOp::Ecdsa, 1000).unwrap()).collect();
    for op in ["ecdsa_generate", "ecdsa_sign", "ecdsa_import_public", "ecdsa_verify"] {
        for backend in [SOFTWARE, "se:1"] {
            let v: Vec<f64> = runs.iter().map(|r| r.row(op, backend).unwrap().overhead_ns() as f64).collect();
            let mean = v.iter().sum::<f64>() / 3.0;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
            assert!(sd < 0.5 * mean, "{op} {backend}: {v:?}");
        }
    }
}
