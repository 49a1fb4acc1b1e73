// SPDX-License-Identifier: Apache-2.0

//! The three measurement applications.
//!
//! Every timed call is bracketed twice: the wall time of the whole API call, and the
//! backend-internal time the library accumulates around the innermost backend or device
//! command. Overhead is their difference.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use unikrypt::backend::RandomSource;
use unikrypt::config::BuildConfig;
use unikrypt::dispatch::AlgoApi;
use unikrypt::instrument::{backend_time, reset_backend_time, se_route};
use unikrypt::{Algorithm, Crypto, Error, KeyAttributes, KeyId, Location, Result, Usage};

/// Untimed iterations run on each route before measuring.
pub const WARMUP: u64 = 5;

pub const HMAC_KEY: [u8; 32] = [0x5a; 32];
pub const HMAC_MESSAGE: [u8; 32] = [0xa5; 32];
pub const AES_KEY: [u8; 16] = [0x2b; 16];
pub const PLAINTEXT: [u8; 32] = [0x6b; 32];
pub const ECDSA_MESSAGE: [u8; 127] = [0x3c; 127];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum BenchOp {
    Hmac,
    Cipher,
    Ecdsa,
    All,
}

impl BenchOp {
    pub fn expand(self) -> Vec<BenchOp> {
        match self {
            BenchOp::All => vec![BenchOp::Hmac, BenchOp::Cipher, BenchOp::Ecdsa],
            op => vec![op],
        }
    }

    fn apis(self) -> &'static [AlgoApi] {
        match self {
            BenchOp::Hmac => &[AlgoApi::HmacSha256Compute],
            BenchOp::Cipher => &[AlgoApi::CipherCbcAes128Encrypt],
            BenchOp::Ecdsa => &[AlgoApi::EccP256Generate, AlgoApi::EcdsaP256Sign, AlgoApi::EcdsaP256Verify],
            BenchOp::All => &[],
        }
    }
}

/// Where a benchmark sends its keys, and the label its rows carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub label: String,
    pub location: Location,
}

/// Routes exercised for `op`: the backend assigned to local keys, the accelerator location
/// when the platform declares the capability, and every configured secure element.
pub fn routes(config: &BuildConfig, op: BenchOp) -> Vec<Route> {
    let apis = op.apis();
    let mut out = Vec::new();
    if let Some(label) = apis.first().and_then(|a| config.assignment.get(a)) {
        out.push(Route {
            label: label.clone(),
            location: Location::LOCAL,
        });
    }
    if !apis.is_empty() && apis.iter().all(|a| config.accelerator_apis.contains(a)) {
        out.push(Route {
            label: unikrypt::backend::ACCELERATOR.to_string(),
            location: Location::ACCELERATOR,
        });
    }
    for dev in &config.se_devices {
        out.push(Route {
            label: se_route(dev.location),
            location: dev.location,
        });
    }
    out
}

/// Mean per-call timings for one phase on one route, in integer nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub operation: String,
    pub backend: String,
    pub iterations: u64,
    pub total_ns: u64,
    pub internal_ns: u64,
}

impl BenchRow {
    pub fn overhead_ns(&self) -> u64 {
        self.total_ns - self.internal_ns
    }
}

/// A correctness side condition observed during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteFailure {
    pub operation: String,
    pub backend: String,
    pub error: Error,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub checks: Vec<Check>,
    pub failures: Vec<RouteFailure>,
}

impl BenchReport {
    pub fn row(&self, operation: &str, backend: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.operation == operation && r.backend == backend)
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn merge(&mut self, other: BenchReport) {
        self.rows.extend(other.rows);
        self.checks.extend(other.checks);
        self.failures.extend(other.failures);
    }
}

#[derive(Default)]
struct Accumulator {
    total: Duration,
    internal: Duration,
    count: u64,
}

/// Sums per-phase timings for one route, keeping phases in first-seen order.
#[derive(Default)]
struct Phases {
    order: Vec<&'static str>,
    acc: BTreeMap<&'static str, Accumulator>,
    recording: bool,
}

impl Phases {
    fn time<T>(&mut self, phase: &'static str, f: impl FnOnce() -> T) -> T {
        reset_backend_time();
        let start = Instant::now();
        let out = f();
        let total = start.elapsed();
        let internal = backend_time();
        if self.recording {
            if !self.acc.contains_key(phase) {
                self.order.push(phase);
            }
            let a = self.acc.entry(phase).or_default();
            a.total += total;
            a.internal += internal;
            a.count += 1;
        }
        out
    }

    fn rows(self, backend: &str) -> Vec<BenchRow> {
        self.order
            .iter()
            .map(|p| {
                let a = &self.acc[p];
                BenchRow {
                    operation: p.to_string(),
                    backend: backend.to_string(),
                    iterations: a.count,
                    total_ns: (a.total.as_nanos() / a.count as u128) as u64,
                    internal_ns: (a.internal.as_nanos() / a.count as u128) as u64,
                }
            })
            .collect()
    }
}

/// Runs `iteration` WARMUP times untimed, then `iterations` times timed, on one route.
/// The first error aborts the route and is reported as its failure.
fn run_route(
    report: &mut BenchReport,
    op_name: &str,
    route: &Route,
    iterations: u64,
    mut iteration: impl FnMut(&mut Phases) -> Result<()>,
) {
    let mut phases = Phases::default();
    let result = (|| {
        for _ in 0..WARMUP {
            iteration(&mut phases)?;
        }
        phases.recording = true;
        for _ in 0..iterations {
            iteration(&mut phases)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => report.rows.extend(phases.rows(&route.label)),
        Err(error) => report.failures.push(RouteFailure {
            operation: op_name.to_string(),
            backend: route.label.clone(),
            error,
        }),
    }
}

/// Records NOT_SUPPORTED and returns false when any API behind `op` is disabled.
fn enabled(report: &mut BenchReport, c: &Crypto, op: BenchOp, name: &str) -> bool {
    let on = op.apis().iter().all(|a| c.config().features.contains(a));
    if !on {
        report.failures.push(RouteFailure {
            operation: name.to_string(),
            backend: "-".to_string(),
            error: Error::NotSupported,
        });
    }
    on
}

fn destroy(c: &Crypto, id: KeyId) -> Result<()> {
    c.destroy_key(id)
}

/// HMAC-SHA-256: import a 32-byte key, then MAC a 32-byte message.
pub fn bench_hmac(c: &Crypto, iterations: u64) -> Result<BenchReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument);
    }
    let mut report = BenchReport::default();
    if !enabled(&mut report, c, BenchOp::Hmac, "hmac") {
        return Ok(report);
    }
    for route in routes(c.config(), BenchOp::Hmac) {
        let attrs = KeyAttributes::hmac_sha256(Usage::SIGN_MESSAGE).at(route.location);
        run_route(&mut report, "hmac", &route, iterations, |p| {
            let id = p.time("hmac_import", || c.import_key(&attrs, &HMAC_KEY))?;
            let mut tag = [0u8; 32];
            let r = p.time("hmac_compute", || {
                c.mac_compute(id, Algorithm::HmacSha256, &HMAC_MESSAGE, &mut tag)
            });
            destroy(c, id)?;
            r.map(drop)
        });
    }
    Ok(report)
}

/// AES-128-CBC: import a 16-byte key, then encrypt a 32-byte plaintext.
pub fn bench_cipher(c: &Crypto, iterations: u64) -> Result<BenchReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument);
    }
    let mut report = BenchReport::default();
    if !enabled(&mut report, c, BenchOp::Cipher, "cipher") {
        return Ok(report);
    }
    let routes = routes(c.config(), BenchOp::Cipher);
    for route in &routes {
        let attrs = KeyAttributes::aes_128(Usage::ENCRYPT).at(route.location);
        run_route(&mut report, "cipher", route, iterations, |p| {
            let id = p.time("cipher_import", || c.import_key(&attrs, &AES_KEY))?;
            let mut out = [0u8; 48];
            let r = p.time("cipher_encrypt", || {
                c.cipher_encrypt(id, Algorithm::CbcNoPadding, &PLAINTEXT, &mut out)
            });
            destroy(c, id)?;
            r.map(drop)
        });
    }
    let slots = &c.config().slots;
    if slots.single_count == 1 && slots.single_key_size == 16 {
        report.checks.push(single_slot_check(c));
    }
    if !routes.is_empty() {
        report.checks.push(ciphertext_equality(c.config(), &routes));
    }
    Ok(report)
}

/// With one 16-byte single-key slot configured, a second concurrent import must fail.
fn single_slot_check(c: &Crypto) -> Check {
    let attrs = KeyAttributes::aes_128(Usage::ENCRYPT);
    let outcome = c.import_key(&attrs, &AES_KEY).and_then(|first| {
        let second = c.import_key(&attrs, &AES_KEY);
        c.destroy_key(first)?;
        if let Ok(id) = second {
            c.destroy_key(id)?;
        }
        Ok(second)
    });
    let passed = matches!(outcome, Ok(Err(Error::InsufficientStorage)));
    let detail = match outcome {
        Ok(second) => format!("second import: {}", unikrypt::Status::from(&second)),
        Err(e) => format!("first import: {}", e.status()),
    };
    Check {
        name: "single_slot".into(),
        passed,
        detail,
    }
}

/// Fills every request with the same byte, which pins the CBC IV.
struct ConstantRng(u8);

impl RandomSource for ConstantRng {
    fn fill(&mut self, out: &mut [u8]) -> Result<()> {
        out.fill(self.0);
        Ok(())
    }
}

/// Encrypts the same plaintext under the same key and IV on every route and requires
/// identical output.
fn ciphertext_equality(config: &BuildConfig, routes: &[Route]) -> Check {
    let outputs: Result<Vec<(String, Vec<u8>)>> = (|| {
        let c = Crypto::builder(config.clone())
            .with_rng(Box::new(ConstantRng(0x0f)))
            .init()?;
        routes
            .iter()
            .map(|route| {
                let attrs = KeyAttributes::aes_128(Usage::ENCRYPT).at(route.location);
                let id = c.import_key(&attrs, &AES_KEY)?;
                let mut out = [0u8; 48];
                let n = c.cipher_encrypt(id, Algorithm::CbcNoPadding, &PLAINTEXT, &mut out)?;
                c.destroy_key(id)?;
                Ok((route.label.clone(), out[..n].to_vec()))
            })
            .collect()
    })();
    let (passed, detail) = match outputs {
        Ok(v) => {
            let same = v.windows(2).all(|w| w[0].1 == w[1].1);
            let detail = v
                .iter()
                .map(|(l, ct)| format!("{l}={}", hex::encode(ct)))
                .collect::<Vec<_>>()
                .join(" ");
            (same, detail)
        }
        Err(e) => (false, format!("{}", e.status())),
    };
    Check {
        name: "ciphertext_equal".into(),
        passed,
        detail,
    }
}

/// ECDSA P-256: generate a pair, sign a 127-byte message, import the public key, verify.
pub fn bench_ecdsa(c: &Crypto, iterations: u64) -> Result<BenchReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument);
    }
    let mut report = BenchReport::default();
    if !enabled(&mut report, c, BenchOp::Ecdsa, "ecdsa") {
        return Ok(report);
    }
    let mut verified = 0u64;
    let mut rejected = 0u64;
    for route in routes(c.config(), BenchOp::Ecdsa) {
        let pair = KeyAttributes::ecc_key_pair(Usage::SIGN_MESSAGE).at(route.location);
        let public = KeyAttributes::ecc_public_key(Usage::VERIFY_MESSAGE).at(route.location);
        run_route(&mut report, "ecdsa", &route, iterations, |p| {
            let key = p.time("ecdsa_generate", || c.generate_key(&pair))?;
            let mut sig = [0u8; 64];
            p.time("ecdsa_sign", || {
                c.sign_message(key, Algorithm::EcdsaP256Sha256, &ECDSA_MESSAGE, &mut sig)
            })?;
            let mut point = [0u8; 65];
            c.export_public_key(key, &mut point)?;
            destroy(c, key)?;
            let verifier = p.time("ecdsa_import_public", || c.import_key(&public, &point))?;
            let r = p.time("ecdsa_verify", || {
                c.verify_message(verifier, Algorithm::EcdsaP256Sha256, &ECDSA_MESSAGE, &sig)
            });
            destroy(c, verifier)?;
            match r {
                Ok(()) => verified += 1,
                Err(Error::InvalidSignature) => rejected += 1,
                Err(e) => return Err(e),
            }
            Ok(())
        });
    }
    report.checks.push(Check {
        name: "ecdsa_verify_all".into(),
        passed: rejected == 0 && verified > 0,
        detail: format!("{verified} verified, {rejected} rejected"),
    });
    Ok(report)
}

/// Builds the library from `config` and runs the requested applications.
pub fn run(config: &BuildConfig, op: BenchOp, iterations: u64) -> Result<BenchReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument);
    }
    let c = Crypto::init(config.clone())?;
    run_on(&c, op, iterations)
}

pub fn run_on(c: &Crypto, op: BenchOp, iterations: u64) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for op in op.expand() {
        let part = match op {
            BenchOp::Hmac => bench_hmac(c, iterations)?,
            BenchOp::Cipher => bench_cipher(c, iterations)?,
            BenchOp::Ecdsa => bench_ecdsa(c, iterations)?,
            BenchOp::All => unreachable!(),
        };
        report.merge(part);
    }
    Ok(report)
}

/// Smallest nonzero step observed between successive clock reads.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}
