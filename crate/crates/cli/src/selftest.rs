// SPDX-License-Identifier: Apache-2.0

//! Self-test suite run against a configured build.

use std::fmt;
use std::sync::{Arc, Barrier};

use unikrypt::backend::{builtin_backends, soft, DeterministicPrng, RandomSource, TransparentBackend};
use unikrypt::config::{resolve_with, BuildConfig, ConfigFile};
use unikrypt::dispatch::AlgoApi;
use unikrypt::keystore::SlotVariant;
use unikrypt::{Algorithm, Crypto, Error, KeyAttributes, KeyId, Location, Status, Usage};

use crate::bench::{routes, BenchOp, Route};

const NIST_KEY: &str = "2b7e151628aed2a6abf7158809cf4f3c";
const NIST_IV: &str = "000102030405060708090a0b0c0d0e0f";
const NIST_PT: &str = "6bc1bee22e409f96e93d7e117393172aae2d8a571e03ac9c9eb76fac45af8e5130c81c46a35ce411e5fbc1191a0a52eff69f2445df4f9b17ad2b417be66c3710";
const NIST_CT: &str = "7649abac8119b246cee98e9b12e9197d5086cb9b507219ee95db113a917678b273bed6b8e3c1743b7116e69e222295163ff1caa1681fac09120eca307586e1a7";

/// HMAC-SHA-256 vectors whose keys fit in 32 bytes: (key, data, tag). Keys are zero
/// padded to 32 bytes before import, which leaves an HMAC key unchanged.
const HMAC_VECTORS: [(&str, &str, &str); 4] = [
    (
        "0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b",
        "4869205468657265",
        "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
    ),
    (
        "4a656665",
        "7768617420646f2079612077616e7420666f72206e6f7468696e673f",
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843",
    ),
    (
        "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
        "dddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddddd",
        "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe",
    ),
    (
        "0102030405060708090a0b0c0d0e0f10111213141516171819",
        "cdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcdcd",
        "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b",
    ),
];

const SHA_VECTORS: [(&[u8], &str); 2] = [
    (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
    (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
];

/// Random (key, message) pairs per symmetric algorithm in the equivalence case.
pub const EQUIVALENCE_PAIRS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseResult {
    pub name: &'static str,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub cases: Vec<CaseResult>,
    /// Set when the configuration could not be turned into a build.
    pub config_error: Option<(Status, String)>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.config_error.is_none() && self.cases.iter().all(|c| !matches!(c.outcome, Outcome::Fail(_)))
    }

    pub fn case(&self, name: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((status, msg)) = &self.config_error {
            writeln!(f, "configuration {status}: {msg}")?;
        }
        for c in &self.cases {
            match &c.outcome {
                Outcome::Pass => writeln!(f, "PASS {}", c.name)?,
                Outcome::Fail(why) => writeln!(f, "FAIL {}: {why}", c.name)?,
                Outcome::Skipped(why) => writeln!(f, "SKIP {}: {why}", c.name)?,
            }
        }
        let failed = self.cases.iter().filter(|c| matches!(c.outcome, Outcome::Fail(_))).count();
        write!(
            f,
            "{} cases, {} failed: {}",
            self.cases.len(),
            failed,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

type CaseResultOf = std::result::Result<(), String>;

fn fail(what: impl fmt::Display) -> String {
    what.to_string()
}

fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("static vector")
}

fn expect_status<T>(r: unikrypt::Result<T>, want: Error, ctx: &str) -> CaseResultOf {
    match r {
        Err(e) if e == want => Ok(()),
        Err(e) => Err(format!("{ctx}: {} instead of {}", e.status(), want.status())),
        Ok(_) => Err(format!("{ctx}: SUCCESS instead of {}", want.status())),
    }
}

/// Repeats the NIST IV on every draw so the API's randomized IV is the vector's IV.
struct CycledIv;

impl RandomSource for CycledIv {
    fn fill(&mut self, out: &mut [u8]) -> unikrypt::Result<()> {
        for (i, b) in out.iter_mut().enumerate() {
            *b = (i % 16) as u8;
        }
        Ok(())
    }
}

/// Everything a case needs: the resolved configuration and the backends it may use.
struct Suite {
    config: BuildConfig,
    extras: Vec<Arc<dyn TransparentBackend>>,
}

impl Suite {
    fn fresh(&self) -> unikrypt::Result<Crypto> {
        self.builder().init()
    }

    fn builder(&self) -> unikrypt::CryptoBuilder {
        self.extras
            .iter()
            .fold(Crypto::builder(self.config.clone()), |b, e| b.with_backend(e.clone()))
    }

    fn enabled(&self, api: AlgoApi) -> bool {
        self.config.features.contains(&api)
    }

    fn backends(&self) -> Vec<Arc<dyn TransparentBackend>> {
        let mut v = builtin_backends(&self.config.accelerator_apis);
        v.extend(self.extras.iter().cloned());
        v
    }

    fn run(&self, name: &'static str, needs: &[AlgoApi], case: impl FnOnce(&Suite) -> CaseResultOf) -> CaseResult {
        let missing: Vec<&str> = needs.iter().filter(|a| !self.enabled(**a)).map(|a| a.name()).collect();
        let outcome = if !missing.is_empty() {
            Outcome::Skipped(format!("disabled: {}", missing.join(", ")))
        } else {
            match case(self) {
                Ok(()) => Outcome::Pass,
                Err(why) => Outcome::Fail(why),
            }
        };
        CaseResult { name, outcome }
    }
}

fn kat_aes_cbc(s: &Suite) -> CaseResultOf {
    let c = s.builder().with_rng(Box::new(CycledIv)).init().map_err(|e| fail(e.status()))?;
    let key = unhex(NIST_KEY);
    let (pt, ct) = (unhex(NIST_PT), unhex(NIST_CT));
    let mut want = unhex(NIST_IV);
    want.extend_from_slice(&ct);
    for route in routes(&s.config, BenchOp::Cipher) {
        let usage = Usage::ENCRYPT | Usage::DECRYPT;
        let id = c
            .import_key(&KeyAttributes::aes_128(usage).at(route.location), &key)
            .map_err(|e| format!("{}: import {}", route.label, e.status()))?;
        let mut out = [0u8; 80];
        let n = c
            .cipher_encrypt(id, Algorithm::CbcNoPadding, &pt, &mut out)
            .map_err(|e| format!("{}: encrypt {}", route.label, e.status()))?;
        if out[..n] != want[..] {
            return Err(format!("{}: ciphertext mismatch", route.label));
        }
        if s.enabled(AlgoApi::CipherCbcAes128Decrypt) {
            let mut back = [0u8; 64];
            c.cipher_decrypt(id, Algorithm::CbcNoPadding, &want, &mut back)
                .map_err(|e| format!("{}: decrypt {}", route.label, e.status()))?;
            if back[..] != pt[..] {
                return Err(format!("{}: plaintext mismatch", route.label));
            }
        }
        c.destroy_key(id).map_err(fail)?;
    }
    Ok(())
}

fn hmac_routes(config: &BuildConfig) -> Vec<Route> {
    routes(config, BenchOp::Hmac)
}

fn kat_hmac(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    for route in hmac_routes(&s.config) {
        for (i, (key, data, tag)) in HMAC_VECTORS.iter().enumerate() {
            let mut padded = unhex(key);
            padded.resize(32, 0);
            let id = c
                .import_key(&KeyAttributes::hmac_sha256(Usage::SIGN_MESSAGE).at(route.location), &padded)
                .map_err(|e| format!("{}: import {}", route.label, e.status()))?;
            let mut out = [0u8; 32];
            c.mac_compute(id, Algorithm::HmacSha256, &unhex(data), &mut out)
                .map_err(|e| format!("{}: mac {}", route.label, e.status()))?;
            c.destroy_key(id).map_err(fail)?;
            if hex::encode(out) != *tag {
                return Err(format!("{}: vector {} mismatch", route.label, i + 1));
            }
        }
    }
    Ok(())
}

fn kat_sha256(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    for (msg, digest) in SHA_VECTORS {
        let mut out = [0u8; 32];
        c.hash_compute(Algorithm::Sha256, msg, &mut out).map_err(|e| fail(e.status()))?;
        if hex::encode(out) != digest {
            return Err(format!("digest of {:?} mismatch", String::from_utf8_lossy(msg)));
        }
    }
    Ok(())
}

fn ecdsa_round_trip(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    for route in routes(&s.config, BenchOp::Ecdsa) {
        let ctx = |what: &str, e: Error| format!("{}: {what} {}", route.label, e.status());
        let key = c
            .generate_key(
                &KeyAttributes::ecc_key_pair(Usage::SIGN_MESSAGE | Usage::VERIFY_MESSAGE).at(route.location),
            )
            .map_err(|e| ctx("generate", e))?;
        let mut sig = [0u8; 64];
        c.sign_message(key, Algorithm::EcdsaP256Sha256, b"selftest", &mut sig)
            .map_err(|e| ctx("sign", e))?;
        let mut public = [0u8; 65];
        c.export_public_key(key, &mut public).map_err(|e| ctx("export public", e))?;
        soft::ecdsa_p256_verify(&public, b"selftest", &sig).map_err(|e| ctx("software verify", e))?;
        c.verify_message(key, Algorithm::EcdsaP256Sha256, b"selftest", &sig)
            .map_err(|e| ctx("verify", e))?;
        sig[0] ^= 1;
        expect_status(
            c.verify_message(key, Algorithm::EcdsaP256Sha256, b"selftest", &sig),
            Error::InvalidSignature,
            &route.label,
        )?;
        c.destroy_key(key).map_err(fail)?;
    }
    Ok(())
}

/// Every keyed operation refuses a key lacking its usage flag, and no device key exports.
fn policy(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    let mut locations = vec![Location::LOCAL];
    locations.extend(s.config.se_devices.iter().map(|d| d.location));
    let mut out = [0u8; 128];
    for loc in locations {
        let ctx = |what: &str| format!("{what} at {loc}");
        if s.enabled(AlgoApi::CipherCbcAes128Encrypt) {
            let id = c
                .import_key(&KeyAttributes::aes_128(Usage::all() - Usage::ENCRYPT).at(loc), &[1; 16])
                .map_err(|e| format!("{}: {}", ctx("import"), e.status()))?;
            expect_status(
                c.cipher_encrypt(id, Algorithm::CbcNoPadding, &[0; 16], &mut out),
                Error::NotPermitted,
                &ctx("encrypt without ENCRYPT"),
            )?;
            c.destroy_key(id).map_err(fail)?;
            if !loc.is_secure_element() {
                let id = c
                    .import_key(&KeyAttributes::aes_128(Usage::ENCRYPT).at(loc), &[1; 16])
                    .map_err(fail)?;
                expect_status(c.export_key(id, &mut out), Error::NotPermitted, &ctx("export without EXPORT"))?;
                c.destroy_key(id).map_err(fail)?;
            }
        }
        if s.enabled(AlgoApi::HmacSha256Compute) {
            let id = c
                .import_key(&KeyAttributes::hmac_sha256(Usage::all() - Usage::SIGN_MESSAGE).at(loc), &[2; 32])
                .map_err(|e| format!("{}: {}", ctx("import"), e.status()))?;
            expect_status(
                c.mac_compute(id, Algorithm::HmacSha256, b"m", &mut out),
                Error::NotPermitted,
                &ctx("mac without SIGN_MESSAGE"),
            )?;
            expect_status(
                c.mac_compute(id, Algorithm::CbcNoPadding, b"m", &mut out),
                Error::NotPermitted,
                &ctx("mac with foreign algorithm"),
            )?;
            c.destroy_key(id).map_err(fail)?;
        }
        if s.enabled(AlgoApi::EcdsaP256Sign) {
            let id = c
                .import_key(&KeyAttributes::ecc_key_pair(Usage::all() - Usage::SIGN_MESSAGE).at(loc), &[3; 32])
                .map_err(|e| format!("{}: {}", ctx("import"), e.status()))?;
            expect_status(
                c.sign_message(id, Algorithm::EcdsaP256Sha256, b"m", &mut out),
                Error::NotPermitted,
                &ctx("sign without SIGN_MESSAGE"),
            )?;
            c.destroy_key(id).map_err(fail)?;
        }
        if loc.is_secure_element() && s.enabled(AlgoApi::CipherCbcAes128Encrypt) {
            let id = c
                .import_key(&KeyAttributes::aes_128(Usage::all()).at(loc), &[4; 16])
                .map_err(fail)?;
            out.fill(0xee);
            expect_status(c.export_key(id, &mut out), Error::NotPermitted, &ctx("device key export"))?;
            if out.iter().any(|b| *b != 0) {
                return Err(ctx("refused export left bytes in the buffer"));
            }
            c.destroy_key(id).map_err(fail)?;
        }
    }
    Ok(())
}

/// Fills the single-key array, checks the capacity boundary, index reuse and
/// conservation, then empties it again.
fn slot_accounting(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    let (attrs, material): (KeyAttributes, &[u8]) = if s.enabled(AlgoApi::CipherCbcAes128Encrypt) {
        (KeyAttributes::aes_128(Usage::ENCRYPT), &[7; 16])
    } else {
        (KeyAttributes::hmac_sha256(Usage::SIGN_MESSAGE), &[7; 32])
    };
    let store = c.key_store();
    let capacity = s.config.slots.single_count;
    let slot_index = |id: KeyId| -> std::result::Result<usize, String> {
        let h = store.find_slot(id).map_err(fail)?;
        store.release_slot(h).map_err(fail)?;
        Ok(h.slot.index)
    };
    let conserved = || {
        let st = store.stats(SlotVariant::Single);
        if st.free + st.in_global == st.total && st.total == capacity {
            Ok(())
        } else {
            Err(format!("conservation broken: {st:?}"))
        }
    };
    let mut ids = Vec::new();
    for _ in 0..capacity {
        ids.push(c.import_key(&attrs, material).map_err(|e| fail(e.status()))?);
        conserved()?;
    }
    expect_status(c.import_key(&attrs, material), Error::InsufficientStorage, "import at capacity")?;
    let victim = ids.remove(ids.len() / 2);
    let freed = slot_index(victim)?;
    c.destroy_key(victim).map_err(fail)?;
    conserved()?;
    let again = c.import_key(&attrs, material).map_err(|e| fail(e.status()))?;
    if slot_index(again)? != freed {
        return Err("freed index was not reused".into());
    }
    ids.push(again);
    for id in ids {
        c.destroy_key(id).map_err(fail)?;
        conserved()?;
    }
    if store.stats(SlotVariant::Single).free != capacity {
        return Err("slots leaked".into());
    }
    Ok(())
}

/// Concurrent readers raise the lock count; destroy waits for them to leave.
fn lock_count(s: &Suite) -> CaseResultOf {
    let c = s.fresh().map_err(|e| fail(e.status()))?;
    let attrs = if s.enabled(AlgoApi::CipherCbcAes128Encrypt) {
        KeyAttributes::aes_128(Usage::ENCRYPT)
    } else {
        KeyAttributes::hmac_sha256(Usage::SIGN_MESSAGE)
    };
    let len = attrs.material_len().map_err(fail)?;
    let id = c.import_key(&attrs, &vec![9; len]).map_err(fail)?;
    let readers = 4;
    let held = Barrier::new(readers + 1);
    let done = Barrier::new(readers + 1);
    let observed = std::thread::scope(|sc| {
        for _ in 0..readers {
            sc.spawn(|| {
                let claim = c.claim(id);
                held.wait();
                done.wait();
                drop(claim);
            });
        }
        held.wait();
        let lock = c
            .key_store()
            .find_slot(id)
            .map(|h| {
                let n = c.key_store().header(h.slot).map(|hd| hd.lock_count());
                let _ = c.key_store().release_slot(h);
                n
            })
            .ok()
            .flatten();
        let destroy = c.destroy_key(id);
        done.wait();
        (lock, destroy)
    });
    if observed.0 != Some(readers as u32 + 1) {
        return Err(format!("lock count {:?} with {readers} readers", observed.0));
    }
    expect_status(Ok::<_, Error>(()).and(observed.1), Error::BadState, "destroy while claimed")?;
    c.destroy_key(id).map_err(fail)
}

/// Every backend implementing an algorithm, and every route reaching it through the API,
/// must agree byte for byte on random inputs.
fn equivalence(s: &Suite) -> CaseResultOf {
    let c = s.builder().with_rng(Box::new(CycledIv)).init().map_err(|e| fail(e.status()))?;
    let mut prng = DeterministicPrng::new(s.config.prng_seed);
    let backends = s.backends();
    let iv: [u8; 16] = std::array::from_fn(|i| i as u8);
    for _ in 0..EQUIVALENCE_PAIRS {
        let mut key = [0u8; 32];
        let mut msg = [0u8; 48];
        prng.fill(&mut key).map_err(fail)?;
        prng.fill(&mut msg).map_err(fail)?;

        if s.enabled(AlgoApi::CipherCbcAes128Encrypt) {
            let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
            for b in backends.iter().filter(|b| b.implements(AlgoApi::CipherCbcAes128Encrypt)) {
                let mut out = vec![0u8; 48];
                b.cipher_cbc_encrypt(&key[..16], &iv, &msg, &mut out)
                    .map_err(|e| format!("{}: {}", b.label(), e.status()))?;
                let mut framed = iv.to_vec();
                framed.extend(out);
                outputs.push((b.label().to_string(), framed));
            }
            for route in routes(&s.config, BenchOp::Cipher) {
                let id = c
                    .import_key(&KeyAttributes::aes_128(Usage::ENCRYPT).at(route.location), &key[..16])
                    .map_err(|e| format!("{}: {}", route.label, e.status()))?;
                let mut out = vec![0u8; 64];
                c.cipher_encrypt(id, Algorithm::CbcNoPadding, &msg, &mut out)
                    .map_err(|e| format!("{}: {}", route.label, e.status()))?;
                c.destroy_key(id).map_err(fail)?;
                outputs.push((format!("api/{}", route.label), out));
            }
            agree("cipher", &outputs)?;
        }

        if s.enabled(AlgoApi::HmacSha256Compute) {
            let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
            for b in backends.iter().filter(|b| b.implements(AlgoApi::HmacSha256Compute)) {
                let tag = b.hmac_sha256(&key, &msg).map_err(|e| format!("{}: {}", b.label(), e.status()))?;
                outputs.push((b.label().to_string(), tag.to_vec()));
            }
            for route in hmac_routes(&s.config) {
                let id = c
                    .import_key(&KeyAttributes::hmac_sha256(Usage::SIGN_MESSAGE).at(route.location), &key)
                    .map_err(|e| format!("{}: {}", route.label, e.status()))?;
                let mut out = vec![0u8; 32];
                c.mac_compute(id, Algorithm::HmacSha256, &msg, &mut out)
                    .map_err(|e| format!("{}: {}", route.label, e.status()))?;
                c.destroy_key(id).map_err(fail)?;
                outputs.push((format!("api/{}", route.label), out));
            }
            agree("mac", &outputs)?;
        }
    }
    Ok(())
}

fn agree(what: &str, outputs: &[(String, Vec<u8>)]) -> CaseResultOf {
    let Some((ref_label, reference)) = outputs.first() else {
        return Ok(());
    };
    for (label, out) in &outputs[1..] {
        if out != reference {
            return Err(format!("{what}: {label} disagrees with {ref_label}"));
        }
    }
    Ok(())
}

/// Resolves `file` with the built-in backends only and runs every case.
pub fn selftest(file: &ConfigFile) -> SelftestReport {
    selftest_with(file, &[])
}

/// Like [`selftest`], with additional transparent backends available to the build.
pub fn selftest_with(file: &ConfigFile, extras: &[Arc<dyn TransparentBackend>]) -> SelftestReport {
    let resolved = resolve_with(&file.platform, &file.application, &file.overrides, &file.se_devices, extras)
        .and_then(|cfg| cfg.validate().map(|()| cfg));
    let config = match resolved {
        Ok(cfg) => cfg,
        Err(e) => {
            return SelftestReport {
                cases: Vec::new(),
                config_error: Some((e.status().status(), e.to_string())),
            }
        }
    };
    let suite = Suite {
        config,
        extras: extras.to_vec(),
    };
    use AlgoApi::*;
    let cases = vec![
        suite.run("kat_aes_128_cbc", &[CipherCbcAes128Encrypt], kat_aes_cbc),
        suite.run("kat_hmac_sha256", &[HmacSha256Compute], kat_hmac),
        suite.run("kat_sha256", &[Sha256Compute], kat_sha256),
        suite.run("ecdsa_round_trip", &[EccP256Generate, EcdsaP256Sign, EcdsaP256Verify], ecdsa_round_trip),
        suite.run("policy", &[], policy),
        slot_case(&suite),
        lock_case(&suite),
        suite.run("equivalence", &[], equivalence),
    ];
    SelftestReport {
        cases,
        config_error: None,
    }
}

fn single_key_feature(s: &Suite) -> bool {
    s.enabled(AlgoApi::CipherCbcAes128Encrypt) || s.enabled(AlgoApi::HmacSha256Compute)
}

fn slot_case(s: &Suite) -> CaseResult {
    if !single_key_feature(s) || s.config.slots.single_count == 0 {
        return CaseResult {
            name: "slot_accounting",
            outcome: Outcome::Skipped("no single-key slots".into()),
        };
    }
    s.run("slot_accounting", &[], slot_accounting)
}

fn lock_case(s: &Suite) -> CaseResult {
    if !single_key_feature(s) || s.config.slots.single_count == 0 {
        return CaseResult {
            name: "lock_count",
            outcome: Outcome::Skipped("no single-key slots".into()),
        };
    }
    s.run("lock_count", &[], lock_count)
}
