// SPDX-License-Identifier: Apache-2.0

//! Benchmark and self-test harness for unikrypt.

pub mod bench;
pub mod report;
pub mod selftest;

use std::path::Path;

use unikrypt::config::{parse_seed, ConfigFile};

/// Environment variable that replaces the configured PRNG seed.
pub const SEED_ENV: &str = "UNIKRYPT_SEED";

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Reads and parses a configuration file, applying `seed` (the value of [`SEED_ENV`]) when
/// present.
pub fn load_config(path: &Path, seed: Option<&str>) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut file = ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(hex) = seed {
        file.application.prng_seed =
            parse_seed(hex.trim()).ok_or_else(|| format!("{SEED_ENV} must be 64 hex characters"))?;
    }
    Ok(file)
}
